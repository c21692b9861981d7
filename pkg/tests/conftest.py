import numpy as np
import pytest

from leafgen.color import load_color_source

import _corpus


@pytest.fixture(scope="session")
def photos_dir():
    assert _corpus.PHOTOS_DIR.is_dir()
    return _corpus.PHOTOS_DIR


@pytest.fixture(scope="session")
def chelsea(photos_dir):
    return str(photos_dir / "chelsea.png")


@pytest.fixture(scope="session")
def source(chelsea):
    """Default color pool used by texture tests."""
    return load_color_source(chelsea, pool_size=4096, rng=np.random.default_rng(0))


@pytest.fixture(scope="session")
def natref_dir():
    """~90 natural 256x256 reference crops (built once, cached on disk)."""
    return _corpus.build_reference()


@pytest.fixture(scope="session")
def vl_corpus():
    """200 vl-preset images at 512^2 (built once, cached on disk)."""
    _corpus.build_corpus("vl", _corpus.VL_SEED, 200, progress=True)
    return _corpus.corpus_paths("vl", _corpus.VL_SEED, 200)


@pytest.fixture(scope="session")
def dl_corpus():
    """100 dead-leaves-preset images at 512^2 (built once, cached on disk)."""
    _corpus.build_corpus("dead-leaves", _corpus.DL_SEED, 100, progress=True)
    return _corpus.corpus_paths("dead-leaves", _corpus.DL_SEED, 100)
