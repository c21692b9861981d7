"""Per-image seed derivation.

Every image in a run gets its own 64-bit seed derived from the run's global
seed and the image index, so that image i can be regenerated in isolation
(byte-identical) without replaying the rest of the run, and so that worker
processes can render images in any order.

The derivation is the splitmix64 finalizer applied to
``global_seed + (index + 1) * GOLDEN`` (all arithmetic mod 2**64):

    z  = seed + (index + 1) * 0x9E3779B97F4A7C15
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

The constants are the standard splitmix64 multipliers (Steele, Lea & Flood,
"Fast splittable pseudorandom number generators", OOPSLA 2014). The ``+1``
keeps index 0 from collapsing to the bare global seed.
"""

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(global_seed: int, index: int) -> int:
    """Derive the 64-bit seed for image ``index`` of a run.

    Parameters
    ----------
    global_seed : int
        Run-level seed (any Python int; reduced mod 2**64).
    index : int
        Image index within the run, >= 0.

    Returns
    -------
    int
        Unsigned 64-bit seed, suitable for ``numpy.random.default_rng``.
    """
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    z = (global_seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)
