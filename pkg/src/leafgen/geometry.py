"""Leaf shapes: point sampling, concave hulls, rasterization, smoothing.

A polygonal leaf starts as a uniform point cloud in the unit disk. Its
Delaunay triangulation is peeled from the outside in: border triangles whose
longest edge exceeds a threshold between the shortest and longest edge of the
whole triangulation (position set by ``alpha``) are removed, largest first,
as long as removal keeps the vertex set connected. ``alpha = 1`` removes
nothing and returns the convex hull; smaller values carve concavities.
Optionally, oversized interior triangles are also removed, opening holes.

The retained region's boundary is extracted as one or more rings and filled
with an even-odd scanline rule over pixel centers, so holes and pinch points
need no special casing. Masks can be smoothed by Gaussian blur + 0.5
rethreshold, which rounds corners and erases thin appendages.

:func:`sample_shape` ties it together and adds rectangle and disk branches.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.ndimage import convolve1d
from scipy.spatial import Delaunay, QhullError

from .filters import gaussian_kernel1d

_EIGHT = np.ones((3, 3), dtype=bool)


def sample_points_in_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` points uniformly in the disk of given radius about the origin.

    Returns an (n, 2) float64 array of (x, y) coordinates.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    r = radius * np.sqrt(rng.random(n))
    theta = rng.random(n) * (2.0 * np.pi)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class Triangulation:
    """Delaunay triangulation of a planar point set.

    Attributes
    ----------
    points : ndarray
        (n, 2) float64 input coordinates.
    triangles : ndarray
        (m, 3) int vertex indices per triangle.
    neighbors : ndarray
        (m, 3) int; ``neighbors[i, j]`` is the triangle sharing the edge
        opposite vertex ``j`` of triangle ``i``, or -1 on the convex hull.
    """

    points: np.ndarray
    triangles: np.ndarray
    neighbors: np.ndarray


def delaunay(points: np.ndarray) -> Triangulation:
    """Triangulate a point set; raises ValueError on degenerate input."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    try:
        d = Delaunay(pts)
    except QhullError as exc:
        raise ValueError(f"degenerate point set: {exc}") from exc
    if len(d.simplices) == 0:
        raise ValueError("degenerate point set: no triangles")
    return Triangulation(points=pts, triangles=d.simplices, neighbors=d.neighbors)


def _edge_lengths_opposite(t: Triangulation) -> np.ndarray:
    """(m, 3) lengths; entry [i, j] is the edge opposite vertex j of triangle i."""
    p = t.points[t.triangles]  # (m, 3, 2)
    d0 = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    d1 = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    d2 = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    return np.column_stack([d0, d1, d2])


def _peel(
    tris: np.ndarray,
    nbrs: np.ndarray,
    longest: np.ndarray,
    threshold: float,
    open_holes: bool,
    active: np.ndarray,
) -> np.ndarray:
    """Priority peel returning the kept-triangle mask.

    Connectivity guard: removing triangle ``ti`` deletes exactly its edges
    that no other kept triangle shares, all between ``ti``'s own vertices,
    and deleting an edge set from a connected graph keeps it connected iff
    each deleted edge's endpoints stay connected. So the exact check is a
    BFS between the dying edges' endpoints over the alive-edge adjacency,
    maintained incrementally as triangles go. Two shortcuts never change
    the outcome: a removal that would take some vertex's last kept triangle
    is blocked outright (the vertex would be stranded), and a border-degree-1
    removal is always allowed (its one dying edge's endpoints reconnect
    through the triangle's apex).
    """
    m = len(tris)
    nv = int(active.max()) + 1
    # hot loop state lives in plain lists; scalar indexing there is several
    # times cheaper than numpy element access
    tri_l = tris.tolist()
    nbr_l = nbrs.tolist()
    long_l = longest.tolist()
    kept = [True] * m
    # kept-triangle count per vertex; dropping one to 0 strands that vertex
    tri_count = np.bincount(tris.ravel(), minlength=nv).tolist()
    border = (nbrs == -1).sum(axis=1).tolist()

    # compact edge ids; alive = contained in >= 1 kept triangle
    eu3 = tris[:, (1, 2, 0)]
    ev3 = tris[:, (2, 0, 1)]
    key = np.minimum(eu3, ev3).astype(np.int64) * nv + np.maximum(eu3, ev3)
    uniq, inverse = np.unique(key.ravel(), return_inverse=True)
    edge_id = inverse.reshape(m, 3).tolist()
    e_count = np.bincount(inverse).tolist()
    e_u = (uniq // nv).tolist()
    e_v = (uniq % nv).tolist()
    adj: dict[int, set[int]] = {int(v): set() for v in active.tolist()}
    for u, v in zip(e_u, e_v):
        adj[u].add(v)
        adj[v].add(u)

    def removal_allowed(ti: int) -> bool:
        a, b, c = tri_l[ti]
        if tri_count[a] == 1 or tri_count[b] == 1 or tri_count[c] == 1:
            return False
        if border[ti] <= 1:
            return True
        dying = [e for e in edge_id[ti] if e_count[e] == 1]
        banned = set()
        targets = set()
        for e in dying:
            u, v = e_u[e], e_v[e]
            banned.add((u, v))
            banned.add((v, u))
            targets.add(u)
            targets.add(v)
        src = next(iter(targets))
        seen = {src}
        todo = targets - seen
        stack = [src]
        while stack and todo:
            a = stack.pop()
            for b in adj[a]:
                if b not in seen and (a, b) not in banned:
                    seen.add(b)
                    todo.discard(b)
                    stack.append(b)
        return not todo

    def remove(ti: int) -> None:
        kept[ti] = False
        a, b, c = tri_l[ti]
        tri_count[a] -= 1
        tri_count[b] -= 1
        tri_count[c] -= 1
        for e in edge_id[ti]:
            e_count[e] -= 1
            if e_count[e] == 0:
                u, v = e_u[e], e_v[e]
                adj[u].discard(v)
                adj[v].discard(u)
        for nb in nbr_l[ti]:
            if nb != -1 and kept[nb]:
                border[nb] += 1

    heap: list[tuple[float, int]] = [(-long_l[ti], ti) for ti in range(m) if border[ti] > 0]
    heapq.heapify(heap)
    while heap:
        negl, ti = heapq.heappop(heap)
        if not kept[ti] or border[ti] == 0:
            continue
        if long_l[ti] <= threshold:
            break
        if removal_allowed(ti):
            remove(ti)
            for nb in nbr_l[ti]:
                if nb != -1 and kept[nb]:
                    heapq.heappush(heap, (-long_l[nb], nb))

    if open_holes:
        interior = [ti for ti in range(m) if kept[ti] and border[ti] == 0 and long_l[ti] > threshold]
        for ti in sorted(interior, key=lambda i: (-long_l[i], i)):
            if kept[ti] and removal_allowed(ti):
                remove(ti)

    return np.asarray(kept, dtype=bool)


def concave_hull(t: Triangulation, alpha: float, open_holes: bool = False) -> list[np.ndarray]:
    """Peel a triangulation down to a concave region and return its boundary.

    The edge-length threshold is ``e_min + alpha * (e_max - e_min)`` over all
    triangulation edges. Border triangles (those with an edge not shared with
    a retained triangle) whose longest edge exceeds the threshold are removed
    in order of decreasing longest edge; the peel stops as soon as the
    largest remaining border triangle is within threshold, which makes the
    removal sequence a prefix of the sequence for any smaller ``alpha`` (so
    retained area is monotone in ``alpha``). A removal that would disconnect
    the triangulated vertex set is skipped. With ``open_holes``, interior
    triangles over threshold are removed afterwards under the same
    connectivity guard, which can open holes.

    Parameters
    ----------
    t : Triangulation
    alpha : float
        Carving aggressiveness in [0, 1]; 1 keeps the convex hull.
    open_holes : bool
        Also remove oversized interior triangles.

    Returns
    -------
    list of ndarray
        Boundary rings, each (k, 2) float64 of (x, y) vertices. Multiple
        rings appear when holes are opened; even-odd filling reconstructs
        the region.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    tris = t.triangles
    nbrs = t.neighbors
    edge_len = _edge_lengths_opposite(t)
    longest = edge_len.max(axis=1)
    e_min = float(edge_len.min())
    e_max = float(edge_len.max())
    # the lerp can land 1 ulp under e_max, which would peel the triangle
    # carrying the longest edge at alpha = 1; pin the endpoint
    threshold = e_max if alpha == 1.0 else e_min + alpha * (e_max - e_min)
    active = np.unique(tris)
    kept = _peel(tris, nbrs, longest, threshold, open_holes, active)
    if not kept.any():
        raise ValueError("peeling removed all triangles")
    return _boundary_rings(t.points, tris, nbrs, kept)


_OPP = ((1, 2), (2, 0), (0, 1))  # vertices of the edge opposite each corner


def _boundary_rings(points: np.ndarray, tris: np.ndarray, nbrs: np.ndarray, kept: np.ndarray) -> list[np.ndarray]:
    """Walk boundary edges (incident to exactly one kept triangle) into rings."""
    keptidx = np.flatnonzero(kept)
    nb = nbrs[keptidx]
    on_border = ~np.where(nb >= 0, kept[np.maximum(nb, 0)], False)
    tv = tris[keptidx]
    # edge endpoints per neighbor slot, row-major so edge ids run in
    # (triangle, slot) order
    uu = tv[:, [u for u, _ in _OPP]].ravel()
    vv = tv[:, [v for _, v in _OPP]].ravel()
    sel = on_border.ravel()
    edges: list[tuple[int, int]] = [(int(u), int(v)) for u, v in zip(uu[sel], vv[sel])]
    incident: dict[int, list[int]] = {}
    for ei, (u, v) in enumerate(edges):
        incident.setdefault(u, []).append(ei)
        incident.setdefault(v, []).append(ei)
    used = [False] * len(edges)
    rings = []
    for start_ei in range(len(edges)):
        if used[start_ei]:
            continue
        u0, v0 = edges[start_ei]
        used[start_ei] = True
        ring = [u0, v0]
        cur = v0
        while cur != u0:
            # Every boundary vertex has even boundary degree, so an unused
            # exit edge always exists until the walk closes; the lowest edge
            # index is chosen for determinism.
            nxt = min(ei for ei in incident[cur] if not used[ei])
            used[nxt] = True
            a, b = edges[nxt]
            cur = b if a == cur else a
            ring.append(cur)
        rings.append(points[np.array(ring[:-1], dtype=int)])
    return rings


def rasterize(rings: list[np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    """Fill polygon rings on a pixel grid with the even-odd rule.

    Ring vertices are (x, y) with pixel (i, j) covering x in [j, j+1),
    y in [i, i+1); a pixel is inside when its center lies inside. Edge
    crossings use a half-open span rule in both axes so shared boundaries
    never double-fill and the parity per scanline is always even.
    """
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    segs = []
    for ring in rings:
        p = np.asarray(ring, dtype=np.float64)
        if len(p) < 2:
            continue
        segs.append(np.concatenate([p, np.roll(p, -1, axis=0)], axis=1))
    if not segs:
        return mask
    x0, y0, x1, y1 = np.concatenate(segs, axis=0).T
    slanted = y0 != y1
    x0, y0, x1, y1 = x0[slanted], y0[slanted], x1[slanted], y1[slanted]
    if len(x0) == 0:
        return mask
    i0 = np.maximum(np.ceil(np.minimum(y0, y1) - 0.5), 0.0)
    i1 = np.minimum(np.ceil(np.maximum(y0, y1) - 0.5) - 1.0, h - 1.0)
    counts = np.maximum(i1 - i0 + 1.0, 0.0).astype(np.intp)
    total = int(counts.sum())
    if total == 0:
        return mask
    # one entry per (segment, crossed scanline)
    seg = np.repeat(np.arange(len(counts)), counts)
    rows = i0.astype(np.intp)[seg] + (np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts))
    tt = (rows + 0.5 - y0[seg]) / (y1[seg] - y0[seg])
    xs = x0[seg] + tt * (x1[seg] - x0[seg])
    order = np.lexsort((xs, rows))
    rows = rows[order]
    xs = xs[order]
    # pair consecutive crossings within each row; a trailing unpaired
    # crossing (numerical degeneracy) is dropped
    same = rows[1:] == rows[:-1]
    row_starts = np.flatnonzero(np.r_[True, ~same])
    idx_in_row = np.arange(total) - np.repeat(row_starts, np.diff(np.r_[row_starts, total]))
    left = np.flatnonzero((idx_in_row % 2 == 0) & np.r_[same, False])
    if len(left) == 0:
        return mask
    j0 = np.clip(np.ceil(xs[left] - 0.5), 0, w).astype(np.intp)
    j1 = np.clip(np.ceil(xs[left + 1] - 0.5), 0, w).astype(np.intp)
    good = j1 > j0
    j0, j1, fill_rows = j0[good], j1[good], rows[left][good]
    # difference-accumulator fill: +1 at span start, -1 past span end
    acc = np.zeros((h, w + 1), dtype=np.int32)
    np.add.at(acc, (fill_rows, j0), 1)
    np.add.at(acc, (fill_rows, j1), -1)
    np.cumsum(acc[:, :w], axis=1, out=acc[:, :w])
    return acc[:, :w] > 0


def smooth_mask(mask: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-smooth a binary mask and rethreshold at 0.5.

    The mask is treated as sitting on an empty (zero) plane, so content near
    the array border is eroded rather than reflected. Output has the same
    shape as the input; callers must leave enough margin if growth into
    concavities matters. ``sigma == 0`` returns a copy.
    """
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return mask.copy()
    radius = math.ceil(3.0 * sigma)
    h, w = mask.shape
    padded = np.zeros((h + 2 * radius, w + 2 * radius), dtype=np.float64)
    padded[radius : radius + h, radius : radius + w] = mask
    k = gaussian_kernel1d(sigma)
    blurred = convolve1d(convolve1d(padded, k, axis=0), k, axis=1)
    return blurred[radius : radius + h, radius : radius + w] >= 0.5


@dataclass(frozen=True)
class ShapeMask:
    """A rasterized leaf shape.

    Attributes
    ----------
    mask : ndarray
        2-D bool, cropped to the tight bounding box; non-empty and
        8-connected.
    center : tuple of float
        (row, col) of the shape's nominal center within ``mask`` (the
        placement anchor).
    nominal_radius : float
        The radius the shape was sampled at.
    kind : str
        'polygon', 'rectangle' or 'disk'.
    """

    mask: np.ndarray
    center: tuple[float, float]
    nominal_radius: float
    kind: str


@dataclass(frozen=True)
class ShapeParams:
    """Shape-branch mix and polygon carving parameters."""

    p_polygon: float = 2.0 / 3.0
    p_rectangle: float = 1.0 / 6.0
    p_disk: float = 1.0 / 6.0
    n_min: int = 10
    n_max: int = 100
    alpha_min: float = 0.2
    alpha_max: float = 0.6
    sigma_s_min: float = 1.0
    sigma_s_max: float = 10.0
    p_smooth: float = 0.5
    p_hole: float = 0.2

    def __post_init__(self) -> None:
        probs = (self.p_polygon, self.p_rectangle, self.p_disk)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"branch probabilities must be >= 0 and sum to 1, got {probs}")
        if not 3 <= self.n_min <= self.n_max:
            raise ValueError(f"need 3 <= n_min <= n_max, got [{self.n_min}, {self.n_max}]")
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise ValueError("alpha range must satisfy 0 <= alpha_min <= alpha_max <= 1")
        if not 0.0 <= self.sigma_s_min <= self.sigma_s_max:
            raise ValueError("sigma_s range must satisfy 0 <= sigma_s_min <= sigma_s_max")
        for name in ("p_smooth", "p_hole"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _largest_component(mask: np.ndarray) -> np.ndarray:
    """Largest 8-connected component (ties: lowest label, i.e. raster order).

    Rasterizing a carved polygon at small radius routinely splits sub-pixel
    necks that are connected in the continuous region, and smoothing can do
    the same; keeping the dominant piece preserves the shape without
    resampling.
    """
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n <= 1:
        return mask
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == sizes.argmax()


def _crop_shape(mask: np.ndarray, cy: float, cx: float, radius: float, kind: str) -> ShapeMask:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    r0, r1 = int(rows[0]), int(rows[-1]) + 1
    c0, c1 = int(cols[0]), int(cols[-1]) + 1
    return ShapeMask(
        mask=np.ascontiguousarray(mask[r0:r1, c0:c1]),
        center=(cy - r0, cx - c0),
        nominal_radius=radius,
        kind=kind,
    )


def _disk_shape(radius: float) -> ShapeMask:
    half = math.ceil(radius)
    coords = np.arange(-half, half + 1, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    mask = yy * yy + xx * xx <= radius * radius
    return _crop_shape(mask, float(half), float(half), radius, "disk")


def _rect_rings(radius: float, phi: float, theta: float) -> list[np.ndarray]:
    a = radius * math.cos(phi)
    b = radius * math.sin(phi)
    corners = np.array([[a, b], [-a, b], [-a, -b], [a, -b]])
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return [corners @ rot.T]


def _raster_rings(rings: list[np.ndarray], radius: float, pad: int, kind: str) -> tuple[np.ndarray, float]:
    half = math.ceil(radius) + pad
    size = 2 * half + 1
    center = half + 0.5
    shifted = [r + center for r in rings]
    return rasterize(shifted, (size, size)), center


def sample_shape(sp: ShapeParams, radius: float, rng: np.random.Generator) -> ShapeMask:
    """Draw one leaf shape of nominal radius ``radius``.

    Branches on polygon / rectangle / disk with the configured proportions.
    The polygon branch triangulates a fresh point cloud, carves a concave
    hull (holes with probability ``p_hole``), scales the rings so the
    farthest boundary vertex sits at ``radius``, rasterizes, and smooths
    with probability ``p_smooth``. A raster split by sub-pixel necks keeps
    its largest connected component; a shape whose smoothing splits or
    erases it is rejected and fully resampled, falling back on the last of
    5 attempts to the unsmoothed polygon (and, if even the raster is empty
    5 times, to a disk), so a usable connected mask always comes back.

    Draw order per branch is fixed and documented by the code; all
    randomness comes from ``rng``, making shapes reproducible.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    u = rng.random()
    if u < sp.p_polygon:
        return _sample_polygon(sp, radius, rng)
    if u < sp.p_polygon + sp.p_rectangle:
        phi = rng.uniform(math.pi / 8.0, 3.0 * math.pi / 8.0)
        theta = rng.uniform(0.0, math.pi)
        mask, center = _raster_rings(_rect_rings(radius, phi, theta), radius, 1, "rectangle")
        return _crop_shape(mask, center - 0.5, center - 0.5, radius, "rectangle")
    return _disk_shape(radius)


def _sample_polygon(sp: ShapeParams, radius: float, rng: np.random.Generator) -> ShapeMask:
    for attempt in range(5):
        n = int(rng.integers(sp.n_min, sp.n_max + 1))
        alpha = rng.uniform(sp.alpha_min, sp.alpha_max)
        pts = sample_points_in_disk(n, 1.0, rng)
        do_smooth = rng.random() < sp.p_smooth
        sigma_s = rng.uniform(sp.sigma_s_min, sp.sigma_s_max) if do_smooth else 0.0
        holes = rng.random() < sp.p_hole
        try:
            rings = concave_hull(delaunay(pts), alpha, open_holes=holes)
        except ValueError:
            continue
        extent = max(float(np.max(np.linalg.norm(r, axis=1))) for r in rings)
        if extent <= 0:
            continue
        scale = radius / extent
        scaled = [r * scale for r in rings]
        pad = (math.ceil(3.0 * sigma_s) if do_smooth else 0) + 2
        raw, center = _raster_rings(scaled, radius, pad, "polygon")
        if not raw.any():
            continue
        raw = _largest_component(raw)
        if do_smooth:
            smoothed = smooth_mask(raw, sigma_s)
            labels, n_comp = ndimage.label(smoothed, structure=_EIGHT)
            if n_comp == 1:
                return _crop_shape(smoothed, center - 0.5, center - 0.5, radius, "polygon")
            if attempt < 4:
                # smoothing erased or split the shape: resample everything
                continue
            # last attempt: fall back to the unsmoothed polygon
        return _crop_shape(raw, center - 0.5, center - 0.5, radius, "polygon")
    return _disk_shape(radius)
