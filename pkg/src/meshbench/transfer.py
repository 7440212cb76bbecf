"""Finite-element field transfer between planar triangulations.

For every target point the containing source triangle is located through a
uniform-grid spatial index and linear (P1) barycentric weights are stored.
Points that fall outside the source mesh by no more than a tolerance
(expressed as a fraction of the source bounding-box diagonal) are snapped
to the closest point of the nearest triangle with clamped weights; anything
farther out is an error.  Applying the operator to a per-vertex field then
evaluates the source's piecewise-linear interpolant at each target, which
reproduces affine fields exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PointOutsideDomain, ShapeMismatch

#: default snap tolerance (fraction of the source bounding-box diagonal);
#: coincident domains leak only by rounding, so the default is tight
DEFAULT_SNAP_TOL = 1e-8

#: a barycentric coordinate this small (relative) still counts as inside
_INSIDE_EPS = 1e-12


@dataclass(frozen=True)
class TransferOperator:
    """P1 interpolation weights from one triangulation onto target points."""

    element_ids: np.ndarray    # (k,) containing (or snapped-to) triangle ids
    vertex_ids: np.ndarray     # (k, 3) source vertex ids of those triangles
    weights: np.ndarray        # (k, 3) barycentric weights, rows sum to 1
    n_source_vertices: int


class _UniformGrid:
    """Bins triangles into a uniform grid over the source bounding box."""

    def __init__(self, nodes: np.ndarray, triangles: np.ndarray):
        self.lo = nodes.min(axis=0)
        hi = nodes.max(axis=0)
        extent = np.maximum(hi - self.lo, 1e-300)
        m = len(triangles)
        self.ncell = max(1, int(np.sqrt(m)))
        self.cell_size = extent / self.ncell

        tri_pts = nodes[triangles]                 # (m, 3, 2)
        lo_cells = self._cell_of(tri_pts.min(axis=1))
        hi_cells = self._cell_of(tri_pts.max(axis=1))
        pairs = []
        for t in range(m):
            for ix in range(lo_cells[t, 0], hi_cells[t, 0] + 1):
                for iy in range(lo_cells[t, 1], hi_cells[t, 1] + 1):
                    pairs.append((ix * self.ncell + iy, t))
        pairs.sort()
        flat = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
        self.items = flat[:, 1]
        self.offsets = np.searchsorted(flat[:, 0],
                                       np.arange(self.ncell * self.ncell + 1))

    def _cell_of(self, points: np.ndarray) -> np.ndarray:
        rel = (points - self.lo) / self.cell_size
        return np.clip(rel.astype(np.int64), 0, self.ncell - 1)

    def candidates(self, point: np.ndarray, radius: float = 0.0) -> np.ndarray:
        lo = self._cell_of((point - radius)[None, :])[0]
        hi = self._cell_of((point + radius)[None, :])[0]
        chunks = [
            self.items[self.offsets[ix * self.ncell + iy]:
                       self.offsets[ix * self.ncell + iy + 1]]
            for ix in range(lo[0], hi[0] + 1)
            for iy in range(lo[1], hi[1] + 1)]
        if len(chunks) == 1:
            return chunks[0]
        return np.unique(np.concatenate(chunks))


def _barycentric(nodes, triangles, tri_ids, points):
    """Barycentric coordinates of each point in its paired triangle."""
    a = nodes[triangles[tri_ids, 0]]
    b = nodes[triangles[tri_ids, 1]]
    c = nodes[triangles[tri_ids, 2]]
    v0 = b - a
    v1 = c - a
    v2 = points - a
    d00 = np.einsum("ij,ij->i", v0, v0)
    d01 = np.einsum("ij,ij->i", v0, v1)
    d11 = np.einsum("ij,ij->i", v1, v1)
    d20 = np.einsum("ij,ij->i", v2, v0)
    d21 = np.einsum("ij,ij->i", v2, v1)
    denom = d00 * d11 - d01 * d01
    with np.errstate(invalid="ignore", divide="ignore"):
        v = (d11 * d20 - d01 * d21) / denom
        w = (d00 * d21 - d01 * d20) / denom
    u = 1.0 - v - w
    return np.stack([u, v, w], axis=1)


def _closest_point_on_triangle(p, a, b, c):
    """Closest point to p on triangle abc (2-D, works for boundary cases)."""
    best = None
    for q0, q1 in ((a, b), (b, c), (c, a)):
        d = q1 - q0
        denom = float(d @ d)
        t = 0.0 if denom == 0.0 else float(np.clip((p - q0) @ d / denom, 0.0, 1.0))
        cp = q0 + t * d
        dist2 = float((p - cp) @ (p - cp))
        if best is None or dist2 < best[0]:
            best = (dist2, cp)
    return best


def build_transfer(source_nodes, source_triangles, targets,
                   tol: float = DEFAULT_SNAP_TOL) -> TransferOperator:
    """Locate every target in the source triangulation.

    ``tol`` is the snap tolerance as a fraction of the source bounding-box
    diagonal.  Ties between containing triangles resolve to the smallest
    triangle id, so the operator is deterministic.
    """
    nodes = np.ascontiguousarray(source_nodes, dtype=np.float64)
    triangles = np.ascontiguousarray(source_triangles, dtype=np.int64)
    pts = np.ascontiguousarray(targets, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeMismatch(f"targets must be (k, 2), got {pts.shape}")
    if not (np.isfinite(nodes).all() and np.isfinite(pts).all()):
        raise ShapeMismatch("positions must be finite")

    k = len(pts)
    m = len(triangles)
    grid = _UniformGrid(nodes, triangles)
    bbox_diag = float(np.linalg.norm(nodes.max(axis=0) - nodes.min(axis=0)))
    snap_dist = tol * bbox_diag

    # batched containment test against each target's own grid cell
    chunks = [grid.candidates(pts[i]) for i in range(k)]
    counts = np.array([len(c) for c in chunks], dtype=np.int64)
    pair_t = np.repeat(np.arange(k), counts)
    pair_tri = (np.concatenate(chunks) if pair_t.size
                else np.empty(0, dtype=np.int64))

    best = np.full(k, m, dtype=np.int64)  # m = sentinel: not found
    if pair_t.size:
        bary = _barycentric(nodes, triangles, pair_tri, pts[pair_t])
        inside = np.all(bary >= -_INSIDE_EPS, axis=1)
        np.minimum.at(best, pair_t[inside], pair_tri[inside])

    element_ids = np.empty(k, dtype=np.int64)
    weights = np.empty((k, 3))

    found = best < m
    if found.any():
        idx = np.flatnonzero(found)
        element_ids[idx] = best[idx]
        weights[idx] = _barycentric(nodes, triangles, best[idx], pts[idx])

    for i in np.flatnonzero(~found):
        candidates = np.sort(grid.candidates(pts[i], radius=snap_dist))
        best_dist2 = np.inf
        best_tri = -1
        best_cp = None
        for t in candidates:
            a, b, c = nodes[triangles[t, 0]], nodes[triangles[t, 1]], nodes[triangles[t, 2]]
            dist2, cp = _closest_point_on_triangle(pts[i], a, b, c)
            if dist2 < best_dist2:
                best_dist2, best_tri, best_cp = dist2, int(t), cp
        if best_tri < 0 or np.sqrt(best_dist2) > snap_dist:
            raise PointOutsideDomain(
                f"target {i} at {pts[i].tolist()} lies "
                f"{np.sqrt(best_dist2) if best_tri >= 0 else np.inf:.3e} "
                f"from the source mesh (allowed {snap_dist:.3e})")
        bary = _barycentric(nodes, triangles, np.array([best_tri]),
                            best_cp[None, :])[0]
        bary = np.clip(bary, 0.0, None)
        weights[i] = bary / bary.sum()
        element_ids[i] = best_tri

    vertex_ids = triangles[element_ids]
    weights.setflags(write=False)
    element_ids.setflags(write=False)
    return TransferOperator(element_ids=element_ids, vertex_ids=vertex_ids,
                            weights=weights, n_source_vertices=len(nodes))


def apply_transfer(op: TransferOperator, field) -> np.ndarray:
    """Evaluate the source's P1 interpolant of ``field`` at every target."""
    values = np.asarray(field, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] != op.n_source_vertices:
        raise ShapeMismatch(
            f"field has length {values.shape}, expected "
            f"({op.n_source_vertices},)")
    return np.einsum("kj,kj->k", op.weights, values[op.vertex_ids])
