"""Sign-vector hypercubes and the structured query sets used for battling.

Vertices of ``{+1, -1}^n`` are enumerated lexicographically with ``+1``
before ``-1``: vertex ``k`` has ``-1`` exactly where the binary expansion
of ``k`` (most significant bit first) has a one. Index 0 is the all-``+1``
vertex and flipping coordinate ``i`` toggles bit ``n - 1 - i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .vectorspace import as_vector

MAX_CUBE_DIM = 30


def _check_n(n) -> int:
    if int(n) != n or not 1 <= n <= MAX_CUBE_DIM:
        raise ParameterError(f"hypercube dimension must be in [1, {MAX_CUBE_DIM}], got {n!r}")
    return int(n)


def hypercube_vertices(n: int) -> np.ndarray:
    """All ``2^n`` sign vectors as rows of an int8 array."""
    n = _check_n(n)
    k = np.arange(2**n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _as_vertex(v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0 or not np.all(np.abs(v) == 1):
        raise ParameterError(f"not a sign vertex: {v!r}")
    _check_n(v.size)
    return v.astype(np.int8)


def vertex_index(v) -> int:
    """Position of ``v`` in :func:`hypercube_vertices` order."""
    v = _as_vertex(v)
    idx = 0
    for s in v:
        idx = (idx << 1) | int(s < 0)
    return idx


def neighbors(v) -> np.ndarray:
    """The ``n`` vertices one sign flip away, ordered by flipped coordinate."""
    v = _as_vertex(v)
    out = np.tile(v, (v.size, 1))
    np.fill_diagonal(out, -v)
    return out


def cube_dim(m: int) -> int:
    """``floor(log2 m)``: how many independent signs a winner among ``m`` points yields."""
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    return int(m).bit_length() - 1


@dataclass(frozen=True, eq=False)
class StructuredQuerySet:
    center: np.ndarray
    gamma: float
    directions: np.ndarray  # (l, d), one direction per row
    vertices: np.ndarray = field(repr=False)  # (2^l, l)
    points: np.ndarray = field(repr=False)  # (2^l, d)

    @property
    def n_dirs(self) -> int:
        return self.directions.shape[0]

    def __len__(self) -> int:
        return self.points.shape[0]

    def vertex(self, index: int) -> np.ndarray:
        self._check_index(index)
        return self.vertices[index]

    def index_of(self, v) -> int:
        v = _as_vertex(v)
        if v.size != self.n_dirs:
            raise ParameterError(f"vertex has {v.size} signs, set uses {self.n_dirs}")
        return vertex_index(v)

    def neighbor_indices(self, index: int) -> list[int]:
        """Indices of the points that differ from ``index`` in exactly one direction."""
        self._check_index(index)
        l = self.n_dirs
        return [index ^ (1 << (l - 1 - i)) for i in range(l)]

    def _check_index(self, index) -> None:
        if int(index) != index or not 0 <= index < len(self):
            raise ParameterError(f"point index {index!r} out of range [0, {len(self)})")


def build_query_set(center, gamma: float, directions) -> StructuredQuerySet:
    """``{center + gamma * U v : v in {+1,-1}^l}`` for the rows ``u_i`` of ``directions``.

    Every direction must have norm ``1/sqrt(l)``.
    """
    center = as_vector(center)
    U = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    l, d = U.shape
    if d != center.size:
        raise ParameterError(f"directions have dimension {d}, center has {center.size}")
    if not 1 <= l <= d:
        raise ParameterError(f"need 1 <= number of directions <= d, got {l} for d={d}")
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma!r}")
    target = 1.0 / np.sqrt(l)
    norms = np.linalg.norm(U, axis=1)
    if np.any(np.abs(norms - target) > 1e-9):
        raise ParameterError(f"every direction must have norm 1/sqrt({l}); got {norms}")
    V = hypercube_vertices(l)
    points = center + gamma * (V @ U)
    return StructuredQuerySet(center, float(gamma), U, V, points)


def extract_gradient_estimates(qs: StructuredQuerySet, winner: int) -> np.ndarray:
    """Per-direction estimates ``-v_i u_i`` read off the winning vertex ``v``.

    The winner beat each of its one-flip neighbors, so along ``u_i`` the
    objective increases toward ``-v_i``; rows of the result are those
    ascent directions.
    """
    v = qs.vertex(winner)
    return -v[:, None] * qs.directions
