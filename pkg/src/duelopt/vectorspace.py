"""Dense vector helpers, uniform sphere sampling and projections onto simple
convex domains.

Vectors are plain 1-D ``float64`` numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError


def as_vector(x, d: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` into a finite 1-D float64 array, optionally checking its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ParameterError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ParameterError("vector has non-finite coordinates")
    if d is not None and v.size != d:
        raise ParameterError(f"dimension mismatch: expected {d}, got {v.size}")
    return v


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = as_vector(x), as_vector(y)
    if x.size != y.size:
        raise ParameterError(f"dimension mismatch: {x.size} vs {y.size}")
    return x, y


def dot(x, y) -> float:
    x, y = _pair(x, y)
    return float(x @ y)


def norm(x) -> float:
    return float(np.linalg.norm(as_vector(x)))


def scale(x, a: float) -> np.ndarray:
    return float(a) * as_vector(x)


def axpy(a: float, x, y) -> np.ndarray:
    """Return ``a * x + y``."""
    x, y = _pair(x, y)
    return float(a) * x + y


def sample_sphere(d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """Draw one point uniformly from the sphere of radius ``r`` in R^d.

    A standard Gaussian vector is normalized and rescaled; the all-zeros
    draw (probability zero) is simply redrawn.
    """
    return sample_sphere_rows(1, d, r, rng)[0]


def sample_sphere_rows(k: int, d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """``k`` independent uniform points on the radius-``r`` sphere, as rows.

    Consumes the random stream exactly like ``k`` successive
    :func:`sample_sphere` calls.
    """
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    if not (r > 0 and np.isfinite(r)):
        raise ParameterError(f"radius must be positive, got {r!r}")
    Z = rng.standard_normal((int(k), int(d)))
    n = np.sqrt((Z * Z).sum(axis=1))
    for i in () if n.all() else np.flatnonzero(n == 0.0):
        # measure-zero event; redraw keeps later rows' values but not the stream
        while n[i] == 0.0:
            Z[i] = rng.standard_normal(int(d))
            n[i] = np.sqrt(Z[i] @ Z[i])
    return (Z / n[:, None]) * r


@dataclass(frozen=True, eq=False)
class Domain:
    """A closed convex decision set: all of R^d, a Euclidean ball or a box."""

    kind: str
    d: int
    center: Optional[np.ndarray] = field(default=None, repr=False)
    radius: Optional[float] = None
    lo: Optional[np.ndarray] = field(default=None, repr=False)
    hi: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def all_space(cls, d: int) -> "Domain":
        if int(d) != d or d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {d!r}")
        return cls("all", int(d))

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        c = as_vector(center)
        if not (radius > 0 and np.isfinite(radius)):
            raise ParameterError(f"ball radius must be positive, got {radius!r}")
        return cls("ball", c.size, center=c, radius=float(radius))

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo, hi = _pair(lo, hi)
        if np.any(lo > hi):
            raise ParameterError("box bounds must satisfy lo <= hi coordinatewise")
        return cls("box", lo.size, lo=lo, hi=hi)

    def project(self, x) -> np.ndarray:
        return self._project(as_vector(x, self.d))

    def _project(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "all":
            return x.copy()
        if self.kind == "box":
            return np.clip(x, self.lo, self.hi)
        offset = x - self.center
        dist = np.linalg.norm(offset)
        # slack keeps projection idempotent under rounding of the rescale
        if dist <= self.radius * (1.0 + 4 * np.finfo(float).eps):
            return x.copy()
        return self.center + offset * (self.radius / dist)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = as_vector(x, self.d)
        if self.kind == "all":
            return True
        if self.kind == "box":
            return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        return bool(np.linalg.norm(x - self.center) <= self.radius * (1 + tol) + tol)

    def describe(self) -> str:
        if self.kind == "all":
            return "all"
        if self.kind == "ball":
            return f"ball(r={self.radius:g})"
        return f"box[{self.lo.min():g},{self.hi.max():g}]"


def project(dom: Domain, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``dom``."""
    return dom.project(x)


def parse_domain(spec: str, d: int) -> Domain:
    """Build a domain from a short string.

    ``"all"``, ``"ball:R"`` (centered at the origin) or ``"box:LO:HI"``
    (the same bounds on every coordinate).
    """
    parts = spec.strip().lower().split(":")
    try:
        if parts[0] in ("all", "allspace", "") and len(parts) == 1:
            return Domain.all_space(d)
        if parts[0] == "ball" and len(parts) == 2:
            return Domain.ball(np.zeros(d), float(parts[1]))
        if parts[0] == "box" and len(parts) == 3:
            return Domain.box(np.full(d, float(parts[1])), np.full(d, float(parts[2])))
    except ValueError as exc:
        raise ParameterError(f"bad domain spec {spec!r}: {exc}") from None
    raise ParameterError(f"bad domain spec {spec!r}; use all, ball:R or box:LO:HI")
