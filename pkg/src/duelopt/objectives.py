"""Convex test objectives with smoothness metadata and known optima."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .vectorspace import as_vector


@dataclass(frozen=True, eq=False)
class Objective:
    """A deterministic objective ``f: R^d -> R``.

    ``func`` must accept an array of shape ``(..., d)`` and reduce over the
    last axis when ``vectorized`` is true; otherwise it is called once per
    point.
    """

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    beta: float
    alpha: Optional[float] = None
    known_min_value: Optional[float] = None
    known_minimizer: Optional[np.ndarray] = field(default=None, repr=False)
    vectorized: bool = True
    note: str = ""

    def __post_init__(self):
        if not (self.beta > 0):
            raise ParameterError(f"smoothness constant must be positive, got {self.beta!r}")
        if self.alpha is not None and self.alpha < 0:
            raise ParameterError(f"strong convexity must be >= 0, got {self.alpha!r}")

    def __call__(self, x) -> float:
        return float(self.eval_many(as_vector(x, self.dim)[None, :])[0])

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on the rows of ``X`` (shape ``(k, d)``)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ParameterError(f"expected points of dimension {self.dim}, got shape {X.shape}")
        if self.vectorized:
            return np.asarray(self.func(X), dtype=np.float64).reshape(X.shape[0])
        return np.array([float(self.func(row)) for row in X])

    def suboptimality(self, value: float) -> Optional[float]:
        if self.known_min_value is None:
            return None
        return value - self.known_min_value

    def distance_bound(self, w1) -> float:
        """Squared distance from ``w1`` to the known minimizer."""
        if self.known_minimizer is None:
            raise ParameterError(
                f"objective {self.name!r} has no known minimizer; supply D explicitly"
            )
        w1 = as_vector(w1, self.dim)
        return float(np.sum((w1 - self.known_minimizer) ** 2))


def make_quadratic(d: int) -> Objective:
    """``f(x) = ||x||^2``."""
    d = _check_dim(d)
    return Objective(
        name="quadratic",
        dim=d,
        func=lambda X: (X * X).sum(axis=-1),
        beta=2.0,
        alpha=2.0,
        known_min_value=0.0,
        known_minimizer=np.zeros(d),
    )


def make_sinsum(d: int) -> Objective:
    """``f(x) = 3 + sum_i sin(x_i)``.

    Only locally convex: the Hessian ``diag(-sin x_i)`` is positive on
    ``(-pi, 0)^d``. The reported minimum ``3 - d`` is attained at
    ``-pi/2 * 1``.
    """
    d = _check_dim(d)
    return Objective(
        name="sinsum",
        dim=d,
        func=lambda X: 3.0 + np.sin(X).sum(axis=-1),
        beta=1.0,
        alpha=None,
        known_min_value=3.0 - d,
        known_minimizer=np.full(d, -math.pi / 2),
        note="convex only on (-pi, 0)^d",
    )


def make_l2l1(d: int) -> Objective:
    """``f(x) = ||x||_2^2 + 0.5 * ||x||_1^2``.

    Away from the coordinate hyperplanes the Hessian is ``2 I + s s^T`` with
    ``s`` the sign pattern, whose largest eigenvalue is ``2 + d``; that is
    the smoothness constant recorded here. The gradient jumps across the
    hyperplanes, so the bound is orthant-wise.
    """
    d = _check_dim(d)

    def func(X):
        l1 = np.abs(X).sum(axis=-1)
        return (X * X).sum(axis=-1) + 0.5 * l1 * l1

    return Objective(
        name="l2l1",
        dim=d,
        func=func,
        beta=2.0 + d,
        alpha=2.0,
        known_min_value=0.0,
        known_minimizer=np.zeros(d),
        note="smooth only within each orthant",
    )


OBJECTIVES = {
    "quadratic": make_quadratic,
    "sinsum": make_sinsum,
    "l2l1": make_l2l1,
}


def make_objective(name: str, d: int) -> Objective:
    try:
        factory = OBJECTIVES[name]
    except KeyError:
        raise ParameterError(
            f"unknown objective {name!r}; choose from {sorted(OBJECTIVES)}"
        ) from None
    return factory(d)


def custom_objective(
    name: str,
    d: int,
    func: Callable,
    beta: float,
    alpha: Optional[float] = None,
    known_min_value: Optional[float] = None,
    known_minimizer=None,
    vectorized: bool = False,
) -> Objective:
    """Wrap a user function. ``beta`` must be supplied by the caller."""
    d = _check_dim(d)
    xstar = None if known_minimizer is None else as_vector(known_minimizer, d)
    return Objective(
        name=name,
        dim=d,
        func=func,
        beta=float(beta),
        alpha=alpha,
        known_min_value=known_min_value,
        known_minimizer=xstar,
        vectorized=vectorized,
    )


def fd_gradient(obj: Objective, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient, for validation only."""
    if not h > 0:
        raise ParameterError(f"step must be positive, got {h!r}")
    x = as_vector(x, obj.dim)
    steps = np.eye(obj.dim) * h
    fp = obj.eval_many(x + steps)
    fm = obj.eval_many(x - steps)
    return (fp - fm) / (2.0 * h)


def _check_dim(d) -> int:
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    return int(d)
