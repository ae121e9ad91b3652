"""Comparison feedback channels.

A :class:`ComparisonOracle` answers duels (which of two points is worse,
singly or in batches) and battles (which of several points is best) about
a hidden objective. Each answer is wrong with probability ``nu`` and is
charged to a :class:`QueryLedger`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .objectives import Objective
from .vectorspace import as_vector


def sign(x) -> np.ndarray:
    """Sign with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0, 1, -1)


@dataclass
class QueryLedger:
    duel_queries: int = 0
    multiwise_queries: int = 0

    @property
    def total_feedback_bits(self) -> int:
        return self.duel_queries + self.multiwise_queries

    def snapshot(self) -> tuple[int, int]:
        return self.duel_queries, self.multiwise_queries


def resample_count(nu: float, delta: float) -> int:
    """Repetitions needed so a majority vote is right with probability >= 1 - delta.

    Hoeffding: ``N = ceil(ln(2/delta) / (2 (1/2 - nu)^2))``.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if not 0.0 <= nu < 0.5:
        raise ParameterError(f"nu must lie in [0, 0.5), got {nu!r}")
    return math.ceil(math.log(2.0 / delta) / (2.0 * (0.5 - nu) ** 2))


class ComparisonOracle:
    """Noisy comparison access to ``objective``.

    Single-run and single-threaded: it owns a mutable random source and
    ledger. Use one instance per run.
    """

    def __init__(self, objective: Objective, nu: float = 0.0, rng=None):
        if not 0.0 <= nu < 0.5:
            raise ParameterError(f"nu must lie in [0, 0.5), got {nu!r}")
        self.objective = objective
        self.nu = float(nu)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.ledger = QueryLedger()

    @property
    def d(self) -> int:
        return self.objective.dim

    def _true_signs(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        k = X.shape[0]
        f = self.objective.eval_many(np.concatenate((X, Y)))
        return sign(f[:k] - f[k:])

    def _stack(self, pairs) -> tuple[np.ndarray, np.ndarray]:
        if len(pairs) == 0:
            raise ParameterError("batched comparison needs at least one pair")
        X = np.array([as_vector(x, self.d) for x, _ in pairs])
        Y = np.array([as_vector(y, self.d) for _, y in pairs])
        return X, Y

    def _flip(self, signs: np.ndarray) -> np.ndarray:
        if self.nu == 0.0:
            return signs
        flips = self.rng.random(signs.shape) < self.nu
        return np.where(flips, -signs, signs)

    def compare(self, x, y) -> int:
        """Noisy ``sign(f(x) - f(y))``."""
        x = as_vector(x, self.d)
        y = as_vector(y, self.d)
        self.ledger.duel_queries += 1
        return int(self._flip(self._true_signs(x[None], y[None]))[0])

    def batched_compare(self, pairs: Sequence) -> list[int]:
        X, Y = self._stack(pairs)
        return self.compare_arrays(X, Y).tolist()

    def compare_arrays(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Row-wise duels between two ``(k, d)`` arrays."""
        self.ledger.duel_queries += X.shape[0]
        return self._flip(self._true_signs(X, Y))

    def battling_winner(self, points) -> int:
        """Index of the best point, correct with probability ``1 - nu``.

        Ties go to the lowest index. A wrong answer is uniform over the
        other indices.
        """
        P = self._points(points)
        self.ledger.multiwise_queries += 1
        return self._winner(P)

    def _points(self, points) -> np.ndarray:
        P = np.asarray(points, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] < 2:
            raise ParameterError("a battle needs at least two points")
        if P.shape[1] != self.d:
            raise ParameterError(f"dimension mismatch: expected {self.d}, got {P.shape[1]}")
        return P

    def _winner(self, P: np.ndarray) -> int:
        best = int(np.argmin(self.objective.eval_many(P)))
        if self.nu == 0.0 or self.rng.random() >= self.nu:
            return best
        other = int(self.rng.integers(P.shape[0] - 1))
        return other + (other >= best)

    def resampled_compare(self, x, y, delta: float) -> int:
        """Majority of ``resample_count(nu, delta)`` independent duels; ties give +1."""
        n = resample_count(self.nu, delta)
        x = as_vector(x, self.d)
        y = as_vector(y, self.d)
        return int(self.resampled_arrays(x[None], y[None], n)[0])

    def resampled_arrays(self, X: np.ndarray, Y: np.ndarray, n: int) -> np.ndarray:
        truth = self._true_signs(X, Y)
        self.ledger.duel_queries += n * X.shape[0]
        if self.nu == 0.0:
            return truth
        flips = self.rng.random((X.shape[0], n)) < self.nu
        votes = np.where(flips, -truth[:, None], truth[:, None]).sum(axis=1)
        return sign(votes)

    def resampled_winner(self, points, n: int) -> int:
        """Most frequent winner over ``n`` battles; ties go to the lowest index."""
        P = self._points(points)
        self.ledger.multiwise_queries += n
        if self.nu == 0.0:
            return self._winner(P)
        counts = np.bincount([self._winner(P) for _ in range(n)], minlength=P.shape[0])
        return int(np.argmax(counts))


class Feedback:
    """What an optimizer sees: raw oracle answers, or majority votes when
    ``delta`` is given and the oracle is noisy."""

    def __init__(self, oracle: ComparisonOracle, delta: Optional[float] = None):
        self.oracle = oracle
        self.delta = delta
        if delta is not None and oracle.nu > 0.0:
            self.repeats = resample_count(oracle.nu, delta)
        else:
            if delta is not None and not 0.0 < delta < 1.0:
                raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
            self.repeats = 1

    def duels(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.repeats == 1:
            return self.oracle.compare_arrays(X, Y)
        return self.oracle.resampled_arrays(X, Y, self.repeats)

    def duel(self, x: np.ndarray, y: np.ndarray) -> int:
        return int(self.duels(x[None], y[None])[0])

    def winner(self, P: np.ndarray) -> int:
        if self.repeats == 1:
            return self.oracle.battling_winner(P)
        return self.oracle.resampled_winner(P, self.repeats)
