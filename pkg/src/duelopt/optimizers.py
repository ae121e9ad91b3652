"""Normalized gradient descent driven by comparison feedback.

Four methods share one loop: sample directions around the current point
``w``, turn the feedback into an ascent-direction estimate ``g``, step to
``project(w - eta * g)``, then spend one more duel comparing the new point
with the best point so far. The best point so far is what gets returned.

* ``pngd_run``: one duel ``(w + gamma u, w - gamma u)`` per round.
* ``batched_ngd_run``: ``m`` such duels per round, estimates averaged.
* ``battling_ngd_run``: one battle over the ``2^l`` points of a structured
  query set, ``l = floor(log2 m)``; the winner yields ``l`` estimates.
* ``phased_run``: restarts a batched or battling run with halving targets,
  for strongly convex objectives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ParameterError
from .oracles import ComparisonOracle, Feedback
from .querysets import build_query_set, cube_dim, extract_gradient_estimates
from .vectorspace import Domain, as_vector, sample_sphere_rows

MODES = ("single", "batched", "battling")
_SQRT_LOG_480 = math.sqrt(math.log(480.0))
_PROOF_CONST = 400.0 / (math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class SmoothParams:
    eta: float
    gamma: float
    T: int
    m: int
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("eta", "gamma"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ParameterError(f"{name} must be positive and finite, got {val!r}")
        if int(self.T) != self.T or self.T < 0:
            raise ParameterError(f"T must be a non-negative integer, got {self.T!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}")
        if self.mode == "battling" and cube_dim(self.m) < 1:
            raise ParameterError(f"battling needs m >= 2, got m={self.m}")

    @property
    def ell(self) -> int:
        return cube_dim(self.m)

    def with_budget(self, T: int) -> "SmoothParams":
        return SmoothParams(self.eta, self.gamma, int(T), self.m, self.mode)


@dataclass(frozen=True)
class Phase:
    eta: float
    gamma: float
    rounds: int
    eps: float
    dist: float  # squared-distance bound the phase starts from


@dataclass(frozen=True)
class PhaseSchedule:
    k_eps: int
    t_base: int
    m: int
    mode: str
    phases: tuple[Phase, ...]

    @property
    def total_rounds(self) -> int:
        return sum(p.rounds for p in self.phases)

    def params(self, k: int) -> SmoothParams:
        p = self.phases[k]
        return SmoothParams(p.eta, p.gamma, p.rounds, self.m, self.mode)


class TraceRecord(NamedTuple):
    round: int
    duel_queries: int
    multiwise_queries: int
    f_w: float
    f_runmin: float


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    final_point: Optional[np.ndarray] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return self.records[-1].round if self.records else 0

    def rounds_to(self, target: float) -> int:
        """First round whose running-min value is ``<= target``, or -1."""
        for rec in self.records:
            if rec.f_runmin <= target:
                return rec.round
        return -1


@dataclass(frozen=True)
class StepInfo:
    """Handed to the optional ``callback`` once per round."""

    round: int
    w: np.ndarray
    g: np.ndarray
    query_set: object = None
    winner: Optional[int] = None


def _mode_factor(mode: str, m: int) -> int:
    return {"single": 1, "batched": m, "battling": cube_dim(m)}[mode]


def _check_mode(mode: str, d: int, m: int) -> None:
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if mode == "batched" and m > d:
        raise ParameterError(f"batched mode needs m <= d (m={m}, d={d})")
    if mode == "battling":
        if m < 2:
            raise ParameterError(f"battling mode needs m >= 2, got m={m}")
        if cube_dim(m) > d:
            raise ParameterError(f"battling mode needs floor(log2 m) <= d (m={m}, d={d})")


def step_size(eps: float, beta: float, d: int, m: int, mode: str) -> float:
    return _mode_factor(mode, m) * math.sqrt(eps) / (20.0 * math.sqrt(d * beta))


def perturbation(eps: float, beta: float, d: int, D: float, m: int, mode: str) -> float:
    if mode == "single":
        denom = 480.0 * beta * d * D**2
    elif mode == "batched":
        denom = 960.0 * beta * d * math.sqrt(d) * D**2
    else:
        l = cube_dim(m)
        denom = 960.0 * beta * d * l * math.sqrt(d * l) * D**2
    return eps**1.5 / (denom * _SQRT_LOG_480) * math.sqrt(2.0 / beta)


def params_smooth(eps: float, beta: float, d: int, D: float, m: int, mode: str) -> SmoothParams:
    """Step size, perturbation and round budget guaranteeing an ``eps``-optimal
    output for a ``beta``-smooth objective, with ``D >= ||w1 - x*||^2``."""
    for name, val in (("eps", eps), ("beta", beta), ("D", D)):
        if not (val > 0 and math.isfinite(val)):
            raise ParameterError(f"{name} must be positive and finite, got {val!r}")
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d!r}")
    _check_mode(mode, d, m)
    if mode == "single":
        m = 1
    k = _mode_factor(mode, m)
    T = math.ceil(_PROOF_CONST * d * beta * D / (eps * k))
    return SmoothParams(
        eta=step_size(eps, beta, d, m, mode),
        gamma=perturbation(eps, beta, d, D, m, mode),
        T=T,
        m=m,
        mode=mode,
    )


def params_strong(
    eps: float, alpha: float, beta: float, d: int, D: float, m: int, mode: str
) -> PhaseSchedule:
    """Phase schedule for an ``alpha``-strongly convex, ``beta``-smooth objective.

    Phase 1 runs ``t_1 = ceil(t * D)`` rounds (at least ``t``), later phases
    ``2 t`` rounds each, with ``t = ceil(800 d beta / ((sqrt 2 - 1) alpha))``.
    Phase ``k`` starts within squared distance ``D_k`` of the optimum, where
    ``D_1 = D`` and ``D_{k+1} = t_exact D_k / t_k``; its target is
    ``eps_k = 400 d beta D_k / ((sqrt 2 - 1) t_k)`` and the smooth formulas
    are instantiated at ``(eps_k, D_k)``.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    for name, val in (("eps", eps), ("beta", beta), ("D", D)):
        if not (val > 0 and math.isfinite(val)):
            raise ParameterError(f"{name} must be positive and finite, got {val!r}")
    _check_mode(mode, d, m)
    if mode == "single":
        m = 1
    k_eps = math.ceil(math.log2(alpha / eps))
    t_exact = 2.0 * _PROOF_CONST * d * beta / alpha
    t_base = math.ceil(t_exact)
    if k_eps < 1:
        p = params_smooth(eps, beta, d, D, m, mode)
        return PhaseSchedule(0, t_base, m, mode, (Phase(p.eta, p.gamma, p.T, eps, D),))

    phases = []
    dist = D
    for k in range(1, k_eps + 1):
        t_k = max(math.ceil(t_base * D), t_base) if k == 1 else 2 * t_base
        eps_k = _PROOF_CONST * d * beta * dist / t_k
        phases.append(
            Phase(
                eta=step_size(eps_k, beta, d, m, mode),
                gamma=perturbation(eps_k, beta, d, dist, m, mode),
                rounds=t_k,
                eps=eps_k,
                dist=dist,
            )
        )
        dist = t_exact * dist / t_k
    return PhaseSchedule(k_eps, t_base, m, mode, tuple(phases))


def expected_queries(mode: str, m: int, T: int, repeats: int = 1) -> tuple[int, int]:
    """Closed-form ``(duel, multiwise)`` query totals for ``T`` rounds.

    ``repeats`` is the per-answer resampling count in noisy mode.
    """
    if mode == "single":
        return 2 * T * repeats, 0
    if mode == "batched":
        return (m + 1) * T * repeats, 0
    if mode == "battling":
        return T * repeats, T * repeats
    raise ParameterError(f"unknown mode {mode!r}")


# --- core loop ----------------------------------------------------------------


def _run(
    oracle: ComparisonOracle,
    dom: Domain,
    w1,
    p: SmoothParams,
    estimate: Callable,
    delta: Optional[float],
    trace: Optional[Trace],
    round0: int,
    callback: Optional[Callable[[StepInfo], None]],
) -> Trace:
    obj = oracle.objective
    if dom.d != obj.dim:
        raise ParameterError(f"domain dimension {dom.d} != objective dimension {obj.dim}")
    w = as_vector(w1, obj.dim).copy()
    if not dom.contains(w):
        raise ParameterError("initial point lies outside the domain")
    fb = Feedback(oracle, delta)
    if trace is None:
        trace = Trace()
    best = w
    f_best = obj(best)
    if not trace.records:
        trace.records.append(TraceRecord(round0, *oracle.ledger.snapshot(), f_best, f_best))
    for t in range(1, p.T + 1):
        g, extra = estimate(w, fb)
        w = dom._project(w - p.eta * g)
        if callback is not None:
            callback(StepInfo(round0 + t, w, g, *extra))
        f_w = float(obj.eval_many(w[None])[0])
        # keep the old best only if the new point is strictly worse
        if fb.duel(best, w) >= 0:
            best, f_best = w, f_w
        trace.records.append(TraceRecord(round0 + t, *oracle.ledger.snapshot(), f_w, f_best))
    trace.final_point = best
    return trace


def _single_estimator(p: SmoothParams, d: int, rng: np.random.Generator):
    def estimate(w, fb):
        u = sample_sphere_rows(1, d, 1.0, rng)[0]
        o = fb.duel(w + p.gamma * u, w - p.gamma * u)
        return o * u, ()

    return estimate


def _batched_estimator(p: SmoothParams, d: int, rng: np.random.Generator):
    def estimate(w, fb):
        U = sample_sphere_rows(p.m, d, 1.0, rng)
        o = fb.duels(w + p.gamma * U, w - p.gamma * U)
        return (o @ U) / p.m, ()

    return estimate


def _battling_estimator(p: SmoothParams, d: int, rng: np.random.Generator):
    l = p.ell
    radius = 1.0 / math.sqrt(l)

    def estimate(w, fb):
        U = sample_sphere_rows(l, d, radius, rng)
        qs = build_query_set(w, p.gamma, U)
        winner = fb.winner(qs.points)
        return extract_gradient_estimates(qs, winner).sum(axis=0) / l, (qs, winner)

    return estimate


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def pngd_run(
    oracle: ComparisonOracle,
    dom: Domain,
    w1,
    p: SmoothParams,
    rng=None,
    delta: Optional[float] = None,
    callback=None,
    *,
    trace: Optional[Trace] = None,
    round0: int = 0,
) -> Trace:
    """Projected normalized gradient descent with one duel per round."""
    if p.mode != "single":
        raise ParameterError(f"pngd_run needs mode 'single', got {p.mode!r}")
    est = _single_estimator(p, oracle.d, _rng(rng))
    return _run(oracle, dom, w1, p, est, delta, trace, round0, callback)


def batched_ngd_run(
    oracle: ComparisonOracle,
    dom: Domain,
    w1,
    p: SmoothParams,
    rng=None,
    delta: Optional[float] = None,
    callback=None,
    *,
    trace: Optional[Trace] = None,
    round0: int = 0,
) -> Trace:
    """Normalized gradient descent averaging ``m`` duels per round."""
    if p.mode != "batched":
        raise ParameterError(f"batched_ngd_run needs mode 'batched', got {p.mode!r}")
    if p.m > oracle.d:
        raise ParameterError(f"batched mode needs m <= d (m={p.m}, d={oracle.d})")
    est = _batched_estimator(p, oracle.d, _rng(rng))
    return _run(oracle, dom, w1, p, est, delta, trace, round0, callback)


def battling_ngd_run(
    oracle: ComparisonOracle,
    dom: Domain,
    w1,
    p: SmoothParams,
    rng=None,
    delta: Optional[float] = None,
    callback=None,
    *,
    trace: Optional[Trace] = None,
    round0: int = 0,
) -> Trace:
    """Normalized gradient descent from one multiwise-winner query per round.

    Only ``2^floor(log2 m)`` of the ``m`` available slots are used.
    """
    if p.mode != "battling":
        raise ParameterError(f"battling_ngd_run needs mode 'battling', got {p.mode!r}")
    if p.m < 2:
        raise ParameterError(f"battling needs m >= 2, got m={p.m}")
    if p.ell > oracle.d:
        raise ParameterError(f"battling needs floor(log2 m) <= d (m={p.m}, d={oracle.d})")
    est = _battling_estimator(p, oracle.d, _rng(rng))
    return _run(oracle, dom, w1, p, est, delta, trace, round0, callback)


_BASE_RUNS = {"batched": batched_ngd_run, "battling": battling_ngd_run, "single": pngd_run}


def phased_run(
    base: str,
    oracle: ComparisonOracle,
    dom: Domain,
    w1,
    sched: PhaseSchedule,
    rng=None,
    delta: Optional[float] = None,
    callback=None,
) -> Trace:
    """Run ``base`` once per phase, each warm-started from the previous output."""
    if base not in ("batched", "battling"):
        raise ParameterError(f"phased base must be 'batched' or 'battling', got {base!r}")
    if sched.mode != base:
        raise ParameterError(f"schedule was built for {sched.mode!r}, not {base!r}")
    run = _BASE_RUNS[base]
    rng = _rng(rng)
    trace = Trace()
    if oracle.objective.alpha is None or oracle.objective.alpha <= 0:
        trace.warnings.append(
            f"objective {oracle.objective.name!r} has no strong-convexity constant; "
            "the phased guarantee does not apply"
        )
    w = as_vector(w1, oracle.d)
    for k in range(len(sched.phases)):
        trace = run(
            oracle, dom, w, sched.params(k), rng, delta, callback,
            trace=trace, round0=trace.rounds,
        )
        w = trace.final_point
    return trace
