"""Experiment configuration, runners and CSV output."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ParameterError
from .objectives import OBJECTIVES, Objective, make_objective
from .optimizers import (
    PhaseSchedule,
    SmoothParams,
    Trace,
    battling_ngd_run,
    batched_ngd_run,
    params_smooth,
    params_strong,
    phased_run,
    pngd_run,
)
from .oracles import ComparisonOracle, resample_count
from .querysets import cube_dim
from .vectorspace import as_vector, parse_domain

log = logging.getLogger(__name__)

ALGOS = ("pngd", "batched", "battling", "batched-strong", "battling-strong")
MAX_DEFAULT_ROUNDS = 10**6
TRACE_HEADER = ["round", "duel_queries", "multiwise_queries", "f_w", "f_runmin", "subopt"]
SUMMARY_HEADER = ["m", "rounds_to_eps", "duel_queries", "multiwise_queries"]

_MODE = {
    "pngd": "single",
    "batched": "batched",
    "battling": "battling",
    "batched-strong": "batched",
    "battling-strong": "battling",
}


@dataclass
class ExperimentConfig:
    objective: str = "quadratic"
    dim: int = 32
    algo: str = "batched"
    m: int = 6
    nu: float = 0.0
    eps: float = 0.01
    budget: Optional[int] = None
    domain: str = "all"
    w1_fill: float = 0.5
    w1: Optional[list] = None
    seed: int = 0
    out: Optional[str] = None
    # step size / perturbation overrides for the smooth algorithms
    eta: Optional[float] = None
    gamma: Optional[float] = None
    # per-answer failure probability for majority-vote resampling when nu > 0
    delta: float = 0.01
    D: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ParameterError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def mode(self) -> str:
        return _MODE[self.algo]

    @property
    def phased(self) -> bool:
        return self.algo.endswith("-strong")

    def validate(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ParameterError(
                f"objective must be one of {sorted(OBJECTIVES)}, got {self.objective!r}"
            )
        if self.algo not in ALGOS:
            raise ParameterError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim!r}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}")
        if self.mode == "batched" and self.m > self.dim:
            raise ParameterError(f"batched algorithms need m <= dim (m={self.m}, dim={self.dim})")
        if self.mode == "battling":
            if self.m < 2:
                raise ParameterError(f"battling algorithms need m >= 2, got m={self.m}")
            if cube_dim(self.m) > self.dim:
                raise ParameterError(
                    f"battling algorithms need floor(log2 m) <= dim (m={self.m}, dim={self.dim})"
                )
        if not 0.0 <= self.nu < 0.5:
            raise ParameterError(f"nu must lie in [0, 0.5), got {self.nu!r}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ParameterError(f"eps must be positive, got {self.eps!r}")
        if self.budget is not None and (not isinstance(self.budget, int) or self.budget < 0):
            raise ParameterError(f"budget must be a non-negative integer, got {self.budget!r}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not isinstance(self.seed, int):
            raise ParameterError(f"seed must be an integer, got {self.seed!r}")
        for name in ("eta", "gamma", "D"):
            val = getattr(self, name)
            if val is not None and not (val > 0 and math.isfinite(val)):
                raise ParameterError(f"{name} must be positive, got {val!r}")
        if self.phased and (self.eta is not None or self.gamma is not None):
            raise ParameterError("eta/gamma overrides only apply to the smooth algorithms")
        if self.w1 is not None and len(self.w1) != self.dim:
            raise ParameterError(f"w1 has {len(self.w1)} coordinates, dim is {self.dim}")
        parse_domain(self.domain, self.dim)


@dataclass
class SweepConfig:
    base: ExperimentConfig
    values: Sequence
    key: str = "m"
    out_dir: str = "sweep"
    jobs: int = 1

    def settings(self) -> list[ExperimentConfig]:
        if self.key not in ("m", "nu"):
            raise ParameterError(f"sweep key must be 'm' or 'nu', got {self.key!r}")
        if len(self.values) == 0:
            raise ParameterError("sweep needs at least one value")
        out = []
        for i, v in enumerate(self.values):
            cfg = self.base.replace(
                **{self.key: v},
                seed=self.base.seed + i,
                out=str(Path(self.out_dir) / f"trace_{self.key}{v}.csv"),
            )
            cfg.validate()
            out.append(cfg)
        return out


@dataclass
class RunResult:
    config: ExperimentConfig
    objective: Objective
    trace: Trace
    params: Union[SmoothParams, PhaseSchedule]
    path: Optional[Path] = None
    repeats: int = 1
    notes: list = field(default_factory=list)

    def rounds_to_eps(self, eps: Optional[float] = None) -> int:
        return rounds_to_eps(self.trace, self.objective, self.config.eps if eps is None else eps)


def initial_point(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.w1 is not None:
        return as_vector(cfg.w1, cfg.dim)
    return np.full(cfg.dim, float(cfg.w1_fill))


def build_params(cfg: ExperimentConfig, obj: Objective, w1: np.ndarray):
    """Theorem-driven parameters for ``cfg``, with overrides and budget applied."""
    D = cfg.D if cfg.D is not None else obj.distance_bound(w1)
    if D <= 0:
        # w1 is already optimal; any positive bound keeps the formulas finite
        D = cfg.eps
    if cfg.phased:
        if obj.alpha is None or obj.alpha <= 0:
            raise ParameterError(
                f"objective {obj.name!r} has no strong-convexity constant; use a smooth algorithm"
            )
        sched = params_strong(cfg.eps, obj.alpha, obj.beta, cfg.dim, D, cfg.m, cfg.mode)
        if cfg.budget is not None:
            sched = truncate_schedule(sched, cfg.budget)
        return sched
    p = params_smooth(cfg.eps, obj.beta, cfg.dim, D, cfg.m, cfg.mode)
    T = p.T
    if cfg.budget is not None:
        T = cfg.budget
    elif T > MAX_DEFAULT_ROUNDS:
        log.warning("theoretical budget %d rounds capped at %d", T, MAX_DEFAULT_ROUNDS)
        T = MAX_DEFAULT_ROUNDS
    return SmoothParams(
        eta=cfg.eta if cfg.eta is not None else p.eta,
        gamma=cfg.gamma if cfg.gamma is not None else p.gamma,
        T=T,
        m=p.m,
        mode=p.mode,
    )


def truncate_schedule(sched: PhaseSchedule, budget: int) -> PhaseSchedule:
    """Cut a schedule so its phases total at most ``budget`` rounds."""
    phases, left = [], budget
    for ph in sched.phases:
        if left <= 0:
            break
        phases.append(dataclasses.replace(ph, rounds=min(ph.rounds, left)))
        left -= phases[-1].rounds
    if not phases:
        phases = [dataclasses.replace(sched.phases[0], rounds=0)]
    return dataclasses.replace(sched, phases=tuple(phases))


def execute(cfg: ExperimentConfig) -> RunResult:
    """Run ``cfg`` in memory without writing anything."""
    cfg.validate()
    obj = make_objective(cfg.objective, cfg.dim)
    dom = parse_domain(cfg.domain, cfg.dim)
    w1 = initial_point(cfg)
    notes = []
    if obj.note:
        notes.append(f"{obj.name}: {obj.note}")
    if not dom.contains(w1):
        raise ParameterError(f"initial point is outside the domain {dom.describe()}")
    params = build_params(cfg, obj, w1)
    oracle_seed, algo_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    oracle = ComparisonOracle(obj, cfg.nu, np.random.default_rng(oracle_seed))
    rng = np.random.default_rng(algo_seed)
    delta = cfg.delta if cfg.nu > 0 else None
    if cfg.phased:
        trace = phased_run(cfg.mode, oracle, dom, w1, params, rng, delta)
    else:
        run = {"single": pngd_run, "batched": batched_ngd_run, "battling": battling_ngd_run}[cfg.mode]
        trace = run(oracle, dom, w1, params, rng, delta)
    for msg in trace.warnings + notes:
        log.info(msg)
    repeats = resample_count(cfg.nu, cfg.delta) if delta is not None else 1
    return RunResult(cfg, obj, trace, params, repeats=repeats, notes=notes)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run ``cfg`` and write its trace CSV to ``cfg.out`` when set."""
    result = execute(cfg)
    if cfg.out:
        result.path = write_trace_csv(result.trace, result.objective, cfg.out)
    return result


def rounds_to_eps(trace: Trace, obj: Objective, eps: float) -> int:
    """First round whose running-min suboptimality is ``<= eps``, else -1."""
    if obj.known_min_value is None:
        raise ParameterError(f"objective {obj.name!r} has no known minimum value")
    for rec in trace.records:
        if rec.f_runmin - obj.known_min_value <= eps:
            return rec.round
    return -1


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(trace: Trace, obj: Objective, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fmin = obj.known_min_value
    header = TRACE_HEADER if fmin is not None else TRACE_HEADER[:-1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in trace.records:
            row = [r.round, r.duel_queries, r.multiwise_queries, _fmt(r.f_w), _fmt(r.f_runmin)]
            if fmin is not None:
                row.append(_fmt(r.f_runmin - fmin))
            writer.writerow(row)
    return path


def read_trace_csv(path: Union[str, Path]) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _sweep_one(cfg: ExperimentConfig) -> tuple[int, int, int]:
    res = run_experiment(cfg)
    last = res.trace.records[-1]
    return res.rounds_to_eps(), last.duel_queries, last.multiwise_queries


def run_sweep(sweep: SweepConfig) -> Path:
    """Run every setting of ``sweep``; returns the path of ``summary.csv``."""
    settings = sweep.settings()
    out_dir = Path(sweep.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if sweep.jobs > 1 and len(settings) > 1:
        with ProcessPoolExecutor(max_workers=min(sweep.jobs, len(settings), os.cpu_count() or 1)) as ex:
            rows = list(ex.map(_sweep_one, settings))
    else:
        rows = [_sweep_one(cfg) for cfg in settings]
    header = SUMMARY_HEADER if sweep.key == "m" else ["nu"] + SUMMARY_HEADER
    path = out_dir / "summary.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for cfg, (rounds, duels, multi) in zip(settings, rows):
            row = [cfg.m, rounds, duels, multi]
            if sweep.key == "nu":
                row.insert(0, cfg.nu)
            writer.writerow(row)
    return path
