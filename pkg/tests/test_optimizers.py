import math

import numpy as np
import pytest

from duelopt.errors import ParameterError
from duelopt.harness import truncate_schedule
from duelopt.objectives import make_l2l1, make_quadratic, make_sinsum
from duelopt.optimizers import (
    SmoothParams,
    batched_ngd_run,
    battling_ngd_run,
    expected_queries,
    params_smooth,
    params_strong,
    phased_run,
    pngd_run,
)
from duelopt.oracles import ComparisonOracle, resample_count
from duelopt.querysets import extract_gradient_estimates
from duelopt.vectorspace import Domain

SQ2M1 = math.sqrt(2) - 1
RUNS = {"single": pngd_run, "batched": batched_ngd_run, "battling": battling_ngd_run}


def run(mode, obj, w1, p, seed=0, dom=None, nu=0.0, delta=None, callback=None):
    dom = dom or Domain.all_space(obj.dim)
    oracle = ComparisonOracle(obj, nu, np.random.default_rng(seed))
    tr = RUNS[mode](oracle, dom, w1, p, np.random.default_rng(seed + 1000), delta, callback)
    return tr, oracle


# --- parameter formulas -------------------------------------------------------


def test_batched_eta_example():
    p = params_smooth(0.04, 2, 16, 1.0, 4, "batched")
    assert p.eta == pytest.approx(4 * 0.2 / (20 * math.sqrt(32)), rel=1e-12)
    assert p.eta == pytest.approx(7.0711e-3, abs=1e-7)


def test_single_eta_is_batched_with_m1():
    single = params_smooth(0.04, 2, 16, 1.0, 4, "single")
    assert single.eta == params_smooth(0.04, 2, 16, 1.0, 1, "batched").eta
    assert single.m == 1


def test_battling_eta_example():
    p = params_smooth(0.04, 2, 16, 1.0, 8, "battling")
    assert p.ell == 3
    assert p.eta == pytest.approx(3 * 0.2 / (20 * math.sqrt(32)), rel=1e-12)


@pytest.mark.parametrize(
    "mode,m,k,denom",
    [
        ("single", 1, 1, lambda b, d, D: 480 * b * d * D**2),
        ("batched", 4, 4, lambda b, d, D: 960 * b * d * math.sqrt(d) * D**2),
        ("battling", 16, 4, lambda b, d, D: 960 * b * d * 4 * math.sqrt(d * 4) * D**2),
    ],
)
def test_gamma_and_budget_formulas(mode, m, k, denom):
    eps, beta, d, D = 0.3, 1.5, 10, 2.5
    p = params_smooth(eps, beta, d, D, m, mode)
    gamma = eps**1.5 / (denom(beta, d, D) * math.sqrt(math.log(480))) * math.sqrt(2 / beta)
    assert p.gamma == pytest.approx(gamma, rel=1e-12)
    assert p.T == math.ceil(400 * d * beta * D / (SQ2M1 * eps * k))


@pytest.mark.parametrize(
    "args",
    [
        (0.1, 2, 4, 1, 5, "batched"),  # m > d
        (0.1, 2, 4, 1, 1, "battling"),  # m < 2
        (0.1, 2, 2, 1, 8, "battling"),  # log2 m > d
        (0.0, 2, 4, 1, 2, "batched"),
        (0.1, -1, 4, 1, 2, "batched"),
        (0.1, 2, 4, 1, 2, "nope"),
    ],
)
def test_params_smooth_rejects(args):
    with pytest.raises(ParameterError):
        params_smooth(*args)


def test_strong_examples():
    assert params_strong(1 / 1024, 1, 2, 8, 1.0, 4, "batched").k_eps == 10
    s = params_strong(2, 2, 2, 8, 1.0, 4, "batched")
    assert s.k_eps == 0 and len(s.phases) == 1
    smooth = params_smooth(2, 2, 8, 1.0, 4, "batched")
    assert s.params(0) == smooth
    with pytest.raises(ParameterError):
        params_strong(0.1, 0, 2, 8, 1.0, 4, "batched")


def test_t_base_exact_constant():
    s = params_strong(0.01, 1, 2, 8, 1.0, 4, "batched")
    assert s.t_base == math.ceil(800 * 16 / SQ2M1) == 30902
    # the rounded constant 0.41421 gives one more round
    assert math.ceil(800 * 16 / 0.41421) == 30903


@pytest.mark.parametrize("mode,m", [("batched", 4), ("battling", 16)])
@pytest.mark.parametrize("D", [0.3, 1.0, 7.0])
def test_schedule_structure(mode, m, D):
    alpha, beta, d, eps = 2.0, 2.0, 8, 1e-4
    s = params_strong(eps, alpha, beta, d, D, m, mode)
    t_exact = 800 * d * beta / (SQ2M1 * alpha)
    assert s.k_eps == math.ceil(math.log2(alpha / eps)) == len(s.phases)
    assert s.phases[0].rounds == max(math.ceil(s.t_base * D), s.t_base)
    assert all(ph.rounds == 2 * s.t_base for ph in s.phases[1:])
    eps_k = [ph.eps for ph in s.phases]
    assert all(a > b for a, b in zip(eps_k, eps_k[1:]))
    dist = D
    for ph in s.phases:
        assert ph.dist == pytest.approx(dist, rel=1e-12)
        assert ph.eps == pytest.approx(400 * d * beta * dist / (SQ2M1 * ph.rounds), rel=1e-12)
        ref = params_smooth(ph.eps, beta, d, dist, m, mode)
        assert (ph.eta, ph.gamma) == (ref.eta, ref.gamma)
        dist = t_exact * dist / ph.rounds
    # each later phase halves the target
    for a, b in zip(eps_k[1:], eps_k[2:]):
        assert b / a == pytest.approx(0.5, rel=1e-3)


def test_expected_queries():
    assert expected_queries("single", 1, 10) == (20, 0)
    assert expected_queries("batched", 6, 10) == (70, 0)
    assert expected_queries("battling", 16, 10, repeats=3) == (30, 30)
    with pytest.raises(ParameterError):
        expected_queries("other", 1, 1)


# --- runs -----------------------------------------------------------------------


def test_pngd_reaches_eps_with_theorem_params():
    q = make_quadratic(2)
    p = params_smooth(0.01, q.beta, 2, q.distance_bound([1, 1]), 1, "single")
    budget = 20000
    assert budget <= p.T
    # the noiseless running minimum never increases, so hitting the target on
    # a prefix of the theorem budget certifies the full run
    tr, oracle = run("single", q, [1, 1], p.with_budget(budget))
    assert q(tr.final_point) <= 0.01
    assert tr.records[-1].f_runmin == q(tr.final_point)
    assert oracle.ledger.snapshot() == expected_queries("single", 1, budget)


def test_zero_budget_keeps_w1():
    q = make_quadratic(3)
    p = SmoothParams(eta=123.0, gamma=7.0, T=0, m=1, mode="single")
    tr, oracle = run("single", q, [1, 2, 3], p)
    np.testing.assert_array_equal(tr.final_point, [1, 2, 3])
    assert tr.rounds == 0 and len(tr.records) == 1
    assert oracle.ledger.snapshot() == (0, 0)


def test_batched_m1_equals_pngd():
    q = make_sinsum(5)
    p1 = SmoothParams(0.05, 1e-3, 300, 1, "single")
    pb = SmoothParams(0.05, 1e-3, 300, 1, "batched")
    a, _ = run("single", q, np.full(5, 0.5), p1, seed=3)
    b, _ = run("batched", q, np.full(5, 0.5), pb, seed=3)
    assert a.records == b.records
    np.testing.assert_array_equal(a.final_point, b.final_point)


def test_battling_m2_equals_pngd():
    q = make_quadratic(5)
    a, oa = run("single", q, np.full(5, 0.5), SmoothParams(0.05, 1e-3, 300, 1, "single"), seed=4)
    b, ob = run("battling", q, np.full(5, 0.5), SmoothParams(0.05, 1e-3, 300, 2, "battling"), seed=4)
    assert [r.f_runmin for r in a.records] == [r.f_runmin for r in b.records]
    assert [r.f_w for r in a.records] == [r.f_w for r in b.records]
    np.testing.assert_array_equal(a.final_point, b.final_point)
    # the ledgers differ only in how the direction query is charged
    assert oa.ledger.duel_queries == ob.ledger.duel_queries + ob.ledger.multiwise_queries


@pytest.mark.parametrize("mode", ["batched", "battling"])
def test_d32_m6_converges_within_theorem_budget(mode):
    q = make_quadratic(32)
    w1 = np.full(32, 0.5)
    target = 0.01 * q(w1)
    p = params_smooth(target, q.beta, 32, q.distance_bound(w1), 6, mode)
    budget = 30000
    assert budget <= p.T
    tr, oracle = run(mode, q, w1, p.with_budget(budget), seed=11)
    assert 0 < tr.rounds_to(target) <= budget
    assert oracle.ledger.snapshot() == expected_queries(mode, 6, budget)


def test_noisy_batched_resampling_converges():
    q = make_quadratic(32)
    w1 = np.full(32, 0.5)
    p = SmoothParams(0.01, 1e-4, 5000, 6, "batched")
    tr, oracle = run("batched", q, w1, p, nu=0.25, delta=0.01, seed=2)
    n = resample_count(0.25, 0.01)
    assert oracle.ledger.snapshot() == expected_queries("batched", 6, 5000, n)
    assert tr.records[-1].f_runmin <= 0.1 * q(w1)


def test_noisy_without_resampling_still_charges_one_per_duel():
    q = make_quadratic(8)
    tr, oracle = run("batched", q, np.ones(8), SmoothParams(0.01, 1e-4, 50, 4, "batched"), nu=0.2)
    assert oracle.ledger.snapshot() == expected_queries("batched", 4, 50)


def test_battling_brute_force_each_round():
    q = make_quadratic(8)
    seen = []

    def check(info):
        qs, win = info.query_set, info.winner
        vals = q.eval_many(qs.points)
        g = extract_gradient_estimates(qs, win)
        v = qs.vertex(win)
        for i, nb in enumerate(qs.neighbor_indices(win)):
            assert vals[win] < vals[nb]
            np.testing.assert_array_equal(g[i], -v[i] * qs.directions[i])
        np.testing.assert_allclose(info.g, g.mean(axis=0), atol=1e-15)
        seen.append(info.round)

    run("battling", q, np.ones(8), SmoothParams(0.02, 1e-3, 200, 16, "battling"), callback=check)
    assert seen == list(range(1, 201))


@pytest.mark.parametrize("mode,m", [("single", 1), ("batched", 4), ("battling", 8)])
@pytest.mark.parametrize("objective", [make_quadratic, make_l2l1, make_sinsum])
def test_run_invariants(mode, m, objective):
    obj = objective(6)
    dom = Domain.ball(np.full(6, 0.2), 1.0)
    steps = []
    tr, oracle = run(
        mode, obj, np.full(6, 0.5), SmoothParams(0.2, 1e-3, 300, m, mode), dom=dom,
        callback=lambda info: steps.append((info.w.copy(), np.linalg.norm(info.g))),
    )
    runmin = [r.f_runmin for r in tr.records]
    assert all(b <= a for a, b in zip(runmin, runmin[1:]))
    assert all(gn <= 1 + 1e-12 for _, gn in steps)
    assert all(dom.contains(w) for w, _ in steps)
    duels = [r.duel_queries for r in tr.records]
    assert all(b >= a for a, b in zip(duels, duels[1:]))
    assert runmin[-1] == pytest.approx(obj(tr.final_point), abs=0)
    assert runmin[-1] == min(r.f_w for r in tr.records)


def test_runs_are_deterministic():
    q = make_quadratic(8)
    p = SmoothParams(0.05, 1e-3, 200, 8, "battling")
    a, _ = run("battling", q, np.ones(8), p, seed=9, nu=0.1, delta=0.1)
    b, _ = run("battling", q, np.ones(8), p, seed=9, nu=0.1, delta=0.1)
    assert a.records == b.records


def test_run_rejects_bad_inputs():
    q = make_quadratic(4)
    with pytest.raises(ParameterError):
        run("batched", q, np.ones(4), SmoothParams(0.1, 0.1, 5, 1, "single"))
    with pytest.raises(ParameterError):
        run("batched", q, np.ones(4), SmoothParams(0.1, 0.1, 5, 6, "batched"))
    with pytest.raises(ParameterError):
        run("single", q, np.full(4, 3.0), SmoothParams(0.1, 0.1, 5, 1, "single"),
            dom=Domain.ball(np.zeros(4), 1.0))
    with pytest.raises(ParameterError):
        run("single", q, np.ones(3), SmoothParams(0.1, 0.1, 5, 1, "single"))
    with pytest.raises(ParameterError):
        SmoothParams(0.0, 0.1, 5, 1, "single")


# --- phased -----------------------------------------------------------------------


def _phased(obj, w1, sched, base, seed=0):
    oracle = ComparisonOracle(obj, 0.0, np.random.default_rng(seed))
    tr = phased_run(base, oracle, Domain.all_space(obj.dim), w1, sched, np.random.default_rng(seed + 1000))
    return tr, oracle


def test_single_phase_schedule_matches_base_run():
    q = make_quadratic(8)
    sched = params_strong(2.5, 2, 2, 8, 0.5, 4, "batched")
    assert len(sched.phases) == 1
    sched = truncate_schedule(sched, 500)
    a, _ = _phased(q, np.full(8, 0.25), sched, "batched", seed=1)
    b, _ = run("batched", q, np.full(8, 0.25), sched.params(0), seed=1)
    assert a.records == b.records


def test_truncated_schedule_is_prefix():
    q = make_quadratic(8)
    sched = params_strong(0.05, 2, 2, 8, 0.5, 4, "battling")
    # crosses the first phase boundary at t_base = 15451 rounds
    assert sched.phases[0].rounds == 15451
    full = truncate_schedule(sched, 20000)
    short = truncate_schedule(sched, 16000)
    a, _ = _phased(q, np.full(8, 0.25), full, "battling", seed=5)
    b, _ = _phased(q, np.full(8, 0.25), short, "battling", seed=5)
    assert a.records[: len(b.records)] == b.records


def test_phased_reaches_1e_3():
    q = make_quadratic(8)
    w1 = np.full(8, 0.25)
    sched = params_strong(1e-3, q.alpha, q.beta, 8, q.distance_bound(w1), 4, "batched")
    # prefix of the full schedule; the running minimum only decreases
    budget = 40000
    assert budget < sched.total_rounds
    tr, oracle = _phased(q, w1, truncate_schedule(sched, budget), "batched", seed=2)
    assert tr.records[-1].f_runmin <= 1e-3
    assert [r.round for r in tr.records] == list(range(budget + 1))
    assert oracle.ledger.snapshot() == expected_queries("batched", 4, budget)


def test_phased_warns_without_alpha():
    s = make_sinsum(4)
    sched = truncate_schedule(params_strong(0.5, 1, 1, 4, 1.0, 2, "batched"), 50)
    tr, _ = _phased(s, np.full(4, -1.0), sched, "batched")
    assert tr.warnings and "strong-convexity" in tr.warnings[0]


def test_phased_rejects_mismatched_base():
    q = make_quadratic(8)
    sched = params_strong(0.1, 2, 2, 8, 1.0, 4, "batched")
    with pytest.raises(ParameterError):
        _phased(q, np.ones(8), sched, "battling")
    with pytest.raises(ParameterError):
        _phased(q, np.ones(8), sched, "single")
