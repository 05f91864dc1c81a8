import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustsub.applications import counterexample
from robustsub.constraints import Cardinality, PartitionMatroid
from robustsub.model import ValidationError, deterministic_instance, dom
from robustsub.policies import (
    Environment,
    InvalidBeta,
    InvalidEps,
    avg_ceil,
    optimal_q_cardinality,
    optimal_q_matroid,
    policy_from_dict,
    run_avg_greedy,
    run_hybrid_cardinality,
    run_hybrid_matroid,
    run_matroid_greedy,
    run_stochastic_wc_greedy,
    run_wc_greedy_cardinality,
    run_wc_greedy_psystem,
    sample_size,
    wc_floor,
)

from helpers import small_active_learning


def test_environment_reveals_true_states():
    inst = counterexample()
    env = Environment(inst, 2)
    assert env.reveal(2) == 0
    assert env.reveals == 1
    with pytest.raises(ValidationError):
        Environment(inst, 3)


def test_wc_greedy_on_counterexample():
    inst = counterexample(0.1)
    runs = [run_wc_greedy_cardinality(inst, 2, 2, Environment(inst, i)) for i in range(3)]
    # e1 is the unique worst-case best first pick; then every item has wc gain 0 or eps
    assert all(r.selected[0] == 0 for r in runs)
    assert min(r.utility for r in runs) == pytest.approx(0.1, abs=1e-12)


def test_avg_greedy_on_counterexample_picks_e2_first():
    inst = counterexample(0.1)
    run = run_avg_greedy(inst, 1, Environment(inst, 0))
    assert run.selected == (1,)
    assert run.gains[0] == pytest.approx(2 / 3)


def test_budget_checks():
    inst = counterexample()
    with pytest.raises(ValidationError):
        run_wc_greedy_cardinality(inst, 2, 3, Environment(inst, 0))
    with pytest.raises(ValidationError):
        run_wc_greedy_cardinality(inst, 4, 2, Environment(inst, 0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_recorded_gain_dominates_every_other_candidate(seed, k):
    rng = np.random.default_rng(seed)
    inst = small_active_learning(rng)
    k = min(k, inst.n)
    i = int(rng.integers(inst.m))
    for kind, run in (
        ("wc", run_wc_greedy_cardinality(inst, k, k, Environment(inst, i))),
        ("avg", run_avg_greedy(inst, k, Environment(inst, i))),
    ):
        psi = ()
        for e, gain in zip(run.selected, run.gains):
            avg, wc = inst.marginals(psi)
            vals = wc if kind == "wc" else avg
            others = [vals[x] for x in range(inst.n) if x not in dom(psi)]
            assert gain >= max(others) - 1e-12
            psi = tuple(sorted(psi + ((e, inst.realizations[i][e]),)))
        assert run.psi == psi
        assert len(run.selected) == k


def test_psystem_greedy_fills_a_maximal_independent_set():
    rng = np.random.default_rng(3)
    inst = small_active_learning(rng, n_max=5)
    pm = PartitionMatroid((tuple(range(0, inst.n, 2)), tuple(range(1, inst.n, 2))), (1, 1))
    for i in range(inst.m):
        run = run_wc_greedy_psystem(inst, pm, Environment(inst, i))
        assert pm.is_independent(run.items)
        assert not pm.feasible_extensions(run.items, inst.n)


def test_sample_size_and_eps_validation():
    assert sample_size(20, 4, 0.1) == math.ceil(5 * math.log(10)) == 12
    assert sample_size(10, 2, 0.1) == 10
    assert sample_size(4, 1, 0.1) == 4
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(InvalidEps):
            sample_size(10, 2, bad)


def test_stochastic_greedy_evaluation_count_and_reproducibility():
    rng = np.random.default_rng(11)
    inst = small_active_learning(rng, n_max=5)
    k = 2
    a = run_stochastic_wc_greedy(inst, k, 0.5, Environment(inst, 0), 42)
    b = run_stochastic_wc_greedy(inst, k, 0.5, Environment(inst, 0), 42)
    assert a == b
    assert a.evaluations <= k * sample_size(inst.n, k, 0.5)


def test_stochastic_greedy_with_full_sample_is_the_deterministic_greedy():
    rng = np.random.default_rng(5)
    inst = small_active_learning(rng, n_max=5)
    k = min(2, inst.n)
    for i in range(inst.m):
        det = run_wc_greedy_cardinality(inst, k, k, Environment(inst, i))
        sto = run_stochastic_wc_greedy(inst, k, 1e-9, Environment(inst, i), 0)
        assert det.selected == sto.selected


@given(st.floats(0, 1), st.integers(0, 200))
def test_hybrid_budgets_sum_to_k(q, k):
    assert wc_floor(q, k) + avg_ceil(q, k) == k


def test_hybrid_phases():
    rng = np.random.default_rng(1)
    inst = small_active_learning(rng, n_max=5)
    k = min(3, inst.n)
    run = run_hybrid_cardinality(inst, k, Environment(inst, 0), q=0.5)
    assert run.phases[0] == wc_floor(0.5, k)
    assert run.phases[1] <= avg_ceil(0.5, k)
    only_wc = run_hybrid_cardinality(inst, k, Environment(inst, 0), q=1.0)
    assert only_wc.selected == run_wc_greedy_cardinality(inst, k, k, Environment(inst, 0)).selected
    only_avg = run_hybrid_cardinality(inst, k, Environment(inst, 0), q=0.0)
    assert only_avg.selected == run_avg_greedy(inst, k, Environment(inst, 0)).selected
    with pytest.raises(ValidationError):
        run_hybrid_cardinality(inst, k, Environment(inst, 0), q=1.5)


def test_hybrid_second_phase_ignores_first_phase_observations():
    inst = counterexample(0.1)
    run = run_hybrid_cardinality(inst, 2, Environment(inst, 0), q=0.5)
    # phase one takes e1 (best worst case), phase two restarts and takes e2
    assert run.selected == (0, 1)
    assert run.utility == pytest.approx(1.1)


def test_hybrid_repeats_shrink_the_union_unless_excluded():
    # one realization, so both greedy rules rank items the same way
    det = deterministic_instance(3, lambda s: len(s & {0}) * 2 + len(s - {0}))
    rep = run_hybrid_cardinality(det, 2, Environment(det, 0))
    assert rep.selected == (0, 0)
    assert rep.items == frozenset({0})
    excl = run_hybrid_cardinality(det, 2, Environment(det, 0), exclude_repeats=True)
    assert excl.items == frozenset({0, 1})


def test_matroid_phases_respect_block_budgets():
    rng = np.random.default_rng(9)
    inst = small_active_learning(rng, n_max=5)
    while inst.n < 4:
        inst = small_active_learning(rng, n_max=5)
    pm = PartitionMatroid(((0, 1), tuple(range(2, inst.n))), (2, 2))
    wc = run_matroid_greedy(inst, pm, "wc", 0.5, Environment(inst, 0))
    avg = run_matroid_greedy(inst, pm, "avg", 0.5, Environment(inst, 0))
    assert len(wc.selected) == 2 and len(avg.selected) == 2
    assert pm.is_independent(wc.items) and pm.is_independent(avg.items)
    both = run_hybrid_matroid(inst, pm, Environment(inst, 0))
    assert both.phases == (2, 2)
    assert set(both.selected) == wc.items | avg.items


def test_optimal_q_values():
    assert optimal_q_cardinality(0.5) == pytest.approx(0.5, abs=1e-12)
    assert optimal_q_matroid(0.5) == pytest.approx(0.5, abs=1e-12)
    for bad in (0.0, 1.0):
        with pytest.raises(InvalidBeta):
            optimal_q_cardinality(bad)
        with pytest.raises(InvalidBeta):
            optimal_q_matroid(bad)


@pytest.mark.parametrize("beta", [0.1, 0.25, 0.7, 0.9])
def test_optimal_q_balances_both_terms(beta):
    q = optimal_q_cardinality(beta)
    assert beta * (1 - math.exp(-q)) == pytest.approx((1 - beta) * (1 - math.exp(-(1 - q))), abs=1e-12)
    qm = optimal_q_matroid(beta)
    assert beta / (1 + 1 / qm) == pytest.approx((1 - beta) / (1 + 1 / (1 - qm)), abs=1e-12)


def test_optimal_q_at_quarter():
    # direct bisection on the crossing of the two terms
    lo, hi = 0.0, 1.0
    f = lambda q: 0.25 * (1 - math.exp(-q)) - 0.75 * (1 - math.exp(-(1 - q)))
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
    assert optimal_q_cardinality(0.25) == pytest.approx(lo, abs=1e-12)


def test_policy_descriptors():
    c = Cardinality(2)
    spec = policy_from_dict({"policy": "hybrid-card", "beta": 0.25}, c)
    assert spec.k == 2
    assert spec.q == pytest.approx(optimal_q_cardinality(0.25))
    pm = PartitionMatroid(((0,), (1, 2)), (1, 1))
    assert policy_from_dict({"policy": "hybrid-matroid", "beta": 0.25}, pm).q == pytest.approx(optimal_q_matroid(0.25))
    with pytest.raises(ValidationError):
        policy_from_dict({"policy": "random"}, c)
    with pytest.raises(ValidationError):
        policy_from_dict({"policy": "stoch-wc"}, c)
    with pytest.raises(ValidationError):
        policy_from_dict({"policy": "matroid-wc"}, c)
    inst = counterexample()
    run = policy_from_dict({"policy": "wc-card"}, c)(inst, Environment(inst, 0))
    assert len(run.selected) == 2
