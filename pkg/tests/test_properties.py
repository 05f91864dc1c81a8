import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustsub.applications import (
    build_active_learning,
    build_stochastic_coverage,
    counterexample,
    HypothesisSpace,
)
from robustsub.model import Instance, Prior, SearchSpaceTooLarge, TableUtility, deterministic_instance
from robustsub.properties import (
    check_adaptive_monotone,
    check_adaptive_submodular,
    check_minimal_dependency,
    check_pointwise,
    check_prop2_implication,
    check_state_set_stability,
    check_wc_monotone,
    check_wc_submodular,
    count_reachable,
    reachable_partials,
    run_checks,
)

from helpers import random_table_instance, small_active_learning


def _psi(w):
    return tuple(tuple(p) for p in w)


def test_counterexample_reports():
    inst = counterexample(0.1)
    rep = check_wc_submodular(inst)
    assert not rep
    assert rep.witness == {"psi": [], "psi_prime": [[0, 0]], "item": 1, "values": [0.0, 1.0]}
    assert check_wc_monotone(inst)
    assert check_pointwise(inst)
    assert check_minimal_dependency(inst)
    stab = check_state_set_stability(inst)
    assert not stab
    assert stab.witness["states"] == [1] and stab.witness["prior_states"] == [0, 1]
    imp = check_prop2_implication(inst)
    assert imp and imp.details["vacuous"]


def test_witness_reverifies_through_the_model():
    inst = counterexample(0.1)
    w = check_wc_submodular(inst).witness
    before = inst.wc_marginal(w["item"], _psi(w["psi"]))
    after = inst.wc_marginal(w["item"], _psi(w["psi_prime"]))
    assert after > before + 1e-9
    assert [before, after] == pytest.approx(w["values"])


def test_reachable_partials_are_exactly_the_consistent_ones():
    inst = counterexample()
    got = reachable_partials(inst)
    brute = []
    for r in range(4):
        for items in itertools.combinations(range(3), r):
            for states in itertools.product(range(2), repeat=r):
                psi = tuple(zip(items, states))
                if any(all(phi[e] == o for e, o in psi) for phi in inst.realizations):
                    brute.append(psi)
    assert sorted(got) == sorted(brute)
    assert len(got) == count_reachable(inst)
    for psi in got:
        inst.conditional_distribution(psi)
    with pytest.raises(SearchSpaceTooLarge):
        reachable_partials(inst, cap=5)


def test_active_learning_passes_all_four():
    rng = np.random.default_rng(0)
    for _ in range(10):
        inst = small_active_learning(rng, n_max=5, labels=3)
        for rep in run_checks(inst, ["wc-submodular", "wc-monotone", "adaptive-submodular", "adaptive-monotone"]):
            assert rep, rep.to_json()


def test_modular_utility_with_independent_states_passes():
    # f(S, phi) = sum of w(e, phi(e)) over S
    w = np.array([[1.0, 3.0], [2.0, 0.5], [0.0, 4.0]])
    items = [([[0], [1]], [0.3, 0.7]), ([[2], [3]], [0.5, 0.5]), ([[4], [5]], [0.9, 0.1])]
    inst = build_stochastic_coverage(6, items, weights=w.reshape(-1).tolist())
    assert check_wc_submodular(inst)
    assert check_state_set_stability(inst)
    imp = check_prop2_implication(inst)
    assert imp and not imp.details["vacuous"]


def _planted(rows, reals=((0,), (1,)), n=1):
    return Instance(n, 2, Prior.uniform(reals), TableUtility(reals, rows))


def test_planted_negative_marginal():
    reals = ((0, 0), (1, 1))
    rows = {(): [0, 0], (0,): [1, 1], (1,): [1, 1], (0, 1): [0.5, 1]}
    inst = _planted(rows, reals, 2)
    rep = check_wc_monotone(inst)
    assert not rep
    assert rep.witness["psi"] == [[0, 0]] and rep.witness["item"] == 1
    assert not check_adaptive_monotone(inst)


def test_planted_adaptive_submodularity_violation():
    inst = deterministic_instance(2, lambda s: 2.0 if len(s) == 2 else 0.0)
    rep = check_adaptive_submodular(inst)
    assert not rep
    assert rep.witness["values"] == [0.0, 2.0]
    pw = check_pointwise(inst)
    assert not pw and pw.details["violated"] == "submodular"
    assert check_prop2_implication(inst).details["vacuous"]


def test_planted_minimal_dependency_violation():
    # f({0}) reads the state of item 1
    reals = ((0, 0), (0, 1))
    rows = {(): [0, 0], (0,): [1, 2], (1,): [1, 1], (0, 1): [2, 2]}
    inst = _planted(rows, reals, 2)
    rep = check_minimal_dependency(inst)
    assert not rep
    assert rep.witness["psi"] == [[0, 0]]
    assert rep.witness["values"] == [1.0, 2.0]


def test_single_state_alphabet_is_stable():
    inst = deterministic_instance(3, lambda s: float(len(s)))
    assert check_state_set_stability(inst)


def test_report_json():
    rep = check_wc_submodular(counterexample())
    line = rep.to_json()
    assert '"status": "FAIL"' in line and '"property": "wc-submodular"' in line


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_adjacent_and_all_pairs_sweeps_agree(seed, n):
    rng = np.random.default_rng(seed)
    inst = random_table_instance(rng, n)
    for check in (check_wc_submodular, check_adaptive_submodular, check_pointwise):
        assert bool(check(inst, mode="adjacent")) == bool(check(inst, mode="all-pairs"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_wc_monotone_implies_adaptive_monotone(seed, n):
    rng = np.random.default_rng(seed)
    inst = random_table_instance(rng, n)
    if check_wc_monotone(inst):
        assert check_adaptive_monotone(inst)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_failure_witnesses_reverify(seed):
    rng = np.random.default_rng(seed)
    inst = random_table_instance(rng, 3)
    for check, which in ((check_wc_submodular, 1), (check_adaptive_submodular, 0)):
        rep = check(inst)
        if rep:
            continue
        w = rep.witness
        a = inst.marginals(_psi(w["psi"]))[which][w["item"]]
        b = inst.marginals(_psi(w["psi_prime"]))[which][w["item"]]
        assert b > a + 1e-9


def test_merged_duplicate_hypotheses_keep_properties():
    labels = np.array([[0, 1], [0, 1], [1, 0], [1, 1]])
    inst = build_active_learning(HypothesisSpace(labels, np.array([0.2, 0.3, 0.1, 0.4])))
    assert inst.m == 3
    assert check_wc_submodular(inst) and check_adaptive_submodular(inst)
