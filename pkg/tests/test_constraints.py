import itertools

import pytest
from hypothesis import given, settings, strategies as st

from robustsub.constraints import (
    Cardinality,
    ExplicitSystem,
    InfeasibleBase,
    PartitionMatroid,
    base_size_range,
    constraint_from_dict,
    verify_p_system,
)
from robustsub.model import GroundSetTooLarge, ValidationError


def test_cardinality_extensions():
    c = Cardinality(2)
    assert c.feasible_extensions((), 4) == frozenset(range(4))
    assert c.feasible_extensions(((0, 1),), 4) == frozenset({1, 2, 3})
    assert c.feasible_extensions([0, 1], 4) == frozenset()
    with pytest.raises(InfeasibleBase):
        c.feasible_extensions([0, 1, 2], 4)


def test_partition_matroid():
    pm = PartitionMatroid(((0, 1), (2, 3, 4)), (1, 2))
    assert pm.is_independent([0, 2, 3])
    assert not pm.is_independent([0, 1])
    assert pm.feasible_extensions([0], 5) == frozenset({2, 3, 4})
    assert pm.block_of(3) == 1
    with pytest.raises(ValidationError):
        PartitionMatroid(((0, 1), (1, 2)), (1, 1))
    with pytest.raises(ValidationError):
        PartitionMatroid(((0,),), (0,))


def test_items_outside_blocks_are_not_selectable():
    pm = PartitionMatroid(((0, 1),), (2,))
    assert not pm.is_independent([2])
    assert pm.feasible_extensions((), 3) == frozenset({0, 1})


def test_explicit_system_must_be_downward_closed():
    with pytest.raises(ValidationError):
        ExplicitSystem([(), (0, 1)], p=1)
    with pytest.raises(ValidationError):
        ExplicitSystem([(0,)], p=1)


def test_verify_cardinality_and_matroid():
    assert verify_p_system(Cardinality(2), 1, 5)
    assert verify_p_system(PartitionMatroid(((0, 1, 2), (3, 4)), (2, 1)), 1, 5)


def test_verify_two_matroid_intersection_is_a_2_system():
    a = PartitionMatroid(((0, 1), (2, 3)), (1, 1))
    b = PartitionMatroid(((0, 2), (1, 3)), (1, 1))
    inter = ExplicitSystem.intersection([a, b], 4)
    assert inter.p == 2
    assert verify_p_system(inter, 2, 4)


def test_verify_finds_a_violation():
    # bases of E are {0} and {1, 2}; 1 * 1 < 2
    sys = ExplicitSystem([(), (0,), (1,), (2,), (1, 2)], p=1)
    res = verify_p_system(sys, 1, 3)
    assert not res
    assert res.min_base == 1 and res.max_base == 2
    assert verify_p_system(sys, 2, 3)


def test_verify_refuses_large_ground_sets():
    with pytest.raises(GroundSetTooLarge):
        base_size_range(Cardinality(1), 21)


def test_constraint_roundtrip():
    for c in (Cardinality(3), PartitionMatroid(((0,), (1, 2)), (1, 1)), ExplicitSystem([(), (0,), (1,)], 1)):
        assert constraint_from_dict(c.to_dict()) == c
    with pytest.raises(ValidationError):
        constraint_from_dict({"type": "knapsack"})


def _naive_p(c, n):
    # max over R of (largest base / smallest base) by listing bases directly
    worst = 1.0
    for r in range(1, n + 1):
        for R in itertools.combinations(range(n), r):
            sizes = []
            for k in range(r + 1):
                for s in itertools.combinations(R, k):
                    if c.is_independent(s) and not any(c.is_independent(s + (x,)) for x in R if x not in s):
                        sizes.append(len(s))
            if min(sizes) > 0:
                worst = max(worst, max(sizes) / min(sizes))
    return worst


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=5, max_size=5), st.lists(st.integers(0, 2), min_size=5, max_size=5))
def test_bitmask_verification_matches_naive_base_listing(lab_a, lab_b):
    def pm(labels):
        blocks = [tuple(e for e in range(5) if labels[e] == z) for z in range(3)]
        blocks = [b for b in blocks if b]
        return PartitionMatroid(tuple(blocks), tuple(1 for _ in blocks))

    inter = ExplicitSystem.intersection([pm(lab_a), pm(lab_b)], 5)
    ratio = _naive_p(inter, 5)
    for p in (1, 2):
        assert bool(verify_p_system(inter, p, 5)) == (ratio <= p)
