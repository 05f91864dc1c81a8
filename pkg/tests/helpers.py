"""Independent reference computations shared by the tests.

Nothing here reuses the oracle or the marginal code: optima come from
listing every deterministic decision tree and running each one against every
support realization.
"""
import itertools
import math

import numpy as np

from robustsub.applications import random_hypothesis_space, build_active_learning
from robustsub.model import Instance, Prior, TableUtility


def all_trees(n, num_states, feasible, selected=()):
    """Every deterministic policy as a nested tree.

    A tree is None (stop) or (item, children) with one subtree per state.
    Branches exist for every state in the alphabet, reachable or not.
    """
    yield None
    for e in range(n):
        if e in selected or not feasible(selected + (e,)):
            continue
        subs = list(all_trees(n, num_states, feasible, selected + (e,)))
        for combo in itertools.product(subs, repeat=num_states):
            yield (e, combo)


def tree_utilities(inst, tree):
    out = []
    for i, phi in enumerate(inst.realizations):
        node, chosen = tree, []
        while node is not None:
            e, children = node
            chosen.append(e)
            node = children[phi[e]]
        row = inst.states[i : i + 1]
        out.append(float(inst.utility.evaluate(tuple(sorted(chosen)), row)[0]))
    return np.array(out)


def brute_force_optima(inst, feasible):
    """(OPT_wc, OPT_avg) by enumerating all decision trees."""
    best_wc, best_avg = -math.inf, -math.inf
    for tree in all_trees(inst.n, inst.num_states, feasible):
        u = tree_utilities(inst, tree)
        best_wc = max(best_wc, float(u.min()))
        best_avg = max(best_avg, math.fsum(inst.probs * u))
    return best_wc, best_avg


def best_subset(n, fn, feasible):
    return max(fn(frozenset(s)) for r in range(n + 1) for s in itertools.combinations(range(n), r) if feasible(s))


def random_table_instance(rng, n, num_states=2, support=None):
    """Arbitrary non-negative utility table over a random support."""
    grid = list(itertools.product(range(num_states), repeat=n))
    m = support or int(rng.integers(1, len(grid) + 1))
    pick = rng.choice(len(grid), size=min(m, len(grid)), replace=False)
    reals = [grid[i] for i in sorted(pick)]
    raw = 1.0 - rng.random(len(reals))
    prior = Prior(tuple(reals), tuple((raw / raw.sum()).tolist()))
    rows = {}
    for r in range(n + 1):
        for s in itertools.combinations(range(n), r):
            rows[s] = np.round(rng.random(len(reals)) * 3, 3).tolist() if s else [0.0] * len(reals)
    return Instance(n, num_states, prior, TableUtility(reals, rows))


def small_active_learning(rng, n_max=5, h_max=12, labels=2):
    n = int(rng.integers(2, n_max + 1))
    h = int(rng.integers(2, h_max + 1))
    return build_active_learning(random_hypothesis_space(rng, n, h, labels))


ACCEPTANCE_LINES = []


def record(number, title, ok, detail=""):
    """Remember and print one acceptance verdict line."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok
