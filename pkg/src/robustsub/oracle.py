"""Exact optimal policies by backward induction, and exact policy evaluation.

Only meant for desk-scale instances; both solvers refuse when the estimated
number of (partial realization, branch) pairs exceeds a cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import Cardinality, ConstraintSystem
from .model import (
    TIE_TOL,
    Instance,
    Partial,
    SearchSpaceTooLarge,
    ValidationError,
    dom,
    extend,
)
from .policies import Environment, PolicyRun, run_stochastic_wc_greedy, sample_size

MAX_SUPPORT = 64
MAX_NODES = 10**7


class DivisionByZeroOptimum(ArithmeticError):
    pass


@dataclass
class TreeNode:
    """One node of a deterministic policy: the item to select (None = stop) and
    one child per possible state of that item."""

    psi: Partial
    item: int | None
    value: float
    children: dict[int, "TreeNode"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "observations": [list(p) for p in self.psi],
            "item": self.item,
            "value": self.value,
            "children": {str(o): ch.to_dict() for o, ch in sorted(self.children.items())},
        }

    def size(self) -> int:
        return 1 + sum(ch.size() for ch in self.children.values())


def estimate_search_space(inst: Instance, c: ConstraintSystem, cap: int = MAX_NODES) -> int:
    """Upper bound on (reachable psi) x (branching) over independent domains.

    Stops counting once the bound passes ``cap``.
    """
    n, m, K = inst.n, inst.m, inst.num_states
    if isinstance(c, Cardinality):
        return sum(math.comb(n, j) * min(K**j, m) * max(1, n - j) for j in range(min(c.k, n) + 1))
    total = 0
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for s in frontier:
            total += min(K ** len(s), m) * max(1, n - len(s))
            if total > cap:
                return total
            start = max(s) + 1 if s else 0
            for e in range(start, n):
                t = s | {e}
                if c.is_independent(t):
                    nxt.append(t)
        frontier = nxt
    return total


def _guard(inst: Instance, c: ConstraintSystem, max_support: int, max_nodes: int):
    if inst.m > max_support:
        raise SearchSpaceTooLarge(f"support has {inst.m} realizations, oracle cap is {max_support}")
    est = estimate_search_space(inst, c, max_nodes)
    if est > max_nodes:
        raise SearchSpaceTooLarge(f"estimated search space {est} exceeds cap {max_nodes}")


def _solve(inst: Instance, c: ConstraintSystem, worst: bool) -> TreeNode:
    memo: dict[Partial, TreeNode] = {}

    def value(psi: Partial) -> TreeNode:
        node = memo.get(psi)
        if node is not None:
            return node
        idx = inst.consistent_indices(psi)
        here = inst.utility_vector(dom(psi))[idx]
        if worst:
            stop = float(here.min())
        else:
            stop = inst.f_on_partial(dom(psi), psi)
        best = TreeNode(psi, None, stop)
        for e in sorted(c.feasible_extensions(psi, inst.n)):
            probs = inst.state_probabilities(e, psi)
            children = {o: value(extend(psi, e, o)) for o in sorted(probs)}
            if worst:
                v = min(ch.value for ch in children.values())
            else:
                v = math.fsum(probs[o] * ch.value for o, ch in children.items())
            # stop wins exact ties, lower item ids win ties among items
            if v > best.value + TIE_TOL:
                best = TreeNode(psi, e, v, children)
        memo[psi] = best
        return best

    return value(())


def opt_worst_case(
    inst: Instance, c: ConstraintSystem, *, max_support: int = MAX_SUPPORT, max_nodes: int = MAX_NODES
) -> tuple[float, TreeNode]:
    """max over deterministic policies of min over realizations of f(E(pi, phi), phi).

    Nature picks each revealed state adversarially among the states still
    consistent with some support realization.
    """
    _guard(inst, c, max_support, max_nodes)
    root = _solve(inst, c, worst=True)
    return root.value, root


def opt_average_case(
    inst: Instance, c: ConstraintSystem, *, max_support: int = MAX_SUPPORT, max_nodes: int = MAX_NODES
) -> tuple[float, TreeNode]:
    """max over deterministic policies of E[f(E(pi, Phi), Phi)].

    The returned value is the optimal tree's expected utility summed with
    ``math.fsum`` over the support, so it does not depend on the order in
    which backward induction accumulated it.
    """
    _guard(inst, c, max_support, max_nodes)
    root = _solve(inst, c, worst=False)
    utils = [TreePolicy(root)(inst, Environment(inst, i)).utility for i in range(inst.m)]
    return math.fsum(inst.probs * np.array(utils)), root


class TreePolicy:
    """Follows a compiled decision tree against an environment."""

    def __init__(self, root: TreeNode):
        self.root = root

    def __call__(self, inst: Instance, env: Environment) -> PolicyRun:
        node = self.root
        psi: Partial = ()
        selected, gains = [], []
        while node.item is not None:
            e = node.item
            gains.append(inst.wc_marginal(e, psi))
            o = env.reveal(e)
            psi = extend(psi, e, o)
            selected.append(e)
            node = node.children[o]
        return PolicyRun(tuple(selected), psi, tuple(gains), inst.f(selected, env.index), env.index, 0, (len(selected),))


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class RobustnessReport:
    f_wc: float
    f_avg: float
    opt_wc: float
    opt_avg: float
    wc_ratio: float | None
    avg_ratio: float | None
    alpha: float | None
    beta: float | None = None
    alpha_beta: float | None = None
    feasible: bool = True
    undefined_ratios: bool = False
    runs: tuple[PolicyRun, ...] = ()

    def to_dict(self, with_runs: bool = False) -> dict:
        d = {
            "f_wc": self.f_wc,
            "f_avg": self.f_avg,
            "opt_wc": self.opt_wc,
            "opt_avg": self.opt_avg,
            "wc_ratio": self.wc_ratio,
            "avg_ratio": self.avg_ratio,
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_beta": self.alpha_beta,
            "feasible": self.feasible,
            "undefined_ratios": self.undefined_ratios,
        }
        if with_runs:
            d["runs"] = [r.to_dict() for r in self.runs]
        return d


def run_all(inst: Instance, policy: Callable[[Instance, Environment], PolicyRun]) -> list[PolicyRun]:
    """Run a deterministic policy once against every support realization."""
    return [policy(inst, Environment(inst, i)) for i in range(inst.m)]


def policy_values(inst: Instance, runs) -> tuple[float, float]:
    """(f_wc, f_avg) of a list of runs, one per support realization."""
    utils = np.array([r.utility for r in runs])
    return float(utils.min()), math.fsum(inst.probs * utils)


def eval_exact(
    inst: Instance,
    c: ConstraintSystem,
    policy: Callable[[Instance, Environment], PolicyRun],
    beta: float | None = None,
    optima: tuple[float, float] | None = None,
    strict: bool = False,
    **caps,
) -> RobustnessReport:
    """Exact f_wc, f_avg and robustness ratios of a deterministic policy.

    ``optima`` = (OPT_wc, OPT_avg) skips the oracle when already known.
    """
    runs = run_all(inst, policy)
    f_wc, f_avg = policy_values(inst, runs)
    feasible = all(c.is_independent(r.items) for r in runs)
    if optima is None:
        optima = (opt_worst_case(inst, c, **caps)[0], opt_average_case(inst, c, **caps)[0])
    opt_wc, opt_avg = optima
    undefined = opt_wc <= 0 or opt_avg <= 0
    if undefined and strict:
        raise DivisionByZeroOptimum(f"optimum is zero (OPT_wc={opt_wc}, OPT_avg={opt_avg})")
    wc_ratio = f_wc / opt_wc if opt_wc > 0 else None
    avg_ratio = f_avg / opt_avg if opt_avg > 0 else None
    alpha = min(wc_ratio, avg_ratio) if not undefined else None
    alpha_beta = None
    if beta is not None and not undefined:
        if not (0.0 < beta < 1.0):
            raise ValidationError(f"beta must lie in (0, 1), got {beta}")
        alpha_beta = min(beta * wc_ratio, (1 - beta) * avg_ratio)
    return RobustnessReport(
        f_wc, f_avg, opt_wc, opt_avg, wc_ratio, avg_ratio, alpha, beta, alpha_beta, feasible, undefined, tuple(runs)
    )


@dataclass(frozen=True)
class ExpectedWorstCase:
    estimate: float
    half_width: float
    means: tuple[float, ...]
    worst: int
    max_evaluations: int
    sample_size: int

    def __iter__(self):
        yield self.estimate
        yield self.half_width


def eval_expected_wc(inst: Instance, k: int, eps: float, runs: int = 1000, seed: int = 0) -> ExpectedWorstCase:
    """Monte-Carlo estimate of min over realizations of E[f] for the sampled greedy.

    Run r uses the generator seeded with ``[seed, r]`` for every realization
    (common random numbers).  The half-width is a 95% normal interval on the
    mean of the minimizing realization.
    """
    if runs < 30:
        raise ValidationError("need at least 30 runs for the normal approximation")
    means, sds = [], []
    max_evals = 0
    for i in range(inst.m):
        vals = np.empty(runs)
        for r in range(runs):
            run = run_stochastic_wc_greedy(inst, k, eps, Environment(inst, i), np.random.default_rng([seed, r]))
            vals[r] = run.utility
            max_evals = max(max_evals, run.evaluations)
        means.append(float(vals.mean()))
        sds.append(float(vals.std(ddof=1)))
    worst = int(np.argmin(means))
    hw = 1.96 * sds[worst] / math.sqrt(runs)
    return ExpectedWorstCase(means[worst], hw, tuple(means), worst, max_evals, sample_size(inst.n, k, eps))
