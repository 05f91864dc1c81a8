"""Greedy adaptive policies run interactively against a hidden realization.

Every policy takes an :class:`Environment` that reveals the state of an item
once it is selected.  Ties in every argmax go to the lowest item id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .constraints import Cardinality, ConstraintSystem, PartitionMatroid
from .model import TIE_TOL, Instance, Partial, ValidationError, extend

# keeps floor(q*k) + ceil((1-q)*k) == k under float error, e.g. (1 - 0.7) * 10
_ROUND_SLACK = 1e-9


class InvalidEps(ValidationError):
    pass


class InvalidBeta(ValidationError):
    pass


class Environment:
    """Holds one fixed realization and reveals item states on request."""

    def __init__(self, instance: Instance, index: int):
        if not (0 <= index < instance.m):
            raise ValidationError(f"realization index {index} out of range [0, {instance.m})")
        self.instance = instance
        self.index = index
        self._phi = instance.realizations[index]
        self.reveals = 0

    def reveal(self, e: int) -> int:
        self.reveals += 1
        return self._phi[e]


@dataclass(frozen=True)
class PolicyRun:
    selected: tuple[int, ...]
    psi: Partial
    gains: tuple[float, ...]
    utility: float
    realization: int
    evaluations: int = 0
    phases: tuple[int, ...] = field(default=())

    @property
    def items(self) -> frozenset[int]:
        return frozenset(self.selected)

    def to_dict(self) -> dict:
        return {
            "realization": self.realization,
            "selected": list(self.selected),
            "observations": [list(p) for p in self.psi],
            "gains": list(self.gains),
            "utility": self.utility,
            "evaluations": self.evaluations,
            "phases": list(self.phases),
        }


def _argmax(values: np.ndarray, candidates: Iterable[int]) -> tuple[int, float] | None:
    cand = np.fromiter(candidates, dtype=np.int64)
    if len(cand) == 0:
        return None
    cand.sort()
    vals = values[cand]
    e = int(cand[np.flatnonzero(vals >= vals.max() - TIE_TOL)[0]])
    return e, float(values[e])


class _Trace:
    # accumulates one phase of a run
    def __init__(self, psi: Partial = ()):
        self.psi = psi
        self.selected: list[int] = []
        self.gains: list[float] = []
        self.evaluations = 0

    def step(self, inst: Instance, env: Environment, kind: str, candidates: Iterable[int]) -> bool:
        observed = {e for e, _ in self.psi}
        cand = [e for e in candidates if e not in observed]
        self.evaluations += len(cand)
        avg, wc = inst.marginals(self.psi)
        pick = _argmax(wc if kind == "wc" else avg, cand)
        if pick is None:
            return False
        e, gain = pick
        self.psi = extend(self.psi, e, env.reveal(e))
        self.selected.append(e)
        self.gains.append(gain)
        return True


def _finish(inst: Instance, env: Environment, traces: Sequence[_Trace]) -> PolicyRun:
    selected: list[int] = []
    gains: list[float] = []
    obs: dict[int, int] = {}
    phases = []
    for tr in traces:
        selected.extend(tr.selected)
        gains.extend(tr.gains)
        obs.update(dict(tr.psi))
        phases.append(len(tr.selected))
    return PolicyRun(
        selected=tuple(selected),
        psi=tuple(sorted(obs.items())),
        gains=tuple(gains),
        utility=inst.f(obs.keys(), env.index),
        realization=env.index,
        evaluations=sum(tr.evaluations for tr in traces),
        phases=tuple(phases),
    )


def wc_floor(q: float, k: int) -> int:
    return math.floor(q * k + _ROUND_SLACK)


def avg_ceil(q: float, k: int) -> int:
    return math.ceil((1.0 - q) * k - _ROUND_SLACK)


def _check_q(q: float):
    if not (0.0 <= q <= 1.0):
        raise ValidationError(f"q must lie in [0, 1], got {q}")


# --------------------------------------------------------------------------
# worst-case greedy


def run_wc_greedy_psystem(inst: Instance, c: ConstraintSystem, env: Environment) -> PolicyRun:
    """Select the feasible item of largest worst-case marginal until no item fits."""
    tr = _Trace()
    while True:
        feasible = c.feasible_extensions(tr.psi, inst.n)
        if not feasible or not tr.step(inst, env, "wc", feasible):
            break
    return _finish(inst, env, [tr])


def run_wc_greedy_cardinality(inst: Instance, k: int, budget: int, env: Environment) -> PolicyRun:
    if not (0 <= budget <= k <= inst.n):
        raise ValidationError(f"need 0 <= budget <= k <= n, got budget={budget}, k={k}, n={inst.n}")
    tr = _Trace()
    for _ in range(budget):
        tr.step(inst, env, "wc", range(inst.n))
    return _finish(inst, env, [tr])


def sample_size(n: int, k: int, eps: float) -> int:
    """|H| = min(n, ceil((n / k) * ln(1 / eps)))."""
    if not (0.0 < eps < 1.0):
        raise InvalidEps(f"eps must lie in (0, 1), got {eps}")
    if k < 1:
        raise ValidationError("k must be >= 1")
    return min(n, math.ceil(n / k * math.log(1.0 / eps)))


def run_stochastic_wc_greedy(
    inst: Instance, k: int, eps: float, env: Environment, rng: np.random.Generator | int | None = None
) -> PolicyRun:
    """k rounds; each maximizes the worst-case marginal over a uniform sample of E.

    The sample is drawn without replacement from the whole ground set, so a
    round whose sample holds only already-selected items selects nothing.
    """
    if not (1 <= k <= inst.n):
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={inst.n}")
    size = sample_size(inst.n, k, eps)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    tr = _Trace()
    for _ in range(k):
        h = rng.choice(inst.n, size=size, replace=False)
        tr.step(inst, env, "wc", h.tolist())
    return _finish(inst, env, [tr])


# --------------------------------------------------------------------------
# average-case greedy and hybrids


def run_avg_greedy(
    inst: Instance, budget: int, env: Environment, restrict: Iterable[int] | None = None
) -> PolicyRun:
    if budget < 0:
        raise ValidationError("budget must be non-negative")
    pool = sorted(set(restrict)) if restrict is not None else range(inst.n)
    tr = _Trace()
    for _ in range(budget):
        if not tr.step(inst, env, "avg", pool):
            break
    return _finish(inst, env, [tr])


def run_hybrid_cardinality(
    inst: Instance, k: int, env: Environment, q: float = 0.5, exclude_repeats: bool = False
) -> PolicyRun:
    """Worst-case greedy for floor(q*k) picks, then average greedy for ceil((1-q)*k).

    The second phase starts from an empty observation, so its marginals ignore
    what the first phase saw; its reveals still come from the true realization.
    With ``exclude_repeats`` the second phase may not pick first-phase items.
    """
    _check_q(q)
    if not (1 <= k <= inst.n):
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={inst.n}")
    first = _Trace()
    for _ in range(wc_floor(q, k)):
        first.step(inst, env, "wc", range(inst.n))
    taken = set(first.selected) if exclude_repeats else set()
    pool = [e for e in range(inst.n) if e not in taken]
    second = _Trace()
    for _ in range(avg_ceil(q, k)):
        if not second.step(inst, env, "avg", pool):
            break
    return _finish(inst, env, [first, second])


def _matroid_phase(inst: Instance, pm: PartitionMatroid, mode: str, q: float, env: Environment) -> _Trace:
    tr = _Trace()
    for block, limit in zip(pm.blocks, pm.limits):
        budget = wc_floor(q, limit) if mode == "wc" else avg_ceil(q, limit)
        for _ in range(budget):
            if not tr.step(inst, env, mode, block):
                break
    return tr


def run_matroid_greedy(inst: Instance, pm: PartitionMatroid, mode: str, q: float, env: Environment) -> PolicyRun:
    """Block-by-block greedy: floor(q*k_z) worst-case picks or ceil((1-q)*k_z) average picks."""
    if mode not in ("wc", "avg"):
        raise ValidationError(f"mode must be 'wc' or 'avg', got {mode!r}")
    _check_q(q)
    return _finish(inst, env, [_matroid_phase(inst, pm, mode, q, env)])


def run_hybrid_matroid(inst: Instance, pm: PartitionMatroid, env: Environment, q: float = 0.5) -> PolicyRun:
    _check_q(q)
    first = _matroid_phase(inst, pm, "wc", q, env)
    second = _matroid_phase(inst, pm, "avg", q, env)
    return _finish(inst, env, [first, second])


# --------------------------------------------------------------------------
# weighted trade-off


def optimal_q_cardinality(beta: float) -> float:
    """Large-k optimum of min{beta(1-e^-q), (1-beta)(1-e^-(1-q))}."""
    if not (0.0 < beta < 1.0):
        raise InvalidBeta(f"beta must lie in (0, 1), got {beta}")
    a = 2 * beta - 1
    x = (a + math.sqrt(a * a + 4 * beta * (1 - beta) / math.e)) / (2 * beta)
    return -math.log(x)


def optimal_q_matroid(beta: float) -> float:
    """Large-k optimum of min{beta/(1+1/q), (1-beta)/(1+1/(1-q))}."""
    if not (0.0 < beta < 1.0):
        raise InvalidBeta(f"beta must lie in (0, 1), got {beta}")
    return (1 - beta) / (beta + math.sqrt(3 * beta * beta - 3 * beta + 1))


# --------------------------------------------------------------------------
# descriptors

POLICY_NAMES = ("wc-psystem", "wc-card", "stoch-wc", "avg", "hybrid-card", "matroid-wc", "matroid-avg", "hybrid-matroid")

PolicyFn = Callable[[Instance, Environment], PolicyRun]


@dataclass(frozen=True)
class PolicySpec:
    """Parsed policy descriptor; calling it runs the policy on one environment."""

    policy: str
    constraint: ConstraintSystem
    k: int | None = None
    budget: int | None = None
    eps: float | None = None
    q: float = 0.5
    seed: int | None = None
    exclude_repeats: bool = False

    @property
    def deterministic(self) -> bool:
        return self.policy != "stoch-wc"

    def __call__(self, inst: Instance, env: Environment, rng=None) -> PolicyRun:
        p, c = self.policy, self.constraint
        if p == "wc-psystem":
            return run_wc_greedy_psystem(inst, c, env)
        if p == "wc-card":
            return run_wc_greedy_cardinality(inst, self.k, self.budget if self.budget is not None else self.k, env)
        if p == "stoch-wc":
            return run_stochastic_wc_greedy(inst, self.k, self.eps, env, rng if rng is not None else self.seed)
        if p == "avg":
            return run_avg_greedy(inst, self.budget if self.budget is not None else self.k, env)
        if p == "hybrid-card":
            return run_hybrid_cardinality(inst, self.k, env, self.q, self.exclude_repeats)
        if p == "matroid-wc":
            return run_matroid_greedy(inst, c, "wc", self.q, env)
        if p == "matroid-avg":
            return run_matroid_greedy(inst, c, "avg", self.q, env)
        if p == "hybrid-matroid":
            return run_hybrid_matroid(inst, c, env, self.q)
        raise ValidationError(f"unknown policy {p!r}")


def policy_from_dict(d: dict, constraint: ConstraintSystem) -> PolicySpec:
    name = d.get("policy")
    if name not in POLICY_NAMES:
        raise ValidationError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")
    k = d.get("k")
    if k is None and isinstance(constraint, Cardinality):
        k = constraint.k
    if name in ("wc-card", "stoch-wc", "avg", "hybrid-card") and k is None:
        raise ValidationError(f"policy {name!r} needs k")
    if name.startswith(("matroid", "hybrid-matroid")) and not isinstance(constraint, PartitionMatroid):
        raise ValidationError(f"policy {name!r} needs a partition-matroid constraint")
    beta = d.get("beta")
    if "q" in d:
        q = float(d["q"])
    elif beta is not None:
        q = optimal_q_matroid(float(beta)) if "matroid" in name else optimal_q_cardinality(float(beta))
    else:
        q = 0.5
    eps = d.get("eps")
    if name == "stoch-wc":
        if eps is None:
            raise ValidationError("policy 'stoch-wc' needs eps")
        if not (0.0 < float(eps) < 1.0):
            raise InvalidEps(f"eps must lie in (0, 1), got {eps}")
    return PolicySpec(
        policy=name,
        constraint=constraint,
        k=int(k) if k is not None else None,
        budget=int(d["budget"]) if "budget" in d else None,
        eps=float(eps) if eps is not None else None,
        q=q,
        seed=d.get("seed"),
        exclude_repeats=bool(d.get("hybrid_exclude_repeats", False)),
    )
