"""Exhaustive checkers for the structural properties the guarantees rely on.

Every checker sweeps all reachable partial realizations (those consistent
with at least one support realization) and reports the first violation in
a deterministic order, so reports are run-independent.

Two sweep modes are offered for the marginal-based properties:

* ``adjacent`` compares psi with each one-step extension psi + (e', o').
  Since every restriction of a reachable psi is reachable, any violating pair
  psi <= psi' yields a violating adjacent pair along the chain between them.
* ``all-pairs`` compares psi with every reachable psi' that contains it.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import TOL, GroundSetTooLarge, Instance, Partial, SearchSpaceTooLarge, dom, extend

MAX_PARTIALS = 10**6
MAX_POINTWISE_N = 16
MODES = ("adjacent", "all-pairs")


@dataclass(frozen=True)
class PropertyReport:
    name: str
    passed: bool
    checked: int
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        d = {"property": self.name, "status": self.status, "checked": self.checked, "witness": self.witness}
        if self.details:
            d["details"] = self.details
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _psi_json(psi: Partial) -> list[list[int]]:
    return [[e, o] for e, o in psi]


def count_reachable(inst: Instance) -> int:
    total = 0
    for r in range(inst.n + 1):
        for items in itertools.combinations(range(inst.n), r):
            total += len(np.unique(inst.states[:, list(items)], axis=0)) if items else 1
    return total


def reachable_partials(inst: Instance, cap: int = MAX_PARTIALS) -> list[Partial]:
    """All reachable partial realizations, ordered by (size, lexicographic)."""
    out: list[Partial] = []
    for r in range(inst.n + 1):
        for items in itertools.combinations(range(inst.n), r):
            if not items:
                out.append(())
                continue
            for row in np.unique(inst.states[:, list(items)], axis=0):
                out.append(tuple(zip(items, (int(o) for o in row))))
            if len(out) > cap:
                raise SearchSpaceTooLarge(f"more than {cap} reachable partial realizations")
    out.sort(key=lambda p: (len(p), p))
    return out


def _children(inst: Instance, psi: Partial):
    observed = set(dom(psi))
    for e in range(inst.n):
        if e in observed:
            continue
        for o in sorted(inst.possible_states(e, psi)):
            yield extend(psi, e, o)


def _descendants(inst: Instance, psi: Partial) -> list[Partial]:
    """Reachable strict supersets of psi, ordered by (size, lexicographic)."""
    seen: set[Partial] = set()
    frontier = [psi]
    while frontier:
        nxt = []
        for p in frontier:
            for ch in _children(inst, p):
                if ch not in seen:
                    seen.add(ch)
                    nxt.append(ch)
        frontier = nxt
    return sorted(seen, key=lambda p: (len(p), p))


def _diminishing(inst: Instance, name: str, which: int, mode: str, tol: float, cap: int) -> PropertyReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    checked = 0
    for psi in reachable_partials(inst, cap):
        before = inst.marginals(psi)[which]
        larger = _children(inst, psi) if mode == "adjacent" else _descendants(inst, psi)
        for psi2 in larger:
            after = inst.marginals(psi2)[which]
            live = ~np.isnan(after)
            checked += int(live.sum())
            bad = np.flatnonzero(live & (after > before + tol))
            if len(bad):
                e = int(bad[0])
                witness = {
                    "psi": _psi_json(psi),
                    "psi_prime": _psi_json(psi2),
                    "item": e,
                    "values": [float(before[e]), float(after[e])],
                }
                return PropertyReport(name, False, checked, witness)
    return PropertyReport(name, True, checked)


def _nonnegative(inst: Instance, name: str, which: int, tol: float, cap: int) -> PropertyReport:
    checked = 0
    for psi in reachable_partials(inst, cap):
        gains = inst.marginals(psi)[which]
        live = ~np.isnan(gains)
        checked += int(live.sum())
        bad = np.flatnonzero(live & (gains < -tol))
        if len(bad):
            e = int(bad[0])
            return PropertyReport(name, False, checked, {"psi": _psi_json(psi), "item": e, "values": [float(gains[e])]})
    return PropertyReport(name, True, checked)


def check_wc_submodular(inst: Instance, mode: str = "adjacent", tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    """wc_marginal(e, psi) >= wc_marginal(e, psi') for reachable psi <= psi', e outside dom(psi')."""
    return _diminishing(inst, "wc-submodular", 1, mode, tol, cap)


def check_adaptive_submodular(inst: Instance, mode: str = "adjacent", tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    return _diminishing(inst, "adaptive-submodular", 0, mode, tol, cap)


def check_wc_monotone(inst: Instance, tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    return _nonnegative(inst, "wc-monotone", 1, tol, cap)


def check_adaptive_monotone(inst: Instance, tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    return _nonnegative(inst, "adaptive-monotone", 0, tol, cap)


def _subset_table(inst: Instance) -> np.ndarray:
    """f(S, phi) for every bitmask S (rows) and support realization (columns)."""
    n = inst.n
    if n > MAX_POINTWISE_N:
        raise GroundSetTooLarge(f"pointwise check enumerates 2^n subsets, needs n <= {MAX_POINTWISE_N}")
    table = np.empty((1 << n, inst.m))
    for mask in range(1 << n):
        table[mask] = inst.utility_vector(e for e in range(n) if mask >> e & 1)
    return table


def _items(mask: int) -> list[int]:
    return [e for e in range(mask.bit_length()) if mask >> e & 1]


def check_pointwise(inst: Instance, mode: str = "adjacent", tol: float = TOL) -> PropertyReport:
    """f(., phi) is monotone and submodular for every support realization phi.

    Adjacent mode uses the local characterization
    f(S+e) - f(S) >= f(S+e'+e) - f(S+e') for e, e' outside S, which is
    equivalent to diminishing returns over all pairs E1 <= E2.
    """
    name = "pointwise"
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    n = inst.n
    table = _subset_table(inst)
    checked = 0
    for mask in range(1 << n):
        for e in range(n):
            if mask >> e & 1:
                continue
            gain = table[mask | 1 << e] - table[mask]
            checked += inst.m
            bad = np.flatnonzero(gain < -tol)
            if len(bad):
                j = int(bad[0])
                w = {"realization": j, "set": _items(mask), "item": e, "values": [float(table[mask, j]), float(table[mask | 1 << e, j])]}
                return PropertyReport(name, False, checked, w, {"violated": "monotone"})
            if mode == "adjacent":
                supersets = [mask | 1 << x for x in range(n) if x != e and not mask >> x & 1]
            else:
                rest = [x for x in range(n) if x != e and not mask >> x & 1]
                supersets = [mask | sum(1 << x for x in extra) for r in range(1, len(rest) + 1) for extra in itertools.combinations(rest, r)]
            for big in supersets:
                later = table[big | 1 << e] - table[big]
                checked += inst.m
                bad = np.flatnonzero(later > gain + tol)
                if len(bad):
                    j = int(bad[0])
                    w = {
                        "realization": j,
                        "set": _items(mask),
                        "superset": _items(big),
                        "item": e,
                        "values": [float(gain[j]), float(later[j])],
                    }
                    return PropertyReport(name, False, checked, w, {"violated": "submodular"})
    return PropertyReport(name, True, checked)


def check_minimal_dependency(inst: Instance, tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    """f(dom(psi), phi) takes one value across all phi consistent with psi."""
    name = "minimal-dependency"
    checked = 0
    budget = cap
    for r in range(inst.n + 1):
        for items in itertools.combinations(range(inst.n), r):
            vals = inst.utility_vector(items)
            if items:
                keys, inv = np.unique(inst.states[:, list(items)], axis=0, return_inverse=True)
                inv = inv.reshape(-1)
            else:
                keys, inv = np.zeros((1, 0), dtype=np.int64), np.zeros(inst.m, dtype=np.int64)
            budget -= len(keys)
            if budget < 0:
                raise SearchSpaceTooLarge(f"more than {cap} reachable partial realizations")
            hi = np.full(len(keys), -np.inf)
            lo = np.full(len(keys), np.inf)
            np.maximum.at(hi, inv, vals)
            np.minimum.at(lo, inv, vals)
            checked += inst.m
            bad = np.flatnonzero(hi - lo > tol)
            if len(bad):
                g = int(bad[0])
                rows = np.flatnonzero(inv == g)
                i = int(rows[np.argmin(vals[rows])])
                j = int(rows[np.argmax(vals[rows])])
                psi = tuple(zip(items, (int(o) for o in keys[g])))
                w = {"psi": _psi_json(psi), "realizations": [i, j], "values": [float(vals[i]), float(vals[j])]}
                return PropertyReport(name, False, checked, w)
    return PropertyReport(name, True, checked)


def check_state_set_stability(inst: Instance, cap: int = MAX_PARTIALS) -> PropertyReport:
    """possible_states(e, psi) equals possible_states(e, ()) for every reachable psi."""
    name = "state-set-stability"
    prior_states = [inst.possible_states(e) for e in range(inst.n)]
    checked = 0
    for psi in reachable_partials(inst, cap):
        observed = set(dom(psi))
        for e in range(inst.n):
            if e in observed:
                continue
            checked += 1
            now = inst.possible_states(e, psi)
            if now != prior_states[e]:
                w = {"psi": _psi_json(psi), "item": e, "states": sorted(now), "prior_states": sorted(prior_states[e])}
                return PropertyReport(name, False, checked, w)
    return PropertyReport(name, True, checked)


def check_prop2_implication(inst: Instance, tol: float = TOL, cap: int = MAX_PARTIALS) -> PropertyReport:
    """Stable state sets + pointwise submodularity + minimal dependency
    imply worst-case monotonicity and worst-case submodularity."""
    name = "stability-implication"
    premises = {
        "state-set-stability": check_state_set_stability(inst, cap),
        "pointwise": check_pointwise(inst, tol=tol),
        "minimal-dependency": check_minimal_dependency(inst, tol, cap),
    }
    details = {k: r.status for k, r in premises.items()}
    checked = sum(r.checked for r in premises.values())
    if not all(premises.values()):
        details["vacuous"] = True
        return PropertyReport(name, True, checked, None, details)
    conclusions = {
        "wc-monotone": check_wc_monotone(inst, tol, cap),
        "wc-submodular": check_wc_submodular(inst, tol=tol, cap=cap),
    }
    details.update({k: r.status for k, r in conclusions.items()})
    details["vacuous"] = False
    checked += sum(r.checked for r in conclusions.values())
    failed = next((r for r in conclusions.values() if not r), None)
    return PropertyReport(name, failed is None, checked, failed.witness if failed else None, details)


CHECKERS: dict[str, Callable[..., PropertyReport]] = {
    "wc-submodular": check_wc_submodular,
    "wc-monotone": check_wc_monotone,
    "adaptive-submodular": check_adaptive_submodular,
    "adaptive-monotone": check_adaptive_monotone,
    "pointwise": check_pointwise,
    "minimal-dependency": check_minimal_dependency,
    "state-set-stability": check_state_set_stability,
    "stability-implication": check_prop2_implication,
}


def run_checks(inst: Instance, names, tol: float = TOL, cap: int = MAX_PARTIALS, mode: str = "adjacent") -> list[PropertyReport]:
    out = []
    for name in names:
        if name not in CHECKERS:
            raise KeyError(name)
        fn = CHECKERS[name]
        kwargs = {"tol": tol}
        if name not in ("pointwise", "state-set-stability"):
            kwargs["cap"] = cap
        if name == "state-set-stability":
            kwargs = {"cap": cap}
        if name in ("wc-submodular", "adaptive-submodular", "pointwise"):
            kwargs["mode"] = mode
        out.append(fn(inst, **kwargs))
    return out
