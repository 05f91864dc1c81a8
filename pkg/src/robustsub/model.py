"""Items, states, realizations, priors and the two marginal-utility operators.

A partial realization is represented as a sorted tuple of ``(item, state)``
pairs so that it is hashable and has a canonical encoding.  Realizations are
plain tuples of states indexed by item.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

Partial = tuple[tuple[int, int], ...]
Realization = tuple[int, ...]

TOL = 1e-9
# slack used when comparing marginals for argmax ties; only absorbs rounding
TIE_TOL = 1e-12


class ValidationError(ValueError):
    """Malformed input (instance, descriptor, parameter)."""


class InconsistentObservation(ValidationError):
    pass


class AlreadyObserved(ValidationError):
    pass


class ResourceCapError(RuntimeError):
    """A configured search or support cap would be exceeded."""


class SupportTooLarge(ResourceCapError):
    pass


class SearchSpaceTooLarge(ResourceCapError):
    pass


class GroundSetTooLarge(ResourceCapError):
    pass


# --------------------------------------------------------------------------
# partial realizations


def partial(observations: Mapping[int, int] | Iterable[tuple[int, int]] = ()) -> Partial:
    """Canonical partial realization from a mapping or pairs."""
    items = observations.items() if isinstance(observations, Mapping) else observations
    pairs = sorted((int(e), int(o)) for e, o in items)
    for (a, _), (b, _) in zip(pairs, pairs[1:]):
        if a == b:
            raise ValidationError(f"item {a} observed twice")
    return tuple(pairs)


def dom(psi: Partial) -> tuple[int, ...]:
    return tuple(e for e, _ in psi)


def extend(psi: Partial, e: int, o: int) -> Partial:
    if any(x == e for x, _ in psi):
        raise AlreadyObserved(f"item {e} already observed")
    return tuple(sorted(psi + ((int(e), int(o)),)))


def consistent(phi: Sequence[int], psi: Partial) -> bool:
    return all(phi[e] == o for e, o in psi)


def subrealization(psi: Partial, psi2: Partial) -> bool:
    """True iff ``psi`` is contained in ``psi2`` (domain inclusion plus agreement)."""
    larger = dict(psi2)
    return all(e in larger and larger[e] == o for e, o in psi)


# --------------------------------------------------------------------------
# prior and utility


@dataclass(frozen=True)
class Prior:
    realizations: tuple[Realization, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.realizations) == 0:
            raise ValidationError("prior has empty support")
        if len(self.realizations) != len(self.probs):
            raise ValidationError("realizations and probabilities differ in length")
        if any(not (p > 0.0) for p in self.probs):
            raise ValidationError("prior probabilities must be strictly positive")
        if abs(math.fsum(self.probs) - 1.0) > TOL:
            raise ValidationError(f"prior sums to {math.fsum(self.probs)!r}, not 1")
        if len(set(self.realizations)) != len(self.realizations):
            raise ValidationError("support realizations must be pairwise distinct")
        width = {len(r) for r in self.realizations}
        if len(width) != 1:
            raise ValidationError("realizations have inconsistent length")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[int], float]], merge: bool = False) -> "Prior":
        """Build a prior; with ``merge`` duplicate realizations have their mass summed."""
        if merge:
            mass: dict[Realization, float] = {}
            for r, p in pairs:
                key = tuple(int(x) for x in r)
                mass[key] = mass.get(key, 0.0) + float(p)
            pairs = mass.items()
        reals, probs = [], []
        for r, p in pairs:
            reals.append(tuple(int(x) for x in r))
            probs.append(float(p))
        return cls(tuple(reals), tuple(probs))

    @classmethod
    def uniform(cls, realizations: Iterable[Sequence[int]]) -> "Prior":
        reals = [tuple(int(x) for x in r) for r in realizations]
        return cls(tuple(reals), tuple(1.0 / len(reals) for _ in reals))

    def __len__(self) -> int:
        return len(self.realizations)


class UtilityModel(ABC):
    """Evaluates f(S, phi) for a set of items and full realizations.

    Implementations must be deterministic and non-negative.
    """

    claims_minimal_dependency: bool = False

    @abstractmethod
    def evaluate(self, items: tuple[int, ...], states: np.ndarray) -> np.ndarray:
        """Return f(items, phi) for every row phi of the (m, n) state matrix."""

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    def value(self, items: Iterable[int], phi: Sequence[int]) -> float:
        row = np.asarray([phi], dtype=np.int64)
        return float(self.evaluate(tuple(sorted(set(items))), row)[0])


class TableUtility(UtilityModel):
    """Explicit f(S, phi) table over a fixed list of realizations.

    ``rows`` maps each listed item set to one value per realization (in the
    order of ``realizations``).  Querying an unlisted set or realization is an
    error rather than zero.
    """

    claims_minimal_dependency = False

    def __init__(self, realizations: Sequence[Sequence[int]], rows: Mapping[Iterable[int], Sequence[float]]):
        self.realizations = tuple(tuple(int(x) for x in r) for r in realizations)
        self._column = {r: i for i, r in enumerate(self.realizations)}
        self.rows: dict[tuple[int, ...], tuple[float, ...]] = {}
        for s, vals in rows.items():
            key = tuple(sorted(set(int(e) for e in s)))
            vals = tuple(float(v) for v in vals)
            if len(vals) != len(self.realizations):
                raise ValidationError(f"row {list(key)} has {len(vals)} values, expected {len(self.realizations)}")
            if any(v < 0 or not math.isfinite(v) for v in vals):
                raise ValidationError(f"row {list(key)} has a negative or non-finite value")
            self.rows[key] = vals

    def evaluate(self, items, states):
        try:
            vals = self.rows[tuple(items)]
        except KeyError:
            raise ValidationError(f"utility table has no row for set {list(items)}") from None
        out = np.empty(len(states))
        for i, row in enumerate(states):
            col = self._column.get(tuple(int(x) for x in row))
            if col is None:
                raise ValidationError(f"utility table has no column for realization {tuple(row)}")
            out[i] = vals[col]
        return out

    def to_dict(self):
        return {
            "type": "table",
            "rows": [{"set": list(s), "values": list(v)} for s, v in sorted(self.rows.items(), key=lambda kv: (len(kv[0]), kv[0]))],
        }


# --------------------------------------------------------------------------
# instance


class Instance:
    """Ground set, state alphabet, explicit prior and utility.

    Immutable after construction.  Utility vectors (f(S, .) over the whole
    support) and per-partial-realization marginals are memoized with
    ``functools.lru_cache``, which is thread-safe.
    """

    def __init__(self, n: int, num_states: int, prior: Prior, utility: UtilityModel, *, cache_size: int = 4096):
        if n < 0:
            raise ValidationError("n must be non-negative")
        if num_states < 1:
            raise ValidationError("state alphabet must be non-empty")
        for r in prior.realizations:
            if len(r) != n:
                raise ValidationError(f"realization {r} does not cover {n} items")
            if any(not (0 <= o < num_states) for o in r):
                raise ValidationError(f"realization {r} uses a state outside [0, {num_states})")
        self.n = n
        self.num_states = num_states
        self.prior = prior
        self.utility = utility
        self.states = np.asarray(prior.realizations, dtype=np.int64).reshape(len(prior), n)
        self.probs = np.asarray(prior.probs, dtype=float)
        self.states.setflags(write=False)
        self.probs.setflags(write=False)
        self._utility_vector = lru_cache(maxsize=cache_size)(self._compute_utility_vector)
        self._node = lru_cache(maxsize=None)(self._compute_node)
        self._marginals = lru_cache(maxsize=None)(self._compute_marginals)

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def realizations(self) -> tuple[Realization, ...]:
        return self.prior.realizations

    def __repr__(self):
        return f"Instance(n={self.n}, num_states={self.num_states}, support={self.m}, utility={type(self.utility).__name__})"

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n == other.n
            and self.num_states == other.num_states
            and self.prior == other.prior
            and self.utility.to_dict() == other.utility.to_dict()
        )

    __hash__ = None

    # -- utility -----------------------------------------------------------

    def _compute_utility_vector(self, items: tuple[int, ...]) -> np.ndarray:
        vals = np.asarray(self.utility.evaluate(items, self.states), dtype=float)
        if vals.shape != (self.m,):
            raise ValidationError(f"utility returned shape {vals.shape}, expected ({self.m},)")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValidationError(f"utility produced a negative or non-finite value on set {list(items)}")
        vals.setflags(write=False)
        return vals

    def utility_vector(self, items: Iterable[int]) -> np.ndarray:
        """f(S, phi) for every support realization phi, in support order."""
        return self._utility_vector(tuple(sorted(set(items))))

    def f(self, items: Iterable[int], index: int) -> float:
        return float(self.utility_vector(items)[index])

    # -- conditioning ------------------------------------------------------

    def _compute_node(self, psi: Partial):
        if psi:
            items = [e for e, _ in psi]
            obs = np.asarray([o for _, o in psi])
            mask = np.all(self.states[:, items] == obs, axis=1)
            idx = np.flatnonzero(mask)
        else:
            idx = np.arange(self.m)
        if len(idx) == 0:
            raise InconsistentObservation(f"no support realization is consistent with {psi}")
        w = self.probs[idx]
        w = w / w.sum()
        idx.setflags(write=False)
        w.setflags(write=False)
        return idx, w

    def consistent_indices(self, psi: Partial) -> np.ndarray:
        """Support indices of realizations consistent with ``psi``."""
        return self._node(psi)[0]

    def conditional_distribution(self, psi: Partial = ()) -> list[tuple[Realization, float]]:
        idx, w = self._node(psi)
        return [(self.realizations[i], float(p)) for i, p in zip(idx, w)]

    def _check_item(self, e: int, psi: Partial):
        if not (0 <= e < self.n):
            raise ValidationError(f"item {e} outside ground set of size {self.n}")
        if any(x == e for x, _ in psi):
            raise AlreadyObserved(f"item {e} is already in dom(psi)")

    def possible_states(self, e: int, psi: Partial = ()) -> frozenset[int]:
        self._check_item(e, psi)
        idx, _ = self._node(psi)
        return frozenset(int(o) for o in np.unique(self.states[idx, e]))

    def state_probabilities(self, e: int, psi: Partial = ()) -> dict[int, float]:
        """Pr[Phi(e) = o | Phi ~ psi] for each possible state o."""
        self._check_item(e, psi)
        idx, w = self._node(psi)
        mass = np.bincount(self.states[idx, e], weights=w, minlength=self.num_states)
        return {int(o): float(mass[o]) for o in np.flatnonzero(mass > 0)}

    def f_on_partial(self, items: Iterable[int], psi: Partial = ()) -> float:
        """Conditional expectation of f(S, Phi) given Phi ~ psi."""
        idx, w = self._node(psi)
        return float(np.dot(w, self.utility_vector(items)[idx]))

    # -- marginals ---------------------------------------------------------

    def _compute_marginals(self, psi: Partial):
        idx, w = self._node(psi)
        base_items = dom(psi)
        base = float(np.dot(w, self.utility_vector(base_items)[idx]))
        avg = np.full(self.n, np.nan)
        wc = np.full(self.n, np.nan)
        observed = set(base_items)
        for e in range(self.n):
            if e in observed:
                continue
            vals = self.utility_vector((*base_items, e))[idx]
            st = self.states[idx, e]
            avg[e] = float(np.dot(w, vals)) - base
            num = np.bincount(st, weights=w * vals, minlength=self.num_states)
            den = np.bincount(st, weights=w, minlength=self.num_states)
            present = np.bincount(st, minlength=self.num_states) > 0
            wc[e] = float(np.min(num[present] / den[present])) - base
        avg.setflags(write=False)
        wc.setflags(write=False)
        return avg, wc

    def marginals(self, psi: Partial = ()) -> tuple[np.ndarray, np.ndarray]:
        """Average-case and worst-case marginals of every item on top of ``psi``.

        Entries for items already in dom(psi) are NaN.
        """
        return self._marginals(psi)

    def avg_marginal(self, e: int, psi: Partial = ()) -> float:
        self._check_item(e, psi)
        return float(self._marginals(psi)[0][e])

    def wc_marginal(self, e: int, psi: Partial = ()) -> float:
        self._check_item(e, psi)
        return float(self._marginals(psi)[1][e])


def deterministic_instance(n: int, set_function, num_states: int = 1) -> Instance:
    """Single-realization instance wrapping a deterministic set function."""
    from .applications import SetFunctionUtility

    prior = Prior(((0,) * n,), (1.0,))
    return Instance(n, num_states, prior, SetFunctionUtility(set_function, n))
