"""Independence systems used as feasibility oracles by the policies."""
from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import GroundSetTooLarge, Partial, ValidationError

MAX_VERIFY_N = 20


def _items_of(selection) -> frozenset[int]:
    # accepts a partial realization or a plain item collection
    sel = tuple(selection)
    if sel and isinstance(sel[0], tuple):
        return frozenset(e for e, _ in sel)
    return frozenset(int(e) for e in sel)


class ConstraintSystem(ABC):
    kind: str
    p: int

    @abstractmethod
    def is_independent(self, items: Iterable[int]) -> bool:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    def feasible_extensions(self, selection: Partial | Iterable[int], n: int) -> frozenset[int]:
        """Items outside the selection whose addition keeps it independent."""
        base = _items_of(selection)
        if not self.is_independent(base):
            raise InfeasibleBase(f"selection {sorted(base)} is not independent")
        return frozenset(e for e in range(n) if e not in base and self.is_independent(base | {e}))

    def independent_sets(self, n: int) -> list[frozenset[int]]:
        """All independent subsets of {0..n-1}, by depth-first extension."""
        out = [frozenset()]
        frontier = [frozenset()]
        while frontier:
            nxt = []
            for s in frontier:
                start = max(s) + 1 if s else 0
                for e in range(start, n):
                    t = s | {e}
                    if self.is_independent(t):
                        out.append(t)
                        nxt.append(t)
            frontier = nxt
        return out


class InfeasibleBase(ValidationError):
    pass


@dataclass(frozen=True)
class Cardinality(ConstraintSystem):
    k: int
    kind = "cardinality"
    p = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("cardinality k must be non-negative")

    def is_independent(self, items):
        return len(set(items)) <= self.k

    def to_dict(self):
        return {"type": "cardinality", "k": self.k}


@dataclass(frozen=True)
class PartitionMatroid(ConstraintSystem):
    """At most ``limits[z]`` items from each disjoint block ``blocks[z]``.

    Items that belong to no block are not selectable.
    """

    blocks: tuple[tuple[int, ...], ...]
    limits: tuple[int, ...]
    kind = "partition"
    p = 1

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(e) for e in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "limits", tuple(int(k) for k in self.limits))
        if len(blocks) != len(self.limits):
            raise ValidationError("one limit per block is required")
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ValidationError("partition blocks must be non-empty")
            if seen.intersection(b) or len(set(b)) != len(b):
                raise ValidationError("partition blocks must be disjoint")
            seen.update(b)
        if any(k < 1 for k in self.limits):
            raise ValidationError("block limits must be >= 1")
        object.__setattr__(self, "_block_of", {e: z for z, b in enumerate(blocks) for e in b})

    def block_of(self, e: int) -> int | None:
        return self._block_of.get(e)

    def is_independent(self, items):
        counts = [0] * len(self.blocks)
        for e in set(items):
            z = self._block_of.get(e)
            if z is None:
                return False
            counts[z] += 1
            if counts[z] > self.limits[z]:
                return False
        return True

    def to_dict(self):
        return {"type": "partition", "blocks": [list(b) for b in self.blocks], "limits": list(self.limits)}


class ExplicitSystem(ConstraintSystem):
    """Independence family listed set by set; must be downward-closed."""

    kind = "explicit"

    def __init__(self, independent_sets: Iterable[Iterable[int]], p: int):
        family = {frozenset(int(e) for e in s) for s in independent_sets}
        if frozenset() not in family:
            raise ValidationError("the empty set must be independent")
        for s in family:
            for e in s:
                if s - {e} not in family:
                    raise ValidationError(f"family is not downward-closed: {sorted(s)} present, {sorted(s - {e})} missing")
        if p < 1:
            raise ValidationError("p must be a positive integer")
        self.family = frozenset(family)
        self.p = int(p)

    def __eq__(self, other):
        return isinstance(other, ExplicitSystem) and self.family == other.family and self.p == other.p

    def __hash__(self):
        return hash((self.family, self.p))

    def __repr__(self):
        return f"ExplicitSystem({len(self.family)} sets, p={self.p})"

    def is_independent(self, items):
        return frozenset(items) in self.family

    def independent_sets(self, n):
        return sorted((s for s in self.family if all(e < n for e in s)), key=lambda s: (len(s), sorted(s)))

    def to_dict(self):
        sets = sorted((sorted(s) for s in self.family), key=lambda s: (len(s), s))
        return {"type": "explicit", "independent_sets": sets, "p": self.p}

    @classmethod
    def from_predicate(cls, predicate: Callable[[frozenset[int]], bool], n: int, p: int) -> "ExplicitSystem":
        sets = []
        for r in range(n + 1):
            for combo in itertools.combinations(range(n), r):
                s = frozenset(combo)
                if predicate(s):
                    sets.append(s)
        return cls(sets, p)

    @classmethod
    def intersection(cls, systems: Sequence[ConstraintSystem], n: int, p: int | None = None) -> "ExplicitSystem":
        """Intersection of several systems; p defaults to the number of systems."""
        return cls.from_predicate(lambda s: all(c.is_independent(s) for c in systems), n, p or len(systems))


def is_independent(c: ConstraintSystem, items: Iterable[int]) -> bool:
    return c.is_independent(items)


def feasible_extensions(c: ConstraintSystem, selection, n: int) -> frozenset[int]:
    return c.feasible_extensions(selection, n)


@dataclass(frozen=True)
class PSystemCheck:
    ok: bool
    counterexample: tuple[int, ...] | None = None
    min_base: int | None = None
    max_base: int | None = None

    def __bool__(self):
        return self.ok


def base_size_range(c: ConstraintSystem, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest base size of every R subset of {0..n-1}, indexed by bitmask."""
    if n > MAX_VERIFY_N:
        raise GroundSetTooLarge(f"exhaustive base enumeration needs n <= {MAX_VERIFY_N}, got {n}")
    family = c.independent_sets(n)
    masks = {sum(1 << e for e in s) for s in family}
    full = np.arange(1 << n, dtype=np.int64)
    lo = np.full(1 << n, n + 1, dtype=np.int64)
    hi = np.full(1 << n, -1, dtype=np.int64)
    for s in family:
        m = sum(1 << e for e in s)
        ext = 0
        for e in range(n):
            if not m >> e & 1 and (m | 1 << e) in masks:
                ext |= 1 << e
        # s is a base of R iff s is inside R and R contains no extension of s
        is_base = ((full & m) == m) & ((full & ext) == 0)
        size = len(s)
        lo[is_base] = np.minimum(lo[is_base], size)
        hi[is_base] = np.maximum(hi[is_base], size)
    return lo, hi


def verify_p_system(c: ConstraintSystem, p: int, n: int) -> PSystemCheck:
    """Exhaustively check p * min base >= max base for every R subset of E."""
    lo, hi = base_size_range(c, n)
    bad = np.flatnonzero(p * lo < hi)
    if len(bad) == 0:
        return PSystemCheck(True)
    r = int(bad[0])
    items = tuple(e for e in range(n) if r >> e & 1)
    return PSystemCheck(False, items, int(lo[r]), int(hi[r]))


def constraint_from_dict(d: dict) -> ConstraintSystem:
    kind = d.get("type")
    try:
        if kind == "cardinality":
            return Cardinality(int(d["k"]))
        if kind == "partition":
            return PartitionMatroid(tuple(tuple(b) for b in d["blocks"]), tuple(d["limits"]))
        if kind == "explicit":
            return ExplicitSystem(d["independent_sets"], int(d["p"]))
    except KeyError as exc:
        raise ValidationError(f"constraint descriptor missing field {exc}") from None
    raise ValidationError(f"unknown constraint type {kind!r}")
