"""Instance generators for the application utilities.

Each generator materializes its prior as an explicit support list and refuses
when the support would exceed ``support_cap``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import (
    Instance,
    Prior,
    SupportTooLarge,
    TableUtility,
    UtilityModel,
    ValidationError,
)

DEFAULT_SUPPORT_CAP = 4096


class EmptyHypothesisSpace(ValidationError):
    pass


def _check_cap(size: int, cap: int, what: str):
    if size > cap:
        raise SupportTooLarge(f"{what} needs {size} realizations, cap is {cap}")


def _product_prior(options: Sequence[Sequence[tuple[int, float]]], cap: int, what: str) -> Prior:
    # options[e] lists (state, probability) pairs with positive probability
    size = math.prod(len(o) for o in options)
    _check_cap(size, cap, what)
    pairs = []
    for combo in itertools.product(*options):
        pairs.append((tuple(o for o, _ in combo), math.prod(p for _, p in combo)))
    return Prior.from_pairs(pairs)


# --------------------------------------------------------------------------
# deterministic set functions and the bundled counterexample


class SetFunctionUtility(UtilityModel):
    """f(S, phi) = g(S) for a deterministic set function g."""

    claims_minimal_dependency = True

    def __init__(self, fn: Callable[[frozenset[int]], float], n: int):
        self.fn = fn
        self.n = n

    def evaluate(self, items, states):
        return np.full(len(states), float(self.fn(frozenset(items))))

    def to_dict(self):
        rows = []
        for r in range(self.n + 1):
            for s in itertools.combinations(range(self.n), r):
                rows.append({"set": list(s), "values": [float(self.fn(frozenset(s)))]})
        return {"type": "table", "rows": rows}


def counterexample(eps: float = 0.1) -> Instance:
    """Three items, two states, three equally likely realizations.

    Pointwise linear in S, yet worst-case greedy is off by a factor eps.
    States are 0-indexed, so the first state is 0 and the second is 1.
    """
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must lie in (0, 1), got {eps}")
    phis = [(0, 1, 1), (1, 0, 1), (1, 1, 0)]
    e = eps
    rows = {
        (): [0, 0, 0],
        (0,): [e, e, e],
        (1,): [1, 0, 1],
        (2,): [1, 1, 0],
        (0, 1): [1 + e, e + 0, 1 + e],
        (1, 2): [1 + 1, 1 + 0, 1 + 0],
        (0, 2): [1 + e, 1 + e, e + 0],
        (0, 1, 2): [1 + 1 + e, 1 + e, 1 + e],
    }
    return Instance(3, 2, Prior.uniform(phis), TableUtility(phis, rows))


# --------------------------------------------------------------------------
# pool-based active learning


@dataclass(frozen=True)
class HypothesisSpace:
    labels: np.ndarray  # (num_hypotheses, num_points)
    weights: np.ndarray  # positive, unnormalized

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=float)
        if labels.ndim != 2 or labels.shape[0] == 0:
            raise EmptyHypothesisSpace("hypothesis space is empty")
        if weights.shape != (labels.shape[0],):
            raise ValidationError("one weight per hypothesis is required")
        if np.any(weights <= 0):
            raise ValidationError("hypothesis weights must be positive")
        if np.any(labels < 0):
            raise ValidationError("labels must be non-negative")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)

    @property
    def probs(self) -> np.ndarray:
        return self.weights / self.weights.sum()


def _encode_rows(mat: np.ndarray, base: int) -> np.ndarray:
    """Injective int64 key per row of a small-alphabet integer matrix."""
    width = mat.shape[1]
    if width == 0:
        return np.zeros(mat.shape[0], dtype=np.int64)
    if width * math.log2(max(base, 2)) < 62:
        return mat @ (base ** np.arange(width, dtype=np.int64))
    _, inv = np.unique(mat, axis=0, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


class ActiveLearningUtility(UtilityModel):
    """f(S, phi) = 1 - prior mass of hypotheses agreeing with phi on S."""

    claims_minimal_dependency = True

    def __init__(self, hs: HypothesisSpace):
        self.hs = hs
        self._probs = hs.probs
        self._base = int(hs.labels.max()) + 1

    def evaluate(self, items, states):
        items = list(items)
        if not items:
            return np.zeros(len(states))
        base = max(self._base, int(states[:, items].max()) + 1)
        keys = _encode_rows(np.vstack([self.hs.labels[:, items], states[:, items]]), base)
        hkeys, rkeys = keys[: len(self._probs)], keys[len(self._probs):]
        uniq, inv = np.unique(hkeys, return_inverse=True)
        mass = np.bincount(inv.reshape(-1), weights=self._probs, minlength=len(uniq))
        pos = np.minimum(np.searchsorted(uniq, rkeys), len(uniq) - 1)
        agree = np.where(uniq[pos] == rkeys, mass[pos], 0.0)
        return np.maximum(1.0 - agree, 0.0)

    def to_dict(self):
        return {"type": "active-learning", "labels": self.hs.labels.tolist(), "weights": self.hs.weights.tolist()}


def build_active_learning(hs: HypothesisSpace, num_states: int | None = None) -> Instance:
    """One realization per distinct label vector, carrying its merged prior mass."""
    probs = hs.probs
    prior = Prior.from_pairs(((tuple(row), p) for row, p in zip(hs.labels.tolist(), probs)), merge=True)
    k = num_states if num_states is not None else int(hs.labels.max()) + 1
    return Instance(hs.labels.shape[1], k, prior, ActiveLearningUtility(hs))


def mixed_label_counts(num_points: int) -> list[int]:
    """Label alphabet size per point: 80% binary, 10% ternary, 10% four-way."""
    n3 = n4 = num_points // 10
    return [2] * (num_points - n3 - n4) + [3] * n3 + [4] * n4


def random_hypothesis_space(
    rng: np.random.Generator,
    num_points: int,
    num_hypotheses: int,
    labels: int | Sequence[int] = 2,
    mixed: bool = False,
) -> HypothesisSpace:
    """Uniform random labels; weights q_h drawn uniformly from (0, 1).

    With ``mixed`` the points get 2/3/4 labels in an 80/10/10 split, assigned
    to points in random order.
    """
    if mixed:
        counts = np.asarray(mixed_label_counts(num_points))
        counts = counts[rng.permutation(num_points)]
    elif isinstance(labels, int):
        counts = np.full(num_points, labels)
    else:
        counts = np.asarray(labels)
    if len(counts) != num_points or np.any(counts < 1):
        raise ValidationError("need a positive label count per point")
    lab = (rng.random((num_hypotheses, num_points)) * counts).astype(np.int64)
    lab = np.minimum(lab, counts - 1)
    # 1 - U[0,1) lies in (0, 1]
    weights = 1.0 - rng.random(num_hypotheses)
    return HypothesisSpace(lab, weights)


def random_active_learning(rng: np.random.Generator, num_points: int, num_hypotheses: int, labels: int = 2) -> Instance:
    return build_active_learning(random_hypothesis_space(rng, num_points, num_hypotheses, labels))


# --------------------------------------------------------------------------
# adaptive viral marketing


@dataclass(frozen=True)
class DiffusionGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v), float(p)) for u, v, p in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for u, v, p in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError(f"edge ({u}, {v}) outside node range")
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"edge ({u}, {v}) has probability {p} outside [0, 1]")
            if (u, v) in seen:
                raise ValidationError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))


def _reach(n: int, live: Sequence[tuple[int, int]]) -> list[frozenset[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in live:
        adj[u].append(v)
    out = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            for v in adj[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        out.append(frozenset(seen))
    return out


class ViralUtility(UtilityModel):
    """Number of nodes reachable from S over live edges, S included.

    ``reach[u][o]`` is the set reached from u when u is observed in state o.
    """

    claims_minimal_dependency = True

    def __init__(self, graph: DiffusionGraph, reach: Sequence[Sequence[frozenset[int]]]):
        self.graph = graph
        self.reach = [list(r) for r in reach]
        n = graph.n
        self._masks = []
        for per_node in self.reach:
            m = np.zeros((len(per_node), n), dtype=bool)
            for o, nodes in enumerate(per_node):
                m[o, list(nodes)] = True
            self._masks.append(m)

    def evaluate(self, items, states):
        covered = np.zeros((len(states), self.graph.n), dtype=bool)
        for u in items:
            covered |= self._masks[u][states[:, u]]
        return covered.sum(axis=1).astype(float)

    def to_dict(self):
        return {"type": "viral", "nodes": self.graph.n, "edges": [list(e) for e in self.graph.edges]}


def build_viral_marketing(g: DiffusionGraph, support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    """Independent cascade with full-adoption feedback.

    Realizations enumerate live/blocked assignments of the uncertain edges.
    A node's state encodes the status of every edge leaving the nodes it
    reaches, i.e. everything revealed by seeding it.
    """
    uncertain = [i for i, (_, _, p) in enumerate(g.edges) if 0.0 < p < 1.0]
    _check_cap(2 ** len(uncertain), support_cap, "viral-marketing instance")
    fixed_live = [i for i, (_, _, p) in enumerate(g.edges) if p == 1.0]
    labels: list[dict] = [{} for _ in range(g.n)]
    reach_of: list[list[frozenset[int]]] = [[] for _ in range(g.n)]
    pairs = []
    for bits in itertools.product((1, 0), repeat=len(uncertain)):
        status = {i: 1 for i in fixed_live}
        status.update({i: 0 for i, (_, _, p) in enumerate(g.edges) if p == 0.0})
        prob = 1.0
        for i, b in zip(uncertain, bits):
            status[i] = b
            p = g.edges[i][2]
            prob *= p if b else 1.0 - p
        live = [(g.edges[i][0], g.edges[i][1]) for i, b in status.items() if b]
        reach = _reach(g.n, live)
        phi = []
        for u in range(g.n):
            feedback = tuple(sorted((i, status[i]) for i, (w, _, _) in enumerate(g.edges) if w in reach[u]))
            if feedback not in labels[u]:
                labels[u][feedback] = len(labels[u])
                reach_of[u].append(reach[u])
            phi.append(labels[u][feedback])
        pairs.append((tuple(phi), prob))
    prior = Prior.from_pairs(pairs, merge=True)
    num_states = max(len(lab) for lab in labels) if g.n else 1
    return Instance(g.n, num_states, prior, ViralUtility(g, reach_of))


def random_diffusion_graph(rng: np.random.Generator, n: int, num_edges: int, uncertain_max: int = 8) -> DiffusionGraph:
    """Random digraph; probabilities mostly in (0,1), a few fixed at 0 or 1."""
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = rng.choice(len(pairs), size=min(num_edges, len(pairs)), replace=False)
    edges = []
    uncertain = 0
    for idx in sorted(chosen.tolist()):
        u, v = pairs[idx]
        r = rng.random()
        if r < 0.15 or uncertain >= uncertain_max:
            p = float(rng.integers(0, 2))
        else:
            p = round(float(rng.uniform(0.1, 0.9)), 3)
            uncertain += 1
        edges.append((u, v, p))
    return DiffusionGraph(n, tuple(edges))


# --------------------------------------------------------------------------
# stochastic coverage, match-making, sensors


class CoverageUtility(UtilityModel):
    """Weighted size of the union of the subsets realized by the selected items."""

    claims_minimal_dependency = True

    def __init__(self, universe: int, subsets: Sequence[Sequence[Sequence[int]]], probs, weights=None):
        self.universe = universe
        self.subsets = [[tuple(sorted(s)) for s in opts] for opts in subsets]
        self.probs = [list(map(float, p)) for p in probs]
        self.weights = np.ones(universe) if weights is None else np.asarray(weights, dtype=float)
        self._tables = []
        for opts in self.subsets:
            t = np.zeros((len(opts), universe), dtype=bool)
            for o, s in enumerate(opts):
                t[o, list(s)] = True
            self._tables.append(t)

    def evaluate(self, items, states):
        covered = np.zeros((len(states), self.universe), dtype=bool)
        for e in items:
            covered |= self._tables[e][states[:, e]]
        return covered.astype(float) @ self.weights

    def to_dict(self):
        d = {
            "type": "coverage",
            "universe": self.universe,
            "items": [{"subsets": [list(s) for s in opts], "probs": p} for opts, p in zip(self.subsets, self.probs)],
        }
        if not np.all(self.weights == 1.0):
            d["weights"] = self.weights.tolist()
        return d


def build_stochastic_coverage(
    universe_size: int,
    items: Sequence[tuple[Sequence[Sequence[int]], Sequence[float]]],
    weights=None,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> Instance:
    """Each item covers one of its candidate subsets, independently across items."""
    subsets, probs = [], []
    for opts, ps in items:
        if len(opts) != len(ps) or not opts:
            raise ValidationError("each item needs one probability per candidate subset")
        if any(p <= 0 for p in ps) or abs(math.fsum(ps) - 1.0) > 1e-9:
            raise ValidationError("subset probabilities must be positive and sum to 1")
        for s in opts:
            if any(not (0 <= x < universe_size) for x in s):
                raise ValidationError(f"subset {list(s)} leaves the universe")
        subsets.append(opts)
        probs.append(ps)
    options = [list(enumerate(ps)) for ps in probs]
    prior = _product_prior(options, support_cap, "coverage instance")
    util = CoverageUtility(universe_size, subsets, probs, weights)
    return Instance(len(items), max((len(o) for o in subsets), default=1), prior, util)


def build_match_making(scores: Sequence[tuple[Sequence[float], Sequence[float]]], support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    """Modular special case of coverage: edge-item e in state o scores ``scores[e][0][o]``.

    Every (item, state) pair covers its own private universe element.
    """
    items, weights = [], []
    for vals, ps in scores:
        opts = []
        for v in vals:
            opts.append([len(weights)])
            weights.append(float(v))
        items.append((opts, ps))
    return build_stochastic_coverage(len(weights), items, weights, support_cap)


def random_coverage(rng: np.random.Generator, num_items: int, universe: int, options: int = 2) -> Instance:
    items = []
    for _ in range(num_items):
        opts = [sorted(rng.choice(universe, size=int(rng.integers(0, universe + 1)), replace=False).tolist()) for _ in range(options)]
        raw = 1.0 - rng.random(options)
        items.append((opts, (raw / raw.sum()).tolist()))
    return build_stochastic_coverage(universe, items)


class SensorUtility(UtilityModel):
    """Facility-location coverage by the working sensors of S.

    g(W) = sum over locations of the best weight any working sensor gives it.
    """

    claims_minimal_dependency = True
    WORKING, FAILED = 0, 1

    def __init__(self, weights, fail_probs):
        self.weights = np.asarray(weights, dtype=float)
        self.fail_probs = [float(p) for p in fail_probs]

    def evaluate(self, items, states):
        items = list(items)
        if not items:
            return np.zeros(len(states))
        working = states[:, items] == self.WORKING
        contrib = working[:, :, None] * self.weights[items][None, :, :]
        return contrib.max(axis=1).sum(axis=1)

    def to_dict(self):
        return {"type": "sensors", "weights": self.weights.tolist(), "fail": self.fail_probs}


def build_sensor_selection(weights, fail_probs, support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != len(fail_probs):
        raise ValidationError("weights must be a (sensors x locations) matrix matching fail_probs")
    if np.any(w < 0):
        raise ValidationError("sensor weights must be non-negative")
    options = []
    for p in fail_probs:
        if not (0.0 <= p <= 1.0):
            raise ValidationError(f"failure probability {p} outside [0, 1]")
        opts = []
        if p < 1.0:
            opts.append((SensorUtility.WORKING, 1.0 - p))
        if p > 0.0:
            opts.append((SensorUtility.FAILED, p))
        options.append(opts)
    prior = _product_prior(options, support_cap, "sensor instance")
    return Instance(len(fail_probs), 2, prior, SensorUtility(w, fail_probs))


def random_sensors(rng: np.random.Generator, num_sensors: int, num_locations: int) -> Instance:
    weights = np.round(rng.random((num_sensors, num_locations)), 3)
    fail = np.round(rng.uniform(0.05, 0.6, num_sensors), 3)
    return build_sensor_selection(weights, fail.tolist())


# --------------------------------------------------------------------------
# descriptors


def instance_from_descriptor(desc: dict, support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    kind = desc.get("type")
    try:
        if kind == "active-learning":
            return build_active_learning(HypothesisSpace(np.asarray(desc["labels"]), np.asarray(desc["weights"])))
        if kind == "viral":
            return build_viral_marketing(DiffusionGraph(int(desc["nodes"]), tuple(map(tuple, desc["edges"]))), support_cap)
        if kind == "coverage":
            items = [(it["subsets"], it["probs"]) for it in desc["items"]]
            return build_stochastic_coverage(int(desc["universe"]), items, desc.get("weights"), support_cap)
        if kind == "sensors":
            return build_sensor_selection(desc["weights"], desc["fail"], support_cap)
    except KeyError as exc:
        raise ValidationError(f"{kind} descriptor missing field {exc}") from None
    raise ValidationError(f"unknown application type {kind!r}")
