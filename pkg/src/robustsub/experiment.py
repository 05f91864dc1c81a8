"""Seeded sweeps of average / worst-case / hybrid greedy over the budget k."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .applications import random_hypothesis_space, build_active_learning
from .model import Instance, ValidationError
from .policies import Environment, run_avg_greedy, run_hybrid_cardinality, run_wc_greedy_cardinality

# short names used in the sweep output
POLICIES = {
    "AP": lambda inst, k, env, q: run_avg_greedy(inst, k, env),
    "WP": lambda inst, k, env, q: run_wc_greedy_cardinality(inst, k, k, env),
    "HP": lambda inst, k, env, q: run_hybrid_cardinality(inst, k, env, q),
}
COLUMNS = ("k", "policy", "f_avg", "f_wc", "repetitions")


@dataclass
class ExperimentConfig:
    points: int = 50
    hypotheses: int = 1000
    labels: int = 2
    mixed: bool = False
    k_min: int = 2
    k_max: int = 9
    policies: tuple[str, ...] = ("AP", "WP", "HP")
    repetitions: int = 20
    seed: int = 0
    q: float = 0.5
    jobs: int = 1
    instance: str | None = None
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self, n: int | None = None):
        n = self.points if n is None else n
        if not self.policies:
            raise ValidationError("experiment needs at least one policy")
        unknown = [p for p in self.policies if p not in POLICIES]
        if unknown:
            raise ValidationError(f"unknown experiment policies {unknown}; expected some of {sorted(POLICIES)}")
        if not (1 <= self.k_min <= self.k_max <= n):
            raise ValidationError(f"k range [{self.k_min}, {self.k_max}] must lie within [1, {n}]")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        kw = {k: v for k, v in d.items() if k in known}
        if "policies" in kw:
            kw["policies"] = tuple(kw["policies"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def repetition_instance(cfg: ExperimentConfig, rep: int) -> Instance:
    rng = np.random.default_rng(cfg.seed + rep)
    hs = random_hypothesis_space(rng, cfg.points, cfg.hypotheses, cfg.labels, cfg.mixed)
    return build_active_learning(hs)


def _one_repetition(args) -> dict[tuple[int, str], tuple[float, float]]:
    cfg, rep = args
    if cfg.instance is not None:
        from .formats import load_instance

        inst = load_instance(cfg.instance)
    else:
        inst = repetition_instance(cfg, rep)
    out = {}
    for k in range(cfg.k_min, cfg.k_max + 1):
        for name in cfg.policies:
            run = POLICIES[name]
            utils = np.array([run(inst, k, Environment(inst, i), cfg.q).utility for i in range(inst.m)])
            out[(k, name)] = (math.fsum(inst.probs * utils), float(utils.min()))
    return out


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """One row per (k, policy): f_avg and f_wc averaged over repetitions.

    Repetition r draws its instance from seed ``cfg.seed + r``.
    """
    n = cfg.points
    if cfg.instance is not None:
        from .formats import load_instance

        n = load_instance(cfg.instance).n
    cfg.validate(n)
    jobs = [(cfg, r) for r in range(cfg.repetitions)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_one_repetition, jobs))
    else:
        results = [_one_repetition(j) for j in jobs]
    rows = []
    for k in range(cfg.k_min, cfg.k_max + 1):
        for name in sorted(cfg.policies):
            vals = [res[(k, name)] for res in results]
            rows.append(
                {
                    "k": k,
                    "policy": name,
                    "f_avg": math.fsum(v[0] for v in vals) / len(vals),
                    "f_wc": math.fsum(v[1] for v in vals) / len(vals),
                    "repetitions": len(vals),
                }
            )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "f_avg": repr(r["f_avg"]), "f_wc": repr(r["f_wc"])})
    return buf.getvalue()
