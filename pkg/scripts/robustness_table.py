"""Exact worst-case / average-case ratios of the greedy policies on small instances.

For each seeded active-learning instance the oracle computes both optima, and
every policy is scored by its worst-case ratio, average-case ratio and their
minimum (the robustness ratio).  Prints a CSV with the per-policy means and
minima over the instances.
"""
import argparse

import numpy as np

from robustsub.applications import build_active_learning, counterexample, random_hypothesis_space
from robustsub.constraints import Cardinality
from robustsub.oracle import eval_exact, opt_average_case, opt_worst_case
from robustsub.policies import optimal_q_cardinality, run_avg_greedy, run_hybrid_cardinality, run_wc_greedy_cardinality


def policies(k, beta):
    q = optimal_q_cardinality(beta)
    out = {
        "avg-greedy": lambda i, env: run_avg_greedy(i, k, env),
        "wc-greedy": lambda i, env: run_wc_greedy_cardinality(i, k, k, env),
        "hybrid-q0.500": lambda i, env: run_hybrid_cardinality(i, k, env, 0.5),
    }
    if abs(q - 0.5) > 1e-9:
        out[f"hybrid-q{q:.3f}"] = lambda i, env: run_hybrid_cardinality(i, k, env, q)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--points", type=int, default=6)
    ap.add_argument("--hypotheses", type=int, default=12)
    ap.add_argument("--labels", type=int, default=3)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    insts = [("counterexample", counterexample(0.1))] if args.k == 2 else []
    for s in range(args.instances):
        rng = np.random.default_rng(args.seed + s)
        insts.append((f"al-{s}", build_active_learning(random_hypothesis_space(rng, args.points, args.hypotheses, args.labels))))

    c = Cardinality(args.k)
    table = {}
    for _, inst in insts:
        optima = (opt_worst_case(inst, c)[0], opt_average_case(inst, c)[0])
        for name, pol in policies(args.k, args.beta).items():
            rep = eval_exact(inst, c, pol, beta=args.beta, optima=optima)
            if rep.alpha is not None:
                table.setdefault(name, []).append((rep.wc_ratio, rep.avg_ratio, rep.alpha, rep.alpha_beta))

    print("policy,mean_wc_ratio,mean_avg_ratio,mean_alpha,min_alpha,mean_alpha_beta")
    for name, vals in table.items():
        a = np.array(vals)
        print(f"{name},{a[:, 0].mean():.4f},{a[:, 1].mean():.4f},{a[:, 2].mean():.4f},{a[:, 2].min():.4f},{a[:, 3].mean():.4f}")


if __name__ == "__main__":
    main()
