"""Average-case reduction in version-space mass at k = 4 as the label alphabet grows."""
import argparse
import math

import numpy as np

from robustsub.applications import build_active_learning, random_hypothesis_space
from robustsub.experiment import POLICIES
from robustsub.policies import Environment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hypotheses", type=int, default=1000)
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--labels", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("labels,policy,f_avg")
    for L in args.labels:
        totals = {p: 0.0 for p in POLICIES}
        for rep in range(args.repetitions):
            rng = np.random.default_rng(args.seed + rep)
            inst = build_active_learning(random_hypothesis_space(rng, args.points, args.hypotheses, L))
            for name, run in POLICIES.items():
                utils = np.array([run(inst, args.k, Environment(inst, i), 0.5).utility for i in range(inst.m)])
                totals[name] += math.fsum(inst.probs * utils)
        for name in sorted(totals):
            print(f"{L},{name},{totals[name] / args.repetitions!r}")


if __name__ == "__main__":
    main()
