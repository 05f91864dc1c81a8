"""Average-case reduction in version-space mass of AP / WP / HP as k varies.

Writes one CSV per hypothesis count, e.g.

    python3 scripts/budget_sweep.py --hypotheses 1000 2000 --out results/
"""
import argparse
import time
from pathlib import Path

from robustsub.experiment import ExperimentConfig, rows_to_csv, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--hypotheses", type=int, nargs="+", default=[1000, 2000])
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--mixed", action="store_true", help="2/3/4 labels per point instead of binary")
    ap.add_argument("--repetitions", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for h in args.hypotheses:
        cfg = ExperimentConfig(
            points=args.points,
            hypotheses=h,
            mixed=args.mixed,
            repetitions=args.repetitions,
            seed=args.seed,
            jobs=args.jobs,
        )
        t0 = time.perf_counter()
        rows = run_experiment(cfg)
        tag = "mixed" if args.mixed else "binary"
        path = out / f"budget_sweep_{tag}_h{h}.csv"
        path.write_text(rows_to_csv(rows))
        print(f"wrote {path} in {time.perf_counter() - t0:.0f}s")
        for k in range(cfg.k_min, cfg.k_max + 1):
            vals = {r["policy"]: r["f_avg"] for r in rows if r["k"] == k}
            print(f"  k={k}  " + "  ".join(f"{p}={vals[p]:.6f}" for p in sorted(vals)))


if __name__ == "__main__":
    main()
