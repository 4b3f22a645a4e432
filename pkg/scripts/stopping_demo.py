"""Stop as soon as a test rejects: the supermartingale keeps its level, the exact test does not.

    python scripts/stopping_demo.py [--reps R] [--max-n N] [--a A]
"""

import argparse

from seqcert.intervals import ConfidenceLevel
from seqcert.montecarlo import FixedN, Iid, PastDependent, ReplicationPlan, ThresholdLogT, run_exact_stopping, run_validity
from seqcert.supermartingale import PbrClamped, PbrPoint


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=20_000)
    p.add_argument("--max-n", type=int, default=1000)
    p.add_argument("--a", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    level = ConfidenceLevel(args.a)
    phi = 0.5
    rule = ThresholdLogT(level.alpha, args.max_n)
    rows = [
        ("pbr, iid theta=phi", run_validity(ReplicationPlan(args.reps, args.seed, Iid(phi), rule), phi, level, PbrPoint())),
        ("pbr clamped, past-dependent cap=phi",
         run_validity(ReplicationPlan(args.reps, args.seed, PastDependent(phi), rule), phi, level, PbrClamped())),
        ("exact, stop at first rejection",
         run_exact_stopping(ReplicationPlan(args.reps, args.seed, Iid(phi), FixedN(args.max_n)), phi, level)),
    ]
    print(f"phi={phi} a={args.a} max_n={args.max_n} reps={args.reps}")
    for label, est in rows:
        print(f"{label:40s} rejection rate {est.rate:.4f} +- {est.stderr:.4f}")


if __name__ == "__main__":
    main()
