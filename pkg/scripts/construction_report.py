"""Stage-by-stage log of the divergent sequence construction for g_s.

    python3 scripts/construction_report.py --s 0.5 --K 20
"""

from __future__ import annotations

import argparse
import logging
import time

from ergolab.divergence import (ConstructionOptions, GsFunction, construct_divergent_sequence,
                                schedule_from_example)
from ergolab.rotation import RotationSystem


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--K", type=int, default=20)
    ap.add_argument("--system", default="golden")
    ap.add_argument("--budget", type=int, default=10**7)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(relativeCreated)7d ms  %(message)s")

    f = GsFunction.make(args.s).as_monotone()
    sched = schedule_from_example(args.s, args.K, f)
    t0 = time.perf_counter()
    seq, reports = construct_divergent_sequence(RotationSystem.parse(args.system), f, sched,
                                                args.K, ConstructionOptions(max_total_elements=args.budget))
    print(f"{'k':>3} {'l_k':>9} {'d_k':>7} {'lhs_min':>9} {'rhs':>9} {'cert/arc':>15} passed")
    for r in reports:
        print(f"{r.k:>3} {r.l_k:>9} {r.d_k:>7} {r.lower_bound_lhs:>9.4f} {r.lower_bound_rhs:>9.4f} "
              f"{r.witness_certified_measure:>7.4f}/{r.arc_length:<7.4f} {r.passed}")
    print(f"total elements {seq.total}, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
