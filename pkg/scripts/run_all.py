"""Run every config in scripts/configs and print a one-line result per experiment.

    python3 scripts/run_all.py [--only NAME ...] [--out DIR]
"""

from __future__ import annotations

import argparse
import os
import time
from pathlib import Path

from ergolab.cli import run, validate

HERE = Path(__file__).resolve().parent


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--only", nargs="*", default=None, help="config stems to run")
    ap.add_argument("--out", default="lab_output", help="root output directory")
    args = ap.parse_args()
    worst = 0
    for path in sorted((HERE / "configs").glob("*.yaml")):
        if args.only and path.stem not in args.only:
            continue
        cfg = validate(path.read_text())
        if isinstance(cfg, list):
            print(f"{path.name}: invalid\n  " + "\n  ".join(cfg))
            worst = max(worst, 2)
            continue
        os.environ["LAB_OUTPUT_DIR"] = str(Path(args.out) / path.stem)
        t0 = time.perf_counter()
        status, summary = run(cfg)
        brief = summary.get("result") or summary.get("error")
        print(f"{path.stem:15s} status={status} {time.perf_counter() - t0:6.2f}s {brief}")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
