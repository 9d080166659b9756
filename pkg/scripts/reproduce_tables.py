#!/usr/bin/env python3
"""Regenerate the convergence studies as CSV, Markdown and JSON.

Studies:
  problem1-compare        three schemes on problem 1 without extrapolation
  problem1-extrapolated   hybrid with extrapolation on problem 1
  problem2-compare        three schemes on problem 2 without extrapolation
  problem2-extrapolated   hybrid with extrapolation on problem 2
  problem1-degenerate     problem 1 with p = 3, 6, hybrid with extrapolation
  problem2-degenerate     problem 2 with p = 2, 5, hybrid with extrapolation

The default N range stops at 1024; pass --n-max 2048 for the full columns.
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from spdelay.analysis import run_comparison, run_sweep
from spdelay.problem import ProblemFamily

STUDIES = (
    "problem1-compare",
    "problem1-extrapolated",
    "problem2-compare",
    "problem2-extrapolated",
    "problem1-degenerate",
    "problem2-degenerate",
)
DEGENERATE_P = {"problem1": (3, 6), "problem2": (2, 5)}


def n_list(n_max: int) -> list[int]:
    out, N = [], 32
    while N <= n_max:
        out.append(N)
        N *= 2
    return out


def run_study(name: str, Ns, eps, threads: int):
    pid, kind = name.split("-")
    if kind == "compare":
        return run_comparison(ProblemFamily(pid, 1), Ns, eps, threads=threads)
    if kind == "extrapolated":
        return [run_sweep(ProblemFamily(pid, 1), "hybrid", True, Ns, eps, threads=threads)]
    return [
        run_sweep(ProblemFamily(pid, p), "hybrid", True, Ns, eps, threads=threads, label=f"p = {p}")
        for p in DEGENERATE_P[pid]
    ]


def write(tables, out: Path, stem: str):
    stacked = len(tables) > 1
    parts = [tb.to_csv(scheme_column=stacked) for tb in tables]
    (out / f"{stem}.csv").write_text(parts[0] + "".join(p.split("\n", 1)[1] for p in parts[1:]))
    (out / f"{stem}.md").write_text("\n".join(tb.to_markdown() for tb in tables))
    (out / f"{stem}.json").write_text(json.dumps([tb.to_dict() for tb in tables], indent=2))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("studies", nargs="*", metavar="study", help=f"any of {', '.join(STUDIES)} (default: all)")
    ap.add_argument("--n-max", type=int, default=1024, help="largest N (power of two, >= 32)")
    ap.add_argument("--eps-exponents", default="8,12,16,20,24,28,32,36,40", help="k values for eps = 2^-k")
    ap.add_argument("--threads", type=int, default=0, help="worker processes, 0 = one per CPU")
    ap.add_argument("--out", default="tables", help="output directory")
    args = ap.parse_args(argv)

    unknown = [s for s in args.studies if s not in STUDIES]
    if unknown:
        ap.error(f"unknown study {unknown[0]!r}")
    Ns = n_list(args.n_max)
    eps = [2.0 ** -int(k) for k in args.eps_exponents.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.studies or STUDIES:
        start = time.perf_counter()
        tables = run_study(name, Ns, eps, args.threads)
        write(tables, out, name)
        print(f"{name}: {time.perf_counter() - start:.1f} s")
        for tb in tables:
            print(tb.to_markdown())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
