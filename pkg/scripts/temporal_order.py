#!/usr/bin/env python3
"""Observed temporal orders with and without extrapolation on a fixed spatial mesh.

Halves dt across the given M values for the built-in problems and for smooth
manufactured solutions whose data are compatible at every corner.
"""

from __future__ import annotations

import argparse

from spdelay.analysis import temporal_study
from spdelay.mesh import build_shishkin
from spdelay.problem import builtin_problem
from spdelay.verify import SPACE_FACTORS, TIME_FACTORS, manufactured_smooth


def fmt(values) -> str:
    return " ".join(f"{v:7.3f}" for v in values)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps-exponent", type=int, default=4, help="eps = 2^-k")
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--M", default="8,16,32,64", help="comma-separated doubling step counts")
    args = ap.parse_args(argv)

    eps = 2.0 ** -args.eps_exponent
    M_list = [int(m) for m in args.M.split(",")]
    mesh = build_shishkin(args.N, eps, 2.0, "minimal")
    cases = [(f"{pid}", builtin_problem(pid, 1, eps)) for pid in ("problem1", "problem2")]
    cases += [
        (f"smooth {s}/{t}", manufactured_smooth(eps, s, t)) for s in SPACE_FACTORS for t in TIME_FACTORS
    ]
    halvings = " ".join(f"{a}->{b}".rjust(7) for a, b in zip(M_list, M_list[1:]))
    print(f"eps = 2^-{args.eps_exponent}, N = {args.N}")
    print(f"{'case':28} plain  {halvings} | extrapolated {halvings}")
    for name, spec in cases:
        r = temporal_study(spec, mesh, M_list)
        print(f"{name:28}       {fmt(r.q)} |              {fmt(r.q_ext)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
