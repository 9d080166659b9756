"""Command-line entry point: ``spdelay {solve,table,compare,verify}``.

Exit codes: 0 success, 1 a verify property failed, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from . import exprparse
from .analysis import AnalysisError, resolve_mesh_choice, run_comparison, run_sweep
from .export import write_solution_binary, write_solution_csv
from .extrapolation import richardson
from .linalg import SingularSystemError
from .mesh import MeshError, build_timegrid, resolve_L, timegrid_for_steps, write_mesh_csv
from .problem import ProblemError, ProblemFamily
from .solver import SolverError, solve, stability_diagnostic
from .verify import run_suite

log = logging.getLogger("spdelay")

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
TABLE_FORMATS = ("csv", "md", "json")
SOLUTION_FORMATS = ("csv", "bin")


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("spdelay").joinpath("config_schema.json").read_text())


def validate(config: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{err.json_path}: {err.message}")


def parse_real(value, where: str) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    try:
        tree = exprparse.parse(value)
        if exprparse.free_variables(tree):
            raise ConfigError(f"{where}: {value!r} must be a constant expression")
        return float(exprparse.evaluate(tree, {}))
    except exprparse.ExprError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def family_from_config(problem: dict) -> ProblemFamily:
    p = int(problem.get("p", 1))
    if problem["id"] != "custom":
        return ProblemFamily(problem["id"], p)
    return ProblemFamily.custom(
        problem["expressions"],
        p,
        tau=float(problem.get("tau", 1.0)),
        T=float(problem.get("T", 2.0)),
        alpha=problem.get("alpha"),
        beta=problem.get("beta"),
        gamma=problem.get("gamma"),
    )


def effective_config(config: dict) -> dict:
    """Validated config with every default filled in and auto settings resolved."""
    validate(config)
    cfg = copy.deepcopy(config)
    prob = cfg["problem"]
    prob.setdefault("p", 1)
    if prob["id"] == "custom":
        prob.setdefault("tau", 1.0)
        prob.setdefault("T", 2.0)
    if "epsilon" in prob:
        prob["epsilon"] = parse_real(prob["epsilon"], "$.problem.epsilon")
        if not 0 < prob["epsilon"] <= 1:
            raise ConfigError(f"$.problem.epsilon: {prob['epsilon']} is outside (0, 1]")
    cfg.setdefault("scheme", "hybrid")
    cfg.setdefault("extrapolate", False)
    family = family_from_config(prob)
    mesh = cfg.setdefault("mesh", {})
    if "sweep" in cfg:
        sw = cfg["sweep"]
        sw["epsilon"] = [parse_real(v, f"$.sweep.epsilon[{i}]") for i, v in enumerate(sw["epsilon"])]
        sw.setdefault("M_rule", "N")
        sw.setdefault("schemes", [cfg["scheme"]])
    eps_probe = prob.get("epsilon", min(cfg.get("sweep", {}).get("epsilon", [1.0])))
    choice = resolve_mesh_choice(
        family, cfg["scheme"], mesh.get("sigma0", "auto"), mesh.get("L", "auto"), eps_probe
    )
    mesh["sigma0"], mesh["L"] = choice.sigma0, choice.L
    Ns = ([mesh["N"]] if "N" in mesh else []) + cfg.get("sweep", {}).get("N", [])
    if choice.sigma0 is not None:
        for N in Ns:
            try:
                resolve_L(N, choice.L)
            except MeshError as exc:
                raise ConfigError(f"$.mesh.L: {exc}") from exc
    if "N" in mesh:
        time = cfg.setdefault("time", {})
        if "M" not in time and "m_tau" not in time:
            time["M"] = mesh["N"]
    return cfg


# --------------------------------------------------------------------------
# commands


def _formats(args, allowed, default):
    chosen = args.format or list(default)
    bad = [f for f in chosen if f not in allowed]
    if bad:
        raise ConfigError(f"--format {bad[0]} is not valid here; choose from {', '.join(allowed)}")
    return chosen


def _write_table(tables, out: Path, stem: str, formats):
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        stacked = len(tables) > 1
        parts = [tb.to_csv(scheme_column=stacked) for tb in tables]
        # one header line for the stacked file
        text = parts[0] + "".join(part.split("\n", 1)[1] for part in parts[1:])
        (out / f"{stem}.csv").write_text(text)
    if "md" in formats:
        (out / f"{stem}.md").write_text("\n".join(tb.to_markdown() for tb in tables))
    if "json" in formats:
        payload = [tb.to_dict() for tb in tables]
        (out / f"{stem}.json").write_text(json.dumps(payload if len(payload) > 1 else payload[0], indent=2))


def cmd_solve(cfg: dict, args) -> int:
    if "N" not in cfg["mesh"] or "epsilon" not in cfg["problem"]:
        raise ConfigError("$.mesh.N and $.problem.epsilon are required for solve")
    formats = _formats(args, SOLUTION_FORMATS, ["csv"])
    family = family_from_config(cfg["problem"])
    eps = cfg["problem"]["epsilon"]
    spec = family.at(eps)
    choice = resolve_mesh_choice(family, cfg["scheme"], cfg["mesh"]["sigma0"], cfg["mesh"]["L"], eps)
    mesh = choice.build(cfg["mesh"]["N"], eps)
    time = cfg["time"]
    if "m_tau" in time:
        grid = build_timegrid(spec.tau, spec.T, time["m_tau"])
    else:
        grid = timegrid_for_steps(spec.tau, spec.T, time["M"])
    field = solve(spec, mesh, grid, cfg["scheme"])
    stab = stability_diagnostic(field, spec)
    result = field
    if cfg["extrapolate"]:
        fine = solve(spec, mesh, grid.refine(), cfg["scheme"])
        stab = max(stab, stability_diagnostic(fine, spec))
        result = richardson(field, fine)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        write_solution_csv(result, out / "solution.csv")
    if "bin" in formats:
        write_solution_binary(result, out / "solution.spdd")
    write_mesh_csv(mesh, out / "mesh.csv")

    st = field.stats
    adm = st.admissibility
    print(f"sigma = {mesh.sigma:.6g}  L = {mesh.L:.6g}  N = {mesh.N}  dt = {grid.dt:.6g}  M = {grid.M}")
    print(f"central set size per level: min {st.central_min}, max {st.central_max} of {mesh.N - 1}")
    print(f"sign pattern on every row: {st.sign_pattern_ok}; diagonally dominant: {st.diagonally_dominant}")
    print(
        f"admissibility: rate {adm.lhs_rate:.3e} >= {adm.rhs_rate:.3e} is {adm.rate_condition}, "
        f"mesh {adm.lhs_mesh:.3e} < {adm.rhs_mesh:.3e} is {adm.mesh_condition}"
    )
    print(f"stability diagnostic: {stab:.3e}")
    print(f"wrote {', '.join(formats)} to {out}")
    return EXIT_OK


def _sweep_args(cfg: dict):
    if "sweep" not in cfg:
        raise ConfigError("$.sweep is required for this command")
    sw = cfg["sweep"]
    return family_from_config(cfg["problem"]), sw


def cmd_table(cfg: dict, args) -> int:
    formats = _formats(args, TABLE_FORMATS, ["csv", "md"])
    family, sw = _sweep_args(cfg)
    tables = [
        run_sweep(
            family, scheme, cfg["extrapolate"], sw["N"], sw["epsilon"], sw["M_rule"],
            cfg["mesh"]["sigma0"] if scheme == cfg["scheme"] else "auto",
            cfg["mesh"]["L"] if scheme == cfg["scheme"] else "auto",
            args.threads,
        )
        for scheme in sw["schemes"]
    ]
    for tb in tables:
        print(tb.to_markdown())
    _write_table(tables, Path(args.out), "table", formats)
    return EXIT_OK


def cmd_compare(cfg: dict, args) -> int:
    formats = _formats(args, TABLE_FORMATS, ["csv", "md"])
    family, sw = _sweep_args(cfg)
    tables = run_comparison(family, sw["N"], sw["epsilon"], sw["M_rule"], threads=args.threads)
    for tb in tables:
        print(tb.to_markdown())
    _write_table(tables, Path(args.out), "compare", formats)
    return EXIT_OK


def cmd_verify(cfg: Optional[dict], args) -> int:
    if cfg is not None and "sweep" in cfg:
        family, sw = _sweep_args(cfg)
        sweeps = [(family, s, sw["N"], sw["epsilon"]) for s in sw["schemes"]]
        extrapolate = cfg["extrapolate"]
    else:
        small = ([32, 64, 128], [2.0**-8, 2.0**-16])
        sweeps = [(ProblemFamily(pid, 1), "hybrid", *small) for pid in ("problem1", "problem2")]
        extrapolate = True
    tables = [run_sweep(f, s, extrapolate, Ns, eps, threads=args.threads) for f, s, Ns, eps in sweeps]
    results = run_suite(args.seed, tables)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


COMMANDS = {"solve": cmd_solve, "table": cmd_table, "compare": cmd_compare, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spdelay", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration (optional for verify)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument(
        "--format", action="append", choices=TABLE_FORMATS + ("bin",),
        help="output format, repeatable (tables: csv md json; solve: csv bin)",
    )
    ap.add_argument("--threads", type=int, default=1, help="worker processes, 0 = one per CPU")
    ap.add_argument("--seed", type=int, default=0, help="seed for the verify suite")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 0:
        print("config error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = None
        if args.config is not None:
            try:
                raw = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from exc
            cfg = effective_config(raw)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            text = json.dumps(cfg, indent=2)
            (out / "effective_config.json").write_text(text + "\n")
            print("effective config:")
            print(text)
        elif args.command != "verify":
            raise ConfigError("--config is required")
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ProblemError, MeshError, AnalysisError, exprparse.ExprError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SingularSystemError, FloatingPointError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
