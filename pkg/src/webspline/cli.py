"""Command-line driver: refinement sweeps, convergence tables and field dumps.

Example::

    webspline --problem population --order 3 --h 0.5,0.25,0.125,0.0625 --out run/

writes ``table.csv`` (columns ``h, dofs, iterations, eps_res, upper,
lower``, rows by descending h), ``summary.csv`` (one row per h with solver
and estimator details) and, with ``--emit-fields``, ``fields_h{h}.csv``
holding ``x, y, u1, u2, r1, r2`` on a uniform lattice of points inside the
domain.  Numbers are written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimate as est
from .assembly import DiscreteSolution, assemble
from .errors import ConfigError, WebSplineError
from .presets import PRESETS, get_preset
from .solver import SolverConfig, solve_block
from .web import WebBasis

log = logging.getLogger("webspline")

TABLE_COLUMNS = ("h", "dofs", "iterations", "eps_res", "upper", "lower")


@dataclass
class RunConfig:
    problem: str
    order: int = 3
    h_list: list = field(default_factory=list)
    solver: SolverConfig = field(default_factory=SolverConfig)
    estimate: bool = False
    theta_tilde: float | None = None
    flux: str = "projection"
    output_dir: Path = Path(".")
    emit_fields: bool = False
    quadrature_depth: int = 4
    negate_second_equation: bool = False
    lattice: int = 41

    def validate(self):
        if self.problem not in PRESETS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PRESETS)}")
        if not self.h_list:
            raise ConfigError("the list of grid widths is empty")
        if any(not h > 0 for h in self.h_list):
            raise ConfigError(f"grid widths must be positive, got {self.h_list}")
        if self.order < 2:
            raise ConfigError(f"order must be at least 2, got {self.order}")
        if self.flux not in est.FLUX_MODES:
            raise ConfigError(f"unknown flux mode {self.flux!r}")
        if self.theta_tilde is not None and not self.theta_tilde > 0:
            raise ConfigError(f"theta_tilde must be positive, got {self.theta_tilde}")
        if self.quadrature_depth < 0:
            raise ConfigError("quadrature depth must be non-negative")


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(k)) for k in header])


def _lattice(domain, count):
    lo, hi = domain.bbox
    axes = [np.linspace(a, b, count) for a, b in zip(lo, hi)]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    return pts[domain.inside(pts)]


def _field_rows(solution, domain, count):
    x = _lattice(domain, count)
    u = [solution.evaluate(i, x, 0)["value"] for i in range(2)]
    if solution.basis.n >= 3:
        r1, r2 = est.strong_residual(solution, x)
    else:
        r1 = r2 = np.full(len(x), np.nan)
    y = x[:, 1] if x.shape[1] > 1 else np.zeros(len(x))
    return [{"x": x[p, 0], "y": y[p], "u1": u[0][p], "u2": u[1][p], "r1": r1[p], "r2": r2[p]}
            for p in range(len(x))]


def run_one(preset, h, config):
    """Solve at one grid width; returns ``(table_row, summary_row, solution)``."""
    basis = WebBasis(preset.domain, h, config.order, preset.weight)
    system = assemble(preset.data, basis, depth=config.quadrature_depth,
                      negate_second_equation=config.negate_second_equation)
    x, report = solve_block(system, config.solver)
    sol = DiscreteSolution(basis, preset.data, x)
    rules = est.fine_rules(basis, depth=config.quadrature_depth)
    eps = est.residual_epsilon(sol, rules) if config.order >= 3 else None
    summary = {"h": h, "dofs": 2 * basis.size, "iterations": report.iterations,
               "method": report.method_used, "definiteness": report.definiteness,
               "final_rel_residual": report.final_rel_residual, "eps_res": eps}
    exact = est.FunctionPair(preset.exact) if preset.exact is not None else None
    if exact is not None:
        summary["energy_error"] = est.energy_error(sol, exact, rules)
    upper = lower = None
    if config.estimate:
        fine = est.refined_solution(sol, config=config.solver, depth=config.quadrature_depth)
        flux = est.reconstruct_flux(sol, config.flux, depth=config.quadrature_depth)
        ref, mode = (exact, "oracle") if exact is not None else (fine, "surrogate")
        bd = est.upper_bound(sol, flux, config.theta_tilde, ref, mode, rules)
        bd.lower = est.lower_bound(sol, [fine], rules)
        upper, lower = bd.total, bd.lower
        summary.update(bd.to_record())
        for note in bd.notes:
            log.warning(note)
    row = {"h": h, "dofs": 2 * basis.size, "iterations": report.iterations, "eps_res": eps,
           "upper": upper, "lower": lower}
    return row, summary, sol


def run(config):
    """Run the sweep; returns a process exit status."""
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    preset = get_preset(config.problem)
    if preset.warn_nonelliptic:
        log.warning("problem %s: %s", preset.name, preset.notes)
    table, summary = [], []
    status = 0
    summary_keys = ["h", "dofs", "iterations", "method", "definiteness", "final_rel_residual",
                    "eps_res"]
    try:
        for h in sorted(config.h_list, reverse=True):
            row, srow, sol = run_one(preset, h, config)
            table.append(row)
            summary.append(srow)
            summary_keys += [k for k in srow if k not in summary_keys]
            if config.emit_fields:
                _write_csv(out / f"fields_h{h:g}.csv", ("x", "y", "u1", "u2", "r1", "r2"),
                           _field_rows(sol, preset.domain, config.lattice))
            log.info("h=%g dofs=%d eps_res=%s", h, row["dofs"], _fmt(row["eps_res"]))
    except WebSplineError as exc:
        print(f"webspline: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 1
    _write_csv(out / "table.csv", TABLE_COLUMNS, table)
    _write_csv(out / "summary.csv", summary_keys, summary)
    return status


def _h_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid width list {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="webspline", description=__doc__.splitlines()[0])
    p.add_argument("--problem", required=True, choices=PRESETS)
    p.add_argument("--order", type=int, default=3, help="spline order n (degree n - 1)")
    p.add_argument("--h", type=_h_list, default=[], help="comma separated grid widths")
    p.add_argument("--tol", type=float, default=1e-6, help="relative residual tolerance")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--ssor-omega", type=float, default=1.2)
    p.add_argument("--theta-tilde", type=float, default=None)
    p.add_argument("--flux", choices=est.FLUX_MODES, default="projection")
    p.add_argument("--quad-depth", type=int, default=4, help="cut-cell subdivision depth")
    p.add_argument("--estimate", action="store_true", help="compute upper and lower bounds")
    p.add_argument("--emit-fields", action="store_true")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--negate-second-equation", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed of the definiteness probe")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        solver = SolverConfig(tol=args.tol, max_iter=args.max_iter, ssor_omega=args.ssor_omega,
                              seed=args.seed)
        config = RunConfig(args.problem, args.order, args.h, solver, args.estimate,
                           args.theta_tilde, args.flux, Path(args.out), args.emit_fields,
                           args.quad_depth, args.negate_second_equation)
        config.validate()
    except (ValueError, ConfigError) as exc:
        print(f"webspline: error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
