"""Command-line entry point: one subcommand per computed artifact.

Every subcommand validates its geometry, calls one library function and
prints the result. ``--format csv|json`` switches stdout to a machine-readable
form and ``--out DIR`` additionally writes files.

Exit codes: 0 success, 1 failed acceptance criteria (``repro-paper``) or an
I/O error, 2 invalid arguments, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, acceptance, analysis, io_export, spectral2d, spectral3d
from .eigensolve import EigenSolveError
from .geometry import KappaPair
from .spectral2d import PI2, StripNumerics
from .spectral3d import IncisorNumerics, InconclusiveError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


@dataclass
class Output:
    """What a subcommand produced: a JSON payload, an optional table and optional VTK writers."""

    name: str
    payload: dict
    summary: str
    table: io_export.CurveTable | None = None
    fields: list = field(default_factory=list)  # (filename, mesh, vertex values)
    status: int = EXIT_OK
    text_lines: list = field(default_factory=list)  # written to <name>.txt


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_strip_numerics(p):
    d = StripNumerics()
    g = p.add_argument_group("2D numerics")
    g.add_argument("--R", type=float, default=d.R, help="truncation length (default %(default)s)")
    g.add_argument("--ny", type=_positive_int, default=d.ny, help="cells across the thickness")
    g.add_argument("--nx", type=_positive_int, default=None, help="cells along the strip (default R*ny/3)")
    g.add_argument("--order", type=int, choices=(1, 2), default=d.order)
    g.add_argument("--grading", type=float, default=d.grading)
    g.add_argument("--t-grading", type=float, default=d.t_grading)
    g.add_argument("--grading-cap", type=float, default=d.grading_cap)
    g.add_argument("--artificial-bc", choices=("dirichlet", "neumann"), default=d.artificial_bc.value)
    g.add_argument("--tol", type=float, default=d.tol)


def _strip_numerics(a) -> StripNumerics:
    return StripNumerics(R=a.R, ny=a.ny, nx=a.nx, order=a.order, grading=a.grading, t_grading=a.t_grading,
                         grading_cap=a.grading_cap, artificial_bc=a.artificial_bc, tol=a.tol)


def _add_incisor_numerics(p, artificial_bc: str = "neumann"):
    d = IncisorNumerics()
    g = p.add_argument_group("3D numerics")
    g.add_argument("--R1", type=float, default=d.R1)
    g.add_argument("--R2", type=float, default=d.R2)
    g.add_argument("--n1", type=_positive_int, default=d.n1)
    g.add_argument("--n2", type=_positive_int, default=d.n2)
    g.add_argument("--n3", type=_positive_int, default=d.n3)
    g.add_argument("--order", type=int, choices=(1, 2), default=d.order)
    g.add_argument("--grading", type=float, default=d.grading)
    g.add_argument("--t-grading", type=float, default=d.t_grading)
    g.add_argument("--grading-cap", type=float, default=d.grading_cap)
    g.add_argument("--artificial-bc", choices=("dirichlet", "neumann"), default=artificial_bc)
    g.add_argument("--k", type=_positive_int, default=d.k, help="number of eigenpairs")
    g.add_argument("--tol", type=float, default=d.tol)


def _incisor_numerics(a) -> IncisorNumerics:
    return IncisorNumerics(R1=a.R1, R2=a.R2, n1=a.n1, n2=a.n2, n3=a.n3, order=a.order, grading=a.grading,
                           t_grading=a.t_grading, grading_cap=a.grading_cap, artificial_bc=a.artificial_bc,
                           k=a.k, tol=a.tol)


def _add_kappa(p, second: bool = True):
    p.add_argument("--kappa1", type=float, required=True)
    if second:
        p.add_argument("--kappa2", type=float, required=True)


def _table(columns, records, provenance=None):
    return io_export.CurveTable.from_dicts(columns, records, provenance)


# subcommand handlers: parsed arguments -> Output

def cmd_mu1(a) -> Output:
    s = spectral2d.mu1(a.alpha, _strip_numerics(a))
    v = s.eigenfunction
    return Output("mu1", s.row(), f"mu1/pi^2 = {s.mu1_over_pi2:.6f}  (mu1 = {s.mu1:.10g}, residual {s.residual:.1e})",
                  _table(spectral2d.CSV_COLUMNS, [s.row()]),
                  [("mu1_eigenfunction.vtk", v.mesh, v.space.vertex_values(v.values))])


def cmd_threshold_curve(a) -> Output:
    alphas = a.alphas if a.alphas else list(acceptance.CURVE_ALPHAS)
    num = _strip_numerics(a)
    curve = spectral2d.threshold_curve(alphas, num)
    rows = [s.row() for s in curve]
    text = "\n".join(f"alpha = {s.alpha:.6g}  mu1/pi^2 = {s.mu1_over_pi2:.6f}" for s in curve)
    prov = {"artificial_bc": num.artificial_bc.value, "grading": num.grading, "t_grading": num.t_grading,
            "grading_cap": num.grading_cap, "version": __version__}
    return Output("threshold_curve", {"samples": rows}, text, _table(spectral2d.CSV_COLUMNS, rows, prov))


def cmd_lambda_dagger(a) -> Output:
    kappa = KappaPair(a.kappa1, a.kappa2)
    lam = spectral2d.lambda_dagger(kappa, _strip_numerics(a))
    payload = {"kappa1": kappa.kappa1, "kappa2": kappa.kappa2, "lambda_dagger": lam, "lambda_dagger_over_pi2": lam / PI2}
    return Output("lambda_dagger", payload, f"lambda_dagger/pi^2 = {lam / PI2:.6f}",
                  _table(list(payload), [payload]))


def _spectrum_rows(r) -> list[dict]:
    return [{"index": i + 1, "lambda": lam, "lambda_over_pi2": lam / PI2, "residual": res,
             "below_threshold": int(lam < r.threshold)} for i, (lam, res) in enumerate(zip(r.values, r.residuals))]


def cmd_solve3d(a) -> Output:
    kappa = KappaPair(a.kappa1, a.kappa2)
    r = spectral3d.solve_incisor(kappa, _incisor_numerics(a), margin=a.margin, keep_vectors=True)
    lines = [f"kappa = ({kappa.kappa1:g}, {kappa.kappa2:g}), {r.n_free} free dofs",
             f"lambda_dagger/pi^2 = {r.lambda_dagger / PI2:.6f}, margin/pi^2 = {r.margin / PI2:.5f}",
             "lambda/pi^2 = " + ", ".join(f"{x:.6f}" for x in r.values / PI2),
             f"lambda1/pi^2 = {r.lambda1 / PI2:.6f}; {len(r.discrete)} below lambda_dagger - margin"]
    if r.undecided:
        lines.append("lambda1 lies within the margin of lambda_dagger: undecided at this resolution")
    fields = [("solve3d_u1.vtk", r.space.mesh, r.space.vertex_values(r.vectors[:, 0]))]
    return Output("solve3d", r.to_dict(), "\n".join(lines),
                  _table(["index", "lambda", "lambda_over_pi2", "residual", "below_threshold"], _spectrum_rows(r),
                         r.to_dict()), fields)


def cmd_sweep(a) -> Output:
    grid = a.grid
    for k2 in grid:
        KappaPair(a.kappa1, k2)
    s = spectral3d.sweep_kappa2(a.kappa1, grid, _incisor_numerics(a), workers=a.workers)
    rows = s.rows()
    text = "\n".join(f"kappa2 = {k2:+.4f}  lambda1/pi^2 = {lam / PI2:.6f}  below = {bool(b)}"
                     for k2, lam, b in zip(s.kappa2, s.lambda1, s.below))
    text += f"\nlambda_dagger/pi^2 = {s.lambda_dagger / PI2:.6f}"
    payload = {"rows": rows, "lambda1_over_pi2": (s.lambda1 / PI2).tolist(), "residuals": s.residual1.tolist()}
    return Output("sweep_kappa2", payload, text,
                  _table(spectral3d.SWEEP_COLUMNS, rows, {"numerics": s.numerics.provenance()}))


def cmd_find_h(a) -> Output:
    KappaPair(a.kappa1, 0.0)
    bracket = None if a.lo is None and a.hi is None else (a.lo or 0.0, a.kappa1 if a.hi is None else a.hi)
    est = spectral3d.find_h(a.kappa1, bracket, a.tol_kappa2, _incisor_numerics(a))
    rows = [{"kappa2": k2, "lambda1_over_pi2": lam / PI2, "threshold_over_pi2": thr / PI2, "below_flag": int(b)}
            for k2, lam, thr, b in est.evaluations]
    return Output("find_h", est.to_dict(),
                  f"h({a.kappa1:g}) = {est.h:.5f}, bracket [{est.lo:.5f}, {est.hi:.5f}] after {len(rows)} solves",
                  _table(["kappa2", "lambda1_over_pi2", "threshold_over_pi2", "below_flag"], rows, est.to_dict()))


def cmd_count(a) -> Output:
    kappa = KappaPair(a.kappa1, a.kappa2)
    n = spectral3d.count_discrete(kappa, _incisor_numerics(a), k_max=a.k_max)
    payload = {"kappa1": kappa.kappa1, "kappa2": kappa.kappa2, "count": n}
    return Output("count", payload, f"{n} eigenvalue(s) below lambda_dagger - margin", _table(list(payload), [payload]))


def cmd_dirichlet_check(a) -> Output:
    kappa = KappaPair(a.kappa1, a.kappa2)
    rep = spectral3d.dirichlet_absence_check(kappa, tuple(a.radii), _incisor_numerics(a), a.rel_tol)
    rows = [{"R": R, "lambda1_over_pi2": v / PI2} for R, v in zip(rep.radii, rep.values)]
    text = "\n".join(f"R = {r['R']:g}  lambda1/pi^2 = {r['lambda1_over_pi2']:.6f}" for r in rows)
    text += f"\nabove pi^2(1 - {a.rel_tol:g}): {rep.above_floor}; nonincreasing in R: {rep.nonincreasing}"
    return Output("dirichlet_check", rep.to_dict(), text, _table(["R", "lambda1_over_pi2"], rows, rep.to_dict()),
                  status=EXIT_OK if rep.ok else EXIT_FAILED)


def _trial_output(name, rep) -> Output:
    d = rep.to_dict()
    text = (f"gap = {rep.quotient_gap:.8g} ({'negative' if rep.negative else 'not negative'}) at eps = {rep.epsilon:g}; "
            f"eps* = {rep.epsilon_star:.6g}")
    if rep.I_Gamma1 is not None:
        text += f"\nplus_part/eps = {rep.plus_part / rep.epsilon:.10f}, I_Gamma1 = {rep.I_Gamma1:.8g}"
    flat = {k: v for k, v in d.items() if not isinstance(v, dict)}
    return Output(name, d, text, _table(list(flat), [flat]))


def cmd_certify_negative(a) -> Output:
    kappa = KappaPair(a.kappa1, a.kappa2)
    return _trial_output("certify_negative", analysis.trial_quotient_negative_kappa2(kappa, a.epsilon))


def cmd_certify_symmetric(a) -> Output:
    KappaPair(a.kappa1, a.kappa1)
    return _trial_output("certify_symmetric", analysis.trial_quotient_symmetric(a.kappa1, a.epsilon))


def cmd_tau1_prime(a) -> Output:
    if not 0 < a.alpha1 < math.pi / 2:
        raise ValueError(f"alpha1 must lie in (0, pi/2), got {a.alpha1}")
    s = spectral2d.mu1(a.alpha1, _strip_numerics(a))
    tau = analysis.tau1_prime(a.alpha1, s.eigenfunction)
    payload = {"alpha1": a.alpha1, "tau1_prime": tau, "mu1_over_pi2": s.mu1_over_pi2}
    return Output("tau1_prime", payload, f"tau1'({a.alpha1:g}) = {tau:.8f}", _table(list(payload), [payload]))


def cmd_repro(a) -> Output:
    if a.out is None:
        a.out = Path("repro-out")
    numbers = sorted(set(int(x) for x in a.only)) if a.only else sorted(acceptance.CRITERIA)
    bad = [n for n in numbers if n not in acceptance.CRITERIA]
    if bad:
        raise ValueError(f"unknown criteria {bad}; valid numbers are 1..{len(acceptance.CRITERIA)}")
    echo = None if a.format else print
    results = acceptance.run_all(numbers, echo=echo)
    passed = sum(r.passed for r in results)
    rows = [{"criterion": r.number, "passed": int(r.passed), "elapsed_s": r.elapsed, "detail": r.detail}
            for r in results]
    payload = {"passed": passed, "total": len(results), "criteria": [r.to_dict() for r in results],
               "version": __version__}
    out = Output("repro_paper", payload, f"{passed}/{len(results)} criteria passed",
                 _table(["criterion", "passed", "elapsed_s", "detail"], rows),
                 status=EXIT_OK if passed == len(results) else EXIT_FAILED)
    out.text_lines = [r.line() for r in results]
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trapmodes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="directory for CSV/JSON/VTK files")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="machine-readable stdout")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("mu1", cmd_mu1, "first eigenvalue of the pointed strip")
    p.add_argument("--alpha", type=float, required=True)
    _add_strip_numerics(p)

    p = add("threshold-curve", cmd_threshold_curve, "mu1 over a grid of angles")
    p.add_argument("--alphas", type=_floats, default=None, help="comma-separated angles (default 0.1,...,1.4)")
    _add_strip_numerics(p)

    p = add("lambda-dagger", cmd_lambda_dagger, "essential-spectrum threshold of the incisor")
    _add_kappa(p)
    _add_strip_numerics(p)

    p = add("solve3d", cmd_solve3d, "smallest eigenvalues of the truncated incisor")
    _add_kappa(p)
    _add_incisor_numerics(p)
    p.add_argument("--margin", type=float, default=None, help="detection margin (default from an R-doubling run)")

    p = add("sweep-kappa2", cmd_sweep, "first eigenvalue along kappa2")
    _add_kappa(p, second=False)
    p.add_argument("--grid", type=_floats, required=True, help="comma-separated kappa2 values; write --grid=-1,-0.5 when the list starts with a minus sign")
    p.add_argument("--workers", type=_positive_int, default=1)
    _add_incisor_numerics(p)

    p = add("find-h", cmd_find_h, "bisect for the transition point on the positive side")
    _add_kappa(p, second=False)
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--tol-kappa2", type=float, default=0.05)
    _add_incisor_numerics(p)

    p = add("count", cmd_count, "number of eigenvalues below the threshold")
    _add_kappa(p)
    p.add_argument("--k-max", type=_positive_int, default=40)
    _add_incisor_numerics(p)

    p = add("dirichlet-check", cmd_dirichlet_check, "full-Dirichlet runs must stay above pi^2")
    _add_kappa(p)
    p.add_argument("--radii", type=_floats, default=[4.0, 6.0, 8.0])
    p.add_argument("--rel-tol", type=float, default=1e-3)
    _add_incisor_numerics(p, artificial_bc="dirichlet")

    p = add("certify-negative", cmd_certify_negative, "trial-function certificate for kappa2 < 0")
    _add_kappa(p)
    p.add_argument("--epsilon", type=float, default=1e-3)

    p = add("certify-symmetric", cmd_certify_symmetric, "trial-function certificate for kappa1 = kappa2")
    _add_kappa(p, second=False)
    p.add_argument("--epsilon", type=float, default=1e-3)

    p = add("tau1-prime", cmd_tau1_prime, "first-order coefficient of mu1 under a kappa2 perturbation")
    p.add_argument("--alpha1", type=float, required=True)
    _add_strip_numerics(p)

    p = add("repro-paper", cmd_repro, "run every acceptance check and write a summary")
    p.add_argument("--only", type=_floats, default=None, help="comma-separated criterion numbers")
    p.epilog = "The summary goes to --out (default ./repro-out)."
    return parser


def _emit(out: Output, fmt: str | None) -> None:
    if fmt == "json":
        json.dump(io_export._jsonable(out.payload), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    elif fmt == "csv":
        table = out.table or io_export.CurveTable([], [])
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([io_export.format_number(x) for x in r])
    else:
        print(out.summary)


def _write_files(out: Output, directory: Path, fmt: str | None) -> list[Path]:
    written = [io_export.write_json(out.payload, directory / f"{out.name}.json")]
    if out.table is not None and fmt != "json":
        written.append(io_export.write_csv(out.table, directory / f"{out.name}.csv"))
    for filename, mesh, values in out.fields:
        written.append(io_export.write_vtk(mesh, np.asarray(values), directory / filename))
        written.append(io_export.write_boundary_vtk(mesh, directory / filename.replace(".vtk", "_boundary.vtk")))
    if out.text_lines:
        path = directory / f"{out.name}.txt"
        path.write_text("\n".join(out.text_lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def run(argv=None) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage itself
        return int(exc.code or 0)
    try:
        out = args.func(args)
    except (EigenSolveError, InconclusiveError, np.linalg.LinAlgError) as exc:
        print(f"trapmodes {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"trapmodes {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(out, args.format)
    if args.out is not None:
        try:
            for path in _write_files(out, args.out, args.format):
                print(f"wrote {path}", file=sys.stderr)
        except OSError as exc:
            print(f"trapmodes {args.command}: {exc}", file=sys.stderr)
            return EXIT_FAILED
    return out.status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
