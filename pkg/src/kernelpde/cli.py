"""Command-line harness: single runs, convergence tables, error-model fits, kernel checks."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .exceptions import BlowUpError, ConfigurationError, FitError, SmoothnessError
from .kernels import moment_table, parse_kernel_spec, make_kernel
from .problems import SERIES, get_problem
from .quasi_interp import linf_grid_error, write_field_csv
from .semidiscrete import DEFAULT_CFL, SolverConfig, solve
from .study import ErrorTable, fit_error_model, parse_range, run_table

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kernelpde", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="single solve with error report")
    run.add_argument("--problem", default="burgers-a", help="burgers-a, burgers-b or transport:<u>")
    run.add_argument("--nu-h", type=int, required=True, help="h = 2**nu_h")
    run.add_argument("--nu-eps", type=int, required=True, help="eps = 2**nu_eps")
    run.add_argument("--kernel-order", type=int)
    run.add_argument("--kernel-smoothness", type=int)
    run.add_argument("--t-final", type=float)
    run.add_argument("--cfl", type=float, default=DEFAULT_CFL)
    run.add_argument("--dt", type=float)
    run.add_argument("--out", type=Path, help="CSV for the final coefficients")
    run.add_argument("--snapshots", help="comma separated times; written next to --out")

    table = sub.add_parser("table", help="error table over (nu_h, nu_eps)")
    table.add_argument("--series", choices=sorted(SERIES), required=True)
    table.add_argument("--nu-h-range", required=True, help="e.g. -9..-14")
    table.add_argument("--nu-eps-range", required=True, help="e.g. -6..-11")
    table.add_argument("--min-gap", type=int, default=1, help="keep cells with nu_eps - nu_h >= gap")
    table.add_argument("--cfl", type=float, default=DEFAULT_CFL)
    table.add_argument("--jobs", type=int, default=1)
    table.add_argument("--out", type=Path, help="CSV output (default: stdout)")
    table.add_argument("--text", action="store_true", help="also print the table layout")

    fit = sub.add_parser("fit", help="fit C1 eps^a + C2 h^b / eps^c to a table CSV")
    fit.add_argument("--input", type=Path, required=True)

    kern = sub.add_parser("kernel", help="kernel weights and moment conditions")
    kern.add_argument("--order", type=int, default=4)
    kern.add_argument("--smoothness", type=int, default=4)
    kern.add_argument("--dim", type=int, default=1)
    kern.add_argument("--spec", help="wendland:<n>:<k> or composite:<order>:<smoothness>:<n>")
    kern.add_argument("--check-moments", action="store_true")
    return p


def _cmd_run(args) -> int:
    problem = get_problem(args.problem)
    defaults = SERIES["B"] if args.problem.lower() == "burgers-b" else SERIES["A"]
    T = problem.t_final if args.t_final is None else args.t_final
    config = SolverConfig.from_exponents(
        args.nu_h,
        args.nu_eps,
        kernel_order=args.kernel_order or defaults.kernel_order,
        kernel_smoothness=args.kernel_smoothness or defaults.kernel_smoothness,
        t_final=T,
        cfl=args.cfl,
        dt=args.dt,
    )
    snaps = [float(s) for s in args.snapshots.split(",")] if args.snapshots else []
    result = solve(problem, config, snapshots=snaps)
    print(f"problem={problem.name} h=2^{args.nu_h} eps=2^{args.nu_eps} steps={result.steps} "
          f"dt={result.dt:.6g} wall={result.wall_time:.2f}s")
    if problem.exact_solution is not None:
        err = linf_grid_error(result.field, lambda x: problem.exact_solution(T, x), stencil=result.stencil)
        print(f"linf_error {err:.6e}")
    if args.out:
        write_field_csv(result.field, args.out)
        for t, snap in result.snapshots.items():
            write_field_csv(snap, args.out.with_name(f"{args.out.stem}_t{t:g}{args.out.suffix}"))
    return EXIT_OK


def _cmd_table(args) -> int:
    table = run_table(
        args.series,
        parse_range(args.nu_h_range),
        parse_range(args.nu_eps_range),
        min_gap=args.min_gap,
        jobs=args.jobs,
        cfl=args.cfl,
    )
    text = table.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.text:
        print(table.render(), file=sys.stderr if args.out is None else sys.stdout)
    for key, why in table.meta.get("failed", {}).items():
        print(f"cell {key} absent: {why}", file=sys.stderr)
    return EXIT_OK


def _cmd_fit(args) -> int:
    table = ErrorTable.from_csv(args.input)
    fit = fit_error_model(table)
    print(f"model: C1*eps^a + C2*h^b/eps^c  ({fit.n_cells} cells)")
    print(f"C1 {fit.C1:.6g}\na {fit.a:.4f}\nC2 {fit.C2:.6g}\nb {fit.b:.4f}\nc {fit.c:.4f}")
    print(f"residual {fit.residual:.4g}")
    if fit.eps_exponent is not None:
        print(f"eps_exponent {fit.eps_exponent:.4f}")
    if not fit.reliable:
        print("warning: (b, c) poorly determined by these cells")
    return EXIT_OK


def _cmd_kernel(args) -> int:
    kernel = parse_kernel_spec(args.spec) if args.spec else make_kernel(args.order, args.smoothness, args.dim)
    print(f"order {kernel.order} smoothness C^{kernel.smoothness} dim {kernel.dim}")
    for a, lam in zip(kernel.nodes, kernel.weights):
        print(f"node {a}  weight {lam} ({float(lam):.17g})")
    if args.check_moments:
        print("i  moment                  target")
        ok = True
        for i, m, target in moment_table(kernel):
            tag = "" if target is None else f"{target:.17g}"
            print(f"{i}  {m: .17e}  {tag}")
            if target is not None and abs(m - target) > 1e-10:
                ok = False
        print("moments ok" if ok else "moment check FAILED")
        return EXIT_OK if ok else EXIT_NUMERIC
    return EXIT_OK


_RANGE_FLAGS = ("--nu-h-range", "--nu-eps-range")


def _attach_ranges(argv):
    # argparse reads "-9..-13" as an option, so glue range values to their flag
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    argv = _attach_ranges(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    handler = {"run": _cmd_run, "table": _cmd_table, "fit": _cmd_fit, "kernel": _cmd_kernel}[args.command]
    try:
        return handler(args)
    except (ConfigurationError, SmoothnessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BlowUpError, FitError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
