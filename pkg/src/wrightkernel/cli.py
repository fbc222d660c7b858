"""Command-line front end: kernel tables, gap-probability curves and verification suites.

Exit codes: 0 success, 1 a verification check failed, 2 invalid configuration.
CSV numbers are written with 17 significant digits so reruns diff cleanly.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameters, NearDiagonal, SingularSystem, WrightKernelError
from .fredholm import IntervalUnion, gap_probability, small_s_asymptote
from .kernel import (
    ConcomitantCoeffs,
    KernelParams,
    boundary_decay,
    boundary_exponent,
    concomitant_coeffs,
    f_ode_residual,
    g_ode_residual,
    kernel_integrable,
    kernel_integral,
    kernel_series,
)
from .ode_gap import gap_curve_ode

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

FIG1_CURVES = (("theta=1", 1, 1, 1), ("theta=2", 1, 2, 1))
STANDARD_GRID = ((1, 1, 1), (1, 2, 1), (1, 1, 2), (2, 3, 2), (0.5, 1, 2))
SUITES = ("representation", "wright-ode", "boundary", "gap", "pde", "hamiltonian")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def write_csv(rows, header, out) -> None:
    handle = open(out, "w", newline="") if out and out != "-" else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    finally:
        if handle is not sys.stdout:
            handle.close()


def grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 0:
        raise InvalidParameters("grid steps must be non-negative")
    if steps == 1:
        return np.array([lo])
    return np.linspace(lo, hi, steps)


def params_from(args) -> KernelParams:
    return KernelParams(args.alpha, args.m, args.n)


# ---------------------------------------------------------------------------
# eval-kernel


def cmd_eval_kernel(args) -> int:
    params = params_from(args)
    with_integrable = args.mode == "all"
    if with_integrable:
        params.require_integrable()
    xs = grid(args.x_min, args.x_max, args.x_steps)
    ys = grid(args.y_min, args.y_max, args.y_steps)
    if (xs.size and xs.min() <= 0) or (ys.size and ys.min() < 0):
        raise InvalidParameters("kernel grids need x > 0 and y >= 0")
    header = ["x", "y", "K_series", "K_integral"]
    header += ["K_integrable"] if with_integrable else []
    header += ["max_pairwise_diff", "note"]
    rows = []
    for x in xs:
        for y in ys:
            vals = [kernel_series(params, x, y), kernel_integral(params, x, y, tol=args.tol)]
            note = ""
            if with_integrable:
                try:
                    vals.append(kernel_integrable(params, x, y))
                except NearDiagonal:
                    vals.append(math.nan)
                    note = "near-diagonal: integrable form skipped"
            finite = [v for v in vals if math.isfinite(v)]
            diff = max(finite) - min(finite)
            rows.append([x, y, *vals, diff, note])
    write_csv(rows, header, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gap


def gap_rows(label: str, params: KernelParams, s_values, order: int, tol: float) -> list[list]:
    rows = []
    ode = {r.s: r.value for r in gap_curve_ode(params, s_values, tol)}
    singular = False
    for s in s_values:
        F_ode = ode[float(s)]
        asym = small_s_asymptote(params, s) if s > 0 else 1.0
        if s == 0:
            rows.append([label, params.alpha, params.theta, 0.0, 1.0, 1.0, 1.0, 0.0, "ok"])
            continue
        if singular:
            rows.append([label, params.alpha, params.theta, s, math.nan, F_ode, asym, math.nan, "singular"])
            continue
        try:
            F = gap_probability(params, s, order)
            rows.append([label, params.alpha, params.theta, s, F, F_ode, asym, abs(F - F_ode), "ok"])
        except SingularSystem:
            singular = True
            rows.append([label, params.alpha, params.theta, s, math.nan, F_ode, asym, math.nan, "singular"])
    return rows


GAP_HEADER = ["curve", "alpha", "theta", "s", "F_fredholm", "F_ode", "asymptote", "abs_diff", "status"]


def cmd_gap(args) -> int:
    s_values = grid(args.s_min, args.s_max, args.s_steps)
    if s_values.size and (s_values.min() < 0 or np.any(np.diff(s_values) <= 0)):
        raise InvalidParameters("the s-grid must be non-negative and increasing")
    if args.preset == "fig1":
        curves = [(label, KernelParams(a, m, n)) for label, a, m, n in FIG1_CURVES]
    else:
        params = params_from(args)
        params.require_integrable()
        curves = [("custom", params)]
    rows = []
    for label, params in curves:
        rows += gap_rows(label, params, s_values, args.order, args.tol)
    write_csv(rows, GAP_HEADER, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and abs(self.value) <= self.tol


@dataclass
class Report:
    checks: list = field(default_factory=list)

    def add(self, suite, name, value, tol):
        self.checks.append(Check(suite, name, float(value), float(tol)))

    @property
    def failed_suites(self) -> list[str]:
        return sorted({c.suite for c in self.checks if not c.passed})


def flipped_b(params: KernelParams) -> ConcomitantCoeffs:
    c = concomitant_coeffs(params)
    return ConcomitantCoeffs(c.nu, tuple(-v for v in c.b))


def suite_representation(report: Report, grid_params, fault: str | None) -> None:
    pts = [(0.3, 1.1), (1.2, 0.4), (2.5, 1.7), (0.8, 2.9)]
    for a, m, n in grid_params:
        p = KernelParams(a, m, n)
        coeffs = flipped_b(p) if fault == "b-sign" else None
        worst_int, worst_intg = 0.0, 0.0
        for x, y in pts:
            ks = kernel_series(p, x, y)
            worst_int = max(worst_int, abs(ks - kernel_integral(p, x, y)))
            if p.is_integrable:
                worst_intg = max(worst_intg, abs(ks - kernel_integrable(p, x, y, coeffs=coeffs)))
        tag = f"alpha={float(p.alpha):g},m={m},n={n}"
        report.add("representation", f"series-vs-integral[{tag}]", worst_int, 1e-8)
        if p.is_integrable:
            report.add("representation", f"series-vs-integrable[{tag}]", worst_intg, 1e-7)


def suite_wright_ode(report: Report, grid_params) -> None:
    for a, m, n in grid_params:
        p = KernelParams(a, m, n)
        tag = f"alpha={float(p.alpha):g},m={m},n={n}"
        worst = max(max(abs(f_ode_residual(p, x)), abs(g_ode_residual(p, x))) for x in (0.5, 1.5, 3.0))
        report.add("wright-ode", f"f,g residual[{tag}]", worst, 1e-10)


def suite_boundary(report: Report, grid_params) -> None:
    for a, m, n in grid_params:
        p = KernelParams(a, m, n)
        if not p.is_integrable:
            continue
        mags, _ = boundary_decay(p, 1.3, 0.7)
        predicted = boundary_exponent(p)
        excess = mags[1] / (mags[0] * 1e-2**predicted)
        # passes when the decay is at least the predicted power, up to a factor 2
        report.add("boundary", f"decay-excess[alpha={float(p.alpha):g},m={m},n={n}]", max(0.0, excess - 2.0), 0.0)


def suite_gap(report: Report, order: int, tol: float) -> None:
    for label, a, m, n in FIG1_CURVES:
        p = KernelParams(a, m, n)
        s_values = [0.25, 0.5, 1.0, 2.0]
        res = gap_curve_ode(p, s_values, tol)
        worst = max(abs(r.value - gap_probability(p, r.s, order)) for r in res)
        report.add("gap", f"fredholm-vs-ode[{label}]", worst, 1e-5)
        report.add("gap", f"two-forms[{label}]", max(r.discrepancy for r in res), 1e-6)


def suite_pde(report: Report, params: KernelParams, J: IntervalUnion, order: int) -> None:
    from .pde_verify import pde_residuals

    for family, value in pde_residuals(params, J, order, 1e-4).items():
        report.add("pde", family, value, 1e-5)


def suite_hamiltonian(report: Report, params: KernelParams, J: IntervalUnion, order: int) -> None:
    from .pde_verify import hamiltonian_report

    rep = hamiltonian_report(params, J, order)
    report.add("hamiltonian", "H_k-vs-logdet", rep.max_hamiltonian_error, 1e-5)
    report.add("hamiltonian", "involution(relative)", rep.max_relative_bracket, 1e-8)


def cmd_verify(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    report = Report()
    params = params_from(args)
    J = IntervalUnion(tuple(args.endpoints))
    for suite in suites:
        if suite == "representation":
            suite_representation(report, STANDARD_GRID, args.inject_fault)
        elif suite == "wright-ode":
            suite_wright_ode(report, STANDARD_GRID)
        elif suite == "boundary":
            suite_boundary(report, STANDARD_GRID)
        elif suite == "gap":
            suite_gap(report, args.order, args.tol)
        elif suite == "pde":
            params.require_integrable()
            suite_pde(report, params, J, args.order)
        elif suite == "hamiltonian":
            params.require_integrable()
            suite_hamiltonian(report, params, J, args.order)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.suite:<15} {c.name:<45} {c.value:.3e}  (tol {c.tol:.1e})")
    if args.out:
        write_csv([[c.suite, c.name, c.value, c.tol, "pass" if c.passed else "fail"] for c in report.checks],
                  ["suite", "check", "value", "tol", "status"], args.out)
    failed = report.failed_suites
    if failed:
        print("failed suites: " + ", ".join(failed))
        return EXIT_FAIL
    print(f"all {len(report.checks)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wrightkernel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, alpha=1.0, m=2, n=1):
        p.add_argument("--alpha", type=float, default=alpha)
        p.add_argument("--m", type=int, default=m)
        p.add_argument("--n", type=int, default=n)
        p.add_argument("--order", type=int, default=32, help="Gauss-Legendre points per panel")
        p.add_argument("--tol", type=float, default=1e-11)
        p.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    ek = sub.add_parser("eval-kernel", help="tabulate the three kernel representations")
    common(ek)
    ek.add_argument("--x-min", type=float, default=0.25)
    ek.add_argument("--x-max", type=float, default=3.0)
    ek.add_argument("--x-steps", type=int, default=5)
    ek.add_argument("--y-min", type=float, default=0.1)
    ek.add_argument("--y-max", type=float, default=2.9)
    ek.add_argument("--y-steps", type=int, default=5)
    ek.add_argument("--mode", choices=("all", "series-integral"), default="all",
                    help="series-integral drops the integrable column (any alpha > -1)")
    ek.set_defaults(func=cmd_eval_kernel)

    gp = sub.add_parser("gap", help="gap probability F(s) by the Fredholm and ODE routes")
    common(gp)
    gp.add_argument("--s-min", type=float, default=0.0)
    gp.add_argument("--s-max", type=float, default=5.0)
    gp.add_argument("--s-steps", type=int, default=26)
    gp.add_argument("--preset", choices=("fig1",), default=None,
                    help="fig1: theta=1 and theta=2 curves at alpha=1")
    gp.set_defaults(func=cmd_gap)

    vf = sub.add_parser("verify", help="run the verification suites")
    common(vf)
    vf.set_defaults(out=None)
    vf.add_argument("--suite", choices=("all",) + SUITES, default="all")
    vf.add_argument("--endpoints", type=float, nargs="+", default=[0.2, 0.6, 1.0, 1.5],
                    help="interval union for the pde and hamiltonian suites")
    vf.add_argument("--inject-fault", choices=("b-sign",), default=None, help=argparse.SUPPRESS)
    vf.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WrightKernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
