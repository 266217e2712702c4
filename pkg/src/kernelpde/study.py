"""Convergence tables over ``(h, eps) = (2**nu_h, 2**nu_eps)`` and the error-model fit.

The fitted model is ``E(h, eps) = C1 * eps**a + C2 * h**b / eps**c``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .exceptions import BlowUpError, ConfigurationError, FitError
from .problems import SERIES, burgers_f
from .quasi_interp import linf_grid_error
from .semidiscrete import DEFAULT_CFL, SolverConfig, solve

__all__ = ["ErrorTable", "FitResult", "run_cell", "run_table", "fit_error_model", "parse_range"]

log = logging.getLogger(__name__)

CSV_HEADER = ("nu_h", "nu_eps", "linf_error")


@dataclass
class ErrorTable:
    """Discrete maximum errors keyed by ``(nu_h, nu_eps)``; missing cells are absent."""

    cells: dict = field(default_factory=dict)
    series: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def nu_h(self) -> list[int]:
        return sorted({k[0] for k in self.cells}, reverse=True)

    @property
    def nu_eps(self) -> list[int]:
        return sorted({k[1] for k in self.cells}, reverse=True)

    def get(self, nu_h: int, nu_eps: int):
        return self.cells.get((nu_h, nu_eps))

    def column(self, nu_eps: int) -> list[tuple[int, float]]:
        """Cells of one ``eps``, from coarse to fine ``h``."""
        return sorted(((k[0], v) for k, v in self.cells.items() if k[1] == nu_eps), reverse=True)

    def row(self, nu_h: int) -> list[tuple[int, float]]:
        """Cells of one ``h``, from large to small ``eps``."""
        return sorted(((k[1], v) for k, v in self.cells.items() if k[0] == nu_h), reverse=True)

    def diagonal(self, offset: int) -> list[tuple[tuple[int, int], float]]:
        """Cells with ``nu_eps = nu_h + offset`` (fixed ``h/eps``), coarse to fine."""
        return sorted(((k, v) for k, v in self.cells.items() if k[1] - k[0] == offset), reverse=True)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for (nh, ne), v in sorted(self.cells.items(), key=lambda kv: (-kv[0][0], -kv[0][1])):
            w.writerow([nh, ne, repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, series: str = "") -> "ErrorTable":
        """Read a table from a path or from CSV text."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        reader = csv.reader(io.StringIO(source))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}")
        cells = {}
        for row in reader:
            if not row:
                continue
            cells[(int(row[0]), int(row[1]))] = float(row[2])
        return cls(cells, series)

    def render(self) -> str:
        """Plain-text layout with rows ``nu_h`` and columns ``nu_eps``."""
        cols = self.nu_eps
        lines = ["nu_h \\ nu_eps " + "".join(f"{c:>10d}" for c in cols)]
        for r in self.nu_h:
            cells = "".join(
                f"{self.cells[(r, c)]:>10.2e}" if (r, c) in self.cells else " " * 10 for c in cols
            )
            lines.append(f"{r:>14d}" + cells)
        return "\n".join(lines)


def parse_range(text: str) -> list[int]:
    """``"-9..-13"`` -> ``[-9, -10, -11, -12, -13]`` (either direction, inclusive)."""
    try:
        a, b = (int(p) for p in text.split(".."))
    except ValueError:
        raise ValueError(f"range must look like 'lo..hi', got {text!r}") from None
    step = 1 if b >= a else -1
    return list(range(a, b + step, step))


def run_cell(series: str, nu_h: int, nu_eps: int, cfl: float = DEFAULT_CFL, dt=None, t_final=None) -> float:
    """Solve one Burgers configuration and return the maximum error of the
    quasi-interpolant against the exact solution at the grid points."""
    spec = SERIES[series]
    problem = burgers_f(spec)
    T = spec.t_final if t_final is None else t_final
    config = SolverConfig.from_exponents(
        nu_h,
        nu_eps,
        kernel_order=spec.kernel_order,
        kernel_smoothness=spec.kernel_smoothness,
        t_final=T,
        cfl=cfl,
        dt=dt,
    )
    result = solve(problem, config)
    return linf_grid_error(result.field, lambda x: problem.exact_solution(T, x), stencil=result.stencil)


def _cell_job(args):
    series, nh, ne, kwargs = args
    start = time.perf_counter()
    try:
        value, err = run_cell(series, nh, ne, **kwargs), None
    except (BlowUpError, ConfigurationError, FloatingPointError) as exc:
        value, err = None, str(exc)
    return (nh, ne), value, err, time.perf_counter() - start


def run_table(
    series: str,
    nu_h_range,
    nu_eps_range,
    min_gap: int = 1,
    jobs: int = 1,
    **overrides,
) -> ErrorTable:
    """Errors for every ``(nu_h, nu_eps)`` with ``nu_eps - nu_h >= min_gap``.

    ``min_gap = 1`` keeps every cell with ``h < eps``. Cells whose solve
    fails are left out and listed in ``meta["failed"]``; wall times per cell
    go to ``meta["seconds"]``. ``overrides`` are
    passed to :func:`run_cell` (``cfl``, ``dt``, ``t_final``).
    """
    series = series.upper()
    if series not in SERIES:
        raise ConfigurationError(f"unknown series {series!r}")
    nu_h_range, nu_eps_range = list(nu_h_range), list(nu_eps_range)
    if not nu_h_range or not nu_eps_range:
        raise ConfigurationError("ranges must be non-empty")
    if min_gap < 1:
        raise ConfigurationError("min_gap must be at least 1 (h < eps)")
    todo = [
        (series, nh, ne, overrides)
        for nh in nu_h_range
        for ne in nu_eps_range
        if ne - nh >= min_gap
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_job, todo))
    else:
        results = [_cell_job(job) for job in todo]
    table = ErrorTable(series=series, meta={"failed": {}, "seconds": {}})
    for key, value, err, seconds in results:
        table.meta["seconds"][key] = seconds
        if value is None or not math.isfinite(value):
            table.meta["failed"][key] = err or "non-finite error"
            log.warning("cell %s failed: %s", key, err)
        else:
            table.cells[key] = value
    return table


@dataclass
class FitResult:
    """Parameters of ``C1 eps**a + C2 h**b / eps**c`` and fit diagnostics.

    ``residual`` is the root-mean-square misfit in natural-log units.
    ``eps_exponent`` is the slope of the plateau values of the fixed-eps
    columns, i.e. an estimate of ``a`` from the eps-dominated cells alone.
    ``reliable`` is False when the second term is poorly determined.
    """

    C1: float
    a: float
    C2: float
    b: float
    c: float
    residual: float
    eps_exponent: float | None = None
    stderr: dict = field(default_factory=dict)
    reliable: bool = True
    n_cells: int = 0
    iterations: int = 0

    def predict(self, h, eps):
        h, eps = np.asarray(h, float), np.asarray(eps, float)
        return self.C1 * eps**self.a + self.C2 * h**self.b / eps**self.c


def _plateaus(table: ErrorTable, tol: float):
    """Per column, the deepest value if the column has flattened out.

    A column counts as flat when its last two entries differ by at most the
    factor ``tol``. Returns ``{nu_eps: (plateau_value, pre_plateau_cells)}``.
    """
    out = {}
    for ne in table.nu_eps:
        col = table.column(ne)
        if len(col) < 2:
            continue
        last = col[-1][1]
        if max(col[-1][1], col[-2][1]) / min(col[-1][1], col[-2][1]) > tol:
            continue
        pre = [(nh, v) for nh, v in col if v > 2.0 * last]
        out[ne] = (last, pre)
    return out


def _initial_guess(table: ErrorTable, tol: float):
    plateaus = _plateaus(table, tol)
    a, lc1 = 3.0, 0.0
    if len(plateaus) >= 2:
        le = np.array([ne for ne in plateaus]) * math.log(2)
        lv = np.log([p[0] for p in plateaus.values()])
        a, lc1 = np.polyfit(le, lv, 1)
    elif plateaus:
        ne, (v, _) = next(iter(plateaus.items()))
        lc1 = math.log(v) - a * ne * math.log(2)
    # h-exponent from the pre-plateau slopes of every column
    slopes = []
    for ne in table.nu_eps:
        pre = [(nh, v) for nh, v in table.column(ne) if not plateaus or ne not in plateaus or v > 2 * plateaus[ne][0]]
        if len(pre) >= 2:
            nh, v = zip(*pre)
            slopes.append(np.polyfit(np.array(nh) * math.log(2), np.log(v), 1)[0])
    b = float(np.median(slopes)) if slopes else 3.0
    b = b if b > 0 else 3.0
    # with b fixed, log E - b log h = log C2 - c log eps on the h-dominated cells
    pts = [
        (ne * math.log(2), math.log(v) - b * nh * math.log(2))
        for (nh, ne), v in table.cells.items()
        if ne not in plateaus or v > 2 * plateaus[ne][0]
    ]
    if len({p[0] for p in pts}) >= 2:
        slope, lc2 = np.polyfit(*zip(*pts), 1)
        c = -slope
    else:
        c, lc2 = b + 1.0, float(np.median([p[1] for p in pts])) if pts else 0.0
    return plateaus, np.array([lc1, a, lc2, b, c], dtype=float)


def fit_error_model(table: ErrorTable, min_cells: int = 8, max_iter: int = 200, plateau_tol: float = 1.3) -> FitResult:
    """Least-squares fit of ``log E`` to ``log(C1 eps**a + C2 h**b / eps**c)``.

    Starting values come from the plateaus of the fixed-eps columns (for
    ``C1, a``) and their pre-plateau slopes (for ``b``, then ``C2, c``). The
    fit itself is a trust-region Gauss-Newton iteration.
    """
    cells = {k: v for k, v in table.cells.items() if v is not None and v > 0 and math.isfinite(v)}
    if len(cells) < min_cells:
        raise FitError(f"need at least {min_cells} cells, got {len(cells)}")
    clean = ErrorTable(cells, table.series)
    plateaus, theta0 = _initial_guess(clean, plateau_tol)
    keys = list(cells)
    lh = np.array([k[0] for k in keys]) * math.log(2)
    le = np.array([k[1] for k in keys]) * math.log(2)
    lv = np.log([cells[k] for k in keys])

    def terms(theta):
        lc1, a, lc2, b, c = theta
        return lc1 + a * le, lc2 + b * lh - c * le

    def resid(theta):
        return np.logaddexp(*terms(theta)) - lv

    def jac(theta):
        t1, t2 = terms(theta)
        w1 = np.exp(t1 - np.logaddexp(t1, t2))
        w2 = 1.0 - w1
        return np.column_stack([w1, w1 * le, w2, w2 * lh, -w2 * le])

    sol = least_squares(resid, theta0, jac=jac, method="trf", max_nfev=max_iter, x_scale="jac")
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError(f"error-model fit did not converge after {sol.nfev} iterations: {sol.message}")
    lc1, a, lc2, b, c = sol.x
    r = sol.fun
    dof = max(len(r) - 5, 1)
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * float(r @ r) / dof
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(5, np.inf)
    stderr = dict(zip(("logC1", "a", "logC2", "b", "c"), se))
    t1, t2 = terms(sol.x)
    # the second term has three parameters; ask for five cells it clearly dominates per parameter
    n_second = int(np.sum(t2 > t1 + math.log(2)))
    reliable = bool(n_second >= 15 and stderr["b"] < 0.5 and stderr["c"] < 0.5)
    eps_exponent = None
    if len(plateaus) >= 2:
        eps_exponent = float(
            np.polyfit(np.array(list(plateaus)) * math.log(2), np.log([p[0] for p in plateaus.values()]), 1)[0]
        )
    return FitResult(
        C1=float(math.exp(lc1)),
        a=float(a),
        C2=float(math.exp(lc2)),
        b=float(b),
        c=float(c),
        residual=float(np.sqrt(np.mean(r**2))),
        eps_exponent=eps_exponent,
        stderr={k: float(v) for k, v in stderr.items()},
        reliable=reliable,
        n_cells=len(cells),
        iterations=int(sol.nfev),
    )
