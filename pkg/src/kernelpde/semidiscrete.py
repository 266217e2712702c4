"""Semi-discrete scheme and classical RK4 time stepping.

Each grid coefficient obeys

    d/dt rho_i = -f(t, x_i, [rho](x_i), grad [rho](x_i)),    rho_i(0) = rho_0(x_i),

where ``[rho]`` is the kernel quasi-interpolant of the current coefficients.
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import BlowUpError, ConfigurationError
from .kernels import CompositeRadialKernel, ScaledKernel, make_kernel
from .quasi_interp import CoefficientField, GridEvaluator, Stencil, UniformGrid, build_stencil

__all__ = [
    "DefiningFunction",
    "SolverConfig",
    "SolveResult",
    "rhs",
    "rk4_step",
    "stable_dt",
    "solve",
    "DEFAULT_CFL",
]

log = logging.getLogger(__name__)

# Courant number against the spectral radius of the discrete gradient; RK4 is
# stable on the imaginary axis up to 2*sqrt(2).
DEFAULT_CFL = 1.0


@dataclass(frozen=True)
class DefiningFunction:
    """Problem ``d_t rho + f(t, x, rho, grad rho) = 0`` with initial data.

    ``f(t, x, rho, grad)`` is vectorised: ``x`` and ``grad`` have shape
    ``(n, *grid_shape)``, ``rho`` has shape ``grid_shape``. ``initial(x)`` and
    ``exact_solution(t, x)`` use the same coordinate layout; ``exact_gradient``
    returns an array with a leading axis of length ``n``.

    ``speed`` bounds ``|df/d(grad)|`` along the solution and enters the time
    step; it is estimated from the initial data when omitted.
    """

    f: Callable
    initial: Callable
    window: tuple
    exact_solution: Callable | None = None
    exact_gradient: Callable | None = None
    speed: float | None = None
    t_final: float = 0.5
    name: str = ""

    @property
    def dim(self) -> int:
        return len(np.atleast_1d(self.window[0]))


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation parameters.

    Either ``dt`` is given, or it is derived from ``cfl`` as
    ``cfl / (speed * ||grad stencil||)``.
    """

    h: float
    epsilon: float
    kernel_order: int = 4
    kernel_smoothness: int = 4
    t_final: float = 0.5
    dt: float | None = None
    cfl: float = DEFAULT_CFL
    dim: int = 1
    workers: int = 1

    def __post_init__(self):
        if not (0 < self.h < self.epsilon):
            raise ConfigurationError(f"need 0 < h < epsilon, got h={self.h}, epsilon={self.epsilon}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.cfl > 0:
            raise ConfigurationError("cfl must be positive")
        if self.t_final < 0:
            raise ConfigurationError("t_final must be non-negative")

    @classmethod
    def from_exponents(cls, nu_h: int, nu_eps: int, **kwargs) -> "SolverConfig":
        """Config with ``h = 2**nu_h`` and ``epsilon = 2**nu_eps``."""
        return cls(h=2.0**nu_h, epsilon=2.0**nu_eps, **kwargs)

    def kernel(self) -> CompositeRadialKernel:
        return make_kernel(self.kernel_order, self.kernel_smoothness, self.dim)

    def scaled_kernel(self) -> ScaledKernel:
        return ScaledKernel(self.kernel(), self.epsilon)


@dataclass
class SolveResult:
    field: CoefficientField
    steps: int
    dt: float
    wall_time: float
    stencil: Stencil = field(repr=False)
    snapshots: dict = field(default_factory=dict, repr=False)


def _as_evaluator(grid: UniformGrid, ops) -> GridEvaluator:
    if isinstance(ops, GridEvaluator):
        if ops.grid != grid:
            raise ConfigurationError("evaluator was built for a different grid")
        return ops
    if isinstance(ops, Stencil):
        return GridEvaluator(grid, ops)
    raise TypeError("expected a Stencil or GridEvaluator")


def _rhs_values(t, values, problem, evaluator, x):
    rho, grad = evaluator(values)
    return -problem.f(t, x, rho, grad)


def rhs(t: float, state: CoefficientField, problem: DefiningFunction, stencil) -> CoefficientField:
    """Time derivative of every coefficient, ``-f(t, x_i, [rho]_i, grad [rho]_i)``."""
    ev = _as_evaluator(state.grid, stencil)
    out = _rhs_values(t, state.values, problem, ev, state.grid.coordinates())
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite right-hand side", t, 0, state)
    return CoefficientField(state.grid, out, t)


def _rk4(t, y, dt, problem, ev, x, t_end=None):
    # t_end lets the last stage land on the exact time of the next step
    t_end = t + dt if t_end is None else t_end
    k1 = _rhs_values(t, y, problem, ev, x)
    k2 = _rhs_values(t + 0.5 * dt, y + 0.5 * dt * k1, problem, ev, x)
    k3 = _rhs_values(t + 0.5 * dt, y + 0.5 * dt * k2, problem, ev, x)
    k4 = _rhs_values(t_end, y + dt * k3, problem, ev, x)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(t: float, state: CoefficientField, dt: float, problem: DefiningFunction, stencil) -> CoefficientField:
    """One classical four-stage Runge-Kutta step of the semi-discrete system."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    ev = _as_evaluator(state.grid, stencil)
    new = _rk4(t, state.values, dt, problem, ev, state.grid.coordinates())
    if not np.all(np.isfinite(new)):
        raise BlowUpError("non-finite coefficients", t, 0, state)
    return CoefficientField(state.grid, new, t + dt)


def _estimate_speed(problem, x, rho, grad, t=0.0):
    """Magnitude of ``df/d(grad)`` by central differences, maximised over the grid."""
    total = np.zeros_like(rho)
    for d in range(grad.shape[0]):
        step = 1e-6 * (1.0 + np.abs(grad[d]))
        up, down = grad.copy(), grad.copy()
        up[d] += step
        down[d] -= step
        total += ((problem.f(t, x, rho, up) - problem.f(t, x, rho, down)) / (2 * step)) ** 2
    return float(np.sqrt(total.max()))


def stable_dt(problem: DefiningFunction, config: SolverConfig, stencil: Stencil, evaluator=None, x=None, y0=None) -> float:
    """Time step from ``config.dt`` or from the Courant number ``config.cfl``."""
    if config.dt is not None:
        return config.dt
    speed = problem.speed
    if speed is None:
        rho, grad = evaluator(y0)
        speed = _estimate_speed(problem, x, rho, grad)
    if speed <= 0:
        # no gradient coupling; the kernel scale is the only length available
        return config.cfl * config.epsilon
    return config.cfl / (speed * stencil.gradient_norm())


def _segments(t0: float, t1: float, dt: float):
    """Number of steps of size ``dt`` (the last one shortened) from ``t0`` to ``t1``."""
    length = t1 - t0
    if length <= 0:
        return 0
    return max(math.ceil(length / dt - 1e-12), 1)


def solve(problem: DefiningFunction, config: SolverConfig, snapshots: Sequence[float] = ()) -> SolveResult:
    """Integrate the semi-discrete system from ``0`` to ``config.t_final``.

    The grid covers ``problem.window``; coefficients outside it are zero.
    Snapshot times are hit exactly; the last step of every segment is
    shortened so that ``t_final`` is reproduced bit for bit.
    """
    if problem.dim != config.dim:
        raise ConfigurationError("problem and config dimensions differ")
    start = _time.perf_counter()
    grid = UniformGrid.covering(problem.window[0], problem.window[1], config.h)
    stencil = build_stencil(config.scaled_kernel(), config.h)
    ev = GridEvaluator(grid, stencil, workers=config.workers)
    x = grid.coordinates()
    y = np.asarray(problem.initial(x), dtype=float)
    T = config.t_final
    dt = stable_dt(problem, config, stencil, ev, x, y)
    marks = sorted({float(s) for s in snapshots if 0 <= s <= T} | {T})
    saved = {}
    if 0.0 in marks:
        saved[0.0] = CoefficientField(grid, y.copy(), 0.0)
    t, steps = 0.0, 0
    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for mark in marks:
            n = _segments(t, mark, dt)
            t_seg = t
            for k in range(n):
                t_next = mark if k == n - 1 else t_seg + (k + 1) * dt
                y_new = _rk4(t, y, t_next - t, problem, ev, x, t_next)
                if not np.all(np.isfinite(y_new)):
                    raise BlowUpError("non-finite coefficients", t, steps, CoefficientField(grid, y, t))
                y, t = y_new, t_next
                steps += 1
            saved[mark] = CoefficientField(grid, y.copy(), mark)
    wall = _time.perf_counter() - start
    log.debug("solved %s h=%g eps=%g: %d steps of %g in %.2fs", problem.name, config.h, config.epsilon, steps, dt, wall)
    final = CoefficientField(grid, y, T)
    return SolveResult(final, steps, dt, wall, stencil, {s: v for s, v in saved.items() if s in snapshots})
