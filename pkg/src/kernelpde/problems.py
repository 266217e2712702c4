"""Concrete test problems: a manufactured Burgers problem and linear transport."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ConfigurationError
from .kernels import (
    PRESET_NODES,
    CompositeRadialKernel,
    ScaledKernel,
    high_order_weights,
    make_kernel,
    wendland_base,
)
from .semidiscrete import DefiningFunction

__all__ = [
    "SeriesSpec",
    "SERIES",
    "BurgersManufactured",
    "burgers_f",
    "linear_transport",
    "get_problem",
    "WINDOW",
]

WINDOW = ((-1.25,), (0.75,))


@dataclass(frozen=True)
class SeriesSpec:
    """One of the two Burgers test series.

    The scheme uses ``make_kernel(kernel_order, kernel_smoothness, 1)``. The
    initial profile is ``delta**-1 * eta(|x| / delta)`` where ``eta`` is the
    order-``profile_order`` composite kernel built on the Wendland function
    ``profile_family = (n, k)``, renormalised to unit integral on the line.
    """

    series_id: str
    kernel_order: int
    kernel_smoothness: int
    profile_family: tuple[int, int]
    profile_order: int
    delta: float = 0.5
    t_final: float = 0.5

    def scheme_kernel(self) -> CompositeRadialKernel:
        return make_kernel(self.kernel_order, self.kernel_smoothness, 1)

    def profile_kernel(self) -> CompositeRadialKernel:
        base = wendland_base(*self.profile_family).renormalized(1)
        nodes = PRESET_NODES[self.profile_order // 2]
        return CompositeRadialKernel(base, nodes, tuple(high_order_weights(nodes, 1)))

    def profile(self) -> ScaledKernel:
        return ScaledKernel(self.profile_kernel(), self.delta)


SERIES = {
    # fourth order kernel; profile of order 4 on phi_{2,2} with 1D constant 9/16
    "A": SeriesSpec("A", 4, 4, (2, 2), 4),
    # positive second order kernel phi_{1,1}; profile phi_{2,1} with 1D constant 3/2
    "B": SeriesSpec("B", 2, 2, (2, 1), 2),
}


class BurgersManufactured:
    """``d_t rho - rho d_x rho = [(1 - psi) psi'](x + t)`` with ``rho(0) = psi``.

    The exact solution is ``rho(t, x) = psi(x + t)``. In the form
    ``d_t rho + f = 0`` this means ``f = -rho d_x rho - [(1 - psi) psi'](x + t)``.
    """

    def __init__(self, series: SeriesSpec):
        self.series = series
        self.psi = series.profile()
        self.delta = series.delta
        self._cache: dict = {}

    def profile(self, y):
        return self.psi.value(y)

    def profile_derivative(self, y):
        return self.psi.gradient(y)

    def source(self, t: float, y: np.ndarray) -> np.ndarray:
        """``[(1 - psi) psi'](y + t)``, evaluated only where ``|y + t| < delta``."""
        key = (float(t), y.__array_interface__["data"][0], y.shape)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        z = y + t
        out = np.zeros_like(z)
        mask = np.abs(z) < self.delta
        zm = z[mask]
        v, d = self.psi.value_and_derivative(zm)
        out[mask] = (1.0 - v) * d
        if len(self._cache) >= 4:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = out
        return out

    def f(self, t, x, rho, grad):
        return -rho * grad[0] - self.source(t, x[0])

    def exact_solution(self, t, x):
        return self.psi.value(x[0] + t)

    def exact_gradient(self, t, x):
        return self.psi.gradient(x[0] + t)[None]

    def initial(self, x):
        return self.psi.value(x[0])

    def residual(self, t, y):
        """``d_t rho - rho d_x rho - source`` for the exact solution (identically zero)."""
        z = y + t
        p, dp = self.psi.value(z), self.psi.gradient(z)
        return dp - p * dp - (1.0 - p) * dp

    @cached_property
    def speed(self) -> float:
        """``max |psi|``, the largest advection speed along the exact solution."""
        s = np.linspace(-self.delta, self.delta, 20001)
        return float(np.abs(self.psi.value(s)).max())


def burgers_f(series: SeriesSpec | str) -> DefiningFunction:
    """Manufactured Burgers problem for series ``"A"`` or ``"B"``."""
    if isinstance(series, str):
        try:
            series = SERIES[series.upper()]
        except KeyError:
            raise ConfigurationError(f"unknown series {series!r}; expected A or B") from None
    prob = BurgersManufactured(series)
    return DefiningFunction(
        f=prob.f,
        initial=prob.initial,
        window=WINDOW,
        exact_solution=prob.exact_solution,
        exact_gradient=prob.exact_gradient,
        speed=prob.speed,
        t_final=series.t_final,
        name=f"burgers-{series.series_id.lower()}",
    )


def linear_transport(u: float, profile: ScaledKernel | None = None, t_final: float = 0.5, center: float | None = None) -> DefiningFunction:
    """``d_t rho + u d_x rho = 0`` with a translating bump.

    The default profile is the series-A initial profile, centred so that its
    support stays inside the window up to ``t_final``.
    """
    profile = profile or SERIES["A"].profile()
    half = profile.epsilon * profile.kernel.radius
    lo, hi = WINDOW[0][0], WINDOW[1][0]
    if center is None:
        center = 0.5 * (lo + hi) - 0.5 * u * t_final
    if center - half + min(u * t_final, 0) < lo or center + half + max(u * t_final, 0) > hi:
        raise ConfigurationError(f"transport with u={u} over t={t_final} leaves the window [{lo}, {hi}]")

    def f(t, x, rho, grad):
        return u * grad[0]

    def exact(t, x):
        return profile.value(x[0] - u * t - center)

    def exact_grad(t, x):
        return profile.gradient(x[0] - u * t - center)[None]

    return DefiningFunction(
        f=f,
        initial=lambda x: exact(0.0, x),
        window=WINDOW,
        exact_solution=exact,
        exact_gradient=exact_grad,
        speed=abs(u),
        t_final=t_final,
        name=f"transport:{u:g}",
    )


def get_problem(name: str) -> DefiningFunction:
    """Problem from a selection string: ``burgers-a``, ``burgers-b`` or ``transport:<u>``."""
    key = name.strip().lower()
    if key in ("burgers-a", "burgers-b"):
        return burgers_f(key[-1])
    if key.startswith("transport:"):
        try:
            u = float(key.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad transport velocity in {name!r}") from None
        return linear_transport(u)
    raise ConfigurationError(f"unknown problem {name!r}; expected burgers-a, burgers-b or transport:<u>")
