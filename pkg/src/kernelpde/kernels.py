"""Compactly supported radial kernels of prescribed order and smoothness.

The building blocks are Wendland's functions ``phi_{n,k}(r) = c (1-r)_+^l p(r)``.
Higher order kernels are linear combinations ``eta(r) = sum_j lam_j phi(r/a_j)``
whose weights make the even radial moments of order ``2 .. k-2`` vanish.

All polynomial data is held as exact rationals (a possible factor ``pi**-1`` is
kept separately) and converted to floats only for evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, SingularNodesError, SmoothnessError

__all__ = [
    "WendlandBase",
    "CompositeRadialKernel",
    "ScaledKernel",
    "sphere_area",
    "wendland_base",
    "wendland_eval",
    "high_order_weights",
    "make_kernel",
    "kernel_moment",
    "moment_table",
    "scaled_eval",
    "parse_kernel_spec",
    "PRESET_NODES",
    "SUPPORTED_ORDERS",
    "SUPPORTED_SMOOTHNESS",
]

# Node sets for kernels of order 2, 4 and 6.
PRESET_NODES = {
    1: (Fraction(1),),
    2: (Fraction(1), Fraction(4, 5)),
    3: (Fraction(1), Fraction(4, 5), Fraction(3, 5)),
}
SUPPORTED_ORDERS = (2, 4, 6)
SUPPORTED_SMOOTHNESS = (2, 4, 6)
SUPPORTED_DIMS = (1, 2, 3)

_GAUSS_DEGREE = 20

# (n, k) -> (constant, power of pi in the denominator, exponent l, p ascending)
_TABLE = {
    (1, 0): (Fraction(1), 0, 1, (1,)),
    (1, 1): (Fraction(5, 4), 0, 3, (1, 3)),
    (1, 2): (Fraction(3, 2), 0, 5, (1, 5, 8)),
    (1, 3): (Fraction(55, 32), 0, 7, (1, 7, 19, 21)),
    (2, 0): (Fraction(6), 1, 2, (1,)),
    (2, 1): (Fraction(7), 1, 4, (1, 4)),
    (2, 2): (Fraction(3), 1, 6, (3, 18, 35)),
    (2, 3): (Fraction(78, 7), 1, 8, (1, 8, 25, 32)),
    (3, 0): (Fraction(15, 2), 1, 2, (1,)),
    (3, 1): (Fraction(21, 2), 1, 4, (1, 4)),
    (3, 2): (Fraction(165, 32), 1, 6, (3, 18, 35)),
    (3, 3): (Fraction(1365, 64), 1, 8, (1, 8, 25, 32)),
}


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n`` (2 for n=1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


# -- exact polynomial helpers (ascending coefficient tuples) -----------------


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _ppow(a, k):
    out = [Fraction(1)]
    for _ in range(k):
        out = _pmul(out, a)
    return out


def _pder(c, m=1):
    c = list(c)
    for _ in range(m):
        c = [i * c[i] for i in range(1, len(c))] or [Fraction(0)]
    return c


def _pint01(c, shift=0):
    """Exact value of int_0^1 r**shift * sum c_i r**i dr."""
    return sum(ci / (i + shift + 1) for i, ci in enumerate(c))


def _reflect(c, b):
    """Coefficients of ``s -> p(b - s)``, so that ``p(r)`` is evaluated near ``r = b`` without cancellation."""
    out = [Fraction(0)]
    for ci in reversed(c):
        out = _pmul(out, [Fraction(b), Fraction(-1)])
        out[0] += ci
    return out


def _reflected_derivs(c, b, m_max, scale):
    # d^m/dr^m p(r) = (-1)^m d^m/ds^m q(s) with q(s) = p(b - s)
    q = _reflect(c, b)
    return [(-1) ** m * np.array([float(x) for x in _pder(q, m)]) / scale for m in range(m_max + 1)]


def _horner(coefs, r):
    out = np.full_like(r, coefs[-1])
    for c in coefs[-2::-1]:
        out *= r
        out += c
    return out


# -- Wendland functions ------------------------------------------------------


@dataclass(frozen=True)
class WendlandBase:
    """Wendland function ``phi(r) = c (1-r)_+^l p(r)``.

    ``family_dim`` selects the row of the table (and with it the polynomial
    shape and smoothness), ``dim`` is the space dimension in which the
    constant normalises the radial integral to one. The two differ only for
    renormalised bases, e.g. ``phi_{2,2}`` used as a univariate profile.
    """

    dim: int
    smoothness_index: int
    constant: Fraction
    pi_power: int
    polynomial: tuple[Fraction, ...]
    support_exponent: int
    family_dim: int | None = None

    def __post_init__(self):
        if self.family_dim is None:
            object.__setattr__(self, "family_dim", self.dim)

    @property
    def max_derivative(self) -> int:
        return 2 * self.smoothness_index

    @property
    def scale(self) -> float:
        """The constant as a float, including the ``pi`` factor."""
        return float(self.constant) / math.pi**self.pi_power

    @cached_property
    def shape_coefficients(self) -> tuple[Fraction, ...]:
        """Exact ascending coefficients of ``(1-r)^l p(r)`` (no constant)."""
        base = _ppow([Fraction(1), Fraction(-1)], self.support_exponent)
        return tuple(_pmul(base, [Fraction(x) for x in self.polynomial]))

    @cached_property
    def coefficients(self) -> tuple[Fraction, ...]:
        """Exact coefficients of ``phi`` divided by ``pi**-pi_power``."""
        return tuple(self.constant * c for c in self.shape_coefficients)

    @cached_property
    def _float_derivs(self):
        return _reflected_derivs(self.coefficients, 1, self.max_derivative, math.pi**self.pi_power)

    def __call__(self, r, deriv: int = 0):
        return wendland_eval(self, r, deriv)

    def renormalized(self, dim: int) -> "WendlandBase":
        """Same shape with the constant chosen so the radial integral in ``R^dim`` is one."""
        integral = _pint01(self.shape_coefficients, dim - 1)
        if dim == 1:
            return replace(self, dim=1, constant=1 / (2 * integral), pi_power=0)
        # omega_{dim-1} is a rational multiple of pi for dim = 2, 3
        omega_over_pi = {2: Fraction(2), 3: Fraction(4)}[dim]
        return replace(self, dim=dim, constant=1 / (omega_over_pi * integral), pi_power=1)


def wendland_base(n: int, k: int) -> WendlandBase:
    """Tabulated Wendland function ``phi_{n,k}``, smooth of order ``2k`` in ``R^n``."""
    try:
        const, pi_power, ell, poly = _TABLE[(n, k)]
    except KeyError:
        raise ConfigurationError(
            f"no Wendland function for n={n}, k={k}; supported n in {SUPPORTED_DIMS}, k in 0..3"
        ) from None
    return WendlandBase(
        dim=n,
        smoothness_index=k,
        constant=const,
        pi_power=pi_power,
        polynomial=tuple(Fraction(p) for p in poly),
        support_exponent=ell,
    )


def wendland_eval(base: WendlandBase, r, deriv_order: int = 0):
    """Evaluate the ``deriv_order``-th radial derivative of ``base`` at ``r >= 0``.

    Uses the exact polynomial derivative on ``[0, 1)`` and returns 0 for ``r >= 1``.
    """
    if deriv_order < 0 or deriv_order > base.max_derivative:
        raise SmoothnessError(
            f"derivative of order {deriv_order} requested from a C^{base.max_derivative} function"
        )
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial argument must be non-negative")
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = _horner(base._float_derivs[deriv_order], 1.0 - r[inside])
    return float(out) if scalar else out


# -- composite kernels -------------------------------------------------------


def high_order_weights(nodes: Sequence, dim: int) -> list:
    """Weights ``lam_j`` making ``sum_j lam_j phi(r/a_j)`` a kernel of order ``2*len(nodes)``.

    Closed form of the transposed Vandermonde solve in ``a_j**2``::

        lam_j = a_j**-n * prod_{i != j} a_i**2 / (a_i**2 - a_j**2)

    Exact (``Fraction``) when every node is an int or ``Fraction``.
    """
    if len(nodes) == 0:
        raise ValueError("at least one node is required")
    exact = all(isinstance(a, (int, Fraction)) for a in nodes)
    a = [Fraction(x) if exact else float(x) for x in nodes]
    if any(x <= 0 for x in a):
        raise ValueError("nodes must be positive")
    if len(set(a)) != len(a):
        raise SingularNodesError(f"nodes {list(nodes)} are not pairwise distinct")
    weights = []
    for j, aj in enumerate(a):
        lam = 1 / aj**dim
        for i, ai in enumerate(a):
            if i != j:
                lam *= ai**2 / (ai**2 - aj**2)
        weights.append(lam)
    return weights


@dataclass(frozen=True)
class CompositeRadialKernel:
    """Radial profile ``eta(r) = sum_j weights[j] * base(r / nodes[j])``.

    The weights are stored as given; use :func:`make_kernel` for the
    moment-matched ones. ``order`` is the nominal order ``2*len(nodes)``.
    """

    base: WendlandBase
    nodes: tuple
    weights: tuple
    order: int = field(init=False)
    smoothness: int = field(init=False)

    def __post_init__(self):
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ConfigurationError("nodes and weights must be non-empty and of equal length")
        if len(set(self.nodes)) != len(self.nodes):
            raise SingularNodesError("nodes must be pairwise distinct")
        if any(a <= 0 for a in self.nodes):
            raise ConfigurationError("nodes must be positive")
        object.__setattr__(self, "nodes", tuple(Fraction(a) for a in self.nodes))
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in self.weights))
        object.__setattr__(self, "order", 2 * len(self.nodes))
        object.__setattr__(self, "smoothness", self.base.max_derivative)

    @classmethod
    def from_base(cls, base: WendlandBase) -> "CompositeRadialKernel":
        return cls(base, (Fraction(1),), (Fraction(1),))

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def radius(self) -> float:
        return float(max(self.nodes))

    @cached_property
    def breakpoints(self) -> tuple[Fraction, ...]:
        """Sorted panel boundaries ``0 < ... < max(nodes)``."""
        return (Fraction(0),) + tuple(sorted(self.nodes))

    @cached_property
    def pieces(self) -> tuple[tuple[Fraction, ...], ...]:
        """Exact polynomial of ``eta`` (over ``pi**-pi_power``) on each panel."""
        out = []
        for lo in self.breakpoints[:-1]:
            coefs = [Fraction(0)] * len(self.base.coefficients)
            for a, lam in zip(self.nodes, self.weights):
                if a > lo:
                    for i, c in enumerate(self.base.coefficients):
                        coefs[i] += lam * c / a**i
            out.append(tuple(coefs))
        return tuple(out)

    @cached_property
    def _float_pieces(self):
        scale = math.pi**self.base.pi_power
        return [
            _reflected_derivs(p, b, self.smoothness, scale)
            for p, b in zip(self.pieces, self.breakpoints[1:])
        ]

    @cached_property
    def _float_breaks(self):
        return np.array([float(b) for b in self.breakpoints])

    def __call__(self, r, deriv: int = 0):
        """Radial profile (or its ``deriv``-th derivative) at ``r >= 0``."""
        out = self.derivatives(r, (deriv,))[0]
        return float(out) if np.ndim(r) == 0 else out

    def derivatives(self, r, orders=(0, 1)) -> list[np.ndarray]:
        """Several radial derivatives at once, sharing the panel lookup."""
        for m in orders:
            if m < 0 or m > self.smoothness:
                raise SmoothnessError(f"derivative of order {m} requested from a C^{self.smoothness} kernel")
        r = np.abs(np.asarray(r, dtype=float))
        outs = [np.zeros_like(r) for _ in orders]
        which = np.searchsorted(self._float_breaks, r, side="right") - 1
        for p, coefs in enumerate(self._float_pieces):
            mask = which == p
            if mask.any():
                s = self._float_breaks[p + 1] - r[mask]
                for out, m in zip(outs, orders):
                    out[mask] = _horner(coefs[m], s)
        return outs

    def piece_eval(self, piece: int, r, deriv: int = 0):
        """Evaluate the polynomial of one panel, ignoring the panel bounds."""
        r = np.asarray(r, dtype=float)
        return _horner(self._float_pieces[piece][deriv], self._float_breaks[piece + 1] - r)


def make_kernel(order: int, smoothness: int, dim: int) -> CompositeRadialKernel:
    """Kernel ``eta^{order,smoothness}`` in ``R^dim`` from the preset nodes."""
    if order not in SUPPORTED_ORDERS or smoothness not in SUPPORTED_SMOOTHNESS or dim not in SUPPORTED_DIMS:
        raise ConfigurationError(
            f"unsupported kernel (order={order}, smoothness={smoothness}, dim={dim}); "
            f"supported: order in {SUPPORTED_ORDERS}, smoothness in {SUPPORTED_SMOOTHNESS}, "
            f"dim in {SUPPORTED_DIMS}"
        )
    base = wendland_base(dim, smoothness // 2)
    nodes = PRESET_NODES[order // 2]
    return CompositeRadialKernel(base, nodes, tuple(high_order_weights(nodes, dim)))


def kernel_moment(kernel: CompositeRadialKernel, i: int) -> float:
    """``int_0^inf eta(r) r^(n-1+2i) dr`` by Gauss-Legendre on each panel."""
    if i < 0:
        raise ValueError("moment index must be non-negative")
    x, w = np.polynomial.legendre.leggauss(_GAUSS_DEGREE)
    power = kernel.dim - 1 + 2 * i
    total = 0.0
    breaks = kernel._float_breaks
    for p in range(len(breaks) - 1):
        lo, hi = breaks[p], breaks[p + 1]
        r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(w, kernel.piece_eval(p, r) * r**power)
    return float(total)


def moment_table(kernel: CompositeRadialKernel):
    """Rows ``(i, moment, target)`` for ``i = 0 .. order/2``.

    The target is ``1/omega`` for ``i = 0`` and 0 up to ``order/2 - 1``;
    the last row (first free moment) has target ``None``.
    """
    rows = []
    for i in range(kernel.order // 2 + 1):
        if i == 0:
            target = 1.0 / sphere_area(kernel.dim)
        elif i < kernel.order // 2:
            target = 0.0
        else:
            target = None
        rows.append((i, kernel_moment(kernel, i), target))
    return rows


# -- scaled kernels ----------------------------------------------------------


@dataclass(frozen=True)
class ScaledKernel:
    """``zeta_eps(x) = eps**-n * eta(|x| / eps)``, supported in the ball of radius ``eps``.

    For ``n = 1`` points may be passed as an array of any shape; otherwise the
    last axis holds the ``n`` coordinates.
    """

    kernel: CompositeRadialKernel
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def _radius(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x, np.abs(x)
        if x.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing dimension {self.dim}")
        return x, np.linalg.norm(x, axis=-1)

    def value(self, x):
        _, r = self._radius(x)
        eps = self.epsilon
        return self.kernel(r / eps) / eps**self.dim

    def gradient(self, x):
        if self.kernel.smoothness < 1:
            raise SmoothnessError("gradient requested from a C^0 kernel")
        x, r = self._radius(x)
        eps = self.epsilon
        d = np.asarray(self.kernel(r / eps, 1)) / eps ** (self.dim + 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.dim == 1:
                return np.where(r > 0, d * np.sign(x), 0.0)
            unit = np.where(r[..., None] > 0, x / r[..., None], 0.0)
        return d[..., None] * unit

    def value_and_derivative(self, x):
        """``zeta_eps(x)`` and ``zeta_eps'(x)`` for points on the line."""
        if self.dim != 1:
            raise ConfigurationError("value_and_derivative is defined for n = 1")
        x = np.asarray(x, dtype=float)
        eps = self.epsilon
        v, d = self.kernel.derivatives(np.abs(x) / eps, (0, 1))
        return v / eps, d * np.sign(x) / eps**2

    def __call__(self, x):
        return self.value(x)


def scaled_eval(sk: ScaledKernel, x, alpha=0):
    """``d^alpha zeta_eps(x)`` for ``|alpha| <= 1``.

    ``alpha`` is 0 (value), 1 (full gradient) or a multi-index tuple.
    """
    if isinstance(alpha, tuple):
        if len(alpha) != sk.dim or any(a < 0 for a in alpha) or sum(alpha) > 1:
            raise ValueError(f"invalid multi-index {alpha}")
        if sum(alpha) == 0:
            return sk.value(x)
        axis = alpha.index(1)
        g = sk.gradient(x)
        return g if sk.dim == 1 else g[..., axis]
    if alpha == 0:
        return sk.value(x)
    if alpha == 1:
        return sk.gradient(x)
    raise ValueError("only derivatives with |alpha| <= 1 are supported")


def parse_kernel_spec(spec: str) -> CompositeRadialKernel:
    """Build a kernel from ``wendland:<n>:<k_base>`` or ``composite:<order>:<smoothness>:<n>``."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "wendland" and len(parts) == 3:
            return CompositeRadialKernel.from_base(wendland_base(int(parts[1]), int(parts[2])))
        if parts[0] == "composite" and len(parts) == 4:
            return make_kernel(int(parts[1]), int(parts[2]), int(parts[3]))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed kernel spec {spec!r}") from exc
    raise ConfigurationError(
        f"malformed kernel spec {spec!r}; expected 'wendland:<n>:<k>' or "
        "'composite:<order>:<smoothness>:<n>'"
    )
