"""Uniform grids, coefficient fields and the kernel quasi-interpolant.

For coefficients ``rho_j`` on the grid ``x_j = j h`` the quasi-interpolant is

    [rho](x) = h**n * sum_j rho_j * zeta_eps(x - x_j)

and its gradient uses ``grad zeta_eps`` in place of ``zeta_eps``. Coefficients
outside the stored index box are zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy import signal

from .exceptions import ConfigurationError
from .kernels import ScaledKernel

__all__ = [
    "UniformGrid",
    "CoefficientField",
    "Stencil",
    "GridEvaluator",
    "build_stencil",
    "evaluate",
    "evaluate_on_grid",
    "discrete_norm",
    "linf_grid_error",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class UniformGrid:
    """Points ``i * h`` for integer multi-indices ``lo <= i <= hi`` (inclusive, per axis)."""

    h: float
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("grid spacing must be positive")
        lo, hi = tuple(int(v) for v in self.lo), tuple(int(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ConfigurationError("lo and hi must have the same, non-zero length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ConfigurationError("index box is empty")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def covering(cls, lower, upper, h: float) -> "UniformGrid":
        """Grid of all points ``i h`` inside the box ``[lower, upper]``."""
        lower, upper = np.atleast_1d(lower), np.atleast_1d(upper)
        # rounding guard so that endpoints which are exact multiples of h are kept
        lo = tuple(math.ceil(a / h - 1e-9) for a in lower)
        hi = tuple(math.floor(b / h + 1e-9) for b in upper)
        return cls(h, lo, hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_points(self, axis: int) -> np.ndarray:
        return np.arange(self.lo[axis], self.hi[axis] + 1) * self.h

    def coordinates(self) -> np.ndarray:
        """Array of shape ``(n, *shape)`` with the coordinates of every point."""
        axes = [self.axis_points(d) for d in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def point(self, index) -> np.ndarray:
        return np.asarray(index, dtype=float) * self.h


@dataclass
class CoefficientField:
    """Values ``rho_i`` on a grid's index box at time ``time``."""

    grid: UniformGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values of shape {self.values.shape} do not match grid shape {self.grid.shape}"
            )

    @classmethod
    def sample(cls, grid: UniformGrid, fn: Callable, time: float = 0.0) -> "CoefficientField":
        """Field with ``rho_i = fn(x_i)``; ``fn`` receives the ``(n, *shape)`` coordinates."""
        return cls(grid, fn(grid.coordinates()), time)

    @classmethod
    def zeros(cls, grid: UniformGrid, time: float = 0.0) -> "CoefficientField":
        return cls(grid, np.zeros(grid.shape), time)

    def at(self, index) -> float:
        """Coefficient at a multi-index; zero outside the box."""
        index = tuple(np.atleast_1d(index))
        if any(i < a or i > b for i, a, b in zip(index, self.grid.lo, self.grid.hi)):
            return 0.0
        return float(self.values[tuple(i - a for i, a in zip(index, self.grid.lo))])


@dataclass(frozen=True)
class Stencil:
    """Kernel samples at grid offsets ``m h`` for ``|m h| < eps``.

    ``values0`` holds ``zeta_eps(m h)`` and ``values1`` the gradient with a
    leading axis of length ``n``; both live on the box ``-M..M`` per axis
    (zero where ``|m h| >= eps``).
    """

    h: float
    epsilon: float
    radius: int
    values0: np.ndarray
    values1: np.ndarray | None
    kernel: ScaledKernel = field(repr=False)

    @property
    def dim(self) -> int:
        return self.values0.ndim

    @property
    def offsets(self) -> np.ndarray:
        """Integer offsets (shape ``(count, n)``) with non-zero support, lexicographic."""
        m = np.arange(-self.radius, self.radius + 1)
        grids = np.meshgrid(*([m] * self.dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        keep = np.linalg.norm(pts * self.h, axis=1) < self.epsilon
        return pts[keep]

    def values(self, alpha: int) -> np.ndarray:
        if alpha == 0:
            return self.values0
        if self.values1 is None:
            raise ConfigurationError("stencil was built without gradient values")
        return self.values1

    def gradient_norm(self, oversample: int = 8) -> float:
        """Largest magnitude of the Fourier symbol of ``h**n sum values1``.

        This is the spectral radius of the discrete gradient operator on an
        unbounded grid; it sets the stable explicit time step.
        """
        v = self.values(1) * self.h**self.dim
        # at least 2**14 samples per axis in 1D so short stencils still resolve the peak
        floor = 2**14 if v.ndim == 2 else 64
        size = [max(oversample * sfft.next_fast_len(s), floor) for s in v.shape[1:]]
        sym = np.zeros(size)
        for comp in v:
            sym = sym + np.abs(sfft.fftn(comp, s=size)) ** 2
        return float(np.sqrt(sym.max()))


def build_stencil(kernel: ScaledKernel, h: float, gradient: bool = True) -> Stencil:
    """Sample ``kernel`` and its gradient at all grid offsets inside its support."""
    eps = kernel.epsilon
    radius = max(math.ceil(eps / h) - 1, 0)
    m = np.arange(-radius, radius + 1) * h
    n = kernel.dim
    if n == 1:
        pts = m
        v0 = kernel.value(pts)
        v1 = kernel.gradient(pts)[None, :] if gradient else None
    else:
        pts = np.stack(np.meshgrid(*([m] * n), indexing="ij"), axis=-1)
        v0 = kernel.value(pts)
        v1 = np.moveaxis(kernel.gradient(pts), -1, 0) if gradient else None
    return Stencil(h, eps, radius, v0, v1, kernel)


def _check_stencil(field_: CoefficientField, stencil: Stencil, kernel: ScaledKernel | None = None):
    if not math.isclose(field_.grid.h, stencil.h, rel_tol=1e-12) or field_.grid.dim != stencil.dim:
        raise ConfigurationError(
            f"stencil (h={stencil.h}, n={stencil.dim}) does not match grid "
            f"(h={field_.grid.h}, n={field_.grid.dim})"
        )
    if kernel is not None and kernel != stencil.kernel:
        raise ConfigurationError("stencil was built for a different kernel")


def _convolve_same(values: np.ndarray, weights: np.ndarray, method: str) -> np.ndarray:
    """Centred convolution, output on the same index box, zero padding."""
    return signal.convolve(values, weights, mode="same", method=method)


def evaluate_on_grid(
    field_: CoefficientField,
    stencil: Stencil,
    alpha: int = 0,
    method: str = "direct",
) -> CoefficientField | list[CoefficientField]:
    """Quasi-interpolant (``alpha=0``) or its gradient (``alpha=1``) at every grid point.

    ``output_i = h**n * sum_m values_alpha(m) * rho_{i-m}``. For ``alpha=1`` a
    list with one field per partial derivative is returned. ``method`` is
    ``"direct"`` or ``"fft"``.
    """
    _check_stencil(field_, stencil)
    if method not in ("direct", "fft"):
        raise ValueError("method must be 'direct' or 'fft'")
    scale = field_.grid.h**field_.grid.dim
    if alpha == 0:
        out = scale * _convolve_same(field_.values, stencil.values0, method)
        return CoefficientField(field_.grid, out, field_.time)
    if alpha == 1:
        return [
            CoefficientField(field_.grid, scale * _convolve_same(field_.values, w, method), field_.time)
            for w in stencil.values(1)
        ]
    raise ValueError("only derivatives with |alpha| <= 1 are supported")


class GridEvaluator:
    """FFT evaluation of the quasi-interpolant and its gradient on a fixed grid.

    Kernel spectra are computed once; every call costs one forward and
    ``1 + n`` inverse real transforms.
    """

    def __init__(self, grid: UniformGrid, stencil: Stencil, workers: int = 1):
        if not math.isclose(grid.h, stencil.h, rel_tol=1e-12) or grid.dim != stencil.dim:
            raise ConfigurationError("stencil does not match grid")
        self.grid = grid
        self.stencil = stencil
        self.workers = workers
        r = stencil.radius
        self._shape = tuple(sfft.next_fast_len(s + 2 * r, real=True) for s in grid.shape)
        self._crop = tuple(slice(r, r + s) for s in grid.shape)
        scale = grid.h**grid.dim
        self._k0 = sfft.rfftn(scale * stencil.values0, s=self._shape, workers=workers)
        self._k1 = [sfft.rfftn(scale * w, s=self._shape, workers=workers) for w in stencil.values(1)]

    def __call__(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``([rho]_i, grad [rho]_i)``; the gradient has a leading axis of length ``n``."""
        spec = sfft.rfftn(values, s=self._shape, workers=self.workers)
        inv = lambda k: sfft.irfftn(spec * k, s=self._shape, workers=self.workers)[self._crop]
        return inv(self._k0), np.stack([inv(k) for k in self._k1])


def evaluate(field_: CoefficientField, kernel: ScaledKernel, x, alpha=0):
    """Quasi-interpolant ``d^alpha [rho](x)`` at a single point ``x``.

    Only coefficients with ``|x - x_j| < eps`` contribute. ``alpha`` is 0,
    1 (full gradient) or a multi-index tuple.
    """
    grid = field_.grid
    if grid.dim != kernel.dim:
        raise ConfigurationError("kernel and grid dimensions differ")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps, h = kernel.epsilon, grid.h
    ranges = []
    for d in range(grid.dim):
        a = max(math.ceil((x[d] - eps) / h), grid.lo[d])
        b = min(math.floor((x[d] + eps) / h), grid.hi[d])
        if a > b:
            return 0.0 if alpha == 0 or isinstance(alpha, tuple) else np.zeros(grid.dim)
        ranges.append(np.arange(a, b + 1))
    idx = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, grid.dim)
    coefs = field_.values[tuple((idx - np.array(grid.lo)).T)]
    diff = x[None, :] - idx * h
    arg = diff[:, 0] if grid.dim == 1 else diff
    scale = h**grid.dim
    if isinstance(alpha, tuple):
        if sum(alpha) == 0:
            return float(scale * np.dot(coefs, kernel.value(arg)))
        axis = alpha.index(1)
        g = kernel.gradient(arg)
        g = g if grid.dim == 1 else g[:, axis]
        return float(scale * np.dot(coefs, g))
    if alpha == 0:
        return float(scale * np.dot(coefs, kernel.value(arg)))
    if alpha == 1:
        g = kernel.gradient(arg)
        g = g[:, None] if grid.dim == 1 else g
        return scale * coefs @ g
    raise ValueError("only derivatives with |alpha| <= 1 are supported")


def discrete_norm(field_: CoefficientField, p=2) -> float:
    """``(h**n sum |rho_i|**p)**(1/p)``, or ``max |rho_i|`` for ``p = inf``."""
    v = np.abs(field_.values)
    if p in (np.inf, "inf", math.inf):
        return float(v.max(initial=0.0))
    if p not in (1, 2):
        raise ValueError("p must be 1, 2 or inf")
    return float((field_.grid.h**field_.grid.dim * np.sum(v**p)) ** (1.0 / p))


def linf_grid_error(
    field_: CoefficientField,
    exact: Callable,
    kernel: ScaledKernel | None = None,
    alpha: int = 0,
    mode: str = "interpolant",
    stencil: Stencil | None = None,
) -> float:
    """Discrete maximum error over the grid points.

    ``mode="interpolant"`` compares ``d^alpha [rho](x_i)`` (``alpha`` 0 or 1) with
    ``exact(x)``; for ``alpha=1`` ``exact`` must return the gradient with a
    leading axis of length ``n``. ``mode="coefficients"`` compares ``rho_i``
    itself with ``exact(x_i)``. ``exact`` receives the ``(n, *shape)`` coordinates.
    """
    x = field_.grid.coordinates()
    if mode == "coefficients":
        return float(np.max(np.abs(field_.values - exact(x))))
    if mode != "interpolant":
        raise ValueError("mode must be 'interpolant' or 'coefficients'")
    if stencil is None:
        if kernel is None:
            raise ConfigurationError("interpolant mode needs a kernel or a stencil")
        stencil = build_stencil(kernel, field_.grid.h, gradient=alpha == 1)
    else:
        _check_stencil(field_, stencil, kernel)
    method = "fft" if stencil.values0.size > 64 else "direct"
    if alpha == 0:
        approx = evaluate_on_grid(field_, stencil, 0, method).values
        return float(np.max(np.abs(approx - exact(x))))
    approx = np.stack([f.values for f in evaluate_on_grid(field_, stencil, 1, method)])
    err = np.sqrt(np.sum((approx - np.asarray(exact(x)).reshape(approx.shape)) ** 2, axis=0))
    return float(err.max())


def write_field_csv(field_: CoefficientField, path=None) -> str:
    """Serialise a 1D field as CSV ``index,x,value``; returns the text."""
    if field_.grid.dim != 1:
        raise ConfigurationError("CSV export is defined for 1D fields")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "x", "value"])
    idx = np.arange(field_.grid.lo[0], field_.grid.hi[0] + 1)
    for i, v in zip(idx, field_.values):
        w.writerow([int(i), repr(float(i * field_.grid.h)), repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_field_csv(source, h: float | None = None, time: float = 0.0) -> CoefficientField:
    """Inverse of :func:`write_field_csv`; ``source`` is a path or CSV text.

    The spacing is recovered from the ``x`` column unless given.
    """
    text = Path(source).read_text() if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source
    ) else source
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty field CSV")
    idx = np.array([int(r["index"]) for r in rows])
    vals = np.array([float(r["value"]) for r in rows])
    if np.any(np.diff(idx) != 1):
        raise ValueError("field CSV indices must be consecutive")
    if h is None:
        nz = idx != 0
        h = float(np.median(np.array([float(r["x"]) for r in rows])[nz] / idx[nz]))
    grid = UniformGrid(h, (int(idx[0]),), (int(idx[-1]),))
    return CoefficientField(grid, vals, time)
