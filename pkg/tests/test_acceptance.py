"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records a single PASS/FAIL line (shown in the terminal summary)
before asserting. The series-A table truncated at nu_h >= -14 is computed
once per session and shared by criteria 5, 7 and 8.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import optimize

from kernelpde import (
    CoefficientField,
    CompositeRadialKernel,
    ScaledKernel,
    UniformGrid,
    high_order_weights,
    kernel_moment,
    linf_grid_error,
    make_kernel,
    wendland_base,
)
from kernelpde.kernels import sphere_area
from kernelpde.problems import SERIES, WINDOW, burgers_f
from kernelpde.semidiscrete import SolverConfig, solve
from kernelpde.study import ErrorTable, fit_error_model, run_cell, run_table

from reference_tables import TABLE_A
from test_study import synthetic_table

FACTOR = 3.0


@pytest.fixture(scope="session")
def table_a():
    return run_table("A", range(-9, -15, -1), range(-6, -12, -1), min_gap=3)


def _within_factor(value, ref):
    return value is not None and 1 / FACTOR <= value / ref <= FACTOR


def test_criterion_1_exact_weights(report):
    nodes = (Fraction(1), Fraction(4, 5), Fraction(3, 5))
    best = math.inf
    for _ in range(20):
        t0 = time.perf_counter()
        w = high_order_weights(nodes, 1)
        best = min(best, time.perf_counter() - t0)
    expected = [Fraction(1), Fraction(-125, 28), Fraction(125, 21)]
    ok = w == expected and [float(x) for x in w] == [1.0, -125 / 28, 125 / 21] and best < 1e-3
    report(1, ok, f"weights {[str(x) for x in w]}, {best * 1e6:.0f} us")
    assert ok


def test_criterion_2_moments(report):
    t0 = time.perf_counter()
    worst = 0.0
    for order, smooth in ((2, 2), (4, 4), (4, 6), (6, 6)):
        for n in (1, 2, 3):
            k = make_kernel(order, smooth, n)
            worst = max(worst, abs(kernel_moment(k, 0) - 1 / sphere_area(n)))
            for i in range(1, order // 2):
                worst = max(worst, abs(kernel_moment(k, i)))
    # the competing order-4 weight: the computed one passes, 125/26 fails
    nodes = (1, Fraction(4, 5))
    base = wendland_base(1, 2)
    good = CompositeRadialKernel(base, nodes, tuple(high_order_weights(nodes, 1)))
    bad = CompositeRadialKernel(base, nodes, (Fraction(-16, 9), Fraction(125, 26)))
    m_good, m_bad = kernel_moment(good, 1), kernel_moment(bad, 1)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and abs(m_good) <= 1e-10 and abs(m_bad) > 1e-10 and elapsed < 1.0
    report(2, ok, f"max moment defect {worst:.1e}; i=1 moment 125/36: {m_good:.1e}, "
                  f"125/26: {m_bad:.2e}; {elapsed:.2f} s")
    assert ok


def _lp_norm(sk, alpha, p):
    f = sk.value if alpha == 0 else sk.gradient
    e = sk.epsilon
    if p == math.inf:
        x = np.linspace(0.0, e, 20001)
        return float(np.abs(f(x)).max())
    # panels between breakpoints and sign changes, where |f|^p is a polynomial
    cuts = {0.0, e, *(e * float(a) for a in sk.kernel.nodes)}
    x = np.linspace(0.0, e, 2001)[1:-1]
    fx = f(x)
    for i in np.nonzero(np.sign(fx[:-1]) * np.sign(fx[1:]) < 0)[0]:
        cuts.add(optimize.brentq(f, x[i], x[i + 1], xtol=1e-15))
    cuts = sorted(cuts)
    nodes, weights = np.polynomial.legendre.leggauss(20)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        pts = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(weights, np.abs(f(pts)) ** p)
    return (2 * total) ** (1 / p)


def test_criterion_3_scaling_identity(report):
    t0 = time.perf_counter()
    k = make_kernel(4, 4, 1)
    worst = 0.0
    for p in (1, 2, math.inf):
        n_over_q = 1.0 - (0.0 if p == math.inf else 1.0 / p)
        for alpha in (0, 1):
            ref = _lp_norm(ScaledKernel(k, 1.0), alpha, p)
            for eps in (1.0, 0.5, 0.25):
                ratio = _lp_norm(ScaledKernel(k, eps), alpha, p) / (eps ** (-n_over_q - alpha) * ref)
                worst = max(worst, abs(ratio - 1))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 1.0
    report(3, ok, f"max |ratio - 1| = {worst:.1e}; {elapsed:.2f} s")
    assert ok


def test_criterion_4_quasi_interpolation_rate(report):
    t0 = time.perf_counter()
    psi = SERIES["A"].profile()
    k = make_kernel(4, 4, 1)
    eps_list = [2.0**-m for m in range(4, 9)]
    e0, e1 = [], []
    for eps in eps_list:
        grid = UniformGrid.covering(*WINDOW, eps ** (5 / 3))
        f = CoefficientField.sample(grid, lambda x: psi.value(x[0]))
        sk = ScaledKernel(k, eps)
        e0.append(linf_grid_error(f, lambda x: psi.value(x[0]), sk, alpha=0))
        e1.append(linf_grid_error(f, lambda x: psi.gradient(x[0])[None], sk, alpha=1))
    le = np.log(eps_list)
    order0 = np.polyfit(le, np.log(e0), 1)[0]
    order1 = np.polyfit(le, np.log(e1), 1)[0]
    elapsed = time.perf_counter() - t0
    ok = abs(order0 - 4) <= 1 and abs(order1 - 3) <= 1 and elapsed < 10
    report(4, ok, f"observed order {order0:.2f} (value), {order1:.2f} (gradient); {elapsed:.2f} s")
    assert ok


@pytest.mark.slow
def test_criterion_5_series_a_cells(report, table_a):
    refs = {(-12, -7): 3.39e-5, (-13, -8): 6.72e-5, (-14, -8): 3.90e-6, (-15, -9): 4.60e-6}
    got, seconds = {}, 0.0
    for key in refs:
        if key in table_a.meta["seconds"]:
            got[key] = table_a.get(*key)
            seconds += table_a.meta["seconds"][key]
        else:
            t0 = time.perf_counter()
            got[key] = run_cell("A", *key)
            seconds += time.perf_counter() - t0
    ok = all(_within_factor(got[k], refs[k]) for k in refs) and seconds < 300
    detail = ", ".join(f"{k}: {got[k]:.3g} vs {refs[k]:.3g}" for k in refs)
    report(5, ok, f"{detail}; {seconds:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_6_series_b_cells(report):
    refs = {(-13, -9): 3.17e-3, (-15, -10): 8.48e-4, (-16, -11): 4.70e-4}
    got = {}
    t0 = time.perf_counter()
    for key in refs:
        got[key] = run_cell("B", *key)
    seconds = time.perf_counter() - t0
    ok = all(_within_factor(got[k], refs[k]) for k in refs) and seconds < 300
    detail = ", ".join(f"{k}: {got[k]:.3g} vs {refs[k]:.3g}" for k in refs)
    report(6, ok, f"{detail}; {seconds:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_7_table_shape(report, table_a):
    ratios = {}
    for ne in (-6, -7):
        col = table_a.column(ne)
        (_, prev), (_, last) = col[-2], col[-1]
        ratios[ne] = max(prev, last) / min(prev, last)
    diag = [v for _, v in table_a.diagonal(3)]
    monotone = all(a <= b for a, b in zip(diag, diag[1:]))
    ok = all(r <= 1.3 for r in ratios.values()) and monotone and len(diag) >= 5
    report(7, ok, f"plateau ratios {ratios[-6]:.3f} (eps 2^-6), {ratios[-7]:.3f} (eps 2^-7); "
                  f"diagonal nu_eps = nu_h + 3: {' <= '.join(f'{v:.2e}' for v in diag)}")
    assert ok


@pytest.mark.slow
def test_criterion_8_exponent_fit(report, table_a):
    def in_window(f):
        return 2.7 <= f.a <= 3.7 and 3.3 <= f.b <= 4.3 and 3.9 <= f.c <= 4.9

    fit = fit_error_model(ErrorTable(dict(TABLE_A), "A"))
    regen = fit_error_model(table_a)
    synth = fit_error_model(synthetic_table(C1=2.0, a=3.0, C2=1.0, b=3.0, c=4.0, noise=0.01, seed=0))
    planted = all(abs(x - y) <= 0.1 for x, y in zip((synth.a, synth.b, synth.c), (3.0, 3.0, 4.0)))
    ok = in_window(fit) and in_window(regen) and planted
    report(8, ok, f"reference table: a={fit.a:.2f} b={fit.b:.2f} c={fit.c:.2f} C1={fit.C1:.3g}; "
                  f"synthetic: a={synth.a:.3f} b={synth.b:.3f} c={synth.c:.3f}; "
                  f"regenerated truncated table: a={regen.a:.2f} b={regen.b:.2f} c={regen.c:.2f}")
    assert ok


def test_criterion_9_rk4_order(report):
    t0 = time.perf_counter()
    prob = burgers_f("A")
    dt0 = 0.5 / 400
    sols = [solve(prob, SolverConfig.from_exponents(-10, -6, dt=dt0 / 2**j)) for j in range(4)]
    diffs = [np.abs(a.field.values - b.field.values).max() for a, b in zip(sols, sols[1:])]
    orders = [math.log2(d1 / d2) for d1, d2 in zip(diffs, diffs[1:])]
    spatial = linf_grid_error(sols[-1].field, lambda x: prob.exact_solution(0.5, x), stencil=sols[-1].stencil)
    elapsed = time.perf_counter() - t0
    ok = all(abs(q - 4) <= 0.5 for q in orders) and diffs[0] < spatial and elapsed < 30
    report(9, ok, f"observed orders {', '.join(f'{q:.2f}' for q in orders)}; "
                  f"largest dt change {diffs[0]:.1e} < spatial error {spatial:.1e}; {elapsed:.1f} s")
    assert ok
