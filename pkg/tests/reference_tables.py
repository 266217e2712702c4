"""Reference maximum errors for the two Burgers series, keyed by (nu_h, nu_eps)."""

_COLS = (-6, -7, -8, -9, -10, -11, -12, -13)

_A = {
    -9: [4.83e-3],
    -10: [1.47e-3, 7.09e-3],
    -11: [1.03e-4, 2.27e-3, 1.05e-2],
    -12: [1.18e-4, 3.39e-5, 3.31e-3, 1.62e-2],
    -13: [1.18e-4, 1.71e-5, 6.72e-5, 5.28e-3, 2.47e-2],
    -14: [1.18e-4, 1.55e-5, 3.90e-6, 1.11e-4, 8.53e-3, 3.48e-2],
    -15: [1.18e-4, 1.54e-5, 1.32e-6, 4.60e-6, 1.86e-4, 1.33e-2, 4.26e-2],
    -16: [None, 1.54e-5, 1.27e-6, 2.29e-7, 7.52e-6, 3.19e-4, 1.89e-2, 4.67e-2],
    -17: [None, None, 1.27e-6, 1.49e-7, 1.47e-7, 1.29e-5, 5.42e-4, 2.33e-2],
    -18: [None, None, None, 1.53e-7, 1.57e-8, 2.27e-7, 2.21e-5, 9.09e-4],
}

_B = {
    -9: [3.12e-2],
    -10: [2.71e-2, 1.92e-2],
    -11: [2.69e-2, 1.15e-2, 1.94e-2],
    -12: [2.68e-2, 1.11e-2, 5.24e-3, 2.44e-2],
    -13: [2.68e-2, 1.11e-2, 4.54e-3, 3.17e-3, 3.20e-2],
    -14: [2.68e-2, 1.11e-2, 4.50e-3, 1.89e-3, 2.86e-3, 4.03e-2],
    -15: [2.68e-2, 1.11e-2, 4.50e-3, 1.82e-3, 8.48e-4, 3.27e-3, 4.70e-2],
    -16: [None, 1.11e-2, 4.50e-3, 1.81e-3, 7.34e-4, 4.70e-4, 3.96e-3, 5.14e-2],
    -17: [None, None, 4.50e-3, 1.81e-3, 7.27e-4, 3.00e-4, 3.47e-4, 4.62e-3],
    -18: [None, None, None, 1.81e-3, 7.27e-4, 2.90e-4, 1.23e-4, 3.26e-4],
}


def _cells(rows):
    return {(nh, ne): v for nh, vals in rows.items() for ne, v in zip(_COLS, vals) if v is not None}


TABLE_A = _cells(_A)
TABLE_B = _cells(_B)
