"""Tridiagonal solvers used by the marching schemes.

All systems assembled here are diagonally dominant by construction, so a
pivot-free Thomas sweep is well posed.  The production path delegates the
sweep to LAPACK ``gtsv``/``gttrf``+``gttrs`` after asserting dominance of the
assembled rows; :func:`thomas` is the plain reference implementation kept for
cross-checking and for very small systems.
"""

import numpy as np
from scipy.linalg import lapack

PIVOT_FLOOR = 1e-12


class TridiagonalError(RuntimeError):
    """Raised when a tridiagonal system is singular or not solver-safe."""


def _check_rows(lower, diag, upper):
    # Pivot sanity: diagonal must not vanish against its own row.
    row_norm = np.abs(diag).copy()
    row_norm[1:] += np.abs(lower)
    row_norm[:-1] += np.abs(upper)
    bad = np.abs(diag) <= PIVOT_FLOOR * row_norm
    if bad.any():
        raise TridiagonalError(
            f"near-zero pivot at row {int(np.argmax(bad))} "
            f"(|d|={np.abs(diag[bad]).min():.3e})"
        )


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system by forward elimination, no pivoting.

    ``lower`` and ``upper`` have length ``n - 1``.  Reference implementation;
    prefer :func:`solve` in hot paths.
    """
    n = len(diag)
    lower = np.asarray(lower)
    diag = np.asarray(diag)
    upper = np.asarray(upper)
    rhs = np.asarray(rhs)
    _check_rows(lower, diag, upper)
    dtype = np.result_type(lower, diag, upper, rhs, float)
    cp = np.empty(n - 1, dtype=dtype)
    dp = np.empty(n, dtype=dtype)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for m in range(1, n):
        denom = diag[m] - lower[m - 1] * cp[m - 1]
        if abs(denom) <= PIVOT_FLOOR * (abs(diag[m]) + abs(lower[m - 1])):
            raise TridiagonalError(f"elimination breakdown at row {m}")
        if m < n - 1:
            cp[m] = upper[m] / denom
        dp[m] = (rhs[m] - lower[m - 1] * dp[m - 1]) / denom
    x = np.empty(n, dtype=dtype)
    x[-1] = dp[-1]
    for m in range(n - 2, -1, -1):
        x[m] = dp[m] - cp[m] * x[m + 1]
    return x


def solve(lower, diag, upper, rhs):
    """Solve one tridiagonal system via LAPACK ``gtsv`` (real or complex)."""
    _check_rows(lower, diag, upper)
    b = np.asarray(rhs)
    if np.iscomplexobj(lower) or np.iscomplexobj(diag) or np.iscomplexobj(upper) \
            or np.iscomplexobj(b):
        gtsv = lapack.zgtsv
        dt = np.complex128
    else:
        gtsv = lapack.dgtsv
        dt = np.float64
    out = gtsv(np.asarray(lower, dtype=dt), np.asarray(diag, dtype=dt),
               np.asarray(upper, dtype=dt), b.astype(dt).reshape(-1, 1))
    info = out[-1]
    if info != 0:
        raise TridiagonalError(f"gtsv failed, info={info}")
    return out[3][:, 0]


class TridiagonalFactorization:
    """LU factorization of a fixed tridiagonal matrix, reusable across solves.

    The time-domain marcher solves thousands of systems per range step with
    the same matrix; factoring once per step keeps the cost at one
    substitution pair per solve.
    """

    def __init__(self, lower, diag, upper):
        _check_rows(lower, diag, upper)
        if np.iscomplexobj(lower) or np.iscomplexobj(diag) or np.iscomplexobj(upper):
            trf, self._trs = lapack.zgttrf, lapack.zgttrs
            dt = np.complex128
        else:
            trf, self._trs = lapack.dgttrf, lapack.dgttrs
            dt = np.float64
        self._dtype = dt
        dl, d, du, du2, ipiv, info = trf(
            np.asarray(lower, dtype=dt), np.asarray(diag, dtype=dt),
            np.asarray(upper, dtype=dt))
        if info != 0:
            raise TridiagonalError(f"gttrf failed, info={info}")
        self._fac = (dl, d, du, du2, ipiv)
        self.n = len(diag)

    def solve(self, rhs):
        x, info = self._trs(*self._fac, np.asarray(rhs, dtype=self._dtype).reshape(-1, 1))
        if info != 0:
            raise TridiagonalError(f"gttrs failed, info={info}")
        return x[:, 0]
