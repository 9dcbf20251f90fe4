"""Harmonic function of a step law killed on leaving {1, 2, ...}.

``h(x) = sum_k nu(k) h(x + k) 1{x + k >= 1}``, normalised by ``h(1) = 1``.
The Doob transform with ``h`` is the walk conditioned to stay positive.

For laws with ``max_up == 1`` the increments ``D(x) = h(x+1) - h(x)`` obey a
renewal equation with non-negative terms only,

    nu(1) D(x) = T(x) + sum_{m=1}^{x-1} D(m) T(x - m),    T(i) = sum_{j>=i} nu(-j),

so the table is built exactly and monotonically from the bottom.  Laws with
larger upward support are solved as one dense linear system closed at the top
by ``h(y) = kappa sqrt(y)`` for ``y > M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ConvergenceError, DomainError
from .steps import StepDistribution

__all__ = ["HarmonicFunction", "harmonic_function", "harmonic_residuals", "DEFAULT_M_SKIPFREE", "DEFAULT_M_DENSE"]

DEFAULT_M_SKIPFREE = 2**15
DEFAULT_M_DENSE = 2048
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HarmonicFunction:
    """Tabulated ``h`` on ``1..M`` with far field ``kappa * sqrt(x)`` above ``M``."""

    table: np.ndarray
    far_field_kappa: float
    M: int
    residual: float

    def __call__(self, x):
        x = np.asarray(x)
        if np.any(x < 1):
            raise DomainError("h is defined on x >= 1")
        xi = x.astype(np.int64)
        inside = xi <= self.M
        out = np.where(inside, self.table[np.minimum(xi, self.M) - 1], self.far_field_kappa * np.sqrt(x))
        return out if out.ndim else float(out)

    def flatness(self, lo_frac: float = 0.5) -> float:
        """``max |h(x)/(kappa sqrt x) - 1|`` over ``x`` in ``[lo_frac*M, M]``."""
        x = np.arange(int(lo_frac * self.M), self.M + 1)
        return float(np.max(np.abs(self.table[x - 1] / (self.far_field_kappa * np.sqrt(x)) - 1.0)))


@numba.njit(cache=True)
def _renewal_increments(T, nu_up1, M):
    # D[x-1] = h(x+1) - h(x), x = 1..M-1
    D = np.empty(M - 1)
    for x in range(1, M):
        s = T[x - 1]
        for m in range(1, x):
            s += D[m - 1] * T[x - m - 1]
        D[x - 1] = s / nu_up1
    return D


@numba.njit(cache=True)
def _residuals(h, up, down, xmax):
    # relative defect of harmonicity at x = 1..xmax, using h[y-1] for y <= len(h)
    max_up = up.size - 1
    out = np.empty(xmax)
    for x in range(1, xmax + 1):
        s = 0.0
        for k in range(max_up + 1):
            s += up[k] * h[x + k - 1]
        for j in range(1, x):
            s += down[j - 1] * h[x - j - 1]
        out[x - 1] = abs(h[x - 1] - s) / h[x - 1]
    return out


def harmonic_residuals(nu: StepDistribution, h: HarmonicFunction) -> np.ndarray:
    """Relative harmonicity defects on ``1..M - max_up`` (direct summation)."""
    xmax = h.M - nu.max_up
    return _residuals(h.table, nu.probs_up, nu.down_table(h.M), xmax)


def _fit_kappa(table, M):
    x = np.arange(int(0.8 * M), M + 1)
    hx = table[x - 1]
    return float(np.dot(hx, np.sqrt(x)) / np.sum(x))


def _skipfree_table(nu, M):
    down = nu.down_table(M)
    # T(i) = sum_{j >= i} nu(-j), i = 1..M; accumulate from the small end
    T = np.cumsum(down[::-1])[::-1] + nu.down_mass_beyond(M)
    D = _renewal_increments(T, float(nu.probs_up[1]), M)
    table = np.empty(M)
    table[0] = 1.0
    table[1:] = 1.0 + np.cumsum(D)
    return table, _fit_kappa(table, M)


def _dense_table(nu, M):
    up = nu.probs_up
    down = nu.down_table(M)
    n = M  # unknowns h(2..M) and kappa
    A = np.zeros((M, n))
    rhs = np.zeros(M)

    def col(y):
        return y - 2

    for x in range(1, M + 1):
        # h(x) term
        if x == 1:
            rhs[x - 1] -= 1.0
        else:
            A[x - 1, col(x)] += 1.0
        for k in range(up.size):
            y = x + k
            coef = -up[k]
            if y > M:
                A[x - 1, n - 1] += coef * math.sqrt(y)
            elif y == 1:
                rhs[x - 1] -= coef
            else:
                A[x - 1, col(y)] += coef
        if x > 1:
            ys = np.arange(1, x)  # y = x - j for j = x-1 .. 1
            coefs = -down[x - ys - 1]
            rhs[x - 1] -= coefs[0]  # y = 1
            if x > 2:
                A[x - 1, ys[1:] - 2] += coefs[1:]
    sol = np.linalg.solve(A, rhs)
    table = np.concatenate([[1.0], sol[:-1]])
    return table, float(sol[-1])


def harmonic_function(nu: StepDistribution, M: int | None = None) -> HarmonicFunction:
    """Positive harmonic function of ``nu`` killed on ``(-inf, 0]``, ``h(1) = 1``.

    Raises
    ------
    ConvergenceError
        If the harmonicity defect on ``1..M-max_up`` exceeds 1e-9 or the table
        is not positive and non-decreasing.
    """
    if M is None:
        M = DEFAULT_M_SKIPFREE if nu.max_up == 1 else DEFAULT_M_DENSE
    M = int(M)
    if M < 1000:
        raise DomainError(f"table size M must be >= 1000, got {M}")
    if nu.max_up == 1:
        table, kappa = _skipfree_table(nu, M)
    else:
        table, kappa = _dense_table(nu, M)
    if not (np.all(table > 0) and np.all(np.diff(table) >= 0)):
        raise ConvergenceError("harmonic table is not positive and non-decreasing")
    res = _residuals(table, nu.probs_up, nu.down_table(M), M - nu.max_up)
    worst = float(res.max())
    if not worst <= RESIDUAL_TOL:
        raise ConvergenceError(
            f"harmonicity defect {worst:.3e} exceeds {RESIDUAL_TOL:g}", history=[worst]
        )
    return HarmonicFunction(table, kappa, M, worst)
