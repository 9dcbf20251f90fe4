"""Survival-exponent constants from the Lamperti Levy process.

The Levy process ``xi`` in the Lamperti representation of the conditioned
3/2-stable process has no Gaussian part, jump density

    Pi(y) = exp(3y/2) / (1 - exp(y))**(5/2),    y < 0,

mean ``E[xi_1] = 2*pi/3`` and Laplace exponent

    psi(lam) = (2*pi/3) * Gamma(lam + 3/2) / (Gamma(lam) * Gamma(3/2)).

Counting jumps below a threshold until first passage gives an exponential
functional whose decay rate ``c_F`` solves ``psi(c) = int (1 - e^F) e^{cy} Pi(dy)``.
The root-survival constant is the case ``F = ln(1/2) 1{y < -ln 2}``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable

from .errors import DomainError
from .numerics import RootResult, find_root, gamma_fn, integrate

__all__ = [
    "MEAN_XI1",
    "LevyCharacteristics",
    "ExponentReport",
    "JumpFunctional",
    "levy_density",
    "levy_characteristics",
    "psi_gamma",
    "psi_lk",
    "drift_from_mean",
    "beta_integral",
    "tail_integral",
    "jump_tail_integral",
    "solve_cu",
    "solve_cu_result",
    "solve_cF",
    "solve_cF_result",
    "derived_exponents",
]

MEAN_XI1 = 2.0 * math.pi / 3.0
LN2 = math.log(2.0)

# lower truncation of integrals over (-inf, t); the remainder is added analytically
Y_TRUNC = -60.0

ROOT_BRACKET = (1e-8, 10.0)
# near one ulp of c ~ 0.13; ITP stops earlier if the bracket can no longer be split
SOLVE_TOL = 1e-16


def levy_density(y: float) -> float:
    """Jump density ``exp(3y/2) / (1 - exp(y))**2.5`` for ``y < 0``."""
    y = float(y)
    if not y < 0.0:
        raise DomainError(f"levy_density is defined for y < 0, got {y!r}")
    return math.exp(1.5 * y) / (-math.expm1(y)) ** 2.5


@dataclass(frozen=True)
class LevyCharacteristics:
    """Generating triple of ``xi``: mean, Levy-Khintchine drift, jump density."""

    mean_xi1: float
    drift_a: float
    density: Callable[[float], float]


def levy_characteristics() -> LevyCharacteristics:
    return LevyCharacteristics(MEAN_XI1, drift_from_mean(), levy_density)


def psi_gamma(lam: float) -> float:
    """Laplace exponent in closed form (Gamma ratio)."""
    lam = float(lam)
    if lam < 0.0 or math.isnan(lam):
        raise DomainError(f"psi is evaluated for lambda >= 0, got {lam!r}")
    if lam == 0.0:
        return 0.0
    return MEAN_XI1 * gamma_fn(lam + 1.5) / (gamma_fn(lam) * gamma_fn(1.5))


def _expm1_minus_x(x):
    # e^x - 1 - x without cancellation for small |x|
    if abs(x) < 0.1:
        s = 0.0
        term_coeffs = (1 / 3628800, 1 / 362880, 1 / 40320, 1 / 5040, 1 / 720, 1 / 120, 1 / 24, 1 / 6, 1 / 2)
        for k in term_coeffs:
            s = s * x + k
        return s * x * x
    return math.expm1(x) - x


def _far_tail(rate):
    """int_{-inf}^{Y_TRUNC} exp(rate*y) dy; Pi differs from exp(1.5y) there by < 1e-25."""
    return math.exp(rate * Y_TRUNC) / rate


@lru_cache(maxsize=None)
def drift_from_mean() -> float:
    """Drift ``a`` of the Levy-Khintchine form that makes ``psi'(0) = 2*pi/3``.

    ``a = 2*pi/3 - int_{y < -1} y Pi(y) dy``.
    """
    res = integrate(lambda y: y * levy_density(y), Y_TRUNC, -1.0)
    # int_{-inf}^{-60} y e^{1.5y} dy
    rem = math.exp(1.5 * Y_TRUNC) * (Y_TRUNC / 1.5 - 1.0 / 2.25)
    return MEAN_XI1 - (res.value + rem)


def psi_lk(lam: float) -> float:
    """Laplace exponent from the Levy-Khintchine integral (cross-check route)."""
    lam = float(lam)
    if lam < 0.0 or math.isnan(lam):
        raise DomainError(f"psi is evaluated for lambda >= 0, got {lam!r}")
    if lam == 0.0:
        return 0.0
    a = drift_from_mean()
    near = integrate(
        lambda y: _expm1_minus_x(lam * y) * levy_density(y), -1.0, 0.0, singular=(False, True)
    )
    far = integrate(lambda y: math.expm1(lam * y) * levy_density(y), Y_TRUNC, -1.0)
    rem = _far_tail(lam + 1.5) - _far_tail(1.5)
    return a * lam + near.value + far.value + rem


def beta_integral(c: float) -> float:
    """``int_0^1 x**(c-1) * (1-x)**0.5 dx`` by quadrature (singular at 0 for c < 1)."""
    c = float(c)
    if not c > 0.0:
        raise DomainError(f"beta_integral needs c > 0, got {c!r}")
    return integrate(lambda x: x ** (c - 1.0) * math.sqrt(1.0 - x), 0.0, 1.0, singular=(True, False)).value


def tail_integral(c: float, u: float) -> float:
    """``int_0^u x**(c+1/2) * (1-x)**(-5/2) dx`` for ``0 < u < 1``."""
    c = float(c)
    u = float(u)
    if not c > 0.0:
        raise DomainError(f"tail_integral needs c > 0, got {c!r}")
    if not 0.0 < u < 1.0:
        raise DomainError(f"tail_integral needs 0 < u < 1, got {u!r}")
    return integrate(
        lambda x: x ** (c + 0.5) * (1.0 - x) ** -2.5, 0.0, u, singular=(True, False)
    ).value


def jump_tail_integral(c: float, threshold: float) -> float:
    """``int_{-inf}^{threshold} exp(c*y) Pi(y) dy`` for ``c >= 0``, ``threshold < 0``.

    Integrated on ``(Y_TRUNC, threshold)``; the piece below ``Y_TRUNC`` is
    ``exp((c+1.5)*Y_TRUNC)/(c+1.5)`` up to a factor ``1 + O(e^-60)``.
    """
    if not threshold < 0.0:
        raise DomainError(f"threshold must be negative, got {threshold!r}")
    if threshold <= Y_TRUNC:
        raise DomainError(f"threshold must exceed {Y_TRUNC}")
    body = integrate(lambda y: math.exp(c * y) * levy_density(y), Y_TRUNC, threshold)
    return body.value + _far_tail(c + 1.5)


def _solve(g, what):
    lo, hi = ROOT_BRACKET
    return find_root(g, lo, hi, tol=SOLVE_TOL)


def solve_cu_result(u: float) -> RootResult:
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    rhs = 2.0 * math.pi / (3.0 * (1.0 - u))

    def g(c):
        return beta_integral(c) * tail_integral(c, u) - rhs

    return _solve(g, f"c_u at u={u}")


def solve_cu(u: float) -> float:
    """Root ``c_u`` of ``B(c) * T(c, u) = 2*pi / (3*(1-u))``; ``u = 1/2`` gives c."""
    return solve_cu_result(u).root


@dataclass(frozen=True)
class JumpFunctional:
    """``F(x) = weight_log * 1{x < threshold}`` acting on jumps ``x <= 0``."""

    weight_log: float
    threshold: float

    def __post_init__(self):
        if not self.weight_log <= 0.0:
            raise DomainError(f"weight_log must be <= 0, got {self.weight_log!r}")
        if not self.threshold < 0.0:
            raise DomainError(f"threshold must be < 0, got {self.threshold!r}")

    @classmethod
    def from_u(cls, u: float, threshold: float = -LN2) -> "JumpFunctional":
        if not 0.0 < u <= 1.0:
            raise DomainError(f"u must lie in (0, 1], got {u!r}")
        return cls(math.log(u), threshold)

    def __call__(self, x: float) -> float:
        return self.weight_log if x < self.threshold else 0.0


def solve_cF_result(fn: JumpFunctional) -> RootResult:
    if fn.weight_log == 0.0:
        return RootResult(0.0, 0.0, 0.0, 0)
    factor = -math.expm1(fn.weight_log)

    def g(c):
        return psi_gamma(c) - factor * jump_tail_integral(c, fn.threshold)

    return _solve(g, f"c_F for {fn}")


def solve_cF(fn: JumpFunctional) -> float:
    """Decay rate ``c_F`` with ``E[exp(sum F(jumps))] = exp(-c_F * z)``."""
    return solve_cF_result(fn).root


@dataclass(frozen=True)
class ExponentReport:
    c: float
    two_c_over_3: float
    two_pow_minus_c: float
    gamma: float
    gamma_max: float
    alpha: float

    def as_dict(self):
        return asdict(self)


def derived_exponents(c: float) -> ExponentReport:
    """Survival exponent 2c/3, scale factor 2^-c and the pioneer-point exponents.

    ``gamma = c/(12+2c)`` is the proven pioneer exponent, ``gamma_max =
    2c/(3+2c)`` its ceiling, ``alpha = 1/(8+4c/3)`` the time cut used for it.
    """
    c = float(c)
    return ExponentReport(
        c=c,
        two_c_over_3=2.0 * c / 3.0,
        two_pow_minus_c=2.0 ** -c,
        gamma=c / (12.0 + 2.0 * c),
        gamma_max=2.0 * c / (3.0 + 2.0 * c),
        alpha=1.0 / (8.0 + 4.0 * c / 3.0),
    )
