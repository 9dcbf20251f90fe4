"""First-passage simulation of the Lamperti Levy process.

The process is approximated by dropping jumps in ``(-eps, 0)``: what remains
is a compound Poisson stream of jumps with density ``Pi`` on ``(-inf, -eps]``
plus a constant drift that restores the mean slope ``2*pi/3``.  Optionally
the dropped jumps are replaced by a Brownian part of matched variance.

Between jumps the path is continuous and increasing in mean, and jumps only
go down, so the first passage above ``z`` happens between jumps and lands
exactly on ``z``.  In ``drop_small`` mode the crossing time is linear
interpolation; in ``gaussian_small`` mode it is an inverse-Gaussian draw.

Jump sizes use the closed-form CDF: with ``w = e^y / (1 - e^y)``,
``int_{-inf}^{y} Pi = (2/3) w**1.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import BudgetError, DomainError
from .exponent import (
    LN2,
    MEAN_XI1,
    JumpFunctional,
    jump_tail_integral,
    levy_density,
    solve_cF,
)
from .numerics import find_root, integrate
from .streams import run_sharded, sample_stream

__all__ = [
    "MODES",
    "LevyApprox",
    "PassageSample",
    "PassageEstimate",
    "build_approx",
    "jump_rate_closed_form",
    "jump_cdf",
    "sample_jump_sizes",
    "sample_passage",
    "simulate_passages",
    "verify_lemma2",
    "estimate_E2_pow_minus_N",
    "approx_decay_rate",
]

MODES = ("drop_small", "gaussian_small")
DEFAULT_MAX_TIME = 1e4


@dataclass(frozen=True)
class LevyApprox:
    cutoff_eps: float
    jump_rate: float
    compensated_drift: float
    small_jump_stddev_per_time: float
    mode: str

    @property
    def w_eps(self) -> float:
        # w(y) = e^y/(1-e^y) evaluated at the cutoff
        return 1.0 / math.expm1(self.cutoff_eps)


def jump_rate_closed_form(eps: float) -> float:
    """``int_{-inf}^{-eps} Pi(y) dy = (2/3) * (e^eps - 1)**-1.5``."""
    return (2.0 / 3.0) * math.expm1(eps) ** -1.5


def jump_cdf(y, eps: float):
    """CDF of the normalised jump law on ``(-inf, -eps]``."""
    y = np.asarray(y, dtype=float)
    w = np.exp(y) / -np.expm1(y)
    return np.minimum(1.0, (w * math.expm1(eps)) ** 1.5)


def build_approx(eps: float, mode: str = "drop_small") -> LevyApprox:
    """Compound-Poisson approximation with jumps smaller than ``eps`` removed.

    The rate and the first moment of the retained jumps come from quadrature;
    the drift is set so the mean slope is ``2*pi/3`` in either mode.
    """
    eps = float(eps)
    if not 0.0 < eps < LN2:
        raise DomainError(f"cutoff eps must lie in (0, ln 2), got {eps!r}")
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    rate = jump_tail_integral(0.0, -eps)
    first = integrate(lambda y: y * levy_density(y), -60.0, -eps).value
    first += math.exp(-90.0) * (-60.0 / 1.5 - 1.0 / 2.25)
    drift = MEAN_XI1 - first
    sd = 0.0
    if mode == "gaussian_small":
        var = integrate(lambda y: y * y * levy_density(y), -eps, 0.0, singular=(False, True)).value
        sd = math.sqrt(var)
    return LevyApprox(eps, rate, drift, sd, mode)


def sample_jump_sizes(approx: LevyApprox, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the normalised jump density on ``(-inf, -eps]``."""
    u = 1.0 - rng.random(n)
    w = approx.w_eps * u ** (2.0 / 3.0)
    return -np.log1p(1.0 / w)


@dataclass(frozen=True)
class PassageSample:
    passage_time: float
    counted_jumps: int
    functional_value: float
    n_jumps: int = 0


@numba.njit(cache=True)
def _passage_drop(gen, rate, drift, w_eps, z, threshold, max_time):
    t = 0.0
    x = 0.0
    counted = 0
    njumps = 0
    while True:
        e = gen.standard_exponential() / rate
        if x + drift * e >= z:
            return t + (z - x) / drift, counted, njumps, 0
        t += e
        x += drift * e
        if t > max_time:
            return t, counted, njumps, 1
        u = 1.0 - gen.random()
        y = -math.log1p(1.0 / (w_eps * u ** (2.0 / 3.0)))
        x += y
        njumps += 1
        if y < threshold:
            counted += 1


@numba.njit(cache=True)
def _inverse_gaussian(gen, mu, lam):
    nu = gen.standard_normal()
    y = nu * nu
    x = mu + mu * mu * y / (2.0 * lam) - mu / (2.0 * lam) * math.sqrt(4.0 * mu * lam * y + mu * mu * y * y)
    if gen.random() <= mu / (mu + x):
        return x
    return mu * mu / x


@numba.njit(cache=True)
def _passage_gauss(gen, rate, drift, sd, w_eps, z, threshold, max_time):
    t = 0.0
    x = 0.0
    counted = 0
    njumps = 0
    var = sd * sd
    while True:
        e = gen.standard_exponential() / rate
        gap = z - x
        hit = _inverse_gaussian(gen, gap / drift, gap * gap / var)
        if hit <= e:
            return t + hit, counted, njumps, 0
        # position at the jump time given no crossing before it
        m = x + drift * e
        s = sd * math.sqrt(e)
        while True:
            xe = m + s * gen.standard_normal()
            if xe < z and gen.random() > math.exp(-2.0 * gap * (z - xe) / (var * e)):
                break
        t += e
        x = xe
        if t > max_time:
            return t, counted, njumps, 1
        u = 1.0 - gen.random()
        y = -math.log1p(1.0 / (w_eps * u ** (2.0 / 3.0)))
        x += y
        njumps += 1
        if y < threshold:
            counted += 1


def _run_one(approx, z, threshold, gen, max_time):
    if approx.mode == "gaussian_small" and approx.small_jump_stddev_per_time > 0.0:
        return _passage_gauss(
            gen, approx.jump_rate, approx.compensated_drift, approx.small_jump_stddev_per_time,
            approx.w_eps, z, threshold, max_time,
        )
    return _passage_drop(gen, approx.jump_rate, approx.compensated_drift, approx.w_eps, z, threshold, max_time)


def sample_passage(
    approx: LevyApprox,
    z: float,
    fn: JumpFunctional,
    rng: np.random.Generator,
    max_time: float = DEFAULT_MAX_TIME,
) -> PassageSample:
    """Simulate one path up to its first passage above ``z``.

    Raises
    ------
    BudgetError
        If the path has not passed ``z`` by ``max_time``.
    """
    z = float(z)
    if z < 0.0:
        raise DomainError(f"level z must be >= 0, got {z!r}")
    if fn.threshold > -approx.cutoff_eps:
        raise DomainError("functional threshold must be <= -eps, otherwise dropped jumps would count")
    if z == 0.0:
        return PassageSample(0.0, 0, 0.0, 0)
    t, counted, njumps, status = _run_one(approx, z, fn.threshold, rng, max_time)
    if status:
        raise BudgetError(
            f"no passage above z={z} within time {max_time}",
            partial={"time": t, "counted_jumps": counted, "n_jumps": njumps},
        )
    return PassageSample(t, int(counted), fn.weight_log * counted, int(njumps))


def _passage_shard(start, stop, approx, z, threshold, seed, max_time):
    n = stop - start
    times = np.empty(n)
    counts = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    for j in range(n):
        gen = sample_stream(seed, start + j)
        t, c, _, s = _run_one(approx, z, threshold, gen, max_time)
        times[j] = t
        counts[j] = c
        status[j] = s
    return times, counts, status


def simulate_passages(approx, z, fn, n_samples, seed, workers=1, max_time=DEFAULT_MAX_TIME):
    """Passage times and counted-jump numbers for samples ``0..n_samples-1``."""
    if fn.threshold > -approx.cutoff_eps:
        raise DomainError("functional threshold must be <= -eps")
    if z <= 0.0:
        return np.zeros(n_samples), np.zeros(n_samples, dtype=np.int64)
    times, counts, status = run_sharded(
        _passage_shard, n_samples, workers, approx, float(z), fn.threshold, int(seed), max_time
    )
    if status.any():
        bad = int(np.flatnonzero(status)[0])
        raise BudgetError(
            f"sample {bad} did not pass z={z} within time {max_time}",
            partial={"sample": bad, "time": float(times[bad]), "counted_jumps": int(counts[bad])},
        )
    return times, counts


@dataclass(frozen=True)
class PassageEstimate:
    estimate: float
    std_error: float
    prediction: float
    prediction_approx: float
    n_samples: int
    mean_counted: float

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "prediction": self.prediction,
            "prediction_approx": self.prediction_approx,
            "n_samples": self.n_samples,
            "mean_counted": self.mean_counted,
        }


def _mean_from_counts(counts, weight_log):
    """Sample mean and standard error of exp(weight_log * N) from integer counts."""
    n = counts.size
    hist = np.bincount(counts)
    ks = np.arange(hist.size)
    vals = np.exp(weight_log * ks)
    mean = math.fsum(hist * vals) / n
    var = math.fsum(hist * (vals - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var / n)


def approx_decay_rate(approx: LevyApprox, fn: JumpFunctional) -> float:
    """``c_F`` for the simulated (truncated) process itself.

    Its Laplace exponent is ``d*c + sigma^2 c^2/2 + int_{-inf}^{-eps} (e^{cy} - 1) Pi``.
    """
    if fn.weight_log == 0.0:
        return 0.0
    factor = -math.expm1(fn.weight_log)
    d = approx.compensated_drift
    s2 = approx.small_jump_stddev_per_time ** 2

    def g(c):
        psi = d * c + 0.5 * s2 * c * c + jump_tail_integral(c, -approx.cutoff_eps) - approx.jump_rate
        return psi - factor * jump_tail_integral(c, fn.threshold)

    return find_root(g, 1e-8, 10.0, tol=1e-14).root


def verify_lemma2(
    approx: LevyApprox,
    z: float,
    fn: JumpFunctional,
    n_samples: int,
    seed: int,
    workers: int = 1,
    max_time: float = DEFAULT_MAX_TIME,
) -> PassageEstimate:
    """Monte Carlo estimate of ``E[exp(sum F(jumps before passage))]``.

    ``prediction`` is ``exp(-c_F * z)`` for the exact process,
    ``prediction_approx`` the same for the truncated process being simulated.
    """
    if n_samples < 100:
        raise DomainError("verify_lemma2 needs at least 100 samples")
    if not z > 0.0:
        raise DomainError(f"level z must be > 0, got {z!r}")
    _, counts = simulate_passages(approx, z, fn, n_samples, seed, workers, max_time)
    est, se = _mean_from_counts(counts, fn.weight_log)
    pred = math.exp(-solve_cF(fn) * z)
    pred_approx = math.exp(-approx_decay_rate(approx, fn) * z)
    return PassageEstimate(est, se, pred, pred_approx, int(n_samples), float(counts.mean()))


def estimate_E2_pow_minus_N(approx, n_samples, seed, workers=1, max_time=DEFAULT_MAX_TIME):
    """``E[2^-N]`` with N the big jumps (relative size > 1/2) before doubling.

    In log coordinates a relative jump beyond one half is a jump below
    ``-ln 2`` and doubling is passage above ``ln 2``.
    """
    fn = JumpFunctional(-LN2, -LN2)
    return verify_lemma2(approx, LN2, fn, n_samples, seed, workers, max_time)
