"""Monte Carlo survival of the root edge and the scale-block estimator."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import BudgetError, DomainError
from ..streams import run_sharded, sample_stream
from .harmonic import HarmonicFunction
from .ring import PeelAlgorithm, choose_edge, draw_side, ring_update
from .steps import StepDistribution
from .walk import WalkKernel, _scale_block, draw_conditioned

__all__ = [
    "SurvivalCurve",
    "ScaleBlockEstimate",
    "ExponentFit",
    "default_checkpoints",
    "peel_run",
    "survival_curve",
    "perimeters_after",
    "scale_block_estimate",
    "fit_exponent",
]

# stream key tags: keep the families of per-sample streams disjoint
_TAG_SURVIVAL = 1
_TAG_SCALE = 2
_TAG_PERIMETER = 3

DEFAULT_BLOCK_BUDGET = 10**9


def default_checkpoints(n_lo: int = 100, n_hi: int = 100_000, count: int = 16) -> np.ndarray:
    """Geometric checkpoints from ``n_lo`` to ``n_hi`` (rounded, unique)."""
    return np.unique(np.round(np.geomspace(n_lo, n_hi, count)).astype(np.int64))


@numba.njit(cache=True)
def _peel_path(gen, cdf, max_up, K, htab, kappa, ell, n_max, code, offset, stop_at_death):
    """Peel from perimeter ``ell`` with the root at 0.

    Returns ``(death_step, perimeter)``: the step at which the root was
    swallowed (``n_max + 1`` if it survived) and the perimeter after the last
    simulated step.  With ``stop_at_death`` false the perimeter is followed for
    all ``n_max`` steps.
    """
    P = ell
    root = 0
    death = n_max + 1
    for n in range(1, n_max + 1):
        if root >= 0:
            u = gen.random() if code == 1 else 0.0
            e = choose_edge(code, offset, P, root, u)
        y = draw_conditioned(gen, cdf, max_up, K, htab, kappa, P)
        k = y - P
        if root >= 0:
            side = draw_side(gen.random()) if k <= -2 else 1
            root = ring_update(P, root, e, k, side)
            if root < 0:
                death = n
                if stop_at_death:
                    return death, y
        P = y
    return death, P


def _kernel_args(nu, h):
    return WalkKernel(nu, h).args()


def peel_run(alg: PeelAlgorithm, nu, h, ell: int, n_max: int, rng, stop_at_death: bool = True):
    """One peeling run; returns ``(death_step, final_perimeter)``."""
    death, P = _peel_path(
        rng, *_kernel_args(nu, h), int(ell), int(n_max), alg.code, int(alg.offset), stop_at_death
    )
    return int(death), int(P)


def _survival_shard(start, stop, kargs, ell, n_max, code, offset, seed, stop_at_death):
    n = stop - start
    deaths = np.empty(n, dtype=np.int64)
    perims = np.empty(n, dtype=np.int64)
    for j in range(n):
        tag = _TAG_SURVIVAL if stop_at_death else _TAG_PERIMETER
        gen = sample_stream(seed, tag, start + j)
        deaths[j], perims[j] = _peel_path(gen, *kargs, ell, n_max, code, offset, stop_at_death)
    return deaths, perims


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Fraction of runs whose root is still on the boundary after ``n`` steps."""

    n: np.ndarray
    survivors: np.ndarray
    samples: int

    @property
    def p_hat(self) -> np.ndarray:
        return self.survivors / self.samples

    @property
    def std_err(self) -> np.ndarray:
        p = self.p_hat
        return np.sqrt(p * (1.0 - p) / self.samples)

    def rows(self):
        for n, s, p, se in zip(self.n, self.survivors, self.p_hat, self.std_err):
            yield int(n), int(s), int(self.samples), float(p), float(se)

    def as_dict(self):
        return {int(n): (float(p), float(se)) for n, _, _, p, se in self.rows()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "survivors", "samples", "p_hat", "std_err"])
        for n, s, m, p, se in self.rows():
            w.writerow([n, s, m, repr(p), repr(se)])
        return buf.getvalue()


def survival_curve(
    alg: PeelAlgorithm,
    nu: StepDistribution,
    h: HarmonicFunction,
    ell: int = 2,
    n_max: int = 100_000,
    n_samples: int = 30_000,
    checkpoints=None,
    seed: int = 0,
    workers: int = 1,
) -> SurvivalCurve:
    """Survival of the root edge at each checkpoint (``n = 0`` is always included)."""
    ell, n_max, n_samples = int(ell), int(n_max), int(n_samples)
    if ell < 2:
        raise DomainError(f"start perimeter must be >= 2, got {ell}")
    if n_max < 1 or n_samples < 1:
        raise DomainError("n_max and n_samples must be >= 1")
    cps = default_checkpoints(min(100, n_max), n_max) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if cps.size and (cps.min() < 0 or cps.max() > n_max):
        raise DomainError(f"checkpoints must lie in [0, {n_max}]")
    cps = np.unique(np.concatenate([[0], cps]))
    deaths, _ = run_sharded(
        _survival_shard, n_samples, workers, _kernel_args(nu, h), ell, n_max, alg.code, int(alg.offset), int(seed), True
    )
    sorted_deaths = np.sort(deaths)
    # alive after n steps  <=>  death step > n
    survivors = n_samples - np.searchsorted(sorted_deaths, cps, side="right")
    return SurvivalCurve(cps, survivors.astype(np.int64), n_samples)


def perimeters_after(alg, nu, h, ell, n_steps, n_samples, seed, workers=1) -> np.ndarray:
    """Perimeter after ``n_steps`` peels, following the walk past any swallowing."""
    _, perims = run_sharded(
        _survival_shard, int(n_samples), workers, _kernel_args(nu, h), int(ell), int(n_steps),
        alg.code, int(alg.offset), int(seed), False,
    )
    return perims


@dataclass(frozen=True)
class ScaleBlockEstimate:
    i: int
    estimate: float
    std_error: float
    n_samples: int
    start: int
    mean_steps: float
    per_start: tuple

    def as_dict(self):
        return {
            "i": self.i,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "start": self.start,
            "mean_steps": self.mean_steps,
            "per_start": [list(p) for p in self.per_start],
        }


def _block_shard(start, stop, kargs, x0, target, seed, i, budget):
    n = stop - start
    counts = np.empty(n, dtype=np.int64)
    steps = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    for j in range(n):
        gen = sample_stream(seed, _TAG_SCALE, i, x0, start + j)
        counts[j], steps[j], status[j] = _scale_block(gen, *kargs, x0, target, budget)
    return counts, steps, status


def scale_block_estimate(
    nu: StepDistribution,
    h: HarmonicFunction,
    i: int,
    n_samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    max_steps: int = DEFAULT_BLOCK_BUDGET,
) -> ScaleBlockEstimate:
    """Mean of ``2**-N`` over one dyadic block of the conditioned walk.

    ``N`` counts the steps that lose more than half the current perimeter
    while going from ``2**i`` to the first value ``>= 2**(i+1)``.  For laws
    that can jump up by more than one, every start in ``2**i .. 2**i +
    max_up`` is run and the largest mean is reported.
    """
    i = int(i)
    if i < 1:
        raise DomainError(f"block index i must be >= 1, got {i}")
    if n_samples < 2:
        raise DomainError("scale_block_estimate needs at least 2 samples")
    kargs = _kernel_args(nu, h)
    starts = [2**i] if nu.max_up == 1 else list(range(2**i, 2**i + nu.max_up + 1))
    results = []
    for x0 in starts:
        counts, steps, status = run_sharded(
            _block_shard, int(n_samples), workers, kargs, x0, 2 ** (i + 1), int(seed), i, int(max_steps)
        )
        if status.any():
            bad = int(np.flatnonzero(status)[0])
            raise BudgetError(
                f"block sample {bad} from {x0} exceeded {max_steps} steps",
                partial={"sample": bad, "start": x0, "count": int(counts[bad])},
            )
        hist = np.bincount(counts)
        vals = np.ldexp(1.0, -np.arange(hist.size))
        mean = math.fsum(hist * vals) / n_samples
        var = math.fsum(hist * (vals - mean) ** 2) / (n_samples - 1)
        results.append((x0, mean, math.sqrt(var / n_samples), float(steps.mean())))
    best = max(results, key=lambda r: r[1])
    return ScaleBlockEstimate(
        i, best[1], best[2], int(n_samples), best[0], best[3], tuple((r[0], r[1], r[2]) for r in results)
    )


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    std_error: float
    n_points: int

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "std_error": self.std_error, "n_points": self.n_points}


def fit_exponent(curve, n_lo: float, n_hi: float) -> ExponentFit:
    """Weighted least squares of ``log p_hat`` on ``log n`` over ``[n_lo, n_hi]``.

    ``curve`` is a :class:`SurvivalCurve` (weights from the delta method,
    ``var(log p) = (1 - p) / (m p)``) or a plain mapping ``{n: p}`` (equal
    weights).  Checkpoints with zero survival are dropped with a warning.
    """
    if isinstance(curve, SurvivalCurve):
        n = curve.n.astype(float)
        p = curve.p_hat
        m = curve.samples
    else:
        items = sorted(curve.items())
        n = np.array([k for k, _ in items], dtype=float)
        p = np.array([v[0] if isinstance(v, tuple) else v for _, v in items], dtype=float)
        m = None
    sel = (n >= n_lo) & (n <= n_hi) & (n > 0)
    zero = sel & (p <= 0.0)
    if zero.any():
        warnings.warn(f"excluding {int(zero.sum())} checkpoint(s) with zero survival from the fit", RuntimeWarning)
    sel &= p > 0.0
    if sel.sum() < 4:
        raise DomainError(f"need at least 4 usable checkpoints in [{n_lo}, {n_hi}], got {int(sel.sum())}")
    x = np.log(n[sel])
    y = np.log(p[sel])
    if m is None:
        w = np.ones_like(x)
    else:
        # a survival of exactly one has zero delta-method variance; floor it at one count
        var = np.maximum((1.0 - p[sel]) / (m * p[sel]), 1.0 / (m * m))
        w = 1.0 / var
    X = np.column_stack([np.ones_like(x), x])
    WX = X * w[:, None]
    cov = np.linalg.inv(X.T @ WX)
    beta = cov @ (WX.T @ y)
    if m is None:
        resid = y - X @ beta
        dof = max(x.size - 2, 1)
        cov = cov * float(resid @ resid) / dof
    return ExponentFit(float(beta[1]), float(beta[0]), float(math.sqrt(max(cov[1, 1], 0.0))), int(x.size))
