"""The perimeter walk conditioned to stay positive.

The transition ``p(x, y) = nu(y - x) h(y) / h(x)`` for ``y >= 1`` is sampled
by rejection: propose ``k ~ nu``, discard ``x + k < 1``, and accept with
probability ``h(x + k) / h(x + max_up)``.  Since ``h`` is non-decreasing the
ratio never exceeds one, and the accepted law is proportional to
``nu(k) h(x + k)`` on ``x + k >= 1``, which is ``p(x, .)`` renormalised.
Where ``h`` is harmonic that renormalisation is the identity.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from ..errors import BudgetError, DomainError, HarmonicInconsistencyError
from .harmonic import HarmonicFunction
from .steps import StepDistribution, draw_step

__all__ = [
    "step_conditioned",
    "transition_defect",
    "WalkKernel",
    "walk_kernel",
    "run_walk",
    "scale_block_counts",
]

NORMALIZATION_TOL = 1e-8


@numba.njit(cache=True)
def h_lookup(htab, kappa, y):
    if y <= htab.size:
        return htab[y - 1]
    return kappa * math.sqrt(y)


@numba.njit(cache=True)
def draw_conditioned(gen, cdf, max_up, K, htab, kappa, x):
    bound = h_lookup(htab, kappa, x + max_up)
    while True:
        y = x + draw_step(gen, cdf, max_up, K)
        if y < 1:
            continue
        if gen.random() * bound < h_lookup(htab, kappa, y):
            return y


class WalkKernel:
    """Flat arrays handed to the compiled kernels (picklable, read-only)."""

    __slots__ = ("cdf", "max_up", "K", "htab", "kappa")

    def __init__(self, nu: StepDistribution, h: HarmonicFunction):
        self.cdf, self.K = nu.sampler_tables
        self.max_up = int(nu.max_up)
        self.htab = h.table
        self.kappa = float(h.far_field_kappa)

    def args(self):
        return self.cdf, self.max_up, self.K, self.htab, self.kappa

    def __getstate__(self):
        return {s: getattr(self, s) for s in self.__slots__}

    def __setstate__(self, state):
        for k, v in state.items():
            setattr(self, k, v)


def walk_kernel(nu, h) -> WalkKernel:
    return WalkKernel(nu, h)


def transition_defect(x: int, nu: StepDistribution, h: HarmonicFunction) -> float:
    """``|sum_y p(x, y) - 1|`` using the tabulated ``h`` (needs ``x + max_up <= M``)."""
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    if x + nu.max_up > h.M:
        raise DomainError(f"x + max_up must be <= M = {h.M}")
    tab = h.table
    up = math.fsum(nu.probs_up[k] * tab[x + k - 1] for k in range(nu.max_up + 1))
    down = math.fsum(nu.down_table(x - 1) * tab[x - 2 :: -1]) if x > 1 else 0.0
    return abs((up + down) / tab[x - 1] - 1.0)


def step_conditioned(x: int, nu: StepDistribution, h: HarmonicFunction, rng: np.random.Generator) -> int:
    """One step of the conditioned walk from ``x``.

    Inside the table the transition is checked for normalisation first;
    above it the far field ``kappa sqrt(y)`` is used and the rejection
    sampler normalises it implicitly.

    Raises
    ------
    HarmonicInconsistencyError
        If ``|sum_y p(x, y) - 1| > 1e-8`` at a tabulated state.
    """
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    if x + nu.max_up <= h.M:
        defect = transition_defect(x, nu, h)
        if defect > NORMALIZATION_TOL:
            raise HarmonicInconsistencyError(
                f"transition from {x} sums to 1 {defect:+.3e}; h is not harmonic for this nu",
                history=[defect],
            )
    cdf, K = nu.sampler_tables
    return int(draw_conditioned(rng, cdf, nu.max_up, K, h.table, h.far_field_kappa, x))


@numba.njit(cache=True)
def _walk(gen, cdf, max_up, K, htab, kappa, x0, n_steps, marks, out_at, out_min, out_sup):
    # out_at[j] = X at step marks[j]; out_min / out_sup over steps 1..n_steps
    x = x0
    lo = x0
    hi = x0
    j = 0
    while j < marks.size and marks[j] == 0:
        out_at[j] = x
        j += 1
    for n in range(1, n_steps + 1):
        x = draw_conditioned(gen, cdf, max_up, K, htab, kappa, x)
        if x < lo:
            lo = x
        if x > hi:
            hi = x
        while j < marks.size and marks[j] == n:
            out_at[j] = x
            j += 1
    out_min[0] = lo
    out_sup[0] = hi


def run_walk(kernel: WalkKernel, x0: int, n_steps: int, rng, marks=()):
    """Run ``n_steps`` conditioned steps from ``x0``.

    Returns ``(values_at_marks, minimum, supremum)``; ``marks`` must be sorted.
    """
    marks = np.asarray(marks, dtype=np.int64)
    if marks.size and (np.any(np.diff(marks) < 0) or marks[0] < 0 or marks[-1] > n_steps):
        raise DomainError("marks must be sorted and lie in [0, n_steps]")
    at = np.empty(marks.size, dtype=np.int64)
    lo = np.empty(1, dtype=np.int64)
    hi = np.empty(1, dtype=np.int64)
    _walk(rng, *kernel.args(), int(x0), int(n_steps), marks, at, lo, hi)
    return at, int(lo[0]), int(hi[0])


@numba.njit(cache=True)
def _scale_block(gen, cdf, max_up, K, htab, kappa, x0, target, max_steps):
    # steps from x0 until X >= target; count steps with 2 * dX < -X
    x = x0
    count = 0
    n = 0
    while x < target:
        if n >= max_steps:
            return count, n, 1
        y = draw_conditioned(gen, cdf, max_up, K, htab, kappa, x)
        if 2 * (y - x) < -x:
            count += 1
        x = y
        n += 1
    return count, n, 0


def scale_block_counts(kernel: WalkKernel, x0: int, target: int, rng, max_steps: int):
    """Big-drop count and step count for one block from ``x0`` up to ``target``."""
    count, n, status = _scale_block(rng, *kernel.args(), int(x0), int(target), int(max_steps))
    if status:
        raise BudgetError(
            f"walk from {x0} did not reach {target} within {max_steps} steps",
            partial={"count": int(count), "steps": int(n)},
        )
    return int(count), int(n)
