"""Perimeter step laws: bounded above, centred, with a k^-5/2 downward tail."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np
from scipy.special import zeta

from ..errors import NegativeMassError, NuFormatError

__all__ = [
    "StepDistribution",
    "make_synthetic_nu",
    "make_simple_nu",
    "load_nu",
    "save_nu",
    "nu_from_dict",
    "nu_to_dict",
    "synthetic_amplitude_bound",
    "FORMAT_VERSION",
    "DEFAULT_TABLE_CUT",
]

FORMAT_VERSION = 1
TAIL_EXPONENT = 2.5
DEFAULT_TABLE_CUT = 10**6


def synthetic_amplitude_bound() -> float:
    """Largest amplitude for which the synthetic law keeps ``nu(0) >= 0``."""
    return 1.0 / (zeta(1.5) + zeta(2.5))


@dataclass(frozen=True, eq=False)
class StepDistribution:
    """Step law ``nu`` on ``{..., -1, 0, 1, ..., max_up}``.

    Upward and zero steps are listed in ``probs_up`` (index ``k`` holds
    ``nu(k)``).  Downward steps ``nu(-k)`` come from ``probs_down[k-1]`` when
    given and otherwise from ``tail_amplitude * k**-2.5``.  Sampling uses an
    explicit table for ``k <= table_cut`` and exact rejection from a
    continuous Pareto envelope beyond.
    """

    max_up: int
    probs_up: np.ndarray
    tail_amplitude: float
    table_cut: int = DEFAULT_TABLE_CUT
    probs_down: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "probs_up", np.asarray(self.probs_up, dtype=float))
        if self.probs_down is not None:
            object.__setattr__(self, "probs_down", np.asarray(self.probs_down, dtype=float))

    # -- probabilities -----------------------------------------------------

    @property
    def n_explicit_down(self) -> int:
        return 0 if self.probs_down is None else self.probs_down.size

    def down_table(self, n: int) -> np.ndarray:
        """``nu(-1), ..., nu(-n)``."""
        out = np.empty(n)
        m = min(n, self.n_explicit_down)
        if m:
            out[:m] = self.probs_down[:m]
        if n > m:
            k = np.arange(m + 1, n + 1, dtype=float)
            out[m:] = self.tail_amplitude * k ** -TAIL_EXPONENT
        return out

    def down_mass_beyond(self, n: int) -> float:
        """``sum_{k > n} nu(-k)``."""
        L = self.n_explicit_down
        s = 0.0
        if L > n:
            s += math.fsum(self.probs_down[n:])
        start = max(n, L) + 1
        if self.tail_amplitude > 0:
            s += self.tail_amplitude * float(zeta(TAIL_EXPONENT, start))
        return s

    def down_moment_beyond(self, n: int) -> float:
        """``sum_{k > n} k * nu(-k)``."""
        L = self.n_explicit_down
        s = 0.0
        if L > n:
            k = np.arange(n + 1, L + 1)
            s += math.fsum(k * self.probs_down[n:])
        start = max(n, L) + 1
        if self.tail_amplitude > 0:
            s += self.tail_amplitude * float(zeta(TAIL_EXPONENT - 1.0, start))
        return s

    def pmf(self, k: int) -> float:
        k = int(k)
        if k > self.max_up:
            return 0.0
        if k >= 0:
            return float(self.probs_up[k])
        return float(self.down_table(-k)[-1])

    def total_mass(self) -> float:
        n = max(self.n_explicit_down, 1)
        return math.fsum(self.probs_up) + math.fsum(self.down_table(n)) + self.down_mass_beyond(n)

    def mean(self) -> float:
        n = max(self.n_explicit_down, 1)
        up = math.fsum(np.arange(self.max_up + 1) * self.probs_up)
        down = math.fsum(np.arange(1, n + 1) * self.down_table(n)) + self.down_moment_beyond(n)
        return up - down

    def validate(self, tol: float = 1e-12) -> None:
        """Check support, mass and mean; raise :class:`NuFormatError` on violation."""
        if not isinstance(self.max_up, (int, np.integer)) or self.max_up < 1:
            raise NuFormatError(f"max_up must be an integer >= 1, got {self.max_up!r}")
        if self.probs_up.shape != (self.max_up + 1,):
            raise NuFormatError(
                f"probs_up must have max_up + 1 = {self.max_up + 1} entries, got {self.probs_up.size}"
            )
        arrays = [self.probs_up] + ([self.probs_down] if self.probs_down is not None else [])
        for arr in arrays:
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise NuFormatError("probabilities must be finite and non-negative")
        if not (math.isfinite(self.tail_amplitude) and self.tail_amplitude >= 0):
            raise NuFormatError(f"tail_amplitude must be finite and >= 0, got {self.tail_amplitude!r}")
        if self.table_cut < max(1, self.n_explicit_down):
            raise NuFormatError("table_cut must cover every explicit downward probability")
        mass = self.total_mass()
        if abs(mass - 1.0) > tol:
            raise NuFormatError(f"total mass {mass!r} differs from 1 by more than {tol:g}")
        mu = self.mean()
        if abs(mu) > tol:
            raise NuFormatError(f"mean {mu!r} differs from 0 by more than {tol:g}")

    # -- sampling ------------------------------------------------------------

    @cached_property
    def sampler_tables(self):
        """``(cdf, tail_start)``: cdf over k = max_up, max_up-1, ..., -table_cut.

        The last entry is below one by the mass beyond the table, which is
        sampled from the analytic tail.
        """
        K = self.table_cut
        p = np.concatenate([self.probs_up[::-1], self.down_table(K)])
        total = self.total_mass()
        cdf = np.cumsum(p) / total
        return cdf, K

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf, K = self.sampler_tables
        out = np.empty(size, dtype=np.int64)
        _fill_steps(rng, cdf, self.max_up, K, out)
        return out


@numba.njit(cache=True)
def draw_tail(gen, K):
    """``j > K`` with probability proportional to ``j**-2.5``.

    Continuous envelope ``y**-2.5`` on ``[K + 1/2, inf)`` rounded to the
    nearest integer; the midpoint rule underestimates a convex density, so the
    acceptance ratio is at most one.
    """
    while True:
        y = (K + 0.5) * (1.0 - gen.random()) ** (-2.0 / 3.0)
        j = math.floor(y + 0.5)
        cell = (2.0 / 3.0) * ((j - 0.5) ** -1.5 - (j + 0.5) ** -1.5)
        if gen.random() * cell <= j ** -2.5:
            return np.int64(j)


@numba.njit(cache=True)
def draw_step(gen, cdf, max_up, K):
    u = gen.random()
    n = cdf.size
    if u >= cdf[n - 1]:
        return -draw_tail(gen, K)
    lim = 32 if n > 32 else n
    for i in range(lim):
        if u < cdf[i]:
            return max_up - i
    lo = lim
    hi = n - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return max_up - lo


@numba.njit(cache=True)
def _fill_steps(gen, cdf, max_up, K, out):
    for i in range(out.size):
        out[i] = draw_step(gen, cdf, max_up, K)


def make_synthetic_nu(A: float = 0.2, table_cut: int = DEFAULT_TABLE_CUT) -> StepDistribution:
    """Centred law with ``nu(-k) = A k^-5/2``, ``nu(1) = A zeta(3/2)`` and the rest at 0."""
    A = float(A)
    bound = synthetic_amplitude_bound()
    if not 0.0 < A < bound:
        raise NegativeMassError(f"amplitude A must lie in (0, {bound:.6f}), got {A!r}")
    up1 = A * float(zeta(1.5))
    up0 = 1.0 - up1 - A * float(zeta(2.5))
    nu = StepDistribution(1, np.array([up0, up1]), A, int(table_cut))
    nu.validate()
    return nu


def make_simple_nu() -> StepDistribution:
    """Simple symmetric walk, ``nu(+1) = nu(-1) = 1/2``; its killed harmonic function is ``x``."""
    return StepDistribution(1, np.array([0.0, 0.5]), 0.0, 1, np.array([0.5]))


def nu_to_dict(nu: StepDistribution) -> dict:
    d = {
        "format": FORMAT_VERSION,
        "max_up": int(nu.max_up),
        "probs_up": [float(p) for p in nu.probs_up],
        "tail_amplitude": float(nu.tail_amplitude),
        "tail_exponent": TAIL_EXPONENT,
        "table_cut": int(nu.table_cut),
    }
    if nu.probs_down is not None:
        d["probs_down"] = [float(p) for p in nu.probs_down]
    return d


def nu_from_dict(d: dict, tol: float = 1e-9) -> StepDistribution:
    if not isinstance(d, dict):
        raise NuFormatError("step-distribution file must hold a JSON object")
    if d.get("format") != FORMAT_VERSION:
        raise NuFormatError(f"unsupported format {d.get('format')!r}; expected {FORMAT_VERSION}")
    for key in ("max_up", "probs_up", "tail_amplitude", "tail_exponent", "table_cut"):
        if key not in d:
            raise NuFormatError(f"missing field {key!r}")
    max_up = d["max_up"]
    if isinstance(max_up, bool) or not isinstance(max_up, int):
        raise NuFormatError(f"support must be bounded above: max_up must be a finite integer, got {max_up!r}")
    if d["tail_exponent"] != TAIL_EXPONENT:
        raise NuFormatError(f"tail_exponent must be {TAIL_EXPONENT}, got {d['tail_exponent']!r}")
    table_cut = d["table_cut"]
    if isinstance(table_cut, bool) or not isinstance(table_cut, int) or table_cut < 1:
        raise NuFormatError(f"table_cut must be a positive integer, got {table_cut!r}")
    try:
        up = np.array(d["probs_up"], dtype=float)
        down = None if d.get("probs_down") is None else np.array(d["probs_down"], dtype=float)
        amp = float(d["tail_amplitude"])
    except (TypeError, ValueError) as exc:
        raise NuFormatError(f"non-numeric probability data: {exc}") from None
    if up.ndim != 1 or (down is not None and down.ndim != 1):
        raise NuFormatError("probability lists must be flat")
    if up.size != max_up + 1:
        raise NuFormatError(
            f"probs_up has {up.size} entries but max_up={max_up} needs {max_up + 1}; "
            "support must be bounded above by max_up"
        )
    nu = StepDistribution(max_up, up, amp, table_cut, down)
    nu.validate(tol)
    return nu


def save_nu(nu: StepDistribution, path) -> None:
    Path(path).write_text(json.dumps(nu_to_dict(nu), indent=1) + "\n")


def load_nu(path, tol: float = 1e-9) -> StepDistribution:
    """Read and validate a step-distribution file.

    Raises
    ------
    NuFormatError
        Malformed JSON, unbounded-above support, or mass/mean off by more than ``tol``.
    """
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NuFormatError(f"{path}: not valid JSON ({exc})") from None
    return nu_from_dict(d, tol)
