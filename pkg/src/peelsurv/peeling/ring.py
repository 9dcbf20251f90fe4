"""Boundary ring of the hole, the root edge on it, and one peeling step.

Edges of the hole are labelled ``0..P-1`` in cyclic order.  After a step the
surviving edges keep their cyclic order and are relabelled so that the label
sequence stays contiguous from the old label 0 onward (or from the first
survivor when the old edge 0 is gone); the root's new label is recorded.

A step of size ``k >= -1`` glues a face on the peeled edge ``e`` and replaces
it by ``k + 1`` new edges.  A step ``k <= -2`` identifies ``e`` with a partner
edge ``-k - 1`` positions away on a fair-coin side, removing the closed arc of
``-k`` edges between them.  The root is swallowed whenever its edge is peeled,
covered or identified.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np

from ..errors import DomainError
from .harmonic import HarmonicFunction
from .steps import StepDistribution
from .walk import draw_conditioned

__all__ = ["SWALLOWED", "RingState", "PeelAlgorithm", "ring_update", "peel_step", "LEFT", "RIGHT"]

SWALLOWED = -1
LEFT = 0
RIGHT = 1

ALG_OPPOSITE = 0
ALG_UNIFORM = 1
ALG_FIXED = 2
_KINDS = {"opposite": ALG_OPPOSITE, "uniform": ALG_UNIFORM, "fixed_offset": ALG_FIXED}


@dataclass(frozen=True)
class RingState:
    """Perimeter, root label (``SWALLOWED`` once gone) and steps taken."""

    perimeter: int
    root_index: int = 0
    step_count: int = 0

    def __post_init__(self):
        if self.perimeter < 1:
            raise DomainError(f"perimeter must be >= 1, got {self.perimeter}")
        if self.root_index != SWALLOWED and not 0 <= self.root_index < self.perimeter:
            raise DomainError(f"root_index {self.root_index} outside 0..{self.perimeter - 1}")

    @property
    def alive(self) -> bool:
        return self.root_index != SWALLOWED


@dataclass(frozen=True)
class PeelAlgorithm:
    """Rule choosing the edge to peel.

    ``opposite`` peels ``(root + P // 2) mod P``; ``uniform`` a uniform edge;
    ``fixed_offset`` the edge ``(root + offset) mod P``.
    """

    kind: str = "opposite"
    offset: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown algorithm {self.kind!r}; choose from {sorted(_KINDS)}")

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    def choose(self, state: RingState, rng=None) -> int:
        if not state.alive:
            raise DomainError("the root has been swallowed; no edge to choose relative to it")
        if self.kind == "uniform":
            if rng is None:
                raise DomainError("uniform algorithm needs a random stream")
            return int(choose_edge(self.code, self.offset, state.perimeter, state.root_index, rng.random()))
        return int(choose_edge(self.code, self.offset, state.perimeter, state.root_index, 0.0))


@numba.njit(cache=True)
def choose_edge(code, offset, P, root, u):
    if code == ALG_OPPOSITE:
        return (root + P // 2) % P
    if code == ALG_UNIFORM:
        e = int(u * P)
        return e if e < P else P - 1
    return (root + offset) % P


@numba.njit(cache=True)
def draw_side(u):
    return LEFT if u < 0.5 else RIGHT


@numba.njit(cache=True)
def ring_update(P, root, e, k, side):
    """Root label after peeling ``e`` with step ``k``; ``-1`` if swallowed."""
    if k >= -1:
        if root == e:
            return -1
        if root > e:
            return root + k
        return root
    L = -k
    start = e if side == RIGHT else (e - L + 1) % P
    if (root - start) % P < L:
        return -1
    end = start + L
    if end <= P:
        return root - L if root >= end else root
    # arc wraps past label P-1: survivors are end-P .. start-1
    return root - (end - P)


def peel_step(
    state: RingState,
    alg: PeelAlgorithm,
    nu: StepDistribution,
    h: HarmonicFunction,
    rng: np.random.Generator,
) -> RingState:
    """Peel one edge: choose it, draw the conditioned perimeter step, update the ring."""
    if not state.alive:
        raise DomainError("peel_step needs a state whose root is still on the boundary")
    P = state.perimeter
    e = alg.choose(state, rng)
    cdf, K = nu.sampler_tables
    new_p = int(draw_conditioned(rng, cdf, nu.max_up, K, h.table, h.far_field_kappa, P))
    k = new_p - P
    side = draw_side(rng.random()) if k <= -2 else RIGHT
    assert new_p >= 1, "conditioned walk left the positive integers"
    root = int(ring_update(P, state.root_index, e, k, side))
    return replace(state, perimeter=new_p, root_index=root, step_count=state.step_count + 1)
