"""Discrete peeling: step laws, the conditioned perimeter walk and the boundary ring."""

from .harmonic import HarmonicFunction, harmonic_function, harmonic_residuals
from .ring import SWALLOWED, PeelAlgorithm, RingState, peel_step, ring_update
from .steps import (
    StepDistribution,
    load_nu,
    make_simple_nu,
    make_synthetic_nu,
    nu_from_dict,
    nu_to_dict,
    save_nu,
)
from .survival import (
    ExponentFit,
    ScaleBlockEstimate,
    SurvivalCurve,
    default_checkpoints,
    fit_exponent,
    peel_run,
    perimeters_after,
    scale_block_estimate,
    survival_curve,
)
from .walk import WalkKernel, run_walk, scale_block_counts, step_conditioned, transition_defect

__all__ = [
    "ExponentFit",
    "HarmonicFunction",
    "PeelAlgorithm",
    "RingState",
    "SWALLOWED",
    "ScaleBlockEstimate",
    "StepDistribution",
    "SurvivalCurve",
    "WalkKernel",
    "default_checkpoints",
    "fit_exponent",
    "harmonic_function",
    "harmonic_residuals",
    "load_nu",
    "make_simple_nu",
    "make_synthetic_nu",
    "nu_from_dict",
    "nu_to_dict",
    "peel_run",
    "peel_step",
    "perimeters_after",
    "ring_update",
    "run_walk",
    "save_nu",
    "scale_block_counts",
    "scale_block_estimate",
    "step_conditioned",
    "survival_curve",
    "transition_defect",
]
