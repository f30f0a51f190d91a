"""Haptic skill learning with episodic compositional memory."""

from ._core import (
    AbstractScenario,
    ConvergenceResult,
    PsParams,
    Session,
    SkillmemError,
    cross_validate_csv,
    derive_seed,
    discrimination_score,
    ecm_prep_probability,
    ecm_transition_probability,
    first_crossing,
    generate_dataset,
    run_population,
    scenario_json,
    smooth,
    sweep_preps,
    validate_ecm,
)

__version__ = "0.1.0"

__all__ = [
    "AbstractScenario",
    "ConvergenceResult",
    "PsParams",
    "Session",
    "SkillmemError",
    "cross_validate_csv",
    "derive_seed",
    "discrimination_score",
    "ecm_prep_probability",
    "ecm_transition_probability",
    "first_crossing",
    "generate_dataset",
    "run_population",
    "scenario_json",
    "smooth",
    "sweep_preps",
    "validate_ecm",
]
