"""Numerical model of the cable-driven balance trainer and its VR task.

Submodules: ``rig`` (geometry, tension allocation), ``body`` (balance
plant, threshold calibration), ``boundary`` (safe-excursion region and
assist-as-needed force), ``trial`` (single-trial simulation, scoring),
``synthetic`` (ground-truth cohort generation), ``scenario`` (JSON config).
"""

from .rig import BodyParams, InfeasibleForceError, RigModel, cable_tensions
from .body import BodyState, CalibrationResult, calibrate_threshold, step_body
from .boundary import BalanceBoundary, assistive_force, build_boundary
from .trial import TrialScript, VrTaskParams, run_trial, vr_score
from .scenario import Scenario, load_scenario, save_scenario
from .synthetic import SynergyGroundTruth, generate_synthetic_cohort

__all__ = [
    "BalanceBoundary",
    "BodyParams",
    "BodyState",
    "CalibrationResult",
    "InfeasibleForceError",
    "RigModel",
    "Scenario",
    "SynergyGroundTruth",
    "TrialScript",
    "VrTaskParams",
    "assistive_force",
    "build_boundary",
    "cable_tensions",
    "calibrate_threshold",
    "generate_synthetic_cohort",
    "load_scenario",
    "run_trial",
    "save_scenario",
    "step_body",
    "vr_score",
]
