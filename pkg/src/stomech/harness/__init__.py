from .collapse import (IDENTITY, DecouplingReport, MeasurementPlan,
                       TwoTimeReport, collapse_density, collapse_state,
                       decoupling_experiment, observable, run_two_time_report,
                       two_time_expectation)
from .lawcheck import (COLORED_PROTOCOL, WHITE_PROTOCOL, FirstLawReport,
                       ProfileProbeReport, ViolationReport,
                       colored_violation_norm, run_first_law_check,
                       run_law_violation_check, run_velocity_profile_probe)
from .metrics import field_mismatch, marginal_distance, slope_through_origin
from .sweep import SweepReport, run_beta_sweep, trend_verdict

__all__ = [
    "IDENTITY", "DecouplingReport", "MeasurementPlan", "TwoTimeReport",
    "collapse_density", "collapse_state", "decoupling_experiment",
    "observable", "run_two_time_report", "two_time_expectation",
    "COLORED_PROTOCOL", "WHITE_PROTOCOL", "FirstLawReport",
    "ProfileProbeReport", "ViolationReport", "colored_violation_norm",
    "run_first_law_check", "run_law_violation_check",
    "run_velocity_profile_probe",
    "field_mismatch", "marginal_distance", "slope_through_origin",
    "SweepReport", "run_beta_sweep", "trend_verdict",
]
