from .streams import NoiseStream
from .ou import ou_exact_step_factors, ou_stationary_sample, simulate_ou
from .integrate import IntegratorConfig, euler_maruyama
from .ensemble import TrajectoryEnsemble, run_ensemble

__all__ = [
    "NoiseStream",
    "IntegratorConfig",
    "TrajectoryEnsemble",
    "euler_maruyama",
    "ou_exact_step_factors",
    "ou_stationary_sample",
    "run_ensemble",
    "simulate_ou",
]
