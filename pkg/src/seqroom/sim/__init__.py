from .plan import SimPlan, SimReport, DEFAULT_MIX, STRUCTURAL_HEAVY_MIX, SOUND_POOL
from .runner import run_sim, replay_check, SeqGapError

__all__ = [
    "SimPlan",
    "SimReport",
    "DEFAULT_MIX",
    "STRUCTURAL_HEAVY_MIX",
    "SOUND_POOL",
    "run_sim",
    "replay_check",
    "SeqGapError",
]
