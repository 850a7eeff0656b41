"""Joint EV charging assignment and hydrogen dispatch for fleets of
commercial EVs, with a receding-horizon simulator around the per-step
bi-level solver."""
from .bilevel import StepSolution, optimize_step
from .config import ScenarioConfig, load_config
from .ev_cost import CostBreakdown, CostConstants, StepProblem, step_objective
from .horizon import STRATEGIES, generate_scenario, run_horizon

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "CostConstants", "STRATEGIES", "ScenarioConfig", "StepProblem", "StepSolution",
    "generate_scenario", "load_config", "optimize_step", "run_horizon", "step_objective",
]
