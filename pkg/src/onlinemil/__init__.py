"""Online meta-interpretive learning of lifted world models, with planning."""

from .background import BackgroundKB, Signature, grid_kb
from .gridworld import GridMap, lava_river, parse_map, shipped_map
from .harness import ExperimentConfig, ExperimentResult, benchmark_scaling, run_experiment, transfer
from .hypothesis import Hypothesis
from .induction import EngineConfig, PredicateRegistry, metarule_induction
from .learner import OnlineLearner, StepReport
from .logic import Atom, Clause, Term
from .planner import Plan, plan
from .world_model import Prediction, error_signals, predict, step_model

__all__ = [
    "Atom", "BackgroundKB", "Clause", "EngineConfig", "ExperimentConfig", "ExperimentResult",
    "GridMap", "Hypothesis", "OnlineLearner", "Plan", "PredicateRegistry", "Prediction",
    "Signature", "StepReport", "Term", "benchmark_scaling", "error_signals", "grid_kb",
    "lava_river", "metarule_induction", "parse_map", "plan", "predict", "run_experiment",
    "shipped_map", "step_model", "transfer",
]
