"""Repeated allocation games: courteous conventions, bandit baselines, analysis."""
from .bandits import BanditAgent, build_fair_expert_set
from .batch import payoff_horizon, simulate, simulate_reference
from .convention import OPTIMAL_BACKOFF, AgentStrategy, ConventionAgent
from .engine import ALGORITHMS, Simulation
from .experiment import ExperimentSpec, emit, preset_specs, run_experiment, sweep_backoff
from .game import IDLE, YIELD, GameConfig, StepOutcome, context_signal, payoff, resolve_step
from .metrics import MetricsReport, discounted_payoff, jain_index, utilization
from .monitor import CURRENCY, QUOTA_LOG, Ledger

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "AgentStrategy", "BanditAgent", "CURRENCY", "ConventionAgent",
    "ExperimentSpec", "GameConfig", "IDLE", "Ledger", "MetricsReport",
    "OPTIMAL_BACKOFF", "QUOTA_LOG", "Simulation", "StepOutcome", "YIELD",
    "build_fair_expert_set", "context_signal", "discounted_payoff", "emit",
    "jain_index", "payoff", "payoff_horizon", "preset_specs", "resolve_step",
    "run_experiment", "simulate", "simulate_reference", "sweep_backoff",
    "utilization",
]
