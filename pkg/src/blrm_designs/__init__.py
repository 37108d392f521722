"""Bayesian logistic regression dose escalation with underdose-aware overdose control."""

from .decision import Action, Decision, DesignConfig, TrialState, Variant, next_action
from .posterior import (
    BivariatePrior,
    ConvergenceError,
    IntervalProbs,
    ModelSpec,
    ToxicityIntervals,
    TrialData,
    interval_probs,
    posterior_mode,
)
from .scenarios import (
    PaolettiParams,
    RandomScenarios,
    ScenarioSpec,
    fixed_scenario,
    gen_clertant,
    gen_paoletti,
    true_mtd,
)
from .simulator import OperatingCharacteristics, Terminal, TrialOutcome, run_batch, run_trial

__all__ = [
    "Action",
    "BivariatePrior",
    "ConvergenceError",
    "Decision",
    "DesignConfig",
    "IntervalProbs",
    "ModelSpec",
    "OperatingCharacteristics",
    "PaolettiParams",
    "RandomScenarios",
    "ScenarioSpec",
    "Terminal",
    "ToxicityIntervals",
    "TrialData",
    "TrialOutcome",
    "TrialState",
    "Variant",
    "fixed_scenario",
    "gen_clertant",
    "gen_paoletti",
    "interval_probs",
    "next_action",
    "posterior_mode",
    "run_batch",
    "run_trial",
    "true_mtd",
]
