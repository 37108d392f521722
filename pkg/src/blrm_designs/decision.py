"""Dose recommendation rules: original overdose control and the four add-on designs."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .posterior import ToxicityIntervals, TrialData

__all__ = [
    "Variant",
    "Action",
    "DesignConfig",
    "Decision",
    "TrialState",
    "upm_under",
    "upm_over",
    "addon_rule",
    "addon_terms",
    "recommend_original",
    "check_mtd_declaration",
    "next_action",
]


class Variant(enum.Enum):
    ORIGINAL = "original"
    DESIGN1 = "d1"
    DESIGN2 = "d2"
    DESIGN3 = "d3"
    DESIGN4 = "d4"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"design1": "d1", "design2": "d2", "design3": "d3", "design4": "d4"}
        return cls(aliases.get(key, key))

    @property
    def label(self):
        return "Original BLRM" if self is Variant.ORIGINAL else f"Design {self.value[1]}"


class Action(enum.Enum):
    ESCALATE = "escalate"
    STAY = "stay"
    DEESCALATE = "deescalate"
    STOP_ALL_TOXIC = "stop_all_toxic"
    DECLARE_MTD = "declare_mtd"
    STOP_MAX_N = "stop_max_n"

    @property
    def terminal(self):
        return self in (Action.STOP_ALL_TOXIC, Action.DECLARE_MTD, Action.STOP_MAX_N)


@dataclass(frozen=True)
class DesignConfig:
    """Settings for one dose-finding design.

    ``mtd_target_prob_threshold`` defaults to 0.5, the value used with the
    (0.16, 0.33) interval; use 0.4 with (0.20, 0.30).
    """

    intervals: ToxicityIntervals
    variant: Variant = Variant.ORIGINAL
    overdose_bound: float = 0.3
    feasibility_bound: float = 0.25
    g_exponent: float = 1.0
    mtd_min_patients: int = 6
    mtd_target_prob_threshold: float = 0.5
    max_sample_size: int = 45
    cohort_size: int = 3
    start_dose_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not 0 < self.feasibility_bound < 0.5 + 1e-12:
            # 0.5 itself is allowed so the symmetric boundary case can be studied
            raise ValueError("feasibility bound must lie in (0, 0.5]")
        if not 0 < self.overdose_bound < 1:
            raise ValueError("overdose bound must lie in (0, 1)")
        if not self.g_exponent > 0:
            raise ValueError("g exponent must be positive")
        if not 0 <= self.mtd_target_prob_threshold <= 1:
            raise ValueError("MTD target-probability threshold must be a probability")
        if self.cohort_size < 1 or self.mtd_min_patients < 1:
            raise ValueError("cohort size and MTD minimum patients must be at least 1")
        if self.max_sample_size < self.cohort_size:
            raise ValueError("max sample size must allow at least one cohort")
        if self.start_dose_index < 0:
            raise ValueError("start dose index must be nonnegative")

    def g(self, ratio):
        return ratio ** self.g_exponent


@dataclass(frozen=True)
class Decision:
    action: Action
    target_index: int = None
    addon_triggered: bool = False

    def to_dict(self):
        return {
            "action": self.action.value,
            "target_index": self.target_index,
            "addon_triggered": self.addon_triggered,
        }


@dataclass(frozen=True)
class TrialState:
    current_index: int
    data: TrialData

    @property
    def n_at_current(self):
        return self.data.n[self.current_index]


def upm_under(p_under, a):
    """Unit probability mass of the underdosing interval ``[0, a]``."""
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    return p_under / a


def upm_over(p_over, b):
    """Unit probability mass of the overdosing interval ``[b, 1]``."""
    if not 0 < b < 1:
        raise ValueError("b must lie in (0, 1)")
    return p_over / (1.0 - b)


def addon_terms(variant, probs, current_index, model, config):
    """Left- and right-hand sides of a design's add-on inequality."""
    variant = Variant.parse(variant)
    if variant is Variant.ORIGINAL:
        raise ValueError("the original design has no add-on rule")
    if not 0 <= current_index < model.n_doses - 1:
        raise ValueError("add-on rules are not assessed at the highest dose")
    a, b = config.intervals.a, config.intervals.b
    af = config.feasibility_bound
    i = current_index
    if variant is Variant.DESIGN1:
        return af * probs.under[i], (1 - af) * probs.over[i]
    if variant is Variant.DESIGN3:
        return af * upm_under(probs.under[i], a), (1 - af) * upm_over(probs.over[i], b)
    g = config.g(model.dose_ratio(i))
    if variant is Variant.DESIGN2:
        return probs.under[i], g * probs.over[i + 1]
    return upm_under(probs.under[i], a), g * upm_over(probs.over[i + 1], b)


def addon_rule(variant, probs, current_index, model, config):
    """True when the design's add-on rule calls for a one-level escalation."""
    lhs, rhs = addon_terms(variant, probs, current_index, model, config)
    return bool(lhs > rhs)


def _lowest_argmax(values):
    # np.argmax returns the first maximum, i.e. the lowest dose on ties
    return int(np.argmax(values))


def recommend_original(probs, current_index, config):
    """Overdose-controlled recommendation.

    Among doses no higher than one level above the current one whose
    overdosing probability is within the bound, pick the one most likely to be
    on target.
    """
    c = config.overdose_bound
    top = min(current_index + 1, len(probs) - 1)
    admissible = np.flatnonzero(probs.over[: top + 1] <= c)
    if admissible.size == 0:
        return Decision(Action.STOP_ALL_TOXIC)
    best = int(admissible[_lowest_argmax(probs.target[admissible])])
    if best > current_index:
        return Decision(Action.ESCALATE, best)
    if best < current_index:
        return Decision(Action.DEESCALATE, best)
    return Decision(Action.STAY, best)


def check_mtd_declaration(probs, proposed_stay_index, n_at_dose, config):
    return bool(
        n_at_dose >= config.mtd_min_patients
        and probs.target[proposed_stay_index] >= config.mtd_target_prob_threshold
    )


def all_toxic(probs, config):
    return bool(np.all(probs.over > config.overdose_bound))


def next_action(probs, state, config, model):
    """Decision after the latest cohort has been fitted.

    Order: stop if every dose is overly toxic; declare the MTD if the
    overdose-controlled recommendation is to stay and the declaration criteria
    hold; otherwise let a design's add-on rule escalate by one level; otherwise
    follow the overdose-controlled recommendation. A trial that has used its
    whole sample size without declaring an MTD stops.
    """
    i = state.current_index
    if all_toxic(probs, config):
        return Decision(Action.STOP_ALL_TOXIC)

    base = recommend_original(probs, i, config)
    if base.action is Action.STAY and check_mtd_declaration(
        probs, i, state.data.n[i], config
    ):
        return Decision(Action.DECLARE_MTD, i)

    decision = base
    if config.variant is not Variant.ORIGINAL and i < model.n_doses - 1:
        if addon_rule(config.variant, probs, i, model, config):
            decision = Decision(Action.ESCALATE, i + 1, addon_triggered=True)

    if state.data.total_n + config.cohort_size > config.max_sample_size:
        return Decision(Action.STOP_MAX_N, addon_triggered=decision.addon_triggered)
    return decision
