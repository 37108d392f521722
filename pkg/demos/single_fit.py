"""
One fit, five recommendations
=============================

Three patients at each of 10, 25, 50 and 100 mg, no DLTs. The overdose bound
of 0.25 stops the original rule from moving to 200 mg even though 100 mg is
almost certainly too low. The add-on rules look at the underdosing mass too.
"""

import numpy as np

from blrm_designs import (
    BivariatePrior,
    DesignConfig,
    ModelSpec,
    ToxicityIntervals,
    TrialData,
    TrialState,
    Variant,
    interval_probs,
    next_action,
)
from blrm_designs.decision import addon_terms
from blrm_designs.report import render_single_fit

model = ModelSpec.default()
prior = BivariatePrior()
tti = ToxicityIntervals(phi=0.25, a=0.16, b=0.33)
data = TrialData(n=(3, 3, 3, 3, 0, 0, 0), y=(0,) * 7)

probs = interval_probs(data, model, prior, tti)
print(render_single_fit(probs, data, model, "markdown"))

# P(over) at 200 mg sits just above 0.25, so the original rule stays put
state = TrialState(current_index=3, data=data)
for variant in Variant:
    cfg = DesignConfig(tti, variant, overdose_bound=0.25, feasibility_bound=0.25)
    decision = next_action(probs, state, cfg, model)
    line = f"{variant.label:14s} {decision.action.value:9s} -> {model.doses[decision.target_index]:g} mg"
    if variant is not Variant.ORIGINAL:
        lhs, rhs = addon_terms(variant, probs, 3, model, cfg)
        line += f"   add-on {lhs:.3f} > {rhs:.3f}"
    print(line)

# the feasibility bound trades underdose evidence against overdose evidence
for af in np.linspace(0.05, 0.5, 10):
    cfg = DesignConfig(tti, "d1", overdose_bound=0.25, feasibility_bound=af)
    lhs, rhs = addon_terms("d1", probs, 3, model, cfg)
    print(f"alpha_f={af:.2f}  escalate={lhs > rhs}")
