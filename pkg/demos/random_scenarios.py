"""
Random dose-toxicity scenarios
==============================

Draw scenarios from the pseudo-uniform (Clertant) and probit-walk (Paoletti)
classes, check where the MTD lands, then score two designs on them.
"""

import numpy as np

from blrm_designs import BivariatePrior, DesignConfig, ModelSpec, ToxicityIntervals
from blrm_designs import RandomScenarios, gen_clertant, gen_paoletti, run_batch

rng = np.random.default_rng(2024)

for name, gen in [("clertant", gen_clertant), ("paoletti", gen_paoletti)]:
    scenarios = [gen(7, 0.25, rng=rng) for _ in range(20)]
    rates = np.array([s.rates for s in scenarios])
    print(f"{name}: MTD index counts {np.bincount([s.mtd_index for s in scenarios], minlength=7)}")
    print(f"  median rate by dose {np.round(np.median(rates, axis=0), 3)}")
    # a DLT rate near 0.25 at the lowest dose often ends the trial after one cohort
    print(f"  share with rate > 0.15 at 10 mg: {np.mean(rates[:, 0] > 0.15):.2f}")

model, prior = ModelSpec.default(), BivariatePrior()
tti = ToxicityIntervals(0.25, 0.16, 0.33)
for name in ("clertant", "paoletti"):
    for variant in ("original", "d3"):
        oc = run_batch(RandomScenarios(name), DesignConfig(tti, variant), model, prior, 200,
                       master_seed=7)
        print(f"{name:9s} {variant:8s} correct={oc.correct:.3f} all_toxic={oc.all_toxic:.3f} "
              f"not_found={oc.not_found:.3f}")
