"""
Operating characteristics on a fixed curve
==========================================

Simulate each design against the S-shaped dose-toxicity curve (true MTD 200 mg)
and tabulate selection frequencies, patients per dose and the DLT rate.
Raise ``N_REPS`` to 1000 for publication-grade numbers.
"""

from blrm_designs import BivariatePrior, DesignConfig, ModelSpec, ToxicityIntervals, Variant
from blrm_designs import fixed_scenario, run_batch
from blrm_designs.report import render_comparison

N_REPS = 200

model = ModelSpec.default()
prior = BivariatePrior()
scenario = fixed_scenario("s-shaped")
print("true DLT rates:", [round(r, 3) for r in scenario.rates])

for tti, threshold in [((0.16, 0.33), 0.5), ((0.20, 0.30), 0.4)]:
    intervals = ToxicityIntervals(0.25, *tti)
    ocs = {}
    for variant in Variant:
        cfg = DesignConfig(intervals, variant, overdose_bound=0.3,
                           mtd_target_prob_threshold=threshold)
        ocs[variant.label] = run_batch(scenario, cfg, model, prior, N_REPS, master_seed=1)
    print(f"\nTTI {tti}")
    print(render_comparison(ocs, scenario.mtd_index, model, "markdown"))
