"""Small-scale Monte Carlo check of root-n consistency and CI coverage.

Every replicate derives its seed from (base_seed, n, r), so the experiment is
reproducible and independent of worker count.  The acceptance suite runs the
same experiment at 500 replicates; this demo uses 80 to stay quick.
"""

from taraarch import ExperimentPlan, reference_spec, run_experiment
from taraarch.model import param_names

plan = ExperimentPlan(
    true_spec=reference_spec(),
    sample_sizes=(2000, 8000),
    replicates=80,
    base_seed=77,
)
result = run_experiment(plan, workers=2)

names = param_names(reference_spec())
print("replicates:", plan.replicates, "| non-convergence:",
      *(f"n={n}: {result.summaries[n].nonconverged_rate:.0%}" for n in plan.sample_sizes))

print(f"\n{'parameter':>10} {'rmse@2000':>10} {'rmse@8000':>10} {'ratio':>6} {'cover@8000':>11}")
s2, s8 = result.summaries[2000], result.summaries[8000]
for i, name in enumerate(names):
    print(
        f"{name:>10} {s2.rmse[i]:10.4f} {s8.rmse[i]:10.4f} "
        f"{s2.rmse[i] / s8.rmse[i]:6.2f} {s8.coverage[i]:11.2f}"
    )
print("\nquadrupling n should halve the RMSE (ratio near 2.0) for a")
print("root-n-consistent estimator; coverage should sit near 0.95.")
