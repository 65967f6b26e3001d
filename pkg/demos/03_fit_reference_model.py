"""Two-step concentrated QML fit on simulated data.

The mean step is iteratively reweighted least squares with the variances as
weights; the variance step is a smooth quasi-Newton maximization with the
residuals held fixed.  Alternating the two converges in a handful of rounds.
"""

import numpy as np

from taraarch import (
    SimConfig,
    concentrated_equation_residuals,
    fit_alternating,
    gaussian_qll,
    param_names,
    param_vector,
    reference_spec,
    simulate_path,
)

spec = reference_spec()
sim = simulate_path(spec, SimConfig(n=4000, seed=2024))
report = fit_alternating(sim.series, spec.partition, p=1, q=1)

print("converged:", report.converged, "after", report.iterations, "alternations")
print("final quasi-log-likelihood: %.3f" % report.qll)
print("qll at the true parameters: %.3f" % gaussian_qll(spec, sim.series))

truth = param_vector(spec)
est = param_vector(report.spec)
print(f"\n{'parameter':>10} {'truth':>8} {'estimate':>9} {'std err':>8} {'z':>6}")
for name, t, e, s in zip(param_names(spec), truth, est, report.std_errors):
    print(f"{name:>10} {t:8.3f} {e:9.4f} {s:8.4f} {(e - t) / s:6.2f}")

eq = concentrated_equation_residuals(report.spec, sim.series)
print("\nconcentrated estimating equations at the optimum (should be ~0):")
print(" ", np.array2string(eq, precision=2))

print("\nobjective trace across alternations (settles in a few rounds):")
print(" ", np.array2string(np.array(report.trace), precision=6))
