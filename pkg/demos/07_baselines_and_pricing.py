"""Reference recursions (ARCH, GARCH, EGARCH) and the call-pricing utility."""

import numpy as np

from taraarch.baselines import (
    EgarchParams,
    GarchParams,
    arch_variance,
    black_scholes_price,
    egarch_log_variance,
    garch_variance,
)
from taraarch.simulate import normal_stream

e = normal_stream(3, 10)

h_arch = arch_variance(0.1, np.array([0.4]), e)
print("ARCH(1) variances      :", np.round(h_arch[:5], 4))

garch = GarchParams(0.05, np.array([0.1]), np.array([0.85]))
h_garch = garch_variance(garch, e, presample_h=1.0)
print("GARCH(1,1) variances   :", np.round(h_garch[:5], 4))
print("GARCH long-run variance: %.4f (= alpha0 / (1 - a - b))"
      % (0.05 / (1 - 0.1 - 0.85)))

egarch = EgarchParams(gamma0=-0.1, gamma1=0.95, omega=-0.08, lam=0.15)
logh = egarch_log_variance(egarch, e, presample_logh=0.0)
print("EGARCH variances       :", np.round(np.exp(logh[:5]), 4))
print("  (positive by construction, asymmetric through the omega*x term)")

print("\nEuropean call prices, strike 100, rate 3%, one year out:")
print(f"{'spot':>6} {'sigma':>6} {'price':>9}")
for spot in (90.0, 100.0, 110.0):
    for sigma in (0.1, 0.3):
        c = black_scholes_price(spot, 100.0, 0.03, sigma, 1.0)
        print(f"{spot:6.0f} {sigma:6.2f} {c:9.4f}")
print("\nhigher volatility means a dearer option at every moneyness, which")
print("is why an accurate volatility model matters for pricing at all.")
