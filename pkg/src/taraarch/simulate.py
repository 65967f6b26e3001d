"""Reproducible simulation of TAR-AARCH sample paths and price-to-return transforms.

Randomness comes from a counter-based Philox generator, so the draw at a
given index depends only on the seed, never on thread scheduling or prior
consumption.  Standard normals are produced by inverse-CDF of the uniform
stream; a rejection sampler would consume a variable number of uniforms and
break that contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .model import ModelSpec, TimeSeries, series_values

__all__ = [
    "SimConfig",
    "SimulatedPath",
    "SimulationError",
    "mix_seed",
    "normal_stream",
    "simulate_path",
    "log_return_transform",
    "relative_return_transform",
    "box_cox_sqrt_transform",
    "path_to_csv",
]

_MASK64 = (1 << 64) - 1
_EXPLOSION_LIMIT = 1e12
DEFAULT_BURN_IN = 500


class SimulationError(RuntimeError):
    """Raised when a simulated path becomes non-finite or explosive."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Mix integer words into a 64-bit seed.

    Each word is absorbed in order through a splitmix64 finalizer, so
    ``mix_seed(base, n, r)`` gives every simulation cell an independent
    stream without coordination between workers.
    """
    state = 0
    for part in parts:
        state = _splitmix64(state ^ (int(part) & _MASK64))
    return state


def normal_stream(seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. standard normals from a counter-based stream.

    Draw ``i`` depends only on ``(seed, i)``: Philox output is mapped to the
    open interval (0, 1) with 53-bit resolution and passed through the
    inverse normal CDF.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    bg = np.random.Philox(key=int(seed) & _MASK64)
    raw = bg.random_raw(count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@dataclass(frozen=True)
class SimConfig:
    """Simulation run settings; the same (spec, config) always yields the same path."""

    n: int
    seed: int
    burn_in: int = DEFAULT_BURN_IN
    init_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.init_values is not None:
            vals = tuple(float(v) for v in self.init_values)
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("init_values contain non-finite entries")
            object.__setattr__(self, "init_values", vals)


class SimulatedPath(NamedTuple):
    series: TimeSeries
    innovations: np.ndarray
    variances: np.ndarray


def simulate_path(spec: ModelSpec, config: SimConfig) -> SimulatedPath:
    """Drive the mean and variance recursions forward with seeded normal shocks.

    Presample observations default to zero (or ``config.init_values``),
    presample shocks are zero, and the first ``burn_in`` generated points are
    discarded.  Returns the path together with the innovations ``z`` and the
    conditional variances ``h`` aligned with it, so that
    ``x[t] - conditional_mean(t) == z[t] * sqrt(h[t])`` at every index.

    Raises
    ------
    SimulationError
        If a generated value exceeds 1e12 in magnitude or is non-finite; the
        exception carries the 0-based step index (burn-in included).
    """
    p, q, d = spec.p, spec.q, spec.partition.delay
    mpd = spec.mean_lag_length
    init = config.init_values if config.init_values is not None else ()
    if len(init) < mpd:
        init = (0.0,) * (mpd - len(init)) + tuple(init)
    else:
        init = tuple(init[len(init) - mpd :])

    total = config.burn_in + config.n
    z = normal_stream(config.seed, total).tolist()
    thresholds = spec.partition.thresholds.tolist()
    coeffs = [tuple(row) for row in spec.tar.coefficients.tolist()]
    alphas = spec.aarch.alphas.tolist()
    betas = spec.aarch.betas.tolist()
    alpha0 = spec.aarch.alpha0

    xs = [0.0] * total
    es = [0.0] * total
    hs = [0.0] * total
    nth = len(thresholds)

    for t in range(total):
        h = alpha0
        for k in range(1, q + 1):
            idx = t - k
            ev = es[idx] if idx >= 0 else 0.0
            term = alphas[k - 1] * abs(ev) + betas[k - 1] * ev
            h += term * term

        idx = t - d
        xd = xs[idx] if idx >= 0 else init[mpd + idx]
        j = 0
        while j < nth and xd > thresholds[j]:
            j += 1
        row = coeffs[j]
        mean = row[0]
        for k in range(1, p + 1):
            idx = t - k
            mean += row[k] * (xs[idx] if idx >= 0 else init[mpd + idx])

        eps = z[t] * math.sqrt(h)
        x = mean + eps
        if not math.isfinite(x) or abs(x) > _EXPLOSION_LIMIT:
            raise SimulationError(
                f"simulated path exploded at step {t} "
                f"(|x| = {abs(x):.3g}, burn_in = {config.burn_in})",
                index=t,
            )
        xs[t] = x
        es[t] = eps
        hs[t] = h

    b = config.burn_in
    return SimulatedPath(
        series=TimeSeries(np.array(xs[b:]), origin_label="simulated"),
        innovations=np.array(z[b:]),
        variances=np.array(hs[b:]),
    )


def log_return_transform(prices, scale100: bool = True) -> TimeSeries:
    """Log returns ``ln(p_t / p_{t-1})``, optionally scaled by 100."""
    x = series_values(prices)
    if x.size < 2:
        raise ValueError(f"need at least 2 prices, got {x.size}")
    nonpos = np.flatnonzero(x <= 0.0)
    if nonpos.size:
        raise ValueError(f"non-positive price at index {int(nonpos[0])}")
    out = np.log(x[1:] / x[:-1])
    if scale100:
        out *= 100.0
    return TimeSeries(out, origin_label="log-returns")


def relative_return_transform(prices) -> TimeSeries:
    """Simple returns ``(p_t - p_{t-1}) / p_{t-1}``."""
    x = series_values(prices)
    if x.size < 2:
        raise ValueError(f"need at least 2 prices, got {x.size}")
    zero = np.flatnonzero(x == 0.0)
    if zero.size:
        raise ValueError(f"zero price at index {int(zero[0])}")
    return TimeSeries(np.diff(x) / x[:-1], origin_label="relative-returns")


def box_cox_sqrt_transform(w) -> TimeSeries:
    """Square-root Box-Cox transform ``2*(sqrt(w) - 1)`` for nonnegative counts."""
    x = series_values(w)
    neg = np.flatnonzero(x < 0.0)
    if neg.size:
        raise ValueError(f"negative input at index {int(neg[0])}")
    return TimeSeries(2.0 * (np.sqrt(x) - 1.0), origin_label="box-cox")


def path_to_csv(path: SimulatedPath, fh) -> None:
    """Write a simulated path as CSV columns (index, x, h, z) at 17 significant digits."""
    fh.write("index,x,h,z\n")
    x = path.series.values
    for i in range(x.size):
        fh.write(
            f"{i},{x[i]:.17g},{path.variances[i]:.17g},{path.innovations[i]:.17g}\n"
        )
