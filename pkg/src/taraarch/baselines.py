"""Reference volatility recursions, canned threshold-AR fixtures, option
pricing, and the full (non-concentrated) QMLE for the symmetric model.

The full QMLE is the comparison point for the concentrated two-step
estimator: with symmetric ARCH errors the variance recursion is smooth in
every parameter, so the Gaussian quasi-likelihood can be maximized jointly
with analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.special import ndtr

from .estimation import (
    ConvergenceError,
    FitReport,
    gaussian_qll,
    _FitContext,
    _theta_step,
)
from .model import (
    AarchParams,
    ModelSpec,
    TarParams,
    ThresholdPartition,
    series_values,
)

__all__ = [
    "GarchParams",
    "EgarchParams",
    "CannedSpec",
    "arch_variance",
    "garch_variance",
    "egarch_shock_response",
    "egarch_log_variance",
    "canned_specs",
    "canned_model_spec",
    "black_scholes_price",
    "tar_arch_full_qmle",
]

MEAN_ABS_STANDARD_NORMAL = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class GarchParams:
    """GARCH coefficients: ``h_t = alpha0 + sum a_i e_{t-i}^2 + sum b_j h_{t-j}``."""

    alpha0: float
    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValueError(f"alpha0 must be > 0, got {self.alpha0}")
        a = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        b = np.atleast_1d(np.asarray(self.betas, dtype=float))
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("GARCH coefficients must be nonnegative")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)

    @property
    def is_stationary(self) -> bool:
        """Covariance stationarity flag: coefficient sum below one."""
        return float(self.alphas.sum() + self.betas.sum()) < 1.0


@dataclass(frozen=True)
class EgarchParams:
    """Exponential GARCH coefficients for the log-variance recursion."""

    gamma0: float
    gamma1: float
    omega: float
    lam: float

    @property
    def is_stationary(self) -> bool:
        return abs(self.gamma1) < 1.0


def arch_variance(alpha0: float, alphas, residuals) -> np.ndarray:
    """ARCH(q) variances ``alpha0 + sum a_i e_{t-i}^2`` with zero presample shocks."""
    if alpha0 <= 0:
        raise ValueError(f"alpha0 must be > 0, got {alpha0}")
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any(a < 0):
        raise ValueError("ARCH coefficients must be nonnegative")
    e = np.asarray(residuals, dtype=float)
    n = e.size
    h = np.full(n, float(alpha0))
    sq = e * e
    for k in range(1, a.size + 1):
        if k <= n:
            h[k:] += a[k - 1] * sq[: n - k]
    return h


def garch_variance(params: GarchParams, residuals, presample_h: float) -> np.ndarray:
    """GARCH(p, q) variances with zero presample shocks and ``presample_h`` backcast."""
    e = np.asarray(residuals, dtype=float)
    n = e.size
    sq = e * e
    qn = params.alphas.size
    pn = params.betas.size
    h = np.empty(n)
    for t in range(n):
        val = params.alpha0
        for i in range(1, qn + 1):
            if t - i >= 0:
                val += params.alphas[i - 1] * sq[t - i]
        for j in range(1, pn + 1):
            val += params.betas[j - 1] * (h[t - j] if t - j >= 0 else presample_h)
        h[t] = val
    return h


def egarch_shock_response(params: EgarchParams, x: float) -> float:
    """EGARCH news term ``omega*x + lam*(|x| - E|z|)`` with Gaussian ``E|z|``."""
    return params.omega * x + params.lam * (abs(x) - MEAN_ABS_STANDARD_NORMAL)


def egarch_log_variance(
    params: EgarchParams, standardized_shocks, presample_logh: float
) -> np.ndarray:
    """Log-variance recursion ``log h_t = g0 + g1 log h_{t-1} + g(z_{t-1})``.

    The presample news term is replaced by its expectation (zero for
    standard-normal shocks), so the first output depends only on
    ``presample_logh``.  Variances are recovered by exponentiation and are
    therefore positive by construction.
    """
    z = np.asarray(standardized_shocks, dtype=float)
    out = np.empty(z.size)
    prev = float(presample_logh)
    for t in range(z.size):
        news = egarch_shock_response(params, z[t - 1]) if t > 0 else 0.0
        prev = params.gamma0 + params.gamma1 * prev + news
        out[t] = prev
    return out


@dataclass(frozen=True)
class CannedSpec:
    """A published threshold-AR fit, coefficients kept digit-for-digit.

    ``noise_sd`` holds the per-regime innovation standard deviations when the
    source prints them; the variance structure is otherwise unspecified.
    """

    name: str
    partition: ThresholdPartition
    tar: TarParams
    noise_sd: tuple[float, ...] | None
    source: str

    def model_spec(self, alpha0: float | None = None) -> ModelSpec:
        """Embed the mean fit in a homoskedastic ModelSpec (q=1, zero loadings).

        The asymmetric-ARCH variance cannot express per-regime noise scales,
        so ``alpha0`` defaults to the first regime's printed variance.
        """
        if alpha0 is None:
            alpha0 = self.noise_sd[0] ** 2 if self.noise_sd else 1.0
        return ModelSpec(
            p=self.tar.p,
            q=1,
            partition=self.partition,
            tar=self.tar,
            aarch=AarchParams(alpha0=alpha0, alphas=np.zeros(1), betas=np.zeros(1)),
        )


def canned_specs() -> list[CannedSpec]:
    """The classic two-regime lynx and sunspot threshold-AR fits."""
    lynx = CannedSpec(
        name="lynx",
        partition=ThresholdPartition(regimes=2, delay=2, thresholds=np.array([3.25])),
        tar=TarParams(
            np.array(
                [
                    [0.62, 1.25, -0.43],
                    [2.25, 1.52, -1.24],
                ]
            )
        ),
        noise_sd=(0.2, 0.25),
        source="tong1983-lynx",
    )
    low = [1.9191, 0.8416, 0.0728, -0.3153, 0.1479, -1.985, -0.0005, 0.1875,
           -0.2701, 0.2116, 0.0091, 0.0873]
    high = [4.2746, 1.4431, -0.8408, 0.0554] + [0.0] * 8
    sunspot = CannedSpec(
        name="sunspot",
        partition=ThresholdPartition(
            regimes=2, delay=8, thresholds=np.array([11.9824])
        ),
        tar=TarParams(np.array([low, high])),
        noise_sd=None,
        source="tong1983-sunspot",
    )
    return [lynx, sunspot]


def canned_model_spec(name: str, alpha0: float | None = None) -> ModelSpec:
    """Look up a canned fixture by name and embed it as a simulatable spec."""
    for canned in canned_specs():
        if canned.name == name:
            return canned.model_spec(alpha0=alpha0)
    names = ", ".join(c.name for c in canned_specs())
    raise KeyError(f"unknown canned spec {name!r}; available: {names}")


def black_scholes_price(
    spot: float, strike: float, rate: float, sigma: float, tau: float
) -> float:
    """European call price under constant volatility.

    Parameters
    ----------
    spot : float
        Current underlying price, > 0.
    strike : float
        Exercise price, >= 0; a zero strike makes the call worth the asset.
    rate : float
        Continuously compounded short rate.
    sigma : float
        Volatility, > 0.
    tau : float
        Time to expiry, > 0.
    """
    if not (np.isfinite(spot) and spot > 0):
        raise ValueError(f"spot must be > 0, got {spot}")
    if not (np.isfinite(strike) and strike >= 0):
        raise ValueError(f"strike must be >= 0, got {strike}")
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be > 0, got {tau}")
    if not np.isfinite(rate):
        raise ValueError(f"rate must be finite, got {rate}")
    if strike == 0.0:
        return float(spot)
    sig_sqrt = sigma * math.sqrt(tau)
    d1 = (math.log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / sig_sqrt
    d2 = d1 - sig_sqrt
    return float(spot * ndtr(d1) - strike * math.exp(-rate * tau) * ndtr(d2))


def _sym_variance(alpha0, alphas_sq, e, ph):
    """Variances for the symmetric model; missing lags contribute a_k^2 * ph."""
    nr = e.size
    h = np.full(nr, alpha0)
    sq = e * e
    for k in range(1, alphas_sq.size + 1):
        if k <= nr:
            h[k:] += alphas_sq[k - 1] * sq[: nr - k]
        h[: min(k, nr)] += alphas_sq[k - 1] * ph
    return h


def tar_arch_full_qmle(
    series,
    partition: ThresholdPartition,
    p: int,
    q: int,
    init: ModelSpec | None = None,
    max_iter: int = 500,
) -> FitReport:
    """Jointly maximize the Gaussian quasi-likelihood of the symmetric model.

    The variance recursion here is ``alpha0 + sum a_k^2 e_{t-k}^2`` (the
    asymmetric loadings are identically zero), so the likelihood is smooth in
    all parameters and a quasi-Newton search with analytic gradients applies.
    Positivity of ``alpha0`` and of the loadings is enforced by log
    transforms.  The presample variance term is frozen at its warm-start
    value so the objective stays smooth in the mean parameters.

    Returns a :class:`FitReport` whose ``betas`` are exactly zero; raises
    :class:`ConvergenceError` carrying the best iterate on failure.
    """
    x = series_values(series)
    ctx = _FitContext(x, partition, p, q)
    l = partition.regimes
    ntheta = ctx.ntheta
    o, nq, nr = ctx.o, ctx.nq, ctx.nr

    flat = AarchParams(alpha0=1.0, alphas=np.zeros(q), betas=np.zeros(q))
    tar0 = _theta_step(ctx, flat, TarParams(np.zeros((l, p + 1))), max_iter=2)
    e0 = ctx.residuals(tar0)
    ph = float(e0.var())

    if init is not None:
        theta0 = init.tar.coefficients.ravel()
        a0, ak = init.aarch.alpha0, np.maximum(init.aarch.alphas, 1e-6)
    else:
        theta0 = tar0.coefficients.ravel()
        a0 = max(0.7 * ph, 1e-8)
        ak = np.full(q, math.sqrt(0.3 / q))
    u0 = np.concatenate([theta0, [math.log(a0)], np.log(ak)])

    zexp_r = np.zeros((nr, ntheta))
    w = p + 1
    for j in range(l):
        rows = np.flatnonzero(ctx.labels_r == j)
        zexp_r[rows, j * w : (j + 1) * w] = ctx.Zr[rows]

    def natural(u):
        return u[:ntheta], np.exp(np.minimum(u[ntheta], 700.0)), np.exp(
            np.minimum(u[ntheta + 1 :], 350.0)
        )

    def value_grad_natural(theta, alpha0, alphas):
        """Mean negative qll and its gradient in natural coordinates."""
        e = ctx.y_r - zexp_r @ theta
        asq = alphas * alphas
        h = _sym_variance(alpha0, asq, e, ph)
        eq, hq = e[o:], h[o:]
        f = 0.5 * float(np.sum(np.log(hq) + eq * eq / hq)) / nq
        if not np.isfinite(f):
            return 1e100, None
        gh = np.zeros(nr)
        gh[o:] = 0.5 * (1.0 / hq - eq * eq / (hq * hq)) / nq
        grad_theta = -(zexp_r[o:].T @ (eq / hq)) / nq
        sq = e * e
        grad_a = np.empty(q)
        for k in range(1, q + 1):
            if k <= nr:
                grad_theta += -2.0 * asq[k - 1] * (
                    zexp_r[: nr - k].T @ (gh[k:] * e[: nr - k])
                )
                present = float(gh[k:] @ sq[: nr - k])
            else:
                present = 0.0
            missing = float(gh[: min(k, nr)].sum()) * ph
            grad_a[k - 1] = 2.0 * alphas[k - 1] * (present + missing)
        grad_a0 = float(gh.sum())
        return f, (grad_theta, grad_a0, grad_a)

    def objective(u):
        theta, alpha0, alphas = natural(u)
        f, grads = value_grad_natural(theta, alpha0, alphas)
        if grads is None:
            return f, np.zeros_like(u)
        grad_theta, grad_a0, grad_a = grads
        g = np.empty_like(u)
        g[:ntheta] = grad_theta
        g[ntheta] = grad_a0 * alpha0
        g[ntheta + 1 :] = grad_a * alphas
        return f, g

    trace: list[float] = []

    def callback(uk):
        trace.append(-objective(uk)[0] * nq)

    res = scipy.optimize.minimize(
        objective,
        u0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-9},
    )
    theta, alpha0, alphas = natural(res.x)
    tar = TarParams(theta.reshape(l, p + 1))
    spec = ModelSpec(
        p=p,
        q=q,
        partition=partition,
        tar=tar,
        aarch=AarchParams(alpha0=alpha0, alphas=alphas, betas=np.zeros(q)),
    )

    # Inference in natural coordinates: OPG information from per-observation
    # scores and a finite-difference Jacobian of the mean gradient.
    e = ctx.y_r - zexp_r @ theta
    asq = alphas * alphas
    h = _sym_variance(alpha0, asq, e, ph)
    eq, hq = e[o:], h[o:]
    w1 = 0.5 * (eq * eq / hq - 1.0) / hq
    htheta = np.zeros((nr, ntheta))
    dh_a = np.empty((nr, q))
    sq = e * e
    for k in range(1, q + 1):
        if k <= nr:
            htheta[k:] += -2.0 * asq[k - 1] * (e[: nr - k, None] * zexp_r[: nr - k])
            dh_a[k:, k - 1] = 2.0 * alphas[k - 1] * sq[: nr - k]
        dh_a[: min(k, nr), k - 1] = 2.0 * alphas[k - 1] * ph
    kdim = ntheta + 1 + q
    scores = np.empty((nq, kdim))
    scores[:, :ntheta] = zexp_r[o:] * (eq / hq)[:, None] + w1[:, None] * htheta[o:]
    scores[:, ntheta] = w1
    scores[:, ntheta + 1 :] = w1[:, None] * dh_a[o:]
    info = scores.T @ scores / nq
    info = 0.5 * (info + info.T)

    def mean_grad(vec):
        f, grads = value_grad_natural(vec[:ntheta], vec[ntheta], vec[ntheta + 1 :])
        grad_theta, grad_a0, grad_a = grads
        return -np.concatenate([grad_theta, [grad_a0], grad_a])

    base = np.concatenate([theta, [alpha0], alphas])
    hess = np.empty((kdim, kdim))
    for c in range(kdim):
        step = 1e-5 * (1.0 + abs(base[c]))
        up, dn = base.copy(), base.copy()
        up[c] += step
        dn[c] -= step
        if c >= ntheta:
            dn[c] = max(dn[c], 1e-12)
        hess[:, c] = (mean_grad(up) - mean_grad(dn)) / (up[c] - dn[c])

    try:
        hinv = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        raise ConvergenceError(
            "full QMLE Hessian is singular at the optimum", result=None
        ) from None
    sandwich = hinv @ info @ hinv.T / nq
    sandwich = 0.5 * (sandwich + sandwich.T)
    kfull = ntheta + 1 + 2 * q
    std = np.full(kfull, np.nan)
    sand_full = np.full((kfull, kfull), np.nan)
    info_full = np.full((kfull, kfull), np.nan)
    idx = np.arange(kdim)
    std[:kdim] = np.sqrt(np.maximum(np.diag(sandwich), 0.0))
    sand_full[np.ix_(idx, idx)] = sandwich
    info_full[np.ix_(idx, idx)] = info

    qll = gaussian_qll(spec, x)
    _, g_final = objective(res.x)
    converged = bool(res.success) or float(np.max(np.abs(g_final))) < 1e-6
    report = FitReport(
        spec=spec,
        std_errors=std,
        info_matrix=info_full,
        sandwich_cov=sand_full,
        qll=qll,
        iterations=int(res.nit),
        converged=converged,
        trace=tuple(trace),
    )
    if not converged:
        raise ConvergenceError(
            f"full QMLE did not converge in {max_iter} iterations ({res.message})",
            result=report,
        )
    return report
