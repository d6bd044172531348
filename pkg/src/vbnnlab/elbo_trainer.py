"""ELBO estimation and maximization for the mean-field families.

The objective is ELBO(q) = E_q[log likelihood] - KL(q, prior); maximizing
it minimizes KL(q, posterior) because the evidence does not depend on q.

Gradients are fully analytic:
  - weight factors: pathwise through theta = m + s * eps, with hand-derived
    backprop through the network (df/dbeta0 = 1, df/dbeta_j = psi(u_j),
    df/dgamma_jh = beta_j psi'(u_j) x_h with x_0 = 1);
  - inverse-gamma scale factor: no reparameterization exists, so the
    sigma^2 expectations use the exact identities E[1/sigma^2] = a/b and
    E[log sigma^2] = log b - psi(a), making that part of the gradient
    noise-free;
  - rho scale factor: pathwise through sigma = log(1 + e^rho).

Optimization is plain Adam over the unconstrained vector
[m, log_s, (scale block)], the same update rule the finite-difference
check exercises.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core_model import ModelDims, RegressionDataset
from .meanfield_vi import (
    GaussianFactor,
    InverseGammaFactor,
    MeanFieldPosterior,
    save_posterior,
)
from .priors_sieves import PriorSpec
from .rng import as_generator
from .special import digamma, inv_softplus, log_gamma, logistic, softplus, trigamma

__all__ = [
    "TrainConfig",
    "FitResult",
    "TrainingDivergenceError",
    "elbo_estimate",
    "elbo_gradient",
    "fit",
    "finite_difference_check",
    "pack_posterior",
    "unpack_posterior",
    "initial_posterior",
]


class TrainingDivergenceError(RuntimeError):
    """Raised when the ELBO or its gradient becomes non-finite during fit."""


@dataclass(frozen=True)
class TrainConfig:
    iters: int = 3000
    mc_samples: int = 8
    step_size: float = 1e-2
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int | np.random.Generator = 0
    convergence_window: int = 200
    convergence_tol: float = 1e-6
    likelihood_weight: float = 1.0
    batch_size: int | None = None
    checkpoint_every: int | None = None
    checkpoint_path: str | None = None

    def __post_init__(self) -> None:
        if self.iters < 1 or self.mc_samples < 1 or self.step_size <= 0.0:
            raise ValueError("iters >= 1, mc_samples >= 1, step_size > 0 required")
        if self.convergence_window < 1 or self.convergence_tol < 0.0:
            raise ValueError("invalid convergence settings")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 when given")


@dataclass(frozen=True)
class FitResult:
    posterior: MeanFieldPosterior
    elbo_trace: np.ndarray
    elbo_trace_raw: np.ndarray
    grad_norm_trace: np.ndarray
    iterations: int
    converged: bool
    wall_time: float


def _variant_for(prior: PriorSpec) -> str:
    if prior.variant == "inverse_gamma_sigma":
        return "inverse_gamma"
    if prior.variant == "rho_gaussian":
        return "rho"
    return "none"


def pack_posterior(q: MeanFieldPosterior) -> np.ndarray:
    """Flatten q into the unconstrained optimization vector."""
    parts = [q.weights.m, q.weights.log_s]
    if q.variant == "inverse_gamma":
        parts.append(np.array([q.scale.log_a, q.scale.log_b]))
    elif q.variant == "rho":
        parts.append(np.array([q.scale.m[0], q.scale.log_s[0]]))
    return np.concatenate(parts)


def unpack_posterior(vec: np.ndarray, dims: ModelDims, variant: str) -> MeanFieldPosterior:
    K = dims.K
    weights = GaussianFactor(m=vec[:K], log_s=vec[K : 2 * K])
    if variant == "none":
        return MeanFieldPosterior(dims=dims, weights=weights)
    if variant == "inverse_gamma":
        scale = InverseGammaFactor(log_a=float(vec[2 * K]), log_b=float(vec[2 * K + 1]))
    elif variant == "rho":
        scale = GaussianFactor(m=np.array([vec[2 * K]]), log_s=np.array([vec[2 * K + 1]]))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return MeanFieldPosterior(dims=dims, weights=weights, scale=scale)


@dataclass(frozen=True)
class _Objective:
    """Immutable snapshot of everything the per-iteration math needs."""

    prior: PriorSpec
    dims: ModelDims
    variant: str
    n: int
    xt: np.ndarray  # (n, p+1) covariates with the bias column prepended
    y: np.ndarray
    sigma0: float
    lik_weight: float


def _make_objective(prior: PriorSpec, data: RegressionDataset, dims: ModelDims,
                    lik_weight: float = 1.0) -> _Objective:
    if data.p != dims.p:
        raise ValueError("dataset and dims disagree on p")
    xt = np.hstack([np.ones((data.n, 1)), data.xs])
    return _Objective(
        prior=prior,
        dims=dims,
        variant=_variant_for(prior),
        n=data.n,
        xt=xt,
        y=np.asarray(data.ys),
        sigma0=data.sigma0,
        lik_weight=lik_weight,
    )


def _network_forward(vec_theta: np.ndarray, dims: ModelDims, xt: np.ndarray):
    """Batched forward pass; returns (f, hidden, beta) for reuse in backprop."""
    S = vec_theta.shape[0]
    k = dims.k
    beta0 = vec_theta[:, 0]
    beta = vec_theta[:, 1 : 1 + k]
    gamma = vec_theta[:, 1 + k :].reshape(S, k, dims.p + 1)
    u = np.einsum("nh,skh->snk", xt, gamma)
    hidden = logistic(u)
    f = beta0[:, None] + np.einsum("snk,sk->sn", hidden, beta)
    return f, hidden, beta


def _backprop(w: np.ndarray, hidden: np.ndarray, beta: np.ndarray,
              xt: np.ndarray) -> np.ndarray:
    """Gradient of sum_i w_si f(x_i; theta_s) with respect to flat theta_s."""
    S = w.shape[0]
    g_beta0 = np.sum(w, axis=1)
    g_beta = np.einsum("sn,snk->sk", w, hidden)
    t = w[:, :, None] * hidden * (1.0 - hidden)
    g_gamma = np.einsum("snk,nh->skh", t, xt) * beta[:, :, None]
    return np.concatenate([g_beta0[:, None], g_beta, g_gamma.reshape(S, -1)], axis=1)


def _evaluate(
    vec: np.ndarray,
    ob: _Objective,
    n_grid_n: int,
    eps: np.ndarray,
    rho_eps: np.ndarray | None,
    idx: np.ndarray | None,
    want_grad: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-draw ELBO values and (optionally) the analytic gradient.

    n_grid_n is the sample size the prior sees (weight scale and KL); the
    likelihood always uses the actual data, rescaled by n/|batch| when a
    mini-batch index set idx is given.
    """
    K = ob.dims.K
    m = vec[:K]
    log_s = vec[K : 2 * K]
    s = np.exp(log_s)
    theta = m[None, :] + s[None, :] * eps
    S = theta.shape[0]

    xt = ob.xt if idx is None else ob.xt[idx]
    y = ob.y if idx is None else ob.y[idx]
    rescale = 1.0 if idx is None else ob.n / float(len(idx))

    f, hidden, beta = _network_forward(theta, ob.dims, xt)
    resid = y[None, :] - f
    rss = np.sum(resid * resid, axis=1) * rescale
    n_eff = ob.n  # constants always at full-data scale

    zeta_n = ob.prior.weight_scale(n_grid_n)
    kl = float(
        np.sum(math.log(zeta_n) - log_s)
        + np.sum(s * s + m * m) / (2.0 * zeta_n * zeta_n)
        - 0.5 * K
    )

    if ob.variant == "none":
        sig2 = ob.sigma0 * ob.sigma0
        ll = -0.5 * n_eff * math.log(2.0 * math.pi * sig2) - rss / (2.0 * sig2)
        coeff = np.full(S, 1.0 / sig2)
    elif ob.variant == "inverse_gamma":
        log_a, log_b = float(vec[2 * K]), float(vec[2 * K + 1])
        a_t, b_t = math.exp(log_a), math.exp(log_b)
        alpha, lam = ob.prior.alpha, ob.prior.lam
        e_log = log_b - digamma(a_t)
        e_inv = a_t / b_t
        ll = -0.5 * n_eff * (math.log(2.0 * math.pi) + e_log) - 0.5 * e_inv * rss
        coeff = np.full(S, e_inv)
        kl += (
            (a_t - alpha) * digamma(a_t)
            - log_gamma(a_t)
            + log_gamma(alpha)
            + alpha * (log_b - math.log(lam))
            + (lam - b_t) * a_t / b_t
        )
    else:  # rho
        rho_m, rho_log_s = float(vec[2 * K]), float(vec[2 * K + 1])
        rho_s = math.exp(rho_log_s)
        rho = rho_m + rho_s * rho_eps
        sigma = softplus(rho)
        ll = -0.5 * n_eff * math.log(2.0 * math.pi) - n_eff * np.log(sigma) - rss / (
            2.0 * sigma * sigma
        )
        coeff = 1.0 / (sigma * sigma)
        eta = ob.prior.eta
        kl += (
            math.log(eta)
            - rho_log_s
            + (rho_s * rho_s + rho_m * rho_m) / (2.0 * eta * eta)
            - 0.5
        )

    per_draw = ob.lik_weight * ll - kl
    if not want_grad:
        return per_draw, None

    # Likelihood gradient through theta: d ll_s / d f = coeff_s * resid.
    w = (ob.lik_weight * rescale) * coeff[:, None] * resid
    g_theta = _backprop(w, hidden, beta, xt)
    g_m = g_theta.mean(axis=0) - m / (zeta_n * zeta_n)
    g_log_s = (g_theta * (s[None, :] * eps)).mean(axis=0) - (
        s * s / (zeta_n * zeta_n) - 1.0
    )

    if ob.variant == "none":
        return per_draw, np.concatenate([g_m, g_log_s])

    if ob.variant == "inverse_gamma":
        rbar = float(np.mean(rss))
        d_ll_da = 0.5 * n_eff * trigamma(a_t) - rbar / (2.0 * b_t)
        d_ll_db = -0.5 * n_eff / b_t + a_t * rbar / (2.0 * b_t * b_t)
        d_kl_da = (a_t - alpha) * trigamma(a_t) + lam / b_t - 1.0
        d_kl_db = alpha / b_t - a_t * lam / (b_t * b_t)
        g_log_a = a_t * (ob.lik_weight * d_ll_da - d_kl_da)
        g_log_b = b_t * (ob.lik_weight * d_ll_db - d_kl_db)
        return per_draw, np.concatenate([g_m, g_log_s, [g_log_a, g_log_b]])

    # rho: pathwise through sigma = softplus(rho), dsigma/drho = logistic(rho)
    d_ll_d_sigma = -n_eff / sigma + rss / (sigma ** 3)
    d_ll_d_rho = d_ll_d_sigma * logistic(rho)
    g_rho_m = ob.lik_weight * float(np.mean(d_ll_d_rho)) - rho_m / (eta * eta)
    g_rho_log_s = ob.lik_weight * float(np.mean(d_ll_d_rho * rho_s * rho_eps)) - (
        rho_s * rho_s / (eta * eta) - 1.0
    )
    return per_draw, np.concatenate([g_m, g_log_s, [g_rho_m, g_rho_log_s]])


def _draw_noise(gen: np.random.Generator, S: int, K: int, variant: str):
    eps = gen.standard_normal((S, K))
    rho_eps = gen.standard_normal(S) if variant == "rho" else None
    return eps, rho_eps


def elbo_estimate(
    q: MeanFieldPosterior,
    prior: PriorSpec,
    data: RegressionDataset,
    S: int,
    seed: int | np.random.Generator,
    n_for_prior: int | None = None,
    likelihood_weight: float = 1.0,
) -> tuple[float, float]:
    """MC ELBO value and standard error; deterministic per seed."""
    ob = _make_objective(prior, data, q.dims, likelihood_weight)
    gen = as_generator(seed)
    eps, rho_eps = _draw_noise(gen, S, q.dims.K, ob.variant)
    per_draw, _ = _evaluate(
        pack_posterior(q), ob, n_for_prior or data.n, eps, rho_eps, None, False
    )
    value = float(np.mean(per_draw))
    se = float(np.std(per_draw, ddof=1) / math.sqrt(S)) if S > 1 else float("inf")
    return value, se


def elbo_gradient(
    q: MeanFieldPosterior,
    prior: PriorSpec,
    data: RegressionDataset,
    S: int,
    seed: int | np.random.Generator,
    n_for_prior: int | None = None,
    likelihood_weight: float = 1.0,
) -> np.ndarray:
    """Analytic ELBO gradient over [m, log_s, scale block]; same seed => same draws."""
    ob = _make_objective(prior, data, q.dims, likelihood_weight)
    gen = as_generator(seed)
    eps, rho_eps = _draw_noise(gen, S, q.dims.K, ob.variant)
    _, grad = _evaluate(
        pack_posterior(q), ob, n_for_prior or data.n, eps, rho_eps, None, True
    )
    return grad


def initial_posterior(
    prior: PriorSpec,
    data: RegressionDataset,
    dims: ModelDims,
    seed: int | np.random.Generator,
) -> MeanFieldPosterior:
    """Standard initialization: small random means, SD 0.1, warm-started scale.

    The inverse-gamma factor starts at the conjugate-style values
    a = alpha + n/2, b = lam + RSS(init means)/2; the rho mean starts at
    the value whose softplus equals the residual SD of the initial means.
    """
    gen = as_generator(seed)
    K = dims.K
    m = 0.1 * gen.standard_normal(K)
    log_s = np.full(K, math.log(0.1))
    weights = GaussianFactor(m=m, log_s=log_s)
    variant = _variant_for(prior)
    if variant == "none":
        return MeanFieldPosterior(dims=dims, weights=weights)
    xt = np.hstack([np.ones((data.n, 1)), data.xs])
    f, _, _ = _network_forward(m[None, :], dims, xt)
    rss = float(np.sum((data.ys - f[0]) ** 2))
    if variant == "inverse_gamma":
        scale = InverseGammaFactor(
            log_a=math.log(prior.alpha + 0.5 * data.n),
            log_b=math.log(prior.lam + 0.5 * rss),
        )
    else:
        sigma_init = math.sqrt(max(rss / data.n, 1e-12))
        scale = GaussianFactor(
            m=np.array([inv_softplus(sigma_init)]), log_s=np.array([math.log(0.1)])
        )
    return MeanFieldPosterior(dims=dims, weights=weights, scale=scale)


class _Adam:
    """Adam ascent on a flat parameter vector (maximization sign)."""

    def __init__(self, size: int, step: float, betas: tuple[float, float], eps: float):
        self.step = step
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def update(self, vec: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1.0 - self.b1) * grad
        self.v = self.b2 * self.v + (1.0 - self.b2) * grad * grad
        m_hat = self.m / (1.0 - self.b1 ** self.t)
        v_hat = self.v / (1.0 - self.b2 ** self.t)
        return vec + self.step * m_hat / (np.sqrt(v_hat) + self.eps)


def fit(
    prior: PriorSpec,
    data: RegressionDataset,
    dims: ModelDims,
    config: TrainConfig,
    n_for_prior: int | None = None,
) -> FitResult:
    """Maximize the ELBO by Adam; deterministic given config.seed."""
    start = time.perf_counter()
    ob = _make_objective(prior, data, dims, config.likelihood_weight)
    gen = as_generator(config.seed)
    q0 = initial_posterior(prior, data, dims, gen)
    vec = pack_posterior(q0)
    adam = _Adam(vec.size, config.step_size, config.adam_betas, config.adam_eps)
    n_prior = n_for_prior or data.n

    raw = np.empty(config.iters)
    smooth = np.empty(config.iters)
    grad_norms = np.empty(config.iters)
    window = config.convergence_window
    converged = False
    used = 0

    for t in range(config.iters):
        eps, rho_eps = _draw_noise(gen, config.mc_samples, dims.K, ob.variant)
        idx = None
        if config.batch_size is not None and config.batch_size < data.n:
            idx = gen.choice(data.n, size=config.batch_size, replace=False)
        per_draw, grad = _evaluate(vec, ob, n_prior, eps, rho_eps, idx, True)
        value = float(np.mean(per_draw))
        if not math.isfinite(value):
            raise TrainingDivergenceError(f"non-finite ELBO at iteration {t}")
        if not np.all(np.isfinite(grad)):
            bad = int(np.flatnonzero(~np.isfinite(grad))[0])
            raise TrainingDivergenceError(
                f"non-finite gradient at iteration {t}, parameter index {bad}"
            )
        vec = adam.update(vec, grad)
        raw[t] = value
        lo = max(0, t + 1 - window)
        smooth[t] = float(np.mean(raw[lo : t + 1]))
        grad_norms[t] = float(np.linalg.norm(grad))
        used = t + 1

        if config.checkpoint_every and config.checkpoint_path:
            if (t + 1) % config.checkpoint_every == 0:
                save_posterior(
                    unpack_posterior(vec, dims, ob.variant), config.checkpoint_path
                )

        if t + 1 >= 2 * window and (t + 1) % window == 0:
            prev = float(np.mean(raw[t + 1 - 2 * window : t + 1 - window]))
            curr = float(np.mean(raw[t + 1 - window : t + 1]))
            if abs(curr - prev) / max(1.0, abs(prev)) < config.convergence_tol:
                converged = True
                break

    posterior = unpack_posterior(vec, dims, ob.variant)
    return FitResult(
        posterior=posterior,
        elbo_trace=smooth[:used].copy(),
        elbo_trace_raw=raw[:used].copy(),
        grad_norm_trace=grad_norms[:used].copy(),
        iterations=used,
        converged=converged,
        wall_time=time.perf_counter() - start,
    )


def finite_difference_check(
    q: MeanFieldPosterior,
    prior: PriorSpec,
    data: RegressionDataset,
    coords: list[int],
    h: float = 1e-5,
    S: int = 8,
    seed: int | np.random.Generator = 0,
    likelihood_weight: float = 1.0,
) -> dict:
    """Central finite differences with common random numbers per coordinate.

    The same base noise drives the analytic gradient and both perturbed
    evaluations, so the comparison is exact up to O(h^2) truncation and
    floating-point roundoff.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    ob = _make_objective(prior, data, q.dims, likelihood_weight)
    gen = as_generator(seed)
    eps, rho_eps = _draw_noise(gen, S, q.dims.K, ob.variant)
    vec = pack_posterior(q)
    _, grad = _evaluate(vec, ob, data.n, eps, rho_eps, None, True)

    rows = []
    max_abs = 0.0
    max_rel = 0.0
    for c in coords:
        if not (0 <= c < vec.size):
            raise ValueError(f"coordinate {c} out of range for vector size {vec.size}")
        shift = np.zeros_like(vec)
        shift[c] = h
        up, _ = _evaluate(vec + shift, ob, data.n, eps, rho_eps, None, False)
        dn, _ = _evaluate(vec - shift, ob, data.n, eps, rho_eps, None, False)
        fd = (float(np.mean(up)) - float(np.mean(dn))) / (2.0 * h)
        an = float(grad[c])
        abs_err = abs(an - fd)
        rel_err = abs_err / max(abs(an), abs(fd), 1e-8)
        max_abs = max(max_abs, abs_err)
        max_rel = max(max_rel, rel_err)
        rows.append({"coord": c, "analytic": an, "finite_diff": fd,
                     "abs_err": abs_err, "rel_err": rel_err})
    return {"coords": rows, "max_abs_err": max_abs, "max_rel_err": max_rel, "h": h}
