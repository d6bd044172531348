"""Divergences between true and model densities, tail mass, VB predictors.

The joint density of (y, x) factors as the conditional Gaussian density of
y given x times the uniform density on [0,1]^p, so every divergence over
the joint reduces to an x-integral of a closed-form y-integral:

  KL(l0, l_omega)  = log(sigma/sigma0) - 1/2 + sigma0^2/(2 sigma^2)
                     + (1/(2 sigma^2)) * int (f_theta - f0)^2 dx

  H(l0, l_omega)   = 2 - 2 * c1 * c2, the squared-integrand form
                     int (sqrt(l0) - sqrt(l_omega))^2 with range [0, 2],
                     c1 = sqrt(2 / (sigma/sigma0 + sigma0/sigma)),
                     c2 = int exp{ -(f_theta - f0)^2
                                   / (4 (sigma^2 + sigma0^2)) } dx.

Note this Hellinger convention is the squared distance without the 1/2
factor; divide by 2 to get the conventional normalized square.

x-integrals use tensor Gauss-Legendre rules for p <= 3 and Sobol QMC
above that; both are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .core_model import (
    ModelDims,
    NetworkParams,
    TruthFunction,
    evaluate_truth,
    network_eval_batch,
)
from .meanfield_vi import JointDraws, MeanFieldPosterior, sample_reparameterized
from .special import logistic

__all__ = [
    "QuadratureRule",
    "TailMassEstimate",
    "gauss_legendre_rule",
    "sobol_rule",
    "default_rule",
    "as_regression_function",
    "l2_sq_distance",
    "kl_true_vs_model",
    "hellinger_true_vs_model",
    "bhattacharyya_coefficient",
    "posterior_hellinger_draws",
    "tail_masses_from_hellinger",
    "vp_tail_mass",
    "vb_predictor",
    "predictor_l2_error",
    "averaged_density_hellinger",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in [0,1]^p with weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if points.ndim != 2 or weights.ndim != 1 or points.shape[0] != weights.size:
            raise ValueError("points must be (M, p) with matching weights (M,)")
        if abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1 over the unit cube")
        points.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def p(self) -> int:
        return self.points.shape[1]


def gauss_legendre_rule(p: int, nodes_per_axis: int) -> QuadratureRule:
    """Tensor-product Gauss-Legendre rule mapped to [0,1]^p; p <= 3 only."""
    if p < 1 or p > 3:
        raise ValueError("tensor Gauss-Legendre rules are limited to p <= 3")
    if nodes_per_axis < 1:
        raise ValueError("nodes_per_axis must be >= 1")
    x, w = np.polynomial.legendre.leggauss(nodes_per_axis)
    x01 = 0.5 * (x + 1.0)
    w01 = 0.5 * w
    grids = np.meshgrid(*([x01] * p), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(1)
    for _ in range(p):
        weights = np.outer(weights, w01).ravel()
    return QuadratureRule(points=points, weights=weights, kind="gauss_legendre")


def sobol_rule(p: int, log2_points: int = 16) -> QuadratureRule:
    """Unscrambled Sobol sequence with equal weights; deterministic."""
    if p < 1:
        raise ValueError("p must be >= 1")
    sampler = qmc.Sobol(d=p, scramble=False)
    points = sampler.random_base2(m=log2_points)
    m = points.shape[0]
    return QuadratureRule(points=points, weights=np.full(m, 1.0 / m), kind="sobol")


def default_rule(p: int) -> QuadratureRule:
    """64 nodes per axis for p <= 2, 32^3 for p = 3, Sobol 2^16 beyond."""
    if p <= 2:
        return gauss_legendre_rule(p, 64)
    if p == 3:
        return gauss_legendre_rule(3, 32)
    return sobol_rule(p)


def as_regression_function(f: TruthFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Coerce a NetworkParams or callable into a vectorized x -> f(x) map."""
    return lambda x: evaluate_truth(f, x)


def l2_sq_distance(f: TruthFunction, g: TruthFunction, rule: QuadratureRule) -> float:
    """Quadrature estimate of int (f - g)^2 dx over [0,1]^p."""
    fv = evaluate_truth(f, rule.points)
    gv = evaluate_truth(g, rule.points)
    diff = fv - gv
    return float(np.dot(rule.weights, diff * diff))


def _check_scales(sigma: float, sigma0: float) -> None:
    if sigma <= 0.0 or sigma0 <= 0.0:
        raise ValueError("noise scales must be positive")


def kl_true_vs_model(
    f_theta: TruthFunction,
    sigma: float,
    f0: TruthFunction,
    sigma0: float,
    rule: QuadratureRule,
) -> float:
    """KL of the true joint density from the model joint density."""
    _check_scales(sigma, sigma0)
    s2 = sigma * sigma
    return (
        math.log(sigma / sigma0)
        - 0.5
        + sigma0 * sigma0 / (2.0 * s2)
        + l2_sq_distance(f_theta, f0, rule) / (2.0 * s2)
    )


def _hellinger_factors(
    f_theta: TruthFunction,
    sigma: float,
    f0: TruthFunction,
    sigma0: float,
    rule: QuadratureRule,
) -> tuple[float, float]:
    _check_scales(sigma, sigma0)
    ratio = sigma / sigma0
    c1 = math.sqrt(2.0 / (ratio + 1.0 / ratio))
    fv = evaluate_truth(f_theta, rule.points)
    gv = evaluate_truth(f0, rule.points)
    diff = fv - gv
    c2 = float(
        np.dot(rule.weights, np.exp(-diff * diff / (4.0 * (sigma * sigma + sigma0 * sigma0))))
    )
    return c1, c2


def bhattacharyya_coefficient(
    f_theta: TruthFunction,
    sigma: float,
    f0: TruthFunction,
    sigma0: float,
    rule: QuadratureRule,
) -> float:
    """int sqrt(l0 * l_omega) dy dx in closed form (y-part analytic)."""
    c1, c2 = _hellinger_factors(f_theta, sigma, f0, sigma0, rule)
    return c1 * c2


def hellinger_true_vs_model(
    f_theta: TruthFunction,
    sigma: float,
    f0: TruthFunction,
    sigma0: float,
    rule: QuadratureRule,
) -> float:
    """Squared-integrand Hellinger divergence, range [0, 2]."""
    bc = bhattacharyya_coefficient(f_theta, sigma, f0, sigma0, rule)
    return min(max(2.0 - 2.0 * bc, 0.0), 2.0)


@dataclass(frozen=True)
class TailMassEstimate:
    """MC estimate of the posterior mass outside a Hellinger neighborhood."""

    epsilon: float
    estimate: float
    standard_error: float
    samples: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.estimate <= 1.0):
            raise ValueError("tail-mass estimate must lie in [0,1]")


def posterior_hellinger_draws(
    q: MeanFieldPosterior,
    f0: TruthFunction,
    sigma0: float,
    count: int,
    seed: int | np.random.Generator,
    rule: QuadratureRule,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, JointDraws]:
    """Hellinger divergence per posterior draw, with reusable evaluations.

    Returns (hellinger values (S,), model values at rule points (S, M),
    noise SD per draw (S,), the raw draws). For the sigma-known family the
    model noise SD is the true sigma0.
    """
    draws = sample_reparameterized(q, seed, count)
    sigmas = draws.sigma_values(sigma_known=sigma0)
    fvals = network_eval_batch(draws.theta, q.dims, rule.points)
    f0v = evaluate_truth(f0, rule.points)
    diff = fvals - f0v[None, :]
    denom = 4.0 * (sigmas * sigmas + sigma0 * sigma0)
    c2 = np.exp(-diff * diff / denom[:, None]) @ rule.weights
    ratio = sigmas / sigma0
    c1 = np.sqrt(2.0 / (ratio + 1.0 / ratio))
    hell = np.clip(2.0 - 2.0 * c1 * c2, 0.0, 2.0)
    return hell, fvals, sigmas, draws


def tail_masses_from_hellinger(
    hell: np.ndarray, epsilons: Sequence[float]
) -> list[TailMassEstimate]:
    """Exceedance fractions of precomputed per-draw Hellinger values."""
    count = hell.size
    out = []
    for eps in epsilons:
        frac = float(np.mean(hell > eps))
        se = math.sqrt(frac * (1.0 - frac) / count)
        out.append(
            TailMassEstimate(epsilon=float(eps), estimate=frac, standard_error=se, samples=count)
        )
    return out


def vp_tail_mass(
    q: MeanFieldPosterior,
    f0: TruthFunction,
    sigma0: float,
    epsilons: Sequence[float],
    count: int,
    seed: int | np.random.Generator,
    rule: QuadratureRule,
) -> list[TailMassEstimate]:
    """Fraction of posterior draws farther than each epsilon from the truth.

    One shared set of draws serves the whole epsilon grid, so the estimates
    are non-increasing in epsilon by construction.
    """
    if count < 100:
        raise ValueError("tail-mass estimation needs at least 100 draws")
    hell, _, _, _ = posterior_hellinger_draws(q, f0, sigma0, count, seed, rule)
    return tail_masses_from_hellinger(hell, epsilons)


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def vb_predictor(
    q: MeanFieldPosterior,
    x: np.ndarray,
    method: str = "gauss_hermite",
    mc_samples: int = 1024,
    seed: int | np.random.Generator = 0,
):
    """Posterior-mean regression function E_q[f_theta(x)].

    The Gauss-Hermite route uses factor independence: E[f] = E[beta0] +
    sum_j E[beta_j] E[logistic(u_j)], where u_j is Gaussian with mean
    m_gamma_j . (1, x) and variance sum_h s_gamma_jh^2 (1, x)_h^2, and each
    1-D expectation is a 64-node Gauss-Hermite sum. The MC route averages
    network evaluations over reparameterized draws.
    """
    x_arr = np.asarray(x, dtype=float)
    squeeze = x_arr.ndim == 1
    if squeeze:
        x_arr = x_arr[None, :]
    if method == "mc":
        draws = sample_reparameterized(q, seed, mc_samples)
        vals = network_eval_batch(draws.theta, q.dims, x_arr).mean(axis=0)
        return float(vals[0]) if squeeze else vals
    if method != "gauss_hermite":
        raise ValueError("method must be 'gauss_hermite' or 'mc'")
    k, p = q.dims.k, q.dims.p
    if x_arr.shape[1] != p:
        raise ValueError(f"expected points with {p} coordinates")
    xt = np.hstack([np.ones((x_arr.shape[0], 1)), x_arr])
    m = q.weights.m
    s = q.weights.s
    m_beta0 = m[0]
    m_beta = m[1 : 1 + k]
    m_gamma = m[1 + k :].reshape(k, p + 1)
    s_gamma = s[1 + k :].reshape(k, p + 1)
    u_mean = xt @ m_gamma.T
    u_sd = np.sqrt((xt * xt) @ (s_gamma * s_gamma).T)
    nodes = u_mean[..., None] + math.sqrt(2.0) * u_sd[..., None] * _GH_NODES
    e_hidden = logistic(nodes) @ _GH_WEIGHTS / math.sqrt(math.pi)
    vals = m_beta0 + e_hidden @ m_beta
    return float(vals[0]) if squeeze else vals


def predictor_l2_error(
    q: MeanFieldPosterior,
    f0: TruthFunction,
    rule: QuadratureRule,
    method: str = "gauss_hermite",
    mc_samples: int = 1024,
    seed: int | np.random.Generator = 0,
) -> float:
    """Squared L2 distance between the VB predictor and the truth."""
    pred = vb_predictor(q, rule.points, method=method, mc_samples=mc_samples, seed=seed)
    f0v = evaluate_truth(f0, rule.points)
    diff = pred - f0v
    return float(np.dot(rule.weights, diff * diff))


def averaged_density_hellinger(
    q: MeanFieldPosterior,
    f0: TruthFunction,
    sigma0: float,
    count: int,
    seed: int | np.random.Generator,
    rule: QuadratureRule,
    precomputed: tuple[np.ndarray, np.ndarray] | None = None,
    chunk: int = 16,
) -> float:
    """Hellinger divergence between the truth and the VB-averaged density.

    The averaged predictive density is l_hat(y, x) = mean_s l_omega_s(y, x)
    over posterior draws. Its Bhattacharyya integral against l0 is computed
    with the substitution y = f0(x) + 2 sigma0 u, which turns the y-integral
    into a Gauss-Hermite sum of sqrt(l_hat); draws are processed in chunks
    to bound memory.
    """
    if precomputed is not None:
        fvals, sigmas = precomputed
    else:
        _, fvals, sigmas, _ = posterior_hellinger_draws(q, f0, sigma0, count, seed, rule)
    f0v = evaluate_truth(f0, rule.points)
    S, M = fvals.shape
    y = f0v[None, :, None] + 2.0 * sigma0 * _GH_NODES[None, None, :]
    dens_sum = np.zeros((M, _GH_NODES.size))
    for start in range(0, S, chunk):
        fs = fvals[start : start + chunk]
        ss = sigmas[start : start + chunk]
        z = (y - fs[:, :, None]) / ss[:, None, None]
        dens_sum += np.sum(
            np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * ss[:, None, None]),
            axis=0,
        )
    l_hat = dens_sum / S
    const = 2.0 * sigma0 * (2.0 * math.pi * sigma0 * sigma0) ** -0.25
    bc_per_x = const * (np.sqrt(l_hat) @ _GH_WEIGHTS)
    bc = float(np.dot(rule.weights, bc_per_x))
    return min(max(2.0 - 2.0 * bc, 0.0), 2.0)
