"""Regression model: one-hidden-layer logistic network plus Gaussian noise.

The regression function family is

    f(x) = beta0 + sum_j beta_j * logistic(gamma_j0 + sum_h gamma_jh x_h)

over covariates x in the unit cube [0,1]^p, observed through
y = f0(x) + noise with noise ~ N(0, sigma0^2).

Parameters flatten in the canonical order
[beta0, beta_1..beta_k, gamma_10..gamma_1p, ..., gamma_k0..gamma_kp];
every module that indexes coordinates (priors, variational factors,
gradients) relies on this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .rng import as_generator
from .special import logistic

__all__ = [
    "ModelDims",
    "NetworkParams",
    "RegressionDataset",
    "TruthFunction",
    "logistic",
    "network_eval",
    "network_eval_batch",
    "log_likelihood",
    "simulate_dataset",
    "make_teacher",
    "evaluate_truth",
    "embed_teacher",
]


@dataclass(frozen=True)
class ModelDims:
    """Network shape: p covariates, k hidden nodes.

    K counts every free coordinate: the output bias, the k output weights,
    and k(p+1) hidden weights (one bias plus p slopes per node), so
    K = 1 + k(p+2). Note this exceeds the nominal count 1 + k(p+1) often
    quoted for this architecture, which drops the output weights; priors,
    variational factors, and gradients all run over the full K coordinates.
    """

    p: int
    k: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.k < 1:
            raise ValueError("ModelDims requires p >= 1 and k >= 1")

    @property
    def K(self) -> int:
        return 1 + self.k * (self.p + 2)


def _frozen_array(values, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class NetworkParams:
    """Weights of one network: output bias, output weights, hidden weights.

    gamma has one row per hidden node; column 0 is the hidden bias and
    columns 1..p multiply the covariates.
    """

    beta0: float
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        beta = _frozen_array(self.beta, (np.size(self.beta),))
        if beta.size < 1:
            raise ValueError("need at least one hidden node")
        gamma = _frozen_array(self.gamma, (beta.size, np.shape(self.gamma)[-1]))
        if gamma.shape[1] < 2:
            raise ValueError("gamma needs a bias column plus p >= 1 columns")
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dims(self) -> ModelDims:
        return ModelDims(p=self.gamma.shape[1] - 1, k=self.beta.size)

    def flatten(self) -> np.ndarray:
        return np.concatenate(([self.beta0], self.beta, self.gamma.ravel()))

    @classmethod
    def from_flat(cls, dims: ModelDims, flat: np.ndarray) -> "NetworkParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (dims.K,):
            raise ValueError(f"flat vector must have length {dims.K}")
        k, p = dims.k, dims.p
        return cls(
            beta0=float(flat[0]),
            beta=flat[1 : 1 + k],
            gamma=flat[1 + k :].reshape(k, p + 1),
        )

    def sum_sq(self) -> float:
        """Sum of squared weights, the quantity rate assumptions constrain."""
        return float(np.dot(self.flatten(), self.flatten()))


TruthFunction = Union[NetworkParams, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class RegressionDataset:
    """n observations: covariates in [0,1]^p, responses, true noise SD."""

    xs: np.ndarray
    ys: np.ndarray
    sigma0: float
    truth: TruthFunction | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float)
        if xs.ndim != 2 or xs.shape[0] < 1:
            raise ValueError("xs must be an (n, p) array with n >= 1")
        ys = _frozen_array(self.ys, (xs.shape[0],))
        if np.any(xs < 0.0) or np.any(xs > 1.0):
            raise ValueError("covariates must lie in [0,1]^p")
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        xs.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "sigma0", float(self.sigma0))

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def p(self) -> int:
        return self.xs.shape[1]


def _augment(x: np.ndarray, p: int) -> tuple[np.ndarray, bool]:
    """Prepend the constant-1 bias column to an (n, p) covariate block."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != p:
        raise ValueError(f"expected points with {p} coordinates, got {x.shape[1]}")
    ones = np.ones((x.shape[0], 1))
    return np.hstack([ones, x]), squeeze


def network_eval(params: NetworkParams, x: np.ndarray):
    """Evaluate the network at one point (p,) or a stack of points (n, p)."""
    xt, squeeze = _augment(x, params.gamma.shape[1] - 1)
    hidden = logistic(xt @ params.gamma.T)
    out = params.beta0 + hidden @ params.beta
    return float(out[0]) if squeeze else out


def network_eval_batch(flat: np.ndarray, dims: ModelDims, x: np.ndarray) -> np.ndarray:
    """Evaluate S flattened parameter vectors at n points in one pass.

    flat has shape (S, K) in canonical order; returns (S, n).
    """
    flat = np.asarray(flat, dtype=float)
    if flat.ndim != 2 or flat.shape[1] != dims.K:
        raise ValueError(f"flat batch must have shape (S, {dims.K})")
    xt, _ = _augment(x, dims.p)
    k = dims.k
    beta0 = flat[:, 0]
    beta = flat[:, 1 : 1 + k]
    gamma = flat[:, 1 + k :].reshape(flat.shape[0], k, dims.p + 1)
    u = np.einsum("nh,skh->snk", xt, gamma)
    hidden = logistic(u)
    return beta0[:, None] + np.einsum("snk,sk->sn", hidden, beta)


def log_likelihood(params: NetworkParams, sigma: float, data: RegressionDataset) -> float:
    """Gaussian log likelihood of the dataset under f_params and noise SD sigma."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    resid = data.ys - network_eval(params, data.xs)
    n = data.n
    return float(
        -0.5 * n * math.log(2.0 * math.pi * sigma * sigma)
        - 0.5 * np.dot(resid, resid) / (sigma * sigma)
    )


def evaluate_truth(truth: TruthFunction, x: np.ndarray) -> np.ndarray:
    """Evaluate the ground-truth regression function at (n, p) points."""
    if isinstance(truth, NetworkParams):
        return network_eval(truth, x)
    out = np.asarray(truth(np.asarray(x, dtype=float)), dtype=float)
    return out


def simulate_dataset(
    truth: TruthFunction,
    sigma0: float,
    n: int,
    p: int,
    seed: int | np.random.Generator,
) -> RegressionDataset:
    """Draw x_i ~ U(0,1)^p and y_i = f0(x_i) + sigma0 * z_i, z_i ~ N(0,1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma0 <= 0.0:
        raise ValueError("sigma0 must be positive")
    gen = as_generator(seed)
    xs = gen.random((n, p))
    noise = gen.standard_normal(n)
    ys = evaluate_truth(truth, xs) + sigma0 * noise
    return RegressionDataset(xs=xs, ys=ys, sigma0=sigma0, truth=truth)


def make_teacher(
    k_star: int, p: int, scale: float, seed: int | np.random.Generator
) -> NetworkParams:
    """Reproducible teacher network with weights uniform on [-scale, scale]."""
    if k_star < 1:
        raise ValueError("k_star must be >= 1")
    dims = ModelDims(p=p, k=k_star)
    gen = as_generator(seed)
    flat = gen.uniform(-scale, scale, size=dims.K)
    return NetworkParams.from_flat(dims, flat)


def embed_teacher(teacher: NetworkParams, k: int) -> NetworkParams:
    """Represent a teacher exactly inside a model with k >= k_star nodes.

    Extra nodes get zero output weight and zero hidden weights, so the
    embedded network computes the same function with the larger shape.
    """
    k_star = teacher.beta.size
    if k < k_star:
        raise ValueError("cannot embed a teacher into fewer nodes than it has")
    if k == k_star:
        return teacher
    pad = k - k_star
    return NetworkParams(
        beta0=teacher.beta0,
        beta=np.concatenate([teacher.beta, np.zeros(pad)]),
        gamma=np.vstack([teacher.gamma, np.zeros((pad, teacher.gamma.shape[1]))]),
    )
