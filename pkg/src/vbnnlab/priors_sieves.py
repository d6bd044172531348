"""Prior families over network weights, sieve sets, and rate assumptions.

Four prior variants are supported, all with independent coordinates:

  fixed_gaussian       theta_i ~ N(0, zeta^2), noise SD known
  scaled_gaussian      theta_i ~ N(0, zeta^2 n^u), noise SD known
  inverse_gamma_sigma  theta_i ~ N(0, zeta^2), sigma^2 ~ IG(alpha, lam)
  rho_gaussian         theta_i ~ N(0, zeta^2), rho ~ N(0, eta^2) with
                       sigma = log(1 + e^rho)

The sieve at sample size n restricts weights to |theta_i| <= C_n with
log C_n = n^(b-a), the noise variance (when free) to
[1/C_n^2, D_n] with log D_n = n^b, and rho to |rho| <= log C_n. C_n and
D_n overflow any float for moderate n, so all sieve arithmetic stays in
log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp_special

from .core_model import ModelDims, NetworkParams, TruthFunction, embed_teacher
from .rng import as_generator
from .special import log_gamma, log_normal_sf, log_two_sided_normal_tail, normal_sf

__all__ = [
    "PriorSpec",
    "SieveSpec",
    "SieveBounds",
    "AssumptionReport",
    "log_prior_density",
    "sample_prior",
    "sieve_bounds",
    "log_prior_mass_outside_sieve",
    "outside_sieve_probability_exact",
    "outside_sieve",
    "log_gaussian_box_tail",
    "assumption_report",
]

_VARIANTS = ("fixed_gaussian", "scaled_gaussian", "inverse_gamma_sigma", "rho_gaussian")


@dataclass(frozen=True)
class PriorSpec:
    """One of the four prior variants with its positive hyperparameters."""

    variant: str
    zeta: float
    u: float | None = None
    alpha: float | None = None
    lam: float | None = None
    eta: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown prior variant {self.variant!r}")
        if self.zeta <= 0.0:
            raise ValueError("zeta must be positive")
        if self.variant == "scaled_gaussian":
            if self.u is None or self.u <= 0.0:
                raise ValueError("scaled_gaussian requires u > 0")
        if self.variant == "inverse_gamma_sigma":
            if self.alpha is None or self.alpha <= 0.0 or self.lam is None or self.lam <= 0.0:
                raise ValueError("inverse_gamma_sigma requires alpha > 0 and lam > 0")
        if self.variant == "rho_gaussian":
            if self.eta is None or self.eta <= 0.0:
                raise ValueError("rho_gaussian requires eta > 0")

    @classmethod
    def fixed_gaussian(cls, zeta: float) -> "PriorSpec":
        return cls(variant="fixed_gaussian", zeta=zeta)

    @classmethod
    def scaled_gaussian(cls, zeta: float, u: float) -> "PriorSpec":
        return cls(variant="scaled_gaussian", zeta=zeta, u=u)

    @classmethod
    def inverse_gamma_sigma(cls, zeta: float, alpha: float, lam: float) -> "PriorSpec":
        return cls(variant="inverse_gamma_sigma", zeta=zeta, alpha=alpha, lam=lam)

    @classmethod
    def rho_gaussian(cls, zeta: float, eta: float) -> "PriorSpec":
        return cls(variant="rho_gaussian", zeta=zeta, eta=eta)

    @property
    def requires_scale_param(self) -> bool:
        return self.variant in ("inverse_gamma_sigma", "rho_gaussian")

    def weight_scale(self, n: int) -> float:
        """Prior SD of one weight coordinate at sample size n."""
        if self.variant == "scaled_gaussian":
            return self.zeta * float(n) ** (self.u / 2.0)
        return self.zeta


@dataclass(frozen=True)
class SieveSpec:
    """Growth exponents: k_n = ceil(n^a) nodes, log C_n = n^(b-a), log D_n = n^b."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (0.0 < self.a < self.b < 1.0):
            raise ValueError("sieve exponents must satisfy 0 < a < b < 1")

    def k_n(self, n: int) -> int:
        return int(math.ceil(float(n) ** self.a))

    def log_C(self, n: int) -> float:
        return float(n) ** (self.b - self.a)

    def log_D(self, n: int) -> float:
        return float(n) ** self.b

    def check_variant(self, prior: PriorSpec) -> None:
        """The rho variant additionally needs a < 1/2 and b > a + 1/2."""
        if prior.variant == "rho_gaussian":
            if not (self.a < 0.5 and self.b > self.a + 0.5):
                raise ValueError(
                    "rho_gaussian sieve requires a < 1/2 and b > a + 1/2 "
                    f"(got a={self.a}, b={self.b})"
                )


@dataclass(frozen=True)
class SieveBounds:
    k_n: int
    log_C_n: float
    log_D_n: float


def sieve_bounds(sieve: SieveSpec, n: int) -> SieveBounds:
    """Node count and log-domain box constants of the sieve at size n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return SieveBounds(k_n=sieve.k_n(n), log_C_n=sieve.log_C(n), log_D_n=sieve.log_D(n))


def _normal_log_density_sum(values: np.ndarray, sd: float) -> float:
    values = np.asarray(values, dtype=float)
    m = values.size
    return float(
        -0.5 * m * math.log(2.0 * math.pi)
        - m * math.log(sd)
        - 0.5 * np.dot(values.ravel(), values.ravel()) / (sd * sd)
    )


def _inverse_gamma_log_density(sigma_sq: float, alpha: float, lam: float) -> float:
    if sigma_sq <= 0.0:
        raise ValueError("sigma^2 must be positive")
    return (
        alpha * math.log(lam)
        - log_gamma(alpha)
        - (alpha + 1.0) * math.log(sigma_sq)
        - lam / sigma_sq
    )


def log_prior_density(
    spec: PriorSpec,
    n: int,
    params: NetworkParams,
    scale_param: float | None = None,
) -> float:
    """Exact log density of the product prior, normalizing constants included.

    scale_param is sigma^2 for inverse_gamma_sigma, rho for rho_gaussian,
    and must be omitted for the sigma-known variants.
    """
    if spec.requires_scale_param:
        if scale_param is None:
            raise ValueError(f"{spec.variant} requires a scale_param")
    elif scale_param is not None:
        raise ValueError(f"{spec.variant} takes no scale_param")

    total = _normal_log_density_sum(params.flatten(), spec.weight_scale(n))
    if spec.variant == "inverse_gamma_sigma":
        total += _inverse_gamma_log_density(float(scale_param), spec.alpha, spec.lam)
    elif spec.variant == "rho_gaussian":
        total += _normal_log_density_sum(np.array([scale_param]), spec.eta)
    return total


def sample_prior(
    spec: PriorSpec,
    n: int,
    dims: ModelDims,
    seed: int | np.random.Generator,
) -> tuple[NetworkParams, float | None]:
    """One joint draw from the prior; deterministic per seed."""
    gen = as_generator(seed)
    flat = gen.standard_normal(dims.K) * spec.weight_scale(n)
    params = NetworkParams.from_flat(dims, flat)
    scale: float | None = None
    if spec.variant == "inverse_gamma_sigma":
        # sigma^2 ~ IG(alpha, lam)  <=>  1/sigma^2 ~ Gamma(alpha, rate lam)
        scale = float(1.0 / (gen.gamma(shape=spec.alpha) / spec.lam))
    elif spec.variant == "rho_gaussian":
        scale = float(gen.standard_normal() * spec.eta)
    return params, scale


def log_gaussian_box_tail(count: int, t: float) -> float:
    """log of the union bound count * P(|Z| > t) for standardized threshold t."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return math.log(count) + log_two_sided_normal_tail(t)


def _log_gamma_upper_tail(alpha: float, log_x: float) -> float:
    """log Q(alpha, x) for x given in log domain, valid for huge x.

    Q is the regularized upper incomplete gamma. For moderate x the exact
    library value is used; past x = 600 the tail expansion
    Q(a,x) = x^(a-1) e^(-x) / Gamma(a) * (1 + (a-1)/x + (a-1)(a-2)/x^2 + ...)
    takes over, and once even log x overflows the bound saturates to -inf.
    """
    if log_x > 700.0:
        return -math.inf
    x = math.exp(log_x)
    if x <= 600.0:
        q = float(sp_special.gammaincc(alpha, x))
        if q > 0.0:
            return math.log(q)
    correction = 1.0 + (alpha - 1.0) / x + (alpha - 1.0) * (alpha - 2.0) / (x * x)
    return (alpha - 1.0) * log_x - x - log_gamma(alpha) + math.log(max(correction, 1e-300))


def _log_gamma_lower_tail(alpha: float, log_x: float) -> float:
    """log P(alpha, x) for tiny x given in log domain.

    P(a,x) = x^a / Gamma(a+1) * (1 - a x/(a+1) + ...); for x below 1e-8 the
    leading term is exact to double precision, otherwise the library value
    is used.
    """
    if log_x < -18.0:
        return alpha * log_x - log_gamma(alpha + 1.0)
    p = float(sp_special.gammainc(alpha, math.exp(log_x)))
    return math.log(p) if p > 0.0 else alpha * log_x - log_gamma(alpha + 1.0)


def _logsumexp(parts: list[float]) -> float:
    finite = [v for v in parts if v > -math.inf]
    if not finite:
        return -math.inf
    top = max(finite)
    return top + math.log(sum(math.exp(v - top) for v in finite))


def log_prior_mass_outside_sieve(
    spec: PriorSpec, sieve: SieveSpec, n: int, p: int
) -> float:
    """log of the union-bound upper estimate of the prior mass outside the sieve.

    The weight box contributes 2 K(n) (1 - Phi(C_n / zeta_n)) across all
    K(n) flattened coordinates; a free noise variance adds its two
    inverse-gamma tails, and a free rho adds 2 (1 - Phi(log C_n / eta)).
    The bound can exceed 1 at tiny n; it is a bound, not a probability,
    and is left unclamped. Everything is evaluated in log domain because
    C_n = exp(n^(b-a)) overflows any float at moderate n.
    """
    bounds = sieve_bounds(sieve, n)
    K = ModelDims(p=p, k=bounds.k_n).K
    log_t = bounds.log_C_n - math.log(spec.weight_scale(n))
    if log_t > 700.0:
        weight_part = -math.inf
    else:
        weight_part = log_gaussian_box_tail(K, math.exp(log_t))
    parts = [weight_part]
    if spec.variant == "inverse_gamma_sigma":
        # sigma^2 < 1/C_n^2  <=>  1/sigma^2 > C_n^2, a Gamma(alpha, lam) upper tail
        parts.append(_log_gamma_upper_tail(spec.alpha, math.log(spec.lam) + 2.0 * bounds.log_C_n))
        # sigma^2 > D_n  <=>  1/sigma^2 < 1/D_n, a Gamma lower tail
        parts.append(_log_gamma_lower_tail(spec.alpha, math.log(spec.lam) - bounds.log_D_n))
    elif spec.variant == "rho_gaussian":
        parts.append(log_two_sided_normal_tail(bounds.log_C_n / spec.eta))
    return _logsumexp(parts)


def outside_sieve_probability_exact(
    spec: PriorSpec, sieve: SieveSpec, n: int, p: int
) -> float:
    """Exact prior probability of leaving the sieve, for small n cross-checks.

    Complements the union bound: 1 - P(all coordinates inside), using the
    product structure of the prior. Only meaningful while C_n is small
    enough that the per-coordinate tails have not underflowed.
    """
    bounds = sieve_bounds(sieve, n)
    K = ModelDims(p=p, k=bounds.k_n).K
    log_t = bounds.log_C_n - math.log(spec.weight_scale(n))
    tail = 2.0 * normal_sf(math.exp(min(log_t, 700.0)))
    inside = (1.0 - tail) ** K
    if spec.variant == "inverse_gamma_sigma":
        hi = float(sp_special.gammaincc(spec.alpha, spec.lam * math.exp(-min(bounds.log_D_n, 700.0))))
        lo_excess = float(
            sp_special.gammaincc(spec.alpha, spec.lam * math.exp(min(2.0 * bounds.log_C_n, 700.0)))
        )
        inside *= hi - lo_excess
    elif spec.variant == "rho_gaussian":
        inside *= 1.0 - 2.0 * normal_sf(bounds.log_C_n / spec.eta)
    return 1.0 - inside


@dataclass(frozen=True)
class AssumptionReport:
    """Witnessed rates for the teacher-approximation and growth assumptions.

    a1_l2_error maps each n to the squared L2 gap between the witness
    network (the teacher embedded, or truncated, to k_n nodes) and the true
    regression function. growth_exponent is the least-squares slope of
    log sum-sq-weights against log n; the feasible delta interval combines
    delta < 1 - a with delta < 1 - growth_exponent. u_ok reports, for a
    scaled-variance prior, whether its exponent u exceeds the witnessed v;
    it stays None for the other variants.
    """

    sum_sq_theta0: float
    a1_l2_error: dict[int, float]
    delta_feasible: tuple[float, float]
    a2_satisfied: bool
    a3_satisfied: bool
    growth_exponent: float
    v_witness: float
    u_ok: bool | None


def assumption_report(
    teacher: NetworkParams,
    f0: TruthFunction,
    sieve: SieveSpec,
    n_grid: list[int],
    prior: PriorSpec | None = None,
) -> AssumptionReport:
    """Check the teacher-approximation and weight-growth rate assumptions."""
    from .divergence_metrics import default_rule, l2_sq_distance
    from .core_model import evaluate_truth, network_eval

    if len(n_grid) < 1:
        raise ValueError("n_grid must be non-empty")
    p = teacher.gamma.shape[1] - 1
    rule = default_rule(p)
    a1: dict[int, float] = {}
    sums: list[float] = []
    for n in sorted(n_grid):
        k_n = sieve.k_n(n)
        if k_n >= teacher.beta.size:
            witness = embed_teacher(teacher, k_n)
        else:
            witness = NetworkParams(
                beta0=teacher.beta0,
                beta=teacher.beta[:k_n],
                gamma=teacher.gamma[:k_n, :],
            )
        err = l2_sq_distance(
            lambda x: network_eval(witness, x),
            lambda x: evaluate_truth(f0, x),
            rule,
        )
        a1[n] = max(err, 0.0)
        sums.append(witness.sum_sq())

    grid = np.array(sorted(n_grid), dtype=float)
    sums_arr = np.array(sums)
    if len(grid) >= 2 and np.ptp(sums_arr) > 1e-12 * max(1.0, float(np.max(sums_arr))):
        slope = float(np.polyfit(np.log(grid), np.log(np.maximum(sums_arr, 1e-300)), 1)[0])
    else:
        slope = 0.0
    delta_hi = min(1.0 - sieve.a, 1.0 - slope)
    v_witness = max(1.0, slope)
    u_ok: bool | None = None
    if prior is not None and prior.variant == "scaled_gaussian":
        u_ok = bool(prior.u > v_witness)
    return AssumptionReport(
        sum_sq_theta0=teacher.sum_sq(),
        a1_l2_error=a1,
        delta_feasible=(0.0, delta_hi),
        a2_satisfied=bool(slope < 1.0),
        a3_satisfied=bool(np.isfinite(slope)),
        growth_exponent=slope,
        v_witness=v_witness,
        u_ok=u_ok,
    )


def outside_sieve(
    spec: PriorSpec,
    sieve: SieveSpec,
    n: int,
    params: NetworkParams,
    scale_param: float | None = None,
) -> bool:
    """True when a draw violates any sieve constraint (small-n use only)."""
    bounds = sieve_bounds(sieve, n)
    limit = math.exp(min(bounds.log_C_n, 700.0))
    if float(np.max(np.abs(params.flatten()))) > limit:
        return True
    if spec.variant == "inverse_gamma_sigma":
        lo = math.exp(max(-2.0 * bounds.log_C_n, -700.0))
        hi = math.exp(min(bounds.log_D_n, 700.0))
        return not (lo <= float(scale_param) <= hi)
    if spec.variant == "rho_gaussian":
        return abs(float(scale_param)) > bounds.log_C_n
    return False
