"""Consistency sweeps: simulate, fit, measure divergences, estimate rates.

A sweep runs one (n, seed) cell per grid point: draw a dataset from a fixed
teacher, fit the variational posterior, then measure the posterior mass
outside Hellinger neighborhoods of the truth, the Hellinger divergence of
the draw-averaged predictive density, the squared L2 error of the posterior
mean predictor, and the posterior noise-scale estimate. Per-n medians over
seeds feed a log-log regression whose negative slope estimates the tail
decay exponent.

Every random quantity in a cell comes from a stream derived from
(master_seed, purpose, n, seed), so cells can run in any order or in
parallel and the whole sweep reproduces bit for bit. Wall-clock runtime is
the one exception and is carried only as a diagnostic.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core_model import ModelDims, NetworkParams, make_teacher, simulate_dataset
from .divergence_metrics import (
    QuadratureRule,
    TailMassEstimate,
    averaged_density_hellinger,
    default_rule,
    gauss_legendre_rule,
    posterior_hellinger_draws,
    predictor_l2_error,
    tail_masses_from_hellinger,
)
from .elbo_trainer import FitResult, TrainConfig, TrainingDivergenceError, fit
from .meanfield_vi import posterior_point_summaries, save_posterior
from .priors_sieves import PriorSpec, SieveSpec, sieve_bounds
from .rng import substream

__all__ = [
    "CONFIG_JSON_VERSION",
    "CSV_HEADER",
    "TeacherSpec",
    "SweepConfig",
    "ExperimentRecord",
    "RateEstimate",
    "SweepResult",
    "cell_dataset",
    "cell_fit",
    "cell_metrics",
    "run_single",
    "run_sweep",
    "estimate_delta",
    "per_n_medians",
    "emit_report",
    "parse_records_csv",
    "config_to_json_dict",
    "config_from_json_dict",
    "load_config",
]

CONFIG_JSON_VERSION = 1
CSV_HEADER = (
    "n,seed,k_n,elbo_final,eps,tail_mass,tail_se,hellinger_avg,l2_error,sigma_hat,runtime_s"
)


@dataclass(frozen=True)
class TeacherSpec:
    """Ground-truth network: node count, weight range, and its own seed."""

    k_star: int = 3
    scale: float = 1.0
    seed: int = 7

    def __post_init__(self) -> None:
        if self.k_star < 1 or self.scale <= 0.0:
            raise ValueError("k_star >= 1 and scale > 0 required")

    def build(self, p: int) -> NetworkParams:
        return make_teacher(self.k_star, p, self.scale, self.seed)


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep; serializable to a versioned JSON file."""

    n_grid: tuple[int, ...]
    seeds: tuple[int, ...]
    prior: PriorSpec
    sieve: SieveSpec = SieveSpec(a=0.25, b=0.8)
    teacher: TeacherSpec = TeacherSpec()
    sigma0: float = 1.0
    p: int = 2
    train: TrainConfig = TrainConfig()
    epsilons: tuple[float, ...] = (0.1, 0.25, 0.5, 1.0)
    tail_samples: int = 2000
    metric_nodes_per_axis: int | None = None
    master_seed: int = 0
    outdir: str | None = None
    workers: int | None = None
    save_checkpoints: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if len(self.n_grid) < 3 or list(self.n_grid) != sorted(set(self.n_grid)):
            raise ValueError("n_grid must be strictly increasing with >= 3 values")
        if self.n_grid[0] < 1:
            raise ValueError("n values must be positive")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.sigma0 <= 0.0 or self.p < 1:
            raise ValueError("sigma0 > 0 and p >= 1 required")
        if self.tail_samples < 100:
            raise ValueError("tail_samples must be >= 100")
        if any(e <= 0.0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        self.sieve.check_variant(self.prior)

    def metric_rule(self) -> QuadratureRule:
        if self.metric_nodes_per_axis is None:
            return default_rule(self.p)
        return gauss_legendre_rule(self.p, self.metric_nodes_per_axis)


@dataclass(frozen=True)
class ExperimentRecord:
    """Outcome of one (n, seed) cell.

    tail holds one estimate per configured epsilon, in grid order. A failed
    cell (training divergence) carries NaN metrics, an empty tail, and the
    failure reason; all other records have finite in-range metrics.
    """

    n: int
    seed: int
    k_n: int
    elbo_final: float
    tail: tuple[TailMassEstimate, ...]
    hellinger_avg: float
    l2_error: float
    sigma_hat: float | None
    runtime_s: float
    checkpoint_path: str | None = None
    failed: bool = False
    failure_reason: str | None = None

    def __post_init__(self) -> None:
        if self.failed:
            return
        if not math.isfinite(self.elbo_final):
            raise ValueError("elbo_final must be finite")
        if not 0.0 <= self.hellinger_avg <= 2.0:
            raise ValueError("hellinger_avg must lie in [0, 2]")
        if not (math.isfinite(self.l2_error) and self.l2_error >= 0.0):
            raise ValueError("l2_error must be finite and >= 0")
        if self.sigma_hat is not None and not (
            math.isfinite(self.sigma_hat) and self.sigma_hat > 0.0
        ):
            raise ValueError("sigma_hat must be positive when present")
        if self.runtime_s < 0.0 or self.k_n < 1:
            raise ValueError("runtime_s >= 0 and k_n >= 1 required")

    def tail_at(self, epsilon: float) -> TailMassEstimate:
        for est in self.tail:
            if abs(est.epsilon - epsilon) < 1e-9:
                return est
        raise KeyError(f"no tail estimate at epsilon={epsilon!r}")


@dataclass(frozen=True)
class RateEstimate:
    """Fitted decay exponent of the median tail mass at one epsilon.

    delta_hat is minus the least-squares slope of log median vs log n,
    reported with its r^2 as a diagnostic and never clamped toward theory.
    When every median is exactly zero the decay is below the Monte Carlo
    resolution and no number is reported.
    """

    epsilon: float
    delta_hat: float | None
    r_squared: float | None
    n_min: int
    n_max: int
    n_used: int
    censored_count: int
    consistent_beyond_resolution: bool


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    records: list[ExperimentRecord]
    estimates: list[RateEstimate]
    failures: list[dict]


def cell_dataset(n: int, seed: int, config: SweepConfig):
    """The dataset a cell sees; stream path ("data", n, seed)."""
    teacher = config.teacher.build(config.p)
    return simulate_dataset(
        teacher, config.sigma0, n, config.p,
        substream(config.master_seed, "data", n, seed),
    )


def cell_fit(n: int, seed: int, config: SweepConfig) -> FitResult:
    """Simulate and fit one cell; stream path ("fit", n, seed)."""
    k_n = sieve_bounds(config.sieve, n).k_n
    dims = ModelDims(p=config.p, k=k_n)
    data = cell_dataset(n, seed, config)
    train = dataclasses.replace(
        config.train, seed=substream(config.master_seed, "fit", n, seed)
    )
    return fit(config.prior, data, dims, train)


def cell_metrics(q, n: int, seed: int, config: SweepConfig) -> dict:
    """Divergence metrics of a fitted posterior against the config's teacher.

    One shared set of posterior draws (stream path ("tail", n, seed)) serves
    the tail masses and the averaged-density Hellinger; the L2 error uses
    the deterministic Gauss-Hermite predictor.
    """
    teacher = config.teacher.build(config.p)
    rule = config.metric_rule()
    hell, fvals, sigmas, _ = posterior_hellinger_draws(
        q, teacher, config.sigma0, config.tail_samples,
        substream(config.master_seed, "tail", n, seed), rule,
    )
    tail = tuple(tail_masses_from_hellinger(hell, config.epsilons))
    hell_avg = averaged_density_hellinger(
        q, teacher, config.sigma0, config.tail_samples, 0, rule,
        precomputed=(fvals, sigmas),
    )
    l2 = predictor_l2_error(q, teacher, rule)
    sig_sq = posterior_point_summaries(q)["sigma_hat_sq"]
    return {
        "tail": tail,
        "hellinger_avg": hell_avg,
        "l2_error": l2,
        "sigma_hat": None if sig_sq is None else math.sqrt(sig_sq),
    }


def run_single(n: int, seed: int, config: SweepConfig) -> ExperimentRecord:
    """One cell: simulate, fit, measure. Deterministic given (n, seed, config).

    Training divergence yields a failed record with the diagnostic message;
    any other exception is a genuine bug and propagates.
    """
    start = time.perf_counter()
    k_n = sieve_bounds(config.sieve, n).k_n
    try:
        result = cell_fit(n, seed, config)
    except TrainingDivergenceError as exc:
        return ExperimentRecord(
            n=n, seed=seed, k_n=k_n, elbo_final=math.nan, tail=(),
            hellinger_avg=math.nan, l2_error=math.nan, sigma_hat=None,
            runtime_s=time.perf_counter() - start,
            failed=True, failure_reason=str(exc),
        )
    q = result.posterior
    metrics = cell_metrics(q, n, seed, config)
    checkpoint = None
    if config.save_checkpoints and config.outdir is not None:
        ckpt_dir = Path(config.outdir) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        checkpoint = str(ckpt_dir / f"posterior_n{n}_seed{seed}.json")
        save_posterior(q, checkpoint)
    return ExperimentRecord(
        n=n, seed=seed, k_n=k_n,
        elbo_final=float(result.elbo_trace[-1]),
        tail=metrics["tail"],
        hellinger_avg=metrics["hellinger_avg"],
        l2_error=metrics["l2_error"],
        sigma_hat=metrics["sigma_hat"],
        runtime_s=time.perf_counter() - start, checkpoint_path=checkpoint,
    )


def _cell(args: tuple[int, int, SweepConfig]) -> ExperimentRecord:
    return run_single(*args)


def run_sweep(config: SweepConfig) -> SweepResult:
    """All (n, seed) cells, optionally in a process pool, plus rate fits.

    Failed cells do not stop the sweep; they are excluded from medians and
    listed in the result. Records come back sorted by (n, seed) regardless
    of completion order.
    """
    cells = [(n, s, config) for n in config.n_grid for s in config.seeds]
    workers = config.workers
    if workers is None:
        workers = min(len(cells), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_cell, cells))
    else:
        records = [_cell(c) for c in cells]
    records.sort(key=lambda r: (r.n, r.seed))
    failures = [
        {"n": r.n, "seed": r.seed, "reason": r.failure_reason}
        for r in records
        if r.failed
    ]
    ok = [r for r in records if not r.failed]
    estimates = []
    if ok and len({r.n for r in ok}) >= 3:
        estimates = [estimate_delta(ok, eps) for eps in config.epsilons]
    return SweepResult(config=config, records=records, estimates=estimates, failures=failures)


def _median(values: Sequence[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def per_n_medians(records: Sequence[ExperimentRecord]) -> dict[int, dict]:
    """Per-n medians over seeds of every scalar metric; failed cells excluded.

    Tail-mass medians of exactly zero are additionally rendered as the
    string "< 1/(2S)" in the display field, since the Monte Carlo estimate
    only resolves masses down to 1/S.
    """
    out: dict[int, dict] = {}
    for n in sorted({r.n for r in records if not r.failed}):
        group = [r for r in records if r.n == n and not r.failed]
        tails: dict[float, float] = {}
        display: dict[float, str] = {}
        if group and group[0].tail:
            for i, est in enumerate(group[0].tail):
                med = _median([r.tail[i].estimate for r in group])
                tails[est.epsilon] = med
                if med == 0.0:
                    display[est.epsilon] = f"< {1.0 / (2 * est.samples):.3e}"
                else:
                    display[est.epsilon] = f"{med:.6e}"
        entry = {
            "count": len(group),
            "tail_mass": tails,
            "tail_mass_display": display,
            "l2_error": _median([r.l2_error for r in group]),
            "hellinger_avg": _median([r.hellinger_avg for r in group]),
            "elbo_final": _median([r.elbo_final for r in group]),
            "sigma_hat": None,
        }
        sig = [r.sigma_hat for r in group if r.sigma_hat is not None]
        if sig:
            entry["sigma_hat"] = _median(sig)
        out[n] = entry
    return out


def estimate_delta(records: Sequence[ExperimentRecord], epsilon: float) -> RateEstimate:
    """Decay exponent of the median tail mass at one epsilon.

    Medians over seeds per n, zeros censored at 1/(2S), then least squares
    of log median against log n; delta_hat is minus the slope. All-zero
    medians mean the tail vanished below Monte Carlo resolution at every n,
    which is reported as a flag rather than a fabricated exponent.
    """
    ok = [r for r in records if not r.failed]
    by_n: dict[int, list[ExperimentRecord]] = {}
    for r in ok:
        by_n.setdefault(r.n, []).append(r)
    if len(by_n) < 3:
        raise ValueError("rate estimation needs >= 3 distinct n values")
    ns = sorted(by_n)
    medians: list[float] = []
    censored = 0
    for n in ns:
        group = by_n[n]
        ests = [r.tail_at(epsilon) for r in group]
        med = _median([e.estimate for e in ests])
        if med == 0.0:
            med = 1.0 / (2 * ests[0].samples)
            censored += 1
        medians.append(med)
    if censored == len(ns):
        return RateEstimate(
            epsilon=float(epsilon), delta_hat=None, r_squared=None,
            n_min=ns[0], n_max=ns[-1], n_used=len(ns),
            censored_count=censored, consistent_beyond_resolution=True,
        )
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(medians))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_sq = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    return RateEstimate(
        epsilon=float(epsilon), delta_hat=float(-slope), r_squared=r_sq,
        n_min=ns[0], n_max=ns[-1], n_used=len(ns),
        censored_count=censored, consistent_beyond_resolution=False,
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def emit_report(
    records: Sequence[ExperimentRecord],
    estimates: Sequence[RateEstimate],
    outdir: str | Path,
    config: SweepConfig | None = None,
    lemma_suite: dict | None = None,
) -> list[Path]:
    """Write records CSV, summary JSON, and per-figure plot TSVs.

    The CSV is long format, one row per (record, epsilon); with an empty
    epsilon grid it has one row per record and drops the three epsilon
    columns. Failed cells appear only in the summary's failures list, so
    the CSV parses back exactly into the successful records. Floats are
    written with repr and re-read exactly.

    Summary JSON schema (version 1): config (when given), per_n_medians
    keyed by n, rate_estimates, failures, lemma_suite (when given).

    Plot TSVs: tail mass vs n (one column per epsilon), L2 error vs n, and
    sigma_hat vs n when the family estimates the noise scale.
    """
    if not records:
        raise ValueError("records must be non-empty")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("")
    finally:
        if probe.exists():
            probe.unlink()

    written: list[Path] = []
    ok = [r for r in records if not r.failed]
    with_eps = bool(ok and ok[0].tail)

    csv_path = out / "records.csv"
    header = CSV_HEADER.split(",")
    if not with_eps:
        header = [h for h in header if h not in ("eps", "tail_mass", "tail_se")]
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in ok:
            base_front = [str(r.n), str(r.seed), str(r.k_n), _fmt(r.elbo_final)]
            base_back = [
                _fmt(r.hellinger_avg),
                _fmt(r.l2_error),
                _fmt(r.sigma_hat),
                _fmt(r.runtime_s),
            ]
            if with_eps:
                for est in r.tail:
                    writer.writerow(
                        base_front
                        + [_fmt(est.epsilon), _fmt(est.estimate), _fmt(est.standard_error)]
                        + base_back
                    )
            else:
                writer.writerow(base_front + base_back)
    written.append(csv_path)

    medians = per_n_medians(records)
    summary = {
        "version": 1,
        "config": None if config is None else config_to_json_dict(config),
        "per_n_medians": {
            str(n): {
                "count": m["count"],
                "tail_mass": {f"{e:g}": v for e, v in m["tail_mass"].items()},
                "tail_mass_display": {
                    f"{e:g}": v for e, v in m["tail_mass_display"].items()
                },
                "l2_error": m["l2_error"],
                "hellinger_avg": m["hellinger_avg"],
                "elbo_final": m["elbo_final"],
                "sigma_hat": m["sigma_hat"],
            }
            for n, m in medians.items()
        },
        "rate_estimates": [dataclasses.asdict(e) for e in estimates],
        "failures": [
            {"n": r.n, "seed": r.seed, "reason": r.failure_reason}
            for r in records
            if r.failed
        ],
        "lemma_suite": lemma_suite,
    }
    json_path = out / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n")
    written.append(json_path)

    ns = sorted(medians)
    if with_eps:
        eps_grid = [est.epsilon for est in ok[0].tail]
        tsv = out / "plot_tail_mass.tsv"
        with tsv.open("w") as fh:
            fh.write("n\t" + "\t".join(f"tail_mass_eps_{e:g}" for e in eps_grid) + "\n")
            for n in ns:
                row = [str(n)] + [repr(medians[n]["tail_mass"][e]) for e in eps_grid]
                fh.write("\t".join(row) + "\n")
        written.append(tsv)

    tsv = out / "plot_l2_error.tsv"
    with tsv.open("w") as fh:
        fh.write("n\tl2_error\n")
        for n in ns:
            fh.write(f"{n}\t{repr(medians[n]['l2_error'])}\n")
    written.append(tsv)

    if any(medians[n]["sigma_hat"] is not None for n in ns):
        tsv = out / "plot_sigma_hat.tsv"
        with tsv.open("w") as fh:
            fh.write("n\tsigma_hat\n")
            for n in ns:
                fh.write(f"{n}\t{repr(medians[n]['sigma_hat'])}\n")
        written.append(tsv)
    return written


def parse_records_csv(
    path: str | Path, tail_samples: int | None = None
) -> list[ExperimentRecord]:
    """Inverse of the CSV emitted by emit_report (successful records only).

    The CSV stores the binomial standard error rather than the draw count,
    so pass tail_samples to reconstruct records exactly; otherwise the count
    is inverted from the SE where possible. Checkpoint paths and failure
    metadata are not part of the CSV.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    grouped: dict[tuple[int, int], list[dict]] = {}
    order: list[tuple[int, int]] = []
    for row in rows:
        key = (int(row["n"]), int(row["seed"]))
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    records = []
    for key in order:
        group = grouped[key]
        first = group[0]
        tail = tuple(
            TailMassEstimate(
                epsilon=float(r["eps"]),
                estimate=float(r["tail_mass"]),
                standard_error=float(r["tail_se"]),
                samples=tail_samples
                if tail_samples is not None
                else _infer_samples(float(r["tail_mass"]), float(r["tail_se"])),
            )
            for r in group
            if "eps" in r and r.get("eps")
        )
        records.append(
            ExperimentRecord(
                n=key[0], seed=key[1], k_n=int(first["k_n"]),
                elbo_final=float(first["elbo_final"]),
                tail=tail,
                hellinger_avg=float(first["hellinger_avg"]),
                l2_error=float(first["l2_error"]),
                sigma_hat=float(first["sigma_hat"]) if first["sigma_hat"] else None,
                runtime_s=float(first["runtime_s"]),
            )
        )
    return records


def _infer_samples(frac: float, se: float) -> int:
    # The CSV stores the binomial SE, not S itself; invert se^2 = p(1-p)/S.
    # Degenerate fractions (0 or 1) have zero SE, so fall back to a sentinel.
    if se <= 0.0 or frac <= 0.0 or frac >= 1.0:
        return 10**9
    return max(100, round(frac * (1.0 - frac) / (se * se)))


_PRIOR_KEYS = {
    "fixed_gaussian": {"zeta"},
    "scaled_gaussian": {"zeta", "u"},
    "inverse_gamma_sigma": {"zeta", "alpha", "lam"},
    "rho_gaussian": {"zeta", "eta"},
}

_TRAIN_KEYS = {
    "iters", "mc_samples", "step_size", "adam_betas", "adam_eps", "seed",
    "convergence_window", "convergence_tol", "likelihood_weight", "batch_size",
    "checkpoint_every", "checkpoint_path",
}

_TOP_KEYS = {
    "version", "n_grid", "seeds", "prior", "sieve", "teacher", "sigma0", "p",
    "train", "epsilons", "tail_samples", "metric_nodes_per_axis",
    "master_seed", "outdir", "workers", "save_checkpoints",
}


def _reject_unknown(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)}")


def _prior_from_dict(doc: dict) -> PriorSpec:
    if "variant" not in doc:
        raise ValueError("prior requires a 'variant' key")
    variant = doc["variant"]
    if variant not in _PRIOR_KEYS:
        raise ValueError(f"unknown prior variant {variant!r}")
    _reject_unknown(doc, _PRIOR_KEYS[variant] | {"variant"}, "prior")
    kwargs = {k: v for k, v in doc.items() if k != "variant"}
    return getattr(PriorSpec, variant)(**kwargs)


def _prior_to_dict(prior: PriorSpec) -> dict:
    doc: dict = {"variant": prior.variant}
    for key in _PRIOR_KEYS[prior.variant]:
        doc[key] = getattr(prior, key)
    return doc


def config_from_json_dict(doc: dict) -> SweepConfig:
    """Build a SweepConfig from a parsed JSON document; unknown keys error."""
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    if doc.get("version") != CONFIG_JSON_VERSION:
        raise ValueError(
            f"config version must be {CONFIG_JSON_VERSION}, got {doc.get('version')!r}"
        )
    _reject_unknown(doc, _TOP_KEYS, "config")
    for key in ("n_grid", "seeds", "prior"):
        if key not in doc:
            raise ValueError(f"config requires {key!r}")
    kwargs: dict = {
        "n_grid": tuple(doc["n_grid"]),
        "seeds": tuple(doc["seeds"]),
        "prior": _prior_from_dict(doc["prior"]),
    }
    if "sieve" in doc:
        _reject_unknown(doc["sieve"], {"a", "b"}, "sieve")
        kwargs["sieve"] = SieveSpec(**doc["sieve"])
    if "teacher" in doc:
        _reject_unknown(doc["teacher"], {"k_star", "scale", "seed"}, "teacher")
        kwargs["teacher"] = TeacherSpec(**doc["teacher"])
    if "train" in doc:
        _reject_unknown(doc["train"], _TRAIN_KEYS, "train")
        train = dict(doc["train"])
        if "adam_betas" in train:
            train["adam_betas"] = tuple(train["adam_betas"])
        kwargs["train"] = TrainConfig(**train)
    if "epsilons" in doc:
        kwargs["epsilons"] = tuple(doc["epsilons"])
    for key in (
        "sigma0", "p", "tail_samples", "metric_nodes_per_axis",
        "master_seed", "outdir", "workers", "save_checkpoints",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    return SweepConfig(**kwargs)


def config_to_json_dict(config: SweepConfig) -> dict:
    """Inverse of config_from_json_dict; round-trips exactly."""
    train = dataclasses.asdict(config.train)
    train["adam_betas"] = list(train["adam_betas"])
    if not isinstance(train["seed"], int):
        raise ValueError("only integer train seeds serialize to JSON")
    return {
        "version": CONFIG_JSON_VERSION,
        "n_grid": list(config.n_grid),
        "seeds": list(config.seeds),
        "prior": _prior_to_dict(config.prior),
        "sieve": {"a": config.sieve.a, "b": config.sieve.b},
        "teacher": dataclasses.asdict(config.teacher),
        "sigma0": config.sigma0,
        "p": config.p,
        "train": train,
        "epsilons": list(config.epsilons),
        "tail_samples": config.tail_samples,
        "metric_nodes_per_axis": config.metric_nodes_per_axis,
        "master_seed": config.master_seed,
        "outdir": config.outdir,
        "workers": config.workers,
        "save_checkpoints": config.save_checkpoints,
    }


def load_config(path: str | Path) -> SweepConfig:
    return config_from_json_dict(json.loads(Path(path).read_text()))
