"""Command-line entry points.

Subcommands: simulate, fit, metrics, sweep, verify, report. Every
subcommand accepts --config (a versioned JSON sweep configuration) and
--seed (overrides the config's master seed). Exit codes: 0 on success,
1 for usage or configuration errors, 2 for numerical failures (training
divergence, failed sweep cells, failed lemma checks).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .elbo_trainer import TrainingDivergenceError
from .experiment_harness import (
    SweepConfig,
    cell_dataset,
    cell_fit,
    cell_metrics,
    emit_report,
    estimate_delta,
    load_config,
    parse_records_csv,
    per_n_medians,
    run_sweep,
)
from .lemma_oracle import default_lemma_suite, format_suite_table, suite_to_json_dict
from .meanfield_vi import load_posterior, save_posterior

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the documented contract
    # reserves 2 for numerical failures, so remap to 1.
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vbnnlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help_text: str, config_required: bool = True) -> _Parser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=config_required, help="sweep config JSON path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        return p

    p = add("simulate", "draw one cell's dataset and write it as JSON")
    p.add_argument("--n", type=int, default=None, help="sample size (default: first grid value)")
    p.add_argument("--cell-seed", type=int, default=None, help="cell seed (default: first)")
    p.add_argument("--out", default="dataset.json", help="output path")

    p = add("fit", "fit one cell's variational posterior and save it")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--cell-seed", type=int, default=None)
    p.add_argument("--out", default="posterior.json", help="posterior output path")

    p = add("metrics", "evaluate a saved posterior against the config's teacher")
    p.add_argument("--posterior", required=True, help="posterior JSON path")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--cell-seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write metrics JSON here instead of stdout")

    p = add("sweep", "run the full (n, seed) grid and emit the report")
    p.add_argument("--outdir", default=None, help="report directory (overrides config)")
    p.add_argument("--workers", type=int, default=None, help="process count override")

    p = add("verify", "run the lemma verification suite", config_required=False)
    p.add_argument("--out", default=None, help="write the suite report JSON here")
    p.add_argument("--serial", action="store_true", help="run checks in one process")

    p = add("report", "re-aggregate a records CSV into summary and plot data")
    p.add_argument("--records", required=True, help="records CSV path")
    p.add_argument("--outdir", required=True, help="report directory")
    return parser


def _load(args: argparse.Namespace) -> SweepConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    return config


def _cell_args(args: argparse.Namespace, config: SweepConfig) -> tuple[int, int]:
    n = args.n if args.n is not None else config.n_grid[0]
    seed = args.cell_seed if args.cell_seed is not None else config.seeds[0]
    return n, seed


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    n, seed = _cell_args(args, config)
    data = cell_dataset(n, seed, config)
    doc = {
        "version": 1,
        "n": n,
        "seed": seed,
        "p": config.p,
        "sigma0": config.sigma0,
        "xs": data.xs.tolist(),
        "ys": data.ys.tolist(),
    }
    Path(args.out).write_text(json.dumps(doc) + "\n")
    print(f"wrote {args.out} (n={n}, seed={seed})")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    config = _load(args)
    n, seed = _cell_args(args, config)
    result = cell_fit(n, seed, config)
    save_posterior(result.posterior, args.out)
    print(
        f"wrote {args.out} (n={n}, seed={seed}, iterations={result.iterations}, "
        f"elbo={result.elbo_trace[-1]:.4f}, converged={result.converged})"
    )
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    config = _load(args)
    n, seed = _cell_args(args, config)
    q = load_posterior(args.posterior)
    metrics = cell_metrics(q, n, seed, config)
    doc = {
        "n": n,
        "seed": seed,
        "tail_mass": [
            {"epsilon": t.epsilon, "estimate": t.estimate, "se": t.standard_error}
            for t in metrics["tail"]
        ],
        "hellinger_avg": metrics["hellinger_avg"],
        "l2_error": metrics["l2_error"],
        "sigma_hat": metrics["sigma_hat"],
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _print_medians(records) -> None:
    medians = per_n_medians(records)
    for n in sorted(medians):
        m = medians[n]
        tails = "  ".join(
            f"tail@{eps:g}={m['tail_mass_display'][eps]}" for eps in sorted(m["tail_mass"])
        )
        sig = "" if m["sigma_hat"] is None else f"  sigma_hat={m['sigma_hat']:.4f}"
        print(f"n={n:>6}  {tails}  l2={m['l2_error']:.3e}{sig}")


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    if args.workers is not None:
        config = dataclasses.replace(config, workers=args.workers)
    outdir = args.outdir or config.outdir
    if outdir is None:
        print("vbnnlab sweep: error: no output directory (set --outdir or config outdir)",
              file=sys.stderr)
        return 1
    config = dataclasses.replace(config, outdir=str(outdir))
    result = run_sweep(config)
    files = emit_report(result.records, result.estimates, outdir, config=config)
    _print_medians(result.records)
    for est in result.estimates:
        if est.consistent_beyond_resolution:
            print(f"eps={est.epsilon:g}: tail mass below MC resolution at every n")
        else:
            print(
                f"eps={est.epsilon:g}: delta_hat={est.delta_hat:.3f} "
                f"(r^2={est.r_squared:.3f}, n in [{est.n_min}, {est.n_max}])"
            )
    print("wrote " + ", ".join(str(f) for f in files))
    if result.failures:
        print(f"{len(result.failures)} cell(s) failed; see summary.json", file=sys.stderr)
        return 2
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.seed is not None:
        seed = args.seed
    elif args.config is not None:
        seed = load_config(args.config).master_seed
    else:
        seed = 0
    reports = default_lemma_suite(seed=seed, parallel=not args.serial)
    print(format_suite_table(reports))
    doc = suite_to_json_dict(reports)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {args.out}")
    if not doc["all_pass"]:
        print("lemma suite FAILED", file=sys.stderr)
        return 2
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config = _load(args)
    records = parse_records_csv(args.records, tail_samples=config.tail_samples)
    if not records:
        print("vbnnlab report: error: records CSV is empty", file=sys.stderr)
        return 1
    estimates = []
    if len({r.n for r in records}) >= 3 and records[0].tail:
        estimates = [estimate_delta(records, eps) for eps in config.epsilons]
    files = emit_report(records, estimates, args.outdir, config=config)
    _print_medians(records)
    print("wrote " + ", ".join(str(f) for f in files))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "metrics": _cmd_metrics,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except TrainingDivergenceError as exc:
        print(f"vbnnlab: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"vbnnlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
