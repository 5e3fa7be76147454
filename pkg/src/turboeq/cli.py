"""Command-line entry point: ``turboeq <command> [--config FILE] [--seed N] [--out DIR] [--threads N]``.

On success a JSON summary is printed to stdout and the exit status is 0. Invalid
configurations exit with status 3 and a JSON error object on stderr; argument
errors exit with status 2 (argparse usage).
"""

from __future__ import annotations

import os

# Single-threaded BLAS keeps floating-point reductions in a fixed order, which the
# bit-identical re-run guarantee relies on. Parallelism comes from worker processes.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

THREADS_ENV = "TURBOEQ_THREADS"
COMMANDS = ("dataset", "train", "exit-chart", "ber", "sweep", "rate", "optimize-code", "verify", "schema")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment configuration (JSON)")
    common.add_argument("--seed", type=int, help="override the configuration seed")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker processes for sweep points (default: ${THREADS_ENV} or 1)",
    )
    p = argparse.ArgumentParser(prog="turboeq", description="Neural turbo equalization experiments")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "dataset": "simulate and store training datasets",
        "train": "train the configured neural equalizers and save checkpoints",
        "exit-chart": "measure the turbo detector EXIT curve and its cubic fit",
        "ber": "post-LDPC BER per launch power and receiver",
        "sweep": "pre-FEC BER and Q factor per launch power and equalizer",
        "rate": "achievable spectral efficiency from a BER run over a code family",
        "optimize-code": "optimize LDPC degrees on the measured detector curve",
        "verify": "run the analytic oracle checks",
        "schema": "print the configuration JSON schema",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def _load(args):
    from .config import ExperimentConfig, load_config

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _run(args) -> dict:
    from . import harness

    if args.command == "verify":
        from .oracles import run_all

        results = run_all()
        return {
            "ok": all(r.passed for r in results),
            "checks": [{"name": r.name, "passed": r.passed, "value": r.value, "tolerance": r.tolerance} for r in results],
        }
    if args.command == "schema":
        from .config import json_schema

        return json_schema()

    cfg = _load(args)
    threads = _threads(args)
    out = args.out
    base = {"command": args.command, "digest": cfg.digest(), "seed": cfg.seed}

    if args.command == "dataset":
        return {**base, "datasets": harness.generate_dataset(cfg, out_dir=out)}

    if args.command == "train":
        from .neural import save_model

        models = []
        for i, p in enumerate(cfg.link.powers_dBm):
            for kind in cfg.equalizers:
                if kind == "LE":
                    continue
                model, hist = harness.train_equalizer(cfg, kind, i)
                path = Path(out) / "models" / f"{kind}_p{i}.teqm"
                path.parent.mkdir(parents=True, exist_ok=True)
                save_model(model, path, {"power_dBm": p, "config_digest": cfg.digest(), "best_epoch": hist.best_epoch})
                models.append(
                    {"kind": kind, "power_dBm": p, "path": str(path), "best_epoch": hist.best_epoch,
                     "epochs_run": hist.epochs_run, "best_val_loss": min(hist.val_loss)}
                )
        return {**base, "models": models}

    if args.command == "sweep":
        rows = harness.run_qfactor_sweep(cfg, threads)
        return {**base, **harness.write_results(rows, out, "sweep", cfg)}

    if args.command == "ber":
        rows = harness.run_ber_experiment(cfg, threads)
        rows += harness.bch_rows(rows)
        return {**base, **harness.write_results(rows, out, "ber", cfg)}

    if args.command == "rate":
        ber_rows = harness.run_ber_experiment(cfg, threads)
        rows = ber_rows + harness.bch_rows(ber_rows) + harness.achievable_rate(cfg, ber_rows)
        return {**base, **harness.write_results(rows, out, "rate", cfg)}

    if args.command == "exit-chart":
        curve, _ = harness.measure_exit(cfg)
        Path(out).mkdir(parents=True, exist_ok=True)
        curve.to_csv(Path(out) / "exit_curve.csv")
        rows = harness.exit_rows(cfg, curve)
        return {**base, **harness.write_results(rows, out, "exit", cfg), "curve": str(Path(out) / "exit_curve.csv")}

    if args.command == "optimize-code":
        rows, res, curve = harness.optimize_code(cfg)
        Path(out).mkdir(parents=True, exist_ok=True)
        curve.to_csv(Path(out) / "exit_curve.csv")
        dist = res.dist.to_dict() if res.dist is not None else None
        (Path(out) / "optimized_code.json").write_text(json.dumps(dist, indent=1))
        return {**base, **harness.write_results(rows, out, "optimize", cfg), "rate": res.rate,
                "feasible": res.feasible, "verified": res.verified, "distribution": dist}
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    from pydantic import ValidationError

    try:
        summary = _run(args)
    except ValidationError as exc:
        err = {"error": "invalid configuration", "details": json.loads(exc.json(include_url=False))}
        print(json.dumps(err, indent=1), file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "details": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=1, default=float))
    if args.command == "verify" and not summary["ok"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
