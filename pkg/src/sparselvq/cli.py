"""Command-line entry point: synth | train | path | eval.

Every training run writes its manifest (all flags, resolved) into the
output directory before any training happens; re-running from that
manifest reproduces the metrics byte for byte on the same platform.
Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    DatasetError,
    SplitSpec,
    l2_normalize,
    load_csv,
    save_csv,
    split,
    synth_sparse,
)
from .metric import DimensionMismatch
from .trainer import (
    LVQModel,
    NonFiniteUpdate,
    PathSchedule,
    TrainConfig,
    confusion_matrix,
    evaluate,
    init_model,
    load_model,
    run_path,
    save_model,
    train,
)

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselvq",
        description="Prototype classifiers with learned metrics and sparse relevance profiles.",
    )
    parser.add_argument("--version", action="version", version=f"sparselvq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic sparse-relevance dataset")
    p_synth.add_argument("--dims", type=int, required=True, help="total feature count")
    p_synth.add_argument("--informative", type=int, required=True,
                         help="leading dimensions that separate the classes")
    p_synth.add_argument("--classes", type=int, required=True)
    p_synth.add_argument("--per-class", type=int, required=True)
    p_synth.add_argument("--noise-sigma", type=float, default=1.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", default="synthetic.csv", help="CSV output path")
    p_synth.set_defaults(func=cmd_synth)

    for name in ("train", "path"):
        p = sub.add_parser(name, help=f"{name} a model and write a run directory")
        p.add_argument("--manifest", help="replay a previous run from its manifest")
        p.add_argument("--data", help="input CSV")
        p.add_argument("--label-col", default="label")
        p.add_argument("--out", help="run directory (required unless replaying)")
        p.add_argument("--model", choices=("glvq", "grlvq", "gmlvq"), default="grlvq")
        p.add_argument("--epochs", type=int, default=100,
                       help="training epochs (for `path`: the unregularized pretraining phase)")
        p.add_argument("--rate-proto", type=float, default=1e-2)
        p.add_argument("--rate-metric", type=float, default=1e-3)
        p.add_argument("--rate-decay", type=float, default=1e-3)
        p.add_argument("--alpha", type=float, default=5.0, help="l1 smoothing sharpness")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--transfer", choices=("identity", "sigmoid"), default="identity")
        p.add_argument("--sigmoid-slope", type=float, default=1.0)
        p.add_argument("--protos-per-class", type=int, default=1)
        p.add_argument("--omega-rows", type=int, default=None,
                       help="projection rows for gmlvq (default: square)")
        p.add_argument("--sparsity-threshold", type=float, default=1e-4)
        p.add_argument("--train-fraction", type=float, default=0.7)
        p.add_argument("--no-stratify", action="store_true")
        p.add_argument("--l2-normalize", action="store_true")
        if name == "path":
            p.add_argument("--reg-start", type=float, default=0.0)
            p.add_argument("--reg-end", type=float, default=1.0)
            p.add_argument("--reg-steps", type=int, default=20)
            p.add_argument("--epochs-per-step", type=int, default=10)
            p.set_defaults(func=cmd_path)
        else:
            p.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p_eval.add_argument("--model", required=True, help="model JSON")
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--label-col", default="label")
    p_eval.add_argument("--out", default="eval.json")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def cmd_synth(args) -> int:
    data = synth_sparse(args.dims, args.informative, args.classes, args.per_class,
                        args.noise_sigma, args.seed)
    out = Path(args.out)
    sidecar = save_csv(data, out, extra_meta={
        "generator": "synth_sparse",
        "informative_dims": list(range(args.informative)),
        "noise_sigma": args.noise_sigma,
        "seed": args.seed,
    })
    print(f"wrote {out} ({data.n_samples} samples, {data.n_features} dims, "
          f"{data.n_classes} classes) and {sidecar}")
    return 0


def _manifest_from_args(args, command: str) -> dict:
    if args.data is None:
        raise UsageError("--data is required (or use --manifest)")
    if args.out is None:
        raise UsageError("--out is required")
    if args.model == "gmlvq" and args.omega_rows is not None and args.omega_rows < 1:
        raise UsageError(f"--omega-rows must be >= 1, got {args.omega_rows}")
    transfer = {"kind": args.transfer,
                "slope": args.sigmoid_slope if args.transfer == "sigmoid" else 1.0}
    config = {
        "model_kind": args.model,
        "epochs": args.epochs,
        "rate_proto": args.rate_proto,
        "rate_metric": args.rate_metric,
        "rate_decay": args.rate_decay,
        "alpha": args.alpha,
        "seed": args.seed,
        "transfer": transfer,
        "omega_rows": args.omega_rows if args.omega_rows is not None else 0,
        "protos_per_class": args.protos_per_class,
        "sparsity_threshold": args.sparsity_threshold,
    }
    schedule = None
    if command == "path":
        schedule = {
            "reg_weight_start": args.reg_start,
            "reg_weight_end": args.reg_end,
            "steps": args.reg_steps,
            "epochs_per_step": args.epochs_per_step,
        }
    return {
        "tool": "sparselvq",
        "version": __version__,
        "command": command,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "data": str(args.data),
        "label_column": args.label_col,
        "l2_normalize": bool(args.l2_normalize),
        "split": {
            "train_fraction": args.train_fraction,
            "stratified": not args.no_stratify,
            "seed": args.seed,
        },
        "config": config,
        "schedule": schedule,
        "out": str(args.out),
    }


def _manifest_from_file(args, command: str) -> dict:
    manifest = json.loads(Path(args.manifest).read_text())
    if manifest.get("command") != command:
        raise UsageError(
            f"manifest was written by `{manifest.get('command')}`, not `{command}`"
        )
    if args.out is not None:
        manifest["out"] = str(args.out)
    manifest["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return manifest


def _write_profile_csv(path: Path, model: LVQModel, dim_names) -> None:
    prof = model.profile()
    names = dim_names or [f"f{i}" for i in range(prof.size)]
    lines = ["dim_index,dim_name,lambda,lambda_sq"]
    for i, (name, lam) in enumerate(zip(names, prof)):
        lines.append(f"{i},{name},{_fmt(lam)},{_fmt(lam * lam)}")
    path.write_text("\n".join(lines) + "\n")


def _execute_run(manifest: dict) -> int:
    data = load_csv(manifest["data"], manifest["label_column"])
    if manifest["l2_normalize"]:
        data = l2_normalize(data)
    train_data, test_data = split(data, SplitSpec(**manifest["split"]))
    config = TrainConfig.from_json_dict(manifest["config"])
    schedule = PathSchedule(**manifest["schedule"]) if manifest["schedule"] else None

    outdir = Path(manifest["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    rng = np.random.default_rng(config.seed)
    model = init_model(train_data, config, rng)
    logger.info("training %s on %d samples (%d held out), %d features",
                config.model_kind, train_data.n_samples, test_data.n_samples,
                data.n_features)
    metrics = train(model, train_data, config, 0.0, test_data=test_data, rng=rng)

    if schedule is not None:
        path_metrics, snapshots = run_path(
            model, train_data, config, schedule,
            test_data=test_data, rng=rng, t0=config.epochs,
        )
        metrics.extend(path_metrics)
        rows = ["reg_weight,train_accuracy,test_accuracy,sparsity"]
        for k, snap in enumerate(snapshots):
            save_model(snap, outdir / f"model_step_{k:02d}.json")
            m = path_metrics[(k + 1) * schedule.epochs_per_step - 1]
            rows.append(f"{_fmt(m.reg_weight)},{_fmt(m.train_accuracy)},"
                        f"{_fmt(m.test_accuracy)},{_fmt(m.sparsity)}")
            logger.info("path step %d: reg_weight %.4g, test acc %.4f, sparsity %.3f",
                        k, m.reg_weight, m.test_accuracy, m.sparsity)
        (outdir / "path.csv").write_text("\n".join(rows) + "\n")

    (outdir / "metrics.jsonl").write_text("".join(m.to_json() + "\n" for m in metrics))
    save_model(model, outdir / "model.json")
    _write_profile_csv(outdir / "profile.csv", model, train_data.dim_names)

    final = metrics[-1]
    print(f"run complete: {outdir}")
    print(f"final train accuracy {final.train_accuracy:.4f}, "
          f"test accuracy {final.test_accuracy:.4f}, sparsity {final.sparsity:.4f}")
    return 0


def cmd_train(args) -> int:
    manifest = (_manifest_from_file(args, "train") if args.manifest
                else _manifest_from_args(args, "train"))
    return _execute_run(manifest)


def cmd_path(args) -> int:
    manifest = (_manifest_from_file(args, "path") if args.manifest
                else _manifest_from_args(args, "path"))
    return _execute_run(manifest)


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, args.label_col)
    if data.n_features != model.n_features:
        print(f"error: model expects {model.n_features} features but "
              f"{args.data} has {data.n_features}", file=sys.stderr)
        return 1
    acc = evaluate(model, data)
    conf = confusion_matrix(model, data)
    names = model.label_names or [str(c) for c in range(conf.shape[0])]
    print(f"accuracy {acc:.4f} on {data.n_samples} samples")
    width = max(max(len(str(n)) for n in names), len(str(int(conf.max())))) + 2
    print("confusion (rows = true, cols = predicted):")
    print(" " * width + "".join(f"{n:>{width}}" for n in names))
    for name, row in zip(names, conf):
        print(f"{name:>{width}}" + "".join(f"{v:>{width}}" for v in row))
    Path(args.out).write_text(json.dumps({
        "model": str(args.model),
        "data": str(args.data),
        "n_samples": data.n_samples,
        "accuracy": acc,
        "confusion": conf.tolist(),
        "label_names": names,
    }, indent=2) + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, DimensionMismatch, NonFiniteUpdate, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
