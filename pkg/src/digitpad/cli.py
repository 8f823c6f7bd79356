"""Command-line interface: train, eval, augment, synth, replay, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import augment as augment_mod
from . import bilstm, dataset, report
from .config import load_config
from .errors import DigitpadError
from .online import StreamClassifier, replay as replay_stream
from .session import event_to_message


def _parse_augment_mode(value: str):
    """'reversed' or 'rotated=+90,-90' -> (mode, angles)."""
    if value == "reversed":
        return "reversed", ()
    if value.startswith("rotated="):
        try:
            angles = tuple(float(a) for a in value[len("rotated="):].split(",") if a)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad rotation angles in {value!r}")
        if not angles:
            raise argparse.ArgumentTypeError("rotated mode needs at least one angle")
        return "rotated", angles
    raise argparse.ArgumentTypeError(
        f"mode must be 'reversed' or 'rotated=<deg>,<deg>,...', got {value!r}")


def cmd_train(args) -> int:
    ds = dataset.load(args.data, compensate_on_load=args.compensate)
    print(f"loaded {len(ds)} sequences from {args.data}")
    if args.augment:
        mode, angles = args.augment
        ds = augment_mod.augment_dataset(ds, mode, angles)
        print(f"augmented ({mode}{list(angles) if angles else ''}) -> {len(ds)} sequences")
    train_ds, test_ds = dataset.split(ds, dataset.SplitConfig(
        train_fraction=args.train_fraction, seed=args.seed))
    print(f"split: {len(train_ds)} train / {len(test_ds)} test")

    cfg = bilstm.TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                             batch_size=args.batch_size, seed=args.seed,
                             hidden=args.hidden, features=args.features,
                             log_every=args.log_every)
    model, history = bilstm.train(train_ds, test_ds, cfg)
    accuracy, cm = bilstm.evaluate(model, test_ds)
    bilstm.save(model, args.out)
    print(f"model saved to {args.out} ({model.parameter_count()} parameters)")
    print(f"test accuracy: {accuracy:.6f}")

    report_dir = Path(args.report_dir) if args.report_dir else Path(args.out).resolve().parent
    created = report.write_report(report_dir, history=history, cm=cm)
    for p in created:
        print(f"report: {p}")
    if args.export_test:
        dataset.export(test_ds, args.export_test)
        print(f"test split exported to {args.export_test}")
    return 0


def cmd_eval(args) -> int:
    model = bilstm.load(args.model)
    ds = dataset.load(args.data)
    accuracy, cm = bilstm.evaluate(model, ds)
    print(f"accuracy: {accuracy:.6f} over {len(ds)} sequences")
    if args.report_dir:
        for p in report.write_report(args.report_dir, cm=cm):
            print(f"report: {p}")
    else:
        report.write_confusion_csv(cm, args.confusion_out)
        print(f"confusion matrix written to {args.confusion_out}")
    return 0


def cmd_augment(args) -> int:
    ds = dataset.load(args.input)
    mode, angles = args.mode
    out_ds = augment_mod.augment_dataset(ds, mode, angles)
    dataset.export(out_ds, args.output)
    print(f"{len(ds)} sequences -> {len(out_ds)} augmented sequences at {args.output}")
    return 0


def cmd_synth(args) -> int:
    ds = dataset.make_synthetic_dataset(args.per_class, args.users, np.random.default_rng(args.seed))
    dataset.export(ds, args.out)
    counts = ds.class_counts()
    print(f"synthesized {len(ds)} sequences ({args.users} users, "
          f"{counts[0]} per digit) at {args.out}")
    return 0


def cmd_replay(args) -> int:
    config = load_config(args.config)
    model = bilstm.load(args.model)
    frames = dataset.read_stream_csv(args.stream)
    sc = StreamClassifier(model, thresholds=config.thresholds,
                          baseline_window=config.baseline_window,
                          capture_window=config.capture_window,
                          confidence_threshold=config.confidence_threshold)
    events = replay_stream(sc, frames)
    for event in events:
        if event.kind == "touch_started" and not args.all:
            continue
        print(json.dumps(event_to_message(event)))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    config = load_config(args.config)
    if args.port:
        config.port = args.port
    static = args.static if args.static else _default_static_dir()
    serve(config, static_dir=static)
    return 0


def _default_static_dir():
    candidate = Path.cwd() / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="digitpad",
                                     description="digit recognition from touchpad wrench streams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier on a dataset directory")
    p.add_argument("--data", required=True, help="dataset root (canonical layout)")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--augment", type=_parse_augment_mode, default=None,
                   metavar="reversed|rotated=+90,-90")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--hidden", type=int, default=23)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--features", choices=("wrench", "wrench+torque"), default="wrench")
    p.add_argument("--compensate", action="store_true",
                   help="apply baseline compensation while loading")
    p.add_argument("--report-dir", default=None,
                   help="where to write history/confusion CSVs and figures")
    p.add_argument("--export-test", default=None,
                   help="also export the held-out test split to this directory")
    p.add_argument("--log-every", type=int, default=25)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report-dir", default=None)
    p.add_argument("--confusion-out", default="confusion.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("augment", help="expand a dataset with reversed or rotated copies")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--mode", type=_parse_augment_mode, required=True,
                   metavar="reversed|rotated=+90,-90")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--users", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("replay", help="run the streaming recognizer over a recorded stream")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", required=True, help="continuous stream CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--all", action="store_true", help="also print touch_started events")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the WebSocket session service")
    p.add_argument("--config", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static", default=None, help="directory with the built UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DigitpadError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
