"""Command-line entry point: gen-data, train, quantize, eval, infer.

Exit codes: 0 success, 1 usage/validation error, 2 I/O or data error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from fcdsae import dataset, network, quantized, trainer
from fcdsae.errors import DomainError, FrameError, ParseError
from fcdsae.quantized import QFormat
from fcdsae.sparsity import SparsityConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="fcdsae", description=__doc__)
    parser.add_argument("--config", help="JSON file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic sensor CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the classifier on a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--psi", type=float, default=1e-3)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-report")

    p = sub.add_parser("quantize", help="quantize a trained model file")
    p.add_argument("--model", required=True)
    p.add_argument("--format", default="Q8.8", help="compute format, e.g. Q8.8")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate a float or quantized model")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--qmodel")
    p.add_argument("--data", required=True)
    p.add_argument("--out-confusion", help="write the confusion matrix CSV here")

    p = sub.add_parser("infer", help="single-frame fixed-point prediction")
    p.add_argument("--qmodel", required=True)
    p.add_argument("--row", required=True,
                   help="comma-separated 10 raw feature values")
    return parser


def _repro_line(args) -> str:
    keys = sorted(k for k in vars(args) if k not in ("command", "config"))
    params = " ".join(f"{k}={getattr(args, k)}" for k in keys)
    return f"# reproducibility: command={args.command} {params}"


def _cmd_gen_data(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    records = dataset.generate_synthetic(args.n, args.seed)
    dataset.write_csv(records, args.out)
    labels = [dataset.label_for_hfr(r.hfr) for r in records]
    counts = np.bincount(labels, minlength=3)
    print(f"wrote {len(records)} records to {args.out}")
    print("class distribution: " +
          " ".join(f"{c}:{counts[c]} ({counts[c] / len(records):.1%})"
                   for c in range(3)))
    print(_repro_line(args))
    return EXIT_OK


def _load_examples(path):
    records = dataset.parse_csv(path)
    if not records:
        raise ParseError(f"{path}: no data rows")
    return [dataset.label(r) for r in records]


def _cmd_train(args) -> int:
    cfg = trainer.TrainConfig(
        lr=args.lr, batch_size=args.batch, max_epochs=args.epochs,
        seed=args.seed, sparsity=SparsityConfig(xi=args.xi, psi=args.psi))
    examples = _load_examples(args.data)
    data = dataset.split(examples, seed=args.seed)
    params, std, report = trainer.train(cfg, data)
    network.save_model(params, args.out_model, standardizer=std)
    if args.out_report:
        with open(args.out_report, "w") as fh:
            fh.write(report.format_text())
            fh.write(_repro_line(args) + "\n")
    print(report.final_metrics.format_table())
    print(f"best epoch: {report.best_epoch + 1} of {report.epochs_run}")
    print(f"model written to {args.out_model}")
    print(_repro_line(args))
    return EXIT_OK


def _cmd_quantize(args) -> int:
    fmt = QFormat.parse(args.format)
    params, std = network.load_model(args.model)
    if std is None:
        raise ParseError(f"{args.model}: model file has no standardizer records")
    qm = quantized.quantize_model(params, std, fmt)
    quantized.save_qmodel(qm, args.out)
    print(f"quantized to {fmt}; saturated values: {qm.saturation_count}")
    print(f"quantized model written to {args.out}")
    print(_repro_line(args))
    return EXIT_OK


def _cmd_eval(args) -> int:
    examples = _load_examples(args.data)
    from fcdsae.metrics import confusion, metric_block

    if args.model:
        params, std = network.load_model(args.model)
        if std is None:
            raise ParseError(f"{args.model}: model file has no standardizer records")
        x = std.transform_matrix(examples)
        preds = trainer.predict_batch(params, x)
        trues = [e.class_label for e in examples]
        cm = confusion(trues, list(preds))
        block = metric_block(cm)
        print(block.format_table())
    else:
        qm = quantized.load_qmodel(args.qmodel)
        result = quantized.evaluate_quantized(qm, examples)
        block = result.metrics
        cm = confusion([e.class_label for e in examples], result.predictions)
        print(block.format_table())
        print(f"quantized accuracy: {block.accuracy:.4f}")
    if args.out_confusion:
        with open(args.out_confusion, "w") as fh:
            fh.write(cm.to_csv())
    print(_repro_line(args))
    return EXIT_OK


def _cmd_infer(args) -> int:
    parts = args.row.split(",")
    if len(parts) != 10:
        raise UsageError(f"--row needs exactly 10 values, got {len(parts)}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"--row contains a non-numeric value: {args.row!r}")
    qm = quantized.load_qmodel(args.qmodel)
    frame = quantized.frame_from_features(values)
    outs, pred = quantized.q_forward(qm, frame)
    print(f"class: {pred}")
    print("output words: " + " ".join(str(w) for w in outs))
    print(_repro_line(args))
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "quantize": _cmd_quantize,
    "eval": _cmd_eval,
    "infer": _cmd_infer,
}


def _apply_config_defaults(argv: list[str]) -> list[str]:
    """--config FILE supplies values for flags not given explicitly."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError:
        raise UsageError("--config requires a file path")
    try:
        with open(path) as fh:
            conf = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad config file {path}: {exc}")
    out = [a for j, a in enumerate(argv) if j not in (i, i + 1)]
    for key, value in conf.items():
        flag = "--" + str(key).replace("_", "-")
        if flag not in out:
            out += [flag, str(value)]
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FrameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
