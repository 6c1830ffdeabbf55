"""Command-line entry points.

Subcommands::

    tnn train    --config <path>
    tnn eval     --checkpoint <path> --dataset <dir> [--config <path>]
    tnn spheres  --config <path>
    tnn diagnose --checkpoint <path> [--out <dir>] [--cap <entries>]

Relative dataset directories resolve against the ``TNN_DATA_ROOT``
environment variable.  Exit codes: 0 success, 1 usage error, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import sys

from .tensor import MATERIALIZE_CAP

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(USAGE_EXIT)


def build_parser() -> _Parser:
    parser = _Parser(prog="tnn", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="train a network from a config file")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--no-figures", action="store_true",
                         help="skip PNG rendering")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", required=True,
                        help="dataset directory (overrides the config)")
    p_eval.add_argument("--config", default=None,
                        help="config path; defaults to the checkpoint sidecar")

    p_spheres = sub.add_parser("spheres", help="run the synthetic shells experiment")
    p_spheres.add_argument("--config", required=True)
    p_spheres.add_argument("--no-figures", action="store_true")

    p_diag = sub.add_parser("diagnose", help="spectral stability report")
    p_diag.add_argument("--checkpoint", required=True)
    p_diag.add_argument("--out", default=None, help="directory for CSV/PNG output")
    p_diag.add_argument("--cap", type=int, default=MATERIALIZE_CAP,
                        help="materialization cap in matrix entries")
    p_diag.add_argument("--no-figures", action="store_true")
    return parser


def _cmd_train(args) -> int:
    from .config import load_config
    from .training import train

    cfg = load_config(args.config)
    result = train(cfg, render_figures=not args.no_figures)
    if result.rows:
        last = result.rows[-1]
        print(f"final {last.split} loss {last.loss:.6f} "
              f"accuracy {last.accuracy:.4f}")
    print(f"metrics: {result.metrics_path}")
    print(f"checkpoint: {result.checkpoint_path}")
    if result.figure_path is not None:
        print(f"figures: {result.figure_path}")
    return 0


def _cmd_eval(args) -> int:
    from .checkpoint import load_checkpoint
    from .config import load_config
    from .training import evaluate, load_datasets, restore_network

    config_path = args.config or f"{args.checkpoint}.config"
    cfg = load_config(config_path)
    cfg.dataset_dir = args.dataset
    tensors = load_checkpoint(args.checkpoint)
    net = restore_network(cfg, tensors)
    _, test_ds = load_datasets(cfg)
    loss_value, accuracy, residual = evaluate(
        net, test_ds, cfg.eval_batch_size, reduction=cfg.reduction)
    print(f"loss {loss_value!r}")
    print(f"accuracy {accuracy!r}")
    print(f"safeguard_residual {residual!r}")
    return 0


def _cmd_spheres(args) -> int:
    from .config import load_config
    from .spheres import run_spheres

    cfg = load_config(args.config)
    results = run_spheres(cfg, render_figures=not args.no_figures)
    for r in results:
        print(f"{r.variant} h={r.h:g}: accuracy {r.accuracy:.4f} "
              f"norm_ratio {r.norm_ratio:.3f} ({r.seconds:.1f}s)")
    return 0


def _cmd_diagnose(args) -> int:
    from .diagnostics import diagnose_checkpoint, format_report

    rows = diagnose_checkpoint(args.checkpoint, out_dir=args.out, cap=args.cap,
                               render_figures=not args.no_figures)
    print(format_report(rows))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "spheres": _cmd_spheres,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
