"""Command-line interface: data collection, training, evaluation, serving.

The default seed comes from the HYDRARM_SEED environment variable (0 when
unset); every subcommand is deterministic given its seed and inputs.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .control import make_coverage_scripts
from .data import (NormalizationSpec, WindowConfig, build_fk_windows,
                   build_ik_samples, concat, decimate, read_runlog, split,
                   write_runlog)
from .models import TrainConfig, evaluate, train
from .nnet import load_checkpoint, save_checkpoint
from .plant import PlantConfig, load_script, run_scripted, save_script
from .report import write_report


def _default_seed() -> int:
    return int(os.environ.get("HYDRARM_SEED", "0"))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hydrarm",
        description="hydraulic soft-arm simulator and learned kinematics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scripts", help="write the coverage-script suite")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("collect", help="run a valve script and log at 10 Hz")
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True, help="output JSONL run log")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--noise", action="store_true",
                   help="enable sensor noise on the logged observations")
    p.add_argument("--duration", type=float, default=None,
                   help="override the script end time in seconds")

    p = sub.add_parser("train", help="train a kinematics model")
    p.add_argument("kind", choices=["fk", "ik"])
    p.add_argument("--data", required=True, help="directory of *.jsonl runs")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("kind", choices=["fk", "ik"])
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True,
                   help="report base path (writes .csv/.json/.png)")
    p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("serve", help="run the live simulator service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--fk", default=None, help="forward model checkpoint")
    p.add_argument("--ik", default=None, help="inverse model checkpoint")
    p.add_argument("--noise", action="store_true")
    p.add_argument("--runs-dir", default="runs",
                   help="directory for recorded run logs")
    return parser


def load_datasets(data_dir, kind: str, seed: int):
    """Assemble train/test datasets from every run log in a directory.

    Runs are read in sorted filename order, decimated to the model rate,
    windowed per run (windows never span runs), concatenated, and split
    80/20 with the given seed.
    """
    data_dir = Path(data_dir)
    paths = sorted(data_dir.glob("*.jsonl"))
    if not paths:
        raise FileNotFoundError(f"no *.jsonl run logs in {data_dir}")
    norm = NormalizationSpec()
    wc = WindowConfig()
    parts = []
    for path in paths:
        log2 = decimate(read_runlog(path), wc.model_rate)
        if kind == "fk":
            parts.append(build_fk_windows(log2, wc, norm))
        else:
            parts.append(build_ik_samples(log2, norm))
    dataset = concat(parts)
    return split(dataset, 0.8, seed=seed), norm


def _cmd_scripts(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scripts = make_coverage_scripts(seed=args.seed, cfg=PlantConfig(seed=args.seed))
    total = 0.0
    for i, (name, script) in enumerate(scripts.items()):
        path = out / f"script_{i:02d}_{name}.json"
        save_script(script, path)
        total += script.end_time()
        print(f"wrote {path} ({script.end_time():.0f} s)")
    print(f"total scripted time: {total / 60:.1f} min")
    return 0


def _cmd_collect(args) -> int:
    cfg = PlantConfig(seed=args.seed)
    script = load_script(args.script)
    log = run_scripted(cfg, script, duration=args.duration, noise=args.noise)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_runlog(log, args.out)
    print(f"wrote {args.out} ({len(log)} rows)")
    return 0


def _cmd_train(args) -> int:
    (train_set, _), norm = load_datasets(args.data, args.kind, args.seed)
    tc = TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed)
    result = train(args.kind, train_set, tc, norm)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.checkpoint, args.out)
    print(f"wrote {args.out} (final epoch loss {result.epoch_losses[-1]:.6f})")
    return 0


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.model)
    if ckpt.kind != args.kind:
        raise ValueError(
            f"model kind mismatch: checkpoint is {ckpt.kind!r}, "
            f"requested {args.kind!r}")
    (_, test_set), _ = load_datasets(args.data, args.kind, args.seed)
    report = evaluate(ckpt, test_set)
    paths = write_report(report, args.report)
    s = report.summary
    print(f"{args.kind} test samples: {s['samples']}  "
          f"median {s['median']:.3f} {s['units']}  "
          f"mean {s['mean']:.3f} {s['units']}  "
          f"fraction below {s['threshold']:g} {s['units']}: "
          f"{s['fraction_below_threshold']:.3f}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    cfg = PlantConfig(seed=args.seed)
    fk = load_checkpoint(args.fk) if args.fk else None
    ik = load_checkpoint(args.ik) if args.ik else None
    app = create_app(cfg, fk_ckpt=fk, ik_ckpt=ik, noise=args.noise,
                     runs_dir=args.runs_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "scripts": _cmd_scripts,
    "collect": _cmd_collect,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
