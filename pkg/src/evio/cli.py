"""``evio`` command line: simulate, convert, augment, track, postprocess,
evaluate, report and dump.

Event CSVs do not carry sensor geometry. ``simulate`` and ``augment``
write a ``sensor.json`` beside their event files and the readers here pick
it up; ``--width``/``--height`` override it.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import augment as aug
from . import postprocess as pp
from .events import (
    EventStream,
    LabelTrack,
    Trajectory,
    read_events,
    read_labels_csv,
    read_trajectory_csv,
    write_events,
    write_labels_csv,
    write_trajectory_csv,
)
from .metrics import compare, format_table, pixel_error, write_report_csv
from .representation import WindowSpec, bin_to_frames, binarize_stack, downsample_stack, frame_features
from .report import trajectory_svg
from .simulator import Scenario
from .trackers import LinearModel, centroid_track, predict_linear, train_linear

log = logging.getLogger("evio")

DEFAULT_SEED = 42


class CliError(Exception):
    """Reported as ``evio: error: ...`` with exit status 1."""


def bundled_scenario() -> Path:
    return Path(str(resources.files("evio") / "scenarios" / "default.json"))


def thread_count() -> int | None:
    raw = os.environ.get("EVIO_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"EVIO_THREADS must be an integer, got {raw!r}") from None
    return None if n <= 0 else n


# ---------------------------------------------------------------- io helpers

def _sensor_file(events_path: Path) -> Path:
    return events_path.parent / "sensor.json"


def load_events(path, width=None, height=None) -> EventStream:
    path = Path(path)
    if not path.exists():
        raise CliError(f"{path}: no such file")
    if path.suffix != ".bin" and (width is None or height is None):
        meta = _sensor_file(path)
        if meta.exists():
            geom = json.loads(meta.read_text(encoding="utf-8"))
            width = width if width is not None else geom["width"]
            height = height if height is not None else geom["height"]
    return read_events(path, width, height)


def save_events(stream: EventStream, path: Path) -> None:
    write_events(stream, path)
    if path.suffix != ".bin":
        _sensor_file(path).write_text(
            json.dumps({"width": stream.width, "height": stream.height}) + "\n", encoding="utf-8")


def load_labels(path) -> LabelTrack:
    path = Path(path)
    if not path.exists():
        raise CliError(f"{path}: no such file")
    return read_labels_csv(path)


def load_trajectory(path, name: str = "") -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise CliError(f"{path}: no such file")
    return read_trajectory_csv(path, name)


def first_index(path) -> int:
    """``idx`` of the first data row, so rewritten trajectories keep their alignment."""
    with Path(path).open(encoding="utf-8") as fh:
        fh.readline()
        row = fh.readline()
    return int(row.split(",", 1)[0]) if row.strip() else 0


def _named(spec: str) -> tuple[str, Path]:
    name, sep, path = spec.partition("=")
    if not sep:
        return Path(spec).stem, Path(spec)
    return name, Path(path)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def _simulate_one(scenario_path: Path, out: Path, seed: int | None, fmt: str) -> None:
    scenario = Scenario.load(scenario_path, seed)
    stream, track = scenario.run()
    out.mkdir(parents=True, exist_ok=True)
    save_events(stream, out / f"events.{fmt}")
    write_labels_csv(track, out / "labels.csv")
    log.info("%s: %d events, %d labels", out, len(stream), len(track))


def cmd_simulate(args) -> None:
    scenario = Path(args.scenario) if args.scenario else bundled_scenario()
    out = _outdir(args.out)
    if scenario.is_dir():
        jobs = sorted(scenario.glob("*.json"))
        if not jobs:
            raise CliError(f"{scenario}: no scenario files")
        with ThreadPoolExecutor(thread_count()) as pool:
            list(pool.map(lambda p: _simulate_one(p, out / p.stem, args.seed, args.format), jobs))
    else:
        if not scenario.exists():
            raise CliError(f"{scenario}: no such file")
        _simulate_one(scenario, out, args.seed, args.format)


def cmd_convert(args) -> None:
    stream = load_events(args.input, args.width, args.height)
    save_events(stream, Path(args.output))


def cmd_augment(args) -> None:
    stream = load_events(args.events, args.width, args.height)
    track = load_labels(args.labels)
    spec = aug.AugSpec(args.shift_us, args.flip_h, args.flip_v, args.delete_frac, args.seed)
    stream, track = aug.augment(stream, track, spec)
    out = _outdir(args.out)
    save_events(stream, out / "events.csv")
    write_labels_csv(track, out / "labels.csv")


def cmd_track(args) -> None:
    stream = load_events(args.events, args.width, args.height)
    track = load_labels(args.labels)
    stack = bin_to_frames(stream, track)
    if args.tracker == "centroid":
        traj = centroid_track(stack, args.decay, args.min_events)
    else:
        feats = frame_features(stack, args.downsample)
        if args.model:
            model = LinearModel.load(args.model)
        else:
            window = None
            if args.window_length:
                window = WindowSpec(args.window_length, args.window_stride, args.window_step)
            model = train_linear(feats, track, args.lr, args.epochs, args.seed, window)
            if args.save_model:
                model.save(args.save_model)
        traj = predict_linear(model, feats)
    write_trajectory_csv(traj, args.out, start=track.start)


def cmd_postprocess(args) -> None:
    traj = load_trajectory(args.pred)
    needs_events = args.ofe or args.blink_override
    stream = load_events(args.events, args.width, args.height) if needs_events and args.events else None
    if needs_events and stream is None:
        raise CliError("--ofe and --blink-override need --events")
    if args.m2f:
        traj = pp.m2f(traj, pp.M2FParams(args.w_base, args.w_min, args.w_max, args.percentile, args.method))
    if args.ofe:
        traj = pp.ofe(traj, stream, pp.OFEParams(args.tau, args.c, args.gamma, args.kappa))
    if args.blink_override:
        if not args.labels:
            raise CliError("--blink-override needs --labels for frame alignment")
        stack = bin_to_frames(stream, load_labels(args.labels))
        traj = pp.blink_override(traj, stack, args.ratio_threshold)
    write_trajectory_csv(traj, args.out, start=first_index(args.pred))


def _reports(preds, labels_path, include_blink):
    track = load_labels(labels_path)
    named = []
    for spec in preds:
        name, path = _named(spec)
        named.append((name, pixel_error(load_trajectory(path, name), track, exclude_blink=not include_blink)))
    return track, named


def cmd_evaluate(args) -> None:
    _, named = _reports(args.pred, args.labels, args.include_blink)
    rows = compare(named)
    print(format_table(rows))
    write_report_csv(rows, args.report)


def cmd_report(args) -> None:
    track, named = _reports(args.pred, args.labels, args.include_blink)
    out = _outdir(args.out)
    rows = compare(named)
    write_report_csv(rows, out / "report.csv")
    trajs = {name: load_trajectory(_named(spec)[1], name) for spec, (name, _) in zip(args.pred, named)}
    (out / "trajectory.svg").write_text(trajectory_svg(track, trajs), encoding="utf-8")
    print(format_table(rows))


def cmd_dump(args) -> None:
    stream = load_events(args.events, args.width, args.height)
    track = load_labels(args.labels)
    stack = bin_to_frames(stream, track)
    if args.downsample > 1:
        stack = downsample_stack(stack, args.downsample, args.downsample)
    out = _outdir(args.out)
    frames = range(len(stack)) if args.frames is None else _parse_range(args.frames, len(stack))
    binary = binarize_stack(stack) if args.binary else None
    for i in frames:
        idx = stack.start + i
        if binary is not None:
            np.savetxt(out / f"frame_{idx:05d}_bin.csv", binary[i], fmt="%d", delimiter=",")
        else:
            np.savetxt(out / f"frame_{idx:05d}_pos.csv", stack.pos[i], fmt="%d", delimiter=",")
            np.savetxt(out / f"frame_{idx:05d}_neg.csv", stack.neg[i], fmt="%d", delimiter=",")


def _parse_range(text: str, n: int) -> range:
    lo, sep, hi = text.partition(":")
    try:
        a = int(lo) if lo else 0
        b = int(hi) if sep and hi else (a + 1 if not sep else n)
    except ValueError:
        raise CliError(f"bad frame range {text!r}; use I or I:J") from None
    if not (0 <= a <= b <= n):
        raise CliError(f"frame range {text!r} outside 0..{n}")
    return range(a, b)


# ---------------------------------------------------------------- parser

def _geometry(p):
    p.add_argument("--width", type=int, help="sensor width for event CSVs")
    p.add_argument("--height", type=int, help="sensor height for event CSVs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evio", description="Event-based eye-tracking toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize events and labels from a scenario")
    p.add_argument("--scenario", help="scenario JSON or a directory of them (default: bundled)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convert", help="convert events between CSV and EVIO binary")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    _geometry(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("augment", help="temporal shift, flips and event deletion")
    p.add_argument("--events", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--shift-us", type=int, default=0)
    p.add_argument("--flip-h", action="store_true")
    p.add_argument("--flip-v", action="store_true")
    p.add_argument("--delete-frac", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _geometry(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("track", help="predict a trajectory")
    p.add_argument("--events", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tracker", choices=("centroid", "linear"), default="centroid")
    p.add_argument("--decay", type=float, default=1.0, help="activity half-life in frames")
    p.add_argument("--min-events", type=float, default=1.0)
    p.add_argument("--downsample", type=int, default=4, help="feature pooling factor (linear)")
    p.add_argument("--lr", type=float, default=100.0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--window-length", type=int, default=0, help="train on sliding windows of this length")
    p.add_argument("--window-stride", type=int, default=1)
    p.add_argument("--window-step", type=int, default=1)
    p.add_argument("--model", help="load a saved linear model instead of training")
    p.add_argument("--save-model")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _geometry(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("postprocess", help="refine a trajectory")
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--events")
    p.add_argument("--labels", help="label grid used to bin frames for --blink-override")
    p.add_argument("--m2f", action="store_true")
    p.add_argument("--ofe", action="store_true")
    p.add_argument("--blink-override", action="store_true")
    p.add_argument("--method", choices=[m.value for m in pp.MotionMethod], default="velocity")
    p.add_argument("--w-base", type=int, default=15)
    p.add_argument("--w-min", type=int, default=3)
    p.add_argument("--w-max", type=int, default=21)
    p.add_argument("--percentile", type=float, default=75.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--c", type=int, default=5)
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--ratio-threshold", type=float, default=0.09)
    _geometry(p)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("evaluate", help="score trajectories against labels")
    p.add_argument("--pred", required=True, action="append", help="PATH or NAME=PATH; repeatable")
    p.add_argument("--labels", required=True)
    p.add_argument("--include-blink", action="store_true")
    p.add_argument("--report", default="report.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="write report.csv and trajectory.svg")
    p.add_argument("--pred", required=True, action="append", help="PATH or NAME=PATH; repeatable")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-blink", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dump", help="write binned frames as CSV matrices")
    p.add_argument("--events", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", help="I or I:J (positions within the track)")
    p.add_argument("--downsample", type=int, default=1)
    p.add_argument("--binary", action="store_true")
    _geometry(p)
    p.set_defaults(func=cmd_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"evio: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
