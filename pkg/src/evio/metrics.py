"""Pixel error and p-accuracy scoring."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .events import LabelTrack, Trajectory

THRESHOLDS = (5, 10, 15)


@dataclass(frozen=True, eq=False)
class EvalReport:
    pixel_error: float
    p_acc: dict[float, float]
    per_frame: np.ndarray
    n_scored: int
    blink_excluded: bool
    scored: np.ndarray = field(repr=False, default=None)


def p_accuracy(distances: np.ndarray, p: float) -> float:
    """Fraction of distances within ``p`` pixels (inclusive)."""
    d = np.asarray(distances, dtype=np.float64)
    return float(np.count_nonzero(d <= p)) / len(d)


def pixel_error(pred: Trajectory, gt: LabelTrack, exclude_blink: bool = True,
                thresholds: Iterable[float] = THRESHOLDS) -> EvalReport:
    if len(pred) != len(gt):
        raise ValueError(f"{len(pred)} predictions for {len(gt)} labels")
    d = np.hypot(pred.x - gt.x, pred.y - gt.y)
    scored = ~gt.blink if exclude_blink else np.ones(len(gt), dtype=bool)
    n = int(scored.sum())
    if n == 0:
        raise ValueError("no frames left to score")
    ds = d[scored]
    return EvalReport(
        pixel_error=float(ds.mean()),
        p_acc={p: p_accuracy(ds, p) for p in thresholds},
        per_frame=d,
        n_scored=n,
        blink_excluded=exclude_blink,
        scored=scored,
    )


def compare(reports: Mapping[str, EvalReport] | Iterable[tuple[str, EvalReport]]) -> list[dict]:
    """Rows sorted by pixel error; equal errors keep input order."""
    items = list(reports.items()) if isinstance(reports, Mapping) else list(reports)
    items.sort(key=lambda kv: kv[1].pixel_error)
    return [
        {"name": name, "pixel_error": r.pixel_error,
         **{f"p{int(p)}": r.p_acc.get(p, float("nan")) for p in THRESHOLDS},
         "n_scored": r.n_scored}
        for name, r in items
    ]


REPORT_COLUMNS = ("name", "pixel_error", "p5", "p10", "p15", "n_scored")


def format_table(rows: list[dict]) -> str:
    width = max([len("name")] + [len(r["name"]) for r in rows])
    lines = [f"{'name':<{width}}  {'pixel_error':>11}  {'p5':>6}  {'p10':>6}  {'p15':>6}  {'n_scored':>8}"]
    for r in rows:
        lines.append(f"{r['name']:<{width}}  {r['pixel_error']:>11.4f}  {r['p5']:>6.4f}  "
                     f"{r['p10']:>6.4f}  {r['p15']:>6.4f}  {r['n_scored']:>8d}")
    return "\n".join(lines)


def write_report_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([r["name"], f"{r['pixel_error']:.6f}", f"{r['p5']:.6f}", f"{r['p10']:.6f}",
                        f"{r['p15']:.6f}", r["n_scored"]])
