"""Central-angle sweep: per level n, estimate held-out depth, synthesize and
reconstruct holograms, score them, and find where improvement flattens."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import depthest
from .errors import ConfigurationError, DataValidationError, DatasetIOError, NumericError
from .holo import FOURK_RESOLUTION, OpticsConfig, encode_hologram, synthesize, upscale_nearest
from .metrics import MetricReport, acc, cgh_acc, format_min_sec, mse, mse_bytes
from .recon import reconstruct
from .scenegen import Dataset, Frame
from .viewgeom import N_MAX, N_MIN, schedule

log = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "central_angle_deg", "train_views", "test_views", "depth_mse", "depth_acc",
               "cgh_acc", "t_estimate_s", "t_synth_s", "t_recon_s")
METRIC_COLUMNS = CSV_COLUMNS[:7]
DEFAULT_THRESHOLD = 1.5


@dataclass
class SweepConfig:
    data_root: Path
    shape: str = "torus"
    n_min: int = N_MIN
    n_max: int = N_MAX
    baseline: str = "blend"
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    fourk: bool = False
    threshold: float = DEFAULT_THRESHOLD
    focus_m: float | None = None  # reconstruction distance; default mid-slab

    @classmethod
    def from_json(cls, payload: dict, **overrides) -> "SweepConfig":
        optics = OpticsConfig.from_json(payload.get("optics", payload))
        known = {k: payload[k] for k in ("shape", "n_min", "n_max", "baseline", "fourk", "threshold",
                                         "focus_m") if k in payload}
        known.update({k: v for k, v in overrides.items() if v is not None})
        data_root = known.pop("data_root", payload.get("data_root"))
        if data_root is None:
            raise ConfigurationError("sweep config needs data_root")
        return cls(data_root=Path(data_root), optics=optics, **known)


@dataclass
class SweepRecord:
    n: int
    central_angle_deg: float
    train_views: int
    test_views: int
    depth_mse: float
    depth_acc: float
    cgh_acc: float
    t_estimate_s: float
    t_synth_s: float
    t_recon_s: float
    depth_mse_bytes: float = float("nan")  # reported in the summary, not the CSV

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def _validate_levels(cfg: SweepConfig, dataset: Dataset) -> None:
    if not N_MIN <= cfg.n_min <= cfg.n_max <= N_MAX:
        raise ConfigurationError(f"need {N_MIN} <= n_min <= n_max <= {N_MAX}, got {cfg.n_min}..{cfg.n_max}")
    if dataset.view_count < 2 ** (cfg.n_max + 1):
        raise ConfigurationError(f"n_max={cfg.n_max} needs {2 ** (cfg.n_max + 1)} views, "
                                 f"dataset has {dataset.view_count}")
    if cfg.baseline not in depthest.BASELINES:
        raise ConfigurationError(f"baseline must be one of {depthest.BASELINES}")


def _check_finite(*values) -> None:
    if not all(math.isfinite(v) for v in values):
        raise NumericError(f"non-finite metric in {values}")


def run_level(dataset: Dataset, n: int, cfg: SweepConfig) -> SweepRecord:
    sched = schedule(n)
    optics = cfg.optics
    if cfg.fourk and optics.pixel_pitch_m == OpticsConfig().pixel_pitch_m:
        optics = replace(optics, pixel_pitch_m=3.6e-6)
    focus = cfg.focus_m if cfg.focus_m is not None else 0.5 * (optics.z_near_m + optics.z_far_m)

    t0 = time.perf_counter()
    state = depthest.fit([dataset.frame(a) for a in sched.train_angles_deg], n, cfg.baseline)
    test_frames = [dataset.frame(a) for a in sched.test_angles_deg]
    estimates = [depthest.estimate(state, fr.rgb, fr.pose.angle_deg) for fr in test_frames]
    t_estimate = time.perf_counter() - t0

    mses, mses_b, accs, caccs = [], [], [], []
    t_synth = t_recon = 0.0
    for fr, est in zip(test_frames, estimates):
        mses.append(mse(est, fr.depth))
        mses_b.append(mse_bytes(est, fr.depth))
        accs.append(acc(est, fr.depth))
        truth_frame = fr
        est_frame = Frame(rgb=fr.rgb, depth=est, pose=fr.pose)
        if cfg.fourk:
            truth_frame = upscale_nearest(truth_frame, FOURK_RESOLUTION)
            est_frame = upscale_nearest(est_frame, FOURK_RESOLUTION)
        t1 = time.perf_counter()
        truth_cgh = encode_hologram(synthesize(truth_frame, optics), optics)
        est_fields = synthesize(est_frame, optics)
        est_cgh = encode_hologram(est_fields, optics)
        t_synth += time.perf_counter() - t1
        caccs.append(cgh_acc(est_cgh, truth_cgh))
        t2 = time.perf_counter()
        reconstruct(est_fields, focus, optics)
        t_recon += time.perf_counter() - t2

    report = MetricReport(float(np.mean(mses)), float(np.mean(accs)), float(np.mean(caccs)))
    _check_finite(report.depth_mse, report.depth_acc, report.cgh_acc)
    rec = SweepRecord(n=n, central_angle_deg=sched.level.angle_deg, train_views=sched.level.views,
                      test_views=sched.level.views, depth_mse=report.depth_mse,
                      depth_acc=report.depth_acc, cgh_acc=report.cgh_acc, t_estimate_s=t_estimate,
                      t_synth_s=t_synth, t_recon_s=t_recon, depth_mse_bytes=float(np.mean(mses_b)))
    log.info("n=%d angle=%.6g mse=%.6g acc=%.6f cgh_acc=%.6f synth=%.2fs", n, rec.central_angle_deg,
             rec.depth_mse, rec.depth_acc, rec.cgh_acc, t_synth)
    return rec


def run_sweep(cfg: SweepConfig, out_dir=None) -> list[SweepRecord]:
    """Run every level from ``n_min`` to ``n_max``; with ``out_dir`` also write
    ``sweep.csv``, ``summary.txt`` and ``sweep.gp``. Nothing is written unless
    the whole sweep succeeds."""
    dataset = Dataset.open(cfg.data_root, cfg.shape)
    _validate_levels(cfg, dataset)
    records = [run_level(dataset, n, cfg) for n in range(cfg.n_min, cfg.n_max + 1)]
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DatasetIOError(f"cannot create {out_dir}: {exc}") from exc
        write_csv(records, out_dir / "sweep.csv")
        knee = None
        if len(records) >= 2:
            knee = detect_knee([(r.central_angle_deg, r.depth_mse) for r in records], cfg.threshold)
        report(records, knee, out_dir)
    return records


def write_csv(records, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    try:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r.row()])
        os.replace(tmp, path)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> list[SweepRecord]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    out = []
    for row in rows:
        try:
            out.append(SweepRecord(**{c: (int(row[c]) if c in ("n", "train_views", "test_views")
                                          else float(row[c])) for c in CSV_COLUMNS}))
        except (KeyError, ValueError) as exc:
            raise DataValidationError(f"{path}: malformed sweep row {row}") from exc
    return out


@dataclass(frozen=True)
class KneeResult:
    knee_angle_deg: float
    improvement_ratios: tuple[float, ...]
    threshold: float


def detect_knee(series, threshold: float = DEFAULT_THRESHOLD) -> KneeResult:
    """Angle after the last step whose improvement ratio MSE_i / MSE_{i+1} reaches ``threshold``.

    ``series`` is a list of (angle, mse) sorted by descending angle. With no
    qualifying step the knee is the largest angle.
    """
    series = [(float(a), float(m)) for a, m in series]
    if len(series) < 2:
        raise DataValidationError("knee detection needs at least two points")
    angles = [a for a, _ in series]
    if any(b >= a for a, b in zip(angles, angles[1:])):
        raise DataValidationError("series must be sorted by strictly descending angle")
    if any(not m > 0 for _, m in series):
        raise DataValidationError("knee detection needs positive MSE values")
    ratios = tuple(m0 / m1 for (_, m0), (_, m1) in zip(series, series[1:]))
    qualifying = [i for i, r in enumerate(ratios) if r >= threshold]
    knee = angles[qualifying[-1] + 1] if qualifying else angles[0]
    return KneeResult(knee_angle_deg=knee, improvement_ratios=ratios, threshold=threshold)


def _datablock(name: str, xs, ys) -> list[str]:
    return [f"${name} << EOD"] + [f"{x!r} {y!r}" for x, y in zip(xs, ys)] + ["EOD"]


def plot_script(records, knee: KneeResult | None, image_name: str = "sweep.png") -> str:
    """gnuplot script: depth MSE (left axis) and both ACC series (right axis) on a log-angle axis."""
    angles = [r.central_angle_deg for r in records]
    lines = []
    lines += _datablock("mse", angles, [r.depth_mse for r in records])
    lines += _datablock("depth_acc", angles, [r.depth_acc for r in records])
    lines += _datablock("cgh_acc", angles, [r.cgh_acc for r in records])
    lines += [
        "set terminal pngcairo size 900,600",
        f"set output '{image_name}'",
        "set logscale x 2",
        "set xrange [*:*] reverse",
        "set xlabel 'central angle (deg)'",
        "set ylabel 'depth MSE (normalized)'",
        "set y2label 'ACC'",
        "set ytics nomirror",
        "set y2tics",
        "set key outside right",
    ]
    if knee is not None:
        lines.append(f"set arrow from {knee.knee_angle_deg!r}, graph 0 to {knee.knee_angle_deg!r}, graph 1 "
                     "nohead dashtype 2 lc rgb 'gray40'")
        lines.append(f"set label 'knee {knee.knee_angle_deg:g} deg' at {knee.knee_angle_deg!r}, graph 0.95")
    lines.append("plot $mse using 1:2 with linespoints title 'depth MSE' axes x1y1, \\")
    lines.append("     $depth_acc using 1:2 with linespoints title 'depth ACC' axes x1y2, \\")
    lines.append("     $cgh_acc using 1:2 with linespoints title 'CGH ACC' axes x1y2")
    return "\n".join(lines) + "\n"


def summary_text(records, knee: KneeResult | None) -> str:
    lines = [f"{'n':>2} {'angle':>10} {'views':>5} {'MSE':>12} {'MSE(byte^2)':>12} {'depthACC':>9} "
             f"{'cghACC':>9} {'estimate':>9} {'synth':>9} {'recon':>9}"]
    for r in records:
        lines.append(f"{r.n:>2} {r.central_angle_deg:>10.6g} {r.test_views:>5} {r.depth_mse:>12.6g} "
                     f"{r.depth_mse_bytes:>12.6g} {r.depth_acc:>9.6f} {r.cgh_acc:>9.6f} "
                     f"{format_min_sec(r.t_estimate_s):>9} {format_min_sec(r.t_synth_s):>9} "
                     f"{format_min_sec(r.t_recon_s):>9}")
    if knee is not None:
        ratios = ", ".join(f"{x:.3g}" for x in knee.improvement_ratios)
        lines.append(f"knee: {knee.knee_angle_deg:g} deg (threshold {knee.threshold:g}; ratios {ratios})")
    else:
        lines.append("knee: n/a (fewer than two levels)")
    return "\n".join(lines) + "\n"


def report(records, knee: KneeResult | None, out_dir=None) -> tuple[str, str]:
    """Text summary and gnuplot script; written to ``out_dir`` when given."""
    if not records:
        raise DataValidationError("report needs at least one record")
    text = summary_text(records, knee)
    script = plot_script(records, knee)
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            (out_dir / "summary.txt").write_text(text)
            (out_dir / "sweep.gp").write_text(script)
        except OSError as exc:
            raise DatasetIOError(f"cannot write report into {out_dir}: {exc}") from exc
    return text, script
