"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
4 numeric failure (NaN/Inf detected).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import depthest, fileio, holo, recon, scenegen, sweep
from .errors import ConfigurationError, DatasetIOError, HoloAngleError
from .metrics import acc, cgh_acc, mse, mse_bytes
from .viewgeom import schedule

log = logging.getLogger("holoangle")


def _resolution(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution must look like 640x360, got {text!r}")
    return w, h


def _load_config(path) -> dict:
    return fileio.read_json(path) if path else {}


def _optics(args, config: dict) -> holo.OpticsConfig:
    payload = dict(config.get("optics", {}))
    if args.optics:
        payload.update(fileio.read_json(args.optics))
    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    if getattr(args, "phase", None):
        payload["phase_mode"] = args.phase
    if getattr(args, "fourk", False) and "pixel_pitch_m" not in payload:
        payload["pixel_pitch_m"] = 3.6e-6
    return holo.OpticsConfig.from_json(payload)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", type=Path, help="dataset root (contains <shape>/manifest.json)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--scene", choices=scenegen.SHAPES, default="torus")
    p.add_argument("--optics", type=Path, help="JSON file with OpticsConfig fields")
    p.add_argument("--config", type=Path, help="JSON config: optics + sweep parameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--phase", choices=holo.PHASE_MODES)
    p.add_argument("--fourk", action="store_true", help="upscale frames to 3840x2160 before synthesis")
    p.add_argument("-v", "--verbose", action="store_true")


def _need(value, flag: str):
    if value is None:
        raise ConfigurationError(f"{flag} is required")
    return value


def cmd_gen(args, config) -> int:
    out = _need(args.data or args.out, "--data")
    scene = scenegen.pair_scene(args.scene)
    manifest = scenegen.generate_dataset(scene, args.views, out, args.resolution,
                                         radius_m=args.radius)
    print(f"wrote {manifest['view_count']} views to {Path(out) / args.scene}")
    return 0


def cmd_estimate(args, config) -> int:
    ds = scenegen.Dataset.open(_need(args.data, "--data"), args.scene)
    sched = schedule(args.n)
    if ds.view_count < 2 ** (args.n + 1):
        raise ConfigurationError(f"n={args.n} needs {2 ** (args.n + 1)} views, dataset has {ds.view_count}")
    state = depthest.fit([ds.frame(a) for a in sched.train_angles_deg], args.n, args.baseline)
    errors = []
    for a in sched.test_angles_deg:
        fr = ds.frame(a)
        est = depthest.estimate(state, fr.rgb, a)
        depthest.write_estimate(ds.view_dir(a), est, state)
        errors.append(mse(est, fr.depth))
    print(f"n={args.n} baseline={args.baseline}: {len(errors)} estimates, mean MSE {np.mean(errors):.6g}")
    return 0


def _frame_for(args):
    ds = scenegen.Dataset.open(_need(args.data, "--data"), args.scene)
    view_dir = ds.root / scenegen.view_dir_name(args.view)
    frame = scenegen.read_frame(view_dir)
    if args.use_estimate:
        frame = scenegen.Frame(rgb=frame.rgb, depth=fileio.read_pgm(view_dir / "depth_est.pgm"),
                               pose=frame.pose)
    return frame


def cmd_synth(args, config) -> int:
    optics = _optics(args, config)
    frame = _frame_for(args)
    if args.fourk:
        frame = holo.upscale_nearest(frame, holo.FOURK_RESOLUTION)
    fields = holo.synthesize(frame, optics)
    out = Path(_need(args.out, "--out"))
    out.mkdir(parents=True, exist_ok=True)
    for name, f in zip(holo.CHANNELS, fields):
        holo.write_field(out / f"field_{name}.hswf", f)
    holo.write_lee(out, holo.encode_hologram(fields, optics))
    print(f"wrote hologram for view {args.view} to {out}")
    return 0


def _load_cgh(path: Path, optics):
    path = Path(path)
    fields = [path / f"field_{c}.hswf" for c in holo.CHANNELS]
    if all(f.is_file() for f in fields):
        return [holo.read_field(f) for f in fields], optics
    if (path / "lee_meta.json").is_file():
        lee = holo.read_lee(path)
        return lee, lee.optics
    raise DatasetIOError(f"{path}: no field_*.hswf files or lee_meta.json")


def cmd_recon(args, config) -> int:
    optics = _optics(args, config)
    cgh, optics = _load_cgh(_need(args.cgh, "--cgh"), optics)
    out = Path(_need(args.out, "--out"))
    out.mkdir(parents=True, exist_ok=True)
    if args.scan:
        z0, z1, count = args.scan
        regions = None
        if args.data is not None and args.view is not None:
            ds = scenegen.Dataset.open(args.data, args.scene)
            angle = ds.angle_of(args.view)
            labels = scenegen.render_view(ds.scene, scenegen.camera_pose(angle, ds.manifest["radius_m"]),
                                          tuple(ds.manifest["resolution"]), ds.mapping).labels
            regions = recon.object_regions(labels)
        scan = recon.focus_scan(cgh, np.linspace(z0, z1, int(count)), regions, optics)
        recon.write_focus_scan(out / "focus_scan.csv", scan)
        print(f"wrote {len(scan)}-point focus scan to {out / 'focus_scan.csv'}")
        return 0
    rec = recon.reconstruct(cgh, _need(args.focus, "--focus"), optics)
    recon.write_reconstruction(out / "recon.png", rec)
    print(f"wrote {out / 'recon.png'}")
    return 0


def cmd_metrics(args, config) -> int:
    if args.cgh_a and args.cgh_b:
        a = holo.read_lee(args.cgh_a)
        b = holo.read_lee(args.cgh_b)
        print(f"cgh_acc {cgh_acc(a, b):.12g}")
        return 0
    est = fileio.read_pgm(_need(args.estimate, "--estimate"))
    truth = fileio.read_pgm(_need(args.truth, "--truth"))
    print(f"mse {mse(est, truth):.12g}")
    print(f"mse_bytes {mse_bytes(est, truth):.12g}")
    print(f"acc {acc(est, truth):.12g}")
    return 0


def _sweep_config(args, config) -> sweep.SweepConfig:
    payload = dict(config)
    payload["optics"] = _optics(args, config).to_json()
    overrides = {"data_root": args.data, "shape": args.scene if args.scene_given else None,
                 "n_min": args.n_min, "n_max": args.n_max, "baseline": args.baseline,
                 "threshold": args.threshold, "fourk": args.fourk or None}
    return sweep.SweepConfig.from_json(payload, **overrides)


def cmd_sweep(args, config) -> int:
    cfg = _sweep_config(args, config)
    records = sweep.run_sweep(cfg, _need(args.out, "--out"))
    print(sweep.summary_text(records, sweep.detect_knee(
        [(r.central_angle_deg, r.depth_mse) for r in records], cfg.threshold) if len(records) > 1 else None),
        end="")
    return 0


def cmd_knee(args, config) -> int:
    records = sweep.read_csv(_need(args.csv, "--csv"))
    knee = sweep.detect_knee([(r.central_angle_deg, r.depth_mse) for r in records], args.threshold)
    ratios = ", ".join(f"{r:.4g}" for r in knee.improvement_ratios)
    print(f"knee {knee.knee_angle_deg:g} deg (ratios {ratios})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holoangle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="render an RGB-depth dataset on the circular track")
    _common(p)
    p.add_argument("--views", type=int, default=1024)
    p.add_argument("--resolution", type=_resolution, default=scenegen.DEFAULT_RESOLUTION)
    p.add_argument("--radius", type=float, default=0.20)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("estimate", help="estimate depth at the held-out views of level n")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--baseline", choices=depthest.BASELINES, default="blend")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("synth", help="synthesize and Lee-encode the hologram of one view")
    _common(p)
    p.add_argument("--view", type=int, required=True, help="view index in the dataset")
    p.add_argument("--use-estimate", action="store_true", help="use depth_est.pgm instead of depth.pgm")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("recon", help="reconstruct a hologram at a focus distance, or scan focus")
    _common(p)
    p.add_argument("--cgh", type=Path, help="directory written by 'synth'")
    p.add_argument("--focus", type=float, help="focus distance in meters")
    p.add_argument("--scan", type=float, nargs=3, metavar=("Z0", "Z1", "COUNT"))
    p.add_argument("--view", type=int, help="view index, for object regions in a scan")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("metrics", help="depth MSE/ACC between two maps, or CGH ACC between two holograms")
    _common(p)
    p.add_argument("--estimate", type=Path)
    p.add_argument("--truth", type=Path)
    p.add_argument("--cgh-a", type=Path)
    p.add_argument("--cgh-b", type=Path)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="run the full central-angle sweep")
    _common(p)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--baseline", choices=depthest.BASELINES)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("knee", help="locate the knee in a sweep CSV")
    _common(p)
    p.add_argument("--csv", type=Path)
    p.add_argument("--threshold", type=float, default=sweep.DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_knee)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.scene_given = any(a == "--scene" or a.startswith("--scene=") for a in argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except HoloAngleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DatasetIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
