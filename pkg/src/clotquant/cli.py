"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 I/O or decode error, 3 degenerate
analysis, 4 empty result.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from .binarize import ThresholdPolicy
from .errors import AllFramesFailed, DecodeError, DegenerateHistogram, RoiTooSmall
from .image_core import RoiMask, decode_image, write_pgm
from .labeling import labels_to_pgm_image
from .metrics import CSV_COLUMNS, AlarmConfig, ClotReport, check_alarm, format_number
from .monitor import FrameEvent, OnsetConfig, SessionConfig, run_branches
from .pipeline import DEFAULT_MIN_CONTRAST, AnalysisConfig, analyze
from .plot import scatter_svg
from .synth import SceneError, load_scene, render_sequence

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DEGENERATE, EXIT_EMPTY = 0, 1, 2, 3, 4

MANIFEST_HEADER = ["timestamp_min", "branch_id", "image_path"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threshold_arg(text: str):
    if text == "otsu":
        return "otsu"
    try:
        level = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 0-255 or 'otsu', got {text!r}") from None
    if not 0 <= level <= 255:
        raise argparse.ArgumentTypeError(f"threshold {level} outside 0-255")
    return level


def _roi_arg(text: str) -> RoiMask:
    try:
        return RoiMask.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _analysis_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("analysis")
    g.add_argument("--threshold", type=_threshold_arg, default="otsu", help="0-255 or 'otsu' (default)")
    g.add_argument("--polarity", choices=["dark", "light"], default="dark")
    g.add_argument("--connectivity", type=int, choices=[4, 8], default=8)
    g.add_argument("--min-size", type=_nonneg_int, default=5, help="drop clots smaller than this (pixels)")
    g.add_argument("--roi", type=_roi_arg, default=RoiMask.full(), help="'full' or 'disk:cx,cy,r'")
    g.add_argument("--median", type=_nonneg_int, default=0, metavar="RADIUS", help="median denoise radius, 0 = off")
    g.add_argument("--min-contrast", type=float, default=DEFAULT_MIN_CONTRAST,
                   help="minimum Otsu class-mean gap before clots are reported")
    g.add_argument("--alarm-occlusion", type=float, default=None, metavar="F")
    g.add_argument("--alarm-area", type=_nonneg_int, default=None, metavar="N")
    g.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clotquant", description="Quantify blood clots on filter images.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _analysis_flags()

    p = sub.add_parser("analyze", parents=[common], help="quantify one image")
    p.add_argument("image")
    p.add_argument("--labels-out", default=None, help="write a debug label map PGM")

    p = sub.add_parser("batch", parents=[common], help="monitor a manifest of timed frames")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None, help="default: the manifest's directory")
    p.add_argument("--noise-floor", type=_nonneg_int, default=0)
    p.add_argument("--onset-k", type=_positive_int, default=2)

    p = sub.add_parser("synth", help="render synthetic frames and a manifest")
    p.add_argument("scene")
    p.add_argument("--frames", type=_positive_int, default=1)
    p.add_argument("--interval", type=float, default=10.0, help="minutes between frames")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scene's noise seed")
    p.add_argument("--noise", type=float, default=None, help="override the scene's noise stddev")
    p.add_argument("--branch-id", type=int, default=0)

    p = sub.add_parser("plot", help="SVG of cumulative clot area against time")
    p.add_argument("session")
    p.add_argument("out")
    return parser


def _config_from(args) -> tuple[AnalysisConfig, AlarmConfig | None]:
    if args.threshold == "otsu":
        policy = ThresholdPolicy.otsu(args.polarity)
    else:
        policy = ThresholdPolicy.fixed(args.threshold, args.polarity)
    analysis = AnalysisConfig(
        policy=policy,
        connectivity=args.connectivity,
        min_size=args.min_size,
        roi=args.roi,
        median_radius=args.median,
        min_contrast=args.min_contrast,
    )
    alarm = None
    if args.alarm_occlusion is not None or args.alarm_area is not None:
        try:
            alarm = AlarmConfig(args.alarm_occlusion, args.alarm_area)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return analysis, alarm


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def report_csv(reports: list[ClotReport]) -> str:
    return _csv_text([CSV_COLUMNS, *(r.csv_row() for r in reports)])


# ---------------------------------------------------------------- commands


def cmd_analyze(args) -> int:
    analysis_cfg, alarm_cfg = _config_from(args)
    try:
        img = decode_image(args.image)
    except DecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = analyze(img, analysis_cfg)
    except DegenerateHistogram as exc:
        print(f"error: {args.image}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RoiTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.labels_out:
        write_pgm(args.labels_out, labels_to_pgm_image(result.labels))

    report = result.report
    if args.format == "csv":
        sys.stdout.write(report_csv([report]))
        return EXIT_OK
    out = report.to_dict()
    out["threshold_used"] = result.threshold
    out["low_contrast"] = result.low_contrast
    out["settings"] = analysis_cfg.to_dict()
    out["alarm"] = None if alarm_cfg is None else check_alarm(report, alarm_cfg).to_dict()
    sys.stdout.write(_dump_json(out))
    return EXIT_OK


def read_manifest(path: Path) -> list[FrameEvent]:
    """Parse ``timestamp_min,branch_id,image_path`` rows; paths are relative to the manifest."""
    text = path.read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    if [c.strip() for c in rows[0]] != MANIFEST_HEADER:
        raise ValueError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
    events = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        ts, bid, image = (c.strip() for c in row)
        try:
            timestamp = float(ts)
            branch = int(bid) if bid else None
        except ValueError:
            raise ValueError(f"line {lineno}: bad timestamp or branch id") from None
        image_path = Path(image)
        if not image_path.is_absolute():
            image_path = path.parent / image_path
        events.append(FrameEvent(timestamp, image_path, branch))
    return events


def cmd_batch(args) -> int:
    analysis_cfg, alarm_cfg = _config_from(args)
    cfg = SessionConfig(analysis_cfg, alarm_cfg, OnsetConfig(args.noise_floor, args.onset_k))
    manifest = Path(args.manifest)
    try:
        events = read_manifest(manifest)
    except OSError as exc:
        print(f"error: cannot read manifest {manifest}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {manifest}: {exc}", file=sys.stderr)
        return EXIT_IO
    if not events:
        print(f"error: {manifest}: no frames listed", file=sys.stderr)
        return EXIT_EMPTY

    try:
        sessions = run_branches(events, cfg)
    except ValueError as exc:
        print(f"error: {manifest}: {exc}", file=sys.stderr)
        return EXIT_IO

    out_dir = Path(args.out_dir) if args.out_dir else manifest.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for bid, series in sessions.items():
        name = f"session_branch-{'none' if bid is None else bid}"
        if isinstance(series, AllFramesFailed):
            print(f"error: branch {bid}: {series}", file=sys.stderr)
            status = EXIT_EMPTY
            continue
        for s in series.skipped:
            print(f"warning: skipped frame t={format_number(s.timestamp)} {s.source}: {s.error}", file=sys.stderr)
        json_path = out_dir / f"{name}.json"
        csv_path = out_dir / f"{name}.csv"
        json_path.write_text(_dump_json(series.to_dict(cfg)), encoding="utf-8")
        csv_path.write_text(report_csv(series.reports), encoding="utf-8")
        print(json_path)
        print(csv_path)
    return status


def cmd_synth(args) -> int:
    try:
        scene, model = load_scene(args.scene)
    except OSError as exc:
        print(f"error: cannot read scene {args.scene}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except SceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.seed is not None:
        model = replace(model, seed=args.seed)
    if args.noise is not None:
        if args.noise < 0:
            raise UsageError("--noise must be >= 0")
        model = replace(model, noise_stddev=args.noise)
    if not args.interval > 0:
        raise UsageError("--interval must be > 0")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [MANIFEST_HEADER]
    for i, (t, frame) in enumerate(render_sequence(scene, model, args.interval, args.frames)):
        name = f"frame_{i:04d}.pgm"
        write_pgm(out_dir / name, frame)
        rows.append([format_number(t), str(args.branch_id), name])
    manifest = out_dir / "manifest.csv"
    manifest.write_text(_csv_text(rows), encoding="utf-8")
    print(manifest)
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        session = json.loads(Path(args.session).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read {args.session}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: {args.session}: invalid JSON ({exc})", file=sys.stderr)
        return EXIT_IO
    reports = session.get("reports") if isinstance(session, dict) else None
    if not reports:
        print(f"error: {args.session}: session has no reports", file=sys.stderr)
        return EXIT_EMPTY
    xs = [float(r["timestamp"]) if r.get("timestamp") is not None else float(i) for i, r in enumerate(reports)]
    ys = [float(r["cumulative_area"]) for r in reports]
    Path(args.out).write_text(scatter_svg(xs, ys), encoding="utf-8")
    print(args.out)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "batch": cmd_batch, "synth": cmd_synth, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"clotquant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
