"""Command-line front end.

On failure the last line on stderr is ``error: <category>: <message>`` and the
exit code is nonzero (2 for usage and argument errors, 1 otherwise).
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import io
from .errors import ArgumentError, ConfigError, FileError, TinyTrackError
from .evaluator import evaluate, report_document
from .pipeline import PipelineConfig, iter_detections, run_pipeline
from .synth import ScenarioConfig, generate

HYPOTHESIS_HEADER = ("frame", "id", "x", "y", "w", "h", "area", "extent", "major_axis_length", "eccentricity")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ArgumentError(message)


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        doc = io.read_json(args.config)
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.config}: expected a JSON object of sections")
        config = PipelineConfig.from_dict(doc)
    return config.with_overrides(_parse_set(getattr(args, "set", None)))


def _frame_range(text: str | None):
    if text is None:
        return None
    start, sep, stop = text.partition(":")
    try:
        return range(int(start), int(stop)) if sep else range(int(start), int(start) + 1)
    except ValueError as exc:
        raise ArgumentError(f"--frames expects START:STOP, got {text!r}") from exc


def cmd_synth(args) -> int:
    doc = io.read_json(args.scenario)
    if not isinstance(doc, dict):
        raise ConfigError(f"{args.scenario}: expected a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        scenario = ScenarioConfig.from_dict(doc)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{args.scenario}: {exc}") from exc
    frames, annotations = generate(scenario)
    out = Path(args.out_dir)
    io.write_frames(frames, out / "frames", args.format)
    io.write_annotations(annotations, out / "gt.csv")
    io.write_json(scenario.to_dict(), out / "scenario.json")
    print(f"wrote {len(frames)} frames and {len(annotations.entries)} annotations to {out}")
    return 0


def cmd_detect(args) -> int:
    config = _pipeline_config(args)
    frames = io.load_frames(args.frames)
    with io.open_for_write(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HYPOTHESIS_HEADER)
        for frame, _, hypotheses in iter_detections(frames, config):
            for k, h in enumerate(hypotheses):
                f = h.features
                w.writerow([frame.index, k, *h.bbox, f.area, io.format_real(f.extent),
                            io.format_real(f.major_axis_length), io.format_real(f.eccentricity)])
    return 0


def cmd_track(args) -> int:
    config = _pipeline_config(args)
    frames = io.load_frames(args.frames)
    records, _ = run_pipeline(frames, config)
    io.write_tracks(records, args.out)
    print(f"wrote {len({r.track_id for r in records})} tracks ({len(records)} rows) to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    config = _pipeline_config(args)
    records = io.read_tracks(args.tracks)
    annotations = io.read_annotations(args.gt)
    counts, report = evaluate([(r.frame, r.track_id, r.bbox) for r in records], annotations,
                              frame_range=_frame_range(args.frames),
                              window=config.evaluation.window,
                              distance_threshold=config.evaluation.distance_threshold)
    doc = report_document(counts, report)
    if args.out:
        io.write_json(doc, args.out)
    else:
        sys.stdout.write(io.dumps_json(doc))
    return 0


def cmd_overlay(args) -> int:
    frames = io.load_frames(args.frames)
    records = io.read_tracks(args.tracks)
    known = {f.index for f in frames}
    stray = sorted({r.frame for r in records} - known)
    if stray:
        raise ArgumentError(f"tracks reference frames not in {args.frames}: {stray[:5]}")
    paths = io.render_overlays(frames, records, args.out_dir)
    print(f"wrote {len(paths)} overlays to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tinytrack", description="Detect, track and score tiny moving vehicles.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p):
        p.add_argument("--config", help="pipeline configuration JSON ({section: {key: value}})")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one configuration value, e.g. detector.p_fa=0.01")

    p = sub.add_parser("synth", help="render a synthetic scenario")
    p.add_argument("scenario", help="scenario JSON")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="write per-frame vehicle hypotheses")
    p.add_argument("frames", help="directory of frames")
    p.add_argument("--out", "-o", default="hypotheses.csv")
    with_config(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("track", help="run detection and tracking, write the track CSV")
    p.add_argument("frames", help="directory of frames")
    p.add_argument("--out", "-o", default="tracks.csv")
    with_config(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="score a track CSV against annotations")
    p.add_argument("tracks")
    p.add_argument("gt")
    p.add_argument("--out", "-o", help="metrics JSON path (default: stdout)")
    p.add_argument("--frames", help="evaluate frames START:STOP only (STOP excluded)")
    with_config(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("overlay", help="draw tracks onto frames")
    p.add_argument("frames", help="directory of frames")
    p.add_argument("tracks")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_overlay)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except TinyTrackError as exc:
        code = 2 if isinstance(exc, (ArgumentError, ConfigError)) else 1
        _fail(exc.category, exc)
        return code
    except OSError as exc:
        _fail(FileError.category, exc)
        return 1
    except (ValueError, TypeError) as exc:
        _fail("invalid-input", exc)
        return 1


def _fail(category: str, exc: BaseException) -> None:
    message = " ".join(str(exc).split())
    print(f"error: {category}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
