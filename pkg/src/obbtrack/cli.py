"""Command line entry point: ``obbtrack {track,synth,eval}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import pipeline, synth

NOISE_KEYS = ("miss_rate", "false_positive_rate", "jitter_sigma", "box_jitter_sigma")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags below override it")
    g = p.add_argument_group("config overrides")
    for key, kind in pipeline.CONFIG_KEYS.items():
        g.add_argument(f"--{key}", dest=f"cfg_{key}", default=None, metavar="VALUE",
                       help=f"(default {getattr(pipeline.Config(), key)!r})")


def _explicit_config(args) -> dict:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(pipeline.parse_config_text(fh.read(), args.config))
    for key in pipeline.CONFIG_KEYS:
        v = getattr(args, f"cfg_{key}")
        if v is not None:
            values.update(pipeline.coerce_config({key: v}))
    return values


def cmd_track(args) -> int:
    config = pipeline.Config(**_explicit_config(args))
    svg = None
    if args.render_svg:
        os.makedirs(args.render_svg, exist_ok=True)
        svg = os.path.join(args.render_svg, "overview.svg")
    summary = pipeline.run(config, args.detections, args.parts, args.output, svg)
    print(json.dumps(dataclasses.asdict(summary), indent=2))
    return 0


def cmd_synth(args) -> int:
    explicit = _explicit_config(args)
    noise = synth.NOISE_PROFILES[args.noise_profile]
    overrides = {k: explicit[k] for k in NOISE_KEYS if k in explicit}
    if overrides:
        noise = dataclasses.replace(noise, **overrides)
    cfg = synth.ScenarioConfig(preset=args.preset, n_agents=args.agents, frames=args.frames,
                               max_turn_deg=explicit.get("max_turn_deg", 10.0), noise=noise)
    data = synth.generate(cfg, args.seed)
    for path in synth.write_synthetic(data, args.out_dir):
        print(path)
    return 0


def cmd_eval(args) -> int:
    truth = synth.load_truth(args.truth)
    result = {}
    if args.tracks:
        m = synth.eval_tracks(pipeline.read_tracks(args.tracks), truth)
        result.update(dataclasses.asdict(m))
    if args.detections and args.parts:
        data = synth.SyntheticData(None, synth.load_truth(args.detections),
                                   synth.load_truth(args.parts), truth)
        result["head_accuracy"] = synth.head_accuracy_table(data)
    print(json.dumps(result, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obbtrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="vote parts, resolve headings and track")
    p.add_argument("--detections", required=True)
    p.add_argument("--parts")
    p.add_argument("--output", required=True)
    p.add_argument("--render-svg", metavar="DIR")
    _add_config_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--preset", choices=synth.PRESETS, default="line")
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-profile", choices=sorted(synth.NOISE_PROFILES), default="default")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score tracks and/or head estimates against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--tracks")
    p.add_argument("--detections")
    p.add_argument("--parts")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"obbtrack: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
