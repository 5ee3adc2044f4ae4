"""
File-driven pipeline: detections + part boxes in, track CSV (and SVG) out.

Input files are line-delimited JSON, one frame (detections) or one
(frame, detection, detector) triple (parts) per line. Part coordinates are
crop pixels of ``crop_square(detection)``. Both files are consumed as
streams, so memory stays bounded by a single frame plus live tracks.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .geom import AABox, OrientedBox, Vec2, crop_square, crop_to_frame
from .heading import HeadingSource, resolve_heading
from .parts import DETECTOR_NAMES, PartClass, PartDetection, vote_crop
from .track import NoiseConfig, Observation, Tracker

logger = logging.getLogger(__name__)

CSV_HEADER = ["frame", "track_id", "cx", "cy", "length", "width",
              "heading_deg", "heading_source", "status"]


class FormatError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path, self.lineno = path, lineno


# --- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class Config:
    """Every tunable constant of the pipeline, tracker and simulator."""

    min_score: float = 0.25
    iou_threshold: float = 0.3
    n_init: int = 3
    max_age: int = 30
    min_iou: float = 0.1
    q_pos: float = 1 / 20
    q_vel: float = 1 / 80
    q_ang: float = 0.1
    r_pos: float = 1 / 20
    r_ang: float = 0.05
    p0_pos: float = 2.0
    p0_ang: float = 2.0
    p0_vel: float = 10.0
    p0_ang_unresolved: float = 1.0
    # simulator
    max_turn_deg: float = 10.0
    miss_rate: float = 0.05
    false_positive_rate: float = 0.05
    jitter_sigma: float = 0.10
    box_jitter_sigma: float = 0.02

    def noise(self) -> NoiseConfig:
        names = {f.name for f in dataclasses.fields(NoiseConfig)}
        return NoiseConfig(**{k: getattr(self, k) for k in names})

    def tracker(self) -> Tracker:
        return Tracker(self.noise(), n_init=self.n_init, max_age=self.max_age,
                       min_iou=self.min_iou)

    def replace(self, **overrides) -> "Config":
        return dataclasses.replace(self, **coerce_config(overrides))


CONFIG_KEYS = {f.name: f.type for f in dataclasses.fields(Config)}


def coerce_config(values: dict) -> dict:
    out = {}
    for key, value in values.items():
        if key not in CONFIG_KEYS:
            raise KeyError(f"unknown config key {key!r}")
        kind = int if CONFIG_KEYS[key] in (int, "int") else float
        out[key] = kind(value)
    return out


def parse_config_text(text: str, path="<config>") -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(path, lineno, f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            values.update(coerce_config({key: value}))
        except (KeyError, ValueError) as exc:
            raise FormatError(path, lineno, str(exc)) from exc
    return values


def load_config(path: Optional[str] = None, **overrides) -> Config:
    values = {}
    if path:
        with open(path) as fh:
            values = parse_config_text(fh.read(), path)
    values.update(coerce_config(overrides))
    return Config(**values)


def dump_config(config: Config) -> str:
    return "".join(f"{k} = {getattr(config, k)!r}\n" for k in CONFIG_KEYS)


# --- input ------------------------------------------------------------------

@dataclass
class FrameRecord:
    frame_index: int
    detections: list
    parts: dict = field(default_factory=dict)   # det index -> [PartDetection]


def _json_lines(path) -> Iterator[tuple[int, dict]]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(path, lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(rec, dict):
                raise FormatError(path, lineno, "record must be an object")
            yield lineno, rec


def _frame_of(rec, path, lineno) -> int:
    f = rec.get("frame")
    if not isinstance(f, int) or isinstance(f, bool) or f < 0:
        raise FormatError(path, lineno, f"'frame' must be a nonnegative integer, got {f!r}")
    return f


def parse_detection(d: dict) -> OrientedBox:
    return OrientedBox(Vec2(float(d["cx"]), float(d["cy"])), float(d["w"]), float(d["h"]),
                       float(d["angle_deg"]), float(d.get("score", 1.0)))


def load_detections(path) -> Iterator[FrameRecord]:
    """Stream frame records, validating boxes and strictly increasing frames."""
    last = None
    for lineno, rec in _json_lines(path):
        frame = _frame_of(rec, path, lineno)
        if last is not None and frame <= last:
            raise FormatError(path, lineno, f"frame {frame} does not follow frame {last}")
        last = frame
        try:
            dets = [parse_detection(d) for d in rec.get("detections", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, f"bad detection: {exc}") from exc
        yield FrameRecord(frame, dets)


def parse_parts_record(rec: dict) -> tuple[int, int, list[PartDetection]]:
    detector = DETECTOR_NAMES[rec["detector"]]
    out = []
    for p in rec.get("parts", []):
        box = AABox.square((float(p["cx"]), float(p["cy"])), float(p["side"]))
        out.append(PartDetection(detector, PartClass(p["class"]), box, float(p["score"])))
    det_index = rec["det_index"]
    if not isinstance(det_index, int) or det_index < 0:
        raise ValueError(f"bad det_index {det_index!r}")
    return rec["frame"], det_index, out


def load_parts(path) -> Iterator[tuple[int, int, list[PartDetection]]]:
    """Stream (frame, det_index, parts); frames must be nondecreasing."""
    last = None
    for lineno, rec in _json_lines(path):
        frame = _frame_of(rec, path, lineno)
        if last is not None and frame < last:
            raise FormatError(path, lineno, f"frame {frame} after frame {last}")
        last = frame
        try:
            yield parse_parts_record(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, f"bad parts record: {exc}") from exc


def merge_parts(frames: Iterable[FrameRecord],
                parts: Optional[Iterable[tuple]]) -> Iterator[FrameRecord]:
    """Attach part records to their frames, walking both streams once."""
    it = iter(parts or ())
    pending = next(it, None)
    for rec in frames:
        while pending is not None and pending[0] < rec.frame_index:
            logger.warning("parts for frame %d have no detections; skipped", pending[0])
            pending = next(it, None)
        while pending is not None and pending[0] == rec.frame_index:
            _, idx, dets = pending
            if idx >= len(rec.detections):
                logger.warning("frame %d: parts reference detection %d of %d; skipped",
                               rec.frame_index, idx, len(rec.detections))
            else:
                rec.parts.setdefault(idx, []).extend(dets)
            pending = next(it, None)
        yield rec


# --- output -----------------------------------------------------------------

def _r4(x: float) -> float:
    return round(float(x), 4) + 0.0


@dataclass(frozen=True)
class TrackRow:
    frame: int
    track_id: int
    cx: float
    cy: float
    length: float
    width: float
    heading: float
    heading_source: str
    status: str = "confirmed"

    def rounded(self) -> "TrackRow":
        h = _r4(self.heading) % 360.0
        return dataclasses.replace(self, cx=_r4(self.cx), cy=_r4(self.cy),
                                   length=_r4(self.length), width=_r4(self.width),
                                   heading=h + 0.0)


def format_row(row: TrackRow) -> list[str]:
    r = row.rounded()
    return [str(r.frame), str(r.track_id), f"{r.cx:.4f}", f"{r.cy:.4f}",
            f"{r.length:.4f}", f"{r.width:.4f}", f"{r.heading:.4f}",
            r.heading_source, r.status]


class TrackWriter:
    """Incremental CSV writer; usable as a context manager."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_HEADER)

    def write(self, rows: Iterable[TrackRow]):
        for row in rows:
            self._w.writerow(format_row(row))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_tracks(rows: Iterable[TrackRow], path):
    with TrackWriter(path) as w:
        w.write(rows)


def read_tracks(path) -> list[TrackRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise FormatError(path, 1, f"unexpected header {header!r}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            try:
                f, tid, cx, cy, ln, wd, hd, src, status = rec
                rows.append(TrackRow(int(f), int(tid), float(cx), float(cy), float(ln),
                                     float(wd), float(hd), src, status))
            except ValueError as exc:
                raise FormatError(path, lineno, str(exc)) from exc
        return rows


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def render_svg(rows: Iterable[TrackRow], path, frame_range: Optional[tuple] = None,
               margin: float = 40.0):
    """Trajectory overview: one polyline per track, heading arrow at its last frame."""
    rows = [r for r in rows if frame_range is None or frame_range[0] <= r.frame <= frame_range[1]]
    tracks: dict = {}
    for r in rows:
        tracks.setdefault(r.track_id, []).append(r)
    if rows:
        xs = [r.cx for r in rows]
        ys = [r.cy for r in rows]
        x0, y0 = min(xs) - margin, min(ys) - margin
        w, h = max(xs) - x0 + margin, max(ys) - y0 + margin
    else:
        x0 = y0 = 0.0
        w = h = 2 * margin
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.1f} {y0:.1f} {w:.1f} {h:.1f}" '
             f'width="{w:.0f}" height="{h:.0f}">',
             f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{w:.1f}" height="{h:.1f}" fill="white"/>']
    for tid in sorted(tracks):
        trk = sorted(tracks[tid], key=lambda r: r.frame)
        color = _PALETTE[tid % len(_PALETTE)]
        pts = " ".join(f"{r.cx:.2f},{r.cy:.2f}" for r in trk)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        last = trk[-1]
        t = math.radians(last.heading)
        hx = last.cx + last.length / 2 * math.cos(t)
        hy = last.cy + last.length / 2 * math.sin(t)
        parts.append(f'<line x1="{last.cx:.2f}" y1="{last.cy:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" '
                     f'stroke="{color}" stroke-width="3"/>')
        parts.append(f'<circle cx="{hx:.2f}" cy="{hy:.2f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{last.cx + 6:.2f}" y="{last.cy - 6:.2f}" font-size="12" '
                     f'fill="{color}">{tid}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# --- orchestration ----------------------------------------------------------

@dataclass
class RunSummary:
    frames: int = 0
    detections: int = 0
    dropped_low_score: int = 0
    resolved: int = 0
    unresolved: int = 0
    contradictions: int = 0
    rows: int = 0
    tracks_created: int = 0
    active_tracks: int = 0


def process_frame(rec: FrameRecord, tracker: Tracker, config: Config,
                  summary: Optional[RunSummary] = None) -> list[TrackRow]:
    """Vote parts, resolve headings and advance the tracker by one frame."""
    summary = summary if summary is not None else RunSummary()
    obs = []
    for i, box in enumerate(rec.detections):
        if box.score < config.min_score:
            summary.dropped_low_score += 1
            continue
        summary.detections += 1
        region = crop_square(box)
        vote = vote_crop(rec.parts.get(i, []), config.iou_threshold)
        head = crop_to_frame(region, vote.head) if vote.head is not None else None
        tail = crop_to_frame(region, vote.tail) if vote.tail is not None else None
        res = resolve_heading(box, head, tail)
        if res.resolved:
            summary.resolved += 1
        else:
            summary.unresolved += 1
        summary.contradictions += res.contradiction
        obs.append(Observation.from_resolution(res))
    out = tracker.step(obs, rec.frame_index)
    summary.frames += 1
    rows = [TrackRow(rec.frame_index, o.track_id, o.box.center.x, o.box.center.y,
                     o.box.length, o.box.width, o.box.heading, o.heading_source.value,
                     o.status.value) for o in sorted(out, key=lambda o: o.track_id)]
    summary.rows += len(rows)
    return rows


def run(config: Config, detections_path, parts_path, output_path,
        svg_path: Optional[str] = None) -> RunSummary:
    """Run voting, heading resolution and tracking over whole files."""
    tracker = config.tracker()
    summary = RunSummary()
    parts = load_parts(parts_path) if parts_path and os.path.exists(parts_path) else None
    if parts_path and parts is None:
        logger.warning("parts file %s not found; all headings will be predicted", parts_path)
    kept = [] if svg_path else None
    with TrackWriter(output_path) as writer:
        for rec in merge_parts(load_detections(detections_path), parts):
            rows = process_frame(rec, tracker, config, summary)
            writer.write(rows)
            if kept is not None:
                kept.extend(rows)
    if svg_path:
        render_svg(kept, svg_path)
    summary.tracks_created = tracker.created
    summary.active_tracks = sum(t.status.value == "confirmed" for t in tracker.tracks)
    return summary
