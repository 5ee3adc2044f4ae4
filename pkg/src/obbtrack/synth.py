"""
Synthetic herds with known ground truth, and the metrics used to score them.

Agents walk smooth parametric paths facing their direction of travel. Each
frame yields one oriented box per agent (raw angle reported mod 180) plus
head/tail boxes from the three simulated part detectors, corrupted by
misses, false positives and positional jitter. Every frame draws from its
own random substream, so output is a pure function of (config, seed).
"""
from __future__ import annotations

import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geom import (AABox, OrientedBox, Vec2, aabb_iou,
                   crop_square, crop_to_frame, frame_to_crop, normalize_deg,
                   part_box_side, short_edge_midpoints)
from .heading import resolve_heading
from .parts import DETECTOR_CLASSES, DetectorId, PartClass, PartDetection, vote_crop

PRESETS = ("line", "cross", "figure8", "herd")
DETECTOR_FILE_NAMES = {v: k for k, v in
                       {"head_tail": DetectorId.HEAD_TAIL, "head": DetectorId.HEAD_ONLY,
                        "tail": DetectorId.TAIL_ONLY}.items()}
HEAD_IOU_THRESHOLD = 0.3


@dataclass(frozen=True)
class NoiseModel:
    """Corruption applied to detector outputs.

    `miss_rate` may be a single probability or a mapping from
    (DetectorId, PartClass) to a probability. Jitter sigmas are fractions of
    the part-box side (parts) or of the box dimensions (oriented boxes); the
    raw angle gets `box_jitter_sigma` radians of noise.
    """

    miss_rate: object = 0.05
    false_positive_rate: float = 0.05
    jitter_sigma: float = 0.10
    box_jitter_sigma: float = 0.02
    true_score: tuple = (0.55, 0.95)
    false_score: tuple = (0.25, 0.75)

    def __post_init__(self):
        rates = self.miss_rate.values() if isinstance(self.miss_rate, Mapping) else [self.miss_rate]
        for p in list(rates) + [self.false_positive_rate]:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range: {p}")
        if self.jitter_sigma < 0 or self.box_jitter_sigma < 0:
            raise ValueError("jitter sigmas must be nonnegative")

    def miss(self, detector: DetectorId, part: PartClass) -> float:
        if isinstance(self.miss_rate, Mapping):
            return float(self.miss_rate.get((detector, part), 0.0))
        return float(self.miss_rate)


NOISE_PROFILES = {
    "zero": NoiseModel(miss_rate=0.0, false_positive_rate=0.0, jitter_sigma=0.0, box_jitter_sigma=0.0),
    "default": NoiseModel(),
    "heavy": NoiseModel(miss_rate=0.15, false_positive_rate=0.15, jitter_sigma=0.15, box_jitter_sigma=0.04),
}


@dataclass(frozen=True)
class ScenarioConfig:
    preset: str = "line"
    n_agents: int = 2
    frames: int = 100
    max_turn_deg: float = 10.0
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if self.n_agents < 1 or self.frames < 1:
            raise ValueError("need at least one agent and one frame")


@dataclass
class Scenario:
    """Per-agent ground truth; trajectories[i, t] = (cx, cy, heading_deg, length, width)."""

    n_agents: int
    frames: int
    trajectories: np.ndarray
    seed: int
    preset: str = "line"

    def box(self, agent: int, frame: int) -> tuple:
        return tuple(float(v) for v in self.trajectories[agent, frame])


# --- trajectories -----------------------------------------------------------

def _positions(preset: str, n_agents: int, frames: int, rng: np.random.Generator):
    """Return a function t -> (n_agents, 2) positions for real-valued t."""
    spacing = 150.0
    if preset == "line":
        phi = rng.uniform(0, 2 * math.pi)
        speed = rng.uniform(1.5, 3.0, n_agents)
        d = np.array([math.cos(phi), math.sin(phi)])
        nrm = np.array([-d[1], d[0]])
        base = 500.0 + np.outer(np.arange(n_agents) - (n_agents - 1) / 2, nrm) * spacing

        def pos(t):
            return base + np.outer(speed * t, d)
    elif preset == "cross":
        # pairs of agents meeting head-on at right angles half way through
        speed = rng.uniform(1.5, 3.0, n_agents)
        mid = frames / 2.0
        dirs, meet = [], []
        for i in range(n_agents):
            pair = i // 2
            a = rng.uniform(0, math.pi / 2) if i % 2 == 0 else dirs[-1] + math.pi / 2
            dirs.append(a)
            meet.append((500.0 + pair * 4 * spacing, 500.0))
        dirs = np.array(dirs)
        d = np.stack([np.cos(dirs), np.sin(dirs)], axis=1)
        meet = np.array(meet)

        def pos(t):
            return meet + d * (speed * (t - mid))[:, None]
    elif preset == "figure8":
        amp = rng.uniform(100.0, 130.0, n_agents)
        period = rng.uniform(180.0, 240.0, n_agents)
        phase = rng.uniform(0, 2 * math.pi, n_agents)
        centers = np.stack([600.0 + np.arange(n_agents) * 3.0 * 140.0,
                            np.full(n_agents, 400.0)], axis=1)

        def pos(t):
            w = 2 * math.pi * t / period + phase
            return centers + np.stack([amp * np.sin(w), amp / 2 * np.sin(2 * w)], axis=1)
    elif preset == "herd":
        cols = max(1, int(math.ceil(math.sqrt(n_agents))))
        phi = rng.uniform(0, 2 * math.pi)
        d = np.array([math.cos(phi), math.sin(phi)])
        nrm = np.array([-d[1], d[0]])
        grid = np.array([(i % cols, i // cols) for i in range(n_agents)], float)
        grid -= grid.mean(axis=0)
        base = 800.0 + np.outer(grid[:, 0], d) * spacing + np.outer(grid[:, 1], nrm) * spacing
        speed = rng.uniform(1.8, 2.2)
        sway = rng.uniform(10.0, 25.0, n_agents)
        sway_period = rng.uniform(80.0, 140.0, n_agents)
        sway_phase = rng.uniform(0, 2 * math.pi, n_agents)

        def pos(t):
            s = sway * np.sin(2 * math.pi * t / sway_period + sway_phase)
            return base + np.outer(np.full(n_agents, speed * t), d) + s[:, None] * nrm
    else:
        raise ValueError(f"unknown preset {preset!r}")
    return pos


def make_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    rng = np.random.default_rng([seed, 0x5CE7])
    pos = _positions(config.preset, config.n_agents, config.frames, rng)
    length = rng.uniform(36.0, 44.0, config.n_agents)
    width = length * rng.uniform(0.35, 0.45, config.n_agents)

    t = np.arange(config.frames, dtype=float)
    traj = np.zeros((config.n_agents, config.frames, 5))
    for k, tk in enumerate(t):
        vel = pos(tk + 0.5) - pos(tk - 0.5)
        traj[:, k, :2] = pos(tk)
        traj[:, k, 2] = np.degrees(np.arctan2(vel[:, 1], vel[:, 0])) % 360.0
    traj[..., 2] = np.where(traj[..., 2] >= 360.0, 0.0, traj[..., 2])
    traj[:, :, 3] = length[:, None]
    traj[:, :, 4] = width[:, None]

    turn = np.abs((np.diff(traj[:, :, 2], axis=1) + 180.0) % 360.0 - 180.0)
    if turn.size and turn.max() > config.max_turn_deg:
        raise ValueError(
            f"preset {config.preset!r} turns {turn.max():.2f} deg/frame > {config.max_turn_deg}")
    return Scenario(config.n_agents, config.frames, traj, seed, config.preset)


# --- detector simulation ----------------------------------------------------

def true_parts(cx, cy, heading, length) -> tuple[Vec2, Vec2]:
    """(head, tail) points of an agent in frame coordinates."""
    t = math.radians(heading)
    dx, dy = length / 2 * math.cos(t), length / 2 * math.sin(t)
    return Vec2(cx + dx, cy + dy), Vec2(cx - dx, cy - dy)


def _detected_box(rng, cx, cy, heading, length, width, noise: NoiseModel) -> OrientedBox:
    j = noise.box_jitter_sigma
    if j > 0:
        cx += rng.normal(0, j * length)
        cy += rng.normal(0, j * width)
        length *= max(0.5, 1 + rng.normal(0, j))
        width *= max(0.5, 1 + rng.normal(0, j))
        heading += math.degrees(rng.normal(0, j))
    score = float(rng.uniform(0.6, 0.99))
    # detectors may label either side as w
    if rng.random() < 0.5:
        return OrientedBox(Vec2(cx, cy), length, width, normalize_deg(heading, 180.0), score)
    return OrientedBox(Vec2(cx, cy), width, length, normalize_deg(heading + 90.0, 180.0), score)


def _simulate_parts(rng, region, side, head, tail, noise: NoiseModel):
    """Yield (detector, class, crop-space center, score) for one crop."""
    truth = {PartClass.HEAD: frame_to_crop(region, head), PartClass.TAIL: frame_to_crop(region, tail)}
    out = []
    for det in DetectorId:
        for part in DETECTOR_CLASSES[det]:
            # draw every variate so substreams stay aligned across profiles
            miss_u, fp_u = rng.random(2)
            jitter = rng.normal(0.0, 1.0, 2) * noise.jitter_sigma * side
            score = rng.uniform(*noise.true_score)
            fp_xy = rng.uniform(0.0, region.side, 2)
            fp_score = rng.uniform(*noise.false_score)
            if miss_u >= noise.miss(det, part):
                p = truth[part]
                out.append((det, part, Vec2(p.x + jitter[0], p.y + jitter[1]), float(score)))
            if fp_u < noise.false_positive_rate:
                out.append((det, part, Vec2(*fp_xy), float(fp_score)))
    return out


@dataclass
class SyntheticData:
    scenario: Scenario
    detections: list = field(default_factory=list)   # detection-file records
    parts: list = field(default_factory=list)        # parts-file records
    truth: list = field(default_factory=list)        # ground-truth records


def generate(config: ScenarioConfig, seed: int) -> SyntheticData:
    """Simulate detector output for a preset scenario."""
    scen = make_scenario(config, seed)
    data = SyntheticData(scen)
    for f in range(scen.frames):
        rng = np.random.default_rng([seed, f])
        dets, gts = [], []
        for a in range(scen.n_agents):
            cx, cy, heading, length, width = scen.box(a, f)
            box = _detected_box(rng, cx, cy, heading, length, width, config.noise)
            dets.append({"cx": box.center.x, "cy": box.center.y, "w": box.w, "h": box.h,
                         "angle_deg": box.theta_raw, "score": box.score})
            gts.append({"agent_id": a, "cx": cx, "cy": cy, "w": length, "h": width,
                        "angle_deg": normalize_deg(heading, 180.0), "heading_deg": heading,
                        "score": 1.0})
            region = crop_square(box)
            side = part_box_side(region)
            head, tail = true_parts(cx, cy, heading, length)
            by_det = defaultdict(list)
            for det, part, c, score in _simulate_parts(rng, region, side, head, tail, config.noise):
                by_det[det].append({"class": part.value, "cx": c.x, "cy": c.y,
                                    "side": side, "score": score})
            for det in DetectorId:
                if by_det[det]:
                    data.parts.append({"frame": f, "det_index": a,
                                       "detector": DETECTOR_FILE_NAMES[det], "parts": by_det[det]})
        data.detections.append({"frame": f, "detections": dets})
        data.truth.append({"frame": f, "detections": gts})
    return data


def _dump(records, path):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def write_synthetic(data: SyntheticData, out_dir) -> tuple[str, str, str]:
    """Write detections.jsonl, parts.jsonl, truth.jsonl; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = tuple(os.path.join(out_dir, n) for n in
                  ("detections.jsonl", "parts.jsonl", "truth.jsonl"))
    for recs, p in zip((data.detections, data.parts, data.truth), paths):
        _dump(recs, p)
    return paths


def load_truth(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --- head accuracy ----------------------------------------------------------

@dataclass(frozen=True)
class HeadTruth:
    head: Vec2
    side: float


def estimate_head(box: OrientedBox, head, tail) -> Optional[Vec2]:
    """Head estimate in frame coordinates.

    A voted head point is used as is; otherwise the tail decides the heading
    and the front short-edge midpoint stands in for the head.
    """
    if head is not None:
        return Vec2(*head)
    res = resolve_heading(box, None, tail)
    if res.result is None:
        return None
    return short_edge_midpoints(res.result)[0]


def eval_heads(estimates: Mapping, truth: Mapping) -> float:
    """Fraction of crops whose estimated head box overlaps the true one at IoU >= 0.3.

    Both maps are keyed by (frame, det_index); missing or None estimates
    count as failures.
    """
    if not truth:
        return 0.0
    correct = 0
    for key, t in truth.items():
        est = estimates.get(key)
        if est is None:
            continue
        iou = aabb_iou(AABox.square(est, t.side), AABox.square(t.head, t.side))
        correct += iou >= HEAD_IOU_THRESHOLD
    return correct / len(truth)


def parts_from_record(rec: dict) -> list[PartDetection]:
    from .pipeline import parse_parts_record  # avoid import cycle at module load
    return parse_parts_record(rec)[2]


def head_truth(data: SyntheticData) -> dict:
    out = {}
    for drec, trec in zip(data.detections, data.truth):
        f = drec["frame"]
        for i, (d, g) in enumerate(zip(drec["detections"], trec["detections"])):
            box = OrientedBox(Vec2(d["cx"], d["cy"]), d["w"], d["h"], d["angle_deg"], d["score"])
            side = part_box_side(crop_square(box))
            head, _ = true_parts(g["cx"], g["cy"], g["heading_deg"], g["w"])
            out[(f, i)] = HeadTruth(head, side)
    return out


def head_estimates(data: SyntheticData, detectors: Optional[Iterable[DetectorId]] = None,
                   iou_threshold: float = 0.3) -> dict:
    """Estimated head per crop using only `detectors` (all three when None)."""
    allowed = set(DetectorId) if detectors is None else set(detectors)
    parts = defaultdict(list)
    for rec in data.parts:
        for p in parts_from_record(rec):
            if p.detector in allowed:
                parts[(rec["frame"], rec["det_index"])].append(p)
    out = {}
    for drec in data.detections:
        f = drec["frame"]
        for i, d in enumerate(drec["detections"]):
            box = OrientedBox(Vec2(d["cx"], d["cy"]), d["w"], d["h"], d["angle_deg"], d["score"])
            region = crop_square(box)
            vote = vote_crop(parts.get((f, i), []), iou_threshold)
            head = crop_to_frame(region, vote.head) if vote.head is not None else None
            tail = crop_to_frame(region, vote.tail) if vote.tail is not None else None
            out[(f, i)] = estimate_head(box, head, tail)
    return out


def head_accuracy_table(data: SyntheticData, iou_threshold: float = 0.3) -> dict:
    """Head accuracy of the full vote and of each detector on its own."""
    truth = head_truth(data)
    table = {"vote": eval_heads(head_estimates(data, None, iou_threshold), truth)}
    for det in DetectorId:
        name = DETECTOR_FILE_NAMES[det]
        table[name] = eval_heads(head_estimates(data, [det], iou_threshold), truth)
    return table


# --- tracking metrics -------------------------------------------------------

@dataclass(frozen=True)
class TrackMetrics:
    id_switches: int
    heading_flip_count: int
    mean_position_error: float
    matched: int
    missed: int


def _arc(a, b) -> float:
    return abs((a - b + 180.0) % 360.0 - 180.0)


def eval_tracks(rows: Sequence, truth: Sequence[dict], max_dist_factor: float = 1.0) -> TrackMetrics:
    """Score track rows against ground-truth frame records.

    Per frame, an agent keeps last frame's track if that track is still
    within `max_dist_factor` agent lengths; the rest are matched by minimum
    total center distance under the same limit. An
    identity switch is an agent changing track id; simultaneous exchanges
    among agents count once per exchanged id pair. A heading flip is counted
    when an agent last tracked within 30 degrees is next seen more than 90
    degrees off.
    """
    by_frame = defaultdict(list)
    for r in rows:
        by_frame[r.frame].append(r)

    last_id: dict = {}
    heading_ok: dict = {}
    switches = flips = matched = missed = 0
    err_sum = 0.0
    for rec in truth:
        f = rec["frame"]
        gts = rec["detections"]
        frs = by_frame.get(f, [])
        pairs = []
        if gts and frs:
            d = np.array([[math.hypot(g["cx"] - r.cx, g["cy"] - r.cy) for r in frs] for g in gts])
            ok = d <= np.array([[max_dist_factor * g["w"]] for g in gts])
            # keep last frame's correspondences that are still within reach
            for gi, g in enumerate(gts):
                prev = last_id.get(g.get("agent_id", gi))
                for ri, r in enumerate(frs):
                    if r.track_id == prev and ok[gi, ri]:
                        pairs.append((gi, ri))
                        ok[gi, :] = False
                        ok[:, ri] = False
            cost = np.where(ok, d, 1e9)
            for gi, ri in zip(*linear_sum_assignment(cost)):
                if ok[gi, ri]:
                    pairs.append((gi, ri))
        missed += len(gts) - len(pairs)
        changes = set()
        for gi, ri in pairs:
            g, r = gts[gi], frs[ri]
            aid = g.get("agent_id", gi)
            matched += 1
            err_sum += math.hypot(g["cx"] - r.cx, g["cy"] - r.cy)
            prev = last_id.get(aid)
            if prev is not None and prev != r.track_id:
                changes.add(frozenset((prev, r.track_id)))
            last_id[aid] = r.track_id
            err = _arc(r.heading, g["heading_deg"])
            if err <= 30.0:
                heading_ok[aid] = True
            elif err > 90.0 and heading_ok.get(aid):
                flips += 1
                heading_ok[aid] = False
        switches += len(changes)
    mean_err = err_sum / matched if matched else float("nan")
    return TrackMetrics(switches, flips, mean_err, matched, missed)
