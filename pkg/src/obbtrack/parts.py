"""
Majority voting over head/tail boxes from the three part detectors.

Within one crop and one part class, boxes are clustered greedily around a
group center (the highest-scoring member); each box is one vote. The group
with most votes wins, ties going to the higher-scoring center.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .geom import AABox, Vec2, aabb_iou

DEFAULT_IOU_THRESHOLD = 0.3


class DetectorId(enum.IntEnum):
    HEAD_TAIL = 0
    HEAD_ONLY = 1
    TAIL_ONLY = 2


class PartClass(enum.Enum):
    HEAD = "head"
    TAIL = "tail"


# detector names used in the parts file
DETECTOR_NAMES = {
    "head_tail": DetectorId.HEAD_TAIL,
    "head": DetectorId.HEAD_ONLY,
    "tail": DetectorId.TAIL_ONLY,
}
DETECTOR_CLASSES = {
    DetectorId.HEAD_TAIL: (PartClass.HEAD, PartClass.TAIL),
    DetectorId.HEAD_ONLY: (PartClass.HEAD,),
    DetectorId.TAIL_ONLY: (PartClass.TAIL,),
}


@dataclass(frozen=True)
class PartDetection:
    detector: DetectorId
    part: PartClass
    box: AABox
    score: float

    def __post_init__(self):
        if abs(self.box.width - self.box.height) > 1e-6:
            raise ValueError(f"part box must be square, got {self.box.width} x {self.box.height}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.part not in DETECTOR_CLASSES[self.detector]:
            raise ValueError(f"{self.detector.name} cannot emit {self.part.value}")

    @property
    def center(self) -> Vec2:
        return self.box.center


def detection_key(det: PartDetection):
    """Total order: higher score first, then smaller x, smaller y, detector order."""
    c = det.center
    return (-det.score, c.x, c.y, int(det.detector))


@dataclass
class PartGroup:
    center: PartDetection
    members: list = field(default_factory=list)

    @property
    def votes(self) -> int:
        return len(self.members)

    @property
    def part(self) -> PartClass:
        return self.center.part


@dataclass(frozen=True)
class VoteOutcome:
    head: Optional[Vec2] = None
    tail: Optional[Vec2] = None
    head_votes: int = 0
    tail_votes: int = 0


def group_parts(dets: Sequence[PartDetection],
                iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> list[PartGroup]:
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    if len({d.part for d in dets}) > 1:
        raise ValueError("group_parts expects detections of a single part class")

    groups: list[PartGroup] = []
    for det in sorted(dets, key=detection_key):
        for g in groups:
            if aabb_iou(g.center.box, det.box) >= iou_threshold:
                g.members.append(det)
                g.center = min(g.members, key=detection_key)
                break
        else:
            groups.append(PartGroup(center=det, members=[det]))
    return groups


def _group_rank(g: PartGroup):
    # smaller is better
    return (-g.votes,) + detection_key(g.center)


def select_group(groups: Iterable[PartGroup]) -> Optional[PartGroup]:
    groups = list(groups)
    if not groups:
        return None
    return min(groups, key=_group_rank)


def vote_part(dets: Sequence[PartDetection], part: PartClass,
              iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> Optional[tuple[Vec2, int]]:
    """Winning location (group center's box center) and its vote count, or None."""
    chosen = [d for d in dets if d.part == part]
    best = select_group(group_parts(chosen, iou_threshold))
    if best is None:
        return None
    return best.center.center, best.votes


def vote_crop(dets: Sequence[PartDetection],
              iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> VoteOutcome:
    head = vote_part(dets, PartClass.HEAD, iou_threshold)
    tail = vote_part(dets, PartClass.TAIL, iou_threshold)
    return VoteOutcome(
        head=head[0] if head else None,
        tail=tail[0] if tail else None,
        head_votes=head[1] if head else 0,
        tail_votes=tail[1] if tail else 0,
    )
