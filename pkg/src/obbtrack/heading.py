"""Turn a 180-degree-ambiguous box into a 0-360 heading using voted head/tail points."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .geom import HeadedBox, OrientedBox, Vec2, normalize_deg, short_edge_midpoints

# |cos| of the angle between the long axis and the part vector below which the
# point counts as perpendicular; absorbs rounding in cos/sin of exact angles
PERPENDICULAR_TOL = 1e-9


class HeadingSource(enum.Enum):
    FROM_HEAD = "head"
    FROM_TAIL = "tail"
    NONE = "predicted"


@dataclass(frozen=True)
class HeadingResolution:
    box: OrientedBox
    result: Optional[HeadedBox]
    source: HeadingSource
    head_point: Optional[Vec2] = None
    tail_point: Optional[Vec2] = None
    contradiction: bool = False

    @property
    def resolved(self) -> bool:
        return self.result is not None


def _side(axis: Vec2, center: Vec2, point) -> int:
    """+1 if `point` lies ahead along `axis`, -1 behind, 0 when perpendicular."""
    v = Vec2(point[0] - center.x, point[1] - center.y)
    d = axis.dot(v)
    if abs(d) <= PERPENDICULAR_TOL * axis.norm() * v.norm():
        return 0
    return 1 if d > 0 else -1


def resolve_heading(box: OrientedBox, head=None, tail=None) -> HeadingResolution:
    """Pick the short-edge direction facing the head (or away from the tail).

    `head` and `tail` are frame-coordinate points or None. The head wins when
    both are given; the tail only sets the `contradiction` flag if it sits on
    the same side. A part lying exactly across the long axis carries no
    information, so the tail is consulted next and otherwise the box stays
    unresolved.
    """
    head = Vec2(*head) if head is not None else None
    tail = Vec2(*tail) if tail is not None else None
    front, _ = short_edge_midpoints(box)
    axis = front - box.center

    head_side = _side(axis, box.center, head) if head is not None else 0
    tail_side = _side(axis, box.center, tail) if tail is not None else 0

    if head_side:
        sign, source = head_side, HeadingSource.FROM_HEAD
    elif tail_side:
        sign, source = -tail_side, HeadingSource.FROM_TAIL
    else:
        return HeadingResolution(box, None, HeadingSource.NONE, head, tail)

    heading = box.axis_deg if sign > 0 else box.axis_deg + 180.0
    result = HeadedBox(box.center, box.length, box.width,
                       normalize_deg(heading), box.score)
    contradiction = bool(head_side and tail_side and head_side == tail_side)
    return HeadingResolution(box, result, source, head, tail, contradiction)


def heading_to_trig(heading: float) -> tuple[float, float]:
    """(sin, cos) of a heading in degrees."""
    t = math.radians(heading)
    return math.sin(t), math.cos(t)


def trig_to_heading(s: float, c: float) -> float:
    return normalize_deg(math.degrees(math.atan2(s, c)))
