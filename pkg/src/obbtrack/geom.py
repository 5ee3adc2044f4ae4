"""
Rectangle geometry shared by the voting, heading and tracking stages.

Conventions: image coordinates (+x right, +y down), angles in degrees at
every public boundary and radians inside. A heading of theta points along
(cos theta, sin theta), so 90 degrees is +y (down the screen).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

PART_AREA_FRACTION = 0.15
_AREA_EPS = 1e-12


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class OrientedBox:
    """Detector output: a rotated rectangle whose angle is only known mod 180."""

    center: Vec2
    w: float
    h: float
    theta_raw: float
    score: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", Vec2(*self.center))
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")
        if not 0.0 <= self.theta_raw < 180.0:
            raise ValueError(f"raw angle must lie in [0, 180), got {self.theta_raw}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")

    @property
    def length(self) -> float:
        return max(self.w, self.h)

    @property
    def width(self) -> float:
        return min(self.w, self.h)

    @property
    def axis_deg(self) -> float:
        """Direction of the long axis in [0, 180); w == h keeps theta_raw."""
        if self.w >= self.h:
            return self.theta_raw
        return (self.theta_raw + 90.0) % 180.0


@dataclass(frozen=True)
class HeadedBox:
    """Rotated rectangle with a resolved heading in [0, 360)."""

    center: Vec2
    length: float
    width: float
    heading: float
    score: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", Vec2(*self.center))
        if not (self.length >= self.width > 0):
            raise ValueError(
                f"need length >= width > 0, got {self.length} x {self.width}")
        if not 0.0 <= self.heading < 360.0:
            raise ValueError(f"heading must lie in [0, 360), got {self.heading}")

    @property
    def axis_deg(self) -> float:
        return self.heading % 180.0

    def unit(self) -> Vec2:
        t = math.radians(self.heading)
        return Vec2(math.cos(t), math.sin(t))


Box = Union[OrientedBox, HeadedBox]


@dataclass(frozen=True)
class AABox:
    min: Vec2
    max: Vec2

    def __post_init__(self):
        object.__setattr__(self, "min", Vec2(*self.min))
        object.__setattr__(self, "max", Vec2(*self.max))
        if self.min.x > self.max.x or self.min.y > self.max.y:
            raise ValueError(f"inverted box {self.min} -> {self.max}")

    @classmethod
    def square(cls, center, side: float) -> "AABox":
        half = side / 2.0
        return cls(Vec2(center[0] - half, center[1] - half),
                   Vec2(center[0] + half, center[1] + half))

    @property
    def center(self) -> Vec2:
        return Vec2((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class CropRegion:
    """Square crop anchored at its top-left corner, in frame pixels."""

    origin: Vec2
    side: float

    def __post_init__(self):
        object.__setattr__(self, "origin", Vec2(*self.origin))
        if not self.side > 0:
            raise ValueError(f"crop side must be positive, got {self.side}")


def normalize_deg(angle: float, period: float = 360.0) -> float:
    """Wrap into [0, period), folding the float edge case a % p == p to 0."""
    a = angle % period
    return 0.0 if a >= period else a


def _rect_params(box: Box):
    return box.center, box.length, box.width, math.radians(box.axis_deg)


def corners(box: Box) -> list[Vec2]:
    """Rectangle vertices with positive shoelace area (counter-clockwise in x-right/y-up terms)."""
    (cx, cy), length, width, t = _rect_params(box)
    c, s = math.cos(t), math.sin(t)
    hl, hw = length / 2.0, width / 2.0
    out = []
    for lx, ly in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        out.append(Vec2(cx + c * lx - s * ly, cy + s * lx + c * ly))
    return out


def short_edge_midpoints(box: Box) -> tuple[Vec2, Vec2]:
    """Midpoints of the two edges of extent `width`, forward end first."""
    (cx, cy), length, _, t = _rect_params(box)
    if isinstance(box, HeadedBox):
        t = math.radians(box.heading)
    dx, dy = length / 2.0 * math.cos(t), length / 2.0 * math.sin(t)
    return Vec2(cx + dx, cy + dy), Vec2(cx - dx, cy - dy)


def polygon_area(pts: Sequence) -> float:
    """Signed shoelace area."""
    if len(pts) < 3:
        return 0.0
    p = np.asarray(pts, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_convex(subject: Sequence, clip: Sequence) -> list:
    """Sutherland-Hodgman clipping of `subject` by a convex, positively oriented `clip`."""
    out = list(subject)
    n = len(clip)
    for i in range(n):
        if not out:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        src, out = out, []
        m = len(src)
        for j in range(m):
            p, q = src[j], src[(j + 1) % m]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                f = sp / (sp - sq)
                out.append((p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])))
    return out


def rotated_iou(a: Box, b: Box) -> float:
    area_a = a.length * a.width
    area_b = b.length * b.width
    if area_a <= _AREA_EPS or area_b <= _AREA_EPS:
        return 0.0
    ca, cb = corners(a), corners(b)
    # cheap reject on circumscribed circles
    ra = 0.5 * math.hypot(a.length, a.width)
    rb = 0.5 * math.hypot(b.length, b.width)
    if (a.center - b.center).norm() > ra + rb:
        return 0.0
    inter = abs(polygon_area(clip_convex(ca, cb)))
    union = area_a + area_b - inter
    if union <= _AREA_EPS:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def aabb_iou(a: AABox, b: AABox) -> float:
    iw = min(a.max.x, b.max.x) - max(a.min.x, b.min.x)
    ih = min(a.max.y, b.max.y) - max(a.min.y, b.min.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= _AREA_EPS:
        return 0.0
    return inter / union


def envelope(box: Box) -> AABox:
    pts = corners(box)
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return AABox(Vec2(min(xs), min(ys)), Vec2(max(xs), max(ys)))


def crop_square(box: Box) -> CropRegion:
    """Square crop anchored at the envelope's top-left, side = larger envelope extent."""
    env = envelope(box)
    return CropRegion(env.min, max(env.width, env.height))


def crop_to_frame(region: CropRegion, p) -> Vec2:
    return Vec2(region.origin.x + p[0], region.origin.y + p[1])


def frame_to_crop(region: CropRegion, p) -> Vec2:
    return Vec2(p[0] - region.origin.x, p[1] - region.origin.y)


def part_box_side(region: CropRegion, area_fraction: float = PART_AREA_FRACTION) -> float:
    """Side of the square part box covering `area_fraction` of the crop."""
    return region.side * math.sqrt(area_fraction)
