"""
Overlap of rotated boxes
========================

Exact polygon clipping against a brute-force sampling estimate.
"""

import math

import numpy as np

from obbtrack.geom import OrientedBox, Vec2, corners, rotated_iou

# A unit square and the same square turned by 45 degrees form a regular
# octagon when intersected.
square = OrientedBox(Vec2(0, 0), 1, 1, 0)
diamond = OrientedBox(Vec2(0, 0), 1, 1, 45)
print("corners of the diamond:")
for c in corners(diamond):
    print(f"  ({c.x:+.4f}, {c.y:+.4f})")

r = 2 * (math.sqrt(2) - 1)
print(f"clipped IoU    {rotated_iou(square, diamond):.6f}")
print(f"closed form    {r / (2 - r):.6f}")

# Now a sweep: slide an elongated box across another one and turn it.
ref = OrientedBox(Vec2(0, 0), 40, 16, 30)
rng = np.random.default_rng(0)
print("\n  dx    angle   IoU(clip)  IoU(sampled)")
for dx in (0.0, 5.0, 15.0, 30.0):
    for ang in (30.0, 60.0, 120.0):
        other = OrientedBox(Vec2(dx, 0), 40, 16, ang)
        # sample the bounding square of both boxes
        pts = rng.uniform(-60, 60, (200_000, 2))

        def inside(box):
            t = math.radians(box.axis_deg)
            d = pts - np.array(box.center)
            along = d @ np.array([math.cos(t), math.sin(t)])
            across = d @ np.array([-math.sin(t), math.cos(t)])
            return (abs(along) <= box.length / 2) & (abs(across) <= box.width / 2)

        a, b = inside(ref), inside(other)
        sampled = np.count_nonzero(a & b) / np.count_nonzero(a | b)
        print(f"{dx:5.1f} {ang:7.1f}   {rotated_iou(ref, other):.4f}     {sampled:.4f}")

# Swapping the width/height labels and adding 90 degrees describes the same box.
a = OrientedBox(Vec2(3, 4), 40, 16, 10)
b = OrientedBox(Vec2(3, 4), 16, 40, 100)
print(f"\nrelabelled box overlaps itself: IoU = {rotated_iou(a, b):.12f}")
