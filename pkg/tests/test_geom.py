import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obbtrack.geom import (AABox, CropRegion, HeadedBox, OrientedBox, Vec2, aabb_iou, corners,
                           crop_square, crop_to_frame, envelope, frame_to_crop, part_box_side,
                           polygon_area, rotated_iou, short_edge_midpoints)

from .oracles import monte_carlo_iou, rotate_points


def as_set(points, nd=9):
    return {(round(p[0], nd) + 0.0, round(p[1], nd) + 0.0) for p in points}


def test_corners_axis_aligned():
    box = HeadedBox(Vec2(0, 0), 4, 2, 0)
    assert as_set(corners(box)) == {(2, 1), (-2, 1), (-2, -1), (2, -1)}


def test_corners_quarter_turn():
    box = HeadedBox(Vec2(0, 0), 4, 2, 90)
    assert as_set(corners(box)) == {(-1, 2), (-1, -2), (1, -2), (1, 2)}


def test_corners_match_rotation_matrix():
    box = HeadedBox(Vec2(3, -1), 4, 2, 30)
    expected = rotate_points([(2, 1), (-2, 1), (-2, -1), (2, -1)], 30, center=(3, -1))
    np.testing.assert_allclose(np.array(corners(box)), expected, atol=1e-12)


def test_corners_are_positively_oriented_and_centered():
    box = OrientedBox(Vec2(10, 20), 3, 7, 33.0)
    pts = corners(box)
    assert polygon_area(pts) == pytest.approx(21.0)
    np.testing.assert_allclose(np.mean(pts, axis=0), [10, 20], atol=1e-9)


def test_oriented_box_canonical_axis():
    assert OrientedBox(Vec2(0, 0), 4, 2, 10).axis_deg == 10
    assert OrientedBox(Vec2(0, 0), 2, 4, 10).axis_deg == 100
    assert OrientedBox(Vec2(0, 0), 2, 4, 120).axis_deg == pytest.approx(30)
    # squares keep the raw angle
    assert OrientedBox(Vec2(0, 0), 3, 3, 170).axis_deg == 170


@pytest.mark.parametrize("kwargs", [
    dict(w=0, h=1, theta_raw=0), dict(w=1, h=1, theta_raw=180), dict(w=1, h=1, theta_raw=-1),
    dict(w=1, h=1, theta_raw=0, score=1.5),
])
def test_oriented_box_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        OrientedBox(Vec2(0, 0), **kwargs)


def test_short_edge_midpoints():
    a, b = short_edge_midpoints(HeadedBox(Vec2(0, 0), 4, 2, 0))
    assert as_set([a, b]) == {(2, 0), (-2, 0)}
    a, b = short_edge_midpoints(HeadedBox(Vec2(0, 0), 4, 2, 90))
    assert as_set([a, b]) == {(0, 2), (0, -2)}
    a, b = short_edge_midpoints(HeadedBox(Vec2(0, 0), 4, 2, 45))
    r = math.sqrt(2)
    np.testing.assert_allclose([a, b], [(r, r), (-r, -r)], atol=1e-12)


def test_short_edge_midpoints_of_swapped_labels():
    a, b = short_edge_midpoints(OrientedBox(Vec2(1, 1), 2, 4, 0))
    assert as_set([a, b]) == {(1, 3), (1, -1)}


def test_rotated_iou_basic():
    a = HeadedBox(Vec2(0, 0), 4, 2, 0)
    assert rotated_iou(a, a) == pytest.approx(1.0)
    assert rotated_iou(a, HeadedBox(Vec2(10, 0), 4, 2, 0)) == 0.0
    # touching edges only
    assert rotated_iou(a, HeadedBox(Vec2(4, 0), 4, 2, 0)) == pytest.approx(0.0, abs=1e-12)


def test_rotated_iou_unit_squares_octagon():
    a = HeadedBox(Vec2(0, 0), 1, 1, 0)
    b = HeadedBox(Vec2(0, 0), 1, 1, 45)
    inter = 2 * (math.sqrt(2) - 1)
    assert rotated_iou(a, b) == pytest.approx(inter / (2 - inter), abs=1e-12)
    assert monte_carlo_iou((0, 0, 1, 1, 0), (0, 0, 1, 1, 45)) == pytest.approx(0.70711, abs=3e-3)


def test_rotated_iou_matches_aabb_for_axis_aligned():
    a = HeadedBox(Vec2(0.5, 0.5), 1, 1, 0)
    b = HeadedBox(Vec2(1.0, 0.5), 1, 1, 0)
    assert rotated_iou(a, b) == pytest.approx(1 / 3)


def test_rotated_iou_ignores_180_ambiguity():
    a = OrientedBox(Vec2(5, 5), 10, 4, 20)
    b = HeadedBox(Vec2(6, 5), 10, 4, 200)
    c = HeadedBox(Vec2(6, 5), 10, 4, 20)
    assert rotated_iou(a, b) == pytest.approx(rotated_iou(a, c), abs=1e-12)


boxes = st.builds(
    lambda x, y, l, w, t: HeadedBox(Vec2(x, y), max(l, w), min(l, w), t),
    st.floats(-20, 20), st.floats(-20, 20), st.floats(0.5, 15), st.floats(0.5, 15),
    st.floats(0, 359.999))


@settings(max_examples=200, deadline=None)
@given(boxes, boxes)
def test_rotated_iou_symmetric_and_bounded(a, b):
    ab, ba = rotated_iou(a, b), rotated_iou(b, a)
    assert 0.0 <= ab <= 1.0
    assert ab == pytest.approx(ba, abs=1e-12)
    assert rotated_iou(a, a) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(boxes, boxes, st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 360))
def test_rotated_iou_rigid_invariance(a, b, tx, ty, rot):
    def move(box):
        (cx, cy), = rotate_points([box.center], rot)
        return HeadedBox(Vec2(cx + tx, cy + ty), box.length, box.width, (box.heading + rot) % 360)
    assert rotated_iou(move(a), move(b)) == pytest.approx(rotated_iou(a, b), abs=1e-9)


def test_rotated_iou_monte_carlo_spot_checks():
    rng = np.random.default_rng(1)
    for k in range(10):
        a = (0, 0, rng.uniform(2, 6), rng.uniform(0.5, 2), rng.uniform(0, 180))
        b = (rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(2, 6), rng.uniform(0.5, 2), rng.uniform(0, 180))
        ha = HeadedBox(Vec2(a[0], a[1]), *a[2:])
        hb = HeadedBox(Vec2(b[0], b[1]), *b[2:])
        assert rotated_iou(ha, hb) == pytest.approx(monte_carlo_iou(a, b, 200_000, k), abs=1e-2)


def test_aabb_iou():
    unit = AABox(Vec2(0, 0), Vec2(1, 1))
    assert aabb_iou(unit, unit) == 1.0
    assert aabb_iou(unit, AABox(Vec2(0.5, 0), Vec2(1.5, 1))) == pytest.approx(1 / 3)
    assert aabb_iou(unit, AABox(Vec2(1, 1), Vec2(2, 2))) == 0.0
    assert aabb_iou(AABox(Vec2(0, 0), Vec2(0, 0)), AABox(Vec2(0, 0), Vec2(0, 0))) == 0.0


def test_aabox_square_and_validation():
    sq = AABox.square((3, 4), 2)
    assert sq.min == (2, 3) and sq.max == (4, 5)
    assert sq.center == (3, 4)
    with pytest.raises(ValueError):
        AABox(Vec2(1, 0), Vec2(0, 1))


def test_crop_square():
    region = crop_square(OrientedBox(Vec2(10, 10), 6, 4, 0))
    assert region.origin == pytest.approx((7, 8))
    assert region.side == pytest.approx(6)
    region = crop_square(OrientedBox(Vec2(10, 10), 5, 5, 0))
    assert region.side == pytest.approx(5)
    r2 = math.sqrt(2)
    region = crop_square(OrientedBox(Vec2(10, 10), r2, r2, 45))
    assert region.origin == pytest.approx((9, 9))
    assert region.side == pytest.approx(2)


@settings(max_examples=200, deadline=None)
@given(boxes)
def test_crop_contains_every_corner(box):
    region = crop_square(box)
    for p in corners(box):
        assert region.origin.x - 1e-9 <= p.x <= region.origin.x + region.side + 1e-9
        assert region.origin.y - 1e-9 <= p.y <= region.origin.y + region.side + 1e-9


def test_envelope_of_rotated_box():
    env = envelope(HeadedBox(Vec2(0, 0), 4, 2, 90))
    assert env.min == pytest.approx((-1, -2)) and env.max == pytest.approx((1, 2))


def test_crop_to_frame():
    region = CropRegion(Vec2(7, 8), 6)
    assert crop_to_frame(region, (0, 0)) == (7, 8)
    assert crop_to_frame(region, (3, 2)) == (10, 10)
    rng = np.random.default_rng(0)
    for p in rng.uniform(-100, 100, (50, 2)):
        back = crop_to_frame(region, frame_to_crop(region, p))
        assert back == pytest.approx(tuple(p), abs=1e-12)


def test_part_box_side():
    assert part_box_side(CropRegion(Vec2(0, 0), 100)) == pytest.approx(38.7298, abs=1e-4)
    assert part_box_side(CropRegion(Vec2(0, 0), 1)) == pytest.approx(0.38730, abs=1e-5)
    for side in np.random.default_rng(2).uniform(0.1, 500, 100):
        assert part_box_side(CropRegion(Vec2(0, 0), side)) ** 2 / side ** 2 == pytest.approx(0.15, abs=1e-12)


def test_crop_region_rejects_nonpositive_side():
    with pytest.raises(ValueError):
        CropRegion(Vec2(0, 0), 0)


@settings(max_examples=100, deadline=None)
@given(boxes)
def test_midpoints_at_half_length(box):
    for p in short_edge_midpoints(box):
        assert (p - box.center).norm() == pytest.approx(box.length / 2, abs=1e-9)
