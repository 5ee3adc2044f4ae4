"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line that conftest prints at the end
of the session, then asserts the same condition.
"""
import math
import time

import numpy as np
import pytest

from obbtrack.geom import AABox, HeadedBox, OrientedBox, Vec2, rotated_iou
from obbtrack.heading import resolve_heading
from obbtrack.parts import DetectorId, PartClass, PartDetection, vote_part
from obbtrack.pipeline import Config, read_tracks, run
from obbtrack.synth import (NOISE_PROFILES, PRESETS, ScenarioConfig, eval_tracks, generate,
                            head_accuracy_table, make_scenario, write_synthetic)
from obbtrack.track import (GATED_COST, Observation, OrientedKalmanFilter, Track, cost_matrix,
                            heading_of, solve_assignment)

from .oracles import brute_force_assignment_cost, brute_force_vote, monte_carlo_iou

pytestmark = pytest.mark.slow


def arc(a, b):
    return abs((a - b + 180.0) % 360.0 - 180.0)


def headed_obs(x, y, heading, length=40.0, width=16.0):
    return Observation.from_box(HeadedBox(Vec2(x, y), length, width, heading % 360))


def test_acc1_voting_dominance(record):
    start = time.perf_counter()
    data = generate(ScenarioConfig("herd", 10, 500, noise=NOISE_PROFILES["default"]), 2024)
    table = head_accuracy_table(data)
    elapsed = time.perf_counter() - start
    crops = sum(len(r["detections"]) for r in data.detections)
    singles = [table[k] for k in ("head_tail", "head", "tail")]
    ok = (crops >= 5000 and all(table["vote"] >= s for s in singles)
          and table["vote"] - min(singles) >= 0.005 and elapsed < 60)
    detail = ", ".join(f"{k}={v:.4f}" for k, v in table.items())
    record("[ACC-1]", ok, f"crops={crops} {detail} time={elapsed:.1f}s")
    assert ok


def test_acc2_vote_matches_brute_force(record):
    rng = np.random.default_rng(2)
    mismatches = 0
    for _ in range(1000):
        dets, tuples = [], []
        for _ in range(rng.integers(0, 13)):
            detector = DetectorId.HEAD_TAIL if rng.random() < 0.5 else DetectorId.HEAD_ONLY
            x, y = (rng.integers(0, 6, 2) * 2.5).tolist()
            side = float(rng.choice([8.0, 10.0, 12.0]))
            score = float(rng.choice([0.3, 0.5, 0.7, 0.9]))
            dets.append(PartDetection(detector, PartClass.HEAD, AABox.square((x, y), side), score))
            tuples.append((x, y, side, score, int(detector)))
        got = vote_part(dets, PartClass.HEAD)
        want = brute_force_vote(tuples)
        want = None if want is None else ((want[0][0], want[0][1]), want[1])
        mismatches += got != want
    record("[ACC-2]", mismatches == 0, f"mismatches={mismatches}/1000")
    assert mismatches == 0


def test_acc3_rotated_iou(record):
    rng = np.random.default_rng(3)
    worst = 0.0
    for k in range(100):
        pair = []
        for _ in range(2):
            length = rng.uniform(5, 40)
            width = rng.uniform(2, length)
            pair.append((rng.uniform(0, 15), rng.uniform(0, 15), length, width, rng.uniform(0, 180)))
        a, b = (OrientedBox(Vec2(cx, cy), L, W, ang) for cx, cy, L, W, ang in pair)
        worst = max(worst, abs(rotated_iou(a, b) - monte_carlo_iou(*pair, seed=k)))
    unit = OrientedBox(Vec2(0, 0), 1, 1, 0)
    diamond = OrientedBox(Vec2(0, 0), 1, 1, 45)
    r = 2 * (math.sqrt(2) - 1)
    analytic = abs(rotated_iou(unit, diamond) - r / (2 - r))
    ok = worst <= 5e-3 and analytic <= 1e-6
    record("[ACC-3]", ok, f"max_mc_err={worst:.2e} analytic_err={analytic:.1e}")
    assert ok


def test_acc4_heading_grid(record):
    failures = checks = 0
    for h in range(360):
        for swap in (False, True):
            t = math.radians(h)
            if swap:
                box = OrientedBox(Vec2(10, -4), 1.5, 5, (h + 90) % 180)
            else:
                box = OrientedBox(Vec2(10, -4), 5, 1.5, h % 180)

            def at(along, across):
                return (10 + along * math.cos(t) - across * math.sin(t),
                        -4 + along * math.sin(t) + across * math.cos(t))

            for along in (0.05, 0.5, 1.0, 2.5, 4.0):
                for across in (-1.0, 0.0, 1.0):
                    for res in (resolve_heading(box, head=at(along, across)),
                                resolve_heading(box, tail=at(-along, across))):
                        checks += 1
                        failures += res.result is None or arc(res.result.heading, h) > 1e-6
            for across in (-1.0, 1.0):
                for res in (resolve_heading(box, head=at(0.0, across)),
                            resolve_heading(box, tail=at(0.0, across))):
                    checks += 1
                    failures += res.resolved
    record("[ACC-4]", failures == 0, f"failures={failures}/{checks}")
    assert failures == 0


def test_acc5_filter_invariants(record):
    kf = OrientedKalmanFilter()
    rng = np.random.default_rng(5)
    worst_norm = worst_sym = 0.0
    min_diag = math.inf
    cycles = 0
    for _ in range(100):
        s = kf.initiate(headed_obs(*rng.uniform(0, 100, 2), rng.uniform(0, 360)))
        for _ in range(100):
            s = kf.predict(s, rng.uniform(10, 60), dt=float(rng.integers(1, 4)))
            x, y = s.mean[:2] + rng.normal(0, 5, 2)
            if rng.random() < 0.3:
                obs = Observation(np.array([x, y]), OrientedBox(Vec2(x, y), 40, 16, rng.uniform(0, 180)))
            else:
                obs = headed_obs(x, y, rng.uniform(0, 360), rng.uniform(10, 60), 8)
            s = kf.update(s, obs)
            cycles += 1
            worst_norm = max(worst_norm, abs(s.mean[2] ** 2 + s.mean[3] ** 2 - 1))
            worst_sym = max(worst_sym, float(np.max(np.abs(s.cov - s.cov.T))))
            min_diag = min(min_diag, float(np.min(np.diag(s.cov))))
    ok = cycles == 10_000 and worst_norm < 1e-12 and worst_sym <= 1e-9 and min_diag >= 0
    record("[ACC-5]", ok, f"cycles={cycles} norm_err={worst_norm:.1e} "
                          f"asym={worst_sym:.1e} min_diag={min_diag:.2e}")
    assert ok


def test_acc6_constant_velocity(record):
    scen = make_scenario(ScenarioConfig("line", 1, 60, noise=NOISE_PROFILES["zero"]), 6)
    traj = scen.trajectories[0]

    def obs(k):
        cx, cy, heading, length, width = traj[k]
        return headed_obs(cx, cy, heading, length, width)

    kf = OrientedKalmanFilter()
    s = kf.initiate(obs(0))
    err = math.inf
    for k in range(1, 51):
        s = kf.predict(s, obs(k).scale)
        err = float(np.hypot(*(s.mean[:2] - traj[k, :2])))
        s = kf.update(s, obs(k))
    pred = kf.predict(s, 40.0)
    z, _ = kf.project(pred, 40.0)
    exact = Observation(z, HeadedBox(Vec2(z[0], z[1]), 40, 16, heading_of(pred)))
    drift = float(np.max(np.abs(kf.update(pred, exact).mean - pred.mean)))
    ok = err < 1e-3 and drift <= 1e-12
    record("[ACC-6]", ok, f"error@50={err:.2e}px zero_residual_drift={drift:.1e}")
    assert ok


def test_acc7_figure_eight(record, tmp_path):
    data = generate(ScenarioConfig("figure8", 2, 500, noise=NOISE_PROFILES["zero"]), 7)
    det, parts, _ = write_synthetic(data, tmp_path)
    out = tmp_path / "tracks.csv"
    run(Config(), det, parts, str(out))
    rows = read_tracks(out)
    metrics = eval_tracks(rows, data.truth)
    by_track = {}
    for r in rows:
        by_track.setdefault(r.track_id, []).append(r)
    jump, wrapped = 0.0, False
    for seq in by_track.values():
        for a, b in zip(seq, seq[1:]):
            jump = max(jump, arc(a.heading, b.heading))
            wrapped |= abs(a.heading - b.heading) > 180
    ok = (jump <= 30 and metrics.heading_flip_count == 0 and metrics.id_switches == 0
          and wrapped and len(by_track) == 2)
    record("[ACC-7]", ok, f"max_jump={jump:.2f}deg flips={metrics.heading_flip_count} "
                          f"switches={metrics.id_switches} wrapped={wrapped}")
    assert ok


def test_acc8_assignment_optimal(record):
    kf = OrientedKalmanFilter()
    rng = np.random.default_rng(8)
    mismatches = gated = live = 0
    for _ in range(600):
        n, m = rng.integers(1, 7, 2)
        tracks = []
        for i in range(n):
            o = headed_obs(*rng.uniform(0, 60, 2), rng.uniform(0, 360))
            tracks.append(Track(i + 1, kf.initiate(o), o.box))
        obs = []
        for _ in range(m):
            if rng.random() < 0.8:  # near some track, so most pairs pass the gate
                src = tracks[rng.integers(n)].last_box
                x, y = np.array(src.center) + rng.normal(0, 8, 2)
                obs.append(headed_obs(x, y, src.heading + rng.normal(0, 15)))
            else:
                obs.append(headed_obs(*rng.uniform(0, 60, 2), rng.uniform(0, 360)))
        cost = cost_matrix(tracks, obs, kf)
        gated += int(np.count_nonzero(cost == GATED_COST))
        live += int(np.count_nonzero(cost < 1.0))
        pairs = solve_assignment(cost)
        total = sum(cost[i, j] for i, j in pairs)
        mismatches += len(pairs) != min(n, m) or abs(total - brute_force_assignment_cost(cost)) > 1e-9
    record("[ACC-8]", mismatches == 0, f"mismatches={mismatches}/600 overlapping_pairs={live} gated_pairs={gated}")
    assert mismatches == 0


def _zero_noise_run(preset, tmp_path, tag):
    data = generate(ScenarioConfig(preset, 4, 150, noise=NOISE_PROFILES["zero"]), 9)
    det, parts, _ = write_synthetic(data, tmp_path / tag)
    out = tmp_path / f"{tag}.csv"
    run(Config(), det, parts, str(out))
    return data, out


def test_acc9_zero_noise_end_to_end(record, tmp_path):
    report = []
    ok = True
    for preset in PRESETS:
        data, out1 = _zero_noise_run(preset, tmp_path, f"{preset}-a")
        _, out2 = _zero_noise_run(preset, tmp_path, f"{preset}-b")
        acc = head_accuracy_table(data)["vote"]
        switches = eval_tracks(read_tracks(out1), data.truth).id_switches
        same = out1.read_bytes() == out2.read_bytes()
        ok &= acc == 1.0 and switches == 0 and same
        report.append(f"{preset}:acc={acc:.3f},sw={switches},same={same}")
    record("[ACC-9]", ok, " ".join(report))
    assert ok
