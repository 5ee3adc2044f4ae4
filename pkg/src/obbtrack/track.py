"""
SORT-style tracker whose Kalman state carries heading as (sin, cos).

State vector: [x, y, sin(theta), cos(theta), vx, vy], pixels and pixels/frame.
Positions follow a constant-velocity model; the heading pair is carried over
unchanged by prediction and renormalised to unit length after each update.
"""
from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .geom import Box, HeadedBox, Vec2, rotated_iou
from .heading import HeadingResolution, HeadingSource, heading_to_trig, trig_to_heading

logger = logging.getLogger(__name__)

# 0.95 quantile of the chi-square distribution, keyed by degrees of freedom
CHI2_95 = {2: 5.9915, 4: 9.4877}
GATED_COST = 1e5
STATE_DIM = 6


class IllConditionedNoiseError(ValueError):
    """Innovation covariance could not be factorised."""


@dataclass(frozen=True)
class NoiseConfig:
    """Standard deviations for process, observation and initial uncertainty.

    Position and velocity terms are fractions of the box long-axis length
    (so noise grows with apparent size); angle terms are absolute, in units
    of the (sin, cos) components. The p0_* entries scale the initial
    covariance: position and angle by the observation noise, velocity by
    the velocity process noise. p0_ang_unresolved is the absolute initial
    std of (sin, cos) for tracks born from a box without a heading.
    """

    q_pos: float = 1 / 20
    q_vel: float = 1 / 80
    q_ang: float = 0.1
    r_pos: float = 1 / 20
    r_ang: float = 0.05
    p0_pos: float = 2.0
    p0_ang: float = 2.0
    p0_vel: float = 10.0
    p0_ang_unresolved: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"NoiseConfig.{name} must be strictly positive, got {value}")


@dataclass(frozen=True, eq=False)
class TrackState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(STATE_DIM))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float).reshape(STATE_DIM, STATE_DIM))

    @property
    def position(self) -> Vec2:
        return Vec2(float(self.mean[0]), float(self.mean[1]))


@dataclass(frozen=True, eq=False)
class Observation:
    """A measurement: [x, y, sin, cos] when the heading is resolved, else [x, y]."""

    z: np.ndarray
    box: Box
    source: HeadingSource = HeadingSource.NONE

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        if z.size not in (2, 4):
            raise ValueError(f"observation must have 2 or 4 components, got {z.size}")
        if z.size == 4 and abs(z[2] ** 2 + z[3] ** 2 - 1.0) > 1e-9:
            raise ValueError("observed (sin, cos) must have unit norm")
        object.__setattr__(self, "z", z)

    @property
    def position_only(self) -> bool:
        return self.z.size == 2

    @property
    def scale(self) -> float:
        return self.box.length

    @classmethod
    def from_box(cls, box: Box, source: HeadingSource = HeadingSource.NONE) -> "Observation":
        if isinstance(box, HeadedBox):
            s, c = heading_to_trig(box.heading)
            src = source if source != HeadingSource.NONE else HeadingSource.FROM_HEAD
            return cls(np.array([box.center.x, box.center.y, s, c]), box, src)
        return cls(np.array([box.center.x, box.center.y]), box, HeadingSource.NONE)

    @classmethod
    def from_resolution(cls, res: HeadingResolution) -> "Observation":
        if res.result is None:
            return cls.from_box(res.box)
        return cls.from_box(res.result, res.source)


def transition_matrix(dt: float = 1.0) -> np.ndarray:
    F = np.eye(STATE_DIM)
    F[0, 4] = F[1, 5] = dt
    return F


def observation_matrix(dim: int = 4) -> np.ndarray:
    return np.eye(dim, STATE_DIM)


def normalize_heading_components(mean: np.ndarray) -> np.ndarray:
    mean = np.array(mean, dtype=float)
    n = math.hypot(mean[2], mean[3])
    if n > 0:
        mean[2:4] /= n
    return mean


def heading_of(state: TrackState) -> float:
    return trig_to_heading(state.mean[2], state.mean[3])


class OrientedKalmanFilter:
    """Kalman filter over [x, y, sin, cos, vx, vy] with size-scaled noise."""

    def __init__(self, noise: Optional[NoiseConfig] = None):
        self.noise = noise or NoiseConfig()

    def process_cov(self, scale: float) -> np.ndarray:
        n = self.noise
        std = [n.q_pos * scale] * 2 + [n.q_ang] * 2 + [n.q_vel * scale] * 2
        return np.diag(np.square(std))

    def observation_cov(self, scale: float, dim: int = 4) -> np.ndarray:
        n = self.noise
        std = [n.r_pos * scale] * 2 + [n.r_ang] * 2
        return np.diag(np.square(std[:dim]))

    def initiate(self, obs: Observation) -> TrackState:
        n, L = self.noise, obs.scale
        mean = np.zeros(STATE_DIM)
        mean[:2] = obs.z[:2]
        if obs.position_only:
            ang_std = n.p0_ang_unresolved
            s, c = heading_to_trig(obs.box.axis_deg)
        else:
            ang_std = n.p0_ang * n.r_ang
            s, c = obs.z[2], obs.z[3]
        mean[2:4] = s, c
        std = [n.p0_pos * n.r_pos * L] * 2 + [ang_std] * 2 + [n.p0_vel * n.q_vel * L] * 2
        return TrackState(normalize_heading_components(mean), np.diag(np.square(std)))

    def predict(self, state: TrackState, scale: float, dt: float = 1.0) -> TrackState:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        F = transition_matrix(dt)
        mean = F @ state.mean
        cov = F @ state.cov @ F.T + self.process_cov(scale)
        return TrackState(mean, 0.5 * (cov + cov.T))

    def project(self, state: TrackState, scale: float, dim: int = 4):
        H = observation_matrix(dim)
        return H @ state.mean, H @ state.cov @ H.T + self.observation_cov(scale, dim)

    def update(self, state: TrackState, obs: Observation) -> TrackState:
        dim = obs.z.size
        H = observation_matrix(dim)
        R = self.observation_cov(obs.scale, dim)
        z_pred, S = self.project(state, obs.scale, dim)
        try:
            chol = scipy.linalg.cho_factor(S, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise IllConditionedNoiseError(
                "innovation covariance is not positive definite; check NoiseConfig") from exc
        K = scipy.linalg.cho_solve(chol, H @ state.cov).T
        mean = state.mean + K @ (obs.z - z_pred)
        I_KH = np.eye(STATE_DIM) - K @ H
        cov = I_KH @ state.cov @ I_KH.T + K @ R @ K.T
        return TrackState(normalize_heading_components(mean), 0.5 * (cov + cov.T))

    def gating_distance(self, state: TrackState, obs: Observation) -> float:
        """Squared Mahalanobis distance of `obs` from the projected state."""
        z_pred, S = self.project(state, obs.scale, obs.z.size)
        d = obs.z - z_pred
        try:
            chol = scipy.linalg.cho_factor(S, lower=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise IllConditionedNoiseError("innovation covariance is singular") from exc
        return float(d @ scipy.linalg.cho_solve(chol, d))


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass
class Track:
    id: int
    state: TrackState
    last_box: HeadedBox
    hits: int = 1
    age: int = 1
    time_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    heading_source: HeadingSource = HeadingSource.NONE

    def predicted_box(self) -> HeadedBox:
        return HeadedBox(self.state.position, self.last_box.length, self.last_box.width,
                         heading_of(self.state), self.last_box.score)


def gate(track: Track, obs: Observation, kf: Optional[OrientedKalmanFilter] = None) -> bool:
    kf = kf or OrientedKalmanFilter()
    return kf.gating_distance(track.state, obs) <= CHI2_95[obs.z.size]


def cost_matrix(tracks: Sequence[Track], obs: Sequence[Observation],
                kf: Optional[OrientedKalmanFilter] = None) -> np.ndarray:
    """1 - rotated IoU, with gated-out pairs set to GATED_COST."""
    kf = kf or OrientedKalmanFilter()
    cost = np.full((len(tracks), len(obs)), GATED_COST)
    for i, trk in enumerate(tracks):
        box = trk.predicted_box()
        for j, o in enumerate(obs):
            if gate(trk, o, kf):
                cost[i, j] = 1.0 - rotated_iou(box, o.box)
    return cost


def solve_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-total-cost assignment (Hungarian method) of a rectangular matrix."""
    rows, cols = linear_sum_assignment(np.asarray(cost, dtype=float))
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def associate(tracks: Sequence[Track], obs: Sequence[Observation],
              kf: Optional[OrientedKalmanFilter] = None, min_iou: float = 0.1):
    """Optimal track/observation matching.

    Returns (matches, unmatched_tracks, unmatched_obs) with matches as
    (track index, observation index) pairs.
    """
    if not tracks or not obs:
        return [], list(range(len(tracks))), list(range(len(obs)))
    cost = cost_matrix(tracks, obs, kf)
    matches = [(r, c) for r, c in solve_assignment(cost) if cost[r, c] < 1.0 - min_iou]
    matched_t = {m[0] for m in matches}
    matched_o = {m[1] for m in matches}
    return (matches,
            [i for i in range(len(tracks)) if i not in matched_t],
            [j for j in range(len(obs)) if j not in matched_o])


@dataclass(frozen=True)
class TrackOutput:
    track_id: int
    box: HeadedBox
    status: TrackStatus
    heading_source: HeadingSource


class Tracker:
    """Frame-by-frame multi-object tracker.

    Tracks start tentative, are confirmed after `n_init` consecutive hits and
    deleted after more than `max_age` frames without a match (tentative ones
    on their first miss).
    """

    def __init__(self, noise: Optional[NoiseConfig] = None, n_init: int = 3,
                 max_age: int = 30, min_iou: float = 0.1):
        if n_init < 1 or max_age < 0:
            raise ValueError("n_init must be >= 1 and max_age >= 0")
        self.kf = OrientedKalmanFilter(noise)
        self.n_init = n_init
        self.max_age = max_age
        self.min_iou = min_iou
        self.tracks: list[Track] = []
        self.frame_index: Optional[int] = None
        self._ids = itertools.count(1)
        self.created = 0

    def _predict(self, track: Track, steps: int):
        for _ in range(steps):
            track.state = self.kf.predict(track.state, track.last_box.length)
        track.age += steps
        track.time_since_update += steps

    def _spawn(self, obs: Observation) -> Track:
        box = obs.box
        if not isinstance(box, HeadedBox):
            box = HeadedBox(box.center, box.length, box.width, box.axis_deg, box.score)
        status = TrackStatus.CONFIRMED if self.n_init <= 1 else TrackStatus.TENTATIVE
        self.created += 1
        return Track(next(self._ids), self.kf.initiate(obs), box, status=status,
                     heading_source=obs.source)

    def step(self, frame_obs: Sequence[Observation],
             frame_index: Optional[int] = None) -> list[TrackOutput]:
        if frame_index is None:
            frame_index = 0 if self.frame_index is None else self.frame_index + 1
        if self.frame_index is not None and frame_index <= self.frame_index:
            raise ValueError(
                f"frame {frame_index} arrived after frame {self.frame_index}")
        gap = 1 if self.frame_index is None else frame_index - self.frame_index
        self.frame_index = frame_index

        for trk in self.tracks:
            self._predict(trk, gap)

        matches, lost, fresh = associate(self.tracks, frame_obs, self.kf, self.min_iou)
        for ti, oi in matches:
            trk, o = self.tracks[ti], frame_obs[oi]
            trk.state = self.kf.update(trk.state, o)
            trk.hits += 1
            trk.time_since_update = 0
            trk.heading_source = o.source
            trk.last_box = HeadedBox(trk.state.position, o.box.length, o.box.width,
                                     heading_of(trk.state), o.box.score)
            if trk.status == TrackStatus.TENTATIVE and trk.hits >= self.n_init:
                trk.status = TrackStatus.CONFIRMED
        for ti in lost:
            trk = self.tracks[ti]
            trk.heading_source = HeadingSource.NONE
            if trk.status == TrackStatus.TENTATIVE or trk.time_since_update > self.max_age:
                trk.status = TrackStatus.DELETED
        for oi in fresh:
            self.tracks.append(self._spawn(frame_obs[oi]))

        self.tracks = [t for t in self.tracks if t.status != TrackStatus.DELETED]
        out = []
        for trk in self.tracks:
            if trk.status != TrackStatus.CONFIRMED:
                continue
            b = trk.last_box
            box = HeadedBox(trk.state.position, b.length, b.width, heading_of(trk.state), b.score)
            out.append(TrackOutput(trk.id, box, trk.status, trk.heading_source))
        return out
