"""Heading-aware tracking of animals in oriented bounding boxes.

Pipeline stages: majority voting over head/tail part detections
(:mod:`obbtrack.parts`), 0-360 degree heading resolution
(:mod:`obbtrack.heading`) and an orientation-aware Kalman tracker
(:mod:`obbtrack.track`). :mod:`obbtrack.synth` simulates detector output
with ground truth; :mod:`obbtrack.pipeline` runs everything over files.
"""
from .geom import (AABox, CropRegion, HeadedBox, OrientedBox, Vec2, aabb_iou, corners,
                   crop_square, crop_to_frame, part_box_side, rotated_iou, short_edge_midpoints)
from .heading import HeadingResolution, HeadingSource, heading_to_trig, resolve_heading
from .parts import (DetectorId, PartClass, PartDetection, PartGroup, VoteOutcome,
                    group_parts, select_group, vote_crop, vote_part)
from .pipeline import Config, TrackRow, load_detections, read_tracks, render_svg, run, write_tracks
from .track import (NoiseConfig, Observation, OrientedKalmanFilter, Track, Tracker,
                    TrackState, TrackStatus, associate, gate, heading_of)

__version__ = "0.1.0"
