"""Frame-to-frame association of merged sprites into tracks.

Per frame we solve a max-weight bipartite matching between detections and
active tracks.  Edge weights are Gaussian likelihoods of the Euclidean
distance to the track's last known position; every detection also carries
an initiation edge priced at the likelihood of a 40-pixel move, so a
detection further than that from every track starts a new track instead.
No motion model: game characters reverse direction instantaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spritemerge import MergedSprite

NEW_TRACK = -1


@dataclass(frozen=True)
class TrackerConfig:
    sigma: float = 8.0
    initiation_distance: float = 40.0
    coast_limit: int = 4


@dataclass
class Track:
    track_id: int
    group: int
    points: dict[int, tuple[int, int]] = field(default_factory=dict)
    last_update: int = -1
    coasting_for: int = 0

    @property
    def last_point(self) -> tuple[int, int]:
        return self.points[self.last_update]


def likelihood(config: TrackerConfig, d: float) -> float:
    """Normal(0, sigma) density at distance d."""
    s = config.sigma
    return math.exp(-(d * d) / (2.0 * s * s)) / (s * math.sqrt(2.0 * math.pi))


def assign(config: TrackerConfig, tracks: list[Track],
           detections: list[MergedSprite]) -> list[int]:
    """For each detection, the index into `tracks` it extends, or NEW_TRACK.

    The matching maximizes total likelihood over the bipartite graph with
    one initiation node per detection.  Ties break toward lower track ids,
    then lower detection index, via an infinitesimal weight bias.
    """
    nd = len(detections)
    nt = len(tracks)
    if nd == 0:
        return []
    init_w = likelihood(config, config.initiation_distance)
    weights = np.full((nd, nt + nd), -1e18)
    for di, det in enumerate(detections):
        ax, ay = det.anchor_x, det.anchor_y
        for ti, trk in enumerate(tracks):
            tx, ty = trk.last_point
            d = math.hypot(ax - tx, ay - ty)
            weights[di, ti] = likelihood(config, d) + (nt - ti) * 1e-15
        weights[di, nt + di] = init_w
    rows, cols = linear_sum_assignment(weights, maximize=True)
    out = [NEW_TRACK] * nd
    for r, c in zip(rows, cols):
        if c < nt:
            out[r] = c
    return out


@dataclass
class TrackerState:
    active: list[Track] = field(default_factory=list)
    retired: list[Track] = field(default_factory=list)
    next_id: int = 0


def step(config: TrackerConfig, state: TrackerState,
         detections: list[MergedSprite], frame_number: int) -> TrackerState:
    """Advance one frame: match, extend, coast, retire, initiate."""
    matches = assign(config, state.active, detections)
    matched_tracks = set()
    for di, ti in enumerate(matches):
        if ti == NEW_TRACK:
            continue
        trk = state.active[ti]
        trk.points[frame_number] = (detections[di].anchor_x,
                                    detections[di].anchor_y)
        trk.last_update = frame_number
        trk.coasting_for = 0
        matched_tracks.add(ti)
    survivors = []
    for ti, trk in enumerate(state.active):
        if ti in matched_tracks:
            survivors.append(trk)
            continue
        trk.coasting_for += 1
        if trk.coasting_for > config.coast_limit:
            state.retired.append(trk)
        else:
            survivors.append(trk)
    state.active = survivors
    for di, ti in enumerate(matches):
        if ti != NEW_TRACK:
            continue
        det = detections[di]
        trk = Track(state.next_id, det.group,
                    {frame_number: (det.anchor_x, det.anchor_y)},
                    frame_number, 0)
        state.next_id += 1
        state.active.append(trk)
    return state


def run_tracker(config: TrackerConfig,
                frames: list[tuple[int, list[MergedSprite]]]) -> list[Track]:
    """Fold `step` over (frame_number, detections) pairs; returns all tracks."""
    state = TrackerState()
    last = None
    for frame_number, detections in frames:
        if last is not None and frame_number <= last:
            raise ValueError("frames must be processed in increasing order")
        last = frame_number
        step(config, state, detections, frame_number)
    return sorted(state.retired + state.active, key=lambda t: t.track_id)


def tracks_csv(tracks: list[Track]) -> str:
    """One CSV row per (track_id, frame, x, y)."""
    lines = ["track_id,frame,x,y"]
    for trk in tracks:
        for frame in sorted(trk.points):
            x, y = trk.points[frame]
            lines.append(f"{trk.track_id},{frame},{x},{y}")
    return "\n".join(lines) + "\n"
