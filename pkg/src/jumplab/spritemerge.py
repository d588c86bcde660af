"""Merge 8x8/8x16 sub-sprites into whole characters.

NES characters are drawn as grids of hardware sprites that move in
lockstep.  Sub-sprites whose per-frame touching events are strongly
correlated (normalized pointwise mutual information over the whole
experiment above a threshold) get unioned into one logical character.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .framelog import ExperimentLog, Frame, SpriteEntry, SpriteKey

DEFAULT_NPMI_THRESHOLD = 0.1


class MergeError(ValueError):
    pass


def touching(a: SpriteEntry, b: SpriteEntry) -> bool:
    """True when the two sprite rectangles overlap or are edge/corner adjacent."""
    return (a.x <= b.x + b.width and b.x <= a.x + a.width
            and a.y <= b.y + b.height and b.y <= a.y + a.height)


@dataclass(frozen=True)
class CooccurrenceStats:
    keys: tuple[SpriteKey, ...]
    on_counts: np.ndarray       # frames each key was on screen
    touch_counts: np.ndarray    # frames each key pair was touching
    frame_count: int

    def _idx(self, k: SpriteKey) -> int:
        try:
            return self.keys.index(k)
        except ValueError:
            raise MergeError(f"unknown sprite key {k}") from None

    def p_on(self, k: SpriteKey) -> float:
        return self.on_counts[self._idx(k)] / self.frame_count

    def p_touch(self, a: SpriteKey, b: SpriteKey) -> float:
        return self.touch_counts[self._idx(a), self._idx(b)] / self.frame_count


def accumulate_stats(log: ExperimentLog) -> CooccurrenceStats:
    """Presence and touching probabilities over all frames of all trials.

    A key appearing several times in one frame counts once for presence;
    a pair counts once per frame if any instance pair touches.
    """
    frames = [f for t in log.trials for f in t.frames]
    if not frames:
        raise MergeError("empty log: no frames to accumulate")
    keys = sorted({s.key for f in frames for s in f.sprites})
    key_index = {k: i for i, k in enumerate(keys)}

    n = sum(len(f.sprites) for f in frames)
    x = np.empty(n, np.int64)
    y = np.empty(n, np.int64)
    w = np.empty(n, np.int64)
    h = np.empty(n, np.int64)
    kid = np.empty(n, np.int64)
    starts = np.empty(len(frames) + 1, np.int64)
    pos = 0
    for fi, frame in enumerate(frames):
        starts[fi] = pos
        for s in frame.sprites:
            x[pos] = s.x
            y[pos] = s.y
            w[pos] = s.width
            h[pos] = s.height
            kid[pos] = key_index[s.key]
            pos += 1
    starts[len(frames)] = pos

    on, touch = kernels.touch_counts(x, y, w, h, kid, starts, len(keys))
    return CooccurrenceStats(tuple(keys), on, touch, len(frames))


def npmi(stats: CooccurrenceStats, a: SpriteKey, b: SpriteKey) -> float:
    """Normalized pointwise mutual information in [-1, 1].

    Corner conventions: p(a,b)=0 -> -1, p(a,b)=1 -> +1 (two sprites always
    on screen and always touching are maximally correlated).
    """
    pa = stats.p_on(a)
    pb = stats.p_on(b)
    if pa == 0.0 or pb == 0.0:
        raise MergeError("NPMI undefined: a marginal probability is zero")
    pab = stats.p_touch(a, b)
    if pab == 0.0:
        return -1.0
    if pab == 1.0:
        return 1.0
    return math.log(pab / (pa * pb)) / -math.log(pab)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the lower root for deterministic group numbering
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class MergeMap:
    groups: tuple[frozenset[SpriteKey], ...]
    group_id: dict[SpriteKey, int]


def build_merge_map(stats: CooccurrenceStats,
                    threshold: float = DEFAULT_NPMI_THRESHOLD) -> MergeMap:
    """Union-find closure over all key pairs with NPMI >= threshold."""
    if not 0.0 < threshold <= 1.0:
        raise MergeError(f"threshold {threshold} not in (0, 1]")
    keys = stats.keys
    uf = UnionFind(len(keys))
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if stats.on_counts[i] == 0 or stats.on_counts[j] == 0:
                continue
            if npmi(stats, keys[i], keys[j]) >= threshold:
                uf.union(i, j)
    roots: dict[int, list[SpriteKey]] = {}
    for i, k in enumerate(keys):
        roots.setdefault(uf.find(i), []).append(k)
    groups = tuple(frozenset(members)
                   for _, members in sorted(roots.items()))
    group_id = {k: gi for gi, g in enumerate(groups) for k in g}
    return MergeMap(groups, group_id)


@dataclass(frozen=True)
class MergedSprite:
    group: int
    bbox: tuple[int, int, int, int]  # min_x, min_y, max_x, max_y

    @property
    def anchor_x(self) -> int:
        return (self.bbox[0] + self.bbox[2]) // 2

    @property
    def anchor_y(self) -> int:
        return self.bbox[3]


def merge_frame(frame: Frame, merge_map: MergeMap) -> list[MergedSprite]:
    """One MergedSprite per group with at least one member present this frame."""
    boxes: dict[int, list[int]] = {}
    for s in frame.sprites:
        gi = merge_map.group_id.get(s.key)
        if gi is None:
            continue
        box = boxes.get(gi)
        if box is None:
            boxes[gi] = [s.x, s.y, s.x + s.width, s.y + s.height]
        else:
            box[0] = min(box[0], s.x)
            box[1] = min(box[1], s.y)
            box[2] = max(box[2], s.x + s.width)
            box[3] = max(box[3], s.y + s.height)
    return [MergedSprite(gi, tuple(box)) for gi, box in sorted(boxes.items())]


def dump_groups(merge_map: MergeMap) -> str:
    """Debug listing: one line per group with its member keys."""
    lines = []
    for gi, group in enumerate(merge_map.groups):
        members = " ".join(
            f"{k.tile_index},{k.palette},{int(k.h_flip)},{int(k.v_flip)},{int(k.background)}"
            for k in sorted(group))
        lines.append(f"group {gi}: {members}")
    return "\n".join(lines) + "\n"
