"""Player identification, height conversion, and jump mode segmentation.

Heights are up-positive pixels relative to the ground (h = ground_screen_y
- y_screen); everything below ground clamps to 0.  Segmentation follows
four transition rules: lift-off within the first b frames, button release
(clamped to the hold bounds) ending the controlled rise, the stair-step
tolerant apex (the previous frame may equal the apex, the next must be
lower), and landing at ground level give or take one pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automaton import Mode
from .tracker import Track

DEFAULT_START_WINDOW = 8
LANDING_SLACK = 1


class SegmentationError(ValueError):
    pass


class NoPlayerError(SegmentationError):
    pass


class AmbiguousPlayerError(SegmentationError):
    def __init__(self, candidates):
        super().__init__(f"multiple equally plausible player groups: {candidates}")
        self.candidates = candidates


class GapError(SegmentationError):
    pass


@dataclass(frozen=True)
class HeightTrace:
    hold_frames: int
    h: np.ndarray               # integer pixels, up-positive, h[0] == 0
    ground_screen_y: int

    def __post_init__(self):
        if len(self.h) and self.h[0] != 0:
            raise SegmentationError("height trace must start on the ground")


@dataclass(frozen=True)
class ModeSegment:
    mode: Mode
    start: int                  # inclusive frame offset
    end: int                    # exclusive
    entry_height: int
    entry_velocity: int


@dataclass(frozen=True)
class HoldBounds:
    min_hold: int
    max_hold: int
    has_control: bool

    def __post_init__(self):
        if not 1 <= self.min_hold <= self.max_hold:
            raise SegmentationError("need 1 <= min_hold <= max_hold")
        if self.has_control != (self.min_hold < self.max_hold):
            raise SegmentationError("has_control must equal min_hold < max_hold")

    def clamp(self, hold_frames: int) -> int:
        return min(max(hold_frames, self.min_hold), self.max_hold)


def to_height(track: Track, ground_screen_y: int, n_frames: int,
              coast_limit: int = 4, hold_frames: int = 0) -> HeightTrace:
    """Convert a track to a ground-relative height trace.

    Frames the track coasted through inherit the last known position;
    gaps longer than the coast limit are an error.
    """
    if 0 not in track.points:
        raise GapError("track has no point at frame offset 0")
    heights = np.zeros(n_frames, dtype=np.int64)
    last_y = None
    gap = 0
    for t in range(n_frames):
        pt = track.points.get(t)
        if pt is None:
            gap += 1
            if gap > coast_limit or last_y is None:
                raise GapError(f"track missing frames around offset {t}")
        else:
            gap = 0
            last_y = pt[1]
        heights[t] = max(0, ground_screen_y - last_y)
    return HeightTrace(hold_frames, heights, ground_screen_y)


def _candidate_in_trial(track: Track, n_frames: int) -> int | None:
    """Apex height if this track looks like a standing jump, else None."""
    if 0 not in track.points:
        return None
    if track.last_update < n_frames - 1 - 4:
        return None
    offsets = sorted(track.points)
    ys = [track.points[t][1] for t in offsets]
    y0 = ys[0]
    h = [y0 - y for y in ys]       # up-positive, not clamped
    apex = max(h)
    if apex <= 0:
        return None
    a = max(i for i, v in enumerate(h) if v == apex)
    # descend monotonically (1 px jitter allowed) until within a pixel of
    # the ground; afterwards never rise above ground + 1 again
    descended = False
    for i in range(a, len(h)):
        if h[i] <= LANDING_SLACK:
            descended = True
        elif descended:
            return None
        elif i > a and h[i] > h[i - 1] + 1:
            return None
    if not descended or abs(h[-1]) > LANDING_SLACK:
        return None
    return apex


def find_player(trial_tracks: list[list[Track]],
                trial_lengths: list[int]) -> int:
    """The merged-sprite group that jumps like a player in every trial.

    Among groups passing the jump-shape filter in all trials, prefer the
    one whose apex height responds to the hold duration (largest variance
    across trials); for fixed jumps fall back to the largest apex.
    """
    if not trial_tracks:
        raise NoPlayerError("no trials to examine")
    per_group_apexes: dict[int, list[int]] = {}
    for trial_idx, (tracks, n_frames) in enumerate(
            zip(trial_tracks, trial_lengths)):
        seen: dict[int, int] = {}
        for track in tracks:
            apex = _candidate_in_trial(track, n_frames)
            if apex is None:
                continue
            if track.group in seen:
                continue  # split track in the same group disqualifies nobody
            seen[track.group] = apex
        if trial_idx == 0:
            per_group_apexes = {g: [a] for g, a in seen.items()}
        else:
            per_group_apexes = {g: aps + [seen[g]]
                                for g, aps in per_group_apexes.items()
                                if g in seen}
        if not per_group_apexes:
            raise NoPlayerError("no track jumps like a player in every trial")
    if len(per_group_apexes) == 1:
        return next(iter(per_group_apexes))
    scored = []
    for g, apexes in per_group_apexes.items():
        arr = np.asarray(apexes, dtype=float)
        scored.append((float(arr.var()), float(arr.mean()), g))
    scored.sort(reverse=True)
    if scored[0][:2] == scored[1][:2]:
        ties = [g for var, mean, g in scored if (var, mean) == scored[0][:2]]
        raise AmbiguousPlayerError(sorted(ties))
    return scored[0][2]


def segment(trace: HeightTrace, bounds: HoldBounds | None = None,
            start_window_b: int = DEFAULT_START_WINDOW) -> list[ModeSegment]:
    """Split one trial's height trace into automaton mode segments.

    Within-segment clocks are anchored one frame before the segment start
    (the state's entry frame), matching the automaton's conventions.
    """
    h = trace.h
    n = len(h)
    if n < 3:
        raise SegmentationError("trace too short to segment")

    s = None
    for t in range(1, min(start_window_b, n - 1) + 1):
        if h[t] > h[t - 1]:
            s = t
            break
    if s is None:
        raise SegmentationError(
            f"no rise within the first {start_window_b} frames")

    peak = int(h.max())
    a = int(max(np.flatnonzero(h == peak)))
    if a + 1 >= n or h[a + 1] >= peak:
        raise SegmentationError("apex never passed within the trace")

    land = None
    for t in range(a + 1, n):
        if h[t - 1] > h[t] and h[t] <= LANDING_SLACK:
            land = t
            break
    if land is None:
        raise SegmentationError("descent never returns to the ground")

    def seg(mode, start, end):
        entry_h = int(h[start - 1]) if start > 0 else 0
        entry_v = int(h[start] - h[start - 1]) if 0 < start < n else 0
        return ModeSegment(mode, start, end, entry_h, entry_v)

    out = []
    if s > 0:
        out.append(seg(Mode.GROUND, 0, s))
    if bounds is not None and bounds.has_control:
        release = bounds.clamp(trace.hold_frames)
        uc_end = min(release, a)
        out.append(seg(Mode.UP_CONTROL, s, uc_end + 1))
        if uc_end + 1 < a + 1:
            out.append(seg(Mode.UP_FIXED, uc_end + 1, a + 1))
    else:
        out.append(seg(Mode.UP_FIXED, s, a + 1))
    out.append(seg(Mode.DOWN, a + 1, land + 1))
    if land + 1 < n:
        out.append(seg(Mode.GROUND, land + 1, n))
    return out


def hold_bounds(traces: dict[int, HeightTrace]) -> HoldBounds:
    """Min/max hold from trace identity across the hold sweep.

    Traces compare equal when their heights agree frame for frame over the
    common window (trial lengths grow with the hold).
    """
    ks = sorted(traces)
    if not ks:
        raise SegmentationError("no traces")
    if ks != list(range(ks[0], ks[0] + len(ks))):
        raise SegmentationError("hold coverage must be contiguous")

    def eq(i, j):
        a, b = traces[i].h, traces[j].h
        m = min(len(a), len(b))
        return bool(np.array_equal(a[:m], b[:m]))

    lo, hi = ks[0], ks[-1]
    m = lo
    while m + 1 <= hi and eq(m + 1, lo):
        m += 1
    if m == hi:
        return HoldBounds(1, 1, False)
    big = hi
    while big - 1 >= lo and eq(big - 1, hi):
        big -= 1
    if m > big:
        raise SegmentationError(
            "inconsistent trace identity structure across holds")
    if m == big:
        # a single change point: every hold below it is clamped up, every
        # hold above is clamped down, so control spans exactly one frame;
        # treat as fixed since no up-control window is observable
        return HoldBounds(1, 1, False)
    return HoldBounds(m, big, True)


def segments_csv(rows: list[tuple[int, ModeSegment]]) -> str:
    lines = ["trial_hold,mode,start,end,entry_height,entry_velocity"]
    for hold, s in rows:
        lines.append(f"{hold},{s.mode.value},{s.start},{s.end},"
                     f"{s.entry_height},{s.entry_velocity}")
    return "\n".join(lines) + "\n"
