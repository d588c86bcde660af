"""End-to-end wiring: frame log in, learned jump model out.

Stages: co-occurrence merging, per-trial tracking, player identification,
height conversion, hold-bound extraction, mode segmentation, and per-mode
parameter fitting.  Entry velocities handed between modes are refined
from the already-fitted upstream mode (the derivative of its closed form
at the transition) rather than taken as raw pixel differences, which are
too coarse at one-pixel quantization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jumpseg, spritemerge
from .automaton import Mode, ModeParams
from .fit import FitConfig, JumpModel, assemble_model, irls_solve
from .framelog import ExperimentLog
from .jumpseg import HeightTrace, HoldBounds, ModeSegment
from .spritemerge import MergeMap
from .tracker import Track, TrackerConfig, run_tracker


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    npmi_threshold: float = 0.1
    start_window_b: int = jumpseg.DEFAULT_START_WINDOW
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    fit: FitConfig = field(default_factory=FitConfig)


@dataclass(frozen=True)
class Extraction:
    """Everything the pipeline derives from a log before fitting."""
    merge_map: MergeMap
    trial_tracks: list[list[Track]]
    player_group: int
    ground_screen_y: int
    traces: dict[int, HeightTrace]            # hold -> trace
    bounds: HoldBounds
    segments: dict[int, list[ModeSegment]]    # hold -> segments


def _player_track(tracks: list[Track], group: int) -> Track:
    candidates = [t for t in tracks if t.group == group and 0 in t.points]
    if len(candidates) != 1:
        raise PipelineError(
            f"expected one player track from frame 0, found {len(candidates)}")
    return candidates[0]


def extract(log: ExperimentLog,
            config: PipelineConfig = PipelineConfig()) -> Extraction:
    stats = spritemerge.accumulate_stats(log)
    merge_map = spritemerge.build_merge_map(stats, config.npmi_threshold)

    trial_tracks = []
    trial_lengths = []
    for trial in log.trials:
        detections = [(offset, spritemerge.merge_frame(frame, merge_map))
                      for offset, frame in enumerate(trial.frames)]
        trial_tracks.append(run_tracker(config.tracker, detections))
        trial_lengths.append(len(trial.frames))

    player_group = jumpseg.find_player(trial_tracks, trial_lengths)
    first = _player_track(trial_tracks[0], player_group)
    ground_screen_y = first.points[0][1]

    traces = {}
    for trial, tracks, n in zip(log.trials, trial_tracks, trial_lengths):
        track = _player_track(tracks, player_group)
        traces[trial.hold_frames] = jumpseg.to_height(
            track, ground_screen_y, n, config.tracker.coast_limit,
            trial.hold_frames)

    bounds = jumpseg.hold_bounds(traces)
    segments = {hold: jumpseg.segment(trace, bounds, config.start_window_b)
                for hold, trace in traces.items()}
    return Extraction(merge_map, trial_tracks, player_group, ground_screen_y,
                      traces, bounds, segments)


@dataclass(frozen=True)
class _DistinctTrial:
    """One distinct effective hold with its trace and segment boundaries."""
    effective_hold: int
    trace: HeightTrace
    uc: ModeSegment | None
    uf: ModeSegment | None
    down: ModeSegment

    @property
    def uc_span(self) -> int:
        return self.uc.end - self.uc.start if self.uc is not None else 0

    @property
    def uf_span(self) -> int:
        return self.uf.end - self.uf.start if self.uf is not None else 0


def _distinct_trials(extraction: Extraction) -> list[_DistinctTrial]:
    """One representative trial per effective (clamped) hold; clamped
    duplicates carry no new information."""
    bounds = extraction.bounds
    chosen: dict[int, _DistinctTrial] = {}
    for hold in sorted(extraction.traces):
        eff = bounds.clamp(hold)
        if eff in chosen:
            continue
        by = {s.mode: s for s in extraction.segments[hold]
              if s.mode is not Mode.GROUND}
        if Mode.DOWN not in by:
            raise PipelineError(f"trial hold={hold} has no falling segment")
        chosen[eff] = _DistinctTrial(eff, extraction.traces[hold],
                                     by.get(Mode.UP_CONTROL),
                                     by.get(Mode.UP_FIXED), by[Mode.DOWN])
    return [chosen[e] for e in sorted(chosen)]


# a rising segment shorter than this cannot pin its own curvature; the
# falling parameters are mirrored instead (velocity-cut jumps apex at the
# release frame, where rise and fall genuinely share dynamics)
MIN_UP_FIXED_SPAN = 4


def _band_refine(design: np.ndarray, target: np.ndarray, coef: np.ndarray,
                 upper_slack: np.ndarray,
                 landing_rows: np.ndarray | None = None, band: float = 0.5,
                 outlier: float = 0.75) -> np.ndarray:
    """Tighten coefficients using the quantization band.

    Integer positions are floor(h + 0.5) of the true curve, so every
    non-outlier sample constrains the curve to +-0.5 around it; the set
    of band-feasible coefficients is a polytope and its per-coordinate
    midpoint halves the worst-case error of any point estimate.  Rows
    whose robust-fit residual exceeds `outlier` are treated as genuine
    deviations (stair-steps, landing clips) and excluded; rows with a
    positive `upper_slack` get that much extra headroom above the band
    (their emission may have been clamped downward by up to that amount).
    `landing_rows` carry the landing condition -- the continuous curve is
    below half a pixel on the first frame that reads zero -- which pins
    the far end of each falling arc.  Columns whose program fails keep
    the robust-fit value.
    """
    from scipy.optimize import linprog

    resid = target - design @ coef
    keep = (resid >= -outlier) & (resid <= outlier + upper_slack)
    a_ub = np.vstack([design[keep], -design[keep]])
    b_ub = np.concatenate([target[keep] + band + upper_slack[keep],
                           -(target[keep] - band)])
    if landing_rows is not None and len(landing_rows):
        a_ub = np.vstack([a_ub, landing_rows])
        b_ub = np.concatenate([b_ub, np.full(len(landing_rows), band)])
    free = [(None, None)] * design.shape[1]
    refined = coef.copy()
    for ci in range(design.shape[1]):
        c = np.zeros(design.shape[1])
        c[ci] = 1.0
        lo = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
        hi = linprog(-c, A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
        if lo.status == 0 and hi.status == 0:
            refined[ci] = (lo.fun - hi.fun) / 2.0
    return refined


@dataclass(frozen=True)
class _Sample:
    """One airborne observation on its mode's own clock."""
    j: int           # distinct-trial index
    kind: str        # "uc", "uf", "down", or "land"
    clock: int
    obs: float
    slack: float     # extra upward headroom above the quantization band


def _collect_samples(trials: list[_DistinctTrial]) -> list[_Sample]:
    samples = []
    for j, tr in enumerate(trials):
        h = tr.trace.h
        peak = int(np.max(h))
        if tr.uc is not None:
            for f in range(tr.uc.start, tr.uc.end):
                samples.append(_Sample(j, "uc", f - (tr.uc.start - 1),
                                       float(h[f]), 0.0))
        if tr.uf is not None:
            for f in range(tr.uf.start, tr.uf.end):
                samples.append(_Sample(j, "uf", f - (tr.uf.start - 1),
                                       float(h[f]), 0.0))
        for f in range(tr.down.start, tr.down.end):
            if h[f] <= 0:
                continue  # ground clamp hides the true position
            # falling emissions are clamped below the apex row, so a
            # sample sitting right under the peak may read one pixel low
            slack = 1.0 if h[f] == peak - 1 else 0.0
            samples.append(_Sample(j, "down", f - (tr.down.start - 1),
                                   float(h[f]), slack))
        # landing condition: on the first frame that reads zero the
        # continuous curve is below half a pixel (either still airborne
        # and about to round to zero, or already past the ground)
        zero = [f for f in range(tr.down.start, len(h)) if h[f] == 0]
        if zero:
            samples.append(_Sample(j, "land", zero[0] - (tr.down.start - 1),
                                   0.0, 0.0))
    return samples


def _solve_banded(design: np.ndarray, target: np.ndarray,
                  upper_slack: np.ndarray, landing: np.ndarray | None,
                  config: FitConfig) -> np.ndarray:
    coef, _residuals, _iters, _conv = irls_solve(design, target, config)
    return _band_refine(design, target, coef, upper_slack,
                        landing_rows=landing, band=config.epsilon)


def _stage1(samples: list[_Sample], trials: list[_DistinctTrial],
            has_control: bool, config: FitConfig):
    """Joint fit with one free linear term per trial and mode.

    Shared columns: up_control reset and gravity plus one gravity for each
    of the up_fixed and falling phases; each distinct hold additionally
    gets its own up_fixed and falling linear terms.  Continuity is built
    in: every row of a later phase carries the full design of the phases
    before it, evaluated at their exit clocks.
    """
    uf_cols = [j for j, tr in enumerate(trials) if tr.uf_span > 0]
    col = 0
    uc_r = uc_g = None
    if has_control:
        uc_r, uc_g = 0, 1
        col = 2
    l_col = {j: col + i for i, j in enumerate(uf_cols)}
    col += len(uf_cols)
    uf_g = col
    d_col = {j: col + 1 + j for j in range(len(trials))}
    n_cols = col + 2 + len(trials)
    dn_g = n_cols - 1

    rows, targets, slacks, landing = [], [], [], []
    for s in samples:
        tr = trials[s.j]
        r = np.zeros(n_cols)
        if s.kind == "uc":
            r[uc_r] = s.clock
            r[uc_g] = s.clock ** 2
        else:
            if has_control:
                r[uc_r] = tr.uc_span
                r[uc_g] = tr.uc_span ** 2
            if s.kind == "uf":
                x = s.clock
            else:
                x = tr.uf_span
            if s.j in l_col and x:
                r[l_col[s.j]] = x
                r[uf_g] = x * x
            if s.kind in ("down", "land"):
                r[d_col[s.j]] = s.clock
                r[dn_g] = s.clock ** 2
        if s.kind == "land":
            landing.append(r)
        else:
            rows.append(r)
            targets.append(s.obs)
            slacks.append(s.slack)

    design = np.vstack(rows)
    target = np.asarray(targets)
    if len(target) < n_cols:
        raise PipelineError("not enough airborne samples to fit the model")
    coef = _solve_banded(design, target, np.asarray(slacks),
                         np.vstack(landing) if landing else None, config)
    return coef, l_col, uf_g, d_col, dn_g, uc_r, uc_g


def _stage2(samples: list[_Sample], trials: list[_DistinctTrial],
            has_control: bool, mirrored: bool, v0: np.ndarray,
            v_apex: np.ndarray, config: FitConfig) -> dict[Mode, ModeParams]:
    """Joint fit with the per-mode reset/multiplier structure built in.

    Stage one leaves each trial a free linear term per phase, which makes
    the phase resets weakly identified (a whole arc can shift against its
    own entry).  Here every linear term is replaced by reset +
    multiplier * entry_velocity with the entry velocities taken from the
    previous estimate, so the resets are shared by all trials and the
    quantization band pins them tightly.
    """
    spread = config.multiplier_min_spread
    uf_trials = [j for j, tr in enumerate(trials) if tr.uf_span > 0]
    fit_m_uf = (not mirrored and has_control and len(uf_trials) >= 2
                and np.ptp(v0[uf_trials]) >= spread)
    fit_m_dn = len(trials) >= 2 and np.ptp(v_apex) >= spread

    names = []
    if has_control:
        names += ["uc_r", "uc_g"]
    if not mirrored:
        names += ["uf_r"] + (["uf_m"] if fit_m_uf else []) + ["uf_g"]
    names += ["dn_r"] + (["dn_m"] if fit_m_dn else []) + ["dn_g"]
    idx = {n: i for i, n in enumerate(names)}
    n_cols = len(names)

    def add_linear(r, prefix, x, v):
        r[idx[prefix + "_r"]] += x
        if prefix + "_m" in idx:
            r[idx[prefix + "_m"]] += v * x
        r[idx[prefix + "_g"]] += x * x

    rows, targets, slacks, landing = [], [], [], []
    for s in samples:
        tr = trials[s.j]
        r = np.zeros(n_cols)
        if s.kind == "uc":
            r[idx["uc_r"]] = s.clock
            r[idx["uc_g"]] = s.clock ** 2
        else:
            if has_control:
                r[idx["uc_r"]] = tr.uc_span
                r[idx["uc_g"]] = tr.uc_span ** 2
            x = s.clock if s.kind == "uf" else tr.uf_span
            if x:
                add_linear(r, "dn" if mirrored else "uf", x, v0[s.j])
            if s.kind in ("down", "land"):
                add_linear(r, "dn", s.clock, v_apex[s.j])
        if s.kind == "land":
            landing.append(r)
        else:
            rows.append(r)
            targets.append(s.obs)
            slacks.append(s.slack)

    design = np.vstack(rows)
    target = np.asarray(targets)
    if len(target) < n_cols:
        raise PipelineError("not enough airborne samples to fit the model")
    coef = _solve_banded(design, target, np.asarray(slacks),
                         np.vstack(landing) if landing else None, config)

    def pick(name, default=0.0):
        return float(coef[idx[name]]) if name in idx else default

    params: dict[Mode, ModeParams] = {}
    if has_control:
        params[Mode.UP_CONTROL] = ModeParams(gravity=pick("uc_g"),
                                             reset=pick("uc_r"))
    params[Mode.DOWN] = ModeParams(gravity=pick("dn_g"), reset=pick("dn_r"),
                                   multiplier=pick("dn_m"))
    if mirrored:
        params[Mode.UP_FIXED] = params[Mode.DOWN]
    else:
        params[Mode.UP_FIXED] = ModeParams(gravity=pick("uf_g"),
                                           reset=pick("uf_r"),
                                           multiplier=pick("uf_m"))
    return params


def fit_modes(extraction: Extraction,
              config: PipelineConfig = PipelineConfig()) -> dict[Mode, object]:
    """Fit the whole airborne trajectory of every distinct hold jointly.

    Two passes over one pooled linear system with continuity at the mode
    transitions built in.  The first pass gives each trial free per-phase
    linear terms and recovers the shared gravities plus per-trial entry
    velocities; the second rebuilds the system with the reset/multiplier
    structure substituted in (entry velocities as constants, iterated
    once) so the resets are shared across all trials.  Both passes solve
    a robust banded loss and then refine each coefficient to the midpoint
    of its quantization-feasible interval.
    """
    fit_cfg = config.fit
    trials = _distinct_trials(extraction)
    has_control = extraction.bounds.has_control
    samples = _collect_samples(trials)

    coef, l_col, uf_g, d_col, dn_g, uc_r, uc_g = _stage1(
        samples, trials, has_control, fit_cfg)

    def release_velocity(tr: _DistinctTrial) -> float:
        if not has_control:
            return 0.0
        return float(coef[uc_r] + 2.0 * coef[uc_g] * tr.uc_span)

    uf_trials = [j for j in range(len(trials)) if trials[j].uf_span > 0]
    mirrored = (not uf_trials
                or max(trials[j].uf_span for j in uf_trials) < MIN_UP_FIXED_SPAN)
    v0 = np.array([release_velocity(tr) for tr in trials])
    if mirrored:
        v_apex = np.zeros(len(trials))
    else:
        v_apex = np.array(
            [coef[l_col[j]] + 2.0 * coef[uf_g] * trials[j].uf_span
             if j in l_col else release_velocity(trials[j])
             for j in range(len(trials))])

    params = _stage2(samples, trials, has_control, mirrored, v0, v_apex,
                     fit_cfg)
    # one refresh of the entry velocities from the structural estimate
    if has_control:
        uc = params[Mode.UP_CONTROL]
        v0 = np.array([uc.reset + 2.0 * uc.gravity * tr.uc_span
                       for tr in trials])
    if not mirrored:
        uf = params[Mode.UP_FIXED]
        v_apex = np.array(
            [uf.reset + uf.multiplier * v0[j]
             + 2.0 * uf.gravity * trials[j].uf_span
             if trials[j].uf_span > 0 else v0[j]
             for j in range(len(trials))])
    return _stage2(samples, trials, has_control, mirrored, v0, v_apex,
                   fit_cfg)


def learn_model(log: ExperimentLog,
                config: PipelineConfig = PipelineConfig()) -> JumpModel:
    """The full pipeline for one experiment log."""
    extraction = extract(log, config)
    params = fit_modes(extraction, config)
    trace_arrays = {hold: trace.h
                    for hold, trace in extraction.traces.items()}
    return assemble_model(log.game_id, log.character_id, extraction.bounds,
                          params, trace_arrays)
