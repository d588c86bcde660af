"""Learn per-mode motion parameters from segmented height traces.

Each mode's samples, pooled across trials, are fit to

    h = h_0 + (v_y + m_0 * v_0) * t + a_y * t**2

with v_y, m_0, a_y shared across segments and one intercept h_0 per
segment.  The loss is quadratic inside an epsilon band (positions are
integer pixels, so quantization noise is +-0.5 px) and linear with a
configurable slope beyond it, so genuine outliers (animation jitter,
landing clips) buy bounded slack instead of dragging the parabola.  On
data that fits inside the band the solution coincides with ordinary least
squares, which is what the independent oracle checks.  Solved by
iteratively reweighted least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .automaton import AutomatonSpec, Mode, ModeParams, simulate


class FitError(ValueError):
    pass


class UnderdeterminedError(FitError):
    pass


@dataclass(frozen=True)
class FitConfig:
    epsilon: float = 0.5
    penalty: float = 10.0
    max_iterations: int = 200
    convergence_tolerance: float = 1e-10
    # below this spread of entry velocities the multiplier column is nearly
    # collinear with t and quantization noise dominates it; drop it instead
    multiplier_min_spread: float = 0.5

    def __post_init__(self):
        if self.epsilon < 0 or self.penalty <= 0:
            raise FitError("need epsilon >= 0 and penalty > 0")


@dataclass(frozen=True)
class SegmentSamples:
    """One segment's samples on the state's own clock (entry frame at t=0).

    When `h0` is given the segment's intercept is pinned to it instead of
    being fitted; the pipeline pins intercepts to the upstream mode's
    fitted curve at the transition (trajectory continuity), which removes
    per-segment degrees of freedom that quantization noise would
    otherwise soak up.
    """
    t: np.ndarray
    h: np.ndarray
    v0: float = 0.0
    h0: float | None = None


@dataclass(frozen=True)
class FitResult:
    params: ModeParams
    intercepts: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool


def _irls_weights(r: np.ndarray, epsilon: float, penalty: float) -> np.ndarray:
    w = np.ones_like(r)
    out = np.abs(r) > epsilon
    w[out] = penalty / (2.0 * np.abs(r[out]))
    return w


def irls_solve(design: np.ndarray, target: np.ndarray,
               config: FitConfig) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Minimize the banded robust loss by iteratively reweighted least
    squares; returns (coefficients, residuals, iterations, converged)."""
    w = np.ones(len(target))
    coef = None
    iterations = 0
    converged = False
    for iterations in range(1, config.max_iterations + 1):
        sw = np.sqrt(w)
        sol, *_ = np.linalg.lstsq(design * sw[:, None], target * sw,
                                  rcond=None)
        if coef is not None and np.max(np.abs(sol - coef)) < config.convergence_tolerance:
            coef = sol
            converged = True
            break
        coef = sol
        r = target - design @ coef
        w = _irls_weights(r, config.epsilon, config.penalty)
    return coef, target - design @ coef, iterations, converged


def fit_mode(segments: list[SegmentSamples],
             config: FitConfig = FitConfig()) -> FitResult:
    """Shared (gravity, reset, multiplier) over all segments of one mode.

    The multiplier column is dropped (and reported as 0) when the entry
    velocities carry no variation, which makes it structurally
    unidentifiable; the whole linear term then folds into the reset.
    """
    segments = [s for s in segments if len(s.t)]
    if not segments:
        raise UnderdeterminedError("no samples for this mode")
    n_seg = len(segments)
    pinned = all(s.h0 is not None for s in segments)
    t = np.concatenate([np.asarray(s.t, dtype=float) for s in segments])
    h = np.concatenate([np.asarray(s.h, dtype=float) for s in segments])
    v0s = np.array([s.v0 for s in segments], dtype=float)
    seg_idx = np.concatenate([np.full(len(s.t), i)
                              for i, s in enumerate(segments)]).astype(int)

    fit_multiplier = np.ptp(v0s) >= config.multiplier_min_spread
    n_shared = 3 if fit_multiplier else 2
    n_free = 0 if pinned else n_seg
    if len(t) - n_free < n_shared - 1 or len(t) < 3:
        raise UnderdeterminedError(
            f"{len(t)} samples over {n_seg} segments cannot identify the mode")

    if pinned:
        h = h - np.array([s.h0 for s in segments])[seg_idx]
        cols = [t[:, None]]
    else:
        cols = [np.eye(n_seg)[seg_idx], t[:, None]]
    if fit_multiplier:
        cols.append((v0s[seg_idx] * t)[:, None])
    cols.append((t * t)[:, None])
    design = np.hstack(cols)

    coef, residuals, iterations, converged = irls_solve(design, h, config)

    if pinned:
        intercepts = np.array([s.h0 for s in segments])
    else:
        intercepts = coef[:n_free]
    v_y = float(coef[n_free])
    if fit_multiplier:
        m_0 = float(coef[n_free + 1])
        a_y = float(coef[n_free + 2])
    else:
        m_0 = 0.0
        a_y = float(coef[n_free + 1])
    if not all(map(math.isfinite, (v_y, m_0, a_y))):
        raise FitError("fit produced non-finite coefficients")
    return FitResult(ModeParams(gravity=a_y, reset=v_y, multiplier=m_0),
                     intercepts, residuals, iterations, converged)


# ---------------------------------------------------------------------------
# model assembly and the model file format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpModel:
    game_id: str
    character_id: str
    up_fixed: ModeParams
    down: ModeParams
    up_control: ModeParams | None = None
    min_hold: int = 1
    max_hold: int = 1
    has_control: bool = False
    residual_mean_abs: float = 0.0
    residual_max_abs: float = 0.0

    def __post_init__(self):
        if self.has_control != (self.up_control is not None):
            raise FitError("up_control must be present iff has_control")
        if self.min_hold > self.max_hold:
            raise FitError("min_hold must not exceed max_hold")

    def to_automaton(self, ground_screen_y: int = 184) -> AutomatonSpec:
        return AutomatonSpec(up_fixed=self.up_fixed, down=self.down,
                             up_control=self.up_control,
                             min_hold=self.min_hold, max_hold=self.max_hold,
                             has_control=self.has_control,
                             ground_screen_y=ground_screen_y)


def replay_residuals(model: JumpModel,
                     traces: dict[int, np.ndarray]) -> tuple[float, float]:
    """Mean/max absolute error of the model's replay of every trial."""
    spec = model.to_automaton()
    total = 0.0
    count = 0
    worst = 0.0
    for hold, observed in traces.items():
        sim = simulate(spec, hold, len(observed)).heights
        err = np.abs(sim - np.asarray(observed))
        total += float(err.sum())
        count += len(observed)
        worst = max(worst, float(err.max()))
    return (total / count if count else 0.0), worst


def assemble_model(game_id: str, character_id: str, bounds,
                   mode_params: dict[Mode, ModeParams],
                   traces: dict[int, np.ndarray]) -> JumpModel:
    """Populate a JumpModel and score it by replaying every trial."""
    if Mode.UP_FIXED not in mode_params or Mode.DOWN not in mode_params:
        raise FitError("incomplete model: up_fixed and down fits are required")
    if bounds.has_control and Mode.UP_CONTROL not in mode_params:
        raise FitError("incomplete model: controlled jump lacks an up_control fit")
    model = JumpModel(
        game_id=game_id, character_id=character_id,
        up_fixed=mode_params[Mode.UP_FIXED], down=mode_params[Mode.DOWN],
        up_control=mode_params.get(Mode.UP_CONTROL) if bounds.has_control else None,
        min_hold=bounds.min_hold, max_hold=bounds.max_hold,
        has_control=bounds.has_control)
    mean_abs, max_abs = replay_residuals(model, traces)
    return JumpModel(**{**model.__dict__,
                        "residual_mean_abs": mean_abs,
                        "residual_max_abs": max_abs})


def export_model(model: JumpModel) -> bytes:
    lines = [
        f"game = {model.game_id}",
        f"character = {model.character_id}",
        f"has_control = {'true' if model.has_control else 'false'}",
        f"min_hold = {model.min_hold}",
        f"max_hold = {model.max_hold}",
    ]
    for name in ("up_control", "up_fixed", "down"):
        params = getattr(model, name)
        if params is None:
            continue
        lines.append(f"{name}.gravity = {params.gravity!r}")
        lines.append(f"{name}.reset = {params.reset!r}")
        lines.append(f"{name}.multiplier = {params.multiplier!r}")
    lines.append(f"residual.mean_abs = {model.residual_mean_abs!r}")
    lines.append(f"residual.max_abs = {model.residual_max_abs!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def import_model(data: bytes | str) -> JumpModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    kv: dict[str, str] = {}
    for line_no, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FitError(f"model file line {line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value

    def mode(prefix):
        keys = [f"{prefix}.gravity", f"{prefix}.reset", f"{prefix}.multiplier"]
        if not any(k in kv for k in keys):
            return None
        try:
            return ModeParams(gravity=float(kv[keys[0]]),
                              reset=float(kv[keys[1]]),
                              multiplier=float(kv[keys[2]]))
        except (KeyError, ValueError) as exc:
            raise FitError(f"bad {prefix} parameters: {exc}") from None

    try:
        has_control = kv["has_control"].lower() == "true"
        model = JumpModel(
            game_id=kv["game"], character_id=kv["character"],
            up_fixed=mode("up_fixed"), down=mode("down"),
            up_control=mode("up_control") if has_control else None,
            min_hold=int(kv["min_hold"]), max_hold=int(kv["max_hold"]),
            has_control=has_control,
            residual_mean_abs=float(kv.get("residual.mean_abs", 0.0)),
            residual_max_abs=float(kv.get("residual.max_abs", 0.0)))
    except KeyError as exc:
        raise FitError(f"model file missing key {exc}") from None
    if model.up_fixed is None or model.down is None:
        raise FitError("model file lacks up_fixed or down parameters")
    return model
