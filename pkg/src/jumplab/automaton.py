"""Forward simulation of the four-state jump automaton.

Within a state the height obeys the closed form

    h(t_s) = h_entry + (v_y + m_0 * v_entry) * t_s + a_y * t_s**2

with t_s the integer frames-in-state clock (no 1/2 factor on the
quadratic term; the fitter inverts exactly this form).  Internal state is
real-valued; emission rounds with floor(h + 0.5), mimicking the sub-pixel
positions games keep internally.

The rising->falling switch is anchored at the last emitted frame whose
rounded height equals the running maximum (the observed apex), and
falling emissions are kept strictly below that plateau value.  This makes
the falling state's clock recoverable from the integer trace alone, so
fitted resets compare like for like with the generator's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np


class Mode(Enum):
    GROUND = "ground"
    UP_CONTROL = "up_control"
    UP_FIXED = "up_fixed"
    DOWN = "down"


@dataclass(frozen=True)
class ModeParams:
    gravity: float
    reset: float
    multiplier: float = 0.0

    def coeffs(self, v_entry: float) -> tuple[float, float]:
        """(linear, quadratic) coefficients of the in-state closed form."""
        return self.reset + self.multiplier * v_entry, self.gravity

    def exit_velocity(self, v_entry: float, t_s: float) -> float:
        lin, quad = self.coeffs(v_entry)
        return lin + 2.0 * quad * t_s


@dataclass(frozen=True)
class AutomatonSpec:
    up_fixed: ModeParams
    down: ModeParams
    up_control: ModeParams | None = None
    min_hold: int = 1
    max_hold: int = 1
    has_control: bool = False
    ground_screen_y: int = 184

    def __post_init__(self):
        if self.has_control != (self.up_control is not None):
            raise ValueError("has_control must mirror presence of up_control")
        if not 1 <= self.min_hold <= self.max_hold:
            raise ValueError("need 1 <= min_hold <= max_hold")
        if self.has_control == (self.min_hold == self.max_hold):
            raise ValueError("has_control must equal (min_hold < max_hold)")

    def clamp_hold(self, hold_frames: int) -> int:
        if not self.has_control:
            return 0
        return min(max(hold_frames, self.min_hold), self.max_hold)


@dataclass
class SimState:
    mode: Mode
    t_s: int
    h_entry: float
    v_entry: float
    params: ModeParams | None

    @property
    def h(self) -> float:
        if self.params is None:
            return self.h_entry
        lin, quad = self.params.coeffs(self.v_entry)
        return self.h_entry + lin * self.t_s + quad * self.t_s * self.t_s

    @property
    def v(self) -> float:
        if self.params is None:
            return 0.0
        return self.params.exit_velocity(self.v_entry, self.t_s)


def entry_velocity_at_transition(state: SimState) -> float:
    """Instantaneous velocity handed to the next state when a transition fires."""
    return state.v


def round_px(h: float) -> int:
    return math.floor(h + 0.5)


def apex_anchor(h_entry: float, v_lin: float, a: float) -> int:
    """Frames-in-state of the observed apex of a rising parabola.

    The end of the plateau of rounded emissions equal to the peak value;
    the falling clock is anchored there.
    """
    if v_lin <= 0.0:
        t_star = 0.0
    elif a < 0.0:
        t_star = -v_lin / (2.0 * a)
    else:
        raise ValueError("rising state never reaches an apex")
    horizon = int(math.ceil(t_star)) + 8
    rounded = [round_px(h_entry + v_lin * t + a * t * t)
               for t in range(horizon + 1)]
    peak = max(rounded)
    return max(t for t, r in enumerate(rounded) if r == peak)


class TrialProfile:
    """Pure emission function for one jump given the effective hold.

    `emission(t)` maps frames-since-press to integer height; shared by
    `simulate` and the synthetic harness so both emit identical traces.
    """

    def __init__(self, spec: AutomatonSpec, effective_hold: int):
        self.spec = spec
        self.e = effective_hold
        if spec.has_control:
            if effective_hold < 1:
                raise ValueError("controlled jump needs an effective hold >= 1")
            self.uc_lin, self.uc_quad = spec.up_control.coeffs(0.0)
            self.v_release = spec.up_control.exit_velocity(0.0, self.e)
            self.h_release = self.uc_lin * self.e + self.uc_quad * self.e ** 2
        else:
            self.e = 0
            self.v_release = 0.0
            self.h_release = 0.0
        self.uf_lin, self.uf_quad = spec.up_fixed.coeffs(self.v_release)
        try:
            apex_rel = apex_anchor(self.h_release, self.uf_lin, self.uf_quad)
        except ValueError:
            apex_rel = None  # never comes down
        self.apex_frame = None if apex_rel is None else self.e + apex_rel
        self.land_frame = None
        if apex_rel is not None:
            self.h_apex = (self.h_release + self.uf_lin * apex_rel
                           + self.uf_quad * apex_rel ** 2)
            v_apex = self.uf_lin + 2.0 * self.uf_quad * apex_rel
            self.d_lin, self.d_quad = spec.down.coeffs(v_apex)
            self.peak_px = round_px(self.h_apex)
            tau = 1
            while True:
                h = self.h_apex + self.d_lin * tau + self.d_quad * tau * tau
                if h <= 0.0:
                    self.land_frame = self.apex_frame + tau
                    break
                if tau > 100000:
                    break  # pathological spec; treated as never landing
                tau += 1

    def emission(self, t: int) -> int:
        spec = self.spec
        if t < 0:
            return 0
        if self.land_frame is not None and t >= self.land_frame:
            return 0
        if spec.has_control and t <= self.e:
            h = self.uc_lin * t + self.uc_quad * t * t
            return max(0, round_px(h))
        if self.apex_frame is None or t <= self.apex_frame:
            tau = t - self.e
            h = self.h_release + self.uf_lin * tau + self.uf_quad * tau * tau
            return max(0, round_px(h))
        tau = t - self.apex_frame
        h = self.h_apex + self.d_lin * tau + self.d_quad * tau * tau
        # keep falling emissions strictly below the apex plateau so the
        # observed apex coincides with the falling clock's anchor
        return max(0, min(round_px(h), self.peak_px - 1))


class SimResult(NamedTuple):
    heights: np.ndarray  # integer pixels per frame, up-positive, ground 0
    truncated: bool      # jump did not land within the requested window


def simulate(spec: AutomatonSpec, hold_frames: int,
             total_frames: int) -> SimResult:
    """Height trace for one button-hold experiment, rounded to integer pixels.

    The press happens on frame 0; holds outside [min_hold, max_hold] clamp
    to the nearest bound, so all sub-min holds (and all over-max holds)
    produce identical traces.
    """
    if hold_frames < 1:
        raise ValueError("hold_frames must be >= 1")
    if total_frames < hold_frames:
        raise ValueError("total_frames must cover the hold")
    profile = TrialProfile(spec, spec.clamp_hold(hold_frames))
    heights = np.fromiter((profile.emission(t) for t in range(total_frames)),
                          dtype=np.int64, count=total_frames)
    truncated = (profile.land_frame is None
                 or profile.land_frame >= total_frames)
    return SimResult(heights, truncated)
