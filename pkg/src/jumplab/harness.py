"""Experiment protocol runner and synthetic games with known ground truth.

`run_protocol` drives anything satisfying the `GameHarness` contract
(save/load a state token, step one frame with a button set) through the
button-hold sweep: hold the jump button k frames, wait j frames, reload,
increment k.  The synthetic games render a player character as a grid of
8x8 sub-sprites moving per an `AutomatonSpec` (or one of the deliberately
awkward archetypes: stair-step, preset trajectory, landing clip, ground
hover) among independent decoration sprites.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Protocol

from .automaton import AutomatonSpec, ModeParams, TrialProfile
from .framelog import ExperimentLog, Frame, SpriteEntry, TrialRecord

ARCHETYPES = ("PARABOLIC_CONTROLLED", "VELOCITY_CUT", "FIXED", "STAIR_STEP",
              "PRESET_TRAJECTORY", "LANDING_CLIP", "GROUND_HOVER")


class HarnessError(RuntimeError):
    pass


class NondeterminismError(HarnessError):
    """A harness violated the save/load determinism contract."""


class GameHarness(Protocol):
    def save_state(self) -> object: ...
    def load_state(self, token: object) -> None: ...
    def step(self, buttons: set[str]) -> Frame: ...


@dataclass(frozen=True)
class ProtocolConfig:
    k_start: int = 1
    wait_frames: int = 120
    trial_count: int = 120
    jump_button: str = "A"

    def __post_init__(self):
        if self.k_start < 1 or self.wait_frames < 1 or self.trial_count < 1:
            raise ValueError("protocol parameters must be positive")


def run_protocol(game: GameHarness, config: ProtocolConfig = ProtocolConfig(),
                 game_id: str = "synthetic",
                 character_id: str = "player") -> ExperimentLog:
    """Run the hold-k / wait-j / reset sweep and assemble the frame log."""
    token = game.save_state()
    trials = []
    first_frame_sprites = None
    for i in range(config.trial_count):
        k = config.k_start + i
        game.load_state(token)
        frames = []
        for _ in range(k):
            frames.append(game.step({config.jump_button}))
        for _ in range(config.wait_frames):
            frames.append(game.step(set()))
        if first_frame_sprites is None:
            first_frame_sprites = frames[0].sprites
        elif frames[0].sprites != first_frame_sprites:
            raise NondeterminismError(
                f"trial {k}: first frame differs from earlier trials")
        trials.append(TrialRecord(k, tuple(frames)))
    return ExperimentLog(game_id, character_id, tuple(trials))


# ---------------------------------------------------------------------------
# synthetic games
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticGameSpec:
    archetype: str
    automaton: AutomatonSpec | None = None
    decorations: int = 3
    sub_sprite_cols: int = 2
    sub_sprite_rows: int = 4
    flicker_period: int = 0      # 0 disables flicker
    flicker_hide: int = 2        # frames hidden per flicker
    player_x: int = 120
    jump_button: str = "A"
    # archetype-specific knobs
    stair_step: int = 3          # frames per stair level
    clip_depth: int = 8          # LANDING_CLIP: pixels below ground
    hover_height: int = 1        # GROUND_HOVER: landing offset
    hover_period: int = 8        # GROUND_HOVER: frames per bob half-cycle

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")
        if self.archetype != "PRESET_TRAJECTORY" and self.automaton is None:
            raise ValueError(f"{self.archetype} needs an automaton spec")


# a parabola-like but non-quadratic arc with a long hover, table-driven;
# index is frames since the button press
PRESET_ARC = (0, 3, 7, 11, 14, 17, 19, 21, 22, 23, 23, 23, 23, 23, 23, 23,
              22, 21, 19, 17, 14, 11, 7, 3, 0)


@dataclass
class _PlayerState:
    mode: str = "ground"         # ground | holding | airborne | settle
    t_in_jump: int = 0           # frames since press
    held_for: int = 0            # frames the button has been held
    prev_pressed: bool = False   # jumps trigger on the press edge only
    profile: TrialProfile | None = None
    settle_t: int = 0


class SyntheticGame:
    """Deterministic game harness rendering one player plus decorations."""

    def __init__(self, spec: SyntheticGameSpec):
        self.spec = spec
        self.ground_y = (spec.automaton.ground_screen_y
                         if spec.automaton is not None else 184)
        self.frame_counter = 0
        self.player = _PlayerState()

    # -- harness contract ---------------------------------------------------

    def save_state(self):
        return (self.frame_counter, copy.copy(self.player))

    def load_state(self, token):
        self.frame_counter, player = token
        self.player = copy.copy(player)

    def step(self, buttons: set[str]) -> Frame:
        height = self._advance_player(self.spec.jump_button in buttons)
        sprites = []
        if not self._flickering():
            sprites.extend(self._player_sprites(height))
        sprites.extend(self._decoration_sprites())
        frame = Frame(self.frame_counter, tuple(sprites), frozenset(buttons))
        self.frame_counter += 1
        return frame

    # -- player dynamics ----------------------------------------------------

    def _advance_player(self, pressed: bool) -> int:
        spec = self.spec
        p = self.player
        edge = pressed and not p.prev_pressed
        p.prev_pressed = pressed
        if p.mode == "ground":
            if edge:
                p.mode = "holding"
                p.t_in_jump = 0
                p.held_for = 1
                p.profile = None
                return self._arc_height(0)
            return 0
        if p.mode == "holding":
            p.t_in_jump += 1
            auto = spec.automaton
            if spec.archetype == "PRESET_TRAJECTORY":
                released = not pressed
                if released or p.t_in_jump >= len(PRESET_ARC):
                    p.mode = "airborne"
            else:
                if pressed:
                    p.held_for += 1
                if auto.has_control:
                    released = not pressed
                    e = None
                    if p.t_in_jump >= auto.max_hold:
                        e = auto.max_hold
                    elif released:
                        e = max(p.held_for, auto.min_hold)
                    if e is not None and p.t_in_jump >= e:
                        p.profile = TrialProfile(auto, e)
                        p.mode = "airborne"
                else:
                    p.profile = TrialProfile(auto, 0)
                    p.mode = "airborne"
            return self._post_height(p.t_in_jump)
        if p.mode == "airborne":
            p.t_in_jump += 1
            h = self._post_height(p.t_in_jump)
            if self._arc_over(p.t_in_jump):
                p.mode = "settle" if self._has_settle() else "ground"
                p.settle_t = 0
            return h
        if p.mode == "settle":
            h = self._settle_height(p.settle_t)
            p.settle_t += 1
            return h
        raise AssertionError(p.mode)

    def _arc_height(self, t: int) -> int:
        spec = self.spec
        if spec.archetype == "PRESET_TRAJECTORY":
            return PRESET_ARC[t] if 0 <= t < len(PRESET_ARC) else 0
        p = self.player
        if p.profile is not None:
            h = p.profile.emission(t)
        else:
            # still holding: the rising closed form needs no future knowledge
            auto = spec.automaton
            if auto.has_control:
                lin, quad = auto.up_control.coeffs(0.0)
            else:
                lin, quad = auto.up_fixed.coeffs(0.0)
            from .automaton import round_px
            h = max(0, round_px(lin * t + quad * t * t))
        return h

    def _post_height(self, t: int) -> int:
        """Arc height with the archetype's pragmatic distortion applied."""
        spec = self.spec
        h = self._arc_height(self._stairized(t))
        if spec.archetype == "LANDING_CLIP" and h == 0 and not self._landed_before(t):
            return -spec.clip_depth  # momentary clip below the ground
        if spec.archetype == "GROUND_HOVER" and h == 0:
            return spec.hover_height
        return h

    def _stairized(self, t: int) -> int:
        if self.spec.archetype == "STAIR_STEP":
            return t - (t % self.spec.stair_step)
        return t

    def _arc_over(self, t: int) -> bool:
        spec = self.spec
        if spec.archetype == "PRESET_TRAJECTORY":
            return t >= len(PRESET_ARC)
        prof = self.player.profile
        if prof is None or prof.land_frame is None:
            return False
        t_eff = self._stairized(t)
        if spec.archetype == "STAIR_STEP":
            return t_eff >= prof.land_frame
        return t >= prof.land_frame

    def _landed_before(self, t: int) -> bool:
        prof = self.player.profile
        return prof is not None and prof.land_frame is not None \
            and t > prof.land_frame

    def _has_settle(self) -> bool:
        return self.spec.archetype in ("LANDING_CLIP", "GROUND_HOVER")

    def _settle_height(self, t: int) -> int:
        spec = self.spec
        if spec.archetype == "LANDING_CLIP":
            # one clipped frame below ground, then snap back
            if t == 0:
                return -spec.clip_depth
            self.player.mode = "ground"
            return 0
        # GROUND_HOVER: bob between hover_height and the ground forever
        phase = (t // spec.hover_period) % 2
        return spec.hover_height if phase == 0 else 0

    # -- rendering ----------------------------------------------------------

    def _flickering(self) -> bool:
        period = self.spec.flicker_period
        if period <= 0:
            return False
        # phase-shifted so the first frames of an episode are never hidden
        return self.frame_counter % period >= period - self.spec.flicker_hide

    def _player_sprites(self, height: int) -> list[SpriteEntry]:
        spec = self.spec
        bottom = self.ground_y - height  # screen y of the character's feet
        out = []
        tile = 0x10
        for row in range(spec.sub_sprite_rows):
            for col in range(spec.sub_sprite_cols):
                y = bottom - 8 * (spec.sub_sprite_rows - row)
                x = spec.player_x + 8 * col
                out.append(SpriteEntry(tile, x, y, 0))
                tile += 1
        return out

    def _decoration_sprites(self) -> list[SpriteEntry]:
        out = []
        t = self.frame_counter
        for i in range(self.spec.decorations):
            if i % 3 == 2:
                # static HUD element
                out.append(SpriteEntry(0x80 + i, 16 + 12 * i, 16, 1))
            else:
                # horizontally patrolling enemy on the ground, far from the player
                base = 24 + 40 * i
                period = 48 + 8 * i
                phase = t % (2 * period)
                dx = phase if phase < period else 2 * period - phase
                out.append(SpriteEntry(0x80 + i, base + dx // 4,
                                       self.ground_y - 8, 2))
        return out


def make_synthetic(spec: SyntheticGameSpec) -> SyntheticGame:
    return SyntheticGame(spec)


# ---------------------------------------------------------------------------
# key-value spec files for the CLI
# ---------------------------------------------------------------------------

def _parse_mode(kv: dict[str, str], prefix: str) -> ModeParams | None:
    keys = [f"{prefix}.gravity", f"{prefix}.reset", f"{prefix}.multiplier"]
    if not any(k in kv for k in keys):
        return None
    return ModeParams(gravity=float(kv.get(keys[0], 0.0)),
                      reset=float(kv.get(keys[1], 0.0)),
                      multiplier=float(kv.get(keys[2], 0.0)))


def parse_synthetic_spec(text: str) -> SyntheticGameSpec:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad spec line {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value
    archetype = kv.get("archetype")
    if archetype is None:
        raise ValueError("spec needs archetype=")
    automaton = None
    if archetype != "PRESET_TRAJECTORY":
        up_control = _parse_mode(kv, "up_control")
        automaton = AutomatonSpec(
            up_fixed=_parse_mode(kv, "up_fixed") or ModeParams(0.0, 0.0),
            down=_parse_mode(kv, "down") or ModeParams(0.0, 0.0),
            up_control=up_control,
            min_hold=int(kv.get("min_hold", 1)),
            max_hold=int(kv.get("max_hold", 1)),
            has_control=up_control is not None,
            ground_screen_y=int(kv.get("ground_screen_y", 184)))
    layout = kv.get("layout", "2x4")
    cols, rows = (int(v) for v in layout.split("x"))
    return SyntheticGameSpec(
        archetype=archetype, automaton=automaton,
        decorations=int(kv.get("decorations", 3)),
        sub_sprite_cols=cols, sub_sprite_rows=rows,
        flicker_period=int(kv.get("flicker_period", 0)),
        flicker_hide=int(kv.get("flicker_hide", 2)),
        player_x=int(kv.get("player_x", 120)),
        jump_button=kv.get("jump_button", "A"),
        stair_step=int(kv.get("stair_step", 3)),
        clip_depth=int(kv.get("clip_depth", 8)),
        hover_height=int(kv.get("hover_height", 1)),
        hover_period=int(kv.get("hover_period", 8)))
