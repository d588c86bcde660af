"""The frame-log format: per-frame sprite-table dumps plus controller state.

This is the single data contract between a game harness (synthetic or an
emulator bridge) and the rest of the pipeline.  One UTF-8 text line per
frame, one header line per trial, one header line per log:

    #LOG game=<string> character=<string>
    #TRIAL hold=<int>
    F <frame_number> <buttons-hex> [<tile>,<x>,<y>,<pal>,<hf>,<vf>,<bg>,<h>]*

Screen coordinates are stored raw (y grows downward, exactly as the PPU
reports).  Off-screen sentinel sprites (y >= 240, the hardware convention
for hiding a sprite) are dropped at ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

BUTTONS = ("A", "B", "Select", "Start", "Up", "Down", "Left", "Right")
BUTTON_BIT = {name: i for i, name in enumerate(BUTTONS)}

MAX_SPRITES = 64
OFFSCREEN_Y = 240


class FrameLogError(ValueError):
    """Malformed or invalid frame-log content."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SpriteKey(NamedTuple):
    tile_index: int
    palette: int
    h_flip: bool
    v_flip: bool
    background: bool


@dataclass(frozen=True)
class SpriteEntry:
    tile_index: int
    x: int
    y: int
    palette: int
    h_flip: bool = False
    v_flip: bool = False
    background: bool = False
    width: int = 8
    height: int = 8

    @property
    def key(self) -> SpriteKey:
        return SpriteKey(self.tile_index, self.palette, self.h_flip,
                         self.v_flip, self.background)


@dataclass(frozen=True)
class Frame:
    frame_number: int
    sprites: tuple[SpriteEntry, ...]
    buttons: frozenset[str]


@dataclass(frozen=True)
class TrialRecord:
    hold_frames: int
    frames: tuple[Frame, ...]


@dataclass(frozen=True)
class ExperimentLog:
    game_id: str
    character_id: str
    trials: tuple[TrialRecord, ...]


def buttons_to_mask(buttons: Iterable[str]) -> int:
    mask = 0
    for b in buttons:
        mask |= 1 << BUTTON_BIT[b]
    return mask


def mask_to_buttons(mask: int) -> frozenset[str]:
    return frozenset(name for name, bit in BUTTON_BIT.items() if mask & (1 << bit))


def _validate_entry(e: SpriteEntry, line_no: int | None = None) -> None:
    if not 0 <= e.tile_index <= 255:
        raise FrameLogError(f"tile index {e.tile_index} out of range", line_no)
    if not 0 <= e.x <= 255:
        raise FrameLogError(f"sprite x {e.x} out of range", line_no)
    if e.y < 0:
        raise FrameLogError(f"sprite y {e.y} out of range", line_no)
    if not 0 <= e.palette <= 3:
        raise FrameLogError(f"palette {e.palette} out of range", line_no)
    if e.height not in (8, 16):
        raise FrameLogError(f"sprite height {e.height} not 8 or 16", line_no)


def _parse_frame_line(line: str, line_no: int) -> Frame:
    parts = line.split()
    if len(parts) < 3:
        raise FrameLogError("frame line needs number and button mask", line_no)
    try:
        frame_number = int(parts[1])
        mask = int(parts[2], 16)
    except ValueError as exc:
        raise FrameLogError(f"bad frame header: {exc}", line_no) from None
    if frame_number < 0:
        raise FrameLogError("negative frame number", line_no)
    if not 0 <= mask <= 0xFF:
        raise FrameLogError(f"button mask {mask:#x} out of range", line_no)
    raw = parts[3:]
    if len(raw) > MAX_SPRITES:
        raise FrameLogError(f"{len(raw)} sprites exceeds the 64-entry table",
                            line_no)
    sprites = []
    for tok in raw:
        fields = tok.split(",")
        if len(fields) != 8:
            raise FrameLogError(f"sprite tuple {tok!r} needs 8 fields", line_no)
        try:
            tile, x, y, pal, hf, vf, bg, h = (int(v) for v in fields)
        except ValueError:
            raise FrameLogError(f"non-integer sprite field in {tok!r}",
                                line_no) from None
        if y >= OFFSCREEN_Y:
            continue
        entry = SpriteEntry(tile, x, y, pal, bool(hf), bool(vf), bool(bg),
                            8, h)
        _validate_entry(entry, line_no)
        sprites.append(entry)
    return Frame(frame_number, tuple(sprites), mask_to_buttons(mask))


def parse_log(data: bytes | str) -> ExperimentLog:
    """Parse a frame log; raises FrameLogError with a line number on bad input."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    game_id = None
    character_id = None
    trials: list[TrialRecord] = []
    cur_hold: int | None = None
    cur_frames: list[Frame] = []

    def close_trial():
        nonlocal cur_hold, cur_frames
        if cur_hold is not None:
            trials.append(TrialRecord(cur_hold, tuple(cur_frames)))
        cur_hold = None
        cur_frames = []

    for line_no, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("#LOG"):
            kv = dict(tok.split("=", 1) for tok in line.split()[1:] if "=" in tok)
            game_id = kv.get("game")
            character_id = kv.get("character")
            if game_id is None or character_id is None:
                raise FrameLogError("#LOG needs game= and character=", line_no)
        elif line.startswith("#TRIAL"):
            if game_id is None:
                raise FrameLogError("#TRIAL before #LOG header", line_no)
            close_trial()
            kv = dict(tok.split("=", 1) for tok in line.split()[1:] if "=" in tok)
            try:
                cur_hold = int(kv["hold"])
            except (KeyError, ValueError):
                raise FrameLogError("#TRIAL needs hold=<int>", line_no) from None
            if cur_hold < 1:
                raise FrameLogError("hold must be >= 1", line_no)
        elif line.startswith("F "):
            if cur_hold is None:
                raise FrameLogError("frame line outside a trial", line_no)
            frame = _parse_frame_line(line, line_no)
            if cur_frames and frame.frame_number <= cur_frames[-1].frame_number:
                raise FrameLogError(
                    f"frame number {frame.frame_number} not increasing", line_no)
            cur_frames.append(frame)
        elif line.startswith("#"):
            continue  # unknown directive, ignored for forward compatibility
        else:
            raise FrameLogError(f"unrecognized line {line!r}", line_no)
    close_trial()
    if game_id is None:
        raise FrameLogError("empty log: no #LOG header")
    holds = [t.hold_frames for t in trials]
    for prev, nxt in zip(holds, holds[1:]):
        if nxt <= prev:
            raise FrameLogError(f"trials out of order: hold {nxt} after {prev}")
    return ExperimentLog(game_id, character_id, tuple(trials))


def write_log(log: ExperimentLog) -> bytes:
    """Serialize; parse_log(write_log(log)) == log for any valid log."""
    out = [f"#LOG game={log.game_id} character={log.character_id}"]
    for trial in log.trials:
        out.append(f"#TRIAL hold={trial.hold_frames}")
        for frame in trial.frames:
            toks = [f"F {frame.frame_number} {buttons_to_mask(frame.buttons):02x}"]
            for s in frame.sprites:
                _validate_entry(s)
                toks.append(f"{s.tile_index},{s.x},{s.y},{s.palette},"
                            f"{int(s.h_flip)},{int(s.v_flip)},"
                            f"{int(s.background)},{s.height}")
            out.append(" ".join(toks))
    return ("\n".join(out) + "\n").encode("utf-8")
