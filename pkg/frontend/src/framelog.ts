/**
 * Frame-log text emission, byte-exact against the analysis toolkit's
 * parser:
 *
 *   #LOG game=<string> character=<string>
 *   #TRIAL hold=<int>
 *   F <frame_number> <buttons-hex> [<tile>,<x>,<y>,<pal>,<hf>,<vf>,<bg>,<h>]*
 *
 * Controller buttons map to mask bits in standard pad order:
 * A, B, Select, Start, Up, Down, Left, Right = bits 0..7.
 */

import type { DecodedSprite } from "./oam.js";

export const BUTTON_A = 0x01;
export const BUTTON_B = 0x02;
export const BUTTON_SELECT = 0x04;
export const BUTTON_START = 0x08;
export const BUTTON_UP = 0x10;
export const BUTTON_DOWN = 0x20;
export const BUTTON_LEFT = 0x40;
export const BUTTON_RIGHT = 0x80;

export function logHeader(gameId: string, characterId: string): string {
  if (/\s/.test(gameId) || /\s/.test(characterId)) {
    throw new Error("game and character ids must not contain whitespace");
  }
  return `#LOG game=${gameId} character=${characterId}`;
}

export function trialHeader(holdFrames: number): string {
  if (!Number.isInteger(holdFrames) || holdFrames < 1) {
    throw new Error(`hold must be a positive integer, got ${holdFrames}`);
  }
  return `#TRIAL hold=${holdFrames}`;
}

export function spriteToken(s: DecodedSprite): string {
  return [
    s.tileIndex,
    s.x,
    s.y,
    s.palette,
    s.hFlip ? 1 : 0,
    s.vFlip ? 1 : 0,
    s.background ? 1 : 0,
    s.height,
  ].join(",");
}

export function frameLine(
  frameNumber: number,
  buttonsMask: number,
  sprites: readonly DecodedSprite[],
): string {
  if (!Number.isInteger(frameNumber) || frameNumber < 0) {
    throw new Error(`frame number must be a non-negative integer, got ${frameNumber}`);
  }
  if (!Number.isInteger(buttonsMask) || buttonsMask < 0 || buttonsMask > 0xff) {
    throw new Error(`button mask out of range: ${buttonsMask}`);
  }
  const head = `F ${frameNumber} ${buttonsMask.toString(16).padStart(2, "0")}`;
  const toks = sprites.map(spriteToken);
  return [head, ...toks].join(" ");
}

/** Join emitted lines into the final log body (trailing newline included). */
export function assembleLog(lines: readonly string[]): string {
  return lines.join("\n") + "\n";
}
