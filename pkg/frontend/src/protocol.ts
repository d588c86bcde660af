/**
 * The button-hold experiment protocol, run against an emulator core.
 *
 * Starting from a human-established safe savestate, trial i holds the
 * jump button for k_start + i frames, then waits with no input so the
 * jump completes, then reloads the savestate for the next trial.  Every
 * frame's OAM table is dumped into the frame-log text format.
 */

import { decodeOam } from "./oam.js";
import {
  BUTTON_A,
  assembleLog,
  frameLine,
  logHeader,
  spriteToken,
  trialHeader,
} from "./framelog.js";

/**
 * The minimal emulator surface the bridge needs.  A real adapter wraps
 * an emulator's scripting API; tests use a scripted core.
 */
export interface EmulatorCore {
  /** Restore the safe state (player idle on the ground). */
  loadSavestate(): void;
  /**
   * Advance one frame with the given controller mask held, and return
   * the completed frame's number (savestate-relative).
   */
  stepFrame(buttonsMask: number): number;
  /** 256-byte OAM snapshot at the end of the last completed frame. */
  readOam(): Uint8Array;
  /** PPUCTRL register value (bit 5 selects 8x16 sprites). */
  readPpuCtrl(): number;
}

export interface BridgeConfig {
  gameId: string;
  characterId: string;
  /** Hold duration of the first trial, in frames. */
  kStart?: number;
  /** Post-release frames recorded per trial. */
  waitFrames?: number;
  /** Number of trials; trial i holds for kStart + i frames. */
  trialCount?: number;
  /** Controller mask held during the jump (defaults to the A button). */
  jumpButton?: number;
}

export class NondeterminismError extends Error {}

function stepAndDump(core: EmulatorCore, mask: number): string {
  const frameNumber = core.stepFrame(mask);
  const sprites = decodeOam(core.readOam(), core.readPpuCtrl());
  return frameLine(frameNumber, mask, sprites);
}

/**
 * Run the full sweep and return the frame-log text.
 *
 * Mirrors the analysis toolkit's determinism contract: the first frame
 * of every trial must show the same sprite table, since each trial
 * starts from the same savestate.
 */
export function runProtocol(core: EmulatorCore, config: BridgeConfig): string {
  const kStart = config.kStart ?? 1;
  const waitFrames = config.waitFrames ?? 120;
  const trialCount = config.trialCount ?? 120;
  const jumpButton = config.jumpButton ?? BUTTON_A;
  if (kStart < 1 || waitFrames < 1 || trialCount < 1) {
    throw new Error("protocol parameters must be positive");
  }

  const lines: string[] = [logHeader(config.gameId, config.characterId)];
  let firstFrameSprites: string | null = null;
  for (let i = 0; i < trialCount; i++) {
    const hold = kStart + i;
    core.loadSavestate();
    lines.push(trialHeader(hold));
    for (let f = 0; f < hold + waitFrames; f++) {
      const mask = f < hold ? jumpButton : 0;
      const line = stepAndDump(core, mask);
      if (f === 0) {
        const sprites = line.split(" ").slice(3).join(" ");
        if (firstFrameSprites === null) {
          firstFrameSprites = sprites;
        } else if (sprites !== firstFrameSprites) {
          throw new NondeterminismError(
            `trial ${hold}: first frame differs from earlier trials`,
          );
        }
      }
      lines.push(line);
    }
  }
  return assembleLog(lines);
}

export { spriteToken };
