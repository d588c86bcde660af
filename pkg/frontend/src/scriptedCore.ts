/**
 * A scripted stand-in for a homebrew test ROM: an emulator core whose
 * sprite table follows a fixed, known-by-construction script, used to
 * verify OAM decoding and protocol output without a real emulator.
 */

import { OAM_BYTES, PPUCTRL_TALL_SPRITES } from "./oam.js";
import type { EmulatorCore } from "./protocol.js";

/** Screen position of the moving sprite on frame n (cycled). */
export const SCRIPTED_PATH: ReadonlyArray<readonly [number, number]> = [
  [120, 176],
  [121, 172],
  [122, 169],
  [124, 167],
  [126, 166],
  [128, 167],
  [130, 169],
  [131, 172],
  [132, 176],
];

export const MOVING_TILE = 0x42;
export const MOVING_PALETTE = 2;

interface Placement {
  rawY: number;
  tile: number;
  attr: number;
  x: number;
}

export class ScriptedCore implements EmulatorCore {
  private frameCounter = -1;
  private readonly tallSprites: boolean;

  constructor(options: { tallSprites?: boolean } = {}) {
    this.tallSprites = options.tallSprites ?? false;
  }

  loadSavestate(): void {
    this.frameCounter = -1;
  }

  stepFrame(_buttonsMask: number): number {
    this.frameCounter += 1;
    return this.frameCounter;
  }

  readPpuCtrl(): number {
    return this.tallSprites ? PPUCTRL_TALL_SPRITES : 0;
  }

  readOam(): Uint8Array {
    if (this.frameCounter < 0) {
      throw new Error("no frame stepped since savestate load");
    }
    const [x, y] = SCRIPTED_PATH[this.frameCounter % SCRIPTED_PATH.length]!;
    const placements: Placement[] = [
      // the moving "player" sprite
      { rawY: y - 1, tile: MOVING_TILE, attr: MOVING_PALETTE, x },
      // a static foreground decoration
      { rawY: 199, tile: 0x80, attr: 0x01, x: 40 },
      // a flipped, behind-background decoration
      { rawY: 95, tile: 0x81, attr: 0x60 | 0x03, x: 200 },
    ];
    const oam = new Uint8Array(OAM_BYTES).fill(0xf0); // park unused entries
    placements.forEach((p, i) => {
      oam[4 * i] = p.rawY;
      oam[4 * i + 1] = p.tile;
      oam[4 * i + 2] = p.attr;
      oam[4 * i + 3] = p.x;
    });
    return oam;
  }
}
