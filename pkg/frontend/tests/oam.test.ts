import { describe, expect, it } from "vitest";

import { OAM_BYTES, PPUCTRL_TALL_SPRITES, decodeOam } from "../src/oam.js";

function oamWith(
  entries: Array<[number, number, number, number]>,
): Uint8Array {
  const oam = new Uint8Array(OAM_BYTES).fill(0xf0);
  entries.forEach(([rawY, tile, attr, x], i) => {
    oam.set([rawY, tile, attr, x], 4 * i);
  });
  return oam;
}

describe("decodeOam", () => {
  it("applies the one-scanline y offset", () => {
    const sprites = decodeOam(oamWith([[100, 0x10, 0, 80]]), 0);
    expect(sprites).toHaveLength(1);
    expect(sprites[0]!.y).toBe(101);
    expect(sprites[0]!.x).toBe(80);
    expect(sprites[0]!.tileIndex).toBe(0x10);
  });

  it("decodes attribute bits", () => {
    // palette 3, background priority, h-flip, v-flip
    const attr = 0x03 | 0x20 | 0x40 | 0x80;
    const s = decodeOam(oamWith([[50, 1, attr, 9]]), 0)[0]!;
    expect(s.palette).toBe(3);
    expect(s.background).toBe(true);
    expect(s.hFlip).toBe(true);
    expect(s.vFlip).toBe(true);
  });

  it("ignores attribute bits 2-4", () => {
    const s = decodeOam(oamWith([[50, 1, 0x1c, 9]]), 0)[0]!;
    expect(s.palette).toBe(0);
    expect(s.background).toBe(false);
    expect(s.hFlip).toBe(false);
    expect(s.vFlip).toBe(false);
  });

  it("drops sprites parked off-screen", () => {
    expect(decodeOam(oamWith([]), 0)).toHaveLength(0);
    // rawY 239 renders at y=240, exactly off the 240-line screen
    expect(decodeOam(oamWith([[239, 1, 0, 0]]), 0)).toHaveLength(0);
    expect(decodeOam(oamWith([[238, 1, 0, 0]]), 0)).toHaveLength(1);
  });

  it("reports sprite height from PPUCTRL bit 5", () => {
    const oam = oamWith([[100, 1, 0, 0]]);
    expect(decodeOam(oam, 0)[0]!.height).toBe(8);
    expect(decodeOam(oam, PPUCTRL_TALL_SPRITES)[0]!.height).toBe(16);
    // other PPUCTRL bits do not matter
    expect(decodeOam(oam, 0xdf)[0]!.height).toBe(8);
  });

  it("preserves table order and reads all 64 entries", () => {
    const entries: Array<[number, number, number, number]> = [];
    for (let i = 0; i < 64; i++) {
      entries.push([i, i, 0, i]);
    }
    const sprites = decodeOam(oamWith(entries), 0);
    expect(sprites).toHaveLength(64);
    expect(sprites.map((s) => s.tileIndex)).toEqual(
      entries.map(([, tile]) => tile),
    );
  });

  it("rejects dumps of the wrong size", () => {
    expect(() => decodeOam(new Uint8Array(255), 0)).toThrow(/256 bytes/);
  });
});
