import { describe, expect, it } from "vitest";

import {
  assembleLog,
  frameLine,
  logHeader,
  spriteToken,
  trialHeader,
} from "../src/framelog.js";
import type { DecodedSprite } from "../src/oam.js";

const sprite: DecodedSprite = {
  tileIndex: 0x42,
  x: 120,
  y: 176,
  palette: 2,
  hFlip: false,
  vFlip: true,
  background: false,
  height: 8,
};

describe("frame-log emission", () => {
  it("formats headers", () => {
    expect(logHeader("smb", "mario")).toBe("#LOG game=smb character=mario");
    expect(trialHeader(7)).toBe("#TRIAL hold=7");
  });

  it("rejects ids with whitespace and non-positive holds", () => {
    expect(() => logHeader("a b", "c")).toThrow(/whitespace/);
    expect(() => trialHeader(0)).toThrow(/positive/);
  });

  it("formats sprite tuples field by field", () => {
    expect(spriteToken(sprite)).toBe("66,120,176,2,0,1,0,8");
  });

  it("formats frame lines with a two-digit lowercase hex mask", () => {
    expect(frameLine(3, 0x01, [sprite])).toBe("F 3 01 66,120,176,2,0,1,0,8");
    expect(frameLine(0, 0xab, [])).toBe("F 0 ab");
  });

  it("validates frame number and mask ranges", () => {
    expect(() => frameLine(-1, 0, [])).toThrow(/frame number/);
    expect(() => frameLine(0, 256, [])).toThrow(/mask/);
  });

  it("assembles lines with a trailing newline", () => {
    expect(assembleLog(["a", "b"])).toBe("a\nb\n");
  });
});
