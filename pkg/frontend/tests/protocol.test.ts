import { execFileSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { runProtocol } from "../src/protocol.js";
import {
  MOVING_PALETTE,
  MOVING_TILE,
  SCRIPTED_PATH,
  ScriptedCore,
} from "../src/scriptedCore.js";

const CONFIG = { gameId: "testrom", characterId: "player" };

function quickLog(options: { tallSprites?: boolean } = {}): string {
  return runProtocol(new ScriptedCore(options), {
    ...CONFIG,
    trialCount: 5,
    waitFrames: 12,
  });
}

describe("runProtocol on the scripted core", () => {
  it("emits the expected headers and trial shapes", () => {
    const lines = quickLog().trimEnd().split("\n");
    expect(lines[0]).toBe("#LOG game=testrom character=player");
    const trialHeads = lines.filter((l) => l.startsWith("#TRIAL"));
    expect(trialHeads).toEqual([1, 2, 3, 4, 5].map((k) => `#TRIAL hold=${k}`));
    // trial with hold k records k + waitFrames frames, numbered from 0
    const frames = lines.filter((l) => l.startsWith("F "));
    expect(frames).toHaveLength((1 + 12) + (2 + 12) + (3 + 12) + (4 + 12) + (5 + 12));
    expect(frames[0]).toMatch(/^F 0 01 /);
    expect(frames[1]).toMatch(/^F 1 00 /);
  });

  it("matches the scripted sprite positions, tuple for tuple", () => {
    const lines = quickLog().trimEnd().split("\n");
    // first trial: frames 0..12 in order right after its header
    const firstTrialFrames = lines.slice(2, 2 + 13);
    for (const probe of [0, 1, 4, 8]) {
      const [x, y] = SCRIPTED_PATH[probe]!;
      const mask = probe === 0 ? "01" : "00";
      expect(firstTrialFrames[probe]).toBe(
        `F ${probe} ${mask} ` +
          `${MOVING_TILE},${x},${y},${MOVING_PALETTE},0,0,0,8 ` +
          `128,40,200,1,0,0,0,8 ` +
          `129,200,96,3,1,0,1,8`,
      );
    }
  });

  it("reports 16-pixel heights in 8x16 mode", () => {
    const lines = quickLog({ tallSprites: true }).trimEnd().split("\n");
    const frame = lines.find((l) => l.startsWith("F "))!;
    for (const tok of frame.split(" ").slice(3)) {
      expect(tok.endsWith(",16")).toBe(true);
    }
  });

  it("is byte-identical across reruns from the same savestate", () => {
    expect(quickLog()).toBe(quickLog());
    const full = (): string => runProtocol(new ScriptedCore(), CONFIG);
    expect(full()).toBe(full());
  });

  it("rejects non-positive protocol parameters", () => {
    expect(() =>
      runProtocol(new ScriptedCore(), { ...CONFIG, trialCount: 0 }),
    ).toThrow(/positive/);
  });

  it("defaults to 120 trials with holds 1..120", () => {
    const log = runProtocol(new ScriptedCore(), { ...CONFIG, waitFrames: 1 });
    const holds = log
      .split("\n")
      .filter((l) => l.startsWith("#TRIAL"))
      .map((l) => Number(l.split("=")[1]));
    expect(holds).toEqual(Array.from({ length: 120 }, (_, i) => i + 1));
  });
});

describe("conformance with the analysis toolkit", () => {
  // The frame-log text format is the contract between this bridge and
  // the Python analysis package; parse the emitted log with its real
  // parser, with warnings escalated to errors.
  it("parses with the reference parser with zero warnings", () => {
    const log = runProtocol(new ScriptedCore(), {
      ...CONFIG,
      trialCount: 8,
      waitFrames: 20,
    });
    const script = [
      "import sys, warnings",
      "from jumplab.framelog import parse_log",
      "warnings.simplefilter('error')",
      "log = parse_log(sys.stdin.buffer.read())",
      "print(log.game_id, log.character_id, len(log.trials))",
      "print([t.hold_frames for t in log.trials])",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script], {
      input: log,
      env: { ...process.env, PYTHONPATH: "../src" },
      encoding: "utf-8",
    });
    expect(out.split("\n")[0]).toBe("testrom player 8");
    expect(out.split("\n")[1]).toBe("[1, 2, 3, 4, 5, 6, 7, 8]");
  });
});
