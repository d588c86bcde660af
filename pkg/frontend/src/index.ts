export {
  OAM_BYTES,
  OAM_ENTRIES,
  PPUCTRL_TALL_SPRITES,
  SCREEN_HEIGHT,
  decodeOam,
} from "./oam.js";
export type { DecodedSprite } from "./oam.js";
export {
  BUTTON_A,
  BUTTON_B,
  BUTTON_DOWN,
  BUTTON_LEFT,
  BUTTON_RIGHT,
  BUTTON_SELECT,
  BUTTON_START,
  BUTTON_UP,
  assembleLog,
  frameLine,
  logHeader,
  spriteToken,
  trialHeader,
} from "./framelog.js";
export { NondeterminismError, runProtocol } from "./protocol.js";
export type { BridgeConfig, EmulatorCore } from "./protocol.js";
export {
  MOVING_PALETTE,
  MOVING_TILE,
  SCRIPTED_PATH,
  ScriptedCore,
} from "./scriptedCore.js";
