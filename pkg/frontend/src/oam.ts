/**
 * OAM (Object Attribute Memory) sprite-table decoding.
 *
 * The NES PPU keeps 64 sprite entries of 4 bytes each:
 *
 *   byte 0  y position of the top edge, minus one scanline
 *   byte 1  tile index into the pattern table
 *   byte 2  attributes: bits 0-1 palette, bit 5 background priority,
 *           bit 6 horizontal flip, bit 7 vertical flip
 *   byte 3  x position of the left edge
 *
 * The hardware draws a sprite one scanline below its stored y, so the
 * decoder adds 1 to report on-screen geometry.  Entries parked at or
 * below the bottom of the 240-line screen are the standard way to hide
 * a sprite and are dropped here.
 */

export const OAM_BYTES = 256;
export const OAM_ENTRIES = 64;
export const SCREEN_HEIGHT = 240;

/** PPUCTRL bit 5 selects 8x16 sprites instead of 8x8. */
export const PPUCTRL_TALL_SPRITES = 0x20;

export interface DecodedSprite {
  tileIndex: number;
  x: number;
  y: number;
  palette: number;
  hFlip: boolean;
  vFlip: boolean;
  background: boolean;
  height: 8 | 16;
}

/**
 * Decode a 256-byte OAM dump into visible sprites in table order.
 *
 * @param oam     raw OAM bytes (exactly 256)
 * @param ppuCtrl value of the PPUCTRL register; bit 5 selects 8x16 mode
 */
export function decodeOam(oam: Uint8Array, ppuCtrl: number): DecodedSprite[] {
  if (oam.length !== OAM_BYTES) {
    throw new Error(`OAM dump must be ${OAM_BYTES} bytes, got ${oam.length}`);
  }
  const height: 8 | 16 = (ppuCtrl & PPUCTRL_TALL_SPRITES) !== 0 ? 16 : 8;
  const sprites: DecodedSprite[] = [];
  for (let i = 0; i < OAM_ENTRIES; i++) {
    const rawY = oam[4 * i]!;
    const tileIndex = oam[4 * i + 1]!;
    const attr = oam[4 * i + 2]!;
    const x = oam[4 * i + 3]!;
    const y = rawY + 1; // hardware renders one scanline below the stored y
    if (y >= SCREEN_HEIGHT) {
      continue; // parked off-screen: the hide-a-sprite convention
    }
    sprites.push({
      tileIndex,
      x,
      y,
      palette: attr & 0x03,
      background: (attr & 0x20) !== 0,
      hFlip: (attr & 0x40) !== 0,
      vFlip: (attr & 0x80) !== 0,
      height,
    });
  }
  return sprites;
}
