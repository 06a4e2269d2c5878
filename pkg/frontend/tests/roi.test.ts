import { describe, expect, it } from "vitest";

import { ROI_PRESETS, RoiController, roiInBounds } from "../src/roi";

describe("RoiController", () => {
  it("starts centered with the default preset", () => {
    const c = new RoiController(256, 256);
    expect(c.roi).toEqual({ x: 96, y: 96, w: 64, h: 64 });
  });

  it("never leaves the frame during a drag sweep", () => {
    const c = new RoiController(200, 150);
    for (let step = 0; step < 500; step++) {
      const r = c.dragTo(step * 7 - 900, step * 5 - 600);
      expect(roiInBounds(r, 200, 150)).toBe(true);
    }
  });

  it("emits integral coordinates for fractional drags", () => {
    const c = new RoiController(256, 256);
    const r = c.dragTo(12.7, 93.2);
    expect(Number.isInteger(r.x)).toBe(true);
    expect(Number.isInteger(r.y)).toBe(true);
    expect(r).toEqual({ x: 13, y: 93, w: 64, h: 64 });
  });

  it("clamps drags past every edge", () => {
    const c = new RoiController(128, 128);
    expect(c.dragTo(-50, -50)).toEqual({ x: 0, y: 0, w: 64, h: 64 });
    expect(c.dragTo(1000, 1000)).toEqual({ x: 64, y: 64, w: 64, h: 64 });
  });

  it("supports the 64 and 128 presets", () => {
    const c = new RoiController(256, 256);
    for (const size of ROI_PRESETS) {
      const r = c.setPreset(size);
      expect(r.w).toBe(size);
      expect(r.h).toBe(size);
      expect(roiInBounds(r, 256, 256)).toBe(true);
    }
  });

  it("shrinks the preset when the frame is smaller", () => {
    const c = new RoiController(48, 48, 64);
    expect(c.roi.w).toBe(48);
    expect(roiInBounds(c.roi, 48, 48)).toBe(true);
  });

  it("re-clamps when the frame size changes", () => {
    const c = new RoiController(256, 256);
    c.dragTo(192, 192);
    const r = c.setFrameSize(128, 128);
    expect(roiInBounds(r, 128, 128)).toBe(true);
  });

  it("free resize stays bounded and integral", () => {
    const c = new RoiController(100, 80);
    const r = c.resizeTo(250.6, 19.2);
    expect(roiInBounds(r, 100, 80)).toBe(true);
    expect(r.w).toBe(100);
    expect(r.h).toBe(19);
  });
});
