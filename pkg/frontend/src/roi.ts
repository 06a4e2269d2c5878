/** ROI drag state: integral coordinates, always clamped inside the frame. */

import type { Roi } from "./types";

export const ROI_PRESETS = [64, 128] as const;

export class RoiController {
  private frameW: number;
  private frameH: number;
  roi: Roi;

  constructor(frameW: number, frameH: number, size: number = ROI_PRESETS[0]) {
    this.frameW = Math.max(1, Math.floor(frameW));
    this.frameH = Math.max(1, Math.floor(frameH));
    const w = Math.min(size, this.frameW);
    const h = Math.min(size, this.frameH);
    this.roi = this.clamp({
      x: Math.floor((this.frameW - w) / 2),
      y: Math.floor((this.frameH - h) / 2),
      w,
      h,
    });
  }

  setFrameSize(width: number, height: number): Roi {
    this.frameW = Math.max(1, Math.floor(width));
    this.frameH = Math.max(1, Math.floor(height));
    this.roi = this.clamp(this.roi);
    return this.roi;
  }

  /** Move the ROI so its top-left lands as close to (x, y) as fits. */
  dragTo(x: number, y: number): Roi {
    this.roi = this.clamp({ ...this.roi, x, y });
    return this.roi;
  }

  dragBy(dx: number, dy: number): Roi {
    return this.dragTo(this.roi.x + dx, this.roi.y + dy);
  }

  setPreset(size: number): Roi {
    this.roi = this.clamp({ ...this.roi, w: size, h: size });
    return this.roi;
  }

  /** Free-resize from the bottom-right handle. */
  resizeTo(w: number, h: number): Roi {
    this.roi = this.clamp({ ...this.roi, w, h });
    return this.roi;
  }

  private clamp(r: Roi): Roi {
    const w = Math.max(1, Math.min(Math.round(r.w), this.frameW));
    const h = Math.max(1, Math.min(Math.round(r.h), this.frameH));
    const x = Math.max(0, Math.min(Math.round(r.x), this.frameW - w));
    const y = Math.max(0, Math.min(Math.round(r.y), this.frameH - h));
    return { x, y, w, h };
  }
}

export function roiInBounds(roi: Roi, frameW: number, frameH: number): boolean {
  return (
    Number.isInteger(roi.x) &&
    Number.isInteger(roi.y) &&
    Number.isInteger(roi.w) &&
    Number.isInteger(roi.h) &&
    roi.x >= 0 &&
    roi.y >= 0 &&
    roi.w >= 1 &&
    roi.h >= 1 &&
    roi.x + roi.w <= frameW &&
    roi.y + roi.h <= frameH
  );
}
