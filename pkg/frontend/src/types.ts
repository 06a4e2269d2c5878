export interface Roi {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ModelInfo {
  id: string;
  kind: string;
  scale: number;
  spec: Record<string, unknown>;
}

export interface QualityNumbers {
  /** Infinity arrives from the service as the string "inf". */
  psnr: number;
  ssim: number;
  checkerboard_index: number;
}

export type ViewMode = "side-by-side" | "overlay";

export interface SessionState {
  modelId: string | null;
  roi: Roi;
  viewMode: ViewMode;
  frameWidth: number;
  frameHeight: number;
}

export interface SrResult {
  inferMs: number;
  png: Uint8Array;
  width: number;
  height: number;
}
