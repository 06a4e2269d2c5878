/** Side-by-side variant comparison with optional ground-truth metrics. */

import type { QualityNumbers } from "./types";

export function formatPsnrBadge(psnr: number): string {
  if (!Number.isFinite(psnr)) return "∞";
  return `${psnr.toFixed(2)} dB`;
}

export function formatSsimBadge(ssim: number): string {
  return ssim.toFixed(4);
}

export interface ComparePanelState {
  modelId: string;
  badge: string | null;
  ssimBadge: string | null;
}

export class CompareView {
  left: ComparePanelState;
  right: ComparePanelState;

  constructor(modelA: string, modelB: string) {
    if (modelA === modelB) {
      throw new Error("compare view needs two distinct model ids");
    }
    this.left = { modelId: modelA, badge: null, ssimBadge: null };
    this.right = { modelId: modelB, badge: null, ssimBadge: null };
  }

  applyMetrics(side: "left" | "right", q: QualityNumbers): ComparePanelState {
    const panel = side === "left" ? this.left : this.right;
    panel.badge = formatPsnrBadge(q.psnr);
    panel.ssimBadge = formatSsimBadge(q.ssim);
    return panel;
  }

  clearMetrics(): void {
    this.left.badge = this.left.ssimBadge = null;
    this.right.badge = this.right.ssimBadge = null;
  }
}
