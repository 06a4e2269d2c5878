/** Server-reported latency history and a sliding-window FPS readout. */

export const FPS_WINDOW_MS = 2000;
export const HISTORY_LIMIT = 120;

export class LatencyTracker {
  private history: number[] = [];
  private completions: number[] = [];
  private now: () => number;

  constructor(now: () => number = () => performance.now()) {
    this.now = now;
  }

  /** Record one completed request with the server's infer_ms. */
  record(inferMs: number): void {
    this.history.push(inferMs);
    if (this.history.length > HISTORY_LIMIT) {
      this.history.shift();
    }
    this.completions.push(this.now());
  }

  lastInferMs(): number | null {
    return this.history.length ? this.history[this.history.length - 1] : null;
  }

  meanInferMs(): number | null {
    if (!this.history.length) return null;
    return this.history.reduce((a, b) => a + b, 0) / this.history.length;
  }

  /** Completed responses inside the trailing window, per second. */
  fps(): number {
    const cutoff = this.now() - FPS_WINDOW_MS;
    while (this.completions.length && this.completions[0] < cutoff) {
      this.completions.shift();
    }
    return this.completions.length / (FPS_WINDOW_MS / 1000);
  }

  historySnapshot(): readonly number[] {
    return this.history;
  }
}
