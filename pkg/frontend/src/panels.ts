/** SR output panel state, decoupled from the DOM for testability. */

import type { SrResult } from "./types";

export interface PanelPresenter {
  /** Show the PNG payload; the real presenter sets a blob URL on an <img>. */
  present(png: Uint8Array, width: number, height: number): void;
  showError(message: string): void;
}

export class SrPanel {
  width = 0;
  height = 0;
  lastInferMs: number | null = null;
  error: string | null = null;
  rendered = false;

  constructor(private presenter: PanelPresenter) {}

  showResult(result: SrResult): void {
    this.width = result.width;
    this.height = result.height;
    this.lastInferMs = result.inferMs;
    this.error = null;
    this.rendered = true;
    this.presenter.present(result.png, result.width, result.height);
  }

  showError(message: string): void {
    this.error = message;
    this.rendered = false;
    this.presenter.showError(message);
  }
}

/** Browser presenter: blob-URL image swap, revoking the previous URL. */
export class ImagePresenter implements PanelPresenter {
  private url: string | null = null;

  constructor(
    private img: HTMLImageElement,
    private errorBox: HTMLElement,
  ) {}

  present(png: Uint8Array, width: number, height: number): void {
    if (this.url) URL.revokeObjectURL(this.url);
    this.url = URL.createObjectURL(new Blob([png as BlobPart], { type: "image/png" }));
    this.img.src = this.url;
    this.img.width = width;
    this.img.height = height;
    this.errorBox.hidden = true;
  }

  showError(message: string): void {
    this.errorBox.textContent = message;
    this.errorBox.hidden = false;
  }
}
