/** DOM wiring for the live ROI console.
 *
 * Layout: a model picker fed by GET /v1/models, a frame viewer with a
 * draggable ROI rectangle, an SR result panel with a latency badge and FPS
 * readout, and an optional second panel for comparing two variants from
 * the identical crop.  All inference goes over the /v1/stream socket with
 * drag-time coalescing, so the UI never blocks on the network.
 */

import { ServiceClient } from "./api";
import { CompareView, formatPsnrBadge } from "./compare";
import { LatencyTracker } from "./latency";
import { ImagePresenter, SrPanel } from "./panels";
import { pngDimensions } from "./png";
import { ROI_PRESETS, RoiController } from "./roi";
import { RequestCoalescer, StreamConnection } from "./stream";
import type { ModelInfo } from "./types";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class Console {
  private client: ServiceClient;
  private models: ModelInfo[] = [];
  private framePng: Uint8Array | null = null;
  private frames: Uint8Array[] = [];
  private frameIndex = 0;
  private roi: RoiController | null = null;
  private latency = new LatencyTracker();
  private stream: StreamConnection | null = null;
  private coalescer: RequestCoalescer | null = null;
  private panel: SrPanel;
  private compare: CompareView | null = null;
  private dragging = false;

  constructor(private baseUrl: string) {
    this.client = new ServiceClient(baseUrl);
    this.panel = new SrPanel(
      new ImagePresenter(el<HTMLImageElement>("sr-image"), el("sr-error")),
    );
  }

  async start(): Promise<void> {
    await this.loadModels();
    el<HTMLInputElement>("frame-file").addEventListener("change", (ev) =>
      this.onUpload(ev),
    );
    el("frame-prev").addEventListener("click", () => this.stepFrame(-1));
    el("frame-next").addEventListener("click", () => this.stepFrame(1));
    const picker = el<HTMLSelectElement>("model-picker");
    picker.addEventListener("change", () => this.connect(picker.value));
    for (const size of ROI_PRESETS) {
      el(`roi-${size}`).addEventListener("click", () => {
        if (this.roi) {
          this.roi.setPreset(size);
          this.drawRoi();
          this.requestSr();
        }
      });
    }
    this.bindDrag();
    window.setInterval(() => this.updateFps(), 250);
  }

  private async loadModels(): Promise<void> {
    const banner = el("error-banner");
    try {
      this.models = await this.client.fetchModels();
      banner.hidden = true;
    } catch (err) {
      banner.hidden = false;
      banner.textContent = `service unreachable: ${(err as Error).message}`;
      el("retry-models").onclick = () => void this.loadModels();
      return;
    }
    const picker = el<HTMLSelectElement>("model-picker");
    picker.innerHTML = "";
    for (const m of this.models) {
      const opt = document.createElement("option");
      opt.value = m.id;
      opt.textContent = `${m.id} (x${m.scale})`;
      picker.appendChild(opt);
    }
    if (this.models.length) {
      this.connect(this.models[0].id);
    }
  }

  private connect(modelId: string): void {
    this.stream?.close();
    this.stream = new StreamConnection(this.baseUrl, modelId);
    this.coalescer = new RequestCoalescer(this.stream);
    this.stream.onResult = (result) => {
      this.coalescer?.settle();
      this.latency.record(result.inferMs);
      this.panel.showResult(result);
      el("latency-badge").textContent = `${result.inferMs.toFixed(1)} ms`;
    };
    this.stream.onError = (err) => {
      this.coalescer?.settle();
      this.panel.showError(err.message);
    };
    this.requestSr();
  }

  private onUpload(ev: Event): void {
    const input = ev.target as HTMLInputElement;
    const files = Array.from(input.files ?? []);
    if (!files.length) return;
    void (async () => {
      this.frames = [];
      for (const f of files) {
        this.frames.push(new Uint8Array(await f.arrayBuffer()));
      }
      this.frameIndex = 0;
      this.showFrame();
    })();
  }

  private stepFrame(delta: number): void {
    if (!this.frames.length) return;
    this.frameIndex =
      (this.frameIndex + delta + this.frames.length) % this.frames.length;
    this.showFrame();
  }

  private showFrame(): void {
    this.framePng = this.frames[this.frameIndex];
    const dims = pngDimensions(this.framePng);
    if (!this.roi) {
      this.roi = new RoiController(dims.width, dims.height);
    } else {
      this.roi.setFrameSize(dims.width, dims.height);
    }
    const img = el<HTMLImageElement>("frame-image");
    img.src = URL.createObjectURL(
      new Blob([this.framePng as BlobPart], { type: "image/png" }),
    );
    el("frame-label").textContent = `frame ${this.frameIndex + 1}/${this.frames.length}`;
    this.drawRoi();
    this.requestSr();
  }

  private bindDrag(): void {
    const overlay = el("roi-overlay");
    overlay.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      overlay.setPointerCapture(ev.pointerId);
    });
    overlay.addEventListener("pointermove", (ev) => {
      if (!this.dragging || !this.roi) return;
      const rect = el("frame-wrap").getBoundingClientRect();
      this.roi.dragTo(
        Math.round(ev.clientX - rect.left - this.roi.roi.w / 2),
        Math.round(ev.clientY - rect.top - this.roi.roi.h / 2),
      );
      this.drawRoi();
      this.requestSr();
    });
    overlay.addEventListener("pointerup", () => {
      this.dragging = false;
    });
  }

  private drawRoi(): void {
    if (!this.roi) return;
    const r = this.roi.roi;
    const box = el("roi-box");
    box.style.left = `${r.x}px`;
    box.style.top = `${r.y}px`;
    box.style.width = `${r.w}px`;
    box.style.height = `${r.h}px`;
    el("roi-label").textContent = `roi ${r.x},${r.y} ${r.w}x${r.h}`;
  }

  private requestSr(): void {
    if (!this.framePng || !this.roi || !this.coalescer) return;
    this.coalescer.submit(this.framePng, this.roi.roi);
  }

  private updateFps(): void {
    el("fps-readout").textContent = `${this.latency.fps().toFixed(1)} fps`;
  }

  /** Compare mode: run the same crop through a second model over POST. */
  async compareWith(modelB: string, referencePng: Uint8Array | null): Promise<void> {
    if (!this.framePng || !this.roi || !this.models.length) return;
    const modelA = el<HTMLSelectElement>("model-picker").value;
    this.compare = new CompareView(modelA, modelB);
    const [a, b] = await Promise.all([
      this.client.superResolve(this.framePng, modelA, this.roi.roi),
      this.client.superResolve(this.framePng, modelB, this.roi.roi),
    ]);
    const presentB = new ImagePresenter(
      el<HTMLImageElement>("sr-image-b"),
      el("sr-error"),
    );
    const dims = pngDimensions(b.png);
    presentB.present(b.png, dims.width, dims.height);
    if (referencePng) {
      const [qa, qb] = await Promise.all([
        this.client.evalPair(a.png, referencePng),
        this.client.evalPair(b.png, referencePng),
      ]);
      el("badge-a").textContent = formatPsnrBadge(qa.psnr);
      el("badge-b").textContent = formatPsnrBadge(qb.psnr);
      this.compare.applyMetrics("left", qa);
      this.compare.applyMetrics("right", qb);
    }
  }
}

export function boot(): void {
  const base = new URLSearchParams(location.search).get("service") ?? location.origin;
  const app = new Console(base);
  void app.start();
}
