/** REST client for the tilesr inference service. */

import type { ModelInfo, QualityNumbers, Roi } from "./types";

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: typeof fetch = fetch.bind(globalThis),
  ) {}

  async health(): Promise<{ status: string; models: string[] }> {
    const r = await this.fetchImpl(`${this.baseUrl}/v1/health`);
    if (!r.ok) throw new Error(`health check failed: ${r.status}`);
    return r.json();
  }

  async fetchModels(): Promise<ModelInfo[]> {
    const r = await this.fetchImpl(`${this.baseUrl}/v1/models`);
    if (!r.ok) throw new Error(`model listing failed: ${r.status}`);
    return r.json();
  }

  /** One-shot SR over POST; the streaming path is preferred for the live loop. */
  async superResolve(
    png: Uint8Array,
    modelId: string,
    roi?: Roi,
  ): Promise<{ png: Uint8Array; inferMs: number }> {
    const params = new URLSearchParams({ model: modelId });
    if (roi) params.set("roi", `${roi.x},${roi.y},${roi.w},${roi.h}`);
    const r = await this.fetchImpl(`${this.baseUrl}/v1/sr?${params}`, {
      method: "POST",
      body: png as unknown as BodyInit,
      headers: { "content-type": "image/png" },
    });
    if (!r.ok) {
      const detail = await r.text();
      throw new Error(`sr failed: ${r.status} ${detail}`);
    }
    return {
      png: new Uint8Array(await r.arrayBuffer()),
      inferMs: parseFloat(r.headers.get("X-Infer-Ms") ?? "0"),
    };
  }

  /** PSNR/SSIM between two PNGs via the service (psnr "inf" -> Infinity). */
  async evalPair(a: Uint8Array, b: Uint8Array): Promise<QualityNumbers> {
    const body = new Uint8Array(4 + a.length + b.length);
    new DataView(body.buffer).setUint32(0, a.length, true);
    body.set(a, 4);
    body.set(b, 4 + a.length);
    const r = await this.fetchImpl(`${this.baseUrl}/v1/eval`, {
      method: "POST",
      body: body as unknown as BodyInit,
    });
    if (!r.ok) throw new Error(`eval failed: ${r.status}`);
    const raw = await r.json();
    return {
      psnr: raw.psnr === "inf" ? Infinity : raw.psnr,
      ssim: raw.ssim,
      checkerboard_index: raw.checkerboard_index,
    };
  }
}
