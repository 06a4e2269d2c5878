/** The /v1/stream binary protocol and drag-time request coalescing.
 *
 * Request frame:  u32 LE x, y, w, h (w = h = 0 means whole frame) + PNG bytes.
 * Response frame: f64 LE infer_ms + PNG bytes.  A negative infer_ms carries
 * an HTTP-style status code as the error signal.
 */

import { pngDimensions } from "./png";
import type { Roi, SrResult } from "./types";

export const ROI_HEADER_BYTES = 16;

export function encodeStreamRequest(png: Uint8Array, roi: Roi | null): Uint8Array {
  const out = new Uint8Array(ROI_HEADER_BYTES + png.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, roi ? roi.x : 0, true);
  view.setUint32(4, roi ? roi.y : 0, true);
  view.setUint32(8, roi ? roi.w : 0, true);
  view.setUint32(12, roi ? roi.h : 0, true);
  out.set(png, ROI_HEADER_BYTES);
  return out;
}

export function decodeStreamResponse(frame: Uint8Array): SrResult {
  if (frame.length < 8) {
    throw new Error("stream frame too short");
  }
  const view = new DataView(frame.buffer, frame.byteOffset, frame.byteLength);
  const inferMs = view.getFloat64(0, true);
  if (inferMs < 0) {
    throw new Error(`service error ${-inferMs} on stream`);
  }
  const png = frame.slice(8);
  const dims = pngDimensions(png);
  return { inferMs, png, width: dims.width, height: dims.height };
}

/** Transport-agnostic sender so tests can mock the socket. */
export interface FrameSender {
  send(payload: Uint8Array): void;
}

type Pending = { png: Uint8Array; roi: Roi | null };

/**
 * At most one request in flight; while dragging, only the most recent
 * (frame, roi) is kept and goes out when the previous response lands.
 */
export class RequestCoalescer {
  private inFlight = false;
  private pending: Pending | null = null;
  sent = 0;

  constructor(private sender: FrameSender) {}

  submit(png: Uint8Array, roi: Roi | null): void {
    if (this.inFlight) {
      this.pending = { png, roi };
      return;
    }
    this.dispatch({ png, roi });
  }

  /** Call when a response (or error) for the in-flight request arrives. */
  settle(): void {
    this.inFlight = false;
    if (this.pending) {
      const next = this.pending;
      this.pending = null;
      this.dispatch(next);
    }
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private dispatch(req: Pending): void {
    this.inFlight = true;
    this.sent += 1;
    this.sender.send(encodeStreamRequest(req.png, req.roi));
  }
}

/** WebSocket wrapper speaking the framed protocol. */
export class StreamConnection implements FrameSender {
  private ws: WebSocket;
  onResult: ((r: SrResult) => void) | null = null;
  onError: ((e: Error) => void) | null = null;

  constructor(baseUrl: string, modelId: string, wsFactory?: (url: string) => WebSocket) {
    const url = `${baseUrl.replace(/^http/, "ws")}/v1/stream?model=${encodeURIComponent(modelId)}`;
    this.ws = wsFactory ? wsFactory(url) : new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (ev: MessageEvent) => {
      try {
        const frame = new Uint8Array(ev.data as ArrayBuffer);
        this.onResult?.(decodeStreamResponse(frame));
      } catch (err) {
        this.onError?.(err as Error);
      }
    };
    this.ws.onerror = () => this.onError?.(new Error("stream connection error"));
  }

  send(payload: Uint8Array): void {
    this.ws.send(payload);
  }

  close(): void {
    this.ws.close();
  }
}
