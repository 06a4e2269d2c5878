import { describe, expect, it, vi } from "vitest";

import { ServiceClient } from "../src/api";
import { CompareView, formatPsnrBadge } from "../src/compare";

describe("formatPsnrBadge", () => {
  it("renders infinity as the infinity glyph", () => {
    expect(formatPsnrBadge(Infinity)).toBe("∞");
  });

  it("renders finite values in dB", () => {
    expect(formatPsnrBadge(31.2345)).toBe("31.23 dB");
  });
});

describe("CompareView", () => {
  it("requires two distinct models", () => {
    expect(() => new CompareView("a", "a")).toThrow(/distinct/);
  });

  it("renders the infinity badge when the reference equals the output", async () => {
    // mocked service: /v1/eval returns "inf" for identical payloads
    const fetchMock = vi.fn(async () =>
      new Response(JSON.stringify({ psnr: "inf", ssim: 1.0, checkerboard_index: 0.0 }), {
        status: 200,
        headers: { "content-type": "application/json" },
      }),
    );
    const client = new ServiceClient("http://svc", fetchMock as unknown as typeof fetch);
    const view = new CompareView("desk-nearest", "desk-subpixel");

    const q = await client.evalPair(new Uint8Array([1]), new Uint8Array([1]));
    const panel = view.applyMetrics("left", q);

    expect(q.psnr).toBe(Infinity);
    expect(panel.badge).toBe("∞");
    expect(panel.ssimBadge).toBe("1.0000");
  });

  it("tracks both panels and clears them together", async () => {
    const view = new CompareView("a", "b");
    view.applyMetrics("left", { psnr: 30.0, ssim: 0.9, checkerboard_index: 0 });
    view.applyMetrics("right", { psnr: 28.5, ssim: 0.85, checkerboard_index: 0 });
    expect(view.left.badge).toBe("30.00 dB");
    expect(view.right.badge).toBe("28.50 dB");
    view.clearMetrics();
    expect(view.left.badge).toBeNull();
    expect(view.right.badge).toBeNull();
  });
});

describe("ServiceClient", () => {
  it("fetchModels propagates service-down errors for the retry banner", async () => {
    const failing = vi.fn(async () => new Response("", { status: 503 }));
    const client = new ServiceClient("http://svc", failing as unknown as typeof fetch);
    await expect(client.fetchModels()).rejects.toThrow(/503/);
  });

  it("eval payload is length-prefixed a + b", async () => {
    let captured: Uint8Array | null = null;
    const fetchMock = vi.fn(async (_url: string, init?: RequestInit) => {
      captured = new Uint8Array(init!.body as Uint8Array);
      return new Response(
        JSON.stringify({ psnr: 12.0, ssim: 0.5, checkerboard_index: 0.0 }),
        { status: 200 },
      );
    });
    const client = new ServiceClient("http://svc", fetchMock as unknown as typeof fetch);
    await client.evalPair(new Uint8Array([9, 9, 9]), new Uint8Array([7]));
    expect(captured).not.toBeNull();
    const view = new DataView(captured!.buffer);
    expect(view.getUint32(0, true)).toBe(3);
    expect(Array.from(captured!.slice(4))).toEqual([9, 9, 9, 7]);
  });
});
