/** Minimal PNG header inspection: enough to size a panel without decoding. */

const PNG_SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

export function isPng(bytes: Uint8Array): boolean {
  if (bytes.length < 24) return false;
  return PNG_SIGNATURE.every((b, i) => bytes[i] === b);
}

/** Width/height from the IHDR chunk (always first, offset 16). */
export function pngDimensions(bytes: Uint8Array): { width: number; height: number } {
  if (!isPng(bytes)) {
    throw new Error("not a PNG payload");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  return {
    width: view.getUint32(16, false),
    height: view.getUint32(20, false),
  };
}
