"""Binary weight-file format: magic TSRW1, spec descriptor, CRC-32 trailer.

Layout (all little-endian):

    magic            5 bytes  b"TSRW1"
    version          u16
    descriptor_len   u32      JSON: {"kind": ..., "spec": {...}}
    descriptor       bytes
    n_entries        u32
    entry*           u16 name_len, name, u8 kind (0 param / 1 buffer),
                     u8 ndim, u32*ndim shape, float32*prod(shape) values
    crc32            u32      zlib.crc32 of everything after the magic

Loading rebuilds the model skeleton from the embedded spec and requires an
exact name/shape match for every entry, so a file cannot silently load into
a different architecture.
"""

from __future__ import annotations

import dataclasses
import json
import struct
import zlib

import numpy as np

from . import models

MAGIC = b"TSRW1"
VERSION = 1


class WeightFormatError(ValueError):
    """Malformed, truncated, or architecture-incompatible weight file."""


def _descriptor(model: models.Model) -> bytes:
    payload = {"kind": model.kind, "spec": dataclasses.asdict(model.spec)}
    return json.dumps(payload, sort_keys=True).encode("utf-8")


def _pack_entry(name: str, kind: int, array: np.ndarray) -> bytes:
    name_b = name.encode("utf-8")
    head = struct.pack("<HB", len(name_b), kind) + name_b
    head += struct.pack("<B", array.ndim)
    head += struct.pack(f"<{array.ndim}I", *array.shape)
    return head + np.ascontiguousarray(array, dtype="<f4").tobytes()


def save_weights(model: models.Model, path) -> None:
    """Serialize parameters then buffers, in model iteration order."""
    body = bytearray()
    body += struct.pack("<H", VERSION)
    desc = _descriptor(model)
    body += struct.pack("<I", len(desc))
    body += desc
    entries = [(n, 0, p.data) for n, p in model.params.items()]
    entries += [(n, 1, b) for n, b in model.buffers.items()]
    body += struct.pack("<I", len(entries))
    for name, kind, arr in entries:
        body += _pack_entry(name, kind, arr)
    crc = zlib.crc32(bytes(body))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(body)
        fh.write(struct.pack("<I", crc))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise WeightFormatError("truncated weight file")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _build_skeleton(descriptor: dict) -> models.Model:
    kind = descriptor.get("kind")
    spec_dict = descriptor.get("spec", {})
    try:
        if kind == "generator":
            return models.build_generator(models.GeneratorSpec(**spec_dict), seed=0)
        if kind == "discriminator":
            return models.build_discriminator(
                models.DiscriminatorSpec(**spec_dict), seed=0
            )
    except (TypeError, models.ModelError) as exc:
        raise WeightFormatError(f"invalid spec descriptor: {exc}")
    raise WeightFormatError(f"unknown model kind {kind!r}")


def load_weights(path) -> models.Model:
    """Reconstruct the model bit-exactly; validates magic, version, CRC, spec."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise WeightFormatError(f"bad magic: expected {MAGIC!r}")
    body, (stored_crc,) = blob[len(MAGIC) : -4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != stored_crc:
        raise WeightFormatError("checksum mismatch: file corrupted or truncated")
    r = _Reader(body)
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    (desc_len,) = r.unpack("<I")
    try:
        descriptor = json.loads(r.take(desc_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"bad spec descriptor: {exc}")
    model = _build_skeleton(descriptor)
    (n_entries,) = r.unpack("<I")
    expected = {n: (0, p.data) for n, p in model.params.items()}
    expected.update({n: (1, b) for n, b in model.buffers.items()})
    seen = set()
    for _ in range(n_entries):
        (name_len, kind) = r.unpack("<HB")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(count * 4)
        if name not in expected:
            raise WeightFormatError(f"spec mismatch: unexpected entry {name!r}")
        want_kind, target = expected[name]
        if kind != want_kind:
            raise WeightFormatError(f"spec mismatch: entry {name!r} kind differs")
        if tuple(shape) != target.shape:
            raise WeightFormatError(
                f"spec mismatch: entry {name!r} shape {tuple(shape)} != {target.shape}"
            )
        target[...] = np.frombuffer(raw, dtype="<f4").reshape(shape)
        seen.add(name)
    missing = set(expected) - seen
    if missing:
        raise WeightFormatError(f"spec mismatch: missing entries {sorted(missing)[:3]}")
    return model


# sr-models speaks of saving/loading models; keep both spellings available.
save_model = save_weights
load_model = load_weights
