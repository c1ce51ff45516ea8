"""Binary window-archive container.

Layout (all integers little-endian):

    magic   4 bytes  b"TSWA"
    version u32      1
    columns u32 count, then per column: u32 length + utf-8 bytes
    classes u32
    windows u64 count, then per window (sorted by slot, then patient id):
        u32 id length + utf-8 id
        u32 slot, u32 label, u32 features, u32 steps
        features*steps float64 values, row-major (features, steps)

Missing cells stay NaN in the payload; imputation is a per-run concern.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .data import Window, WindowDataset

__all__ = ["write_window_archive", "read_window_archive", "ARCHIVE_MAGIC"]

ARCHIVE_MAGIC = b"TSWA"
ARCHIVE_VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ValueError("truncated window archive")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def write_window_archive(path, dataset: WindowDataset) -> None:
    parts = [ARCHIVE_MAGIC, struct.pack("<I", ARCHIVE_VERSION)]
    parts.append(struct.pack("<I", len(dataset.columns)))
    for col in dataset.columns:
        parts.append(_pack_str(col))
    parts.append(struct.pack("<I", dataset.n_classes))
    windows = [w for slot in sorted(dataset.by_slot) for w in
               sorted(dataset.by_slot[slot], key=lambda w: w.patient_id)]
    parts.append(struct.pack("<Q", len(windows)))
    for w in windows:
        parts.append(_pack_str(w.patient_id))
        d, s = w.matrix.shape
        parts.append(struct.pack("<IIII", w.slot_hours, w.label, d, s))
        parts.append(np.ascontiguousarray(w.matrix, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_window_archive(path) -> WindowDataset:
    reader = _Reader(Path(path).read_bytes())
    if reader.take(4) != ARCHIVE_MAGIC:
        raise ValueError(f"{path}: not a window archive (bad magic)")
    version = reader.u32()
    if version != ARCHIVE_VERSION:
        raise ValueError(f"{path}: unsupported archive version {version}")
    columns = [reader.string() for _ in range(reader.u32())]
    n_classes = reader.u32()
    n_windows = reader.u64()
    by_slot: dict[int, list] = {}
    for _ in range(n_windows):
        patient_id = reader.string()
        slot, label, d, s = struct.unpack("<IIII", reader.take(16))
        matrix = np.frombuffer(reader.take(d * s * 8), dtype="<f8").reshape(d, s).copy()
        by_slot.setdefault(slot, []).append(Window(patient_id, slot, label, matrix))
    return WindowDataset(columns=columns, n_classes=n_classes, by_slot=by_slot)
