"""Deterministic named seed streams.

A single master seed fans out into independent sub-seeds (one per named
stream such as "init", "shuffle", "data") via SHA-256, so one knob controls
the full run while components stay decoupled.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(master: int, *names: str) -> int:
    """Derive a 63-bit sub-seed for a named stream from a master seed."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode("ascii"))
    for name in names:
        h.update(b"/")
        h.update(name.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF
