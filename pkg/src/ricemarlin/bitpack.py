"""MSB-first bit packing for codeword units and reminder fields."""

from __future__ import annotations

import numpy as np

from .errors import CorruptBlockError


def loc_bytes(n: int) -> int:
    """Bytes per escape location for a message of ``n`` symbols."""
    if n <= 1 << 8:
        return 1
    if n <= 1 << 16:
        return 2
    if n <= 1 << 32:
        return 4
    raise ValueError(f"messages of {n} symbols are not supported")


def pack_units(values: np.ndarray, width: int) -> bytes:
    """Concatenate ``width``-bit units MSB-first; the last byte is zero-padded."""
    if len(values) == 0:
        return b""
    if width == 8:
        return values.astype(np.uint8).tobytes()
    v = np.asarray(values, dtype=np.uint32)
    bits = (v[:, None] >> np.arange(width - 1, -1, -1, dtype=np.uint32)) & 1
    return np.packbits(bits.astype(np.uint8).ravel()).tobytes()


def unpack_units(buf: bytes, width: int, count: int) -> np.ndarray:
    """Read ``count`` MSB-first ``width``-bit units from ``buf``."""
    if count == 0:
        return np.zeros(0, dtype=np.uint32)
    if len(buf) * 8 < count * width:
        raise CorruptBlockError(
            f"quotient section holds {len(buf) * 8} bits, need {count * width}"
        )
    if width == 8:
        return np.frombuffer(buf, dtype=np.uint8, count=count).astype(np.uint32)
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8))[: count * width]
    weights = (1 << np.arange(width - 1, -1, -1, dtype=np.uint32))
    return bits.reshape(count, width).astype(np.uint32) @ weights


def pack_low_bits(message: np.ndarray, s: int) -> bytes:
    """Reminder field: the low ``s`` bits of every byte, MSB-first."""
    if s == 0 or len(message) == 0:
        return b""
    msg = np.asarray(message, dtype=np.uint8)
    if s == 8:
        return msg.tobytes()
    bits = np.unpackbits(msg.reshape(-1, 1), axis=1)[:, 8 - s :]
    return np.packbits(bits.ravel()).tobytes()


def unpack_low_bits(buf: bytes, s: int, n: int) -> np.ndarray:
    """Inverse of :func:`pack_low_bits`; returns ``n`` reminder values."""
    if s == 0 or n == 0:
        return np.zeros(n, dtype=np.uint8)
    if len(buf) * 8 < n * s:
        raise CorruptBlockError(
            f"reminder section holds {len(buf) * 8} bits, need {n * s}"
        )
    if s == 8:
        return np.frombuffer(buf, dtype=np.uint8, count=n).copy()
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8))[: n * s]
    weights = (1 << np.arange(s - 1, -1, -1, dtype=np.uint16)).astype(np.uint16)
    vals = bits.reshape(n, s).astype(np.uint16) @ weights
    return vals.astype(np.uint8)
