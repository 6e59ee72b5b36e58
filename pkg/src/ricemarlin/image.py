"""Grayscale image support: binary PGM I/O and the per-block residual transform.

Images are cut into 64x64 blocks (edge blocks clamp to the image bounds) and
each block is predicted independently: every pixel subtracts the pixel above,
the first row of a block subtracts its left neighbor, and the block origin
subtracts nothing.  Residuals are kept mod 256, so the transform is exactly
invertible.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError

BLOCK_EDGE = 64


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a binary (P5) PGM with maxval <= 255 into a 2-D uint8 array."""
    if not data.startswith(b"P5"):
        raise FormatError("only binary (P5) PGM images are supported")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        try:
            fields.append(int(data[start:pos]))
        except ValueError as exc:
            raise FormatError(f"bad PGM header field {data[start:pos]!r}") from exc
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval > 255:
        raise FormatError("16-bit PGM images are not supported")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if len(pixels) < width * height:
        raise FormatError("PGM pixel data truncated")
    return pixels[: width * height].reshape(height, width).copy()


def write_pgm(img: np.ndarray) -> bytes:
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + img.astype(np.uint8).tobytes()


def block_geometry(width: int, height: int, edge: int = BLOCK_EDGE) -> list[tuple[int, int]]:
    """(block width, block height) in raster block order."""
    out = []
    for y0 in range(0, height, edge):
        for x0 in range(0, width, edge):
            out.append((min(edge, width - x0), min(edge, height - y0)))
    return out


def _blocks(img: np.ndarray, edge: int = BLOCK_EDGE):
    h, w = img.shape
    for y0 in range(0, h, edge):
        for x0 in range(0, w, edge):
            yield img[y0 : min(y0 + edge, h), x0 : min(x0 + edge, w)]


def residual_transform(img: np.ndarray, edge: int = BLOCK_EDGE) -> bytes:
    """Above-pixel residuals per block, serialized block by block."""
    out = bytearray()
    for blk in _blocks(img, edge):
        res = blk.copy()
        res[1:, :] = blk[1:, :] - blk[:-1, :]  # uint8 arithmetic wraps mod 256
        res[0, 1:] = blk[0, 1:] - blk[0, :-1]
        out += res.tobytes()
    return bytes(out)


def residual_inverse(data: bytes, width: int, height: int, edge: int = BLOCK_EDGE) -> np.ndarray:
    """Rebuild the image from block-serialized residuals."""
    img = np.zeros((height, width), dtype=np.uint8)
    pos = 0
    geo = block_geometry(width, height, edge)
    i = 0
    for y0 in range(0, height, edge):
        for x0 in range(0, width, edge):
            bw, bh = geo[i]
            i += 1
            res = np.frombuffer(data, dtype=np.uint8, count=bw * bh, offset=pos)
            pos += bw * bh
            res = res.reshape(bh, bw).astype(np.int64)
            row0 = np.cumsum(res[0]) % 256
            res[0] = row0
            blk = np.cumsum(res, axis=0) % 256
            img[y0 : y0 + bh, x0 : x0 + bw] = blk.astype(np.uint8)
    return img
