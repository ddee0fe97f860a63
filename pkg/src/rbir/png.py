"""Minimal PNG reader: 8-bit greyscale/RGB/RGBA, non-interlaced.

Only what the retrieval pipeline needs to ingest common corpora; PPM stays
the zero-dependency mandatory codec.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import MalformedFileError, TruncatedFileError, UnsupportedFormatError

_CHANNELS = {0: 1, 2: 3, 6: 4}


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw: bytes, height: int, stride: int, bpp: int) -> bytearray:
    if len(raw) < height * (stride + 1):
        raise TruncatedFileError("PNG: decompressed stream shorter than expected")
    out = bytearray(height * stride)
    prev = bytearray(stride)
    pos = 0
    for row in range(height):
        ftype = raw[pos]
        line = bytearray(raw[pos + 1:pos + 1 + stride])
        pos += 1 + stride
        if ftype == 1:  # Sub
            for i in range(bpp, stride):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            for i in range(stride):
                line[i] = (line[i] + prev[i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                line[i] = (line[i] + ((left + prev[i]) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                up_left = prev[i - bpp] if i >= bpp else 0
                line[i] = (line[i] + _paeth(left, prev[i], up_left)) & 0xFF
        elif ftype != 0:
            raise MalformedFileError(f"PNG: unknown filter type {ftype}")
        out[row * stride:(row + 1) * stride] = line
        prev = line
    return out


def decode_rgb(data: bytes, path: str = "<bytes>") -> np.ndarray:
    """Decode PNG bytes to a (height, width, 3) uint8 array (alpha dropped)."""
    if data[:8] != b"\x89PNG\r\n\x1a\n":
        raise MalformedFileError(f"{path}: bad PNG signature")
    pos = 8
    header = None
    idat = bytearray()
    while pos + 8 <= len(data):
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + length]
        if len(body) < length:
            raise TruncatedFileError(f"{path}: truncated {ctype.decode('latin1')} chunk")
        pos += 12 + length  # skip CRC
        if ctype == b"IHDR":
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat.extend(body)
        elif ctype == b"IEND":
            break
    if header is None:
        raise MalformedFileError(f"{path}: missing IHDR")
    width, height, depth, color, comp, filt, interlace = header
    if depth != 8 or color not in _CHANNELS:
        raise UnsupportedFormatError(
            f"{path}: only 8-bit grey/RGB/RGBA PNG supported "
            f"(depth={depth}, color type={color})"
        )
    if comp != 0 or filt != 0 or interlace != 0:
        raise UnsupportedFormatError(f"{path}: interlaced or nonstandard PNG")
    if not idat:
        raise MalformedFileError(f"{path}: no IDAT data")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise MalformedFileError(f"{path}: IDAT inflate failed: {exc}") from None
    ch = _CHANNELS[color]
    stride = width * ch
    flat = _unfilter(raw, height, stride, ch)
    arr = np.frombuffer(bytes(flat), dtype=np.uint8).reshape(height, width, ch)
    if ch == 1:
        arr = np.repeat(arr, 3, axis=2)
    return arr[:, :, :3]
