"""Binary PPM output and palettes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Mapping

import numpy as np

BLANK = (255, 255, 255)

# indexed by (color id - 1) % 12
DEFAULT_TABLE = (
    (31, 119, 180),
    (214, 39, 40),
    (44, 160, 44),
    (255, 127, 14),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
    (0, 0, 0),
    (255, 215, 0),
)


class Palette:
    """Color id -> RGB; id 0 is always white, unset ids cycle the default table."""

    def __init__(self, overrides: Mapping[int, tuple[int, int, int]] | None = None):
        self.overrides = dict(overrides or {})
        if self.overrides.get(0, BLANK) != BLANK:
            raise ValueError("color id 0 is reserved for blank")

    def rgb(self, cid: int) -> tuple[int, int, int]:
        if cid == 0:
            return BLANK
        if cid in self.overrides:
            return self.overrides[cid]
        return DEFAULT_TABLE[(cid - 1) % len(DEFAULT_TABLE)]

    def lut(self, n: int) -> np.ndarray:
        return np.array([self.rgb(c) for c in range(n)], dtype=np.uint8)

    @classmethod
    def from_vectors(cls, colors: Mapping[tuple[int, ...], tuple[int, int, int]], q: int) -> "Palette":
        out = {}
        for vec, rgb in colors.items():
            cid = 0
            for c in vec:
                cid = cid * q + c % q
            out[cid] = tuple(rgb)
        return cls(out)


def ppm_bytes(cids: np.ndarray, palette: Palette | None = None) -> bytes:
    """P6 image, one pixel per cell, row 0 at the top."""
    palette = palette or Palette()
    cids = np.asarray(cids, dtype=np.int64)
    if cids.ndim != 2:
        raise ValueError("expected a 2-D array of color ids")
    h, w = cids.shape
    n = int(cids.max()) + 1 if cids.size else 1
    pixels = palette.lut(n)[cids] if cids.size else np.zeros((h, w, 3), dtype=np.uint8)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def atomic_write(path: str | os.PathLike, data: bytes | str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ppm(path: str | os.PathLike, cids: np.ndarray, palette: Palette | None = None) -> bytes:
    data = ppm_bytes(cids, palette)
    atomic_write(path, data)
    return data


def read_ppm(data: bytes) -> np.ndarray:
    """(h, w, 3) pixels of a P6 image written by ``ppm_bytes``."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not an 8-bit P6 image")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
