"""Binary PGM (P5, maxval 255) export for stimuli, reconstructions, heatmaps."""

from __future__ import annotations

import re

import numpy as np

from .errors import FormatError


def write_pgm(path, image: np.ndarray) -> None:
    """Write a 2-D array with intensities in [0, 1] as binary PGM."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PGM image must be 2-D, got shape {img.shape}")
    data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM back to float intensities in [0, 1]."""
    with open(path, "rb") as f:
        raw = f.read()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if not m:
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=h * w, offset=m.end())
    if pixels.size < h * w:
        raise FormatError(f"{path}: truncated pixel payload")
    return pixels.reshape(h, w).astype(np.float64) / 255.0


def tile_grid(images, n_cols: int, pad: int = 1, pad_value: float = 1.0) -> np.ndarray:
    """Tile equally sized images into a padded grid, row-major."""
    imgs = [np.asarray(im, dtype=np.float64) for im in images]
    if not imgs:
        raise ValueError("no images to tile")
    h, w = imgs[0].shape
    if any(im.shape != (h, w) for im in imgs):
        raise ValueError("all tiles must share one shape")
    n_cols = max(1, int(n_cols))
    n_rows = -(-len(imgs) // n_cols)
    out = np.full((n_rows * h + (n_rows + 1) * pad,
                   n_cols * w + (n_cols + 1) * pad), pad_value)
    for k, im in enumerate(imgs):
        r, c = divmod(k, n_cols)
        i0 = pad + r * (h + pad)
        j0 = pad + c * (w + pad)
        out[i0:i0 + h, j0:j0 + w] = im
    return out


def heatmap(values: np.ndarray, vmin: float | None = None,
            vmax: float | None = None) -> np.ndarray:
    """Linearly map an arbitrary 2-D array onto [0, 1] for PGM export."""
    v = np.asarray(values, dtype=np.float64)
    lo = float(v.min()) if vmin is None else vmin
    hi = float(v.max()) if vmax is None else vmax
    if hi <= lo:
        return np.full_like(v, 0.5)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)
