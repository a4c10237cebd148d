"""Leaf image to feature vector pipeline.

RGB -> grayscale -> Canny edge map -> bounding-box crop -> 32x32 bilinear
resample -> row-major 1024-vector -> unit l2 norm.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

GRAY_WEIGHTS = (0.2989, 0.5870, 0.1140)
OUT_SIDE = 32

DEFAULT_SIGMA = 1.4
DEFAULT_LOW = 0.1
DEFAULT_HIGH = 0.3


class ImageError(ValueError):
    pass


class ZeroNormError(ValueError):
    pass


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Weighted channel sum in float64, not rounded."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] < 1 or rgb.shape[1] < 1:
        raise ImageError(f"expected an (H, W, 3) image, got shape {rgb.shape}")
    px = rgb.astype(np.float64)
    if px.min() < 0 or px.max() > 255:
        raise ImageError("channel values must lie in [0, 255]")
    r, g, b = GRAY_WEIGHTS
    return r * px[..., 0] + g * px[..., 1] + b * px[..., 2]


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    # Direction quantized to 0/45/90/135 degrees. A pixel survives if it is
    # >= its forward neighbour and > its backward neighbour, so plateaus of
    # two equal maxima (a step between pixels) yield a single-pixel line.
    H, W = mag.shape
    keep = np.zeros_like(mag, dtype=bool)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    # (row, col) offsets of the forward neighbour along the gradient
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    padded = np.pad(mag, 1)
    inner = mag
    for s, (dr, dc) in offsets.items():
        fwd = padded[1 + dr : 1 + dr + H, 1 + dc : 1 + dc + W]
        bwd = padded[1 - dr : 1 - dr + H, 1 - dc : 1 - dc + W]
        sel = sector == s
        keep |= sel & (inner >= fwd) & (inner > bwd)
    keep &= mag > 0
    return keep


def canny_edges(
    gray: np.ndarray,
    sigma: float = DEFAULT_SIGMA,
    low: float = DEFAULT_LOW,
    high: float = DEFAULT_HIGH,
) -> np.ndarray:
    """Binary Canny edge map (uint8 0/1).

    ``low`` and ``high`` are fractions of the maximum smoothed gradient
    magnitude.  Pixels on the one-pixel frame are never edges.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2 or min(gray.shape) < 3:
        raise ImageError(f"image must be 2-D and at least 3x3, got shape {gray.shape}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not 0 <= low < high:
        raise ValueError("thresholds must satisfy 0 <= low < high")
    smooth = ndimage.gaussian_filter(gray, sigma, mode="nearest")
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    mag[0, :] = mag[-1, :] = 0
    mag[:, 0] = mag[:, -1] = 0
    peak = mag.max()
    if peak <= 0:
        return np.zeros(gray.shape, dtype=np.uint8)
    # tiny relative floor removes float noise from flat regions
    thin = _nonmax_suppress(mag, gx, gy) & (mag > peak * 1e-9)
    strong = thin & (mag >= high * peak)
    weak = thin & (mag >= low * peak)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros(gray.shape, dtype=np.uint8)
    has_strong = np.zeros(count + 1, dtype=bool)
    has_strong[np.unique(labels[strong])] = True
    has_strong[0] = False
    return has_strong[labels].astype(np.uint8)


def bilinear_resize(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Pixel-centre aligned bilinear resampling with edge clamping.

    Same-size input is returned unchanged.
    """
    img = np.asarray(img, dtype=np.float64)
    H, W = img.shape

    def coords(n_out, n_in):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0, n_in - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    r0, r1, fr = coords(height, H)
    c0, c1, fc = coords(width, W)
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bot * fr[:, None]


def crop_resize_32(edges: np.ndarray) -> np.ndarray:
    """Crop to the nonzero bounding box and resample to 32x32 in [0, 1].

    An all-zero input is resampled whole.
    """
    edges = np.asarray(edges, dtype=np.float64)
    rows = np.flatnonzero(edges.any(axis=1))
    if rows.size:
        cols = np.flatnonzero(edges.any(axis=0))
        edges = edges[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    return np.clip(bilinear_resize(edges, OUT_SIDE, OUT_SIDE), 0.0, 1.0)


def vectorize(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.shape != (OUT_SIDE, OUT_SIDE):
        raise ImageError(f"expected a {OUT_SIDE}x{OUT_SIDE} image, got shape {img.shape}")
    return img.reshape(-1).copy()


def unit_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ZeroNormError("cannot normalize a zero vector")
    return v / norm


def extract_features(
    img: np.ndarray,
    sigma: float = DEFAULT_SIGMA,
    low: float = DEFAULT_LOW,
    high: float = DEFAULT_HIGH,
) -> np.ndarray:
    """Full pipeline; ``img`` is (H, W, 3) RGB or (H, W) grayscale."""
    img = np.asarray(img)
    gray = to_grayscale(img) if img.ndim == 3 else img.astype(np.float64)
    edges = canny_edges(gray, sigma, low, high)
    return unit_normalize(vectorize(crop_resize_32(edges)))


def read_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit binary PGM (P5) or PPM (P6) file."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode not in ("L", "RGB"):
                raise ImageError(f"{path}: not an 8-bit P5/P6 image (format={im.format}, mode={im.mode})")
            return np.asarray(im).copy()
    except (OSError, SyntaxError) as exc:
        raise ImageError(f"{path}: {exc}") from exc


def write_image(path: str | Path, img: np.ndarray) -> None:
    """Write uint8 (H, W) as P5 or (H, W, 3) as P6."""
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path, format="PPM")
