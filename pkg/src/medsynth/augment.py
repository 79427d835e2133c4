"""Mosaic composition, green-channel gain, and chroma-key background replacement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image
from scipy.ndimage import distance_transform_edt

MIN_BOX_SIDE = 2.0


@dataclass(frozen=True)
class MosaicConfig:
    alpha: float = 20.0
    beta: float = 20.0
    output_size: tuple[int, int] = (896, 896)  # (width, height)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("mosaic alpha and beta must be positive")
        if min(self.output_size) < 1:
            raise ValueError("mosaic output size must be positive")


@dataclass(frozen=True)
class ChromaKeyConfig:
    dominance: float = 1.15  # green must exceed dominance × red and × blue
    min_level: int = 60
    softness: float = 1.0  # blend band width in pixels around keyed regions

    def __post_init__(self):
        if not self.dominance > 1:
            raise ValueError("green dominance ratio must be > 1")
        if not 0 <= self.min_level <= 255:
            raise ValueError("minimum green level must lie in [0, 255]")
        if self.softness < 0:
            raise ValueError("edge softness must be >= 0")


@dataclass
class LabeledImage:
    image: np.ndarray  # (H, W, 3) uint8
    boxes: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))  # (N, 4) x_min, y_min, x_max, y_max
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.boxes) != len(self.labels):
            raise ValueError("one label per box")
        b = self.boxes
        if np.any(b[:, 2] <= b[:, 0]) or np.any(b[:, 3] <= b[:, 1]):
            raise ValueError("boxes must have positive extent")


def sample_mosaic_center(cfg: MosaicConfig, rng: np.random.Generator) -> tuple[float, float]:
    """Mosaic split point as fractions of the output width and height."""
    return float(rng.beta(cfg.alpha, cfg.beta)), float(rng.beta(cfg.alpha, cfg.beta))


def mosaic(items: Sequence[LabeledImage], cfg: MosaicConfig, seed: int) -> LabeledImage:
    """Tile four images around a Beta-distributed centre.

    Each image is scaled to cover the whole output, anchored with its inner
    corner at the centre (top-left, top-right, bottom-left, bottom-right) and
    cropped to its quadrant. Boxes follow the same affine map, are clipped to
    the quadrant, and are dropped when a side falls below 2 pixels.
    """
    if len(items) != 4:
        raise TypeError(f"mosaic takes exactly 4 images, got {len(items)}")
    width, height = cfg.output_size
    fx, fy = sample_mosaic_center(cfg, np.random.default_rng(seed))
    cx = int(round(fx * width))
    cy = int(round(fy * height))
    out = np.zeros((height, width, 3), dtype=np.uint8)
    boxes, labels = [], []
    regions = ((0, 0, cx, cy), (cx, 0, width, cy), (0, cy, cx, height), (cx, cy, width, height))
    for quadrant, (item, (x0, y0, x1, y1)) in enumerate(zip(items, regions)):
        h, w = item.image.shape[:2]
        s = max(width / w, height / h)
        new_w, new_h = max(1, int(np.ceil(w * s - 1e-9))), max(1, int(np.ceil(h * s - 1e-9)))
        sx, sy = new_w / w, new_h / h
        ox = cx - new_w if quadrant in (0, 2) else cx
        oy = cy - new_h if quadrant in (0, 1) else cy
        if x1 > x0 and y1 > y0:
            img = item.image[..., :3]
            scaled = img if (new_w, new_h) == (w, h) else np.asarray(
                Image.fromarray(img).resize((new_w, new_h), Image.BILINEAR))
            out[y0:y1, x0:x1] = scaled[y0 - oy:y1 - oy, x0 - ox:x1 - ox]
        if len(item.boxes):
            b = item.boxes * (sx, sy, sx, sy) + (ox, oy, ox, oy)
            b[:, [0, 2]] = np.clip(b[:, [0, 2]], x0, x1)
            b[:, [1, 3]] = np.clip(b[:, [1, 3]], y0, y1)
            keep = ((b[:, 2] - b[:, 0]) >= MIN_BOX_SIDE) & ((b[:, 3] - b[:, 1]) >= MIN_BOX_SIDE)
            boxes.append(b[keep])
            labels.append(item.labels[keep])
    if boxes:
        return LabeledImage(out, np.concatenate(boxes), np.concatenate(labels))
    return LabeledImage(out)


def green_channel_aug(
    image: np.ndarray,
    seed: int,
    probability: float = 0.5,
    factor_range: tuple[float, float] = (0.6, 1.4),
) -> np.ndarray:
    """With seeded probability, multiply the green channel by one uniform factor."""
    lo, hi = factor_range
    if lo > hi:
        raise ValueError(f"factor range {factor_range} has lo > hi")
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability {probability} outside [0, 1]")
    out = np.array(image, dtype=np.uint8, copy=True)
    rng = np.random.default_rng(seed)
    if rng.random() >= probability:
        return out
    factor = lo if hi == lo else rng.uniform(lo, hi)
    if factor != 1.0:
        out[..., 1] = np.clip(np.rint(out[..., 1].astype(np.float64) * factor), 0, 255).astype(np.uint8)
    return out


def chroma_key(image: np.ndarray, cfg: ChromaKeyConfig) -> np.ndarray:
    """Boolean mask of screen-coloured pixels."""
    rgb = np.asarray(image)[..., :3].astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return (g > cfg.dominance * r) & (g > cfg.dominance * b) & (g >= cfg.min_level)


def chroma_composite(foreground: np.ndarray, background: np.ndarray, cfg: ChromaKeyConfig) -> np.ndarray:
    """Replace keyed pixels with ``background``; a ``softness``-wide band blends linearly."""
    fg = np.asarray(foreground)[..., :3].astype(np.uint8)
    bg = np.asarray(background)[..., :3].astype(np.uint8)
    if bg.shape != fg.shape:
        bg = np.asarray(Image.fromarray(bg).resize((fg.shape[1], fg.shape[0]), Image.BILINEAR))
    key = chroma_key(fg, cfg)
    if not key.any():
        return fg.copy()
    if cfg.softness == 0:
        return np.where(key[..., None], bg, fg)
    dist = distance_transform_edt(~key)
    alpha = np.clip(1.0 - dist / (cfg.softness + 1.0), 0.0, 1.0)[..., None]
    blended = np.rint(alpha * bg + (1.0 - alpha) * fg)
    return np.where(key[..., None], bg, blended.astype(np.uint8))
