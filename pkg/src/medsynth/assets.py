"""Thread-safe lazy loading of every asset a config references."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Callable, TypeVar

import numpy as np
from PIL import Image

from .body_model import AnimationClip, ParametricBody, TemplateMesh, load_body, load_clip
from .clothing import ClothingAsset, load_garment, load_rgb
from .errors import AssetError
from .scene import RandomizationConfig

T = TypeVar("T")


def load_mesh(path: str | Path) -> TemplateMesh:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return TemplateMesh.from_arrays(doc["vertices"], doc["triangles"], doc["uvs"])
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise AssetError(f"cannot load mesh {path}: {exc}") from None


class AssetLibrary:
    """Resolves refs from a FrameSpec into loaded assets, caching each on first use.

    Loads happen outside the lock; if two threads race on one ref both compute
    the same value and the first stored copy wins, so results never differ.
    """

    def __init__(self, config: RandomizationConfig):
        self.config = config
        self._lock = threading.Lock()
        self._cache: dict[tuple, object] = {}

    def _get(self, key: tuple, load: Callable[[], T]) -> T:
        with self._lock:
            if key in self._cache:
                return self._cache[key]  # type: ignore[return-value]
        value = load()
        with self._lock:
            return self._cache.setdefault(key, value)  # type: ignore[return-value]

    def body(self, ref: str) -> ParametricBody:
        def load():
            if not Path(ref).exists():
                raise AssetError(f"asset missing: body {ref}")
            return load_body(ref)
        return self._get(("body", ref), load)

    def bodies(self) -> dict[str, ParametricBody]:
        return {g: self.body(ref) for g, ref in self.config.bodies.items()}

    def garment(self, ref: str, gender: str) -> ClothingAsset:
        def load():
            if not Path(ref).exists():
                raise AssetError(f"asset missing: garment {ref}")
            bound = load_garment(ref, self.bodies(), self.config.palette, self.config.variants_per_color)
            return {a.fits[0]: a for a in bound}

        bound = self._get(("garment", ref), load)
        if gender not in bound:
            raise AssetError(f"garment {ref} does not fit body {gender!r}")
        return bound[gender]

    def garment_texture(self, ref: str, gender: str, variant: int | None) -> np.ndarray:
        asset = self.garment(ref, gender)
        if variant is not None and not 0 <= variant < len(asset.palette_variants):
            raise AssetError(f"garment {ref} has no palette variant {variant}")
        return asset.texture_variant(variant, self.config.palette)

    def image(self, ref: str) -> np.ndarray:
        return self._get(("image", ref), lambda: load_rgb(ref))

    def background(self, ref: str, size: tuple[int, int]) -> np.ndarray:
        """Background image resampled (bilinear) to ``size`` = (width, height)."""
        def load():
            img = self.image(ref)
            if (img.shape[1], img.shape[0]) == tuple(size):
                return img
            return np.asarray(Image.fromarray(img).resize(tuple(size), Image.BILINEAR))
        return self._get(("background", ref, tuple(size)), load)

    def clip(self, ref: str) -> AnimationClip:
        def load():
            try:
                return load_clip(ref)
            except OSError:
                raise AssetError(f"asset missing: animation clip {ref}") from None
        return self._get(("clip", ref), load)

    def mesh(self, ref: str) -> TemplateMesh:
        return self._get(("mesh", ref), lambda: load_mesh(ref))
