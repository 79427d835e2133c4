"""Garment binding (skin-weight and blend-shape transfer) and palette recoloring."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv
from PIL import Image
from scipy.spatial import cKDTree

from .body_model import ParametricBody, ShapeBasis, SkinWeights, TemplateMesh
from .classes import GARMENT_CLASSES
from .errors import AssetError, DimensionError

NEIGHBOURS = 3
# extra candidates fetched so distance ties can be re-ordered by vertex index
_CANDIDATES = 8
SOURCE_KINDS = ("scanned", "designed")


@dataclass(frozen=True)
class PaletteColor:
    hue: float
    saturation_scale: tuple[float, float] = (0.9, 1.1)
    min_saturation: float = 0.35

    def __post_init__(self):
        if not 0.0 <= self.hue < 360.0:
            raise ValueError(f"hue {self.hue} outside [0, 360)")
        lo, hi = self.saturation_scale
        if lo < 0 or hi < lo:
            raise ValueError(f"bad saturation scale range {self.saturation_scale}")


def _default_colors() -> dict[str, PaletteColor]:
    return {
        "blue": PaletteColor(210.0),
        "green": PaletteColor(140.0),
        "light_pink": PaletteColor(340.0, (0.35, 0.55), 0.15),
    }


@dataclass(frozen=True)
class PaletteSpec:
    colors: dict[str, PaletteColor] = field(default_factory=_default_colors)
    hue_jitter: float = 10.0

    def __post_init__(self):
        if self.hue_jitter < 0:
            raise ValueError("hue jitter must be >= 0")
        if not self.colors:
            raise ValueError("palette needs at least one color")

    def color_for_hue(self, hue: float) -> PaletteColor:
        """Palette entry with the circularly closest hue."""
        def dist(c: PaletteColor) -> float:
            d = abs(c.hue - hue) % 360.0
            return min(d, 360.0 - d)

        return min(self.colors.values(), key=dist)


@dataclass(frozen=True)
class PaletteVariant:
    color: str
    jitter_seed: int


@dataclass(frozen=True, eq=False)
class ClothingAsset:
    name: str
    mesh: TemplateMesh
    class_label: str
    source_kind: str
    weights: SkinWeights
    shape_basis: ShapeBasis
    base_texture: np.ndarray
    palette_variants: tuple[PaletteVariant, ...] = ()
    fits: tuple[str, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.class_label not in GARMENT_CLASSES:
            raise AssetError(f"{self.name}: unknown garment class {self.class_label!r}")
        if self.source_kind not in SOURCE_KINDS:
            raise AssetError(f"{self.name}: source_kind must be one of {SOURCE_KINDS}")
        if self.weights.num_vertices != self.mesh.num_vertices:
            raise DimensionError(f"{self.name}: weights do not cover the garment mesh")
        if self.shape_basis.num_vertices != self.mesh.num_vertices:
            raise DimensionError(f"{self.name}: shape basis does not cover the garment mesh")

    def texture_variant(self, index: int | None, palette: PaletteSpec) -> np.ndarray:
        """Recolored texture for palette variant ``index``; None gives the base texture."""
        if index is None:
            return self.base_texture
        variant = self.palette_variants[index]
        with self._lock:
            cached = self._cache.get(index)
        if cached is None:
            color = palette.colors[variant.color]
            cached = recolor_texture(self.base_texture, color.hue, variant.jitter_seed, palette, color)
            with self._lock:
                self._cache[index] = cached
        return cached


def _neighbours(garment: TemplateMesh, body: TemplateMesh) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-distance weights (G, 3) and body indices (G, 3) of the nearest body vertices.

    Distance ties resolve to the lower body vertex index. A garment vertex that
    coincides with a body vertex takes that vertex alone.
    """
    if garment.num_vertices == 0 or body.num_vertices == 0:
        raise AssetError("weight transfer needs non-empty garment and body meshes")
    k = min(_CANDIDATES, body.num_vertices)
    tree = cKDTree(body.vertices)
    dist, idx = tree.query(garment.vertices, k=k)
    dist = dist.reshape(len(garment.vertices), k)
    idx = idx.reshape(len(garment.vertices), k)
    rows = np.repeat(np.arange(len(idx)), k)
    flat = np.lexsort((idx.ravel(), dist.ravel(), rows))
    order = (flat - rows * k).reshape(idx.shape)
    dist = np.take_along_axis(dist, order, axis=1)[:, :NEIGHBOURS]
    idx = np.take_along_axis(idx, order, axis=1)[:, :NEIGHBOURS]
    if dist.shape[1] < NEIGHBOURS:
        pad = NEIGHBOURS - dist.shape[1]
        dist = np.pad(dist, ((0, 0), (0, pad)), constant_values=np.inf)
        idx = np.pad(idx, ((0, 0), (0, pad)), mode="edge")
    exact = dist[:, 0] <= 1e-12
    with np.errstate(divide="ignore"):
        inv = np.where(np.isinf(dist), 0.0, 1.0 / np.where(exact[:, None], 1.0, dist))
    inv[exact] = (1.0, 0.0, 0.0)
    inv /= inv.sum(axis=1, keepdims=True)
    return inv, idx


def transfer_weights(garment: TemplateMesh, body: TemplateMesh, body_weights: SkinWeights) -> SkinWeights:
    """Skin weights for ``garment`` blended from its 3 nearest body vertices."""
    if body_weights.num_vertices != body.num_vertices:
        raise DimensionError("body weights do not match body mesh")
    blend, idx = _neighbours(garment, body)
    joint_count = int(body_weights.indices.max()) + 1
    dense_body = body_weights.to_dense(joint_count)
    dense = np.einsum("gk,gkj->gj", blend, dense_body[idx])
    return SkinWeights.from_dense(dense)


def transfer_blendshapes(garment: TemplateMesh, body: TemplateMesh, body_basis: ShapeBasis) -> ShapeBasis:
    """Garment displacement fields blended from the 3 nearest body vertices."""
    if body_basis.num_vertices != body.num_vertices:
        raise DimensionError(
            f"shape basis has {body_basis.num_vertices} vertices, body mesh {body.num_vertices}"
        )
    blend, idx = _neighbours(garment, body)
    disp = np.einsum("gk,cgkd->cgd", blend, body_basis.displacements[:, idx, :])
    return ShapeBasis(disp)


def recolor_texture(
    texture: np.ndarray,
    target_hue: float,
    jitter_seed: int,
    palette: PaletteSpec,
    color: PaletteColor | None = None,
) -> np.ndarray:
    """Move every pixel to ``target_hue`` (plus seeded jitter), keeping value.

    Saturation is scaled by a seeded factor from the palette color's range and
    floored at its ``min_saturation`` so achromatic textures still take the hue.
    When ``color`` is omitted the palette entry closest to ``target_hue`` is used.
    """
    tex = np.asarray(texture)
    if tex.size == 0:
        raise AssetError("cannot recolor an empty texture")
    if color is None:
        color = palette.color_for_hue(target_hue)
    rng = np.random.default_rng(jitter_seed)
    jitter = rng.uniform(-palette.hue_jitter, palette.hue_jitter) if palette.hue_jitter > 0 else 0.0
    lo, hi = color.saturation_scale
    scale = rng.uniform(lo, hi) if hi > lo else lo

    hsv = rgb_to_hsv(tex[..., :3].astype(np.float64) / 255.0)
    hsv[..., 0] = ((target_hue + jitter) % 360.0) / 360.0
    hsv[..., 1] = np.maximum(np.clip(hsv[..., 1] * scale, 0.0, 1.0), color.min_saturation)
    out = np.rint(hsv_to_rgb(hsv) * 255.0)
    return np.clip(out, 0, 255).astype(np.uint8)


def make_palette_variants(palette: PaletteSpec, per_color: int, seed: int) -> tuple[PaletteVariant, ...]:
    rng = np.random.default_rng(seed)
    variants = []
    for name in sorted(palette.colors):
        for _ in range(per_color):
            variants.append(PaletteVariant(name, int(rng.integers(0, 2**31 - 1))))
    return tuple(variants)


def bind_garment(
    name: str,
    mesh: TemplateMesh,
    class_label: str,
    source_kind: str,
    body: ParametricBody,
    base_texture: np.ndarray,
    palette_variants: tuple[PaletteVariant, ...] = (),
    fits: tuple[str, ...] = (),
) -> ClothingAsset:
    """Attach a pre-fitted garment mesh to ``body``'s rig and shape space."""
    weights = transfer_weights(mesh, body.mesh, body.weights)
    basis = transfer_blendshapes(mesh, body.mesh, body.basis)
    return ClothingAsset(
        name, mesh, class_label, source_kind, weights, basis,
        np.asarray(base_texture, dtype=np.uint8), palette_variants, fits,
    )


# ---------------------------------------------------------------------------
# garment asset files


def save_garment_mesh(
    path: str | Path,
    mesh: TemplateMesh,
    class_label: str,
    source_kind: str,
    texture: str,
    fits: tuple[str, ...] = (),
) -> None:
    doc = {
        "class_label": class_label,
        "source_kind": source_kind,
        "texture": texture,
        "fits": list(fits),
        "vertices": mesh.vertices.tolist(),
        "triangles": mesh.triangles.tolist(),
        "uvs": mesh.uv_coords.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_garment(
    path: str | Path,
    bodies: dict[str, ParametricBody],
    palette: PaletteSpec,
    variants_per_color: int = 3,
    variant_seed: int = 0,
) -> list[ClothingAsset]:
    """Load a garment file and bind it to every body it fits.

    Returns one bound asset per fitting body (named ``<stem>@<gender>``).
    """
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
        mesh = TemplateMesh.from_arrays(doc["vertices"], doc["triangles"], doc["uvs"])
        class_label = doc["class_label"]
        source_kind = doc["source_kind"]
        texture_path = path.parent / doc["texture"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise AssetError(f"cannot load garment {path}: {exc}") from None
    if mesh.num_vertices == 0:
        raise AssetError(f"garment {path} has no vertices")
    texture = load_rgb(texture_path)
    fits = tuple(doc.get("fits") or sorted(bodies))
    variants = make_palette_variants(palette, variants_per_color, variant_seed)
    out = []
    for gender in fits:
        if gender not in bodies:
            raise AssetError(f"garment {path} fits unknown body {gender!r}")
        out.append(
            bind_garment(f"{path.stem}@{gender}", mesh, class_label, source_kind,
                         bodies[gender], texture, variants, (gender,))
        )
    return out


def load_rgb(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise AssetError(f"cannot read image {path}: {exc}") from None
