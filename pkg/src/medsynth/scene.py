"""Seeded scene composition for the DR character blueprint and the SDR room pipeline.

Each frame is a pure function of ``(config, frame_index, master_seed)``. Two
independent random streams are derived with SplitMix64: a per-character stream
(body shape, texture, outfit, animation; stable while one character's
animation plays in DR) and a per-frame stream (camera, lights, background,
distractors, and in SDR everything else).
"""

from __future__ import annotations

import glob
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from matplotlib.path import Path as PolygonPath

from .body_model import sample_shape_coeffs
from .classes import DISTRACTOR_CLASS_BASE, DISTRACTOR_KINDS, GARMENT_CLASSES
from .clothing import PaletteColor, PaletteSpec
from .errors import ConfigurationError

MASK64 = (1 << 64) - 1
STREAM_FRAME = 0x0F
STREAM_CHARACTER = 0xC4


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int, stream: int = STREAM_FRAME) -> int:
    """64-bit seed for item ``index`` of ``stream`` under ``master_seed``."""
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ (index & MASK64))
    return splitmix64(h ^ stream)


# ---------------------------------------------------------------------------
# frame description


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_to_camera: tuple[tuple[float, ...], ...] = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigurationError(f"camera focal lengths must be positive (fx={self.fx}, fy={self.fy})")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigurationError("principal point outside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.world_to_camera, dtype=np.float64)

    @property
    def position(self) -> np.ndarray:
        m = self.matrix
        return -m[:3, :3].T @ m[:3, 3]

    @classmethod
    def look_at(cls, eye, target, fov_deg: float, width: int, height: int, up=(0.0, 1.0, 0.0)) -> "CameraModel":
        """Pinhole camera (x right, y down, z forward) at ``eye`` aimed at ``target``."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, up)
        if np.linalg.norm(right) < 1e-9:
            right = np.cross(forward, (0.0, 0.0, 1.0))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        m = np.eye(4)
        m[0, :3], m[1, :3], m[2, :3] = right, down, forward
        m[:3, 3] = -m[:3, :3] @ eye
        f = (width / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
        return cls(f, f, width / 2.0, height / 2.0, width, height, _as_tuple(m))


def _as_tuple(m: np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(x) for x in row) for row in m)


@dataclass(frozen=True)
class Light:
    kind: str  # "directional" (vector = travel direction) or "point" (vector = position)
    vector: tuple[float, float, float]
    color: tuple[float, float, float]
    intensity: float


@dataclass(frozen=True)
class Distractor:
    kind: str
    class_id: int
    position: tuple[float, float, float]
    rotation: tuple[float, float, float, float]
    scale: tuple[float, float, float]
    texture: str | None


@dataclass(frozen=True)
class OutfitItem:
    class_label: str
    asset: str
    variant: int


@dataclass(frozen=True)
class CharacterSpec:
    gender: str
    body: str
    shape_coeffs: tuple[float, ...]
    texture: str
    outfit: tuple[OutfitItem, ...]
    clip: str
    clip_time: float
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0

    def transform(self) -> np.ndarray:
        """Character-to-world rigid transform (yaw about +y, then translate)."""
        a = math.radians(self.yaw_deg)
        m = np.eye(4)
        m[0, 0], m[0, 2], m[2, 0], m[2, 2] = math.cos(a), math.sin(a), -math.sin(a), math.cos(a)
        m[:3, 3] = self.position
        return m


@dataclass(frozen=True)
class FrameSpec:
    frame_index: int
    seed: int
    mode: str
    characters: tuple[CharacterSpec, ...]
    camera: CameraModel
    lights: tuple[Light, ...]
    ambient: float
    background: str | None = None
    distractors: tuple[Distractor, ...] = ()

    @property
    def character(self) -> CharacterSpec:
        return self.characters[0]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class GarmentEntry:
    ref: str
    source_kind: str
    fits: tuple[str, ...]


@dataclass(frozen=True)
class DistractorSpec:
    count: tuple[int, int] = (0, 8)
    kinds: tuple[str, ...] = DISTRACTOR_KINDS
    scale: tuple[float, float] = (0.05, 0.3)
    textures: tuple[str, ...] = ()
    ring_radius: tuple[float, float] = (0.5, 2.0)
    height: tuple[float, float] = (0.1, 2.2)


@dataclass(frozen=True)
class RoomScene:
    meshes: tuple[tuple[str, str], ...]  # (mesh ref, texture ref)
    placement_polygon: tuple[tuple[float, float], ...]  # (x, z) floor polygon
    light_anchors: tuple[tuple[float, float, float], ...]
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]

    def polygon_area(self) -> float:
        p = np.asarray(self.placement_polygon, dtype=np.float64)
        if len(p) < 3:
            return 0.0
        x, z = p[:, 0], p[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1))))


@dataclass(frozen=True)
class CameraRanges:
    radius: tuple[float, float] = (2.4, 3.6)
    elevation_deg: tuple[float, float] = (-5.0, 25.0)
    height: tuple[float, float] = (1.4, 2.4)  # SDR: absolute eye height
    azimuth_deg: tuple[float, float] = (0.0, 360.0)
    fov_deg: tuple[float, float] = (40.0, 55.0)
    look_at_jitter_deg: float = 3.0
    target_height: tuple[float, float] = (0.8, 1.2)


@dataclass(frozen=True)
class LightRanges:
    count: tuple[int, int] = (1, 3)
    intensity: tuple[float, float] = (0.4, 1.0)
    color_temperature: tuple[float, float] = (3000.0, 8000.0)
    ambient: tuple[float, float] = (0.2, 0.45)


@dataclass(frozen=True, eq=False)
class RandomizationConfig:
    mode: str
    bodies: dict[str, str]
    human_texture_pool: dict[str, tuple[str, ...]]
    garment_registry: dict[str, tuple[GarmentEntry, ...]]
    animation_clips: tuple[str, ...]
    clip_intervals: tuple[int, ...] = (1,)
    shape_table: np.ndarray | None = None
    num_shape_coeffs: int = 10
    background_pool: tuple[str, ...] = ()
    distractor_spec: DistractorSpec = field(default_factory=DistractorSpec)
    room_scene: RoomScene | None = None
    camera_ranges: CameraRanges = field(default_factory=CameraRanges)
    light_ranges: LightRanges = field(default_factory=LightRanges)
    frames_per_character: int | None = None
    characters_per_frame: int = 1
    image_size: tuple[int, int] = (896, 896)
    palette: PaletteSpec = field(default_factory=PaletteSpec)
    variants_per_color: int = 3
    garment_offset: float = 0.002
    min_visibility: float = 0.05
    source: str | None = None

    def __post_init__(self):
        if self.mode not in ("DR", "SDR"):
            raise ConfigurationError(f"mode must be DR or SDR, got {self.mode!r}")
        if self.frames_per_character is None:
            object.__setattr__(self, "frames_per_character", max(1, self.clip_intervals[0]))
        if self.frames_per_character < 1:
            raise ConfigurationError("frames_per_character must be >= 1")
        if self.characters_per_frame < 1:
            raise ConfigurationError("characters_per_frame must be >= 1")

    @property
    def num_variants(self) -> int:
        return len(self.palette.colors) * self.variants_per_color

    def validate(self) -> None:
        """Raise ConfigurationError naming the first empty pool the active mode samples."""
        if not self.bodies:
            raise ConfigurationError("pool 'bodies' is empty")
        if not any(self.human_texture_pool.values()):
            raise ConfigurationError("pool 'human_texture_pool' is empty")
        for cls in GARMENT_CLASSES:
            if not self.garment_registry.get(cls):
                raise ConfigurationError(f"pool 'garment_registry[{cls}]' is empty")
        if not self.animation_clips:
            raise ConfigurationError("pool 'animation_clips' is empty")
        if self.mode == "DR" and not self.background_pool:
            raise ConfigurationError("pool 'background_pool' is empty")
        if self.mode == "SDR":
            if self.room_scene is None:
                raise ConfigurationError("SDR mode needs a room_scene")
            if self.room_scene.polygon_area() <= 0:
                raise ConfigurationError("room_scene placement region is empty")
            if not self.room_scene.light_anchors:
                raise ConfigurationError("pool 'room_scene.light_anchors' is empty")


def _pair(value, cast=float) -> tuple:
    if isinstance(value, (int, float)):
        return (cast(value), cast(value))
    lo, hi = value
    return (cast(lo), cast(hi))


def _expand(base: Path, spec) -> tuple[str, ...]:
    """Resolve a glob pattern or list of paths relative to ``base``; sorted."""
    if spec is None:
        return ()
    items = [spec] if isinstance(spec, str) else list(spec)
    out: list[str] = []
    for item in items:
        pattern = str((base / item).resolve()) if not Path(item).is_absolute() else item
        if any(ch in item for ch in "*?["):
            out.extend(sorted(glob.glob(pattern)))
        else:
            out.append(pattern)
    return tuple(out)


def load_room(path: str | Path) -> RoomScene:
    path = Path(path).resolve()
    try:
        with open(path) as fh:
            doc = json.load(fh)
        base = path.parent
        meshes = tuple((str((base / m["mesh"]).resolve()), str((base / m["texture"]).resolve()))
                       for m in doc["meshes"])
        polygon = tuple(tuple(map(float, p)) for p in doc["placement_polygon"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigurationError(f"cannot read room scene {path}: {exc}") from None
    bounds = doc.get("bounds") or [[-1e3] * 3, [1e3] * 3]
    return RoomScene(
        meshes,
        polygon,
        tuple(tuple(map(float, p)) for p in doc.get("ceiling_light_anchors", [])),
        (tuple(map(float, bounds[0])), tuple(map(float, bounds[1]))),
    )


def load_garment_index(path: str | Path, source_kind: str | None = None) -> dict[str, tuple[GarmentEntry, ...]]:
    path = Path(path).resolve()
    with open(path) as fh:
        doc = json.load(fh)
    registry = {}
    for cls, items in doc["classes"].items():
        entries = []
        for item in items:
            kind = item.get("source_kind", "designed")
            if source_kind and kind != source_kind:
                continue
            entries.append(GarmentEntry(str((path.parent / item["file"]).resolve()), kind,
                                        tuple(item.get("fits", ()))))
        registry[cls] = tuple(entries)
    return registry


def _palette_from(doc: dict | None) -> PaletteSpec:
    if not doc:
        return PaletteSpec()
    colors = {
        name: PaletteColor(float(c["hue"]), _pair(c.get("saturation_scale", (0.9, 1.1))),
                           float(c.get("min_saturation", 0.35)))
        for name, c in doc["colors"].items()
    }
    return PaletteSpec(colors, float(doc.get("hue_jitter", 10.0)))


def load_config(path: str | Path) -> RandomizationConfig:
    """Read a JSON randomization config; relative paths resolve against its directory."""
    path = Path(path).resolve()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    base = path.parent
    try:
        mode = doc["mode"]
        bodies = {g: str((base / p).resolve()) for g, p in doc["bodies"].items()}
        textures_doc = doc["human_textures"]
        if isinstance(textures_doc, dict):
            textures = {g: _expand(base, spec) for g, spec in textures_doc.items()}
        else:
            textures = {"*": _expand(base, textures_doc)}
        registry = load_garment_index(base / doc["garment_registry"], doc.get("garment_source"))
        clips = _expand(base, doc["animation_clips"])
    except KeyError as exc:
        raise ConfigurationError(f"config {path} missing field {exc}") from None

    intervals = []
    for ref in clips:
        try:
            with open(ref) as fh:
                intervals.append(max(1, len(json.load(fh)) - 1))
        except OSError as exc:
            raise ConfigurationError(f"cannot read animation clip {ref}: {exc}") from None

    shape_table = None
    if doc.get("shape_table"):
        table_path = base / doc["shape_table"]
        shape_table = np.loadtxt(table_path, delimiter=",", ndmin=2)

    dspec = doc.get("distractors") or {}
    cam = doc.get("camera") or {}
    lights = doc.get("lights") or {}
    defaults_cam = CameraRanges()
    defaults_light = LightRanges()
    cfg = RandomizationConfig(
        mode=mode,
        bodies=bodies,
        human_texture_pool=textures,
        garment_registry=registry,
        animation_clips=clips,
        clip_intervals=tuple(intervals) or (1,),
        shape_table=shape_table,
        num_shape_coeffs=int(doc.get("num_shape_coeffs", 10 if shape_table is None else shape_table.shape[1])),
        background_pool=_expand(base, doc.get("background_pool")),
        distractor_spec=DistractorSpec(
            count=_pair(dspec.get("count", (0, 8)), int),
            kinds=tuple(dspec.get("kinds", DISTRACTOR_KINDS)),
            scale=_pair(dspec.get("scale", (0.05, 0.3))),
            textures=_expand(base, dspec.get("textures")),
        ),
        room_scene=load_room(base / doc["room_scene"]) if doc.get("room_scene") else None,
        camera_ranges=CameraRanges(
            radius=_pair(cam.get("radius", defaults_cam.radius)),
            elevation_deg=_pair(cam.get("elevation_deg", defaults_cam.elevation_deg)),
            height=_pair(cam.get("height", defaults_cam.height)),
            azimuth_deg=_pair(cam.get("azimuth_deg", defaults_cam.azimuth_deg)),
            fov_deg=_pair(cam.get("fov_deg", defaults_cam.fov_deg)),
            look_at_jitter_deg=float(cam.get("look_at_jitter_deg", defaults_cam.look_at_jitter_deg)),
            target_height=_pair(cam.get("target_height", defaults_cam.target_height)),
        ),
        light_ranges=LightRanges(
            count=_pair(lights.get("count", defaults_light.count), int),
            intensity=_pair(lights.get("intensity", defaults_light.intensity)),
            color_temperature=_pair(lights.get("color_temperature", defaults_light.color_temperature)),
            ambient=_pair(lights.get("ambient", defaults_light.ambient)),
        ),
        frames_per_character=doc.get("frames_per_character"),
        characters_per_frame=int(doc.get("characters_per_frame", 1)),
        image_size=tuple(int(x) for x in doc.get("image_size", (896, 896))),
        palette=_palette_from(doc.get("palette")),
        variants_per_color=int(doc.get("variants_per_color", 3)),
        garment_offset=float(doc.get("garment_offset", 0.002)),
        min_visibility=float(doc.get("min_visibility", 0.05)),
        source=str(path),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# sampling helpers


def color_temperature_rgb(kelvin: float) -> tuple[float, float, float]:
    """Approximate blackbody color (Tanner Helland fit), channels in [0, 1]."""
    t = kelvin / 100.0
    if t <= 66:
        r = 255.0
        g = 99.4708025861 * math.log(t) - 161.1195681661
        b = 0.0 if t <= 19 else 138.5177312231 * math.log(t - 10) - 305.0447927307
    else:
        r = 329.698727446 * (t - 60) ** -0.1332047592
        g = 288.1221695283 * (t - 60) ** -0.0755148492
        b = 255.0
    return tuple(min(max(c, 0.0), 255.0) / 255.0 for c in (r, g, b))


def _uniform(rng: np.random.Generator, rng_range: tuple[float, float]) -> float:
    lo, hi = rng_range
    return float(lo) if hi <= lo else float(rng.uniform(lo, hi))


def _randint(rng: np.random.Generator, rng_range: tuple[int, int]) -> int:
    lo, hi = rng_range
    return int(lo) if hi <= lo else int(rng.integers(lo, hi + 1))


def _choice(rng: np.random.Generator, pool, name: str):
    if not pool:
        raise ConfigurationError(f"pool '{name}' is empty")
    return pool[int(rng.integers(len(pool)))]


def _textures_for(config: RandomizationConfig, gender: str) -> tuple[str, ...]:
    pool = config.human_texture_pool.get(gender) or config.human_texture_pool.get("*")
    if not pool:
        pool = tuple(ref for refs in config.human_texture_pool.values() for ref in refs)
    return pool


def _sample_outfit(config: RandomizationConfig, rng: np.random.Generator, gender: str) -> tuple[OutfitItem, ...]:
    items = []
    for cls in GARMENT_CLASSES:
        pool = [e for e in config.garment_registry.get(cls, ()) if not e.fits or gender in e.fits]
        entry = _choice(rng, pool, f"garment_registry[{cls}] for {gender}")
        items.append(OutfitItem(cls, entry.ref, int(rng.integers(config.num_variants))))
    return tuple(items)


def _sample_character(config, rng, shape_coeffs, clip_time=None, position=(0.0, 0.0, 0.0), yaw=0.0):
    genders = sorted(config.bodies)
    gender = _choice(rng, genders, "bodies")
    texture = _choice(rng, _textures_for(config, gender), f"human_texture_pool[{gender}]")
    outfit = _sample_outfit(config, rng, gender)
    clip = _choice(rng, config.animation_clips, "animation_clips")
    if clip_time is None:
        clip_time = float(rng.uniform(0.0, 1.0))
    return CharacterSpec(gender, config.bodies[gender], tuple(float(c) for c in shape_coeffs), texture,
                         outfit, clip, float(clip_time), tuple(float(p) for p in position), float(yaw))


def _jittered_camera(config, rng, eye, target) -> CameraModel:
    cr = config.camera_ranges
    width, height = config.image_size
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    dist = np.linalg.norm(forward)
    jitter = math.radians(cr.look_at_jitter_deg)
    if jitter > 0:
        up = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up)
        right /= max(np.linalg.norm(right), 1e-9)
        true_up = np.cross(right, forward) / dist
        target = (np.asarray(target) + dist * math.tan(rng.uniform(-jitter, jitter)) * right
                  + dist * math.tan(rng.uniform(-jitter, jitter)) * true_up)
    fov = _uniform(rng, cr.fov_deg)
    return CameraModel.look_at(eye, target, fov, width, height)


def _dr_lights(config, rng) -> tuple[tuple[Light, ...], float]:
    lr = config.light_ranges
    lights = []
    for _ in range(_randint(rng, lr.count)):
        az = rng.uniform(0, 2 * math.pi)
        el = rng.uniform(math.radians(10), math.radians(80))
        to_light = np.array([math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)])
        color = color_temperature_rgb(_uniform(rng, lr.color_temperature))
        lights.append(Light("directional", tuple(float(x) for x in -to_light), color, _uniform(rng, lr.intensity)))
    return tuple(lights), _uniform(rng, lr.ambient)


def _random_quaternion(rng) -> tuple[float, float, float, float]:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return tuple(float(x) for x in q)


def _dr_distractors(config, rng, centre) -> tuple[Distractor, ...]:
    ds = config.distractor_spec
    out = []
    for _ in range(_randint(rng, ds.count)):
        kind = _choice(rng, ds.kinds, "distractor_spec.kinds")
        ang = rng.uniform(0, 2 * math.pi)
        r = _uniform(rng, ds.ring_radius)
        pos = (centre[0] + r * math.cos(ang), _uniform(rng, ds.height), centre[2] + r * math.sin(ang))
        if kind == "sphere":
            s = _uniform(rng, ds.scale)
            scale = (s, s, s)
        elif kind == "cylinder":
            s = _uniform(rng, ds.scale)
            scale = (s, _uniform(rng, ds.scale), s)
        else:
            scale = tuple(_uniform(rng, ds.scale) for _ in range(3))
        texture = _choice(rng, ds.textures, "distractor_spec.textures") if ds.textures else None
        out.append(Distractor(kind, DISTRACTOR_CLASS_BASE + DISTRACTOR_KINDS.index(kind),
                              tuple(float(p) for p in pos), _random_quaternion(rng),
                              tuple(float(s) for s in scale), texture))
    return tuple(out)


# ---------------------------------------------------------------------------
# composers


def compose_dr(config: RandomizationConfig, frame_index: int, master_seed: int) -> FrameSpec:
    """Frame of the DR blueprint.

    Body shapes are walked in table order, one per character; a character keeps
    its texture, outfit and animation for ``frames_per_character`` frames while
    the animation advances, then the next shape is taken.
    """
    if config.mode != "DR":
        raise ConfigurationError("compose_dr needs a DR config")
    fpc = config.frames_per_character
    char_index, step = divmod(frame_index, fpc)
    char_rng = np.random.default_rng(derive_seed(master_seed, char_index, STREAM_CHARACTER))
    seed = derive_seed(master_seed, frame_index)
    rng = np.random.default_rng(seed)

    if config.shape_table is not None and len(config.shape_table):
        shape = config.shape_table[char_index % len(config.shape_table)]
    else:
        shape = sample_shape_coeffs(char_rng, config.num_shape_coeffs)
    character = _sample_character(config, char_rng, shape, clip_time=step / fpc)

    background = _choice(rng, config.background_pool, "background_pool")
    cr = config.camera_ranges
    target = np.array([0.0, _uniform(rng, cr.target_height), 0.0])
    az = math.radians(_uniform(rng, cr.azimuth_deg))
    el = math.radians(_uniform(rng, cr.elevation_deg))
    radius = _uniform(rng, cr.radius)
    eye = target + radius * np.array([math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)])
    camera = _jittered_camera(config, rng, eye, target)
    lights, ambient = _dr_lights(config, rng)
    distractors = _dr_distractors(config, rng, (0.0, 0.0, 0.0))
    return FrameSpec(frame_index, seed, "DR", (character,), camera, lights, ambient, background, distractors)


def _sample_in_polygon(rng, polygon: np.ndarray) -> tuple[float, float]:
    path = PolygonPath(polygon)
    lo, hi = polygon.min(axis=0), polygon.max(axis=0)
    for _ in range(1000):
        p = rng.uniform(lo, hi)
        if path.contains_point(p):
            return float(p[0]), float(p[1])
    raise ConfigurationError("could not sample a point inside the placement region")


def compose_sdr(config: RandomizationConfig, frame_index: int, master_seed: int) -> FrameSpec:
    """Frame of the SDR room pipeline: every attribute re-drawn per frame, shape fixed at zero."""
    if config.mode != "SDR":
        raise ConfigurationError("compose_sdr needs an SDR config")
    room = config.room_scene
    if room is None or room.polygon_area() <= 0:
        raise ConfigurationError("room_scene placement region is empty")
    seed = derive_seed(master_seed, frame_index)
    rng = np.random.default_rng(seed)
    polygon = np.asarray(room.placement_polygon, dtype=np.float64)

    characters = []
    zeros = np.zeros(config.num_shape_coeffs)
    for _ in range(config.characters_per_frame):
        x, z = _sample_in_polygon(rng, polygon)
        yaw = rng.uniform(0.0, 360.0)
        characters.append(_sample_character(config, rng, zeros, position=(x, 0.0, z), yaw=yaw))

    lr = config.light_ranges
    lights = []
    for anchor in room.light_anchors:
        pos = np.asarray(anchor) + rng.uniform(-0.1, 0.1, size=3) * (1, 0, 1)
        color = color_temperature_rgb(_uniform(rng, lr.color_temperature))
        lights.append(Light("point", tuple(float(p) for p in pos), color, _uniform(rng, lr.intensity)))
    ambient = _uniform(rng, lr.ambient)

    cr = config.camera_ranges
    focus = characters[0]
    target = np.array(focus.position) + (0.0, _uniform(rng, cr.target_height), 0.0)
    lo, hi = np.array(room.bounds[0]), np.array(room.bounds[1])
    eye = None
    for _ in range(100):
        az = math.radians(_uniform(rng, cr.azimuth_deg))
        radius = _uniform(rng, cr.radius)
        cand = np.array([target[0] + radius * math.sin(az), _uniform(rng, cr.height), target[2] + radius * math.cos(az)])
        if np.all(cand >= lo) and np.all(cand <= hi):
            eye = cand
            break
    if eye is None:
        eye = np.clip(cand, lo, hi)
    camera = _jittered_camera(config, rng, eye, target)
    return FrameSpec(frame_index, seed, "SDR", tuple(characters), camera, tuple(lights), ambient)


def compose(config: RandomizationConfig, frame_index: int, master_seed: int) -> FrameSpec:
    return (compose_dr if config.mode == "DR" else compose_sdr)(config, frame_index, master_seed)


def plan_dataset(config: RandomizationConfig, count: int, master_seed: int, start_index: int = 0) -> list[FrameSpec]:
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    return [compose(config, start_index + i, master_seed) for i in range(count)]
