"""Frame rendering: posed instances → RGB, depth, class and instance buffers."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .assets import AssetLibrary
from .body_model import (
    TemplateMesh,
    apply_shape,
    forward_kinematics,
    quat_to_matrix,
    sample_animation,
    skin_mesh,
    vertex_normals,
)
from .classes import (
    BACKGROUND_CLASS,
    BACKGROUND_INSTANCE,
    CLASS_IDS,
    ENVIRONMENT_CLASS_ID,
    GARMENT_CLASSES,
)
from .errors import ConfigurationError, ConsistencyError
from .primitives import primitive
from .raster import NEAR, coverage, shade, zbuffer
from .scene import CameraModel, FrameSpec

# instance id layout: characters use 8 consecutive ids (body, then garments in
# class order); distractors and room geometry have their own ranges
CHARACTER_ID_STRIDE = 8
DISTRACTOR_ID_BASE = 1000
ENVIRONMENT_ID_BASE = 2000
DEPTH_MAX_MM = 65535
EMPTY_COLOR = (0, 0, 0)
PNG_COMPRESS_LEVEL = 3


def character_instance_id(character: int, class_id: int = 0) -> int:
    return 1 + CHARACTER_ID_STRIDE * character + class_id


@dataclass
class FrameBuffers:
    rgb: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) uint16 millimetres, 0 = no hit
    class_seg: np.ndarray  # (H, W) uint8, 255 = background
    instance_seg: np.ndarray  # (H, W) uint16, 0 = background
    solo_coverage: dict[int, int] = field(default_factory=dict)  # instance id → pixels when rendered alone
    human_coverage: dict[int, int] = field(default_factory=dict)  # character → union pixels when alone

    def __post_init__(self):
        shapes = {self.rgb.shape[:2], self.depth.shape, self.class_seg.shape, self.instance_seg.shape}
        if len(shapes) != 1:
            raise ConsistencyError(f"buffer dimensions differ: {sorted(shapes)}")

    @property
    def size(self) -> tuple[int, int]:
        return self.depth.shape[1], self.depth.shape[0]


@dataclass(frozen=True, eq=False)
class RenderInstance:
    mesh: TemplateMesh  # world-space, posed
    texture: np.ndarray  # (h, w, 3) uint8
    class_id: int
    instance_id: int
    transform: np.ndarray = field(default_factory=lambda: np.eye(4))  # instance origin in world
    character: int | None = None

    def __post_init__(self):
        if not 0 < self.instance_id < 65536:
            raise ValueError(f"instance id {self.instance_id} not a nonzero 16-bit value")
        if not (0 <= self.class_id < len(CLASS_IDS) or 200 <= self.class_id <= ENVIRONMENT_CLASS_ID):
            raise ValueError(f"class id {self.class_id} not in the declared set")


# ---------------------------------------------------------------------------
# projection


def world_to_camera(points: np.ndarray, camera: CameraModel) -> np.ndarray:
    m = camera.matrix
    return np.asarray(points, dtype=np.float64) @ m[:3, :3].T + m[:3, 3]


def project(point, camera: CameraModel, near: float = NEAR) -> tuple[float, float, float] | None:
    """Pixel coordinates and camera depth of a world point; None when it lies behind the near plane."""
    x, y, z = world_to_camera(np.asarray(point, dtype=np.float64)[None], camera)[0]
    if z <= near:
        return None
    return camera.cx + camera.fx * x / z, camera.cy + camera.fy * y / z, float(z)


# ---------------------------------------------------------------------------
# scene assembly


def _transform_mesh(mesh: TemplateMesh, m: np.ndarray) -> TemplateMesh:
    verts = mesh.vertices @ m[:3, :3].T + m[:3, 3]
    normals = mesh.vertex_normals @ m[:3, :3].T
    return TemplateMesh(verts, mesh.triangles, mesh.uv_coords, normals)


def _offset_mesh(mesh: TemplateMesh, offset: float) -> TemplateMesh:
    if offset == 0:
        return mesh
    return mesh.with_vertices(mesh.vertices + offset * mesh.vertex_normals)


def character_instances(frame: FrameSpec, library: AssetLibrary, index: int, garment_offset: float):
    """Body plus one instance per garment class for ``frame.characters[index]``, in world space."""
    ch = frame.characters[index]
    body = library.body(ch.body)
    clip = library.clip(ch.clip)
    pose = sample_animation(clip, ch.clip_time)
    if pose.joint_count != body.skeleton.joint_count:
        raise ConfigurationError(f"clip {ch.clip} does not match skeleton of {ch.body}")
    coeffs = np.asarray(ch.shape_coeffs, dtype=np.float64)
    world = ch.transform()
    origin = world @ forward_kinematics(body.skeleton, pose)[0]

    shaped = apply_shape(body.mesh, body.basis, coeffs)
    posed = skin_mesh(shaped, body.weights, body.skeleton, pose)
    out = [RenderInstance(_transform_mesh(posed, world), library.image(ch.texture), CLASS_IDS["body"],
                          character_instance_id(index), origin, index)]
    for item in ch.outfit:
        asset = library.garment(item.asset, ch.gender)
        g = apply_shape(asset.mesh, asset.shape_basis, coeffs)
        g = _offset_mesh(skin_mesh(g, asset.weights, body.skeleton, pose), garment_offset)
        cid = CLASS_IDS[item.class_label]
        texture = library.garment_texture(item.asset, ch.gender, item.variant)
        out.append(RenderInstance(_transform_mesh(g, world), texture, cid,
                                  character_instance_id(index, cid), origin, index))
    return out


def build_instances(frame: FrameSpec, library: AssetLibrary, garment_offset: float | None = None,
                    include_environment: bool = True) -> list[RenderInstance]:
    """All renderable instances of a frame: characters, distractors, and room geometry."""
    if garment_offset is None:
        garment_offset = library.config.garment_offset
    out = []
    for c in range(len(frame.characters)):
        items = character_instances(frame, library, c, garment_offset)
        labels = [GARMENT_CLASSES.index(i.class_label) for i in frame.characters[c].outfit]
        if sorted(labels) != list(range(len(GARMENT_CLASSES))):
            raise ConsistencyError("outfit must hold exactly one item per garment class")
        out.extend(items)
    for i, d in enumerate(frame.distractors):
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(np.asarray(d.rotation)) * np.asarray(d.scale)[None, :]
        m[:3, 3] = d.position
        base = primitive(d.kind)
        verts = base.vertices @ m[:3, :3].T + m[:3, 3]
        mesh = TemplateMesh(verts, base.triangles, base.uv_coords, vertex_normals(verts, base.triangles))
        texture = library.image(d.texture) if d.texture else np.full((2, 2, 3), 128, dtype=np.uint8)
        out.append(RenderInstance(mesh, texture, d.class_id, DISTRACTOR_ID_BASE + i, m))
    if include_environment and frame.mode == "SDR" and library.config.room_scene is not None:
        for j, (mesh_ref, tex_ref) in enumerate(library.config.room_scene.meshes):
            out.append(RenderInstance(library.mesh(mesh_ref), library.image(tex_ref), ENVIRONMENT_CLASS_ID,
                                      ENVIRONMENT_ID_BASE + j))
    return out


# ---------------------------------------------------------------------------
# rasterization and shading


def rasterize(instances: list[RenderInstance], frame: FrameSpec, background: np.ndarray | None = None,
              with_coverage: bool = True) -> FrameBuffers:
    cam = frame.camera
    if not (cam.fx > 0 and cam.fy > 0):
        raise ConfigurationError("degenerate camera")
    width, height = cam.width, cam.height
    if background is not None:
        if background.shape[:2] != (height, width):
            raise ConsistencyError("background must match the frame size")
        rgb = np.array(background[..., :3], dtype=np.uint8)
    else:
        rgb = np.empty((height, width, 3), dtype=np.uint8)
        rgb[:] = EMPTY_COLOR
    depth = np.zeros((height, width), dtype=np.uint16)
    class_seg = np.full((height, width), BACKGROUND_CLASS, dtype=np.uint8)
    instance_seg = np.full((height, width), BACKGROUND_INSTANCE, dtype=np.uint16)
    if not instances:
        return FrameBuffers(rgb, depth, class_seg, instance_seg)

    ids = [inst.instance_id for inst in instances]
    if len(set(ids)) != len(ids):
        raise ConsistencyError("instance ids must be unique within a frame")

    verts = np.concatenate([inst.mesh.vertices for inst in instances])
    normals = np.concatenate([inst.mesh.vertex_normals for inst in instances])
    uvs = np.concatenate([inst.mesh.uv_coords for inst in instances])
    offsets = np.cumsum([0] + [inst.mesh.num_vertices for inst in instances])
    tris = np.concatenate([inst.mesh.triangles + offsets[k] for k, inst in enumerate(instances)]).astype(np.int32)
    tri_owner = np.repeat(np.arange(len(instances), dtype=np.int32), [len(i.mesh.triangles) for i in instances])

    cam_verts = world_to_camera(verts, cam)
    intr = (cam.fx, cam.fy, cam.cx, cam.cy)
    tri_id, zbuf, bary = zbuffer(cam_verts, tris, intr, (width, height))

    lights = []
    for lt in frame.lights:
        kind = 0 if lt.kind == "directional" else 1
        lights.append((kind, lt.vector, lt.intensity * np.asarray(lt.color, dtype=np.float64)))
    shade(tri_id, bary, zbuf, tris, tri_owner, verts, normals, uvs, cam.position,
          [inst.texture for inst in instances], [inst.class_id for inst in instances], ids,
          frame.ambient, lights, rgb, depth, class_seg, instance_seg, DEPTH_MAX_MM)

    buffers = FrameBuffers(rgb, depth, class_seg, instance_seg)
    if with_coverage:
        counts = coverage(cam_verts, tris, tri_owner, len(instances), intr, (width, height))
        buffers.solo_coverage = {inst.instance_id: int(c) for inst, c in zip(instances, counts)}
        chars = sorted({inst.character for inst in instances if inst.character is not None})
        if chars:
            sel = np.array([inst.character is not None for inst in instances])
            char_of = np.array([-1 if inst.character is None else chars.index(inst.character)
                                for inst in instances], dtype=np.int32)
            keep = sel[tri_owner]
            human = coverage(cam_verts, tris[keep], char_of[tri_owner[keep]], len(chars), intr, (width, height))
            buffers.human_coverage = {c: int(n) for c, n in zip(chars, human)}
    return buffers


def render_frame(frame: FrameSpec, library: AssetLibrary) -> tuple[FrameBuffers, list[RenderInstance]]:
    instances = build_instances(frame, library)
    background = None
    if frame.background:
        background = library.background(frame.background, (frame.camera.width, frame.camera.height))
    return rasterize(instances, frame, background), instances


# ---------------------------------------------------------------------------
# PNG i/o


def buffer_paths(directory: str | Path, frame_index: int) -> dict[str, Path]:
    directory = Path(directory)
    return {k: directory / f"{frame_index:06d}.{k}.png" for k in ("rgb", "depth", "cls", "inst")}


def write_buffers(buffers: FrameBuffers, directory: str | Path, frame_index: int) -> dict[str, Path]:
    paths = buffer_paths(directory, frame_index)
    Path(directory).mkdir(parents=True, exist_ok=True)
    Image.fromarray(buffers.rgb).save(paths["rgb"], compress_level=PNG_COMPRESS_LEVEL)
    Image.fromarray(buffers.depth).save(paths["depth"], compress_level=PNG_COMPRESS_LEVEL)
    Image.fromarray(buffers.class_seg).save(paths["cls"], compress_level=PNG_COMPRESS_LEVEL)
    Image.fromarray(buffers.instance_seg).save(paths["inst"], compress_level=PNG_COMPRESS_LEVEL)
    return paths


def read_buffers(directory: str | Path, frame_index: int) -> FrameBuffers:
    paths = buffer_paths(directory, frame_index)
    arrays = {}
    for key, path in paths.items():
        with Image.open(path) as im:
            arrays[key] = np.asarray(im)
    return FrameBuffers(
        arrays["rgb"][..., :3].astype(np.uint8),
        arrays["depth"].astype(np.uint16),
        arrays["cls"].astype(np.uint8),
        arrays["inst"].astype(np.uint16),
    )
