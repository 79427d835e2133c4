"""Ground truth from rendered buffers: tight boxes, visibility, JSON records and manifests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classes import CLASS_NAMES, HUMAN_CLASS_ID, class_name
from .dataset import DatasetManifest, ManifestEntry
from .errors import ConsistencyError, ValidationError
from .render import FrameBuffers, RenderInstance
from .scene import CameraModel, FrameSpec

ANNOTATED_CLASSES = range(len(CLASS_NAMES))
DEFAULT_MIN_VISIBILITY = 0.05


@dataclass(frozen=True)
class BoundingBox2D:
    """Pixel box; ``x_max``/``y_max`` are one past the last covered pixel."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"empty or inverted box {self.as_list()}")

    def check_inside(self, width: int, height: int) -> None:
        if self.x_min < 0 or self.y_min < 0 or self.x_max > width or self.y_max > height:
            raise ValidationError(f"box {self.as_list()} outside {width}x{height} image")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_list(self) -> list:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def as_xywh(self) -> list:
        return [self.x_min, self.y_min, self.width, self.height]

    def contains(self, other: "BoundingBox2D") -> bool:
        return (self.x_min <= other.x_min and self.y_min <= other.y_min
                and self.x_max >= other.x_max and self.y_max >= other.y_max)


@dataclass(frozen=True)
class ObjectAnnotation:
    class_id: int
    instance_id: int
    bbox: BoundingBox2D
    visible_pixels: int
    visibility_fraction: float
    world_position: tuple[float, float, float]

    def __post_init__(self):
        if self.visible_pixels <= 0:
            raise ValidationError("annotations need at least one visible pixel")
        if not 0.0 < self.visibility_fraction <= 1.0:
            raise ValidationError(f"visibility {self.visibility_fraction} outside (0, 1]")


@dataclass(frozen=True)
class FrameAnnotation:
    frame_index: int
    camera: CameraModel
    objects: tuple[ObjectAnnotation, ...]
    seed: int
    mode: str

    def __post_init__(self):
        ids = [o.instance_id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValidationError(f"frame {self.frame_index}: duplicate instance ids")


def bbox_from_mask(instance_seg: np.ndarray, instance_id: int) -> BoundingBox2D | None:
    return _bbox(instance_seg == instance_id)


def _bbox(mask: np.ndarray) -> BoundingBox2D | None:
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return BoundingBox2D(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def annotate_frame(
    buffers: FrameBuffers,
    spec: FrameSpec,
    instances: Sequence[RenderInstance],
    min_visibility: float = DEFAULT_MIN_VISIBILITY,
) -> FrameAnnotation:
    """Objects of the detection classes with visibility at least ``min_visibility``.

    A character's human (class 0) object covers the union of its body and
    worn-garment pixels; garments cover their own pixels. Visibility divides
    visible pixels by the pixels the object covers when rendered alone.
    """
    width, height = buffers.size
    if (spec.camera.width, spec.camera.height) != (width, height):
        raise ConsistencyError(f"buffers are {width}x{height}, camera {spec.camera.width}x{spec.camera.height}")
    by_id = {inst.instance_id: inst for inst in instances}
    present, pixel_counts = np.unique(buffers.instance_seg, return_counts=True)
    counts = dict(zip(present.tolist(), pixel_counts.tolist()))
    counts.pop(0, None)
    unknown = sorted(set(counts) - set(by_id))
    if unknown:
        raise ConsistencyError(f"buffer holds instance ids not in the frame: {unknown[:5]}")

    objects = []
    characters: dict[int, list[RenderInstance]] = {}
    for inst in instances:
        if inst.character is not None:
            characters.setdefault(inst.character, []).append(inst)

    def emit(class_id, instance_id, mask, visible, solo, origin):
        if visible == 0 or solo == 0:
            return
        fraction = min(visible / solo, 1.0)
        if fraction < min_visibility:
            return
        bbox = _bbox(mask)
        objects.append(ObjectAnnotation(class_id, instance_id, bbox, int(visible), float(fraction),
                                        tuple(float(x) for x in origin[:3, 3])))

    for c in sorted(characters):
        members = characters[c]
        body = next((m for m in members if m.class_id == HUMAN_CLASS_ID), None)
        if body is None:
            continue
        ids = [m.instance_id for m in members]
        visible = sum(counts.get(i, 0) for i in ids)
        if visible:
            solo = buffers.human_coverage.get(c, visible)
            emit(HUMAN_CLASS_ID, body.instance_id, np.isin(buffers.instance_seg, ids), visible, solo, body.transform)
    for inst in instances:
        if inst.class_id == HUMAN_CLASS_ID or inst.class_id not in ANNOTATED_CLASSES:
            continue
        visible = counts.get(inst.instance_id, 0)
        if visible:
            solo = buffers.solo_coverage.get(inst.instance_id, visible)
            emit(inst.class_id, inst.instance_id, buffers.instance_seg == inst.instance_id, visible, solo,
                 inst.transform)
    return FrameAnnotation(spec.frame_index, spec.camera, tuple(objects), spec.seed, spec.mode)


# ---------------------------------------------------------------------------
# JSON records


def camera_to_dict(camera: CameraModel) -> dict:
    return {
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "width": camera.width, "height": camera.height,
        "world_to_camera": [list(row) for row in camera.world_to_camera],
    }


def camera_from_dict(d: dict) -> CameraModel:
    return CameraModel(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]), int(d["width"]),
                       int(d["height"]), tuple(tuple(float(x) for x in row) for row in d["world_to_camera"]))


def annotation_to_dict(a: FrameAnnotation) -> dict:
    return {
        "frame_index": a.frame_index,
        "mode": a.mode,
        "seed": a.seed,
        "camera": camera_to_dict(a.camera),
        "objects": [
            {
                "class_id": o.class_id,
                "class_name": class_name(o.class_id),
                "instance_id": o.instance_id,
                "bbox": o.bbox.as_list(),
                "visibility": o.visibility_fraction,
                "visible_pixels": o.visible_pixels,
                "world_position": list(o.world_position),
            }
            for o in a.objects
        ],
    }


def annotation_from_dict(d: dict) -> FrameAnnotation:
    objects = tuple(
        ObjectAnnotation(int(o["class_id"]), int(o["instance_id"]), BoundingBox2D(*(int(v) for v in o["bbox"])),
                         int(o.get("visible_pixels", 1)), float(o["visibility"]),
                         tuple(float(x) for x in o["world_position"]))
        for o in d["objects"]
    )
    return FrameAnnotation(int(d["frame_index"]), camera_from_dict(d["camera"]), objects, int(d["seed"]), d["mode"])


def export_frame(annotation: FrameAnnotation, path: str | Path) -> Path:
    path = Path(path)
    try:
        with open(path, "w") as fh:
            json.dump(annotation_to_dict(annotation), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write annotation {path}: {exc.strerror}") from None
    return path


def read_frame(path: str | Path) -> FrameAnnotation:
    try:
        with open(path) as fh:
            return annotation_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ValidationError(f"cannot read annotation {path}: {exc}") from None


# ---------------------------------------------------------------------------
# manifests


def frame_stem(split: str, frame_index: int) -> str:
    return f"{split}/{frame_index:06d}"


def frame_entry(annotation: FrameAnnotation, split: str, with_buffers: bool = True) -> ManifestEntry:
    stem = frame_stem(split, annotation.frame_index)
    files = {k: f"{stem}.{k}.png" for k in ("rgb", "depth", "cls", "inst")} if with_buffers else {"rgb": f"{stem}.rgb.png"}
    return ManifestEntry(stem, split, annotation.mode, f"{stem}.json", files)


def coco_document(frames: Sequence[FrameAnnotation], split: str = "train") -> dict:
    images, annotations = [], []
    for f in frames:
        images.append({"id": f.frame_index, "file_name": f"{frame_stem(split, f.frame_index)}.rgb.png",
                       "width": f.camera.width, "height": f.camera.height})
        for o in f.objects:
            annotations.append({
                "id": len(annotations) + 1,
                "image_id": f.frame_index,
                "category_id": o.class_id,
                "bbox": o.bbox.as_xywh(),
                "area": o.bbox.area,
                "iscrowd": 0,
                "instance_id": o.instance_id,
                "visibility": o.visibility_fraction,
            })
    categories = [{"id": i, "name": n} for i, n in enumerate(CLASS_NAMES)]
    return {"images": images, "annotations": annotations, "categories": categories}


def export_manifest(
    frames: Sequence[FrameAnnotation],
    fmt: str,
    path: str | Path,
    split: str = "train",
    name: str = "dataset",
    with_buffers: bool = True,
) -> Path:
    """Write a native manifest (frame files + split tags) or a coco-like document."""
    if not frames:
        raise ValidationError("manifest needs at least one frame")
    indices = [f.frame_index for f in frames]
    if len(set(indices)) != len(indices):
        raise ValidationError("duplicate frame_index in manifest")
    path = Path(path)
    if fmt == "native":
        manifest = DatasetManifest(name, tuple(frame_entry(f, split, with_buffers) for f in frames))
        manifest.save(path)
    elif fmt in ("coco", "coco_like"):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(coco_document(frames, split), fh, indent=1)
            fh.write("\n")
    else:
        raise ValidationError(f"unknown manifest format {fmt!r}")
    return path
