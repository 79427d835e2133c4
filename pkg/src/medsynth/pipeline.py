"""Batch workflows: dataset generation and greenscreen compositing."""

from __future__ import annotations

import json
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .annotate import (
    DEFAULT_MIN_VISIBILITY,
    FrameAnnotation,
    annotate_frame,
    coco_document,
    export_frame,
    frame_entry,
)
from .assets import AssetLibrary
from .augment import ChromaKeyConfig, chroma_composite
from .clothing import load_rgb
from .dataset import DatasetManifest, ManifestEntry
from .errors import ConfigurationError
from .render import render_frame, write_buffers
from .scene import RandomizationConfig, compose, derive_seed, load_config

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class GenerationResult:
    frames: list[FrameAnnotation]
    manifest_path: Path
    seconds: float

    @property
    def frames_per_second(self) -> float:
        return len(self.frames) / self.seconds if self.seconds > 0 else float("inf")


def render_and_write(config: RandomizationConfig, library: AssetLibrary, frame_index: int, seed: int,
                     split_dir: Path, min_visibility: float) -> FrameAnnotation:
    spec = compose(config, frame_index, seed)
    buffers, instances = render_frame(spec, library)
    annotation = annotate_frame(buffers, spec, instances, min_visibility)
    write_buffers(buffers, split_dir, frame_index)
    export_frame(annotation, split_dir / f"{frame_index:06d}.json")
    return annotation


def generate(
    config: RandomizationConfig | str | Path,
    out: str | Path,
    count: int,
    seed: int,
    threads: int = 1,
    split: str = "train",
    start_index: int = 0,
    fmt: str = "native",
    name: str | None = None,
) -> GenerationResult:
    """Render ``count`` frames into ``out/{split}`` and write/merge ``out/manifest.json``.

    Frames are independent, so they run on a thread pool; the manifest lists
    them by frame index whatever order they finish in.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    if not isinstance(config, RandomizationConfig):
        config = load_config(config)
    config.validate()
    out = Path(out)
    split_dir = out / split
    split_dir.mkdir(parents=True, exist_ok=True)
    library = AssetLibrary(config)
    min_vis = config.min_visibility if config.min_visibility is not None else DEFAULT_MIN_VISIBILITY
    indices = range(start_index, start_index + count)

    t0 = time.perf_counter()
    if threads == 1:
        frames = [render_and_write(config, library, i, seed, split_dir, min_vis) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = list(pool.map(lambda i: render_and_write(config, library, i, seed, split_dir, min_vis), indices))
    seconds = time.perf_counter() - t0
    log.info("rendered %d frames in %.2f s", count, seconds)

    manifest_path = out / MANIFEST_NAME
    entries = [frame_entry(f, split) for f in frames]
    if manifest_path.exists():
        manifest = DatasetManifest.load(manifest_path).merged(entries)
    else:
        manifest = DatasetManifest(name or "dataset", ()).merged(entries)
    manifest.save(manifest_path)
    if fmt in ("coco", "coco_like"):
        with open(out / f"{split}.coco.json", "w") as fh:
            json.dump(coco_document(frames, split), fh, indent=1)
            fh.write("\n")
    elif fmt != "native":
        raise ConfigurationError(f"unknown format {fmt!r}")
    return GenerationResult(frames, manifest_path, seconds)


def _images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


def composite_directory(
    foreground_dir: str | Path,
    background_dir: str | Path,
    out: str | Path,
    seed: int,
    cfg: ChromaKeyConfig = ChromaKeyConfig(),
    split: str = "train",
) -> DatasetManifest:
    """Composite every greenscreen frame over a seeded random background.

    Foregrounds in sub-directories keep the sub-directory name as their group
    key (one directory per recorded person). A ``<stem>.json`` annotation next
    to a foreground is copied unchanged.
    """
    fg_dir, bg_dir, out = Path(foreground_dir), Path(background_dir), Path(out)
    foregrounds = _images(fg_dir)
    if not foregrounds:
        raise ConfigurationError(f"no foreground images in {fg_dir}")
    backgrounds = _images(bg_dir) if bg_dir.is_dir() else []
    if not backgrounds:
        raise ConfigurationError(f"no background images in {bg_dir}")
    entries = []
    for i, fg_path in enumerate(foregrounds):
        rng = np.random.default_rng(derive_seed(seed, i))
        bg_path = backgrounds[int(rng.integers(len(backgrounds)))]
        rel = fg_path.relative_to(fg_dir)
        target = out / split / rel.with_suffix(".png")
        target.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(chroma_composite(load_rgb(fg_path), load_rgb(bg_path), cfg)).save(target, compress_level=3)
        stem = rel.with_suffix("").as_posix()
        files = {"rgb": f"{split}/{stem}.png"}
        annotation = None
        src_ann = fg_path.with_suffix(".json")
        if src_ann.is_file():
            shutil.copyfile(src_ann, out / split / f"{stem}.json")
            annotation = f"{split}/{stem}.json"
        group = rel.parent.as_posix() if rel.parent != Path(".") else None
        entries.append(ManifestEntry(f"{split}/{stem}", split, "MR", annotation, files, group))
    manifest = DatasetManifest("mr", tuple(entries))
    manifest.save(out / MANIFEST_NAME)
    return manifest

