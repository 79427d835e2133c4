"""Command-line entry point: ``medsynth <subcommand> ...``.

Every flag can also come from the environment as ``MEDSYNTH_<FLAG>`` (upper
case, dashes as underscores), e.g. ``MEDSYNTH_SEED=7``; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .annotate import read_frame
from .augment import ChromaKeyConfig, LabeledImage, MosaicConfig, green_channel_aug, mosaic
from .clothing import load_rgb
from .dataset import SPLITS, DatasetManifest, ManifestEntry, format_stats, split
from .errors import MedsynthError
from .evaluation import DEFAULT_CONF, DEFAULT_IOU, evaluate, format_report, load_predictions
from .pipeline import MANIFEST_NAME, composite_directory, generate
from .procedural import write_demo_assets
from .scene import derive_seed

ENV_PREFIX = "MEDSYNTH_"
log = logging.getLogger("medsynth")


def _env(flag: str, default=None, cast=str):
    value = os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))
    if value is None:
        return default
    try:
        return cast(value)
    except ValueError:
        raise SystemExit(f"error: bad value for {ENV_PREFIX}{flag.upper()}: {value!r}") from None


def _floats(n: int):
    def parse(text: str) -> tuple[float, ...]:
        parts = [float(p) for p in text.replace(",", " ").split()]
        if len(parts) != n:
            raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}")
        return tuple(parts)
    return parse


def _load_manifest(path: str | Path) -> tuple[DatasetManifest, Path]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    return DatasetManifest.load(path), path.parent


# ---------------------------------------------------------------------------
# subcommands


def cmd_make_assets(args) -> int:
    configs = write_demo_assets(args.out, seed=args.seed, image_size=(args.size, args.size))
    for key, path in sorted(configs.items()):
        print(f"{key}: {path}")
    return 0


def cmd_generate(args) -> int:
    if args.config is None:
        raise MedsynthError("--config is required")
    result = generate(args.config, args.out, args.count, args.seed, args.threads, args.split,
                      args.start_index, args.format)
    manifest = DatasetManifest.load(result.manifest_path)
    manifest.validate_files(result.manifest_path.parent)
    print(f"wrote {len(result.frames)} frames to {Path(args.out) / args.split} "
          f"({result.frames_per_second:.2f} frames/s)")
    return 0


def cmd_composite(args) -> int:
    cfg = ChromaKeyConfig(args.dominance, args.min_level, args.softness)
    manifest = composite_directory(args.foreground, args.background, args.out, args.seed, cfg, args.split)
    print(f"composited {len(manifest.entries)} frames into {args.out}")
    return 0


def cmd_split(args) -> int:
    manifest, _ = _load_manifest(args.manifest)
    result = split(list(manifest.entries), args.ratios, args.seed, args.group, args.counts, manifest.name)
    out = Path(args.out) if args.out else Path(args.manifest)
    if out.is_dir():
        out = out / MANIFEST_NAME
    result.save(out)
    print(format_stats({result.name: result}))
    return 0


def cmd_stats(args) -> int:
    manifests = {}
    for path in args.manifests:
        m, _ = _load_manifest(path)
        manifests[m.name if m.name not in manifests else str(path)] = m
    print(format_stats(manifests))
    return 0


def _labels_from_annotation(path: Path) -> tuple[np.ndarray, np.ndarray]:
    ann = read_frame(path)
    boxes = np.array([o.bbox.as_list() for o in ann.objects], dtype=np.float64).reshape(-1, 4)
    labels = np.array([o.class_id for o in ann.objects], dtype=np.int64)
    return boxes, labels


def cmd_augment(args) -> int:
    manifest, root = _load_manifest(args.manifest)
    out = Path(args.out)
    entries = [e for e in manifest.entries
               if (args.target_mode is None or e.mode == args.target_mode)
               and (args.split is None or e.split == args.split) and "rgb" in e.files]
    if not entries:
        raise MedsynthError("no manifest entries match the augmentation target")
    new_entries = []
    if args.op == "green":
        lo, hi = args.factor_range
        for i, e in enumerate(entries):
            img = green_channel_aug(load_rgb(root / e.files["rgb"]), derive_seed(args.seed, i),
                                    args.probability, (lo, hi))
            target = out / f"{e.id}.rgb.png"
            target.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(img).save(target, compress_level=3)
            files = {"rgb": f"{e.id}.rgb.png"}
            annotation = None
            if e.annotation:
                annotation = f"{e.id}.json"
                (out / annotation).write_bytes((root / e.annotation).read_bytes())
            new_entries.append(ManifestEntry(e.id, e.split, e.mode, annotation, files, e.group))
    else:
        cfg = MosaicConfig(args.alpha, args.beta, (args.size, args.size))
        order = np.random.default_rng(args.seed).permutation(len(entries))
        groups = [order[k:k + 4] for k in range(0, len(order) - 3, 4)]
        if not groups:
            raise MedsynthError("mosaic needs at least 4 images")
        for g, members in enumerate(groups):
            items = []
            for k in members:
                e = entries[k]
                boxes, labels = (_labels_from_annotation(root / e.annotation) if e.annotation
                                 else (np.zeros((0, 4)), np.zeros(0, dtype=np.int64)))
                items.append(LabeledImage(load_rgb(root / e.files["rgb"]), boxes, labels))
            result = mosaic(items, cfg, derive_seed(args.seed, g))
            stem = f"mosaic/{g:06d}"
            (out / "mosaic").mkdir(parents=True, exist_ok=True)
            Image.fromarray(result.image).save(out / f"{stem}.rgb.png", compress_level=3)
            with open(out / f"{stem}.labels.json", "w") as fh:
                json.dump({"sources": [entries[k].id for k in members],
                           "boxes": result.boxes.tolist(), "labels": result.labels.tolist()}, fh, indent=1)
                fh.write("\n")
            new_entries.append(ManifestEntry(stem, "train", entries[members[0]].mode, None,
                                             {"rgb": f"{stem}.rgb.png", "labels": f"{stem}.labels.json"}))
    DatasetManifest(f"{manifest.name}-{args.op}", tuple(new_entries)).save(out / MANIFEST_NAME)
    print(f"wrote {len(new_entries)} augmented images to {out}")
    return 0


def cmd_evaluate(args) -> int:
    manifest, root = _load_manifest(args.manifest)
    frames = {}
    for e in manifest.split_entries(args.split):
        if e.annotation is None:
            raise MedsynthError(f"entry {e.id} has no annotation")
        frames[e.id] = read_frame(root / e.annotation)
    if not frames:
        raise MedsynthError(f"manifest has no {args.split} entries")
    report = evaluate(frames, load_predictions(args.predictions), args.conf_threshold, args.iou_threshold)
    print(format_report({args.name: report}), end="")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({args.name: report.to_dict()}, fh, indent=1)
            fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="medsynth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--seed", type=int, default=_env("seed", 0, int))
        out_default = _env("out")
        sp.add_argument("--out", default=out_default, required=out_required and out_default is None)

    sp = sub.add_parser("make-assets", help="write the procedural demo asset bundle and configs")
    common(sp)
    sp.add_argument("--size", type=int, default=_env("size", 896, int), help="frame size in the configs")
    sp.set_defaults(func=cmd_make_assets)

    sp = sub.add_parser("generate", help="render a DR or SDR dataset")
    common(sp)
    sp.add_argument("--config", default=_env("config"))
    sp.add_argument("--count", type=int, default=_env("count", 10, int))
    sp.add_argument("--threads", type=int, default=_env("threads", 1, int))
    sp.add_argument("--split", choices=SPLITS, default=_env("split", "train"))
    sp.add_argument("--start-index", type=int, default=_env("start-index", 0, int))
    sp.add_argument("--format", choices=("native", "coco"), default=_env("format", "native"))
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("composite", help="replace greenscreen backgrounds (mixed-reality data)")
    common(sp)
    sp.add_argument("--foreground", required=True)
    sp.add_argument("--background", required=True)
    sp.add_argument("--split", choices=SPLITS, default="train")
    sp.add_argument("--dominance", type=float, default=ChromaKeyConfig.dominance)
    sp.add_argument("--min-level", type=int, default=ChromaKeyConfig.min_level)
    sp.add_argument("--softness", type=float, default=ChromaKeyConfig.softness)
    sp.set_defaults(func=cmd_composite)

    sp = sub.add_parser("split", help="assign train/val/test splits to a manifest")
    common(sp, out_required=False)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--ratios", type=_floats(3), default=(0.6, 0.1, 0.3))
    sp.add_argument("--counts", type=_floats(3), default=None, help="explicit unit counts instead of ratios")
    sp.add_argument("--group", action="store_true", help="split by entry group key (e.g. person)")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("augment", help="green-channel or mosaic augmentation of a manifest")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--op", choices=("green", "mosaic"), required=True)
    sp.add_argument("--target-mode", default=None, help="only entries of this mode (e.g. MR)")
    sp.add_argument("--split", default=None)
    sp.add_argument("--probability", type=float, default=0.5)
    sp.add_argument("--factor-range", type=_floats(2), default=(0.6, 1.4))
    sp.add_argument("--alpha", type=float, default=20.0)
    sp.add_argument("--beta", type=float, default=20.0)
    sp.add_argument("--size", type=int, default=896)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("evaluate", help="score predictions against a manifest split")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--split", choices=SPLITS, default="test")
    sp.add_argument("--conf-threshold", type=float, default=_env("conf-threshold", DEFAULT_CONF, float))
    sp.add_argument("--iou-threshold", type=float, default=_env("iou-threshold", DEFAULT_IOU, float))
    sp.add_argument("--name", default="predictions", help="experiment name in the report")
    sp.add_argument("--out", default=None, help="also write the report as JSON")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("stats", help="per-split counts of one or more manifests")
    sp.add_argument("manifests", nargs="+")
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "counts", None) is not None:
        args.counts = tuple(int(c) for c in args.counts)
    try:
        return args.func(args)
    except (MedsynthError, OSError, ValueError, TypeError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
