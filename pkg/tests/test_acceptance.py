"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import dataclasses
import hashlib
import math
import time
from pathlib import Path

import numpy as np
import pytest

from medsynth.annotate import annotate_frame
from medsynth.assets import AssetLibrary
from medsynth.augment import (
    ChromaKeyConfig,
    LabeledImage,
    MosaicConfig,
    chroma_composite,
    green_channel_aug,
    mosaic,
    sample_mosaic_center,
)
from medsynth.body_model import (
    Joint,
    Pose,
    ShapeBasis,
    Skeleton,
    TemplateMesh,
    apply_shape,
    forward_kinematics,
    quat_from_axis_angle,
    skin_mesh,
)
from medsynth.classes import BACKGROUND_CLASS, CLASS_NAMES
from medsynth.cli import main
from medsynth.dataset import ManifestEntry, split
from medsynth.evaluation import evaluate, format_report
from medsynth.pipeline import generate
from medsynth.render import render_frame
from medsynth.scene import compose, load_config

from oracles import (
    KNOWN_DETS,
    KNOWN_GTS,
    KNOWN_OVERALL,
    KNOWN_PER_CLASS,
    evaluate_brute,
    frames_from_boxes,
    random_instance,
    records,
)


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail
    return emit


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def test_criterion_01_report_layout_and_known_metrics(verdict):
    report = evaluate(frames_from_boxes(KNOWN_GTS), records(KNOWN_DETS))
    errors = [abs(report.overall[k] - v) for k, v in KNOWN_OVERALL.items()]
    for name, want in KNOWN_PER_CLASS.items():
        got = report.per_class[name]
        if want is None or got is None:
            errors.append(0.0 if want is None and got is None else 1.0)
        else:
            errors.extend(abs(a - b) for a, b in zip((got.ap, got.ap50, got.precision, got.recall), want))
    lines = format_report({"fixture": report}).splitlines()
    titles = [lines[i].strip() for i in range(1, len(lines), 2)]
    layout_ok = (lines[0].split() == ["Experiment", "mAP", "mAP50", "P", "R"]
                 and titles == ["all", "Body", "Gown", "Shirt", "Pants", "Hat", "Mask", "Glove"]
                 and all(len(lines[i].split()) == 5 for i in range(2, len(lines), 2)))
    worst = max(errors)
    verdict(1, "report layout + known-metric fixture", layout_ok and worst <= 1e-9,
            f"layout {'ok' if layout_ok else 'wrong'}, max metric error {worst:.1e}")


def test_criterion_02_evaluator_matches_brute_force(verdict):
    rng = np.random.default_rng(2024)
    instances = [random_instance(rng) for _ in range(200)]
    mismatches = 0
    greedy_seconds = 0.0
    for num_classes, gts, dets in instances:
        frames, preds = frames_from_boxes(gts), records(dets)
        t0 = time.perf_counter()
        report = evaluate(frames, preds, classes=CLASS_NAMES[:num_classes])
        greedy_seconds += time.perf_counter() - t0
        per_class, overall = evaluate_brute(gts, dets, num_classes, 0.2, 0.5, report.iou_thresholds)
        for c in range(num_classes):
            m = report.per_class[CLASS_NAMES[c]]
            got = None if m is None else (m.ap, m.ap50, m.precision, m.recall)
            mismatches += got != per_class[c]
        mismatches += tuple(report.overall[k] for k in ("mAP", "mAP50", "P", "R")) != overall
    verdict(2, "greedy evaluator == exhaustive oracle", mismatches == 0 and greedy_seconds < 10.0,
            f"200 instances, {mismatches} mismatches, evaluator time {greedy_seconds:.2f} s")


def test_criterion_03_skinning_and_shape(verdict, male_body):
    sk = male_body.skeleton
    rest = skin_mesh(male_body.mesh, male_body.weights, sk, Pose.identity(sk.joint_count))
    round_trip = float(np.abs(rest.vertices - male_body.mesh.vertices).max())

    rng = np.random.default_rng(3)
    mesh = male_body.mesh
    basis = ShapeBasis(rng.normal(scale=0.05, size=male_body.basis.displacements.shape))
    linearity = 0.0
    for _ in range(100):
        c1, c2 = rng.normal(size=10), rng.normal(size=10)
        a, b = rng.uniform(-3, 3, 2)
        lhs = apply_shape(mesh, basis, a * c1 + b * c2).vertices - mesh.vertices
        rhs = (a * (apply_shape(mesh, basis, c1).vertices - mesh.vertices)
               + b * (apply_shape(mesh, basis, c2).vertices - mesh.vertices))
        linearity = max(linearity, float(np.abs(lhs - rhs).max()))

    chain = Skeleton((Joint("root", -1, (0.0, 0.0, 0.0)), Joint("child", 0, (1.0, 0.0, 0.0))))
    pose = Pose(np.array([quat_from_axis_angle((0, 0, 1), math.pi / 2), [1.0, 0, 0, 0]]), np.zeros(3))
    fk = float(np.abs(forward_kinematics(chain, pose)[1, :3, 3] - (0.0, 1.0, 0.0)).max())
    ok = round_trip <= 1e-6 and linearity <= 1e-6 and fk <= 1e-6
    verdict(3, "skinning / shape correctness", ok,
            f"rest round trip {round_trip:.1e}, linearity {linearity:.1e} over 100 pairs, 2-joint FK {fk:.1e}")


def _pixel_scan_box(mask):
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return None
    return [int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1]


def test_criterion_04_ground_truth_tightness(verdict, small_dr_config, small_sdr_config):
    rng = np.random.default_rng(4)
    libraries = {"DR": AssetLibrary(small_dr_config), "SDR": AssetLibrary(small_sdr_config)}
    configs = {"DR": small_dr_config, "SDR": small_sdr_config}
    boxes = box_errors = coupling_errors = 0
    for k in range(100):
        mode = "DR" if k % 2 == 0 else "SDR"
        spec = compose(configs[mode], int(rng.integers(0, 100_000)), int(rng.integers(0, 2**31)))
        buffers, instances = render_frame(spec, libraries[mode])
        ann = annotate_frame(buffers, spec, instances, 0.0)
        empty = buffers.instance_seg == 0
        coupling_errors += int((empty != (buffers.class_seg == BACKGROUND_CLASS)).sum())
        coupling_errors += int((empty != (buffers.depth == 0)).sum())
        for o in ann.objects:
            if o.class_id == 0:
                owner = _character_of(instances, o)
                ids = [i.instance_id for i in instances if i.character == owner]
                mask = np.isin(buffers.instance_seg, ids)
            else:
                mask = buffers.instance_seg == o.instance_id
            boxes += 1
            box_errors += o.bbox.as_list() != _pixel_scan_box(mask)
    verdict(4, "ground-truth tightness", box_errors == 0 and coupling_errors == 0 and boxes > 0,
            f"100 frames, {boxes} boxes, {box_errors} box mismatches, {coupling_errors} sentinel mismatches")


def _character_of(instances, obj):
    return next(i.character for i in instances if i.instance_id == obj.instance_id)


def test_criterion_05_determinism(verdict, demo_root, tmp_path):
    cfg = str(demo_root / "configs" / "dr_cad.json")
    hashes = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["generate", "--config", cfg, "--out", str(out), "--seed", "42", "--count", "25"]) == 0
        hashes.append(tree_hash(out))
    from PIL import Image

    with Image.open(tmp_path / "a" / "train" / "000000.rgb.png") as im:
        size = im.size
    ok = hashes[0] == hashes[1] and size == (896, 896)
    verdict(5, "byte-identical reruns", ok, f"{size[0]}x{size[1]}, tree hashes {hashes[0][:12]} / {hashes[1][:12]}")


def test_criterion_06_throughput(verdict, demo_root, tmp_path):
    config = load_config(demo_root / "configs" / "dr_scans.json")
    library = AssetLibrary(config)
    tris = [sum(len(i.mesh.triangles) for i in render_frame(compose(config, k, 1), library)[1]) for k in range(3)]
    result = generate(config, tmp_path / "bench", 100, 1, threads=1)
    fps = result.frames_per_second
    verdict(6, "throughput", fps >= 1.0,
            f"{fps:.2f} frames/s over 100 frames at 896x896, ~{int(np.mean(tris))} triangles/scene, single thread")


def test_criterion_07_split_tooling(verdict):
    real_split = split([ManifestEntry(f"k{i:04d}") for i in range(1101)], (0.6, 0.1, 0.3), seed=0).counts()
    persons = [ManifestEntry(f"p{p}/{i:03d}", mode="MR", group=f"p{p}") for p in range(10) for i in range(30)]
    grouped = split(persons, (0.8, 0.2, 0.0), seed=0, group_by_key=True)
    groups = {s: len({e.group for e in grouped.entries if e.split == s}) for s in ("train", "val", "test")}
    ok = (real_split["train"], real_split["val"], real_split["test"]) == (660, 110, 331) and \
        (groups["train"], groups["val"], groups["test"]) == (8, 2, 0)
    verdict(7, "split tooling", ok,
            f"1101 -> {real_split['train']}/{real_split['val']}/{real_split['test']}, "
            f"10 persons -> {groups['train']}/{groups['val']}/{groups['test']}")


def test_criterion_08_mosaic_statistics(verdict):
    cfg = MosaicConfig(20.0, 20.0, (96, 96))
    rng = np.random.default_rng(8)
    centres = np.array([sample_mosaic_center(cfg, rng) for _ in range(1000)])
    closed_std = math.sqrt(20 * 20 / ((40 ** 2) * 41))
    mean_dev = float(np.abs(centres.mean(axis=0) - 0.5).max())
    std_dev = float(np.abs(centres.std(axis=0) - closed_std).max())

    outside = 0
    total = 0
    for seed in range(1000):
        items = []
        for _ in range(4):
            h, w = (int(v) for v in rng.integers(24, 80, 2))
            x0 = rng.uniform(0, w - 3, 3)
            y0 = rng.uniform(0, h - 3, 3)
            b = np.column_stack([x0, y0, np.minimum(x0 + rng.uniform(2, 40, 3), w),
                                 np.minimum(y0 + rng.uniform(2, 40, 3), h)])
            items.append(LabeledImage(np.zeros((h, w, 3), np.uint8), b, [0, 1, 2]))
        out = mosaic(items, cfg, seed)
        b = out.boxes
        total += len(b)
        outside += int(((b[:, 0] < 0) | (b[:, 1] < 0) | (b[:, 2] > 96) | (b[:, 3] > 96)).sum())
    ok = mean_dev <= 0.02 and std_dev <= 0.015 and outside == 0
    verdict(8, "mosaic centre statistics", ok,
            f"|mean-0.5| {mean_dev:.4f}, |std-{closed_std:.4f}| {std_dev:.4f}, {outside}/{total} boxes outside")


def test_criterion_09_chroma_fixtures(verdict):
    rng = np.random.default_rng(9)
    bg = rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
    green = np.zeros_like(bg)
    green[..., 1] = 255
    free = rng.integers(0, 256, bg.shape, dtype=np.uint8)
    free[..., 1] = np.minimum(free[..., 1], np.maximum(free[..., 0], free[..., 2]))
    a = np.array_equal(chroma_composite(green, bg, ChromaKeyConfig(softness=0.0)), bg)
    b = np.array_equal(chroma_composite(free, bg, ChromaKeyConfig(softness=0.0)), free)
    c = np.array_equal(chroma_composite(free, bg, ChromaKeyConfig()), free)
    verdict(9, "chroma-key fixtures", a and b and c,
            f"pure green -> background {'exact' if a else 'differs'}, "
            f"green-free unchanged {'exact' if b and c else 'differs'}")


def test_criterion_10_green_identities(verdict):
    rng = np.random.default_rng(10)
    failures = 0
    for seed in range(200):
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        failures += not np.array_equal(green_channel_aug(img, seed, probability=0.0), img)
        failures += not np.array_equal(green_channel_aug(img, seed, probability=1.0, factor_range=(1.0, 1.0)), img)
    verdict(10, "green-channel identities", failures == 0, f"200 images x 2 identities, {failures} differences")
