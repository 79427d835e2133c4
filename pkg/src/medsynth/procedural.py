"""Procedural stand-in assets: a capsule human rig, fitted garments, textures, a room.

Real projects feed scanned or designed assets through the same file formats;
these generators exist so the pipeline and its tests run without licensed
body models. Everything is deterministic in its ``seed`` argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .body_model import (
    AnimationClip,
    Joint,
    ParametricBody,
    Pose,
    ShapeBasis,
    Skeleton,
    SkinWeights,
    TemplateMesh,
    quat_from_axis_angle,
    quat_multiply,
    save_body,
    save_clip,
)
from .classes import GARMENT_CLASSES
from .clothing import save_garment_mesh
from .primitives import TubeGeometry, grid, merge, tube

NUM_SHAPE_COEFFS = 10
ATLAS_COLS = 5
ATLAS_ROWS = 4

_PROPORTIONS = {
    "male": dict(pelvis_y=0.95, spine=0.12, chest=0.18, neck=0.22, head=0.08, shoulder_x=0.18,
                 shoulder_y=0.16, upper_arm=0.28, forearm=0.25, palm=0.09, finger=0.045, tip=0.04,
                 hip_x=0.09, hip_y=-0.06, thigh=0.42, shin=0.42, hip_r=0.165, chest_r=0.17, depth=0.11),
    "female": dict(pelvis_y=0.90, spine=0.11, chest=0.17, neck=0.20, head=0.075, shoulder_x=0.16,
                   shoulder_y=0.15, upper_arm=0.26, forearm=0.23, palm=0.08, finger=0.04, tip=0.035,
                   hip_x=0.095, hip_y=-0.06, thigh=0.40, shin=0.40, hip_r=0.175, chest_r=0.155, depth=0.11),
}


def _profile(points: list[tuple[float, float]]) -> Callable[[np.ndarray], np.ndarray]:
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    return lambda s: np.interp(s, xs, ys)


@dataclass
class Segment:
    """One capsule of the rig; ``weights`` are (s, {joint: w}) control points."""

    name: str
    p0: np.ndarray
    p1: np.ndarray
    ra: Callable[[np.ndarray], np.ndarray]
    rb: Callable[[np.ndarray], np.ndarray]
    hint: tuple[float, float, float]
    weights: list[tuple[float, dict[str, float]]]
    rings: int
    sides: int
    cell: int
    cap_start: bool = False
    cap_end: bool = False
    # per-coefficient radial displacement amplitude as a function of (s, theta)
    shape: dict[int, Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default_factory=dict)


def _cell_rect(cell: int) -> tuple[float, float, float, float]:
    r, c = divmod(cell, ATLAS_COLS)
    pad = 0.01
    return (c / ATLAS_COLS + pad, r / ATLAS_ROWS + pad, (c + 1) / ATLAS_COLS - pad, (r + 1) / ATLAS_ROWS - pad)


def build_skeleton(gender: str = "male") -> Skeleton:
    p = _PROPORTIONS[gender]
    joints = [
        Joint("pelvis", -1, (0.0, p["pelvis_y"], 0.0)),
        Joint("spine", 0, (0.0, p["spine"], 0.0)),
        Joint("chest", 1, (0.0, p["chest"], 0.0)),
        Joint("neck", 2, (0.0, p["neck"], 0.0)),
        Joint("head", 3, (0.0, p["head"], 0.0)),
    ]
    for side, sign in (("l", 1.0), ("r", -1.0)):
        base = len(joints)
        joints += [
            Joint(f"{side}_shoulder", 2, (sign * p["shoulder_x"], p["shoulder_y"], 0.0)),
            Joint(f"{side}_elbow", base, (sign * p["upper_arm"], 0.0, 0.0)),
            Joint(f"{side}_wrist", base + 1, (sign * p["forearm"], 0.0, 0.0)),
            Joint(f"{side}_finger1", base + 2, (sign * p["palm"], 0.0, 0.0)),
            Joint(f"{side}_finger2", base + 3, (sign * p["finger"], 0.0, 0.0)),
        ]
    for side, sign in (("l", 1.0), ("r", -1.0)):
        base = len(joints)
        joints += [
            Joint(f"{side}_hip", 0, (sign * p["hip_x"], p["hip_y"], 0.0)),
            Joint(f"{side}_knee", base, (0.0, -p["thigh"], 0.0)),
            Joint(f"{side}_ankle", base + 1, (0.0, -p["shin"], 0.0)),
        ]
    return Skeleton(tuple(joints))


def _bump(centre: float, width: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda s: np.exp(-0.5 * ((s - centre) / width) ** 2)


def build_segments(gender: str = "male") -> list[Segment]:
    p = _PROPORTIONS[gender]
    skel = build_skeleton(gender)
    P = dict(zip(skel.names, skel.rest_positions()))
    one = lambda s, th: np.ones_like(s)  # noqa: E731
    front = lambda th: np.clip(-np.sin(th), 0.0, None)  # torso/head frame: front is -b

    segs = [
        Segment(
            "torso", np.array([0.0, p["pelvis_y"] - 0.12, 0.0]), P["neck"],
            _profile([(0, p["hip_r"]), (0.3, p["hip_r"] * 0.82), (0.62, p["chest_r"]),
                      (0.88, p["chest_r"] * 0.95), (1.0, 0.07)]),
            _profile([(0, p["depth"]), (0.35, p["depth"] * 0.9), (0.65, p["depth"] * 1.05),
                      (0.9, p["depth"] * 0.85), (1.0, 0.055)]),
            (1.0, 0.0, 0.0),
            [(0.0, {"pelvis": 1}), (0.22, {"pelvis": 1}), (0.42, {"spine": 1}),
             (0.62, {"spine": 0.5, "chest": 0.5}), (0.75, {"chest": 1}), (1.0, {"chest": 1})],
            20, 18, 0, cap_start=True,
            shape={
                0: lambda s, th: 0.012 * np.ones_like(s),
                1: lambda s, th: 0.03 * _bump(0.4, 0.12)(s) * front(th),
                2: lambda s, th: 0.02 * _bump(0.72, 0.1)(s),
                3: lambda s, th: 0.02 * _bump(0.1, 0.12)(s) * np.abs(np.cos(th)),
                9: lambda s, th: 0.015 * _bump(0.88, 0.08)(s) * np.abs(np.cos(th)),
            },
        ),
        Segment(
            "neck", P["neck"] + (0, -0.03, 0), P["head"] + (0, 0.02, 0),
            lambda s: 0.05 + 0 * s, lambda s: 0.05 + 0 * s, (1.0, 0.0, 0.0),
            [(0.0, {"chest": 0.5, "neck": 0.5}), (0.4, {"neck": 1}), (1.0, {"neck": 0.6, "head": 0.4})],
            4, 12, 1, shape={0: lambda s, th: 0.004 * one(s, th), 8: lambda s, th: 0.01 * one(s, th)},
        ),
        Segment(
            "head", P["head"] + (0, -0.02, 0), P["head"] + (0, 0.23, 0),
            lambda s: 0.092 * np.sqrt(np.clip(np.sin(np.pi * s), 0, 1)) + 0.004,
            lambda s: 0.102 * np.sqrt(np.clip(np.sin(np.pi * s), 0, 1)) + 0.004,
            (1.0, 0.0, 0.0), [(0.0, {"head": 1})], 10, 16, 2,
            shape={7: lambda s, th: 0.01 * np.sqrt(np.clip(np.sin(np.pi * s), 0, 1))},
        ),
    ]
    for side, sign, cell0 in (("l", 1.0, 3), ("r", -1.0, 8)):
        sh, el, wr, f1, f2 = (f"{side}_{n}" for n in ("shoulder", "elbow", "wrist", "finger1", "finger2"))
        tip = P[f2] + (sign * p["tip"], 0, 0)
        arm_shape = {0: lambda s, th: 0.006 * np.ones_like(s), 4: lambda s, th: 0.01 * np.ones_like(s)}
        segs += [
            Segment(f"{side}_upper_arm", P[sh] - (sign * 0.04, 0, 0), P[el],
                    _profile([(0, 0.052), (1, 0.042)]), _profile([(0, 0.055), (1, 0.044)]), (0.0, 1.0, 0.0),
                    [(0.0, {"chest": 0.5, sh: 0.5}), (0.18, {sh: 1}), (0.85, {sh: 1}), (1.0, {sh: 0.5, el: 0.5})],
                    7, 10, cell0,
                    shape={**arm_shape, 9: lambda s, th: 0.012 * _bump(0.0, 0.15)(s)}),
            Segment(f"{side}_forearm", P[el], P[wr],
                    _profile([(0, 0.042), (1, 0.031)]), _profile([(0, 0.044), (1, 0.034)]), (0.0, 1.0, 0.0),
                    [(0.0, {sh: 0.5, el: 0.5}), (0.15, {el: 1}), (0.9, {el: 1}), (1.0, {el: 0.5, wr: 0.5})],
                    7, 10, cell0 + 1, shape=arm_shape),
            Segment(f"{side}_hand", P[wr], P[f1],
                    _profile([(0, 0.02), (1, 0.016)]), _profile([(0, 0.034), (0.5, 0.043), (1, 0.04)]),
                    (0.0, 1.0, 0.0),
                    [(0.0, {el: 0.5, wr: 0.5}), (0.2, {wr: 1}), (1.0, {wr: 0.7, f1: 0.3})], 4, 10, cell0 + 2),
            Segment(f"{side}_finger_prox", P[f1], P[f2],
                    lambda s: 0.014 + 0 * s, lambda s: 0.038 + 0 * s, (0.0, 1.0, 0.0),
                    [(0.0, {wr: 0.3, f1: 0.7}), (0.3, {f1: 1}), (1.0, {f1: 0.6, f2: 0.4})], 3, 10, cell0 + 3),
            Segment(f"{side}_finger_dist", P[f2], tip,
                    _profile([(0, 0.012), (1, 0.008)]), _profile([(0, 0.035), (1, 0.026)]), (0.0, 1.0, 0.0),
                    [(0.0, {f1: 0.4, f2: 0.6}), (0.3, {f2: 1})], 3, 10, cell0 + 4, cap_end=True),
        ]
    for side, sign, cell0 in (("l", 1.0, 13), ("r", -1.0, 16)):
        hip, knee, ankle = (f"{side}_{n}" for n in ("hip", "knee", "ankle"))
        segs += [
            Segment(f"{side}_thigh", P[hip] + (0, 0.06, 0), P[knee],
                    _profile([(0, 0.085), (1, 0.055)]), _profile([(0, 0.085), (1, 0.056)]), (1.0, 0.0, 0.0),
                    [(0.0, {"pelvis": 1}), (0.15, {"pelvis": 0.4, hip: 0.6}), (0.3, {hip: 1}),
                     (0.88, {hip: 1}), (1.0, {hip: 0.5, knee: 0.5})], 9, 12, cell0,
                    shape={0: lambda s, th: 0.01 * np.ones_like(s),
                           3: lambda s, th: 0.015 * _bump(0.0, 0.2)(s),
                           5: lambda s, th: 0.015 * np.ones_like(s)}),
            Segment(f"{side}_shin", P[knee], P[ankle],
                    _profile([(0, 0.05), (0.3, 0.052), (1, 0.035)]), _profile([(0, 0.05), (1, 0.036)]),
                    (1.0, 0.0, 0.0),
                    [(0.0, {hip: 0.5, knee: 0.5}), (0.12, {knee: 1}), (0.92, {knee: 1}),
                     (1.0, {knee: 0.5, ankle: 0.5})], 8, 12, cell0 + 1,
                    shape={0: lambda s, th: 0.006 * np.ones_like(s), 6: lambda s, th: 0.01 * _bump(0.3, 0.25)(s)}),
            Segment(f"{side}_foot", P[ankle] + (0, -0.01, -0.05), P[ankle] + (0, -0.02, 0.16),
                    lambda s: 0.03 + 0 * s, _profile([(0, 0.035), (0.6, 0.045), (1, 0.04)]), (0.0, 1.0, 0.0),
                    [(0.0, {ankle: 1})], 5, 10, cell0 + 2, cap_start=True, cap_end=True),
        ]
    return segs


def _segment_geometry(seg: Segment, s_range=(0.0, 1.0), theta_range=None, inflate=0.0,
                      density=1.0, noise: Callable | None = None) -> TubeGeometry:
    rings = max(2, int(round(seg.rings * density * (s_range[1] - s_range[0]))) + 1)
    sides = max(3, int(round(seg.sides * density)))
    if theta_range is not None:
        sides = max(3, int(round(sides * (theta_range[1] - theta_range[0]) / (2 * np.pi))))
    full = theta_range is None
    return tube(
        seg.p0, seg.p1, rings, sides,
        lambda s: (seg.ra(s) + inflate, seg.rb(s) + inflate),
        hint=seg.hint, s_range=s_range, theta_range=theta_range,
        cap_start=seg.cap_start and full and s_range[0] == 0.0,
        cap_end=seg.cap_end and full and s_range[1] == 1.0,
        uv_rect=_cell_rect(seg.cell),
    )


def _weights_for(seg: Segment, s: np.ndarray, names: list[str]) -> np.ndarray:
    dense = np.zeros((len(s), len(names)))
    xs = np.array([c[0] for c in seg.weights])
    joints = sorted({j for _, d in seg.weights for j in d})
    for j in joints:
        ys = np.array([d.get(j, 0.0) for _, d in seg.weights])
        dense[:, names.index(j)] = np.interp(s, xs, ys)
    return dense


def capsule_human(gender: str = "male") -> ParametricBody:
    """Procedural test character: ~1.7k vertices, 21 joints (2 finger joints per hand)."""
    skel = build_skeleton(gender)
    names = skel.names
    parts, weights, basis = [], [], []
    for seg in build_segments(gender):
        geo = _segment_geometry(seg)
        parts.append((geo.vertices, geo.triangles, geo.uvs))
        weights.append(_weights_for(seg, geo.s, names))
        disp = np.zeros((NUM_SHAPE_COEFFS, len(geo.vertices), 3))
        for k, fn in seg.shape.items():
            disp[k] = fn(geo.s, geo.theta)[:, None] * geo.radial
        basis.append(disp)
    verts, tris, uvs = merge(parts)
    mesh = TemplateMesh.from_arrays(verts, tris, uvs)
    return ParametricBody(
        mesh,
        ShapeBasis(np.concatenate(basis, axis=1)),
        skel,
        SkinWeights.from_dense(np.concatenate(weights)),
        name=f"capsule_{gender}",
        gender=gender,
    )


# ---------------------------------------------------------------------------
# garments

_TWO_PI = 2 * np.pi
# torso/head frames have b = -z, so the front (+z) sits at theta = 3π/2
_FRONT = 1.5 * np.pi

GARMENT_LAYOUT: dict[str, tuple[float, list[tuple[str, tuple[float, float], tuple[float, float] | None]]]] = {
    "gown": (0.024, [("torso", (0.05, 0.97), (_FRONT - 2.1, _FRONT + 2.1)),
                     ("l_upper_arm", (0.0, 1.0), None), ("r_upper_arm", (0.0, 1.0), None),
                     ("l_forearm", (0.0, 0.85), None), ("r_forearm", (0.0, 0.85), None),
                     ("l_thigh", (0.0, 0.75), (0.5 * np.pi - 2.0, 0.5 * np.pi + 2.0)),
                     ("r_thigh", (0.0, 0.75), (0.5 * np.pi - 2.0, 0.5 * np.pi + 2.0))]),
    "shirt": (0.009, [("torso", (0.3, 0.97), None),
                      ("l_upper_arm", (0.0, 0.55), None), ("r_upper_arm", (0.0, 0.55), None)]),
    "pants": (0.011, [("torso", (0.0, 0.33), None), ("l_thigh", (0.0, 1.0), None), ("r_thigh", (0.0, 1.0), None),
                      ("l_shin", (0.0, 0.92), None), ("r_shin", (0.0, 0.92), None)]),
    "hat": (0.011, [("head", (0.58, 1.0), None)]),
    "mask": (0.013, [("head", (0.2, 0.5), (_FRONT - 1.3, _FRONT + 1.3))]),
    "glove": (0.006, [("l_forearm", (0.8, 1.0), None), ("r_forearm", (0.8, 1.0), None),
                      ("l_hand", (0.0, 1.0), None), ("r_hand", (0.0, 1.0), None),
                      ("l_finger_prox", (0.0, 1.0), None), ("r_finger_prox", (0.0, 1.0), None),
                      ("l_finger_dist", (0.0, 1.0), None), ("r_finger_dist", (0.0, 1.0), None)]),
}


def garment_mesh(class_label: str, gender: str = "male", source_kind: str = "designed", seed: int = 0) -> TemplateMesh:
    """Pre-fitted rest-pose garment shell around the capsule human.

    Scanned garments are denser and carry small outward wrinkle noise.
    """
    if class_label not in GARMENT_LAYOUT:
        raise KeyError(class_label)
    inflate, pieces = GARMENT_LAYOUT[class_label]
    segs = {s.name: s for s in build_segments(gender)}
    rng = np.random.default_rng(seed)
    scanned = source_kind == "scanned"
    inflate = inflate * (1.0 + 0.15 * rng.uniform(-1, 1))
    parts = []
    for name, s_range, th_range in pieces:
        seg = segs[name]
        geo = _segment_geometry(seg, s_range, th_range, inflate, density=1.5 if scanned else 1.0)
        verts = geo.vertices
        if scanned:
            f1, f2 = rng.uniform(10, 25, size=2)
            ph1, ph2 = rng.uniform(0, _TWO_PI, size=2)
            wrinkle = 0.5 + 0.25 * np.sin(f1 * geo.s * _TWO_PI + ph1) + 0.25 * np.sin(f2 * geo.theta + ph2)
            verts = verts + (0.004 * wrinkle)[:, None] * geo.radial
        parts.append((verts, geo.triangles, geo.uvs))
    return TemplateMesh.from_arrays(*merge(parts))


# ---------------------------------------------------------------------------
# textures

SKIN_TONES = np.array([
    [241, 194, 167], [224, 172, 138], [198, 134, 103], [161, 102, 74], [120, 75, 52], [88, 56, 40],
], dtype=np.float64)


def _cell_coords(size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel atlas cell index and local (u, v) in [0, 1)."""
    y, x = np.mgrid[0:size, 0:size]
    u = (x + 0.5) / size
    v = (y + 0.5) / size
    col = np.minimum((u * ATLAS_COLS).astype(int), ATLAS_COLS - 1)
    row = np.minimum((v * ATLAS_ROWS).astype(int), ATLAS_ROWS - 1)
    return row * ATLAS_COLS + col, u * ATLAS_COLS - col, v * ATLAS_ROWS - row


def _smooth_noise(rng: np.random.Generator, size: int, scale: int) -> np.ndarray:
    coarse = rng.uniform(-1, 1, size=(scale, scale)).astype(np.float32)
    img = Image.fromarray(coarse, mode="F").resize((size, size), Image.BICUBIC)
    return np.asarray(img, dtype=np.float64)


def human_texture(seed: int, size: int = 128) -> np.ndarray:
    """Skin-toned atlas with undergarments, hair and minimal facial features."""
    rng = np.random.default_rng(seed)
    tone = SKIN_TONES[rng.integers(len(SKIN_TONES))] * rng.uniform(0.92, 1.08)
    img = np.ones((size, size, 3)) * tone
    img *= 1.0 + 0.05 * _smooth_noise(rng, size, 8)[..., None]
    cell, lu, lv = _cell_coords(size)
    under = rng.uniform(20, 235, size=3)
    hair = np.array([[30, 20, 15], [90, 60, 30], [160, 120, 60], [60, 60, 60]])[rng.integers(4)]
    img[(cell == 0) & (lv < 0.3)] = under
    img[np.isin(cell, (13, 16)) & (lv < 0.2)] = under
    img[(cell == 2) & (lv > 0.72)] = hair
    theta = lu * _TWO_PI
    facing = np.abs(theta - _FRONT) < 0.25
    img[(cell == 2) & facing & (np.abs(lv - 0.55) < 0.03) & (np.abs(theta - _FRONT) > 0.08)] = (40, 30, 30)
    img[(cell == 2) & (np.abs(theta - _FRONT) < 0.12) & (np.abs(lv - 0.36) < 0.015)] = (150, 70, 70)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


_GARMENT_BASE = {
    "gown": (70, 110, 170), "shirt": (60, 140, 120), "pants": (60, 140, 120),
    "hat": (80, 120, 180), "mask": (90, 150, 190), "glove": (200, 200, 190),
}


def garment_texture(class_label: str, source_kind: str, seed: int, size: int = 128) -> np.ndarray:
    """Fabric texture; scanned ones carry low-frequency shading from wrinkles and reflections."""
    rng = np.random.default_rng(seed)
    base = np.array(_GARMENT_BASE[class_label], dtype=np.float64)
    img = np.ones((size, size, 3)) * base
    y, x = np.mgrid[0:size, 0:size]
    weave = 0.03 * ((x + y) % 4 < 2)
    img *= (1.0 + weave)[..., None]
    if source_kind == "scanned":
        img *= (1.0 + 0.18 * _smooth_noise(rng, size, 6) + 0.06 * _smooth_noise(rng, size, 24))[..., None]
    else:
        cell, lu, lv = _cell_coords(size)
        seam = (np.abs(lu - 0.5) < 0.02) | (lv < 0.03) | (lv > 0.97)
        img[seam] *= 0.8
        if class_label in ("shirt", "gown"):
            pocket = (cell == 0) & (np.abs(lu - 0.7) < 0.06) & (np.abs(lv - 0.7) < 0.06)
            img[pocket] *= 0.85
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def background_image(seed: int, size: int = 256) -> np.ndarray:
    """Random clutter for DR backdrops: gradient, blobs and stripes."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    c0, c1 = rng.uniform(0, 255, size=(2, 3))
    angle = rng.uniform(0, _TWO_PI)
    t = (np.cos(angle) * x + np.sin(angle) * y + 1) / 2
    img = c0 * (1 - t[..., None]) + c1 * t[..., None]
    for _ in range(rng.integers(3, 9)):
        cx, cy, r = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.05, 0.25)
        img[(x - cx) ** 2 + (y - cy) ** 2 < r * r] = rng.uniform(0, 255, size=3)
    if rng.random() < 0.5:
        freq = rng.uniform(5, 30)
        img *= (0.85 + 0.15 * (np.sin(freq * _TWO_PI * x) > 0))[..., None]
    img *= (1.0 + 0.08 * _smooth_noise(rng, size, 16))[..., None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def pattern_texture(seed: int, size: int = 64) -> np.ndarray:
    """Checker/stripe texture for distractors and room surfaces."""
    rng = np.random.default_rng(seed)
    c0, c1 = rng.uniform(0, 255, size=(2, 3))
    y, x = np.mgrid[0:size, 0:size]
    period = int(rng.integers(4, 17))
    if rng.random() < 0.5:
        mask = ((x // period) + (y // period)) % 2 == 0
    else:
        mask = (x // period) % 2 == 0
    img = np.where(mask[..., None], c0, c1)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def solid_texture(rgb, size: int = 8) -> np.ndarray:
    return np.ones((size, size, 3), dtype=np.uint8) * np.asarray(rgb, dtype=np.uint8)


# ---------------------------------------------------------------------------
# animation


def grasp_clip(skeleton: Skeleton) -> AnimationClip:
    """Reach-and-grasp motion: arms down, reach forward, close fingers, return."""
    names = skeleton.names
    j = len(names)

    def q(axis, deg):
        return quat_from_axis_angle(axis, np.radians(deg))

    def pose(arm_down, reach, elbow, curl, lean, knee):
        rot = np.tile([1.0, 0.0, 0.0, 0.0], (j, 1))
        for side, sign in (("l", 1.0), ("r", -1.0)):
            # lower the arm about z, then swing it forward about y
            down = q((0, 0, 1), -sign * arm_down)
            fwd = q((0, 1, 0), -sign * reach)
            rot[names.index(f"{side}_shoulder")] = quat_multiply(fwd, down)
            rot[names.index(f"{side}_elbow")] = q((0, 1, 0), -sign * elbow)
            rot[names.index(f"{side}_finger1")] = q((0, 0, 1), -sign * curl)
            rot[names.index(f"{side}_finger2")] = q((0, 0, 1), -sign * curl * 1.2)
            rot[names.index(f"{side}_knee")] = q((1, 0, 0), knee)
            rot[names.index(f"{side}_hip")] = q((1, 0, 0), -0.5 * knee)
        rot[names.index("spine")] = q((1, 0, 0), lean)
        return Pose(rot, np.zeros(3))

    poses = [
        pose(75, 0, 10, 10, 0, 0),
        pose(40, 55, 35, 5, 8, 8),
        pose(20, 80, 15, 60, 12, 12),
        pose(45, 50, 60, 70, 6, 5),
        pose(75, 0, 10, 10, 0, 0),
    ]
    return AnimationClip.from_poses(poses, times=[0.0, 0.8, 1.5, 2.3, 3.2], name="grasp")


# ---------------------------------------------------------------------------
# room


def room_meshes(width: float = 7.0, depth: float = 6.0, height: float = 3.0) -> list[tuple[str, tuple, tuple]]:
    """(name, (vertices, triangles, uvs), rgb) for an intervention-room shell plus furniture."""
    hw, hd = width / 2, depth / 2
    items = [
        ("floor", grid((-hw, 0, -hd), (width, 0, 0), (0, 0, depth), 24, 20, (6, 5)), (170, 175, 170)),
        ("ceiling", grid((-hw, height, -hd), (0, 0, depth), (width, 0, 0), 10, 10, (2, 2)), (225, 225, 220)),
        ("wall_n", grid((-hw, 0, -hd), (0, height, 0), (width, 0, 0), 12, 6, (3, 1)), (150, 185, 175)),
        ("wall_s", grid((-hw, 0, hd), (width, 0, 0), (0, height, 0), 12, 6, (3, 1)), (150, 185, 175)),
        ("wall_w", grid((-hw, 0, -hd), (0, 0, depth), (0, height, 0), 10, 6, (3, 1)), (160, 180, 190)),
        ("wall_e", grid((hw, 0, -hd), (0, height, 0), (0, 0, depth), 10, 6, (3, 1)), (160, 180, 190)),
    ]
    # operating table and a cabinet as boxes
    for name, centre, half, rgb in (
        ("table", (0.0, 0.85, -1.6), (1.0, 0.05, 0.35), (120, 130, 140)),
        ("table_base", (0.0, 0.42, -1.6), (0.15, 0.42, 0.15), (90, 95, 100)),
        ("cabinet", (-hw + 0.35, 0.9, 1.0), (0.3, 0.9, 0.6), (200, 205, 210)),
        ("lamp_arm", (0.8, 2.5, -1.2), (0.05, 0.5, 0.05), (210, 210, 210)),
    ):
        parts = []
        c = np.array(centre)
        h = np.array(half)
        for axis in range(3):
            for sign in (-1.0, 1.0):
                u_ax, v_ax = [k for k in range(3) if k != axis]
                origin = c.copy()
                origin[axis] += sign * h[axis]
                origin[u_ax] -= h[u_ax]
                origin[v_ax] -= h[v_ax]
                u = np.zeros(3)
                v = np.zeros(3)
                u[u_ax] = 2 * h[u_ax]
                v[v_ax] = 2 * h[v_ax]
                parts.append(grid(origin, u, v, 2, 2))
        items.append((name, merge(parts), rgb))
    return items


# ---------------------------------------------------------------------------
# demo bundle


def write_png(path: Path, img: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path, compress_level=3)


def write_demo_assets(
    root: str | Path,
    seed: int = 0,
    human_textures_per_gender: int = 69,
    backgrounds: int = 24,
    shape_rows: int = 1700,
    garments_per_gender: int = 2,
    image_size: tuple[int, int] = (896, 896),
) -> dict[str, Path]:
    """Write a complete asset bundle plus DR/SDR configs for both garment sources.

    Returns the config paths keyed ``dr_cad``, ``dr_scans``, ``sdr_cad``, ``sdr_scans``.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    genders = ("male", "female")

    bodies = {}
    for g in genders:
        bodies[g] = capsule_human(g)
        (root / "bodies").mkdir(parents=True, exist_ok=True)
        save_body(bodies[g], root / "bodies" / f"{g}.json")
    (root / "animations").mkdir(parents=True, exist_ok=True)
    save_clip(grasp_clip(bodies["male"].skeleton), root / "animations" / "grasp.json")

    table = np.clip(rng.standard_normal((shape_rows, NUM_SHAPE_COEFFS)) * 0.8, -2.5, 2.5)
    np.savetxt(root / "shapes.csv", table, delimiter=",", fmt="%.6f")

    for g in genders:
        for i in range(human_textures_per_gender):
            write_png(root / "textures" / "human" / g / f"{g}_{i:03d}.png",
                      human_texture(int(rng.integers(2**31)), 128))

    index: dict[str, list[dict]] = {c: [] for c in GARMENT_CLASSES}
    gdir = root / "garments"
    gdir.mkdir(parents=True, exist_ok=True)
    for cls in GARMENT_CLASSES:
        for kind in ("designed", "scanned"):
            for g in genders:
                for i in range(garments_per_gender):
                    stem = f"{cls}_{kind}_{g}_{i}"
                    s = int(rng.integers(2**31))
                    write_png(gdir / "textures" / f"{stem}.png", garment_texture(cls, kind, s, 128))
                    save_garment_mesh(gdir / f"{stem}.json", garment_mesh(cls, g, kind, s), cls, kind,
                                      f"textures/{stem}.png", (g,))
                    index[cls].append({"file": f"{stem}.json", "source_kind": kind, "fits": [g]})
    with open(gdir / "index.json", "w") as fh:
        json.dump({"classes": index}, fh, indent=1)

    for i in range(backgrounds):
        write_png(root / "backgrounds" / f"bg_{i:03d}.png", background_image(int(rng.integers(2**31)), 256))
    for i in range(12):
        write_png(root / "textures" / "distractors" / f"pattern_{i:02d}.png",
                  pattern_texture(int(rng.integers(2**31))))

    rdir = root / "room"
    rdir.mkdir(parents=True, exist_ok=True)
    mesh_entries = []
    for name, (v, t, uv), rgb in room_meshes():
        with open(rdir / f"{name}.json", "w") as fh:
            json.dump({"vertices": v.tolist(), "triangles": t.tolist(), "uvs": uv.tolist()}, fh)
        tex = pattern_texture(int(rng.integers(2**31)), 32) * 0.15 + solid_texture(rgb, 32) * 0.85
        write_png(rdir / f"{name}.png", np.rint(tex).astype(np.uint8))
        mesh_entries.append({"mesh": f"{name}.json", "texture": f"{name}.png"})
    room = {
        "meshes": mesh_entries,
        "placement_polygon": [[-2.0, -0.9], [2.2, -0.9], [2.2, 2.0], [-2.0, 2.0]],
        "ceiling_light_anchors": [[-1.5, 2.95, -1.5], [1.5, 2.95, -1.5], [-1.5, 2.95, 1.5], [1.5, 2.95, 1.5],
                                  [0.0, 2.95, 0.0]],
        "bounds": [[-3.4, 0.2, -2.9], [3.4, 2.8, 2.9]],
    }
    with open(rdir / "room.json", "w") as fh:
        json.dump(room, fh, indent=1)

    configs = {}
    cdir = root / "configs"
    cdir.mkdir(parents=True, exist_ok=True)
    common = {
        "image_size": list(image_size),
        "bodies": {g: f"../bodies/{g}.json" for g in genders},
        "human_textures": {g: f"../textures/human/{g}/*.png" for g in genders},
        "garment_registry": "../garments/index.json",
        "animation_clips": ["../animations/grasp.json"],
        "garment_offset": 0.002,
    }
    for kind, tag in (("designed", "cad"), ("scanned", "scans")):
        dr = dict(common, mode="DR", garment_source=kind, shape_table="../shapes.csv",
                  background_pool="../backgrounds/*.png",
                  distractors={"count": [0, 8], "kinds": ["box", "sphere", "cylinder"],
                               "scale": [0.05, 0.3], "textures": "../textures/distractors/*.png"},
                  camera={"radius": [2.4, 3.6], "elevation_deg": [-5, 25], "azimuth_deg": [0, 360],
                          "fov_deg": [40, 55], "look_at_jitter_deg": 3.0, "target_height": [0.8, 1.2]},
                  lights={"count": [1, 3], "intensity": [0.4, 1.0], "color_temperature": [3000, 8000],
                          "ambient": [0.2, 0.45]})
        sdr = dict(common, mode="SDR", garment_source=kind, room_scene="../room/room.json",
                   camera={"radius": [2.0, 3.2], "height": [1.4, 2.4], "azimuth_deg": [0, 360],
                           "fov_deg": [45, 60], "look_at_jitter_deg": 3.0, "target_height": [0.8, 1.2]},
                   lights={"intensity": [0.12, 0.22], "color_temperature": [4000, 6500], "ambient": [0.25, 0.35]})
        for mode, cfg in (("dr", dr), ("sdr", sdr)):
            path = cdir / f"{mode}_{tag}.json"
            with open(path, "w") as fh:
                json.dump(cfg, fh, indent=1)
            configs[f"{mode}_{tag}"] = path
    return configs
