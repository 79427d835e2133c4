"""Slow, independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np

RECALL_GRID = [i / 100 for i in range(101)]


# ---------------------------------------------------------------------------
# rasterization: cast one ray per pixel centre


def ray_hit(d, a, b, c):
    """Ray from the origin along ``d`` against triangle abc: (t, w_a, w_b, w_c) or None."""
    e1, e2 = b - a, c - a
    p = np.cross(d, e2)
    det = float(np.dot(e1, p))
    if abs(det) < 1e-15:
        return None
    s = -a
    u = float(np.dot(s, p)) / det
    q = np.cross(s, e1)
    v = float(np.dot(d, q)) / det
    t = float(np.dot(e2, q)) / det
    return t, 1.0 - u - v, u, v


def ray_cast(verts_cam, tris, intrinsics, size, near=0.01, margin=1e-7):
    """Per pixel nearest hit (tri index, z, barycentrics) plus a mask of edge-ambiguous pixels."""
    fx, fy, cx, cy = intrinsics
    width, height = size
    tri_id = np.full((height, width), -1)
    zbuf = np.full((height, width), np.inf)
    bary = np.zeros((height, width, 3))
    ambiguous = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            d = np.array([(x + 0.5 - cx) / fx, (y + 0.5 - cy) / fy, 1.0])
            for t_index, (i, j, k) in enumerate(tris):
                hit = ray_hit(d, verts_cam[i], verts_cam[j], verts_cam[k])
                if hit is None:
                    continue
                z, wa, wb, wc = hit
                lo = min(wa, wb, wc)
                if abs(lo) < margin or abs(z - near) < margin:
                    ambiguous[y, x] = True
                if lo < 0 or z < near:
                    continue
                if abs(z - zbuf[y, x]) < margin:
                    ambiguous[y, x] = True
                if z < zbuf[y, x]:
                    zbuf[y, x] = z
                    tri_id[y, x] = t_index
                    bary[y, x] = (wa, wb, wc)
    return tri_id, zbuf, bary, ambiguous


def scan_bbox(mask):
    """Tight box by visiting every pixel: (x_min, y_min, x_max + 1, y_max + 1) or None."""
    xs, ys = [], []
    h, w = mask.shape
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                xs.append(x)
                ys.append(y)
    if not xs:
        return None
    return min(xs), min(ys), max(xs) + 1, max(ys) + 1


# ---------------------------------------------------------------------------
# evaluation


def iou_xyxy(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / ((a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter)


def ranked(confidences):
    """Descending confidence, ties by input position."""
    return sorted(range(len(confidences)), key=lambda i: (-confidences[i], i))


def greedy_by_enumeration(dets, gts, thr):
    """Greedy matching recovered as the lexicographically best injective assignment.

    Candidate assignments map each detection (in rank order) to an unused GT
    index with IoU >= thr, or to nothing. Greedy is the assignment whose
    sequence of (matched?, IoU, -gt index) keys, in rank order, is
    lexicographically largest; every valid assignment is enumerated.
    """
    order = ranked([c for _, c in dets])
    best = [None, None]

    def walk(pos, used, key, assign):
        if pos == len(order):
            if best[0] is None or key > best[0]:
                best[0], best[1] = key, assign
            return
        d = order[pos]
        walk(pos + 1, used, key + ((0, 0.0, 0),), assign + (None,))
        for g, gt in enumerate(gts):
            if g in used:
                continue
            v = iou_xyxy(dets[d][0], gt)
            if v >= thr:
                walk(pos + 1, used | {g}, key + ((1, v, -g),), assign + (g,))

    walk(0, frozenset(), (), ())
    tp = [False] * len(dets)
    for d, g in zip(order, best[1]):
        tp[d] = g is not None
    return tp


def ap_loop(confidences, tp, num_gt):
    """101-point interpolated AP written as plain loops."""
    if num_gt == 0 or not confidences:
        return 0.0
    order = ranked(confidences)
    precisions, recalls = [], []
    hits = 0
    for rank, d in enumerate(order, 1):
        hits += 1 if tp[d] else 0
        precisions.append(hits / rank)
        recalls.append(hits / num_gt)
    samples = []
    for r in RECALL_GRID:
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        samples.append(best)
    return math.fsum(samples) / len(samples)


def evaluate_brute(gts, dets, num_classes, conf_thr, iou_thr, thresholds):
    """Metrics from scratch: ``gts`` maps frame -> [(class, box)], ``dets`` is [(frame, class, box, conf)].

    Returns ({class: (ap, ap50, p, r) or None}, (mAP, mAP50, P, R)).
    """
    per_class = {}
    for c in range(num_classes):
        cdets = [(f, b, s) for f, k, b, s in dets if k == c]
        cgts = {f: [b for k, b in items if k == c] for f, items in gts.items()}
        num_gt = sum(len(v) for v in cgts.values())
        if num_gt == 0 and not cdets:
            per_class[c] = None
            continue

        def flags(selection, thr):
            tp = [False] * len(selection)
            for f in {d[0] for d in selection}:
                ks = [i for i, d in enumerate(selection) if d[0] == f]
                got = greedy_by_enumeration([(selection[i][1], selection[i][2]) for i in ks], cgts.get(f, []), thr)
                for i, t in zip(ks, got):
                    tp[i] = t
            return tp

        confs = [d[2] for d in cdets]
        aps = {t: ap_loop(confs, flags(cdets, t), num_gt) for t in set(thresholds) | {iou_thr}}
        ap = math.fsum(aps[t] for t in thresholds) / len(thresholds)
        kept = [d for d in cdets if d[2] >= conf_thr]
        hits = sum(flags(kept, iou_thr))
        p = hits / len(kept) if kept else 0.0
        r = hits / num_gt if num_gt else 0.0
        per_class[c] = (ap, aps[iou_thr], p, r)
    defined = [v for v in per_class.values() if v is not None]
    overall = tuple(math.fsum(v[i] for v in defined) / len(defined) if defined else 0.0 for i in range(4))
    return per_class, overall


# ---------------------------------------------------------------------------
# evaluation fixtures


def frames_from_boxes(gts, width=64, height=64):
    """FrameAnnotation per frame from ``{frame: [(class, (x0, y0, x1, y1))]}``."""
    from medsynth.annotate import BoundingBox2D, FrameAnnotation, ObjectAnnotation
    from medsynth.scene import CameraModel

    cam = CameraModel(50.0, 50.0, width / 2, height / 2, width, height)
    out = {}
    for n, (ref, items) in enumerate(gts.items()):
        objects = tuple(ObjectAnnotation(c, k + 1, BoundingBox2D(*b), 1, 1.0, (0.0, 0.0, 0.0))
                        for k, (c, b) in enumerate(items))
        out[ref] = FrameAnnotation(n, cam, objects, 0, "REAL")
    return out


def records(dets):
    from medsynth.annotate import BoundingBox2D
    from medsynth.evaluation import DetectionRecord

    return [DetectionRecord(f, c, BoundingBox2D(*b), s) for f, c, b, s in dets]


def random_instance(rng, max_frames=5, max_boxes=4, max_classes=3, grid=6):
    """Tiny evaluation problem on a coarse grid so IoU and confidence ties are common."""
    num_classes = int(rng.integers(1, max_classes + 1))

    def box():
        x0, y0 = (int(v) for v in rng.integers(0, grid, 2))
        w, h = (int(v) for v in rng.integers(1, 4, 2))
        return (4 * x0, 4 * y0, 4 * (x0 + w), 4 * (y0 + h))

    gts, dets = {}, []
    for f in range(int(rng.integers(1, max_frames + 1))):
        ref = f"f{f}"
        gts[ref] = [(int(rng.integers(num_classes)), box()) for _ in range(int(rng.integers(0, max_boxes + 1)))]
        for _ in range(int(rng.integers(0, max_boxes + 1))):
            if gts[ref] and rng.random() < 0.6:
                c, b = gts[ref][int(rng.integers(len(gts[ref])))]
                b = tuple(v + int(d) for v, d in zip(b, rng.integers(-1, 2, 4)))
                if b[2] <= b[0] or b[3] <= b[1]:
                    b = box()
            else:
                c, b = int(rng.integers(num_classes)), box()
            dets.append((ref, c, b, float(rng.choice([0.1, 0.3, 0.5, 0.5, 0.9]))))
    return num_classes, gts, dets


# frames and predictions whose metrics are worked out by hand below
KNOWN_GTS = {
    "f0": [(0, (0, 0, 10, 10)), (1, (20, 20, 30, 30)), (2, (40, 0, 50, 10))],
    "f1": [(0, (0, 0, 10, 10)), (3, (5, 5, 25, 25))],
    "f2": [],
}
KNOWN_DETS = [
    ("f0", 0, (0, 0, 10, 10), 0.9),     # body: TP; the f1 body is missed
    ("f0", 1, (50, 50, 60, 60), 0.95),  # gown: FP ranked first
    ("f0", 1, (20, 20, 30, 30), 0.5),   # gown: TP
    ("f0", 2, (40, 0, 50, 8), 0.7),     # shirt: IoU 0.8
    ("f2", 4, (0, 0, 5, 5), 0.3),       # hat: FP, no hat ground truth
]
# body: precision 1 up to recall 0.5 -> 51 of 101 recall points
# gown: precision 1/2 at recall 1 -> 0.5 at every point
# shirt: AP 1 for IoU thresholds 0.50..0.80 (7 of 10), 0 above
# pants: ground truth only -> 0; hat: detections only -> 0; mask, glove undefined
KNOWN_PER_CLASS = {
    "body": (51 / 101, 51 / 101, 1.0, 0.5),
    "gown": (0.5, 0.5, 0.5, 1.0),
    "shirt": (0.7, 1.0, 1.0, 1.0),
    "pants": (0.0, 0.0, 0.0, 0.0),
    "hat": (0.0, 0.0, 0.0, 0.0),
    "mask": None,
    "glove": None,
}
KNOWN_OVERALL = {
    "mAP": math.fsum([51 / 101, 0.5, 0.7, 0.0, 0.0]) / 5,
    "mAP50": math.fsum([51 / 101, 0.5, 1.0, 0.0, 0.0]) / 5,
    "P": math.fsum([1.0, 0.5, 1.0, 0.0, 0.0]) / 5,
    "R": math.fsum([0.5, 1.0, 1.0, 0.0, 0.0]) / 5,
}
