"""Detection metrics: IoU, greedy matching, 101-point AP, per-class reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotate import BoundingBox2D, FrameAnnotation
from .classes import CLASS_NAMES, REPORT_NAMES
from .errors import ValidationError

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = np.arange(101) / 100.0  # exactly rounded i/100, so recall k/n == i/100 compares exactly
DEFAULT_CONF = 0.2
DEFAULT_IOU = 0.5
METRICS = ("mAP", "mAP50", "P", "R")


@dataclass(frozen=True)
class DetectionRecord:
    frame: str
    class_id: int
    bbox: BoundingBox2D
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    frame: str
    class_id: int
    bbox: BoundingBox2D


@dataclass(frozen=True)
class ClassMetrics:
    ap: float  # averaged over IoU 0.50:0.05:0.95
    ap50: float
    precision: float
    recall: float
    num_gt: int
    num_detections: int

    def as_dict(self) -> dict:
        return {"mAP": self.ap, "mAP50": self.ap50, "P": self.precision, "R": self.recall,
                "num_gt": self.num_gt, "num_detections": self.num_detections}


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, ClassMetrics | None]  # None: no ground truth and no detections
    overall: dict[str, float]
    conf_threshold: float = DEFAULT_CONF
    iou_threshold: float = DEFAULT_IOU
    iou_thresholds: tuple[float, ...] = IOU_THRESHOLDS
    classes: tuple[str, ...] = field(default=CLASS_NAMES)

    def row(self, name: str) -> dict[str, float] | None:
        if name == "all":
            return self.overall
        m = self.per_class[name]
        return None if m is None else {"mAP": m.ap, "mAP50": m.ap50, "P": m.precision, "R": m.recall}

    def to_dict(self) -> dict:
        return {
            "thresholds": {"conf": self.conf_threshold, "iou": self.iou_threshold,
                           "iou_range": list(self.iou_thresholds)},
            "all": self.overall,
            "classes": {n: (None if m is None else m.as_dict()) for n, m in self.per_class.items()},
        }


# ---------------------------------------------------------------------------
# primitives


def _xyxy(b) -> tuple[float, float, float, float]:
    if isinstance(b, BoundingBox2D):
        return b.x_min, b.y_min, b.x_max, b.y_max
    return tuple(float(v) for v in b)


def iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = _xyxy(a)
    bx0, by0, bx1, by1 = _xyxy(b)
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def confidence_order(confidences: Sequence[float]) -> np.ndarray:
    """Indices by descending confidence; equal confidences keep input order."""
    return np.argsort(-np.asarray(confidences, dtype=np.float64), kind="stable")


def match_detections(detections: Sequence[tuple], ground_truth: Sequence, iou_threshold: float = DEFAULT_IOU):
    """Greedy one-to-one matching for one frame and class.

    ``detections`` holds ``(bbox, confidence)`` pairs. In descending
    confidence order each detection takes the unmatched ground-truth box of
    highest IoU (lowest index on ties) when that IoU reaches the threshold.
    Returns ``(tp_flags, gt_matched)`` aligned with the input orders.
    """
    tp = np.zeros(len(detections), dtype=bool)
    matched = np.zeros(len(ground_truth), dtype=bool)
    for d in confidence_order([c for _, c in detections]):
        best, best_iou = -1, -1.0
        for g, gt in enumerate(ground_truth):
            if matched[g]:
                continue
            v = iou(detections[d][0], gt)
            if v >= iou_threshold and v > best_iou:
                best, best_iou = g, v
        if best >= 0:
            matched[best] = True
            tp[d] = True
    return tp, matched


def average_precision(confidences: Sequence[float], tp_flags: Sequence[bool], num_gt: int) -> float:
    """101-point interpolated AP of a ranked detection list."""
    if num_gt < 0:
        raise ValueError("num_gt must be >= 0")
    if num_gt == 0:
        return 0.0
    if len(confidences) == 0:
        return 0.0
    order = confidence_order(confidences)
    tp = np.asarray(tp_flags, dtype=bool)[order]
    ctp = np.cumsum(tp)
    cfp = np.cumsum(~tp)
    recall = ctp / num_gt
    precision = ctp / (ctp + cfp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = [float(envelope[i]) if i < len(envelope) else 0.0 for i in idx]
    return math.fsum(sampled) / len(RECALL_POINTS)


# ---------------------------------------------------------------------------
# dataset-level evaluation


def ground_truth_from_frames(frames: dict[str, FrameAnnotation]) -> list[GroundTruth]:
    return [GroundTruth(ref, o.class_id, o.bbox) for ref, f in frames.items() for o in f.objects]


def _class_flags(dets: list[tuple[int, DetectionRecord]], gts_by_frame: dict[str, list[BoundingBox2D]],
                 threshold: float) -> np.ndarray:
    """TP flag per detection (aligned with ``dets``), matching frame by frame."""
    flags = np.zeros(len(dets), dtype=bool)
    by_frame: dict[str, list[int]] = {}
    for k, (_, d) in enumerate(dets):
        by_frame.setdefault(d.frame, []).append(k)
    for frame, ks in by_frame.items():
        tp, _ = match_detections([(dets[k][1].bbox, dets[k][1].confidence) for k in ks],
                                 gts_by_frame.get(frame, []), threshold)
        flags[ks] = tp
    return flags


def class_metrics(dets: list[DetectionRecord], gts: list[GroundTruth], conf_threshold: float,
                  iou_threshold: float, iou_thresholds: Sequence[float]) -> ClassMetrics | None:
    num_gt = len(gts)
    if num_gt == 0 and not dets:
        return None
    gts_by_frame: dict[str, list[BoundingBox2D]] = {}
    for g in gts:
        gts_by_frame.setdefault(g.frame, []).append(g.bbox)
    indexed = list(enumerate(dets))
    conf = [d.confidence for d in dets]
    aps = {}
    for t in sorted(set(iou_thresholds) | {iou_threshold}):
        aps[t] = average_precision(conf, _class_flags(indexed, gts_by_frame, t), num_gt)
    ap = math.fsum(aps[t] for t in iou_thresholds) / len(iou_thresholds)

    kept = [(k, d) for k, d in indexed if d.confidence >= conf_threshold]
    tp = int(_class_flags(kept, gts_by_frame, iou_threshold).sum())
    precision = tp / len(kept) if kept else 0.0
    recall = tp / num_gt if num_gt else 0.0
    return ClassMetrics(ap, aps[iou_threshold], precision, recall, num_gt, len(dets))


def evaluate(
    frames: dict[str, FrameAnnotation],
    predictions: Iterable[DetectionRecord],
    conf_threshold: float = DEFAULT_CONF,
    iou_threshold: float = DEFAULT_IOU,
    iou_thresholds: Sequence[float] = IOU_THRESHOLDS,
    classes: Sequence[str] = CLASS_NAMES,
) -> EvalReport:
    """Per-class AP (IoU range and 0.5) over all predictions; P/R at the confidence threshold.

    ``frames`` maps frame refs of the evaluated split to their annotations.
    """
    preds = list(predictions)
    unknown = sorted({p.frame for p in preds} - set(frames))
    if unknown:
        raise ValidationError(f"predictions reference frames outside the evaluated split: {unknown[:5]}")
    gts = ground_truth_from_frames(frames)
    per_class: dict[str, ClassMetrics | None] = {}
    for cid, name in enumerate(classes):
        per_class[name] = class_metrics([p for p in preds if p.class_id == cid],
                                        [g for g in gts if g.class_id == cid],
                                        conf_threshold, iou_threshold, iou_thresholds)
    defined = [m for m in per_class.values() if m is not None]
    overall = {}
    for key, attr in (("mAP", "ap"), ("mAP50", "ap50"), ("P", "precision"), ("R", "recall")):
        overall[key] = math.fsum(getattr(m, attr) for m in defined) / len(defined) if defined else 0.0
    return EvalReport(per_class, overall, conf_threshold, iou_threshold, tuple(iou_thresholds), tuple(classes))


# ---------------------------------------------------------------------------
# report formatting and prediction files


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{100.0 * v:.2f}"


def format_report(reports: dict[str, EvalReport]) -> str:
    """Aligned text table: column header, then per row group (all, then each class) a title and one line per experiment."""
    names = list(reports)
    first = next(iter(reports.values()))
    width = max([len("Experiment")] + [len(n) for n in names])
    header = f"{'Experiment':<{width}}  " + "  ".join(f"{m:>6}" for m in METRICS)
    lines = [header]
    groups = [("all", "all")] + list(zip(REPORT_NAMES[: len(first.classes)], first.classes))
    for title, key in groups:
        lines.append(title.center(len(header)).rstrip())
        for n in names:
            row = reports[n].row(key)
            values = [None] * 4 if row is None else [row[m] for m in METRICS]
            lines.append(f"{n:<{width}}  " + "  ".join(f"{_fmt(v):>6}" for v in values))
    return "\n".join(lines) + "\n"


def load_predictions(path: str | Path) -> list[DetectionRecord]:
    """JSON-lines predictions: ``frame``, ``class_id``, ``bbox [xmin,ymin,xmax,ymax]``, ``confidence``."""
    out = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    out.append(DetectionRecord(str(d["frame"]), int(d["class_id"]),
                                               BoundingBox2D(*(float(v) for v in d["bbox"])),
                                               float(d["confidence"])))
                except (KeyError, TypeError, ValueError, ValidationError) as exc:
                    raise ValidationError(f"{path}:{lineno}: bad prediction record: {exc}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read predictions {path}: {exc.strerror}") from None
    return out


def save_predictions(records: Iterable[DetectionRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps({"frame": r.frame, "class_id": r.class_id, "bbox": r.bbox.as_list(),
                                 "confidence": r.confidence}) + "\n")
