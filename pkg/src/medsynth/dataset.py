"""Dataset manifests, seeded train/val/test splitting, and split statistics."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .classes import CLASS_NAMES
from .errors import ValidationError

SPLITS = ("train", "val", "test")
MODES = ("DR", "SDR", "MR", "REAL")
SPLIT_HEADINGS = {"train": "Train", "val": "Validation", "test": "Test"}


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    split: str = "train"
    mode: str = "DR"
    annotation: str | None = None  # path relative to the manifest directory
    files: dict[str, str] = field(default_factory=dict)
    group: str | None = None  # grouping key, e.g. the recorded person in MR data

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValidationError(f"entry {self.id}: unknown split {self.split!r}")
        if self.mode not in MODES:
            raise ValidationError(f"entry {self.id}: unknown mode {self.mode!r}")

    def to_dict(self) -> dict:
        out = {"id": self.id, "split": self.split, "mode": self.mode}
        if self.annotation is not None:
            out["annotation"] = self.annotation
        if self.files:
            out["files"] = dict(self.files)
        if self.group is not None:
            out["group"] = self.group
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        return cls(d["id"], d.get("split", "train"), d.get("mode", "DR"), d.get("annotation"),
                   dict(d.get("files", {})), d.get("group"))


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entries: tuple[ManifestEntry, ...]
    classes: tuple[str, ...] = CLASS_NAMES

    def __post_init__(self):
        counts = Counter(e.id for e in self.entries)
        dupes = sorted(k for k, n in counts.items() if n > 1)
        if dupes:
            raise ValidationError(f"duplicate manifest entries: {dupes[:5]}")

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def counts(self) -> dict[str, int]:
        c = Counter(e.split for e in self.entries)
        return {s: c.get(s, 0) for s in SPLITS}

    def merged(self, other: Iterable[ManifestEntry]) -> "DatasetManifest":
        """Manifest with ``other`` entries replacing same-id entries, ordered by id."""
        by_id = {e.id: e for e in self.entries}
        for e in other:
            by_id[e.id] = e
        return replace(self, entries=tuple(by_id[k] for k in sorted(by_id)))

    def to_dict(self) -> dict:
        return {"name": self.name, "classes": list(self.classes), "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(d.get("name", "dataset"), tuple(ManifestEntry.from_dict(e) for e in d["entries"]),
                   tuple(d.get("classes", CLASS_NAMES)))

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh, indent=1)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write manifest {path}: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"cannot read manifest {path}: {exc}") from None

    def validate_files(self, root: str | Path) -> None:
        """Every referenced file exists and every annotation parses."""
        root = Path(root)
        for e in self.entries:
            refs = list(e.files.values()) + ([e.annotation] if e.annotation else [])
            for ref in refs:
                if not (root / ref).is_file():
                    raise ValidationError(f"entry {e.id}: missing file {ref}")
            if e.annotation:
                try:
                    with open(root / e.annotation) as fh:
                        json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"entry {e.id}: annotation does not parse: {exc}") from None


def split_counts(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Split sizes from cumulative ratio boundaries: ``b_k = floor(n · Σ_{i≤k} r_i)``.

    1101 at (0.6, 0.1, 0.3) gives 660/110/331; 10 at (0.8, 0.2, 0) gives 8/2/0.
    """
    r = [float(x) for x in ratios]
    if len(r) != 3 or any(x < 0 or not math.isfinite(x) for x in r):
        raise ValidationError(f"ratios must be three non-negative numbers, got {ratios}")
    if abs(math.fsum(r) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {math.fsum(r)}")
    # trailing empty splits pin their boundary to n so float error cannot leak a unit into them
    b2 = n if r[2] == 0 else min(n, math.floor(n * math.fsum(r[:2]) + 1e-9))
    b1 = n if r[1] == r[2] == 0 else min(b2, math.floor(n * r[0] + 1e-9))
    return b1, b2 - b1, n - b2


def split(
    entries: Sequence[ManifestEntry | str],
    ratios: Sequence[float] = (0.6, 0.1, 0.3),
    seed: int = 0,
    group_by_key: bool = False,
    counts: Sequence[int] | None = None,
    name: str = "dataset",
) -> DatasetManifest:
    """Seeded shuffle then contiguous train/val/test assignment.

    With ``group_by_key`` the units shuffled and counted are the distinct
    ``group`` values (all entries of one group share a split). ``counts``
    gives explicit unit counts instead of ratios.
    """
    items = [e if isinstance(e, ManifestEntry) else ManifestEntry(str(e)) for e in entries]
    if not items:
        raise ValidationError("cannot split an empty entry list")
    if group_by_key:
        if any(e.group is None for e in items):
            raise ValidationError("grouped split needs a group key on every entry")
        units = sorted({e.group for e in items})
    else:
        units = [e.id for e in items]
    n = len(units)
    if counts is not None:
        sizes = tuple(int(c) for c in counts)
        if len(sizes) != 3 or min(sizes) < 0 or sum(sizes) != n:
            raise ValidationError(f"explicit counts {tuple(counts)} must be 3 non-negative values summing to {n}")
    else:
        sizes = split_counts(n, ratios)
    order = np.random.default_rng(seed).permutation(n)
    assignment = {}
    bounds = np.cumsum(sizes)
    for rank, unit_index in enumerate(order):
        which = int(np.searchsorted(bounds, rank, side="right"))
        assignment[units[unit_index]] = SPLITS[which]
    out = []
    for e in items:
        key = e.group if group_by_key else e.id
        out.append(replace(e, split=assignment[key]))
    return DatasetManifest(name, tuple(out))


def stats_rows(manifests: dict[str, DatasetManifest]) -> list[tuple[str, int, int, int, int]]:
    rows = []
    for name, m in manifests.items():
        c = m.counts()
        rows.append((name, c["train"], c["val"], c["test"], sum(c.values())))
    return rows


def format_stats(manifests: dict[str, DatasetManifest]) -> str:
    """Split counts per dataset in the layout of a data-distribution table."""
    rows = stats_rows(manifests)
    width = max([len("Dataset")] + [len(r[0]) for r in rows])
    lines = [f"{'Dataset':<{width}}  {'Train':>7}  {'Validation':>10}  {'Test':>7}  {'Total':>7}"]
    for name, tr, va, te, total in rows:
        lines.append(f"{name:<{width}}  {tr:>7}  {va:>10}  {te:>7}  {total:>7}")
    return "\n".join(lines)
