"""Dataset manifest: the CSV that names every video and its label.

Format: UTF-8 CSV with header ``video_id,path,label,subgroup``.
``label`` is ``pos`` or ``neg``; ``subgroup`` is free-form and may be
empty (the corpora tag some negatives e.g. "easy"/"difficult").
Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError, ValidationError

POSITIVE = "pos"
NEGATIVE = "neg"


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: Path
    label: str  # POSITIVE or NEGATIVE
    subgroup: str = ""

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValidationError(
                f"{self.video_id}: label must be {POSITIVE!r} or {NEGATIVE!r}, got {self.label!r}"
            )
        object.__setattr__(self, "path", Path(self.path))

    @property
    def y(self):
        """Label as the +/-1 convention used by the classifiers."""
        return 1 if self.label == POSITIVE else -1


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.video_id in seen:
                raise ValidationError(f"duplicate video_id {e.video_id!r}")
            seen.add(e.video_id)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def video_ids(self):
        return [e.video_id for e in self.entries]

    def entry(self, video_id) -> ManifestEntry:
        for e in self.entries:
            if e.video_id == video_id:
                return e
        raise KeyError(video_id)

    def label_counts(self):
        pos = sum(1 for e in self.entries if e.label == POSITIVE)
        return pos, len(self.entries) - pos

    def subset(self, video_ids) -> "DatasetManifest":
        wanted = set(video_ids)
        return DatasetManifest(tuple(e for e in self.entries if e.video_id in wanted))

    def require_both_labels(self):
        pos, neg = self.label_counts()
        if pos == 0 or neg == 0:
            raise ValidationError(
                f"training needs both labels, got {pos} positive / {neg} negative"
            )


def load_manifest(path) -> DatasetManifest:
    """Parse a manifest CSV, preserving file order.

    Malformed rows raise FormatError with the 1-based line number;
    duplicate ids raise ValidationError naming the id.
    """
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty manifest") from None
        if [h.strip() for h in header[:3]] != ["video_id", "path", "label"]:
            raise FormatError(f"{path}: line 1: bad header {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3:
                raise FormatError(f"{path}: line {line}: expected >=3 fields, got {len(row)}")
            video_id, raw_path, label = (c.strip() for c in row[:3])
            subgroup = row[3].strip() if len(row) > 3 else ""
            if not video_id:
                raise FormatError(f"{path}: line {line}: empty video_id")
            if label not in (POSITIVE, NEGATIVE):
                raise FormatError(
                    f"{path}: line {line}: label must be 'pos' or 'neg', got {label!r}"
                )
            p = Path(raw_path)
            if not p.is_absolute():
                p = base / p
            entries.append(ManifestEntry(video_id, p, label, subgroup))
    return DatasetManifest(tuple(entries))


def save_manifest(path, entries):
    """Write entries to CSV; inverse of load_manifest for relative paths."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "path", "label", "subgroup"])
        for e in entries:
            p = e.path
            try:
                p = p.relative_to(path.parent)
            except ValueError:
                pass
            writer.writerow([e.video_id, str(p), e.label, e.subgroup])
