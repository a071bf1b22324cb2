"""JSON Lines dataset manifests.

Line 1 is a task header object; every following line is one clip row:

    {"name": ..., "metric": "accuracy"|"eer"|"none", "num_classes": ...,
     "classes": [...], "sample_rate": ...}
    {"clip_id": ..., "clip_path": ..., "label": ..., "split": "train",
     "source_tag": ...}

Evaluation tasks (metric != "none") must cover all three splits; training
corpora use metric "none" and may carry empty labels. Clip ids are unique
and paths resolve relative to the manifest's directory.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ManifestError

SPLITS = ("train", "dev", "test")
METRICS = ("accuracy", "eer", "none")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    metric: str
    num_classes: int
    classes: tuple
    sample_rate: int

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ManifestError(f"task {self.name!r}: unknown metric {self.metric!r}")
        if self.metric != "none" and self.num_classes != len(self.classes):
            raise ManifestError(
                f"task {self.name!r}: num_classes {self.num_classes} != {len(self.classes)} classes"
            )
        if self.metric == "eer" and self.num_classes != 2:
            raise ManifestError(f"task {self.name!r}: eer tasks must be binary")


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    clip_path: str
    label: str
    split: str
    source_tag: str = ""


@dataclass(frozen=True)
class DatasetManifest:
    task: TaskSpec
    rows: tuple
    base_dir: Path = field(default_factory=Path)

    def split_rows(self, split: str) -> list:
        if split not in SPLITS:
            raise ManifestError(f"unknown split {split!r}")
        return [r for r in self.rows if r.split == split]

    def resolve(self, row: ManifestRow) -> Path:
        return self.base_dir / row.clip_path

    @property
    def clip_ids(self) -> list:
        return [r.clip_id for r in self.rows]


def _parse_header(obj: dict, path) -> TaskSpec:
    try:
        return TaskSpec(
            name=str(obj["name"]),
            metric=str(obj["metric"]),
            num_classes=int(obj["num_classes"]),
            classes=tuple(str(c) for c in obj.get("classes", [])),
            sample_rate=int(obj["sample_rate"]),
        )
    except KeyError as exc:
        raise ManifestError(f"{path}: task header missing field {exc}") from exc


def ingest_manifest(path, check_paths: bool = True) -> DatasetManifest:
    """Parse and validate a manifest; rejects duplicate ids, unknown splits,
    labels outside the declared class set, and missing audio files."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: line 1 is not valid JSON: {exc}") from exc
    task = _parse_header(header, path)

    rows = []
    seen = set()
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        missing = [k for k in ("clip_id", "clip_path", "label", "split") if k not in obj]
        if missing:
            raise ManifestError(f"{path}:{lineno}: row missing fields {missing}")
        row = ManifestRow(
            clip_id=str(obj["clip_id"]),
            clip_path=str(obj["clip_path"]),
            label=str(obj["label"]),
            split=str(obj["split"]),
            source_tag=str(obj.get("source_tag", "")),
        )
        if row.split not in SPLITS:
            raise ManifestError(
                f"{path}:{lineno}: split {row.split!r} not in {SPLITS}"
            )
        if row.clip_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate clip_id {row.clip_id!r}")
        seen.add(row.clip_id)
        if task.metric != "none" and row.label not in task.classes:
            raise ManifestError(
                f"{path}:{lineno}: label {row.label!r} not in declared classes"
            )
        rows.append(row)
    if not rows:
        raise ManifestError(f"{path}: manifest has no clip rows")

    manifest = DatasetManifest(task=task, rows=tuple(rows), base_dir=path.parent)
    if task.metric != "none":
        for split in SPLITS:
            if not manifest.split_rows(split):
                raise ManifestError(f"{path}: evaluation task missing split {split!r}")
    if check_paths:
        for row in rows:
            if not manifest.resolve(row).exists():
                raise ManifestError(f"{path}: unreadable audio {row.clip_path!r}")
    return manifest


def write_manifest(path, task: TaskSpec, rows) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps({
            "name": task.name,
            "metric": task.metric,
            "num_classes": task.num_classes,
            "classes": list(task.classes),
            "sample_rate": task.sample_rate,
        }, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps({
                "clip_id": row.clip_id,
                "clip_path": row.clip_path,
                "label": row.label,
                "split": row.split,
                "source_tag": row.source_tag,
            }, sort_keys=True) + "\n")
