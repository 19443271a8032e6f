"""Interchange formats: manifest, sweeps, embeddings and predictions.

One JSON manifest (versioned, human-editable) references flat CSV files.
All CSVs are UTF-8 with fixed headers and '.' decimal separators:

    sweeps       object_id,distance_mm,current_mean,repeats
    embeddings   object_id,modality,view_index,v0..v{dim-1}
    predictions  method_id,object_id,trial_index,predicted_alpha

Loading is order-insensitive; saving always emits the canonical ordering, so
parse-then-serialize is the identity on canonical files.  Floats are written
with repr (shortest round-trip form) to keep re-saves byte-identical.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import SweepSample, SweepSeries
from .errors import DataError

MANIFEST_SCHEMA_VERSION = 1


class Category(enum.Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"
    TRANSPARENT = "transparent"


class Split(enum.Enum):
    TRAIN = "train"
    TEST = "test"


class Modality(enum.Enum):
    IMAGE = "image"
    TEXT = "text"


def _parse_enum(raw, cls, what: str):
    try:
        return cls(raw)
    except ValueError:
        valid = ", ".join(m.value for m in cls)
        raise DataError(f"{what} must be one of {{{valid}}}, got {raw!r}") from None


def _fmt(value: float) -> str:
    """Canonical float formatting: shortest repr that round-trips."""
    return repr(float(value))


@dataclass
class ObjectRecord:
    """One object: identity, short descriptor, category, split and labels."""

    object_id: str
    name: str
    category: Category
    split: Split
    true_alpha: float | None = None
    stiffness_n_per_mm: float | None = None

    def __post_init__(self) -> None:
        if not self.object_id:
            raise DataError("object_id must be non-empty")
        if not self.name or not self.name.strip():
            raise DataError(f"object {self.object_id!r}: name must be non-empty")
        if not isinstance(self.category, Category):
            self.category = _parse_enum(self.category, Category, "category")  # type: ignore[arg-type]
        if not isinstance(self.split, Split):
            self.split = _parse_enum(self.split, Split, "split")  # type: ignore[arg-type]
        if self.true_alpha is not None:
            a = float(self.true_alpha)
            if not math.isfinite(a) or not 0.0 < a <= 1.0:
                raise DataError(
                    f"object {self.object_id!r}: true_alpha must lie in (0, 1], got {a!r}"
                )
            self.true_alpha = a
        if self.stiffness_n_per_mm is not None:
            k = float(self.stiffness_n_per_mm)
            if not math.isfinite(k) or k <= 0:
                raise DataError(
                    f"object {self.object_id!r}: stiffness must be > 0, got {k!r}"
                )
            self.stiffness_n_per_mm = k


@dataclass
class EmbeddingVector:
    """One precomputed encoder output for an (object, modality, view)."""

    object_id: str
    modality: Modality
    view_index: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.modality, Modality):
            self.modality = _parse_enum(self.modality, Modality, "modality")  # type: ignore[arg-type]
        self.view_index = int(self.view_index)
        if self.view_index < 0:
            raise DataError(
                f"embedding {self.object_id!r}: view_index must be >= 0, got {self.view_index}"
            )
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise DataError(
                f"embedding {self.object_id!r}: values must be a non-empty vector"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"embedding {self.object_id!r}: values must be finite")

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class PredictionRecord:
    """One estimator output for one trial of one object."""

    method_id: str
    object_id: str
    trial_index: int
    predicted_alpha: float

    def __post_init__(self) -> None:
        if not self.method_id or not self.object_id:
            raise DataError("method_id and object_id must be non-empty")
        object.__setattr__(self, "trial_index", int(self.trial_index))
        if self.trial_index < 0:
            raise DataError(f"trial_index must be >= 0, got {self.trial_index}")
        value = float(self.predicted_alpha)
        if not math.isfinite(value):
            raise DataError(
                f"prediction for {self.object_id!r} must be finite, got {value!r}"
            )
        object.__setattr__(self, "predicted_alpha", value)


@dataclass
class Manifest:
    """Dataset root: objects plus references to the flat data files."""

    objects: list[ObjectRecord]
    embedding_dim: int = 512
    schema_version: int = MANIFEST_SCHEMA_VERSION
    sweep_files: list[str] = field(default_factory=list)
    embedding_files: list[str] = field(default_factory=list)
    prediction_files: list[str] = field(default_factory=list)
    note: str = ""
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for rec in self.objects:
            if rec.object_id in seen:
                raise DataError(f"duplicate object_id {rec.object_id!r} in manifest")
            seen.add(rec.object_id)
        self.base_dir = Path(self.base_dir)

    def object(self, object_id: str) -> ObjectRecord:
        for rec in self.objects:
            if rec.object_id == object_id:
                return rec
        raise DataError(f"unknown object_id {object_id!r}")

    def split_objects(self, split: Split) -> list[ObjectRecord]:
        return [rec for rec in self.objects if rec.split is split]

    def split_counts(self) -> dict[str, int]:
        return {
            split.value: len(self.split_objects(split)) for split in Split
        }

    def resolve(self, relpath: str) -> Path:
        return self.base_dir / relpath


# ---------------------------------------------------------------------------
# sweeps CSV

SWEEP_HEADER = ["object_id", "distance_mm", "current_mean", "repeats"]


def save_sweeps(sweeps: "dict[str, SweepSeries] | list[SweepSeries]", path) -> None:
    if isinstance(sweeps, dict):
        series_list = [sweeps[key] for key in sorted(sweeps)]
    else:
        series_list = sorted(sweeps, key=lambda s: s.object_id)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for series in series_list:
            for sample in series.samples:
                writer.writerow(
                    [
                        series.object_id,
                        _fmt(sample.distance_mm),
                        _fmt(sample.current_mean),
                        sample.repeat_count,
                    ]
                )


def load_sweeps(path) -> dict[str, SweepSeries]:
    rows: dict[str, list[SweepSample]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise DataError(f"{path}: expected header {SWEEP_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            object_id = row[0]
            try:
                sample = SweepSample(
                    distance_mm=float(row[1]),
                    current_mean=float(row[2]),
                    repeat_count=int(row[3]),
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            rows.setdefault(object_id, []).append(sample)
    sweeps: dict[str, SweepSeries] = {}
    for object_id, samples in rows.items():
        samples.sort(key=lambda s: s.distance_mm)
        for a, b in zip(samples, samples[1:]):
            if a.distance_mm == b.distance_mm:
                raise DataError(
                    f"{path}: duplicate distance {a.distance_mm} for {object_id!r}"
                )
        sweeps[object_id] = SweepSeries(object_id=object_id, samples=tuple(samples))
    return sweeps


# ---------------------------------------------------------------------------
# embeddings CSV


def embedding_header(dim: int) -> list[str]:
    return ["object_id", "modality", "view_index"] + [f"v{i}" for i in range(dim)]


def save_embeddings(vectors: list[EmbeddingVector], path) -> None:
    if not vectors:
        raise DataError("refusing to save an empty embedding file")
    dim = vectors[0].dim
    for vec in vectors:
        if vec.dim != dim:
            raise DataError(
                f"inconsistent embedding dims: {vec.dim} vs {dim} "
                f"(object {vec.object_id!r})"
            )
    ordered = sorted(vectors, key=lambda v: (v.object_id, v.modality.value, v.view_index))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(embedding_header(dim))
        for vec in ordered:
            writer.writerow(
                [vec.object_id, vec.modality.value, vec.view_index]
                + [_fmt(v) for v in vec.values]
            )


def load_embeddings(path, expected_dim: int | None = None) -> list[EmbeddingVector]:
    vectors: list[EmbeddingVector] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["object_id", "modality", "view_index"]:
            raise DataError(f"{path}: malformed embedding header {header}")
        dim = len(header) - 3
        if dim < 1 or header[3:] != [f"v{i}" for i in range(dim)]:
            raise DataError(f"{path}: malformed embedding value columns")
        if expected_dim is not None and dim != expected_dim:
            raise DataError(
                f"{path}: embedding dim {dim} does not match manifest {expected_dim}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                vec = EmbeddingVector(
                    object_id=row[0],
                    modality=_parse_enum(row[1], Modality, "modality"),
                    view_index=int(row[2]),
                    values=np.array([float(v) for v in row[3:]], dtype=float),
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            vectors.append(vec)
    vectors.sort(key=lambda v: (v.object_id, v.modality.value, v.view_index))
    return vectors


def index_embeddings(
    vectors: list[EmbeddingVector],
) -> dict[tuple[str, Modality], list[EmbeddingVector]]:
    """Group embeddings by (object, modality), views in ascending order."""
    index: dict[tuple[str, Modality], list[EmbeddingVector]] = {}
    for vec in vectors:
        index.setdefault((vec.object_id, vec.modality), []).append(vec)
    for group in index.values():
        group.sort(key=lambda v: v.view_index)
    return index


# ---------------------------------------------------------------------------
# predictions CSV

PREDICTION_HEADER = ["method_id", "object_id", "trial_index", "predicted_alpha"]


def save_predictions(records: list[PredictionRecord], path) -> None:
    ordered = sorted(records, key=lambda r: (r.method_id, r.object_id, r.trial_index))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for rec in ordered:
            writer.writerow(
                [rec.method_id, rec.object_id, rec.trial_index, _fmt(rec.predicted_alpha)]
            )


def load_predictions(path) -> list[PredictionRecord]:
    records: list[PredictionRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTION_HEADER:
            raise DataError(f"{path}: expected header {PREDICTION_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                records.append(
                    PredictionRecord(
                        method_id=row[0],
                        object_id=row[1],
                        trial_index=int(row[2]),
                        predicted_alpha=float(row[3]),
                    )
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    records.sort(key=lambda r: (r.method_id, r.object_id, r.trial_index))
    return records


# ---------------------------------------------------------------------------
# manifest JSON


def manifest_to_dict(manifest: Manifest) -> dict:
    payload: dict = {
        "schema_version": manifest.schema_version,
        "embedding_dim": manifest.embedding_dim,
        "objects": [],
        "files": {
            "sweeps": list(manifest.sweep_files),
            "embeddings": list(manifest.embedding_files),
            "predictions": list(manifest.prediction_files),
        },
    }
    if manifest.note:
        payload["note"] = manifest.note
    for rec in manifest.objects:
        entry: dict = {
            "object_id": rec.object_id,
            "name": rec.name,
            "category": rec.category.value,
            "split": rec.split.value,
        }
        if rec.true_alpha is not None:
            entry["true_alpha"] = rec.true_alpha
        if rec.stiffness_n_per_mm is not None:
            entry["stiffness_n_per_mm"] = rec.stiffness_n_per_mm
        payload["objects"].append(entry)
    return payload


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    payload = manifest_to_dict(manifest)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_manifest(path, check_files: bool = True) -> Manifest:
    """Load and fully validate a manifest.

    Referenced data files must exist and parse; every cross-reference
    (embedding/prediction object ids, embedding dims) is checked and all
    violations are reported in one DataError.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest {path} does not exist")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(payload, dict):
        raise DataError(f"{path}: manifest root must be a JSON object")

    version = payload.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise DataError(
            f"{path}: unsupported schema_version {version!r} "
            f"(this toolkit reads version {MANIFEST_SCHEMA_VERSION})"
        )
    try:
        embedding_dim = int(payload.get("embedding_dim", 512))
    except (TypeError, ValueError):
        raise DataError(f"{path}: embedding_dim must be an integer") from None

    objects: list[ObjectRecord] = []
    for idx, entry in enumerate(payload.get("objects", [])):
        if not isinstance(entry, dict):
            raise DataError(f"{path}: objects[{idx}] must be an object")
        try:
            objects.append(
                ObjectRecord(
                    object_id=str(entry.get("object_id", "")),
                    name=str(entry.get("name", "")),
                    category=_parse_enum(entry.get("category"), Category, "category"),
                    split=_parse_enum(entry.get("split"), Split, "split"),
                    true_alpha=entry.get("true_alpha"),
                    stiffness_n_per_mm=entry.get("stiffness_n_per_mm"),
                )
            )
        except DataError as exc:
            raise DataError(f"{path}: objects[{idx}]: {exc}") from None

    files = payload.get("files", {})
    if not isinstance(files, dict):
        raise DataError(f"{path}: 'files' must be an object")
    manifest = Manifest(
        objects=objects,
        embedding_dim=embedding_dim,
        schema_version=version,
        sweep_files=[str(p) for p in files.get("sweeps", [])],
        embedding_files=[str(p) for p in files.get("embeddings", [])],
        prediction_files=[str(p) for p in files.get("predictions", [])],
        note=str(payload.get("note", "")),
        base_dir=path.parent,
    )
    if check_files:
        violations = validate_manifest_files(manifest)
        if violations:
            raise DataError(
                f"{path}: referential-integrity violations:\n  "
                + "\n  ".join(violations)
            )
    return manifest


def validate_manifest_files(manifest: Manifest) -> list[str]:
    """Check every referenced file: existence, parse, and cross-references."""
    violations: list[str] = []
    known_ids = {rec.object_id for rec in manifest.objects}

    for rel in manifest.sweep_files:
        full = manifest.resolve(rel)
        if not full.exists():
            violations.append(f"sweep file missing: {rel}")
            continue
        try:
            sweeps = load_sweeps(full)
        except DataError as exc:
            violations.append(f"sweep file {rel}: {exc}")
            continue
        for object_id in sweeps:
            if object_id not in known_ids:
                violations.append(f"sweep file {rel}: unknown object {object_id!r}")

    for rel in manifest.embedding_files:
        full = manifest.resolve(rel)
        if not full.exists():
            violations.append(f"embedding file missing: {rel}")
            continue
        try:
            vectors = load_embeddings(full, expected_dim=manifest.embedding_dim)
        except DataError as exc:
            violations.append(f"embedding file {rel}: {exc}")
            continue
        for vec in vectors:
            if vec.object_id not in known_ids:
                violations.append(
                    f"embedding file {rel}: unknown object {vec.object_id!r}"
                )

    for rel in manifest.prediction_files:
        full = manifest.resolve(rel)
        if not full.exists():
            violations.append(f"prediction file missing: {rel}")
            continue
        try:
            records = load_predictions(full)
        except DataError as exc:
            violations.append(f"prediction file {rel}: {exc}")
            continue
        for rec in records:
            if rec.object_id not in known_ids:
                violations.append(
                    f"prediction file {rel}: unknown object {rec.object_id!r}"
                )
    return violations
