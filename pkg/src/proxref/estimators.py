"""Reflectance estimator bindings shared by the grasp harness and the CLI.

An estimator is anything with a ``method_id`` and an
``estimate_alpha(record) -> float`` method.  Outputs here are raw estimates;
consumers clamp into the valid reflectance range where they need to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .data import (
    EmbeddingVector,
    Manifest,
    Modality,
    ObjectRecord,
    PredictionRecord,
    Split,
    index_embeddings,
)
from .errors import DataError
from .head import FusionMode, HeadParams, fuse, head_forward


class Estimator(Protocol):
    method_id: str

    def estimate_alpha(self, record: ObjectRecord) -> float: ...


def build_training_set(
    manifest: Manifest,
    vectors: list[EmbeddingVector],
    split: Split = Split.TRAIN,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(images, texts, targets): one row per image view, the object's text
    vector repeated across its views, targets taken from calibrated alphas."""
    index = index_embeddings(vectors)
    images, texts, targets = [], [], []
    for rec in manifest.split_objects(split):
        if rec.true_alpha is None:
            raise DataError(f"object {rec.object_id!r} has no calibrated alpha")
        img_views = index.get((rec.object_id, Modality.IMAGE), [])
        txt_views = index.get((rec.object_id, Modality.TEXT), [])
        if not img_views:
            raise DataError(f"no image embeddings for {rec.object_id!r}")
        if not txt_views:
            raise DataError(f"no text embedding for {rec.object_id!r}")
        for vec in img_views:
            images.append(vec.values)
            texts.append(txt_views[0].values)
            targets.append(rec.true_alpha)
    if not images:
        raise DataError(f"no {split.value} objects with embeddings in manifest")
    return np.array(images), np.array(texts), np.array(targets)


@dataclass(frozen=True)
class FixedEstimator:
    """The conventional baseline: one fixed reflectance for every object."""

    value: float
    method_id: str = ""

    def __post_init__(self) -> None:
        if not 0.0 < self.value <= 1.0:
            raise DataError(f"fixed reflectance must lie in (0, 1], got {self.value}")
        if not self.method_id:
            object.__setattr__(self, "method_id", f"fixed_{format(self.value, 'g')}")

    def estimate_alpha(self, record: ObjectRecord) -> float:
        return self.value


@dataclass(frozen=True)
class GroundTruthEstimator:
    method_id: str = "ground_truth"

    def estimate_alpha(self, record: ObjectRecord) -> float:
        if record.true_alpha is None:
            raise DataError(f"object {record.object_id!r} has no calibrated alpha")
        return record.true_alpha


@dataclass
class HeadEstimator:
    """Trained head over stored embeddings; averages raw per-view outputs."""

    params: HeadParams
    embeddings: list[EmbeddingVector]
    fusion: FusionMode = FusionMode.IMAGE_ONLY
    method_id: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.method_id:
            self.method_id = f"head_{self.fusion.value}"
        self._index = index_embeddings(self.embeddings)

    def _views(self, object_id: str, modality: Modality) -> list[np.ndarray]:
        group = self._index.get((object_id, modality), [])
        return [vec.values for vec in group]

    def estimate_alpha(self, record: ObjectRecord) -> float:
        images = self._views(record.object_id, Modality.IMAGE)
        texts = self._views(record.object_id, Modality.TEXT)
        if self.fusion is FusionMode.TEXT_ONLY:
            if not texts:
                raise DataError(f"no text embedding for {record.object_id!r}")
            inputs = texts
        elif self.fusion is FusionMode.IMAGE_ONLY:
            if not images:
                raise DataError(f"no image embeddings for {record.object_id!r}")
            inputs = images
        else:
            if not images or not texts:
                raise DataError(
                    f"{self.fusion.value} fusion needs image and text embeddings "
                    f"for {record.object_id!r}"
                )
            # one text vector per object: broadcast it across the views
            inputs = [fuse(img, texts[0], self.fusion) for img in images]
        raw = [float(head_forward(self.params, x)) for x in inputs]
        mean = float(np.mean(raw))
        return min(max(mean, 0.0), 1.0)


@dataclass
class CategoricalEstimator:
    """Likelihood-weighted category reflectance (the classifier-style baseline).

    Default likelihoods are one-hot on the object's manifest category, i.e. a
    perfect classifier; pass ``likelihood_fn`` to model an imperfect one.
    """

    category_alphas: dict[str, float]
    method_id: str = "categorical"
    likelihood_fn: "callable | None" = None

    @classmethod
    def from_manifest(cls, manifest: Manifest) -> "CategoricalEstimator":
        """Per-category mean calibrated alpha over the training split."""
        sums: dict[str, list[float]] = {}
        for rec in manifest.split_objects(Split.TRAIN):
            if rec.true_alpha is None:
                raise DataError(
                    f"train object {rec.object_id!r} has no calibrated alpha"
                )
            sums.setdefault(rec.category.value, []).append(rec.true_alpha)
        if not sums:
            raise DataError("manifest has no calibrated training objects")
        return cls({cat: float(np.mean(vals)) for cat, vals in sums.items()})

    def estimate_alpha(self, record: ObjectRecord) -> float:
        categories = sorted(self.category_alphas)
        alphas = np.array([self.category_alphas[c] for c in categories])
        if self.likelihood_fn is not None:
            likelihoods = np.asarray(self.likelihood_fn(record, categories), dtype=float)
        else:
            likelihoods = np.array(
                [1.0 if c == record.category.value else 0.0 for c in categories]
            )
        if record.category.value not in categories and self.likelihood_fn is None:
            raise DataError(
                f"no category alpha for {record.category.value!r} "
                f"(object {record.object_id!r})"
            )
        from .head import categorical_expectation

        return categorical_expectation(likelihoods, alphas)


@dataclass
class PredictionTableEstimator:
    """Replays stored predictions (e.g. a prompt run) as an estimator.

    Per-object trials are averaged into one value, mirroring how per-view
    predictions are reduced elsewhere.
    """

    method_id: str
    table: dict[str, float]

    @classmethod
    def from_records(
        cls, records: list[PredictionRecord], method_id: str | None = None
    ) -> "PredictionTableEstimator":
        if not records:
            raise DataError("no prediction records supplied")
        methods = sorted({r.method_id for r in records})
        if method_id is None:
            if len(methods) != 1:
                raise DataError(
                    f"records contain several methods {methods}; pick one explicitly"
                )
            method_id = methods[0]
        grouped: dict[str, list[float]] = {}
        for rec in records:
            if rec.method_id == method_id:
                grouped.setdefault(rec.object_id, []).append(rec.predicted_alpha)
        if not grouped:
            raise DataError(f"no records for method {method_id!r}")
        return cls(
            method_id=method_id,
            table={obj: float(np.mean(vals)) for obj, vals in grouped.items()},
        )

    def estimate_alpha(self, record: ObjectRecord) -> float:
        try:
            return self.table[record.object_id]
        except KeyError:
            raise DataError(
                f"method {self.method_id!r} has no prediction for {record.object_id!r}"
            ) from None
