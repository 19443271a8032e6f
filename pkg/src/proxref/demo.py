"""Fully synthetic demo dataset.

None of this is recorded sensor data: object names, reflectances, sweeps and
embeddings are all generated.  Embeddings are planted on a low-dimensional
latent so a linear teacher maps them to reflectance: per object a latent
z ~ N(0, I_k), reflectance clip(w.z + c), image views A.z + per-view noise and
one text vector B.z, with A and B fixed orthonormal maps scaled so embedding
components are O(1).  Sweeps come from the power-law simulator with
multiplicative noise, so the calibration stage recovers each alpha the same
way the real pipeline would.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import simulate_sweep
from .data import (
    Category,
    EmbeddingVector,
    Manifest,
    Modality,
    ObjectRecord,
    Split,
    save_embeddings,
    save_manifest,
    save_sweeps,
)
from .prompting import EstimateReply, render_reply
from .sensor import SensorIntrinsics

_ADJECTIVES = [
    "matte", "glossy", "clear", "foamy", "ridged", "woven", "brushed",
    "painted", "frosted", "waxed", "dusty", "polished",
]
_NOUNS = [
    "bottle", "box", "mug", "tube", "sponge", "jar", "brush", "block",
    "can", "pouch", "lens", "tile",
]

_CATEGORY_CYCLE = [
    Category.REGULAR,
    Category.REGULAR,
    Category.REGULAR,
    Category.IRREGULAR,
    Category.REGULAR,
    Category.TRANSPARENT,
]

DEMO_NOTE = "synthetic demo data generated by proxref; no recorded measurements"


def _names(count: int) -> list[str]:
    names = [f"{adj} {noun}" for noun in _NOUNS for adj in _ADJECTIVES]
    if count > len(names):
        raise ValueError(f"demo vocabulary supports up to {len(names)} objects")
    return names[:count]


def _orthonormal_map(rng: np.random.Generator, dim: int, latent_dim: int) -> np.ndarray:
    raw = rng.normal(size=(dim, latent_dim))
    q, _ = np.linalg.qr(raw)
    return q[:, :latent_dim]


@dataclass
class PlantedDataset:
    """In-memory planted data, before any files are written."""

    records: list[ObjectRecord]
    alphas: dict[str, float]  # planted teacher values
    image_vectors: list[EmbeddingVector]
    text_vectors: list[EmbeddingVector]
    latent: dict[str, np.ndarray]
    teacher_w: np.ndarray
    teacher_c: float


def make_planted_dataset(
    seed: int = 7,
    n_objects: int = 54,
    n_train: int = 40,
    views: int = 6,
    dim: int = 512,
    latent_dim: int = 2,
    view_noise: float = 0.02,
    teacher_std: float = 0.15,
    teacher_mean: float = 0.5,
    alpha_lo: float = 0.1,
    alpha_hi: float = 0.95,
) -> PlantedDataset:
    if not 0 < n_train < n_objects:
        raise ValueError(f"need 0 < n_train < n_objects, got {n_train}/{n_objects}")
    root = np.random.SeedSequence(seed)
    rng_latent, rng_maps, rng_views, rng_split = (
        np.random.default_rng(s) for s in root.spawn(4)
    )

    names = _names(n_objects)
    split_order = rng_split.permutation(n_objects)
    splits = [Split.TEST] * n_objects
    for idx in split_order[:n_train]:
        splits[idx] = Split.TRAIN

    scale = float(np.sqrt(dim / latent_dim))
    image_map = scale * _orthonormal_map(rng_maps, dim, latent_dim)
    text_map = scale * _orthonormal_map(rng_maps, dim, latent_dim)
    teacher_w = rng_maps.normal(size=latent_dim)
    teacher_w *= teacher_std / float(np.linalg.norm(teacher_w))
    teacher_c = teacher_mean

    records: list[ObjectRecord] = []
    alphas: dict[str, float] = {}
    latent: dict[str, np.ndarray] = {}
    image_vectors: list[EmbeddingVector] = []
    text_vectors: list[EmbeddingVector] = []
    for i, name in enumerate(names):
        object_id = f"obj{i:02d}"
        z = rng_latent.normal(size=latent_dim)
        alpha = float(np.clip(teacher_w @ z + teacher_c, alpha_lo, alpha_hi))
        stiffness = float(rng_latent.uniform(0.5, 2.0))
        records.append(
            ObjectRecord(
                object_id=object_id,
                name=name,
                category=_CATEGORY_CYCLE[i % len(_CATEGORY_CYCLE)],
                split=splits[i],
                stiffness_n_per_mm=round(stiffness, 3),
            )
        )
        alphas[object_id] = alpha
        latent[object_id] = z
        for view in range(views):
            noisy = image_map @ z + rng_views.normal(0.0, view_noise, size=dim)
            image_vectors.append(
                EmbeddingVector(
                    object_id=object_id,
                    modality=Modality.IMAGE,
                    view_index=view,
                    values=noisy,
                )
            )
        text_vectors.append(
            EmbeddingVector(
                object_id=object_id,
                modality=Modality.TEXT,
                view_index=0,
                values=text_map @ z,
            )
        )
    return PlantedDataset(
        records=records,
        alphas=alphas,
        image_vectors=image_vectors,
        text_vectors=text_vectors,
        latent=latent,
        teacher_w=teacher_w,
        teacher_c=teacher_c,
    )


def planted_matrices(
    data: PlantedDataset, split: Split
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(images, texts, targets) with one row per view, text repeated per view."""
    images, texts, targets = [], [], []
    text_by_object = {v.object_id: v.values for v in data.text_vectors}
    for vec in data.image_vectors:
        record = next(r for r in data.records if r.object_id == vec.object_id)
        if record.split is not split:
            continue
        images.append(vec.values)
        texts.append(text_by_object[vec.object_id])
        targets.append(data.alphas[vec.object_id])
    return np.array(images), np.array(texts), np.array(targets)


def _demo_transcripts(
    data: PlantedDataset, seed: int, trials: int, jitter: float = 0.05
) -> list[str]:
    """Canned reply texts, one per trial, covering every test object."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    texts = []
    for _ in range(trials):
        replies = []
        for rec in data.records:
            if rec.split is not Split.TEST:
                continue
            alpha = data.alphas[rec.object_id]
            pred = float(np.clip(alpha + rng.normal(0.0, jitter), 0.01, 0.99))
            lo = max(round(pred - 0.03, 3), 0.0)
            hi = min(round(pred + 0.04, 3), 1.0)
            replies.append(
                EstimateReply(
                    name=rec.name,
                    range_lo=lo,
                    range_hi=hi,
                    prediction=round(pred, 3),
                    reason=(
                        f"The surface of a {rec.name} is {rec.category.value}; "
                        f"compared with the reference objects its infrared "
                        f"reflectance should sit near {round(pred, 2)}."
                    ),
                )
            )
        texts.append(render_reply(replies))
    return texts


def write_demo(
    outdir,
    seed: int = 7,
    n_objects: int = 54,
    n_train: int = 40,
    views: int = 6,
    dim: int = 512,
    sweep_noise_rel: float = 0.01,
    sweep_repeats: int = 200,
    trials: int = 6,
    intrinsics: SensorIntrinsics | None = None,
) -> dict[str, str]:
    """Generate the demo dataset on disk; deterministic for a fixed seed.

    Returns the written paths.  The manifest carries no true_alpha values;
    the calibrate stage recovers them from the generated sweeps.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    intrinsics = intrinsics or SensorIntrinsics()
    data = make_planted_dataset(
        seed=seed, n_objects=n_objects, n_train=n_train, views=views, dim=dim
    )

    sweep_seeds = np.random.SeedSequence([seed, 202]).spawn(len(data.records))
    sweeps = {}
    for rec, sweep_seed in zip(data.records, sweep_seeds):
        sweeps[rec.object_id] = simulate_sweep(
            intrinsics,
            data.alphas[rec.object_id],
            noise_rel=sweep_noise_rel,
            repeats=sweep_repeats,
            seed=sweep_seed,
            object_id=rec.object_id,
        )

    sweeps_path = outdir / "sweeps.csv"
    image_path = outdir / "embeddings_image.csv"
    text_path = outdir / "embeddings_text.csv"
    manifest_path = outdir / "manifest.json"
    save_sweeps(sweeps, sweeps_path)
    save_embeddings(data.image_vectors, image_path)
    save_embeddings(data.text_vectors, text_path)

    manifest = Manifest(
        objects=data.records,
        embedding_dim=dim,
        sweep_files=["sweeps.csv"],
        embedding_files=["embeddings_image.csv", "embeddings_text.csv"],
        note=DEMO_NOTE,
        base_dir=outdir,
    )
    save_manifest(manifest, manifest_path)

    transcripts_dir = outdir / "transcripts"
    transcripts_dir.mkdir(exist_ok=True)
    transcript_paths = []
    for trial, text in enumerate(_demo_transcripts(data, seed, trials)):
        path = transcripts_dir / f"trial_{trial:02d}.txt"
        path.write_text(text, encoding="utf-8")
        transcript_paths.append(str(path))

    teacher_path = outdir / "teacher.json"
    teacher_path.write_text(
        json.dumps(
            {
                "note": DEMO_NOTE,
                "teacher_w": [float(v) for v in data.teacher_w],
                "teacher_c": data.teacher_c,
                "alphas": {k: data.alphas[k] for k in sorted(data.alphas)},
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    return {
        "manifest": str(manifest_path),
        "sweeps": str(sweeps_path),
        "embeddings_image": str(image_path),
        "embeddings_text": str(text_path),
        "transcripts_dir": str(transcripts_dir),
        "teacher": str(teacher_path),
    }
