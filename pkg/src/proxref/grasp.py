"""Simulated fingertip-advance grasping.

One trial: read the (optionally noisy) proximity current at the object's true
standoff distance, invert it under the estimated reflectance, and command the
fingertip to advance that far.  Overestimated reflectance overshoots and
presses into the object (contact force from a linear spring, capped);
underestimated reflectance stops short (distance error).  In the noiseless
case the advance error has the closed form

    delta = ((alpha_hat / alpha) ** (1/n) - 1) * (d + d0)

so its sign always matches sign(alpha_hat - alpha).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Manifest, ObjectRecord, Split
from .errors import DataError
from .sensor import (
    CurrentReading,
    Reflectance,
    SensorIntrinsics,
    forward_current,
    invert_distance,
)

DEFAULT_MAX_FORCE_N = 5.2
DEFAULT_CONTACT_TOLERANCE_MM = 0.05
DEFAULT_STANDOFF_MM = 10.0
DEFAULT_STIFFNESS_N_PER_MM = 1.0
DEFAULT_REPETITIONS = 5


class GraspOutcome(enum.Enum):
    CLEAN_GRASP = "clean_grasp"
    UNDERREACH = "underreach"
    OVERREACH = "overreach"


@dataclass(frozen=True)
class GraspScene:
    """Ground truth for one grasp attempt."""

    true_alpha: Reflectance
    true_distance_mm: float
    intrinsics: SensorIntrinsics
    stiffness_n_per_mm: float = DEFAULT_STIFFNESS_N_PER_MM
    max_force_n: float = DEFAULT_MAX_FORCE_N
    deformation_limit_mm: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.true_alpha, Reflectance):
            object.__setattr__(self, "true_alpha", Reflectance(float(self.true_alpha)))
        if self.true_distance_mm <= 0:
            raise DataError(f"true_distance_mm must be > 0, got {self.true_distance_mm}")
        if self.stiffness_n_per_mm <= 0:
            raise DataError(f"stiffness must be > 0, got {self.stiffness_n_per_mm}")
        if self.max_force_n <= 0:
            raise DataError(f"max_force_n must be > 0, got {self.max_force_n}")


@dataclass(frozen=True)
class GraspTrialResult:
    """Outcome of one trial; exactly one of the two error fields is set."""

    object_id: str
    method_id: str
    trial_index: int
    outcome: GraspOutcome
    commanded_advance_mm: float
    distance_error_mm: float | None = None
    force_n: float | None = None

    def __post_init__(self) -> None:
        if self.outcome is GraspOutcome.UNDERREACH:
            if self.distance_error_mm is None or self.distance_error_mm <= 0:
                raise DataError("underreach requires a positive distance error")
            if self.force_n is not None:
                raise DataError("underreach must not carry a force")
        elif self.outcome is GraspOutcome.OVERREACH:
            if self.force_n is None or self.force_n <= 0:
                raise DataError("overreach requires a positive force")
            if self.distance_error_mm is not None:
                raise DataError("overreach must not carry a distance error")
        else:
            if self.distance_error_mm is not None or self.force_n is not None:
                raise DataError("clean grasp carries neither error value")


def read_current(
    scene: GraspScene,
    noise_rel: float = 0.0,
    rng: np.random.Generator | None = None,
) -> CurrentReading:
    """Simulated sensor reading at the true standoff, with relative noise."""
    reading = forward_current(scene.intrinsics, scene.true_alpha, scene.true_distance_mm)
    if noise_rel == 0.0:
        return reading
    if rng is None:
        rng = np.random.default_rng()
    factor = max(1.0 + rng.normal(0.0, noise_rel), 1e-9)
    return CurrentReading(reading.i_all * factor)


def plan_advance(
    scene: GraspScene,
    alpha_hat: "Reflectance | float",
    noise_rel: float = 0.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Commanded fingertip advance under the estimated reflectance."""
    reading = read_current(scene, noise_rel=noise_rel, rng=rng)
    return invert_distance(scene.intrinsics, alpha_hat, reading)


def simulate_grasp(
    scene: GraspScene,
    alpha_hat: "Reflectance | float",
    object_id: str = "object",
    method_id: str = "method",
    trial_index: int = 0,
    tolerance_mm: float = DEFAULT_CONTACT_TOLERANCE_MM,
    noise_rel: float = 0.0,
    rng: np.random.Generator | None = None,
) -> GraspTrialResult:
    """Run one trial and classify the outcome.

    Advance beyond the true distance presses into the object with
    force = stiffness * overshoot, capped at the gripper's max force; stopping
    short leaves a distance error.  Within +/- tolerance counts as clean.
    """
    advance = plan_advance(scene, alpha_hat, noise_rel=noise_rel, rng=rng)
    delta = advance - scene.true_distance_mm
    if delta > tolerance_mm:
        force = min(scene.stiffness_n_per_mm * delta, scene.max_force_n)
        return GraspTrialResult(
            object_id=object_id,
            method_id=method_id,
            trial_index=trial_index,
            outcome=GraspOutcome.OVERREACH,
            commanded_advance_mm=advance,
            force_n=force,
        )
    if delta < -tolerance_mm:
        return GraspTrialResult(
            object_id=object_id,
            method_id=method_id,
            trial_index=trial_index,
            outcome=GraspOutcome.UNDERREACH,
            commanded_advance_mm=advance,
            distance_error_mm=-delta,
        )
    return GraspTrialResult(
        object_id=object_id,
        method_id=method_id,
        trial_index=trial_index,
        outcome=GraspOutcome.CLEAN_GRASP,
        commanded_advance_mm=advance,
    )


@dataclass(frozen=True)
class SceneConfig:
    """Protocol-level scene defaults; per-object stiffness comes from the manifest."""

    intrinsics: SensorIntrinsics = SensorIntrinsics()
    standoff_mm: float = DEFAULT_STANDOFF_MM
    default_stiffness_n_per_mm: float = DEFAULT_STIFFNESS_N_PER_MM
    max_force_n: float = DEFAULT_MAX_FORCE_N
    tolerance_mm: float = DEFAULT_CONTACT_TOLERANCE_MM
    noise_rel: float = 0.0


@dataclass(frozen=True)
class EstimatorFailure:
    method_id: str
    object_id: str
    message: str


@dataclass
class ProtocolRun:
    results: list[GraspTrialResult]
    failures: list[EstimatorFailure] = field(default_factory=list)


def scene_for(record: ObjectRecord, config: SceneConfig) -> GraspScene:
    if record.true_alpha is None:
        raise DataError(f"object {record.object_id!r} has no calibrated alpha")
    stiffness = record.stiffness_n_per_mm or config.default_stiffness_n_per_mm
    return GraspScene(
        true_alpha=Reflectance(record.true_alpha),
        true_distance_mm=config.standoff_mm,
        intrinsics=config.intrinsics,
        stiffness_n_per_mm=stiffness,
        max_force_n=config.max_force_n,
    )


def run_protocol(
    manifest: Manifest,
    methods: list,
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = 0,
    config: SceneConfig | None = None,
    objects: list[ObjectRecord] | None = None,
) -> ProtocolRun:
    """Grasp every (method, test object) pair ``repetitions`` times.

    Per-trial noise generators are pre-split from the master seed, so the
    result list is identical no matter in which order trials execute.  An
    estimator failing on an object is recorded once and that pair is skipped.
    """
    if repetitions < 1:
        raise DataError(f"repetitions must be >= 1, got {repetitions}")
    config = config or SceneConfig()
    records = objects if objects is not None else manifest.split_objects(Split.TEST)
    if not records:
        raise DataError("no objects to grasp")
    ids = [m.method_id for m in methods]
    if len(set(ids)) != len(ids):
        raise DataError(f"duplicate method ids in {ids}")

    seeds = np.random.SeedSequence(seed).spawn(len(methods) * len(records) * repetitions)
    run = ProtocolRun(results=[])
    cursor = 0
    for method in methods:
        for record in records:
            try:
                scene = scene_for(record, config)
                alpha_hat = Reflectance.clamped(float(method.estimate_alpha(record)))
            except DataError as exc:
                run.failures.append(
                    EstimatorFailure(method.method_id, record.object_id, str(exc))
                )
                cursor += repetitions
                continue
            for rep in range(repetitions):
                rng = np.random.default_rng(seeds[cursor])
                cursor += 1
                run.results.append(
                    simulate_grasp(
                        scene,
                        alpha_hat,
                        object_id=record.object_id,
                        method_id=method.method_id,
                        trial_index=rep,
                        tolerance_mm=config.tolerance_mm,
                        noise_rel=config.noise_rel,
                        rng=rng,
                    )
                )
    return run


# ---------------------------------------------------------------------------
# results CSV: method_id,object_id,trial_index,outcome,value_mm_or_N,commanded_advance_mm

GRASP_HEADER = [
    "method_id",
    "object_id",
    "trial_index",
    "outcome",
    "value_mm_or_N",
    "commanded_advance_mm",
]


def save_grasp_results(results: list[GraspTrialResult], path) -> None:
    ordered = sorted(results, key=lambda r: (r.method_id, r.object_id, r.trial_index))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRASP_HEADER)
        for res in ordered:
            if res.outcome is GraspOutcome.UNDERREACH:
                value = repr(float(res.distance_error_mm))
            elif res.outcome is GraspOutcome.OVERREACH:
                value = repr(float(res.force_n))
            else:
                value = ""
            writer.writerow(
                [
                    res.method_id,
                    res.object_id,
                    res.trial_index,
                    res.outcome.value,
                    value,
                    repr(float(res.commanded_advance_mm)),
                ]
            )


def load_grasp_results(path) -> list[GraspTrialResult]:
    results: list[GraspTrialResult] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GRASP_HEADER:
            raise DataError(f"{path}: expected header {GRASP_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise DataError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                outcome = GraspOutcome(row[3])
                value = float(row[4]) if row[4] else None
                if value is not None and not math.isfinite(value):
                    raise DataError(f"non-finite value {row[4]!r}")
                results.append(
                    GraspTrialResult(
                        object_id=row[1],
                        method_id=row[0],
                        trial_index=int(row[2]),
                        outcome=outcome,
                        commanded_advance_mm=float(row[5]),
                        distance_error_mm=value if outcome is GraspOutcome.UNDERREACH else None,
                        force_n=value if outcome is GraspOutcome.OVERREACH else None,
                    )
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return results
