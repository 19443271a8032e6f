"""Reflectance recovery from distance sweeps of current readings.

Ground truth reflectance comes from sweeping the sensor across a range of
known distances (default 5..30 mm, six stops, each current averaged over 200
samples) and fitting the power law to the averaged readings.  With known
intrinsics the model is linear in alpha, so ``fit_alpha`` is an exact
closed-form least-squares solve; ``fit_full`` handles the unknown-intrinsics
case with a damped Gauss-Newton loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError
from .sensor import Reflectance, SensorIntrinsics, _as_alpha, forward_current

DEFAULT_SWEEP_MIN_MM = 5.0
DEFAULT_SWEEP_MAX_MM = 30.0
DEFAULT_SWEEP_STEPS = 6
DEFAULT_SWEEP_REPEATS = 200


@dataclass(frozen=True)
class SweepSample:
    """One averaged current measurement at a known distance."""

    distance_mm: float
    current_mean: float
    repeat_count: int = 1

    def __post_init__(self) -> None:
        d = float(self.distance_mm)
        i = float(self.current_mean)
        r = int(self.repeat_count)
        if not math.isfinite(d) or d < 0:
            raise DataError(f"distance_mm must be finite and >= 0, got {d!r}")
        if not math.isfinite(i) or i <= 0:
            raise DataError(f"current_mean must be finite and > 0, got {i!r}")
        if r < 1:
            raise DataError(f"repeat_count must be >= 1, got {r}")
        object.__setattr__(self, "distance_mm", d)
        object.__setattr__(self, "current_mean", i)
        object.__setattr__(self, "repeat_count", r)


@dataclass(frozen=True)
class SweepSeries:
    """Ordered sweep for one object: strictly increasing distances."""

    object_id: str
    samples: tuple[SweepSample, ...]

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        if len(samples) < 2:
            raise DataError(
                f"sweep for {self.object_id!r} needs >= 2 samples, got {len(samples)}"
            )
        dists = [s.distance_mm for s in samples]
        for a, b in zip(dists, dists[1:]):
            if not a < b:
                raise DataError(
                    f"sweep distances must be strictly increasing, got {a} then {b}"
                )
        object.__setattr__(self, "samples", samples)

    @property
    def distances(self) -> np.ndarray:
        return np.array([s.distance_mm for s in self.samples], dtype=float)

    @property
    def currents(self) -> np.ndarray:
        return np.array([s.current_mean for s in self.samples], dtype=float)


@dataclass(frozen=True)
class CalibrationResult:
    """Closed-form alpha estimate plus its fit quality.

    ``alpha`` is the raw least-squares solution; when it exceeds 1 it is kept
    as-is with ``out_of_bounds`` set so ground-truth pipelines can fail loudly
    while estimator pipelines clamp downstream.
    """

    alpha: float
    rms_residual: float
    sample_count: int
    out_of_bounds: bool = False

    def reflectance(self, clamp: bool = False) -> Reflectance:
        if clamp:
            return Reflectance.clamped(self.alpha)
        return Reflectance(self.alpha)


def fit_alpha(intrinsics: SensorIntrinsics, sweep: SweepSeries) -> CalibrationResult:
    """Exact least squares for alpha with known intrinsics.

    Minimizes sum_i (I_i - alpha * g_i)^2 with g_i = (d_i + d0)^(-n), whose
    closed form is alpha* = sum(I_i g_i) / sum(g_i^2).
    """
    g = (sweep.distances + intrinsics.d0_mm) ** (-intrinsics.n)
    denom = float(np.dot(g, g))
    if denom == 0.0:
        raise DataError(
            f"degenerate sweep for {sweep.object_id!r}: basis underflowed to zero"
        )
    currents = sweep.currents
    alpha = float(np.dot(currents, g)) / denom
    if alpha <= 0:
        raise DataError(
            f"fit for {sweep.object_id!r} produced non-positive alpha {alpha}"
        )
    residual = currents - alpha * g
    rms = float(np.sqrt(np.mean(residual**2)))
    return CalibrationResult(
        alpha=alpha,
        rms_residual=rms,
        sample_count=len(sweep.samples),
        out_of_bounds=alpha > 1.0,
    )


@dataclass(frozen=True)
class FullFitResult:
    """Joint (alpha, d0, n) fit outcome."""

    alpha: float
    d0_mm: float
    n: float
    rms_residual: float
    iterations: int
    converged: bool
    cost_history: tuple[float, ...] = field(default=(), repr=False)


def _power_basis(distances: np.ndarray, d0: float, n: float) -> np.ndarray:
    return (distances + d0) ** (-n)


def fit_full(
    sweep: SweepSeries,
    initial: tuple[float, float, float],
    max_iterations: int = 200,
    rel_tol: float = 1e-10,
) -> FullFitResult:
    """Damped Gauss-Newton fit of (alpha, d0, n) to one sweep.

    Steps that would drive any d_i + d0 <= 0, alpha <= 0 or n <= 0 are
    rejected by raising the damping factor; convergence is declared when the
    relative parameter change drops below ``rel_tol``.  Raises
    ConvergenceError (carrying the last iterate) when the iteration budget or
    the damping range is exhausted.
    """
    if len(sweep.samples) < 4:
        raise DataError(
            f"joint fit needs >= 4 samples, sweep {sweep.object_id!r} has "
            f"{len(sweep.samples)}"
        )
    d = sweep.distances
    currents = sweep.currents
    alpha, d0, n = (float(v) for v in initial)
    if alpha <= 0 or n <= 0 or np.any(d + d0 <= 0):
        raise DataError(f"initial iterate ({alpha}, {d0}, {n}) outside the model domain")

    def residuals(a: float, off: float, exp_: float) -> np.ndarray:
        return currents - a * _power_basis(d, off, exp_)

    r = residuals(alpha, d0, n)
    cost = float(r @ r)
    cost_history = [cost]
    lam = 1e-3
    iterations = 0

    def result(converged: bool) -> FullFitResult:
        return FullFitResult(
            alpha=alpha,
            d0_mm=d0,
            n=n,
            rms_residual=float(np.sqrt(cost / len(d))),
            iterations=iterations,
            converged=converged,
            cost_history=tuple(cost_history),
        )

    for iterations in range(1, max_iterations + 1):
        base = d + d0
        g = base ** (-n)
        # residual r_i = I_i - alpha * g_i
        jac = np.column_stack(
            [
                -g,
                alpha * n * base ** (-n - 1.0),
                alpha * g * np.log(base),
            ]
        )
        normal = jac.T @ jac
        grad = jac.T @ r
        accepted = False
        while lam <= 1e12:
            damped = normal + lam * np.diag(np.diag(normal))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = np.array([alpha, d0, n]) + step
            a_new, d0_new, n_new = (float(v) for v in cand)
            if a_new <= 0 or n_new <= 0 or np.any(d + d0_new <= 0):
                lam *= 10.0
                continue
            r_new = residuals(a_new, d0_new, n_new)
            cost_new = float(r_new @ r_new)
            if not math.isfinite(cost_new) or cost_new > cost:
                lam *= 10.0
                continue
            rel_change = float(
                np.max(np.abs(step) / (np.abs([alpha, d0, n]) + 1e-300))
            )
            alpha, d0, n = a_new, d0_new, n_new
            r, cost = r_new, cost_new
            cost_history.append(cost)
            lam = max(lam / 10.0, 1e-12)
            accepted = True
            break
        if not accepted:
            raise ConvergenceError(
                f"joint fit for {sweep.object_id!r} stalled: damping exhausted "
                f"at iteration {iterations} (cost {cost:.3e})",
                last_result=result(False),
            )
        if rel_change < rel_tol:
            return result(True)
    raise ConvergenceError(
        f"joint fit for {sweep.object_id!r} did not converge in "
        f"{max_iterations} iterations (cost {cost:.3e})",
        last_result=result(False),
    )


def simulate_sweep(
    intrinsics: SensorIntrinsics,
    alpha: "Reflectance | float",
    d_min_mm: float = DEFAULT_SWEEP_MIN_MM,
    d_max_mm: float = DEFAULT_SWEEP_MAX_MM,
    steps: int = DEFAULT_SWEEP_STEPS,
    noise_rel: float = 0.0,
    repeats: int = DEFAULT_SWEEP_REPEATS,
    seed: int | None = None,
    object_id: str = "synthetic",
) -> SweepSeries:
    """Generate a sweep with equally spaced distances and averaged noisy draws.

    Each current_mean averages ``repeats`` draws of I * (1 + eps) with
    eps ~ Normal(0, noise_rel); fixed seeds reproduce the series bit for bit.
    With noise_rel == 0 the forward value is used directly (averaging
    identical doubles can round).
    """
    a = _as_alpha(alpha)
    if steps < 2:
        raise DataError(f"steps must be >= 2, got {steps}")
    if not d_min_mm < d_max_mm:
        raise DataError(f"need d_min < d_max, got {d_min_mm} >= {d_max_mm}")
    if noise_rel < 0:
        raise DataError(f"noise_rel must be >= 0, got {noise_rel}")
    if repeats < 1:
        raise DataError(f"repeats must be >= 1, got {repeats}")
    rng = np.random.default_rng(seed)
    samples = []
    for distance in np.linspace(d_min_mm, d_max_mm, steps):
        i_true = forward_current(intrinsics, a, float(distance)).i_all
        if noise_rel == 0.0:
            mean = i_true
        else:
            eps = rng.normal(0.0, noise_rel, size=repeats)
            mean = float(np.mean(i_true * (1.0 + eps)))
        samples.append(
            SweepSample(distance_mm=float(distance), current_mean=mean, repeat_count=repeats)
        )
    return SweepSeries(object_id=object_id, samples=tuple(samples))
