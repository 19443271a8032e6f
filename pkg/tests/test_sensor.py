import numpy as np
import pytest
from scipy.optimize import brentq

from proxref.errors import DataError, DomainError
from proxref.sensor import (
    CurrentReading,
    Reflectance,
    SensorIntrinsics,
    forward_current,
    invert_distance,
)

# independent high-precision evaluation of 0.326 * (17.3 + 2.5) ** -1.7,
# mpmath at 50 digits
FORWARD_ORACLE = 0.0020365110768989034


def brute_force_distance(intrinsics, alpha, i_all, lo=-0.999, hi=1e4):
    """Root search on the forward model, independent of the closed form."""

    def f(d):
        return alpha * (d + intrinsics.d0_mm) ** (-intrinsics.n) - i_all

    return brentq(f, lo * intrinsics.d0_mm if intrinsics.d0_mm else lo, hi, xtol=1e-12)


class TestTypes:
    def test_intrinsics_validation(self):
        SensorIntrinsics(0.0, 0.5)
        with pytest.raises(DataError):
            SensorIntrinsics(-0.1, 2.0)
        with pytest.raises(DataError):
            SensorIntrinsics(1.0, 0.0)
        with pytest.raises(DataError):
            SensorIntrinsics(float("nan"), 2.0)

    def test_reflectance_bounds(self):
        Reflectance(1.0)
        Reflectance(0.5)
        for bad in (0.0, -0.2, 1.0001, float("inf")):
            with pytest.raises(DataError):
                Reflectance(bad)

    def test_reflectance_clamped(self):
        assert Reflectance.clamped(1.7).alpha == 1.0
        assert Reflectance.clamped(-3.0).alpha == 1e-6
        assert Reflectance.clamped(0.42).alpha == 0.42

    def test_current_reading_positive(self):
        CurrentReading(1e-9)
        for bad in (0.0, -1.0, float("nan")):
            with pytest.raises(DataError):
                CurrentReading(bad)


class TestForward:
    def test_unit_case(self, intrinsics):
        assert forward_current(intrinsics, 1.0, 0.0).i_all == 1.0

    def test_half_alpha_at_one_mm(self, intrinsics):
        assert forward_current(intrinsics, 0.5, 1.0).i_all == pytest.approx(0.125, abs=0)

    def test_against_high_precision_oracle(self):
        intr = SensorIntrinsics(d0_mm=2.5, n=1.7)
        got = forward_current(intr, 0.326, 17.3).i_all
        assert got == pytest.approx(FORWARD_ORACLE, rel=1e-12)

    def test_singularity_rejected(self):
        intr = SensorIntrinsics(d0_mm=0.0, n=2.0)
        with pytest.raises(DomainError):
            forward_current(intr, 1.0, 0.0)

    def test_negative_distance_rejected(self, intrinsics):
        with pytest.raises(DomainError):
            forward_current(intrinsics, 1.0, -0.5)

    def test_monotone_decreasing_in_distance(self, rng):
        for _ in range(200):
            intr = SensorIntrinsics(rng.uniform(0, 5), rng.uniform(0.5, 4))
            alpha = rng.uniform(0.05, 1.0)
            d1, d2 = sorted(rng.uniform(0.1, 100, size=2))
            if d1 == d2:
                continue
            i1 = forward_current(intr, alpha, d1).i_all
            i2 = forward_current(intr, alpha, d2).i_all
            assert i1 > i2

    def test_linear_in_alpha(self, rng):
        for _ in range(200):
            intr = SensorIntrinsics(rng.uniform(0, 5), rng.uniform(0.5, 4))
            alpha = rng.uniform(0.05, 0.5)
            d = rng.uniform(0.1, 100)
            one = forward_current(intr, alpha, d).i_all
            two = forward_current(intr, 2 * alpha, d).i_all
            assert two == pytest.approx(2 * one, rel=1e-12)


class TestInvert:
    def test_round_trip(self, intrinsics):
        reading = forward_current(intrinsics, 0.7, 12.0)
        assert invert_distance(intrinsics, 0.7, reading) == pytest.approx(12.0, abs=1e-9)

    def test_unit_reading_gives_zero(self, intrinsics):
        assert invert_distance(intrinsics, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive_reading_rejected(self, intrinsics):
        with pytest.raises(DataError):
            invert_distance(intrinsics, 1.0, 0.0)

    def test_overshoot_closed_form(self, intrinsics):
        # assumed alpha 1.0 against a reading generated with true alpha 0.5 at 10 mm
        reading = forward_current(intrinsics, 0.5, 10.0)
        got = invert_distance(intrinsics, 1.0, reading)
        assert got == pytest.approx(14.556349186104045, rel=1e-12)
        # brute-force root search agrees
        brute = brute_force_distance(intrinsics, 1.0, reading.i_all)
        assert got == pytest.approx(brute, abs=1e-9)

    def test_negative_distance_returned_not_clamped(self, intrinsics):
        # assumed alpha far below truth reads "closer than contact"
        reading = forward_current(intrinsics, 1.0, 0.1)
        assert invert_distance(intrinsics, 0.1, reading) < 0

    def test_round_trip_randomized(self, rng):
        for _ in range(1000):
            intr = SensorIntrinsics(rng.uniform(0, 5), rng.uniform(0.5, 4))
            alpha = rng.uniform(0.05, 1.0)
            d = rng.uniform(0.1, 100)
            back = invert_distance(intr, alpha, forward_current(intr, alpha, d))
            assert abs(back - d) <= 1e-9 * (1 + d)

    def test_overshoot_identity_randomized(self, rng):
        for _ in range(500):
            intr = SensorIntrinsics(rng.uniform(0, 5), rng.uniform(0.5, 4))
            alpha = rng.uniform(0.05, 1.0)
            alpha_hat = rng.uniform(0.05, 1.0)
            d = rng.uniform(0.1, 100)
            reading = forward_current(intr, alpha, d)
            got = invert_distance(intr, alpha_hat, reading)
            expected = (alpha_hat / alpha) ** (1.0 / intr.n) * (d + intr.d0_mm) - intr.d0_mm
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)
