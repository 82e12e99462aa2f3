"""Tests for radiation patterns and the pattern dictionary."""

import numpy as np
import pytest

from erfas.patterns import (
    Angle,
    CosinePowerPattern,
    IsotropicPattern,
    PatternDictionary,
    PatternError,
    TabulatedPattern,
    angle_from_vector,
    default_dictionary,
    dictionary_vector,
    eval_gain,
    isotropic_dictionary,
    load_tabulated_csv,
    normalize_pattern,
    power_integral,
)

FOUR_PI = 4.0 * np.pi
BORESIGHT = Angle(0.0, np.pi / 2)


def quadrature_power(pattern, n_el=180, n_az=360):
    """Independent midpoint quadrature of the squared gain over the sphere."""
    el = (np.arange(n_el) + 0.5) * np.pi / n_el
    az = -np.pi + (np.arange(n_az) + 0.5) * 2 * np.pi / n_az
    d_el = np.pi / n_el
    d_az = 2 * np.pi / n_az
    total = 0.0
    for e in el:
        for a in az:
            g = pattern.gain(Angle(a, e))
            total += g * g * np.sin(e) * d_el * d_az
    return total


class TestAngle:
    def test_unit_vector_boresight(self):
        v = Angle(0.0, np.pi / 2).unit_vector()
        np.testing.assert_allclose(v, [1.0, 0.0, 0.0], atol=1e-15)

    def test_unit_vector_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ang = Angle(rng.uniform(-np.pi, np.pi), rng.uniform(1e-3, np.pi - 1e-3))
            back = angle_from_vector(ang.unit_vector())
            assert abs(back.azimuth - ang.azimuth) < 1e-12
            assert abs(back.elevation - ang.elevation) < 1e-12

    def test_range_validation(self):
        with pytest.raises(ValueError):
            Angle(4.0, np.pi / 2)
        with pytest.raises(ValueError):
            Angle(0.0, -0.1)


class TestNormalization:
    def test_isotropic_integral_is_four_pi(self):
        val = power_integral(IsotropicPattern())
        assert abs(val - FOUR_PI) / FOUR_PI < 1e-3

    @pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
    def test_cosine_power_integral_is_four_pi(self, q):
        pat = CosinePowerPattern(q, BORESIGHT)
        val = power_integral(pat)
        assert abs(val - FOUR_PI) / FOUR_PI < 1e-3

    def test_cosine_power_peak_value(self):
        # peak gain is sqrt(2*(q+1)) at boresight
        assert abs(CosinePowerPattern(1.0, BORESIGHT).gain(Angle(0.0, np.pi / 2)) - 2.0) < 1e-12
        assert (
            abs(
                CosinePowerPattern(2.0, BORESIGHT).gain(Angle(0.0, np.pi / 2))
                - np.sqrt(6.0)
            )
            < 1e-12
        )

    def test_cosine_power_independent_quadrature(self):
        # closed-form scale agrees with a brute-force quadrature of the raw
        # pattern on a coarser grid
        pat = CosinePowerPattern(2.0, BORESIGHT)
        val = quadrature_power(pat, n_el=90, n_az=180)
        assert abs(val - FOUR_PI) / FOUR_PI < 1e-2

    def test_normalize_rejects_degenerate(self):
        zero = TabulatedPattern(
            az_grid=np.array([-np.pi, np.pi]),
            el_grid=np.array([0.0, np.pi]),
            samples=np.zeros((2, 2)),
            scale=1.0,
        )
        with pytest.raises(PatternError, match="degenerate"):
            normalize_pattern(zero)

    def test_normalize_rejects_negative_samples(self):
        with pytest.raises(PatternError, match="invalid sample"):
            TabulatedPattern(
                az_grid=np.array([-np.pi, np.pi]),
                el_grid=np.array([0.0, np.pi]),
                samples=np.array([[1.0, 1.0], [-1.0, 1.0]]),
                scale=1.0,
            )


class TestCosinePower:
    def test_rolls_off_away_from_boresight(self):
        pat = CosinePowerPattern(2.0, BORESIGHT)
        g0 = pat.gain(Angle(0.0, np.pi / 2))
        g1 = pat.gain(Angle(0.5, np.pi / 2))
        g2 = pat.gain(Angle(1.0, np.pi / 2))
        assert g0 > g1 > g2

    def test_zero_in_back_halfspace(self):
        pat = CosinePowerPattern(2.0, BORESIGHT)
        assert pat.gain(Angle(np.pi, np.pi / 2)) == 0.0

    def test_steered_boresight(self):
        pat = CosinePowerPattern(2.0, Angle(0.5, np.pi / 2))
        assert pat.gain(Angle(0.5, np.pi / 2)) > pat.gain(Angle(0.0, np.pi / 2))

    def test_continuity(self):
        pat = CosinePowerPattern(2.0, BORESIGHT)
        az = np.linspace(-1.2, 1.2, 400)
        g = np.array([pat.gain(Angle(a, np.pi / 2)) for a in az])
        assert np.max(np.abs(np.diff(g))) < 0.05

    def test_rejects_nonpositive_q(self):
        with pytest.raises(ValueError):
            CosinePowerPattern(-1.0, BORESIGHT)


class TestDictionary:
    def test_default_dictionary_vector(self):
        # three states steered to -30/0/+30 degrees; at broadside the middle
        # state dominates and the outer two match by symmetry
        d = default_dictionary()
        vec = d.vector(Angle(0.0, np.pi / 2))
        assert vec.shape == (3,)
        assert abs(vec[0] - vec[2]) < 1e-12
        assert vec[1] > vec[0]
        assert abs(vec[1] - np.sqrt(6.0)) < 1e-12

    def test_dictionary_vector_helper_matches_method(self):
        d = default_dictionary()
        ang = Angle(0.3, np.pi / 2)
        np.testing.assert_allclose(dictionary_vector(d, ang), d.vector(ang))

    def test_isotropic_dictionary(self):
        d = isotropic_dictionary()
        assert len(d) == 1
        np.testing.assert_allclose(d.vector(Angle(1.0, 1.0)), [1.0])

    def test_gain_matrix_shape(self):
        d = default_dictionary()
        az = np.zeros((2, 5))
        el = np.full((2, 5), np.pi / 2)
        mat = d.gain_matrix(az, el)
        assert mat.shape == (3, 2, 5)

    def test_empty_dictionary_rejected(self):
        with pytest.raises(ValueError):
            PatternDictionary(patterns=())


class TestTabulated:
    def make_csv(self, tmp_path, rows):
        path = tmp_path / "pattern.csv"
        path.write_text("el_deg,az_deg,gain\n" + "\n".join(rows) + "\n")
        return path

    def test_load_and_interpolate(self, tmp_path):
        rows = []
        for el in (0.0, 90.0, 180.0):
            for az in (-180.0, 0.0, 180.0):
                rows.append(f"{el},{az},1.0")
        pat = load_tabulated_csv(self.make_csv(tmp_path, rows))
        # uniform table normalizes to the isotropic gain (quadrature-limited)
        assert abs(pat.gain(Angle(0.7, 1.1)) - 1.0) < 1e-4

    def test_incomplete_grid_rejected(self, tmp_path):
        rows = ["0.0,-180.0,1.0", "0.0,180.0,1.0", "180.0,-180.0,1.0"]
        with pytest.raises(PatternError):
            load_tabulated_csv(self.make_csv(tmp_path, rows))

    def test_eval_gain_dispatch(self):
        pat = CosinePowerPattern(2.0, BORESIGHT)
        ang = Angle(0.2, 1.3)
        assert eval_gain(pat, ang) == pat.gain(ang)
