import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfp.grid import (
    RadialDistribution,
    ball,
    build_grid,
    check_cutoff,
    gaussian,
    gaussian_with_moments,
    sample_profile,
    zero,
)


def test_layout_8_cells():
    g = build_grid(8, 1.0)
    assert np.allclose(g.faces, np.arange(9) / 8.0, rtol=0, atol=0)
    assert g.faces[0] == 0.0 and g.faces[-1] == 1.0
    assert g.centers[0] == 0.0625 and g.centers[-1] == 0.9375


def test_layout_100_cells():
    g = build_grid(100, 20.0)
    assert g.dr == pytest.approx(0.2, rel=1e-15)
    assert g.centers[0] == pytest.approx(0.1, rel=1e-15)


@pytest.mark.parametrize("n, r_max", [(7, 1.0), (8, 0.0), (8, -1.0), (8, math.inf), (8.5, 1.0)])
def test_build_grid_rejects(n, r_max):
    with pytest.raises(ValueError):
        build_grid(n, r_max)


@given(st.integers(8, 5000), st.floats(1e-3, 1e4))
def test_faces_and_centers_increase(n, r_max):
    g = build_grid(n, r_max)
    assert g.faces[0] == 0.0 and g.faces[-1] == r_max
    assert np.all(np.diff(g.faces) > 0) and np.all(np.diff(g.centers) > 0)


def test_arrays_are_read_only():
    g = build_grid(8, 1.0)
    with pytest.raises(ValueError):
        g.centers[0] = 1.0
    F = sample_profile(zero(), g)
    with pytest.raises(ValueError):
        F.values[0] = 1.0


def test_zero_profile():
    F = sample_profile(zero(), build_grid(8, 1.0))
    assert np.all(F.values == 0.0)


def test_gaussian_sample():
    F = sample_profile(gaussian(1, 1), build_grid(8, 1.0))
    assert F.values[0] == pytest.approx(0.996101, abs=1e-6)
    assert F.values[0] == math.exp(-0.00390625)


def test_ball_sample():
    F = sample_profile(ball(2, 0.5), build_grid(8, 1.0))
    assert np.array_equal(F.values, [2, 2, 2, 2, 0, 0, 0, 0])


@pytest.mark.parametrize("make", [lambda: gaussian(0, 1), lambda: gaussian(1, -1), lambda: ball(-1, 1), lambda: ball(1, 0)])
def test_profile_rejects_nonpositive_parameters(make):
    with pytest.raises(ValueError):
        make()


def test_sampling_is_deterministic():
    g = build_grid(333, 7.0)
    a = sample_profile(gaussian(1.3, 0.9), g).values
    b = sample_profile(gaussian(1.3, 0.9), g).values
    assert a.tobytes() == b.tobytes()


def test_distribution_rejects_nan_and_bad_shape():
    g = build_grid(8, 1.0)
    with pytest.raises(ValueError):
        RadialDistribution(g, np.full(8, np.nan))
    with pytest.raises(ValueError):
        RadialDistribution(g, np.zeros(9))


def test_cutoff_at_six_widths_holds_tail_below_threshold():
    prof = gaussian(1.0, 1.0)
    g = build_grid(100, 6.0)
    check_cutoff(prof, g)
    assert prof.mass_beyond(6.0) < 1e-12 * prof.number()


def test_cutoff_rejects_wide_gaussian():
    with pytest.raises(ValueError):
        check_cutoff(gaussian(1.0, 1.0), build_grid(100, 5.0))


def test_cutoff_rejects_truncated_ball():
    with pytest.raises(ValueError):
        check_cutoff(ball(1.0, 2.0), build_grid(100, 1.0))


def test_gaussian_mass_beyond_matches_quadrature():
    from scipy import integrate

    prof = gaussian(2.0, 1.5)
    val, _ = integrate.quad(lambda r: 4 * np.pi * 2.0 * np.exp(-(r / 1.5) ** 2) * r * r, 3.0, np.inf)
    assert prof.mass_beyond(3.0) == pytest.approx(val, rel=1e-10)


def test_gaussian_with_moments_hits_targets():
    from evfp.moments import compute_moments

    g = build_grid(400, 30.0)
    prof = gaussian_with_moments(1.0, 2.5, 1.0, g)
    m = compute_moments(sample_profile(prof, g), 1.0, 0.0, 1.0)
    assert m.N == pytest.approx(1.0, rel=1e-14)
    assert m.rho == pytest.approx(2.5, rel=1e-12)


def test_gaussian_with_moments_rejects_rho_below_number_bound():
    with pytest.raises(ValueError):
        gaussian_with_moments(1.0, 0.9, 1.0, build_grid(100, 10.0))
