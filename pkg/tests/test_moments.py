import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfp.grid import RadialDistribution, ball, build_grid, gaussian, sample_profile, zero
from evfp.moments import compute_moments, gamma_moment

# adaptive-quadrature values (mpmath, 30 digits) for F = exp(-r^2), a = 1
RHO_GAUSS = 8.57972003620055080004588592485
P_GAUSS = 1.59604361653818876967119244639


def test_empty_distribution_de_sitter_values():
    F = sample_profile(zero(), build_grid(8, 1.0))
    m = compute_moments(F, 1.0, 3.0, 1.0)
    assert (m.N, m.rho, m.P) == (0.0, 0.0, 0.0)
    assert m.q == -6.0 and m.Q == -1.0 and m.ricci == 12.0


def test_unit_ball_number_converges():
    errs = []
    for n in (200, 400):
        F = sample_profile(ball(1.0, 1.0), build_grid(n, 2.0))
        errs.append(abs(compute_moments(F, 0.5, 0.0, 1.0).N - 4 * math.pi / 3))
    assert errs[1] < 2e-2
    assert errs[1] < errs[0]


def test_gaussian_moments_match_quadrature():
    F = sample_profile(gaussian(1.0, 1.0), build_grid(8000, 8.0))
    m = compute_moments(F, 1.0, 0.0, 1.0)
    assert m.N == pytest.approx(math.pi**1.5, rel=1e-6)
    assert m.rho == pytest.approx(RHO_GAUSS, rel=1e-6)
    assert m.P == pytest.approx(P_GAUSS, rel=1e-6)


def test_Q_absent_when_H_vanishes():
    F = sample_profile(gaussian(1.0, 1.0), build_grid(64, 6.0))
    m = compute_moments(F, 1.0, 0.2, 0.0)
    assert m.Q is None
    assert m.q == pytest.approx(m.rho + 3 * m.P - 0.4)


def test_ricci_and_q():
    F = sample_profile(gaussian(2.0, 0.5), build_grid(64, 3.0))
    m = compute_moments(F, 1.7, 0.3, -0.4)
    assert m.ricci == pytest.approx(1.2 - (m.rho + 3 * m.P), rel=1e-15)
    assert m.Q == pytest.approx(m.q / (6 * 0.16), rel=1e-15)


def test_l2_norm():
    g = build_grid(100, 5.0)
    F = sample_profile(gaussian(1.0, 1.0), g)
    expected = math.sqrt(4 * math.pi * np.dot(g.weights, F.values**2))
    assert compute_moments(F, 1.0, 0.0, 1.0).l2 == pytest.approx(expected, rel=1e-15)


def test_rejects_nonpositive_a():
    F = sample_profile(zero(), build_grid(8, 1.0))
    with pytest.raises(ValueError):
        compute_moments(F, 0.0, 1.0, 1.0)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(0.0, 5.0), min_size=16, max_size=16),
    st.floats(1e-3, 1e3),
)
def test_energy_and_pressure_bounds(vals, a):
    F = RadialDistribution(build_grid(16, 4.0), np.array(vals))
    m = compute_moments(F, a, 0.0, 1.0)
    slack = 1e-10 * max(m.rho, 1e-300)
    assert m.rho >= m.N / a**3 - slack
    assert m.P <= m.rho / 3 + slack
    assert m.P >= m.rho / 3 - m.N / (3 * a**3) - slack


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=16, max_size=16), st.floats(1e-2, 1e2))
def test_gamma_one_equals_scaled_energy(vals, a):
    F = RadialDistribution(build_grid(16, 4.0), np.array(vals))
    m = compute_moments(F, a, 0.0, 1.0)
    assert gamma_moment(F, a, 1.0) == m.rho * a**4 or gamma_moment(F, a, 1.0) == pytest.approx(
        m.rho * a**4, rel=1e-15
    )


def test_gamma_moment_examples():
    assert gamma_moment(sample_profile(zero(), build_grid(8, 1.0)), 1.0, 2.0) == 0.0
    F = sample_profile(ball(1.0, 1.0), build_grid(4000, 1.0))
    assert gamma_moment(F, 1.0, 2.0) == pytest.approx(32 * math.pi / 15, rel=1e-6)
    with pytest.raises(ValueError):
        gamma_moment(F, 1.0, 0.0)
    with pytest.raises(ValueError):
        gamma_moment(F, 0.0, 1.0)


def test_energy_quadrature_is_second_order():
    # exp(-r) is not even in r, so the midpoint rule shows its plain O(dr^2) rate
    from scipy import integrate

    exact, _ = integrate.quad(lambda r: 4 * math.pi * math.exp(-r) * math.sqrt(1 + r * r) * r * r, 0, 40, epsabs=0, epsrel=1e-13, limit=200)
    errs = []
    for n in (200, 400, 800):
        g = build_grid(n, 40.0)
        F = RadialDistribution(g, np.exp(-g.centers))
        errs.append(abs(compute_moments(F, 1.0, 0.0, 1.0).rho - exact))
    assert np.log2(errs[0] / errs[1]) >= 1.9
    assert np.log2(errs[1] / errs[2]) >= 1.9


def test_gaussian_energy_quadrature_converges_faster_than_second_order():
    errs = []
    for n in (50, 100):
        F = sample_profile(gaussian(1.0, 1.0), build_grid(n, 8.0))
        errs.append(abs(compute_moments(F, 1.0, 0.0, 1.0).rho - RHO_GAUSS))
    assert errs[1] <= errs[0] / 4 or errs[1] < 1e-12 * RHO_GAUSS
