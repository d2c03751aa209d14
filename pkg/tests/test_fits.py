import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfp import scenarios
from evfp.dynamics import simulate
from evfp.fits import FitError, estimate_tmax, fit_asymptotics, fit_blowup, fit_power


def test_tmax_exact_for_affine_inverse():
    t = np.linspace(1.5, 1.99, 50)
    assert estimate_tmax(t, -1.0 / (2.0 - t), h_ref=-0.5) == pytest.approx(2.0, abs=1e-10)


def test_tmax_for_square_root_rate_lands_in_last_decade():
    t = np.linspace(1.5, 1.99, 491)
    est = estimate_tmax(t, -1.0 / np.sqrt(2.0 - t), h_ref=-1.0 / np.sqrt(2.0))
    width = 9.0 * (2.0 - t[-1])
    assert 2.0 <= est <= 2.0 + width


def test_tmax_needs_five_qualifying_samples():
    t = np.linspace(0.0, 1.0, 20)
    H = -1.0 / (2.0 - t)
    with pytest.raises(FitError):
        estimate_tmax(t, H, h_ref=-0.5)


def test_tmax_rejects_nonmonotone_tail():
    t = np.linspace(1.5, 1.99, 50)
    H = -1.0 / (2.0 - t)
    H[-3] = H[-2] * 1.5
    with pytest.raises(FitError):
        estimate_tmax(t, H, h_ref=-0.5)


def test_tmax_rejects_crossing_before_last_sample():
    # 1/H = -(2 - t)^3 is concave, so the fitted line reaches zero too early
    t = np.linspace(1.0, 1.9, 200)
    with pytest.raises(FitError, match="precedes"):
        estimate_tmax(t, -1.0 / (2.0 - t) ** 3, h_ref=-1.0)


@pytest.mark.parametrize("tau", [0.5, 4.0, -1.0])
def test_tmax_translation_equivariant(tau):
    t = np.linspace(1.5, 1.99, 491)
    H = -1.0 / np.sqrt(2.0 - t)
    base = estimate_tmax(t, H, h_ref=-0.7)
    assert estimate_tmax(t + tau, H, h_ref=-0.7) == pytest.approx(base + tau, abs=1e-11)


@pytest.mark.parametrize("p", [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0])
def test_fit_power_recovers_exponents(p):
    t = np.linspace(0.0, 1.9, 40)
    fp, c, res = fit_power(t, 1.7 * (2.0 - t) ** p, 2.0)
    assert fp == pytest.approx(p, abs=1e-8)
    assert c == pytest.approx(1.7, rel=1e-8)
    assert res < 1e-10


def test_fit_power_examples():
    t = np.linspace(1.0, 1.99, 30)
    p, c, res = fit_power(t, (2 - t) ** -1.0, 2.0)
    assert p == pytest.approx(-1.0, abs=1e-12) and res < 1e-10
    p, c, res = fit_power(t, 3 * (2 - t) ** 0.5, 2.0)
    assert p == pytest.approx(0.5, abs=1e-12) and c == pytest.approx(3.0, rel=1e-12)


def test_fit_power_rejects_degenerate_input():
    t = np.linspace(0, 1, 4)
    with pytest.raises(FitError):
        fit_power(t, np.ones(4), 2.0)
    t = np.linspace(0, 1, 6)
    with pytest.raises(FitError):
        fit_power(t, np.ones(6), 1.0)
    with pytest.raises(FitError):
        fit_power(t, np.zeros(6), 2.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_fit_power_property(p, c, shift):
    t = np.linspace(0.0, 0.99, 25) + shift
    fp, fc, _ = fit_power(t, c * (1.0 + shift - t) ** p, 1.0 + shift)
    assert fp == pytest.approx(p, abs=1e-7)
    assert fc == pytest.approx(c, rel=1e-6)


def test_blowup_fit_on_simulated_run(blowup_record):
    fit = fit_blowup(blowup_record.series)
    assert fit.t_max_est > blowup_record.column("t")[-1]
    assert fit.window[0] > blowup_record.column("t")[0]
    assert np.isfinite(fit.residual)
    assert all(fit.corridor_checks().values())
    assert fit.exponents["H"][0] == pytest.approx(-1.0, abs=0.05)


def test_asymptotics_of_vacuum_are_exact():
    init, p = scenarios.vacuum(t_end=20.0)
    fit = fit_asymptotics(simulate(init, p, cadence=0.1))
    assert fit.phi_inf_est == 3.0
    assert fit.H_limit_est == 1.0
    assert fit.rate is None and fit.H_matches


def test_asymptotics_reject_blowup(blowup_record):
    with pytest.raises(FitError):
        fit_asymptotics(blowup_record)


def test_asymptotics_reject_short_window(vacuum_record):
    with pytest.raises(FitError, match="too short"):
        fit_asymptotics(vacuum_record)


def test_asymptotics_of_global_run(global_record):
    fit = fit_asymptotics(global_record)
    lam = np.sqrt(fit.phi_inf_est / 3)
    assert fit.H_matches
    assert fit.rate == pytest.approx(3 * lam, rel=0.15)
