import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lockedlaser import solve_steady_state
from lockedlaser import spectra as sp
from lockedlaser.errors import EmptyGrid, PhaseDiffusionDivergence, SingularSystem, UnstableDrift
from lockedlaser.noise import NoiseCovariance, normal_ordered_noise_matrix

from conftest import mp_spectrum, params_at_mu

OMEGAS = [0.0, 0.05, 0.5, 1.0, 3.0, 40.0]


# -- closed forms against a high-precision linear-response oracle ---------------------

@pytest.mark.parametrize("w", OMEGAS)
def test_x_variance_full_vs_oracle(cert_op, w):
    ref = float(mpmath.re(mp_spectrum(cert_op, w)[0, 0]))
    got = sp.intracavity_variance_x(cert_op, [w]).value[0]
    assert got == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("w", OMEGAS)
def test_y_variance_vs_oracle(cert_op, w):
    ref = float(mpmath.re(mp_spectrum(cert_op, w)[1, 1]))
    assert sp.intracavity_variance_y(cert_op, [w]).value[0] == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("w", OMEGAS)
def test_normal_ordered_vs_oracle(cert_op, w):
    S = mp_spectrum(cert_op, w, ordering="normal")
    nx, ny = sp.normally_ordered_variances(cert_op, [w])
    assert nx.value[0] == pytest.approx(float(mpmath.re(S[0, 0])), rel=1e-11)
    assert ny.value[0] == pytest.approx(float(mpmath.re(S[1, 1])), rel=1e-12)


def test_x_full_poissonian_free_running_zero_frequency():
    k, cn = 2.0, 1.7
    assert sp.x_variance_full(0.0, k, 0.0, cn, cn, 0.0) == pytest.approx(1 / (2 * k), rel=1e-14)


def test_x_saturated_zero_frequency():
    k = 1.0
    assert sp.x_variance_saturated(0.0, k, 0.0, 0.0) == pytest.approx(1 / (2 * k), rel=1e-15)
    with mpmath.workdps(30):
        ref = (k / 2) * mpmath.mpf("0.5") / k**2
    assert sp.x_variance_saturated(0.0, k, 0.0, 1.0) == pytest.approx(float(ref), rel=1e-15)


def test_y_variance_examples():
    with mpmath.workdps(30):
        mu = mpmath.mpf("0.02")
        ref = (1 - mu / 2) / 2 / (mu**2 / 4)
    assert sp.y_variance(0.0, 1.0, 0.02) == pytest.approx(float(ref), rel=1e-13)
    assert float(ref) == pytest.approx(4950)
    assert sp.y_variance(1.0, 1.0, 0.0) == pytest.approx(0.5)
    assert sp.y_variance(-0.3, 1.0, 0.1) == sp.y_variance(0.3, 1.0, 0.1)


def test_normal_ordered_examples():
    assert sp.x_normal_saturated(0.0, 1.0, 0.0, 1.0) == pytest.approx(-0.25, rel=1e-15)
    assert np.all(sp.x_normal_saturated(np.linspace(-5, 5, 11), 1.0, 0.02, 0.0) == 0.0)
    assert sp.y_normal(0.0, 1.0, 0.02) == pytest.approx(4900, rel=1e-13)


def test_external_shot_noise_at_p0():
    op = solve_steady_state(params_at_mu(0.02, p=0.0))
    X, _ = sp.external_variances(op, sp.log_symmetric_grid(op), form="saturated")
    np.testing.assert_allclose(X.value, 0.25, rtol=0, atol=1e-15)


def test_external_squeezing_depth_oracle():
    mu = 0.019801
    op = solve_steady_state(params_at_mu(mu, p=1.0))
    X, _ = sp.external_variances(op, [0.0], form="saturated")
    with mpmath.workdps(40):
        m = mpmath.mpf(mu)
        ref = mpmath.mpf(1) / 4 - (1 - m) / (4 * (1 - m / 2) ** 2)
    assert X.value[0] == pytest.approx(float(ref), rel=1e-6)
    assert 1e-5 < X.value[0] < 1e-4


def test_external_squeezing_vanishes_far_out():
    op = solve_steady_state(params_at_mu(1e-9, p=1.0))
    X, _ = sp.external_variances(op, [1e6], form="saturated")
    assert X.value[0] == pytest.approx(0.25, rel=1e-12)


# -- general route ------------------------------------------------------------------

def test_general_matches_closed_on_dense_grid(cert_op):
    w = sp.linear_grid(-50.0, 50.0, 1000)
    S = sp.general_spectrum(sp.TransferModel.from_operating_point(cert_op), w)
    ref = sp.intracavity_variance_x(cert_op, w).value
    assert np.max(np.abs(S.curve("x", "x").value / ref - 1)) < 1e-10
    assert np.all(S.complex_values[:, 1, 0] == 0)
    assert np.all(S.complex_values[:, 0, 1] == 0)


def test_nn_tail(cert_op):
    model = sp.TransferModel.from_operating_point(cert_op)
    w = 1e6 * cert_op.kappa
    got = sp.general_spectrum(model, [w]).curve("N", "N").value[0]
    assert got == pytest.approx(model.noise_cov.matrix[2, 2] / w**2, rel=1e-6)


@settings(max_examples=120, deadline=None)
@given(mu=st.floats(1e-3, 0.5), kappa=st.floats(0.1, 10.0), R=st.floats(1e4, 1e9),
       p=st.floats(0.0, 1.0), gamma1=st.floats(1e-3, 1.0), x=st.floats(-3.0, 3.0))
def test_general_equals_closed_random(mu, kappa, R, p, gamma1, x):
    op = solve_steady_state(params_at_mu(mu, kappa=kappa, R=R, p=p, gamma1=gamma1))
    w = np.array([kappa * 10.0**x])
    S = sp.general_spectrum(sp.TransferModel.from_operating_point(op), w).complex_values[0]
    assert S[0, 0].real == pytest.approx(sp.intracavity_variance_x(op, w).value[0], rel=1e-10)
    assert S[1, 1].real == pytest.approx(sp.intracavity_variance_y(op, w).value[0], rel=1e-10)
    Qn = normal_ordered_noise_matrix(op.kappa, op.mu, op.n, op.Gamma1, op.c, op.p)
    Sn = sp.spectral_density_matrix(sp.drift_matrix(op), Qn, w)[0]
    nx, ny = sp.normally_ordered_variances(op, w)
    scale = abs(sp.y_normal(w, op.kappa, op.mu)[0])
    assert abs(Sn[0, 0].real - nx.value[0]) <= 1e-10 * max(abs(nx.value[0]), 1e-3 * scale)
    assert Sn[1, 1].real == pytest.approx(ny.value[0], rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(1e-3, 0.5), p=st.floats(0.0, 1.0), x=st.floats(-3.0, 3.0),
       form=st.sampled_from(sp.FORMS))
def test_even_and_uncertainty(mu, p, x, form):
    op = solve_steady_state(params_at_mu(mu, p=p))
    w = 10.0**x
    X, Y = sp.external_variances(op, [-w, w], form)
    assert X.value[0] == X.value[1]
    assert Y.value[0] == Y.value[1]
    assert np.all(X.value * Y.value >= 1 / 16 * (1 - 1e-12))
    ix = sp.intracavity_variance_x(op, [-w, w], form).value
    assert ix[0] == ix[1]


# -- phase variance -------------------------------------------------------------------

def test_phase_variance_example():
    op = solve_steady_state(params_at_mu(0.02, R=1e6 * 0.98))
    assert op.n == pytest.approx(1e6)
    pv = sp.phase_variance(op)
    assert pv.y_variance == pytest.approx(24.75, rel=1e-9)
    assert pv.phase_variance == pytest.approx(2.475e-5, rel=1e-9)
    assert pv.quadrature_vs_lorentzian < 1e-8
    assert pv.ratio_to_closed_form == pytest.approx(1 - 0.01, rel=1e-12)


def test_phase_variance_scales_inverse_n():
    a = sp.phase_variance(solve_steady_state(params_at_mu(0.02, R=1e6)))
    b = sp.phase_variance(solve_steady_state(params_at_mu(0.02, R=2e6)))
    assert b.phase_variance == pytest.approx(a.phase_variance / 2, rel=1e-9)


# -- errors and containers ---------------------------------------------------------------

def test_free_running_phase_diverges():
    op = solve_steady_state(params_at_mu(0.0))
    with pytest.raises(PhaseDiffusionDivergence):
        sp.intracavity_variance_y(op, [-1.0, 0.0, 1.0])
    with pytest.raises(PhaseDiffusionDivergence):
        sp.phase_variance(op)
    assert sp.intracavity_variance_y(op, [1.0]).value[0] == pytest.approx(0.5)


def test_empty_grid(cert_op):
    with pytest.raises(EmptyGrid):
        sp.intracavity_variance_x(cert_op, [])
    with pytest.raises(EmptyGrid):
        sp.SpectralCurve([], [])


def test_singular_and_unstable():
    zero = NoiseCovariance(np.zeros((3, 3)))
    with pytest.raises(SingularSystem):
        sp.spectral_density_matrix(np.zeros((3, 3)), zero.matrix, [0.0])
    with pytest.raises(UnstableDrift):
        sp.general_spectrum(sp.TransferModel(np.eye(3), zero), [1.0])


def test_curve_round_trips(cert_op):
    c = sp.intracavity_variance_x(cert_op, sp.log_symmetric_grid(cert_op))
    again = sp.SpectralCurve.from_csv(c.to_csv())
    np.testing.assert_array_equal(again.value, c.value)
    np.testing.assert_array_equal(sp.SpectralCurve.from_json(c.to_json()).omega, c.omega)
    first = c.to_csv().splitlines()[1].split(",")[1]
    assert len(first.split("e")[0].replace(".", "").lstrip("-")) == 17
    assert c.at(0.0) == c.value[len(c) // 2]


def test_log_symmetric_grid_covers_rates(cert_op):
    w = sp.log_symmetric_grid(cert_op)
    assert w[0] == -w[-1]
    assert 0.0 in w
    pos = w[w > 0]
    assert pos.min() <= 0.5 * cert_op.mu * 1e-1 and pos.max() >= 10.0


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_full_and_saturated_agree_deep_in_saturation(p):
    op = solve_steady_state(params_at_mu(0.02, R=1e10, p=p, gamma1=1.0))
    assert op.cn >= 1e4 * op.params.gamma1
    w = sp.log_symmetric_grid(op, span=(1e-2, 1e1))
    full = sp.intracavity_variance_x(op, w, "full").value
    sat = sp.intracavity_variance_x(op, w, "saturated").value
    np.testing.assert_allclose(full, sat, rtol=1e-3)
    X_full, _ = sp.external_variances(op, w, "full")
    X_sat, _ = sp.external_variances(op, w, "saturated")
    # the squeezed output is a small difference of O(1) terms, so its
    # approximation error is measured against the shot-noise level
    np.testing.assert_allclose(X_full.value, X_sat.value, rtol=0, atol=1e-3 * sp.SHOT_NOISE)
