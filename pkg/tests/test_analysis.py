import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapmodes import analysis, spectral2d
from trapmodes.geometry import KappaPair
from trapmodes.spectral2d import Eigenfunction2D


@pytest.mark.parametrize("k2", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_sign_trichotomy(k2):
    value = analysis.boundary_integral_IGamma1((1.0, k2))
    assert np.sign(value) == np.sign(k2)
    if k2 == 0.0:
        assert value == 0.0


@settings(max_examples=12, deadline=None)
@given(k1=st.sampled_from([0.5, 1.0, 2.0]), ratio=st.floats(-1.0, 1.0).filter(lambda r: abs(r) > 1e-3))
def test_sign_trichotomy_grid(k1, ratio):
    value = analysis.boundary_integral_IGamma1((k1, ratio * k1))
    assert np.sign(value) == np.sign(ratio)


def test_linear_in_tan_alpha2():
    a = analysis.boundary_integral_IGamma1((1.0, -0.01))
    b = analysis.boundary_integral_IGamma1((1.0, -0.02))
    assert b / a == pytest.approx(2.0, rel=1e-12)
    assert a / -0.01 == pytest.approx(analysis.tau1_prime(math.pi / 4), rel=1e-12)


def test_IGamma1_matches_area_form():
    rep = analysis.trial_quotient_negative_kappa2((1.0, -1.0), 1e-3)
    assert rep.pieces["minus_part_area"] == pytest.approx(rep.I_Gamma1, rel=1e-4)


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_plus_part_is_half_epsilon(eps):
    rep = analysis.trial_quotient_negative_kappa2((1.0, -1.0), eps)
    assert abs(rep.plus_part / eps - 0.5) <= 1e-6


def test_negative_certificate():
    rep = analysis.trial_quotient_negative_kappa2((1.0, -1.0), 1e-3)
    assert rep.I_Gamma1 < 0 and rep.negative
    assert rep.epsilon_star == pytest.approx(0.9 * -2 * rep.I_Gamma1)
    assert analysis.trial_quotient_negative_kappa2((1.0, -1.0), 0.5 * rep.epsilon_star).negative
    assert not analysis.trial_quotient_negative_kappa2((1.0, -1.0), 1.2 * -2 * rep.I_Gamma1).negative


def test_negative_certificate_errors():
    with pytest.raises(ValueError):
        analysis.trial_quotient_negative_kappa2((1.0, 0.5), 1e-3)
    with pytest.raises(ValueError):
        analysis.trial_quotient_negative_kappa2((1.0, -1.0), 0.0)
    v = spectral2d.mu1(math.pi / 4).eigenfunction
    doubled = Eigenfunction2D(v.space, 2 * v.values)
    with pytest.raises(ValueError):
        analysis.trial_quotient_negative_kappa2((1.0, -1.0), 1e-3, doubled)
    with pytest.raises(ValueError):  # eigenfunction for the wrong angle
        analysis.trial_quotient_negative_kappa2((2.0, -1.0), 1e-3, v)


def test_symmetric_certificate():
    rep = analysis.trial_quotient_symmetric(1.0, 1e-3)
    assert rep.negative
    assert rep.pieces["nu_dot_e1"] < 0
    assert rep.pieces["edge_term"] < 0
    assert rep.pieces["direct_gap"] == pytest.approx(rep.quotient_gap, rel=1e-5)
    assert 1e-3 < rep.epsilon_star
    assert analysis.trial_quotient_symmetric(1.0, rep.epsilon_star).negative


def test_symmetric_o_eps_terms_scale_linearly():
    a = analysis.trial_quotient_symmetric(1.0, 1e-3).pieces["o_eps_terms"]
    b = analysis.trial_quotient_symmetric(1.0, 5e-4).pieces["o_eps_terms"]
    assert b / a == pytest.approx(0.5, rel=0.05)


def test_symmetric_errors():
    with pytest.raises(ValueError):
        analysis.trial_quotient_symmetric(0.0, 1e-3)
    with pytest.raises(ValueError):
        analysis.trial_quotient_symmetric(1.0, -1.0)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8, 1.1, 1.4])
def test_tau1_prime_positive(alpha):
    assert analysis.tau1_prime(alpha) > 0


def test_tau1_prime_two_routes():
    v = spectral2d.mu1(math.pi / 4).eigenfunction
    assert analysis.tau1_prime(math.pi / 4, v) == pytest.approx(analysis.tau1_prime_area(v), rel=1e-4)


def test_tau1_prime_resolution_agreement():
    from trapmodes.acceptance import TAU_NUMERICS, TAU_NUMERICS_FINE

    a = analysis.tau1_prime(math.pi / 4, spectral2d.mu1(math.pi / 4, TAU_NUMERICS).eigenfunction)
    b = analysis.tau1_prime(math.pi / 4, spectral2d.mu1(math.pi / 4, TAU_NUMERICS_FINE).eigenfunction)
    assert abs(a - b) / b <= 1e-4


def test_trace_on_edge_nonzero():
    v = spectral2d.mu1(0.8).eigenfunction
    assert analysis.edge_trace_squared(v) > 1e-3


def test_tau1_prime_rejects_straight_end():
    with pytest.raises(ValueError):
        analysis.tau1_prime(0.0)


def test_norm():
    v = spectral2d.mu1(1.0).eigenfunction
    assert analysis.l2_norm_squared(v) == pytest.approx(1.0, abs=analysis.NORM_TOL)
    ints = analysis.strip_integrals(v)
    assert ints["grad2"] / ints["v2"] == pytest.approx(spectral2d.mu1(1.0).mu1, rel=1e-9)


def test_report_dict():
    d = analysis.trial_quotient_negative_kappa2(KappaPair(1.0, -0.5), 1e-3).to_dict()
    assert d["kappa2"] == -0.5 and d["negative"] is True
    assert "strip" in d["provenance"]
    assert replace(analysis.trial_quotient_negative_kappa2((1.0, -0.5), 1e-3), epsilon=1.0).epsilon == 1.0
