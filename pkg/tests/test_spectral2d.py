import math
from dataclasses import replace

import numpy as np
import pytest

from trapmodes import spectral2d
from trapmodes.eigensolve import smallest_eigenpairs
from trapmodes.fem import assemble, build_space
from trapmodes.geometry import BC, StripSpec, build_strip_mesh, reflect_mesh
from trapmodes.spectral2d import PI2, StripNumerics

COARSE = StripNumerics(ny=12)


def test_reference_angle():
    s = spectral2d.mu1(math.pi / 4)
    assert 0.924 <= s.mu1_over_pi2 <= 0.934
    assert s.residual <= 1e-9
    assert s.numerics.ny >= 40 and s.numerics.order == 2


def test_reference_angle_stable_under_refinement():
    a = spectral2d.mu1(math.pi / 4)
    b = spectral2d.mu1(math.pi / 4, a.numerics.refined(2))
    assert abs(a.mu1 - b.mu1) / b.mu1 < 1e-4
    assert b.mu1 <= a.mu1  # conforming refinement lowers the Rayleigh quotient


def test_straight_end_gives_pi2():
    s = spectral2d.mu1(0.0, COARSE, artificial_bc=BC.NEUMANN)
    assert PI2 <= s.mu1 <= PI2 * (1 + 1e-5)


def test_steep_angle_bracket():
    a = spectral2d.mu1(9 * math.pi / 20)
    b = spectral2d.mu1(9 * math.pi / 20, a.numerics.refined(2))
    for s in (a, b):
        assert 0.25 < s.mu1_over_pi2 < 0.5
    # the corner at the top of a steep slanted edge slows convergence
    assert b.mu1 <= a.mu1
    assert abs(a.mu1 - b.mu1) / b.mu1 < 5e-3


def test_curve_decreasing_and_bracketed():
    alphas = [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.4]
    curve = spectral2d.threshold_curve(alphas, COARSE, artificial_bc=BC.NEUMANN)
    mu = np.array([s.mu1 for s in curve])
    res = np.array([s.residual for s in curve])
    assert np.all(-np.diff(mu) > 10 * res[1:] * mu[1:])
    assert np.all((mu > PI2 / 4) & (mu < PI2))


def test_curve_validation():
    with pytest.raises(ValueError):
        spectral2d.threshold_curve([0.5, 0.4], COARSE)
    with pytest.raises(ValueError):
        spectral2d.threshold_curve([0.0, 0.4], COARSE)
    with pytest.raises(ValueError):
        spectral2d.mu1(math.pi / 2)


def doubling_change(alpha, numerics=None):
    short = spectral2d.mu1(alpha, numerics)
    long = spectral2d.mu1(alpha, numerics, R=24.0)
    return abs(short.mu1 - long.mu1) / long.mu1


def test_truncation_converged_at_reference_angle():
    assert doubling_change(math.pi / 4) < 1e-6


def test_steep_angle_doubling_change_is_discretization():
    # the truncation term is ~exp(-2 sqrt(pi^2 - mu) R) ~ 1e-18 here; what remains shrinks with the mesh
    coarse = doubling_change(1.2)
    fine = doubling_change(1.2, StripNumerics().refined(2))
    assert fine < coarse / 2


def test_shallow_angle_truncation_is_visible():
    # slow decay near alpha = 0: R = 12 is not converged to 1e-6
    assert 1e-5 < doubling_change(0.4) < 1e-3


def test_row_schema():
    s = spectral2d.mu1(0.5, COARSE)
    assert list(s.row()) == spectral2d.CSV_COLUMNS


def test_reflection_symmetry():
    num = COARSE
    space = spectral2d.strip_space(0.8, num)
    mirrored = build_space(reflect_mesh(space.mesh, 1), num.order, num.artificial_bc)
    a = smallest_eigenpairs(assemble(space), k=2).values
    b = smallest_eigenpairs(assemble(mirrored), k=2).values
    assert np.max(np.abs(a - b) / a) <= 1e-10


def test_lambda_dagger():
    assert spectral2d.lambda_dagger((0.0, 0.0)) == PI2
    ref = spectral2d.mu1(math.pi / 4).mu1
    assert spectral2d.lambda_dagger((1.0, 1.0)) == ref
    assert spectral2d.lambda_dagger((1.0, -1.0)) == ref
    for k1, k2 in [(1.0, 0.5), (2.0, -1.0), (0.5, 0.2)]:
        assert spectral2d.lambda_dagger((k1, k2), COARSE) <= spectral2d.mu1(math.atan(abs(k2)), COARSE).mu1


def test_eigenfunction_normalized_and_positive():
    v = spectral2d.mu1(0.6, COARSE).eigenfunction
    vals = v.values
    assert vals[np.argmax(np.abs(vals))] > 0
    from trapmodes.analysis import l2_norm_squared

    assert l2_norm_squared(v) == pytest.approx(1.0, abs=1e-10)


def test_truncated_monotone_in_R():
    # meshes for different R are not nested, so allow a discretization-sized slack
    for a2 in (math.atan(0.5), -math.pi / 4):
        values = [spectral2d.mu1_truncated(a2, R) for R in (2.0, 4.0, 8.0, 12.0)]
        assert all(b <= a * (1 + 1e-7) for a, b in zip(values, values[1:]))
        assert values[-1] >= spectral2d.mu1(abs(a2)).mu1 * (1 - 1e-7)


def test_truncated_negative_angle_matches_direct_mesh():
    # the strip of angle -a cut at R, meshed directly via an orientation-preserving map
    a, R = 0.5, 3.0
    num = StripNumerics(ny=10)
    mesh = build_strip_mesh(StripSpec(0.0, 1.0, BC.DIRICHLET), 40, 10)

    def to_negative(p):
        x, y = p[:, 0], p[:, 1]
        left = -y * math.tan(a)
        return np.column_stack([left + x * (R - left), y])

    from trapmodes.geometry import transform_mesh

    direct = build_space(transform_mesh(mesh, to_negative), 2, BC.DIRICHLET)
    lam = smallest_eigenpairs(assemble(direct), k=1).values[0]
    assert spectral2d.mu1_truncated(-a, R, num) == pytest.approx(lam, rel=2e-4)


def test_truncated_validation():
    with pytest.raises(ValueError):
        spectral2d.mu1_truncated(math.pi / 4, 0.5)


def test_first_relation_radius():
    hit = spectral2d.first_relation_radius((1.0, 0.5))
    assert hit is not None
    R, value, lam = hit
    assert value > lam and R > 0.5


def test_decay_rate():
    s = spectral2d.mu1(math.pi / 4)
    rate = spectral2d.decay_rate(s.eigenfunction, s.mu1)
    assert rate == pytest.approx(math.sqrt(PI2 - s.mu1), rel=0.10)
    steep = spectral2d.mu1(9 * math.pi / 20)
    assert spectral2d.decay_rate(steep.eigenfunction, steep.mu1) > rate


def test_decay_rate_rejects_threshold():
    s = spectral2d.mu1(0.0, COARSE)
    assert s.mu1 >= PI2
    with pytest.raises(ValueError):
        spectral2d.decay_rate(s.eigenfunction, s.mu1)


def test_R_override_rescales_columns():
    assert spectral2d.mu1(0.5, COARSE, R=24.0).numerics.nx == 2 * COARSE.nx


def test_numerics_defaults():
    n = StripNumerics()
    assert n.nx == 160
    assert replace(n, R=6.0, nx=None).nx == 80
    assert n.refined(2).ny == 80
