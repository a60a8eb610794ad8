import numpy as np
import pytest
import scipy.sparse as sp

from trapmodes.eigensolve import EigenSolveError, dense_oracle, factorize, smallest_eigenpairs
from trapmodes.fem import assemble, build_space
from trapmodes.geometry import BC, IncisorSpec, StripSpec, build_incisor_mesh, build_strip_mesh
from trapmodes.spectral2d import PI2


def test_diagonal():
    pair = (sp.diags([1.0, 2.0]), sp.eye(2))
    res = smallest_eigenpairs(pair, k=2)
    assert np.array_equal(res.values, [1.0, 2.0])
    assert np.array_equal(dense_oracle(pair).values, [1.0, 2.0])


def test_k_larger_than_n():
    with pytest.raises(ValueError):
        smallest_eigenpairs((sp.diags([1.0, 2.0]), sp.eye(2)), k=3)


def test_singular_stiffness_fails_loudly():
    K = sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    with pytest.raises(EigenSolveError):
        smallest_eigenpairs((K, sp.eye(2)), k=1, backend="superlu")


def test_backends_agree():
    mesh = build_strip_mesh(StripSpec(0.6, 4.0), 20, 5)
    pair = assemble(build_space(mesh, 2))
    b = np.arange(pair.n, dtype=float)
    x1 = factorize(pair.K, "superlu")(b)
    assert np.allclose(pair.K @ x1, b)
    try:
        x2 = factorize(pair.K, "cholmod")(b)
    except EigenSolveError:
        pytest.skip("CHOLMOD not available")
    assert np.allclose(x1, x2, rtol=1e-10)


def small_pairs():
    yield assemble(build_space(build_strip_mesh(StripSpec(0.0, 3.0, BC.NEUMANN), 18, 6), 2, BC.NEUMANN))
    yield assemble(build_space(build_strip_mesh(StripSpec(0.9, 5.0), 30, 6, grading=1.2), 1))
    yield assemble(build_space(build_incisor_mesh(IncisorSpec((1.0, 0.5), 3.0, 3.0), 5, 5, 3), 1, BC.NEUMANN))
    yield assemble(build_space(build_incisor_mesh(IncisorSpec((1.0, -1.0), 3.0, 3.0), 3, 3, 2), 2))


@pytest.mark.parametrize("index", range(4))
def test_oracle_equivalence(index):
    pair = list(small_pairs())[index]
    assert pair.n <= 2000
    it = smallest_eigenpairs(pair, k=6)
    de = dense_oracle(pair)
    assert np.max(np.abs(it.values - de.values[:6]) / de.values[:6]) <= 1e-8
    assert np.all(it.residuals <= 1e-9)
    gram = it.vectors.T @ (pair.M @ it.vectors)
    assert np.allclose(gram, np.eye(6), atol=1e-10)


def test_deterministic():
    pair = next(small_pairs())
    a = smallest_eigenpairs(pair, k=4)
    b = smallest_eigenpairs(pair, k=4)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.vectors, b.vectors)


def test_rectangle_fine_p2():
    mesh = build_strip_mesh(StripSpec(0.0, 3.0, BC.NEUMANN), 96, 32)
    lam = smallest_eigenpairs(assemble(build_space(mesh, 2, BC.NEUMANN)), k=3).values
    assert abs(lam[0] - PI2) / PI2 < 1e-6
    # next modes: pi^2 (1 + (m/3)^2) for the Neumann ends
    assert lam[1:] == pytest.approx(PI2 * (1 + np.array([1, 4]) / 9), rel=1e-5)


def test_sign_convention():
    pair = next(small_pairs())
    v = smallest_eigenpairs(pair, k=1).vectors[:, 0]
    assert v[np.argmax(np.abs(v))] > 0


def test_small_restart_budget_converges_or_raises():
    pair = list(small_pairs())[2]
    try:
        res = smallest_eigenpairs(pair, k=8, max_dim=12, max_restarts=2)
    except EigenSolveError:
        return
    assert np.all(res.residuals <= 1e-9)


def test_dense_cap():
    n = 4001
    with pytest.raises(ValueError):
        dense_oracle((sp.eye(n), sp.eye(n)))
