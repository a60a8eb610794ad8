import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trapmodes.quadrature import gauss_legendre, simplex_rule


def exact_barycentric_moment(exponents):
    # average of prod(lambda_i^a_i) over the simplex: d! prod(a_i!) / (d + sum a)!
    d = len(exponents) - 1
    num = math.factorial(d) * math.prod(math.factorial(a) for a in exponents)
    return num / math.factorial(d + sum(exponents))


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("degree", [1, 2, 4])
def test_weights_sum_to_one(dim, degree):
    lam, w = simplex_rule(dim, degree)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(lam.sum(axis=1), 1.0)
    assert np.all(lam >= 0)


@given(data=st.data(), dim=st.sampled_from([2, 3]), degree=st.sampled_from([1, 2, 4]))
def test_exact_up_to_degree(data, dim, degree):
    total = data.draw(st.integers(0, degree))
    cuts = sorted(data.draw(st.lists(st.integers(0, total), min_size=dim, max_size=dim)))
    exps = np.diff([0] + cuts + [total])
    lam, w = simplex_rule(dim, degree)
    approx = float(np.sum(w * np.prod(lam ** exps, axis=1)))
    assert approx == pytest.approx(exact_barycentric_moment(list(exps)), abs=1e-14)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        simplex_rule(2, 7)
    with pytest.raises(ValueError):
        simplex_rule(4, 1)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(8, 0.0, 2.0)
    assert np.all((x > 0) & (x < 2))
    assert np.sum(w * x ** 15) == pytest.approx(2 ** 16 / 16, rel=1e-13)
