"""Symmetric quadrature rules on the reference simplex, in barycentric form.

Weights are normalized to sum to one; multiply by the cell measure.
"""

from __future__ import annotations

import numpy as np


def _perm3(a, b):
    return [(a, b, b), (b, a, b), (b, b, a)]


def _tri_rule(degree: int):
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if degree == 2:
        return np.array(_perm3(2 / 3, 1 / 6)), np.full(3, 1 / 3)
    if degree <= 4:
        # Dunavant, 6 points
        a, wa = 0.44594849091596488632, 0.22338158967801146570
        c, wc = 0.09157621350977074346, 0.10995174365532186764
        pts = _perm3(1 - 2 * a, a) + _perm3(1 - 2 * c, c)
        return np.array(pts), np.array([wa] * 3 + [wc] * 3)
    raise ValueError(f"no triangle rule of degree {degree}")


def _tet_rule(degree: int):
    if degree <= 1:
        return np.full((1, 4), 0.25), np.array([1.0])
    if degree == 2:
        a, b = 0.5854101966249685, 0.1381966011250105
        pts = [tuple(a if i == j else b for i in range(4)) for j in range(4)]
        return np.array(pts), np.full(4, 0.25)
    if degree <= 4:
        # Keast, 11 points (one negative weight)
        pts = [(0.25, 0.25, 0.25, 0.25)]
        wts = [-148 / 1875]
        lo, hi = 1 / 14, 11 / 14
        for j in range(4):
            pts.append(tuple(hi if i == j else lo for i in range(4)))
            wts.append(343 / 7500)
        r = np.sqrt(5 / 14)
        a, b = 0.25 * (1 + r), 0.25 * (1 - r)
        for i in range(4):
            for j in range(i + 1, 4):
                pts.append(tuple(a if k in (i, j) else b for k in range(4)))
                wts.append(56 / 375)
        return np.array(pts), np.array(wts)
    raise ValueError(f"no tetrahedron rule of degree {degree}")


def simplex_rule(dim: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points ``(nq, dim+1)`` and weights ``(nq,)`` exact to ``degree``."""
    if dim == 2:
        return _tri_rule(degree)
    if dim == 3:
        return _tet_rule(degree)
    raise ValueError(f"unsupported dimension {dim}")


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1), half * w
