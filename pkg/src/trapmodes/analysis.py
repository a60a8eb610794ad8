"""Trial-function certificates built from the 2D eigenfunction.

Everything here reduces to 1D integrals along the slanted edge of the strip
or 2D integrals over the strip, so no 3D matrix is ever assembled; the
results are an independent check of the 3D solver.

Notation: ``v`` is the unit-L2 first eigenfunction on the strip of angle
``alpha1`` and ``mu`` its eigenvalue. The slanted edge is parametrized by
``t -> (t tan(alpha1), t)`` for ``t`` in (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .fem import cell_quadrature
from .geometry import KappaPair
from .quadrature import gauss_legendre
from .spectral2d import Eigenfunction2D, mu1

EDGE_POINTS = 64
NORM_TOL = 1e-8


@dataclass(frozen=True)
class TrialReport:
    """Rayleigh-quotient decomposition of a trial function.

    ``quotient_gap`` is ``||grad psi||^2 - lambda_dagger ||psi||^2`` (on the
    half domain in the symmetric construction). ``epsilon_star`` is the
    certified negativity onset with a 10% safety factor.
    """

    kappa: KappaPair
    epsilon: float
    quotient_gap: float
    epsilon_star: float
    plus_part: float | None = None
    I_Gamma1: float | None = None
    pieces: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def negative(self) -> bool:
        return self.quotient_gap < 0

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa.kappa1,
            "kappa2": self.kappa.kappa2,
            "epsilon": self.epsilon,
            "quotient_gap": self.quotient_gap,
            "negative": self.negative,
            "epsilon_star": self.epsilon_star,
            "plus_part": self.plus_part,
            "I_Gamma1": self.I_Gamma1,
            "pieces": dict(self.pieces),
            "provenance": dict(self.provenance),
        }


def _default_v(alpha1: float) -> tuple[Eigenfunction2D, float]:
    s = mu1(alpha1)
    return s.eigenfunction, s.mu1


def _strip_alpha(v: Eigenfunction2D) -> float:
    return v.mesh.meta["spec"].alpha


def _check_v(v: Eigenfunction2D, alpha1: float) -> None:
    if not math.isclose(_strip_alpha(v), alpha1, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"eigenfunction belongs to alpha={_strip_alpha(v)}, expected {alpha1}")
    n2 = l2_norm_squared(v)
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValueError(f"v is not normalized: ||v||^2 = {n2:.12g}")


def l2_norm_squared(v: Eigenfunction2D) -> float:
    _, w, u, _ = cell_quadrature(v.space, v.values)
    return float(np.sum(w * u * u))


def strip_integrals(v: Eigenfunction2D, weight=None) -> dict:
    """Weighted integrals of ``v^2``, ``|grad v|^2`` and ``v d2 v`` over the strip.

    ``weight`` maps quadrature points ``(..., 2)`` to weights (default 1).
    """
    pts, w, u, du = cell_quadrature(v.space, v.values)
    if weight is not None:
        w = w * weight(pts)
    return {
        "v2": float(np.sum(w * u * u)),
        "grad2": float(np.sum(w * np.einsum("mqd,mqd->mq", du, du))),
        "v_d2v": float(np.sum(w * u * du[..., 1])),
    }


def edge_trace_squared(v: Eigenfunction2D, weight=None, n: int = EDGE_POINTS) -> float:
    """``int_0^1 g(t) v(t tan(alpha1), t)^2 dt`` by Gauss-Legendre on the slanted edge."""
    t, w = gauss_legendre(n)
    ta = math.tan(_strip_alpha(v))
    vals = v(np.column_stack([t * ta, t]))
    if weight is not None:
        w = w * weight(t)
    return float(np.sum(w * vals ** 2))


def tau1_prime(alpha1: float, v: Eigenfunction2D | None = None) -> float:
    """First-order coefficient of the first eigenvalue in ``kappa2`` at ``kappa2 = 0``.

    Equal to ``int v d(v)/d(xi2)``, which integrates by parts to
    ``(1/2) sin(alpha1) int_L v^2 dl = (1/2) tan(alpha1) int_0^1 v(t tan(alpha1), t)^2 dt``.
    The line form is returned; ``tau1_prime_area`` gives the area form.
    """
    if not 0 < alpha1 < math.pi / 2:
        raise ValueError("alpha1 must lie in (0, pi/2); no 2D eigenfunction exists at alpha1 = 0")
    if v is None:
        v, _ = _default_v(alpha1)
    _check_v(v, alpha1)
    return 0.5 * math.tan(alpha1) * edge_trace_squared(v)


def tau1_prime_area(v: Eigenfunction2D) -> float:
    return strip_integrals(v)["v_d2v"]


def boundary_integral_IGamma1(kappa, v: Eigenfunction2D | None = None) -> float:
    """Boundary term over the chamfered face ``x2 = kappa2 x3``.

    Reduces to ``(tan(alpha2)/2) int_L v^2 nu.e3 dl = (kappa1 kappa2 / 2) int_0^1 v(kappa1 t, t)^2 dt``
    along the edge ``x1 = kappa1 x3, x2 = kappa2 x3``; the sign is that of ``kappa2``.
    """
    kappa = kappa if isinstance(kappa, KappaPair) else KappaPair(*kappa)
    if kappa.kappa1 == 0:
        return 0.0
    if v is None:
        v, _ = _default_v(kappa.alpha1)
    _check_v(v, kappa.alpha1)
    a2 = kappa.alpha2
    # in the face plane the edge is x~1 = kappa1 cos(a2) x~3
    c = kappa.kappa1 * math.cos(a2)
    nu_e3 = c / math.hypot(1.0, c)
    dl_dt = math.hypot(1.0, c) / math.cos(a2)
    return 0.5 * math.tan(a2) * nu_e3 * dl_dt * edge_trace_squared(v)


def trial_quotient_negative_kappa2(kappa, epsilon: float, v: Eigenfunction2D | None = None,
                                   mu: float | None = None) -> TrialReport:
    """Certificate for ``kappa2 < 0`` with ``psi = v`` on ``x2 < 0`` and ``e^{-eps x2} v`` on ``x2 > 0``.

    The ``x2 > 0`` part equals ``(||grad v||^2 + (eps^2 - mu)||v||^2) int_0^inf e^{-2 eps x2} dx2 = eps/2``;
    the ``x2 < 0`` part equals ``I_Gamma1``. ``mu`` defaults to the Rayleigh quotient of ``v``
    under the same quadrature, which keeps the cancellation in the first bracket exact.
    """
    kappa = kappa if isinstance(kappa, KappaPair) else KappaPair(*kappa)
    if not kappa.kappa2 < 0:
        raise ValueError("trial_quotient_negative_kappa2 needs kappa2 < 0")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if v is None:
        v, _ = _default_v(kappa.alpha1)
    _check_v(v, kappa.alpha1)
    ints = strip_integrals(v)
    if mu is None:
        mu = ints["grad2"] / ints["v2"]
    decay, _ = quad(lambda x: math.exp(-2 * epsilon * x), 0, math.inf)
    plus = (ints["grad2"] + (epsilon ** 2 - mu) * ints["v2"]) * decay
    ig = boundary_integral_IGamma1(kappa, v)
    # the x2 < 0 prism has cross-section length |kappa2| xi2 at height xi2
    minus_area = abs(kappa.kappa2) * _weighted_defect(v, mu, lambda p: p[..., 1])
    return TrialReport(
        kappa=kappa,
        epsilon=float(epsilon),
        quotient_gap=plus + ig,
        epsilon_star=0.9 * (-2 * ig),
        plus_part=plus,
        I_Gamma1=ig,
        pieces={"minus_part_area": minus_area, "mu": mu, "norm2": ints["v2"], "decay_integral": decay},
        provenance={"edge_points": EDGE_POINTS, "strip": _strip_provenance(v)},
    )


def _weighted_defect(v: Eigenfunction2D, mu: float, weight) -> float:
    ints = strip_integrals(v, weight)
    return ints["grad2"] - mu * ints["v2"]


def _strip_provenance(v: Eigenfunction2D) -> dict:
    spec = v.mesh.meta["spec"]
    nx, ny = v.mesh.meta["shape"]
    return {"alpha": spec.alpha, "R": spec.R, "nx": nx, "ny": ny, "order": v.space.order}


def _symmetric_pieces(v: Eigenfunction2D, mu: float, kappa1: float, epsilon: float) -> dict:
    J = strip_integrals(v, lambda p: np.exp(-2 * epsilon * p[..., 0]))["v2"]
    # edge term (1/2) int_L e^{-eps sqrt2 x^1} v^2 nu.e^1 dl in the bisector plane
    c = math.sqrt(2.0) * kappa1
    nu_e1 = -1.0 / math.hypot(1.0, c)
    dl_dt = math.hypot(1.0, c)
    edge = 0.5 * nu_e1 * dl_dt * edge_trace_squared(v, lambda t: np.exp(-2 * epsilon * kappa1 * t))
    return {
        "J": J,
        "I_Omega": -0.5 * epsilon * J,
        "bisector_volume": epsilon * J,
        "bisector_edge_volume": epsilon * J,
        "edge_term": edge,
        "nu_dot_e1": nu_e1,
        "o_eps_terms": 1.5 * epsilon * J,
    }


def symmetric_gap_direct(v: Eigenfunction2D, mu: float, epsilon: float) -> float:
    """Half-domain gap by direct quadrature of ``e^{-2 eps xi1}/(2 eps) (|grad v|^2 + (eps^2 - mu) v^2)``."""
    ints = strip_integrals(v, lambda p: np.exp(-2 * epsilon * p[..., 0]))
    return (ints["grad2"] + (epsilon ** 2 - mu) * ints["v2"]) / (2 * epsilon)


def trial_quotient_symmetric(kappa1: float, epsilon: float, v: Eigenfunction2D | None = None,
                             mu: float | None = None) -> TrialReport:
    """Certificate for ``kappa1 = kappa2`` with ``psi = e^{-eps x1} v(x2, x3)`` on ``{x1 > x2}``.

    The half-domain gap splits into O(eps) volume terms ``(3 eps / 2) J`` with
    ``J = int e^{-2 eps xi1} v^2`` and the edge term
    ``-(1/2) int_0^1 e^{-2 eps kappa1 t} v(kappa1 t, t)^2 dt``, which is negative.
    """
    if not kappa1 > 0:
        raise ValueError("kappa1 must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    kappa = KappaPair(kappa1, kappa1)
    if v is None:
        v, _ = _default_v(kappa.alpha1)
    _check_v(v, kappa.alpha1)
    if mu is None:
        ints = strip_integrals(v)
        mu = ints["grad2"] / ints["v2"]
    pieces = _symmetric_pieces(v, mu, kappa1, epsilon)
    gap = pieces["o_eps_terms"] + pieces["edge_term"]

    def g(e):
        p = _symmetric_pieces(v, mu, kappa1, e)
        return p["o_eps_terms"] + p["edge_term"]

    hi = 1.0
    while g(hi) < 0 and hi < 1e3:
        hi *= 2
    root = brentq(g, 1e-12, hi, xtol=1e-10) if g(hi) > 0 else math.inf
    pieces["direct_gap"] = symmetric_gap_direct(v, mu, epsilon)
    pieces["mu"] = mu
    return TrialReport(
        kappa=kappa,
        epsilon=float(epsilon),
        quotient_gap=gap,
        epsilon_star=0.9 * root,
        pieces=pieces,
        provenance={"edge_points": EDGE_POINTS, "strip": _strip_provenance(v)},
    )


def gradient_norms(space, values) -> tuple[np.ndarray, float]:
    """``(||d1 u||^2, ..., ||dd u||^2)`` and ``||u||^2`` for a full dof vector."""
    _, w, u, du = cell_quadrature(space, values)
    return np.einsum("mq,mqd->d", w, du * du), float(np.sum(w * u * u))


def pullback_quotient_bound(kappa, epsilon_kappa: float, space, u: np.ndarray) -> float:
    """Rayleigh quotient on the ``(kappa1, kappa2 + eps)`` domain of ``u(x1, kappa2 x2/(kappa2 + eps), x3)``.

    The change of variables scales the ``x2`` derivative by ``kappa2/(kappa2 + eps)``
    and both squared norms by ``(kappa2 + eps)/kappa2``, giving
    ``(k^2 ||d2 u||^2 + ||d1 u||^2 + ||d3 u||^2)/||u||^2`` with ``k = kappa2/(kappa2 + eps)``.
    For the truncated problem the trial domain is cut at ``R2 (kappa2 + eps)/kappa2``.
    """
    kappa = kappa if isinstance(kappa, KappaPair) else KappaPair(*kappa)
    if not kappa.kappa2 > 0:
        raise ValueError("pullback_quotient_bound needs kappa2 > 0")
    if not epsilon_kappa > 0:
        raise ValueError("epsilon_kappa must be positive")
    grads, norm2 = gradient_norms(space, u)
    k = kappa.kappa2 / (kappa.kappa2 + epsilon_kappa)
    return float((k * k * grads[1] + grads[0] + grads[2]) / norm2)
