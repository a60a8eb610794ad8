"""First eigenvalue of the mixed problem on truncated pointed strips.

``mu1(alpha)`` approximates the bottom of the spectrum of the Laplacian on
``{xi1 > xi2 tan(alpha), 0 < xi2 < 1}`` with Dirichlet data on the horizontal
edges and Neumann data on the slanted end; it is the essential-spectrum
threshold of the 3D incisor with ``kappa1 = tan(alpha)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from .eigensolve import smallest_eigenpairs
from .fem import FeSpace, PointLocator, assemble, build_space, evaluate
from .geometry import BC, KappaPair, Mesh, StripSpec, as_bc, build_strip_mesh
from .quadrature import gauss_legendre

PI2 = math.pi ** 2


@dataclass(frozen=True)
class StripNumerics:
    """Discretization of a truncated strip.

    ``nx=None`` picks the column count from ``R`` (160 columns for R = 12).
    """

    R: float = 12.0
    ny: int = 40
    nx: int | None = None
    order: int = 2
    grading: float = 1.1
    t_grading: float = 1.1
    grading_cap: float = 8.0
    artificial_bc: BC = BC.DIRICHLET
    tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "artificial_bc", as_bc(self.artificial_bc))
        if self.nx is None:
            object.__setattr__(self, "nx", max(4, int(round(self.R * self.ny / 3))))

    def refined(self, factor: int = 2) -> "StripNumerics":
        return replace(self, nx=self.nx * factor, ny=self.ny * factor)


@dataclass(frozen=True, eq=False)
class Eigenfunction2D:
    """Unit-L2 first eigenfunction, positive at its maximizer."""

    space: FeSpace
    values: np.ndarray  # full dof vector

    @functools.cached_property
    def _locator(self) -> PointLocator:
        return PointLocator(self.space.mesh)

    @property
    def mesh(self) -> Mesh:
        return self.space.mesh

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return evaluate(self.space, self.values, points, self._locator)

    def gradient(self, points: np.ndarray):
        return evaluate(self.space, self.values, points, self._locator, gradient=True)[1]


@dataclass(frozen=True, eq=False)
class ThresholdSample:
    alpha: float
    mu1: float
    numerics: StripNumerics
    residual: float
    eigenfunction: Eigenfunction2D | None = None

    @property
    def mu1_over_pi2(self) -> float:
        return self.mu1 / PI2

    def row(self) -> dict:
        n = self.numerics
        return {
            "alpha": self.alpha,
            "mu1": self.mu1,
            "mu1_over_pi2": self.mu1_over_pi2,
            "R": n.R,
            "nx": n.nx,
            "ny": n.ny,
            "order": n.order,
            "residual": self.residual,
        }


CSV_COLUMNS = ["alpha", "mu1", "mu1_over_pi2", "R", "nx", "ny", "order", "residual"]


def strip_space(alpha: float, numerics: StripNumerics) -> FeSpace:
    spec = StripSpec(alpha, numerics.R, numerics.artificial_bc)
    mesh = build_strip_mesh(spec, numerics.nx, numerics.ny, grading=numerics.grading,
                            grading_cap=numerics.grading_cap, t_grading=numerics.t_grading)
    return build_space(mesh, numerics.order, numerics.artificial_bc)


def solve_space(space: FeSpace, tol: float = 1e-9):
    pair = assemble(space)
    res = smallest_eigenpairs(pair, k=1, tol=tol)
    return float(res.values[0]), space.expand(res.vectors[:, 0]), float(res.residuals[0])


@functools.lru_cache(maxsize=256)
def _mu1_cached(alpha: float, numerics: StripNumerics) -> ThresholdSample:
    space = strip_space(alpha, numerics)
    value, vec, residual = solve_space(space, numerics.tol)
    return ThresholdSample(alpha, value, numerics, residual, Eigenfunction2D(space, vec))


def mu1(alpha: float, numerics: StripNumerics | None = None, **overrides) -> ThresholdSample:
    """Smallest eigenvalue and eigenfunction on the truncated strip of angle ``alpha``.

    Results are memoized on ``(alpha, numerics)``. Overriding ``R`` without
    ``nx`` rescales the column count with the strip length.
    """
    base = numerics or StripNumerics()
    if "R" in overrides and "nx" not in overrides:
        overrides["nx"] = max(4, int(round(base.nx * overrides["R"] / base.R)))
    numerics = replace(base, **overrides)
    alpha = float(alpha)
    if not 0.0 <= alpha < math.pi / 2:
        raise ValueError(f"alpha must lie in [0, pi/2), got {alpha}")
    return _mu1_cached(alpha, numerics)


def threshold_curve(alphas, numerics: StripNumerics | None = None, **overrides) -> list[ThresholdSample]:
    """``mu1`` over a strictly increasing grid of angles in ``(0, pi/2)``."""
    alphas = [float(a) for a in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    if alphas and not (alphas[0] > 0 and alphas[-1] < math.pi / 2):
        raise ValueError("alphas must lie in (0, pi/2)")
    return [mu1(a, numerics, **overrides) for a in alphas]


def lambda_dagger(kappa: KappaPair, numerics: StripNumerics | None = None, **overrides) -> float:
    """Essential-spectrum threshold ``mu1(arctan kappa1)``; exactly pi^2 for kappa1 = 0."""
    if not isinstance(kappa, KappaPair):
        kappa = KappaPair(*kappa)
    if kappa.kappa1 == 0.0:
        return PI2
    return mu1(kappa.alpha1, numerics, **overrides).mu1


def mu1_truncated(alpha2: float, R: float, numerics: StripNumerics | None = None, **overrides) -> float:
    """Smallest eigenvalue on ``{xi in strip(alpha2) | xi1 < R}`` with Dirichlet at ``xi1 = R``.

    Negative angles use the mirror image in ``xi2 = 1/2``: the strip of angle
    ``-a`` cut at ``R`` is congruent to the strip of angle ``a`` cut at
    ``R + tan(a)``. Column count scales with the strip length.
    """
    base = replace(numerics or StripNumerics(), **overrides)
    a = abs(float(alpha2))
    R_eff = R + math.tan(a) if alpha2 < 0 else R
    if not R_eff > math.tan(a):
        raise ValueError(f"R must exceed tan|alpha2| = {math.tan(a):.6g}")
    cells = max(4, int(round(R_eff * base.ny / 3)))
    num = replace(base, R=R_eff, nx=cells, artificial_bc=BC.DIRICHLET)
    return mu1(a, num).mu1


def first_relation_radius(kappa: KappaPair, radii=(1.5, 2, 3, 4, 6, 8, 12),
                          numerics: StripNumerics | None = None) -> tuple[float, float, float] | None:
    """Smallest sampled ``R > |kappa2|`` with ``mu1_truncated(alpha2, R) > lambda_dagger``.

    Returns ``(R, mu1_truncated, lambda_dagger)`` or None.
    """
    if not isinstance(kappa, KappaPair):
        kappa = KappaPair(*kappa)
    lam = lambda_dagger(kappa, numerics)
    for R in radii:
        if R <= abs(kappa.kappa2):
            continue
        value = mu1_truncated(kappa.alpha2, R, numerics)
        if value > lam:
            return R, value, lam
    return None


def cross_section_norms(v: Eigenfunction2D, xs: np.ndarray, n_gauss: int = 24) -> np.ndarray:
    """``(int_0^1 v(x, t)^2 dt)^(1/2)`` for each abscissa ``x``."""
    t, w = gauss_legendre(n_gauss)
    xs = np.asarray(xs, dtype=float)
    pts = np.column_stack([np.repeat(xs, len(t)), np.tile(t, len(xs))])
    vals = v(pts).reshape(len(xs), len(t))
    return np.sqrt((vals ** 2) @ w)


def decay_rate(v: Eigenfunction2D, mu1_value: float, n_sections: int = 41) -> float:
    """Exponential decay rate of ``v`` along the strip.

    Least-squares slope of ``log ||v(x, .)||`` over cross-sections in the far
    half of the truncated strip, stopping short of the last sixth where the
    artificial boundary bends the profile.
    """
    if mu1_value >= PI2:
        raise ValueError(f"mu1 = {mu1_value / PI2:.6f} pi^2 is not below pi^2; no decay to fit")
    spec = v.mesh.meta["spec"]
    R = spec.R
    lo = max(R / 2, math.tan(spec.alpha) + 1.0)
    hi = R - R / 6
    if hi <= lo:
        raise ValueError("strip too short for a decay fit")
    xs = np.linspace(lo, hi, n_sections)
    norms = cross_section_norms(v, xs)
    slope = np.polyfit(xs, np.log(norms), 1)[0]
    return float(-slope)
