"""Discrete spectrum of the mixed Laplacian on truncated incisors.

An eigenvalue of the truncated problem counts as a discrete-spectrum candidate
only when it lies below ``lambda_dagger - margin``; the margin absorbs
truncation and discretization blur near the threshold.
"""

from __future__ import annotations

import functools
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .eigensolve import smallest_eigenpairs
from .fem import FeSpace, assemble, build_space
from .geometry import BC, IncisorSpec, KappaPair, as_bc, build_incisor_mesh
from .spectral2d import PI2, StripNumerics, lambda_dagger

log = logging.getLogger(__name__)

MARGIN_FLOOR = 0.002 * PI2


class InconclusiveError(RuntimeError):
    """A bracket endpoint could not be classified at the given resolution."""


def _as_kappa(kappa) -> KappaPair:
    return kappa if isinstance(kappa, KappaPair) else KappaPair(*kappa)


def _extended_count(n: int, ratio: float, cap: float) -> int:
    """Cell count covering twice the length with the same leading cell sizes."""
    sizes = np.minimum(ratio ** np.arange(n, dtype=float), cap)
    target = 2 * sizes.sum()
    total, m = sizes.sum(), n
    while total < target - 1e-9:
        total += min(ratio ** m, cap)
        m += 1
    return m


@dataclass(frozen=True)
class IncisorNumerics:
    """Discretization of a truncated incisor.

    The default (P2, 24 x 24 x 16 cells graded 1.2 toward the chamfered faces
    and the horizontal faces) gives about 75k free dofs and resolves the
    first eigenvalue to roughly 1e-3 pi^2.
    """

    R1: float = 6.0
    R2: float = 6.0
    n1: int = 24
    n2: int = 24
    n3: int = 16
    order: int = 2
    grading: float = 1.2
    t_grading: float = 1.2
    grading_cap: float = 8.0
    artificial_bc: BC = BC.NEUMANN
    dirichlet_everywhere: bool = False
    k: int = 5
    tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "artificial_bc", as_bc(self.artificial_bc))
        if min(self.n1, self.n2, self.n3) < 1:
            raise ValueError("n1, n2, n3 must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def scaled(self, factor: float) -> "IncisorNumerics":
        """Same geometry with every cell count multiplied by ``factor``."""
        return replace(self, n1=max(1, round(self.n1 * factor)), n2=max(1, round(self.n2 * factor)),
                       n3=max(1, round(self.n3 * factor)))

    def doubled(self) -> "IncisorNumerics":
        """Truncation lengths doubled, keeping the cells near the chamfer."""
        return replace(
            self,
            R1=2 * self.R1,
            R2=2 * self.R2,
            n1=_extended_count(self.n1, self.grading, self.grading_cap),
            n2=_extended_count(self.n2, self.grading, self.grading_cap),
        )

    def with_length(self, R: float) -> "IncisorNumerics":
        """Truncate both directions at ``R``, scaling cell counts with length."""
        f1, f2 = R / self.R1, R / self.R2
        return replace(self, R1=R, R2=R, n1=max(1, round(self.n1 * f1)), n2=max(1, round(self.n2 * f2)))

    def provenance(self) -> dict:
        d = asdict(self)
        d["artificial_bc"] = self.artificial_bc.value
        return d


def incisor_space(kappa: KappaPair, numerics: IncisorNumerics) -> FeSpace:
    spec = IncisorSpec(kappa, numerics.R1, numerics.R2, numerics.artificial_bc, numerics.dirichlet_everywhere)
    mesh = build_incisor_mesh(spec, numerics.n1, numerics.n2, numerics.n3, grading=numerics.grading,
                              grading_cap=numerics.grading_cap, t_grading=numerics.t_grading)
    return build_space(mesh, numerics.order, numerics.artificial_bc)


@dataclass(frozen=True, eq=False)
class RawSpectrum:
    values: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray  # full dof vectors, one column per pair
    space: FeSpace
    n_free: int


def _solve(kappa: KappaPair, numerics: IncisorNumerics, k: int | None = None) -> RawSpectrum:
    space = incisor_space(kappa, numerics)
    pair = assemble(space)
    k = min(k or numerics.k, pair.n)
    res = smallest_eigenpairs(pair, k=k, tol=numerics.tol)
    log.info("incisor kappa=(%g, %g): %d free dofs, lambda/pi^2 = %s", kappa.kappa1, kappa.kappa2,
             pair.n, np.round(res.values / PI2, 6))
    return RawSpectrum(res.values, res.residuals, space.expand(res.vectors), space, pair.n)


@functools.lru_cache(maxsize=64)
def _first_eigenvalue(kappa: KappaPair, numerics: IncisorNumerics) -> float:
    return float(_solve(kappa, replace(numerics, k=1)).values[0])


@functools.lru_cache(maxsize=64)
def truncation_estimate(kappa: KappaPair, numerics: IncisorNumerics, level: float = 0.5) -> float:
    """``|lambda1(R) - lambda1(2R)|`` from a pair of runs at ``level`` times the resolution.

    The doubled run keeps the cells near the chamfer, so the difference
    isolates the effect of the truncation.
    """
    kappa = _as_kappa(kappa)
    coarse = numerics.scaled(level)
    return abs(_first_eigenvalue(kappa, coarse) - _first_eigenvalue(kappa, coarse.doubled()))


def detection_margin(kappa, numerics: IncisorNumerics, level: float = 0.5) -> float:
    """``max(truncation estimate, 0.002 pi^2)``."""
    return max(truncation_estimate(_as_kappa(kappa), numerics, level), MARGIN_FLOOR)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Smallest eigenvalues of one truncated incisor and their classification."""

    kappa: KappaPair
    lambda_dagger: float
    values: np.ndarray
    residuals: np.ndarray
    margin: float
    numerics: IncisorNumerics
    n_free: int
    space: FeSpace | None = field(default=None, repr=False)
    vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def threshold(self) -> float:
        return self.lambda_dagger - self.margin

    @property
    def discrete(self) -> np.ndarray:
        """Eigenvalues below ``lambda_dagger - margin``."""
        return self.values[self.values < self.threshold]

    @property
    def lambda1(self) -> float:
        return float(self.values[0])

    @property
    def below(self) -> bool:
        return bool(self.lambda1 < self.threshold)

    @property
    def undecided(self) -> bool:
        return bool(abs(self.lambda1 - self.lambda_dagger) <= self.margin)

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa.kappa1,
            "kappa2": self.kappa.kappa2,
            "lambda_dagger": self.lambda_dagger,
            "lambda_dagger_over_pi2": self.lambda_dagger / PI2,
            "margin": self.margin,
            "eigenvalues": self.values.tolist(),
            "eigenvalues_over_pi2": (self.values / PI2).tolist(),
            "residuals": self.residuals.tolist(),
            "discrete_over_pi2": (self.discrete / PI2).tolist(),
            "n_free_dofs": self.n_free,
            "numerics": self.numerics.provenance(),
        }


def solve_incisor(kappa, numerics: IncisorNumerics | None = None, *, margin: float | None = None,
                  strip_numerics: StripNumerics | None = None, keep_vectors: bool = False,
                  **overrides) -> SpectrumReport:
    """Smallest ``k`` eigenpairs on the truncated incisor, classified against the threshold.

    Parameters
    ----------
    kappa : KappaPair or (kappa1, kappa2)
    numerics : IncisorNumerics, optional
        Field overrides may also be passed as keywords.
    margin : float, optional
        Detection margin; by default ``detection_margin(kappa, numerics)``.
    strip_numerics : StripNumerics, optional
        Numerics of the 2D threshold computation.
    keep_vectors : bool
        Attach the FE space and full eigenvectors to the report.
    """
    kappa = _as_kappa(kappa)
    numerics = replace(numerics or IncisorNumerics(), **overrides)
    lam_dag = lambda_dagger(kappa, strip_numerics)
    raw = _solve(kappa, numerics)
    if margin is None:
        margin = detection_margin(kappa, numerics)
    report = SpectrumReport(kappa, lam_dag, raw.values, raw.residuals, float(margin), numerics, raw.n_free,
                            raw.space if keep_vectors else None, raw.vectors if keep_vectors else None)
    if report.undecided:
        warnings.warn(
            f"lambda1 = {report.lambda1 / PI2:.5f} pi^2 lies within the margin {margin / PI2:.4f} pi^2 of "
            f"lambda_dagger = {lam_dag / PI2:.5f} pi^2 for kappa=({kappa.kappa1}, {kappa.kappa2}); "
            "undecidable at this resolution",
            RuntimeWarning,
            stacklevel=2,
        )
    return report


def _quiet_solve(kappa, numerics, strip_numerics=None, margin=None) -> SpectrumReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return solve_incisor(kappa, numerics, strip_numerics=strip_numerics, margin=margin)


@dataclass(frozen=True, eq=False)
class SweepResult:
    kappa1: float
    kappa2: np.ndarray
    lambda1: np.ndarray
    residual1: np.ndarray
    lambda_dagger: float
    margins: np.ndarray
    below: np.ndarray
    numerics: IncisorNumerics

    def crossover_consistent(self, slack: int = 1) -> bool:
        """Flags on the nonnegative part are false up to some index, true after (up to ``slack`` violations)."""
        sel = self.kappa2 >= 0
        flags = self.below[sel][np.argsort(self.kappa2[sel])]
        best = min(int(np.sum(flags[:i])) + int(np.sum(~flags[i:])) for i in range(len(flags) + 1))
        return best <= slack

    def rows(self) -> list[dict]:
        n = self.numerics
        out = []
        for k2, lam, flag, m in zip(self.kappa2, self.lambda1, self.below, self.margins):
            out.append({
                "kappa1": self.kappa1,
                "kappa2": float(k2),
                "lambda1_over_pi2": float(lam / PI2) if flag else None,
                "lambda_dagger_over_pi2": self.lambda_dagger / PI2,
                "below_flag": int(flag),
                "margin": float(m),
                "R1": n.R1, "R2": n.R2, "n1": n.n1, "n2": n.n2, "n3": n.n3, "order": n.order,
            })
        return out


SWEEP_COLUMNS = ["kappa1", "kappa2", "lambda1_over_pi2", "lambda_dagger_over_pi2", "below_flag", "margin",
                 "R1", "R2", "n1", "n2", "n3", "order"]


def sweep_kappa2(kappa1: float, grid, numerics: IncisorNumerics | None = None,
                 strip_numerics: StripNumerics | None = None, workers: int = 1) -> SweepResult:
    """First eigenvalue along ``kappa2`` for fixed ``kappa1``.

    All points share the same unit-cube grid, so the meshes differ only
    through the geometric map. Results are ordered by grid index.
    """
    grid = np.asarray(list(grid), dtype=float)
    if np.any(np.abs(grid) > kappa1):
        raise ValueError(f"kappa2 grid must lie in [-{kappa1}, {kappa1}]")
    numerics = numerics or IncisorNumerics()
    kappas = [KappaPair(kappa1, k2) for k2 in grid]
    solve = functools.partial(_quiet_solve, numerics=numerics, strip_numerics=strip_numerics)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(solve, kappas))
    else:
        reports = [solve(k) for k in kappas]
    return SweepResult(
        kappa1=float(kappa1),
        kappa2=grid,
        lambda1=np.array([r.lambda1 for r in reports]),
        residual1=np.array([r.residuals[0] for r in reports]),
        lambda_dagger=reports[0].lambda_dagger if reports else lambda_dagger(KappaPair(kappa1, 0.0), strip_numerics),
        margins=np.array([r.margin for r in reports]),
        below=np.array([r.below for r in reports], dtype=bool),
        numerics=numerics,
    )


@dataclass(frozen=True)
class TransitionEstimate:
    """Bisection estimate of the transition point ``h(kappa1)`` at fixed numerics."""

    kappa1: float
    h: float
    lo: float
    hi: float
    evaluations: tuple  # (kappa2, lambda1, threshold, below) per solve
    numerics: IncisorNumerics

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa1,
            "h": self.h,
            "bracket": [self.lo, self.hi],
            "width": self.width,
            "evaluations": [list(e) for e in self.evaluations],
            "numerics": self.numerics.provenance(),
        }


def find_h(kappa1: float, bracket=None, tol_kappa2: float = 0.05, numerics: IncisorNumerics | None = None,
           strip_numerics: StripNumerics | None = None) -> TransitionEstimate:
    """Bisect on the below-threshold flag for ``kappa2`` in ``bracket``.

    The lower endpoint must be classified absent and the upper one present.
    The estimate depends on the discretization and the margin; it is not an
    exact value of ``h``.
    """
    if kappa1 <= 0:
        raise ValueError("kappa1 must be positive")
    lo, hi = bracket if bracket is not None else (0.0, float(kappa1))
    if not 0 <= lo < hi <= kappa1:
        raise ValueError(f"bracket must satisfy 0 <= lo < hi <= kappa1, got ({lo}, {hi})")
    numerics = numerics or IncisorNumerics()
    evals = []

    def flag(k2):
        r = _quiet_solve(KappaPair(kappa1, k2), numerics, strip_numerics)
        evals.append((float(k2), r.lambda1, r.threshold, r.below))
        return r

    r_lo, r_hi = flag(lo), flag(hi)
    if r_lo.undecided and r_hi.undecided:
        raise InconclusiveError(f"both bracket endpoints lie within the margin of lambda_dagger: {evals}")
    if r_lo.below or not r_hi.below:
        raise InconclusiveError(
            f"bracket ({lo}, {hi}) is not classified absent/present: flags {r_lo.below}, {r_hi.below}"
        )
    while hi - lo > tol_kappa2:
        mid = 0.5 * (lo + hi)
        if flag(mid).below:
            hi = mid
        else:
            lo = mid
    return TransitionEstimate(float(kappa1), 0.5 * (lo + hi), lo, hi, tuple(evals), numerics)


def count_discrete(kappa, numerics: IncisorNumerics | None = None, k_max: int = 40,
                   strip_numerics: StripNumerics | None = None) -> int:
    """Number of eigenvalues below ``lambda_dagger - margin``.

    ``k`` grows until an eigenvalue above the threshold appears.
    """
    kappa = _as_kappa(kappa)
    numerics = numerics or IncisorNumerics()
    k = numerics.k
    while True:
        report = _quiet_solve(kappa, replace(numerics, k=k), strip_numerics)
        count = len(report.discrete)
        if count < len(report.values) or k >= min(k_max, report.n_free):
            return count
        k *= 2


@dataclass(frozen=True)
class TrendReport:
    """First eigenvalue against truncation length."""

    kappa: KappaPair
    radii: tuple
    values: tuple
    reference: float
    floor: float

    @property
    def above_floor(self) -> bool:
        return all(v >= self.floor for v in self.values)

    @property
    def nonincreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.values, self.values[1:]))

    @property
    def gaps(self) -> tuple:
        return tuple(v - self.reference for v in self.values)

    @property
    def ok(self) -> bool:
        return self.above_floor and self.nonincreasing

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa.kappa1,
            "kappa2": self.kappa.kappa2,
            "R": list(self.radii),
            "lambda1_over_pi2": [v / PI2 for v in self.values],
            "reference_over_pi2": self.reference / PI2,
            "floor_over_pi2": self.floor / PI2,
            "nonincreasing": self.nonincreasing,
            "above_floor": self.above_floor,
        }


def truncation_trend(kappa, radii=(4.0, 6.0, 8.0), numerics: IncisorNumerics | None = None,
                     strip_numerics: StripNumerics | None = None) -> TrendReport:
    """First eigenvalue with Dirichlet truncation at ``R1 = R2 = R``.

    Dirichlet truncation makes every value an upper bound that decreases
    toward the bottom of the spectrum as ``R`` grows; the floor recorded is
    ``lambda_dagger - margin``.
    """
    kappa = _as_kappa(kappa)
    base = replace(numerics or IncisorNumerics(), artificial_bc=BC.DIRICHLET, k=1)
    values = tuple(_first_eigenvalue(kappa, base.with_length(R)) for R in radii)
    lam = lambda_dagger(kappa, strip_numerics)
    return TrendReport(kappa, tuple(radii), values, lam, lam - MARGIN_FLOOR)


def dirichlet_absence_check(kappa, radii=(4.0, 6.0, 8.0), numerics: IncisorNumerics | None = None,
                            rel_tol: float = 1e-3) -> TrendReport:
    """Full-Dirichlet runs: no eigenvalue may fall below ``pi^2 (1 - rel_tol)``.

    A value below the floor indicates a mesh or solver defect, since Dirichlet
    truncation only raises eigenvalues above the spectral bottom ``pi^2``.
    """
    kappa = _as_kappa(kappa)
    base = replace(numerics or IncisorNumerics(), artificial_bc=BC.DIRICHLET, dirichlet_everywhere=True, k=1)
    values = tuple(_first_eigenvalue(kappa, base.with_length(R)) for R in radii)
    return TrendReport(kappa, tuple(radii), values, PI2, PI2 * (1 - rel_tol))
