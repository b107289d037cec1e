"""Half-flux Aharonov-Bohm eigenvalues on the unit disk with the pole at (t, 0).

The AB spectrum is the union of the spectra of two Laplace problems on the
upper half-disk: Dirichlet-Neumann (DN: Neumann on (t, 1]) and
Neumann-Dirichlet (ND: Neumann on [-1, t)).  Everything here is built on
those two problems plus the weighted Dirichlet problem on the double cover.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import specfun
from .eigensolve import DEFAULT_SEED, EigenBasis, solve_lowest
from .fem import DISK_TAGS, DN_TAGS, ND_TAGS, DofMap, assemble, build_dofmap, double_cover_weight
from .mesh import Mesh, build_full_disk_mesh, build_half_disk_mesh, build_unit_square_mesh, mirror_x

log = logging.getLogger(__name__)

VARIANTS = ("DN", "ND")
# (base_level, grade_rounds); the tip mesh size scales like h^2
DEFAULT_LEVELS = ((4, 6), (5, 8), (6, 10))
COARSE_LEVELS = ((3, 4), (4, 6), (5, 8))
DEFAULT_DISK_LEVELS = (3, 4, 5)
ORDER_SLACK = 0.3  # accepted relative deviation of the observed order from 2
DOUBLE_FACTOR = 10.0
FD_STEP = 0.02


class TipFitError(RuntimeError):
    pass


class SpectrumError(RuntimeError):
    pass


# -- Richardson extrapolation ---------------------------------------------------------

@dataclass
class Extrapolation:
    values: np.ndarray
    residual: np.ndarray
    order: np.ndarray  # observed convergence order (nan with < 3 levels)
    ok: np.ndarray  # False where extrapolation was rejected


def richardson(per_level, ratio: float = 2.0, order: float = 2.0) -> Extrapolation:
    """Extrapolate eigenvalues computed on meshes with h shrinking by ``ratio``.

    With three or more levels the residual is the gap between the last two
    extrapolants and the observed order is checked; if it strays more than
    30% from ``order`` (or the levels are not monotone) the finest value is
    kept and the last level difference becomes the residual.
    """
    lv = np.atleast_2d(np.asarray(per_level, dtype=float))
    n_levels = lv.shape[0]
    if n_levels < 2:
        raise ValueError("need at least two levels")
    f = ratio ** order
    ext = (f * lv[1:] - lv[:-1]) / (f - 1)
    values = ext[-1].copy()
    ok = np.ones(lv.shape[1], dtype=bool)
    observed = np.full(lv.shape[1], np.nan)
    if n_levels == 2:
        residual = np.abs(values - lv[-1])
        return Extrapolation(values, residual, observed, ok)
    residual = np.abs(ext[-1] - ext[-2])
    d1 = lv[-3] - lv[-2]
    d2 = lv[-2] - lv[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = d1 / d2
        observed = np.where(q > 0, np.log(q) / np.log(ratio), np.nan)
    bad = ~np.isfinite(observed) | (np.abs(observed - order) > ORDER_SLACK * order)
    ok[bad] = False
    values[bad] = lv[-1, bad]
    residual[bad] = np.abs(d2[bad])
    return Extrapolation(values, residual, observed, ok)


# -- single solves ----------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSolve:
    mesh: Mesh
    dofmap: DofMap
    basis: EigenBasis

    @property
    def values(self):
        return self.basis.values


def _dirichlet_tags(variant: str):
    if variant == "DN":
        return DN_TAGS
    if variant == "ND":
        return ND_TAGS
    raise ValueError(f"variant must be 'DN' or 'ND', got {variant!r}")


def solve_pencil(mesh: Mesh, tags, k: int, weight=None, tol: float = 1e-8, seed: int = DEFAULT_SEED) -> LevelSolve:
    dofmap = build_dofmap(mesh, tags)
    K, M = assemble(mesh, dofmap, weight)
    return LevelSolve(mesh, dofmap, solve_lowest(K, M, k, tol=tol, seed=seed))


@lru_cache(maxsize=128)
def _mixed_level(t: float, variant: str, base_level: int, grade_rounds: int, k: int,
                 seed: int = DEFAULT_SEED) -> LevelSolve:
    mesh = build_half_disk_mesh(t, base_level, grade_rounds)
    return solve_pencil(mesh, _dirichlet_tags(variant), k, seed=seed)


@lru_cache(maxsize=32)
def _disk_level(base_level: int, weighted: bool, k: int, seed: int = DEFAULT_SEED) -> LevelSolve:
    mesh = build_full_disk_mesh(base_level, symmetric=True)
    return solve_pencil(mesh, DISK_TAGS, k, weight=double_cover_weight if weighted else None, seed=seed)


@lru_cache(maxsize=32)
def _square_level(cells: int, k: int, seed: int = DEFAULT_SEED) -> LevelSolve:
    return solve_pencil(build_unit_square_mesh(cells), DISK_TAGS, k, seed=seed)


def clear_cache() -> None:
    for fn in (_mixed_level, _disk_level, _square_level):
        fn.cache_clear()


# -- mixed problems ----------------------------------------------------------------------

@dataclass(frozen=True)
class MixedProblemSpec:
    t: float
    variant: str
    k: int = 1
    levels: tuple = DEFAULT_LEVELS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not -1.0 <= self.t <= 1.0:
            raise ValueError("t must lie in [-1, 1]")
        if not 1 <= self.k <= 8:
            raise ValueError("k must lie in [1, 8]")
        if len(self.levels) < 2:
            raise ValueError("need at least two mesh levels")


@dataclass
class SpectrumSequence:
    spec: MixedProblemSpec
    per_level: np.ndarray  # (n_levels, k)
    extrapolated: np.ndarray
    residual: np.ndarray
    order: np.ndarray
    extrapolation_ok: np.ndarray
    solver_residual: float  # worst eigenpair residual over all levels
    n_free: list
    finest: LevelSolve

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.finest.basis.vectors


def mixed_spectrum(spec: MixedProblemSpec) -> SpectrumSequence:
    solves = [_mixed_level(float(spec.t), spec.variant, L, g, spec.k, spec.seed) for L, g in spec.levels]
    per_level = np.array([s.values for s in solves])
    ex = richardson(per_level)
    return SpectrumSequence(
        spec=spec,
        per_level=per_level,
        extrapolated=ex.values,
        residual=ex.residual,
        order=ex.order,
        extrapolation_ok=ex.ok,
        solver_residual=float(max(s.basis.residuals.max() for s in solves)),
        n_free=[s.dofmap.n_free for s in solves],
        finest=solves[-1],
    )


def mirrored_pair(t: float, variant: str, base_level: int, grade_rounds: int, k: int = 2):
    """Eigenvalues of ``variant`` at t and of the other variant at -t on the
    mirrored mesh.  They coincide up to solver round-off."""
    other = "ND" if variant == "DN" else "DN"
    mesh = build_half_disk_mesh(t, base_level, grade_rounds)
    a = solve_pencil(mesh, _dirichlet_tags(variant), k)
    b = solve_pencil(mirror_x(mesh), _dirichlet_tags(other), k)
    return a.values, b.values


# -- merged AB spectrum ---------------------------------------------------------------------

@dataclass
class ABSpectrum:
    t: float
    values: np.ndarray
    provenance: list  # "DN" / "ND" per entry
    residual: np.ndarray
    double_with: list  # index of the numerically-equal partner or None
    dn: SpectrumSequence
    nd: SpectrumSequence

    def is_double(self, j: int) -> bool:
        return self.double_with[j] is not None


def double_threshold(res_a: float, res_b: float, lam: float) -> float:
    return DOUBLE_FACTOR * max(res_a, res_b, 1e-12 * abs(lam))


def merge_spectra(dn: SpectrumSequence, nd: SpectrumSequence, k: int):
    entries = [(v, "DN", r) for v, r in zip(dn.extrapolated, dn.residual)]
    entries += [(v, "ND", r) for v, r in zip(nd.extrapolated, nd.residual)]
    # stable on ties: ND before DN keeps the lowest branch labelled ND at t = 0
    entries.sort(key=lambda e: (e[0], 0 if e[1] == "ND" else 1))
    entries = entries[:k]
    values = np.array([e[0] for e in entries])
    prov = [e[1] for e in entries]
    res = np.array([e[2] for e in entries])
    partner = [None] * len(entries)
    for j in range(len(entries) - 1):
        if partner[j] is not None or prov[j] == prov[j + 1]:
            continue
        if abs(values[j + 1] - values[j]) <= double_threshold(res[j], res[j + 1], values[j]):
            partner[j], partner[j + 1] = j + 1, j
    return values, prov, res, partner


def ab_spectrum(t: float, k: int, levels=DEFAULT_LEVELS, seed: int = DEFAULT_SEED) -> ABSpectrum:
    if not abs(t) < 1:
        raise ValueError("|t| must be < 1")
    dn = mixed_spectrum(MixedProblemSpec(t, "DN", k, tuple(levels), seed))
    nd = mixed_spectrum(MixedProblemSpec(t, "ND", k, tuple(levels), seed))
    values, prov, res, partner = merge_spectra(dn, nd, k)
    return ABSpectrum(t, values, prov, res, partner, dn, nd)


# -- double covering ---------------------------------------------------------------------------

@dataclass
class DoubleCoverSpectrum:
    values: np.ndarray  # extrapolated, ascending
    residual: np.ndarray
    parity: np.ndarray  # score in [-1, 1] per eigenvalue (finest level)
    per_level: np.ndarray
    projected_clusters: int
    antiperiodic: np.ndarray = field(default=None)
    periodic: np.ndarray = field(default=None)


def _dof_permutation(mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    if mesh.symmetry_pairing is None:
        raise SpectrumError("mesh carries no symmetry pairing")
    free = dofmap.free_vertices
    perm = dofmap.free_index[mesh.symmetry_pairing[free]]
    if np.any(perm < 0):
        raise SpectrumError("symmetry pairing maps free to constrained vertices")
    return perm


def classify_parity(values, U, M, perm, cluster_rtol: float = 1e-6):
    """Parity scores u.Pu / u.u; clusters with a mixed score are first rotated
    onto eigenvectors of P restricted to the cluster.  Returns (scores,
    rotated vectors, number of rotated clusters)."""
    U = U.copy()
    n = len(values)
    projected = 0
    j = 0
    while j < n:
        end = j + 1
        while end < n and abs(values[end] - values[end - 1]) <= cluster_rtol * abs(values[end - 1]):
            end += 1
        block = U[:, j:end]
        scores = np.einsum("ij,ij->j", block, block[perm]) / np.einsum("ij,ij->j", block, block)
        if end - j > 1 and np.any(np.abs(scores) < 0.9):
            G = block.T @ (M @ block[perm])
            _, Q = np.linalg.eigh(0.5 * (G + G.T))
            U[:, j:end] = block @ Q
            projected += 1
        j = end
    scores = np.einsum("ij,ij->j", U, U[perm]) / np.einsum("ij,ij->j", U, U)
    return scores, U, projected


def double_cover_spectrum(k: int = 8, base_levels=DEFAULT_DISK_LEVELS, seed: int = DEFAULT_SEED) -> DoubleCoverSpectrum:
    """Weighted problem -Lap psi = 4 lam |y|^2 psi on the disk, split into the
    antiperiodic (AB) and periodic (plain-disk) sectors by the parity of psi
    under y -> -y."""
    solves = [_disk_level(L, True, k, seed) for L in base_levels]
    per_level = np.array([s.values for s in solves])
    ex = richardson(per_level)
    fin = solves[-1]
    perm = _dof_permutation(fin.mesh, fin.dofmap)
    _, M = assemble(fin.mesh, fin.dofmap, double_cover_weight)
    scores, _, projected = classify_parity(fin.values, fin.basis.vectors, M, perm)
    out = DoubleCoverSpectrum(ex.values, ex.residual, scores, per_level, projected)
    out.antiperiodic = ex.values[scores < 0]
    out.periodic = ex.values[scores > 0]
    return out


def plain_disk_spectrum(k: int = 1, base_levels=DEFAULT_DISK_LEVELS, seed: int = DEFAULT_SEED) -> Extrapolation:
    """Dirichlet Laplacian on the unit disk."""
    per_level = [_disk_level(L, False, k, seed).values for L in base_levels]
    return richardson(per_level)


def unit_square_spectrum(k: int = 1, cells=(8, 16, 32), seed: int = DEFAULT_SEED) -> Extrapolation:
    """Dirichlet Laplacian on the unit square."""
    per_level = [_square_level(n, k, seed).values for n in cells]
    return richardson(per_level)


# -- slopes at the origin ----------------------------------------------------------------------

@dataclass
class SlopeEstimate:
    variant: str
    slope: float
    fd_error: float
    h: float
    values: dict  # lam_ND(h), lam_DN(h) and the same at h/2


def _fd_slope(variant, h, levels, seed):
    nd = mixed_spectrum(MixedProblemSpec(h, "ND", 1, tuple(levels), seed))
    dn = mixed_spectrum(MixedProblemSpec(h, "DN", 1, tuple(levels), seed))
    lam_nd, lam_dn = float(nd.extrapolated[0]), float(dn.extrapolated[0])
    # lam_var(-h) is the other variant at +h (mirror symmetry of the disk)
    if variant == "ND":
        slope = (lam_nd - lam_dn) / (2 * h)
    else:
        slope = (lam_dn - lam_nd) / (2 * h)
    return slope, lam_nd, lam_dn


def branch_slope_at_origin(variant: str, h: float = FD_STEP, levels=DEFAULT_LEVELS,
                           seed: int = DEFAULT_SEED) -> SlopeEstimate:
    """Central difference of the first DN or ND eigenvalue at t = 0, with a
    second pass at h/2 as the error estimate."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not 0.005 <= h <= 0.05:
        raise ValueError("h must lie in [0.005, 0.05]")
    s1, nd1, dn1 = _fd_slope(variant, h, levels, seed)
    s2, nd2, dn2 = _fd_slope(variant, h / 2, levels, seed)
    return SlopeEstimate(variant, s1, abs(s1 - s2), h,
                         {"nd_h": nd1, "dn_h": dn1, "nd_h2": nd2, "dn_h2": dn2, "slope_h2": s2})


# -- tip coefficients -------------------------------------------------------------------------------

@dataclass
class TipFit:
    coefficient: float
    kind: str  # "A" (DN, cosine half-mode) or "B" (ND, sine half-mode)
    fit_rms: float
    annulus: tuple
    n_points: int
    full_disk_normalized: bool = True


def half_mode(variant: str, theta):
    """Angular factor of the r^{1/2} tip mode: the cosine of half the angle
    measured from the Neumann side of the tip."""
    if variant == "DN":  # Neumann on the right, Dirichlet on the left
        return np.cos(theta / 2)
    return np.cos((np.pi - theta) / 2)


def fit_half_mode(points, values, tip, variant, annulus, max_rel_rms: float = 0.05) -> TipFit:
    """Least-squares fit of values ~ c r^{1/2} m(theta) on the annulus."""
    rel = np.asarray(points) - np.asarray(tip)
    r = np.hypot(rel[:, 0], rel[:, 1])
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    sel = (r >= annulus[0]) & (r <= annulus[1]) & (rel[:, 1] >= 0)
    if sel.sum() < 3:
        raise TipFitError(f"only {int(sel.sum())} nodes in the fit annulus")
    basis = np.sqrt(r[sel]) * half_mode(variant, theta[sel])
    u = np.asarray(values)[sel]
    c = float(basis @ u / (basis @ basis))
    scaled = u / np.sqrt(r[sel]) - c * half_mode(variant, theta[sel])
    rms = float(np.sqrt(np.mean(scaled ** 2)))
    kind = "A" if variant == "DN" else "B"
    fit = TipFit(abs(c), kind, rms, tuple(annulus), int(sel.sum()))
    if rms > max_rel_rms * abs(c):
        raise TipFitError(f"tip fit rejected: rms {rms:.3g} exceeds {max_rel_rms} x |{c:.4g}|")
    return fit


def fit_tip_coefficient(sequence: SpectrumSequence, j: int = 0, inner: float = 2.0, outer: float = 8.0) -> TipFit:
    """Tip coefficient (A for DN, B for ND) of the j-th eigenfunction at t = 0.

    The half-disk eigenfunction is scaled to L2 norm 1/sqrt(2) so that its
    even/odd extension has unit norm on the disk.
    """
    fin = sequence.finest
    mesh = fin.mesh
    h_tip = mesh.tip_size()
    u = fin.dofmap.expand(fin.basis.vectors[:, j]) / math.sqrt(2.0)
    return fit_half_mode(mesh.vertices, u, mesh.vertices[mesh.tip], sequence.spec.variant,
                         (inner * h_tip, outer * h_tip))


def feynman_hellmann_slope(A: float, B: float, j: int | None = None) -> float:
    """(pi/2)(A^2 - B^2).  For branch j=1 the eigenfunction carries no cosine
    half-mode and A is taken as 0; for j=2 B is taken as 0."""
    if j == 1:
        A = 0.0
    elif j == 2:
        B = 0.0
    elif j is not None:
        raise ValueError("branch j must be 1, 2 or None")
    return 0.5 * math.pi * (A * A - B * B)


# -- sweep -------------------------------------------------------------------------------------------

SWEEP_COLUMNS = ("t", "lam1_nd", "lam1_dn", "lam2_nd", "lam2_dn", "lam1", "lam2", "gap",
                 "res1_nd", "res1_dn", "res2_nd", "res2_dn")


@dataclass
class SweepResult:
    t: np.ndarray
    lam1_nd: np.ndarray
    lam1_dn: np.ndarray
    lam2_nd: np.ndarray
    lam2_dn: np.ndarray
    res1_nd: np.ndarray
    res1_dn: np.ndarray
    res2_nd: np.ndarray
    res2_dn: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    gap: np.ndarray
    tag1_ok: np.ndarray  # lam1 == lam1_nd
    tag2_ok: np.ndarray  # lam2 == lam1_dn
    monotone_nd: bool
    monotone_dn: bool
    simple_for_positive_t: bool
    slope_nd_at_0: float | None = None
    slope_dn_at_0: float | None = None
    slope_error: float | None = None

    def rows(self):
        for i in range(len(self.t)):
            yield {c: float(getattr(self, c)[i]) for c in SWEEP_COLUMNS}

    def verdict(self) -> dict:
        return {
            "monotone_nd": bool(self.monotone_nd),
            "monotone_dn": bool(self.monotone_dn),
            "simple_for_positive_t": bool(self.simple_for_positive_t),
            "tags_consistent": bool(np.all(self.tag1_ok) and np.all(self.tag2_ok)),
            "slope_nd_at_0": self.slope_nd_at_0,
            "slope_dn_at_0": self.slope_dn_at_0,
            "slope_fd_error": self.slope_error,
        }


def _sweep_point(t, k, levels, seed=DEFAULT_SEED):
    nd = mixed_spectrum(MixedProblemSpec(t, "ND", k, tuple(levels), seed))
    dn = mixed_spectrum(MixedProblemSpec(t, "DN", k, tuple(levels), seed))
    return nd.extrapolated[:2], nd.residual[:2], dn.extrapolated[:2], dn.residual[:2]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("AB_DISK_THREADS", "1")))
    except ValueError:
        return 1


def sweep(t_grid, k: int = 2, levels=DEFAULT_LEVELS, workers: int | None = None,
          with_slopes: bool = True, slope_h: float = FD_STEP, seed: int = DEFAULT_SEED) -> SweepResult:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or t_grid.min() < 0 or t_grid.max() > 0.95 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t grid must be ascending inside [0, 0.95]")
    if k < 2:
        raise ValueError("sweep needs k >= 2")
    workers = workers or default_workers()
    levels = tuple(tuple(lv) for lv in levels)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            n = len(t_grid)
            pts = list(pool.map(_sweep_point, t_grid, [k] * n, [levels] * n, [seed] * n))
    else:
        pts = [_sweep_point(t, k, levels, seed) for t in t_grid]
    nd = np.array([p[0] for p in pts])
    nd_res = np.array([p[1] for p in pts])
    dn = np.array([p[2] for p in pts])
    dn_res = np.array([p[3] for p in pts])
    all4 = np.column_stack([nd, dn])
    srt = np.sort(all4, axis=1)
    lam1, lam2 = srt[:, 0], srt[:, 1]
    tie1 = np.array([double_threshold(a, b, v) for a, b, v in zip(nd_res[:, 0], dn_res[:, 0], nd[:, 0])])
    tie2 = np.array([double_threshold(a, b, v) for a, b, v in zip(nd_res[:, 1], dn_res[:, 0], dn[:, 0])])
    tag1_ok = nd[:, 0] <= dn[:, 0] + tie1
    tag2_ok = tag1_ok & (dn[:, 0] <= nd[:, 1] + tie2)
    slack_nd = nd_res[:-1, 0] + nd_res[1:, 0]
    slack_dn = dn_res[:-1, 0] + dn_res[1:, 0]
    monotone_nd = bool(np.all(np.diff(nd[:, 0]) <= slack_nd))
    monotone_dn = bool(np.all(np.diff(dn[:, 0]) >= -slack_dn))
    gap = dn[:, 0] - nd[:, 0]
    positive = t_grid > 0
    combined = nd_res[:, 0] + dn_res[:, 0]
    simple = bool(np.any(positive) and np.all(gap[positive] > 3 * combined[positive]))
    out = SweepResult(
        t=t_grid, lam1_nd=nd[:, 0], lam1_dn=dn[:, 0], lam2_nd=nd[:, 1], lam2_dn=dn[:, 1],
        res1_nd=nd_res[:, 0], res1_dn=dn_res[:, 0], res2_nd=nd_res[:, 1], res2_dn=dn_res[:, 1],
        lam1=lam1, lam2=lam2, gap=gap, tag1_ok=tag1_ok, tag2_ok=tag2_ok,
        monotone_nd=monotone_nd, monotone_dn=monotone_dn, simple_for_positive_t=simple,
    )
    if with_slopes:
        est = branch_slope_at_origin("ND", slope_h, levels, seed)
        out.slope_nd_at_0 = est.slope
        out.slope_dn_at_0 = -est.slope
        out.slope_error = est.fd_error
    return out


# -- t = 1 endpoint -----------------------------------------------------------------------------------

@dataclass
class EndpointReport:
    lam1_dn: float
    lam1_nd: float
    lam2_nd: float
    residuals: dict
    exact_j11_sq: float
    exact_j01_sq: float

    @property
    def dn_nd_rel_diff(self) -> float:
        return abs(self.lam1_dn - self.lam2_nd) / self.lam2_nd

    def rel_err(self, value, exact):
        return abs(value - exact) / exact


def verify_t1_endpoint(levels=DEFAULT_LEVELS, seed: int = DEFAULT_SEED) -> EndpointReport:
    dn = mixed_spectrum(MixedProblemSpec(1.0, "DN", 1, tuple(levels), seed))
    nd = mixed_spectrum(MixedProblemSpec(1.0, "ND", 2, tuple(levels), seed))
    j01 = specfun.bessel_zeros(specfun.BesselOrder(0), 1)[0]
    j11 = specfun.bessel_zeros(specfun.BesselOrder(2), 1)[0]
    return EndpointReport(
        lam1_dn=float(dn.extrapolated[0]),
        lam1_nd=float(nd.extrapolated[0]),
        lam2_nd=float(nd.extrapolated[1]),
        residuals={"dn1": float(dn.residual[0]), "nd1": float(nd.residual[0]), "nd2": float(nd.residual[1])},
        exact_j11_sq=j11 * j11,
        exact_j01_sq=j01 * j01,
    )
