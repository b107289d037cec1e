"""Acceptance criteria: each check computes its measurement, compares it
with a pinned tolerance and returns a ``Record``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import specfun, spectra
from .eigensolve import DEFAULT_SEED, DENSE_LIMIT, dense_solve, solve_lowest
from .fem import assemble

PI2 = math.pi ** 2


@dataclass
class Record:
    number: int
    name: str
    measured: str
    tolerance: str
    passed: bool
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.measured} (tolerance {self.tolerance}, {self.seconds:.1f}s)"


@dataclass
class Settings:
    levels: tuple = spectra.DEFAULT_LEVELS
    disk_levels: tuple = spectra.DEFAULT_DISK_LEVELS
    square_cells: tuple = (8, 16, 32)
    sweep_grid: tuple = tuple(round(0.1 * i, 10) for i in range(10))
    widen: float = 1.0  # multiplies every relative tolerance
    label: str = "full"


FULL = Settings()
COARSE = Settings(
    levels=spectra.COARSE_LEVELS,
    disk_levels=(2, 3, 4),
    square_cells=(4, 8, 16),
    # the coarsest level cannot place a tip at 0.9
    sweep_grid=tuple(round(0.1 * i, 10) for i in range(9)),
    widen=2.0,
    label="coarse",
)


@dataclass
class Context:
    settings: Settings = field(default_factory=Settings)
    # pencils touched by the criteria, audited by criterion 10
    used: set = field(default_factory=set)
    cache: dict = field(default_factory=dict)

    def tol(self, rel: float) -> float:
        return rel * self.settings.widen

    def note_mixed(self, t, variant, k):
        for L, g in self.settings.levels:
            self.used.add(("half", float(t), variant, L, g, k))

    def mixed(self, t, variant, k):
        self.note_mixed(t, variant, k)
        return spectra.mixed_spectrum(spectra.MixedProblemSpec(t, variant, k, self.settings.levels))


def _rel(a, b):
    return abs(a - b) / abs(b)


def _fmt(values):
    return "[" + ", ".join(f"{v:.6g}" for v in values) + "]"


def _z(twice_order, k=1):
    return specfun.bessel_zeros(specfun.BesselOrder(twice_order), k)[k - 1]


# -- criteria ---------------------------------------------------------------------------------

def c1_bessel_zeros(ctx: Context) -> Record:
    half = specfun.bessel_zeros(specfun.BesselOrder(1), 5)
    err_half = max(abs(z - (k + 1) * math.pi) for k, z in enumerate(half.zeros))
    err_32 = abs(_z(3) - 4.493409457909064)
    err_0 = abs(_z(0) - 2.404825557695773)
    ok = err_half <= 1e-12 and err_32 <= 1e-9 and err_0 <= 1e-9
    return Record(1, "Bessel zeros", f"|z(1/2,k)-k pi|max={err_half:.1e}, z(3/2,1) err={err_32:.1e}, z(0,1) err={err_0:.1e}",
                  "1e-12 / 1e-9 / 1e-9", ok)


def c2_interlacing(ctx: Context) -> Record:
    z = {n: _z(n, k) for n, k in ((1, 1), (3, 1), (5, 1), (7, 1))}
    z12 = _z(1, 2)
    chain = [z[1], z[3], z[5], z12, z[7]]
    ok = all(a < b for a, b in zip(chain, chain[1:])) and specfun.interlacing_check(7, 3).passed
    return Record(2, "interlacing chain", _fmt(chain), "strictly increasing", ok)


def c3_fem_validation(ctx: Context) -> Record:
    s = ctx.settings
    disk = spectra.plain_disk_spectrum(1, s.disk_levels)
    square = spectra.unit_square_spectrum(1, s.square_cells)
    for L in s.disk_levels:
        ctx.used.add(("disk", L, False, 1))
    for n in s.square_cells:
        ctx.used.add(("square", n, 1))
    e_disk = _rel(disk.values[0], _z(0) ** 2)
    e_sq = _rel(square.values[0], 2 * PI2)
    tol = ctx.tol(0.005)
    return Record(3, "FEM validation", f"disk rel err {e_disk:.2e}, square rel err {e_sq:.2e}",
                  f"{tol:.3g}", e_disk <= tol and e_sq <= tol)


def _ab0(ctx):
    if "ab0" not in ctx.cache:
        ctx.note_mixed(0.0, "DN", 4)
        ctx.note_mixed(0.0, "ND", 4)
        ctx.cache["ab0"] = spectra.ab_spectrum(0.0, 4, ctx.settings.levels)
    return ctx.cache["ab0"]


def c4_double_at_center(ctx: Context) -> Record:
    ab = _ab0(ctx)
    v = ab.values
    z32 = _z(3) ** 2
    tol = ctx.tol(0.01)
    errs = [_rel(v[0], PI2), _rel(v[1], PI2), _rel(v[2], z32), _rel(v[3], z32)]
    gap = abs(v[1] - v[0])
    thr = spectra.double_threshold(ab.residual[0], ab.residual[1], v[0])
    ok = max(errs) <= tol and gap <= thr and ab.is_double(0)
    return Record(4, "a=0 double eigenvalue", f"values {_fmt(v)}, max rel err {max(errs):.2e}, pair gap {gap:.2e} vs {thr:.2e}",
                  f"{tol:.3g}", ok)


def c5_double_cover(ctx: Context) -> Record:
    s = ctx.settings
    dc = spectra.double_cover_spectrum(8, s.disk_levels)
    for L in s.disk_levels:
        ctx.used.add(("disk", L, True, 8))
    ab = _ab0(ctx).values
    anti, per = dc.antiperiodic, dc.periodic
    tol = ctx.tol(0.01)
    plain = [_z(0) ** 2, _z(2) ** 2, _z(2) ** 2, _z(4) ** 2]
    ok = len(anti) >= 4 and len(per) >= 4
    e_anti = max(_rel(a, b) for a, b in zip(anti[:4], ab)) if ok else math.inf
    e_per = max(_rel(a, b) for a, b in zip(per[:4], plain)) if ok else math.inf
    parity = float(np.max(1 - np.abs(dc.parity)))
    ok = ok and e_anti <= tol and e_per <= tol and parity <= 0.05
    return Record(5, "double-cover equivalence",
                  f"antiperiodic {_fmt(anti[:4])} err {e_anti:.2e}, periodic {_fmt(per[:4])} err {e_per:.2e}, max(1-|s|)={parity:.1e}",
                  f"{tol:.3g}, parity 0.05", ok)


def _slopes(ctx):
    if "slopes" not in ctx.cache:
        h = spectra.FD_STEP
        for t in (h, h / 2):
            ctx.note_mixed(t, "ND", 1)
            ctx.note_mixed(t, "DN", 1)
        nd = spectra.branch_slope_at_origin("ND", h, ctx.settings.levels)
        dn = spectra.branch_slope_at_origin("DN", h, ctx.settings.levels)
        ctx.cache["slopes"] = (nd, dn)
    return ctx.cache["slopes"]


def c6_branch_slopes(ctx: Context) -> Record:
    nd, dn = _slopes(ctx)
    tol = ctx.tol(0.10)
    e_nd = _rel(nd.slope, -PI2)
    e_dn = _rel(dn.slope, PI2)
    total = abs(nd.slope + dn.slope)
    bound = 2 * max(nd.fd_error, dn.fd_error)
    ok = e_nd <= tol and e_dn <= tol and total <= bound
    return Record(6, "branch slopes", f"ND {nd.slope:.5g} (err {e_nd:.2e}), DN {dn.slope:.5g} (err {e_dn:.2e}), sum {total:.1e} vs {bound:.1e}",
                  f"{tol:.3g}", ok)


def c7_feynman_hellmann(ctx: Context) -> Record:
    nd, dn = _slopes(ctx)
    fits = {}
    for variant in ("ND", "DN"):
        seq = ctx.mixed(0.0, variant, 1)
        try:
            fits[variant] = spectra.fit_tip_coefficient(seq)
        except spectra.TipFitError as exc:
            return Record(7, "Feynman-Hellmann consistency", f"{variant} fit rejected: {exc}", "fit", False)
    B = fits["ND"].coefficient
    A = fits["DN"].coefficient
    ratio = B * B / (2 * math.pi)
    fh1 = spectra.feynman_hellmann_slope(0.0, B)
    fh2 = spectra.feynman_hellmann_slope(A, 0.0)
    e1 = _rel(fh1, nd.slope)
    e2 = _rel(fh2, dn.slope)
    band = ctx.tol(0.10)
    tol = ctx.tol(0.15)
    ok = abs(ratio - 1) <= band and e1 <= tol and e2 <= tol
    return Record(7, "Feynman-Hellmann consistency",
                  f"B^2/2pi={ratio:.4f}, A^2/2pi={A * A / (2 * math.pi):.4f}, FH {fh1:.4g}/{fh2:.4g} vs FD (err {e1:.2e}/{e2:.2e})",
                  f"B^2 band {band:.3g}, slope {tol:.3g}", ok)


def c8_sweep(ctx: Context) -> Record:
    grid = ctx.settings.sweep_grid
    for t in grid:
        ctx.note_mixed(t, "ND", 2)
        ctx.note_mixed(t, "DN", 2)
    sw = spectra.sweep(grid, 2, ctx.settings.levels, with_slopes=False)
    ctx.cache["sweep"] = sw
    positive = sw.t > 0
    combined = sw.res1_nd + sw.res1_dn
    margin = float(np.min(sw.gap[positive] / (3 * combined[positive])))
    tags = bool(np.all(sw.tag1_ok) and np.all(sw.tag2_ok))
    ok = sw.monotone_nd and sw.monotone_dn and sw.simple_for_positive_t and tags
    return Record(8, "sweep", f"monotone ND={sw.monotone_nd} DN={sw.monotone_dn}, min gap/(3 res)={margin:.3g}, tags={tags}",
                  "residual slack, gap > 3x residual", ok)


def c9_endpoint(ctx: Context) -> Record:
    ctx.note_mixed(1.0, "DN", 1)
    ctx.note_mixed(1.0, "ND", 2)
    rep = spectra.verify_t1_endpoint(ctx.settings.levels)
    j11 = rep.exact_j11_sq
    pair = rep.dn_nd_rel_diff
    e_dn = rep.rel_err(rep.lam1_dn, j11)
    e_nd2 = rep.rel_err(rep.lam2_nd, j11)
    e_nd1 = rep.rel_err(rep.lam1_nd, rep.exact_j01_sq)
    t_pair, t_val = ctx.tol(0.005), ctx.tol(0.01)
    ok = pair <= t_pair and max(e_dn, e_nd2, e_nd1) <= t_val
    return Record(9, "endpoint t=1", f"DN1 {rep.lam1_dn:.6g}, ND2 {rep.lam2_nd:.6g}, ND1 {rep.lam1_nd:.6g}, pair diff {pair:.2e}, max err {max(e_dn, e_nd2, e_nd1):.2e}",
                  f"{t_pair:.3g} / {t_val:.3g}", ok)


def _level_solve(key):
    kind = key[0]
    if kind == "half":
        _, t, variant, L, g, k = key
        return spectra._mixed_level(t, variant, L, g, k, DEFAULT_SEED)
    if kind == "disk":
        _, L, weighted, k = key
        return spectra._disk_level(L, weighted, k, DEFAULT_SEED)
    _, n, k = key
    return spectra._square_level(n, k, DEFAULT_SEED)


def _weight_of(key):
    from .fem import double_cover_weight
    return double_cover_weight if key[0] == "disk" and key[2] else None


def c10_solver_hygiene(ctx: Context) -> Record:
    if not ctx.used:
        c3_fem_validation(ctx)
    worst = 0.0
    dense_err = 0.0
    n_dense = 0
    seen = {}
    for key in sorted(ctx.used, key=repr):
        sol = _level_solve(key)
        worst = max(worst, float(sol.basis.residuals.max()))
        if sol.dofmap.n_free > DENSE_LIMIT:
            continue
        # the pencil does not depend on k; one dense solve per mesh
        pencil = key[:-1]
        if pencil not in seen:
            K, M = assemble(sol.mesh, sol.dofmap, _weight_of(key))
            seen[pencil] = dense_solve(K, M, vectors=False).values
            n_dense += 1
        ref = seen[pencil][: len(sol.values)]
        dense_err = max(dense_err, float(np.max(np.abs(sol.values - ref) / np.abs(ref))))
    # bitwise reproducibility: two fresh solves of one pencil
    mesh_key = ("half", 0.0, "ND", *ctx.settings.levels[1], 2)
    sol = _level_solve(mesh_key)
    K, M = assemble(sol.mesh, sol.dofmap)
    a = solve_lowest(K, M, 2)
    b = solve_lowest(K, M, 2)
    bitwise = (a.values.tobytes() == b.values.tobytes() and a.vectors.tobytes() == b.vectors.tobytes()
               and a.values.tobytes() == sol.values.tobytes())
    ok = worst <= 1e-8 and dense_err <= 1e-8 and bitwise
    return Record(10, "solver hygiene",
                  f"max residual {worst:.2e} over {len(ctx.used)} solves, dense agreement {dense_err:.1e} on {n_dense} meshes, bitwise={bitwise}",
                  "1e-8 / 1e-8 / identical", ok)


CRITERIA = {
    1: c1_bessel_zeros,
    2: c2_interlacing,
    3: c3_fem_validation,
    4: c4_double_at_center,
    5: c5_double_cover,
    6: c6_branch_slopes,
    7: c7_feynman_hellmann,
    8: c8_sweep,
    9: c9_endpoint,
    10: c10_solver_hygiene,
}

SUITES = {
    "specfun": (1, 2),
    "fem": (3, 10),
    "spectra": (4, 5, 6, 7, 8, 9),
    "all": tuple(range(1, 11)),
}


def run_criterion(number: int, ctx: Context) -> Record:
    start = time.perf_counter()
    try:
        rec = CRITERIA[number](ctx)
    except Exception as exc:  # a crash is a failed criterion, reported as such
        rec = Record(number, CRITERIA[number].__name__, f"error: {type(exc).__name__}: {exc}", "-", False)
    rec.seconds = time.perf_counter() - start
    return rec


def run_suite(suite: str = "all", settings: Settings | None = None, report=None) -> list[Record]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    ctx = Context(settings or FULL)
    out = []
    for number in SUITES[suite]:
        rec = run_criterion(number, ctx)
        out.append(rec)
        if report is not None:
            report(rec)
    return out
