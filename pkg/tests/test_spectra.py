import math

import numpy as np
import pytest

from abdisk import specfun, spectra
from abdisk.eigensolve import dense_solve
from abdisk.fem import DN_TAGS, assemble, build_dofmap
from abdisk.mesh import build_full_disk_mesh, build_half_disk_mesh, resplit
from abdisk.spectra import MixedProblemSpec

PI2 = math.pi ** 2
Z01 = specfun.bessel_zeros(specfun.BesselOrder(0), 1)[0] ** 2
Z11 = specfun.bessel_zeros(specfun.BesselOrder(2), 1)[0] ** 2
Z32 = specfun.bessel_zeros(specfun.BesselOrder(3), 1)[0] ** 2


def mixed(t, variant, k):
    return spectra.mixed_spectrum(MixedProblemSpec(t, variant, k))


# -- Richardson ---------------------------------------------------------------------------

def test_richardson_exact_on_quadratic_error():
    h = np.array([0.1, 0.05, 0.025])
    lv = (3.0 + 2.0 * h ** 2 + 0.0 * h)[:, None]
    ex = spectra.richardson(lv)
    assert ex.values[0] == pytest.approx(3.0, abs=1e-13)
    assert ex.residual[0] <= 1e-13
    assert ex.order[0] == pytest.approx(2.0)
    assert ex.ok[0]


def test_richardson_rejects_bad_order_and_nonmonotone():
    lv = np.array([[3.0, 5.0], [2.0, 4.5], [1.9, 4.6]])
    ex = spectra.richardson(lv)
    assert not ex.ok.any()
    assert ex.values == pytest.approx(lv[-1])
    assert ex.residual == pytest.approx(np.abs(lv[-1] - lv[-2]))


def test_richardson_two_levels():
    ex = spectra.richardson([[1.04], [1.01]])
    assert ex.values[0] == pytest.approx(1.0)
    assert np.isnan(ex.order[0])
    with pytest.raises(ValueError):
        spectra.richardson([[1.0]])


def test_spec_validation():
    with pytest.raises(ValueError):
        MixedProblemSpec(0.0, "XY")
    with pytest.raises(ValueError):
        MixedProblemSpec(1.5, "DN")
    with pytest.raises(ValueError):
        MixedProblemSpec(0.0, "DN", 9)
    with pytest.raises(ValueError):
        MixedProblemSpec(0.0, "DN", 1, ((4, 6),))


# -- mixed problems ----------------------------------------------------------------------------

def test_t1_pure_dirichlet():
    seq = mixed(1.0, "DN", 1)
    assert seq.extrapolated[0] == pytest.approx(Z11, rel=0.01)
    assert seq.eigenvectors.shape == (seq.n_free[-1], 1)


def test_t1_neumann_diameter():
    seq = mixed(1.0, "ND", 2)
    assert seq.extrapolated[0] == pytest.approx(Z01, rel=0.01)
    assert seq.extrapolated[1] == pytest.approx(Z11, rel=0.01)


def test_centre_nd_first_eigenvalue():
    seq = mixed(0.0, "ND", 1)
    assert seq.extrapolated[0] == pytest.approx(PI2, rel=0.01)
    assert seq.solver_residual <= 1e-8
    assert np.all(np.diff(seq.per_level[:, 0]) < 0)  # Galerkin values decrease under refinement


# -- merged spectrum ------------------------------------------------------------------------------

def test_centre_spectrum_is_double():
    ab = spectra.ab_spectrum(0.0, 4)
    assert ab.values[:2] == pytest.approx([PI2, PI2], rel=0.01)
    assert ab.values[2:] == pytest.approx([Z32, Z32], rel=0.01)
    assert all(ab.is_double(j) for j in range(4))
    assert sorted(ab.provenance[:2]) == ["DN", "ND"]


def test_centre_dn_nd_coincide():
    ab = spectra.ab_spectrum(0.0, 4)
    diff = np.abs(ab.dn.extrapolated - ab.nd.extrapolated)
    assert np.all(diff <= 2 * np.maximum(ab.dn.residual, ab.nd.residual))


def test_off_centre_tags_and_gap():
    ab = spectra.ab_spectrum(0.5, 2)
    assert ab.provenance == ["ND", "DN"]
    assert not ab.is_double(0)
    assert ab.values[1] - ab.values[0] > 3 * (ab.residual[0] + ab.residual[1])


def test_ab_spectrum_rejects_endpoint():
    with pytest.raises(ValueError):
        spectra.ab_spectrum(1.0, 2)


def test_branch_ordering_at_centre():
    nd, dn = mixed(0.0, "ND", 2), mixed(0.0, "DN", 2)
    tol = 10 * max(nd.residual.max(), dn.residual.max())
    assert abs(nd.extrapolated[1] - dn.extrapolated[1]) <= tol
    assert abs(nd.extrapolated[0] - dn.extrapolated[0]) <= tol
    assert dn.extrapolated[1] > dn.extrapolated[0] + tol


def test_mirror_identity():
    for t in np.round(np.arange(0.0, 0.95, 0.1), 10):
        a, b = spectra.mirrored_pair(float(t), "DN", 4, 4, 2)
        assert np.abs(a - b).max() <= 1e-10 * a.max()


def test_discrete_domain_monotonicity():
    mesh = build_half_disk_mesh(0.0, 3, 0)
    xs = np.unique(mesh.vertices[mesh.vertices[:, 1] == 0, 0])
    xs = xs[(xs > -1) & (xs < 1)]
    prev = None
    for t in xs:
        m = resplit(mesh, float(t))
        vals = dense_solve(*assemble(m, build_dofmap(m, DN_TAGS)), vectors=False).values[:3]
        if prev is not None:
            assert np.all(vals >= prev)
        prev = vals


# -- double cover ------------------------------------------------------------------------------------

def test_double_cover_sectors():
    dc = spectra.double_cover_spectrum(8)
    assert dc.antiperiodic[:2] == pytest.approx([PI2, PI2], rel=0.01)
    assert dc.antiperiodic[2:4] == pytest.approx([Z32, Z32], rel=0.01)
    assert dc.periodic[:3] == pytest.approx([Z01, Z11, Z11], rel=0.01)
    assert np.all(np.abs(np.abs(dc.parity) - 1) <= 0.05)


def test_union_property_at_centre():
    dc = spectra.double_cover_spectrum(8)
    ab = spectra.ab_spectrum(0.0, 4)
    tol = dc.residual[dc.parity < 0][:4] + ab.residual + 1e-3 * ab.values
    assert np.all(np.abs(dc.antiperiodic[:4] - ab.values) <= tol)


def test_parity_projection_of_mixed_cluster():
    # P swaps 0<->1 and 2<->3
    perm = np.array([1, 0, 3, 2])
    even = np.array([1.0, 1.0, 0.0, 0.0]) / math.sqrt(2)
    odd = np.array([0.0, 0.0, 1.0, -1.0]) / math.sqrt(2)
    c, s = math.cos(0.6), math.sin(0.6)
    U = np.column_stack([c * even + s * odd, -s * even + c * odd])
    scores, rotated, projected = spectra.classify_parity(np.array([2.0, 2.0]), U, np.eye(4), perm)
    assert projected == 1
    assert sorted(np.round(scores, 12)) == [-1.0, 1.0]
    assert np.allclose(rotated.T @ rotated, np.eye(2))


def test_parity_needs_pairing():
    mesh = build_full_disk_mesh(2, symmetric=False)
    with pytest.raises(spectra.SpectrumError):
        spectra._dof_permutation(mesh, build_dofmap(mesh, {0}))


# -- slopes and tip coefficients ----------------------------------------------------------------------

def test_fd_slopes():
    nd = spectra.branch_slope_at_origin("ND", 0.02)
    dn = spectra.branch_slope_at_origin("DN", 0.02)
    assert nd.slope == pytest.approx(-PI2, rel=0.10)
    assert dn.slope == pytest.approx(PI2, rel=0.10)
    assert abs(nd.slope + dn.slope) <= 2 * max(nd.fd_error, dn.fd_error, 1e-300)


def test_fd_step_range():
    with pytest.raises(ValueError):
        spectra.branch_slope_at_origin("ND", 0.001)
    with pytest.raises(ValueError):
        spectra.branch_slope_at_origin("XX", 0.02)


def test_synthetic_half_mode_fit():
    rng = np.random.default_rng(0)
    r = rng.uniform(0.01, 0.04, 400)
    th = rng.uniform(0, math.pi, 400)
    pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    fit = spectra.fit_half_mode(pts, np.sqrt(r) * np.sin(th / 2), (0.0, 0.0), "ND", (0.01, 0.04))
    assert fit.coefficient == pytest.approx(1.0, abs=1e-3)
    assert fit.kind == "B" and fit.fit_rms <= 1e-12
    with pytest.raises(spectra.TipFitError):
        spectra.fit_half_mode(pts, np.sqrt(r) * np.sin(th / 2), (0.0, 0.0), "DN", (0.01, 0.04))
    with pytest.raises(spectra.TipFitError):
        spectra.fit_half_mode(pts, r, (0.0, 0.0), "ND", (0.5, 0.6))


@pytest.mark.parametrize("variant", ["ND", "DN"])
def test_tip_coefficients_at_centre(variant):
    fit = spectra.fit_tip_coefficient(mixed(0.0, variant, 1))
    assert fit.coefficient ** 2 == pytest.approx(2 * math.pi, rel=0.10)
    assert fit.fit_rms <= 0.05 * fit.coefficient
    assert fit.full_disk_normalized


def test_feynman_hellmann_formula():
    assert spectra.feynman_hellmann_slope(0.0, math.sqrt(2 * math.pi)) == pytest.approx(-PI2)
    assert spectra.feynman_hellmann_slope(1.3, 1.3) == 0.0
    assert spectra.feynman_hellmann_slope(5.0, 2.0, j=1) == pytest.approx(-2 * math.pi)
    with pytest.raises(ValueError):
        spectra.feynman_hellmann_slope(1.0, 1.0, j=3)


def test_feynman_hellmann_matches_fd():
    B = spectra.fit_tip_coefficient(mixed(0.0, "ND", 1)).coefficient
    A = spectra.fit_tip_coefficient(mixed(0.0, "DN", 1)).coefficient
    nd = spectra.branch_slope_at_origin("ND", 0.02)
    dn = spectra.branch_slope_at_origin("DN", 0.02)
    assert spectra.feynman_hellmann_slope(A, B, j=1) == pytest.approx(nd.slope, rel=0.15)
    assert spectra.feynman_hellmann_slope(A, B, j=2) == pytest.approx(dn.slope, rel=0.15)


# -- sweep and endpoint -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def default_sweep():
    return spectra.sweep(np.round(np.arange(10) * 0.1, 10), 2)


def test_sweep_verdicts(default_sweep):
    sw = default_sweep
    v = sw.verdict()
    assert v["monotone_nd"] and v["monotone_dn"] and v["simple_for_positive_t"] and v["tags_consistent"]
    assert v["slope_nd_at_0"] == pytest.approx(-PI2, rel=0.10)
    assert v["slope_dn_at_0"] == pytest.approx(PI2, rel=0.10)


def test_sweep_values(default_sweep):
    sw = default_sweep
    assert sw.lam1_nd[0] == pytest.approx(PI2, rel=0.01)
    assert Z01 < sw.lam1_nd[-1] < PI2
    assert abs(sw.gap[0]) <= spectra.double_threshold(sw.res1_nd[0], sw.res1_dn[0], sw.lam1_nd[0])
    i5 = int(np.argmin(np.abs(sw.t - 0.5)))
    assert sw.gap[i5] > 3 * (sw.res1_nd[i5] + sw.res1_dn[i5])
    assert np.array_equal(sw.lam1, np.minimum(sw.lam1_nd, sw.lam1_dn))
    rows = list(sw.rows())
    assert len(rows) == 10 and tuple(rows[0]) == spectra.SWEEP_COLUMNS


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        spectra.sweep([0.0, 0.97], 2)
    with pytest.raises(ValueError):
        spectra.sweep([0.2, 0.1], 2)
    with pytest.raises(ValueError):
        spectra.sweep([0.1], 1)


def test_sweep_parallel_matches_serial():
    levels = ((3, 2), (4, 4), (5, 6))
    serial = spectra.sweep([0.1, 0.4], 2, levels, workers=1, with_slopes=False)
    parallel = spectra.sweep([0.1, 0.4], 2, levels, workers=2, with_slopes=False)
    assert serial.lam1_nd.tobytes() == parallel.lam1_nd.tobytes()
    assert serial.lam1_dn.tobytes() == parallel.lam1_dn.tobytes()


def test_t1_endpoint():
    rep = spectra.verify_t1_endpoint()
    assert rep.lam1_dn == pytest.approx(Z11, rel=0.01)
    assert rep.lam2_nd == pytest.approx(Z11, rel=0.01)
    assert rep.dn_nd_rel_diff <= 0.005
    assert rep.lam1_nd == pytest.approx(Z01, rel=0.01)
