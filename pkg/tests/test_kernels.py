"""Compiled and pure-Python kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from abdisk import kernels
from abdisk.kernels import backend_module
from abdisk.mesh import build_half_disk_mesh

py = backend_module("python")
try:
    cy = backend_module("cython")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def mesh_arrays():
    mesh = build_half_disk_mesh(0.4, 3, 3)
    return np.ascontiguousarray(mesh.vertices), np.ascontiguousarray(mesh.triangles, dtype=np.int64)


def test_backend_is_reported():
    assert kernels.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        backend_module("fortran")


@needs_ext
@pytest.mark.parametrize("weighted", [False, True])
def test_element_matrices_agree(weighted):
    pts, tris = mesh_arrays()
    wq = np.random.default_rng(0).uniform(0.5, 2.0, (len(tris), 3)) if weighted else None
    a = py.element_matrices(pts, tris, wq)
    b = cy.element_matrices(pts, tris, wq)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-14, atol=1e-16)


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_ext)], ids=["python", "cython"])
def test_inverted_triangle_rejected(mod):
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        mod.element_matrices(pts, np.array([[0, 1, 2]], dtype=np.int64))


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_ext)], ids=["python", "cython"])
@pytest.mark.parametrize("n", [1, 2, 3, 17, 60])
def test_tridiagonal_eigensolver(mod, n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n))
    a = a + a.T
    d, e, q = mod.tridiagonalize(a, True)
    t = np.diag(d) + np.diag(e[1:], 1) + np.diag(e[1:], -1)
    assert np.allclose(q @ t @ q.T, a, atol=1e-12)
    w, z = mod.tql2(d, e, q)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-11)
    assert np.allclose(z.T @ z, np.eye(n), atol=1e-12)
    assert np.allclose(a @ z, z * w, atol=1e-10)
    w2, none = mod.tql2(*mod.tridiagonalize(a, False)[:2])
    assert none is None and np.allclose(w2, w, atol=1e-12)


@needs_ext
def test_backends_agree_on_eigenvalues():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((80, 80))
    a = a @ a.T
    wp = py.tql2(*py.tridiagonalize(a, False)[:2])[0]
    wc = cy.tql2(*cy.tridiagonalize(a, False)[:2])[0]
    assert np.allclose(wp, wc, rtol=1e-12)


def test_environment_forces_fallback():
    env = dict(os.environ, ABDISK_PURE_PYTHON="1")
    code = ("import abdisk; from abdisk.spectra import solve_pencil; from abdisk.fem import DISK_TAGS; "
            "from abdisk.mesh import build_unit_square_mesh; "
            "print(abdisk.KERNEL_BACKEND, solve_pencil(build_unit_square_mesh(8), DISK_TAGS, 1).values[0])")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == pytest.approx(2 * np.pi ** 2, rel=0.05)
