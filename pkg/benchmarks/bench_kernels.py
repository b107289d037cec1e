"""Compiled vs pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Times element assembly on half-disk meshes and the dense eigen-decomposition
(tridiagonalisation + QL) on random symmetric matrices, and checks that both
backends agree.
"""
import argparse
import json
import time

import numpy as np

from abdisk.kernels import backend_module
from abdisk.mesh import build_half_disk_mesh


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def bench_assembly(py, cy, repeat):
    rows = []
    for level, grade in ((4, 6), (5, 8), (6, 10)):
        mesh = build_half_disk_mesh(0.0, level, grade)
        pts = np.ascontiguousarray(mesh.vertices)
        tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
        t_py, (ke_p, me_p, _) = best_of(lambda: py.element_matrices(pts, tris), repeat)
        t_cy, (ke_c, me_c, _) = best_of(lambda: cy.element_matrices(pts, tris), repeat)
        diff = max(np.abs(ke_p - ke_c).max(), np.abs(me_p - me_c).max())
        rows.append({"kernel": "element_matrices", "size": len(tris), "python_s": t_py, "cython_s": t_cy, "max_diff": float(diff)})
    return rows


def bench_eigen(py, cy, repeat):
    rows = []
    rng = np.random.default_rng(1)
    for n in (100, 200, 400):
        a = rng.standard_normal((n, n))
        a = a + a.T

        def run(mod):
            d, e, q = mod.tridiagonalize(a, True)
            return mod.tql2(d, e, q)

        t_py, (w_p, _) = best_of(lambda: run(py), repeat)
        t_cy, (w_c, _) = best_of(lambda: run(cy), repeat)
        diff = np.abs(w_p - w_c).max() / np.abs(w_p).max()
        rows.append({"kernel": "tridiagonalize+tql2", "size": n, "python_s": t_py, "cython_s": t_cy, "max_diff": float(diff)})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    py, cy = backend_module("python"), backend_module("cython")
    rows = bench_assembly(py, cy, args.repeat) + bench_eigen(py, cy, args.repeat)
    print(f"{'kernel':<22}{'size':>8}{'python [s]':>13}{'cython [s]':>13}{'speedup':>9}{'max diff':>11}")
    for r in rows:
        print(f"{r['kernel']:<22}{r['size']:>8}{r['python_s']:>13.4f}{r['cython_s']:>13.4f}"
              f"{r['python_s'] / r['cython_s']:>9.1f}{r['max_diff']:>11.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
