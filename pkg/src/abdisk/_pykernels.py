"""Pure-Python/numpy versions of the hot kernels.  Same signatures and results
as the compiled ``_ckernels`` module; used when the extension is unavailable
or when ``ABDISK_PURE_PYTHON`` is set."""
import math

import numpy as np

# 3-point degree-2 Gauss rule on the reference triangle, barycentric coordinates
GAUSS_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


def element_matrices(points, tris, wq=None):
    """Per-triangle P1 stiffness and mass matrices.

    ``wq`` holds weight samples at the three Gauss points of each triangle
    (shape (nt, 3)); ``None`` means unit weight and the exact mass matrix.
    """
    p = points[tris]  # (nt, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(area <= 0):
        bad = int(np.argmin(area))
        raise ValueError(f"degenerate or inverted triangle {bad} (signed area {area[bad]:.3e})")
    # gradients of barycentric coordinates: rotate the opposite edge
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2 * area)[:, None, None]
    ke = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    if wq is None:
        me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    else:
        wq = np.asarray(wq, dtype=float)
        me = (area / 3.0)[:, None, None] * np.einsum("tq,qi,qj->tij", wq, GAUSS_BARY, GAUSS_BARY)
    return ke, me, area


def tridiagonalize(a, want_q=True):
    """Householder reduction of a symmetric matrix: a = q @ T @ q.T."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    vs = []
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = math.sqrt(float(x @ x))
        if alpha == 0.0:
            vs.append(None)
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = float(v @ v)
        if vnorm2 == 0.0:
            vs.append(None)
            continue
        beta = 2.0 / vnorm2
        sub = a[k + 1:, k + 1:]
        pvec = beta * (sub @ v)
        w = pvec - (0.5 * beta * float(pvec @ v)) * v
        sub -= np.outer(v, w)
        sub -= np.outer(w, v)
        a[k + 1, k] = a[k, k + 1] = alpha
        a[k + 2:, k] = 0.0
        a[k, k + 2:] = 0.0
        vs.append((v, beta))
    d = np.diag(a).copy()
    e = np.zeros(n)
    e[1:] = np.diag(a, -1)
    q = None
    if want_q:
        q = np.eye(n)
        for k in range(n - 3, -1, -1):
            if vs[k] is None:
                continue
            v, beta = vs[k]
            block = q[k + 1:, k + 1:]
            block -= beta * np.outer(v, v @ block)
    return d, e, q


def tql2(d, e, z=None, max_iter=60):
    """Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.

    ``d`` diagonal, ``e[1:]`` subdiagonal (``e[0]`` unused).  If ``z`` is given
    its columns are rotated along, yielding eigenvectors of the original matrix
    when ``z`` is the Householder ``q``.  Returns eigenvalues ascending.
    """
    d = np.array(d, dtype=float, copy=True)
    n = d.size
    e = np.append(np.array(e, dtype=float)[1:], 0.0)
    zt = None if z is None else np.array(z, dtype=float, copy=True).T.copy()
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.2e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise RuntimeError("tridiagonal QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if zt is not None:
                    zi1 = zt[i + 1].copy()
                    zt[i + 1] = s * zt[i] + c * zi1
                    zt[i] = c * zt[i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    w = d[order]
    if zt is None:
        return w, None
    return w, zt[order].T.copy()
