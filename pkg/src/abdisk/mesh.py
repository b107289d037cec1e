"""Triangulations of the upper half-disk (diameter split at (t, 0)) and of the
full unit disk.

Both are built from a structured polar quadrant that is mirrored, so the
half-disk mesh is exactly symmetric under x -> -x and the full-disk mesh under
y -> -y and under the point reflection p -> -p.  When t != 0 the ring radii
are stretched piecewise-uniformly so that |t| is a ring radius and (t, 0) is a
vertex without moving any node off its ring; a tip closer to the centre than
half a ring spacing replaces the centre vertex instead.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

GRADING_RADIUS = 0.25


class BoundaryTag(enum.IntEnum):
    ARC = 0
    DIAM_LEFT = 1
    DIAM_RIGHT = 2


class MeshError(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    boundary_edges: np.ndarray  # (ne, 2)
    boundary_tags: np.ndarray  # (ne,) BoundaryTag values
    split_point: float | None = None
    symmetry_pairing: np.ndarray | None = None
    tip: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def vertices_with_tags(self, tags) -> np.ndarray:
        tags = {BoundaryTag(t) for t in tags}
        mask = np.isin(self.boundary_tags, [int(t) for t in tags])
        return np.unique(self.boundary_edges[mask])

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def tip_size(self) -> float:
        """Longest edge incident to the tip vertex."""
        if self.tip is None:
            raise MeshError("mesh has no tip vertex")
        tris = self.triangles[np.any(self.triangles == self.tip, axis=1)]
        others = np.unique(tris[tris != self.tip])
        return float(np.max(np.linalg.norm(self.vertices[others] - self.vertices[self.tip], axis=1)))


# -- structured polar background ---------------------------------------------------

def _ring_radii(n_rings: int, split: float) -> np.ndarray:
    if split <= 0.0 or split >= 1.0:
        return np.arange(n_rings + 1) / n_rings
    i_split = min(max(int(round(split * n_rings)), 1), n_rings - 1)
    inner = split * np.arange(i_split + 1) / i_split
    outer = split + (1.0 - split) * np.arange(1, n_rings - i_split + 1) / (n_rings - i_split)
    radii = np.concatenate([inner, outer])
    radii[i_split] = split
    radii[-1] = 1.0
    return radii


def _quadrant_counts(radii: np.ndarray) -> list[int]:
    counts = [0]
    for i in range(1, len(radii)):
        spacing = radii[i] - radii[i - 1]
        if i + 1 < len(radii):
            spacing = 0.5 * (spacing + radii[i + 1] - radii[i])
        counts.append(max(1, int(round(0.5 * math.pi * radii[i] / spacing))))
    return counts


class _Polar:
    """Vertex bookkeeping for a polar grid addressed by (ring, angular index);
    ring i has 4 * m_i points at angles (pi/2) j / m_i."""

    def __init__(self, radii, counts):
        self.radii = radii
        self.counts = counts
        self.index: dict[tuple[int, int], int] = {}
        self.coords: list[tuple[float, float]] = []

    def point(self, i: int, j: int) -> int:
        if i == 0:
            key = (0, 0)
        else:
            j %= 4 * self.counts[i]
            key = (i, j)
        if key not in self.index:
            self.index[key] = len(self.coords)
            self.coords.append(self._xy(*key))
        return self.index[key]

    def _xy(self, i, j):
        if i == 0:
            return 0.0, 0.0
        m = self.counts[i]
        r = self.radii[i]
        quad, jj = divmod(j, m)
        ang = 0.5 * math.pi * jj / m
        c, s = (r, 0.0) if jj == 0 else (r * math.cos(ang), r * math.sin(ang))
        # rotate by quad * 90 degrees exactly
        for _ in range(quad):
            c, s = -s, c
        return c + 0.0, s + 0.0


def _quadrant_triangles(radii, counts) -> list[tuple[tuple[int, int], ...]]:
    """Triangles of the first quadrant as (ring, j) triples, counterclockwise."""
    tris = []
    n_rings = len(counts) - 1
    m1 = counts[1]
    for j in range(m1):
        tris.append(((0, 0), (1, j), (1, j + 1)))
    for i in range(2, n_rings + 1):
        mi, mo = counts[i - 1], counts[i]
        ri, ro = i - 1, i
        a = b = 0
        while a < mi or b < mo:
            if a == mi:
                adv_outer = True
            elif b == mo:
                adv_outer = False
            else:
                # shorter of the two candidate diagonals
                d_inner = _dist2_polar(radii, ri, a + 1, mi, ro, b, mo)
                d_outer = _dist2_polar(radii, ri, a, mi, ro, b + 1, mo)
                adv_outer = d_outer <= d_inner
            if adv_outer:
                tris.append(((ri, a), (ro, b), (ro, b + 1)))
                b += 1
            else:
                tris.append(((ri, a), (ro, b), (ri, a + 1)))
                a += 1
    return tris


def _dist2_polar(radii, r1, j1, m1, r2, j2, m2):
    a1 = 0.5 * math.pi * j1 / m1
    a2 = 0.5 * math.pi * j2 / m2
    R1, R2 = radii[r1], radii[r2]
    return R1 * R1 + R2 * R2 - 2 * R1 * R2 * math.cos(a1 - a2)


def _polar_mesh(radii, quadrants):
    counts = _quadrant_counts(radii)
    quad_tris = _quadrant_triangles(radii, counts)
    grid = _Polar(radii, counts)
    tris = []
    for q in quadrants:
        for tri in quad_tris:
            idx = []
            for ring, j in tri:
                if ring == 0:
                    idx.append(grid.point(0, 0))
                    continue
                m = counts[ring]
                if q == 0:
                    jj = j
                elif q == 1:  # mirror x -> -x
                    jj = 2 * m - j
                elif q == 2:  # point reflection
                    jj = 2 * m + j
                else:  # mirror y -> -y
                    jj = 4 * m - j
                idx.append(grid.point(ring, jj))
            if q in (1, 3):
                idx = [idx[0], idx[2], idx[1]]
            tris.append(idx)
    vertices = np.array(grid.coords, dtype=float)
    return grid, vertices, np.array(tris, dtype=np.int64), counts


def _half_disk_background(n_rings: int, split_abs: float):
    radii = _ring_radii(n_rings, split_abs)
    grid, vertices, tris, counts = _polar_mesh(radii, quadrants=(0, 1))
    edges = []
    n = n_rings
    m = counts[n]
    for j in range(2 * m):
        edges.append((grid.point(n, j), grid.point(n, j + 1), BoundaryTag.ARC))
    for i in range(1, n + 1):
        # right half of the diameter, then left half
        edges.append((grid.point(i - 1, 0), grid.point(i, 0), None))
        edges.append((grid.point(i, 2 * counts[i]), grid.point(i - 1, 2 * counts[i - 1] if i > 1 else 0), None))
    return grid, radii, vertices, tris, edges


def _tag_diameter(vertices, edges, t):
    out_e, out_t = [], []
    for a, b, tag in edges:
        if tag is None:
            xm = max(vertices[a, 0], vertices[b, 0])
            tag = BoundaryTag.DIAM_LEFT if xm <= t + 1e-14 else BoundaryTag.DIAM_RIGHT
        out_e.append((a, b))
        out_t.append(int(tag))
    return np.array(out_e, dtype=np.int64).reshape(-1, 2), np.array(out_t, dtype=np.int8)


# -- longest-edge bisection -------------------------------------------------------------

class _Refiner:
    """Conforming longest-edge (Rivara) bisection with arc snapping."""

    def __init__(self, mesh: Mesh):
        self.verts = [tuple(v) for v in mesh.vertices]
        self.tris: list[list[int] | None] = [list(t) for t in mesh.triangles]
        self.edge_tris: dict[tuple[int, int], list[int]] = {}
        for tid, tri in enumerate(self.tris):
            for k in range(3):
                self.edge_tris.setdefault(_ekey(tri[k], tri[(k + 1) % 3]), []).append(tid)
        self.btag = {_ekey(a, b): int(tag) for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags)}
        self.border = {_ekey(a, b): (int(a), int(b)) for a, b in mesh.boundary_edges}
        self.midpoints: dict[tuple[int, int], int] = {}

    def _len2(self, a, b):
        (xa, ya), (xb, yb) = self.verts[a], self.verts[b]
        return (xa - xb) ** 2 + (ya - yb) ** 2

    def longest(self, tid) -> tuple[int, int]:
        tri = self.tris[tid]
        best = None
        for k in range(3):
            e = _ekey(tri[k], tri[(k + 1) % 3])
            cand = (self._len2(*e), (-e[0], -e[1]))
            if best is None or cand > best[0]:
                best = (cand, e)
        return best[1]

    def neighbour(self, tid, e):
        for other in self.edge_tris[e]:
            if other != tid:
                return other
        return None

    def _midpoint(self, e):
        a, b = e
        (xa, ya), (xb, yb) = self.verts[a], self.verts[b]
        x, y = 0.5 * (xa + xb), 0.5 * (ya + yb)
        if self.btag.get(e) == BoundaryTag.ARC:
            r = math.hypot(x, y)
            x, y = x / r, y / r
        elif e in self.btag:
            y = 0.0
        self.verts.append((x, y))
        return len(self.verts) - 1

    def _split(self, tid, e, m):
        tri = self.tris[tid]
        k = next(k for k in range(3) if _ekey(tri[k], tri[(k + 1) % 3]) == e)
        a, b, c = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
        self.tris[tid] = None
        for ed in ((a, b), (b, c), (c, a)):
            self.edge_tris[_ekey(*ed)].remove(tid)
        for child in ((a, m, c), (m, b, c)):
            cid = len(self.tris)
            self.tris.append(list(child))
            for k2 in range(3):
                self.edge_tris.setdefault(_ekey(child[k2], child[(k2 + 1) % 3]), []).append(cid)

    def _bisect_edge(self, e):
        owners = list(self.edge_tris[e])
        m = self._midpoint(e)
        for tid in owners:
            self._split(tid, e, m)
        del self.edge_tris[e]
        if e in self.btag:
            tag = self.btag.pop(e)
            a, b = self.border.pop(e)
            for ed in ((a, m), (m, b)):
                self.btag[_ekey(*ed)] = tag
                self.border[_ekey(*ed)] = ed

    def refine(self, tid):
        while self.tris[tid] is not None:
            # walk the longest-edge propagation path to a terminal edge
            cur = tid
            seen = 0
            while True:
                e = self.longest(cur)
                nb = self.neighbour(cur, e)
                if nb is None or self.longest(nb) == e:
                    self._bisect_edge(e)
                    break
                cur = nb
                seen += 1
                if seen > 10000:
                    raise MeshError("longest-edge path did not terminate")

    def to_mesh(self, template: Mesh) -> Mesh:
        alive = [t for t in self.tris if t is not None]
        edges = list(self.border.values())
        tags = [self.btag[_ekey(*e)] for e in edges]
        return Mesh(
            vertices=np.array(self.verts, dtype=float),
            triangles=np.array(alive, dtype=np.int64),
            boundary_edges=np.array(edges, dtype=np.int64),
            boundary_tags=np.array(tags, dtype=np.int8),
            split_point=template.split_point,
            symmetry_pairing=None,
            tip=template.tip,
            meta=dict(template.meta),
        )


def _ekey(a, b):
    a, b = int(a), int(b)
    return (a, b) if a < b else (b, a)


def _triangle_near(p, center, radius):
    """Whether the closed triangle p (3x2) meets the closed disk."""
    cx, cy = center
    # inside test
    d = []
    for k in range(3):
        (x1, y1), (x2, y2) = p[k], p[(k + 1) % 3]
        d.append((x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1))
    if all(v >= 0 for v in d):
        return True
    for k in range(3):
        (x1, y1), (x2, y2) = p[k], p[(k + 1) % 3]
        ex, ey = x2 - x1, y2 - y1
        s = ((cx - x1) * ex + (cy - y1) * ey) / (ex * ex + ey * ey)
        s = min(1.0, max(0.0, s))
        if (x1 + s * ex - cx) ** 2 + (y1 + s * ey - cy) ** 2 <= radius * radius:
            return True
    return False


def grade_toward_tip(mesh: Mesh, rounds: int, r0: float = GRADING_RADIUS) -> Mesh:
    """Pass l bisects every triangle meeting the disk of radius r0 2^-l around
    the tip once (closure bisections included)."""
    if rounds <= 0:
        return mesh
    ref = _Refiner(mesh)
    center = tuple(mesh.vertices[mesh.tip])
    for level in range(rounds):
        radius = r0 * 2.0 ** (-level)
        marked = []
        for tid, tri in enumerate(ref.tris):
            if tri is None:
                continue
            p = [ref.verts[v] for v in tri]
            if _triangle_near(p, center, radius):
                marked.append(tid)
        for tid in marked:
            if ref.tris[tid] is not None:
                ref.refine(tid)
    return ref.to_mesh(mesh)


def mirror_x(mesh: Mesh) -> Mesh:
    """Reflection x -> -x; the two diameter tags swap."""
    verts = mesh.vertices.copy()
    verts[:, 0] = -verts[:, 0] + 0.0
    tris = mesh.triangles[:, [0, 2, 1]].copy()
    tags = mesh.boundary_tags.copy()
    left = tags == BoundaryTag.DIAM_LEFT
    right = tags == BoundaryTag.DIAM_RIGHT
    tags[left] = BoundaryTag.DIAM_RIGHT
    tags[right] = BoundaryTag.DIAM_LEFT
    split = None if mesh.split_point is None else -mesh.split_point + 0.0
    return Mesh(verts, tris, mesh.boundary_edges[:, ::-1].copy(), tags, split, None, mesh.tip, dict(mesh.meta))


# -- public builders ---------------------------------------------------------------------

def build_half_disk_mesh(t: float, base_level: int, grade_rounds: int = 0) -> Mesh:
    """Upper half-disk with (t, 0) a vertex and the diameter tagged DIAM_LEFT
    (x <= t) / DIAM_RIGHT (x >= t), graded toward (t, 0).

    ``t = +-1`` gives the pure-boundary-condition endpoint meshes (no grading).
    Meshes for t < 0 are exact mirror images of those for -t.
    """
    if base_level < 1:
        raise MeshError("base_level must be >= 1")
    if grade_rounds < 0:
        raise MeshError("grade_rounds must be >= 0")
    t = float(t)
    if abs(t) == 1.0:
        return _endpoint_mesh(t, base_level)
    if not abs(t) < 1.0 - 2.0 ** (-base_level):
        raise MeshError(f"tip (t={t}) collides with the arc at base_level={base_level}")
    if t < 0:
        return mirror_x(build_half_disk_mesh(-t, base_level, grade_rounds))
    n_rings = 2 ** base_level
    if t * n_rings < 0.5:
        # tip inside the first ring: shift the centre vertex instead of
        # squeezing a ring of radius t around it
        grid, radii, vertices, tris, edges = _half_disk_background(n_rings, 0.0)
        tip = grid.point(0, 0)
        vertices[tip] = (t, 0.0)
    else:
        grid, radii, vertices, tris, edges = _half_disk_background(n_rings, t)
        tip = grid.point(int(np.searchsorted(radii, t)), 0)
        vertices[tip] = (t, 0.0)
    b_edges, b_tags = _tag_diameter(vertices, edges, t)
    mesh = Mesh(vertices, tris, b_edges, b_tags, split_point=t, tip=tip,
                meta={"kind": "half_disk", "base_level": base_level, "grade_rounds": grade_rounds})
    mesh = grade_toward_tip(mesh, grade_rounds)
    _assert_valid(mesh)
    return mesh


def resplit(mesh: Mesh, t: float) -> Mesh:
    """Same triangulation with the diameter split moved to (t, 0), which must
    already be a vertex of the diameter."""
    diam = mesh.boundary_tags != BoundaryTag.ARC
    on_diam = np.unique(mesh.boundary_edges[diam])
    hit = on_diam[np.abs(mesh.vertices[on_diam, 0] - t) <= 1e-12]
    if len(hit) != 1:
        raise MeshError(f"no diameter vertex at x={t}")
    tags = mesh.boundary_tags.copy()
    xm = mesh.vertices[mesh.boundary_edges[diam]].max(axis=1)[:, 0]
    tags[diam] = np.where(xm <= t + 1e-14, int(BoundaryTag.DIAM_LEFT), int(BoundaryTag.DIAM_RIGHT))
    return Mesh(mesh.vertices, mesh.triangles, mesh.boundary_edges, tags, split_point=float(t),
                symmetry_pairing=mesh.symmetry_pairing, tip=int(hit[0]), meta=dict(mesh.meta))


def _endpoint_mesh(t: float, base_level: int) -> Mesh:
    n_rings = 2 ** base_level
    grid, radii, vertices, tris, edges = _half_disk_background(n_rings, 0.0)
    b_edges, b_tags = _tag_diameter(vertices, edges, t)
    tip = grid.point(n_rings, 0 if t > 0 else 2 * grid.counts[n_rings])
    mesh = Mesh(vertices, tris, b_edges, b_tags, split_point=t, tip=tip,
                meta={"kind": "half_disk", "base_level": base_level, "grade_rounds": 0})
    _assert_valid(mesh)
    return mesh


def build_full_disk_mesh(base_level: int, symmetric: bool = True) -> Mesh:
    """Unit disk; with ``symmetric`` the point-reflection pairing v -> v' with
    coords(v') = -coords(v) is recorded."""
    if base_level < 1:
        raise MeshError("base_level must be >= 1")
    n_rings = 2 ** base_level
    radii = _ring_radii(n_rings, 0.0)
    grid, vertices, tris, counts = _polar_mesh(radii, quadrants=(0, 1, 2, 3))
    m = counts[n_rings]
    edges = np.array([(grid.point(n_rings, j), grid.point(n_rings, j + 1)) for j in range(4 * m)], dtype=np.int64)
    tags = np.full(len(edges), int(BoundaryTag.ARC), dtype=np.int8)
    pairing = None
    if symmetric:
        pairing = np.empty(len(vertices), dtype=np.int64)
        for (i, j), v in grid.index.items():
            pairing[v] = grid.point(i, j + 2 * counts[i]) if i > 0 else v
    mesh = Mesh(vertices, tris, edges, tags, split_point=None, symmetry_pairing=pairing, tip=grid.point(0, 0),
                meta={"kind": "full_disk", "base_level": base_level})
    _assert_valid(mesh)
    return mesh


def build_unit_square_mesh(n: int) -> Mesh:
    """Structured mesh of [0,1]^2 with n cells per side, alternating diagonals;
    the whole boundary carries the ARC (outer boundary) tag."""
    if n < 1:
        raise MeshError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    edges = []
    for i in range(n):
        edges += [(vid(i, 0), vid(i + 1, 0)), (vid(n, i), vid(n, i + 1)),
                  (vid(i + 1, n), vid(i, n)), (vid(0, i + 1), vid(0, i))]
    mesh = Mesh(vertices, np.array(tris, dtype=np.int64), np.array(edges, dtype=np.int64),
                np.zeros(len(edges), dtype=np.int8), meta={"kind": "unit_square", "n": n})
    _assert_valid(mesh)
    return mesh


# -- checks and statistics --------------------------------------------------------------

def check_mesh(mesh: Mesh) -> list[str]:
    """List of violated invariants (empty when the mesh is valid)."""
    problems = []
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        problems.append(f"{int(np.sum(areas <= 0))} triangles with nonpositive signed area")
    tri = mesh.triangles
    all_edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(all_edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    free = {tuple(e) for e in uniq[counts == 1]}
    bnd = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    if free != bnd:
        problems.append(f"boundary edge list mismatch ({len(free)} free edges, {len(bnd)} tagged)")
    deg = np.bincount(mesh.boundary_edges.ravel(), minlength=mesh.n_vertices)
    if np.any((deg != 0) & (deg != 2)):
        problems.append("boundary edges do not form closed loops")
    if mesh.symmetry_pairing is not None:
        p = mesh.symmetry_pairing
        if not np.array_equal(p[p], np.arange(len(p))):
            problems.append("symmetry pairing is not an involution")
        if np.max(np.abs(mesh.vertices[p] + mesh.vertices)) > 1e-12:
            problems.append("paired vertices are not point reflections")
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[tri.ravel()] = True
    if not used.all():
        problems.append("unreferenced vertices")
    return problems


def _assert_valid(mesh: Mesh) -> None:
    problems = check_mesh(mesh)
    if problems:
        raise MeshError("; ".join(problems))


def mesh_statistics(mesh: Mesh) -> dict:
    tri = mesh.triangles
    p = mesh.vertices[tri]
    lens = np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1)
    angles = []
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    return {
        "h_max": float(lens.max()),
        "h_min": float(lens.min()),
        "min_angle": float(np.min(angles)),
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "area": mesh.area(),
    }


# -- plain-text dump -------------------------------------------------------------------------

def write_mesh(mesh: Mesh, fh) -> None:
    """``nv nt ne`` header, then ``x y``, ``i j k`` and ``i j tag`` lines."""
    fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}\n")
    for x, y in mesh.vertices:
        fh.write(f"{float(x)!r} {float(y)!r}\n")
    for a, b, c in mesh.triangles:
        fh.write(f"{a} {b} {c}\n")
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        fh.write(f"{a} {b} {BoundaryTag(int(tag)).name}\n")


def read_mesh(fh) -> Mesh:
    nv, nt, ne = (int(v) for v in fh.readline().split())
    verts = np.array([[float(v) for v in fh.readline().split()] for _ in range(nv)]).reshape(nv, 2)
    tris = np.array([[int(v) for v in fh.readline().split()] for _ in range(nt)], dtype=np.int64).reshape(nt, 3)
    edges, tags = [], []
    for _ in range(ne):
        a, b, tag = fh.readline().split()
        edges.append((int(a), int(b)))
        tags.append(int(BoundaryTag[tag]))
    return Mesh(verts, tris, np.array(edges, dtype=np.int64).reshape(ne, 2), np.array(tags, dtype=np.int8))
