"""Procedural ground-truth complexes, point-cloud sampling, and the
corruption model that turns a definite complex into a probabilistic one.

These stand in for a neural predictor: every generated complex satisfies
the validity equations by construction, carries exact analytic primitives,
and knows how to sample its true surface region (patch grids of trimmed
faces span the parametric bounding box, so the grid alone over-covers).
"""

import math
from dataclasses import dataclass

import numpy as np

from .complexes import K_CURVE, K_PATCH, ChainComplex, Corner, Curve, Patch
from .extraction import ProbabilisticComplex, SoftCorner, SoftCurve, SoftPatch
from .complexes import CURVE_TYPES, PATCH_TYPES
from .primitives import Circle3, Cylinder, Line, Plane, Sphere, perpendicular_frame

SHAPES = ("cube", "capped_cylinder", "sphere", "l_bracket", "prism")


@dataclass(frozen=True)
class HalfSpace:
    """Culling region for partial scans: points with normal . p > offset are dropped."""

    normal: np.ndarray
    offset: float

    def contains(self, points):
        return np.atleast_2d(points) @ np.asarray(self.normal, dtype=float) > self.offset


# ---------------------------------------------------------------------------
# surface regions (true trimmed extent, used for point sampling)


class TriangleRegion:
    """Union of 3D triangles with a shared constant normal per triangle."""

    def __init__(self, triangles, normals):
        self.triangles = np.asarray(triangles, dtype=float)  # (m, 3, 3)
        self.normals = np.asarray(normals, dtype=float)  # (m, 3)
        a = self.triangles[:, 1] - self.triangles[:, 0]
        b = self.triangles[:, 2] - self.triangles[:, 0]
        self._areas = 0.5 * np.linalg.norm(np.cross(a, b), axis=1)
        self.area = float(self._areas.sum())

    def sample(self, rng, n):
        probs = self._areas / self._areas.sum()
        idx = rng.choice(len(self.triangles), size=n, p=probs)
        r1 = np.sqrt(rng.random(n))
        r2 = rng.random(n)
        tri = self.triangles[idx]
        pts = (
            (1 - r1)[:, None] * tri[:, 0]
            + (r1 * (1 - r2))[:, None] * tri[:, 1]
            + (r1 * r2)[:, None] * tri[:, 2]
        )
        return pts, self.normals[idx]


class DiskRegion:
    def __init__(self, center, normal, radius):
        self.center = np.asarray(center, dtype=float)
        self.normal = np.asarray(normal, dtype=float)
        self.radius = float(radius)
        self.area = math.pi * radius**2

    def sample(self, rng, n):
        u, v = perpendicular_frame(self.normal)
        r = self.radius * np.sqrt(rng.random(n))
        t = rng.uniform(0, 2 * math.pi, n)
        pts = self.center + r[:, None] * (np.cos(t)[:, None] * u + np.sin(t)[:, None] * v)
        return pts, np.tile(self.normal, (n, 1))


class CylinderSideRegion:
    def __init__(self, center, axis, radius, height):
        self.center = np.asarray(center, dtype=float)
        self.axis = np.asarray(axis, dtype=float)
        self.radius = float(radius)
        self.height = float(height)
        self.area = 2 * math.pi * radius * height

    def sample(self, rng, n):
        u, v = perpendicular_frame(self.axis)
        t = rng.uniform(0, 2 * math.pi, n)
        h = rng.uniform(-self.height / 2, self.height / 2, n)
        radial = np.cos(t)[:, None] * u + np.sin(t)[:, None] * v
        pts = self.center + h[:, None] * self.axis + self.radius * radial
        return pts, radial


class SphereRegion:
    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.area = 4 * math.pi * radius**2

    def sample(self, rng, n):
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return self.center + self.radius * d, d


class GridRegion:
    """Fallback region: the triangulated sample grid of a generic patch."""

    def __init__(self, grid, u_closed):
        tris, normals = [], []
        g = np.asarray(grid, dtype=float)
        k = g.shape[1]
        cols = k if u_closed else k - 1
        for i in range(g.shape[0] - 1):
            for j in range(cols):
                j2 = (j + 1) % k
                quad = (g[i, j], g[i, j2], g[i + 1, j2], g[i + 1, j])
                for tri in ((quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])):
                    nrm = np.cross(tri[1] - tri[0], tri[2] - tri[0])
                    nn = np.linalg.norm(nrm)
                    if nn < 1e-14:
                        continue
                    tris.append(tri)
                    normals.append(nrm / nn)
        self._inner = TriangleRegion(np.array(tris), np.array(normals))
        self.area = self._inner.area

    def sample(self, rng, n):
        return self._inner.sample(rng, n)


def _triangulate_polygon(poly):
    """Ear-clipping triangulation of a simple CCW polygon; index triples."""
    poly = np.asarray(poly, dtype=float)
    idx = list(range(len(poly)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def inside(p, a, b, c):
        d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
        return d1 >= -1e-12 and d2 >= -1e-12 and d3 >= -1e-12

    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        n = len(idx)
        for ii in range(n):
            i0, i1, i2 = idx[ii - 1], idx[ii], idx[(ii + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if cross(a, b, c) <= 1e-14:
                continue  # reflex corner
            if any(
                inside(poly[k], a, b, c)
                for k in idx
                if k not in (i0, i1, i2)
            ):
                continue
            tris.append((i0, i1, i2))
            idx.pop(ii)
            break
        else:
            raise ValueError("polygon triangulation failed")
    tris.append(tuple(idx))
    return tris


# ---------------------------------------------------------------------------
# shape builders


def _line_curve(p0, p1):
    t = np.linspace(0.0, 1.0, K_CURVE)[:, None]
    pts = np.asarray(p0) * (1 - t) + np.asarray(p1) * t
    prim = Line(p0, np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float))
    return Curve(pts, closed=False, curve_type="line", primitive=prim)


def _circle_curve(center, normal, radius):
    u, v = perpendicular_frame(normal)
    t = 2 * math.pi * np.arange(K_CURVE) / K_CURVE
    pts = (
        np.asarray(center, dtype=float)
        + radius * (np.cos(t)[:, None] * u + np.sin(t)[:, None] * v)
    )
    return Curve(pts, closed=True, curve_type="circle", primitive=Circle3(center, normal, radius))


def _quad_grid(c00, c01, c10, c11):
    """Bilinear 10x10 grid; rows (axis 0) run c00->c10, cols run c00->c01."""
    s = np.linspace(0.0, 1.0, K_PATCH)
    v, u = np.meshgrid(s, s, indexing="ij")
    c00, c01, c10, c11 = (np.asarray(x, dtype=float) for x in (c00, c01, c10, c11))
    return (
        (1 - v)[..., None] * ((1 - u)[..., None] * c00 + u[..., None] * c01)
        + v[..., None] * ((1 - u)[..., None] * c10 + u[..., None] * c11)
    )


def _bbox_grid(poly, z):
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    xs = np.linspace(lo[0], hi[0], K_PATCH)
    ys = np.linspace(lo[1], hi[1], K_PATCH)
    grid = np.zeros((K_PATCH, K_PATCH, 3))
    grid[..., 0] = xs[None, :]
    grid[..., 1] = ys[:, None]
    grid[..., 2] = z
    return grid


def _extrusion(poly, z0, z1):
    """Prismatic solid over a simple CCW polygon: caps + one face per side."""
    poly = np.asarray(poly, dtype=float)
    m = len(poly)
    bottom = np.column_stack([poly, np.full(m, z0)])
    top = np.column_stack([poly, np.full(m, z1)])

    vertices = [Corner(p) for p in bottom] + [Corner(p) for p in top]

    edges = []
    for k in range(m):
        edges.append(_line_curve(bottom[k], bottom[(k + 1) % m]))  # bottom ring
    for k in range(m):
        edges.append(_line_curve(top[k], top[(k + 1) % m]))  # top ring
    for k in range(m):
        edges.append(_line_curve(bottom[k], top[k]))  # verticals

    tris = _triangulate_polygon(poly)
    faces = []
    # bottom cap (outward -z), top cap (outward +z)
    for z, nz in ((z0, -1.0), (z1, 1.0)):
        tri3d = np.array(
            [[(poly[a][0], poly[a][1], z) for a in t] for t in tris]
        )
        region = TriangleRegion(tri3d, np.tile([0.0, 0.0, nz], (len(tris), 1)))
        faces.append(
            Patch(
                _bbox_grid(poly, z),
                u_closed=False,
                patch_type="plane",
                primitive=Plane([0.0, 0.0, nz], nz * z),
                region=region,
            )
        )
    for k in range(m):
        k2 = (k + 1) % m
        b0, b1, t0, t1 = bottom[k], bottom[k2], top[k], top[k2]
        edge2d = poly[k2] - poly[k]
        outward = np.array([edge2d[1], -edge2d[0], 0.0])
        outward /= np.linalg.norm(outward)
        grid = _quad_grid(b0, b1, t0, t1)  # rows: z, cols: along the edge
        region = TriangleRegion(
            np.array([(b0, b1, t1), (b0, t1, t0)]), np.tile(outward, (2, 1))
        )
        faces.append(
            Patch(
                grid,
                u_closed=False,
                patch_type="plane",
                primitive=Plane(outward, float(outward @ b0)),
                region=region,
            )
        )

    nf, ne, nv = len(faces), len(edges), len(vertices)
    fe = np.zeros((nf, ne), dtype=np.int64)
    ev = np.zeros((ne, nv), dtype=np.int64)
    fv = np.zeros((nf, nv), dtype=np.int64)
    B, T, VRT = 0, m, 2 * m  # edge index offsets per ring
    fe[0, B : B + m] = 1
    fe[1, T : T + m] = 1
    for k in range(m):
        f = 2 + k
        fe[f, B + k] = 1
        fe[f, T + k] = 1
        fe[f, VRT + k] = 1
        fe[f, VRT + (k + 1) % m] = 1
    for k in range(m):
        ev[B + k, k] = ev[B + k, (k + 1) % m] = 1
        ev[T + k, m + k] = ev[T + k, m + (k + 1) % m] = 1
        ev[VRT + k, k] = ev[VRT + k, m + k] = 1
    for k in range(m):
        fv[0, k] = 1
        fv[1, m + k] = 1
        f = 2 + k
        fv[f, k] = fv[f, (k + 1) % m] = 1
        fv[f, m + k] = fv[f, m + (k + 1) % m] = 1
    return ChainComplex(vertices, edges, faces, fe, ev, fv)


def _cube(center, side):
    c = np.asarray(center, dtype=float)
    h = side / 2.0
    poly = np.array(
        [
            [c[0] - h, c[1] - h],
            [c[0] + h, c[1] - h],
            [c[0] + h, c[1] + h],
            [c[0] - h, c[1] + h],
        ]
    )
    return _extrusion(poly, c[2] - h, c[2] + h)


def _prism(center, n, circumradius, height):
    c = np.asarray(center, dtype=float)
    t = 2 * math.pi * np.arange(n) / n
    poly = np.column_stack([c[0] + circumradius * np.cos(t), c[1] + circumradius * np.sin(t)])
    return _extrusion(poly, c[2] - height / 2, c[2] + height / 2)


def _l_bracket(center, size, height):
    c = np.asarray(center, dtype=float)
    h = size / 2.0
    mx, my = c[0], c[1]  # the notch corner sits at the shape center
    poly = np.array(
        [
            [c[0] - h, c[1] - h],
            [c[0] + h, c[1] - h],
            [c[0] + h, my],
            [mx, my],
            [mx, c[1] + h],
            [c[0] - h, c[1] + h],
        ]
    )
    return _extrusion(poly, c[2] - height / 2, c[2] + height / 2)


def _capped_cylinder(center, radius, height):
    c = np.asarray(center, dtype=float)
    axis = np.array([0.0, 0.0, 1.0])
    z0, z1 = c[2] - height / 2, c[2] + height / 2
    u, v = perpendicular_frame(axis)

    hgrid = np.linspace(z0, z1, K_PATCH)
    tgrid = 2 * math.pi * np.arange(K_PATCH) / K_PATCH
    radial = np.cos(tgrid)[:, None] * u + np.sin(tgrid)[:, None] * v  # (10,3)
    side_grid = np.zeros((K_PATCH, K_PATCH, 3))
    for i, z in enumerate(hgrid):
        side_grid[i] = np.array([c[0], c[1], z]) + radius * radial
    side = Patch(
        side_grid,
        u_closed=True,
        patch_type="cylinder",
        primitive=Cylinder(c, axis, radius),
        region=CylinderSideRegion(c, axis, radius, height),
    )

    caps, circles = [], []
    for z, nz in ((z0, -1.0), (z1, 1.0)):
        ctr = np.array([c[0], c[1], z])
        poly = np.array(
            [
                [c[0] - radius, c[1] - radius],
                [c[0] + radius, c[1] - radius],
                [c[0] + radius, c[1] + radius],
                [c[0] - radius, c[1] + radius],
            ]
        )
        caps.append(
            Patch(
                _bbox_grid(poly, z),
                u_closed=False,
                patch_type="plane",
                primitive=Plane([0.0, 0.0, nz], nz * z),
                region=DiskRegion(ctr, [0.0, 0.0, nz], radius),
            )
        )
        circles.append(_circle_curve(ctr, axis, radius))

    faces = [side, caps[0], caps[1]]
    edges = circles
    fe = np.array([[1, 1], [1, 0], [0, 1]], dtype=np.int64)
    ev = np.zeros((2, 0), dtype=np.int64)
    fv = np.zeros((3, 0), dtype=np.int64)
    return ChainComplex([], edges, faces, fe, ev, fv)


def _sphere(center, radius):
    c = np.asarray(center, dtype=float)
    phi = np.linspace(0.0, math.pi, K_PATCH)
    theta = 2 * math.pi * np.arange(K_PATCH) / K_PATCH
    grid = np.zeros((K_PATCH, K_PATCH, 3))
    for i, ph in enumerate(phi):
        grid[i, :, 0] = c[0] + radius * math.sin(ph) * np.cos(theta)
        grid[i, :, 1] = c[1] + radius * math.sin(ph) * np.sin(theta)
        grid[i, :, 2] = c[2] + radius * math.cos(ph)
    face = Patch(
        grid,
        u_closed=True,
        patch_type="sphere",
        primitive=Sphere(c, radius),
        region=SphereRegion(c, radius),
    )
    return ChainComplex(
        [], [], [face],
        np.zeros((1, 0), dtype=np.int64),
        np.zeros((0, 0), dtype=np.int64),
        np.zeros((1, 0), dtype=np.int64),
    )


def generate_gt(shape, n=6, center=(0.5, 0.5, 0.5), size=0.8, radius=0.25, height=0.7):
    """Build a ground-truth complex for one of the procedural shape families.

    shape: cube | capped_cylinder | sphere | l_bracket | prism.  ``n`` is
    the prism side count (>= 3); the remaining parameters keep every shape
    inside the unit cube at their defaults.
    """
    if shape == "cube":
        return _cube(center, size)
    if shape == "capped_cylinder":
        return _capped_cylinder(center, radius, height)
    if shape == "sphere":
        return _sphere(center, 0.35 if radius == 0.25 else radius)
    if shape == "l_bracket":
        return _l_bracket(center, size, height * 0.7)
    if shape == "prism":
        if n < 3:
            raise ValueError(f"a prism needs at least 3 sides, got {n}")
        return _prism(center, n, 0.35, 0.6)
    raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")


def sample_point_cloud(c: ChainComplex, n, noise_sigma=0.0, mask=None, seed=0):
    """Area-weighted surface samples with Gaussian normal-direction offsets.

    Patches with an attached true region sample that region; others fall
    back to their triangulated grid.  Points inside any mask half-space
    are removed (virtual-scan partiality).
    """
    rng = np.random.default_rng(seed)
    regions = [
        f.region if f.region is not None else GridRegion(f.grid, f.u_closed) for f in c.faces
    ]
    areas = np.array([r.area for r in regions])
    if areas.sum() == 0:
        raise ValueError("complex has no surface area to sample")
    counts = rng.multinomial(n, areas / areas.sum())
    pts, normals = [], []
    for region, cnt in zip(regions, counts):
        if cnt == 0:
            continue
        p, nr = region.sample(rng, int(cnt))
        pts.append(p)
        normals.append(nr)
    points = np.concatenate(pts)
    normals = np.concatenate(normals)
    if noise_sigma > 0:
        points = points + rng.normal(0.0, noise_sigma, len(points))[:, None] * normals
    if mask:
        keep = np.ones(len(points), dtype=bool)
        for hs in mask:
            keep &= ~hs.contains(points)
        points = points[keep]
    return points


# ---------------------------------------------------------------------------
# corruption model


@dataclass(frozen=True)
class CorruptionParams:
    """Controls the synthetic degradation of a ground-truth complex.

    Blur strengths beta map true-1 entries to uniform [1-beta, 1] and
    true-0 entries to uniform [0, beta].  Spurious elements come in two
    flavors: near-duplicate copies of real elements (validness 0.5-0.72,
    the population NMS targets) and far random distractors (validness
    around 0.4, targeting the ILP validness cutoff).
    """

    sigma_geom: float = 0.01
    validness_blur: float = 0.15
    topology_blur: float = 0.15
    n_duplicates: int = 0
    n_distractors: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_geom < 0:
            raise ValueError("sigma_geom must be nonnegative")
        for name in ("validness_blur", "topology_blur"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0,1]")


def _blur_one(rng, beta):
    return 1.0 - rng.uniform(0.0, beta) if beta > 0 else 1.0


def _blur_zero(rng, beta):
    return rng.uniform(0.0, beta) if beta > 0 else 0.0


def _blur_type(rng, n_classes, true_idx, beta):
    probs = np.zeros(n_classes)
    v = _blur_one(rng, beta)
    probs[true_idx] = v
    if n_classes > 1 and v < 1.0:
        raw = rng.uniform(0.1, 1.0, n_classes - 1)
        rest = raw / raw.sum() * (1.0 - v)
        probs[[i for i in range(n_classes) if i != true_idx]] = rest
    return probs


def _blur_matrix(rng, binary, beta):
    if binary.size == 0:
        return binary.astype(float)
    u = rng.uniform(0.0, beta, binary.shape) if beta > 0 else np.zeros(binary.shape)
    return np.where(binary == 1, 1.0 - u, u)


def _far_point(rng, all_points, min_dist=0.15):
    for _ in range(200):
        p = rng.uniform(0.15, 0.85, 3)
        if all_points.size == 0:
            return p
        if np.linalg.norm(all_points - p, axis=1).min() >= min_dist:
            return p
    return p  # crowded scene: accept the last draw


def corrupt(c: ChainComplex, params: CorruptionParams) -> ProbabilisticComplex:
    """Jitter geometry, blur probabilities, and inject spurious elements.

    Injected elements are appended after the real ones (duplicates first);
    the returned complex's ``provenance`` maps group name -> {index: tag}
    where tag is ("duplicate", source_index) or ("distractor",).
    """
    rng = np.random.default_rng(params.seed)
    sg = params.sigma_geom
    bv = params.validness_blur
    bt = params.topology_blur

    corner_pts = [v.point.copy() for v in c.vertices]
    curve_data = [(e.points.copy(), e.closed, e.curve_type) for e in c.edges]
    patch_data = [(f.grid.copy(), f.u_closed, f.patch_type) for f in c.faces]
    corner_val, curve_val, patch_val = (
        ["real"] * len(corner_pts),
        ["real"] * len(curve_data),
        ["real"] * len(patch_data),
    )

    fe = np.array(c.fe)
    ev = np.array(c.ev)
    fv = np.array(c.fv)
    provenance = {"corners": {}, "curves": {}, "patches": {}}

    group_sizes = [len(corner_pts), len(curve_data), len(patch_data)]
    total_real = sum(group_sizes)
    for _ in range(params.n_duplicates):
        if total_real == 0:
            break
        pick = int(rng.integers(total_real))
        if pick < group_sizes[0]:
            src = pick
            provenance["corners"][len(corner_pts)] = ("duplicate", src)
            corner_pts.append(corner_pts[src].copy())
            corner_val.append("duplicate")
            ev = np.column_stack([ev, ev[:, src]])
            fv = np.column_stack([fv, fv[:, src]])
        elif pick < group_sizes[0] + group_sizes[1]:
            src = pick - group_sizes[0]
            provenance["curves"][len(curve_data)] = ("duplicate", src)
            curve_data.append(
                (curve_data[src][0].copy(), curve_data[src][1], curve_data[src][2])
            )
            curve_val.append("duplicate")
            fe = np.column_stack([fe, fe[:, src]])
            ev = np.vstack([ev, ev[src : src + 1, :]])
        else:
            src = pick - group_sizes[0] - group_sizes[1]
            provenance["patches"][len(patch_data)] = ("duplicate", src)
            patch_data.append(
                (patch_data[src][0].copy(), patch_data[src][1], patch_data[src][2])
            )
            patch_val.append("duplicate")
            fe = np.vstack([fe, fe[src : src + 1, :]])
            fv = np.vstack([fv, fv[src : src + 1, :]])

    all_real_points = [np.asarray(corner_pts[: group_sizes[0]]).reshape(-1, 3)]
    all_real_points += [d[0] for d in curve_data[: group_sizes[1]]]
    all_real_points += [d[0].reshape(-1, 3) for d in patch_data[: group_sizes[2]]]
    all_real_points = (
        np.concatenate([a for a in all_real_points if a.size]) if any(a.size for a in all_real_points)
        else np.zeros((0, 3))
    )
    for _ in range(params.n_distractors):
        group = int(rng.integers(3))
        base = _far_point(rng, all_real_points)
        if group == 0:
            provenance["corners"][len(corner_pts)] = ("distractor",)
            corner_pts.append(base)
            corner_val.append("distractor")
            ev = np.column_stack([ev, np.zeros(ev.shape[0], dtype=np.int64)])
            fv = np.column_stack([fv, np.zeros(fv.shape[0], dtype=np.int64)])
        elif group == 1:
            provenance["curves"][len(curve_data)] = ("distractor",)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            t = np.linspace(-0.05, 0.05, K_CURVE)[:, None]
            curve_data.append((base + t * direction, False, CURVE_TYPES[rng.integers(4)]))
            curve_val.append("distractor")
            fe = np.column_stack([fe, np.zeros(fe.shape[0], dtype=np.int64)])
            ev = np.vstack([ev, np.zeros((1, ev.shape[1]), dtype=np.int64)])
        else:
            provenance["patches"][len(patch_data)] = ("distractor",)
            u, v = perpendicular_frame(rng.normal(size=3))
            s = np.linspace(-0.06, 0.06, K_PATCH)
            gv, gu = np.meshgrid(s, s, indexing="ij")
            grid = base + gv[..., None] * v + gu[..., None] * u
            patch_data.append((grid, False, PATCH_TYPES[rng.integers(6)]))
            patch_val.append("distractor")
            fe = np.vstack([fe, np.zeros((1, fe.shape[1]), dtype=np.int64)])
            fv = np.vstack([fv, np.zeros((1, fv.shape[1]), dtype=np.int64)])

    def validness_for(tag):
        if tag == "real":
            return _blur_one(rng, bv)
        if tag == "duplicate":
            return rng.uniform(0.5, 0.72)
        return rng.uniform(0.35, 0.45)

    corners = [
        SoftCorner(validness_for(tag), p + rng.normal(0.0, sg, 3) if sg > 0 else p)
        for p, tag in zip(corner_pts, corner_val)
    ]
    curves = []
    for (pts, closed, ctype), tag in zip(curve_data, curve_val):
        jitter = rng.normal(0.0, sg, pts.shape) if sg > 0 else 0.0
        curves.append(
            SoftCurve(
                validness_for(tag),
                _blur_zero(rng, bv) if closed else _blur_one(rng, bv),
                _blur_type(rng, len(CURVE_TYPES), CURVE_TYPES.index(ctype), bv),
                pts + jitter,
            )
        )
    patches = []
    for (grid, u_closed, ptype), tag in zip(patch_data, patch_val):
        jitter = rng.normal(0.0, sg, grid.shape) if sg > 0 else 0.0
        patches.append(
            SoftPatch(
                validness_for(tag),
                _blur_one(rng, bv) if u_closed else _blur_zero(rng, bv),
                _blur_type(rng, len(PATCH_TYPES), PATCH_TYPES.index(ptype), bv),
                grid + jitter,
            )
        )

    return ProbabilisticComplex(
        corners,
        curves,
        patches,
        _blur_matrix(rng, fe, bt),
        _blur_matrix(rng, ev, bt),
        _blur_matrix(rng, fv, bt),
        provenance=provenance,
    )
