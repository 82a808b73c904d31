"""Weighted least-squares fitting of typed primitives to point targets.

Plane and line have eigendecomposition closed forms; everything else is
Levenberg-Marquardt on the exact point-to-primitive distance, seeded by
an algebraic or moment-based initializer.  Axis constraints are imposed
by reparameterization (the axis is fixed, remaining parameters are free),
never by penalty terms.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError
from .primitives import (
    BSplineCurve,
    BSplinePatch,
    Circle3,
    Cone,
    Cylinder,
    Ellipse3,
    Line,
    Plane,
    Sphere,
    Torus,
    perpendicular_frame,
    unit,
)

#: target weights: input points / adjacent-element samples / stabilization
W_INPUT = 1.0
W_ADJACENT = 5.0
W_STABILIZER = 0.1

_MIN_POINTS = {
    "plane": 3,
    "sphere": 4,
    "cylinder": 6,
    "cone": 6,
    "torus": 7,
    "line": 2,
    "circle": 3,
    "ellipse": 5,
}


def _as_points(x):
    if x is None:
        return np.zeros((0, 3))
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 3)


@dataclass
class FittingProblem:
    """Weighted target sets for one element fit.

    input_points carry weight 1, adjacent-element samples weight 5, and
    previous-iterate samples weight 0.1 (stabilization against drift).
    An axis constraint fixes the primitive axis direction exactly;
    axis_point additionally pins the axis line (cones).
    """

    input_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    adjacent_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    stabilizer_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    axis: Optional[np.ndarray] = None
    axis_point: Optional[np.ndarray] = None
    init: Optional[object] = None
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        self.input_points = _as_points(self.input_points)
        self.adjacent_points = _as_points(self.adjacent_points)
        self.stabilizer_points = _as_points(self.stabilizer_points)
        if self.axis is not None:
            self.axis = unit(self.axis)
        if len(self.input_points) + len(self.adjacent_points) + len(self.stabilizer_points) == 0:
            raise DegenerateGeometryError("fitting problem has no target points")

    def stacked(self):
        pts = np.concatenate([self.input_points, self.adjacent_points, self.stabilizer_points])
        w = np.concatenate(
            [
                np.full(len(self.input_points), W_INPUT),
                np.full(len(self.adjacent_points), W_ADJACENT),
                np.full(len(self.stabilizer_points), W_STABILIZER),
            ]
        )
        return pts, w


# ---------------------------------------------------------------------------
# Levenberg-Marquardt with numeric Jacobian


def _jacobian(fn, x, r0, h=1e-6):
    J = np.empty((len(r0), len(x)))
    for i in range(len(x)):
        step = h * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += step
        xm = x.copy()
        xm[i] -= step
        J[:, i] = (fn(xp) - fn(xm)) / (2 * step)
    return J


def levenberg_marquardt(fn, x0, max_iter=60, gtol=1e-12, xtol=1e-14):
    x = np.asarray(x0, dtype=float).copy()
    r = fn(x)
    cost = float(r @ r)
    lam = 1e-4
    for _ in range(max_iter):
        J = _jacobian(fn, x, r)
        g = J.T @ r
        if np.linalg.norm(g, ord=np.inf) < gtol:
            break
        H = J.T @ J
        improved = False
        for _ in range(14):
            A = H + lam * np.diag(np.maximum(np.diag(H), 1e-12))
            try:
                step = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x2 = x + step
            r2 = fn(x2)
            c2 = float(r2 @ r2)
            if c2 < cost:
                x, r, cost = x2, r2, c2
                lam = max(lam * 0.3, 1e-12)
                improved = True
                break
            lam *= 10
        if not improved or np.linalg.norm(step) < xtol:
            break
    return x


def _tangent_axis(a0, alpha, beta, t1, t2):
    return unit(a0 + alpha * t1 + beta * t2)


def estimate_normals(points, k=16):
    """Per-point unit normals from the smallest local-PCA direction."""
    points = np.asarray(points, dtype=float)
    k = min(k, len(points))
    if k < 3:
        raise DegenerateGeometryError("too few points for normal estimation")
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k)
    nbrs = points[idx]
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = np.einsum("nkd,nke->nde", centered, centered)
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, :, 0]


# ---------------------------------------------------------------------------
# closed-form kinds


def fit_plane(points, weights):
    w = weights / weights.sum()
    mu = w @ points
    d = points - mu
    cov = (d * w[:, None]).T @ d
    vals, vecs = np.linalg.eigh(cov)
    if vals[1] < 1e-14:
        raise DegenerateGeometryError("plane fit needs non-collinear points")
    n = vecs[:, 0]
    if n[np.argmax(np.abs(n))] < 0:
        n = -n
    return Plane(n, float(n @ mu))


def fit_line(points, weights):
    w = weights / weights.sum()
    mu = w @ points
    d = points - mu
    cov = (d * w[:, None]).T @ d
    vals, vecs = np.linalg.eigh(cov)
    if vals[2] < 1e-16:
        raise DegenerateGeometryError("line fit needs at least two distinct points")
    direction = vecs[:, 2]
    if direction[np.argmax(np.abs(direction))] < 0:
        direction = -direction
    return Line(mu, direction)


# ---------------------------------------------------------------------------
# LM kinds


def fit_sphere(points, weights, init=None):
    sw = np.sqrt(weights)
    if isinstance(init, Sphere):
        c0, r0 = init.center, init.radius
    else:
        A = np.column_stack([2 * points, np.ones(len(points))]) * sw[:, None]
        b = np.einsum("nd,nd->n", points, points) * sw
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        c0 = sol[:3]
        r0 = math.sqrt(max(sol[3] + c0 @ c0, 1e-12))

    def resid(x):
        c, r = x[:3], x[3]
        return sw * (np.linalg.norm(points - c, axis=1) - r)

    x = levenberg_marquardt(resid, np.r_[c0, r0])
    return Sphere(x[:3], max(abs(x[3]), 1e-9))


def _circle2d(xy, weights):
    # algebraic (Kasa) circle fit in the plane
    sw = np.sqrt(weights)
    A = np.column_stack([2 * xy, np.ones(len(xy))]) * sw[:, None]
    b = np.einsum("nd,nd->n", xy, xy) * sw
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[:2]
    r = math.sqrt(max(sol[2] + cx * cx + cy * cy, 1e-12))
    return np.array([cx, cy]), r


def fit_circle(points, weights, init=None):
    if isinstance(init, Circle3):
        c0, n0, r0 = init.center, init.normal, init.radius
    else:
        plane = fit_plane(points, weights)
        n0 = plane.normal
        u, v = perpendicular_frame(n0)
        mu = (weights / weights.sum()) @ points
        xy = np.column_stack([(points - mu) @ u, (points - mu) @ v])
        c2, r0 = _circle2d(xy, weights)
        c0 = mu + c2[0] * u + c2[1] * v
    t1, t2 = perpendicular_frame(n0)
    sw = np.sqrt(weights)

    def resid(x):
        c = x[:3]
        n = _tangent_axis(n0, x[3], x[4], t1, t2)
        r = x[5]
        d = points - c
        h = d @ n
        rho = np.linalg.norm(d - h[:, None] * n, axis=1)
        return np.concatenate([sw * h, sw * (rho - r)])

    x = levenberg_marquardt(resid, np.r_[c0, 0.0, 0.0, r0])
    return Circle3(x[:3], _tangent_axis(n0, x[3], x[4], t1, t2), max(abs(x[5]), 1e-9))


def fit_cylinder(points, weights, axis=None, init=None, normals=None):
    sw = np.sqrt(weights)
    mu = (weights / weights.sum()) @ points

    if axis is not None:
        a = unit(axis)
        u, v = perpendicular_frame(a)
        xy = np.column_stack([(points - mu) @ u, (points - mu) @ v])
        c2, r0 = _circle2d(xy, weights)

        def resid(x):
            c = mu + x[0] * u + x[1] * v
            d = points - c
            h = d @ a
            rho = np.linalg.norm(d - h[:, None] * a, axis=1)
            return sw * (rho - x[2])

        x = levenberg_marquardt(resid, np.r_[c2, r0])
        return Cylinder(mu + x[0] * u + x[1] * v, a, max(abs(x[2]), 1e-9))

    if isinstance(init, Cylinder):
        a0 = init.axis
    else:
        if normals is None:
            normals = estimate_normals(points)
        cov = normals.T @ normals
        _, vecs = np.linalg.eigh(cov)
        a0 = vecs[:, 0]  # cylinder normals span the plane perpendicular to the axis
    t1, t2 = perpendicular_frame(a0)
    u, v = t1, t2
    xy = np.column_stack([(points - mu) @ u, (points - mu) @ v])
    c2, r0 = _circle2d(xy, weights)
    if isinstance(init, Cylinder):
        r0 = init.radius
        rel = init.axis_point - mu
        c2 = np.array([rel @ u, rel @ v])

    def resid(x):
        a = _tangent_axis(a0, x[0], x[1], t1, t2)
        c = mu + x[2] * u + x[3] * v
        d = points - c
        h = d @ a
        rho = np.linalg.norm(d - h[:, None] * a, axis=1)
        return sw * (rho - x[4])

    x = levenberg_marquardt(resid, np.r_[0.0, 0.0, c2, r0])
    return Cylinder(
        mu + x[2] * u + x[3] * v, _tangent_axis(a0, x[0], x[1], t1, t2), max(abs(x[4]), 1e-9)
    )


def _cone_distance(points, apex, a, theta):
    d = points - apex
    h = d @ a
    rho = np.linalg.norm(d - h[:, None] * a, axis=1)
    return rho * math.cos(theta) - h * math.sin(theta)


def fit_cone(points, weights, axis=None, axis_point=None, init=None, normals=None):
    sw = np.sqrt(weights)

    if axis is not None and axis_point is not None:
        # cue: the axis line is known; fit apex offset and half-angle
        a0 = unit(axis)
        q0 = np.asarray(axis_point, dtype=float)
        d = points - q0
        h = d @ a0
        rho = np.linalg.norm(d - h[:, None] * a0, axis=1)
        A = np.column_stack([h, np.ones(len(h))]) * sw[:, None]
        sol, *_ = np.linalg.lstsq(A, rho * sw, rcond=None)
        slope, intercept = sol
        if abs(slope) < 1e-9:
            raise DegenerateGeometryError("cone fit degenerates to a cylinder under the axis cue")
        a = a0 if slope > 0 else -a0
        t0 = -intercept / slope  # rho = 0 at the apex
        th0 = math.atan(abs(slope))

        def resid(x):
            apex = q0 + x[0] * a0
            th = np.clip(x[1], 1e-4, math.pi / 2 - 1e-4)
            return sw * _cone_distance(points, apex, a, th)

        x = levenberg_marquardt(resid, np.array([t0, th0]))
        return Cone(q0 + x[0] * a0, a, float(np.clip(x[1], 1e-4, math.pi / 2 - 1e-4)))

    if isinstance(init, Cone):
        apex0, a0, th0 = init.apex, init.axis, init.half_angle
    else:
        if normals is None:
            normals = estimate_normals(points)
        # every tangent plane passes through the apex
        A = (normals * weights[:, None]).T @ normals
        b = (normals * weights[:, None]).T @ np.einsum("nd,nd->n", normals, points)
        try:
            apex0 = np.linalg.solve(A + 1e-12 * np.eye(3), b)
        except np.linalg.LinAlgError as exc:
            raise DegenerateGeometryError("cone apex estimation is singular") from exc
        u = points - apex0
        norms = np.linalg.norm(u, axis=1)
        if norms.min() < 1e-12:
            raise DegenerateGeometryError("cone fit has a target at the apex")
        u = u / norms[:, None]
        a0 = u.mean(axis=0)
        if np.linalg.norm(a0) < 1e-9:
            raise DegenerateGeometryError("cone axis estimation is degenerate")
        a0 = unit(a0)
        th0 = float(np.arccos(np.clip(u @ a0, -1, 1)).mean())
        th0 = min(max(th0, 1e-3), math.pi / 2 - 1e-3)
    t1, t2 = perpendicular_frame(a0)

    def resid(x):
        apex = x[:3]
        a = _tangent_axis(a0, x[3], x[4], t1, t2)
        th = np.clip(x[5], 1e-4, math.pi / 2 - 1e-4)
        return sw * _cone_distance(points, apex, a, th)

    x = levenberg_marquardt(resid, np.r_[apex0, 0.0, 0.0, th0])
    return Cone(
        x[:3],
        _tangent_axis(a0, x[3], x[4], t1, t2),
        float(np.clip(x[5], 1e-4, math.pi / 2 - 1e-4)),
    )


def fit_torus(points, weights, init=None):
    sw = np.sqrt(weights)
    if isinstance(init, Torus):
        c0, a0, R0, r0 = init.center, init.axis, init.major_radius, init.minor_radius
    else:
        w = weights / weights.sum()
        c0 = w @ points
        d = points - c0
        cov = (d * w[:, None]).T @ d
        _, vecs = np.linalg.eigh(cov)
        a0 = vecs[:, 0]  # thin direction of a (near-)complete torus
        h = d @ a0
        rho = np.linalg.norm(d - h[:, None] * a0, axis=1)
        R0 = float(w @ rho)
        r0 = float(w @ np.sqrt((rho - R0) ** 2 + h * h))
        r0 = min(max(r0, 1e-4), 0.9 * R0)
    t1, t2 = perpendicular_frame(a0)

    def resid(x):
        c = x[:3]
        a = _tangent_axis(a0, x[3], x[4], t1, t2)
        R, r = x[5], x[6]
        d = points - c
        h = d @ a
        rho = np.linalg.norm(d - h[:, None] * a, axis=1)
        return sw * (np.sqrt((rho - R) ** 2 + h * h) - r)

    x = levenberg_marquardt(resid, np.r_[c0, 0.0, 0.0, R0, r0])
    R = abs(x[5])
    r = min(abs(x[6]), 0.95 * R)
    return Torus(x[:3], _tangent_axis(a0, x[3], x[4], t1, t2), R, max(r, 1e-9))


def _ellipse_algebraic(xy, weights):
    """Fitzgibbon direct ellipse fit; returns (center, a, b, phi)."""
    x, y = xy[:, 0], xy[:, 1]
    sw = np.sqrt(weights)
    D1 = np.column_stack([x * x, x * y, y * y]) * sw[:, None]
    D2 = np.column_stack([x, y, np.ones(len(x))]) * sw[:, None]
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    try:
        T = -np.linalg.solve(S3, S2.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError("ellipse fit scatter matrix is singular") from exc
    M = S1 + S2 @ T
    C = np.array([[0.0, 0.0, 2.0], [0.0, -1.0, 0.0], [2.0, 0.0, 0.0]])
    vals, vecs = np.linalg.eig(np.linalg.solve(C, M))
    best = None
    for i in range(3):
        v = np.real(vecs[:, i])
        cond = 4 * v[0] * v[2] - v[1] ** 2
        if cond > 1e-14:
            best = v / math.sqrt(cond)
    if best is None:
        raise DegenerateGeometryError("no ellipse satisfies the algebraic constraint")
    if best[0] + best[2] < 0:  # normalize the overall conic sign
        best = -best
    A, B, Cc = best
    D, E, F = T @ best
    # conic A x^2 + B xy + C y^2 + D x + E y + F = 0 -> geometric parameters
    M0 = np.array([[A, B / 2], [B / 2, Cc]])
    center = np.linalg.solve(2 * M0, -np.array([D, E]))
    mu = center @ M0 @ center - F
    vals2, vecs2 = np.linalg.eigh(M0)
    if (vals2 <= 0).any() or mu <= 0:
        raise DegenerateGeometryError("degenerate ellipse parameters")
    axes = np.sqrt(mu / vals2)
    order = np.argsort(-axes)
    a, b = axes[order]
    major = vecs2[:, order[0]]
    phi = math.atan2(major[1], major[0])
    return center, float(a), float(b), phi


def _ellipse_planar_distance(xy, cx, cy, a, b, phi):
    c, s = math.cos(phi), math.sin(phi)
    u = (xy[:, 0] - cx) * c + (xy[:, 1] - cy) * s
    v = -(xy[:, 0] - cx) * s + (xy[:, 1] - cy) * c
    t = np.arctan2(v * a, u * b)
    for _ in range(20):
        ct, st = np.cos(t), np.sin(t)
        ex, ey = a * ct, b * st
        dx, dy = -a * st, b * ct
        g = (ex - u) * dx + (ey - v) * dy
        hc = dx * dx + dy * dy + (ex - u) * (-a * ct) + (ey - v) * (-b * st)
        t = t - np.clip(np.where(np.abs(hc) > 1e-14, g / np.where(hc == 0, 1, hc), 0.0), -0.5, 0.5)
    return np.sqrt((u - a * np.cos(t)) ** 2 + (v - b * np.sin(t)) ** 2)


def fit_ellipse(points, weights, init=None):
    plane = fit_plane(points, weights)
    n = plane.normal
    if isinstance(init, Ellipse3):
        n = init.normal if init.normal @ n > 0 else -init.normal
    u, v = perpendicular_frame(n)
    mu = (weights / weights.sum()) @ points
    xy = np.column_stack([(points - mu) @ u, (points - mu) @ v])
    hz = (points - mu) @ n
    center2, a0, b0, phi0 = _ellipse_algebraic(xy, weights)
    sw = np.sqrt(weights)

    def resid(x):
        cx, cy, a, b, phi = x
        a, b = max(abs(a), 1e-6), max(abs(b), 1e-6)
        return np.concatenate(
            [sw * _ellipse_planar_distance(xy, cx, cy, a, b, phi), sw * hz]
        )

    x = levenberg_marquardt(resid, np.array([center2[0], center2[1], a0, b0, phi0]))
    cx, cy, a, b, phi = x
    a, b = abs(a), abs(b)
    c3 = mu + cx * u + cy * v
    major3 = math.cos(phi) * u + math.sin(phi) * v
    minor3 = -math.sin(phi) * u + math.cos(phi) * v
    return Ellipse3(c3, a * major3, b * minor3)


# ---------------------------------------------------------------------------
# spline least squares


def fit_spline_curve(targets, params, weights, closed, n_control=None):
    """LS cubic spline through (param, target) pairs; Bezier when open."""
    targets = np.asarray(targets, dtype=float)
    if n_control is None:
        n_control = 8 if closed else 4
    probe = BSplineCurve(np.zeros((n_control, 3)), closed)
    A = probe.basis(np.asarray(params, dtype=float))
    sw = np.sqrt(np.asarray(weights, dtype=float))
    Aw = A * sw[:, None]
    bw = targets * sw[:, None]
    H = Aw.T @ Aw + 1e-10 * np.eye(n_control)
    ctrl = np.linalg.solve(H, Aw.T @ bw)
    return BSplineCurve(ctrl, closed)


def fit_spline_patch(targets, uv_params, weights, u_closed, shape=None):
    """LS bicubic patch through ((u,v), target) pairs; periodic in u if closed."""
    targets = np.asarray(targets, dtype=float)
    uv = np.asarray(uv_params, dtype=float)
    if shape is None:
        shape = (4, 8) if u_closed else (4, 4)
    mv, mu = shape
    probe = BSplinePatch(np.zeros((mv, mu, 3)), u_closed)
    bu = probe.basis_u(uv[:, 0])
    bv = probe.basis_v(uv[:, 1])
    A = np.einsum("ni,nj->nij", bv, bu).reshape(len(uv), mv * mu)
    sw = np.sqrt(np.asarray(weights, dtype=float))
    Aw = A * sw[:, None]
    bw = targets * sw[:, None]
    H = Aw.T @ Aw + 1e-10 * np.eye(mv * mu)
    ctrl = np.linalg.solve(H, Aw.T @ bw).reshape(mv, mu, 3)
    return BSplinePatch(ctrl, u_closed)


# ---------------------------------------------------------------------------
# dispatcher


def fit_primitive(kind, problem: FittingProblem):
    """Fit one typed primitive to the weighted targets of a FittingProblem.

    Raises DegenerateGeometryError when the configuration cannot determine
    the requested kind; otherwise returns the best iterate found.
    """
    points, weights = problem.stacked()
    need = _MIN_POINTS.get(kind)
    if need is not None and len(points) < need:
        raise DegenerateGeometryError(
            f"{kind} fit needs at least {need} points, got {len(points)}"
        )
    if kind == "plane":
        return fit_plane(points, weights)
    if kind == "line":
        return fit_line(points, weights)
    if kind == "sphere":
        return fit_sphere(points, weights, init=problem.init)
    if kind == "circle":
        return fit_circle(points, weights, init=problem.init)
    if kind == "cylinder":
        return fit_cylinder(
            points, weights, axis=problem.axis, init=problem.init, normals=problem.normals
        )
    if kind == "cone":
        return fit_cone(
            points,
            weights,
            axis=problem.axis,
            axis_point=problem.axis_point,
            init=problem.init,
            normals=problem.normals,
        )
    if kind == "torus":
        return fit_torus(points, weights, init=problem.init)
    if kind == "ellipse":
        return fit_ellipse(points, weights, init=problem.init)
    raise ValueError(f"unknown primitive kind {kind!r}")
