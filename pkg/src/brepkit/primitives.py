"""Typed geometric primitives with exact projections.

Surface kinds: plane, sphere, cylinder, cone, torus, bspline patch.
Curve kinds: line, circle, ellipse, bspline curve.

Analytic kinds project in closed form.  Splines are cubic: open curves
are a 4-control-point clamped cubic (Bezier), closed curves a periodic
uniform cubic with 8 control points; patches are bicubic tensor products,
periodic in u (8x4 control net) when u-closed and 4x4 otherwise.  Spline
projection seeds from a dense sample and refines by Newton iteration on
the parameter(s).
"""

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def perpendicular_frame(axis):
    """Deterministic orthonormal (u, v) spanning the plane perpendicular to axis."""
    a = unit(axis)
    seed = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = unit(np.cross(a, seed))
    v = np.cross(a, u)
    return u, v


def _pts(points):
    return np.atleast_2d(np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# surface primitives


@dataclass(frozen=True)
class Plane:
    normal: np.ndarray
    offset: float  # plane is {x : normal . x = offset}

    def __post_init__(self):
        object.__setattr__(self, "normal", unit(self.normal))
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distances(self, points):
        return _pts(points) @ self.normal - self.offset

    def project(self, points):
        p = _pts(points)
        s = p @ self.normal - self.offset
        return p - s[:, None] * self.normal, np.abs(s)

    def to_dict(self):
        return {"kind": "plane", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def project(self, points):
        p = _pts(points)
        v = p - self.center
        n = np.linalg.norm(v, axis=1)
        dirs = np.where(n[:, None] > 1e-12, v / np.maximum(n, 1e-12)[:, None], [1.0, 0.0, 0.0])
        feet = self.center + self.radius * dirs
        return feet, np.abs(n - self.radius)

    def to_dict(self):
        return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class Cylinder:
    axis_point: np.ndarray
    axis: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "axis_point", np.asarray(self.axis_point, dtype=float))
        object.__setattr__(self, "axis", unit(self.axis))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")

    def _decompose(self, points):
        v = _pts(points) - self.axis_point
        h = v @ self.axis
        radial = v - h[:, None] * self.axis
        rho = np.linalg.norm(radial, axis=1)
        return h, radial, rho

    def project(self, points):
        h, radial, rho = self._decompose(points)
        u0, _ = perpendicular_frame(self.axis)
        dirs = np.where(rho[:, None] > 1e-12, radial / np.maximum(rho, 1e-12)[:, None], u0)
        feet = self.axis_point + h[:, None] * self.axis + self.radius * dirs
        return feet, np.abs(rho - self.radius)

    def to_dict(self):
        return {
            "kind": "cylinder",
            "axis_point": self.axis_point.tolist(),
            "axis": self.axis.tolist(),
            "radius": self.radius,
        }


@dataclass(frozen=True)
class Cone:
    apex: np.ndarray
    axis: np.ndarray  # points from the apex into the cone opening
    half_angle: float

    def __post_init__(self):
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float))
        object.__setattr__(self, "axis", unit(self.axis))
        object.__setattr__(self, "half_angle", float(self.half_angle))
        if not 0 < self.half_angle < np.pi / 2:
            raise ValueError("cone half-angle must lie in (0, pi/2)")

    def project(self, points):
        p = _pts(points)
        v = p - self.apex
        h = v @ self.axis
        radial = v - h[:, None] * self.axis
        rho = np.linalg.norm(radial, axis=1)
        u0, _ = perpendicular_frame(self.axis)
        dirs = np.where(rho[:, None] > 1e-12, radial / np.maximum(rho, 1e-12)[:, None], u0)
        ca, sa = np.cos(self.half_angle), np.sin(self.half_angle)
        # 2D projection in the (axis, radial) half-plane onto the ray (t*ca, t*sa)
        t = h * ca + rho * sa
        behind = t < 0
        t = np.maximum(t, 0.0)
        feet = self.apex + (t * ca)[:, None] * self.axis + (t * sa)[:, None] * dirs
        dist = np.abs(rho * ca - h * sa)
        dist[behind] = np.hypot(h[behind], rho[behind])
        return feet, dist

    def to_dict(self):
        return {
            "kind": "cone",
            "apex": self.apex.tolist(),
            "axis": self.axis.tolist(),
            "half_angle": self.half_angle,
        }


@dataclass(frozen=True)
class Torus:
    center: np.ndarray
    axis: np.ndarray
    major_radius: float
    minor_radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "axis", unit(self.axis))
        object.__setattr__(self, "major_radius", float(self.major_radius))
        object.__setattr__(self, "minor_radius", float(self.minor_radius))
        if not 0 < self.minor_radius < self.major_radius:
            raise ValueError("torus needs major_radius > minor_radius > 0")

    def project(self, points):
        p = _pts(points)
        v = p - self.center
        h = v @ self.axis
        radial = v - h[:, None] * self.axis
        rho = np.linalg.norm(radial, axis=1)
        u0, _ = perpendicular_frame(self.axis)
        dirs = np.where(rho[:, None] > 1e-12, radial / np.maximum(rho, 1e-12)[:, None], u0)
        spine = self.center + self.major_radius * dirs
        w = p - spine
        wn = np.linalg.norm(w, axis=1)
        wdirs = np.where(wn[:, None] > 1e-12, w / np.maximum(wn, 1e-12)[:, None], dirs)
        feet = spine + self.minor_radius * wdirs
        return feet, np.abs(wn - self.minor_radius)

    def to_dict(self):
        return {
            "kind": "torus",
            "center": self.center.tolist(),
            "axis": self.axis.tolist(),
            "major_radius": self.major_radius,
            "minor_radius": self.minor_radius,
        }


# ---------------------------------------------------------------------------
# curve primitives


@dataclass(frozen=True)
class Line:
    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "direction", unit(self.direction))

    def project(self, points):
        v = _pts(points) - self.point
        t = v @ self.direction
        feet = self.point + t[:, None] * self.direction
        return feet, np.linalg.norm(_pts(points) - feet, axis=1)

    def to_dict(self):
        return {"kind": "line", "point": self.point.tolist(), "direction": self.direction.tolist()}


@dataclass(frozen=True)
class Circle3:
    center: np.ndarray
    normal: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", unit(self.normal))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")

    def project(self, points):
        p = _pts(points)
        v = p - self.center
        h = v @ self.normal
        radial = v - h[:, None] * self.normal
        rho = np.linalg.norm(radial, axis=1)
        u0, _ = perpendicular_frame(self.normal)
        dirs = np.where(rho[:, None] > 1e-12, radial / np.maximum(rho, 1e-12)[:, None], u0)
        feet = self.center + self.radius * dirs
        return feet, np.sqrt(h * h + (rho - self.radius) ** 2)

    def to_dict(self):
        return {
            "kind": "circle",
            "center": self.center.tolist(),
            "normal": self.normal.tolist(),
            "radius": self.radius,
        }


@dataclass(frozen=True)
class Ellipse3:
    """Planar ellipse given by center and two orthogonal semi-axis vectors."""

    center: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "axis_u", np.asarray(self.axis_u, dtype=float))
        object.__setattr__(self, "axis_v", np.asarray(self.axis_v, dtype=float))
        if np.linalg.norm(self.axis_u) <= 0 or np.linalg.norm(self.axis_v) <= 0:
            raise ValueError("ellipse semi-axes must be nonzero")

    @property
    def normal(self):
        return unit(np.cross(self.axis_u, self.axis_v))

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        return (
            self.center
            + np.cos(theta)[..., None] * self.axis_u
            + np.sin(theta)[..., None] * self.axis_v
        )

    def project(self, points):
        # Newton on the parametric angle, seeded from a dense sampling.
        p = _pts(points)
        a = np.linalg.norm(self.axis_u)
        b = np.linalg.norm(self.axis_v)
        ua, vb = self.axis_u / a, self.axis_v / b
        x = (p - self.center) @ ua
        y = (p - self.center) @ vb
        n = self.normal
        hz = (p - self.center) @ n
        seeds = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        d2 = (x[:, None] - a * np.cos(seeds)) ** 2 + (y[:, None] - b * np.sin(seeds)) ** 2
        t = seeds[np.argmin(d2, axis=1)]
        for _ in range(25):
            ct, st = np.cos(t), np.sin(t)
            ex, ey = a * ct, b * st
            dx, dy = -a * st, b * ct
            d2x, d2y = -a * ct, -b * st
            g = (ex - x) * dx + (ey - y) * dy
            h = dx * dx + dy * dy + (ex - x) * d2x + (ey - y) * d2y
            step = np.where(np.abs(h) > 1e-14, g / np.where(h == 0, 1.0, h), 0.0)
            t = t - np.clip(step, -0.5, 0.5)
        ct, st = np.cos(t), np.sin(t)
        feet = self.center + (a * ct)[:, None] * ua + (b * st)[:, None] * vb
        planar = np.sqrt((x - a * ct) ** 2 + (y - b * st) ** 2)
        return feet, np.sqrt(planar**2 + hz**2)

    def to_dict(self):
        return {
            "kind": "ellipse",
            "center": self.center.tolist(),
            "axis_u": self.axis_u.tolist(),
            "axis_v": self.axis_v.tolist(),
        }


# ---------------------------------------------------------------------------
# cubic splines

_BEZIER = np.array(
    [[1, 0, 0, 0], [-3, 3, 0, 0], [3, -6, 3, 0], [-1, 3, -3, 1]], dtype=float
)
_UNIFORM = np.array(
    [[1, 4, 1, 0], [-3, 0, 3, 0], [3, -6, 3, 0], [-1, 3, -3, 1]], dtype=float
) / 6.0


def _power_rows(u, deriv):
    u = np.asarray(u, dtype=float)
    if deriv == 0:
        return np.stack([np.ones_like(u), u, u * u, u**3], axis=-1)
    if deriv == 1:
        return np.stack([np.zeros_like(u), np.ones_like(u), 2 * u, 3 * u * u], axis=-1)
    return np.stack([np.zeros_like(u), np.zeros_like(u), np.full_like(u, 2.0), 6 * u], axis=-1)


def bezier_rows(t, deriv=0):
    """Design-matrix rows of the clamped cubic (Bezier) basis at params t."""
    rows = _power_rows(np.clip(t, 0.0, 1.0), deriv) @ _BEZIER
    return rows


def periodic_rows(t, m, deriv=0):
    """Design-matrix rows of the m-point periodic uniform cubic basis at t in [0,1)."""
    t = np.mod(np.asarray(t, dtype=float), 1.0)
    s = t * m
    j = np.floor(s).astype(int) % m
    u = s - np.floor(s)
    local = _power_rows(u, deriv) @ _UNIFORM
    if deriv:  # chain rule for the segment reparameterization s = m * t
        local = local * (m**deriv)
    rows = np.zeros(t.shape + (m,))
    idx = (j[..., None] + np.arange(-1, 3)) % m
    np.put_along_axis(rows, idx, local, axis=-1)
    return rows


@dataclass(frozen=True)
class BSplineCurve:
    control_points: np.ndarray  # (4,3) open / (8,3) closed
    closed: bool = False

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[1] != 3 or cp.shape[0] < 4:
            raise StructuralError("spline curve needs an (m>=4, 3) control polygon")
        if not np.isfinite(cp).all():
            raise StructuralError("spline control points must be finite")
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "closed", bool(self.closed))

    def basis(self, t, deriv=0):
        if self.closed:
            return periodic_rows(t, self.control_points.shape[0], deriv)
        return bezier_rows(t, deriv)

    def evaluate(self, t):
        return self.basis(t) @ self.control_points

    def project(self, points):
        p = _pts(points)
        seeds = np.linspace(0, 1, 256, endpoint=self.closed is False)
        samp = self.evaluate(seeds)
        d = np.linalg.norm(p[:, None, :] - samp[None], axis=2)
        t = seeds[np.argmin(d, axis=1)]
        for _ in range(20):
            c = self.basis(t) @ self.control_points
            dc = self.basis(t, 1) @ self.control_points
            d2c = self.basis(t, 2) @ self.control_points
            r = c - p
            g = np.einsum("nd,nd->n", r, dc)
            h = np.einsum("nd,nd->n", dc, dc) + np.einsum("nd,nd->n", r, d2c)
            step = np.where(np.abs(h) > 1e-14, g / np.where(h == 0, 1.0, h), 0.0)
            t = t - np.clip(step, -0.05, 0.05)
            t = np.mod(t, 1.0) if self.closed else np.clip(t, 0.0, 1.0)
        feet = self.evaluate(t)
        return feet, np.linalg.norm(p - feet, axis=1)

    def to_dict(self):
        return {
            "kind": "bspline_curve",
            "control_points": self.control_points.tolist(),
            "closed": self.closed,
        }


@dataclass(frozen=True)
class BSplinePatch:
    control_grid: np.ndarray  # (mv, mu, 3); v clamped cubic, u clamped or periodic
    u_closed: bool = False

    def __post_init__(self):
        cg = np.asarray(self.control_grid, dtype=float)
        if cg.ndim != 3 or cg.shape[2] != 3 or cg.shape[0] < 4 or cg.shape[1] < 4:
            raise StructuralError("spline patch needs an (mv>=4, mu>=4, 3) control grid")
        if not np.isfinite(cg).all():
            raise StructuralError("spline control grid must be finite")
        object.__setattr__(self, "control_grid", cg)
        object.__setattr__(self, "u_closed", bool(self.u_closed))

    def basis_u(self, u, deriv=0):
        if self.u_closed:
            return periodic_rows(u, self.control_grid.shape[1], deriv)
        return bezier_rows(u, deriv)

    def basis_v(self, v, deriv=0):
        return bezier_rows(v, deriv)

    def evaluate(self, v, u):
        """Evaluate at paired parameter arrays (v along axis 0, u along axis 1)."""
        bv = self.basis_v(v)
        bu = self.basis_u(u)
        return np.einsum("ni,nj,ijd->nd", bv, bu, self.control_grid)

    def evaluate_grid(self, v, u):
        bv = self.basis_v(v)
        bu = self.basis_u(u)
        return np.einsum("ai,bj,ijd->abd", bv, bu, self.control_grid)

    def _wrap(self, v, u):
        v = np.clip(v, 0.0, 1.0)
        u = np.mod(u, 1.0) if self.u_closed else np.clip(u, 0.0, 1.0)
        return v, u

    def project(self, points):
        p = _pts(points)
        k = 24
        vs = np.linspace(0, 1, k)
        us = np.linspace(0, 1, k, endpoint=self.u_closed is False)
        samp = self.evaluate_grid(vs, us).reshape(-1, 3)
        d = np.linalg.norm(p[:, None, :] - samp[None], axis=2)
        best = np.argmin(d, axis=1)
        v = vs[best // len(us)]
        u = us[best % len(us)]
        for _ in range(20):
            s = self.evaluate(v, u)
            su = np.einsum("ni,nj,ijd->nd", self.basis_v(v), self.basis_u(u, 1), self.control_grid)
            sv = np.einsum("ni,nj,ijd->nd", self.basis_v(v, 1), self.basis_u(u), self.control_grid)
            suu = np.einsum("ni,nj,ijd->nd", self.basis_v(v), self.basis_u(u, 2), self.control_grid)
            svv = np.einsum("ni,nj,ijd->nd", self.basis_v(v, 2), self.basis_u(u), self.control_grid)
            suv = np.einsum("ni,nj,ijd->nd", self.basis_v(v, 1), self.basis_u(u, 1), self.control_grid)
            r = s - p
            gu = np.einsum("nd,nd->n", r, su)
            gv = np.einsum("nd,nd->n", r, sv)
            huu = np.einsum("nd,nd->n", su, su) + np.einsum("nd,nd->n", r, suu)
            hvv = np.einsum("nd,nd->n", sv, sv) + np.einsum("nd,nd->n", r, svv)
            huv = np.einsum("nd,nd->n", su, sv) + np.einsum("nd,nd->n", r, suv)
            det = huu * hvv - huv * huv
            ok = np.abs(det) > 1e-14
            du = np.where(ok, (gu * hvv - gv * huv) / np.where(det == 0, 1.0, det), 0.0)
            dv = np.where(ok, (gv * huu - gu * huv) / np.where(det == 0, 1.0, det), 0.0)
            u = u - np.clip(du, -0.05, 0.05)
            v = v - np.clip(dv, -0.05, 0.05)
            v, u = self._wrap(v, u)
        feet = self.evaluate(v, u)
        return feet, np.linalg.norm(p - feet, axis=1)

    def to_dict(self):
        return {
            "kind": "bspline_patch",
            "control_grid": self.control_grid.tolist(),
            "u_closed": self.u_closed,
        }


_KINDS = {
    "plane": lambda d: Plane(d["normal"], d["offset"]),
    "sphere": lambda d: Sphere(d["center"], d["radius"]),
    "cylinder": lambda d: Cylinder(d["axis_point"], d["axis"], d["radius"]),
    "cone": lambda d: Cone(d["apex"], d["axis"], d["half_angle"]),
    "torus": lambda d: Torus(d["center"], d["axis"], d["major_radius"], d["minor_radius"]),
    "line": lambda d: Line(d["point"], d["direction"]),
    "circle": lambda d: Circle3(d["center"], d["normal"], d["radius"]),
    "ellipse": lambda d: Ellipse3(d["center"], d["axis_u"], d["axis_v"]),
    "bspline_curve": lambda d: BSplineCurve(d["control_points"], d["closed"]),
    "bspline_patch": lambda d: BSplinePatch(d["control_grid"], d["u_closed"]),
}


def primitive_from_dict(d):
    kind = d.get("kind")
    if kind not in _KINDS:
        raise StructuralError(f"unknown primitive kind {kind!r}")
    return _KINDS[kind](d)
