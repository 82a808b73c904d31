"""B-Rep chain complex data model and its structural validity checks.

A complex holds three graded element groups (corners / curves / patches,
a.k.a. vertices / edges / faces) plus binary adjacency matrices FE, EV, FV
encoding the boundary operators.  Orientation is deliberately not modeled;
all matrices are plain 0/1 incidence.

Validity of the topology is captured by three equation systems over the
incidence data:

    manifoldness   sum_i FE[i,j] = 2            for every edge j
    endpoints      sum_j EV[i,j] = 2*O[i]       for every edge i
    loop closure   (FE @ EV)[i,k] = 2*FV[i,k]   for every face/vertex pair

where O[i] is 1 for an open edge and 0 for a closed loop.  Every element
stored in a ChainComplex exists by definition, so the existence vectors
are implicitly all ones.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StructuralError

CURVE_TYPES = ("line", "circle", "bspline", "ellipse")
PATCH_TYPES = ("plane", "cylinder", "torus", "bspline", "cone", "sphere")

#: samples per curve and per patch grid axis
K_CURVE = 30
K_PATCH = 10


def _freeze(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


def _freeze_binary(m, shape, name):
    m = np.asarray(m)
    if m.shape != shape:
        raise StructuralError(f"{name} has shape {m.shape}, expected {shape}")
    if not np.isin(m, (0, 1)).all():
        raise StructuralError(f"{name} must be a 0/1 matrix")
    m = np.ascontiguousarray(m.astype(np.int64))
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Corner:
    """A 0th-order element: a single 3D point."""

    point: np.ndarray

    def __post_init__(self):
        p = _freeze(self.point)
        if p.shape != (3,):
            raise StructuralError(f"corner point has shape {p.shape}")
        if not np.isfinite(p).all():
            raise StructuralError("corner point has non-finite coordinates")
        object.__setattr__(self, "point", p)


@dataclass(frozen=True)
class Curve:
    """A 1st-order element: 30 ordered samples plus type and openness.

    ``closed`` curves are sampled at 30 parameters in [0,1) without a
    duplicated endpoint, so cyclic rolls act as exact symmetries; open
    curves include both endpoints.
    """

    points: np.ndarray
    closed: bool = False
    curve_type: str = "bspline"
    primitive: Optional[object] = None

    def __post_init__(self):
        pts = _freeze(self.points)
        if pts.shape != (K_CURVE, 3):
            raise StructuralError(f"curve samples have shape {pts.shape}, expected ({K_CURVE}, 3)")
        if not np.isfinite(pts).all():
            raise StructuralError("curve samples have non-finite coordinates")
        if self.curve_type not in CURVE_TYPES:
            raise StructuralError(f"unknown curve type {self.curve_type!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "closed", bool(self.closed))


@dataclass(frozen=True)
class Patch:
    """A 2nd-order element: a 10x10 sample grid plus type and u-closedness.

    Grid axis 0 runs along v, axis 1 along u; a u-closed patch wraps in u
    with 10 samples covering one period (no duplicated seam column).
    """

    grid: np.ndarray
    u_closed: bool = False
    patch_type: str = "bspline"
    primitive: Optional[object] = None
    region: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        g = _freeze(self.grid)
        if g.shape != (K_PATCH, K_PATCH, 3):
            raise StructuralError(f"patch grid has shape {g.shape}, expected ({K_PATCH}, {K_PATCH}, 3)")
        if not np.isfinite(g).all():
            raise StructuralError("patch grid has non-finite coordinates")
        if self.patch_type not in PATCH_TYPES:
            raise StructuralError(f"unknown patch type {self.patch_type!r}")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "u_closed", bool(self.u_closed))


@dataclass(frozen=True)
class ChainComplex:
    """Definite B-Rep structure: elements plus FE/EV/FV incidence matrices."""

    vertices: tuple
    edges: tuple
    faces: tuple
    fe: np.ndarray
    ev: np.ndarray
    fv: np.ndarray

    def __post_init__(self):
        vs = tuple(self.vertices)
        es = tuple(self.edges)
        fs = tuple(self.faces)
        nv, ne, nf = len(vs), len(es), len(fs)
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)
        object.__setattr__(self, "faces", fs)
        object.__setattr__(self, "fe", _freeze_binary(self.fe, (nf, ne), "FE"))
        object.__setattr__(self, "ev", _freeze_binary(self.ev, (ne, nv), "EV"))
        object.__setattr__(self, "fv", _freeze_binary(self.fv, (nf, nv), "FV"))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    def openness(self):
        """O vector: 1 for open edges, 0 for closed loops."""
        return np.array([0 if e.closed else 1 for e in self.edges], dtype=np.int64)

    def corner_points(self):
        if not self.vertices:
            return np.zeros((0, 3))
        return np.stack([v.point for v in self.vertices])


def topology_residuals(c: ChainComplex):
    """Mean absolute residual of each validity equation system.

    Returns (r_manifold, r_endpoint, r_closure), each normalized by its
    number of equations (all edge rows count for the endpoint system,
    closed ones included).  Empty systems have residual zero.
    """
    o = c.openness()
    if c.n_edges:
        r_manifold = float(np.abs(c.fe.sum(axis=0) - 2).mean())
        r_endpoint = float(np.abs(c.ev.sum(axis=1) - 2 * o).mean())
    else:
        r_manifold = 0.0
        r_endpoint = 0.0
    n_pairs = c.n_faces * c.n_vertices
    if n_pairs:
        r_closure = float(np.abs(c.fe @ c.ev - 2 * c.fv).mean())
    else:
        r_closure = 0.0
    return r_manifold, r_endpoint, r_closure


def check_dependencies(c: ChainComplex) -> bool:
    """Unary/binary dependency inequalities between existence and adjacency.

    Every face needs at least one boundary edge, except a u-closed face
    whose FE row is entirely zero (a seamless closed patch such as a full
    sphere).  Every vertex needs at least one incident edge.  The left
    inequalities (FE <= F, EV <= V) hold trivially here since all stored
    elements exist.
    """
    for i, face in enumerate(c.faces):
        if c.fe.shape[1] == 0 or c.fe[i].sum() == 0:
            if not face.u_closed:
                return False
    for j in range(c.n_vertices):
        if c.ev.shape[0] == 0 or c.ev[:, j].sum() == 0:
            return False
    return True


def is_valid_topology(c: ChainComplex) -> bool:
    """True iff all three residuals are exactly zero and dependencies hold."""
    return topology_residuals(c) == (0.0, 0.0, 0.0) and check_dependencies(c)
