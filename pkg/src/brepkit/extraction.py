"""Soft network-output model and its conversion to a definite chain complex.

The pipeline: non-maximum suppression on the raw predictions, combination
of validness into the conditional adjacency probabilities, proximity
fitness matrices, then an integer linear program whose feasible set is
exactly the valid chain complexes over the surviving candidates.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .complexes import (
    CURVE_TYPES,
    K_CURVE,
    K_PATCH,
    PATCH_TYPES,
    ChainComplex,
    Corner,
    Curve,
    Patch,
)
from .errors import ExtractionError, StructuralError
from .geometry import chamfer_distance, fitness_score, pairwise_distances
from .ilp import build_ilp
from .solver import solve_ilp


def _prob(x, name):
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0,1], got {x}")
    return x


def _dist(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise StructuralError(f"{name} must have shape ({n},)")
    if (x < -1e-12).any() or (x > 1 + 1e-12).any():
        raise ValueError(f"{name} entries must lie in [0,1]")
    if abs(x.sum() - 1.0) > 1e-6:
        raise ValueError(f"{name} must sum to 1")
    x = np.clip(x, 0.0, 1.0)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class SoftCorner:
    validness: float
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "validness", _prob(self.validness, "corner validness"))
        p = np.asarray(self.point, dtype=float)
        if p.shape != (3,):
            raise StructuralError("soft corner point must be a 3-vector")
        p.setflags(write=False)
        object.__setattr__(self, "point", p)

    def sample_points(self):
        return self.point[None]


@dataclass(frozen=True)
class SoftCurve:
    validness: float
    open_prob: float
    type_probs: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "validness", _prob(self.validness, "curve validness"))
        object.__setattr__(self, "open_prob", _prob(self.open_prob, "curve openness"))
        object.__setattr__(self, "type_probs", _dist(self.type_probs, len(CURVE_TYPES), "curve type distribution"))
        p = np.asarray(self.points, dtype=float)
        if p.shape != (K_CURVE, 3):
            raise StructuralError(f"soft curve needs ({K_CURVE},3) samples")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def curve_type(self):
        return CURVE_TYPES[int(np.argmax(self.type_probs))]

    def sample_points(self):
        return self.points


@dataclass(frozen=True)
class SoftPatch:
    validness: float
    u_closed_prob: float
    type_probs: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "validness", _prob(self.validness, "patch validness"))
        object.__setattr__(self, "u_closed_prob", _prob(self.u_closed_prob, "patch u-closedness"))
        object.__setattr__(self, "type_probs", _dist(self.type_probs, len(PATCH_TYPES), "patch type distribution"))
        g = np.asarray(self.grid, dtype=float)
        if g.shape != (K_PATCH, K_PATCH, 3):
            raise StructuralError(f"soft patch needs ({K_PATCH},{K_PATCH},3) samples")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @property
    def patch_type(self):
        return PATCH_TYPES[int(np.argmax(self.type_probs))]

    def sample_points(self):
        return self.grid.reshape(-1, 3)


def _soft_matrix(m, shape, name):
    m = np.asarray(m, dtype=float)
    if m.shape != shape:
        raise StructuralError(f"{name} has shape {m.shape}, expected {shape}")
    if (m < -1e-12).any() or (m > 1 + 1e-12).any():
        raise ValueError(f"{name} entries must lie in [0,1]")
    m = np.clip(m, 0.0, 1.0)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class ProbabilisticComplex:
    """Soft chain complex: per-element probabilities plus soft adjacency."""

    corners: tuple
    curves: tuple
    patches: tuple
    fe: np.ndarray
    ev: np.ndarray
    fv: np.ndarray
    provenance: Optional[dict] = None

    def __post_init__(self):
        cs = tuple(self.corners)
        es = tuple(self.curves)
        fs = tuple(self.patches)
        object.__setattr__(self, "corners", cs)
        object.__setattr__(self, "curves", es)
        object.__setattr__(self, "patches", fs)
        nv, ne, nf = len(cs), len(es), len(fs)
        object.__setattr__(self, "fe", _soft_matrix(self.fe, (nf, ne), "FE"))
        object.__setattr__(self, "ev", _soft_matrix(self.ev, (ne, nv), "EV"))
        object.__setattr__(self, "fv", _soft_matrix(self.fv, (nf, nv), "FV"))

    @property
    def n_corners(self):
        return len(self.corners)

    @property
    def n_curves(self):
        return len(self.curves)

    @property
    def n_patches(self):
        return len(self.patches)

    def validness(self, group):
        items = getattr(self, group)
        return np.array([x.validness for x in items], dtype=float)


def combine_probabilities(p: ProbabilisticComplex) -> ProbabilisticComplex:
    """Fold element validness into the conditional adjacency matrices."""
    v = p.validness("corners")
    e = p.validness("curves")
    f = p.validness("patches")
    return replace(
        p,
        fe=p.fe * f[:, None] * e[None, :],
        ev=p.ev * e[:, None] * v[None, :],
        fv=p.fv * f[:, None] * v[None, :],
    )


def _rounded(m):
    return (np.asarray(m) >= 0.5).astype(np.int8)


def _nms_signature(p, group, idx):
    """(type key, rounded adjacency rows/cols) used for duplicate detection."""
    if group == "corners":
        return None, (_rounded(p.ev[:, idx]), _rounded(p.fv[:, idx]))
    if group == "curves":
        c = p.curves[idx]
        key = (int(np.argmax(c.type_probs)), int(c.open_prob >= 0.5))
        return key, (_rounded(p.fe[:, idx]), _rounded(p.ev[idx, :]))
    f = p.patches[idx]
    key = (int(np.argmax(f.type_probs)), int(f.u_closed_prob >= 0.5))
    return key, (_rounded(p.fe[idx, :]), _rounded(p.fv[idx, :]))


def nms(p: ProbabilisticComplex, chamfer_threshold=0.05) -> ProbabilisticComplex:
    """Suppress duplicate candidates (same type, same rounded topology,
    chamfer distance within threshold, both predicted valid).

    Retention order is descending validness with index as tiebreak; a
    suppressed element keeps its geometry but its validness and matrix
    rows/columns are zeroed.
    """
    fe = np.array(p.fe)
    ev = np.array(p.ev)
    fv = np.array(p.fv)
    suppressed = {"corners": set(), "curves": set(), "patches": set()}

    for group in ("corners", "curves", "patches"):
        items = getattr(p, group)
        vals = p.validness(group)
        order = np.argsort(-vals, kind="stable")
        retained = []
        for idx in order:
            idx = int(idx)
            if vals[idx] < 0.5:
                continue
            key, rows = _nms_signature(p, group, idx)
            geom = items[idx].sample_points()
            dup = False
            for rkey, rrows, rgeom in retained:
                if key != rkey:
                    continue
                if not all(np.array_equal(a, b) for a, b in zip(rows, rrows)):
                    continue
                if chamfer_distance(geom, rgeom) <= chamfer_threshold:
                    dup = True
                    break
            if dup:
                suppressed[group].add(idx)
            else:
                retained.append((key, rows, geom))

    corners = tuple(
        replace(c, validness=0.0) if i in suppressed["corners"] else c
        for i, c in enumerate(p.corners)
    )
    curves = tuple(
        replace(c, validness=0.0) if i in suppressed["curves"] else c
        for i, c in enumerate(p.curves)
    )
    patches = tuple(
        replace(c, validness=0.0) if i in suppressed["patches"] else c
        for i, c in enumerate(p.patches)
    )
    for i in suppressed["corners"]:
        ev[:, i] = 0.0
        fv[:, i] = 0.0
    for i in suppressed["curves"]:
        fe[:, i] = 0.0
        ev[i, :] = 0.0
    for i in suppressed["patches"]:
        fe[i, :] = 0.0
        fv[i, :] = 0.0
    return replace(p, corners=corners, curves=curves, patches=patches, fe=fe, ev=ev, fv=fv)


def proximity_matrices(p: ProbabilisticComplex, eps=0.1):
    """Adjacency fitness matrices (S_FE, S_EV, S_FV) from geometric proximity."""
    nf, ne, nv = p.n_patches, p.n_curves, p.n_corners
    corner_pts = (
        np.stack([c.point for c in p.corners]) if nv else np.zeros((0, 3))
    )
    s_fe = np.ones((nf, ne))
    s_ev = np.ones((ne, nv))
    s_fv = np.ones((nf, nv))
    for i, f in enumerate(p.patches):
        fpts = f.grid.reshape(-1, 3)
        for j, e in enumerate(p.curves):
            d = pairwise_distances(e.points, fpts).min(axis=1).mean()
            s_fe[i, j] = fitness_score(d, eps)
        if nv:
            d = pairwise_distances(corner_pts, fpts).min(axis=1)
            s_fv[i, :] = fitness_score(d, eps)
    for i, e in enumerate(p.curves):
        if nv:
            d = pairwise_distances(corner_pts, e.points).min(axis=1)
            s_ev[i, :] = fitness_score(d, eps)
    return s_fe, s_ev, s_fv


def assemble_chain_complex(p: ProbabilisticComplex, solution) -> ChainComplex:
    """Build the definite complex from a solved candidate assignment.

    ``solution`` is the dict produced by :func:`brepkit.ilp.decode_solution`:
    surviving original indices plus solved openness and adjacency.
    """
    corners = [Corner(p.corners[i].point) for i in solution["corners"]]
    curves = [
        Curve(
            p.curves[i].points,
            closed=not solution["open"][k],
            curve_type=p.curves[i].curve_type,
        )
        for k, i in enumerate(solution["curves"])
    ]
    patches = [
        Patch(
            p.patches[i].grid,
            u_closed=p.patches[i].u_closed_prob >= 0.5,
            patch_type=p.patches[i].patch_type,
        )
        for i in solution["patches"]
    ]
    return ChainComplex(
        vertices=corners,
        edges=curves,
        faces=patches,
        fe=solution["fe"],
        ev=solution["ev"],
        fv=solution["fv"],
    )


def extract_complex(
    p: ProbabilisticComplex,
    *,
    nms_chamfer=0.05,
    validness_cutoff=0.3,
    fitness_eps=0.1,
    topo_weight=0.5,
    unary_weight=10.0,
    pair_weight=1.0,
    time_limit=60.0,
    solver_method="auto",
) -> ChainComplex:
    """Full extraction: NMS, probability combination, proximity, ILP, assembly.

    If no candidate face survives the validness cutoff, the cutoff is
    relaxed to 0.1 once before giving up.
    """
    from .ilp import decode_solution

    q = nms(p, nms_chamfer)
    q = combine_probabilities(q)
    s = proximity_matrices(q, fitness_eps)

    cutoffs = [validness_cutoff]
    if validness_cutoff > 0.1:
        cutoffs.append(0.1)
    last_err = None
    for cutoff in cutoffs:
        try:
            model = build_ilp(
                q,
                s,
                w=topo_weight,
                validness_cutoff=cutoff,
                unary_weight=unary_weight,
                pair_weight=pair_weight,
            )
        except ExtractionError as err:
            last_err = err
            continue
        result = solve_ilp(model, time_limit=time_limit, method=solver_method)
        solution = decode_solution(model, result.assignment)
        return assemble_chain_complex(q, solution)
    raise last_err
