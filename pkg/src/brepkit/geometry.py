"""Sampled-geometry distances shared by matching, extraction and metrics.

Curve and patch distances minimize over an enumerated alignment group:
flips (plus cyclic rolls for closed elements) for curves, grid axis
reversals (plus 2D rolls for u-closed patches) for patches.  Enumeration
is exhaustive -- at most 60 candidates for curves and 400 for patches --
so the minima are exact.
"""

import numpy as np

from .complexes import K_CURVE, K_PATCH


def vertex_distance(p, q) -> float:
    """Squared distance between two corner points."""
    d = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    return float(d @ d)


def curve_alignments(b, closed):
    """All enumerated alignments of a (30,3) curve sample array.

    Open curves: identity and reversal.  Closed curves additionally get
    every cyclic roll of both, 60 candidates total.
    """
    b = np.asarray(b, dtype=float)
    base = np.stack([b, b[::-1]])
    if not closed:
        return base
    k = b.shape[0]
    rolled = np.stack([np.roll(base, i, axis=1) for i in range(k)])
    return rolled.reshape(-1, k, 3)


def curve_distance(a, b, b_closed=False) -> float:
    """Min over alignments of the mean squared per-sample distance."""
    a = np.asarray(a, dtype=float)
    cands = curve_alignments(b, b_closed)
    diffs = cands - a[None]
    costs = np.einsum("nkd,nkd->n", diffs, diffs) / a.shape[0]
    return float(costs.min())


def patch_alignments(b, u_closed):
    """All enumerated alignments of a (10,10,3) patch grid.

    Axis reversals always (4 variants); u-closed patches additionally
    roll along both grid axes, 400 candidates total.
    """
    b = np.asarray(b, dtype=float)
    flips = [b, b[::-1, :], b[:, ::-1], b[::-1, ::-1]]
    if not u_closed:
        return np.stack(flips)
    k = b.shape[0]
    out = []
    for f in flips:
        for i in range(k):
            fi = np.roll(f, i, axis=0)
            for j in range(k):
                out.append(np.roll(fi, j, axis=1))
    return np.stack(out)


def patch_distance(a, b, b_u_closed=False) -> float:
    """Min over alignments of the mean squared per-sample grid distance."""
    a = np.asarray(a, dtype=float)
    cands = patch_alignments(b, b_u_closed)
    diffs = cands.reshape(cands.shape[0], -1, 3) - a.reshape(1, -1, 3)
    costs = np.einsum("nkd,nkd->n", diffs, diffs) / (a.shape[0] * a.shape[1])
    return float(costs.min())


def pairwise_distances(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))


def proximity(a_points, b_points) -> float:
    """Mean over a's samples of the distance to the nearest sample of b.

    a is the lower-order element (corner -> curve -> patch ordering).
    """
    d = pairwise_distances(a_points, b_points)
    return float(d.min(axis=1).mean())


def fitness_score(d, eps=0.1):
    """Adjacency fitness exp(-d^2/eps^2) in (0,1]; eps sets the fall-off."""
    d = np.asarray(d, dtype=float)
    out = np.exp(-(d * d) / (eps * eps))
    return float(out) if out.ndim == 0 else out


def chamfer_distance(a, b) -> float:
    """Symmetric chamfer: average of the two directed mean-min distances."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("chamfer_distance requires two nonempty point sets")
    d = pairwise_distances(a, b)
    return float(0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean()))


def curve_param_grid(closed, k=K_CURVE):
    """Curve sample parameters: [0,1] inclusive when open, [0,1) when closed."""
    if closed:
        return np.arange(k) / k
    return np.arange(k) / (k - 1)


def patch_param_grid(u_closed, k=K_PATCH):
    """(v_params, u_params) for a sample grid; u wraps when u-closed."""
    v = np.arange(k) / (k - 1)
    u = np.arange(k) / k if u_closed else np.arange(k) / (k - 1)
    return v, u
