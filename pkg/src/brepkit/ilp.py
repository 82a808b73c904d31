"""Binary linear program model and its construction from soft predictions.

The combinatorial problem maximizes w*F_topo + (1-w)*F_geom over binary
existence/adjacency variables subject to the chain-complex validity
equations.  The two quadratic equation systems are linearized with
auxiliary binaries: Y[i] carries E[i]*O[i] (open-edge endpoints), and
Z[i,j,k] carries FE[i,j]*EV[j,k] so that sum_j Z[i,j,k] = 2*FV[i,k]
expresses loop closure.  All constraint coefficients are small integers,
so feasibility of an integer assignment can be checked exactly in floats.
"""

import numpy as np
from scipy import sparse

from .errors import ExtractionError, ParseError, SolverFailure


class IlpModel:
    """A 0/1 linear program: named binary variables, linear objective,
    linear equality/inequality constraints."""

    SENSES = ("<=", ">=", "==")

    def __init__(self):
        self.names = []
        self._objective = []
        self.constraints = []  # (coeffs dict var->coef, sense, rhs)
        self.meta = {}
        self._arrays = None

    # -- construction -------------------------------------------------

    def add_variable(self, name, objective=0.0):
        self.names.append(name)
        self._objective.append(float(objective))
        self._arrays = None
        return len(self.names) - 1

    def add_constraint(self, coeffs, sense, rhs):
        if sense not in self.SENSES:
            raise ValueError(f"unknown constraint sense {sense!r}")
        coeffs = {int(k): float(v) for k, v in coeffs.items() if v != 0.0}
        for k in coeffs:
            if not 0 <= k < len(self.names):
                raise ValueError(f"constraint references unknown variable {k}")
        self.constraints.append((coeffs, sense, float(rhs)))
        self._arrays = None

    @property
    def n_variables(self):
        return len(self.names)

    @property
    def objective(self):
        return np.asarray(self._objective, dtype=float)

    # -- evaluation ---------------------------------------------------

    def objective_value(self, x):
        return float(self.objective @ np.asarray(x, dtype=float))

    def arrays(self):
        """(c, A_ub, b_ub, A_eq, b_eq) with '>=' rows negated into '<='."""
        if self._arrays is None:
            n = self.n_variables
            ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
            for coeffs, sense, rhs in self.constraints:
                idx = list(coeffs.keys())
                val = list(coeffs.values())
                if sense == "==":
                    eq_rows.append((idx, val))
                    eq_rhs.append(rhs)
                elif sense == "<=":
                    ub_rows.append((idx, val))
                    ub_rhs.append(rhs)
                else:
                    ub_rows.append((idx, [-v for v in val]))
                    ub_rhs.append(-rhs)

            def build(rows):
                data, ri, ci = [], [], []
                for r, (idx, val) in enumerate(rows):
                    ri.extend([r] * len(idx))
                    ci.extend(idx)
                    data.extend(val)
                return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

            self._arrays = (
                self.objective,
                build(ub_rows),
                np.asarray(ub_rhs, dtype=float),
                build(eq_rows),
                np.asarray(eq_rhs, dtype=float),
            )
        return self._arrays

    def violations(self, x, tol=1e-9):
        """Indices of constraints violated by an assignment."""
        x = np.asarray(x, dtype=float)
        bad = []
        for i, (coeffs, sense, rhs) in enumerate(self.constraints):
            lhs = sum(c * x[k] for k, c in coeffs.items())
            if sense == "==" and abs(lhs - rhs) > tol:
                bad.append(i)
            elif sense == "<=" and lhs > rhs + tol:
                bad.append(i)
            elif sense == ">=" and lhs < rhs - tol:
                bad.append(i)
        return bad

    def check_assignment(self, x, tol=1e-9):
        return not self.violations(x, tol)

    # -- LP-format interchange -----------------------------------------

    def to_lp_string(self):
        """Serialize in CPLEX LP format (maximization, binary variables)."""
        out = ["\\ brepkit binary linear program", "Maximize"]
        obj = self.objective
        terms = _terms_string({i: obj[i] for i in range(len(obj)) if obj[i] != 0.0}, self.names)
        out.append(f" obj: {terms if terms else '0 ' + self.names[0] if self.names else '0'}")
        out.append("Subject To")
        for i, (coeffs, sense, rhs) in enumerate(self.constraints):
            op = {"<=": "<=", ">=": ">=", "==": "="}[sense]
            out.append(f" c{i}: {_terms_string(coeffs, self.names)} {op} {rhs:.17g}")
        out.append("Binary")
        for chunk in range(0, len(self.names), 8):
            out.append(" " + " ".join(self.names[chunk : chunk + 8]))
        out.append("End")
        return "\n".join(out) + "\n"

    def write_lp(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_lp_string())

    def parse_solution(self, text):
        """Parse an external solver solution: one ``name value`` pair per line.

        Lines starting with '#', '\\' or '*' are comments.  Unlisted
        variables default to 0; values must be within 1e-4 of an integer.
        """
        index = {n: i for i, n in enumerate(self.names)}
        x = np.zeros(self.n_variables, dtype=np.int64)
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line[0] in "#\\*":
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"solution line {ln}: expected 'name value', got {line!r}")
            name, value = parts
            if name not in index:
                raise ParseError(f"solution line {ln}: unknown variable {name!r}")
            try:
                v = float(value)
            except ValueError as exc:
                raise ParseError(f"solution line {ln}: bad value {value!r}") from exc
            if abs(v - round(v)) > 1e-4 or round(v) not in (0, 1):
                raise ParseError(f"solution line {ln}: {name} = {v} is not binary")
            x[index[name]] = int(round(v))
        if not self.check_assignment(x):
            raise SolverFailure("external solution violates model constraints")
        return x


def _terms_string(coeffs, names):
    parts = []
    for k in sorted(coeffs):
        c = coeffs[k]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if parts:
            parts.append(f"{sign} {mag:.17g} {names[k]}")
        else:
            parts.append(f"{'-' if c < 0 else ''}{mag:.17g} {names[k]}")
    return " ".join(parts)


def build_ilp(
    p,
    s_matrices,
    w=0.5,
    validness_cutoff=0.3,
    unary_weight=10.0,
    pair_weight=1.0,
):
    """Assemble the extraction ILP from a (combined) probabilistic complex.

    Candidates below the validness cutoff are dropped.  The objective is
    w * sum_X w_X (2*X~ - 1) . X over {F,E,V,O,FE,EV,FV} plus
    (1-w) * sum_X w_X (2*S_X - 1) . X over the adjacency variables.
    Raises ExtractionError when no candidate face survives the cutoff.
    """
    s_fe, s_ev, s_fv = s_matrices
    faces = [i for i, f in enumerate(p.patches) if f.validness >= validness_cutoff]
    edges = [j for j, e in enumerate(p.curves) if e.validness >= validness_cutoff]
    verts = [k for k, v in enumerate(p.corners) if v.validness >= validness_cutoff]
    if not faces:
        raise ExtractionError(
            "no candidate faces above the validness cutoff "
            f"({validness_cutoff})",
            hint="relax the validness cutoff (the reference remedy is 0.1)",
        )

    m = IlpModel()
    nf, ne, nv = len(faces), len(edges), len(verts)

    def unary(prob):
        return w * unary_weight * (2.0 * prob - 1.0)

    f_var = np.array(
        [m.add_variable(f"F_{i}", unary(p.patches[i].validness)) for i in faces], dtype=int
    )
    e_var = np.array(
        [m.add_variable(f"E_{j}", unary(p.curves[j].validness)) for j in edges], dtype=int
    )
    v_var = np.array(
        [m.add_variable(f"V_{k}", unary(p.corners[k].validness)) for k in verts], dtype=int
    )
    o_var = np.array(
        [m.add_variable(f"O_{j}", unary(p.curves[j].open_prob)) for j in edges], dtype=int
    )

    def pair(prob, s):
        return w * pair_weight * (2.0 * prob - 1.0) + (1.0 - w) * pair_weight * (2.0 * s - 1.0)

    fe_var = np.empty((nf, ne), dtype=int)
    for a, i in enumerate(faces):
        for b, j in enumerate(edges):
            fe_var[a, b] = m.add_variable(f"FE_{i}_{j}", pair(p.fe[i, j], s_fe[i, j]))
    ev_var = np.empty((ne, nv), dtype=int)
    for a, j in enumerate(edges):
        for b, k in enumerate(verts):
            ev_var[a, b] = m.add_variable(f"EV_{j}_{k}", pair(p.ev[j, k], s_ev[j, k]))
    fv_var = np.empty((nf, nv), dtype=int)
    for a, i in enumerate(faces):
        for b, k in enumerate(verts):
            fv_var[a, b] = m.add_variable(f"FV_{i}_{k}", pair(p.fv[i, k], s_fv[i, k]))
    y_var = np.array([m.add_variable(f"Y_{j}") for j in edges], dtype=int)
    z_var = np.empty((nf, ne, nv), dtype=int)
    for a, i in enumerate(faces):
        for b, j in enumerate(edges):
            for c, k in enumerate(verts):
                z_var[a, b, c] = m.add_variable(f"Z_{i}_{j}_{k}")

    # manifoldness: every existing edge borders exactly two faces
    for b in range(ne):
        coeffs = {int(fe_var[a, b]): 1.0 for a in range(nf)}
        coeffs[int(e_var[b])] = -2.0
        m.add_constraint(coeffs, "==", 0.0)

    # endpoint count via the Y = E*O linearization
    for b in range(ne):
        y, e, o = int(y_var[b]), int(e_var[b]), int(o_var[b])
        m.add_constraint({y: 1.0, e: -1.0}, "<=", 0.0)
        m.add_constraint({y: 1.0, o: -1.0}, "<=", 0.0)
        m.add_constraint({e: 1.0, o: 1.0, y: -1.0}, "<=", 1.0)
        coeffs = {int(ev_var[b, c]): 1.0 for c in range(nv)}
        coeffs[y] = -2.0
        m.add_constraint(coeffs, "==", 0.0)

    # loop closure via Z = FE*EV; FE @ EV = 2 FV row by row
    for a in range(nf):
        for c in range(nv):
            for b in range(ne):
                z = int(z_var[a, b, c])
                fe_ = int(fe_var[a, b])
                ev_ = int(ev_var[b, c])
                m.add_constraint({z: 1.0, fe_: -1.0}, "<=", 0.0)
                m.add_constraint({z: 1.0, ev_: -1.0}, "<=", 0.0)
                m.add_constraint({fe_: 1.0, ev_: 1.0, z: -1.0}, "<=", 1.0)
            coeffs = {int(z_var[a, b, c]): 1.0 for b in range(ne)}
            coeffs[int(fv_var[a, c])] = -2.0
            m.add_constraint(coeffs, "==", 0.0)

    # dependencies between adjacency and existence
    for a, i in enumerate(faces):
        for b in range(ne):
            m.add_constraint({int(fe_var[a, b]): 1.0, int(f_var[a]): -1.0}, "<=", 0.0)
        if p.patches[i].u_closed_prob < 0.5:
            # an open face cannot exist without boundary edges; u-closed
            # faces (seamless sphere-like patches) are exempt
            coeffs = {int(fe_var[a, b]): -1.0 for b in range(ne)}
            coeffs[int(f_var[a])] = 1.0
            m.add_constraint(coeffs, "<=", 0.0)
    for c in range(nv):
        for b in range(ne):
            m.add_constraint({int(ev_var[b, c]): 1.0, int(v_var[c]): -1.0}, "<=", 0.0)
        coeffs = {int(ev_var[b, c]): -1.0 for b in range(ne)}
        coeffs[int(v_var[c])] = 1.0
        m.add_constraint(coeffs, "<=", 0.0)

    m.meta = {
        "faces": faces,
        "edges": edges,
        "verts": verts,
        "f_var": f_var,
        "e_var": e_var,
        "v_var": v_var,
        "o_var": o_var,
        "y_var": y_var,
        "fe_var": fe_var,
        "ev_var": ev_var,
        "fv_var": fv_var,
        "z_var": z_var,
    }
    return m


def decode_solution(model, x):
    """Read a solved assignment back into surviving indices and matrices."""
    meta = model.meta
    if not meta:
        raise ValueError("model carries no candidate metadata")
    x = np.asarray(x, dtype=np.int64)
    keep_f = [a for a, var in enumerate(meta["f_var"]) if x[var] == 1]
    keep_e = [b for b, var in enumerate(meta["e_var"]) if x[var] == 1]
    keep_v = [c for c, var in enumerate(meta["v_var"]) if x[var] == 1]
    fe = np.array(
        [[x[meta["fe_var"][a, b]] for b in keep_e] for a in keep_f], dtype=np.int64
    ).reshape(len(keep_f), len(keep_e))
    ev = np.array(
        [[x[meta["ev_var"][b, c]] for c in keep_v] for b in keep_e], dtype=np.int64
    ).reshape(len(keep_e), len(keep_v))
    fv = np.array(
        [[x[meta["fv_var"][a, c]] for c in keep_v] for a in keep_f], dtype=np.int64
    ).reshape(len(keep_f), len(keep_v))
    return {
        "patches": [meta["faces"][a] for a in keep_f],
        "curves": [meta["edges"][b] for b in keep_e],
        "corners": [meta["verts"][c] for c in keep_v],
        "open": [int(x[meta["o_var"][b]]) for b in keep_e],
        "fe": fe,
        "ev": ev,
        "fv": fv,
    }
