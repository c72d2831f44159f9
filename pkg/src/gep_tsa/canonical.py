"""Solver-facing problem encoding.

    minimize    0.5 y'P y + c'y + const
    subject to  A_eq y == b_eq
                A_ub y <= b_ub
                lb <= y <= ub
                y[j] integral where integer[j]
                optional: 0.5 y'Pq y + cq'y + constq <= rhs   (convex)
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

__all__ = ["QuadCap", "CanonicalProblem"]


def _csr(m, n_cols):
    if m is None:
        return sp.csr_matrix((0, n_cols))
    return sp.csr_matrix(m)


@dataclass(frozen=True)
class QuadCap:
    """Single convex quadratic inequality 0.5 y'P y + c'y + const <= rhs.

    ``factor`` (L with P = L'L) is used to pass the constraint to a
    second-order-cone solver; it is computed on demand when absent.
    """

    P: sp.csc_matrix | None
    c: np.ndarray
    const: float
    rhs: float
    factor: sp.csr_matrix | None = None

    def value(self, y) -> float:
        v = float(self.c @ y) + self.const
        if self.P is not None and self.P.nnz:
            v += 0.5 * float(y @ (self.P @ y))
        return v


@dataclass(frozen=True, eq=False)
class CanonicalProblem:
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    P: sp.csc_matrix | None = None
    const: float = 0.0
    P_factor: sp.csr_matrix | None = None
    quad_cap: QuadCap | None = None
    # role -> (offset, shape) in the variable vector
    layout: dict = field(default_factory=dict)
    # group name -> ("eq" | "ub", slice) for residual reporting and duals
    row_groups: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.c)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "A_eq", _csr(self.A_eq, n))
        object.__setattr__(self, "A_ub", _csr(self.A_ub, n))
        object.__setattr__(self, "b_eq", np.asarray(self.b_eq, dtype=float).reshape(-1))
        object.__setattr__(self, "b_ub", np.asarray(self.b_ub, dtype=float).reshape(-1))
        object.__setattr__(self, "lb", np.asarray(self.lb, dtype=float).reshape(-1))
        object.__setattr__(self, "ub", np.asarray(self.ub, dtype=float).reshape(-1))
        object.__setattr__(self, "integer", np.asarray(self.integer, dtype=bool).reshape(-1))
        if self.P is not None:
            object.__setattr__(self, "P", sp.csc_matrix(self.P))
        self.check()

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def is_quadratic(self) -> bool:
        return self.P is not None and self.P.nnz > 0

    @property
    def num_integer(self) -> int:
        return int(self.integer.sum())

    def check(self) -> None:
        n = self.n
        if self.A_eq.shape != (len(self.b_eq), n):
            raise ValueError(f"A_eq shape {self.A_eq.shape} inconsistent with b_eq/n={n}")
        if self.A_ub.shape != (len(self.b_ub), n):
            raise ValueError(f"A_ub shape {self.A_ub.shape} inconsistent with b_ub/n={n}")
        for name in ("lb", "ub", "integer"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if self.P is not None:
            if self.P.shape != (n, n):
                raise ValueError(f"P shape {self.P.shape}, expected {(n, n)}")
            asym = abs(self.P - self.P.T)
            if asym.nnz and asym.max() > 1e-9 * max(1.0, abs(self.P).max()):
                raise ValueError("P is not symmetric")
        if np.any(self.lb > self.ub):
            raise ValueError("lb exceeds ub")

    # -- evaluation --------------------------------------------------------
    def objective(self, y) -> float:
        y = np.asarray(y, dtype=float)
        v = float(self.c @ y) + self.const
        if self.is_quadratic:
            v += 0.5 * float(y @ (self.P @ y))
        return v

    def residuals(self, y) -> dict:
        """Max violation per row group plus 'bounds' and 'integrality'.

        The quadratic cap is a cost-scale row; its violation is reported
        relative to max(1, |rhs|).
        """
        y = np.asarray(y, dtype=float)
        req = self.A_eq @ y - self.b_eq
        rub = np.maximum(self.A_ub @ y - self.b_ub, 0.0)
        out = {}
        for name, (kind, sl) in self.row_groups.items():
            r = np.abs(req[sl]) if kind == "eq" else rub[sl]
            out[name] = float(r.max()) if r.size else 0.0
        out["eq_all"] = float(np.abs(req).max()) if req.size else 0.0
        out["ub_all"] = float(rub.max()) if rub.size else 0.0
        bv = np.maximum(self.lb - y, 0.0)
        bv = np.maximum(bv, np.maximum(y - self.ub, 0.0))
        out["bounds"] = float(bv.max()) if bv.size else 0.0
        if self.integer.any():
            yi = y[self.integer]
            out["integrality"] = float(np.abs(yi - np.round(yi)).max())
        else:
            out["integrality"] = 0.0
        if self.quad_cap is not None:
            qc = self.quad_cap
            out["quad_cap"] = max(0.0, qc.value(y) - qc.rhs) / max(1.0, abs(qc.rhs))
        return out

    def max_violation(self, y, include_integrality=True) -> float:
        r = self.residuals(y)
        keys = ["eq_all", "ub_all", "bounds"] + (["integrality"] if include_integrality else [])
        if "quad_cap" in r:
            keys.append("quad_cap")
        return max(r[k] for k in keys)

    # -- derived problems --------------------------------------------------
    def with_bounds(self, lb=None, ub=None) -> "CanonicalProblem":
        return replace(self, lb=self.lb if lb is None else lb, ub=self.ub if ub is None else ub)

    def relax(self) -> "CanonicalProblem":
        return replace(self, integer=np.zeros(self.n, dtype=bool))

    def fix(self, idx, values) -> "CanonicalProblem":
        """Fix variables via their bounds and drop their integrality marks."""
        idx = np.asarray(idx, dtype=int)
        lb, ub, integer = self.lb.copy(), self.ub.copy(), self.integer.copy()
        lb[idx] = values
        ub[idx] = values
        integer[idx] = False
        return replace(self, lb=lb, ub=ub, integer=integer)

    def var(self, role: str) -> np.ndarray:
        """Indices of a role's variables, shaped like the role."""
        off, shape = self.layout[role]
        return off + np.arange(int(np.prod(shape))).reshape(shape)

    def dump(self) -> str:
        """Row-wise text listing for debugging."""
        names = np.array([f"y{j}" for j in range(self.n)], dtype=object)
        for role, (off, shape) in self.layout.items():
            for k, j in enumerate(range(off, off + int(np.prod(shape)))):
                idx = np.unravel_index(k, shape) if shape else ()
                names[j] = f"{role}[{','.join(map(str, idx))}]"
        buf = io.StringIO()
        terms = " + ".join(f"{v:g}*{names[j]}" for j, v in enumerate(self.c) if v)
        buf.write(f"minimize {terms or '0'} + {self.const:g}")
        if self.is_quadratic:
            buf.write(f" + 0.5*y'Py (nnz={self.P.nnz})")
        buf.write("\n")

        def rows(A, b, op, tag):
            A = A.tocsr()
            for i in range(A.shape[0]):
                lo, hi = A.indptr[i], A.indptr[i + 1]
                lhs = " + ".join(f"{v:g}*{names[j]}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
                buf.write(f"{tag}{i}: {lhs or '0'} {op} {b[i]:g}\n")

        rows(self.A_eq, self.b_eq, "==", "e")
        rows(self.A_ub, self.b_ub, "<=", "u")
        for j in range(self.n):
            kind = " int" if self.integer[j] else ""
            buf.write(f"bound {names[j]}: [{self.lb[j]:g}, {self.ub[j]:g}]{kind}\n")
        if self.quad_cap is not None:
            buf.write(f"quad cap: 0.5*y'Pq y + cq'y + {self.quad_cap.const:g} <= {self.quad_cap.rhs:g}\n")
        return buf.getvalue()
