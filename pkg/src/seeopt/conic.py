"""Conic optimization layer: linear objectives over scalar and complex
Hermitian matrix variables with nonnegative, second-order and PSD cones.

A :class:`ConeProgram` is built symbolically from affine expressions and then
compiled to the standard form ``min c'x  s.t.  Gx + s = h, s in K, Ax = b``
solved by cvxopt's dense Nesterov-Todd-scaled predictor-corrector interior
point method (``solvers.conelp``), which also produces infeasibility
certificates.

Complex Hermitian matrix variables are handled through the standard real
embedding ``[[Re X, -Im X], [Im X, Re X]]``: the matrix is parametrised by its
n^2 real degrees of freedom (diagonal, then re/im of each upper off-diagonal
entry) and membership of the PSD cone is imposed on the 2n x 2n symmetric
embedding, whose eigenvalues are those of X doubled up.  Trace inner products
are expressed directly on the real parametrisation, so no coefficient
rescaling leaks into the caller.

Everything is deterministic: identical programs produce identical iteration
counts, objectives and variable values.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import spmatrix as cvx_spmatrix
from cvxopt import solvers as cvx_solvers

__all__ = [
    "SolveStatus",
    "SolveOptions",
    "SolveResult",
    "LinExpr",
    "MatrixVar",
    "ConeProgram",
    "solve",
    "dump_program",
]


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SolveOptions:
    tol_gap: float = 1e-7
    tol_feas: float = 1e-7
    max_iter: int = 200

    def __post_init__(self):
        if self.tol_gap <= 0 or self.tol_feas <= 0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive and max_iter >= 1")


class LinExpr:
    """Affine expression: constant + scalar-variable terms + trace terms."""

    __slots__ = ("scal", "mats", "const")

    def __init__(self, scal=None, mats=None, const=0.0):
        self.scal = dict(scal or {})
        self.mats = {k: np.array(v, dtype=complex) for k, v in (mats or {}).items()}
        self.const = float(const)

    @staticmethod
    def _coerce(other):
        if isinstance(other, LinExpr):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return LinExpr(const=float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        scal = dict(self.scal)
        for k, v in o.scal.items():
            scal[k] = scal.get(k, 0.0) + v
        mats = {k: v.copy() for k, v in self.mats.items()}
        for k, v in o.mats.items():
            mats[k] = mats[k] + v if k in mats else v.copy()
        return LinExpr(scal, mats, self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.scal.items()},
                       {k: -v for k, v in self.mats.items()}, -self.const)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, factor):
        f = float(factor)
        return LinExpr({k: f * v for k, v in self.scal.items()},
                       {k: f * v for k, v in self.mats.items()}, f * self.const)

    __rmul__ = __mul__

    def __truediv__(self, factor):
        return self * (1.0 / float(factor))


@dataclass(frozen=True)
class MatrixVar:
    name: str
    n: int


def _dof_count(n: int) -> int:
    return n * n


def _trace_coeffs(c_mat: np.ndarray) -> np.ndarray:
    """Real coefficients of Re tr(C X) over the dof vector of X.

    Layout: diagonal entries first, then (2*Re C_ij, 2*Im C_ij) for each
    upper-triangular position (i < j) in lexicographic order.
    """
    n = c_mat.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    out = np.empty(n * n)
    out[:n] = np.real(np.diag(c_mat))
    out[n::2] = 2.0 * np.real(c_mat[iu, ju])
    out[n + 1::2] = 2.0 * np.imag(c_mat[iu, ju])
    return out


def _dofs_to_matrix(n: int, dofs: np.ndarray) -> np.ndarray:
    """Inverse of the dof layout: reconstruct the complex Hermitian matrix."""
    x = np.zeros((n, n), dtype=complex)
    x[np.diag_indices(n)] = dofs[:n]
    iu, ju = np.triu_indices(n, k=1)
    vals = dofs[n::2] + 1j * dofs[n + 1::2]
    x[iu, ju] = vals
    x[ju, iu] = np.conj(vals)
    return x


def _embedding_triplets(n: int):
    """Sparse map from the dof vector to the 2n x 2n real embedding.

    Returns (rows, cols, vals) where rows index the column-major storage of
    the embedding and cols index dofs.
    """
    m = 2 * n
    rows, cols, vals = [], [], []

    def put(r, c, dof, v):
        rows.append(c * m + r)
        cols.append(dof)
        vals.append(v)

    for i in range(n):
        put(i, i, i, 1.0)
        put(n + i, n + i, i, 1.0)
    dof = n
    for i in range(n):
        for j in range(i + 1, n):
            u, v = dof, dof + 1
            dof += 2
            # real part of X_ij enters both diagonal blocks symmetrically
            for (r, c) in ((i, j), (j, i), (n + i, n + j), (n + j, n + i)):
                put(r, c, u, 1.0)
            # imaginary part enters the skew off-diagonal blocks
            put(i, n + j, v, -1.0)
            put(j, n + i, v, 1.0)
            put(n + i, j, v, 1.0)
            put(n + j, i, v, -1.0)
    return rows, cols, vals


class ConeProgram:
    """Symbolic cone program over free/nonnegative scalars and Hermitian matrices."""

    def __init__(self):
        self._scalars = []          # (name, nonneg)
        self._matrices = []         # MatrixVar
        self._names = set()
        self._ineqs = []            # LinExpr <= 0
        self._eqs = []              # LinExpr == 0
        self._socs = []             # (t_expr, [elem exprs])
        self._objective = LinExpr()
        self._sense = 1.0           # +1 minimize, -1 maximize

    # -- variables ----------------------------------------------------------
    def _register(self, name):
        if name in self._names:
            raise ValueError(f"variable {name!r} already declared")
        self._names.add(name)

    def scalar_var(self, name: str, nonneg: bool = False) -> LinExpr:
        self._register(name)
        self._scalars.append((name, bool(nonneg)))
        return LinExpr(scal={name: 1.0})

    def hermitian_var(self, name: str, n: int) -> MatrixVar:
        """Declare an n x n complex Hermitian PSD matrix variable."""
        if n < 1:
            raise ValueError("matrix dimension must be positive")
        self._register(name)
        var = MatrixVar(name, int(n))
        self._matrices.append(var)
        return var

    # -- expression helpers --------------------------------------------------
    def trace_term(self, c_mat, var: MatrixVar) -> LinExpr:
        """Affine term ``Re tr(C X)`` for Hermitian coefficient ``C``."""
        c = np.asarray(c_mat, dtype=complex)
        if c.shape != (var.n, var.n):
            raise ValueError(f"coefficient shape {c.shape} does not match variable "
                             f"{var.name!r} of dimension {var.n}")
        if np.linalg.norm(c - c.conj().T) > 1e-10 * max(1.0, np.linalg.norm(c)):
            raise ValueError("trace coefficient matrix must be Hermitian")
        return LinExpr(mats={var.name: 0.5 * (c + c.conj().T)})

    def trace(self, var: MatrixVar) -> LinExpr:
        return self.trace_term(np.eye(var.n), var)

    # -- constraints ---------------------------------------------------------
    def add_le(self, expr: LinExpr) -> None:
        """Add the inequality ``expr <= 0``."""
        self._ineqs.append(expr)

    def add_eq(self, expr: LinExpr) -> None:
        """Add the equality ``expr == 0``."""
        self._eqs.append(expr)

    def add_soc(self, bound: LinExpr, elems) -> None:
        """Add the second-order cone row ``||elems|| <= bound``."""
        if not elems:
            raise ValueError("second-order cone needs at least one element")
        self._socs.append((bound, [e if isinstance(e, LinExpr) else LinExpr(const=float(e))
                                   for e in elems]))

    def minimize(self, expr: LinExpr) -> None:
        self._objective, self._sense = expr, 1.0

    def maximize(self, expr: LinExpr) -> None:
        self._objective, self._sense = expr, -1.0

    # -- compilation ---------------------------------------------------------
    def _column_layout(self):
        cols = {}
        pos = 0
        for name, _ in self._scalars:
            cols[name] = pos
            pos += 1
        for var in self._matrices:
            cols[var.name] = pos
            pos += _dof_count(var.n)
        return cols, pos

    def _expr_row(self, expr: LinExpr, cols, ncols):
        row = np.zeros(ncols)
        for name, coeff in expr.scal.items():
            if name not in cols:
                raise ValueError(f"expression references undeclared variable {name!r}")
            row[cols[name]] = coeff
        for name, cmat in expr.mats.items():
            if name not in cols:
                raise ValueError(f"expression references undeclared matrix {name!r}")
            start = cols[name]
            coeffs = _trace_coeffs(cmat)
            row[start:start + coeffs.size] = coeffs
        return row

    def compile(self):
        """Lower to (c, G, h, dims, A, b, layout) in cvxopt's conelp geometry."""
        cols, ncols = self._column_layout()
        c = self._sense * self._expr_row(self._objective, cols, ncols)

        g_rows, g_cols, g_vals, h_vals = [], [], [], []
        nrow = 0

        def add_dense_row(row, rhs, scale=1.0):
            nonlocal nrow
            if scale != 1.0:
                row = row / scale
                rhs = rhs / scale
            nz = np.nonzero(row)[0]
            g_rows.extend([nrow] * len(nz))
            g_cols.extend(nz.tolist())
            g_vals.extend(row[nz].tolist())
            h_vals.append(rhs)
            nrow += 1

        def row_scale(rows_and_rhs):
            # positive row scaling preserves the cone; equilibrated rows keep
            # the interior-point residual thresholds meaningful
            m = max(max((np.max(np.abs(r)) for r, _ in rows_and_rhs), default=0.0),
                    max((abs(b) for _, b in rows_and_rhs), default=0.0))
            return m if m > 0 else 1.0

        # nonnegative scalars then user inequalities make up the linear cone
        for name, nonneg in self._scalars:
            if nonneg:
                row = np.zeros(ncols)
                row[cols[name]] = -1.0
                add_dense_row(row, 0.0)
        for expr in self._ineqs:
            row = self._expr_row(expr, cols, ncols)
            rhs = -expr.const
            add_dense_row(row, rhs, scale=row_scale([(row, rhs)]))
        # expr <= 0 becomes s = -expr >= 0, i.e. G row = coeffs, h = -const;
        # _expr_row leaves the constant out, handled via h above.
        n_lin = nrow

        q_dims = []
        for bound, elems in self._socs:
            block = [(self._expr_row(bound, cols, ncols) * -1.0, bound.const)]
            block += [(self._expr_row(e, cols, ncols) * -1.0, e.const) for e in elems]
            scale = row_scale(block)
            for row, rhs in block:
                add_dense_row(row, rhs, scale=scale)
            q_dims.append(1 + len(elems))

        s_dims = []
        for var in self._matrices:
            rows, dof_idx, vals = _embedding_triplets(var.n)
            base = cols[var.name]
            g_rows.extend([nrow + r for r in rows])
            g_cols.extend([base + d for d in dof_idx])
            g_vals.extend([-v for v in vals])
            block = (2 * var.n) ** 2
            h_vals.extend([0.0] * block)
            nrow += block
            s_dims.append(2 * var.n)

        if nrow == 0:  # conelp needs at least one cone row
            add_dense_row(np.zeros(ncols), 1.0)
            n_lin = 1

        G = cvx_spmatrix([float(v) for v in g_vals], [int(r) for r in g_rows],
                         [int(cc) for cc in g_cols], (int(nrow), int(ncols)))
        h = cvx_matrix(np.asarray(h_vals))
        dims = {"l": n_lin, "q": q_dims, "s": s_dims}

        A = b = None
        if self._eqs:
            a_dense = np.vstack([self._expr_row(e, cols, ncols) for e in self._eqs])
            b_arr = np.array([-e.const for e in self._eqs])
            scales = np.maximum(np.max(np.abs(a_dense), axis=1), np.abs(b_arr))
            scales[scales == 0] = 1.0
            A = cvx_matrix(a_dense / scales[:, None])
            b = cvx_matrix(b_arr / scales)
        return cvx_matrix(c), G, h, dims, A, b, cols, ncols


@dataclass
class Residuals:
    gap: float
    primal: float
    dual: float


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float | None
    scalars: dict
    matrices: dict
    iterations: int
    residuals: Residuals
    primal_objective: float | None = None
    dual_objective: float | None = None
    certificate: dict | None = None
    message: str = ""

    def scalar(self, name: str) -> float:
        return self.scalars[name]

    def matrix(self, name: str) -> np.ndarray:
        return self.matrices[name]

    def value(self, expr: LinExpr) -> float:
        """Evaluate an affine expression at the returned point."""
        total = expr.const
        for name, coeff in expr.scal.items():
            total += coeff * self.scalars[name]
        for name, cmat in expr.mats.items():
            total += float(np.vdot(self.matrices[name], cmat).real)
        return total


def solve(program: ConeProgram, options: SolveOptions | None = None) -> SolveResult:
    """Solve a cone program; never raises on solver-side breakdown."""
    opts = options or SolveOptions()
    c, G, h, dims, A, b, cols, ncols = program.compile()
    solver_opts = {
        "show_progress": False,
        "abstol": opts.tol_gap,
        "reltol": opts.tol_gap,
        "feastol": opts.tol_feas,
        "maxiters": opts.max_iter,
    }
    try:
        if A is not None:
            sol = cvx_solvers.conelp(c, G, h, dims, A=A, b=b, options=solver_opts)
        else:
            sol = cvx_solvers.conelp(c, G, h, dims, options=solver_opts)
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        return SolveResult(status=SolveStatus.NUMERICAL_FAILURE, objective=None,
                           scalars={}, matrices={}, iterations=0,
                           residuals=Residuals(np.inf, np.inf, np.inf),
                           message=f"factorization breakdown: {exc}")

    status_map = {
        "optimal": SolveStatus.OPTIMAL,
        "primal infeasible": SolveStatus.PRIMAL_INFEASIBLE,
        "dual infeasible": SolveStatus.DUAL_INFEASIBLE,
    }
    iters = int(sol.get("iterations", 0))
    status = status_map.get(sol["status"])
    if status is None:
        status = (SolveStatus.ITERATION_LIMIT if iters >= opts.max_iter
                  else SolveStatus.NUMERICAL_FAILURE)

    def _f(key):
        v = sol.get(key)
        return float(v) if v is not None else np.nan

    residuals = Residuals(gap=_f("gap"), primal=_f("primal infeasibility"),
                          dual=_f("dual infeasibility"))

    scalars, matrices = {}, {}
    objective = primal_obj = dual_obj = None
    certificate = None
    if sol["x"] is not None and status not in (SolveStatus.PRIMAL_INFEASIBLE,
                                               SolveStatus.DUAL_INFEASIBLE):
        x = np.asarray(sol["x"]).ravel()
        for name, _ in program._scalars:
            scalars[name] = float(x[cols[name]])
        for var in program._matrices:
            start = cols[var.name]
            matrices[var.name] = _dofs_to_matrix(var.n, x[start:start + _dof_count(var.n)])
        primal_obj = _f("primal objective")
        dual_obj = _f("dual objective")
        objective = program._sense * primal_obj + program._objective.const
    if status in (SolveStatus.PRIMAL_INFEASIBLE, SolveStatus.DUAL_INFEASIBLE):
        certificate = {
            "z": None if sol.get("z") is None else np.asarray(sol["z"]).ravel(),
            "y": None if sol.get("y") is None else np.asarray(sol["y"]).ravel(),
            "x": None if sol.get("x") is None else np.asarray(sol["x"]).ravel(),
        }

    return SolveResult(status=status, objective=objective, scalars=scalars,
                       matrices=matrices, iterations=iters, residuals=residuals,
                       primal_objective=primal_obj, dual_objective=dual_obj,
                       certificate=certificate, message=sol["status"])


def solve_robust(program: ConeProgram, options: SolveOptions | None = None,
                 relaxations: int = 3) -> SolveResult:
    """Solve, retrying at 10x looser tolerances on numerical breakdown.

    Dual-infeasibility (unboundedness) verdicts are also retried: every
    program built here has a bounded objective, so such a certificate can
    only be a degenerate-endgame artifact.  Primal infeasibility is real
    information and is returned immediately.  The retry ladder is fixed, so
    results stay deterministic; the last attempt's result is returned even
    if it also failed.
    """
    opts = options or SolveOptions()
    result = solve(program, opts)
    for _ in range(relaxations):
        if result.status not in (SolveStatus.NUMERICAL_FAILURE, SolveStatus.ITERATION_LIMIT,
                                 SolveStatus.DUAL_INFEASIBLE):
            return result
        opts = SolveOptions(tol_gap=opts.tol_gap * 10.0, tol_feas=opts.tol_feas * 10.0,
                            max_iter=opts.max_iter)
        result = solve(program, opts)
    return result


def dump_program(program: ConeProgram, path=None) -> str:
    """Write the compiled program in a plain-text triplet format.

    The dump lists variables, cone sizes and the sparse (c, G, h, A, b) data
    of the real standard form, so an external conic solver can replay it.
    """
    c, G, h, dims, A, b, cols, ncols = program.compile()
    buf = io.StringIO()
    buf.write("seeopt-conic v1\n")
    buf.write(f"sense {'minimize' if program._sense > 0 else 'maximize'}\n")
    buf.write(f"columns {ncols}\n")
    for name, nonneg in program._scalars:
        buf.write(f"scalar {name} col {cols[name]} {'nonneg' if nonneg else 'free'}\n")
    for var in program._matrices:
        buf.write(f"hermitian {var.name} dim {var.n} col {cols[var.name]} "
                  f"dofs {_dof_count(var.n)}\n")
    buf.write(f"cones l {dims['l']} q {' '.join(map(str, dims['q']))} "
              f"s {' '.join(map(str, dims['s']))}\n")
    carr = np.asarray(c).ravel()
    for i in np.nonzero(carr)[0]:
        buf.write(f"c {i} {carr[i]:.17g}\n")
    for v, i, j in zip(G.V, G.I, G.J):
        buf.write(f"G {int(i)} {int(j)} {float(v):.17g}\n")
    harr = np.asarray(h).ravel()
    for i in np.nonzero(harr)[0]:
        buf.write(f"h {i} {harr[i]:.17g}\n")
    if A is not None:
        a_arr = np.asarray(A)
        for (i, j) in zip(*np.nonzero(a_arr)):
            buf.write(f"A {i} {j} {a_arr[i, j]:.17g}\n")
        barr = np.asarray(b).ravel()
        for i in np.nonzero(barr)[0]:
            buf.write(f"b {i} {barr[i]:.17g}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
