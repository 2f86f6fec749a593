"""Modeling layer: affine matrix expressions over real variables, compiled to an SdpProblem.

A model is stated on the dual side of the standard form: the real variables z
enter linear matrix inequalities F0 + sum_i z_i F_i >= 0 and equalities G z = g,
and a linear objective c.z is maximized (or minimized). Compilation maps

    C = F0,  A_i = -F_i,  b = +-c,  B = G^T,  f = g

so the model value is the solver's dual objective and the standard primal
objective is a certified bound on it.

Hermitian LMIs with complex data are embedded as real symmetric blocks of
twice the size, H -> [[Re H, -Im H], [Im H, Re H]]. A block whose data is real
stays real, and 1 x 1 inequalities are gathered into one diagonal block.
"""
import dataclasses
import logging

import numpy as np
import scipy.sparse as sp

from src import sdp_core
from src.errors import DimensionError, ModelError, SolverError
from src.linalg_core import HERMITIAN_TOL, partial_transpose

logger = logging.getLogger(__name__)

ACCEPT_TOL = 1e-6
_SQRT_HALF = np.sqrt(0.5)


def _sparse(rows, cols, vals, shape):
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (np.asarray(rows), np.asarray(cols))), shape=shape)


def _canonical(m):
    m = sp.csr_matrix(m, dtype=complex, copy=True)
    m.sum_duplicates()
    return m


def _parts(m):
    """(Re m, Im m) as independent canonical real CSR matrices."""
    m = _canonical(m)
    re = sp.csr_matrix((m.data.real.copy(), m.indices.copy(), m.indptr.copy()), shape=m.shape)
    im = sp.csr_matrix((m.data.imag.copy(), m.indices.copy(), m.indptr.copy()), shape=m.shape)
    re.eliminate_zeros()
    im.eliminate_zeros()
    return re, im


def _sparse_max(m):
    m = _canonical(m)
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


def _widen(coef, n):
    if coef.shape[1] == n:
        return coef
    c = coef.tocoo()
    return sp.csr_matrix((c.data, (c.row, c.col)), shape=(c.shape[0], n), dtype=complex)


def _index_grid(rows, cols):
    return np.arange(rows * cols).reshape(rows, cols)


def _kron_map(r, c, k, left):
    """Linear map vec(E) -> vec(E (x) K) (left=False) or vec(K (x) E) (left=True)."""
    k = np.asarray(k, dtype=complex)
    p, q = k.shape
    kr, kc = np.nonzero(k)
    i, j = np.indices((r, c))
    i = i.reshape(-1, 1)
    j = j.reshape(-1, 1)
    if left:
        rows = (kr * r + i) * (q * c) + (kc * c + j)
    else:
        rows = (i * p + kr) * (c * q) + (j * q + kc)
    src = np.broadcast_to(i * c + j, rows.shape)
    vals = np.broadcast_to(k[kr, kc], rows.shape)
    return _sparse(rows.ravel(), src.ravel(), vals.ravel(), (r * p * c * q, r * c))


def _partial_trace_map(shape, system):
    side = shape.side
    t = _index_grid(side, side).reshape(shape.dA, shape.dB, shape.dA, shape.dB)
    if system == "A":
        src = np.stack([t[i, :, i, :] for i in range(shape.dA)])
        out_side = shape.dB
    elif system == "B":
        src = np.stack([t[:, j, :, j] for j in range(shape.dB)])
        out_side = shape.dA
    else:
        raise DimensionError(f"system must be 'A' or 'B', got {system!r}")
    out = np.broadcast_to(_index_grid(out_side, out_side), src.shape)
    return _sparse(out.ravel(), src.ravel(), np.ones(src.size), (out_side * out_side, side * side))


class AffineExpr:
    """Matrix-valued affine function const + sum_i z_i coef_i of the model variables."""

    __array_ufunc__ = None

    def __init__(self, builder, const, coef):
        self.builder = builder
        self.const = np.atleast_2d(np.asarray(const, dtype=complex))
        self.coef = _canonical(coef)
        if self.coef.shape[0] != self.const.size:
            raise DimensionError(f"coefficient rows {self.coef.shape[0]} do not match shape {self.const.shape}")

    @property
    def shape(self):
        return self.const.shape

    def _map(self, lin, const):
        return AffineExpr(self.builder, const, lin @ self._coef())

    def _coef(self):
        return _widen(self.coef, self.builder.num_vars)

    def _lift(self, other):
        if isinstance(other, AffineExpr):
            if other.builder is not self.builder:
                raise ModelError("cannot combine expressions from different models")
            return other
        const = np.asarray(other, dtype=complex)
        if const.ndim == 0:
            if self.shape != (1, 1):
                raise DimensionError(f"scalar can only be combined with a 1x1 expression, not {self.shape}")
            const = const.reshape(1, 1)
        return self.builder.constant(const)

    def __add__(self, other):
        other = self._lift(other)
        if other.shape != self.shape:
            raise DimensionError(f"shape mismatch {self.shape} + {other.shape}")
        return AffineExpr(self.builder, self.const + other.const, self._coef() + other._coef())

    __radd__ = __add__

    def __neg__(self):
        return AffineExpr(self.builder, -self.const, -self.coef)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            raise TypeError("expressions can only be scaled by scalars; use @ for matrix products")
        return AffineExpr(self.builder, self.const * scalar, self.coef * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, k):
        k = np.asarray(k, dtype=complex)
        r, c = self.shape
        if k.shape[0] != c:
            raise DimensionError(f"cannot multiply {self.shape} by {k.shape}")
        lin = sp.kron(sp.identity(r), sp.csr_matrix(k.T), format="csr")
        return self._map(lin, self.const @ k)

    def __rmatmul__(self, k):
        k = np.asarray(k, dtype=complex)
        r, c = self.shape
        if k.shape[1] != r:
            raise DimensionError(f"cannot multiply {k.shape} by {self.shape}")
        lin = sp.kron(sp.csr_matrix(k), sp.identity(c), format="csr")
        return self._map(lin, k @ self.const)

    def kron(self, k):
        """self (x) k."""
        k = np.atleast_2d(np.asarray(k, dtype=complex))
        return self._map(_kron_map(*self.shape, k, left=False), np.kron(self.const, k))

    def rkron(self, k):
        """k (x) self."""
        k = np.atleast_2d(np.asarray(k, dtype=complex))
        return self._map(_kron_map(*self.shape, k, left=True), np.kron(k, self.const))

    def _check_bipartite(self, shape):
        if self.shape != (shape.side, shape.side):
            raise DimensionError(f"expression of shape {self.shape} is not an operator on {shape.dA}x{shape.dB}")

    def partial_trace(self, shape, system):
        self._check_bipartite(shape)
        lin = _partial_trace_map(shape, system)
        const = (lin @ self.const.reshape(-1)).reshape(
            (shape.dB, shape.dB) if system == "A" else (shape.dA, shape.dA)
        )
        return self._map(lin, const)

    def partial_transpose(self, shape, system):
        self._check_bipartite(shape)
        perm = partial_transpose(_index_grid(shape.side, shape.side), shape, system).ravel()
        return AffineExpr(self.builder, partial_transpose(self.const, shape, system), self._coef()[perm, :])

    def trace(self):
        r, c = self.shape
        if r != c:
            raise DimensionError(f"trace of non-square expression {self.shape}")
        idx = np.arange(r) * (r + 1)
        lin = _sparse(np.zeros(r, dtype=int), idx, np.ones(r), (1, r * r))
        return self._map(lin, np.trace(self.const).reshape(1, 1))

    def inner(self, k):
        """Re tr(k @ self) as a 1x1 expression."""
        k = np.asarray(k, dtype=complex)
        if k.shape != self.shape[::-1]:
            raise DimensionError(f"cannot pair {k.shape} with {self.shape}")
        row = sp.csr_matrix(k.T.reshape(1, -1))
        return self._map(row, np.sum(k.T * self.const).reshape(1, 1)).real()

    def adjoint(self):
        r, c = self.shape
        perm = _index_grid(r, c).T.ravel()
        return AffineExpr(self.builder, self.const.conj().T, self._coef()[perm, :].conj())

    @property
    def H(self):
        return self.adjoint()

    def real(self):
        re, _ = _parts(self.coef)
        return AffineExpr(self.builder, self.const.real, re)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return self.const + (self._coef() @ z).reshape(self.shape)

    def hermitian_asymmetry(self):
        r, c = self.shape
        if r != c:
            return np.inf
        perm = _index_grid(r, c).T.ravel()
        coef = self._coef()
        return max(
            float(np.max(np.abs(self.const - self.const.conj().T))) if self.const.size else 0.0,
            _sparse_max(coef - coef[perm, :].conj()),
        )

    def __repr__(self):
        return f"AffineExpr(shape={self.shape}, nnz={self.coef.nnz})"


def bmat(rows):
    """Block matrix of expressions, constants or None (zero blocks)."""
    builder = next((e.builder for row in rows for e in row if isinstance(e, AffineExpr)), None)
    if builder is None:
        raise ModelError("bmat needs at least one expression")
    heights = []
    for row in rows:
        h = {np.atleast_2d(np.asarray(e.const if isinstance(e, AffineExpr) else e)).shape[0] for e in row if e is not None}
        if len(h) != 1:
            raise DimensionError(f"inconsistent block heights {sorted(h)} in bmat row")
        heights.append(h.pop())
    widths = []
    for j in range(len(rows[0])):
        w = {np.atleast_2d(np.asarray(row[j].const if isinstance(row[j], AffineExpr) else row[j])).shape[1]
             for row in rows if row[j] is not None}
        if len(w) != 1:
            raise DimensionError(f"inconsistent block widths {sorted(w)} in bmat column {j}")
        widths.append(w.pop())
    total_r, total_c = sum(heights), sum(widths)
    result = builder.constant(np.zeros((total_r, total_c)))
    ro = 0
    for i, row in enumerate(rows):
        co = 0
        for j, e in enumerate(row):
            if e is not None:
                e = builder.constant(np.asarray(e)) if not isinstance(e, AffineExpr) else e
                h, w = heights[i], widths[j]
                src = _index_grid(h, w)
                dst = (ro + np.arange(h))[:, None] * total_c + (co + np.arange(w))[None, :]
                lin = _sparse(dst.ravel(), src.ravel(), np.ones(h * w), (total_r * total_c, h * w))
                placed = np.zeros((total_r, total_c), dtype=complex)
                placed[ro:ro + h, co:co + w] = e.const
                result = result + AffineExpr(builder, placed, lin @ e._coef())
            co += widths[j]
        ro += heights[i]
    return result


@dataclasses.dataclass(frozen=True)
class _LmiSlot:
    name: str
    block: int
    side: int
    embedded: bool
    lp_index: int = -1


@dataclasses.dataclass(frozen=True, eq=False)
class ModelSolution:
    """Decoded solution of a model.

    objective is the model objective at the returned point z; bound is the
    value certified by the standard primal side (an upper bound for a
    maximization, a lower bound for a minimization).
    """

    label: str
    objective: float
    bound: float
    z: np.ndarray
    sdp: sdp_core.SdpSolution
    problem: sdp_core.SdpProblem
    slots: tuple

    @property
    def status(self):
        return self.sdp.status

    def value(self, expr):
        return expr.value(self.z)

    def scalar(self, expr):
        return float(self.value(expr)[0, 0].real)

    def hermitian(self, expr):
        v = self.value(expr)
        return (v + v.conj().T) / 2

    def multiplier(self, name):
        """Hermitian multiplier of the named inequality."""
        slot = next((s for s in self.slots if s.name == name), None)
        if slot is None:
            raise KeyError(f"{self.label}: no inequality named {name!r}")
        x = self.sdp.x[slot.block]
        if slot.lp_index >= 0:
            return np.array([[x[slot.lp_index]]], dtype=complex)
        if not slot.embedded:
            return x.astype(complex)
        n = slot.side
        return (x[:n, :n] + x[n:, n:]) + 1j * (x[n:, :n] - x[:n, n:])


class SdpBuilder:
    """Collects variables, inequalities, equalities and an objective.

    With real=True every variable is real; this is exact when all data are
    real, since the real part of a feasible point is feasible with the same
    objective.
    """

    def __init__(self, real=False, label="model"):
        self.real = bool(real)
        self.label = label
        self.num_vars = 0
        self.variables = {}
        self._var_names = []
        self._lmis = []
        self._equalities = []
        self._objective = None
        self._sense = 1

    def _allocate(self, count, name):
        if name in self.variables:
            raise ModelError(f"{self.label}: variable {name!r} declared twice")
        start = self.num_vars
        self.variables[name] = (start, count)
        self._var_names.extend(f"{name}[{k}]" for k in range(count))
        self.num_vars += count
        return start

    def constant(self, value):
        const = np.atleast_2d(np.asarray(value, dtype=complex))
        return AffineExpr(self, const, sp.csr_matrix((const.size, self.num_vars), dtype=complex))

    def hermitian(self, n, name, psd=False):
        """n x n Hermitian (real symmetric if real=True) variable in an orthonormal basis."""
        iu, ju = np.triu_indices(n, k=1)
        npairs = iu.size
        count = n + npairs if self.real else n * n
        start = self._allocate(count, name)
        rows, cols, vals = [], [], []
        diag = np.arange(n)
        rows.append(diag * (n + 1))
        cols.append(start + diag)
        vals.append(np.ones(n, dtype=complex))
        sym_cols = start + n + np.arange(npairs)
        rows += [iu * n + ju, ju * n + iu]
        cols += [sym_cols, sym_cols]
        vals += [np.full(npairs, _SQRT_HALF, dtype=complex)] * 2
        if not self.real:
            anti_cols = start + n + npairs + np.arange(npairs)
            rows += [iu * n + ju, ju * n + iu]
            cols += [anti_cols, anti_cols]
            vals += [np.full(npairs, 1j * _SQRT_HALF), np.full(npairs, -1j * _SQRT_HALF)]
        coef = _sparse(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n * n, self.num_vars))
        expr = AffineExpr(self, np.zeros((n, n)), coef)
        if psd:
            self.psd(expr, f"{name} >= 0")
        return expr

    def matrix(self, rows, cols, name):
        size = rows * cols
        start = self._allocate(size if self.real else 2 * size, name)
        idx = np.arange(size)
        if self.real:
            coef = _sparse(idx, start + idx, np.ones(size), (size, self.num_vars))
        else:
            coef = _sparse(
                np.concatenate([idx, idx]),
                np.concatenate([start + idx, start + size + idx]),
                np.concatenate([np.ones(size), 1j * np.ones(size)]),
                (size, self.num_vars),
            )
        return AffineExpr(self, np.zeros((rows, cols)), coef)

    def scalar(self, name):
        start = self._allocate(1, name)
        return AffineExpr(self, np.zeros((1, 1)), _sparse([0], [start], [1.0], (1, self.num_vars)))

    def psd(self, expr, name):
        r, c = expr.shape
        if r != c:
            raise ModelError(f"{self.label}: inequality {name!r} is not square ({r}x{c})")
        asym = expr.hermitian_asymmetry()
        if asym > HERMITIAN_TOL:
            raise ModelError(f"{self.label}: inequality {name!r} is not Hermitian (max asymmetry {asym:.2e})")
        self._lmis.append((name, expr))

    def equal(self, expr, value, name):
        value = np.asarray(value, dtype=complex)
        if value.ndim == 0:
            value = np.full(expr.shape, value)
        if value.shape != expr.shape:
            raise ModelError(f"{self.label}: equality {name!r} has shape {expr.shape} but value {value.shape}")
        self._equalities.append((name, expr, value))

    def maximize(self, expr):
        self._set_objective(expr, 1)

    def minimize(self, expr):
        self._set_objective(expr, -1)

    def _set_objective(self, expr, sense):
        if expr.shape != (1, 1):
            raise ModelError(f"{self.label}: objective must be a scalar expression, got {expr.shape}")
        self._objective = expr
        self._sense = sense

    # --------------------------------------------------
    # compilation
    # --------------------------------------------------

    def _equality_rows(self):
        rows, rhs, names = [], [], []
        for name, expr, value in self._equalities:
            r, c = expr.shape
            coef = expr._coef()
            resid = value - expr.const
            hermitian = r == c and expr.hermitian_asymmetry() <= HERMITIAN_TOL and \
                float(np.max(np.abs(value - value.conj().T))) <= HERMITIAN_TOL
            if hermitian:
                iu, ju = np.triu_indices(r)
                re_idx = iu * c + ju
                strict = iu < ju
                im_idx = re_idx[strict]
            else:
                re_idx = np.arange(r * c)
                im_idx = re_idx
            for part, idx in (("re", re_idx), ("im", im_idx)):
                re, im = _parts(coef[idx, :])
                block = re if part == "re" else im
                target = resid.reshape(-1)[idx]
                target = target.real if part == "re" else target.imag
                block = sp.csr_matrix(block)
                block.eliminate_zeros()
                nnz_rows = np.diff(block.indptr) > 0
                empty = ~nnz_rows
                bad = np.abs(target[empty]) > 1e-12
                if np.any(bad):
                    raise ModelError(f"{self.label}: equality {name!r} is inconsistent on a constant entry")
                keep = np.nonzero(nnz_rows)[0]
                rows.append(block[keep, :])
                rhs.append(target[keep])
                names.extend(f"{name}.{part}{k}" for k in keep)
        if not rows:
            return sp.csr_matrix((0, self.num_vars)), np.zeros(0), names
        return sp.vstack(rows, format="csr"), np.concatenate(rhs), names

    @staticmethod
    def _embedding_maps(n):
        src = _index_grid(n, n).ravel()
        p, q = np.divmod(src, n)
        big = 2 * n
        re_rows = np.concatenate([p * big + q, (n + p) * big + (n + q)])
        im_rows = np.concatenate([p * big + (n + q), (n + p) * big + q])
        cols = np.concatenate([src, src])
        to_re = sp.csr_matrix((np.ones(2 * n * n), (re_rows, cols)), shape=(big * big, n * n))
        to_im = sp.csr_matrix((np.concatenate([-np.ones(n * n), np.ones(n * n)]), (im_rows, cols)),
                              shape=(big * big, n * n))
        return to_re, to_im

    def compile(self):
        if self._objective is None:
            raise ModelError(f"{self.label}: no objective set")
        if not self._lmis:
            raise ModelError(f"{self.label}: no inequalities")
        nv = self.num_vars
        blocks, cs, as_, slots = [], [], [], []
        lp_c, lp_a, lp_names = [], [], []
        for name, expr in self._lmis:
            n = expr.shape[0]
            coef = expr._coef()
            const = (expr.const + expr.const.conj().T) / 2
            coef = (coef + coef[_index_grid(n, n).T.ravel(), :].conj()) / 2
            coef_re, coef_im = _parts(coef)
            is_real = float(np.max(np.abs(const.imag))) == 0.0 and coef_im.nnz == 0
            if n == 1:
                lp_c.append(float(const.real[0, 0]))
                lp_a.append(-coef_re)
                lp_names.append(name)
                continue
            if is_real:
                blocks.append(n)
                cs.append(const.real)
                as_.append(-coef_re)
                slots.append(_LmiSlot(name, len(blocks) - 1, n, False))
            else:
                to_re, to_im = self._embedding_maps(n)
                big = 2 * n
                c_big = np.block([[const.real, -const.imag], [const.imag, const.real]])
                f_big = to_re @ coef_re + to_im @ coef_im
                blocks.append(big)
                cs.append(c_big)
                as_.append(-sp.csr_matrix(f_big))
                slots.append(_LmiSlot(name, len(blocks) - 1, n, True))
        if lp_c:
            blocks.append(-len(lp_c))
            cs.append(np.asarray(lp_c))
            as_.append(sp.vstack(lp_a, format="csr"))
            slots.extend(_LmiSlot(nm, len(blocks) - 1, 1, False, k) for k, nm in enumerate(lp_names))
        obj = self._objective
        c_vec = np.asarray(_parts(obj._coef())[0].toarray()).reshape(-1)
        g_mat, g_rhs, _ = self._equality_rows()
        problem = sdp_core.SdpProblem(
            tuple(blocks),
            tuple(cs),
            tuple(as_),
            self._sense * c_vec,
            g_mat.T.tocsr() if g_mat.shape[0] else None,
            g_rhs if g_mat.shape[0] else None,
            names=tuple(self._var_names),
            label=self.label,
        )
        logger.debug(
            "%s: %d variables, %d equalities, blocks %s", self.label, nv, g_mat.shape[0], list(blocks)
        )
        return problem, tuple(slots)

    def solve(self, settings=None, accept_tol=ACCEPT_TOL):
        problem, slots = self.compile()
        sol = sdp_core.solve(problem, settings)
        if not sol.optimal:
            worst = max(sol.residuals)
            if worst > accept_tol:
                raise SolverError(
                    self.label, sol,
                    f"{self.label}: solver finished with status '{sol.status.value}' "
                    f"(pres={sol.residuals.primal:.1e}, dres={sol.residuals.dual:.1e}, gap={sol.residuals.gap:.1e})",
                )
            logger.warning(
                "%s: accepting %s solution within %.0e (worst residual %.1e)",
                self.label, sol.status.value, accept_tol, worst,
            )
        offset = float(self._objective.const.real[0, 0])
        z = sol.y.copy()
        return ModelSolution(
            label=self.label,
            objective=self._sense * sol.dual_value + offset,
            bound=self._sense * sol.primal_value + offset,
            z=z,
            sdp=sol,
            problem=problem,
            slots=slots,
        )
