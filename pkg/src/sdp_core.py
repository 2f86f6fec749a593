"""Primal-dual interior-point solver for small block-diagonal semidefinite programs.

Standard primal form over symmetric blocks X_b and free variables u:

    minimize    <C, X> + f.u
    subject to  A(X) + B u = b,   X >= 0

and its dual

    maximize    b.y
    subject to  C - A*(y) = S >= 0,   B^T y = f.

A block of size n > 0 is an n x n symmetric block; a block of size -k is a
diagonal (LP) block of k independent entries, as in the SDPA format.
Constraint coefficients are stored per block as a sparse matrix whose column i
is the row-major vectorization of A_i restricted to that block.

Search directions use Nesterov-Todd scaling and a Mehrotra predictor-corrector
step. The free variables enter the Newton system directly, which is reduced to
the Schur complement M = A W A* followed by a small system in u.
"""
import dataclasses
import enum
import logging
import time
import typing

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.linalg import lapack

from src.errors import ModelError

logger = logging.getLogger(__name__)

_HEADER = "| iter |        pobj |        dobj |     pres |     dres |      gap |       mu |  alpha_p |  alpha_d |"
_SEPARA = "|------|-------------|-------------|----------|----------|----------|----------|----------|----------|"

SYMMETRY_TOL = 1e-10
DIVERGENCE_NORM = 1e12
MIN_STEP = 1e-10
REG_START = 1e-12
REG_MAX = 1e-6


class SolverStatus(enum.Enum):
    """Termination status of a solve."""

    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"
    INFEASIBLE = "infeasible"


@dataclasses.dataclass(frozen=True)
class SolverSettings:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 100
    step_fraction: float = 0.98

    def __post_init__(self):
        if not (self.tol_gap > 0 and self.tol_feas > 0):
            raise ValueError(f"tolerances must be positive, got tol_gap={self.tol_gap}, tol_feas={self.tol_feas}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 < self.step_fraction < 1:
            raise ValueError(f"step_fraction must lie in (0, 1), got {self.step_fraction}")


class Residuals(typing.NamedTuple):
    primal: float
    dual: float
    gap: float


@dataclasses.dataclass(frozen=True, eq=False)
class SdpSolution:
    """Solved primal/dual pair.

    Attributes:
      status: SolverStatus of the run.
      primal_value: <C, X> + f.u, an upper bound on the dual value at optimality.
      dual_value: b.y, the value certified by the dual certificate y.
      x: primal blocks (LP blocks as vectors).
      y: dual multipliers, one per constraint (0 for dropped dependent rows).
      s: dual slack blocks C - A*(y).
      u: free primal variables.
      iterations: number of interior-point iterations.
      residuals: (primal, dual, gap) measured on the original problem.
      stats: per-iteration dictionaries.
      dropped: indices of constraints removed as linearly dependent.
    """

    status: SolverStatus
    primal_value: float
    dual_value: float
    x: tuple
    y: np.ndarray
    s: tuple
    u: np.ndarray
    iterations: int
    residuals: Residuals
    stats: tuple = ()
    dropped: tuple = ()

    @property
    def optimal(self):
        return self.status is SolverStatus.OPTIMAL


def _block_shape(size):
    return (-size,) if size < 0 else (size, size)


def _block_len(size):
    return -size if size < 0 else size * size


def _transpose_perm(n):
    return np.arange(n * n).reshape(n, n).T.ravel()


@dataclasses.dataclass(frozen=True, eq=False)
class SdpProblem:
    """Block SDP in standard primal form (see module docstring)."""

    blocks: tuple
    c: tuple
    a: tuple
    b: np.ndarray
    free_a: typing.Any = None
    free_c: typing.Any = None
    names: tuple = ()
    label: str = "sdp"

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks or any(n == 0 for n in blocks):
            raise ModelError(f"{self.label}: block sizes must be nonzero, got {blocks}")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        m = b.size
        if m == 0:
            raise ModelError(f"{self.label}: at least one constraint is required")
        if len(self.c) != len(blocks) or len(self.a) != len(blocks):
            raise ModelError(f"{self.label}: need one C block and one A block per declared block")
        cs, as_ = [], []
        for idx, (size, c_b, a_b) in enumerate(zip(blocks, self.c, self.a)):
            c_b = np.asarray(c_b, dtype=float).reshape(_block_shape(size))
            a_b = sp.csr_matrix(a_b, dtype=float, copy=True)
            a_b.sum_duplicates()
            if a_b.shape != (_block_len(size), m):
                raise ModelError(
                    f"{self.label}: block {idx} coefficients have shape {a_b.shape}, expected {(_block_len(size), m)}"
                )
            if size > 0:
                asym_c = float(np.max(np.abs(c_b - c_b.T))) if c_b.size else 0.0
                diff = a_b - a_b[_transpose_perm(size), :]
                asym_a = float(abs(diff).max()) if diff.nnz else 0.0
                if max(asym_c, asym_a) > SYMMETRY_TOL:
                    raise ModelError(f"{self.label}: block {idx} data is not symmetric (max asymmetry {max(asym_c, asym_a):.2e})")
            cs.append(c_b)
            as_.append(a_b)
        if self.free_a is not None:
            free_a = sp.csr_matrix(self.free_a, dtype=float)
            if free_a.shape[0] != m:
                raise ModelError(f"{self.label}: free coefficients must have {m} rows, got {free_a.shape[0]}")
            free_c = np.zeros(free_a.shape[1]) if self.free_c is None else np.asarray(self.free_c, dtype=float).reshape(-1)
            if free_c.size != free_a.shape[1]:
                raise ModelError(f"{self.label}: need one cost per free variable")
        else:
            free_a = sp.csr_matrix((m, 0))
            free_c = np.zeros(0)
        if self.names and len(self.names) != m:
            raise ModelError(f"{self.label}: {len(self.names)} names for {m} constraints")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "c", tuple(cs))
        object.__setattr__(self, "a", tuple(as_))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "free_a", free_a)
        object.__setattr__(self, "free_c", free_c)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def num_constraints(self):
        return self.b.size

    @property
    def num_free(self):
        return self.free_c.size

    @classmethod
    def from_dense(cls, blocks, c, constraints, names=(), label="sdp"):
        """Build from dense data: constraints is a list of (per-block matrices, b_i)."""
        if not constraints:
            raise ModelError(f"{label}: at least one constraint is required")
        blocks = tuple(int(n) for n in blocks)
        cols = [[] for _ in blocks]
        b = []
        for mats, b_i in constraints:
            if len(mats) != len(blocks):
                raise ModelError(f"{label}: constraint has {len(mats)} blocks, expected {len(blocks)}")
            for k, (size, mat) in enumerate(zip(blocks, mats)):
                cols[k].append(np.asarray(mat, dtype=float).reshape(_block_len(size)))
            b.append(float(b_i))
        a = tuple(sp.csr_matrix(np.stack(col, axis=1)) for col in cols)
        return cls(blocks, tuple(c), a, np.asarray(b), names=names, label=label)

    def apply_a(self, x, u=None):
        """A(X) + B u."""
        out = np.zeros(self.num_constraints)
        for a_b, x_b in zip(self.a, x):
            out += a_b.T @ np.asarray(x_b).reshape(-1)
        if u is not None and self.num_free:
            out += self.free_a @ u
        return out

    def apply_at(self, y):
        """A*(y), block by block."""
        return tuple((a_b @ y).reshape(_block_shape(n)) for n, a_b in zip(self.blocks, self.a))

    def objective(self, x, u=None):
        value = sum(float(np.vdot(c_b, x_b)) for c_b, x_b in zip(self.c, x))
        if u is not None and self.num_free:
            value += float(self.free_c @ u)
        return value


def residuals(problem, sol):
    """Primal, dual and gap residuals of a solution on the given problem."""
    rp = problem.apply_a(sol.x, sol.u) - problem.b
    primal = float(np.max(np.abs(rp))) if rp.size else 0.0
    aty = problem.apply_at(sol.y)
    dual = 0.0
    for c_b, at_b, s_b in zip(problem.c, aty, sol.s):
        dual = max(dual, float(np.max(np.abs(c_b - at_b - s_b))))
    if problem.num_free:
        dual = max(dual, float(np.max(np.abs(problem.free_a.T @ sol.y - problem.free_c))))
    pobj = problem.objective(sol.x, sol.u)
    dobj = float(problem.b @ sol.y)
    return Residuals(primal, dual, abs(pobj - dobj) / (1.0 + abs(pobj)))


class FactorizationError(Exception):
    pass


def _regularized_cholesky(mat):
    scale = max(1.0, float(np.max(np.abs(np.diag(mat))))) if mat.size else 1.0
    reg = REG_START
    eye = np.eye(mat.shape[0])
    while reg <= REG_MAX * (1 + 1e-9):
        try:
            return scipy.linalg.cho_factor(mat + reg * scale * eye, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            logger.debug("Cholesky failed with regularization %.1e, escalating", reg)
            reg *= 10
    raise FactorizationError(f"Cholesky factorization failed up to regularization {REG_MAX:.0e}")


def independent_rows(gram, rel_tol=1e-12):
    """Indices of a maximal independent subset, from pivoted Cholesky of a Gram matrix."""
    n = gram.shape[0]
    if n == 0:
        return np.arange(0)
    scale = float(np.max(np.diag(gram)))
    if scale <= 0:
        return np.arange(0)
    _, piv, rank, info = lapack.dpstrf(np.array(gram, dtype=float, order="F"), tol=rel_tol * scale)
    if info < 0:
        raise ValueError(f"dpstrf argument {-info} is invalid")
    return np.sort(piv[:rank] - 1)


class _Scaling:
    """NT scaling of one block: W = G G^T with G^-1 X G^-T = G^T S G = diag(d)."""

    def __init__(self, size, x, s):
        self.lp = size < 0
        if self.lp:
            self.w = np.sqrt(x / s)
            self.d = np.sqrt(x * s)
            return
        lx = np.linalg.cholesky(x)
        ls = np.linalg.cholesky(s)
        _, d, vt = np.linalg.svd(ls.T @ lx)
        self.g = (lx @ vt.T) / np.sqrt(d)
        self.w = self.g @ self.g.T
        self.w = (self.w + self.w.T) / 2
        self.d = d

    def unscale_x(self, dx_t):
        if self.lp:
            return self.w * dx_t
        dx = self.g @ dx_t @ self.g.T
        return (dx + dx.T) / 2

    def scale_s(self, ds):
        if self.lp:
            return self.w * ds
        return self.g.T @ ds @ self.g

    def w_sandwich(self, m):
        if self.lp:
            return self.w * self.w * m
        return self.w @ m @ self.w

    def schur(self, a_b):
        if self.lp:
            return (a_b.T @ sp.diags(self.w * self.w) @ a_b).toarray()
        n = self.w.shape[0]
        eye = sp.identity(n, format="csr")
        z1 = sp.kron(sp.csr_matrix(self.w), eye, format="csr") @ a_b
        z2 = sp.kron(eye, sp.csr_matrix(self.w), format="csr") @ a_b
        return (z1.T @ z2).toarray()

    def max_step(self, delta_t):
        """Largest alpha with diag(d) + alpha * delta_t >= 0 (inf if unbounded)."""
        if self.lp:
            neg = delta_t < 0
            return float(np.min(self.d[neg] / -delta_t[neg])) if np.any(neg) else np.inf
        dm = 1.0 / np.sqrt(self.d)
        lam_min = float(np.linalg.eigvalsh(dm[:, None] * ((delta_t + delta_t.T) / 2) * dm[None, :])[0])
        return -1.0 / lam_min if lam_min < 0 else np.inf

    def predictor_rc(self):
        return -self.d if self.lp else -np.diag(self.d)

    def corrector_rc(self, sigma_mu, dx_a, ds_a):
        if self.lp:
            return (sigma_mu - self.d * self.d - dx_a * ds_a) / self.d
        prod = dx_a @ ds_a
        r = -(prod + prod.T) / 2
        r[np.diag_indices_from(r)] += sigma_mu - self.d * self.d
        return 2 * r / (self.d[:, None] + self.d[None, :])

    def affine_complementarity(self, alpha_p, alpha_d, dx_t, ds_t):
        if self.lp:
            return float(np.sum((self.d + alpha_p * dx_t) * (self.d + alpha_d * ds_t)))
        xa = np.diag(self.d) + alpha_p * dx_t
        sa = np.diag(self.d) + alpha_d * ds_t
        return float(np.sum(xa * sa))


class _InteriorPoint:
    """Mehrotra predictor-corrector on a problem with independent constraints."""

    def __init__(self, problem, settings):
        self.p = problem
        self.settings = settings
        self.nu = sum(abs(n) for n in problem.blocks)
        tau = 1.0 + max(
            float(np.max(np.abs(problem.b))),
            max(float(np.max(np.abs(c_b))) if c_b.size else 0.0 for c_b in problem.c),
        )
        self.x = [tau * (np.ones(-n) if n < 0 else np.eye(n)) for n in problem.blocks]
        self.s = [tau * (np.ones(-n) if n < 0 else np.eye(n)) for n in problem.blocks]
        self.y = np.zeros(problem.num_constraints)
        self.u = np.zeros(problem.num_free)

    def _residuals(self):
        p = self.p
        rp = p.b - p.apply_a(self.x, self.u)
        aty = p.apply_at(self.y)
        rd = [c_b - at_b - s_b for c_b, at_b, s_b in zip(p.c, aty, self.s)]
        rf = p.free_c - p.free_a.T @ self.y if p.num_free else np.zeros(0)
        return rp, rd, rf

    def _newton(self, scalings, chol_m, mb, chol_k, rp, rd, rf, rc_t):
        p = self.p
        h = rp.copy()
        for a_b, sc, rd_b, rc_b in zip(p.a, scalings, rd, rc_t):
            h -= a_b.T @ sc.unscale_x(rc_b).reshape(-1)
            h += a_b.T @ sc.w_sandwich(rd_b).reshape(-1)
        t = scipy.linalg.cho_solve(chol_m, h)
        if p.num_free:
            du = scipy.linalg.cho_solve(chol_k, p.free_a.T @ t - rf)
            dy = t - mb @ du
        else:
            du = np.zeros(0)
            dy = t
        aty = p.apply_at(dy)
        ds, ds_t, dx_t = [], [], []
        for sc, rd_b, at_b, rc_b in zip(scalings, rd, aty, rc_t):
            ds_b = rd_b - at_b
            if not sc.lp:
                ds_b = (ds_b + ds_b.T) / 2
            ds.append(ds_b)
            ds_t.append(sc.scale_s(ds_b))
            dx_t.append(rc_b - ds_t[-1])
        return dx_t, ds, ds_t, dy, du

    @staticmethod
    def _step(scalings, deltas):
        return min(sc.max_step(dl) for sc, dl in zip(scalings, deltas))

    def run(self):
        settings = self.settings
        p = self.p
        stats = []
        best = None
        status = SolverStatus.MAX_ITER
        logger.debug("%s\n%s\n%s", _SEPARA, _HEADER, _SEPARA)
        alpha_p = alpha_d = 0.0
        iteration = 0
        for iteration in range(settings.max_iter + 1):
            rp, rd, rf = self._residuals()
            pobj = p.objective(self.x, self.u)
            dobj = float(p.b @ self.y)
            pres = float(np.max(np.abs(rp)))
            dres = max([float(np.max(np.abs(r))) for r in rd] + ([float(np.max(np.abs(rf)))] if rf.size else []))
            gap = abs(pobj - dobj) / (1.0 + abs(pobj))
            mu = sum(float(np.vdot(x_b, s_b)) for x_b, s_b in zip(self.x, self.s)) / self.nu
            row = dict(iter=iteration, pobj=pobj, dobj=dobj, pres=pres, dres=dres, gap=gap, mu=mu,
                       alpha_p=alpha_p, alpha_d=alpha_d)
            stats.append(row)
            logger.debug(
                "| %4d | %11.4e | %11.4e | %8.2e | %8.2e | %8.2e | %8.2e | %8.2e | %8.2e |",
                iteration, pobj, dobj, pres, dres, gap, mu, alpha_p, alpha_d,
            )
            score = max(pres, dres, gap)
            if best is None or score < best[0]:
                best = (score, self._snapshot())
            if gap <= settings.tol_gap and pres <= settings.tol_feas and dres <= settings.tol_feas:
                status = SolverStatus.OPTIMAL
                best = (score, self._snapshot())
                break
            xnorm = max(float(np.max(np.abs(x_b))) for x_b in self.x)
            ynorm = float(np.max(np.abs(self.y))) if self.y.size else 0.0
            if xnorm > DIVERGENCE_NORM or ynorm > DIVERGENCE_NORM:
                status = SolverStatus.INFEASIBLE
                break
            if iteration == settings.max_iter:
                break
            try:
                alpha_p, alpha_d = self._iterate(rp, rd, rf, mu)
            except (FactorizationError, np.linalg.LinAlgError) as exc:
                logger.debug("%s: %s", p.label, exc)
                status = SolverStatus.NUMERICAL_FAILURE
                break
            if max(alpha_p, alpha_d) < MIN_STEP:
                logger.debug("%s: step length collapsed (alpha_p=%.1e, alpha_d=%.1e)", p.label, alpha_p, alpha_d)
                status = SolverStatus.NUMERICAL_FAILURE
                break
        logger.debug("%s\n| %s after %d iterations", _SEPARA, status.value, iteration)
        return status, best[1], iteration, tuple(stats)

    def _snapshot(self):
        return ([x_b.copy() for x_b in self.x], self.y.copy(), [s_b.copy() for s_b in self.s], self.u.copy())

    def _iterate(self, rp, rd, rf, mu):
        p = self.p
        frac = self.settings.step_fraction
        scalings = [_Scaling(n, x_b, s_b) for n, x_b, s_b in zip(p.blocks, self.x, self.s)]
        m_mat = np.zeros((p.num_constraints, p.num_constraints))
        for sc, a_b in zip(scalings, p.a):
            m_mat += sc.schur(a_b)
        m_mat = (m_mat + m_mat.T) / 2
        chol_m = _regularized_cholesky(m_mat)
        mb = chol_k = None
        if p.num_free:
            mb = scipy.linalg.cho_solve(chol_m, p.free_a.toarray())
            k_mat = p.free_a.T @ mb
            chol_k = _regularized_cholesky((k_mat + k_mat.T) / 2)

        # predictor
        rc_t = [sc.predictor_rc() for sc in scalings]
        dx_t, _, ds_t, _, _ = self._newton(scalings, chol_m, mb, chol_k, rp, rd, rf, rc_t)
        ap = min(1.0, self._step(scalings, dx_t))
        ad = min(1.0, self._step(scalings, ds_t))
        mu_aff = sum(sc.affine_complementarity(ap, ad, dx, ds)
                     for sc, dx, ds in zip(scalings, dx_t, ds_t)) / self.nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        rc_t = [sc.corrector_rc(sigma * mu, dx, ds) for sc, dx, ds in zip(scalings, dx_t, ds_t)]
        dx_t, ds, ds_t, dy, du = self._newton(scalings, chol_m, mb, chol_k, rp, rd, rf, rc_t)
        alpha_p = min(1.0, frac * self._step(scalings, dx_t))
        alpha_d = min(1.0, frac * self._step(scalings, ds_t))

        for i, (sc, dx_b, ds_b) in enumerate(zip(scalings, dx_t, ds)):
            self.x[i] = self.x[i] + alpha_p * sc.unscale_x(dx_b)
            self.s[i] = self.s[i] + alpha_d * ds_b
            if not sc.lp:
                self.x[i] = (self.x[i] + self.x[i].T) / 2
                self.s[i] = (self.s[i] + self.s[i].T) / 2
        self.u = self.u + alpha_p * du
        self.y = self.y + alpha_d * dy
        return alpha_p, alpha_d


def _reduce(problem):
    """Drop linearly dependent constraints; returns the reduced problem and kept indices."""
    m = problem.num_constraints
    gram = np.zeros((m, m))
    for a_b in problem.a:
        gram += (a_b.T @ a_b).toarray()
    keep = independent_rows(gram)
    if keep.size == m:
        return problem, keep
    dropped = sorted(set(range(m)) - set(keep.tolist()))
    names = [problem.names[i] if problem.names else str(i) for i in dropped]
    logger.warning("%s: dropping %d linearly dependent constraint(s): %s", problem.label, len(dropped), ", ".join(names[:10]))
    reduced = SdpProblem(
        problem.blocks,
        problem.c,
        tuple(a_b[:, keep] for a_b in problem.a),
        problem.b[keep],
        problem.free_a[keep, :] if problem.num_free else None,
        problem.free_c if problem.num_free else None,
        tuple(problem.names[i] for i in keep) if problem.names else (),
        problem.label,
    )
    return reduced, keep


def _reduce_free(problem):
    """Drop dependent free columns (duplicate equalities) of an otherwise independent problem."""
    if not problem.num_free:
        return problem, np.arange(0)
    fgram = (problem.free_a.T @ problem.free_a).toarray()
    fkeep = independent_rows(fgram)
    if fkeep.size == problem.num_free:
        return problem, fkeep
    logger.warning("%s: dropping %d dependent free variable(s)", problem.label, problem.num_free - fkeep.size)
    reduced = SdpProblem(problem.blocks, problem.c, problem.a, problem.b, problem.free_a[:, fkeep],
                         problem.free_c[fkeep], problem.names, problem.label)
    return reduced, fkeep


def solve(problem, settings=None):
    """Solve a block SDP; always returns an SdpSolution (status tells the outcome)."""
    settings = settings or SolverSettings()
    started = time.perf_counter()
    logger.info(
        "%s: solving %d constraint(s), %d free, blocks %s",
        problem.label, problem.num_constraints, problem.num_free, list(problem.blocks),
    )
    reduced, keep = _reduce(problem)
    reduced, fkeep = _reduce_free(reduced)
    ipm = _InteriorPoint(reduced, settings)
    status, (x, y_red, s, u_red), iterations, stats = ipm.run()

    y = np.zeros(problem.num_constraints)
    y[keep] = y_red
    u = np.zeros(problem.num_free)
    u[fkeep] = u_red
    sol = SdpSolution(
        status=status,
        primal_value=problem.objective(x, u),
        dual_value=float(problem.b @ y),
        x=tuple(x),
        y=y,
        s=tuple(s),
        u=u,
        iterations=iterations,
        residuals=Residuals(0.0, 0.0, 0.0),
        stats=stats,
        dropped=tuple(sorted(set(range(problem.num_constraints)) - set(keep.tolist()))),
    )
    res = residuals(problem, sol)
    sol = dataclasses.replace(sol, residuals=res)
    logger.info(
        "%s: %s after %d iterations, pobj=%.10g dobj=%.10g (pres=%.1e dres=%.1e gap=%.1e, %.2fs)",
        problem.label, status.value, iterations, sol.primal_value, sol.dual_value,
        res.primal, res.dual, res.gap, time.perf_counter() - started,
    )
    return sol


def write_sparse(problem, path):
    """Dump a problem in SDPA sparse format.

    SDPA solves max F0.Y s.t. F_i.Y = c_i, Y >= 0, so F0 = -C, F_i = A_i and
    c = b. Free variables are written as pairs u = u+ - u- in an extra LP block.
    Entries are "matrix block row col value" with 1-based indices, upper triangle.
    """
    m = problem.num_constraints
    blocks = list(problem.blocks)
    if problem.num_free:
        blocks.append(-2 * problem.num_free)
    lines = [
        f'"{problem.label}"',
        str(m),
        str(len(blocks)),
        " ".join(str(n) for n in blocks),
        " ".join(f"{v:.17g}" for v in problem.b),
    ]

    def emit(mat_idx, blk, size, vec):
        if size < 0:
            for r in np.nonzero(vec)[0]:
                lines.append(f"{mat_idx} {blk} {r + 1} {r + 1} {vec[r]:.17g}")
            return
        full = vec.reshape(size, size)
        rows, cols = np.nonzero(np.triu(full))
        for r, c in zip(rows, cols):
            lines.append(f"{mat_idx} {blk} {r + 1} {c + 1} {full[r, c]:.17g}")

    for k, (size, c_b) in enumerate(zip(problem.blocks, problem.c), start=1):
        emit(0, k, size, -np.asarray(c_b).reshape(-1))
    if problem.num_free:
        emit(0, len(blocks), blocks[-1], np.concatenate([-problem.free_c, problem.free_c]))
    for i in range(m):
        for k, (size, a_b) in enumerate(zip(problem.blocks, problem.a), start=1):
            emit(i + 1, k, size, a_b[:, i].toarray().ravel())
        if problem.num_free:
            row = problem.free_a[i, :].toarray().ravel()
            emit(i + 1, len(blocks), blocks[-1], np.concatenate([row, -row]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.debug("wrote %s (%d lines)", path, len(lines))
