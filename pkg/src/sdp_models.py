"""SDP formulations of the channel-capacity bounds and the interpretation of their solutions.

All bipartite operators live on A (channel input, the reference half of the
Choi matrix) followed by B (channel output). Logarithms are base 2.
"""
import dataclasses
import enum
import logging
import math

import numpy as np

from settings import default_solver_settings
from src import channels
from src.errors import ModelError, NonMonotoneError
from src.linalg_core import (
    is_real,
    kernel_basis,
    max_abs,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    swap_operator,
)
from src.sdp_builder import SdpBuilder, bmat

logger = logging.getLogger(__name__)

EPS_D = 1e-7
TOL_K = 1e-4
PRESCAN_POINTS = 8
MAX_ACTIVATION_DIM = 12
MAX_JOINT_SIDE = 36
SIDES = ("primal", "dual", "both")


class CodeClass(enum.Enum):
    NS = "ns"
    PPTP = "pptp"
    NS_PPTP = "ns-pptp"

    @property
    def has_ns(self):
        return self in (CodeClass.NS, CodeClass.NS_PPTP)

    @property
    def has_ppt(self):
        return self in (CodeClass.PPTP, CodeClass.NS_PPTP)


@dataclasses.dataclass(frozen=True, eq=False)
class FidelityDual:
    mu: float
    x: np.ndarray
    s: np.ndarray = None
    y: np.ndarray = None
    v: np.ndarray = None


@dataclasses.dataclass(frozen=True, eq=False)
class FidelityResult:
    value: float
    k: float
    code: CodeClass
    w: np.ndarray = None
    rho: np.ndarray = None
    dual_value: float = None
    dual_vars: FidelityDual = None


@dataclasses.dataclass(frozen=True, eq=False)
class KappaResult:
    kappa: float
    one_shot_zero_error: int
    bracket: tuple
    code: CodeClass
    evaluations: int = 0


@dataclasses.dataclass(frozen=True, eq=False)
class GammaResult:
    gamma: float
    q_gamma: float
    r: np.ndarray = None
    rho: np.ndarray = None
    dual_mu: float = None
    dual_y: np.ndarray = None
    dual_v: np.ndarray = None
    iterations: int = 0
    gap: float = 0.0


@dataclasses.dataclass(frozen=True, eq=False)
class CbNormResult:
    value: float
    q_theta: float
    x: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    restricted: bool = False
    iterations: int = 0
    gap: float = 0.0


@dataclasses.dataclass(frozen=True, eq=False)
class UpsilonResult:
    upsilon: float
    u: np.ndarray
    s: np.ndarray
    kappa_ns: float
    support_residual: float = 0.0


def _check_side(side):
    if side not in SIDES:
        raise ModelError(f"side must be one of {SIDES}, got {side!r}")


def _check_k(k):
    if not k >= 1.0:
        raise ModelError(f"code dimension k must be >= 1, got {k}")


def _is_unit(k):
    return abs(k - 1.0) <= 1e-12


def _solver(settings):
    return settings or default_solver_settings()


def _choi(ch):
    c = channels.choi(ch)
    return c.matrix, c.shape


# --------------------------------------------------
# Channel fidelity and its deviation form
# --------------------------------------------------

def _fidelity_constraints(b, shape, k, code):
    rho = b.hermitian(shape.dA, "rho", psd=True)
    w = b.hermitian(shape.side, "W", psd=True)
    rho_1 = rho.kron(np.eye(shape.dB))
    b.psd(rho_1 - w, "rho(x)1 - W")
    if code.has_ppt:
        w_tb = w.partial_transpose(shape, "B")
        b.psd(rho_1 / k - w_tb, "rho(x)1/k - W^TB")
        b.psd(rho_1 / k + w_tb, "rho(x)1/k + W^TB")
    if code.has_ns:
        b.equal(w.partial_trace(shape, "A"), np.eye(shape.dB) / k ** 2, "tr_A W")
    b.equal(rho.trace(), 1.0, "tr rho")
    return rho, w


def _trivial_witness(shape):
    rho = np.eye(shape.dA) / shape.dA
    return rho, np.kron(rho, np.eye(shape.dB))


def _fidelity_primal(j, shape, k, code, real, label, settings):
    b = SdpBuilder(real, label)
    rho, w = _fidelity_constraints(b, shape, k, code)
    b.maximize(w.inner(j))
    sol = b.solve(settings)
    return sol.objective, sol.hermitian(w), sol.hermitian(rho)


def _fidelity_dual(j, shape, k, code, real, label, settings):
    b = SdpBuilder(real, label)
    mu = b.scalar("mu")
    x = b.hermitian(shape.side, "X", psd=True)
    lhs = x - j
    traced = x
    s = y = v = None
    if code.has_ns:
        s = b.hermitian(shape.dB, "S")
        lhs = lhs + s.rkron(np.eye(shape.dA))
    if code.has_ppt:
        y = b.hermitian(shape.side, "Y", psd=True)
        v = b.hermitian(shape.side, "V", psd=True)
        lhs = lhs + (v - y).partial_transpose(shape, "B")
        traced = x + (y + v) / k
    b.psd(lhs, "X + 1(x)S - J - (Y - V)^TB")
    b.psd(mu.kron(np.eye(shape.dA)) - traced.partial_trace(shape, "B"), "mu 1 - tr_B(X + (Y + V)/k)")
    objective = mu + s.trace() / k ** 2 if s is not None else mu
    b.minimize(objective.real())
    sol = b.solve(settings)
    dual = FidelityDual(
        mu=sol.scalar(mu),
        x=sol.hermitian(x),
        s=sol.hermitian(s) if s is not None else None,
        y=sol.hermitian(y) if y is not None else None,
        v=sol.hermitian(v) if v is not None else None,
    )
    return sol.objective, dual


def fidelity(ch, k, code=CodeClass.PPTP, side="primal", settings=None):
    """Optimal channel fidelity F(ch, k) for codes of the given class."""
    _check_k(k)
    _check_side(side)
    j, shape = _choi(ch)
    real = ch.is_real()
    settings = _solver(settings)
    value = w = rho = dual_value = dual_vars = None
    if _is_unit(k):
        rho, w = _trivial_witness(shape)
        value = dual_value = 1.0
        dual_vars = FidelityDual(mu=1.0, x=j.copy(),
                                 s=np.zeros((shape.dB, shape.dB)) if code.has_ns else None,
                                 y=np.zeros_like(j) if code.has_ppt else None,
                                 v=np.zeros_like(j) if code.has_ppt else None)
        if side == "primal":
            dual_value = dual_vars = None
        elif side == "dual":
            w = rho = None
        return FidelityResult(value, k, code, w, rho, dual_value, dual_vars)
    label = f"F[{code.value}] {ch.name} k={k:g}"
    if side in ("primal", "both"):
        value, w, rho = _fidelity_primal(j, shape, k, code, real, label, settings)
    if side in ("dual", "both"):
        dual_value, dual_vars = _fidelity_dual(j, shape, k, code, real, label + " dual", settings)
        if value is None:
            value = dual_value
    if side == "both" and abs(value - dual_value) > 1e-6:
        logger.warning("%s: primal %.10g and dual %.10g differ by %.2e", label, value, dual_value, abs(value - dual_value))
    return FidelityResult(value, k, code, w, rho, dual_value, dual_vars)


def deviation(ks, k, code=CodeClass.PPTP, settings=None):
    """max tr P(W - rho(x)1) over the fidelity constraints; 0 exactly when F = 1."""
    _check_k(k)
    if _is_unit(k):
        return 0.0
    shape = ks.shape
    real = is_real(ks.projector)
    b = SdpBuilder(real, f"D[{code.value}] rank={ks.rank} k={k:g}")
    rho, w = _fidelity_constraints(b, shape, k, code)
    b.maximize((w - rho.kron(np.eye(shape.dB))).inner(ks.projector))
    return b.solve(_solver(settings)).objective


def deviation_scan(ks, code, grid, settings=None):
    """D(k) on a grid of code dimensions, for inspecting where the zero set ends."""
    return [(float(k), deviation(ks, float(k), code, settings)) for k in grid]


def werner_holevo_witness(d):
    """Feasible (rho, W) of the PPT fidelity SDP of W_d at k = (d+2)/d with fidelity 1."""
    if d < 2:
        raise ModelError(f"Werner-Holevo witness needs d >= 2, got {d}")
    rho = np.eye(d) / d
    w = np.eye(d * d) / (d + 2) - 2.0 / (d * (d + 2)) * swap_operator(d).real
    return rho, w


def check_fidelity_witness(ch, k, rho, w, code=CodeClass.PPTP):
    """Largest constraint violation of a candidate (rho, W) and its objective tr(J W)."""
    j, shape = _choi(ch)
    rho_1 = np.kron(rho, np.eye(shape.dB))
    violations = [
        -min_eigenvalue(rho),
        -min_eigenvalue(w),
        -min_eigenvalue(rho_1 - w),
        abs(np.trace(rho).real - 1.0),
    ]
    if code.has_ppt:
        w_tb = partial_transpose(w, shape, "B")
        violations += [-min_eigenvalue(rho_1 / k - w_tb), -min_eigenvalue(rho_1 / k + w_tb)]
    if code.has_ns:
        violations.append(max_abs(partial_trace(w, shape, "A") - np.eye(shape.dB) / k ** 2))
    return max(0.0, max(violations)), float(np.trace(j @ w).real)


# --------------------------------------------------
# kappa and one-shot zero-error codes
# --------------------------------------------------

def kappa(ch, code=CodeClass.PPTP, tol_k=TOL_K, settings=None, eps_d=EPS_D):
    """Largest k with perfect fidelity, by bisection on the deviation predicate."""
    ks = channels.kraus_support(ch)
    calls = [0]

    def holds(k):
        calls[0] += 1
        dev = deviation(ks, k, code, settings)
        logger.info("kappa[%s] %s: D(%.6f) = %.3e", code.value, ch.name, k, dev)
        return dev >= -eps_d

    if code.has_ppt:
        k_max = gamma(ch, side="primal", settings=settings).gamma + 1.0
    else:
        k_max = float(ch.dim_in)

    lo, hi = 1.0, k_max
    if code.has_ns:
        grid = np.linspace(1.0, k_max, PRESCAN_POINTS)
        flags = [True] + [holds(k) for k in grid[1:]]
        first_false = flags.index(False) if False in flags else len(flags)
        if any(flags[first_false:]):
            raise NonMonotoneError(
                f"kappa[{code.value}] {ch.name}: zero set of D is not an interval on "
                f"{np.round(grid, 4).tolist()} (flags {flags}); use deviation_scan to inspect"
            )
        if first_false == len(flags):
            if code.has_ppt:
                raise ModelError(f"kappa[{code.value}] {ch.name}: D(k) = 0 still holds at k = {k_max:g}")
            # kappa_NS can reach dim_in exactly; widen once
            lo, hi = k_max, 2.0 * ch.dim_in
            if holds(hi):
                raise ModelError(f"kappa[{code.value}] {ch.name}: D(k) = 0 still holds at k = {hi:g}")
        else:
            lo, hi = float(grid[first_false - 1]), float(grid[first_false])
    elif holds(hi):
        raise ModelError(f"kappa[{code.value}] {ch.name}: D(k) = 0 still holds at k = {hi:g}")

    while hi - lo > tol_k:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid

    one_shot = math.floor(lo)
    j = math.floor(hi)
    if lo < j < hi and holds(float(j)):
        one_shot = j
    value = 0.5 * (lo + hi)
    logger.info("kappa[%s] %s = %.6f in [%.6f, %.6f] after %d evaluations", code.value, ch.name, value, lo, hi, calls[0])
    return KappaResult(value, int(one_shot), (lo, hi), code, calls[0])


def one_shot_zero_error(ch, code=CodeClass.PPTP, upper=None, settings=None, eps_d=EPS_D):
    """Largest integer j <= upper whose deviation vanishes (the integer part of kappa)."""
    if upper is None:
        upper = math.floor(gamma(ch, side="primal", settings=settings).gamma + 1e-6)
    ks = channels.kraus_support(ch)
    for j in range(int(upper), 1, -1):
        if deviation(ks, float(j), code, settings) >= -eps_d:
            return j
    return 1


def kappa_activated(ch, d_max, settings=None):
    """max over 2 <= d <= d_max of floor(kappa_PPT(ch (x) I_d)) / d."""
    if int(d_max) < 2:
        raise ModelError(f"d_max must be >= 2, got {d_max}")
    if ch.dim_in * d_max > MAX_ACTIVATION_DIM:
        raise ModelError(
            f"kappa_activated: dim_in * d_max = {ch.dim_in * d_max} exceeds the solver scale guard {MAX_ACTIVATION_DIM}"
        )
    base = gamma(ch, side="primal", settings=settings).gamma
    best = 0.0
    for d in range(2, int(d_max) + 1):
        joint = channels.tensor_channels(ch, channels.identity_channel(d))
        upper = math.floor(d * base + 1e-6)
        j = one_shot_zero_error(joint, CodeClass.PPTP, upper, settings)
        logger.info("kappa_activated %s: d=%d floor(kappa)=%d ratio %.6f", ch.name, d, j, j / d)
        best = max(best, j / d)
    return best


# --------------------------------------------------
# Upsilon (NS-assisted zero-error)
# --------------------------------------------------

def upsilon(ks, settings=None, eps_d=EPS_D):
    """max tr S over 0 <= U <= S(x)1, tr_A U = 1, with S(x)1 - U supported off P."""
    shape = ks.shape
    p = ks.projector
    q = kernel_basis(p, 0.5)
    real = is_real(p) and is_real(q)
    b = SdpBuilder(real, f"Upsilon rank={ks.rank}")
    s = b.hermitian(shape.dA, "S")
    u = s.kron(np.eye(shape.dB))
    if q.shape[1]:
        t = b.hermitian(q.shape[1], "T", psd=True)
        u = u - (q @ t) @ q.conj().T
    b.psd(u, "U")
    b.equal(u.partial_trace(shape, "A"), np.eye(shape.dB), "tr_A U")
    b.maximize(s.trace().real())
    sol = b.solve(_solver(settings))
    s_val, u_val = sol.hermitian(s), sol.hermitian(u)
    residual = abs(float(np.trace(p @ (np.kron(s_val, np.eye(shape.dB)) - u_val)).real))
    if residual > 10 * eps_d:
        raise ModelError(f"Upsilon: tr P(S(x)1 - U) = {residual:.2e} exceeds {10 * eps_d:.0e}")
    value = sol.objective
    return UpsilonResult(value, u_val, s_val, math.sqrt(max(value, 0.0)), residual)


# --------------------------------------------------
# Gamma and the partial-transpose cb norm
# --------------------------------------------------

def gamma(ch, side="both", settings=None):
    """Gamma(ch) from the primal and/or dual SDP; Q_Gamma = log2 Gamma."""
    _check_side(side)
    j, shape = _choi(ch)
    real = ch.is_real()
    settings = _solver(settings)
    value = r_val = rho_val = mu_val = y_val = v_val = None
    iterations, gap = 0, 0.0
    if side in ("primal", "both"):
        b = SdpBuilder(real, f"Gamma {ch.name}")
        rho = b.hermitian(shape.dA, "rho", psd=True)
        r = b.hermitian(shape.side, "R", psd=True)
        rho_1 = rho.kron(np.eye(shape.dB))
        r_tb = r.partial_transpose(shape, "B")
        b.psd(rho_1 - r_tb, "rho(x)1 - R^TB")
        b.psd(rho_1 + r_tb, "rho(x)1 + R^TB")
        b.equal(rho.trace(), 1.0, "tr rho")
        b.maximize(r.inner(j))
        sol = b.solve(settings)
        value, r_val, rho_val = sol.objective, sol.hermitian(r), sol.hermitian(rho)
        iterations, gap = sol.sdp.iterations, sol.sdp.residuals.gap
    if side in ("dual", "both"):
        b = SdpBuilder(real, f"Gamma dual {ch.name}")
        mu = b.scalar("mu")
        y = b.hermitian(shape.side, "Y", psd=True)
        v = b.hermitian(shape.side, "V", psd=True)
        b.psd((v - y).partial_transpose(shape, "B") - j, "(V - Y)^TB - J")
        b.psd(mu.kron(np.eye(shape.dA)) - (v + y).partial_trace(shape, "B"), "mu 1 - tr_B(V + Y)")
        b.minimize(mu)
        sol = b.solve(settings)
        mu_val, y_val, v_val = sol.objective, sol.hermitian(y), sol.hermitian(v)
        iterations += sol.sdp.iterations
        gap = max(gap, sol.sdp.residuals.gap)
        if value is None:
            value = mu_val
        elif abs(value - mu_val) > 1e-6 * max(1.0, abs(value)):
            logger.warning("Gamma %s: primal %.10g and dual %.10g differ", ch.name, value, mu_val)
    return GammaResult(value, math.log2(value), r_val, rho_val, mu_val, y_val, v_val, iterations, gap)


def cb_norm_pt(ch, restricted=False, settings=None):
    """Completely bounded trace norm of the partially transposed Choi matrix; Q_Theta = log2 of it.

    restricted=True imposes rho0 = rho1 and X = X^dag, which gives a value
    between Gamma and the cb norm.
    """
    j, shape = _choi(ch)
    jt = partial_transpose(j, shape, "B")
    b = SdpBuilder(ch.is_real(), f"cb-norm{' restricted' if restricted else ''} {ch.name}")
    rho0 = b.hermitian(shape.dA, "rho0")
    rho1 = rho0 if restricted else b.hermitian(shape.dA, "rho1")
    x = b.hermitian(shape.side, "X") if restricted else b.matrix(shape.side, shape.side, "X")
    eye_b = np.eye(shape.dB)
    b.psd(bmat([[rho0.kron(eye_b), x], [x.adjoint(), rho1.kron(eye_b)]]), "[[rho0(x)1, X], [X^dag, rho1(x)1]]")
    b.equal(rho0.trace(), 1.0, "tr rho0")
    if not restricted:
        b.equal(rho1.trace(), 1.0, "tr rho1")
    b.maximize(x.inner(jt))
    sol = b.solve(_solver(settings))
    value = sol.objective
    return CbNormResult(
        value, math.log2(value), sol.value(x), sol.hermitian(rho0), sol.hermitian(rho1),
        restricted, sol.sdp.iterations, sol.sdp.residuals.gap,
    )


# --------------------------------------------------
# Composite statements
# --------------------------------------------------

def superactivation_bound(a, b, settings=None):
    """Q_Gamma(a) + Q_Gamma(b), an upper bound on the PPT-assisted capacity of a (x) b."""
    return gamma(a, side="primal", settings=settings).q_gamma + gamma(b, side="primal", settings=settings).q_gamma


def lemma1_check(n1, n2, k, settings=None):
    """(F(n1,k) F(n2,Gamma(n2)), F(n1 (x) n2, k Gamma(n2)), F(n1,k)) for PPT-preserving codes."""
    joint_side = n1.dim_in * n2.dim_in * n1.dim_out * n2.dim_out
    if joint_side > MAX_JOINT_SIDE:
        raise ModelError(f"lemma1_check: joint Choi side {joint_side} exceeds {MAX_JOINT_SIDE}")
    g2 = max(1.0, gamma(n2, side="primal", settings=settings).gamma)
    f1 = fidelity(n1, k, CodeClass.PPTP, settings=settings).value
    f2 = fidelity(n2, g2, CodeClass.PPTP, settings=settings).value
    mid = fidelity(channels.tensor_channels(n1, n2), k * g2, CodeClass.PPTP, settings=settings).value
    return f1 * f2, mid, f1
