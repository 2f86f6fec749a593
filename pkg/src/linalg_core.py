"""Dense complex-Hermitian linear algebra on bipartite operators.

Bipartite operators use the A-major index convention: the row index (i_A, i_B)
maps to i_A * dB + i_B. Reductions and transposes act on the last two axes, so
they also apply to stacks of operators of shape (..., dA*dB, dA*dB).
"""
import dataclasses

import numpy as np

from src.errors import DimensionError, NotHermitianError, NotPositiveError

HERMITIAN_TOL = 1e-10
RANK_TOL = 1e-7

_SYSTEMS = ("A", "B")


@dataclasses.dataclass(frozen=True)
class BipartiteShape:
    dA: int
    dB: int

    def __post_init__(self):
        if int(self.dA) < 1 or int(self.dB) < 1:
            raise DimensionError(f"subsystem dimensions must be >= 1, got ({self.dA}, {self.dB})")

    @property
    def side(self):
        return self.dA * self.dB

    def swapped(self):
        return BipartiteShape(self.dB, self.dA)


def _check_system(system):
    if system not in _SYSTEMS:
        raise DimensionError(f"system must be 'A' or 'B', got {system!r}")


def _as_bipartite(m, shape):
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"expected square operator(s), got shape {m.shape}")
    if m.shape[-1] != shape.side:
        raise DimensionError(
            f"operator side {m.shape[-1]} does not match bipartite shape {shape.dA}x{shape.dB}"
        )
    return m.reshape(m.shape[:-2] + (shape.dA, shape.dB, shape.dA, shape.dB))


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def max_abs(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def kron(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def max_entangled(d):
    """Unnormalized |Phi_d><Phi_d| with |Phi_d> = sum_i |ii>."""
    v = np.eye(d).reshape(-1)
    return np.outer(v, v).astype(complex)


def swap_operator(d):
    f = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


def partial_trace(m, shape, system):
    _check_system(system)
    t = _as_bipartite(m, shape)
    if system == "A":
        return np.einsum("...ijik->...jk", t)
    return np.einsum("...ijkj->...ik", t)


def partial_transpose(m, shape, system):
    _check_system(system)
    t = _as_bipartite(m, shape)
    # <ij|M|kl>: T_A swaps i<->k, T_B swaps j<->l
    t = np.swapaxes(t, -4, -2) if system == "A" else np.swapaxes(t, -3, -1)
    return t.reshape(np.asarray(m).shape)


def permute_subsystems(m, dims, perm):
    """Reorder the tensor factors of an operator on prod(dims).

    Factor perm[i] of the input becomes factor i of the output.
    """
    dims = tuple(int(d) for d in dims)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(dims))):
        raise DimensionError(f"{perm} is not a permutation of {len(dims)} subsystems")
    m = np.asarray(m)
    side = int(np.prod(dims))
    if m.shape != (side, side):
        raise DimensionError(f"operator of shape {m.shape} does not act on dims {dims}")
    n = len(dims)
    t = m.reshape(dims + dims)
    t = t.transpose(perm + tuple(p + n for p in perm))
    return t.reshape(side, side)


def hermitian_asymmetry(h):
    h = np.asarray(h)
    return max_abs(h - dagger(h))


def require_hermitian(h, tol=HERMITIAN_TOL):
    if tol < 0:
        raise ValueError(f"tolerance must be nonnegative, got {tol}")
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    asym = hermitian_asymmetry(h)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    return (h + dagger(h)) / 2


def hermitian_eig(h, tol=HERMITIAN_TOL):
    """Eigenvalues in ascending order and the unitary of eigenvectors (columns)."""
    h = require_hermitian(h, tol)
    if np.iscomplexobj(h) and is_real(h):
        h = h.real
    evals, evecs = np.linalg.eigh(h)
    return evals, evecs


def positive_negative_parts(h, tol=HERMITIAN_TOL):
    """Split h = h_plus - h_minus with orthogonal supports."""
    evals, evecs = hermitian_eig(h, tol)
    pos = np.clip(evals, 0.0, None)
    neg = np.clip(-evals, 0.0, None)
    h_plus = (evecs * pos) @ dagger(evecs)
    h_minus = (evecs * neg) @ dagger(evecs)
    return h_plus, h_minus


def support_projector(h, rank_tol=RANK_TOL):
    """Projector onto eigenvectors with eigenvalue above rank_tol * lambda_max."""
    evals, evecs = hermitian_eig(h, max(HERMITIAN_TOL, 1e-9 * max(1.0, max_abs(h))))
    scale = max(float(evals[-1]), 0.0) if evals.size else 0.0
    threshold = rank_tol * scale
    if evals.size and evals[0] < -10 * threshold:
        raise NotPositiveError(evals[0], -10 * threshold)
    keep = evecs[:, evals > threshold]
    return keep @ dagger(keep)


def kernel_basis(h, rank_tol=RANK_TOL):
    """Orthonormal columns spanning the complement of support_projector(h)."""
    evals, evecs = hermitian_eig(h, max(HERMITIAN_TOL, 1e-9 * max(1.0, max_abs(h))))
    scale = max(float(evals[-1]), 0.0) if evals.size else 0.0
    return evecs[:, evals <= rank_tol * scale]


def min_eigenvalue(h):
    h = np.asarray(h)
    return float(np.linalg.eigvalsh((h + dagger(h)) / 2)[0])


def is_real(m, tol=0.0):
    return max_abs(np.imag(np.asarray(m))) <= tol
