"""Quantum channels as Kraus lists, their Choi matrices and Kraus-space projectors.

The Choi matrix places the reference system A first:
J_AB = sum_ij |i><j|_A (x) N(|i><j|), built from the unnormalized |Phi> = sum_k |kk>.
"""
import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from src.errors import ChannelError, DimensionError
from src.linalg_core import (
    RANK_TOL,
    BipartiteShape,
    dagger,
    hermitian_eig,
    max_abs,
    permute_subsystems,
    support_projector,
    swap_operator,
)

logger = logging.getLogger(__name__)

TP_TOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class QuantumChannel:
    dim_in: int
    dim_out: int
    kraus: tuple
    name: str = "channel"
    tp_residual: float = 0.0

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise DimensionError(f"input of shape {rho.shape} does not match dim_in {self.dim_in}")
        return sum(e @ rho @ dagger(e) for e in self.kraus)

    @property
    def shape(self):
        return BipartiteShape(self.dim_in, self.dim_out)

    def is_real(self):
        return all(max_abs(e.imag) == 0.0 for e in self.kraus)

    def __repr__(self):
        return f"QuantumChannel({self.name!r}, {self.dim_in}->{self.dim_out}, {len(self.kraus)} Kraus)"


@dataclasses.dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    shape: BipartiteShape


@dataclasses.dataclass(frozen=True, eq=False)
class KrausSupport:
    projector: np.ndarray
    shape: BipartiteShape
    rank: int


def from_kraus(kraus, name="channel"):
    """Validate a Kraus list and wrap it as a channel."""
    ops = [np.array(e, dtype=complex) for e in kraus]
    if not ops:
        raise ChannelError("a channel needs at least one Kraus operator")
    first = ops[0].shape
    if len(first) != 2:
        raise ChannelError(f"Kraus operators must be matrices, got shape {first}")
    for e in ops:
        if e.shape != first:
            raise ChannelError(f"Kraus operators have mixed shapes {first} and {e.shape}")
    dim_out, dim_in = first
    gram = sum(dagger(e) @ e for e in ops)
    residual = max_abs(gram - np.eye(dim_in))
    if residual > TP_TOL:
        raise ChannelError(
            f"{name}: Kraus operators are not trace preserving, max |sum E^dag E - 1| = {residual:.3e}",
            residual=residual,
        )
    logger.debug("channel %s: %d -> %d, %d Kraus, TP residual %.2e", name, dim_in, dim_out, len(ops), residual)
    return QuantumChannel(dim_in, dim_out, tuple(ops), name, residual)


def _vectorize(e):
    # (1 (x) E)|Phi> = sum_a |a> (x) E|a>, so the A-major vector is E^T flattened
    return e.T.reshape(-1)


def choi(ch):
    vecs = np.stack([_vectorize(e) for e in ch.kraus], axis=1)
    j = vecs @ dagger(vecs)
    return ChoiMatrix((j + dagger(j)) / 2, ch.shape)


def kraus_from_choi(j, shape, name="channel", rank_tol=RANK_TOL):
    """Kraus operators from the spectral factorization of a Choi matrix."""
    evals, evecs = hermitian_eig(j, 1e-9)
    keep = evals > rank_tol * max(evals[-1], 0.0)
    kraus = [np.sqrt(lam) * v.reshape(shape.dA, shape.dB).T for lam, v in zip(evals[keep], evecs[:, keep].T)]
    return from_kraus(kraus, name)


def kraus_support(ch, rank_tol=RANK_TOL):
    p = support_projector(choi(ch).matrix, rank_tol)
    return KrausSupport(p, ch.shape, int(round(float(np.trace(p).real))))


def choi_product(j1, shape1, j2, shape2):
    """Choi matrix of a product channel from the Choi matrices of its factors.

    kron(J1, J2) lives on A1 B1 A2 B2; the product channel expects (A1 A2)(B1 B2).
    """
    dims = (shape1.dA, shape1.dB, shape2.dA, shape2.dB)
    joint = permute_subsystems(np.kron(j1, j2), dims, (0, 2, 1, 3))
    return joint, BipartiteShape(shape1.dA * shape2.dA, shape1.dB * shape2.dB)


def tensor_channels(n, m):
    kraus = [np.kron(e, f) for e in n.kraus for f in m.kraus]
    return from_kraus(kraus, f"{n.name}*{m.name}")


# --------------------------------------------------
# Named channel families
# --------------------------------------------------

def _require(condition, message):
    if not condition:
        raise ChannelError(message)


def identity_channel(d):
    _require(int(d) >= 2, f"identity channel needs d >= 2, got {d}")
    return from_kraus([np.eye(d)], f"identity({d})")


def erasure_channel(d, p):
    """With probability p replace the input by the flag state |d>; output dimension d+1."""
    _require(int(d) >= 2, f"erasure channel needs d >= 2, got {d}")
    _require(0.0 <= p <= 1.0, f"erasure probability must lie in [0, 1], got {p}")
    keep = np.zeros((d + 1, d))
    keep[:d, :d] = np.eye(d)
    kraus = [np.sqrt(1 - p) * keep]
    for i in range(d):
        flag = np.zeros((d + 1, d))
        flag[d, i] = 1.0
        kraus.append(np.sqrt(p) * flag)
    kraus = [e for e in kraus if max_abs(e) > 0]
    return from_kraus(kraus, f"erasure({d},{p:g})")


def werner_holevo(d):
    """rho -> (1 tr(rho) - rho^T) / (d - 1)."""
    _require(int(d) >= 2, f"Werner-Holevo channel needs d >= 2, got {d}")
    j_ab = (np.eye(d * d) - swap_operator(d).real) / (d - 1)
    return kraus_from_choi(j_ab, BipartiteShape(d, d), f"werner_holevo({d})")


def nr_channel(r):
    """Qutrit-to-qubit family with E0 = |0><0| + sqrt(r)|1><1|, E1 = sqrt(1-r)|0><1| + |1><2|."""
    _require(0.0 <= r <= 0.5, f"N_r is defined for 0 <= r <= 0.5, got {r}")
    e0 = np.zeros((2, 3))
    e0[0, 0] = 1.0
    e0[1, 1] = np.sqrt(r)
    e1 = np.zeros((2, 3))
    e1[0, 1] = np.sqrt(1 - r)
    e1[1, 2] = 1.0
    return from_kraus([e0, e1], f"nr({r:g})")


def mixed_unitary(unitaries, probs, name="mixed_unitary"):
    probs = np.asarray(probs, dtype=float)
    _require(len(unitaries) == len(probs), "need one probability per unitary")
    _require(np.all(probs > 0), f"probabilities must be strictly positive, got {probs.tolist()}")
    _require(abs(probs.sum() - 1.0) <= 1e-12, f"probabilities must sum to 1, got {probs.sum():.15g}")
    kraus = []
    for u in unitaries:
        u = np.asarray(u, dtype=complex)
        _require(u.ndim == 2 and u.shape[0] == u.shape[1], f"unitaries must be square, got {u.shape}")
        _require(max_abs(dagger(u) @ u - np.eye(u.shape[0])) <= TP_TOL, "operator is not unitary")
        kraus.append(u)
    return from_kraus([np.sqrt(p) * u for p, u in zip(probs, kraus)], name)


def haar_isometry(rows, cols, rng):
    """Haar-random isometry from the QR factorization of a Ginibre matrix."""
    g = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_channel(dim_in, dim_out, kraus_rank, seed):
    _require(dim_in >= 1 and dim_out >= 1, "dimensions must be positive")
    _require(1 <= kraus_rank <= dim_in * dim_out, f"Kraus rank must lie in [1, {dim_in * dim_out}], got {kraus_rank}")
    rng = np.random.default_rng(seed)
    v = haar_isometry(dim_out * kraus_rank, dim_in, rng)
    kraus = [v[j * dim_out:(j + 1) * dim_out, :] for j in range(kraus_rank)]
    return from_kraus(kraus, f"random({dim_in},{dim_out},{kraus_rank},seed={seed})")


# --------------------------------------------------
# JSON files
# --------------------------------------------------

def channel_to_dict(ch):
    return {
        "name": ch.name,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in e] for e in ch.kraus],
    }


def channel_from_dict(data):
    try:
        dim_in = int(data["dim_in"])
        dim_out = int(data["dim_out"])
        kraus = []
        for op in data["kraus"]:
            e = np.array([[complex(re, im) for re, im in row] for row in op], dtype=complex)
            if e.shape != (dim_out, dim_in):
                raise ChannelError(f"Kraus operator of shape {e.shape}, expected ({dim_out}, {dim_in})")
            kraus.append(e)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ChannelError):
            raise
        raise ChannelError(f"malformed channel description: {exc}") from exc
    return from_kraus(kraus, str(data.get("name", "channel")))


def save_channel(ch, path):
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=2))


def load_channel(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ChannelError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ChannelError(f"{path}: cannot read channel file ({exc})") from exc
    return channel_from_dict(data)
