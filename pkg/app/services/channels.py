"""
Quantum channels and general linear maps stored as unnormalized Choi matrices.

The Choi matrix of a map Psi from d_in to d_out is
    J = sum_ij |i><j| (x) Psi(|i><j|)
on the (input, output) legs, so a CPTP map has trace d_in.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError
from app.services import linalg


@dataclass(frozen=True)
class Channel:
    d_in: int
    d_out: int
    choi: np.ndarray = field(repr=False)

    def __post_init__(self):
        choi = linalg.as_matrix(self.choi)
        side = self.d_in * self.d_out
        if choi.shape != (side, side):
            raise DimensionMismatchError(
                f"choi of shape {choi.shape} does not match d_in={self.d_in}, d_out={self.d_out}"
            )
        object.__setattr__(self, "choi", choi)

    @property
    def dims(self):
        return (self.d_in, self.d_out)

    def tensor4(self) -> np.ndarray:
        """Choi as J[i, o, i', o']."""
        return self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)

    def __add__(self, other: "Channel") -> "Channel":
        _require_same_dims(self, other)
        return Channel(self.d_in, self.d_out, self.choi + other.choi)

    def __sub__(self, other: "Channel") -> "Channel":
        _require_same_dims(self, other)
        return Channel(self.d_in, self.d_out, self.choi - other.choi)

    def scaled(self, factor: float) -> "Channel":
        return Channel(self.d_in, self.d_out, factor * self.choi)


@dataclass(frozen=True)
class KrausSet:
    d_in: int
    d_out: int
    operators: List[np.ndarray]

    @property
    def trace_preserving(self) -> bool:
        total = sum(k.conj().T @ k for k in self.operators)
        return bool(np.linalg.norm(total - np.eye(self.d_in)) <= settings.CHANNEL_TOL)


@dataclass(frozen=True)
class ChannelVerdict:
    cp: bool
    tp: bool
    min_eigenvalue: float
    tp_residual: float

    @property
    def is_cptp(self) -> bool:
        return self.cp and self.tp


def _require_same_dims(f: Channel, g: Channel) -> None:
    if f.dims != g.dims:
        raise DimensionMismatchError(f"channel dims {f.dims} and {g.dims} differ")


def choi_from_kraus(k: KrausSet) -> Channel:
    ops = [linalg.as_matrix(op) for op in k.operators]
    if not ops:
        raise DimensionMismatchError("empty Kraus set")
    for op in ops:
        if op.shape != (k.d_out, k.d_in):
            raise DimensionMismatchError(f"Kraus operator of shape {op.shape}, expected {(k.d_out, k.d_in)}")
    # |K>> = sum_i |i> (x) K|i>, row-major over (input, output)
    vecs = [op.T.reshape(-1) for op in ops]
    choi = sum(np.outer(v, v.conj()) for v in vecs)
    return Channel(k.d_in, k.d_out, choi)


def kraus_from_choi(c: Channel, cutoff: float = None) -> KrausSet:
    values, vectors = linalg.eigh(c.choi)
    cutoff = settings.RANK_CUTOFF if cutoff is None else cutoff
    floor = cutoff * max(float(values[0]), 0.0)
    ops = []
    for value, vec in zip(values, vectors.T):
        if value <= floor:
            continue
        ops.append(np.sqrt(value) * vec.reshape(c.d_in, c.d_out).T)
    return KrausSet(c.d_in, c.d_out, ops)


def is_channel(c: Channel, tol: float = None) -> ChannelVerdict:
    tol = settings.CHANNEL_TOL if tol is None else tol
    hermitian = np.linalg.norm(c.choi - c.choi.conj().T) <= linalg.hermitian_tol(c.choi)
    if hermitian:
        min_eig = float(linalg.eigh(c.choi)[0][-1])
    else:
        min_eig = float("-inf")
    marginal = linalg.partial_trace(c.choi, (c.d_in, c.d_out), keep=[0])
    tp_residual = float(np.linalg.norm(marginal - np.eye(c.d_in)))
    scale = max(1.0, float(np.linalg.norm(c.choi)))
    return ChannelVerdict(
        cp=bool(hermitian and min_eig >= -tol * scale),
        tp=tp_residual <= tol,
        min_eigenvalue=min_eig,
        tp_residual=tp_residual,
    )


def apply(c: Channel, rho) -> np.ndarray:
    rho = linalg.as_matrix(rho)
    if rho.shape != (c.d_in, c.d_in):
        raise DimensionMismatchError(f"state of shape {rho.shape} for a channel with d_in={c.d_in}")
    # Tr_in[J (rho^T (x) I)]
    return np.einsum("iojp,ij->op", c.tensor4(), rho)


def compose(f: Channel, g: Channel) -> Channel:
    """f o g: apply g first."""
    if g.d_out != f.d_in:
        raise DimensionMismatchError(f"cannot compose: g outputs {g.d_out}, f takes {f.d_in}")
    out = np.einsum("ambn,mcnd->acbd", g.tensor4(), f.tensor4())
    side = g.d_in * f.d_out
    return Channel(g.d_in, f.d_out, out.reshape(side, side))


def tensor(f: Channel, g: Channel) -> Channel:
    joint = linalg.kron(f.choi, g.choi)
    dims = (f.d_in, f.d_out, g.d_in, g.d_out)
    choi = linalg.permute_systems(joint, dims, [0, 2, 1, 3])
    return Channel(f.d_in * g.d_in, f.d_out * g.d_out, choi)


def map_inner(f: Channel, g: Channel) -> complex:
    _require_same_dims(f, g)
    return linalg.hs_inner(f.choi, g.choi)


def identity_channel(d: int) -> Channel:
    return Channel(d, d, linalg.max_entangled(d))


def partial_trace_channel(d_in: int, d_keep: int, d_drop: int) -> Channel:
    """Tr over the second factor of an input d_in = d_keep * d_drop."""
    if d_in != d_keep * d_drop:
        raise DimensionMismatchError(f"d_in={d_in} is not {d_keep}x{d_drop}")
    keep = np.eye(d_keep)
    operators = [np.kron(keep, np.eye(d_drop)[j:j + 1, :]) for j in range(d_drop)]
    return choi_from_kraus(KrausSet(d_in, d_keep, operators))


def unitary_channel(u) -> Channel:
    u = linalg.as_matrix(u)
    return choi_from_kraus(KrausSet(u.shape[1], u.shape[0], [u]))


def uniform_channel(d_in: int, d_out: int) -> Channel:
    return Channel(d_in, d_out, linalg.kron(np.eye(d_in), linalg.maximally_mixed(d_out)))


def replacement_channel(d_in: int, sigma) -> Channel:
    sigma = linalg.as_matrix(sigma)
    return Channel(d_in, sigma.shape[0], linalg.kron(np.eye(d_in), sigma))


def preparation_channel(sigma) -> Channel:
    """A state viewed as a channel with one-dimensional input."""
    return replacement_channel(1, sigma)


def random_channel(d_in: int, d_out: int, kraus_rank: int, seed=None) -> Channel:
    if kraus_rank < 1 or kraus_rank * d_out < d_in:
        raise DimensionMismatchError(
            f"no isometry from {d_in} into {d_out}x{kraus_rank}: need kraus_rank*d_out >= d_in"
        )
    rng = np.random.default_rng(seed)
    ginibre = rng.standard_normal((d_out * kraus_rank, d_in)) + 1j * rng.standard_normal((d_out * kraus_rank, d_in))
    q, r = np.linalg.qr(ginibre)
    # fix the phase freedom of QR so the isometry is Haar distributed
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    blocks = [q[k * d_out:(k + 1) * d_out, :] for k in range(kraus_rank)]
    return choi_from_kraus(KrausSet(d_in, d_out, blocks))


def random_unitary(d: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ginibre = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(ginibre)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def transpose_map(d: int) -> Channel:
    """The (non-CP) transpose map; its Choi matrix is the unnormalized swap."""
    swap = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    return Channel(d, d, swap)


def is_unital(c: Channel, tol: float = None) -> bool:
    tol = settings.CHANNEL_TOL if tol is None else tol
    if c.d_in != c.d_out:
        return False
    out = linalg.partial_trace(c.choi, (c.d_in, c.d_out), keep=[1])
    return bool(np.linalg.norm(out - np.eye(c.d_out)) <= tol * max(1.0, float(np.linalg.norm(c.choi))))


def channel_sum(channels: Sequence[Channel], weights: Optional[Sequence[float]] = None) -> Channel:
    if not channels:
        raise DimensionMismatchError("empty channel list")
    weights = [1.0] * len(channels) if weights is None else list(weights)
    first = channels[0]
    choi = np.zeros_like(first.choi)
    for w, c in zip(weights, channels):
        _require_same_dims(first, c)
        choi = choi + w * c.choi
    return Channel(first.d_in, first.d_out, choi)
