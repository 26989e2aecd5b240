"""
Dense complex matrix kernel for multipartite operators.

Conventions: matrices are numpy complex arrays; a multipartite operator on
systems with dimensions `dims` uses row-major multi-indices, subsystem 0
being the most significant (the A0 A1 B0 B1 order used by supermaps).
"""
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, NotHermitianError

SystemShape = Tuple[int, ...]


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError("matrix has non-finite entries")
    return arr


def _check_shape(m: np.ndarray, dims: Sequence[int]) -> SystemShape:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise DimensionMismatchError(f"subsystem dimensions must be >= 1, got {dims}")
    side = int(np.prod(dims)) if dims else 1
    if m.shape != (side, side):
        raise DimensionMismatchError(f"matrix of shape {m.shape} does not match systems {dims}")
    return dims


def kron(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in `keep`; kept systems stay in their original order."""
    m = as_matrix(m)
    dims = _check_shape(m, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionMismatchError(f"keep={keep} out of range for {n} systems")

    tensor = m.reshape(dims + dims)
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out_idx = keep + [k + n for k in keep]
    reduced = np.einsum(tensor, row + col, out_idx)
    side = int(np.prod([dims[k] for k in keep])) if keep else 1
    return reduced.reshape(side, side)


def permute_systems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder subsystems: output system i is input system perm[i]."""
    m = as_matrix(m)
    dims = _check_shape(m, dims)
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise DimensionMismatchError(f"{perm} is not a permutation of {n} systems")
    tensor = m.reshape(dims + dims)
    axes = perm + [p + n for p in perm]
    side = m.shape[0]
    return tensor.transpose(axes).reshape(side, side)


def partial_transpose(m, dims: Sequence[int], sys: Sequence[int]) -> np.ndarray:
    m = as_matrix(m)
    dims = _check_shape(m, dims)
    n = len(dims)
    sys = set(int(s) for s in sys)
    if any(s < 0 or s >= n for s in sys):
        raise DimensionMismatchError(f"sys={sorted(sys)} out of range for {n} systems")
    tensor = m.reshape(dims + dims)
    axes = [i + n if i in sys else i for i in range(n)] + [i if i in sys else i + n for i in range(n)]
    side = m.shape[0]
    return tensor.transpose(axes).reshape(side, side)


def hermitian_tol(m: np.ndarray) -> float:
    return settings.HERMITIAN_TOL * max(1.0, float(np.linalg.norm(m)))


def check_hermitian(m, tol: float = None) -> np.ndarray:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    tol = hermitian_tol(m) if tol is None else tol
    residual = float(np.linalg.norm(m - m.conj().T))
    if residual > tol:
        raise NotHermitianError(residual, tol)
    return m


def hermitian_part(m) -> np.ndarray:
    m = as_matrix(m)
    return (m + m.conj().T) / 2


def eigh(m) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching eigenvector columns."""
    m = hermitian_part(check_hermitian(m))
    values, vectors = np.linalg.eigh(m)
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def lambda_max(m) -> float:
    return float(eigh(m)[0][0])


def is_psd(m, tol: float = None) -> bool:
    m = as_matrix(m)
    tol = settings.CHANNEL_TOL if tol is None else tol
    try:
        values, _ = eigh(m)
    except NotHermitianError:
        return False
    return bool(values[-1] >= -tol * max(1.0, float(np.linalg.norm(m))))


def hs_inner(x, y) -> complex:
    x = as_matrix(x)
    y = as_matrix(y)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {y.shape} differ")
    return complex(np.vdot(x, y))


def project_psd(m, cutoff: float = None) -> np.ndarray:
    """Clip eigenvalues below `cutoff`·λ_max to zero."""
    values, vectors = eigh(m)
    cutoff = settings.RANK_CUTOFF if cutoff is None else cutoff
    floor = cutoff * max(float(values[0]), 0.0)
    values = np.where(values > floor, values, 0.0)
    return (vectors * values) @ vectors.conj().T


def inv_sqrt_psd(m, cutoff: float = None) -> np.ndarray:
    """Pseudo-inverse square root on the support of a PSD matrix."""
    values, vectors = eigh(m)
    cutoff = settings.RANK_CUTOFF if cutoff is None else cutoff
    floor = cutoff * max(float(values[0]), 0.0)
    mask = values > floor
    inv = np.zeros_like(values)
    inv[mask] = 1.0 / np.sqrt(values[mask])
    return (vectors * inv) @ vectors.conj().T


def sqrt_psd(m) -> np.ndarray:
    values, vectors = eigh(m)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def expm_hermitian(m) -> np.ndarray:
    return scipy.linalg.expm(hermitian_part(as_matrix(m)))


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(m), compute_uv=False)))


def max_entangled(d: int) -> np.ndarray:
    """Unnormalized |φ+><φ+| on two d-dimensional systems."""
    v = np.eye(d, dtype=complex).reshape(d * d)
    return np.outer(v, v.conj())


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def random_state(d: int, rank: Optional[int] = None, seed=None) -> np.ndarray:
    """Induced-measure density matrix of the given rank (full rank by default)."""
    rng = np.random.default_rng(seed)
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
