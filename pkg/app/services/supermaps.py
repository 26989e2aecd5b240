"""
Supermaps from maps on A = (A0 -> A1) to maps on B = (B0 -> B1), stored as
Choi matrices over A0 A1 B0 B1.

The action on a map Psi with Choi J_Psi is
    J_out = Tr_A[ J_Theta (J_Psi^T (x) I_B) ],
and a superchannel is characterised by J >= 0, J^{A1B0} = I and
J^{AB0} = J^{A0B0} (x) u^{A1}.
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, InvalidChannelError, InvalidSuperchannelError
from app.core.logger import get_logger
from app.services import linalg
from app.services.channels import Channel, identity_channel, is_channel

logger = get_logger(__name__)

A0, A1, B0, B1 = 0, 1, 2, 3


class DimSpec(NamedTuple):
    a0: int
    a1: int
    b0: int
    b1: int

    @property
    def d_a(self) -> int:
        return self.a0 * self.a1

    @property
    def d_b(self) -> int:
        return self.b0 * self.b1

    def swapped(self) -> "DimSpec":
        return DimSpec(self.b0, self.b1, self.a0, self.a1)


@dataclass(frozen=True)
class Superchannel:
    dims: DimSpec
    choi: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = DimSpec(*[int(d) for d in self.dims])
        choi = linalg.as_matrix(self.choi)
        side = dims.d_a * dims.d_b
        if choi.shape != (side, side):
            raise DimensionMismatchError(f"choi of shape {choi.shape} does not match dims {tuple(dims)}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "choi", choi)

    def tensor4(self) -> np.ndarray:
        """Choi as T[a, b, a', b'] with a = (a0, a1), b = (b0, b1)."""
        d = self.dims
        return self.choi.reshape(d.d_a, d.d_b, d.d_a, d.d_b)


@dataclass(frozen=True)
class Realization:
    pre: Channel  # B0 -> A0 E
    post: Channel  # A1 E -> B1
    d_e: int


@dataclass(frozen=True)
class Violation:
    condition: str
    residual: float
    tolerance: float


@dataclass(frozen=True)
class SuperchannelReport:
    ok: bool
    violations: List[Violation]

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "all conditions hold"
        return "; ".join(f"{v.condition} (residual {v.residual:.3e} > {v.tolerance:.3e})" for v in self.violations)


def marginal(s: Superchannel, keep: Sequence[int]) -> np.ndarray:
    return linalg.partial_trace(s.choi, tuple(s.dims), keep)


def embed_uniform(m: np.ndarray, dims: DimSpec, systems: Sequence[int], uniform_on: int) -> np.ndarray:
    """m lives on `systems` (ascending); return m (x) u on `systems` + [uniform_on], in ascending order."""
    ordered = list(systems) + [uniform_on]
    sub_dims = [dims[k] for k in ordered]
    joint = linalg.kron(m, linalg.maximally_mixed(dims[uniform_on]))
    target = sorted(ordered)
    perm = [ordered.index(k) for k in target]
    return linalg.permute_systems(joint, sub_dims, perm)


def _check(violations: List[Violation], name: str, residual: float, tol: float) -> None:
    if residual > tol:
        violations.append(Violation(name, residual, tol))


def _scaled_tol(s: Superchannel, tol: float) -> float:
    return tol * max(1.0, float(np.linalg.norm(s.choi)))


def _psd_violation(s: Superchannel, tol: float) -> List[Violation]:
    residual = float(np.linalg.norm(s.choi - s.choi.conj().T))
    if residual > linalg.hermitian_tol(s.choi):
        return [Violation("hermitian", residual, linalg.hermitian_tol(s.choi))]
    min_eig = float(linalg.eigh(s.choi)[0][-1])
    if min_eig < -tol:
        return [Violation("psd", -min_eig, tol)]
    return []


def is_superchannel(s: Superchannel, tol: float = None) -> SuperchannelReport:
    tol = _scaled_tol(s, settings.CHANNEL_TOL if tol is None else tol)
    d = s.dims
    violations = _psd_violation(s, tol)

    j_a1b0 = marginal(s, [A1, B0])
    _check(violations, "J^{A1B0} = I", float(np.linalg.norm(j_a1b0 - np.eye(d.a1 * d.b0))), tol)

    j_ab0 = marginal(s, [A0, A1, B0])
    j_a0b0 = marginal(s, [A0, B0])
    expected = embed_uniform(j_a0b0, d, [A0, B0], A1)
    _check(violations, "J^{AB0} = J^{A0B0} (x) u^{A1}", float(np.linalg.norm(j_ab0 - expected)), tol)
    return SuperchannelReport(ok=not violations, violations=violations)


def apply(s: Superchannel, psi: Channel) -> Channel:
    d = s.dims
    if psi.dims != (d.a0, d.a1):
        raise DimensionMismatchError(f"map dims {psi.dims} do not match supermap input {(d.a0, d.a1)}")
    out = np.einsum("abcd,ac->bd", s.tensor4(), psi.choi)
    return Channel(d.b0, d.b1, out)


def apply_to_first(s: Superchannel, omega: np.ndarray, rest_dims: Sequence[int]) -> np.ndarray:
    """(Theta (x) 1)[Omega] for a bipartite map with Choi over A0 A1 (rest...), rest = (C0, C1)."""
    d = s.dims
    d_rest = int(np.prod(rest_dims))
    omega = linalg.as_matrix(omega)
    if omega.shape != (d.d_a * d_rest, d.d_a * d_rest):
        raise DimensionMismatchError(f"bipartite Choi of shape {omega.shape} does not fit {tuple(d)} x {rest_dims}")
    w = omega.reshape(d.d_a, d_rest, d.d_a, d_rest)
    out = np.einsum("abce,arcs->bres", s.tensor4(), w)
    side = d.d_b * d_rest
    return out.reshape(side, side)


def choi_from_realization(r: Realization, dims: DimSpec, tol: float = None) -> Superchannel:
    dims = DimSpec(*dims)
    d_e = r.d_e
    if r.pre.dims != (dims.b0, dims.a0 * d_e):
        raise DimensionMismatchError(f"pre-processing dims {r.pre.dims}, expected {(dims.b0, dims.a0 * d_e)}")
    if r.post.dims != (dims.a1 * d_e, dims.b1):
        raise DimensionMismatchError(f"post-processing dims {r.post.dims}, expected {(dims.a1 * d_e, dims.b1)}")
    for name, ch in (("pre", r.pre), ("post", r.post)):
        verdict = is_channel(ch, tol)
        if not verdict.is_cptp:
            raise InvalidChannelError(f"{name}-processing is not CPTP", report=verdict.__dict__)

    pre = r.pre.choi.reshape(dims.b0, dims.a0, d_e, dims.b0, dims.a0, d_e)
    post = r.post.choi.reshape(dims.a1, d_e, dims.b1, dims.a1, d_e, dims.b1)
    # T[a0 a1 b0 b1, a0' a1' b0' b1'] = sum_{e e'} pre[b0, a0 e, b0', a0' e'] post[a1 e, b1, a1' e', b1']
    t = np.einsum("pxeqyf,aebcfd->xapbycqd", pre, post)
    side = dims.d_a * dims.d_b
    return Superchannel(dims, t.reshape(side, side))


def realize(s: Superchannel, tol: float = None) -> Realization:
    report = is_superchannel(s, tol)
    if not report:
        raise InvalidSuperchannelError(f"not a superchannel: {report.describe()}", report.violations)
    d = s.dims

    rho = marginal(s, [A0, B0]) / d.a1
    values, vectors = linalg.eigh(rho)
    floor = settings.RANK_CUTOFF * max(float(values[0]), 0.0)
    support = values > floor
    d_e = int(np.count_nonzero(support))
    values = values[support]
    vectors = vectors[:, support]
    logger.debug(f"Supermaps: realizing {tuple(d)} with environment dimension {d_e}")

    # purification psi[a0, b0, e] = sqrt(lambda_e) v_e[a0 b0]
    w = vectors * np.sqrt(values)
    psi = w.reshape(d.a0, d.b0, d_e)
    kraus = psi.transpose(0, 2, 1).reshape(d.a0 * d_e, d.b0)
    vec = kraus.T.reshape(-1)
    pre = Channel(d.b0, d.a0 * d_e, np.outer(vec, vec.conj()))

    # Solve J_Theta = sum psi psi^* Q on the support: Q = (W^+ (x) I) T (W^+ (x) I)^dagger
    w_pinv = (vectors / np.sqrt(values)).conj().T  # e x (a0 b0)
    t = s.choi.reshape(d.a0, d.a1, d.b0, d.b1, d.a0, d.a1, d.b0, d.b1)
    w_pinv = w_pinv.reshape(d_e, d.a0, d.b0)
    q = np.einsum("exp,xapbycqd,fyq->aebcfd", w_pinv, t, w_pinv.conj())
    side = d.a1 * d_e * d.b1
    q = q.reshape(side, side)
    q = _complete_off_support(q, d.a1 * d_e, d.b1)
    post = Channel(d.a1 * d_e, d.b1, linalg.hermitian_part(q))
    return Realization(pre=pre, post=post, d_e=d_e)


def _complete_off_support(q: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Send the orthogonal complement of the post-processing support to the uniform state."""
    inp = linalg.partial_trace(q, (d_in, d_out), keep=[0])
    values, vectors = linalg.eigh(inp)
    floor = settings.RANK_CUTOFF * max(float(values[0]), 1.0)
    off = vectors[:, values <= floor]
    if off.shape[1] == 0:
        return q
    logger.debug(f"Supermaps: completing post-processing on a {off.shape[1]}-dimensional complement")
    p_off = off @ off.conj().T
    return q + linalg.kron(p_off.T, linalg.maximally_mixed(d_out))


def dual(s: Superchannel) -> Superchannel:
    choi = linalg.permute_systems(s.choi, tuple(s.dims), [B0, B1, A0, A1]).conj()
    return Superchannel(s.dims.swapped(), choi)


def transpose_supermap(s: Superchannel) -> Superchannel:
    choi = linalg.permute_systems(s.choi, tuple(s.dims), [B0, B1, A0, A1])
    return Superchannel(s.dims.swapped(), choi)


def identity_supermap(d0: int, d1: int) -> Superchannel:
    dims = DimSpec(d0, d1, d0, d1)
    joint = linalg.kron(linalg.max_entangled(d0), linalg.max_entangled(d1))  # A0 B0 A1 B1
    choi = linalg.permute_systems(joint, (d0, d0, d1, d1), [0, 2, 1, 3])
    return Superchannel(dims, choi)


def replacement_supermap(dims: DimSpec, target: Channel) -> Superchannel:
    """Discard the argument and output `target`: J = u^{A0} (x) I^{A1} (x) J_target."""
    dims = DimSpec(*dims)
    if target.dims != (dims.b0, dims.b1):
        raise DimensionMismatchError(f"target dims {target.dims} do not match {(dims.b0, dims.b1)}")
    choi = linalg.kron(linalg.maximally_mixed(dims.a0), np.eye(dims.a1), target.choi)
    return Superchannel(dims, choi)


def random_unitary_superchannel(probs, pre_unitaries, post_unitaries, dims: DimSpec) -> Superchannel:
    dims = DimSpec(*dims)
    probs = np.asarray(probs, dtype=float)
    if dims.a0 != dims.b0 or dims.a1 != dims.b1:
        raise DimensionMismatchError(f"random-unitary superchannels need d_A0=d_B0 and d_A1=d_B1, got {tuple(dims)}")
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidSuperchannelError(f"{probs.tolist()} is not a probability vector")
    if not (len(probs) == len(pre_unitaries) == len(post_unitaries)):
        raise DimensionMismatchError("probabilities and unitary lists differ in length")

    phi0 = np.eye(dims.a0, dtype=complex).reshape(-1)
    phi1 = np.eye(dims.a1, dtype=complex).reshape(-1)
    acc = np.zeros((dims.d_a * dims.d_b,) * 2, dtype=complex)
    for p, u_pre, u_post in zip(probs, pre_unitaries, post_unitaries):
        u_pre = linalg.as_matrix(u_pre)
        u_post = linalg.as_matrix(u_post)
        alpha = linalg.kron(np.eye(dims.a0), u_pre.T) @ phi0  # A0 B0
        beta = linalg.kron(np.eye(dims.a1), u_post) @ phi1  # A1 B1
        acc += p * linalg.kron(linalg.projector(alpha), linalg.projector(beta))
    choi = linalg.permute_systems(acc, (dims.a0, dims.b0, dims.a1, dims.b1), [0, 2, 1, 3])
    return Superchannel(dims, choi)


def is_doubly_stochastic(s: Superchannel, tol: float = None) -> SuperchannelReport:
    base = is_superchannel(s, tol)
    tol = _scaled_tol(s, settings.CHANNEL_TOL if tol is None else tol)
    d = s.dims
    violations = list(base.violations)
    j_a0b1 = marginal(s, [A0, B1])
    _check(violations, "J^{A0B1} = I", float(np.linalg.norm(j_a0b1 - np.eye(d.a0 * d.b1))), tol)
    violations.extend(_uniform_output_violations(s, tol))
    return SuperchannelReport(ok=not violations, violations=violations)


def _uniform_output_violations(s: Superchannel, tol: float) -> List[Violation]:
    d = s.dims
    violations: List[Violation] = []
    j_a0b = marginal(s, [A0, B0, B1])
    expected = embed_uniform(marginal(s, [A0, B0]), d, [A0, B0], B1)
    _check(violations, "J^{A0B} = J^{A0B0} (x) u^{B1}", float(np.linalg.norm(j_a0b - expected)), tol)
    return violations


def is_completely_uniformity_preserving(s: Superchannel, tol: float = None) -> SuperchannelReport:
    base = is_superchannel(s, tol)
    violations = list(base.violations) + _uniform_output_violations(
        s, _scaled_tol(s, settings.CHANNEL_TOL if tol is None else tol))
    return SuperchannelReport(ok=not violations, violations=violations)


def is_completely_unital_preserving(s: Superchannel, tol: float = None) -> SuperchannelReport:
    d = s.dims
    if d.a0 != d.a1 or d.b0 != d.b1:
        raise DimensionMismatchError(f"unital preservation needs square legs, got {tuple(d)}")
    base = is_superchannel(s, tol)
    tol = _scaled_tol(s, settings.CHANNEL_TOL if tol is None else tol)
    violations = list(base.violations)

    j_ab1 = marginal(s, [A0, A1, B1])
    j_a1b1 = marginal(s, [A1, B1])
    # u^{A0} (x) J^{A1B1}: A0 is already the leading system
    expected = linalg.kron(linalg.maximally_mixed(d.a0), j_a1b1)
    _check(violations, "J^{AB1} = u^{A0} (x) J^{A1B1}", float(np.linalg.norm(j_ab1 - expected)), tol)
    j_a0b1 = marginal(s, [A0, B1])
    _check(violations, "J^{A0B1} = I", float(np.linalg.norm(j_a0b1 - np.eye(d.a0 * d.b1))), tol)
    return SuperchannelReport(ok=not violations, violations=violations)


def supermap_from_channels(dims: DimSpec, pre: Channel, post: Channel) -> Superchannel:
    """Superchannel with no side memory: Theta[Psi] = post o Psi o pre."""
    return choi_from_realization(Realization(pre=pre, post=post, d_e=1), dims)


def identity_realization(d0: int, d1: int) -> Realization:
    return Realization(pre=identity_channel(d0), post=identity_channel(d1), d_e=1)


# short name -> (report label, checker)
PROPERTY_CHECKS = {
    "sc": ("superchannel", is_superchannel),
    "ds": ("ds", is_doubly_stochastic),
    "cup": ("cup", is_completely_uniformity_preserving),
    "cucp": ("cucp", is_completely_unital_preserving),
}
