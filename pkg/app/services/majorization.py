"""
Quantum majorization of channel families: is there one superchannel Theta
with Theta[src_k] = dst_k for every k?

Families are handled in grouped form, groups[x][y], so that plain families
(one member per group) and classical-quantum reductions of bipartite
channels share the same programs. For a cq family, sum_y of each group is
trace preserving.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, InvalidChannelError
from app.core.logger import get_logger
from app.core.resources import resources
from app.services import linalg, sdp, supermaps
from app.services.channels import Channel, is_channel, replacement_channel
from app.services.entropies import BipartiteChannel, ecme
from app.services.sdp import Cone, ProgramBuilder, Sense
from app.services.supermaps import A0, A1, B0, DimSpec, Superchannel

logger = get_logger(__name__)


@dataclass(frozen=True)
class ChannelFamily:
    d_in: int
    d_out: int
    channels: Tuple[Channel, ...] = ()

    def __post_init__(self):
        channels = tuple(self.channels)
        for k, c in enumerate(channels):
            if c.dims != (self.d_in, self.d_out):
                raise DimensionMismatchError(f"member {k} has dims {c.dims}, family has {(self.d_in, self.d_out)}")
            verdict = is_channel(c)
            if not verdict.is_cptp:
                raise InvalidChannelError(f"family member {k} is not CPTP", report=verdict.__dict__)
        object.__setattr__(self, "channels", channels)

    @classmethod
    def of(cls, *channels: Channel) -> "ChannelFamily":
        if not channels:
            raise DimensionMismatchError("use ChannelFamily(d_in, d_out) for an empty family")
        return cls(channels[0].d_in, channels[0].d_out, channels)

    @property
    def dims(self) -> Tuple[int, int]:
        return (self.d_in, self.d_out)

    def __len__(self) -> int:
        return len(self.channels)

    def groups(self) -> List[List[np.ndarray]]:
        return [[c.choi] for c in self.channels]

    def extended(self, *extra: Channel) -> "ChannelFamily":
        return ChannelFamily(self.d_in, self.d_out, self.channels + tuple(extra))


@dataclass(frozen=True)
class Frame:
    """Rank-one input states and an informationally complete POVM on a d-dimensional system."""
    d: int
    inputs: Tuple[np.ndarray, ...] = field(repr=False)
    povm: Tuple[np.ndarray, ...] = field(repr=False)


def build_frame(d: int) -> Frame:
    vectors = [linalg.ket(d, i) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            vectors.append((linalg.ket(d, i) + linalg.ket(d, j)) / np.sqrt(2))
            vectors.append((linalg.ket(d, i) + 1j * linalg.ket(d, j)) / np.sqrt(2))
    projectors = [linalg.projector(v) for v in vectors]
    root = linalg.inv_sqrt_psd(sum(projectors))
    povm = tuple(root @ p @ root for p in projectors)
    return Frame(d, tuple(projectors), povm)


@dataclass(frozen=True)
class CqFamily:
    """blocks[x][y]: Choi matrix of the CP map obtained by feeding input x and observing outcome y."""
    d_in: int
    d_out: int
    blocks: Tuple[Tuple[np.ndarray, ...], ...] = field(repr=False)
    frame_in: Optional[Frame] = field(default=None, repr=False)
    frame_out: Optional[Frame] = field(default=None, repr=False)

    def groups(self) -> List[List[np.ndarray]]:
        return [list(row) for row in self.blocks]

    def __len__(self) -> int:
        return sum(len(row) for row in self.blocks)


Family = Union[ChannelFamily, CqFamily]


def reduce_to_cq(phi: BipartiteChannel, frame_in: Frame = None, frame_out: Frame = None) -> CqFamily:
    """phi is a bipartite channel R|A; R is replaced by frame inputs on R0 and frame outcomes on R1."""
    d = phi.dims
    frame_in = frame_in or resources.frame(d.a0)
    frame_out = frame_out or resources.frame(d.a1)
    if frame_in.d != d.a0 or frame_out.d != d.a1:
        raise DimensionMismatchError(f"frames of dims {(frame_in.d, frame_out.d)} for R legs {(d.a0, d.a1)}")
    n = d.d_b
    t = phi.choi.reshape(d.a0, d.a1, n, d.a0, d.a1, n)
    blocks = []
    for phi_x in frame_in.inputs:
        # input side enters transposed, measured output side does not
        row = tuple(np.einsum("pqaPQA,pP,Qq->aA", t, phi_x, e_y) for e_y in frame_out.povm)
        blocks.append(row)
    return CqFamily(d.b0, d.b1, tuple(blocks), frame_in, frame_out)


def reconstruct_from_cq(cq: CqFamily) -> BipartiteChannel:
    """Invert reduce_to_cq by solving the frame's linear system."""
    frame_in, frame_out = cq.frame_in, cq.frame_out
    if frame_in is None or frame_out is None:
        raise DimensionMismatchError("reconstruction needs the frames used by the reduction")
    r0, r1 = frame_in.d, frame_out.d
    # coefficients[(x, y), (p, q, P, Q)] = phi_x[p, P] E_y[Q, q]
    coefficients = np.einsum("xpP,yQq->xypqPQ", np.array(frame_in.inputs), np.array(frame_out.povm))
    coefficients = coefficients.reshape(len(frame_in.inputs) * len(frame_out.povm), (r0 * r1) ** 2)
    n = cq.d_in * cq.d_out
    stacked = np.array([b.reshape(-1) for row in cq.blocks for b in row])
    solved = np.linalg.solve(coefficients, stacked)  # rows (p, q, P, Q), columns (a, A)
    t = solved.reshape(r0, r1, r0, r1, n, n).transpose(0, 1, 4, 2, 3, 5)
    side = r0 * r1 * n
    return BipartiteChannel(DimSpec(r0, r1, cq.d_in, cq.d_out), t.reshape(side, side))


class Verdict(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BOUNDARY = "boundary"


@dataclass
class Witness:
    """Tests L[x][y] on B (PSD, sum_y Tr_B1 L = I per x) and the ECME pair they separate."""
    blocks: List[List[np.ndarray]] = field(repr=False)
    h_src: float
    h_dst: float
    repair: float

    @property
    def separation(self) -> float:
        return self.h_src - self.h_dst


@dataclass
class MinimaxResult:
    value: float
    gamma: np.ndarray = field(repr=False)
    blocks: List[List[np.ndarray]] = field(repr=False)
    status: sdp.SolveStatus = sdp.SolveStatus.OPTIMAL


@dataclass
class MajorizationCertificate:
    verdict: Verdict
    superchannel: Optional[Superchannel] = field(default=None, repr=False)
    residual: float = float("nan")
    witness: Optional[Witness] = None
    slack: float = float("nan")
    minimax_value: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE


def _check_pair(src: Family, dst: Family) -> Tuple[List[List[np.ndarray]], List[List[np.ndarray]], DimSpec]:
    g_src, g_dst = src.groups(), dst.groups()
    if [len(g) for g in g_src] != [len(g) for g in g_dst]:
        raise DimensionMismatchError(f"families of shapes {[len(g) for g in g_src]} and {[len(g) for g in g_dst]}")
    return g_src, g_dst, DimSpec(src.d_in, src.d_out, dst.d_in, dst.d_out)


def superchannel_program(src: Family, dst: Family, name: str = "majorize") -> sdp.ConicProgram:
    """J_Theta >= 0 with the superchannel marginals and Theta[src_k] = dst_k."""
    g_src, g_dst, dims = _check_pair(src, dst)
    n = dims.d_a * dims.d_b
    sub = tuple(dims)

    def causal(m):
        j_ab0 = linalg.partial_trace(m, sub, [A0, A1, B0])
        return j_ab0 - supermaps.embed_uniform(linalg.partial_trace(m, sub, [A0, B0]), dims, [A0, B0], A1)

    def action(j_src):
        return lambda m: np.einsum("abcd,ac->bd", m.reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b), j_src)

    b = ProgramBuilder(name)
    theta = b.variable("theta", n, Cone.PSD)
    b.constraint("normalization", dims.a1 * dims.b0, Cone.ZERO,
                 {theta: lambda m: linalg.partial_trace(m, sub, [A1, B0])}, offset=np.eye(dims.a1 * dims.b0))
    b.constraint("causality", dims.a0 * dims.a1 * dims.b0, Cone.ZERO, {theta: causal})
    for x, (row_src, row_dst) in enumerate(zip(g_src, g_dst)):
        for y, (j_src, j_dst) in enumerate(zip(row_src, row_dst)):
            b.constraint(f"map_{x}_{y}", dims.d_b, Cone.ZERO, {theta: action(j_src)}, offset=j_dst)
    return b.build(Sense.MIN)


def _validate(theta: Superchannel, src: Family, dst: Family, tol: float) -> Tuple[bool, float]:
    g_src, g_dst, dims = _check_pair(src, dst)
    residual = 0.0
    for row_src, row_dst in zip(g_src, g_dst):
        for j_src, j_dst in zip(row_src, row_dst):
            image = np.einsum("abcd,ac->bd", theta.tensor4(), j_src)
            residual = max(residual, float(np.linalg.norm(image - j_dst)))
    report = supermaps.is_superchannel(theta, tol)
    return bool(report) and residual <= tol, residual


def majorize_direct(src: Family, dst: Family, tol: float = None) -> MajorizationCertificate:
    tol = settings.MAJORIZATION_TOL if tol is None else tol
    program = superchannel_program(src, dst)
    eps = tol * program.scale()
    result = sdp.solve_feasibility(program, tol=eps)
    logger.info(f"Majorization: direct program over {len(src)} pairs, phase-1 slack {result.slack:.3e}")

    if result.feasible:
        theta = Superchannel(DimSpec(src.d_in, src.d_out, dst.d_in, dst.d_out),
                             linalg.project_psd(result.point["theta"], cutoff=0.0))
        valid, residual = _validate(theta, src, dst, tol)
        if valid:
            return MajorizationCertificate(Verdict.FEASIBLE, theta, residual, slack=result.slack)
        if result.slack < -eps:
            logger.warning(f"Majorization: interior point failed validation (residual {residual:.3e})")
        minimax = majorize_minimax(src, dst)
        return MajorizationCertificate(Verdict.BOUNDARY, theta, residual, extract_witness(minimax, src, dst),
                                       result.slack, minimax.value)

    minimax = majorize_minimax(src, dst)
    witness = extract_witness(minimax, src, dst)
    if minimax.value >= -eps or witness.separation < settings.WITNESS_SEPARATION:
        logger.warning(f"Majorization: phase-1 slack {result.slack:.3e} but minimax value {minimax.value:.3e} "
                       f"and witness separation {witness.separation:.3e}")
        return MajorizationCertificate(Verdict.BOUNDARY, None, float("nan"), witness, result.slack, minimax.value)
    return MajorizationCertificate(Verdict.INFEASIBLE, None, float("nan"), witness, result.slack, minimax.value)


def minimax_program(src: Family, dst: Family) -> sdp.ConicProgram:
    """
    min Tr gamma - w sum_k Tr[J_dst_k L_k]
    s.t. gamma (x) I_B1 >= (w / d_A0) sum_k J_src_k^T (x) L_k,
         gamma^{A0B0} = u^{A0} (x) gamma^{B0},
         L_k >= 0,  sum_y Tr_B1 L_{xy} = I_B0 for every x,
    with w = 1 / (number of groups).
    """
    g_src, g_dst, dims = _check_pair(src, dst)
    n_gamma = dims.a0 * dims.a1 * dims.b0
    sub = (dims.a0, dims.a1, dims.b0)
    w = 1.0 / max(1, len(g_src))
    u_a0 = linalg.maximally_mixed(dims.a0)
    eye_b1 = np.eye(dims.b1)

    b = ProgramBuilder("majorize_minimax")
    gamma = b.variable("gamma", n_gamma, Cone.FREE, objective=np.eye(n_gamma))
    cols = []
    for x, row in enumerate(g_dst):
        cols.append([b.variable(f"L_{x}_{y}", dims.d_b, Cone.PSD, objective=-w * j_dst) for y, j_dst in enumerate(row)])

    def tensor_with(j_src):
        scaled = (w / dims.a0) * j_src.T
        return lambda m: -np.kron(scaled, m)

    terms = {gamma: lambda m: np.kron(m, eye_b1)}
    for x, row in enumerate(g_src):
        for y, j_src in enumerate(row):
            terms[cols[x][y]] = tensor_with(j_src)
    b.constraint("dominance", n_gamma * dims.b1, Cone.PSD, terms)
    b.constraint("marginal", dims.a0 * dims.b0, Cone.ZERO, {
        gamma: lambda m: linalg.partial_trace(m, sub, [0, 2]) - np.kron(u_a0, linalg.partial_trace(m, sub, [2]))})
    for x, row in enumerate(cols):
        b.constraint(f"normalization_{x}", dims.b0, Cone.ZERO,
                     {col: (lambda m: linalg.partial_trace(m, (dims.b0, dims.b1), [0])) for col in row},
                     offset=np.eye(dims.b0))
    return b.build(Sense.MIN)


def majorize_minimax(src: Family, dst: Family) -> MinimaxResult:
    program = minimax_program(src, dst)
    solution = sdp.solve(program).require_ok("majorization minimax")
    g_dst = dst.groups()
    blocks = [[solution.primal[f"L_{x}_{y}"] for y in range(len(row))] for x, row in enumerate(g_dst)]
    logger.info(f"Majorization: minimax value {solution.primal_value:.3e}")
    return MinimaxResult(solution.primal_value, solution.primal["gamma"], blocks, solution.status)


def _repair(blocks: List[List[np.ndarray]], d_b0: int, d_b1: int) -> Tuple[List[List[np.ndarray]], float]:
    repaired, magnitude = [], 0.0
    for row in blocks:
        clipped = [linalg.project_psd(l, cutoff=settings.RANK_CUTOFF) for l in row]
        total = sum(linalg.partial_trace(l, (d_b0, d_b1), [0]) for l in clipped)
        fix = np.kron(linalg.inv_sqrt_psd(total), np.eye(d_b1))
        fixed = [fix @ l @ fix for l in clipped]
        magnitude = max([magnitude] + [float(np.linalg.norm(a - b)) for a, b in zip(fixed, row)])
        repaired.append(fixed)
    return repaired, magnitude


def extract_witness(minimax: MinimaxResult, src: Family, dst: Family) -> Witness:
    dims = DimSpec(src.d_in, src.d_out, dst.d_in, dst.d_out)
    blocks, repair = _repair(minimax.blocks, dims.b0, dims.b1)
    if repair > 1e-6:
        logger.warning(f"Majorization: witness repair of magnitude {repair:.3e}")
    h_src = _test_entropy(src, blocks, dims.b0, dims.b1)
    h_dst = _test_entropy(dst, blocks, dims.b0, dims.b1)
    logger.info(f"Majorization: witness entropies src {h_src:.6f} dst {h_dst:.6f}")
    return Witness(blocks, h_src, h_dst, repair)


def _test_entropy(family: Family, blocks: List[List[np.ndarray]], d_b0: int, d_b1: int) -> float:
    groups = family.groups()
    w = 1.0 / max(1, len(groups))
    n = family.d_in * family.d_out * d_b0 * d_b1
    choi = np.zeros((n, n), dtype=complex)
    for row, tests in zip(groups, blocks):
        for j, l in zip(row, tests):
            choi += w * np.kron(j, l.T)
    operator = BipartiteChannel(DimSpec(family.d_in, family.d_out, d_b0, d_b1), choi)
    return ecme(operator, validate=False).value


def majorize_bipartite(phi: BipartiteChannel, psi: BipartiteChannel, tol: float = None) -> MajorizationCertificate:
    """Does (1^R (x) Theta)[phi^{RA}] = psi^{RB} for a superchannel Theta from A to B?"""
    if (phi.dims.a0, phi.dims.a1) != (psi.dims.a0, psi.dims.a1):
        raise DimensionMismatchError(f"reference legs differ: {(phi.dims.a0, phi.dims.a1)} and "
                                     f"{(psi.dims.a0, psi.dims.a1)}")
    frame_in = resources.frame(phi.dims.a0)
    frame_out = resources.frame(phi.dims.a1)
    return majorize_direct(reduce_to_cq(phi, frame_in, frame_out), reduce_to_cq(psi, frame_in, frame_out), tol)


def gibbs_state(hamiltonian, beta: float) -> np.ndarray:
    h = linalg.check_hermitian(hamiltonian)
    # shift by the ground energy so the exponential stays bounded
    shifted = h - linalg.eigh(h)[0][-1] * np.eye(h.shape[0])
    rho = linalg.expm_hermitian(-beta * shifted)
    return rho / np.trace(rho).real


def gibbs_channel(d_in: int, gamma) -> Channel:
    """The channel that discards its input and prepares the Gibbs state gamma."""
    return replacement_channel(d_in, gamma)


def gibbs_majorize(src: ChannelFamily, dst: ChannelFamily, gibbs_in, gibbs_out,
                   tol: float = None) -> MajorizationCertificate:
    gibbs_in = linalg.as_matrix(gibbs_in)
    gibbs_out = linalg.as_matrix(gibbs_out)
    if gibbs_in.shape != (src.d_out, src.d_out) or gibbs_out.shape != (dst.d_out, dst.d_out):
        raise DimensionMismatchError("Gibbs states must live on the output legs of each family")
    return majorize_direct(
        src.extended(gibbs_channel(src.d_in, gibbs_in)),
        dst.extended(gibbs_channel(dst.d_in, gibbs_out)),
        tol,
    )
