"""
Min-entropy family for states, channels and bipartite channels.

All values are in bits. Conditional quantities condition on the FIRST listed
system: h_min_cond(rho, (d0, d1)) is Hmin(1|0)_rho.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, InvalidChannelError, InvalidInputError, SolverError
from app.core.logger import get_logger
from app.services import linalg, sdp
from app.services.channels import (
    Channel,
    is_channel,
    replacement_channel,
    tensor,
    uniform_channel,
)
from app.services.sdp import Cone, ProgramBuilder, Sense
from app.services.supermaps import A0, A1, B0, B1, DimSpec, Superchannel
from app.services import supermaps

logger = get_logger(__name__)


@dataclass(frozen=True)
class BipartiteChannel:
    """A map A0 B0 -> A1 B1 with Choi matrix ordered A0 A1 B0 B1."""
    dims: DimSpec
    choi: np.ndarray = field(repr=False)
    classical: FrozenSet[int] = frozenset()

    def __post_init__(self):
        dims = DimSpec(*[int(d) for d in self.dims])
        choi = linalg.as_matrix(self.choi)
        side = dims.d_a * dims.d_b
        if choi.shape != (side, side):
            raise DimensionMismatchError(f"choi of shape {choi.shape} does not match dims {tuple(dims)}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "choi", choi)
        object.__setattr__(self, "classical", frozenset(int(k) for k in self.classical))
        for leg in self.classical:
            mass = off_diagonal_mass(choi, tuple(dims), leg)
            if mass > settings.CLASSICAL_TOL * max(1.0, float(np.linalg.norm(choi))):
                raise InvalidChannelError(f"leg {leg} is flagged classical but carries off-diagonal mass {mass:.3e}")

    def as_channel(self) -> Channel:
        d = self.dims
        choi = linalg.permute_systems(self.choi, tuple(d), [A0, B0, A1, B1])
        return Channel(d.a0 * d.b0, d.a1 * d.b1, choi)

    def normalized(self) -> np.ndarray:
        return self.choi / (self.dims.a0 * self.dims.b0)

    def check(self, tol: float = None) -> None:
        verdict = is_channel(self.as_channel(), tol)
        if not verdict.is_cptp:
            raise InvalidChannelError("bipartite map is not CPTP", report=verdict.__dict__)


def off_diagonal_mass(m: np.ndarray, dims: Sequence[int], leg: int) -> float:
    """Frobenius norm of the part of m that is off-diagonal on subsystem `leg`."""
    dims = tuple(dims)
    n = len(dims)
    t = m.reshape(dims + dims).copy()
    idx = np.arange(dims[leg])
    moved = np.moveaxis(t, (leg, leg + n), (0, 1))
    moved[idx, idx] = 0.0
    return float(np.linalg.norm(moved))


@dataclass(frozen=True)
class ClassicalInstrumentFamily:
    """blocks[y][x] is the Choi matrix (over A0 A1) of the CP map applied on outcome x given input y."""
    d_a0: int
    d_a1: int
    blocks: Tuple[Tuple[np.ndarray, ...], ...] = field(repr=False)

    def __post_init__(self):
        blocks = tuple(tuple(linalg.as_matrix(b) for b in row) for row in self.blocks)
        if not blocks or not blocks[0]:
            raise DimensionMismatchError("instrument family needs at least one input and one outcome")
        n_out = len(blocks[0])
        side = self.d_a0 * self.d_a1
        for y, row in enumerate(blocks):
            if len(row) != n_out:
                raise DimensionMismatchError(f"input {y} has {len(row)} outcomes, expected {n_out}")
            total = np.zeros((side, side), dtype=complex)
            for x, b in enumerate(row):
                if b.shape != (side, side):
                    raise DimensionMismatchError(f"block ({y}, {x}) has shape {b.shape}, expected {(side, side)}")
                if not linalg.is_psd(b):
                    raise InvalidChannelError(f"block ({y}, {x}) is not completely positive")
                total = total + b
            marginal = linalg.partial_trace(total, (self.d_a0, self.d_a1), keep=[0])
            residual = float(np.linalg.norm(marginal - np.eye(self.d_a0)))
            if residual > settings.CHANNEL_TOL * max(1.0, float(np.linalg.norm(total))):
                raise InvalidChannelError(f"inconsistent instrument: outcomes for input {y} do not sum to a "
                                          f"trace-preserving map (residual {residual:.3e})")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_inputs(self) -> int:
        return len(self.blocks)

    @property
    def n_outcomes(self) -> int:
        return len(self.blocks[0])

    def is_classical(self) -> bool:
        dims = (self.d_a0, self.d_a1)
        tol = settings.CLASSICAL_TOL
        return all(off_diagonal_mass(b, dims, 0) <= tol and off_diagonal_mass(b, dims, 1) <= tol
                   for row in self.blocks for b in row)


# ---- bipartite helpers ----

def bipartite_from_channels(psi_a: Channel, phi_b: Channel) -> BipartiteChannel:
    dims = DimSpec(psi_a.d_in, psi_a.d_out, phi_b.d_in, phi_b.d_out)
    return BipartiteChannel(dims, linalg.kron(psi_a.choi, phi_b.choi))


def bipartite_tensor(omega: BipartiteChannel, gamma: BipartiteChannel) -> BipartiteChannel:
    """(A|B) (x) (C|D) viewed as (AC|BD)."""
    d, e = omega.dims, gamma.dims
    joint = linalg.kron(omega.choi, gamma.choi)
    sub = tuple(d) + tuple(e)
    choi = linalg.permute_systems(joint, sub, [0, 4, 1, 5, 2, 6, 3, 7])
    dims = DimSpec(d.a0 * e.a0, d.a1 * e.a1, d.b0 * e.b0, d.b1 * e.b1)
    return BipartiteChannel(dims, choi)


def replacement_bipartite(sigma, d_a0: int, d_a1: int, d_b0: int) -> BipartiteChannel:
    """Discard both inputs and prepare sigma over A1 B1."""
    sigma = linalg.as_matrix(sigma)
    if sigma.shape[0] % d_a1:
        raise DimensionMismatchError(f"state of dimension {sigma.shape[0]} does not split with d_A1={d_a1}")
    d_b1 = sigma.shape[0] // d_a1
    joint = linalg.kron(np.eye(d_a0), np.eye(d_b0), sigma)  # A0 B0 A1 B1
    choi = linalg.permute_systems(joint, (d_a0, d_b0, d_a1, d_b1), [0, 2, 1, 3])
    return BipartiteChannel(DimSpec(d_a0, d_a1, d_b0, d_b1), choi)


def condition_on_input(omega: BipartiteChannel, d_c0: int, d_c1: int, gamma_c0) -> BipartiteChannel:
    """
    omega's A side is the composite (A C): A0 C0 -> A1 C1. Feed gamma into C0
    and trace out C1, leaving a bipartite map A|B.
    """
    d = omega.dims
    gamma_c0 = linalg.as_matrix(gamma_c0)
    if d.a0 % d_c0 or d.a1 % d_c1 or gamma_c0.shape != (d_c0, d_c0):
        raise DimensionMismatchError(f"cannot split A side {(d.a0, d.a1)} by C dims {(d_c0, d_c1)}")
    a0, a1 = d.a0 // d_c0, d.a1 // d_c1
    t = omega.choi.reshape(a0, d_c0, a1, d_c1, d.b0, d.b1, a0, d_c0, a1, d_c1, d.b0, d.b1)
    # rows (a0 c0 a1 c1 b0 b1), columns primed
    out = np.einsum("acbdefgphdij,cp->abefghij", t, gamma_c0)
    side = a0 * a1 * d.b0 * d.b1
    return BipartiteChannel(DimSpec(a0, a1, d.b0, d.b1), out.reshape(side, side))


def instrument_to_bipartite(fam: ClassicalInstrumentFamily) -> BipartiteChannel:
    """J = sum_{x,y} J_{x|y} (x) |y><y| (x) |x><x| over A0 A1 B0 B1."""
    n_y, n_x = fam.n_inputs, fam.n_outcomes
    side = fam.d_a0 * fam.d_a1 * n_y * n_x
    choi = np.zeros((side, side), dtype=complex)
    for y, row in enumerate(fam.blocks):
        for x, b in enumerate(row):
            choi += linalg.kron(b, linalg.projector(linalg.ket(n_y, y)), linalg.projector(linalg.ket(n_x, x)))
    return BipartiteChannel(DimSpec(fam.d_a0, fam.d_a1, n_y, n_x), choi, classical=frozenset({B0, B1}))


# ---- min-entropies ----

@dataclass
class HminResult:
    value: float
    dual_value: float
    sigma: np.ndarray = field(repr=False)
    certificate: np.ndarray = field(repr=False)
    status: sdp.SolveStatus = sdp.SolveStatus.OPTIMAL


def h_min(rho) -> float:
    return -float(np.log2(linalg.lambda_max(rho)))


def _bits(x: float) -> float:
    if x <= 0:
        raise SolverError(f"non-positive optimal value {x:.3e} has no logarithm")
    return -float(np.log2(x))


def dominance_program(rho: np.ndarray, d_cond: int, d_rest: int, name: str) -> sdp.ConicProgram:
    """min Tr sigma  s.t.  sigma (x) I - rho >= 0."""
    b = ProgramBuilder(name)
    sigma = b.variable("sigma", d_cond, Cone.FREE, objective=np.eye(d_cond))
    rest = np.eye(d_rest)
    b.constraint("dominance", d_cond * d_rest, Cone.PSD, {sigma: lambda m: np.kron(m, rest)}, offset=rho)
    return b.build(Sense.MIN)


def h_min_cond(rho, dims: Sequence[int], gap_tol: Optional[float] = None) -> HminResult:
    rho = linalg.check_hermitian(rho)
    d_cond, d_rest = (int(d) for d in dims)
    if rho.shape != (d_cond * d_rest, d_cond * d_rest):
        raise DimensionMismatchError(f"state of shape {rho.shape} does not match dims {tuple(dims)}")
    program = dominance_program(rho, d_cond, d_rest, "hmin_cond")
    solution = sdp.solve(program, gap_tol=gap_tol).require_ok("conditional min-entropy")
    return HminResult(
        value=_bits(solution.primal_value),
        dual_value=_bits(solution.dual_value),
        sigma=solution.primal["sigma"],
        certificate=solution.dual["dominance"],
        status=solution.status,
    )


def h_min_ext(c: Channel, gap_tol: Optional[float] = None) -> float:
    return h_min_cond(c.choi / c.d_in, (c.d_in, c.d_out), gap_tol).value


def support_function_channels(psi: Channel) -> float:
    """max over CPTP Lambda of <Lambda, Psi>, evaluated through its dominance form on the unnormalized Choi."""
    choi = linalg.check_hermitian(psi.choi)
    program = dominance_program(choi, psi.d_in, psi.d_out, "support_function")
    return sdp.solve(program).require_ok("support function").primal_value


# ---- extended conditional min-entropy ----

@dataclass
class EcmeResult:
    value: float
    dual_value: float
    primal_value: float
    gamma: np.ndarray = field(repr=False)
    superchannel: Superchannel = field(repr=False)
    gap: float = 0.0
    status: sdp.SolveStatus = sdp.SolveStatus.OPTIMAL


def ecme_program(omega: BipartiteChannel) -> sdp.ConicProgram:
    """min Tr gamma over gamma^{A0A1B0}: gamma (x) I_B1 >= omega, gamma^{A0B0} = u^{A0} (x) gamma^{B0}."""
    d = omega.dims
    n = d.a0 * d.a1 * d.b0
    sub = (d.a0, d.a1, d.b0)
    u_a0 = linalg.maximally_mixed(d.a0)
    eye_b1 = np.eye(d.b1)

    def marginal_gap(m):
        return linalg.partial_trace(m, sub, [0, 2]) - np.kron(u_a0, linalg.partial_trace(m, sub, [2]))

    b = ProgramBuilder("ecme")
    gamma = b.variable("gamma", n, Cone.FREE, objective=np.eye(n))
    b.constraint("dominance", n * d.b1, Cone.PSD, {gamma: lambda m: np.kron(m, eye_b1)}, offset=omega.normalized())
    b.constraint("marginal", d.a0 * d.b0, Cone.ZERO, {gamma: marginal_gap})
    return b.build(Sense.MIN)


def ecme(omega: BipartiteChannel, cut: str = "B|A", validate: bool = True,
         gap_tol: Optional[float] = None) -> EcmeResult:
    """H(B|A) of a bipartite channel. validate=False evaluates the same program on any PSD operator."""
    if cut != "B|A":
        raise InvalidInputError(f"unsupported cut '{cut}', only 'B|A' is defined", field="cut")
    if validate:
        omega.check()
    solution = sdp.solve(ecme_program(omega), gap_tol=gap_tol).require_ok("extended conditional min-entropy")
    eta = solution.dual["dominance"]
    alpha = Superchannel(omega.dims, linalg.hermitian_part(eta) / omega.dims.a0)
    logger.debug(f"Entropies: ecme primal {solution.primal_value:.9f} dual {solution.dual_value:.9f}")
    return EcmeResult(
        value=_bits(solution.primal_value),
        dual_value=_bits(solution.dual_value),
        primal_value=solution.primal_value,
        gamma=solution.primal["gamma"],
        superchannel=alpha,
        gap=solution.gap,
        status=solution.status,
    )


def ecme_superchannel_form(omega: BipartiteChannel) -> float:
    """-log2( max_Theta Tr[J_Theta J_Omega] / d_B0 ) over superchannels Theta from A to B."""
    d = omega.dims
    n = d.d_a * d.d_b
    dims = tuple(d)

    def causal(m):
        j_ab0 = linalg.partial_trace(m, dims, [A0, A1, B0])
        j_a0b0 = linalg.partial_trace(m, dims, [A0, B0])
        return j_ab0 - supermaps.embed_uniform(j_a0b0, d, [A0, B0], A1)

    b = ProgramBuilder("ecme_superchannel_form")
    theta = b.variable("theta", n, Cone.PSD, objective=omega.choi)
    b.constraint("normalization", d.a1 * d.b0, Cone.ZERO,
                 {theta: lambda m: linalg.partial_trace(m, dims, [A1, B0])}, offset=np.eye(d.a1 * d.b0))
    b.constraint("causality", d.a0 * d.a1 * d.b0, Cone.ZERO, {theta: causal})
    solution = sdp.solve(b.build(Sense.MAX)).require_ok("superchannel support function")
    return _bits(solution.primal_value / d.b0)


def ecme_upper_bound(omega: BipartiteChannel) -> float:
    """Hmin(B1|A1) of the normalized Choi state."""
    d = omega.dims
    marginal = linalg.partial_trace(omega.normalized(), tuple(d), [A1, B1])
    return h_min_cond(marginal, (d.a1, d.b1)).value


def ecme_lower_bound(omega: BipartiteChannel) -> float:
    """Hmin(A B1|B0) of the normalized Choi state minus log2 d_A."""
    d = omega.dims
    reordered = linalg.permute_systems(omega.normalized(), tuple(d), [B0, A0, A1, B1])
    return h_min_cond(reordered, (d.b0, d.a0 * d.a1 * d.b1)).value - float(np.log2(d.d_a))


# ---- guessing probability ----

def guess_probability_sdp(omega: BipartiteChannel) -> float:
    d = omega.dims
    for leg in (B0, B1):
        if leg not in omega.classical:
            mass = off_diagonal_mass(omega.choi, tuple(d), leg)
            if mass > settings.CLASSICAL_TOL * max(1.0, float(np.linalg.norm(omega.choi))):
                raise InvalidChannelError(f"guessing probability needs a classical B side; leg {leg} is quantum")
    return float(2.0 ** (-ecme(omega).value))


@dataclass
class GuessResult:
    value: float
    exact: bool
    stalled: bool = False
    per_input: List[float] = field(default_factory=list)


def _enumerate_classical(row: Sequence[np.ndarray], d_a0: int, d_a1: int) -> float:
    probs = np.array([np.real(np.diag(b)).reshape(d_a0, d_a1) for b in row])  # x, a0, a1
    return float(np.max(np.sum(np.max(probs, axis=0), axis=1)))


def _output_states(row: Sequence[np.ndarray], psi: np.ndarray, d_a0: int, d_a1: int) -> List[np.ndarray]:
    amp = psi.reshape(d_a0, d_a0)
    side = d_a0 * d_a1
    return [np.einsum("ra,sb,aobp->rosp", amp, amp.conj(), b.reshape(d_a0, d_a1, d_a0, d_a1)).reshape(side, side)
            for b in row]


def _effective_operator(row: Sequence[np.ndarray], povm: Sequence[np.ndarray], d_a0: int, d_a1: int) -> np.ndarray:
    side = d_a0 * d_a0
    k = np.zeros((d_a0, d_a0, d_a0, d_a0), dtype=complex)
    for b, p in zip(row, povm):
        k += np.einsum("aobp,spro->sbra", b.reshape(d_a0, d_a1, d_a0, d_a1), p.reshape(d_a0, d_a1, d_a0, d_a1))
    return linalg.hermitian_part(k.reshape(side, side))


def _pretty_good(states: Sequence[np.ndarray]) -> List[np.ndarray]:
    total = sum(states)
    root = linalg.inv_sqrt_psd(total)
    povm = [root @ s @ root for s in states]
    povm[0] = povm[0] + (np.eye(total.shape[0]) - sum(povm))
    return povm


def _optimal_povm(states: Sequence[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    d = states[0].shape[0]
    b = ProgramBuilder("povm")
    cols = [b.variable(f"P{x}", d, Cone.PSD, objective=s) for x, s in enumerate(states)]
    b.constraint("completeness", d, Cone.ZERO, {c: (lambda m: m) for c in cols}, offset=np.eye(d))
    solution = sdp.solve(b.build(Sense.MAX), with_dual=False).require_ok("POVM step")
    povm = [linalg.project_psd(solution.primal[f"P{x}"], cutoff=0.0) for x in range(len(states))]
    root = linalg.inv_sqrt_psd(sum(povm))
    povm = [root @ p @ root for p in povm]
    return _success(states, povm), povm


def _success(states: Sequence[np.ndarray], povm: Sequence[np.ndarray]) -> float:
    return float(sum(linalg.hs_inner(p, s).real for p, s in zip(povm, states)))


def _seesaw(row: Sequence[np.ndarray], d_a0: int, d_a1: int, rng: np.random.Generator,
            restarts: int) -> Tuple[float, bool]:
    best, stalled_any = 0.0, False
    for attempt in range(restarts):
        if attempt == 0:
            psi = np.eye(d_a0, dtype=complex).reshape(-1) / np.sqrt(d_a0)
        else:
            psi = rng.standard_normal(d_a0 * d_a0) + 1j * rng.standard_normal(d_a0 * d_a0)
            psi = psi / np.linalg.norm(psi)
        povm = _pretty_good(_output_states(row, psi, d_a0, d_a1))

        value, stalled = -np.inf, True
        for _ in range(settings.SEESAW_MAX_ROUNDS):
            psi = linalg.eigh(_effective_operator(row, povm, d_a0, d_a1))[1][:, 0]
            current, povm = _optimal_povm(_output_states(row, psi, d_a0, d_a1))
            if current - value < settings.SEESAW_TOL:
                value, stalled = max(value, current), False
                break
            value = current
        if stalled:
            logger.warning(f"Entropies: seesaw restart {attempt} did not converge in {settings.SEESAW_MAX_ROUNDS} rounds")
        stalled_any = stalled_any or stalled
        best = max(best, value)
        if best >= 1.0 - settings.SEESAW_TOL:
            break
    return best, stalled_any


def guess_probability_oracle(fam: ClassicalInstrumentFamily, restarts: int = None, seed=None) -> GuessResult:
    restarts = settings.SEESAW_RESTARTS if restarts is None else restarts
    if fam.is_classical():
        per_input = [_enumerate_classical(row, fam.d_a0, fam.d_a1) for row in fam.blocks]
        return GuessResult(float(np.mean(per_input)), exact=True, per_input=per_input)

    rng = np.random.default_rng(seed)
    per_input, stalled = [], False
    for y, row in enumerate(fam.blocks):
        value, row_stalled = _seesaw(row, fam.d_a0, fam.d_a1, rng, restarts)
        logger.debug(f"Entropies: seesaw input {y} -> {value:.9f}")
        per_input.append(value)
        stalled = stalled or row_stalled
    return GuessResult(float(np.mean(per_input)), exact=False, stalled=stalled, per_input=per_input)


# ---- axioms ----

@dataclass
class AxiomCheck:
    passed: bool
    worst_margin: float
    cases: int


def entropy_axiom_suite(
    channels: Sequence[Channel],
    superchannels: Sequence[Superchannel],
    f: Callable[[Channel], float] = h_min_ext,
    tol: float = 1e-6,
) -> Dict[str, AxiomCheck]:
    """
    Monotonicity of f under each superchannel applied to each channel with
    matching legs, additivity over consecutive channel pairs, and the two
    normalization points on the legs of the first channel.
    """
    values = [f(c) for c in channels]

    margins = []
    for theta in superchannels:
        for c, value in zip(channels, values):
            if c.dims == (theta.dims.a0, theta.dims.a1):
                margins.append(f(supermaps.apply(theta, c)) - value)
    monotonicity = AxiomCheck(all(m >= -tol for m in margins), min(margins, default=0.0), len(margins))

    errors = [abs(f(tensor(c1, c2)) - v1 - v2)
              for (c1, v1), (c2, v2) in zip(zip(channels, values), zip(channels[1:], values[1:]))]
    additivity = AxiomCheck(all(e <= tol for e in errors), -max(errors, default=0.0), len(errors))

    checks = {"monotonicity": monotonicity, "additivity": additivity}
    if channels:
        d_in, d_out = channels[0].dims
        uniform_error = abs(f(uniform_channel(d_in, d_out)) - float(np.log2(d_out)))
        pure = linalg.projector(linalg.ket(d_out, 0))
        pure_error = abs(f(replacement_channel(d_in, pure)))
        worst = max(uniform_error, pure_error)
        checks["normalization"] = AxiomCheck(worst <= tol, -worst, 2)
    for name, check in checks.items():
        logger.debug(f"Entropies: axiom {name} passed={check.passed} worst margin {check.worst_margin:.3e}")
    return checks
