"""
Distinguishability of channels: diamond distance, the induced trace-distance
contraction and the C_Lambda family built on the extended conditional
min-entropy.
"""
from dataclasses import dataclass, field

import numpy as np

from app.core.exceptions import DimensionMismatchError, InvalidInputError
from app.core.logger import get_logger
from app.services import linalg, sdp
from app.services.channels import Channel
from app.services.entropies import BipartiteChannel, bipartite_from_channels, ecme
from app.services.sdp import Cone, ProgramBuilder, Sense

logger = get_logger(__name__)

SUPPORTED_DIVERGENCES = ("trace",)


@dataclass
class DivergenceReport:
    """input_state is a pure optimal input on A0 (x) R; reduced_state is its A0 marginal."""
    value: float
    input_state: np.ndarray = field(repr=False)
    reduced_state: np.ndarray = field(repr=False)
    certificate: np.ndarray = field(repr=False)
    status: sdp.SolveStatus = sdp.SolveStatus.OPTIMAL


def diamond_program(f: Channel, g: Channel) -> sdp.ConicProgram:
    """max <J_f - J_g, W>  s.t.  0 <= W <= rho (x) I,  rho >= 0,  Tr rho = 1."""
    if f.dims != g.dims:
        raise DimensionMismatchError(f"channel dims {f.dims} and {g.dims} differ")
    d_in, d_out = f.dims
    n = d_in * d_out
    eye_out = np.eye(d_out)

    b = ProgramBuilder("diamond")
    w = b.variable("W", n, Cone.PSD, objective=linalg.hermitian_part(f.choi - g.choi))
    rho = b.variable("rho", d_in, Cone.PSD)
    b.constraint("dominance", n, Cone.PSD, {rho: lambda m: np.kron(m, eye_out), w: lambda m: -m})
    b.constraint("trace", 1, Cone.ZERO, {rho: lambda m: np.trace(m).reshape(1, 1)}, offset=np.ones((1, 1)))
    return b.build(Sense.MAX)


def purification(rho) -> np.ndarray:
    """|psi><psi| on A0 (x) R with |psi> = (I (x) sqrt(rho))|phi+>; its A0 marginal is rho^T."""
    root = linalg.sqrt_psd(linalg.hermitian_part(linalg.as_matrix(rho)))
    return linalg.projector(root.T.reshape(-1))


def diamond_distance(f: Channel, g: Channel) -> DivergenceReport:
    solution = sdp.solve(diamond_program(f, g)).require_ok("diamond distance")
    value = max(0.0, 2.0 * solution.primal_value)
    logger.debug(f"Divergences: diamond distance {value:.9f} ({solution.status.value})")
    rho = solution.primal["rho"]
    return DivergenceReport(
        value=value,
        input_state=purification(rho),
        reduced_state=rho.T,
        certificate=solution.dual.get("dominance", np.zeros((0, 0))),
        status=solution.status,
    )


def contraction_trace(f: Channel, g: Channel, divergence: str = "trace") -> float:
    """Sup over purified inputs of the trace distance between outputs; coincides with the diamond distance."""
    if divergence not in SUPPORTED_DIVERGENCES:
        raise InvalidInputError(f"unsupported divergence '{divergence}'", field="divergence")
    return diamond_distance(f, g).value


def c_lambda(psi1: Channel, psi2: Channel, lam1: Channel, lam2: Channel) -> float:
    """ECME(R|A) of 1/2 (Psi1 (x) Lambda1 + Psi2 (x) Lambda2)."""
    if psi1.dims != psi2.dims or lam1.dims != lam2.dims:
        raise DimensionMismatchError("each pair of channels must share dimensions")
    first = bipartite_from_channels(psi1, lam1)
    second = bipartite_from_channels(psi2, lam2)
    mixture = BipartiteChannel(first.dims, (first.choi + second.choi) / 2)
    return ecme(mixture).value
