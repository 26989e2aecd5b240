from fastapi import APIRouter

from app.api.deps import finite, service_errors
from app.core.exceptions import InvalidInputError
from app.schemas.requests import (
    EcmeRequest,
    EcmeResponse,
    EntropyResponse,
    GuessRequest,
    GuessResponse,
    HminCondRequest,
    HminExtRequest,
)
from app.services import entropies, serialization

router = APIRouter()


@router.post("/entropies/hmin-ext", response_model=EntropyResponse)
def hmin_ext(request: HminExtRequest):
    """
    Extended min-entropy of a channel in bits, with the optimal sigma as certificate.
    """
    with service_errors("hmin-ext"):
        channel = serialization.channel_from_payload(request.channel, prefix="channel")
        result = entropies.h_min_cond(channel.choi / channel.d_in, channel.dims)
        return EntropyResponse(value=result.value, dual_value=result.dual_value,
                               certificate=serialization.matrix_to_pairs(result.sigma))


@router.post("/entropies/hmin-cond", response_model=EntropyResponse)
def hmin_cond(request: HminCondRequest):
    with service_errors("hmin-cond"):
        rho, dims = serialization.state_from_payload(request.state)
        if len(dims) != 2:
            raise InvalidInputError(f"need dims [d_cond, d_rest], got {list(dims)}", field="state.dims")
        result = entropies.h_min_cond(rho, dims)
        return EntropyResponse(value=result.value, dual_value=result.dual_value,
                               certificate=serialization.matrix_to_pairs(result.sigma))


@router.post("/entropies/ecme", response_model=EcmeResponse)
def ecme(request: EcmeRequest):
    with service_errors("ecme"):
        omega = serialization.bipartite_from_payload(request.bipartite)
        result = entropies.ecme(omega)
        response = EcmeResponse(value=result.value, dual_value=result.dual_value, gap=finite(result.gap),
                                status=result.status.value)
        if request.bounds:
            response.lower_bound = entropies.ecme_lower_bound(omega)
            response.upper_bound = entropies.ecme_upper_bound(omega)
        return response


@router.post("/entropies/guess", response_model=GuessResponse)
def guess(request: GuessRequest):
    """
    Guessing probability of an instrument family: the SDP value next to
    the enumeration (classical) or seesaw (quantum) oracle.
    """
    with service_errors("guess"):
        fam = serialization.instrument_from_payload(request.instrument)
        sdp_value = entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam))
        oracle = entropies.guess_probability_oracle(fam, restarts=request.restarts, seed=request.seed)
        return GuessResponse(sdp=sdp_value, oracle=oracle.value, exact=oracle.exact,
                             stalled=oracle.stalled, per_input=oracle.per_input)
