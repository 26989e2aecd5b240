from fastapi import APIRouter

from app.api.deps import finite, service_errors
from app.core.exceptions import InvalidInputError
from app.schemas.requests import MajorizationRequest, MajorizationResponse
from app.services import serialization
from app.services.majorization import gibbs_majorize, majorize_direct

router = APIRouter()


@router.post("/majorization/decide", response_model=MajorizationResponse)
def decide(request: MajorizationRequest):
    """
    Is there one superchannel taking every source channel to its target?
    Feasible answers carry the superchannel, infeasible ones the witness
    entropies that separate the two families.
    """
    with service_errors("majorization"):
        src = serialization.family_from_payload(request.source)
        dst = serialization.family_from_payload(request.target)
        if (request.gibbs_in is None) != (request.gibbs_out is None):
            raise InvalidInputError("give both gibbs_in and gibbs_out, or neither", field="gibbs_in")

        if request.gibbs_in is not None:
            gamma_in, _ = serialization.state_from_payload(request.gibbs_in)
            gamma_out, _ = serialization.state_from_payload(request.gibbs_out)
            cert = gibbs_majorize(src, dst, gamma_in, gamma_out, request.tol)
        else:
            cert = majorize_direct(src, dst, request.tol)

        response = MajorizationResponse(
            verdict=cert.verdict.value,
            residual=finite(cert.residual),
            slack=finite(cert.slack),
            minimax_value=finite(cert.minimax_value),
        )
        if cert.superchannel is not None:
            response.superchannel = serialization.superchannel_to_payload(cert.superchannel)
        if cert.witness is not None:
            response.separation = cert.witness.separation
            response.h_src = cert.witness.h_src
            response.h_dst = cert.witness.h_dst
        return response
