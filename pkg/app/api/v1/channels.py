from fastapi import APIRouter

from app.api.deps import finite, service_errors
from app.schemas.requests import ChannelCheckRequest, ChannelCheckResponse
from app.services import serialization
from app.services.channels import is_channel

router = APIRouter()


@router.post("/channels/check", response_model=ChannelCheckResponse)
def check_channel(request: ChannelCheckRequest):
    """
    CP and TP verdicts for a channel given by Kraus operators or Choi matrix.
    """
    with service_errors("channel check"):
        channel = serialization.channel_from_payload(request.channel, prefix="channel")
        verdict = is_channel(channel, request.tol)
        return ChannelCheckResponse(
            channel=verdict.is_cptp,
            cp=verdict.cp,
            tp=verdict.tp,
            min_eigenvalue=finite(verdict.min_eigenvalue),
            tp_residual=verdict.tp_residual,
        )
