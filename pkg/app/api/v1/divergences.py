from fastapi import APIRouter

from app.api.deps import service_errors
from app.schemas.requests import DiamondRequest, DiamondResponse
from app.services import divergences, serialization

router = APIRouter()


@router.post("/divergences/diamond", response_model=DiamondResponse)
def diamond(request: DiamondRequest):
    with service_errors("diamond"):
        f = serialization.channel_from_payload(request.first, prefix="first")
        g = serialization.channel_from_payload(request.second, prefix="second")
        report = divergences.diamond_distance(f, g)
        return DiamondResponse(value=report.value, input_state=serialization.matrix_to_pairs(report.input_state))
