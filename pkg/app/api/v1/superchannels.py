from fastapi import APIRouter

from app.api.deps import service_errors
from app.schemas.requests import (
    PropertyReport,
    RealizeRequest,
    RealizeResponse,
    SuperchannelCheckRequest,
    SuperchannelCheckResponse,
)
from app.services import serialization, supermaps

router = APIRouter()


@router.post("/superchannels/check", response_model=SuperchannelCheckResponse)
def check_superchannel(request: SuperchannelCheckRequest):
    """
    Superchannel conditions plus the requested noise-model properties,
    each with its violated marginals.
    """
    with service_errors("superchannel check"):
        theta = serialization.superchannel_from_payload(request.superchannel)
        reports = {}
        for key in request.properties:
            name, check = supermaps.PROPERTY_CHECKS[key]
            reports[name] = PropertyReport.model_validate(check(theta, request.tol))
        return SuperchannelCheckResponse(reports=reports)


@router.post("/superchannels/realize", response_model=RealizeResponse)
def realize_superchannel(request: RealizeRequest):
    with service_errors("realization"):
        theta = serialization.superchannel_from_payload(request.superchannel)
        realization = supermaps.realize(theta, request.tol)
        return RealizeResponse(d_e=realization.d_e, realization=serialization.superchannel_to_payload(realization))
