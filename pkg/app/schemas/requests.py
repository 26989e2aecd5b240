from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from app.schemas.payloads import (
    BipartitePayload,
    ChannelPayload,
    ComplexMatrix,
    FamilyPayload,
    InstrumentPayload,
    StatePayload,
    SuperchannelPayload,
)

Tolerance = Optional[float]
Property = Literal["sc", "ds", "cup", "cucp"]


class ChannelCheckRequest(BaseModel):
    channel: ChannelPayload
    tol: Tolerance = Field(None, gt=0.0, le=1e-2)


class ChannelCheckResponse(BaseModel):
    channel: bool
    cp: bool
    tp: bool
    min_eigenvalue: Optional[float] = None
    tp_residual: float


class SuperchannelCheckRequest(BaseModel):
    superchannel: SuperchannelPayload
    properties: List[Property] = ["sc", "ds", "cup"]
    tol: Tolerance = Field(None, gt=0.0, le=1e-2)


class ViolationOut(BaseModel):
    condition: str
    residual: float
    tolerance: float

    class Config:
        from_attributes = True


class PropertyReport(BaseModel):
    ok: bool
    violations: List[ViolationOut] = []

    class Config:
        from_attributes = True


class SuperchannelCheckResponse(BaseModel):
    reports: Dict[str, PropertyReport]


class RealizeRequest(BaseModel):
    superchannel: SuperchannelPayload
    tol: Tolerance = Field(None, gt=0.0, le=1e-2)


class RealizeResponse(BaseModel):
    d_e: int
    realization: SuperchannelPayload


class HminExtRequest(BaseModel):
    channel: ChannelPayload


class HminCondRequest(BaseModel):
    """dims must be [d_cond, d_rest]; the first system is conditioned on."""
    state: StatePayload


class EntropyResponse(BaseModel):
    value: float
    dual_value: float
    certificate: Optional[ComplexMatrix] = None


class EcmeRequest(BaseModel):
    bipartite: BipartitePayload
    bounds: bool = False


class EcmeResponse(BaseModel):
    value: float
    dual_value: float
    gap: Optional[float] = None
    status: str
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None


class GuessRequest(BaseModel):
    instrument: InstrumentPayload
    restarts: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)


class GuessResponse(BaseModel):
    sdp: float
    oracle: float
    exact: bool
    stalled: bool
    per_input: List[float]


class DiamondRequest(BaseModel):
    first: ChannelPayload
    second: ChannelPayload


class DiamondResponse(BaseModel):
    value: float
    input_state: ComplexMatrix


class MajorizationRequest(BaseModel):
    source: FamilyPayload
    target: FamilyPayload
    gibbs_in: Optional[StatePayload] = None
    gibbs_out: Optional[StatePayload] = None
    tol: Tolerance = Field(None, gt=0.0, le=1e-2)


class MajorizationResponse(BaseModel):
    verdict: Literal["feasible", "infeasible", "boundary"]
    residual: Optional[float] = None
    slack: Optional[float] = None
    minimax_value: Optional[float] = None
    separation: Optional[float] = None
    h_src: Optional[float] = None
    h_dst: Optional[float] = None
    superchannel: Optional[SuperchannelPayload] = None
