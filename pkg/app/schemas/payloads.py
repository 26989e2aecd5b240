"""
Documented JSON formats. Complex numbers travel as [re, im] pairs; a matrix
is a list of rows of such pairs. Shapes are checked when a payload is turned
into a domain object (app.services.serialization), where the error can name
the offending field.
"""
from typing import Any, List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

ComplexMatrix = List[List[Any]]


class ChannelPayload(BaseModel):
    d_in: int = Field(..., ge=1)
    d_out: int = Field(..., ge=1)
    representation: Literal["kraus", "choi"] = Field("choi", alias="repr")
    # a list of matrices for "kraus", a single matrix for "choi"
    data: List[Any]

    class Config:
        populate_by_name = True


class RealizationPayload(BaseModel):
    pre: ChannelPayload
    post: ChannelPayload
    d_e: int = Field(..., ge=1, alias="d_E")

    class Config:
        populate_by_name = True


class SuperchannelPayload(BaseModel):
    dims: List[int] = Field(..., min_length=4, max_length=4)
    representation: Literal["choi", "realization"] = Field("choi", alias="repr")
    data: Union[RealizationPayload, ComplexMatrix]

    @model_validator(mode="after")
    def _data_matches_repr(self):
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be positive, got {self.dims}")
        is_realization = isinstance(self.data, RealizationPayload)
        if is_realization != (self.representation == "realization"):
            raise ValueError(f"data does not match repr '{self.representation}'")
        return self

    class Config:
        populate_by_name = True


class FamilyPayload(BaseModel):
    dims: List[int] = Field(..., min_length=2, max_length=2)
    channels: List[ChannelPayload]


class StatePayload(BaseModel):
    """Either an explicit density matrix, or a Gibbs state given by hamiltonian and beta."""
    dims: List[int] = Field(..., min_length=1)
    data: Optional[ComplexMatrix] = None
    hamiltonian: Optional[ComplexMatrix] = None
    beta: Optional[float] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.data is None) == (self.hamiltonian is None):
            raise ValueError("give exactly one of 'data' or 'hamiltonian'")
        if self.hamiltonian is not None and self.beta is None:
            raise ValueError("'beta' is required with 'hamiltonian'")
        return self


class BipartitePayload(BaseModel):
    """A bipartite channel A0 B0 -> A1 B1; "product" data is the pair [Psi_A, Phi_B]."""
    dims: List[int] = Field(..., min_length=4, max_length=4)
    representation: Literal["choi", "product"] = Field("choi", alias="repr")
    data: List[Any]
    classical: List[int] = []

    class Config:
        populate_by_name = True


class InstrumentPayload(BaseModel):
    """blocks[y][x]: Choi matrix over A0 A1 of the CP map applied on outcome x given input y."""
    d_a0: int = Field(..., ge=1)
    d_a1: int = Field(..., ge=1)
    blocks: List[List[ComplexMatrix]]
