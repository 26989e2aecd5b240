"""
JSON I/O for channels, superchannels, families, states, bipartite channels
and instrument families.

Numbers are written from Python floats, whose repr is the shortest string
that reads back to the same double, so emit(parse(emit(x))) == emit(x).
"""
import json
from contextlib import contextmanager
from typing import Any, Dict, List, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from app.core.exceptions import DimensionMismatchError, InvalidInputError, NotHermitianError
from app.schemas.payloads import (
    BipartitePayload,
    ChannelPayload,
    FamilyPayload,
    InstrumentPayload,
    RealizationPayload,
    StatePayload,
    SuperchannelPayload,
)
from app.services.channels import Channel, KrausSet, choi_from_kraus
from app.services.entropies import BipartiteChannel, ClassicalInstrumentFamily, bipartite_from_channels
from app.services.majorization import ChannelFamily, gibbs_state
from app.services.supermaps import DimSpec, Realization, Superchannel, choi_from_realization

Document = Union[str, bytes, Dict[str, Any]]
P = TypeVar("P", bound=BaseModel)


def load_document(doc: Document) -> Dict[str, Any]:
    if isinstance(doc, dict):
        return doc
    try:
        obj = json.loads(doc)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}", field="<document>")
    if not isinstance(obj, dict):
        raise InvalidInputError(f"expected a JSON object, got {type(obj).__name__}", field="<document>")
    return obj


def validate_payload(model: Type[P], obj: Any, prefix: str = "") -> P:
    try:
        return model.model_validate(obj)
    except ValidationError as e:
        first = e.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        raise InvalidInputError(first["msg"], field=_join(prefix, path))


def dumps(payload: BaseModel) -> str:
    return json.dumps(payload.model_dump(by_alias=True, exclude_none=True))


def _join(prefix: str, path: str) -> str:
    return ".".join(p for p in (prefix, path) if p)


@contextmanager
def _domain(field: str):
    """Re-raise shape and Hermiticity failures of domain constructors as input errors on `field`."""
    try:
        yield
    except (DimensionMismatchError, NotHermitianError) as e:
        raise InvalidInputError(str(e), field=field) from e


# ---- matrices ----

def matrix_from_pairs(data: Any, field: str) -> np.ndarray:
    try:
        pairs = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("expected a rectangular matrix of [re, im] pairs", field=field)
    if pairs.ndim != 3 or pairs.shape[2] != 2:
        raise InvalidInputError(f"expected rows of [re, im] pairs, got an array of shape {pairs.shape}", field=field)
    if not np.all(np.isfinite(pairs)):
        raise InvalidInputError("non-finite entry", field=field)
    m = np.empty(pairs.shape[:2], dtype=complex)
    m.real = pairs[..., 0]
    m.imag = pairs[..., 1]
    return m


def matrix_to_pairs(m: np.ndarray) -> List[List[List[float]]]:
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


# ---- channels ----

def kraus_from_payload(p: ChannelPayload, prefix: str = "") -> KrausSet:
    if p.representation != "kraus":
        raise InvalidInputError("expected repr 'kraus'", field=_join(prefix, "repr"))
    if not p.data:
        raise InvalidInputError("empty Kraus list", field=_join(prefix, "data"))
    ops = []
    for k, op in enumerate(p.data):
        field = _join(prefix, f"data.{k}")
        m = matrix_from_pairs(op, field)
        if m.shape != (p.d_out, p.d_in):
            raise InvalidInputError(f"Kraus operator of shape {m.shape}, expected {(p.d_out, p.d_in)}", field=field)
        ops.append(m)
    return KrausSet(p.d_in, p.d_out, ops)


def channel_from_payload(p: ChannelPayload, prefix: str = "") -> Channel:
    if p.representation == "kraus":
        return choi_from_kraus(kraus_from_payload(p, prefix))
    field = _join(prefix, "data")
    with _domain(field):
        return Channel(p.d_in, p.d_out, matrix_from_pairs(p.data, field))


def channel_to_payload(obj: Union[Channel, KrausSet]) -> ChannelPayload:
    if isinstance(obj, KrausSet):
        data = [matrix_to_pairs(op) for op in obj.operators]
        return ChannelPayload(d_in=obj.d_in, d_out=obj.d_out, representation="kraus", data=data)
    return ChannelPayload(d_in=obj.d_in, d_out=obj.d_out, representation="choi", data=matrix_to_pairs(obj.choi))


def parse_channel_json(doc: Document) -> Channel:
    return channel_from_payload(validate_payload(ChannelPayload, load_document(doc)))


def parse_kraus_json(doc: Document) -> KrausSet:
    return kraus_from_payload(validate_payload(ChannelPayload, load_document(doc)))


def emit_channel_json(obj: Union[Channel, KrausSet]) -> str:
    return dumps(channel_to_payload(obj))


# ---- superchannels ----

def _realization_dims(r: Realization) -> DimSpec:
    if r.pre.d_out % r.d_e or r.post.d_in % r.d_e:
        raise InvalidInputError(f"environment dimension {r.d_e} does not divide the channel legs", field="data.d_E")
    return DimSpec(r.pre.d_out // r.d_e, r.post.d_in // r.d_e, r.pre.d_in, r.post.d_out)


def realization_from_payload(p: RealizationPayload, prefix: str = "data") -> Realization:
    return Realization(
        pre=channel_from_payload(p.pre, _join(prefix, "pre")),
        post=channel_from_payload(p.post, _join(prefix, "post")),
        d_e=p.d_e,
    )


def superchannel_from_payload(p: SuperchannelPayload) -> Superchannel:
    dims = DimSpec(*p.dims)
    if isinstance(p.data, RealizationPayload):
        r = realization_from_payload(p.data)
        if _realization_dims(r) != dims:
            raise InvalidInputError(f"realization legs {tuple(_realization_dims(r))} do not match dims {tuple(dims)}",
                                    field="dims")
        with _domain("data"):
            return choi_from_realization(r, dims)
    with _domain("data"):
        return Superchannel(dims, matrix_from_pairs(p.data, "data"))


def superchannel_to_payload(obj: Union[Superchannel, Realization]) -> SuperchannelPayload:
    if isinstance(obj, Realization):
        data = RealizationPayload(pre=channel_to_payload(obj.pre), post=channel_to_payload(obj.post), d_e=obj.d_e)
        return SuperchannelPayload(dims=list(_realization_dims(obj)), representation="realization", data=data)
    return SuperchannelPayload(dims=list(obj.dims), representation="choi", data=matrix_to_pairs(obj.choi))


def parse_superchannel_json(doc: Document) -> Superchannel:
    return superchannel_from_payload(validate_payload(SuperchannelPayload, load_document(doc)))


def parse_realization_json(doc: Document) -> Realization:
    p = validate_payload(SuperchannelPayload, load_document(doc))
    if not isinstance(p.data, RealizationPayload):
        raise InvalidInputError("expected repr 'realization'", field="repr")
    return realization_from_payload(p.data)


def emit_superchannel_json(obj: Union[Superchannel, Realization]) -> str:
    return dumps(superchannel_to_payload(obj))


# ---- families ----

def family_from_payload(p: FamilyPayload) -> ChannelFamily:
    d_in, d_out = p.dims
    channels = []
    for k, c in enumerate(p.channels):
        prefix = f"channels.{k}"
        if (c.d_in, c.d_out) != (d_in, d_out):
            raise InvalidInputError(f"member dims {(c.d_in, c.d_out)} differ from family dims {(d_in, d_out)}",
                                    field=prefix)
        channels.append(channel_from_payload(c, prefix))
    return ChannelFamily(d_in, d_out, tuple(channels))


def family_to_payload(fam: ChannelFamily) -> FamilyPayload:
    return FamilyPayload(dims=[fam.d_in, fam.d_out], channels=[channel_to_payload(c) for c in fam.channels])


def parse_family_json(doc: Document) -> ChannelFamily:
    return family_from_payload(validate_payload(FamilyPayload, load_document(doc)))


def emit_family_json(fam: ChannelFamily) -> str:
    return dumps(family_to_payload(fam))


# ---- states ----

def state_from_payload(p: StatePayload) -> Tuple[np.ndarray, Tuple[int, ...]]:
    dims = tuple(p.dims)
    side = int(np.prod(dims))
    if p.hamiltonian is not None:
        h = matrix_from_pairs(p.hamiltonian, "hamiltonian")
        if h.shape != (side, side):
            raise InvalidInputError(f"hamiltonian of shape {h.shape} does not match dims {dims}", field="hamiltonian")
        with _domain("hamiltonian"):
            return gibbs_state(h, p.beta), dims
    rho = matrix_from_pairs(p.data, "data")
    if rho.shape != (side, side):
        raise InvalidInputError(f"state of shape {rho.shape} does not match dims {dims}", field="data")
    return rho, dims


def parse_state_json(doc: Document) -> Tuple[np.ndarray, Tuple[int, ...]]:
    return state_from_payload(validate_payload(StatePayload, load_document(doc)))


def emit_state_json(rho: np.ndarray, dims) -> str:
    return dumps(StatePayload(dims=list(dims), data=matrix_to_pairs(rho)))


# ---- bipartite channels ----

def bipartite_from_payload(p: BipartitePayload) -> BipartiteChannel:
    dims = DimSpec(*p.dims)
    if p.representation == "product":
        if len(p.data) != 2:
            raise InvalidInputError("product data must be the pair [Psi_A, Phi_B]", field="data")
        psi_a, phi_b = (channel_from_payload(validate_payload(ChannelPayload, c, f"data.{k}"), f"data.{k}")
                        for k, c in enumerate(p.data))
        omega = bipartite_from_channels(psi_a, phi_b)
        if omega.dims != dims:
            raise InvalidInputError(f"product legs {tuple(omega.dims)} do not match dims {tuple(dims)}", field="dims")
        with _domain("classical"):
            return BipartiteChannel(dims, omega.choi, frozenset(p.classical))
    with _domain("data"):
        return BipartiteChannel(dims, matrix_from_pairs(p.data, "data"), frozenset(p.classical))


def emit_bipartite_json(omega: BipartiteChannel) -> str:
    return dumps(BipartitePayload(dims=list(omega.dims), representation="choi",
                                  data=matrix_to_pairs(omega.choi), classical=sorted(omega.classical)))


def parse_bipartite_json(doc: Document) -> BipartiteChannel:
    return bipartite_from_payload(validate_payload(BipartitePayload, load_document(doc)))


# ---- instrument families ----

def instrument_from_payload(p: InstrumentPayload) -> ClassicalInstrumentFamily:
    blocks = tuple(tuple(matrix_from_pairs(b, f"blocks.{y}.{x}") for x, b in enumerate(row))
                   for y, row in enumerate(p.blocks))
    with _domain("blocks"):
        return ClassicalInstrumentFamily(p.d_a0, p.d_a1, blocks)


def emit_instrument_json(fam: ClassicalInstrumentFamily) -> str:
    blocks = [[matrix_to_pairs(b) for b in row] for row in fam.blocks]
    return dumps(InstrumentPayload(d_a0=fam.d_a0, d_a1=fam.d_a1, blocks=blocks))


def parse_instrument_json(doc: Document) -> ClassicalInstrumentFamily:
    return instrument_from_payload(validate_payload(InstrumentPayload, load_document(doc)))
