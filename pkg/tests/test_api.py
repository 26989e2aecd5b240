import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.services import channels, linalg, serialization, supermaps
from app.services.majorization import ChannelFamily

client = TestClient(app)


def _channel(c) -> dict:
    return json.loads(serialization.emit_channel_json(c))


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert "message" in response.json()


def test_health_lists_tolerances_and_backends():
    body = client.get("/health").json()
    assert body["status"] in ("healthy", "degraded")
    assert body["tolerances"]["majorization"] > 0
    assert "backends" in body["services"]["solvers"]


def test_check_channel():
    response = client.post("/api/v1/channels/check", json={"channel": _channel(channels.transpose_map(2))})
    assert response.status_code == 200
    body = response.json()
    assert body["channel"] is False
    assert body["cp"] is False
    assert body["tp"] is True


def test_check_channel_bad_shape_names_field():
    doc = {"d_in": 2, "d_out": 2, "repr": "choi", "data": serialization.matrix_to_pairs(np.eye(3))}
    response = client.post("/api/v1/channels/check", json={"channel": doc})
    assert response.status_code == 400
    assert response.json()["detail"].startswith("channel.data")


def test_schema_violation_is_422():
    response = client.post("/api/v1/channels/check", json={"channel": {"d_in": 2}})
    assert response.status_code == 422


def test_check_superchannel_reports():
    target = channels.replacement_channel(2, np.diag([0.0, 1.0]))
    s = supermaps.replacement_supermap(supermaps.DimSpec(2, 2, 2, 2), target)
    doc = json.loads(serialization.emit_superchannel_json(s))
    response = client.post("/api/v1/superchannels/check", json={"superchannel": doc, "properties": ["sc", "ds"]})
    assert response.status_code == 200
    reports = response.json()["reports"]
    assert reports["superchannel"]["ok"] is True
    assert reports["ds"]["ok"] is False
    assert reports["ds"]["violations"][0]["condition"] == "J^{A0B1} = I"


def test_realize_identity():
    doc = json.loads(serialization.emit_superchannel_json(supermaps.identity_supermap(2, 2)))
    response = client.post("/api/v1/superchannels/realize", json={"superchannel": doc})
    assert response.status_code == 200
    body = response.json()
    assert body["d_e"] == 1
    assert body["realization"]["repr"] == "realization"
    assert body["realization"]["data"]["d_E"] == 1


def test_realize_rejects_non_superchannel():
    s = supermaps.identity_supermap(2, 2)
    doc = {"dims": [2, 2, 2, 2], "repr": "choi", "data": serialization.matrix_to_pairs(2 * s.choi)}
    assert client.post("/api/v1/superchannels/realize", json={"superchannel": doc}).status_code == 400


def test_hmin_ext():
    response = client.post("/api/v1/entropies/hmin-ext", json={"channel": _channel(channels.identity_channel(2))})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(-1.0, abs=1e-6)


def test_hmin_cond():
    state = json.loads(serialization.emit_state_json(np.eye(4) / 4, (2, 2)))
    response = client.post("/api/v1/entropies/hmin-cond", json={"state": state})
    assert response.json()["value"] == pytest.approx(1.0, abs=1e-6)


def test_ecme_with_bounds():
    doc = {"dims": [2, 2, 2, 2], "repr": "product",
           "data": [_channel(channels.identity_channel(2)), _channel(channels.uniform_channel(2, 2))]}
    response = client.post("/api/v1/entropies/ecme", json={"bipartite": doc, "bounds": True})
    assert response.status_code == 200
    body = response.json()
    assert body["value"] == pytest.approx(1.0, abs=1e-5)
    assert body["lower_bound"] <= body["value"] + 1e-6
    assert body["value"] <= body["upper_bound"] + 1e-6


def test_guess_classical():
    blocks = [[serialization.matrix_to_pairs(np.array([[q]])) for q in row] for row in ([0.9, 0.1], [0.2, 0.8])]
    response = client.post("/api/v1/entropies/guess",
                           json={"instrument": {"d_a0": 1, "d_a1": 1, "blocks": blocks}})
    assert response.status_code == 200
    body = response.json()
    assert body["exact"] is True
    assert body["oracle"] == pytest.approx(0.85)
    assert body["sdp"] == pytest.approx(0.85, abs=1e-6)


def test_diamond():
    response = client.post("/api/v1/divergences/diamond", json={
        "first": _channel(channels.identity_channel(2)),
        "second": _channel(channels.unitary_channel(np.diag([1.0, -1.0]))),
    })
    assert response.json()["value"] == pytest.approx(2.0, abs=1e-6)


def test_majorization_feasible_returns_superchannel():
    fam = json.loads(serialization.emit_family_json(ChannelFamily.of(channels.identity_channel(2))))
    response = client.post("/api/v1/majorization/decide", json={"source": fam, "target": fam})
    assert response.status_code == 200
    body = response.json()
    assert body["verdict"] == "feasible"
    assert body["superchannel"]["dims"] == [2, 2, 2, 2]


def test_majorization_infeasible_returns_witness():
    zero = channels.preparation_channel(linalg.projector(linalg.ket(2, 0)))
    one = channels.preparation_channel(linalg.projector(linalg.ket(2, 1)))
    src = json.loads(serialization.emit_family_json(ChannelFamily.of(zero, zero)))
    dst = json.loads(serialization.emit_family_json(ChannelFamily.of(zero, one)))
    body = client.post("/api/v1/majorization/decide", json={"source": src, "target": dst}).json()
    assert body["verdict"] != "feasible"
    assert body["slack"] > 0
    assert body["superchannel"] is None


def test_majorization_needs_both_gibbs_states():
    fam = json.loads(serialization.emit_family_json(ChannelFamily.of(channels.identity_channel(2))))
    gibbs = json.loads(serialization.emit_state_json(np.eye(2) / 2, (2,)))
    response = client.post("/api/v1/majorization/decide", json={"source": fam, "target": fam, "gibbs_in": gibbs})
    assert response.status_code == 400
    assert response.json()["detail"].startswith("gibbs_in")
