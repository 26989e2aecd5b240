import json

import numpy as np
import pytest

from app import cli
from app.services import channels, entropies, linalg, sdp, serialization, supermaps
from app.services.majorization import ChannelFamily


@pytest.fixture
def write(tmp_path):
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


def test_check_channel(write, capsys):
    path = write("id.json", serialization.emit_channel_json(channels.identity_channel(2)))
    assert cli.main(["check-channel", path]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("channel: yes")


def test_check_channel_not_cp(write, capsys):
    path = write("t.json", serialization.emit_channel_json(channels.transpose_map(2)))
    assert cli.main(["check-channel", path, "--json"]) == cli.EXIT_NO
    out = json.loads(capsys.readouterr().out)
    assert out["channel"] is False
    assert out["tp"] is True


def test_check_superchannel_identity(write, capsys):
    path = write("s.json", serialization.emit_superchannel_json(supermaps.identity_supermap(2, 2)))
    assert cli.main(["check-superchannel", path]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == "superchannel: yes; ds: yes; cup: yes"


def test_check_superchannel_single_property(write, capsys):
    target = channels.replacement_channel(2, np.diag([0.0, 1.0]))
    s = supermaps.replacement_supermap(supermaps.DimSpec(2, 2, 2, 2), target)
    path = write("s.json", serialization.emit_superchannel_json(s))
    assert cli.main(["check-superchannel", path, "--property", "ds"]) == cli.EXIT_NO
    out = capsys.readouterr().out
    assert out.startswith("ds: no")
    assert "J^{A0B1} = I" in out


def test_hmin_ext_many_files(write, capsys):
    a = write("u.json", serialization.emit_channel_json(channels.uniform_channel(2, 2)))
    b = write("id.json", serialization.emit_channel_json(channels.identity_channel(2)))
    assert cli.main(["hmin-ext", a, b, "--json"]) == cli.EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out[a]["value"] == pytest.approx(1.0, abs=1e-6)
    assert out[b]["value"] == pytest.approx(-1.0, abs=1e-6)


def test_hmin_cond_needs_two_systems(write, capsys):
    path = write("rho.json", serialization.emit_state_json(np.eye(8) / 8, (2, 2, 2)))
    assert cli.main(["hmin-cond", path]) == cli.EXIT_INPUT
    assert "dims" in capsys.readouterr().err


def test_hmin_cond_with_certificate(write, tmp_path, capsys):
    path = write("rho.json", serialization.emit_state_json(linalg.max_entangled(2) / 2, (2, 2)))
    cert = tmp_path / "cert.json"
    assert cli.main(["hmin-cond", path, "--certificate", str(cert)]) == cli.EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(-1.0, abs=1e-6)
    assert path in json.loads(cert.read_text())


def test_tol_sets_the_duality_gap_check(write, capsys, monkeypatch):
    seen = []
    solve = sdp.solve

    def recording(p, *args, **kwargs):
        seen.append(kwargs.get("gap_tol"))
        return solve(p, *args, **kwargs)

    monkeypatch.setattr(sdp, "solve", recording)
    u = write("u.json", serialization.emit_channel_json(channels.uniform_channel(2, 2)))
    omega = entropies.bipartite_from_channels(channels.uniform_channel(2, 2), channels.identity_channel(2))
    w = write("omega.json", serialization.emit_bipartite_json(omega))
    assert cli.main(["hmin-ext", u, "--tol", "1e-4"]) == cli.EXIT_OK
    assert cli.main(["ecme", w, "--tol", "1e-4"]) == cli.EXIT_OK
    capsys.readouterr()
    assert seen == [1e-4, 1e-4]


def test_diamond(write, capsys):
    a = write("id.json", serialization.emit_channel_json(channels.identity_channel(2)))
    z = write("z.json", serialization.emit_channel_json(channels.unitary_channel(np.diag([1.0, -1.0]))))
    assert cli.main(["diamond", a, z, "--json"]) == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(2.0, abs=1e-6)


def test_majorize_family_with_itself(write, capsys):
    fam = ChannelFamily.of(channels.identity_channel(2), channels.uniform_channel(2, 2))
    path = write("fam.json", serialization.emit_family_json(fam))
    assert cli.main(["majorize", "--from", path, "--to", path]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("majorize: feasible")


def test_majorize_infeasible_writes_witness(write, tmp_path, capsys):
    zero = channels.preparation_channel(np.diag([1.0, 0.0]))
    one = channels.preparation_channel(np.diag([0.0, 1.0]))
    plus = channels.preparation_channel(np.full((2, 2), 0.5))
    src = write("src.json", serialization.emit_family_json(ChannelFamily.of(zero, plus)))
    dst = write("dst.json", serialization.emit_family_json(ChannelFamily.of(zero, one)))
    cert = tmp_path / "cert.json"
    assert cli.main(["majorize", "--from", src, "--to", dst, "--certificate", str(cert)]) == cli.EXIT_NO
    doc = json.loads(cert.read_text())
    assert doc["verdict"] == "infeasible"
    assert doc["witness"]["separation"] > 0


def test_majorize_needs_both_gibbs_states(write, capsys):
    path = write("fam.json", serialization.emit_family_json(ChannelFamily.of(channels.identity_channel(2))))
    gibbs = write("g.json", serialization.emit_state_json(np.eye(2) / 2, (2,)))
    assert cli.main(["majorize", "--from", path, "--to", path, "--gibbs-in", gibbs]) == cli.EXIT_INPUT


def test_realize_writes_document(write, tmp_path, capsys):
    path = write("s.json", serialization.emit_superchannel_json(supermaps.identity_supermap(2, 2)))
    out = tmp_path / "r.json"
    assert cli.main(["realize", path, "--output", str(out)]) == cli.EXIT_OK
    r = serialization.parse_realization_json(out.read_text())
    assert r.d_e == 1
    assert "d_E = 1" in capsys.readouterr().out


def test_gen_is_seeded(capsys):
    assert cli.main(["gen", "channel", "--seed", "5", "--param", "d_in=3"]) == cli.EXIT_OK
    first = capsys.readouterr().out
    assert cli.main(["gen", "channel", "--seed", "5", "--param", "d_in=3"]) == cli.EXIT_OK
    assert capsys.readouterr().out == first
    assert json.loads(first)["d_in"] == 3


def test_gen_count_and_output(tmp_path):
    out = tmp_path / "fams.jsonl"
    assert cli.main(["gen", "family", "--seed", "1", "--count", "3", "--output", str(out)]) == cli.EXIT_OK
    assert len(out.read_text().splitlines()) == 3


def test_bad_param_syntax(capsys):
    assert cli.main(["gen", "channel", "--param", "d_in"]) == cli.EXIT_INPUT
    assert "--param" in capsys.readouterr().err


def test_malformed_json_is_an_input_error(write, capsys):
    path = write("bad.json", '{"d_in": 2,')
    assert cli.main(["check-channel", path]) == cli.EXIT_INPUT
    err = capsys.readouterr().err
    assert path in err
    assert "invalid JSON" in err


def test_missing_file(tmp_path, capsys):
    assert cli.main(["check-channel", str(tmp_path / "nope.json")]) == cli.EXIT_INPUT


def test_tolerance_out_of_range(write, capsys):
    path = write("id.json", serialization.emit_channel_json(channels.identity_channel(2)))
    assert cli.main(["check-channel", path, "--tol", "0.5"]) == cli.EXIT_INPUT
    assert "--tol" in capsys.readouterr().err


def test_solver_failure_exit_code(write, monkeypatch):
    from app.core.exceptions import SolverError

    def broken(*args, **kwargs):
        raise SolverError("no backend")

    monkeypatch.setattr(cli.divergences, "diamond_distance", broken)
    path = write("id.json", serialization.emit_channel_json(channels.identity_channel(2)))
    assert cli.main(["diamond", path, path]) == cli.EXIT_SOLVER
