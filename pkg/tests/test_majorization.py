import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, InvalidChannelError
from app.services import channels, divergences, entropies, linalg, majorization, sdp, supermaps
from app.services.majorization import ChannelFamily, Verdict
from tests.conftest import KET_PLUS, PAULI_Z


def _prep(vector) -> channels.Channel:
    return channels.preparation_channel(linalg.projector(vector))


def test_family_validation(qubit_id):
    with pytest.raises(InvalidChannelError):
        ChannelFamily.of(qubit_id, qubit_id.scaled(0.5))
    with pytest.raises(DimensionMismatchError):
        ChannelFamily.of(qubit_id, channels.identity_channel(3))
    with pytest.raises(DimensionMismatchError):
        ChannelFamily.of()
    fam = ChannelFamily.of(qubit_id).extended(channels.uniform_channel(2, 2))
    assert len(fam) == 2
    assert fam.dims == (2, 2)


def test_build_frame_is_complete():
    frame = majorization.build_frame(3)
    assert len(frame.inputs) == 9
    assert np.allclose(sum(frame.povm), np.eye(3))


def test_identical_families_are_feasible(qubit_id, qubit_z):
    fam = ChannelFamily.of(qubit_id, qubit_z)
    cert = majorization.majorize_direct(fam, fam)
    assert cert.verdict is Verdict.FEASIBLE
    assert cert.feasible
    assert supermaps.is_superchannel(cert.superchannel, tol=1e-6)
    assert cert.residual <= 1e-6


def test_single_channel_reaches_any_channel(qubit_id):
    target = channels.random_channel(2, 2, 2, seed=3)
    cert = majorization.majorize_direct(ChannelFamily.of(qubit_id), ChannelFamily.of(target))
    assert cert.feasible
    image = supermaps.apply(cert.superchannel, qubit_id)
    assert np.allclose(image.choi, target.choi, atol=1e-5)


def test_post_processed_family_is_feasible():
    src = ChannelFamily.of(*(channels.random_channel(2, 2, 2, seed=s) for s in (11, 12)))
    lam = channels.random_channel(2, 2, 2, seed=13)
    dst = ChannelFamily.of(*(channels.compose(lam, c) for c in src.channels))
    assert majorization.majorize_direct(src, dst).feasible


def test_repeated_source_cannot_split(qubit_id, qubit_z):
    cert = majorization.majorize_direct(ChannelFamily.of(qubit_id, qubit_id), ChannelFamily.of(qubit_id, qubit_z))
    assert not cert.feasible
    assert cert.slack > 0
    assert cert.witness is not None


def test_preparations_cannot_become_more_distinguishable():
    src = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(KET_PLUS))
    dst = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(linalg.ket(2, 1)))
    cert = majorization.majorize_direct(src, dst)
    assert cert.verdict is Verdict.INFEASIBLE
    assert cert.superchannel is None
    assert cert.witness.separation > 0
    assert cert.minimax_value < 0


def test_reverse_direction_is_feasible():
    src = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(linalg.ket(2, 1)))
    dst = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(KET_PLUS))
    assert majorization.majorize_direct(src, dst).feasible


def test_mismatched_family_sizes(qubit_id):
    with pytest.raises(DimensionMismatchError):
        majorization.superchannel_program(ChannelFamily.of(qubit_id), ChannelFamily.of(qubit_id, qubit_id))


def test_minimax_of_identical_families_is_not_negative(qubit_id, qubit_z):
    fam = ChannelFamily.of(qubit_id, qubit_z)
    result = majorization.majorize_minimax(fam, fam)
    assert result.value >= -1e-5
    assert len(result.blocks) == 2


def test_witness_tests_are_normalized():
    src = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(KET_PLUS))
    dst = ChannelFamily.of(_prep(linalg.ket(2, 0)), _prep(linalg.ket(2, 1)))
    witness = majorization.extract_witness(majorization.majorize_minimax(src, dst), src, dst)
    for row in witness.blocks:
        total = sum(linalg.partial_trace(l, (1, 2), [0]) for l in row)
        assert np.allclose(total, np.eye(1), atol=1e-6)


def test_reduce_and_reconstruct_roundtrip():
    gen = channels.random_channel(4, 4, 2, seed=21)
    phi = entropies.BipartiteChannel(supermaps.DimSpec(2, 2, 2, 2),
                                     linalg.permute_systems(gen.choi, (2, 2, 2, 2), [0, 2, 1, 3]))
    cq = majorization.reduce_to_cq(phi)
    assert len(cq.blocks) == 4
    assert len(cq) == 16
    assert np.allclose(majorization.reconstruct_from_cq(cq).choi, phi.choi, atol=1e-8)


def test_cq_groups_are_trace_preserving():
    phi = entropies.bipartite_from_channels(channels.random_channel(2, 2, 2, seed=31),
                                            channels.random_channel(2, 2, 2, seed=32))
    for row in majorization.reduce_to_cq(phi).groups():
        total = sum(row)
        assert np.allclose(linalg.partial_trace(total, (2, 2), [0]), np.eye(2), atol=1e-8)


@pytest.mark.slow
def test_bipartite_majorizes_itself():
    phi = entropies.bipartite_from_channels(channels.random_channel(2, 2, 2, seed=41),
                                            channels.random_channel(2, 2, 2, seed=42))
    assert majorization.majorize_bipartite(phi, phi).feasible


def test_gibbs_state():
    h = np.diag([0.0, 1.0])
    assert np.allclose(majorization.gibbs_state(h, 0.0), np.eye(2) / 2)
    beta = 2.0
    expected = np.diag([1.0, np.exp(-beta)]) / (1.0 + np.exp(-beta))
    assert np.allclose(majorization.gibbs_state(h + 5.0 * np.eye(2), beta), expected)


def test_gibbs_preserving_identity_is_feasible(qubit_id, qubit_z):
    fam = ChannelFamily.of(qubit_id, qubit_z)
    u = np.eye(2) / 2
    assert majorization.gibbs_majorize(fam, fam, u, u).feasible


def test_gibbs_constraint_blocks_cooling(qubit_id):
    src = ChannelFamily.of(qubit_id)
    dst = ChannelFamily.of(channels.replacement_channel(2, np.diag([0.0, 1.0])))
    cert = majorization.gibbs_majorize(src, dst, np.eye(2) / 2, np.diag([0.9, 0.1]))
    assert not cert.feasible
    # without the Gibbs constraint the same pair is reachable
    assert majorization.majorize_direct(src, dst).feasible


def test_gibbs_states_must_match_outputs(qubit_id):
    fam = ChannelFamily.of(qubit_id)
    with pytest.raises(DimensionMismatchError):
        majorization.gibbs_majorize(fam, fam, np.eye(3) / 3, np.eye(2) / 2)


def test_unitary_pre_and_post_processing_is_feasible(qubit_id, qubit_z):
    src = ChannelFamily.of(qubit_id, qubit_z)
    theta = supermaps.random_unitary_superchannel(
        [1.0], [channels.random_unitary(2, seed=51)], [PAULI_Z], supermaps.DimSpec(2, 2, 2, 2))
    dst = ChannelFamily.of(*(supermaps.apply(theta, c) for c in src.channels))
    assert majorization.majorize_direct(src, dst).feasible


def _cptp_feasibility(pairs, d: int) -> sdp.FeasibilityResult:
    """Is there a channel Lambda on a d-level system with Lambda(rho) = sigma for every pair?"""
    b = sdp.ProgramBuilder("cptp_map")
    lam = b.variable("lam", d * d, sdp.Cone.PSD)
    b.constraint("tp", d, sdp.Cone.ZERO, {lam: lambda m: linalg.partial_trace(m, (d, d), [0])}, offset=np.eye(d))
    for k, (rho, sigma) in enumerate(pairs):
        def image(m, rho=rho):
            return np.einsum("iojp,ij->op", m.reshape(d, d, d, d), rho)
        b.constraint(f"pair_{k}", d, sdp.Cone.ZERO, {lam: image}, offset=sigma)
    return sdp.solve_feasibility(b.build(), tol=1e-6)


@pytest.mark.slow
def test_direct_and_minimax_agree_on_random_instances(generator):
    for k in range(30):
        src = generator.family(2, 2, size=2, kraus_rank=2)
        if k % 2 == 0:
            theta = generator.superchannel((2, 2, 2, 2), d_e=2)
            dst = ChannelFamily.of(*(supermaps.apply(theta, c) for c in src.channels))
        else:
            dst = generator.family(2, 2, size=2, kraus_rank=2)
        cert = majorization.majorize_direct(src, dst)
        minimax = majorization.majorize_minimax(src, dst)
        if k % 2 == 0:
            assert cert.verdict is not Verdict.INFEASIBLE
        if cert.verdict is Verdict.FEASIBLE:
            assert minimax.value >= -1e-5
        elif cert.verdict is Verdict.INFEASIBLE:
            assert minimax.value < 0


@pytest.mark.slow
def test_state_families_match_channel_feasibility(generator, rng):
    compared = 0
    for k in range(20):
        states = [linalg.random_state(2, seed=rng) for _ in range(3)]
        if k % 2 == 0:
            lam = generator.channel(2, 2, 2)
            images = [channels.apply(lam, rho) for rho in states]
        else:
            images = [linalg.random_state(2, seed=rng) for _ in range(3)]
        src = ChannelFamily.of(*(channels.preparation_channel(rho) for rho in states[:2]))
        dst = ChannelFamily.of(*(channels.preparation_channel(sigma) for sigma in images[:2]))
        cert = majorization.gibbs_majorize(src, dst, states[2], images[2])
        oracle = _cptp_feasibility(list(zip(states, images)), 2)
        if cert.verdict is Verdict.BOUNDARY or 1e-6 < oracle.slack < 1e-4:
            continue
        assert cert.feasible == oracle.feasible
        compared += 1
    assert compared >= 15


@pytest.mark.slow
def test_c_lambda_never_drops_along_majorization(generator):
    for _ in range(5):
        src = generator.family(2, 2, size=2, kraus_rank=2)
        theta = generator.superchannel((2, 2, 2, 2), d_e=2)
        dst = ChannelFamily.of(*(supermaps.apply(theta, c) for c in src.channels))
        assert majorization.majorize_direct(src, dst).verdict is not Verdict.INFEASIBLE
        for _ in range(3):
            lam1, lam2 = generator.channel(2, 2, 2), generator.channel(2, 2, 2)
            before = divergences.c_lambda(*src.channels, lam1, lam2)
            after = divergences.c_lambda(*dst.channels, lam1, lam2)
            assert after >= before - 1e-6
