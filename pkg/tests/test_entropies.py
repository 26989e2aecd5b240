import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, InvalidChannelError, InvalidInputError
from app.services import channels, entropies, linalg, sdp, supermaps
from app.services.entropies import BipartiteChannel, ClassicalInstrumentFamily
from app.services.supermaps import B0, DimSpec
from tests.conftest import KET_PLUS

HELSTROM = 0.5 * (1 + 1 / np.sqrt(2))


def _preparation_family(*vectors) -> ClassicalInstrumentFamily:
    """One input, outcome x prepares the x-th vector with equal weight."""
    n = len(vectors)
    row = tuple(linalg.projector(v) / n for v in vectors)
    return ClassicalInstrumentFamily(1, 2, (row,))


def _classical_family(p) -> ClassicalInstrumentFamily:
    return ClassicalInstrumentFamily(1, 1, tuple(tuple(np.array([[q]]) for q in row) for row in p))


def test_h_min_of_states():
    assert entropies.h_min(np.eye(2) / 2) == pytest.approx(1.0)
    assert entropies.h_min(np.diag([1.0, 0.0])) == pytest.approx(0.0)
    assert entropies.h_min(np.diag([0.75, 0.25])) == pytest.approx(0.41504, abs=1e-5)


def test_h_min_cond_reference_points():
    assert entropies.h_min_cond(np.eye(4) / 4, (2, 2)).value == pytest.approx(1.0, abs=1e-6)
    assert entropies.h_min_cond(linalg.max_entangled(2) / 2, (2, 2)).value == pytest.approx(-1.0, abs=1e-6)
    correlated = np.diag([0.5, 0.0, 0.0, 0.5])
    assert entropies.h_min_cond(correlated, (2, 2)).value == pytest.approx(0.0, abs=1e-6)


def test_h_min_cond_certificates_agree():
    rho = linalg.random_state(4, seed=17)
    result = entropies.h_min_cond(rho, (2, 2))
    assert result.value == pytest.approx(result.dual_value, abs=1e-6)
    assert linalg.is_psd(result.certificate, tol=1e-6)
    dominated = np.kron(result.sigma, np.eye(2)) - rho
    assert linalg.is_psd(dominated, tol=1e-6)


def test_h_min_cond_rejects_wrong_dims():
    with pytest.raises(DimensionMismatchError):
        entropies.h_min_cond(np.eye(4) / 4, (2, 3))


def test_h_min_ext_reference_points(qubit_id, uniform_qubit):
    assert entropies.h_min_ext(uniform_qubit) == pytest.approx(1.0, abs=1e-6)
    pure = channels.replacement_channel(2, np.diag([1.0, 0.0]))
    assert entropies.h_min_ext(pure) == pytest.approx(0.0, abs=1e-6)
    assert entropies.h_min_ext(qubit_id) == pytest.approx(-1.0, abs=1e-6)


def test_support_function(qubit_id, uniform_qubit):
    assert entropies.support_function_channels(qubit_id) == pytest.approx(4.0, abs=1e-6)
    assert entropies.support_function_channels(uniform_qubit) == pytest.approx(1.0, abs=1e-6)


def test_bipartite_rejects_false_classical_flag():
    omega = entropies.bipartite_from_channels(channels.identity_channel(2), channels.identity_channel(2))
    with pytest.raises(InvalidChannelError):
        BipartiteChannel(omega.dims, omega.choi, classical={B0})


def test_bipartite_as_channel_is_cptp():
    omega = entropies.bipartite_from_channels(channels.random_channel(2, 2, 2, seed=1),
                                              channels.random_channel(2, 3, 2, seed=2))
    assert channels.is_channel(omega.as_channel()).is_cptp
    assert omega.dims == DimSpec(2, 2, 2, 3)


def test_bipartite_tensor_dims():
    omega = entropies.bipartite_from_channels(channels.identity_channel(2), channels.uniform_channel(1, 2))
    joint = entropies.bipartite_tensor(omega, omega)
    assert joint.dims == DimSpec(4, 4, 1, 4)
    joint.check()


def test_ecme_of_replacement_is_conditional_entropy_of_state():
    sigma = linalg.random_state(4, seed=23)
    omega = entropies.replacement_bipartite(sigma, 2, 2, 2)
    expected = entropies.h_min_cond(sigma, (2, 2)).value
    assert entropies.ecme(omega).value == pytest.approx(expected, abs=1e-5)


def test_ecme_of_product_is_extended_entropy_of_second_factor():
    psi = channels.random_channel(2, 2, 2, seed=31)
    phi = channels.random_channel(2, 2, 2, seed=32)
    result = entropies.ecme(entropies.bipartite_from_channels(psi, phi))
    assert result.value == pytest.approx(entropies.h_min_ext(phi), abs=1e-5)
    assert result.value == pytest.approx(result.dual_value, abs=1e-5)


def test_ecme_dual_point_is_a_superchannel():
    omega = entropies.bipartite_from_channels(channels.random_channel(2, 2, 2, seed=41),
                                              channels.random_channel(2, 2, 2, seed=42))
    result = entropies.ecme(omega)
    assert supermaps.is_superchannel(result.superchannel, tol=1e-5)


def test_ecme_matches_superchannel_form():
    omega = entropies.bipartite_from_channels(channels.random_channel(2, 2, 2, seed=51),
                                              channels.random_channel(2, 2, 2, seed=52))
    assert entropies.ecme_superchannel_form(omega) == pytest.approx(entropies.ecme(omega).value, abs=1e-5)


def test_ecme_bounds_sandwich():
    gen = channels.random_channel(4, 4, 2, seed=61)
    omega = BipartiteChannel(DimSpec(2, 2, 2, 2),
                             linalg.permute_systems(gen.choi, (2, 2, 2, 2), [0, 2, 1, 3]))
    value = entropies.ecme(omega).value
    assert entropies.ecme_lower_bound(omega) <= value + 1e-6
    assert value <= entropies.ecme_upper_bound(omega) + 1e-6


def test_ecme_rejects_unknown_cut():
    omega = entropies.bipartite_from_channels(channels.identity_channel(2), channels.identity_channel(2))
    with pytest.raises(InvalidInputError) as err:
        entropies.ecme(omega, cut="A|B")
    assert err.value.field == "cut"


def test_ecme_validates_channel():
    omega = entropies.bipartite_from_channels(channels.identity_channel(2).scaled(2.0), channels.identity_channel(2))
    with pytest.raises(InvalidChannelError):
        entropies.ecme(omega)


def test_condition_on_input_reduces_product():
    psi = channels.random_channel(2, 2, 2, seed=71)
    side = channels.random_channel(2, 2, 2, seed=72)
    phi = channels.random_channel(2, 2, 2, seed=73)
    omega = entropies.bipartite_from_channels(channels.tensor(psi, side), phi)
    reduced = entropies.condition_on_input(omega, 2, 2, np.eye(2) / 2)
    assert reduced.dims == DimSpec(2, 2, 2, 2)
    assert np.allclose(reduced.choi, entropies.bipartite_from_channels(psi, phi).choi)


def test_instrument_family_validation():
    with pytest.raises(InvalidChannelError):
        _classical_family([[0.9, 0.3]])
    with pytest.raises(DimensionMismatchError):
        ClassicalInstrumentFamily(1, 1, ((np.array([[1.0]]),), (np.array([[0.5]]), np.array([[0.5]]))))


def test_guess_classical_is_exact():
    fam = _classical_family([[0.9, 0.1], [0.2, 0.8]])
    assert fam.is_classical()
    result = entropies.guess_probability_oracle(fam)
    assert result.exact
    assert result.value == pytest.approx(0.85)
    assert result.per_input == pytest.approx([0.9, 0.8])
    assert entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam)) == pytest.approx(0.85, abs=1e-6)


def test_guess_orthogonal_states_is_certain():
    fam = _preparation_family(linalg.ket(2, 0), linalg.ket(2, 1))
    assert entropies.guess_probability_oracle(fam).value == pytest.approx(1.0)


def test_guess_helstrom():
    fam = _preparation_family(linalg.ket(2, 0), KET_PLUS)
    assert not fam.is_classical()
    oracle = entropies.guess_probability_oracle(fam, restarts=3, seed=0)
    assert not oracle.exact
    assert oracle.value == pytest.approx(HELSTROM, abs=1e-6)
    sdp_value = entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam))
    assert sdp_value == pytest.approx(HELSTROM, abs=1e-6)


def test_guess_sdp_requires_classical_b_side():
    omega = entropies.bipartite_from_channels(channels.identity_channel(2), channels.identity_channel(2))
    with pytest.raises(InvalidChannelError):
        entropies.guess_probability_sdp(omega)


@pytest.mark.slow
def test_axiom_suite_on_random_unitary_superchannels():
    chans = [channels.random_channel(2, 2, 2, seed=s) for s in (81, 82, 83)]
    us = [channels.random_unitary(2, seed=k) for k in range(4)]
    theta = supermaps.random_unitary_superchannel([0.6, 0.4], us[:2], us[2:], DimSpec(2, 2, 2, 2))
    checks = entropies.entropy_axiom_suite(chans, [theta])
    assert set(checks) == {"monotonicity", "additivity", "normalization"}
    assert checks["monotonicity"].cases == 3
    assert checks["additivity"].cases == 2
    assert all(check.passed for check in checks.values())


def test_ecme_additive_under_tensor_products(generator):
    for _ in range(3):
        omega = generator.bipartite((1, 2, 2, 2))
        gamma = generator.bipartite((1, 2, 1, 2))
        joint = entropies.bipartite_tensor(omega, gamma)
        expected = entropies.ecme(omega).value + entropies.ecme(gamma).value
        assert entropies.ecme(joint).value == pytest.approx(expected, abs=1e-5)


def test_ecme_never_decreases_under_superchannels_on_a(generator):
    for _ in range(3):
        omega = generator.bipartite((2, 2, 2, 2))
        theta = generator.superchannel((2, 2, 2, 2), d_e=2)
        image = supermaps.apply_to_first(theta, omega.choi, (2, 2))
        processed = BipartiteChannel(DimSpec(2, 2, 2, 2), image)
        assert entropies.ecme(omega).value <= entropies.ecme(processed).value + 1e-6


def test_conditioning_on_more_inputs_lowers_ecme(generator, rng):
    for _ in range(3):
        # A side is (A C) with d_A0 = 1, d_C0 = 2, d_A1 = 2, d_C1 = 2
        omega = generator.bipartite((2, 4, 2, 2))
        gamma = linalg.random_state(2, seed=rng)
        reduced = entropies.condition_on_input(omega, 2, 2, gamma)
        assert entropies.ecme(omega).value <= entropies.ecme(reduced).value + 1e-6


@pytest.mark.slow
def test_ecme_additivity_at_full_size(generator):
    """Joint instances of dims (2, 4, 2, 4): the dominance block has side 64."""
    for _ in range(3):
        omega = generator.bipartite((1, 2, 2, 2))
        gamma = generator.bipartite((2, 2, 1, 2))
        joint = entropies.bipartite_tensor(omega, gamma)
        result = entropies.ecme(joint)
        assert result.status is sdp.SolveStatus.OPTIMAL
        assert result.value == pytest.approx(result.dual_value, abs=1e-6)
        assert result.value == pytest.approx(entropies.ecme(omega).value + entropies.ecme(gamma).value, abs=1e-5)


@pytest.mark.slow
def test_ecme_strong_duality_sweep(generator):
    for _ in range(100):
        result = entropies.ecme(generator.bipartite((2, 2, 2, 2)))
        assert result.status is sdp.SolveStatus.OPTIMAL
        assert abs(result.value - result.dual_value) <= 1e-6


@pytest.mark.slow
def test_ecme_monotone_and_conditioning_sweep(generator, rng):
    for _ in range(10):
        omega = generator.bipartite((2, 4, 2, 2))
        value = entropies.ecme(omega).value
        for _ in range(2):
            gamma = linalg.random_state(2, seed=rng)
            assert value <= entropies.ecme(entropies.condition_on_input(omega, 2, 2, gamma)).value + 1e-6
        theta = generator.superchannel((2, 4, 2, 4), d_e=2)
        image = BipartiteChannel(omega.dims, supermaps.apply_to_first(theta, omega.choi, (2, 2)))
        assert value <= entropies.ecme(image).value + 1e-6


@pytest.mark.slow
def test_guess_sweep_over_classical_instruments(generator):
    for _ in range(50):
        fam = generator.instrument(2, 2, inputs=2, outcomes=2, classical=True)
        oracle = entropies.guess_probability_oracle(fam)
        assert oracle.exact
        sdp_value = entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam))
        assert sdp_value == pytest.approx(oracle.value, abs=1e-5)


@pytest.mark.slow
def test_seesaw_is_bounded_by_the_sdp(generator):
    for seed in range(20):
        fam = generator.instrument(2, 2, inputs=2, outcomes=2, classical=False)
        oracle = entropies.guess_probability_oracle(fam, restarts=8, seed=seed)
        sdp_value = entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam))
        assert oracle.value <= sdp_value + 1e-6
        assert oracle.value == pytest.approx(sdp_value, abs=1e-3)
