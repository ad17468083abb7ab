import numpy as np
import pytest

from ccdsim.qubit import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    NormalizationError,
    QubitState,
    bloch_vector,
    is_unitary,
    pauli_axis,
    require_unitary,
    rotation,
    state_fidelity,
)


def test_basis_states_normalized():
    for state in (QubitState.zero(), QubitState.one(), QubitState.plus()):
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-12


def test_construction_rejects_bad_norm():
    with pytest.raises(NormalizationError):
        QubitState(np.array([1.0, 1.0]))


def test_construction_renormalizes_small_drift():
    state = QubitState(np.array([1.0 + 3e-9, 0.0], dtype=complex))
    assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-15


@pytest.mark.parametrize(
    "amps,expected",
    [
        ([1, 0], (0.0, 0.0, 1.0)),
        (np.array([1, 1]) / np.sqrt(2), (1.0, 0.0, 0.0)),
        (np.array([1, 1j]) / np.sqrt(2), (0.0, 1.0, 0.0)),
        ([0, 1], (0.0, 0.0, -1.0)),
    ],
)
def test_bloch_vector_cardinal_states(amps, expected):
    vec = bloch_vector(QubitState(np.asarray(amps, dtype=complex)))
    assert np.allclose(vec, expected, atol=1e-12)


def test_pauli_axis_definition():
    assert np.allclose(pauli_axis(0.0), SIGMA_X)
    assert np.allclose(pauli_axis(np.pi / 2), SIGMA_Y)
    assert np.allclose(pauli_axis(np.pi / 4), (SIGMA_X + SIGMA_Y) / np.sqrt(2))


def test_pauli_axis_squares_to_identity():
    rng = np.random.default_rng(7)
    for phi in rng.uniform(-2 * np.pi, 2 * np.pi, 25):
        op = pauli_axis(phi)
        assert np.allclose(op @ op, IDENTITY, atol=1e-14)
        assert np.allclose(op, op.conj().T)
        assert abs(np.trace(op)) < 1e-14
        eigs = np.sort(np.linalg.eigvalsh(op))
        assert np.allclose(eigs, [-1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (QubitState.zero(), QubitState.zero(), 1.0),
        (QubitState.zero(), QubitState.one(), 0.0),
        (QubitState.zero(), QubitState.plus(), 0.5),
    ],
)
def test_state_fidelity_reference_values(a, b, expected):
    assert state_fidelity(a, b) == pytest.approx(expected, abs=1e-14)


def test_fidelity_global_phase_invariance():
    rng = np.random.default_rng(11)
    for _ in range(25):
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        state = QubitState(amps / np.linalg.norm(amps))
        gamma = rng.uniform(0, 2 * np.pi)
        rotated = QubitState(np.exp(1j * gamma) * state.amplitudes)
        assert state_fidelity(state, rotated) == pytest.approx(1.0, abs=1e-12)


def test_bloch_rotates_with_z_rotation():
    rng = np.random.default_rng(3)
    for _ in range(20):
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        state = QubitState(amps / np.linalg.norm(amps))
        gamma = rng.uniform(-np.pi, np.pi)
        u = np.diag([np.exp(-1j * gamma / 2), np.exp(1j * gamma / 2)])
        before = bloch_vector(state)
        after = bloch_vector(state.apply(u))
        expected_x = np.cos(gamma) * before.x - np.sin(gamma) * before.y
        expected_y = np.sin(gamma) * before.x + np.cos(gamma) * before.y
        assert after.x == pytest.approx(expected_x, abs=1e-12)
        assert after.y == pytest.approx(expected_y, abs=1e-12)
        assert after.z == pytest.approx(before.z, abs=1e-12)


def test_bloch_norm_is_unity_for_pure_states():
    rng = np.random.default_rng(19)
    for _ in range(30):
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        vec = bloch_vector(QubitState(amps / np.linalg.norm(amps)))
        assert vec.norm() == pytest.approx(1.0, abs=1e-12)


def test_rotation_is_unitary_and_pi_about_x_flips():
    u = rotation(0.0, np.pi)
    assert is_unitary(u)
    flipped = QubitState.zero().apply(u)
    assert state_fidelity(flipped, QubitState.one()) == pytest.approx(1.0, abs=1e-14)


def test_require_unitary_raises():
    with pytest.raises(ValueError):
        require_unitary(np.array([[1.0, 0.1], [0.0, 1.0]], dtype=complex))
