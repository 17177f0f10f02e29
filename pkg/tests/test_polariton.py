import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import null_space

from eitdsp.models import EnsembleChain, MLevelSystem, build_hamiltonian, build_space, one_body_matrix
from eitdsp.polariton import (
    MixingAngles,
    angles_from_weights,
    controls_for_angles,
    dark_state,
    dsp_coefficients,
    identity_residuals,
    mixing_angles,
    mixing_angles_ensemble,
    mixing_angles_mlevel,
    mode_operator,
    polariton_weights,
    random_system,
    verify_dsp,
)


@pytest.mark.parametrize("g,N,omega", [(0.1, 100, 1.0), (1.0, 1, 3.0), (2.5, 400, 0.2), (0.3, 7, 50.0)])
def test_three_level_angle(g, N, omega):
    angles = mixing_angles_mlevel((g,), (omega,), N)
    assert np.tan(angles.theta) == pytest.approx(g * np.sqrt(N) / omega, rel=1e-13)
    assert angles.phi == ()


def test_four_level_equal_parameters_give_quarter_pi():
    angles = mixing_angles_mlevel((0.3, 0.3), (2.0, 2.0), 50)
    assert angles.phi[0] == np.pi / 4


def test_ensemble_k1_matches_three_level():
    a = mixing_angles_ensemble((0.4,), (25,), (1.5,))
    b = mixing_angles_mlevel((0.4,), (1.5,), 25)
    assert a.theta == pytest.approx(b.theta, rel=1e-14)


def test_dark_limit_flag():
    angles = mixing_angles_mlevel((1.0, 1.0), (0.0, 0.0), 4, previous_phi=(0.3,))
    assert angles.dark_limit and angles.theta == np.pi / 2 and angles.phi == (0.3,)


@pytest.mark.parametrize("g,omega", [((1.0, -1.0), (1.0, 1.0)), ((1.0, 1.0), (1.0, -1.0)), ((1.0,), (1.0, 1.0))])
def test_invalid_angle_inputs(g, omega):
    with pytest.raises(ValueError):
        mixing_angles_mlevel(g, omega, 10)


@given(st.lists(st.floats(0, np.pi / 2), min_size=0, max_size=4))
def test_weights_are_unit_and_invertible(phi):
    w = polariton_weights(phi)
    assert abs(np.linalg.norm(w) - 1) < 1e-14
    assert np.all(w >= -1e-15)
    back = polariton_weights(angles_from_weights(w))
    np.testing.assert_allclose(back, w, atol=1e-12)


def test_symmetric_angles_give_equal_weights():
    w = polariton_weights((np.pi / 4, np.arctan(np.sqrt(2) / 2)))
    np.testing.assert_allclose(w, np.full(3, 1 / np.sqrt(3)), atol=1e-15)


families = st.sampled_from([("mlevel", 3), ("mlevel", 4), ("mlevel", 5), ("ensemble", 1), ("ensemble", 2), ("ensemble", 3)])


@given(families, st.integers(0, 2**32 - 1))
def test_dsp_is_the_null_vector_of_the_coupling_matrix(fam, seed):
    # independent route: the dark mode spans the kernel of the one-body matrix
    system = random_system(*fam, np.random.default_rng(seed))
    h = one_body_matrix(system, system.omega)
    kernel = null_space(h)
    assert kernel.shape[1] == 1
    c = dsp_coefficients(system, mixing_angles(system, system.omega))
    assert abs(np.linalg.norm(c) - 1) < 1e-14
    assert abs(abs(kernel[:, 0] @ c) - 1) < 1e-12


@given(families, st.integers(0, 2**32 - 1))
def test_identity_residuals_on_random_draws(fam, seed):
    system = random_system(*fam, np.random.default_rng(seed))
    res = identity_residuals(system, n_cap=5, dark_max=4)
    assert res.worst <= 1e-10


def test_dsp_sign_convention():
    s = MLevelSystem(3, 1.0, 1, (1.0,))
    c = dict(zip(s.mode_labels, dsp_coefficients(s, MixingAngles(np.pi / 3, ()))))
    assert c["a1"] == pytest.approx(0.5) and c["C"] == pytest.approx(-np.sqrt(3) / 2)
    chain = EnsembleChain(2, 1.0, 1, (1.0, 1.0))
    c = dict(zip(chain.mode_labels, dsp_coefficients(chain, MixingAngles(np.pi / 2, (np.pi / 4,)))))
    assert c["C1"] == pytest.approx(-1 / np.sqrt(2)) and c["a"] == pytest.approx(0, abs=1e-16)


def test_verify_dsp_detects_a_bright_mode():
    s = MLevelSystem(3, 1.0, 4, (1.0,))
    space = build_space(s, 3)
    H = build_hamiltonian(s, s.omega, space)
    bright = mode_operator(space, {"a1": 1.0})
    rep = verify_dsp(H, bright, space)
    assert rep.bosonic_residual < 1e-14
    assert rep.commutator_residual > 0.1 and not rep.passed()
    with pytest.raises(ValueError):
        verify_dsp(H, bright, space, max_sector=3)


def test_dark_states_are_number_states_of_d():
    s = MLevelSystem(4, (0.5, 1.0), 9, (1.0, 2.0))
    space = build_space(s, 6)
    d = mode_operator(space, dsp_coefficients(s, mixing_angles(s, s.omega)))
    for n in range(6):
        D = dark_state(space, d, n)
        occupation = np.vdot(D.amplitudes, (d.dag() @ d).matrix @ D.amplitudes).real
        assert occupation == pytest.approx(n, abs=1e-12)
    with pytest.raises(ValueError):
        dark_state(space, d, 7)


@given(
    st.sampled_from([("mlevel", 4), ("mlevel", 5), ("ensemble", 2), ("ensemble", 3)]),
    st.integers(0, 2**32 - 1),
    st.lists(st.floats(0.05, np.pi / 2 - 0.05), min_size=2, max_size=2),
)
def test_controls_realise_target_angles(fam, seed, phi):
    system = random_system(*fam, np.random.default_rng(seed))
    phi = tuple(phi[: system.n_fields - 1])
    amps, hold = controls_for_angles(system, phi, omega_max=3.0)
    assert not hold.any()
    assert amps.max() == pytest.approx(3.0)
    np.testing.assert_allclose(mixing_angles(system, amps).phi, phi, atol=1e-10)


def test_zero_weight_ensemble_is_held():
    chain = EnsembleChain(2, 1.0, 1)
    amps, hold = controls_for_angles(chain, (0.0,), omega_max=5.0)
    assert hold.tolist() == [False, True] and amps[1] == 5.0
