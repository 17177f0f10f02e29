import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eitdsp.branches import CoherentBranches
from eitdsp.fock import ModeSpace, fock_state
from eitdsp.models import EnsembleChain, MLevelSystem
from eitdsp.protocols import (
    default_timing,
    duration_doublings,
    equal_control_angles,
    protocol_release_split,
    protocol_store,
    storage_schedule,
    store_and_split,
    transfer_rotation,
)

M3 = MLevelSystem(3, 1.0, 1)
M4 = MLevelSystem(4, (1.0, 1.0), 1)
K2 = EnsembleChain(2, (1.0, 1.0), 1)


def test_default_timing_scales_with_coupling():
    t = default_timing(MLevelSystem(4, (0.1, 0.2), 100))
    assert t.sweep_T == pytest.approx(200.0)  # 200 / min G, G = (1, 2)
    assert t.omega_max == pytest.approx(2e7)
    assert t.dt == pytest.approx(0.025)


@pytest.mark.parametrize("kw", [dict(sweep_T=0.0), dict(omega_max=-1.0), dict(dt=np.nan)])
def test_default_timing_validation(kw):
    with pytest.raises(ValueError):
        default_timing(M3, **kw)


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_transfer_rotation_is_unitary_and_maps_src_to_dst(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    src, dst = q[:, 0], q[:, 1]
    V = transfer_rotation(src, dst)
    np.testing.assert_allclose(V @ V.conj().T, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(V @ src, dst, atol=1e-12)
    np.testing.assert_allclose(V @ dst, -src, atol=1e-12)
    for j in range(2, n):
        np.testing.assert_allclose(V @ q[:, j], q[:, j], atol=1e-12)


def test_transfer_rotation_needs_orthogonal_modes():
    with pytest.raises(ValueError):
        transfer_rotation(np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2))


def test_storage_schedule_guards():
    t = default_timing(M3)
    with pytest.raises(ValueError):
        storage_schedule(M3, t, angles=())
    with pytest.raises(ValueError):
        storage_schedule(K2, t, omega_shape=(1.0, -1.0))
    with pytest.raises(ValueError):
        storage_schedule(K2, t, omega_shape=(1.0, 1.0), angles=(0.3,))
    sched = storage_schedule(K2, t)
    np.testing.assert_allclose(sched.omega(0.0), [t.omega_max, t.omega_max])
    np.testing.assert_allclose(sched.omega(t.sweep_T), [0.0, 0.0])


def test_three_level_storage():
    res = protocol_store(M3, 1.5)
    assert 1 - res.final_fidelity < 1e-6
    c = res.extras["stored_coherences"]["C"]
    # stored coherence convention: alpha_C = -<C>, equal to the input amplitude
    assert abs(c - 1.5) < 1e-3
    assert res.norm_drift < 1e-10 and res.min_dark_overlap > 0.999


def test_single_photon_storage_on_fock_route():
    space = ModeSpace(M3.mode_labels, 1)
    res = protocol_store(M3, input_state=fock_state(space, {"a1": 1}))
    assert 1 - res.final_fidelity < 1e-6
    assert res.number_expectations[-1, M3.mode_labels.index("C")] == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("angle", [np.pi / 4, 0.4, 1.2])
def test_ensemble_storage_follows_angles(angle):
    res = protocol_store(K2, 2.0, angles=(angle,))
    w = np.array([np.cos(angle), np.sin(angle)])
    got = np.array([res.extras["stored_coherences"][x] for x in ("C1", "C2")])
    np.testing.assert_allclose(got, 2.0 * w, atol=2e-3)
    assert 1 - res.final_fidelity < 1e-4


def test_equal_angles():
    assert equal_control_angles(M4) == (np.pi / 4,)
    # tan phi_1 = g1 Omega2 / (g2 Omega1)
    assert equal_control_angles(MLevelSystem(4, (1.0, 3.0), 1))[0] == pytest.approx(np.arctan(1 / 3))


def test_split_release_amplitudes():
    store, rel = store_and_split(M4, 2.0)
    amps = rel.extras["released_amplitudes"]
    for x in ("a1", "a2"):
        assert abs(amps[x] - 2.0 / np.sqrt(2)) < 1e-3
    assert rel.extras["residual_spinwave_number"] < 1e-4
    assert 1 - rel.final_fidelity < 1e-5


def test_split_release_rejects_ensembles_and_bad_angles():
    with pytest.raises(TypeError):
        protocol_release_split(K2, CoherentBranches.coherent(K2.mode_labels, "C1", 1.0))
    stored = CoherentBranches.coherent(M4.mode_labels, "C", 1.0)
    with pytest.raises(ValueError):
        protocol_release_split(M4, stored, (2.0,))
    with pytest.raises(ValueError):
        protocol_release_split(M4, stored, (0.1, 0.2))


def test_duration_doublings_improve_storage():
    rows = duration_doublings(lambda T: protocol_store(M3, 1.0, T), 200.0, doublings=2)
    assert [T for T, _ in rows] == [200.0, 400.0, 800.0]
    errs = [e for _, e in rows]
    assert errs[0] > errs[1] > errs[2] >= 0
