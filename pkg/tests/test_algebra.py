from functools import reduce

import numpy as np
import pytest

from eitdsp.algebra import verify_dicke_algebra, verify_ensemble_algebra, verify_mlevel_algebra
from eitdsp.dicke import MAX_ATOMS, bosonization_error, build_dicke_model
from eitdsp.models import EnsembleChain, MLevelSystem, build_space


@pytest.mark.parametrize("m", [3, 4, 5])
def test_mlevel_algebra_closes(m):
    system = MLevelSystem(m, 1.0, 10)
    rep = verify_mlevel_algebra(system, build_space(system, 3))
    assert rep.passed(1e-12), rep.residuals


def test_mlevel_printed_excited_relation_recorded():
    # The [T+_ee, E] relation as printed carries an extra term that does not
    # hold in the boson representation; the report keeps its residual.
    system = MLevelSystem(4, 1.0, 10)
    rep = verify_mlevel_algebra(system, build_space(system, 3))
    assert rep.literal_residuals["[T+_ee, E] as printed"] > 0.5


@pytest.mark.parametrize("k", [1, 2, 3])
def test_ensemble_algebra_closes(k):
    chain = EnsembleChain(k, 1.0, 10)
    rep = verify_ensemble_algebra(chain, build_space(chain, 3))
    assert rep.passed(1e-12), rep.residuals
    assert rep.literal_residuals["[T+, T-] = Tz as printed"] > 0.1


@pytest.mark.parametrize("N", [1, 3, 6])
def test_dicke_algebra_exact(N):
    rep = verify_dicke_algebra(N=N)
    assert rep.passed(1e-12), rep.residuals


def _single_atom(i, j):
    m = np.zeros((3, 3))
    m[i, j] = 1.0
    return m


def test_collective_operator_matches_tensor_product():
    # brute force: N = 3 atoms in the full 27-dim space, levels (b, c, e) = (0, 1, 2)
    N = 3
    I = np.eye(3)
    E = sum(
        reduce(np.kron, [_single_atom(0, 2) if k == j else I for k in range(N)]) for j in range(N)
    ) / np.sqrt(N)
    defect = E @ E.T - E.T @ E - np.eye(3**N)
    # symmetric Dicke state with one e excitation
    w = sum(reduce(np.kron, [np.eye(3)[2 if k == j else 0] for k in range(N)]) for j in range(N)) / np.sqrt(N)
    brute = np.linalg.norm(defect @ w)
    assert brute == pytest.approx(bosonization_error(N, 1), abs=1e-12)


@pytest.mark.parametrize("N", [8, 16, 32])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_bosonization_error_closed_form(N, n):
    # [E, E^+] = (N_b - N_e)/N, so the defect on n_c + n_e = n peaks at 2n/N
    assert bosonization_error(N, n) == pytest.approx(2 * n / N, abs=1e-13)


def test_bosonization_error_vanishes_at_zero_excitation():
    assert all(bosonization_error(N, 0) == 0.0 for N in (1, 5, 40))


@pytest.mark.parametrize("args", [(4, 5), (4, -1)])
def test_bosonization_error_rejects_bad_levels(args):
    with pytest.raises(ValueError):
        bosonization_error(*args)


def test_dicke_model_limits():
    with pytest.raises(ValueError):
        build_dicke_model(MAX_ATOMS + 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_dicke_model(2.5, 1.0, 1.0)
    model = build_dicke_model(5, 0.3, 0.7)
    assert model.H.hermiticity_error() < 1e-14
