from math import comb, exp, factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eitdsp.fock import (
    DensityMatrix,
    ModeSpace,
    StateVector,
    TruncationError,
    annihilator,
    basis_state,
    bipartite_entropy,
    cat_state,
    coherent_state,
    commutator,
    creator,
    fock_state,
    identity,
    number_operator,
    partial_trace,
    sector_closure_violation,
    sector_dimension,
    total_number_operator,
    vacuum,
    von_neumann_entropy,
)


@pytest.mark.parametrize("n_modes,n_cap", [(1, 5), (2, 4), (3, 3), (5, 2), (7, 4)])
def test_dimension_is_sum_of_sector_sizes(n_modes, n_cap):
    space = ModeSpace(tuple(f"b{i}" for i in range(n_modes)), n_cap)
    assert space.dim == sum(comb(n + n_modes - 1, n_modes - 1) for n in range(n_cap + 1))
    assert space.sector_dims() == [sector_dimension(n_modes, n) for n in range(n_cap + 1)]
    # sectors stored contiguously and in ascending order
    assert np.all(np.diff(space.sectors) >= 0)
    assert np.array_equal(space.occupations.sum(axis=1), space.sectors)


def test_index_map_is_reproducible():
    a = ModeSpace(("x", "y", "z"), 3)
    b = ModeSpace(("x", "y", "z"), 3)
    assert np.array_equal(a.occupations, b.occupations)
    for i, occ in enumerate(a.occupations):
        assert b.index(occ) == i


def test_per_mode_cap_prunes_basis():
    space = ModeSpace(("a", "b"), 4, per_mode_cap={"a": 1})
    assert space.occupations[:, 0].max() == 1
    assert space.dim == 2 + 2 + 2 + 2 + 1


@pytest.mark.parametrize("labels", [(), ("a", "a")])
def test_bad_labels_rejected(labels):
    with pytest.raises(ValueError):
        ModeSpace(labels, 2)


def test_ladder_matrix_elements():
    space = ModeSpace(("a", "b"), 4)
    a = annihilator(space, "a")
    for n in range(1, 5):
        src = basis_state(space, (n, 0))
        out = StateVector(space, a.matrix @ src.amplitudes)
        expected = basis_state(space, (n - 1, 0)).amplitudes * np.sqrt(n)
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-14)


def test_canonical_commutator_below_cap():
    space = ModeSpace(("a", "b", "c"), 5)
    for x in space.mode_labels:
        for y in space.mode_labels:
            c = commutator(annihilator(space, x), creator(space, y)) - (x == y) * identity(space)
            block = c.matrix[:, : space.sector_slice(space.n_cap - 1).stop]
            if block.nnz:
                assert abs(block).max() < 1e-14


def test_operators_respect_sector_shift():
    space = ModeSpace(("a", "b"), 4)
    assert sector_closure_violation(annihilator(space, "a")) == 0
    assert sector_closure_violation(creator(space, "b")) == 0
    hop = creator(space, "a") @ annihilator(space, "b")
    assert hop.excitation_shift == 0 and sector_closure_violation(hop) == 0
    total = total_number_operator(space)
    np.testing.assert_array_equal(total.matrix.diagonal(), space.sectors)


def test_coherent_state_amplitudes():
    space = ModeSpace(("a",), 30)
    alpha = 1.3 - 0.4j
    psi = coherent_state(space, "a", alpha)
    n = np.arange(31)
    expected = np.array([exp(-abs(alpha) ** 2 / 2) * alpha**k / np.sqrt(float(factorial(k))) for k in n])
    np.testing.assert_allclose(psi.amplitudes, expected / np.linalg.norm(expected), atol=1e-13)
    assert abs(psi.expectation(annihilator(space, "a")) - alpha) < 1e-9


def test_coherent_truncation_raises():
    space = ModeSpace(("a",), 5)
    with pytest.raises(TruncationError):
        coherent_state(space, "a", 3.0)


@given(st.floats(0.2, 2.0), st.sampled_from([1, -1]))
def test_cat_norm_matches_closed_form(alpha, sign):
    space = ModeSpace(("a",), 40)
    a = coherent_state(space, "a", alpha)
    b = coherent_state(space, "a", -alpha)
    raw = a.amplitudes + sign * b.amplitudes
    # <alpha|-alpha> = exp(-2 alpha^2)
    assert abs(np.vdot(raw, raw).real - (2 + 2 * sign * exp(-2 * alpha**2))) < 1e-9
    cat = cat_state(space, "a", alpha, -alpha, sign)
    # parity: even cat has only even photon numbers
    odd_weight = np.sum(np.abs(cat.amplitudes[1::2]) ** 2)
    assert (odd_weight < 1e-20) if sign == 1 else (odd_weight > 1 - 1e-12)


def test_degenerate_cat_rejected():
    space = ModeSpace(("a",), 10)
    with pytest.raises(ValueError):
        cat_state(space, "a", 0.5, 0.5, -1)


def test_bell_state_entropy_is_ln2():
    space = ModeSpace(("a", "b"), 1)
    psi = (fock_state(space, {"a": 1}) + fock_state(space, {"b": 1})).normalize()
    rho = partial_trace(psi, ("a",))
    rho.validate()
    assert abs(von_neumann_entropy(rho) - np.log(2)) < 1e-14
    assert abs(bipartite_entropy(psi, ("b",)) - np.log(2)) < 1e-14


def test_product_state_has_zero_entropy():
    space = ModeSpace(("a", "b"), 12)
    psi = vacuum(space)
    assert von_neumann_entropy(partial_trace(psi, ("a",))) == 0.0


def test_entropy_clips_tiny_negative_eigenvalues():
    m = np.diag([0.5, 0.5, -5e-13])
    assert abs(von_neumann_entropy(m) - np.log(2)) < 1e-12
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.0, -1e-6]))


def _random_state(seed, labels=("a", "b", "c"), n_cap=3):
    rng = np.random.default_rng(seed)
    space = ModeSpace(labels, n_cap)
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(space, v).normalize()


@given(st.integers(0, 10_000))
def test_partial_trace_is_a_density_matrix(seed):
    psi = _random_state(seed)
    for keep in (("a",), ("b", "c"), ("c", "a")):
        rho = partial_trace(psi, keep)
        rho.validate()


@given(st.integers(0, 10_000))
def test_entropy_equal_on_complementary_cuts(seed):
    psi = _random_state(seed)
    s1 = von_neumann_entropy(partial_trace(psi, ("a",)))
    s2 = von_neumann_entropy(partial_trace(psi, ("b", "c")))
    assert abs(s1 - s2) < 1e-10
    assert abs(bipartite_entropy(psi, ("a",)) - s1) < 1e-10


@given(st.integers(0, 10_000))
def test_nested_partial_trace(seed):
    psi = _random_state(seed)
    full = DensityMatrix(psi.space, np.outer(psi.amplitudes, psi.amplitudes.conj()))
    direct = partial_trace(psi, ("a", "b"))
    via_rho = partial_trace(full, ("a", "b"))
    np.testing.assert_allclose(direct.matrix, via_rho.matrix, atol=1e-12)
    twice = partial_trace(direct, ("a",))
    np.testing.assert_allclose(twice.matrix, partial_trace(psi, ("a",)).matrix, atol=1e-12)


def test_number_operator_counts():
    space = ModeSpace(("a", "b"), 3)
    psi = fock_state(space, {"a": 2, "b": 1})
    assert psi.expectation(number_operator(space, "a")).real == pytest.approx(2)
    assert psi.expectation(number_operator(space, "b")).real == pytest.approx(1)
