import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eitdsp.entanglement import (
    SYMMETRIC_ANGLES,
    ecs_gram_oracle,
    pm_projection,
    predicted_split_branches,
    predicted_split_state,
    run_two_mode_cat_protocol,
    w_decomposition,
)
from eitdsp.fock import ModeSpace, StateVector, bipartite_entropy, coherent_product
from eitdsp.models import MLevelSystem


def _fock_ecs(A, B, sign, n_cap):
    labels = tuple(f"m{i}" for i in range(len(A)))
    space = ModeSpace(labels, n_cap)
    a = coherent_product(space, dict(zip(labels, A)), tail_tol=1e-9, renormalize=False)
    b = coherent_product(space, dict(zip(labels, B)), tail_tol=1e-9, renormalize=False)
    return StateVector(space, a.amplitudes + sign * b.amplitudes).normalize()


def test_oracle_product_state_has_zero_entropy():
    S, lam, _ = ecs_gram_oracle([1.0, 0.5], [1.0, 0.5], +1)
    assert S == pytest.approx(0, abs=1e-12)
    assert lam.max() == pytest.approx(1)


def test_oracle_well_separated_cat_is_one_ebit():
    S, lam, _ = ecs_gram_oracle([5.0, 5.0], [-5.0, -5.0], -1)
    assert S == pytest.approx(np.log(2), abs=1e-15)


def test_oracle_single_mode_cat_is_pure():
    S, _, _ = ecs_gram_oracle([2.0], [-2.0], +1, keep=[0])
    assert S == pytest.approx(0, abs=1e-12)


def test_oracle_rejects_degenerate_input():
    with pytest.raises(ValueError):
        ecs_gram_oracle([1.0], [1.0], -1)
    with pytest.raises(ValueError):
        ecs_gram_oracle([1.0], [1.0, 2.0], 1)


@given(st.floats(0.3, 1.5), st.floats(0.3, 1.5), st.sampled_from([1, -1]))
def test_oracle_matches_fock_entropy(a1, a2, sign):
    A, B = [a1, a2], [-a1, -a2]
    S, _, _ = ecs_gram_oracle(A, B, sign)
    psi = _fock_ecs(A, B, sign, 24)
    assert S == pytest.approx(bipartite_entropy(psi, ("m0",)), abs=1e-8)


def test_oracle_three_mode_cuts_match_fock():
    A = [0.9, 0.6 - 0.2j, 0.4j]
    B = [-0.9, 0.3, -0.5]
    psi = _fock_ecs(A, B, +1, 16)
    for keep, labels in (([0], ("m0",)), ([1, 2], ("m1", "m2")), ([2], ("m2",))):
        S, _, coeffs = ecs_gram_oracle(A, B, +1, keep=keep)
        assert S == pytest.approx(bipartite_entropy(psi, labels), abs=1e-8)
        assert coeffs is None  # complex single-mode overlaps


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.7])
@pytest.mark.parametrize("sign", [1, -1])
def test_pm_projection_matches_closed_form(alpha, sign):
    A, B = [alpha] * 3, [-alpha] * 3
    psi = _fock_ecs(A, B, sign, 36)
    proj = pm_projection(psi, A, B)
    _, _, coeffs = ecs_gram_oracle(A, B, sign)
    for key, c in coeffs.items():
        assert abs(proj[key] - c) < 1e-8


@pytest.mark.parametrize("sign,support", [(1, {"+++", "+--", "-+-", "--+"}), (-1, {"---", "-++", "+-+", "++-"})])
@pytest.mark.parametrize("alpha", [0.7, 3 / np.sqrt(3), 2.5])
def test_w_decomposition_support(sign, support, alpha):
    dec = w_decomposition(alpha, -alpha, sign)
    assert set(dec.support) == support
    assert dec.weight_sum == pytest.approx(1, abs=1e-12)
    assert dec.off_support_weight < 1e-20
    assert dec.h1**2 + 3 * dec.h2**2 == pytest.approx(1, abs=1e-12)
    # the three W kets share one coefficient
    w_kets = [k for k in support if k not in ("+++", "---")]
    assert np.ptp([dec.coefficients[k] for k in w_kets]) < 1e-14


def test_w_decomposition_printed_forms_differ():
    dec = w_decomposition(np.sqrt(3), -np.sqrt(3), +1)
    assert dec.printed_deviation > 0.1


def test_w_decomposition_needs_real_overlap():
    with pytest.raises(ValueError):
        w_decomposition(1.0, 0.5j, 1)


def test_predicted_branches():
    br = predicted_split_branches(3.0, SYMMETRIC_ANGLES, 5)
    np.testing.assert_allclose(br.amplitudes[0], np.full(3, np.sqrt(3)), atol=1e-14)
    ens = predicted_split_branches(2.0, (np.pi / 4,), 2, "ensemble", beta0=-2.0, sign=-1)
    np.testing.assert_allclose(ens.amplitudes[0], -np.sqrt(2) * np.ones(2), atol=1e-14)
    assert ens.norm == pytest.approx(1)
    with pytest.raises(ValueError):
        predicted_split_branches(1.0, (0.1, 0.2), 4)


def test_predicted_state_is_normalised():
    psi = predicted_split_state(1.0, (np.pi / 4,), 4, beta0=-1.0, sign=-1)
    assert psi.norm == pytest.approx(1)
    assert psi.space.mode_labels == ("a1", "a2")


@pytest.mark.parametrize("sign", [+1, -1])
def test_pm_basis_needs_matching_normalisation(sign):
    # |a> +- |-a> with a = alpha0/sqrt2: only N(alpha0/sqrt2) normalises it
    alpha0 = 1.0
    a = alpha0 / np.sqrt(2)
    space = ModeSpace(("m0",), 30)
    plus = coherent_product(space, {"m0": a}, tail_tol=1e-12, renormalize=False).amplitudes
    minus = coherent_product(space, {"m0": -a}, tail_tol=1e-12, renormalize=False).amplitudes
    raw2 = np.linalg.norm(plus + sign * minus) ** 2
    assert raw2 / (2 + 2 * sign * np.exp(-2 * a**2)) == pytest.approx(1, abs=1e-10)
    assert abs(raw2 / (2 + 2 * sign * np.exp(-2 * (alpha0 / 2) ** 2)) - 1) > 1e-2


def test_two_mode_protocol_report_is_consistent():
    rep = run_two_mode_cat_protocol(1.5, +1, 0.6, system=MLevelSystem(4, (1.0, 1.0), 1))
    assert rep.overlap_fidelity > 1 - 1e-5
    cut = ("a1",)
    # entropy error is first order in the trace distance, i.e. ~ sqrt(1 - F)
    assert rep.entropy_per_cut[cut] == pytest.approx(rep.oracle_entropy_per_cut[cut], abs=1e-4)
    assert rep.oracle_deviation < 1e-8
    assert rep.entropy_per_cut[cut] == pytest.approx(rep.entropy_per_cut[("a2",)], abs=1e-7)
