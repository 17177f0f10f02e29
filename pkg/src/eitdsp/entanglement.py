"""Entanglement generation by storing a cat (or single photon) and splitting it.

The protocols run on the coherent-branch representation: a cat input
(|alpha0> + sign |beta0>) stays a two-branch state under the linear
dynamics, and its output is an entangled coherent state over the output
modes.  Entropies of the simulated state come from reduced density matrices
with every other mode (atomic remnants included) traced out analytically.

:func:`ecs_gram_oracle` is a separate computation of the same quantities
from the 2x2 branch Gram matrices; it shares no code with the Fock-space
path, so the two cross-check each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .branches import CoherentBranches
from .dynamics import ProtocolResult
from .fock import ModeSpace, StateVector, bipartite_entropy, fock_state, partial_trace, von_neumann_entropy
from .models import EnsembleChain, MLevelSystem
from .polariton import polariton_weights
from .protocols import protocol_store, store_and_split

__all__ = [
    "WDecomposition",
    "EntanglementReport",
    "ecs_gram_oracle",
    "w_decomposition",
    "pm_projection",
    "predicted_split_branches",
    "predicted_split_state",
    "run_two_mode_cat_protocol",
    "run_single_photon_protocol",
    "run_three_mode_cat_protocol",
    "run_ensemble_entanglement",
    "SYMMETRIC_ANGLES",
]

# phi = pi/4, varphi = arctan(sqrt(2)/2): equal weights over three outputs
SYMMETRIC_ANGLES = (np.pi / 4, float(np.arctan(np.sqrt(2) / 2)))


# ---------------------------------------------------------------------------
# Gram-matrix oracle


def _ovl(a, b) -> complex:
    # <a|b> of multimode coherent states
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return complex(np.exp(np.sum(np.conj(a) * b) - 0.5 * np.sum(np.abs(a) ** 2) - 0.5 * np.sum(np.abs(b) ** 2)))


def _cat_norm(a, b, sign) -> float:
    return float(2.0 + 2.0 * sign * _ovl(a, b).real)


def ecs_gram_oracle(amplitudes_A, amplitudes_B, sign: int, keep: Sequence[int] | None = None):
    """Exact spectrum and entropy of (|A> + sign |B>)/sqrt(N) across ``keep | rest``.

    ``keep`` lists mode indices (default: the first mode).  Returns
    (entropy in nats, eigenvalues, |+-> basis coefficients or None).  The
    coefficients are given when every mode has a real branch overlap
    <A_l|B_l>, which makes the per-mode |+>, |-> orthonormal; they map
    strings such as "+-+" to amplitudes.
    """
    A = np.atleast_1d(np.asarray(amplitudes_A, dtype=complex))
    B = np.atleast_1d(np.asarray(amplitudes_B, dtype=complex))
    if A.shape != B.shape:
        raise ValueError("branch amplitude tuples must have equal length")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    norm = _cat_norm(A, B, sign)
    if norm < 1e-12:
        raise ValueError("degenerate cat: normalisation vanishes")
    keep = [0] if keep is None else sorted(int(i) for i in keep)
    rest = [i for i in range(A.size) if i not in keep]
    c = np.array([1.0, sign]) / np.sqrt(norm)
    KA, KB = A[keep], B[keep]
    RA, RB = A[rest], B[rest]
    gk = np.array([[1.0, _ovl(KA, KB)], [_ovl(KB, KA), 1.0]])
    gr = np.array([[1.0, _ovl(RA, RB)], [_ovl(RB, RA), 1.0]])
    # rho_keep = sum_ij M_ij |K_i><K_j|,  M_ij = c_i c_j <R_j|R_i>
    M = np.outer(c, c) * gr.T
    # nonzero spectrum of rho = spectrum of gk^(1/2) M gk^(1/2)
    w, V = np.linalg.eigh(gk)
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    lam = np.linalg.eigvalsh(root @ M @ root)
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    nz = lam[lam > 1e-300]
    entropy = float(-np.sum(nz * np.log(nz)))
    return entropy, lam, _pm_coefficients(A, B, sign, norm)


def _pm_coefficients(A, B, sign, norm):
    if any(abs(_ovl([a], [b]).imag) > 1e-14 for a, b in zip(A, B)):
        return None
    # |A_l> = (sqrt(N+)|+> + sqrt(N-)|->)/2, |B_l> = (sqrt(N+)|+> - sqrt(N-)|->)/2
    npl = [_cat_norm([a], [b], +1) for a, b in zip(A, B)]
    nmi = [_cat_norm([a], [b], -1) for a, b in zip(A, B)]
    out = {}
    for signs in product("+-", repeat=A.size):
        xa = np.prod([np.sqrt(p if s == "+" else q) / 2 for s, p, q in zip(signs, npl, nmi)])
        xb = np.prod([np.sqrt(p) / 2 if s == "+" else -np.sqrt(q) / 2 for s, p, q in zip(signs, npl, nmi)])
        out["".join(signs)] = float((xa + sign * xb) / np.sqrt(norm))
    return out


# ---------------------------------------------------------------------------
# W decomposition


@dataclass(frozen=True)
class WDecomposition:
    """Three-mode cat output on the per-mode basis |+-> = (|a> +- |b>)/sqrt(N+-(a)).

    ``h1`` multiplies |+++> (sign +) or |---> (sign -); ``h2`` multiplies each
    of the three product kets of the unnormalised W sum, so
    h1^2 + 3 h2^2 = 1.  ``printed_h`` holds the closed forms as printed for
    comparison; they do not reproduce the projection.
    """

    alpha: complex
    beta: complex
    sign: int
    coefficients: dict[str, float]
    h1: float
    h2: float
    printed_h: tuple[float, float]

    @property
    def support(self) -> tuple[str, ...]:
        # product kets with an even (sign +) or odd (sign -) number of "-"
        parity = 0 if self.sign > 0 else 1
        return tuple(k for k in self.coefficients if k.count("-") % 2 == parity)

    @property
    def weight_sum(self) -> float:
        return float(sum(c**2 for c in self.coefficients.values()))

    @property
    def off_support_weight(self) -> float:
        return float(sum(c**2 for k, c in self.coefficients.items() if k not in self.support))

    @property
    def printed_deviation(self) -> float:
        return float(max(abs(self.h1 - self.printed_h[0]), abs(self.h2 - self.printed_h[1])))


def w_decomposition(alpha: complex, beta: complex, sign: int) -> WDecomposition:
    """Projection of (|a,a,a> + sign |b,b,b>)/sqrt(N0) onto the |+->^3 basis.

    Requires b = -a or real a and b, so that <a|b> is real and the per-mode
    basis is orthonormal.
    """
    A = np.full(3, complex(alpha))
    B = np.full(3, complex(beta))
    _, _, coeffs = ecs_gram_oracle(A, B, sign)
    if coeffs is None:
        raise ValueError("per-mode |+>, |-> are not orthogonal: <alpha|beta> must be real")
    n_plus = _cat_norm([alpha], [beta], +1)
    n_minus = _cat_norm([alpha], [beta], -1)
    n0 = _cat_norm(A, B, sign)
    if sign > 0:
        h1, h2 = coeffs["+++"], coeffs["+--"]
        printed = (np.sqrt(n_plus * n_minus**2 / (16 * n0**2)), np.sqrt(n_plus**3 / (4 * n0**2)))
    else:
        h1, h2 = coeffs["---"], coeffs["-++"]
        printed = (np.sqrt(n_minus * n_plus**2 / (16 * n0**2)), np.sqrt(n_minus**3 / (16 * n0**2)))
    return WDecomposition(complex(alpha), complex(beta), sign, coeffs, float(h1), float(h2), tuple(map(float, printed)))


def pm_projection(state: StateVector, alphas: Sequence[complex], betas: Sequence[complex]) -> dict[str, complex]:
    """<s_1 s_2 ...|state> computed numerically on the Fock grid of ``state``.

    |+->_l = (|alpha_l> +- |beta_l>) normalised on the same truncation, for
    each mode of ``state.space`` in order.  Independent of the closed form in
    :func:`ecs_gram_oracle`.
    """
    from math import lgamma

    space = state.space
    if len(alphas) != space.n_modes or len(betas) != space.n_modes:
        raise ValueError("one (alpha, beta) pair per mode")
    n = np.arange(space.n_cap + 1)
    logfact = np.array([lgamma(k + 1) for k in n])

    def single(a):
        a = complex(a)
        if a == 0:
            v = np.zeros(n.size, dtype=complex)
            v[0] = 1.0
            return v
        return np.exp(-0.5 * abs(a) ** 2 + n * np.log(abs(a)) + 1j * n * np.angle(a) - 0.5 * logfact)

    basis = []
    for a, b in zip(alphas, betas):
        va, vb = single(a), single(b)
        p, m = va + vb, va - vb
        basis.append({"+": p / np.linalg.norm(p), "-": m / np.linalg.norm(m)})
    occ = space.occupations
    out = {}
    for signs in product("+-", repeat=space.n_modes):
        vec = np.ones(space.dim, dtype=complex)
        for j, sgn in enumerate(signs):
            vec *= basis[j][sgn][occ[:, j]]
        out["".join(signs)] = complex(np.vdot(vec, state.amplitudes) / state.norm)
    return out


# ---------------------------------------------------------------------------
# predicted outputs


def _output_labels(m_or_k: int, family: str) -> tuple[str, ...]:
    if family == "mlevel":
        if m_or_k < 3:
            raise ValueError("m must be >= 3")
        return tuple(f"a{l + 1}" for l in range(m_or_k - 2))
    if family == "ensemble":
        if m_or_k < 1:
            raise ValueError("k must be >= 1")
        return tuple(f"C{l + 1}" for l in range(m_or_k))
    raise ValueError("family must be 'mlevel' or 'ensemble'")


def predicted_split_branches(
    alpha0: complex,
    phi_e: Sequence[float],
    m_or_k: int,
    family: str = "mlevel",
    *,
    beta0: complex | None = None,
    sign: int = +1,
) -> CoherentBranches:
    """Closed-form output: amplitudes alpha0 w_l(phi_e) over the output modes.

    m-level outputs are the probe modes a_l.  Ensemble outputs are the spin
    waves C_l, whose physical amplitudes carry the polariton sign, -alpha0 w_l.
    With ``beta0`` the output is the two-branch cat (unnormalised weights 1, sign).
    """
    labels = _output_labels(m_or_k, family)
    phi_e = tuple(float(x) for x in np.atleast_1d(phi_e)) if len(labels) > 1 else ()
    if len(phi_e) != len(labels) - 1:
        raise ValueError(f"need {len(labels) - 1} angles for {len(labels)} outputs")
    w = polariton_weights(phi_e)
    s = -1.0 if family == "ensemble" else 1.0
    if beta0 is None:
        return CoherentBranches(labels, (s * complex(alpha0) * w)[None, :], np.ones(1))
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    amps = np.array([s * complex(alpha0) * w, s * complex(beta0) * w])
    return CoherentBranches(labels, amps, np.array([1.0, float(sign)])).normalized()


def predicted_split_state(
    alpha0: complex,
    phi_e: Sequence[float],
    m_or_k: int,
    family: str = "mlevel",
    *,
    beta0: complex | None = None,
    sign: int = +1,
    space: ModeSpace | None = None,
    tail_tol: float = 1e-10,
) -> StateVector:
    """:func:`predicted_split_branches` materialised on the output modes.

    Raises TruncationError if ``space`` cuts more than ``tail_tol`` of a
    branch's Poisson mass.
    """
    br = predicted_split_branches(alpha0, phi_e, m_or_k, family, beta0=beta0, sign=sign)
    if space is None:
        space = ModeSpace(br.labels, br.required_cap(tail_tol))
    return br.to_state(space, tail_tol)


# ---------------------------------------------------------------------------
# reports


@dataclass
class EntanglementReport:
    predicted_state: StateVector
    simulated_state: StateVector  # output modes, conditioned on the atoms in vacuum
    overlap_fidelity: float  # full simulated state vs prediction (atoms in vacuum)
    entropy_per_cut: dict[tuple[str, ...], float]  # simulated, nats
    oracle_entropy_per_cut: dict[tuple[str, ...], float]  # Gram oracle on the prediction
    fock_entropy_per_cut: dict[tuple[str, ...], float]  # Fock-space entropy of the prediction
    decomposition: WDecomposition | None = None
    runs: tuple[ProtocolResult, ...] = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -1e-12 <= self.overlap_fidelity <= 1 + 1e-10:
            raise ValueError(f"overlap fidelity {self.overlap_fidelity} outside [0, 1]")
        if any(v < -1e-12 for v in self.entropy_per_cut.values()):
            raise ValueError("negative entropy")

    @property
    def oracle_deviation(self) -> float:
        """max |Fock entropy - oracle entropy| over the cuts of the prediction."""
        return max(
            (abs(self.fock_entropy_per_cut[k] - self.oracle_entropy_per_cut[k]) for k in self.oracle_entropy_per_cut),
            default=0.0,
        )

    @property
    def simulated_oracle_deviation(self) -> float:
        """max |simulated entropy - oracle entropy of the prediction|."""
        return max(
            (abs(self.entropy_per_cut[k] - self.oracle_entropy_per_cut[k]) for k in self.oracle_entropy_per_cut),
            default=0.0,
        )


def _cuts(labels: Sequence[str]) -> list[tuple[str, ...]]:
    """Every nonempty proper subset of the output modes."""
    out = []
    for r in range(1, len(labels)):
        out.extend(combinations(labels, r))
    return out


def _conditioned_outputs(state: CoherentBranches, outputs: Sequence[str]) -> CoherentBranches:
    """Output-mode branches with every other mode projected onto vacuum."""
    rest = [x for x in state.labels if x not in outputs]
    damp = np.exp(-0.5 * np.sum(np.abs(state.select(rest).amplitudes) ** 2, axis=1)) if rest else 1.0
    return CoherentBranches(tuple(outputs), state.select(outputs).amplitudes, state.weights * damp).normalized()


def _branch_report(final: CoherentBranches, predicted: CoherentBranches, outputs, runs, tail_tol, extras):
    cond = _conditioned_outputs(final, outputs)
    space = ModeSpace(tuple(outputs), max(cond.required_cap(tail_tol), predicted.required_cap(tail_tol)))
    sim_state = cond.to_state(space, tail_tol)
    pred_state = predicted.to_state(space, tail_tol)
    fid = final.fidelity(predicted)
    extras = dict(extras, simulated_branch_amplitudes=cond.amplitudes)
    cuts = _cuts(outputs)
    sim_ent, orc_ent, fock_ent = {}, {}, {}
    for cut in cuts:
        sim_ent[cut] = von_neumann_entropy(final.reduced_state(cut, tail_tol=tail_tol))
        fock_ent[cut] = bipartite_entropy(pred_state, cut)
        if predicted.weights.size == 2:
            idx = [outputs.index(x) for x in cut]
            w = predicted.weights
            sgn = int(np.sign((w[1] / w[0]).real))
            orc_ent[cut] = ecs_gram_oracle(predicted.amplitudes[0], predicted.amplitudes[1], sgn, idx)[0]
        else:
            orc_ent[cut] = 0.0  # single branch: product state
    return EntanglementReport(
        predicted_state=pred_state,
        simulated_state=sim_state,
        overlap_fidelity=float(fid),
        entropy_per_cut=sim_ent,
        oracle_entropy_per_cut=orc_ent,
        fock_entropy_per_cut=fock_ent,
        runs=tuple(runs),
        extras=extras,
    )


def _check_sign(sign):
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")


def _pair_negativity(coeffs: dict[str, float], keep=(0, 1)) -> float:
    """Negativity of the two-mode reduction, computed in the |+-> qubit basis."""
    psi = np.zeros((2, 2, 2))
    for k, c in coeffs.items():
        psi[tuple(0 if s == "+" else 1 for s in k)] = c
    rest = [i for i in range(3) if i not in keep][0]
    psi = np.moveaxis(psi, rest, -1).reshape(4, 2)
    rho = (psi @ psi.conj().T).reshape(2, 2, 2, 2)
    pt = rho.transpose(0, 3, 2, 1).reshape(4, 4)
    lam = np.linalg.eigvalsh(pt)
    return float(-np.sum(lam[lam < 0]))


def run_two_mode_cat_protocol(
    alpha0: float = 3.0,
    sign: int = -1,
    phi_e: float = np.pi / 4,
    *,
    beta0: complex | None = None,
    system: MLevelSystem | None = None,
    sweep_T: float | None = None,
    tail_tol: float = 1e-10,
) -> EntanglementReport:
    """Cat (|alpha0> + sign |beta0>) on a1 of a four-level system, stored in C and
    released into a1, a2 with angle ``phi_e``.  ``beta0`` defaults to -alpha0."""
    _check_sign(sign)
    system = system or MLevelSystem(4, (0.1, 0.1), 100, (0.0, 0.0))
    if system.m != 4:
        raise ValueError("two-mode protocol needs m = 4")
    beta0 = -alpha0 if beta0 is None else beta0
    psi0 = CoherentBranches.cat(system.mode_labels, system.input_label, alpha0, beta0, sign)
    store, release = store_and_split(system, input_state=psi0, phi_e=(phi_e,), sweep_T=sweep_T)
    predicted = predicted_split_branches(alpha0, (phi_e,), 4, beta0=beta0, sign=sign)
    extras = {"alpha0": alpha0, "beta0": beta0, "sign": sign, "phi_e": phi_e}
    return _branch_report(release.final_state, predicted, system.probe_labels, (store, release), tail_tol, extras)


def run_single_photon_protocol(
    phi_e: float = np.pi / 4, *, system: MLevelSystem | None = None, sweep_T: float | None = None
) -> EntanglementReport:
    """One photon in a1, stored and split: ideally cos(phi_e)|10> + sin(phi_e)|01>.

    Runs on the Fock route (n_cap = 1 is exact for a single excitation).
    """
    system = system or MLevelSystem(4, (0.1, 0.1), 100, (0.0, 0.0))
    if system.m != 4:
        raise ValueError("single-photon protocol needs m = 4")
    space = ModeSpace(system.mode_labels, 1)
    psi0 = fock_state(space, {system.input_label: 1})
    store, release = store_and_split(system, input_state=psi0, phi_e=(phi_e,), sweep_T=sweep_T)
    c, s = np.cos(phi_e), np.sin(phi_e)
    predicted = fock_state(space, {"a1": 1}) * c + fock_state(space, {"a2": 1}) * s
    final = release.final_state
    fid = final.fidelity(predicted)
    out_space = ModeSpace(system.probe_labels, 1)
    # output modes conditioned on the atoms in vacuum
    amps = np.array([final.amplitudes[space.index(occ)] for occ in _embed_occupations(space, out_space)])
    sim = StateVector(out_space, amps).normalize()
    pred_out = fock_state(out_space, {"a1": 1}) * c + fock_state(out_space, {"a2": 1}) * s
    cut = ("a1",)
    p = np.array([c**2, s**2])
    p = p[p > 0]
    exact = float(-np.sum(p * np.log(p)))
    return EntanglementReport(
        predicted_state=pred_out,
        simulated_state=sim,
        overlap_fidelity=float(fid),
        entropy_per_cut={cut: von_neumann_entropy(partial_trace(final, cut))},
        oracle_entropy_per_cut={cut: exact},
        fock_entropy_per_cut={cut: bipartite_entropy(pred_out, cut)},
        runs=(store, release),
        extras={"phi_e": phi_e, "output_amplitudes": (complex(sim.amplitudes[out_space.index((1, 0))]), complex(sim.amplitudes[out_space.index((0, 1))]))},
    )


def _embed_occupations(space: ModeSpace, sub: ModeSpace):
    idx = [space.mode_index(x) for x in sub.mode_labels]
    for occ in sub.occupations:
        full = np.zeros(space.n_modes, dtype=int)
        full[idx] = occ
        yield full


def run_three_mode_cat_protocol(
    alpha0: float = 3.0,
    beta0: complex | None = None,
    sign: int = +1,
    phi: float = SYMMETRIC_ANGLES[0],
    varphi: float = SYMMETRIC_ANGLES[1],
    *,
    system: MLevelSystem | None = None,
    sweep_T: float | None = None,
    tail_tol: float = 1e-10,
) -> EntanglementReport:
    """Cat input on a five-level system released into a1, a2, a3.

    When the three output amplitudes coincide (the symmetric angles) and
    beta0 = -alpha0, the report carries the W decomposition and the
    negativity of every two-mode reduction.
    """
    _check_sign(sign)
    system = system or MLevelSystem(5, (0.1, 0.1, 0.1), 100, (0.0, 0.0, 0.0))
    if system.m != 5:
        raise ValueError("three-mode protocol needs m = 5")
    beta0 = -alpha0 if beta0 is None else beta0
    psi0 = CoherentBranches.cat(system.mode_labels, system.input_label, alpha0, beta0, sign)
    store, release = store_and_split(system, input_state=psi0, phi_e=(phi, varphi), sweep_T=sweep_T)
    predicted = predicted_split_branches(alpha0, (phi, varphi), 5, beta0=beta0, sign=sign)
    extras = {"alpha0": alpha0, "beta0": beta0, "sign": sign, "phi": phi, "varphi": varphi}
    report = _branch_report(release.final_state, predicted, system.probe_labels, (store, release), tail_tol, extras)
    _attach_w(report, predicted, beta0, alpha0, sign)
    return report


def _attach_w(report, predicted, beta0, alpha0, sign):
    """W decomposition of the prediction, plus the simulated output projected on
    (i) the predicted basis and (ii) a basis built from its own per-mode
    amplitudes (the dynamics keep the two branches antipodal)."""
    amps = predicted.amplitudes
    if not (amps.shape[1] == 3 and np.allclose(amps[0], amps[0, 0], atol=1e-12) and np.isclose(beta0, -alpha0)):
        return
    dec = w_decomposition(amps[0, 0], amps[1, 0], sign)
    report.decomposition = dec
    report.extras["pair_negativity"] = {
        pair: _pair_negativity(dec.coefficients, pair) for pair in ((0, 1), (0, 2), (1, 2))
    }
    sim = report.simulated_state
    proj = pm_projection(sim, amps[0], amps[1])
    report.extras["simulated_off_support_weight"] = float(
        sum(abs(c) ** 2 for k, c in proj.items() if k not in dec.support)
    )
    own = report.extras.get("simulated_branch_amplitudes")
    if own is not None:
        proj_own = pm_projection(sim, own[0], own[1])
        report.extras["simulated_own_basis_off_support_weight"] = float(
            sum(abs(c) ** 2 for k, c in proj_own.items() if k not in dec.support)
        )


def run_ensemble_entanglement(
    chain: EnsembleChain,
    alpha0: float | tuple[float, complex] = 3.0,
    sign: int = -1,
    angles: Sequence[float] | None = None,
    *,
    sweep_T: float | None = None,
    tail_tol: float = 1e-10,
) -> EntanglementReport:
    """Cat on the probe stored across k = 2 or 3 ensembles with weights w(angles).

    ``alpha0`` may be a pair (alpha0, beta0); beta0 defaults to -alpha0.
    ``angles`` default to equal weights.
    """
    _check_sign(sign)
    if chain.k not in (2, 3):
        raise ValueError("ensemble entanglement needs k = 2 or 3")
    if isinstance(alpha0, tuple):
        alpha0, beta0 = alpha0
    else:
        beta0 = -alpha0
    if angles is None:
        angles = (np.pi / 4,) if chain.k == 2 else SYMMETRIC_ANGLES
    angles = tuple(float(x) for x in angles)
    psi0 = CoherentBranches.cat(chain.mode_labels, chain.input_label, alpha0, beta0, sign)
    store = protocol_store(chain, input_state=psi0, angles=angles, sweep_T=sweep_T)
    predicted = predicted_split_branches(alpha0, angles, chain.k, "ensemble", beta0=beta0, sign=sign)
    extras = {"alpha0": alpha0, "beta0": beta0, "sign": sign, "angles": angles}
    report = _branch_report(store.final_state, predicted, chain.spinwave_labels, (store,), tail_tol, extras)
    _attach_w(report, predicted, beta0, alpha0, sign)
    return report
