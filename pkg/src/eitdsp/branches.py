"""Superpositions of multimode coherent states, handled analytically.

Excitation-conserving quadratic Hamiltonians act on coherent states by a
linear map of their amplitude vectors, ``U |gamma> = |u gamma>`` with ``u``
the single-excitation propagator.  A cat or entangled coherent state is a
short list of such branches, so its evolution, overlaps, mode moments and
dark-subspace weight are all closed-form functions of the branch amplitudes.
Fock-space vectors are materialised only when needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lgamma
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .fock import DensityMatrix, ModeSpace, StateVector, annihilator, coherent_product, creator

__all__ = [
    "CoherentBranches",
    "coherent_overlap",
    "required_cap",
    "lift_mode_unitary",
    "one_body_operator",
]


def coherent_overlap(a: np.ndarray, b: np.ndarray) -> complex:
    """<a|b> for multimode coherent states with amplitude vectors a, b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return complex(np.exp(-0.5 * np.vdot(a, a).real - 0.5 * np.vdot(b, b).real + np.vdot(a, b)))


def required_cap(mean_excitation: float, tail_tol: float = 1e-10) -> int:
    """Smallest total-excitation cap whose Poisson tail is below ``tail_tol``."""
    from scipy.stats import poisson

    if mean_excitation <= 0:
        return 1
    n = max(1, int(mean_excitation))
    while poisson.sf(n, mean_excitation) > tail_tol:
        n += 1
    return n


@dataclass(frozen=True)
class CoherentBranches:
    """sum_i w_i |gamma_i>  (not necessarily normalised; see :attr:`norm`)."""

    labels: tuple[str, ...]
    amplitudes: np.ndarray  # (n_branches, n_modes)
    weights: np.ndarray  # (n_branches,)

    def __post_init__(self):
        amps = np.atleast_2d(np.asarray(self.amplitudes, dtype=complex))
        w = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        if amps.shape != (w.size, len(self.labels)):
            raise ValueError("amplitudes must have shape (n_branches, n_modes)")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_modes(cls, labels: Sequence[str], branches: Sequence[tuple[complex, Mapping[str, complex]]]):
        labels = tuple(labels)
        amps = np.zeros((len(branches), len(labels)), dtype=complex)
        w = np.zeros(len(branches), dtype=complex)
        for i, (weight, modes) in enumerate(branches):
            w[i] = weight
            for label, a in modes.items():
                amps[i, labels.index(label)] = a
        return cls(labels, amps, w)

    @classmethod
    def coherent(cls, labels, label: str, alpha: complex):
        return cls.from_modes(labels, [(1.0, {label: alpha})])

    @classmethod
    def cat(cls, labels, label: str, alpha: complex, beta: complex, sign: int = +1):
        out = cls.from_modes(labels, [(1.0, {label: alpha}), (sign, {label: beta})])
        if out.norm < 1e-10:
            raise ValueError("degenerate cat: branches cancel")
        return out.normalized()

    # -- algebra --------------------------------------------------------------
    def gram(self) -> np.ndarray:
        a = self.amplitudes
        sq = np.sum(np.abs(a) ** 2, axis=1)
        return np.exp(-0.5 * sq[:, None] - 0.5 * sq[None, :] + a.conj() @ a.T)

    @property
    def norm(self) -> float:
        w = self.weights
        return float(np.sqrt(max(np.real(w.conj() @ self.gram() @ w), 0.0)))

    def normalized(self) -> "CoherentBranches":
        return CoherentBranches(self.labels, self.amplitudes, self.weights / self.norm)

    def transform(self, u: np.ndarray) -> "CoherentBranches":
        """Apply the single-excitation map u (gamma -> u gamma)."""
        return CoherentBranches(self.labels, self.amplitudes @ np.asarray(u).T, self.weights)

    def inner(self, other: "CoherentBranches") -> complex:
        """<self|other>; mode sets are matched by label, missing modes are vacuum."""
        labels = tuple(dict.fromkeys(self.labels + other.labels))
        a, b = self._embed(labels), other._embed(labels)
        total = 0j
        for wi, ai in zip(self.weights, a):
            for wj, bj in zip(other.weights, b):
                total += np.conj(wi) * wj * coherent_overlap(ai, bj)
        return complex(total)

    def fidelity(self, other: "CoherentBranches") -> float:
        return abs(self.inner(other)) ** 2 / (self.norm**2 * other.norm**2)

    def _embed(self, labels) -> np.ndarray:
        out = np.zeros((self.weights.size, len(labels)), dtype=complex)
        for j, x in enumerate(self.labels):
            out[:, labels.index(x)] = self.amplitudes[:, j]
        return out

    def mode_expectations(self) -> np.ndarray:
        """<b_k> for every mode."""
        w = self.weights
        G = self.gram()
        num = (w.conj()[:, None] * G * w[None, :]) @ self.amplitudes
        return num.sum(axis=0) / self.norm**2

    def number_expectations(self) -> np.ndarray:
        w = self.weights
        G = self.gram()
        a = self.amplitudes
        M = w.conj()[:, None] * G * w[None, :]
        return np.real(np.einsum("ij,ik,jk->k", M, a.conj(), a)) / self.norm**2

    def sector_populations(self, n_max: int) -> np.ndarray:
        """Probability of n total excitations, n = 0..n_max."""
        w = self.weights
        a = self.amplitudes
        sq = np.sum(np.abs(a) ** 2, axis=1)
        cross = a.conj() @ a.T
        pref = w.conj()[:, None] * w[None, :] * np.exp(-0.5 * sq[:, None] - 0.5 * sq[None, :])
        out = np.empty(n_max + 1)
        for n in range(n_max + 1):
            if n == 0:
                term = np.ones_like(cross)
            else:
                with np.errstate(divide="ignore"):
                    term = np.exp(n * np.log(cross + 0j) - lgamma(n + 1))
            out[n] = np.real(np.sum(pref * term))
        return out / self.norm**2

    def dark_overlap(self, coefficients: np.ndarray) -> float:
        """Weight on span{(d^+)^n |0>} for the mode d = sum_k c_k b_k (unit c).

        Projecting |gamma> onto that span leaves the d-mode coherent state of
        amplitude delta = c . gamma, scaled by exp(-(|gamma|^2 - |delta|^2)/2).
        """
        c = np.asarray(coefficients, dtype=complex)
        c = c / np.linalg.norm(c)
        a = self.amplitudes
        delta = a @ c
        sq = np.sum(np.abs(a) ** 2, axis=1)
        r2 = sq - np.abs(delta) ** 2
        damp = np.exp(-0.5 * r2)
        single = np.exp(
            -0.5 * np.abs(delta)[:, None] ** 2 - 0.5 * np.abs(delta)[None, :] ** 2 + np.conj(delta)[:, None] * delta[None, :]
        )
        w = self.weights
        val = np.real(np.sum(w.conj()[:, None] * w[None, :] * damp[:, None] * damp[None, :] * single))
        return float(val / self.norm**2)

    # -- materialisation ----------------------------------------------------
    def select(self, labels: Sequence[str]) -> "CoherentBranches":
        """Branch amplitudes restricted to ``labels`` (weights unchanged)."""
        idx = [self.labels.index(x) for x in labels]
        return CoherentBranches(tuple(labels), self.amplitudes[:, idx], self.weights)

    def required_cap(self, tail_tol: float = 1e-10) -> int:
        mean = float(np.max(np.sum(np.abs(self.amplitudes) ** 2, axis=1)))
        return required_cap(mean, tail_tol)

    def to_state(self, space: ModeSpace, tail_tol: float = 1e-10) -> StateVector:
        """Fock-space vector on ``space`` (its modes must include every branch mode
        with nonzero amplitude), normalised."""
        self._check_materialisable(space)
        amps = np.zeros(space.dim, dtype=complex)
        for w, a in zip(self.weights, self.amplitudes):
            modes = {x: v for x, v in zip(self.labels, a) if v != 0 and x in space.mode_labels}
            amps += w * coherent_product(space, modes, tail_tol, renormalize=False).amplitudes
        return StateVector(space, amps).normalize()

    def _check_materialisable(self, space: ModeSpace):
        missing = [x for j, x in enumerate(self.labels) if x not in space.mode_labels and np.any(self.amplitudes[:, j] != 0)]
        if missing:
            raise ValueError(f"modes {missing} carry amplitude but are absent from the space")

    def reduced_state(self, keep: Sequence[str], space: ModeSpace | None = None, tail_tol: float = 1e-10) -> DensityMatrix:
        """Exact reduced density matrix on ``keep`` with the remaining modes
        traced out analytically through branch overlaps."""
        keep = tuple(keep)
        rest = tuple(x for x in self.labels if x not in keep)
        if space is None:
            space = ModeSpace(keep, self.select(keep).required_cap(tail_tol))
        if space.mode_labels != keep:
            raise ValueError("space modes must equal the kept labels")
        kept = self.select(keep)
        others = self.select(rest).amplitudes if rest else np.zeros((self.weights.size, 0))
        vecs = []
        for a in kept.amplitudes:
            modes = {x: v for x, v in zip(keep, a) if v != 0}
            vecs.append(coherent_product(space, modes, tail_tol, renormalize=False).amplitudes)
        V = np.array(vecs).T  # dim x branches
        n = self.weights.size
        C = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                C[i, j] = self.weights[i] * np.conj(self.weights[j]) * coherent_overlap(others[j], others[i])
        rho = V @ C @ V.conj().T
        return DensityMatrix(space, rho / np.real(np.trace(rho)))


def one_body_operator(space: ModeSpace, h: np.ndarray, labels: Sequence[str] | None = None):
    """Sparse matrix of sum_ij h_ij b_i^+ b_j on ``space``."""
    labels = tuple(labels) if labels is not None else space.mode_labels
    ann = [annihilator(space, x).matrix for x in labels]
    cre = [creator(space, x).matrix for x in labels]
    out = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for i in range(len(labels)):
        for j in range(len(labels)):
            if h[i, j] != 0:
                out = out + h[i, j] * (cre[i] @ ann[j])
    return out.tocsr()


def lift_mode_unitary(state: StateVector, u: np.ndarray, labels: Sequence[str] | None = None) -> StateVector:
    """Apply the Fock-space unitary induced by the single-excitation map ``u``.

    Writes u = exp(-i K) with K Hermitian and applies exp(-i sum K_ij b_i^+ b_j).
    Any Hermitian logarithm gives the same Fock operator.
    """
    u = np.asarray(u, dtype=complex)
    T, Z = sla.schur(u, output="complex")
    phases = np.angle(np.diag(T))
    K = -(Z * phases) @ Z.conj().T  # u = Z diag(e^{i phase}) Z^+, so K = -Z diag(phase) Z^+
    K = 0.5 * (K + K.conj().T)
    gen = one_body_operator(state.space, K, labels)
    return StateVector(state.space, expm_multiply(-1j * gen, state.amplitudes))
