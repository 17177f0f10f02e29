"""Bosonized EIT system specifications and Hamiltonian builders.

Two families are covered:

* :class:`MLevelSystem` - one ensemble of N m-level atoms, m-2 quantized probe
  modes ``a1..a{m-2}``, collective excitations ``E1..E{m-2}`` and the spin
  wave ``C``.
* :class:`EnsembleChain` - k ensembles of three-level atoms sharing one probe
  mode ``a``, with excitations ``A1..Ak`` and spin waves ``C1..Ck``.

Hamiltonians are written directly in the boson representation,

    H = sum_s G_s (a_s E_s^+ + h.c.) + sum_s Omega_s (E_s^+ C + h.c.)

with ``G_s = g_s sqrt(N)``; the collective transition operator between c and
e_s is replaced by ``E_s^+ C``.  Units: hbar = 1, couplings and Rabi
frequencies in a common angular-frequency unit.  All parameters are real and
non-negative; wave-vector phase factors are absorbed into the mode
definitions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fock import LinearOperator, ModeSpace, annihilator, creator

__all__ = [
    "MLevelSystem",
    "EnsembleChain",
    "build_mlevel_space",
    "build_mlevel_hamiltonian",
    "build_ensemble_space",
    "build_ensemble_hamiltonian",
    "build_space",
    "build_hamiltonian",
    "hamiltonian_terms",
    "one_body_matrix",
]


def _as_tuple(x, n=None, name="value"):
    if np.isscalar(x):
        if n is None:
            return (float(x),)
        return tuple(float(x) for _ in range(n))
    out = tuple(float(v) for v in x)
    if n is not None and len(out) != n:
        raise ValueError(f"{name} must have length {n}, got {len(out)}")
    return out


@dataclass(frozen=True)
class MLevelSystem:
    """m-level single ensemble: ``g`` and ``omega`` have length m-2."""

    m: int
    g: tuple[float, ...]
    N: float
    omega: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise ValueError("m must be an integer >= 3")
        object.__setattr__(self, "m", int(self.m))
        n = self.m - 2
        g = _as_tuple(self.g, n, "g")
        if any(not np.isfinite(x) or x <= 0 for x in g):
            raise ValueError("g must be finite and > 0")
        if not self.N >= 1:
            raise ValueError("N must be >= 1")
        object.__setattr__(self, "g", g)
        omega = _as_tuple(self.omega if self.omega is not None else 0.0, n, "omega")
        if any(not np.isfinite(x) or x < 0 for x in omega):
            raise ValueError("omega must be finite and >= 0")
        object.__setattr__(self, "omega", omega)

    family = "mlevel"

    @property
    def n_fields(self) -> int:
        return self.m - 2

    @property
    def probe_labels(self) -> tuple[str, ...]:
        return tuple(f"a{s}" for s in range(1, self.m - 1))

    @property
    def excited_labels(self) -> tuple[str, ...]:
        return tuple(f"E{s}" for s in range(1, self.m - 1))

    @property
    def spinwave_labels(self) -> tuple[str, ...]:
        return ("C",)

    @property
    def mode_labels(self) -> tuple[str, ...]:
        return self.probe_labels + self.excited_labels + ("C",)

    @property
    def collective_couplings(self) -> np.ndarray:
        return np.asarray(self.g) * np.sqrt(self.N)

    @property
    def input_label(self) -> str:
        return "a1"

    @property
    def output_labels(self) -> tuple[str, ...]:
        return self.probe_labels


@dataclass(frozen=True)
class EnsembleChain:
    """k three-level ensembles sharing one probe mode."""

    k: int
    g: tuple[float, ...]
    N: tuple[float, ...]
    omega: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be an integer >= 1")
        object.__setattr__(self, "k", int(self.k))
        g = _as_tuple(self.g, self.k, "g")
        N = _as_tuple(self.N, self.k, "N")
        if any(not np.isfinite(x) or x <= 0 for x in g):
            raise ValueError("g must be finite and > 0")
        if any(x < 1 for x in N):
            raise ValueError("N must be >= 1 for every ensemble")
        omega = _as_tuple(self.omega if self.omega is not None else 0.0, self.k, "omega")
        if any(not np.isfinite(x) or x < 0 for x in omega):
            raise ValueError("omega must be finite and >= 0")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "omega", omega)

    family = "ensemble"

    @property
    def n_fields(self) -> int:
        return self.k

    @property
    def probe_labels(self) -> tuple[str, ...]:
        return ("a",)

    @property
    def excited_labels(self) -> tuple[str, ...]:
        return tuple(f"A{s}" for s in range(1, self.k + 1))

    @property
    def spinwave_labels(self) -> tuple[str, ...]:
        return tuple(f"C{s}" for s in range(1, self.k + 1))

    @property
    def mode_labels(self) -> tuple[str, ...]:
        return ("a",) + self.excited_labels + self.spinwave_labels

    @property
    def collective_couplings(self) -> np.ndarray:
        return np.asarray(self.g) * np.sqrt(np.asarray(self.N))

    @property
    def input_label(self) -> str:
        return "a"

    @property
    def output_labels(self) -> tuple[str, ...]:
        return self.spinwave_labels


System = MLevelSystem | EnsembleChain


def _edges(system: System):
    """(static edges, control edges) as (label_i, label_j, weight) triples.

    Each edge stands for ``weight (b_i^+ b_j + h.c.)``; the control edge list
    is ordered by field index and carries unit weight.
    """
    G = system.collective_couplings
    if isinstance(system, MLevelSystem):
        static = [(e, a, G[s]) for s, (a, e) in enumerate(zip(system.probe_labels, system.excited_labels))]
        controls = [(e, "C", 1.0) for e in system.excited_labels]
    else:
        static = [(A, "a", G[s]) for s, A in enumerate(system.excited_labels)]
        controls = [(A, C, 1.0) for A, C in zip(system.excited_labels, system.spinwave_labels)]
    return static, controls


def one_body_matrix(system: System, omega_values: Sequence[float]) -> np.ndarray:
    """Single-excitation coupling matrix h with H = sum_ij h_ij b_i^+ b_j.

    Rows and columns follow ``system.mode_labels``.
    """
    omega = _as_tuple(omega_values, system.n_fields, "omega_values")
    labels = system.mode_labels
    h = np.zeros((len(labels), len(labels)))
    static, controls = _edges(system)
    for (i, j, w) in static:
        h[labels.index(i), labels.index(j)] += w
        h[labels.index(j), labels.index(i)] += w
    for (i, j, _), om in zip(controls, omega):
        h[labels.index(i), labels.index(j)] += om
        h[labels.index(j), labels.index(i)] += om
    return h


def _check_space(system: System, space: ModeSpace):
    if space.mode_labels != system.mode_labels:
        raise ValueError(
            f"space modes {space.mode_labels} do not match system modes {system.mode_labels}"
        )


def hamiltonian_terms(system: System, space: ModeSpace):
    """(static part, [per-field control operators]) so that
    ``H = static + sum_s omega_s * controls[s]``."""
    _check_space(system, space)
    static_edges, control_edges = _edges(system)

    def hop(i, j):
        term = creator(space, i) @ annihilator(space, j)
        return term + term.dag()

    static = LinearOperator(space, sp.csr_matrix((space.dim, space.dim)), 0)
    for i, j, w in static_edges:
        static = static + w * hop(i, j)
    controls = [hop(i, j) for i, j, _ in control_edges]
    return static, controls


def _assemble(system, omega_values, space):
    omega = _as_tuple(omega_values, system.n_fields, "omega_values")
    if any(not np.isfinite(x) for x in omega):
        raise ValueError("omega_values must be finite")
    static, controls = hamiltonian_terms(system, space)
    H = static
    for om, op in zip(omega, controls):
        H = H + om * op
    return H


def build_mlevel_space(system: MLevelSystem, n_cap: int, per_mode_cap=None) -> ModeSpace:
    return ModeSpace(system.mode_labels, n_cap, per_mode_cap)


def build_mlevel_hamiltonian(system: MLevelSystem, omega_values, space: ModeSpace) -> LinearOperator:
    """H = sum G_s a_s E_s^+ + sum Omega_s E_s^+ C + h.c. (Hermitian, shift 0)."""
    if not isinstance(system, MLevelSystem):
        raise TypeError("expected an MLevelSystem")
    return _assemble(system, omega_values, space)


def build_ensemble_space(chain: EnsembleChain, n_cap: int, per_mode_cap=None) -> ModeSpace:
    return ModeSpace(chain.mode_labels, n_cap, per_mode_cap)


def build_ensemble_hamiltonian(chain: EnsembleChain, omega_values, space: ModeSpace) -> LinearOperator:
    """H = sum G_s a A_s^+ + sum Omega_s A_s^+ C_s + h.c. (Hermitian, shift 0)."""
    if not isinstance(chain, EnsembleChain):
        raise TypeError("expected an EnsembleChain")
    return _assemble(chain, omega_values, space)


def build_space(system: System, n_cap: int, per_mode_cap=None) -> ModeSpace:
    return ModeSpace(system.mode_labels, n_cap, per_mode_cap)


def build_hamiltonian(system: System, omega_values, space: ModeSpace) -> LinearOperator:
    return _assemble(system, omega_values, space)
