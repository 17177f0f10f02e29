"""Time evolution under Omega(t) schedules and adiabaticity diagnostics.

Every step uses the Hamiltonian at the step midpoint, exponentiated exactly
(the Hamiltonians are real symmetric, so each step is one real eigh).

Two state representations are supported:

* :class:`~eitdsp.fock.StateVector` - the Fock vector is advanced step by
  step; small sector blocks are exponentiated densely, larger ones with a
  Krylov/Taylor action.
* :class:`~eitdsp.branches.CoherentBranches` - superpositions of multimode
  coherent states.  The step propagators are exponentials of the one-body
  matrix h(t_mid), accumulated into the single-excitation propagator u, and
  the state at time t is the branch set mapped by u(t).

Both routes accumulate u, so they can be cross-checked against each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .branches import CoherentBranches
from .fock import StateVector, annihilator, number_operator, vacuum
from .models import hamiltonian_terms, one_body_matrix
from .polariton import MixingAngles, dsp_coefficients, mixing_angles, mode_operator
from .schedules import SweepSchedule

__all__ = [
    "PropagationError",
    "ProtocolResult",
    "propagate",
    "dark_overlap_diagnostic",
    "one_body_step_unitaries",
]

NORM_DRIFT_LIMIT = 1e-6
DEFAULT_RECORDS = 1000  # records kept when record_every is None
_DENSE_BLOCK_LIMIT = 120
_ONE_BODY_CHUNK = 100_000


class PropagationError(RuntimeError):
    pass


@dataclass
class ProtocolResult:
    times: np.ndarray
    mode_labels: tuple[str, ...]
    dark_overlap: np.ndarray
    norm: np.ndarray
    mode_expectations: np.ndarray  # (records, modes), complex
    number_expectations: np.ndarray  # (records, modes)
    sector_populations: np.ndarray  # (records, n_max + 1)
    omega: np.ndarray  # (records, fields)
    initial_state: Any
    final_state: Any
    propagator: np.ndarray  # single-excitation map accumulated over the run
    final_angles: MixingAngles
    target: Any = None
    final_fidelity: float | None = None
    target_description: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))

    @property
    def sector_drift(self) -> float:
        return float(np.max(np.abs(self.sector_populations - self.sector_populations[0])))

    @property
    def min_dark_overlap(self) -> float:
        return float(np.min(self.dark_overlap))

    def expectation(self, label: str, index: int = -1) -> complex:
        return complex(self.mode_expectations[index, self.mode_labels.index(label)])

    def columns(self) -> dict[str, np.ndarray]:
        """Time-series columns: time, dark_overlap, norm, then per-mode
        Re/Im of <b> and <b^+ b>, then sector populations."""
        cols = {"time": self.times, "dark_overlap": self.dark_overlap, "norm": self.norm}
        for j, x in enumerate(self.mode_labels):
            cols[f"re_{x}"] = self.mode_expectations[:, j].real
            cols[f"im_{x}"] = self.mode_expectations[:, j].imag
        for j, x in enumerate(self.mode_labels):
            cols[f"n_{x}"] = self.number_expectations[:, j]
        for n in range(self.sector_populations.shape[1]):
            cols[f"p_{n}"] = self.sector_populations[:, n]
        return cols


def step_unitaries(base, ctrl, omegas, widths) -> np.ndarray:
    """exp(-i H(omega_k) h_k) for H(omega) = base + sum_s omega_s ctrl_s.

    ``ctrl`` has shape (fields, d, d); returns a (steps, d, d) stack.
    """
    H = base[None] + np.einsum("ks,sij->kij", omegas, ctrl)
    w, V = np.linalg.eigh(H)
    return np.einsum("kij,kj,klj->kil", V, np.exp(-1j * w * widths[:, None]), V.conj())


def _one_body_terms(system):
    base = one_body_matrix(system, np.zeros(system.n_fields))
    ctrl = np.stack(
        [one_body_matrix(system, np.eye(system.n_fields)[s]) - base for s in range(system.n_fields)]
    )
    return base, ctrl


def one_body_step_unitaries(system, omegas: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Single-excitation step propagators; shape (steps, M, M)."""
    base, ctrl = _one_body_terms(system)
    return step_unitaries(base, ctrl, omegas, widths)


def dark_overlap_diagnostic(state, system, omega_now, previous_phi=None) -> float:
    """Weight of ``state`` on span{|D_n>} at the mixing angles set by ``omega_now``."""
    angles = mixing_angles(system, omega_now, previous_phi)
    c = dsp_coefficients(system, angles)
    return _dark_overlap(state, system, c)


def _dark_overlap(state, system, c) -> float:
    if isinstance(state, CoherentBranches):
        if state.labels != system.mode_labels:
            state = CoherentBranches(system.mode_labels, state._embed(system.mode_labels), state.weights)
        return state.dark_overlap(c)
    space = state.space
    d_dag = mode_operator(space, dict(zip(system.mode_labels, c))).dag().matrix
    v = vacuum(space).amplitudes
    psi = state.amplitudes
    total = 0.0
    for n in range(space.n_cap + 1):
        if n:
            v = d_dag @ v / np.sqrt(n)
        total += abs(np.vdot(v, psi)) ** 2
    return float(total / state.norm**2)


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[n-1] @ ... @ mats[0] by pairwise (vectorised) reduction."""
    mats = np.asarray(mats)
    if mats.shape[0] == 0:
        return np.eye(mats.shape[-1], dtype=complex)
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            pad = np.broadcast_to(np.eye(mats.shape[-1], dtype=mats.dtype), (1,) + mats.shape[1:])
            mats = np.concatenate([mats, pad], axis=0)
        mats = np.matmul(mats[1::2], mats[0::2])
    return mats[0]


# Upper bound on complex entries held per batched block stack.
_BATCH_ENTRIES = 4_000_000


def _real(a):
    # real symmetric blocks diagonalise faster
    return a.real.copy() if np.iscomplexobj(a) and not np.any(a.imag) else a


class _FockStepper:
    """Advances a Fock vector through a run of midpoint steps.

    H(omega) = static + sum_s omega_s ctrl_s conserves the total excitation
    number, so each sector block is exponentiated on its own.  Small blocks
    are diagonalised in batches and their step propagators multiplied
    together; large spaces fall back to a sparse exponential action per step.
    """

    def __init__(self, system, space):
        static, ctrls = hamiltonian_terms(system, space)
        self.space = space
        self.static = static.matrix.tocsr()
        self.ctrls = [c.matrix.tocsr() for c in ctrls]
        self.slices = [space.sector_slice(n) for n in range(space.n_cap + 1)]
        self.dense = max(s.stop - s.start for s in self.slices) <= _DENSE_BLOCK_LIMIT
        if self.dense:
            self.static_blocks = [_real(self.static[s, s].toarray()) for s in self.slices]
            self.ctrl_blocks = [_real(np.stack([c[s, s].toarray() for c in self.ctrls])) for s in self.slices]

    def _sparse_h(self, om):
        H = self.static.copy()
        for o, c in zip(om, self.ctrls):
            if o != 0:
                H = H + o * c
        return H

    def advance(self, psi: np.ndarray, omegas: np.ndarray, widths: np.ndarray) -> np.ndarray:
        if not self.dense:
            for om, h in zip(omegas, widths):
                psi = expm_multiply(-1j * h * self._sparse_h(om), psi)
            return psi
        out = psi.copy()
        for n, s in enumerate(self.slices):
            d = s.stop - s.start
            chunk = max(1, _BATCH_ENTRIES // (d * d))
            v = out[s]
            for i in range(0, len(widths), chunk):
                sl = slice(i, i + chunk)
                props = step_unitaries(self.static_blocks[n], self.ctrl_blocks[n], omegas[sl], widths[sl])
                v = ordered_product(props) @ v
            out[s] = v
        return out


def propagate(
    system,
    schedule: SweepSchedule,
    psi0,
    record_every: int | None = 1,
    initial_phi: Sequence[float] | None = None,
    check_norm: bool = True,
) -> ProtocolResult:
    """Evolve ``psi0`` (StateVector or CoherentBranches) through ``schedule``.

    Diagnostics are recorded at t = 0 and after every ``record_every`` steps
    (``None`` picks a stride giving about 1000 records); the final step is
    always recorded.  ``initial_phi`` supplies the polariton angles used
    while every control field is off (the angle formulas are 0/0 there).
    Raises :class:`PropagationError` if the norm drifts by more than 1e-6.
    """
    if schedule.n_fields != system.n_fields:
        raise ValueError(f"schedule drives {schedule.n_fields} fields, system has {system.n_fields}")
    if record_every is not None and record_every < 1:
        raise ValueError("record_every must be >= 1")
    if isinstance(psi0, CoherentBranches):
        if set(psi0.labels) - set(system.mode_labels):
            raise ValueError("state carries modes the system does not have")
        psi0 = CoherentBranches(system.mode_labels, psi0._embed(system.mode_labels), psi0.weights)
        fock = False
    elif isinstance(psi0, StateVector):
        if psi0.space.mode_labels != system.mode_labels:
            raise ValueError("state space modes do not match the system")
        fock = True
    else:
        raise TypeError("psi0 must be a StateVector or CoherentBranches")
    if abs(psi0.norm - 1.0) > 1e-10:
        raise ValueError(f"psi0 must be normalised (norm = {psi0.norm})")

    starts, widths, mids = schedule.step_arrays()
    omegas = schedule.omega(mids)
    n_steps = len(widths)
    if record_every is None:
        record_every = max(1, n_steps // DEFAULT_RECORDS)

    labels = system.mode_labels
    if fock:
        space = psi0.space
        stepper = _FockStepper(system, space)
        ann = [annihilator(space, x).matrix for x in labels]
        num = [number_operator(space, x).matrix for x in labels]
        n_max = space.n_cap
    else:
        n_max = psi0.required_cap()

    times, dark, norms, expect, numbers, pops, om_rec = [], [], [], [], [], [], []
    phi_prev = tuple(initial_phi) if initial_phi is not None else None

    def record(t, state, om):
        nonlocal phi_prev
        angles = mixing_angles(system, om, phi_prev)
        phi_prev = angles.phi
        c = dsp_coefficients(system, angles)
        times.append(t)
        om_rec.append(np.asarray(om, dtype=float))
        if fock:
            v = state
            nrm = float(np.linalg.norm(v))
            norms.append(nrm)
            dark.append(_dark_overlap(StateVector(space, v), system, c))
            expect.append([np.vdot(v, A @ v) / nrm**2 for A in ann])
            numbers.append([np.vdot(v, Nm @ v).real / nrm**2 for Nm in num])
            p = np.array([np.sum(np.abs(v[space.sector_slice(n)]) ** 2) for n in range(n_max + 1)])
            pops.append(p / nrm**2)
        else:
            norms.append(state.norm)
            dark.append(state.dark_overlap(c))
            expect.append(state.mode_expectations())
            numbers.append(state.number_expectations())
            pops.append(state.sector_populations(n_max))
        return angles

    base, ctrl = _one_body_terms(system)
    U = np.eye(len(labels), dtype=complex)
    state = psi0.amplitudes.copy() if fock else psi0
    angles = record(0.0, state, schedule.omega(0.0))
    bounds = list(range(0, n_steps, record_every)) + [n_steps]
    for i0, i1 in zip(bounds[:-1], bounds[1:]):
        for j in range(i0, i1, _ONE_BODY_CHUNK):
            j1 = min(i1, j + _ONE_BODY_CHUNK)
            steps = step_unitaries(base, ctrl, omegas[j:j1], widths[j:j1])
            U = ordered_product(steps) @ U
        if fock:
            state = stepper.advance(state, omegas[i0:i1], widths[i0:i1])
        t = starts[i1 - 1] + widths[i1 - 1]
        current = state if fock else psi0.transform(U)
        angles = record(t, current, schedule.omega(t))
        if check_norm and abs(norms[-1] - 1.0) > NORM_DRIFT_LIMIT:
            raise PropagationError(f"norm drift {abs(norms[-1] - 1.0):.3e} at t={t:.4g}; reduce dt")

    final = StateVector(space, state) if fock else psi0.transform(U)
    return ProtocolResult(
        times=np.array(times),
        mode_labels=labels,
        dark_overlap=np.array(dark),
        norm=np.array(norms),
        mode_expectations=np.array(expect, dtype=complex),
        number_expectations=np.array(numbers),
        sector_populations=np.array(pops),
        omega=np.array(om_rec),
        initial_state=psi0,
        final_state=final,
        propagator=U,
        final_angles=angles,
    )
