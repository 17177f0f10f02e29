"""Adiabatic storage and split-release protocols.

Storage starts with strong control fields (theta near 0, the polariton is
photonic) and ramps them to zero (theta = pi/2, the polariton is a spin
wave).  Release ramps the fields back up with ratios that select the output
distribution over the probe modes.

Sign convention: the polariton carries -sin(theta) on the spin waves, so
sum_n P_n(alpha0) |D_n(pi/2)> is the spin-wave coherent state of amplitude
-alpha0 w_l.  Stored coherences are reported in the polariton convention,
alpha_l = -<C_l>, which makes them positive for positive alpha0.

Default sweep, in units of the collective couplings G = g sqrt(N): every
driven control follows Omega = r G cot(x), with x turning along a raised
cosine from arctan(G/Omega_max) to pi/2 (storage) or back (release), so the
mixing angle moves at a bounded rate with zero slope at both ends.
Omega_max = 1e7 max(G) keeps the bright part of the input state,
~ (G/Omega_max)^2 |alpha0|^2, below the nonadiabatic error, so the
infidelity keeps falling as the duration grows.  Steps are no longer than
dt = 0.05 / max(G) and no longer than pi / Omega(t): with a fixed step the
phase per step eps h sweeps through multiples of 2 pi while Omega falls and
the step errors add up coherently; at eps h ~ pi they cancel instead.
T = 200 / min(G).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .branches import CoherentBranches, lift_mode_unitary
from .dynamics import ProtocolResult, propagate
from .fock import StateVector
from .models import EnsembleChain, MLevelSystem
from .polariton import MixingAngles, controls_for_angles, dsp_coefficients, mixing_angles, polariton_weights
from .schedules import CotangentRamp, Hold, Segment, SweepSchedule

__all__ = [
    "Timing",
    "default_timing",
    "storage_schedule",
    "release_schedule",
    "transfer_rotation",
    "protocol_store",
    "protocol_release_split",
    "store_and_split",
    "equal_control_angles",
    "duration_doublings",
]

OMEGA_FACTOR = 1e7
SWEEP_FACTOR = 200.0
DT_FACTOR = 0.05
PHASE_PER_STEP = np.pi
HOLD_FACTOR = 5.0  # held controls ramp down to 5 max(G) instead of 0


@dataclass(frozen=True)
class Timing:
    sweep_T: float
    omega_max: float
    dt: float
    coupling: float  # G used in the cot profile
    phase_per_step: float = PHASE_PER_STEP


def default_timing(system, sweep_T=None, omega_max=None, dt=None) -> Timing:
    G = np.asarray(system.collective_couplings, dtype=float)
    T = SWEEP_FACTOR / G.min() if sweep_T is None else float(sweep_T)
    om = OMEGA_FACTOR * G.max() if omega_max is None else float(omega_max)
    if not (np.isfinite(T) and T > 0):
        raise ValueError("sweep_T must be > 0")
    if not (np.isfinite(om) and om > 0):
        raise ValueError("omega_max must be > 0")
    step = DT_FACTOR / G.max() if dt is None else float(dt)
    if not (np.isfinite(step) and step > 0):
        raise ValueError("dt must be > 0")
    return Timing(T, om, min(step, T / 10), float(G.max()))


def _sweep(timing: Timing, peaks: np.ndarray, storing: bool, hold=None) -> SweepSchedule:
    """Omega_s from peak_s to 0 (storage) or 0 to peak_s (release).

    Fields flagged in ``hold`` follow the same profile from Omega_max but
    level off at HOLD_FACTOR max(G): their ensembles stay transparent and end
    with zero stored weight, and starting every field at Omega_max keeps the
    probe dark at t = 0.
    """
    ramps = []
    hold = np.zeros(len(peaks), dtype=bool) if hold is None else np.asarray(hold, dtype=bool)
    for p, held in zip(peaks, hold):
        if held:
            floor = HOLD_FACTOR * timing.coupling
            ramps.append(CotangentRamp(timing.omega_max, floor, timing.coupling) if storing else Hold(floor))
            continue
        if p <= 0:
            ramps.append(Hold(0.0))
            continue
        scale = p / timing.omega_max * timing.coupling
        ramps.append(CotangentRamp(p, 0.0, scale) if storing else CotangentRamp(0.0, p, scale))
    seg = Segment(timing.sweep_T, tuple(ramps), timing.dt, timing.phase_per_step)
    return SweepSchedule((seg,), timing.dt)


def equal_control_angles(system) -> tuple[float, ...]:
    """Polariton angles reached when every control field has the same amplitude."""
    return mixing_angles(system, np.ones(system.n_fields)).phi


def transfer_rotation(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Unitary taking unit vector ``src`` to orthogonal unit vector ``dst``
    (and ``dst`` to ``-src``), identity on the rest."""
    src = np.asarray(src, dtype=complex)
    dst = np.asarray(dst, dtype=complex)
    if abs(np.vdot(src, dst)) > 1e-12:
        raise ValueError("source and destination modes must be orthogonal")
    I = np.eye(src.size, dtype=complex)
    return I - np.outer(src, src.conj()) - np.outer(dst, dst.conj()) + np.outer(dst, src.conj()) - np.outer(src, dst.conj())


def _apply_map(state, V):
    if isinstance(state, CoherentBranches):
        return state.transform(V)
    return lift_mode_unitary(state, V)


def _fidelity(a, b) -> float:
    if isinstance(a, CoherentBranches):
        return a.fidelity(b)
    return a.fidelity(b)


def storage_schedule(
    system, timing: Timing, omega_shape: Sequence[float] | None = None, angles: Sequence[float] | None = None
) -> SweepSchedule:
    """Storage sweep.  m-level systems ramp only the first control.  Ensembles
    ramp every control with ratios ``omega_shape`` (default equal), or with
    the ratios that store the polariton weights w(``angles``); a channel with
    zero target weight keeps its control on."""
    n = system.n_fields
    hold = None
    if isinstance(system, MLevelSystem):
        if omega_shape is not None or angles is not None:
            raise ValueError("m-level storage drives only the first control field")
        peaks = np.zeros(n)
        peaks[0] = timing.omega_max
    elif angles is not None:
        if omega_shape is not None:
            raise ValueError("give omega_shape or angles, not both")
        angles = tuple(float(x) for x in angles)
        if len(angles) != n - 1 or any(not 0 <= x <= np.pi / 2 for x in angles):
            raise ValueError(f"angles must be {n - 1} values in [0, pi/2]")
        peaks, hold = controls_for_angles(system, angles, timing.omega_max)
    else:
        shape = np.ones(n) if omega_shape is None else np.asarray(omega_shape, dtype=float)
        if shape.shape != (n,) or np.any(shape <= 0) or not np.all(np.isfinite(shape)):
            raise ValueError("omega_shape must hold one positive ratio per ensemble")
        peaks = timing.omega_max * shape / shape.max()
    return _sweep(timing, peaks, storing=True, hold=hold)


def release_schedule(system: MLevelSystem, timing: Timing, phi_e: Sequence[float]) -> SweepSchedule:
    amps, _ = controls_for_angles(system, phi_e, timing.omega_max)
    return _sweep(timing, np.asarray(amps, dtype=float), storing=False)


def _input_state(system, alpha0, input_state):
    if input_state is not None:
        return input_state
    if alpha0 is None:
        raise ValueError("give alpha0 or input_state")
    return CoherentBranches.coherent(system.mode_labels, system.input_label, alpha0)


def _unit(system, label):
    e = np.zeros(len(system.mode_labels))
    e[system.mode_labels.index(label)] = 1.0
    return e


def protocol_store(
    system,
    alpha0: complex | None = None,
    sweep_T: float | None = None,
    *,
    input_state=None,
    omega_max: float | None = None,
    dt: float | None = None,
    omega_shape: Sequence[float] | None = None,
    angles: Sequence[float] | None = None,
    record_every: int | None = None,
) -> ProtocolResult:
    """Map the probe state into the spin wave(s) by turning the control(s) off.

    The target is the input state carried by the polariton into its
    theta = pi/2 form, e.g. sum_n P_n(alpha0)|D_n(pi/2)> for a coherent input.
    """
    psi0 = _input_state(system, alpha0, input_state)
    timing = default_timing(system, sweep_T, omega_max, dt)
    schedule = storage_schedule(system, timing, omega_shape, angles)
    result = propagate(system, schedule, psi0, record_every=record_every)
    phi = result.final_angles.phi if angles is None else tuple(float(x) for x in angles)
    stored_mode = dsp_coefficients(system, MixingAngles(np.pi / 2, phi))
    V = transfer_rotation(_unit(system, system.input_label), stored_mode)
    result.target = _apply_map(result.initial_state, V)
    result.final_fidelity = _fidelity(result.final_state, result.target)
    result.target_description = "input state carried by the polariton to theta = pi/2 (spin-wave storage)"
    result.extras.update(
        protocol="storage",
        sweep_T=timing.sweep_T,
        omega_max=timing.omega_max,
        dt=timing.dt,
        phi=phi,
        stored_coherences={x: -result.expectation(x) for x in system.spinwave_labels},
        predicted_coherences=_predicted_coherences(system, alpha0, phi, input_state),
    )
    return result


def _predicted_coherences(system, alpha0, phi, input_state):
    if input_state is not None or alpha0 is None:
        return None
    w = polariton_weights(phi)
    if isinstance(system, MLevelSystem):
        return {"C": complex(alpha0)}
    return {x: complex(alpha0) * wl for x, wl in zip(system.spinwave_labels, w)}


def protocol_release_split(
    system: MLevelSystem,
    stored_state,
    phi_e: Sequence[float] | None = None,
    sweep_T: float | None = None,
    *,
    omega_max: float | None = None,
    dt: float | None = None,
    record_every: int | None = None,
) -> ProtocolResult:
    """Re-apply all m-2 control fields with ratios that give angles ``phi_e``.

    ``stored_state`` is a storage ProtocolResult or a state whose excitation
    sits in C.  Defaults to equal control amplitudes.
    """
    if not isinstance(system, MLevelSystem):
        raise TypeError("split-release applies to m-level systems; ensembles split during storage")
    if isinstance(stored_state, ProtocolResult):
        stored_state = stored_state.final_state
    if phi_e is None:
        phi_e = equal_control_angles(system)
    phi_e = tuple(float(x) for x in phi_e)
    if len(phi_e) != system.m - 3:
        raise ValueError(f"phi_e must have {system.m - 3} angles")
    if any(not 0 <= x <= np.pi / 2 for x in phi_e):
        raise ValueError("phi_e angles must lie in [0, pi/2]")
    timing = default_timing(system, sweep_T, omega_max, dt)
    schedule = release_schedule(system, timing, phi_e)
    if isinstance(stored_state, StateVector) and abs(stored_state.norm - 1) > 1e-10:
        stored_state = stored_state.normalize()
    if isinstance(stored_state, CoherentBranches) and abs(stored_state.norm - 1) > 1e-10:
        stored_state = stored_state.normalized()
    result = propagate(system, schedule, stored_state, record_every=record_every, initial_phi=phi_e)
    src = dsp_coefficients(system, MixingAngles(np.pi / 2, phi_e))
    dst = dsp_coefficients(system, MixingAngles(0.0, phi_e))
    V = transfer_rotation(src, dst)
    result.target = _apply_map(result.initial_state, V)
    result.final_fidelity = _fidelity(result.final_state, result.target)
    result.target_description = "|b>_atom (x) product of released probe coherent states"
    w = polariton_weights(phi_e)
    result.extras.update(
        protocol="split",
        sweep_T=timing.sweep_T,
        omega_max=timing.omega_max,
        dt=timing.dt,
        phi_e=phi_e,
        weights=tuple(w),
        released_amplitudes={x: result.expectation(x) for x in system.probe_labels},
        residual_spinwave_number=float(result.number_expectations[-1, system.mode_labels.index("C")]),
    )
    return result


def store_and_split(system: MLevelSystem, alpha0=None, phi_e=None, *, input_state=None, sweep_T=None, omega_max=None, dt=None, record_every=None):
    """Storage followed by split-release; returns (storage, release) results."""
    store = protocol_store(
        system, alpha0, sweep_T, input_state=input_state, omega_max=omega_max, dt=dt, record_every=record_every
    )
    release = protocol_release_split(
        system, store, phi_e, sweep_T, omega_max=omega_max, dt=dt, record_every=record_every
    )
    return store, release


def duration_doublings(run, sweep_T: float, doublings: int = 3) -> list[tuple[float, float]]:
    """[(T, infidelity)] for T = sweep_T * 2^j, j = 0..doublings.

    ``run(T)`` must return a ProtocolResult with ``final_fidelity`` set.
    """
    out = []
    for j in range(doublings + 1):
        T = sweep_T * 2**j
        out.append((T, 1.0 - run(T).final_fidelity))
    return out
