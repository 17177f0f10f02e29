"""Mixing angles, dark-state polariton operators and dark states."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, hypot
from typing import Sequence

import numpy as np

from .fock import LinearOperator, ModeSpace, StateVector, annihilator, commutator, identity, vacuum
from .models import EnsembleChain, MLevelSystem, build_hamiltonian, build_space

__all__ = [
    "MixingAngles",
    "DSPReport",
    "polariton_weights",
    "angles_from_weights",
    "mixing_angles_mlevel",
    "mixing_angles_ensemble",
    "mixing_angles",
    "dsp_coefficients",
    "dsp_coefficients_mlevel",
    "dsp_coefficients_ensemble",
    "dsp_operator_mlevel",
    "dsp_operator_ensemble",
    "mode_operator",
    "verify_dsp",
    "dark_state",
    "controls_for_angles",
    "IdentityResiduals",
    "random_system",
    "identity_residuals",
]


@dataclass(frozen=True)
class MixingAngles:
    theta: float
    phi: tuple[float, ...]
    dark_limit: bool = False  # all control fields off: theta pinned to pi/2


def polariton_weights(phi: Sequence[float]) -> np.ndarray:
    """Unit vector (prod cos phi_j, ..., sin phi_{l-1} prod_{j>=l} cos phi_j, ...).

    This is the distribution of a polariton over the l = 1..len(phi)+1 channels.
    """
    phi = np.asarray(phi, dtype=float)
    n = phi.size + 1
    w = np.empty(n)
    for l in range(n):  # l is the zero-based channel index
        tail = np.prod(np.cos(phi[l:])) if l < phi.size else 1.0
        w[l] = tail if l == 0 else np.sin(phi[l - 1]) * tail
    return w


def angles_from_weights(weights: Sequence[float]) -> tuple[float, ...]:
    """Inverse of :func:`polariton_weights` for non-negative weights."""
    w = np.asarray(weights, dtype=float)
    phi = []
    for j in range(1, w.size):
        phi.append(float(np.arctan2(w[j], np.linalg.norm(w[:j]))))
    return tuple(phi)


def _atan2(num: float, den: float) -> float:
    return float(np.arctan2(num, den))


def mixing_angles_mlevel(g, omega, N, previous_phi=None) -> MixingAngles:
    """theta and phi_j of the m-level polariton.

    tan theta = g_1...g_{m-2} sqrt(N) / [sum_j Omega_j^2 prod_{l!=j} g_l^2]^(1/2)
    tan phi_j = prod_{l<=j} g_l Omega_{j+1} / [sum_{l<=j} Omega_l^2 prod_{s<=j+1, s!=l} g_s^2]^(1/2)

    Angles where numerator and denominator both vanish fall back to
    ``previous_phi`` (or 0); with every Omega zero theta is pi/2 and
    ``dark_limit`` is set.
    """
    g = np.asarray(g, dtype=float)
    om = np.asarray(omega, dtype=float)
    if g.shape != om.shape or g.size < 1:
        raise ValueError("g and omega must have the same nonzero length")
    if np.any(g <= 0):
        raise ValueError("g must be > 0")
    if np.any(om < 0) or not np.all(np.isfinite(om)):
        raise ValueError("omega must be finite and >= 0")
    n = g.size
    num = np.prod(g) * np.sqrt(N)
    # hypot of the unsquared terms keeps single-term ratios exact
    den = hypot(*(om[j] * np.prod(np.delete(g, j)) for j in range(n)))
    dark_limit = bool(np.all(om == 0))
    theta = np.pi / 2 if dark_limit else _atan2(num, den)
    phi = []
    for j in range(1, n):  # phi_j for j = 1..n-1
        numer = np.prod(g[:j]) * om[j]
        d = hypot(*(om[l] * np.prod(np.delete(g[: j + 1], l)) for l in range(j)))
        if numer == 0 and d == 0:
            phi.append(float(previous_phi[j - 1]) if previous_phi is not None else 0.0)
        else:
            phi.append(_atan2(numer, d))
    return MixingAngles(float(theta), tuple(phi), dark_limit)


def mixing_angles_ensemble(g, N_list, omega, previous_phi=None) -> MixingAngles:
    """theta and phi_j of the k-ensemble polariton.

    tan theta = [sum_j g_j^2 N_j prod_{l!=j} Omega_l^2]^(1/2) / (Omega_1...Omega_k)
    tan phi_j = g_{j+1} sqrt(N_{j+1}) prod_{l<=j} Omega_l
                / [sum_{l<=j} g_l^2 N_l prod_{s<=j+1, s!=l} Omega_s^2]^(1/2)
    """
    g = np.asarray(g, dtype=float)
    N = np.asarray(N_list, dtype=float)
    om = np.asarray(omega, dtype=float)
    if not (g.shape == N.shape == om.shape) or g.size < 1:
        raise ValueError("g, N and omega must have the same nonzero length")
    if np.any(g <= 0) or np.any(N < 1):
        raise ValueError("g must be > 0 and N >= 1")
    if np.any(om < 0) or not np.all(np.isfinite(om)):
        raise ValueError("omega must be finite and >= 0")
    G = g * np.sqrt(N)
    k = g.size
    num = hypot(*(G[j] * np.prod(np.delete(om, j)) for j in range(k)))
    den = np.prod(om)
    dark_limit = bool(np.all(om == 0))
    theta = np.pi / 2 if (dark_limit or (num == 0 and den == 0)) else _atan2(num, den)
    phi = []
    for j in range(1, k):
        numer = G[j] * np.prod(om[:j])
        d = hypot(*(G[l] * np.prod(np.delete(om[: j + 1], l)) for l in range(j)))
        if numer == 0 and d == 0:
            phi.append(float(previous_phi[j - 1]) if previous_phi is not None else 0.0)
        else:
            phi.append(_atan2(numer, d))
    return MixingAngles(float(theta), tuple(phi), dark_limit)


def mixing_angles(system, omega_values, previous_phi=None) -> MixingAngles:
    if isinstance(system, MLevelSystem):
        return mixing_angles_mlevel(system.g, omega_values, system.N, previous_phi)
    if isinstance(system, EnsembleChain):
        return mixing_angles_ensemble(system.g, system.N, omega_values, previous_phi)
    raise TypeError(f"unsupported system {type(system).__name__}")


def dsp_coefficients_mlevel(angles: MixingAngles, m: int) -> dict[str, float]:
    """d = cos(theta) sum_l w_l(phi) a_l - sin(theta) C."""
    if len(angles.phi) != m - 3:
        raise ValueError(f"m={m} needs {m - 3} phi angles, got {len(angles.phi)}")
    w = polariton_weights(angles.phi)
    coeffs = {f"a{l + 1}": np.cos(angles.theta) * w[l] for l in range(m - 2)}
    coeffs["C"] = -np.sin(angles.theta)
    return coeffs


def dsp_coefficients_ensemble(angles: MixingAngles, k: int) -> dict[str, float]:
    """d = cos(theta) a - sin(theta) sum_l w_l(phi) C_l."""
    if len(angles.phi) != k - 1:
        raise ValueError(f"k={k} needs {k - 1} phi angles, got {len(angles.phi)}")
    w = polariton_weights(angles.phi)
    coeffs = {"a": np.cos(angles.theta)}
    for l in range(k):
        coeffs[f"C{l + 1}"] = -np.sin(angles.theta) * w[l]
    return coeffs


def dsp_coefficients(system, angles: MixingAngles) -> np.ndarray:
    """Polariton coefficient vector over ``system.mode_labels``."""
    if isinstance(system, MLevelSystem):
        c = dsp_coefficients_mlevel(angles, system.m)
    else:
        c = dsp_coefficients_ensemble(angles, system.k)
    return np.array([c.get(x, 0.0) for x in system.mode_labels])


def mode_operator(space: ModeSpace, coefficients) -> LinearOperator:
    """sum_label c_label b_label (an annihilation-type operator, shift -1)."""
    items = coefficients.items() if hasattr(coefficients, "items") else zip(space.mode_labels, coefficients)
    op = None
    for label, c in items:
        if c == 0:
            continue
        term = complex(c) * annihilator(space, label)
        op = term if op is None else op + term
    if op is None:
        return 0 * annihilator(space, space.mode_labels[0])
    return op


def dsp_operator_mlevel(space: ModeSpace, angles: MixingAngles) -> LinearOperator:
    m = sum(1 for x in space.mode_labels if x.startswith("a")) + 2
    return mode_operator(space, dsp_coefficients_mlevel(angles, m))


def dsp_operator_ensemble(space: ModeSpace, angles: MixingAngles) -> LinearOperator:
    k = sum(1 for x in space.mode_labels if x.startswith("C"))
    return mode_operator(space, dsp_coefficients_ensemble(angles, k))


@dataclass(frozen=True)
class DSPReport:
    commutator_residual: float  # max ||[H, d] psi||
    bosonic_residual: float  # max ||([d, d^+] - 1) psi||
    max_sector: int

    def passed(self, tol: float = 1e-10) -> bool:
        return self.commutator_residual <= tol and self.bosonic_residual <= tol


def _max_column_norm(op: LinearOperator, upto: int) -> float:
    stop = op.space.sector_slice(upto).stop
    block = op.matrix[:, :stop]
    if block.nnz == 0:
        return 0.0
    sq = np.asarray(abs(block).power(2).sum(axis=0)).ravel()
    return float(np.sqrt(sq.max()))


def verify_dsp(H: LinearOperator, d: LinearOperator, space: ModeSpace, max_sector: int | None = None) -> DSPReport:
    """Residuals of [H, d] = 0 and [d, d^+] = 1 over basis vectors in sectors <= max_sector.

    Sectors at the cap are excluded by default because d^+ leaves the space there.
    """
    if max_sector is None:
        max_sector = space.n_cap - 1
    if not 0 <= max_sector <= space.n_cap - 1:
        raise ValueError("max_sector must lie in 0..n_cap-1")
    hd = commutator(H, d)
    dd = commutator(d, d.dag()) - identity(space)
    return DSPReport(_max_column_norm(hd, max_sector), _max_column_norm(dd, max_sector), max_sector)


def dark_state(space: ModeSpace, d: LinearOperator, n: int) -> StateVector:
    """|D_n> = (d^+)^n |0> / sqrt(n!)."""
    if not 0 <= n <= space.n_cap:
        raise ValueError(f"n={n} exceeds the excitation cap {space.n_cap}")
    dd = d.dag()
    v = vacuum(space).amplitudes
    for _ in range(n):
        v = dd.matrix @ v
    v = v / np.sqrt(float(factorial(n)))
    return StateVector(space, v).normalize()


def controls_for_angles(system, phi: Sequence[float], omega_max: float = 1.0):
    """Control amplitudes (and hold flags) realising the target angles ``phi``.

    m-level: Omega_s proportional to g_s w_s(phi).  Ensemble: Omega_s
    proportional to G_s / w_s(phi); a channel with w_s = 0 cannot be reached
    by a finite ratio, so that field is flagged to stay on while the rest
    ramp off.  The largest ramped amplitude equals ``omega_max``.
    """
    w = polariton_weights(phi)
    if w.size != system.n_fields:
        raise ValueError(f"need {system.n_fields - 1} angles, got {len(phi)}")
    hold = np.zeros(w.size, dtype=bool)
    if isinstance(system, MLevelSystem):
        ratio = np.asarray(system.g) * w
    else:
        G = system.collective_couplings
        hold = np.isclose(w, 0.0, atol=1e-14)
        ratio = np.where(hold, 0.0, G / np.where(hold, 1.0, w))
    scale = ratio.max()
    if scale <= 0:
        raise ValueError("target angles leave no field to ramp")
    amps = omega_max * ratio / scale
    amps[hold] = omega_max
    return amps, hold


@dataclass(frozen=True)
class IdentityResiduals:
    commutator: float  # max ||[H, d] psi||, sectors <= n_cap - 1
    bosonic: float  # max ||([d, d^+] - 1) psi||
    dark_annihilation: float  # max_n ||H |D_n>||
    dark_orthonormality: float  # max |<D_m|D_n> - delta_mn|

    @property
    def worst(self) -> float:
        return max(self.commutator, self.bosonic, self.dark_annihilation, self.dark_orthonormality)


def random_system(family: str, size: int, rng: np.random.Generator):
    """A random m-level (size = m) or k-ensemble (size = k) system with its
    control amplitudes drawn into ``omega``."""
    n = size - 2 if family == "mlevel" else size
    g = tuple(rng.uniform(0.05, 2.0, n))
    om = tuple(rng.uniform(0.1, 5.0, n))
    if family == "mlevel":
        return MLevelSystem(size, g, float(rng.integers(1, 1001)), om)
    if family == "ensemble":
        return EnsembleChain(size, g, tuple(float(x) for x in rng.integers(1, 1001, n)), om)
    raise ValueError(f"unknown family {family!r}")


def identity_residuals(system, n_cap: int, dark_max: int = 4) -> IdentityResiduals:
    """DSP and dark-state identities at the system's own control amplitudes."""
    if dark_max > n_cap:
        raise ValueError("dark_max must be <= n_cap")
    space = build_space(system, n_cap)
    H = build_hamiltonian(system, system.omega, space)
    angles = mixing_angles(system, system.omega)
    d = mode_operator(space, dsp_coefficients(system, angles))
    rep = verify_dsp(H, d, space)
    dark = np.array([dark_state(space, d, n).amplitudes for n in range(dark_max + 1)])
    annihilation = max(float(np.linalg.norm(H.matrix @ v)) for v in dark)
    gram = dark.conj() @ dark.T
    ortho = float(np.max(np.abs(gram - np.eye(len(dark)))))
    return IdentityResiduals(rep.commutator_residual, rep.bosonic_residual, annihilation, ortho)
