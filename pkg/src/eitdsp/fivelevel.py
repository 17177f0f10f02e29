"""Shift operators and the degeneracy-class spectrum of the equal-coupling
five-level system (three probes a1..a3, excitations E1..E3, spin wave C).

With g_1 = g_2 = g_3 = g the Hamiltonian decouples into rotated modes:

    u = cos(phi) E1 + sin(phi) E2,      v = -sin(phi) E1 + cos(phi) E2
    s = cos(vphi) u + sin(vphi) E3,     f = -sin(vphi) u + cos(vphi) E3
    a12+- and a123+- rotate a1, a2, a3 the same way
    b = sin(theta) a123+ + cos(theta) C

where tan(phi) = Omega2/Omega1, tan(vphi) = Omega3/sqrt(Omega1^2 + Omega2^2),
tan(theta) = g sqrt(N)/|Omega|.  s couples only to b (strength eps1), v to
a12- and f to a123- (strength eps2 = g sqrt(N)).

The Q-ladder mixing angle ``q_angle`` is an independent input.  Only
q_angle = pi/4 makes cos(q) s^+ +- sin(q) b^+ an exact eigenoperator; other
values are accepted so their residual can be measured.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from math import factorial

import numpy as np

from .fock import LinearOperator, ModeSpace, StateVector, commutator
from .models import MLevelSystem, build_mlevel_hamiltonian
from .polariton import dark_state, dsp_operator_mlevel, mixing_angles_mlevel, mode_operator

__all__ = [
    "ShiftOperators",
    "SpectrumEntry",
    "SpectrumReport",
    "five_level_shift_operators",
    "degeneracy_state",
    "five_level_spectrum",
    "ladder_residuals",
]


@dataclass(frozen=True)
class ShiftOperators:
    space: ModeSpace
    H: LinearOperator
    d: LinearOperator
    Q_plus: LinearOperator  # creation-type (shift +1)
    Q_minus: LinearOperator
    P_plus: LinearOperator
    P_minus: LinearOperator
    O_plus: LinearOperator
    O_minus: LinearOperator
    b: LinearOperator  # bright-state polariton, annihilation-type
    eps1: float
    eps2: float
    phi: float
    varphi: float
    theta: float
    q_angle: float

    @property
    def eps3(self) -> float:
        return self.eps2

    def raising(self) -> tuple[LinearOperator, ...]:
        """(Q+, Q-, P+, P-, O+, O-) in index order i, j, k, l, f, g."""
        return (self.Q_plus, self.Q_minus, self.P_plus, self.P_minus, self.O_plus, self.O_minus)

    def predicted(self, i, j, k, l, f, g) -> float:
        return (i - j) * self.eps1 + ((k + f) - (l + g)) * self.eps2

    def vacuum_norms(self) -> dict[str, float]:
        """||X^+ |0>|| for each shift operator (they are not unit-normalised bosons)."""
        from .fock import vacuum

        vac = vacuum(self.space)
        names = ("Q+", "Q-", "P+", "P-", "O+", "O-")
        return {n: (op @ vac).norm for n, op in zip(names, self.raising())}


@dataclass(frozen=True)
class SpectrumEntry:
    indices: tuple[int, int, int, int, int, int, int]  # (i, j, k, l, f, g, n)
    predicted_eigenvalue: float
    residual: float
    norm_before_normalisation: float

    @property
    def is_null(self) -> bool:
        return self.norm_before_normalisation < 1e-12


def five_level_shift_operators(
    space: ModeSpace, g, omegas, N: float, q_angle: float = np.pi / 4
) -> ShiftOperators:
    g_arr = np.broadcast_to(np.asarray(g, dtype=float), (3,))
    if not np.allclose(g_arr, g_arr[0], rtol=1e-12, atol=0):
        raise ValueError("shift operators require equal couplings g1 = g2 = g3")
    om = np.asarray(omegas, dtype=float)
    if om.shape != (3,) or np.any(om < 0):
        raise ValueError("omegas must be three non-negative values")
    g0 = float(g_arr[0])
    system = MLevelSystem(5, (g0,) * 3, N, tuple(om))
    if space.mode_labels != system.mode_labels:
        raise ValueError(f"space must have modes {system.mode_labels}")
    H = build_mlevel_hamiltonian(system, om, space)
    G = g0 * np.sqrt(N)
    omega_norm = float(np.linalg.norm(om))
    phi = float(np.arctan2(om[1], om[0]))
    varphi = float(np.arctan2(om[2], np.hypot(om[0], om[1])))
    theta = float(np.arctan2(G, omega_norm))
    eps1 = float(np.sqrt(G**2 + omega_norm**2))
    eps2 = float(G)

    cp, sp_ = np.cos(phi), np.sin(phi)
    cv, sv = np.cos(varphi), np.sin(varphi)
    e_s = np.array([cv * cp, cv * sp_, sv])
    e_v = np.array([-sp_, cp, 0.0])
    e_f = np.array([-sv * cp, -sv * sp_, cv])

    def vec(prefix, w, extra=None):
        c = {f"{prefix}{i + 1}": w[i] for i in range(3)}
        if extra:
            c.update(extra)
        return c

    s = vec("E", e_s)
    v = vec("E", e_v)
    f = vec("E", e_f)
    a123p = vec("a", e_s)
    a12m = vec("a", e_v)
    a123m = vec("a", e_f)
    bright = {k: np.sin(theta) * x for k, x in a123p.items()}
    bright["C"] = np.cos(theta)

    def combo(c1, x1, c2, x2):
        out = defaultdict(float)
        for k, x in x1.items():
            out[k] += c1 * x
        for k, x in x2.items():
            out[k] += c2 * x
        return mode_operator(space, dict(out)).dag()

    cq, sq = np.cos(q_angle), np.sin(q_angle)
    angles = mixing_angles_mlevel((g0,) * 3, om, N)
    return ShiftOperators(
        space=space,
        H=H,
        d=dsp_operator_mlevel(space, angles),
        Q_plus=combo(cq, s, sq, bright),
        Q_minus=combo(cq, s, -sq, bright),
        P_plus=combo(1.0, v, 1.0, a12m),
        P_minus=combo(1.0, v, -1.0, a12m),
        O_plus=combo(1.0, f, 1.0, a123m),
        O_minus=combo(1.0, f, -1.0, a123m),
        b=mode_operator(space, bright),
        eps1=eps1,
        eps2=eps2,
        phi=phi,
        varphi=varphi,
        theta=theta,
        q_angle=float(q_angle),
    )


def ladder_residuals(ops: ShiftOperators, max_sector: int | None = None) -> dict[str, float]:
    """max ||([H, X^+] -+ eps X^+) psi|| on basis vectors up to ``max_sector``."""
    from .algebra import operator_residual

    if max_sector is None:
        max_sector = ops.space.n_cap - 1
    pairs = {
        "Q+": (ops.Q_plus, ops.eps1),
        "Q-": (ops.Q_minus, -ops.eps1),
        "P+": (ops.P_plus, ops.eps2),
        "P-": (ops.P_minus, -ops.eps2),
        "O+": (ops.O_plus, ops.eps3),
        "O-": (ops.O_minus, -ops.eps3),
    }
    return {
        name: operator_residual(commutator(ops.H, X) - eps * X, max_sector) for name, (X, eps) in pairs.items()
    }


def degeneracy_state(ops: ShiftOperators, indices, n: int, space: ModeSpace | None = None):
    """|r(i,j;k,l;f,g;n)> normalised numerically, with its spectrum entry.

    Raises ValueError when the total quanta exceed n_cap - 1 or the
    unnormalised vector vanishes.
    """
    space = space or ops.space
    if space != ops.space:
        raise ValueError("space does not match the shift operators")
    idx = tuple(int(x) for x in indices)
    if len(idx) != 6 or min(idx) < 0 or n < 0:
        raise ValueError("indices must be six non-negative integers and n >= 0")
    if sum(idx) + n > space.n_cap - 1:
        raise ValueError(f"total quanta {sum(idx) + n} exceed n_cap - 1 = {space.n_cap - 1}")
    v = dark_state(space, ops.d, n).amplitudes
    # rightmost operator acts first: O-^g, O+^f, P-^l, P+^k, Q-^j, Q+^i
    for op, power in reversed(list(zip(ops.raising(), idx))):
        for _ in range(power):
            v = op.matrix @ v
    v = v / np.sqrt(float(np.prod([factorial(p) for p in idx])))
    nrm = float(np.linalg.norm(v))
    E = ops.predicted(*idx)
    if nrm < 1e-12:
        raise ValueError(f"state r{idx + (n,)} is numerically null")
    psi = StateVector(space, v / nrm)
    res = float(np.linalg.norm(ops.H.matrix @ psi.amplitudes - E * psi.amplitudes))
    return psi, SpectrumEntry(idx + (n,), E, res, nrm)


@dataclass
class SpectrumReport:
    entries: list[SpectrumEntry]
    class_ranks: dict[tuple[int, int], tuple[int, int]]  # (i-j, k+f-l-g) -> (members, Gram rank)
    zero_class_max_eigenvalue: float

    @property
    def max_residual(self) -> float:
        return max(e.residual for e in self.entries)


def five_level_spectrum(ops: ShiftOperators, max_quanta: int = 5) -> SpectrumReport:
    """Every |r> with i+j+k+l+f+g+n <= max_quanta, residuals and per-class Gram ranks."""
    if max_quanta > ops.space.n_cap - 1:
        raise ValueError("max_quanta must be <= n_cap - 1")
    entries = []
    classes: dict[tuple[int, int], list[np.ndarray]] = defaultdict(list)
    zero_max = 0.0
    for tup in product(range(max_quanta + 1), repeat=7):
        if sum(tup) > max_quanta:
            continue
        *idx, n = tup
        psi, entry = degeneracy_state(ops, idx, n)
        entries.append(entry)
        i, j, k, l, f, g = idx
        key = (i - j, (k + f) - (l + g))
        classes[key].append(psi.amplitudes)
        if i == j and k + f == l + g:
            zero_max = max(zero_max, abs(entry.predicted_eigenvalue))
    ranks = {}
    for key, vecs in classes.items():
        M = np.array(vecs)
        sv = np.linalg.svd(M, compute_uv=False)
        ranks[key] = (len(vecs), int(np.sum(sv > 1e-8 * sv[0])))
    return SpectrumReport(entries, ranks, zero_max)
