"""Numerical checks of the dynamical-symmetry algebra.

Collective transition operators between the upper levels are represented
as Schwinger bilinears T_{mu nu} = B_mu^+ B_nu of the atomic boson modes
B = (E_1, ..., E_{m-2}, C) (or per-ensemble pairs (A_s, C_s)).  The checks
measure operator residuals column-wise on basis vectors up to a chosen
sector, so an identity holding exactly gives ~1e-15.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dicke import DickeModel, build_dicke_model
from .fock import LinearOperator, ModeSpace, annihilator, commutator, identity
from .models import EnsembleChain, MLevelSystem

__all__ = ["AlgebraReport", "operator_residual", "verify_mlevel_algebra", "verify_ensemble_algebra", "verify_dicke_algebra"]


@dataclass
class AlgebraReport:
    residuals: dict[str, float] = field(default_factory=dict)
    # Relations as printed that fail in this representation, kept for the record.
    literal_residuals: dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def passed(self, tol: float = 1e-10) -> bool:
        return self.max_residual <= tol

    def _record(self, name: str, value: float):
        self.residuals[name] = max(self.residuals.get(name, 0.0), value)


def operator_residual(op: LinearOperator, max_sector: int | None = None) -> float:
    """max_psi ||op psi|| over basis vectors in sectors <= max_sector."""
    space = op.space
    if max_sector is None:
        max_sector = space.n_cap
    stop = space.sector_slice(max_sector).stop
    block = op.matrix[:, :stop]
    if block.nnz == 0:
        return 0.0
    return float(np.sqrt(np.asarray(abs(block).power(2).sum(axis=0)).max()))


def _zero(space):
    return 0 * identity(space)


def _bilinears(space, labels):
    ops = {x: annihilator(space, x) for x in labels}
    T = {(i, j): ops[i].dag() @ ops[j] for i in labels for j in labels}
    return ops, T


def verify_mlevel_algebra(system: MLevelSystem, space: ModeSpace) -> AlgebraReport:
    """u(m-1) closure of T_{mu nu}, Heisenberg relations of h_{m-1}, and the
    semidirect action [T, h] in h, in the boson representation."""
    labels = system.excited_labels + ("C",)
    inner = space.n_cap - 1
    rep = AlgebraReport()
    B, T = _bilinears(space, labels)
    one = identity(space)
    for i, j in product(labels, labels):
        rep._record("heisenberg", operator_residual(commutator(B[i], B[j].dag()) - (i == j) * one, inner))
        rep._record("heisenberg", operator_residual(commutator(B[i], B[j]), inner))
    for (a, b), (mu, nu) in product(T, T):
        expect = _zero(space)
        if b == mu:
            expect = expect + T[a, nu]
        if a == nu:
            expect = expect - T[mu, b]
        rep._record("u(m-1) closure", operator_residual(commutator(T[a, b], T[mu, nu]) - expect))
    for (a, b), c in product(T, labels):
        # [B_a^+ B_b, B_c] = -delta_ac B_b ; [B_a^+ B_b, B_c^+] = delta_bc B_a^+
        expect = -B[b] if a == c else _zero(space)
        rep._record("[T, h] in h", operator_residual(commutator(T[a, b], B[c]) - expect, inner))
        expect = B[a].dag() if b == c else _zero(space)
        rep._record("[T, h] in h", operator_residual(commutator(T[a, b], B[c].dag()) - expect, inner))
    E = system.excited_labels
    for s in E:
        Tp = T[s, "C"]  # T^+_{c e_s} = E_s^+ C
        rep._record("[T+_ce, E] = -C", operator_residual(commutator(Tp, B[s]) + B["C"], inner))
        rep._record("[T-_ce, C] = -E", operator_residual(commutator(Tp.dag(), B["C"]) + B[s], inner))
    for i, j, k in product(E, E, E):
        Tp = T[j, i]  # T^+_{e_i e_j} = (E_i^+ E_j)^+
        expect = -B[i] if j == k else _zero(space)
        rep._record("[T+_ee, E]", operator_residual(commutator(Tp, B[k]) - expect, inner))
        printed = _zero(space)
        if j == k:
            printed = printed + B[i]
        if i == k:
            printed = printed - B[j]
        rep.literal_residuals["[T+_ee, E] as printed"] = max(
            rep.literal_residuals.get("[T+_ee, E] as printed", 0.0),
            operator_residual(commutator(Tp, B[k]) - printed, inner),
        )
    return rep


def verify_ensemble_algebra(chain: EnsembleChain, space: ModeSpace) -> AlgebraReport:
    """One su(2) per ensemble (T^+ = A^+ C, T^z = (A^+A - C^+C)/2), mutually
    commuting, each acting on its own Heisenberg pair."""
    rep = AlgebraReport()
    inner = space.n_cap - 1
    ops = []
    for A, C in zip(chain.excited_labels, chain.spinwave_labels):
        a, c = annihilator(space, A), annihilator(space, C)
        Tp = a.dag() @ c
        Tz = 0.5 * (a.dag() @ a - c.dag() @ c)
        ops.append((a, c, Tp, Tz))
        rep._record("su(2) [T+, T-] = 2Tz", operator_residual(commutator(Tp, Tp.dag()) - 2 * Tz))
        rep._record("su(2) [Tz, T+] = T+", operator_residual(commutator(Tz, Tp) - Tp))
        rep._record("[T+, A] = -C", operator_residual(commutator(Tp, a) + c, inner))
        rep._record("[T-, C] = -A", operator_residual(commutator(Tp.dag(), c) + a, inner))
        rep.literal_residuals["[T+, T-] = Tz as printed"] = max(
            rep.literal_residuals.get("[T+, T-] = Tz as printed", 0.0),
            operator_residual(commutator(Tp, Tp.dag()) - Tz),
        )
    for s, t in product(range(len(ops)), repeat=2):
        if s == t:
            continue
        for x, y in product(ops[s][2:], ops[t]):
            rep._record("distinct ensembles commute", operator_residual(commutator(x, y), inner))
    return rep


def verify_dicke_algebra(model: DickeModel | None = None, N: int = 6, photon_cap: int = 1) -> AlgebraReport:
    """Exact finite-N relations of the collective operators (no large-N limit)."""
    if model is None:
        model = build_dicke_model(N, 1.0, 1.0, photon_cap)
    rep = AlgebraReport()
    levels = (None, "C", "E")
    T = {(i, j): model.transition(i, j) for i in levels for j in levels}
    for (a, b), (mu, nu) in product(T, T):
        expect = _zero(model.space)
        if b == mu:
            expect = expect + T[a, nu]
        if a == nu:
            expect = expect - T[mu, b]
        rep._record("u(3) closure", operator_residual(commutator(T[a, b], T[mu, nu]) - expect))
    Tp = T["E", "C"]  # T^+_{ce}
    Tz = {
        (x, y): 0.5 * (T[x, x] - T[y, y]) for x in levels for y in levels if x != y
    }
    rep._record("[T+, T-] = 2Tz", operator_residual(commutator(Tp, Tp.dag()) - 2 * Tz["E", "C"]))
    rep._record("[T+_ce, E] = -C", operator_residual(commutator(Tp, model.E) + model.C))
    rep._record("[T-_ce, C] = -E", operator_residual(commutator(Tp.dag(), model.C) + model.E))
    for x, y, r in product(levels, repeat=3):
        if len({x, y, r}) == 3:
            rep._record("Tz additivity", operator_residual(Tz[x, y] - Tz[x, r] - Tz[r, y]))
            rep.literal_residuals["Tz difference as printed"] = max(
                rep.literal_residuals.get("Tz difference as printed", 0.0),
                operator_residual(Tz[x, y] - Tz[x, r] + Tz[r, y]),
            )
    rep.literal_residuals["[T+, T-] = Tz as printed"] = operator_residual(commutator(Tp, Tp.dag()) - Tz["E", "C"])
    return rep
