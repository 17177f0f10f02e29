"""Exact finite-N three-level model in the permutation-symmetric (Dicke) basis.

The symmetric subspace of N three-level atoms is spanned by |n_c, n_e> with
n_b = N - n_c - n_e.  Collective flip operators act as Schwinger bilinears,
sum_j sigma^j_{mu nu} = b_mu^+ b_nu, so every matrix element is exact:

    E = b_b^+ b_e / sqrt(N),   C = b_b^+ b_c / sqrt(N),   T_ec = b_e^+ b_c.

The occupations of c and e are stored as modes "C" and "E" of a
:class:`ModeSpace` whose group cap n_c + n_e <= N encodes n_b >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import LinearOperator, ModeSpace, annihilator, identity

__all__ = ["DickeModel", "MAX_ATOMS", "build_dicke_model", "bosonization_error", "dicke_space"]

# Larger N works, but the default photon cap makes the space grow as N^2 and
# nothing in the package needs more than this.
MAX_ATOMS = 64


def dicke_space(N: int, photon_cap: int) -> ModeSpace:
    return ModeSpace(
        ("a", "C", "E"),
        n_cap=photon_cap + N,
        per_mode_cap={"a": photon_cap},
        group_caps=((("C", "E"), N),),
    )


def _flip(space: ModeSpace, N: int, to: str | None, frm: str | None) -> sp.csr_matrix:
    """b_to^+ b_frm on the atomic labels; ``None`` stands for the ground level b."""
    occ = space.occupations
    ic, ie = space.mode_index("C"), space.mode_index("E")
    nb = N - occ[:, ic] - occ[:, ie]
    col = np.arange(space.dim)
    new = occ.copy()
    amp = np.ones(space.dim)
    for label, delta in ((frm, -1), (to, +1)):
        if label is None:
            amp = amp * np.sqrt(np.maximum(nb + 1.0 if delta > 0 else nb, 0.0))
            nb = nb + delta
        else:
            j = space.mode_index(label)
            amp = amp * (np.sqrt(new[:, j] + 1.0) if delta > 0 else np.sqrt(new[:, j].astype(float)))
            new[:, j] += delta
    rows = space.index_of(new)
    ok = (rows >= 0) & (amp != 0)
    return sp.csr_matrix((amp[ok], (rows[ok], col[ok])), shape=(space.dim, space.dim), dtype=complex)


@dataclass(frozen=True)
class DickeModel:
    N: int
    space: ModeSpace
    H: LinearOperator
    E: LinearOperator
    C: LinearOperator
    T_ec: LinearOperator

    def transition(self, to: str | None, frm: str | None) -> LinearOperator:
        """Exact collective operator T_{to,frm} = sum_j sigma^j_{to,frm}
        (labels "C", "E" or None for b)."""
        shift = (0 if to is None else 1) - (0 if frm is None else 1)
        return LinearOperator(self.space, _flip(self.space, self.N, to, frm), shift)


def build_dicke_model(N: int, g: float, omega: float, photon_cap: int = 1) -> DickeModel:
    """Exact H = g sqrt(N) (a E^+ + h.c.) + Omega (T_ec + h.c.) on the symmetric subspace."""
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    if N > MAX_ATOMS:
        raise ValueError(f"N={N} exceeds the exact-model cap of {MAX_ATOMS} atoms")
    if int(photon_cap) != photon_cap or photon_cap < 1:
        raise ValueError("photon_cap must be an integer >= 1")
    N = int(N)
    space = dicke_space(N, int(photon_cap))
    E = LinearOperator(space, _flip(space, N, None, "E") / np.sqrt(N), -1)
    C = LinearOperator(space, _flip(space, N, None, "C") / np.sqrt(N), -1)
    T_ec = LinearOperator(space, _flip(space, N, "E", "C"), 0)
    a = annihilator(space, "a")
    coupling = g * np.sqrt(N) * (a @ E.dag())
    H = coupling + coupling.dag() + omega * (T_ec + T_ec.dag())
    return DickeModel(N, space, H, E, C, T_ec)


def bosonization_error(N: int, excitation_level: int) -> float:
    """max ||([E, E^+] - 1) psi|| over Dicke basis states with n_c + n_e = excitation_level."""
    if excitation_level < 0:
        raise ValueError("excitation_level must be >= 0")
    if excitation_level > N:
        raise ValueError("excitation_level cannot exceed N")
    model = build_dicke_model(N, 1.0, 0.0, photon_cap=1)
    space = model.space
    defect = (model.E @ model.E.dag() - model.E.dag() @ model.E - identity(space)).matrix
    occ = space.occupations
    ia, ic, ie = (space.mode_index(x) for x in ("a", "C", "E"))
    cols = np.flatnonzero((occ[:, ia] == 0) & (occ[:, ic] + occ[:, ie] == excitation_level))
    block = defect[:, cols]
    if block.nnz == 0:
        return 0.0
    return float(np.sqrt(np.asarray(abs(block).power(2).sum(axis=0)).max()))
