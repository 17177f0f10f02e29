"""Truncated multi-mode bosonic Fock space organised by total-excitation sector.

The basis of a :class:`ModeSpace` is the disjoint union of the sectors
``S_n = {occupation tuples summing to n}`` for ``n = 0..n_cap``.  Sectors are
stored contiguously in ascending ``n`` and each sector is ordered
lexicographically, so two constructions of the same space always produce the
same index map.  Every excitation-conserving operator is block diagonal in this
basis, which is what the rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

__all__ = [
    "TruncationError",
    "ModeSpace",
    "StateVector",
    "LinearOperator",
    "DensityMatrix",
    "make_space",
    "annihilator",
    "creator",
    "number_operator",
    "total_number_operator",
    "identity",
    "commutator",
    "vacuum",
    "basis_state",
    "fock_state",
    "coherent_state",
    "coherent_product",
    "cat_state",
    "superpose",
    "partial_trace",
    "von_neumann_entropy",
    "bipartite_entropy",
    "sector_closure_violation",
    "coherent_tail_mass",
    "sector_dimension",
]


class TruncationError(ValueError):
    """Raised when a requested state does not fit in the truncated space."""


@lru_cache(maxsize=None)
def _compositions(n_modes: int, total: int) -> np.ndarray:
    """All occupation tuples of ``n_modes`` modes summing to ``total``,
    in ascending lexicographic order."""
    if n_modes == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(n_modes - 1, total - first)
        head = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ModeSpace:
    """Labelled set of bosonic modes with a total-excitation cap.

    ``per_mode_cap`` may be an int (applied to every mode) or a mapping from
    label to cap.  ``group_caps`` bounds the summed occupation of a group of
    modes, e.g. the number of atoms available in a Dicke register.
    """

    mode_labels: tuple[str, ...]
    n_cap: int
    per_mode_cap: int | Mapping[str, int] | None = None
    group_caps: tuple[tuple[tuple[str, ...], int], ...] = ()
    occupations: np.ndarray = field(init=False, repr=False)
    sectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(self.mode_labels)
        if not labels:
            raise ValueError("mode_labels must be nonempty")
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise ValueError(f"duplicate mode labels: {dup}")
        if int(self.n_cap) < 1:
            raise ValueError(f"n_cap must be >= 1, got {self.n_cap}")
        object.__setattr__(self, "mode_labels", labels)
        object.__setattr__(self, "n_cap", int(self.n_cap))

        caps = self._caps_array()
        groups = tuple((tuple(g), int(c)) for g, c in self.group_caps)
        for g, c in groups:
            unknown = set(g) - set(labels)
            if unknown:
                raise ValueError(f"group cap names unknown modes {sorted(unknown)}")
            if c < 0:
                raise ValueError("group caps must be non-negative")
        object.__setattr__(self, "group_caps", groups)

        blocks, sector_ids = [], []
        for n in range(self.n_cap + 1):
            occ = _compositions(len(labels), n)
            mask = np.all(occ <= caps, axis=1)
            for g, c in groups:
                cols = [labels.index(x) for x in g]
                mask &= occ[:, cols].sum(axis=1) <= c
            occ = occ[mask]
            blocks.append(occ)
            sector_ids.append(np.full(occ.shape[0], n, dtype=np.int64))
        occupations = np.vstack(blocks)
        occupations.setflags(write=False)
        sectors = np.concatenate(sector_ids)
        sectors.setflags(write=False)
        object.__setattr__(self, "occupations", occupations)
        object.__setattr__(self, "sectors", sectors)

        base = self.n_cap + 1
        if len(labels) * np.log2(base) > 62:
            raise ValueError("space too large for integer basis keys")
        weights = base ** np.arange(len(labels) - 1, -1, -1, dtype=np.int64)
        keys = occupations @ weights
        order = np.argsort(keys, kind="stable")
        object.__setattr__(self, "_weights", weights)
        object.__setattr__(self, "_sorted_keys", keys[order])
        object.__setattr__(self, "_order", order)
        bounds = np.searchsorted(sectors, np.arange(self.n_cap + 2))
        object.__setattr__(self, "_bounds", bounds)

    def _caps_array(self) -> np.ndarray:
        caps = np.full(len(self.mode_labels), self.n_cap, dtype=np.int64)
        pmc = self.per_mode_cap
        if pmc is None:
            return caps
        if isinstance(pmc, Mapping):
            for label, c in pmc.items():
                if label not in self.mode_labels:
                    raise ValueError(f"per_mode_cap names unknown mode {label!r}")
                if not 0 <= int(c) <= self.n_cap:
                    raise ValueError("per_mode_cap must lie in [0, n_cap]")
                caps[self.mode_labels.index(label)] = int(c)
        else:
            if not 0 <= int(pmc) <= self.n_cap:
                raise ValueError("per_mode_cap must lie in [0, n_cap]")
            caps[:] = int(pmc)
        return caps

    # -- identity -----------------------------------------------------------
    def _signature(self):
        pmc = self.per_mode_cap
        if isinstance(pmc, Mapping):
            pmc = tuple(sorted(pmc.items()))
        return (self.mode_labels, self.n_cap, pmc, self.group_caps)

    def __eq__(self, other):
        if not isinstance(other, ModeSpace):
            return NotImplemented
        return self is other or self._signature() == other._signature()

    def __hash__(self):
        return hash(self._signature())

    # -- basis queries ------------------------------------------------------
    @property
    def dim(self) -> int:
        return int(self.occupations.shape[0])

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def mode_index(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}") from None

    def sector_slice(self, n: int) -> slice:
        if not 0 <= n <= self.n_cap:
            raise ValueError(f"sector {n} outside 0..{self.n_cap}")
        return slice(int(self._bounds[n]), int(self._bounds[n + 1]))

    def sector_dims(self) -> list[int]:
        return [int(self._bounds[n + 1] - self._bounds[n]) for n in range(self.n_cap + 1)]

    def index_of(self, occupations) -> np.ndarray:
        """Basis indices of occupation rows; -1 where a row is not in the basis."""
        occ = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        if occ.shape[1] != self.n_modes:
            raise ValueError("occupation rows have the wrong number of modes")
        inside = np.all((occ >= 0) & (occ <= self.n_cap), axis=1)
        keys = np.where(inside, occ @ self._weights, -1)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, len(self._sorted_keys) - 1)
        hit = inside & (self._sorted_keys[pos] == keys)
        return np.where(hit, self._order[pos], -1)

    def index(self, occupation: Sequence[int]) -> int:
        i = int(self.index_of(occupation)[0])
        if i < 0:
            raise KeyError(f"occupation {tuple(occupation)} not in basis")
        return i

    def subspace(self, labels: Sequence[str]) -> "ModeSpace":
        """Space of a subset of modes with the caps inherited from this one."""
        labels = tuple(labels)
        for x in labels:
            self.mode_index(x)
        pmc = self.per_mode_cap
        if isinstance(pmc, Mapping):
            pmc = {k: v for k, v in pmc.items() if k in labels} or None
        groups = tuple((g, c) for g, c in self.group_caps if set(g) <= set(labels))
        return ModeSpace(labels, self.n_cap, pmc, groups)


def make_space(labels: Iterable[str], n_cap: int, per_mode_cap=None) -> ModeSpace:
    return ModeSpace(tuple(labels), n_cap, per_mode_cap)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class StateVector:
    space: ModeSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match basis size {self.space.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        nrm = self.norm
        if nrm < 1e-300:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / nrm)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        _same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.inner(other)) ** 2 / (self.norm**2 * other.norm**2)

    def expectation(self, op: "LinearOperator") -> complex:
        _same_space(self.space, op.space)
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def sector_populations(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return np.bincount(self.space.sectors, weights=p, minlength=self.space.n_cap + 1)

    def __add__(self, other):
        _same_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other):
        _same_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, c):
        return StateVector(self.space, complex(c) * self.amplitudes)

    __rmul__ = __mul__


def _same_space(a: ModeSpace, b: ModeSpace):
    if a != b:
        raise ValueError("objects live on different mode spaces")


def vacuum(space: ModeSpace) -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    amps[0] = 1.0
    return StateVector(space, amps)


def basis_state(space: ModeSpace, occupation: Sequence[int]) -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.index(occupation)] = 1.0
    return StateVector(space, amps)


def fock_state(space: ModeSpace, occupations: Mapping[str, int]) -> StateVector:
    occ = [0] * space.n_modes
    for label, n in occupations.items():
        occ[space.mode_index(label)] = int(n)
    return basis_state(space, occ)


def coherent_tail_mass(mean_excitation: float, cap: int) -> float:
    """Poisson mass beyond ``cap`` for a coherent state of mean ``|alpha|^2``."""
    from scipy.stats import poisson

    return float(poisson.sf(cap, mean_excitation))


def _log_amplitude_table(alpha: complex, nmax: int) -> np.ndarray:
    """alpha^n / sqrt(n!) for n = 0..nmax (no exp(-|alpha|^2/2) factor)."""
    n = np.arange(nmax + 1)
    if alpha == 0:
        out = np.zeros(nmax + 1, dtype=complex)
        out[0] = 1.0
        return out
    r, phase = abs(alpha), np.angle(alpha)
    return np.exp(n * np.log(r) - 0.5 * gammaln(n + 1) + 1j * n * phase)


def coherent_product(
    space: ModeSpace,
    amplitudes: Mapping[str, complex],
    tail_tol: float = 1e-10,
    renormalize: bool = True,
) -> StateVector:
    """Product of coherent states, vacuum on modes not named in ``amplitudes``.

    Raises :class:`TruncationError` when the Poisson mass lost to truncation
    exceeds ``tail_tol``.
    """
    alphas = np.zeros(space.n_modes, dtype=complex)
    for label, a in amplitudes.items():
        alphas[space.mode_index(label)] = complex(a)
    occ = space.occupations
    active = np.nonzero(alphas)[0]
    amps = np.ones(space.dim, dtype=complex)
    for i in active:
        table = _log_amplitude_table(alphas[i], space.n_cap)
        amps *= table[occ[:, i]]
    inactive = np.setdiff1d(np.arange(space.n_modes), active)
    if inactive.size:
        amps[np.any(occ[:, inactive] != 0, axis=1)] = 0.0
    mean = float(np.sum(np.abs(alphas) ** 2))
    amps *= np.exp(-0.5 * mean)
    kept = float(np.sum(np.abs(amps) ** 2))
    tail = max(0.0, 1.0 - kept)
    if space.per_mode_cap is None and not space.group_caps:
        tail = coherent_tail_mass(mean, space.n_cap)
    if tail > tail_tol:
        raise TruncationError(
            f"coherent truncation tail {tail:.3e} exceeds tail_tol {tail_tol:.1e}; raise n_cap"
        )
    state = StateVector(space, amps)
    return state.normalize() if renormalize else state


def coherent_state(
    space: ModeSpace, label: str, alpha: complex, tail_tol: float = 1e-10
) -> StateVector:
    """Truncated, renormalised coherent state on one mode (vacuum elsewhere)."""
    return coherent_product(space, {label: alpha}, tail_tol)


def superpose(states: Sequence[StateVector], weights: Sequence[complex]) -> StateVector:
    if len(states) != len(weights) or not states:
        raise ValueError("need matching nonempty states and weights")
    space = states[0].space
    amps = np.zeros(space.dim, dtype=complex)
    for s, w in zip(states, weights):
        _same_space(space, s.space)
        amps += complex(w) * s.amplitudes
    return StateVector(space, amps)


def cat_state(
    space: ModeSpace,
    label: str,
    alpha: complex,
    beta: complex,
    sign: int = +1,
    tail_tol: float = 1e-10,
) -> StateVector:
    """(|alpha> + sign |beta>) / sqrt(N) on one mode.

    With exact coherent states N = 2 + 2 sign Re<alpha|beta>; the truncated
    branches are normalised numerically instead.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    a = coherent_state(space, label, alpha, tail_tol)
    b = coherent_state(space, label, beta, tail_tol)
    raw = superpose([a, b], [1.0, sign])
    if raw.norm < 1e-10:
        raise ValueError("degenerate cat: branches cancel (alpha == beta with minus sign)")
    return raw.normalize()


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class LinearOperator:
    """Sparse operator on a :class:`ModeSpace`.

    ``excitation_shift`` records how many quanta the operator adds (``-1``,
    ``0``, ``+1`` ...); ``None`` means no sector structure is claimed.
    """

    space: ModeSpace
    matrix: sp.csr_matrix
    excitation_shift: int | None = 0

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError("operator shape does not match the space dimension")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "LinearOperator":
        shift = None if self.excitation_shift is None else -self.excitation_shift
        return LinearOperator(self.space, self.matrix.conj().T.tocsr(), shift)

    def _combine_shift(self, other: "LinearOperator") -> int | None:
        if self.excitation_shift == other.excitation_shift:
            return self.excitation_shift
        if self.matrix.nnz == 0:
            return other.excitation_shift
        if other.matrix.nnz == 0:
            return self.excitation_shift
        return None

    def __add__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        _same_space(self.space, other.space)
        return LinearOperator(self.space, self.matrix + other.matrix, self._combine_shift(other))

    def __sub__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        _same_space(self.space, other.space)
        return LinearOperator(self.space, self.matrix - other.matrix, self._combine_shift(other))

    def __neg__(self):
        return LinearOperator(self.space, -self.matrix, self.excitation_shift)

    def __mul__(self, c):
        if isinstance(c, (LinearOperator, StateVector)):
            return NotImplemented
        return LinearOperator(self.space, complex(c) * self.matrix, self.excitation_shift)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            _same_space(self.space, other.space)
            if self.excitation_shift is None or other.excitation_shift is None:
                shift = None
            else:
                shift = self.excitation_shift + other.excitation_shift
            return LinearOperator(self.space, self.matrix @ other.matrix, shift)
        if isinstance(other, StateVector):
            _same_space(self.space, other.space)
            return StateVector(self.space, self.matrix @ other.amplitudes)
        return self.matrix @ np.asarray(other)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def sector_block(self, n: int) -> sp.csr_matrix:
        """Block mapping sector n to sector n + shift (shift-0 operators: the diagonal block)."""
        shift = self.excitation_shift or 0
        rows = self.space.sector_slice(n + shift)
        cols = self.space.sector_slice(n)
        return self.matrix[rows, cols]

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def identity(space: ModeSpace) -> LinearOperator:
    return LinearOperator(space, sp.identity(space.dim, dtype=complex, format="csr"), 0)


def annihilator(space: ModeSpace, label: str) -> LinearOperator:
    """a|..n..> = sqrt(n)|..n-1..> on the mode ``label``."""
    i = space.mode_index(label)
    occ = space.occupations
    cols = np.nonzero(occ[:, i] > 0)[0]
    lowered = occ[cols].copy()
    lowered[:, i] -= 1
    rows = space.index_of(lowered)
    if np.any(rows < 0):  # caps are downward closed, so this cannot happen
        raise RuntimeError("lowered occupation missing from basis")
    vals = np.sqrt(occ[cols, i].astype(float))
    m = sp.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim), dtype=complex)
    return LinearOperator(space, m, -1)


def creator(space: ModeSpace, label: str) -> LinearOperator:
    return annihilator(space, label).dag()


def number_operator(space: ModeSpace, label: str) -> LinearOperator:
    n = space.occupations[:, space.mode_index(label)].astype(complex)
    return LinearOperator(space, sp.diags(n, format="csr"), 0)


def total_number_operator(space: ModeSpace) -> LinearOperator:
    return LinearOperator(space, sp.diags(space.sectors.astype(complex), format="csr"), 0)


def commutator(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    return a @ b - b @ a


def sector_closure_violation(op: LinearOperator) -> float:
    """Largest |matrix element| that does not map S_n into S_{n+shift}."""
    if op.excitation_shift is None:
        raise ValueError("operator carries no excitation shift")
    coo = op.matrix.tocoo()
    sec = op.space.sectors
    bad = sec[coo.row] != sec[coo.col] + op.excitation_shift
    return float(np.max(np.abs(coo.data[bad]))) if np.any(bad) else 0.0


# ---------------------------------------------------------------------------
# reduced states


@dataclass(frozen=True)
class DensityMatrix:
    space: ModeSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError("density matrix shape does not match the space")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def validate(self, trace_tol: float = 1e-10, eig_tol: float = 1e-12) -> None:
        if abs(self.trace - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace} differs from 1")
        if self.hermiticity_error() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if self.eigenvalues().min() < -eig_tol:
            raise ValueError("density matrix has negative eigenvalues")

    def fidelity(self, state: StateVector) -> float:
        """<psi|rho|psi> for a pure reference state on the same space."""
        _same_space(self.space, state.space)
        v = state.amplitudes
        return float(np.real(np.vdot(v, self.matrix @ v)))


def _split_indices(space: ModeSpace, keep: Sequence[str]):
    keep_idx = [space.mode_index(x) for x in keep]
    if len(set(keep_idx)) != len(keep_idx):
        raise ValueError("keep labels repeat")
    if not keep_idx or len(keep_idx) == space.n_modes:
        raise ValueError("keep_labels must be a nonempty proper subset of the modes")
    rest_idx = [i for i in range(space.n_modes) if i not in keep_idx]
    reduced = space.subspace(keep)
    occ = space.occupations
    k_index = reduced.index_of(occ[:, keep_idx])
    rest_occ = occ[:, rest_idx]
    _, r_index = np.unique(rest_occ, axis=0, return_inverse=True)
    return reduced, k_index, np.asarray(r_index).ravel()


def _schmidt_matrix(state: StateVector, keep: Sequence[str]):
    reduced, k_index, r_index = _split_indices(state.space, keep)
    m = sp.csr_matrix(
        (state.amplitudes, (k_index, r_index)),
        shape=(reduced.dim, int(r_index.max()) + 1),
    )
    return reduced, m


def partial_trace(state_or_rho, keep_labels: Sequence[str]) -> DensityMatrix:
    """Reduced density matrix on ``keep_labels`` (order preserved)."""
    keep = tuple(keep_labels)
    if isinstance(state_or_rho, StateVector):
        state = state_or_rho
        nrm2 = state.norm**2
        reduced, m = _schmidt_matrix(state, keep)
        rho = (m @ m.conj().T).toarray() / nrm2
        return DensityMatrix(reduced, rho)
    if isinstance(state_or_rho, DensityMatrix):
        full = state_or_rho
        reduced, k_index, r_index = _split_indices(full.space, keep)
        rho = np.zeros((reduced.dim, reduced.dim), dtype=complex)
        order = np.argsort(r_index, kind="stable")
        bounds = np.searchsorted(r_index[order], np.arange(r_index.max() + 2))
        for r in range(r_index.max() + 1):
            members = order[bounds[r] : bounds[r + 1]]
            ks = k_index[members]
            rho[np.ix_(ks, ks)] += full.matrix[np.ix_(members, members)]
        return DensityMatrix(reduced, rho / full.trace)
    raise TypeError("partial_trace expects a StateVector or DensityMatrix")


def von_neumann_entropy(rho) -> float:
    """-tr(rho ln rho) in nats; eigenvalues in [-1e-12, 0] are treated as 0."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
        raise ValueError("density matrix is not Hermitian within 1e-10")
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if lam.min() < -1e-12:
        raise ValueError(f"density matrix has eigenvalue {lam.min():.3e} < -1e-12")
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log(lam)))


def bipartite_entropy(state: StateVector, keep_labels: Sequence[str]) -> float:
    """Entanglement entropy of a pure state across ``keep_labels | rest``.

    Uses the smaller of the two reduced Gram matrices of the Schmidt matrix.
    """
    reduced, m = _schmidt_matrix(state, tuple(keep_labels))
    nrm2 = state.norm**2
    if m.shape[0] <= m.shape[1]:
        g = (m @ m.conj().T).toarray()
    else:
        g = (m.conj().T @ m).toarray()
    return von_neumann_entropy(g / nrm2)


def sector_dimension(n_modes: int, n: int) -> int:
    """Stars-and-bars count of occupation tuples of n_modes summing to n."""
    return comb(n + n_modes - 1, n_modes - 1)
