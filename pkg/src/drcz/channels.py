"""Quantum channels with Kraus / process-matrix / superoperator views.

Conventions used throughout:
  * vec() is column-stacking, so vec(A X B) = (B^T kron A) vec(X).
  * The process (chi) matrix is taken over a plain operator basis {B_m}
    with Tr(B_m^dag B_n) = d * delta_mn (unnormalized Pauli strings by
    default), E(rho) = sum_mn chi_mn B_m rho B_n^dag.  A trace-preserving
    channel then has trace(chi) = 1.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "QuantumChannel",
    "convert_channel",
    "pauli_basis",
    "pauli_labels",
    "global_phase_distance",
    "CP_TOL",
]

CP_TOL = -1e-8
TP_TOL = 1e-10
ROUNDTRIP_TOL = 1e-10

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@lru_cache(maxsize=None)
def pauli_labels(n_qubits: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> tuple[np.ndarray, ...]:
    """Plain (unnormalized) Pauli strings, ordered I..Z lexicographically."""
    mats = []
    for label in pauli_labels(n_qubits):
        m = np.eye(1, dtype=complex)
        for ch in label:
            m = np.kron(m, _PAULI_1Q[ch])
        mats.append(m)
    return tuple(mats)


def _check_basis(basis: Sequence[np.ndarray], dim: int) -> None:
    if len(basis) != dim * dim:
        raise ValueError(f"operator basis needs {dim * dim} elements, got {len(basis)}")
    gram = np.array([[np.trace(a.conj().T @ b) for b in basis] for a in basis])
    if np.max(np.abs(gram - dim * np.eye(dim * dim))) > 1e-9:
        raise ValueError("operator basis is not orthogonal with Tr(Bm^dag Bn) = d delta_mn")


def _superop_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    d = kraus[0].shape[0]
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in kraus:
        s += np.kron(k.conj(), k)
    return s


def _choi_from_superop(superop: np.ndarray) -> np.ndarray:
    # S[(j,i),(n,m)] -> J[(m,i),(n,j)]
    d2 = superop.shape[0]
    d = int(round(np.sqrt(d2)))
    s4 = superop.reshape(d, d, d, d)
    return s4.transpose(3, 1, 2, 0).reshape(d2, d2)


def _kraus_from_choi(choi: np.ndarray, *, tol: float = 1e-12) -> tuple[list[np.ndarray], float]:
    """Eigendecompose the Choi matrix; returns (kraus list, min eigenvalue)."""
    d2 = choi.shape[0]
    d = int(round(np.sqrt(d2)))
    herm = (choi + choi.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    kraus = []
    for lam, v in zip(vals, vecs.T):
        if lam > tol:
            kraus.append(np.sqrt(lam) * v.reshape(d, d).T)
    if not kraus:
        kraus.append(np.zeros((d, d), dtype=complex))
    return kraus, float(vals.min())


def _chi_from_superop(superop: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    d2 = superop.shape[0]
    d = int(round(np.sqrt(d2)))
    n = len(basis)
    chi = np.zeros((n, n), dtype=complex)
    for m in range(n):
        for nn in range(n):
            probe = np.kron(basis[nn].conj(), basis[m])
            chi[m, nn] = np.trace(probe.conj().T @ superop) / d**2
    return chi


def _superop_from_chi(chi: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    d = basis[0].shape[0]
    s = np.zeros((d * d, d * d), dtype=complex)
    for m in range(len(basis)):
        for n in range(len(basis)):
            if chi[m, n] != 0:
                s += chi[m, n] * np.kron(basis[n].conj(), basis[m])
    return s


class QuantumChannel:
    """A completely positive map, possibly trace-decreasing.

    Construct from exactly one of `kraus`, `superop`, or `chi` (chi needs
    an operator basis, default plain Paulis when the dimension is a power
    of two).  All three representations are available as properties and
    agree to 1e-10 round-trip.
    """

    def __init__(self, dim: int, *, kraus: Sequence[np.ndarray] | None = None,
                 superop: np.ndarray | None = None, chi: np.ndarray | None = None,
                 basis: Sequence[np.ndarray] | None = None, validate: bool = True):
        given = [x is not None for x in (kraus, superop, chi)]
        if sum(given) != 1:
            raise ValueError("provide exactly one of kraus, superop, chi")
        self.dim = dim
        self._basis = tuple(basis) if basis is not None else None
        if self._basis is not None:
            _check_basis(self._basis, dim)
        self._kraus = None if kraus is None else tuple(np.asarray(k, dtype=complex) for k in kraus)
        self._superop = None if superop is None else np.asarray(superop, dtype=complex)
        self._chi = None if chi is None else np.asarray(chi, dtype=complex)
        if self._kraus is not None:
            for k in self._kraus:
                if k.shape != (dim, dim):
                    raise ValueError(f"Kraus operator shape {k.shape} != ({dim}, {dim})")
        if self._superop is not None and self._superop.shape != (dim * dim, dim * dim):
            raise ValueError("superoperator has wrong shape")
        if self._chi is not None:
            if self._basis is None:
                self._basis = self._default_basis()
            if self._chi.shape != (len(self._basis),) * 2:
                raise ValueError("chi matrix has wrong shape")
        self._cp_defect: float | None = None
        if validate:
            self._validate()

    def _default_basis(self) -> tuple[np.ndarray, ...]:
        n = int(round(np.log2(self.dim)))
        if 2**n != self.dim:
            raise ValueError("no default operator basis for non-qubit dimension; pass basis=")
        return pauli_basis(n)

    def _validate(self) -> None:
        defect = self.cp_defect
        if defect < CP_TOL:
            raise ValueError(f"channel is not CP: Choi min eigenvalue {defect:.3e}")
        comp = self.completeness_defect
        if comp > TP_TOL:
            raise ValueError(f"Kraus completeness sum exceeds identity by {comp:.3e}")

    # --- representations -------------------------------------------------

    @property
    def superop(self) -> np.ndarray:
        if self._superop is None:
            if self._kraus is not None:
                self._superop = _superop_from_kraus(self._kraus)
            else:
                self._superop = _superop_from_chi(self._chi, self._basis)
        return self._superop

    @property
    def kraus(self) -> tuple[np.ndarray, ...]:
        if self._kraus is None:
            ops, _ = _kraus_from_choi(_choi_from_superop(self.superop))
            self._kraus = tuple(ops)
        return self._kraus

    @property
    def choi(self) -> np.ndarray:
        return _choi_from_superop(self.superop)

    def chi(self, basis: Sequence[np.ndarray] | None = None) -> np.ndarray:
        if basis is None:
            if self._chi is not None:
                return self._chi
            basis = self._basis if self._basis is not None else self._default_basis()
        else:
            _check_basis(basis, self.dim)
        return _chi_from_superop(self.superop, basis)

    # --- diagnostics ------------------------------------------------------

    @property
    def cp_defect(self) -> float:
        """Min eigenvalue of the Choi matrix (negative means non-CP)."""
        if self._cp_defect is None:
            if self._kraus is not None and self._superop is None and self._chi is None:
                self._cp_defect = 0.0  # Kraus form is CP by construction
            else:
                vals = np.linalg.eigvalsh((self.choi + self.choi.conj().T) / 2)
                self._cp_defect = float(vals.min())
        return self._cp_defect

    @property
    def completeness(self) -> np.ndarray:
        """sum_k K_k^dag K_k; equals identity for trace-preserving maps."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k in self.kraus:
            out += k.conj().T @ k
        return out

    @property
    def completeness_defect(self) -> float:
        """Largest eigenvalue of (sum K^dag K - I); > 0 means super-normalized."""
        vals = np.linalg.eigvalsh(self.completeness - np.eye(self.dim))
        return float(vals.max())

    @property
    def is_trace_preserving(self) -> bool:
        return bool(np.max(np.abs(self.completeness - np.eye(self.dim))) < 1e-9)

    # --- actions ----------------------------------------------------------

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        vec = rho.reshape(-1, order="F")
        out = self.superop @ vec
        return out.reshape(self.dim, self.dim, order="F")

    def compose(self, earlier: "QuantumChannel") -> "QuantumChannel":
        """Channel equal to `self` applied after `earlier`."""
        return QuantumChannel(self.dim, superop=self.superop @ earlier.superop,
                              validate=False)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        ops = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return QuantumChannel(self.dim * other.dim, kraus=ops, validate=False)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "QuantumChannel":
        u = np.asarray(u, dtype=complex)
        return cls(u.shape[0], kraus=[u])

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls(dim, kraus=[np.eye(dim, dtype=complex)])


def convert_channel(channel: QuantumChannel, target: str,
                    basis: Sequence[np.ndarray] | None = None):
    """Return the requested representation of a channel.

    target is one of {"kraus", "superop", "chi"}.  Conversion to Kraus
    requires complete positivity; a Choi eigenvalue below -1e-8 raises.
    """
    if target == "kraus":
        if channel.cp_defect < CP_TOL:
            raise ValueError(
                f"cannot express non-CP map (Choi min eigenvalue {channel.cp_defect:.3e}) "
                "in Kraus form")
        return channel.kraus
    if target == "superop":
        return channel.superop
    if target == "chi":
        return channel.chi(basis)
    raise ValueError(f"unknown representation {target!r}")


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Operator-norm distance between unitaries after optimal global phase."""
    tr = np.trace(u.conj().T @ v)
    phase = tr / abs(tr) if abs(tr) > 1e-15 else 1.0
    return float(np.linalg.norm(u - v / phase, ord=2))
