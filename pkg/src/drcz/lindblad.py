"""Open-system propagation of gate schedules under loss and dephasing.

Generators are vectorized with column stacking (vec(A X B) = (B^T kron A)
vec(X)) and exponentiated exactly per piecewise-constant segment.  The
dephasing dissipator is sqrt(2/Tphi) * n so that a lone dephasing channel
decays a Fock-adjacent coherence as exactly exp(-t/Tphi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .fock import DensityMatrix, ModeRegister, OperatorMatrix, build_mode_operator
from .gate import GateSchedule, SystemParams

__all__ = [
    "NoiseModel",
    "PropagationResult",
    "collapse_operators",
    "liouvillian",
    "propagate",
    "condition",
    "gate_superoperator",
    "SPARSE_THRESHOLD",
]

# superoperators above this Hilbert dimension go through the sparse path
SPARSE_THRESHOLD = 64


@dataclass(frozen=True)
class NoiseModel:
    """Per-mode loss (1/T1) and white-noise dephasing (1/Tphi) rates, 1/µs.

    `heating` adds upward jumps (a^dag) for truncation >= 3 studies; it is
    empty by default since heating is ~1000x rarer than decay here.
    """

    loss: Mapping[str, float] = field(default_factory=dict)
    dephasing: Mapping[str, float] = field(default_factory=dict)
    heating: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, rates in (("loss", self.loss), ("dephasing", self.dephasing),
                            ("heating", self.heating)):
            for label, rate in rates.items():
                if rate < 0:
                    raise ValueError(f"{name}[{label!r}] must be >= 0, got {rate}")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def from_params(cls, p: SystemParams) -> "NoiseModel":
        """1/T1 and 1/Tphi for every finite coherence time in the params."""
        loss = {m: 1.0 / t for m, t in p.t1.items() if math.isfinite(t)}
        deph = {m: 1.0 / t for m, t in p.tphi.items() if math.isfinite(t)}
        return cls(loss=loss, dephasing=deph)

    def restricted(self, *, loss_modes: set[str] | None = None,
                   dephasing_modes: set[str] | None = None) -> "NoiseModel":
        """Keep only the listed modes per channel (None keeps all)."""
        loss = {m: r for m, r in self.loss.items()
                if loss_modes is None or m in loss_modes}
        deph = {m: r for m, r in self.dephasing.items()
                if dephasing_modes is None or m in dephasing_modes}
        return NoiseModel(loss=loss, dephasing=deph, heating=dict(self.heating))

    @property
    def is_trivial(self) -> bool:
        return not (any(self.loss.values()) or any(self.dephasing.values())
                    or any(self.heating.values()))


def collapse_operators(register: ModeRegister, noise: NoiseModel) -> list[np.ndarray]:
    ops: list[np.ndarray] = []
    for label, kappa in noise.loss.items():
        if kappa > 0:
            a = build_mode_operator(register, label, "annihilate").data
            ops.append(math.sqrt(kappa) * a)
    for label, kphi in noise.dephasing.items():
        if kphi > 0:
            n = build_mode_operator(register, label, "number").data
            ops.append(math.sqrt(2.0 * kphi) * n)
    for label, kup in noise.heating.items():
        if kup > 0:
            a = build_mode_operator(register, label, "annihilate").data
            ops.append(math.sqrt(kup) * a.conj().T)
    return ops


def liouvillian(h: OperatorMatrix, noise: NoiseModel, *, sparse: bool = False):
    """Generator L with d(vec rho)/dt = L vec(rho).

    Includes -i[H, .], loss dissipators per mode, and number-operator
    dephasing dissipators per mode.  Returns a dense ndarray, or a CSR
    matrix when sparse=True.
    """
    hm = h.data
    if np.max(np.abs(hm - hm.conj().T)) > 1e-10:
        raise ValueError("Hamiltonian must be Hermitian")
    d = hm.shape[0]
    collapse = collapse_operators(h.register, noise)

    if sparse:
        kron, eye = sp.kron, sp.identity
        hm = sp.csr_matrix(hm)
        collapse = [sp.csr_matrix(c) for c in collapse]
    else:
        kron, eye = np.kron, np.eye

    ident = eye(d)
    gen = -1j * (kron(ident, hm) - kron(hm.T, ident))
    for c in collapse:
        cdc = c.conj().T @ c
        gen = gen + kron(c.conj(), c) - 0.5 * kron(ident, cdc) - 0.5 * kron(cdc.T, ident)
    return gen.tocsr() if sparse else gen


@dataclass(frozen=True)
class PropagationResult:
    state: DensityMatrix
    probabilities: dict[str, float]
    elapsed: float


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d, order="F")


def propagate(schedule: GateSchedule, noise: NoiseModel, rho0: DensityMatrix,
              partition: Mapping[str, OperatorMatrix] | None = None) -> PropagationResult:
    """exp(L_i t_i) applied in segment order; dense below SPARSE_THRESHOLD."""
    register = schedule.register
    if rho0.register != register:
        raise ValueError("input state register does not match the schedule")
    d = register.dim
    use_sparse = d > SPARSE_THRESHOLD

    v = _vec(rho0.data.copy())
    for h, dt, _ in schedule.segments:
        gen = liouvillian(h, noise, sparse=use_sparse)
        if use_sparse:
            v = expm_multiply(gen * dt, v)
        else:
            v = expm(gen * dt) @ v

    rho = _unvec(v, d)
    rho = (rho + rho.conj().T) / 2  # strip numerical asymmetry from expm
    state = DensityMatrix(register, rho, validate=False)

    probs: dict[str, float] = {}
    if partition is not None:
        for name, proj in partition.items():
            probs[name] = float(np.real(np.trace(proj.data @ rho)))
    return PropagationResult(state=state, probabilities=probs,
                             elapsed=schedule.total_duration)


def condition(result: PropagationResult | DensityMatrix,
              projector: OperatorMatrix) -> tuple[DensityMatrix, float]:
    """Project and renormalize; returns (state, postselected fraction)."""
    state = result.state if isinstance(result, PropagationResult) else result
    p = projector.data
    if np.max(np.abs(p @ p - p)) > 1e-10:
        raise ValueError("projector is not idempotent")
    sub = p @ state.data @ p
    fraction = float(np.real(np.trace(sub)))
    if fraction < 1e-15:
        raise ValueError("conditioning on a null outcome (trace < 1e-15)")
    return DensityMatrix(state.register, sub / fraction, validate=False), fraction


def gate_superoperator(schedule: GateSchedule, noise: NoiseModel) -> np.ndarray:
    """Whole-gate superoperator: ordered product of segment exponentials."""
    d = schedule.register.dim
    if d > SPARSE_THRESHOLD:
        raise ValueError(
            f"dense gate superoperator not built above dim {SPARSE_THRESHOLD}; "
            "use propagate(), which streams through the sparse path")
    out = np.eye(d * d, dtype=complex)
    for h, dt, _ in schedule.segments:
        out = expm(liouvillian(h, noise) * dt) @ out
    return out
