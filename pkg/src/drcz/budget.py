"""Per-gate error budget and coherence-limit scalings.

The budget partitions the output of one noisy gate, averaged over a
codespace input ensemble, into nine disjoint outcome classes.  Five are
photon-occupancy classes of the final state: loss of the control photon,
loss of the target photon, loss of both, the control photon stuck in the
coupler with the target intact, and a coupler excitation with the target
photon also gone.  The remaining codespace weight is split between
``no_error`` and the three Z-type dephasing classes in proportion to the
matching chi-error diagonal entries of the codespace-conditioned gate
channel, referenced to the exact noiseless gate so the deterministic
local frame does not count as error.  (The chi-error diagonal carries no
measurable X/Y weight at the calibrated operating point; renormalizing
over the four Z-type entries makes the nine classes an exact partition.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import QuantumChannel
from .config import DeviceConfig
from .fock import DensityMatrix, ModeRegister
from .gate import (CONTROL_CODE, TARGET_CODE, GateSchedule, SystemParams,
                   build_schedule, codespace_basis_indices, codespace_block,
                   ideal_unitary)
from .lindblad import SPARSE_THRESHOLD, NoiseModel, gate_superoperator, propagate
from .tomography import chi_error

__all__ = ["ErrorBudget", "CoherenceLimits", "compute_error_budget", "fundamental_limits"]

SUM_TOL = 1e-6

# Plain two-qubit Pauli labels are ordered lexicographically (II, IX, ...,
# ZZ) with the first letter acting on the control; the Z-type diagonal
# entries sit at these flat indices.
_IDX_II, _IDX_IZ, _IDX_ZI, _IDX_ZZ = 0, 3, 12, 15


@dataclass(frozen=True)
class ErrorBudget:
    """Probabilities of the disjoint per-gate outcome classes.

    All entries are nonnegative and sum to one (within ``SUM_TOL``); the
    five loss entries and the codespace weight come from occupancy
    classes of the gate output, the Z split from chi-error diagonals.
    """

    control_loss: float
    target_loss: float
    double_loss: float
    stuck_in_coupler: float
    lone_coupler_excitation: float
    control_z: float
    target_z: float
    zz: float
    no_error: float

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        total = self.total
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"budget entries sum to {total!r}, not 1")

    def as_dict(self) -> dict[str, float]:
        return {
            "control_loss": self.control_loss,
            "target_loss": self.target_loss,
            "double_loss": self.double_loss,
            "stuck_in_coupler": self.stuck_in_coupler,
            "lone_coupler_excitation": self.lone_coupler_excitation,
            "control_z": self.control_z,
            "target_z": self.target_z,
            "zz": self.zz,
            "no_error": self.no_error,
        }

    @property
    def total(self) -> float:
        return float(sum(self.as_dict().values()))

    @property
    def erasure_total(self) -> float:
        """Everything heralded by an occupancy change."""
        return (self.control_loss + self.target_loss + self.double_loss
                + self.stuck_in_coupler + self.lone_coupler_excitation)


def _gate_outputs(schedule: GateSchedule, noise: NoiseModel,
                  inputs: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Apply the whole-gate map to a batch of (not necessarily Hermitian)
    input matrices; dense superoperator below the sparse threshold."""
    register = schedule.register
    d = register.dim
    if d <= SPARSE_THRESHOLD:
        s = gate_superoperator(schedule, noise)
        return [(s @ m.reshape(-1, order="F")).reshape((d, d), order="F")
                for m in inputs]
    out = []
    for m in inputs:
        result = propagate(schedule, noise, DensityMatrix(register, m, validate=False))
        out.append(result.state.data)
    return out


def _population_classes(register: ModeRegister, rho: np.ndarray) -> dict[str, float]:
    """Split the state's diagonal weight into the occupancy classes."""
    labels = list(register.labels)
    i_a1, i_a2 = labels.index("a1"), labels.index("a2")
    i_b1, i_b2 = labels.index("b1"), labels.index("b2")
    i_c = labels.index("c")
    pops = {"codespace": 0.0, "control_loss": 0.0, "target_loss": 0.0,
            "double_loss": 0.0, "stuck_in_coupler": 0.0,
            "lone_coupler_excitation": 0.0}
    for k, weight in enumerate(np.real(np.diag(rho))):
        occ = register.occupations(k)
        target = TARGET_CODE.classify(occ[i_b1], occ[i_b2])
        if occ[i_c] >= 1:
            key = "stuck_in_coupler" if target != "erasure" else "lone_coupler_excitation"
        else:
            control = CONTROL_CODE.classify(occ[i_a1], occ[i_a2])
            if control != "erasure" and target != "erasure":
                key = "codespace"
            elif control == "erasure" and target == "erasure":
                key = "double_loss"
            elif control == "erasure":
                key = "control_loss"
            else:
                key = "target_loss"
        pops[key] += float(weight)
    return pops


def compute_error_budget(config: DeviceConfig | SystemParams, *,
                         ensemble: Sequence[float] | None = None,
                         truncation: int = 2,
                         include_static_crosskerr: bool = False) -> ErrorBudget:
    """Propagate one gate through the master equation and classify the output.

    ``ensemble`` weights the four codespace basis inputs for the occupancy
    classes (uniform by default); the Z split always uses the full
    codespace-conditioned process, which is what a phase-sensitive input
    ensemble would reconstruct.
    """
    p = config.system_params() if isinstance(config, DeviceConfig) else config
    register = ModeRegister.standard(truncation)
    schedule = build_schedule(p, register,
                              include_static_crosskerr=include_static_crosskerr)
    noise = NoiseModel.from_params(p)
    idx = codespace_basis_indices(register)

    if ensemble is None:
        weights = np.full(4, 0.25)
    else:
        weights = np.asarray(ensemble, dtype=float)
        if weights.shape != (4,) or np.any(weights < 0.0):
            raise ValueError("ensemble must be four nonnegative weights")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"ensemble weights sum to {weights.sum()!r}, not 1")

    d = register.dim
    units = []
    for b in range(4):
        for a in range(4):
            m = np.zeros((d, d), dtype=complex)
            m[idx[a], idx[b]] = 1.0
            units.append(m)
    outs = _gate_outputs(schedule, noise, units)

    rho_mix = sum(w * outs[5 * k] for k, w in enumerate(weights))
    pops = _population_classes(register, rho_mix)
    code_mass = pops.pop("codespace")

    s4 = np.zeros((16, 16), dtype=complex)
    for col, out in enumerate(outs):
        s4[:, col] = out[np.ix_(idx, idx)].reshape(-1, order="F")
    conditioned = QuantumChannel(4, superop=s4, validate=False)
    reference = codespace_block(ideal_unitary(schedule))
    chi_err = chi_error(conditioned.chi(), reference)
    diag = np.clip(np.real(np.diag(chi_err)), 0.0, None)
    z_diag = diag[[_IDX_II, _IDX_IZ, _IDX_ZI, _IDX_ZZ]]
    fractions = z_diag / z_diag.sum()

    clip = lambda v: max(0.0, float(v))
    return ErrorBudget(
        control_loss=clip(pops["control_loss"]),
        target_loss=clip(pops["target_loss"]),
        double_loss=clip(pops["double_loss"]),
        stuck_in_coupler=clip(pops["stuck_in_coupler"]),
        lone_coupler_excitation=clip(pops["lone_coupler_excitation"]),
        no_error=clip(code_mass * fractions[0]),
        target_z=clip(code_mass * fractions[1]),
        control_z=clip(code_mass * fractions[2]),
        zz=clip(code_mass * fractions[3]),
    )


@dataclass(frozen=True)
class CoherenceLimits:
    """Coherence-limit scalings of the four error classes, per gate up to
    order-one prefactors, plus the bound on the erasure-to-Z bias."""

    erasure_control: float
    erasure_target: float
    dephasing_control: float
    dephasing_target: float
    bias_bound: float

    def as_dict(self) -> dict[str, float]:
        return {
            "erasure_control": self.erasure_control,
            "erasure_target": self.erasure_target,
            "dephasing_control": self.dephasing_control,
            "dephasing_target": self.dephasing_target,
            "bias_bound": self.bias_bound,
        }


def fundamental_limits(hybridization: float, anharmonicity: float,
                       t1_coupler: float, tphi_coupler: float) -> CoherenceLimits:
    """Error-rate scalings set by the coupler coherence and hybridization.

    With hybridization ``G`` of the interacting rail and coupler
    anharmonicity ``alpha`` (rad/us), the per-gate rates scale as

        erasure_control   ~ 1 / (G * alpha * T1)
        erasure_target    ~ 1 / (alpha * T1)
        dephasing_control ~ 1 / (G * alpha * Tphi)
        dephasing_target  ~ G / (alpha * Tphi)

    so weak hybridization buys target-side dephasing suppression at the
    cost of a slower gate (more control-side exposure), and the target's
    erasure-to-dephasing bias is bounded by 1/G^2.
    """
    if not 0.0 < hybridization <= 1.0:
        raise ValueError(f"hybridization must lie in (0, 1], got {hybridization}")
    for name, value in (("anharmonicity", anharmonicity),
                        ("t1_coupler", t1_coupler),
                        ("tphi_coupler", tphi_coupler)):
        if not value > 0.0:
            raise ValueError(f"{name} must be positive, got {value}")
    g = hybridization
    e1 = 1.0 / (anharmonicity * t1_coupler)
    z1 = 1.0 / (anharmonicity * tphi_coupler)
    return CoherenceLimits(
        erasure_control=e1 / g,
        erasure_target=e1,
        dephasing_control=z1 / g,
        dephasing_target=z1 * g,
        bias_bound=1.0 / g**2,
    )
