"""Simulated tune-up experiments for the swap-wait-swap gate.

Each scan drives the same piecewise-constant schedule the gate module
builds, either as a closed-system propagator or through the master
equation, and returns the curve an operator would look at: coupler
chevrons, repeated-swap duration fringes, the erasure dip versus the
swap-back pump phase, the conditional-phase Ramsey versus wait duration,
and the single-qubit Ramsey slopes.  run_calibration_flow chains them in
tune-up order starting from deliberately perturbed guesses.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .fock import (DensityMatrix, DualRailCode, ModeRegister, OperatorMatrix,
                   build_mode_operator, codespace_projector)
from .gate import (CONTROL_CODE, TARGET_CODE, SystemParams, build_schedule,
                   derive_gate_params, ideal_unitary, wrap_angle)
from .lindblad import NoiseModel, liouvillian, propagate

__all__ = [
    "SweepResult",
    "LocalPhaseSlopes",
    "CalibrationReport",
    "chevron_scan",
    "swap_duration_scan",
    "swapback_phase_scan",
    "entangling_fringe_phase",
    "entangling_phase_scan",
    "local_ramsey_phase",
    "local_z_scan",
    "excitation_bookkeeping",
    "run_calibration_flow",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SweepResult:
    """One measured curve: a strictly increasing axis and an observable.

    2-D scans carry a second strictly increasing axis in `rows`; `values`
    is then shaped (len(rows), len(axis)).  `fixed` records the scalar
    settings the scan was taken at.
    """

    axis: np.ndarray
    values: np.ndarray
    observable: str
    axis_name: str
    fixed: dict[str, float] = field(default_factory=dict)
    rows: np.ndarray | None = None
    rows_name: str = ""

    def __post_init__(self) -> None:
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)
        if axis.ndim != 1 or axis.size == 0:
            raise ValueError("axis must be a non-empty 1-D array")
        if not np.all(np.isfinite(axis)) or not np.all(np.isfinite(values)):
            raise ValueError("sweep axis and values must be finite")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("sweep axis must be strictly increasing")
        if self.rows is None:
            if values.shape != axis.shape:
                raise ValueError(f"values shape {values.shape} does not match "
                                 f"axis length {axis.size}")
        else:
            rows = np.asarray(self.rows, dtype=float)
            object.__setattr__(self, "rows", rows)
            if np.any(np.diff(rows) <= 0):
                raise ValueError("row axis must be strictly increasing")
            if values.shape != (rows.size, axis.size):
                raise ValueError(f"values shape {values.shape} does not match "
                                 f"(rows, axis) = ({rows.size}, {axis.size})")

    @property
    def axis_step(self) -> float:
        """Grid resolution (largest axis spacing; exact on uniform grids)."""
        return float(np.max(np.diff(self.axis))) if self.axis.size > 1 else 0.0

    def argmin_axis(self) -> float:
        if self.rows is not None:
            raise ValueError("argmin_axis is defined for 1-D sweeps only")
        return float(self.axis[int(np.argmin(self.values))])

    def argmax_axis(self) -> float:
        if self.rows is not None:
            raise ValueError("argmax_axis is defined for 1-D sweeps only")
        return float(self.axis[int(np.argmax(self.values))])

    def to_csv(self, path: str | Path) -> tuple[Path, Path]:
        """Write the curve as CSV plus a JSON metadata sidecar.

        Returns (csv_path, sidecar_path).  2-D sweeps are written in long
        format with the row value in the first column.
        """
        path = Path(path)
        csv_path = path if path.suffix == ".csv" else path.with_suffix(".csv")
        lines = []
        if self.rows is None:
            lines.append(f"{self.axis_name},{self.observable}")
            for x, v in zip(self.axis, self.values):
                lines.append(f"{float(x):.17g},{float(v):.17g}")
        else:
            lines.append(f"{self.rows_name},{self.axis_name},{self.observable}")
            for r, row in zip(self.rows, self.values):
                for x, v in zip(self.axis, row):
                    lines.append(f"{float(r):.17g},{float(x):.17g},{float(v):.17g}")
        csv_path.write_text("\n".join(lines) + "\n")

        sidecar = csv_path.with_suffix(".json")
        meta = {
            "observable": self.observable,
            "axis_name": self.axis_name,
            "rows_name": self.rows_name or None,
            "fixed": {k: float(v) for k, v in sorted(self.fixed.items())},
            "shape": list(self.values.shape),
        }
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return csv_path, sidecar


def _swap_pair_register() -> ModeRegister:
    return ModeRegister((("a2", 2), ("c", 2)))


def _pair_hamiltonian(register: ModeRegister, g: float, detuning: float,
                      pump_phase: float = 0.0) -> OperatorMatrix:
    """(g/2)(e^{i phi} a2^dag c + h.c.) + detuning * n_c on the reduced pair."""
    a2 = build_mode_operator(register, "a2", "annihilate")
    c = build_mode_operator(register, "c", "annihilate")
    n_c = build_mode_operator(register, "c", "number")
    term = a2.dag().data @ c.data
    coupling = 0.5 * g * (np.exp(1j * pump_phase) * term
                          + np.exp(-1j * pump_phase) * term.conj().T)
    return OperatorMatrix(register, coupling + detuning * n_c.data)


def _restrict_to(noise: NoiseModel, register: ModeRegister) -> NoiseModel:
    """Drop noise channels on modes the register does not contain."""
    labels = set(register.labels)
    return NoiseModel(
        loss={m: r for m, r in noise.loss.items() if m in labels},
        dephasing={m: r for m, r in noise.dephasing.items() if m in labels},
        heating={m: r for m, r in noise.heating.items() if m in labels})


def chevron_scan(p: SystemParams, detunings: Sequence[float],
                 durations: Sequence[float], *,
                 noise: NoiseModel | None = None) -> SweepResult:
    """Cavity population of a photon Rabi-driven into the coupler.

    One photon starts in a2; for each pump detuning the swap drive is
    applied for each duration and the remaining a2 population recorded.
    With noise=None the evolution is unitary; otherwise the reduced
    (a2, c) master equation is integrated.
    """
    register = _swap_pair_register()
    detunings = np.asarray(detunings, dtype=float)
    durations = np.asarray(durations, dtype=float)
    psi0 = register.basis_state({"a2": 1, "c": 0})
    n_a2 = build_mode_operator(register, "a2", "number").data
    values = np.empty((detunings.size, durations.size))
    for i, delta in enumerate(detunings):
        h = _pair_hamiltonian(register, p.g_ac, delta)
        if noise is None or noise.is_trivial:
            evals, vecs = np.linalg.eigh(h.data)
            coeffs = vecs.conj().T @ psi0
            for j, t in enumerate(durations):
                psi = vecs @ (np.exp(-1j * evals * t) * coeffs)
                values[i, j] = float(np.real(psi.conj() @ n_a2 @ psi))
        else:
            gen = liouvillian(h, _restrict_to(noise, register))
            rho0 = np.outer(psi0, psi0.conj())
            for j, t in enumerate(durations):
                rho = expm(gen * t) @ rho0.reshape(-1, order="F")
                rho = rho.reshape(register.dim, register.dim, order="F")
                values[i, j] = float(np.real(np.trace(n_a2 @ rho)))
    return SweepResult(axis=durations, values=values,
                       observable="cavity_population",
                       axis_name="duration_us", rows=detunings,
                       rows_name="detuning_rad_per_us",
                       fixed={"g_ac": p.g_ac})


def swap_duration_scan(p: SystemParams, n_repeats: int,
                       durations: Sequence[float], *,
                       noise: NoiseModel | None = None) -> SweepResult:
    """Residual a2 population after an odd number of equal swap pulses.

    An exact pi pulse empties the cavity for any odd repeat count; a
    duration error epsilon leaves sin^2(n g epsilon / 2), so the dip
    sharpens linearly with the repeat count.  Even counts are rejected
    because they return the photon regardless of duration.
    """
    if n_repeats < 1 or n_repeats % 2 == 0:
        raise ValueError(f"n_repeats must be a positive odd integer, "
                         f"got {n_repeats}")
    register = _swap_pair_register()
    durations = np.asarray(durations, dtype=float)
    psi0 = register.basis_state({"a2": 1, "c": 0})
    n_a2 = build_mode_operator(register, "a2", "number").data
    h = _pair_hamiltonian(register, p.g_ac, 0.0)
    values = np.empty(durations.size)
    for j, t in enumerate(durations):
        if noise is None or noise.is_trivial:
            u = np.linalg.matrix_power(expm(-1j * h.data * t), n_repeats)
            psi = u @ psi0
            values[j] = float(np.real(psi.conj() @ n_a2 @ psi))
        else:
            step = expm(liouvillian(h, _restrict_to(noise, register)) * t)
            v = np.linalg.matrix_power(step, n_repeats) @ np.outer(
                psi0, psi0.conj()).reshape(-1, order="F")
            rho = v.reshape(register.dim, register.dim, order="F")
            values[j] = float(np.real(np.trace(n_a2 @ rho)))
    return SweepResult(axis=durations, values=values,
                       observable="cavity_population",
                       axis_name="duration_us",
                       fixed={"g_ac": p.g_ac, "n_repeats": float(n_repeats)})


def _gate_input(register: ModeRegister, control_bit: int,
                target_bit: int) -> dict[str, int]:
    occ = {label: 0 for label in register.labels}
    occ.update(CONTROL_CODE.logical_occupations(control_bit))
    occ.update(TARGET_CODE.logical_occupations(target_bit))
    return occ


def swapback_phase_scan(p: SystemParams, phases: Sequence[float], *,
                        target_interacting: bool = True,
                        t_wait: float | None = None,
                        noise: NoiseModel | None = None) -> SweepResult:
    """Erasure fraction of the full gate versus the swap-back pump phase.

    The control photon enters the coupler; with the target photon in the
    coupler-coupled rail the detuned pulses only complete the return when
    the second pump phase matches the derived value, so the erasure
    fraction dips there and peaks half a turn away.  With the target in
    the idle rail the transfer is resonant and the curve is flat.
    """
    register = ModeRegister.standard(2)
    phases = np.asarray(phases, dtype=float)
    target_bit = 0 if target_interacting else 1
    occ = _gate_input(register, 1, target_bit)
    proj = codespace_projector(register, (CONTROL_CODE, TARGET_CODE), "c").data
    values = np.empty(phases.size)
    for j, phi in enumerate(phases):
        schedule = build_schedule(p, register, t_wait=t_wait, phi_swap=float(phi))
        if noise is None or noise.is_trivial:
            psi = ideal_unitary(schedule).data @ register.basis_state(occ)
            values[j] = 1.0 - float(np.real(psi.conj() @ proj @ psi))
        else:
            rho0 = DensityMatrix.basis_state(register, occ)
            res = propagate(schedule, noise, rho0)
            values[j] = 1.0 - float(np.real(np.trace(proj @ res.state.data)))
    fixed = {"t_swap": derive_gate_params(p)[0],
             "t_wait": schedule.t_wait,
             "target_bit": float(target_bit)}
    return SweepResult(axis=phases, values=values,
                       observable="erasure_fraction",
                       axis_name="swapback_pump_phase_rad", fixed=fixed)


def _ramsey_phase(p: SystemParams, register: ModeRegister,
                  code: DualRailCode, spectator_occ: Mapping[str, int],
                  n_repeats: int, *, include_static_crosskerr: bool = False,
                  t_wait: float | None = None,
                  noise: NoiseModel | None = None) -> float:
    """Coherence phase of one dual-rail qubit in |+> after n gates."""
    lo = {label: 0 for label in register.labels}
    lo.update(spectator_occ)
    hi = dict(lo)
    lo.update(code.logical_occupations(0))
    hi.update(code.logical_occupations(1))
    i_lo, i_hi = register.basis_index(lo), register.basis_index(hi)
    schedule = build_schedule(p, register, t_wait=t_wait,
                              include_static_crosskerr=include_static_crosskerr)
    if noise is None or noise.is_trivial:
        psi = np.zeros(register.dim, dtype=complex)
        psi[i_lo] = psi[i_hi] = 1.0 / math.sqrt(2.0)
        u = ideal_unitary(schedule).data
        for _ in range(n_repeats):
            psi = u @ psi
        return float(np.angle(psi[i_hi]) - np.angle(psi[i_lo]))
    rho = np.zeros((register.dim, register.dim), dtype=complex)
    for a in (i_lo, i_hi):
        for b in (i_lo, i_hi):
            rho[a, b] = 0.5
    state = DensityMatrix(register, rho, validate=False)
    for _ in range(n_repeats):
        state = propagate(schedule, noise, state).state
    return float(np.angle(state.data[i_hi, i_lo]))


def entangling_fringe_phase(p: SystemParams, t_wait: float | None,
                            n_repeats: int, *,
                            noise: NoiseModel | None = None) -> float:
    """Wrapped conditional-phase fringe after n gates at the given wait.

    Difference of the control Ramsey phase between the two target basis
    states, with the swap-back pump phase re-derived for the wait; equals
    n times the per-gate entangling phase modulo a full turn.
    """
    register = ModeRegister.standard(2)
    phases = []
    for target_bit in (0, 1):
        spect = TARGET_CODE.logical_occupations(target_bit)
        phases.append(_ramsey_phase(p, register, CONTROL_CODE, spect,
                                    n_repeats, t_wait=t_wait, noise=noise))
    return wrap_angle(phases[1] - phases[0])


def entangling_phase_scan(p: SystemParams, wait_times: Sequence[float],
                          n_repeats: int = 1, *,
                          noise: NoiseModel | None = None) -> SweepResult:
    """Per-gate entangling phase versus wait duration.

    The fringe phase after n gates is divided by n, unwrapped onto the
    branch nearest the single-gate value; the curve crosses pi at the
    derived wait with slope equal to the coupler-target dispersive rate.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be a positive integer")
    wait_times = np.asarray(wait_times, dtype=float)
    values = np.empty(wait_times.size)
    for j, tw in enumerate(wait_times):
        theta = entangling_fringe_phase(p, float(tw), n_repeats, noise=noise)
        if n_repeats > 1:
            anchor = n_repeats * entangling_fringe_phase(p, float(tw), 1,
                                                         noise=noise)
            theta += TWO_PI * round((anchor - theta) / TWO_PI)
        values[j] = theta / n_repeats
    return SweepResult(axis=wait_times, values=values,
                       observable="entangling_phase_per_gate_rad",
                       axis_name="wait_duration_us",
                       fixed={"n_repeats": float(n_repeats)})


def local_ramsey_phase(p: SystemParams, qubit: str, n_repeats: int, *,
                       include_static_crosskerr: bool = False,
                       noise: NoiseModel | None = None) -> float:
    """Wrapped Ramsey phase of one qubit after n gates, no mid-sequence echo.

    The other qubit idles in its logical 0; the accumulated phase grows
    linearly with the repeat count.
    """
    register = ModeRegister.standard(2)
    if qubit == "control":
        code, spect = CONTROL_CODE, TARGET_CODE.logical_occupations(0)
    elif qubit == "target":
        code, spect = TARGET_CODE, CONTROL_CODE.logical_occupations(0)
    else:
        raise ValueError(f"qubit must be 'control' or 'target', got {qubit!r}")
    return _ramsey_phase(p, register, code, spect, n_repeats,
                         include_static_crosskerr=include_static_crosskerr,
                         noise=noise)


@dataclass(frozen=True)
class LocalPhaseSlopes:
    """Per-gate single-qubit Z phases from the echo-free Ramsey traces."""

    control_phase_per_gate: float
    target_phase_per_gate: float


def local_z_scan(p: SystemParams, n_repeats: int = 4, *,
                 include_static_crosskerr: bool = False,
                 noise: NoiseModel | None = None) -> LocalPhaseSlopes:
    """Fit the accumulated Ramsey phase of each qubit against repeat count.

    Phases are unwrapped progressively (each point continues from the
    previous one plus the single-gate increment) and the slope of the
    line through the origin is returned per qubit.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be a positive integer")
    slopes = []
    for qubit in ("control", "target"):
        unwrapped = []
        for n in range(1, n_repeats + 1):
            theta = local_ramsey_phase(
                p, qubit, n, include_static_crosskerr=include_static_crosskerr,
                noise=noise)
            anchor = unwrapped[-1] + unwrapped[0] if unwrapped else theta
            theta += TWO_PI * round((anchor - theta) / TWO_PI)
            unwrapped.append(theta)
        counts = np.arange(1, n_repeats + 1, dtype=float)
        slope = float(counts @ np.asarray(unwrapped) / (counts @ counts))
        slopes.append(slope)
    return LocalPhaseSlopes(control_phase_per_gate=slopes[0],
                            target_phase_per_gate=slopes[1])


def excitation_bookkeeping(state: DensityMatrix) -> dict[str, float]:
    """Partition the population into codespace, coupler residual, and loss.

    Every basis state falls in exactly one bucket: coupler excited, else
    both dual-rail pairs holding one photon (codespace), else at least
    one photon missing or doubled (photon_loss).  The buckets sum to the
    trace, so 1 - codespace = coupler_residual + photon_loss.
    """
    register = state.register
    pops = np.real(np.diag(state.data))
    idx = {label: register.index(label) for label in register.labels}
    out = {"codespace": 0.0, "coupler_residual": 0.0, "photon_loss": 0.0}
    for i, pop in enumerate(pops):
        occ = register.occupations(i)
        if occ[idx["c"]] > 0:
            out["coupler_residual"] += float(pop)
            continue
        control = CONTROL_CODE.classify(occ[idx["a1"]], occ[idx["a2"]])
        target = TARGET_CODE.classify(occ[idx["b1"]], occ[idx["b2"]])
        if control != "erasure" and target != "erasure":
            out["codespace"] += float(pop)
        else:
            out["photon_loss"] += float(pop)
    return out


@dataclass(frozen=True)
class CalibrationReport:
    """Parameters recovered by one pass of the tune-up sequence.

    Each recovered value carries the grid resolution it was found at;
    the Ramsey slopes are fit results and carry no grid step.
    """

    swap_rate: float
    swap_rate_step: float
    swap_duration: float
    swap_duration_step: float
    swapback_phase: float
    swapback_phase_step: float
    wait_duration: float
    wait_duration_step: float
    control_phase_per_gate: float
    target_phase_per_gate: float


def run_calibration_flow(p: SystemParams, *, perturbation: float = 0.01,
                         chevron_points: int = 61, duration_points: int = 41,
                         phase_points: int = 128, wait_points: int = 41,
                         swap_repeats: int = 5,
                         ramsey_repeats: int = 4,
                         noise: NoiseModel | None = None) -> CalibrationReport:
    """One pass of the tune-up sequence from perturbed starting guesses.

    Grids are centered on the derived schedule parameters scaled by
    (1 + perturbation), mimicking an operator starting from a stale
    calibration, and the scans run against the true dynamics.  Order:
    chevron (swap rate), repeated-swap duration, swap-back pump phase,
    conditional-phase Ramsey (wait duration), local Z slopes.
    """
    t_swap, t_wait, _ = derive_gate_params(p)
    guess = 1.0 + perturbation
    span = 3.0 * abs(perturbation)

    # Swap rate from the resonant chevron row: only on resonance does the
    # cavity fully empty, at a duration of pi over the swap rate.
    durations = np.linspace(0.8, 1.25, chevron_points) * t_swap * guess
    detunings = np.linspace(-0.2, 0.2, 5) * p.g_ac
    chevron = chevron_scan(p, detunings, durations, noise=noise)
    resonant = chevron.values[int(np.argmin(chevron.values.min(axis=1)))]
    t_min = float(durations[int(np.argmin(resonant))])
    swap_rate = math.pi / t_min
    swap_rate_step = swap_rate * chevron.axis_step / t_min

    # Swap duration from the sharpened repeated-pulse dip.
    window = np.linspace(1.0 - span, 1.0 + span,
                         duration_points) * t_swap * guess
    dip = swap_duration_scan(p, swap_repeats, window, noise=noise)
    swap_duration = dip.argmin_axis()

    # Swap-back pump phase from the erasure dip over a full turn.
    phases = np.linspace(-math.pi, math.pi, phase_points, endpoint=False)
    dip_phi = swapback_phase_scan(p, phases, noise=noise)
    swapback_phase = dip_phi.argmin_axis()

    # Wait duration from the pi crossing of the per-gate entangling phase.
    waits = np.linspace(1.0 - span, 1.0 + span,
                        wait_points) * t_wait * guess
    fringe = entangling_phase_scan(p, waits, 1, noise=noise)
    residual = np.abs([wrap_angle(v - math.pi) for v in fringe.values])
    wait_duration = float(waits[int(np.argmin(residual))])

    slopes = local_z_scan(p, ramsey_repeats, noise=noise)
    return CalibrationReport(
        swap_rate=swap_rate, swap_rate_step=swap_rate_step,
        swap_duration=swap_duration, swap_duration_step=dip.axis_step,
        swapback_phase=swapback_phase, swapback_phase_step=dip_phi.axis_step,
        wait_duration=wait_duration, wait_duration_step=fringe.axis_step,
        control_phase_per_gate=slopes.control_phase_per_gate,
        target_phase_per_gate=slopes.target_phase_per_gate)
