"""Analytic error channels for the dual-rail controlled-Z gate.

Two-qubit channels live on the 4-dim logical space; leakage models live on
a two-qutrit space where level |2> is the detected leaked state of each
dual-rail qubit (|0> = |0_L>, |1> = |1_L>).  CZ(phi) puts e^{+i phi} on
|11>; this sign fixes the imaginary cross terms below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import QuantumChannel

__all__ = [
    "ChannelRates",
    "ReadoutModel",
    "cz_phase_unitary",
    "leakage_averaged_channel",
    "leakage_averaged_coefficients",
    "leaked_partner_channel",
    "digitized_channel",
    "qutrit_cz",
    "qutrit_dephasing_kraus",
    "embed_qubit_operator",
    "qutrit_gate_channel",
    "full_gate_channel",
    "no_jump_kraus",
    "nojump_evolve",
    "echo_cancellation_check",
    "postselected_fidelity",
    "QUBIT_BLOCK",
]

CZ4 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
# two-qutrit basis |ij> with i,j in {0,1,2}; the logical block is i,j < 2
QUBIT_BLOCK = [0, 1, 3, 4]


def cz_phase_unitary(phi: float) -> np.ndarray:
    """CZ of angle phi: diag(1, 1, 1, e^{+i phi})."""
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * phi)]).astype(complex)


def leakage_averaged_coefficients() -> np.ndarray:
    """Coefficients c_mn of sum_mn c_mn B_m rho B_n over B = (I, CZ).

    Uniform average of CZ(phi) conjugation over phi in [0, pi]:
    diagonal (1/2, 1/2), cross terms +/- i/pi.  (A widely misquoted
    constant for the cross term is 4/(3 pi); direct quadrature gives
    1/pi, which the tests enforce.)
    """
    c = 1j / math.pi
    return np.array([[0.5, c], [-c, 0.5]], dtype=complex)


def _two_operator_superop(coeff: np.ndarray, ops: list[np.ndarray]) -> np.ndarray:
    d = ops[0].shape[0]
    s = np.zeros((d * d, d * d), dtype=complex)
    for m in range(len(ops)):
        for n in range(len(ops)):
            # vec(B_m rho B_n) = (B_n^T kron B_m) vec(rho)
            s += coeff[m, n] * np.kron(ops[n].T, ops[m])
    return s


def leakage_averaged_channel() -> QuantumChannel:
    """Two-qubit channel seen by the codespace when the control photon is
    lost at a uniformly random point of its phase orbit."""
    s = _two_operator_superop(leakage_averaged_coefficients(),
                              [np.eye(4, dtype=complex), CZ4])
    return QuantumChannel(4, superop=s)


def leaked_partner_channel() -> QuantumChannel:
    """Single-qubit restriction onto the unleaked partner: half-applied Z."""
    z = np.diag([1.0, -1.0]).astype(complex)
    s = _two_operator_superop(leakage_averaged_coefficients(),
                              [np.eye(2, dtype=complex), z])
    return QuantumChannel(2, superop=s)


def digitized_channel() -> QuantumChannel:
    """50/50 mixture of I and CZ; the Clifford digitization of the above."""
    return QuantumChannel(4, kraus=[np.eye(4, dtype=complex) / math.sqrt(2),
                                    CZ4 / math.sqrt(2)])


# --- qutrit leakage models ---------------------------------------------


@dataclass(frozen=True)
class ChannelRates:
    """Per-gate error probabilities of the digitized gate channel."""

    p_leak_control: float
    p_leak_target: float
    p_z_control: float
    p_z_target: float
    p_zz: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_leak_control", "p_leak_target", "p_z_control",
                     "p_z_target", "p_zz"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.p_z_control + self.p_z_target + self.p_zz > 1.0:
            raise ValueError("dephasing probabilities exceed 1")

    @classmethod
    def benchmark_fit(cls, p_zz: float = 0.0) -> "ChannelRates":
        """Per-gate rates fitted from the leakage/dephasing decay experiments."""
        return cls(p_leak_control=0.00400, p_leak_target=0.00096,
                   p_z_control=0.00039, p_z_target=0.000112, p_zz=p_zz)


def qutrit_cz() -> np.ndarray:
    u = np.eye(9, dtype=complex)
    u[4, 4] = -1.0  # |11>
    return u


def _k3() -> np.ndarray:
    # exp(-i pi lambda3 / 2): Z on the qubit block, unit phase on |2>
    return np.diag([-1j, 1j, 1.0]).astype(complex)


def qutrit_dephasing_kraus(rates: ChannelRates) -> list[np.ndarray]:
    k3 = _k3()
    i3 = np.eye(3, dtype=complex)
    p0 = 1.0 - rates.p_z_control - rates.p_z_target - rates.p_zz
    return [math.sqrt(p0) * np.eye(9, dtype=complex),
            math.sqrt(rates.p_z_control) * np.kron(k3, i3),
            math.sqrt(rates.p_z_target) * np.kron(i3, k3),
            math.sqrt(rates.p_zz) * np.kron(k3, k3)]


def _leak_jumps(qubit: int) -> list[np.ndarray]:
    """Orthogonal jump branches |2><i| on one qutrit (TP split of the
    all-to-leaked jump; a single summed operator would not be CPTP)."""
    i3 = np.eye(3, dtype=complex)
    jumps = []
    for i in range(3):
        j = np.zeros((3, 3), dtype=complex)
        j[2, i] = 1.0
        jumps.append(np.kron(j, i3) if qubit == 0 else np.kron(i3, j))
    return jumps


def _leakage_kraus(p: float, qubit: int, *, correlated: bool) -> list[np.ndarray]:
    ops = [math.sqrt(1.0 - p) * np.eye(9, dtype=complex)]
    if p == 0.0:
        return [np.eye(9, dtype=complex)]
    cz9 = qutrit_cz()
    for j in _leak_jumps(qubit):
        if correlated:
            # leak happened mid-orbit: carry the 50/50 CZ correlation
            ops.append(math.sqrt(p / 2.0) * j)
            ops.append(math.sqrt(p / 2.0) * (j @ cz9))
        else:
            ops.append(math.sqrt(p) * j)
    return ops


def _compose_kraus(layers: list[list[np.ndarray]]) -> list[np.ndarray]:
    """Kraus set of layer_n o ... o layer_1 (layers given first-to-last)."""
    ops = [np.eye(layers[0][0].shape[0], dtype=complex)]
    for layer in layers:
        ops = [k @ op for op in ops for k in layer]
    return [op for op in ops if np.any(op)]


def qutrit_gate_channel(rates: ChannelRates) -> QuantumChannel:
    """CZ, then dephasing, then target leakage, then control leakage."""
    layers = [[qutrit_cz()],
              qutrit_dephasing_kraus(rates),
              _leakage_kraus(rates.p_leak_target, 1, correlated=False),
              _leakage_kraus(rates.p_leak_control, 0, correlated=False)]
    return QuantumChannel(9, kraus=_compose_kraus(layers))


def full_gate_channel(rates: ChannelRates) -> QuantumChannel:
    """As qutrit_gate_channel but each leakage jump carries the digitized
    CZ correlation of a mid-gate leak."""
    layers = [[qutrit_cz()],
              qutrit_dephasing_kraus(rates),
              _leakage_kraus(rates.p_leak_target, 1, correlated=True),
              _leakage_kraus(rates.p_leak_control, 0, correlated=True)]
    return QuantumChannel(9, kraus=_compose_kraus(layers))


# --- no-jump backaction --------------------------------------------------


def no_jump_kraus(p_loss_a1: float, p_loss_c: float) -> tuple[np.ndarray, float]:
    """Kraus operator of surviving the gate without a photon jump.

    The control's |0_L> photon idles with loss probability p_loss_a1; its
    |1_L> photon transits the coupler with loss probability p_loss_c.  The
    conditional (no-jump) evolution tilts the qubit by the imbalance;
    epsilon = (p_a1 - p_c)^2 / 4 is the standard small-imbalance error
    estimate for that tilt.
    """
    for name, p in (("p_loss_a1", p_loss_a1), ("p_loss_c", p_loss_c)):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"{name} must be in [0, 1), got {p}")
    op = np.diag([math.sqrt(1.0 - p_loss_a1), math.sqrt(1.0 - p_loss_c)]).astype(complex)
    eps = (p_loss_a1 - p_loss_c) ** 2 / 4.0
    return op, eps


def nojump_evolve(rho: np.ndarray, rates: tuple[float, float], t: float) -> np.ndarray:
    """Unnormalized no-jump evolution: rho_ij -> rho_ij e^{-(k_i+k_j)t/2}."""
    k = np.asarray(rates, dtype=float)
    factors = np.exp(-np.add.outer(k, k) * t / 2.0)
    return np.asarray(rho, dtype=complex) * factors


def echo_cancellation_check(kappa: float, tau: float, *, asymmetry: float = 1.0,
                            echo: bool = True, state: np.ndarray | None = None) -> float:
    """Residual distortion of the no-jump evolution with a mid-time X echo.

    kappa is the pair-averaged loss rate; internally the two levels decay
    at kappa*(1 -/+ asymmetry).  With the echo (X at tau/2, undone at tau)
    every entry scales by exactly e^{-kappa*tau}, so the normalized output
    equals the input to machine precision for any asymmetry; without it
    the state polarizes toward the less-lossy level.  Returns
    ||rho_out/Tr(rho_out) - rho_in||_F.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if state is None:
        state = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)  # |+><+|
    rates = (kappa * (1.0 - asymmetry), kappa * (1.0 + asymmetry))
    x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    if echo:
        rho = nojump_evolve(state, rates, tau / 2.0)
        rho = x @ rho @ x
        rho = nojump_evolve(rho, rates, tau / 2.0)
        rho = x @ rho @ x
    else:
        rho = nojump_evolve(state, rates, tau)
    return float(np.linalg.norm(rho / np.trace(rho) - state))


# --- postselected entanglement fidelity ----------------------------------


@dataclass(frozen=True)
class ReadoutModel:
    """Measured dual-rail assignment statistics, (control, target) pairs.

    misassignment: P(logical bit read flipped) within the codespace;
    leak_detection_error: P(a leaked qubit is assigned to the codespace);
    erasure_assignment: P(a codespace qubit is assigned to erasure).
    """

    misassignment: tuple[float, float]
    leak_detection_error: tuple[float, float]
    erasure_assignment: tuple[float, float]

    @classmethod
    def single_round(cls) -> "ReadoutModel":
        return cls(misassignment=(2.0e-4, 2.3e-4),
                   leak_detection_error=(3.46e-3, 3.90e-3),
                   erasure_assignment=(6.79e-2, 6.43e-2))

    @classmethod
    def two_round(cls) -> "ReadoutModel":
        return cls(misassignment=(7e-6, 1.2e-5),
                   leak_detection_error=(1.5e-4, 1.5e-4),
                   erasure_assignment=(1.81e-1, 1.41e-1))

    @classmethod
    def perfect(cls) -> "ReadoutModel":
        return cls(misassignment=(0.0, 0.0), leak_detection_error=(0.0, 0.0),
                   erasure_assignment=(0.0, 0.0))

    def confusion_matrix(self, qubit: int) -> np.ndarray:
        """Rows: true {0_L, 1_L, leaked}; columns: outcome {0, 1, erasure}."""
        pm = self.misassignment[qubit]
        el = self.leak_detection_error[qubit]
        pe = self.erasure_assignment[qubit]
        return np.array([
            [(1 - pe) * (1 - pm), (1 - pe) * pm, pe],
            [(1 - pe) * pm, (1 - pe) * (1 - pm), pe],
            [el / 2, el / 2, 1 - el],
        ])

    def measurement_operator(self) -> np.ndarray:
        """Codespace-assignment operator M on the two-qutrit space."""
        ms = []
        for q in range(2):
            pe = self.erasure_assignment[q]
            el = self.leak_detection_error[q]
            ms.append(np.diag([math.sqrt(1 - pe), math.sqrt(1 - pe),
                               math.sqrt(el)]).astype(complex))
        return np.kron(ms[0], ms[1])


def embed_qubit_operator(op4: np.ndarray) -> np.ndarray:
    """Place a two-qubit operator in the logical block of the two-qutrit
    space, zero elsewhere."""
    out = np.zeros((9, 9), dtype=complex)
    out[np.ix_(QUBIT_BLOCK, QUBIT_BLOCK)] = op4
    return out


def _preparation_states() -> list[np.ndarray]:
    kets1 = [np.array([1, 0]), np.array([0, 1]),
             np.array([1, 1]) / math.sqrt(2), np.array([1, 1j]) / math.sqrt(2)]
    states = []
    for a in kets1:
        for b in kets1:
            v = np.kron(a, b).astype(complex)
            states.append(np.outer(v, v.conj()))
    return states


def _pauli_4() -> list[np.ndarray]:
    from .channels import pauli_basis
    return list(pauli_basis(2))


def postselected_fidelity(channel: QuantumChannel, reference: np.ndarray,
                          readout: ReadoutModel | None = None, *,
                          max_condition: float = 1e8) -> float:
    """Entanglement fidelity to a two-qubit unitary under postselection.

    F = sum_jk alpha_jk Tr(R U_j R^dag M E(rho_k) M^dag)
        / (d^3 Tr(M E(rho_k) M^dag))
    with U_j the two-qubit Paulis expanded over the 16 product states
    rho_k of {|0>,|1>,|+>,|+i>} per qubit, R the reference, and M the
    codespace-assignment operator.  The channel may act on the 4-dim
    logical space or the 9-dim two-qutrit space.
    """
    if channel.dim not in (4, 9):
        raise ValueError("channel must act on 4-dim logical or 9-dim qutrit space")
    ref = np.asarray(reference, dtype=complex)
    if ref.shape != (4, 4):
        raise ValueError("reference must be a two-qubit unitary")

    states4 = _preparation_states()
    paulis = _pauli_4()
    basis_mat = np.column_stack([rho.reshape(-1) for rho in states4])
    cond = np.linalg.cond(basis_mat)
    if cond > max_condition:
        raise ValueError(f"state-basis expansion ill-conditioned (cond {cond:.3e})")
    alpha = np.linalg.pinv(basis_mat) @ np.column_stack(
        [u.reshape(-1) for u in paulis])  # alpha[k, j]

    qutrit = channel.dim == 9
    if qutrit:
        m = (readout or ReadoutModel.perfect()).measurement_operator()
        probes = [embed_qubit_operator(ref @ u @ ref.conj().T) for u in paulis]
        states = [embed_qubit_operator(rho) for rho in states4]
    else:
        m = np.eye(4, dtype=complex)
        probes = [ref @ u @ ref.conj().T for u in paulis]
        states = states4

    total = 0.0 + 0.0j
    for k, rho in enumerate(states):
        out = m @ channel.apply(rho) @ m.conj().T
        weight = np.trace(out)
        if abs(weight) < 1e-15:
            raise ValueError("postselection annihilated a preparation state")
        for j, probe in enumerate(probes):
            total += alpha[k, j] * np.trace(probe @ out) / (64.0 * weight)
    return float(np.real(total))
