"""Clifford machinery and randomized benchmarking with erasure postselection.

Cliffords are generated by breadth-first closure over the native gateset
{X(pi/2), Z(+-pi/2), Z(pi), CZ} and stored modulo global phase.  Noisy
sequences run on one qutrit per qubit (third level = detected leakage);
virtual Z gates are noiseless.  Erasure detection happens once, at the end
of a sequence, and survival is reported both raw and postselected.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import curve_fit

from .channels import QuantumChannel
from .error_channels import (CZ4, QUBIT_BLOCK, ChannelRates, ReadoutModel,
                             postselected_fidelity, qutrit_gate_channel)

__all__ = [
    "CliffordElement",
    "CliffordGroup",
    "generate_clifford_group",
    "NativeGateNoise",
    "embed_block_superop",
    "depolarizing_cz_channel",
    "RBRecord",
    "simulate_rb",
    "LinearFit",
    "fit_linear_fidelity",
    "interleaved_gate_error",
    "fit_exponential",
    "bell_decay_error",
    "IRBAccuracyResult",
    "irb_accuracy_study",
    "BitflipResult",
    "simulate_bitflip_protocol",
]

_SX = np.array([[0, 1], [1, 0]], dtype=complex)


def _rx90() -> np.ndarray:
    return expm(-0.25j * math.pi * _SX)


def _rz(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)]).astype(complex)


_ONE_QUBIT_GATES: dict[str, np.ndarray] = {
    "X90": _rx90(),
    "Z90": _rz(math.pi / 2),
    "Z-90": _rz(-math.pi / 2),
    "Z180": _rz(math.pi),
}


def _two_qubit_gateset() -> dict[str, np.ndarray]:
    eye = np.eye(2, dtype=complex)
    gates: dict[str, np.ndarray] = {}
    for name, u in _ONE_QUBIT_GATES.items():
        gates[f"{name}_c"] = np.kron(u, eye)
        gates[f"{name}_t"] = np.kron(eye, u)
    gates["CZ"] = CZ4
    return gates


def _canonical(u: np.ndarray) -> tuple[np.ndarray, bytes]:
    """Fix global phase (first non-zero entry positive real) and hash."""
    flat = u.reshape(-1)
    pivot = flat[np.argmax(np.abs(flat) > 1e-8)]
    fixed = u * (abs(pivot) / pivot)
    rounded = np.round(fixed, 6) + 0.0
    return fixed, rounded.tobytes()


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """Canonical unitary plus one generator word that replays to it."""

    unitary: np.ndarray
    word: tuple[str, ...]


@dataclass
class CliffordGroup:
    n_qubits: int
    gateset: dict[str, np.ndarray]
    elements: list[CliffordElement]
    inverses: list[int]
    _index: dict[bytes, int]

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, u: np.ndarray) -> int:
        _, key = _canonical(u)
        try:
            return self._index[key]
        except KeyError:
            raise ValueError("unitary is not in the generated Clifford group") from None

    def replay(self, word: Iterable[str]) -> np.ndarray:
        u = np.eye(2 ** self.n_qubits, dtype=complex)
        for gate in word:
            u = self.gateset[gate] @ u
        return u


_GROUP_CACHE: dict[int, CliffordGroup] = {}


def generate_clifford_group(n_qubits: int) -> CliffordGroup:
    """Breadth-first closure of the native gateset; 24 or 11520 elements."""
    if n_qubits not in (1, 2):
        raise ValueError("only 1- or 2-qubit groups are generated")
    if n_qubits in _GROUP_CACHE:
        return _GROUP_CACHE[n_qubits]
    gateset = dict(_ONE_QUBIT_GATES) if n_qubits == 1 else _two_qubit_gateset()

    dim = 2 ** n_qubits
    identity = np.eye(dim, dtype=complex)
    elements: list[CliffordElement] = []
    index: dict[bytes, int] = {}
    start, key = _canonical(identity)
    index[key] = 0
    elements.append(CliffordElement(start, ()))
    queue: deque[int] = deque([0])
    while queue:
        i = queue.popleft()
        base = elements[i]
        for name, gate in gateset.items():
            fixed, key = _canonical(gate @ base.unitary)
            if key not in index:
                index[key] = len(elements)
                elements.append(CliffordElement(fixed, base.word + (name,)))
                queue.append(index[key])

    inverses = [index[_canonical(e.unitary.conj().T)[1]] for e in elements]
    group = CliffordGroup(n_qubits=n_qubits, gateset=gateset,
                          elements=elements, inverses=inverses, _index=index)
    _GROUP_CACHE[n_qubits] = group
    return group


# --- native-gate noise ------------------------------------------------------

def _embed_single(u2: np.ndarray, qudit_dim: int) -> np.ndarray:
    out = np.eye(qudit_dim, dtype=complex)
    out[:2, :2] = u2
    return out


def _embed_unitary(u: np.ndarray, n_qubits: int, qudit_dim: int) -> np.ndarray:
    """Act with u on the logical block; leaked-qudit states idle."""
    if qudit_dim == 2:
        return u
    if n_qubits == 1:
        return _embed_single(u, qudit_dim)
    out = np.eye(qudit_dim ** 2, dtype=complex)
    block = [0, 1, qudit_dim, qudit_dim + 1]
    out[np.ix_(block, block)] = u
    return out


def _unitary_superop(u: np.ndarray) -> np.ndarray:
    return np.kron(u.conj(), u)


def _leak_kraus(p: float, qudit_dim: int) -> list[np.ndarray]:
    """Photon-loss jump to the detected-leak level of one qudit."""
    if qudit_dim == 2 or p == 0.0:
        return [np.eye(qudit_dim, dtype=complex)]
    keep = np.diag([math.sqrt(1 - p), math.sqrt(1 - p), 1.0]).astype(complex)
    j0 = np.zeros((3, 3), dtype=complex)
    j0[2, 0] = math.sqrt(p)
    j1 = np.zeros((3, 3), dtype=complex)
    j1[2, 1] = math.sqrt(p)
    return [keep, j0, j1]


def _dephase_kraus(p: float, qudit_dim: int) -> list[np.ndarray]:
    if p == 0.0:
        return [np.eye(qudit_dim, dtype=complex)]
    flip = np.diag([-1j, 1j] + [1.0] * (qudit_dim - 2)).astype(complex)
    return [math.sqrt(1 - p) * np.eye(qudit_dim, dtype=complex),
            math.sqrt(p) * flip]


def _on_qubit(kraus: list[np.ndarray], qubit: int, qudit_dim: int) -> list[np.ndarray]:
    eye = np.eye(qudit_dim, dtype=complex)
    if qubit == 0:
        return [np.kron(k, eye) for k in kraus]
    return [np.kron(eye, k) for k in kraus]


def embed_block_superop(s4: np.ndarray) -> np.ndarray:
    """Lift a 16x16 two-qubit superoperator to the two-qutrit space.

    The map acts on the codespace block and leaves every leak-level
    coherence untouched (identity elsewhere)."""
    block = np.asarray(QUBIT_BLOCK)
    out = np.zeros((81, 81), dtype=complex)
    for col in range(81):
        m = np.zeros(81, dtype=complex)
        m[col] = 1.0
        m = m.reshape(9, 9, order="F")
        sub = m[np.ix_(block, block)]
        mapped = (s4 @ sub.reshape(-1, order="F")).reshape(4, 4, order="F")
        res = m.copy()
        res[np.ix_(block, block)] = mapped
        out[:, col] = res.reshape(-1, order="F")
    return out


def depolarizing_cz_channel(decay: float) -> np.ndarray:
    """Two-qutrit superop of CZ followed by codespace depolarizing.

    decay is the depolarizing-channel eigenvalue on traceless operators,
    which is also the exact RB decay parameter; used as an oracle."""
    eye4 = np.eye(4, dtype=complex)
    dep = decay * np.eye(16, dtype=complex) + (1 - decay) * np.outer(
        eye4.reshape(-1, order="F") / 4.0, eye4.reshape(-1, order="F").conj())
    return embed_block_superop(dep @ _unitary_superop(CZ4))


@dataclass
class NativeGateNoise:
    """Superoperators for every native gate, on (qudit_dim)^n_qubits."""

    superops: dict[str, np.ndarray]
    n_qubits: int
    qudit_dim: int

    @property
    def dim(self) -> int:
        return self.qudit_dim ** self.n_qubits

    @classmethod
    def ideal(cls, n_qubits: int = 2, qudit_dim: int = 3) -> "NativeGateNoise":
        if n_qubits == 1:
            sup = {name: _unitary_superop(_embed_unitary(u, 1, qudit_dim))
                   for name, u in _ONE_QUBIT_GATES.items()}
            return cls(superops=sup, n_qubits=1, qudit_dim=qudit_dim)
        # Single-qubit natives embed as tensor factors so they keep acting
        # when the partner qudit is leaked; CZ idles any leaked state.
        eye = np.eye(qudit_dim, dtype=complex)
        sup = {}
        for name, u2 in _ONE_QUBIT_GATES.items():
            u1 = _embed_unitary(u2, 1, qudit_dim)
            sup[name + "_c"] = _unitary_superop(np.kron(u1, eye))
            sup[name + "_t"] = _unitary_superop(np.kron(eye, u1))
        sup["CZ"] = _unitary_superop(_embed_unitary(CZ4, 2, qudit_dim))
        return cls(superops=sup, n_qubits=2, qudit_dim=qudit_dim)

    @classmethod
    def coherence_limited(cls,
                          cz_rates: ChannelRates | None = None,
                          *,
                          x90_durations_us: tuple[float, float] = (0.208, 0.136),
                          rail_t1_us: tuple[tuple[float, float], tuple[float, float]] = ((231.0, 411.0), (652.0, 342.0)),
                          ramsey_tphi_us: tuple[float, float] = (3100.0, 1500.0),
                          cross_kerr: float = -2 * math.pi * 6.64e-3,
                          include_cross_kerr: bool = True) -> "NativeGateNoise":
        """Two-qubit natives with coherence-limited X(pi/2) pulses.

        Each X(pi/2) composes the ideal rotation with photon-loss leakage at
        the average rail rate and pure dephasing at the dual-rail Ramsey
        rate, over that qubit's pulse duration; the always-on cross-Kerr
        adds a deterministic phase on the |1>_c|0>_t level during the pulse.
        Z rotations are virtual and noiseless; CZ uses the fitted-rate
        qutrit channel.
        """
        cz_rates = cz_rates or ChannelRates.benchmark_fit()
        qd = 3
        base = cls.ideal(2, qd).superops
        sup = dict(base)
        for qubit, name in ((0, "X90_c"), (1, "X90_t")):
            t = x90_durations_us[qubit]
            kappa = 0.5 * (1.0 / rail_t1_us[qubit][0] + 1.0 / rail_t1_us[qubit][1])
            p_leak = 1.0 - math.exp(-kappa * t)
            p_z = 0.5 * (1.0 - math.exp(-t / ramsey_tphi_us[qubit]))
            u = _embed_unitary(_two_qubit_gateset()[name], 2, qd)
            if include_cross_kerr:
                phase = np.ones(9, dtype=complex)
                phase[3 * 1 + 0] = np.exp(-1j * cross_kerr * t)
                u = np.diag(phase) @ u
            chan = QuantumChannel(9, kraus=[u])
            chan = QuantumChannel(9, kraus=_on_qubit(_leak_kraus(p_leak, qd), qubit, qd)).compose(chan)
            chan = QuantumChannel(9, kraus=_on_qubit(_dephase_kraus(p_z, qd), qubit, qd)).compose(chan)
            sup[name] = chan.superop
        sup["CZ"] = qutrit_gate_channel(cz_rates).superop
        return cls(superops=sup, n_qubits=2, qudit_dim=qd)

    def replace(self, **gates: np.ndarray | QuantumChannel) -> "NativeGateNoise":
        sup = dict(self.superops)
        for name, value in gates.items():
            key = name.replace("_minus", "-")  # allow keyword-safe aliases
            sup[key] = value.superop if isinstance(value, QuantumChannel) else value
        return NativeGateNoise(superops=sup, n_qubits=self.n_qubits,
                               qudit_dim=self.qudit_dim)


# --- randomized benchmarking -------------------------------------------------

@dataclass
class RBRecord:
    depths: tuple[int, ...]
    seeds: tuple[int, ...]
    raw: np.ndarray            # [n_depths, n_seeds]
    postselected: np.ndarray
    kept_fraction: np.ndarray
    interleaved: str | None = None

    def mean_raw(self) -> np.ndarray:
        return self.raw.mean(axis=1)

    def mean_postselected(self) -> np.ndarray:
        return self.postselected.mean(axis=1)

    def mean_kept(self) -> np.ndarray:
        return self.kept_fraction.mean(axis=1)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["depth", "seed", "survival_raw",
                             "survival_postselected", "postselected_fraction"])
            for i, depth in enumerate(self.depths):
                for j, seed in enumerate(self.seeds):
                    writer.writerow([depth, seed,
                                     repr(float(self.raw[i, j])),
                                     repr(float(self.postselected[i, j])),
                                     repr(float(self.kept_fraction[i, j]))])


def _sequence_indices(group_size: int, depth: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, depth])
    return rng.integers(0, group_size, size=depth)


def _readout_stats(rho_vec: np.ndarray, qudit_dim: int, n_qubits: int,
                   spam: ReadoutModel | None) -> tuple[float, float]:
    """(survival of |0..0> assignment, kept fraction) from the final state."""
    dim = qudit_dim ** n_qubits
    probs = np.real(np.diag(rho_vec.reshape(dim, dim, order="F")))
    probs = np.clip(probs, 0.0, None)
    if n_qubits == 1:
        table = probs.reshape(1, dim)
        confusions = [_confusion(spam, 1, qudit_dim)]
    else:
        table = probs.reshape(qudit_dim, qudit_dim)
        confusions = [_confusion(spam, 0, qudit_dim), _confusion(spam, 1, qudit_dim)]
    if n_qubits == 1:
        observed = table[0] @ confusions[0]
        survival = observed[0]
        kept = observed[0] + observed[1] if qudit_dim == 3 else 1.0
    else:
        observed = confusions[0].T @ table @ confusions[1]
        survival = observed[0, 0]
        kept = observed[:2, :2].sum() if qudit_dim == 3 else 1.0
    return float(survival), float(kept)


def _confusion(spam: ReadoutModel | None, qubit: int, qudit_dim: int) -> np.ndarray:
    if qudit_dim == 2:
        if spam is None:
            return np.eye(2)
        full = spam.confusion_matrix(qubit)
        return full[:2, :2] / full[:2, :2].sum(axis=1, keepdims=True)
    if spam is None:
        return np.eye(3)
    return spam.confusion_matrix(qubit)


def simulate_rb(noise: NativeGateNoise,
                depths: Sequence[int],
                seeds: Sequence[int],
                *,
                interleave: str | None = None,
                interleave_unitary: np.ndarray | None = None,
                spam: ReadoutModel | None = None,
                group: CliffordGroup | None = None) -> RBRecord:
    """Erasure-aware randomized benchmarking with exact outcome statistics.

    Each (depth, seed) pair draws its Clifford sequence deterministically,
    composes the per-native-gate channels, appends the recovery Clifford,
    and reads out through the confusion matrices at the end only.  With
    interleave set (e.g. "CZ"), that gate's channel follows every
    Clifford; interleave_unitary supplies the ideal action when the name
    is a dedicated channel rather than a member of the gateset.
    """
    depths = tuple(int(d) for d in depths)
    seeds = tuple(int(s) for s in seeds)
    if not depths or min(depths) < 1:
        raise ValueError("depths must be positive")
    if not seeds:
        raise ValueError("at least one seed is required")
    group = group or generate_clifford_group(noise.n_qubits)
    if interleave is not None:
        if interleave not in noise.superops:
            raise ValueError(f"unknown interleaved gate {interleave!r}")
        if interleave_unitary is None:
            interleave_unitary = group.gateset[interleave]

    dim = noise.dim
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    vec0 = rho0.reshape(-1, order="F")

    raw = np.zeros((len(depths), len(seeds)))
    post = np.zeros_like(raw)
    kept_arr = np.zeros_like(raw)
    for i, depth in enumerate(depths):
        for j, seed in enumerate(seeds):
            indices = _sequence_indices(len(group), depth, seed)
            vec = vec0
            net = np.eye(2 ** group.n_qubits, dtype=complex)
            for idx in indices:
                element = group.elements[idx]
                for gate in element.word:
                    vec = noise.superops[gate] @ vec
                net = element.unitary @ net
                if interleave is not None:
                    vec = noise.superops[interleave] @ vec
                    net = interleave_unitary @ net
            recovery = group.elements[group.index_of(net.conj().T)]
            for gate in recovery.word:
                vec = noise.superops[gate] @ vec
            survival, kept = _readout_stats(vec, noise.qudit_dim,
                                            noise.n_qubits, spam)
            raw[i, j] = survival
            kept_arr[i, j] = kept
            post[i, j] = survival / kept if kept > 0 else 0.0
    return RBRecord(depths=depths, seeds=seeds, raw=raw, postselected=post,
                    kept_fraction=kept_arr, interleaved=interleave)


# --- estimators --------------------------------------------------------------

@dataclass
class LinearFit:
    slope: float
    intercept: float
    error_rate: float
    nonmonotonic: bool


def fit_linear_fidelity(record: RBRecord, n_qubits: int,
                        *, tolerance: float = 1e-6) -> LinearFit:
    """Short-depth linear fit of the postselected survival.

    The error per Clifford is |slope|: for survival A*p^N + B, the
    short-depth expansion gives A(1-N(1-p)), and with the fixed asymptote
    the per-step error equals the magnitude of the linear slope.
    """
    if len(record.depths) < 3:
        raise ValueError("need at least three depths for a linear fit")
    y = record.mean_postselected()
    slope, intercept = np.polyfit(np.asarray(record.depths, dtype=float), y, 1)
    nonmono = bool(np.any(np.diff(y) > tolerance))
    return LinearFit(slope=float(slope), intercept=float(intercept),
                     error_rate=float(abs(slope)), nonmonotonic=nonmono)


def interleaved_gate_error(reference: LinearFit, interleaved: LinearFit) -> float:
    """Interleaved-RB gate error from the two short-depth slopes."""
    m_r, m_i = abs(reference.slope), abs(interleaved.slope)
    return 0.75 * (m_i - m_r) / (0.75 - m_r)


def bell_decay_error(slope: float) -> float:
    """Decay parameter p = 1 - 4|m|/3 from a Bell-fidelity slope (A=3/4)."""
    return 1.0 - 4.0 * abs(slope) / 3.0


def fit_exponential(record: RBRecord) -> tuple[float, float, float, float]:
    """(p, A, B, sigma_p) from survival = A p^N + B."""
    x = np.asarray(record.depths, dtype=float)
    y = record.mean_postselected()

    def model(n, p, a, b):
        return a * np.power(p, n) + b

    p0 = (0.99, 0.75, 0.25)
    popt, pcov = curve_fit(model, x, y, p0=p0, maxfev=20000)
    sigma = float(np.sqrt(max(pcov[0, 0], 0.0)))
    return float(popt[0]), float(popt[1]), float(popt[2]), sigma


# --- IRB accuracy study ------------------------------------------------------

@dataclass
class IRBAccuracyResult:
    true_infidelity: np.ndarray
    inferred_infidelity: np.ndarray
    slope: float
    offset: float
    operating_point: tuple[float, float]

    @property
    def underestimate_at_operating_point(self) -> float:
        true_r, inferred_r = self.operating_point
        return 1.0 - inferred_r / true_r


DEFAULT_RATE_RANGES: dict[str, tuple[float, float]] = {
    "p_z": (1e-4, 2e-3),
    "p_zz": (5e-5, 2e-4),
    "p_leak": (1e-4, 4e-3),
}


def irb_accuracy_study(n_samples: int = 120,
                       *,
                       seed: int = 20260813,
                       depths: Sequence[int] = (1, 2, 3, 5, 8, 12),
                       sequence_seeds: Sequence[int] = tuple(range(20)),
                       rate_ranges: Mapping[str, tuple[float, float]] | None = None,
                       include_operating_point: bool = True) -> IRBAccuracyResult:
    """Interleaved-RB inferred error versus entanglement infidelity.

    Dephasing and leakage rates are drawn uniformly from the given ranges;
    every sample is benchmarked on the same fixed random gate sequences.
    The Cliffords themselves are ideal and the sampled channel rides only
    on the interleaved slot, so the reference slope vanishes and the study
    isolates the entangling gate.  The true value is the postselected
    entanglement infidelity of the sampled channel.
    """
    ranges = dict(DEFAULT_RATE_RANGES)
    if rate_ranges:
        ranges.update(rate_ranges)
    rng = np.random.default_rng(seed)
    base = NativeGateNoise.ideal(2, 3)
    group = generate_clifford_group(2)
    reference_fit = fit_linear_fidelity(
        simulate_rb(base, depths, sequence_seeds, group=group), 2)

    true_vals, inferred_vals = [], []
    samples = []
    for _ in range(n_samples):
        samples.append(ChannelRates(
            p_leak_control=rng.uniform(*ranges["p_leak"]),
            p_leak_target=rng.uniform(*ranges["p_leak"]),
            p_z_control=rng.uniform(*ranges["p_z"]),
            p_z_target=rng.uniform(*ranges["p_z"]),
            p_zz=rng.uniform(*ranges["p_zz"])))
    if include_operating_point:
        samples.append(ChannelRates.benchmark_fit())
    for rates in samples:
        channel = qutrit_gate_channel(rates)
        noise = base.replace(CZ_sampled=channel)
        record = simulate_rb(noise, depths, sequence_seeds,
                             interleave="CZ_sampled", interleave_unitary=CZ4,
                             group=group)
        fit = fit_linear_fidelity(record, 2, tolerance=1.0)
        inferred = interleaved_gate_error(reference_fit, fit)
        true = 1.0 - postselected_fidelity(channel, CZ4)
        true_vals.append(true)
        inferred_vals.append(inferred)

    operating = (true_vals[-1], inferred_vals[-1]) if include_operating_point else (math.nan, math.nan)
    if include_operating_point:
        true_vals, inferred_vals = true_vals[:-1], inferred_vals[:-1]
    true_arr = np.array(true_vals)
    inf_arr = np.array(inferred_vals)
    slope, offset = np.polyfit(true_arr, inf_arr, 1)
    return IRBAccuracyResult(true_infidelity=true_arr,
                             inferred_infidelity=inf_arr,
                             slope=float(slope), offset=float(offset),
                             operating_point=operating)


# --- bit-flip protocol -------------------------------------------------------

@dataclass
class BitflipResult:
    n_gates: int
    apparent_flip: float

    @property
    def per_gate(self) -> float:
        return self.apparent_flip / self.n_gates if self.n_gates else math.nan


def simulate_bitflip_protocol(initial: str,
                              n_gates: int,
                              *,
                              spectator: str = "control",
                              spam: ReadoutModel | None = None,
                              noise: NativeGateNoise | None = None) -> BitflipResult:
    """Apparent logical bit-flip fraction of an idling basis state.

    The spectator qubit holds |initial>; the other qubit runs a Ramsey
    pair of X(pi/2) pulses around n_gates CZ applications.  The returned
    fraction is the probability that readout assigns the spectator to the
    opposite basis state.  The gate never transfers population between the
    two rails, so with perfect readout the fraction is exactly zero; with
    confusion it is dominated by undetected leakage and misassignment.
    """
    if initial not in ("0", "1"):
        raise ValueError("initial state must be '0' or '1'")
    if spectator not in ("control", "target"):
        raise ValueError("spectator must be 'control' or 'target'")
    noise = noise or NativeGateNoise.coherence_limited()
    spec_q = 0 if spectator == "control" else 1
    ramsey_gate = "X90_t" if spectator == "control" else "X90_c"

    dim = noise.dim
    level = int(initial)
    idx = 3 * level if spec_q == 0 else level
    rho = np.zeros((dim, dim), dtype=complex)
    rho[idx, idx] = 1.0
    vec = rho.reshape(-1, order="F")
    vec = noise.superops[ramsey_gate] @ vec
    for _ in range(n_gates):
        vec = noise.superops["CZ"] @ vec
    vec = noise.superops[ramsey_gate] @ vec

    probs = np.clip(np.real(np.diag(vec.reshape(dim, dim, order="F"))), 0.0, None)
    table = probs.reshape(3, 3)
    marginal = table.sum(axis=1) if spec_q == 0 else table.sum(axis=0)
    confusion = _confusion(spam, spec_q, 3)
    observed = marginal @ confusion
    flipped = observed[1 - level]
    return BitflipResult(n_gates=n_gates, apparent_flip=float(flipped))
