"""Liouvillian construction, schedule propagation, and conditioning."""
import math

import numpy as np
import pytest
from scipy.linalg import expm

from drcz.fock import (
    DensityMatrix,
    DualRailCode,
    ModeRegister,
    OperatorMatrix,
    build_mode_operator,
    codespace_projector,
)
from drcz.gate import SystemParams, build_schedule, ideal_unitary
from drcz.lindblad import (
    SPARSE_THRESHOLD,
    NoiseModel,
    collapse_operators,
    condition,
    gate_superoperator,
    liouvillian,
    propagate,
)


def test_noise_model_validation_and_helpers():
    with pytest.raises(ValueError, match="must be >= 0"):
        NoiseModel(loss={"a1": -0.1})
    assert NoiseModel.none().is_trivial
    assert not NoiseModel(loss={"a1": 0.1}).is_trivial
    assert NoiseModel(loss={"a1": 0.0}).is_trivial
    restricted = NoiseModel(loss={"a1": 1.0, "b1": 2.0},
                            dephasing={"c": 3.0}).restricted(loss_modes={"b1"})
    assert restricted.loss == {"b1": 2.0}
    assert restricted.dephasing == {"c": 3.0}


def test_from_params_inverts_coherence_times(table_params):
    noise = NoiseModel.from_params(table_params)
    assert noise.loss["a1"] == pytest.approx(1.0 / 231.0)
    assert noise.dephasing["c"] == pytest.approx(1.0 / 1001.0)
    # infinite times are dropped entirely
    p = SystemParams(chi_bc=-1.0, chi_ac=0.0, chi_ab=0.0, g_ac=2.0,
                     t1={"a1": math.inf}, tphi={})
    assert NoiseModel.from_params(p).is_trivial


def test_collapse_operator_rates():
    reg = ModeRegister.from_dims(("m",), 2)
    ops = collapse_operators(reg, NoiseModel(loss={"m": 0.04}, dephasing={"m": 0.09}))
    assert len(ops) == 2
    a = build_mode_operator(reg, "m", "annihilate").data
    n = build_mode_operator(reg, "m", "number").data
    np.testing.assert_allclose(ops[0], math.sqrt(0.04) * a)
    np.testing.assert_allclose(ops[1], math.sqrt(2 * 0.09) * n)
    # zero rates contribute no operator
    assert collapse_operators(reg, NoiseModel(loss={"m": 0.0})) == []


def test_liouvillian_rejects_non_hermitian_hamiltonian():
    reg = ModeRegister.from_dims(("m",), 2)
    h = OperatorMatrix(reg, np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
    with pytest.raises(ValueError, match="Hermitian"):
        liouvillian(h, NoiseModel.none())


def test_amplitude_damping_analytic_decay():
    reg = ModeRegister.from_dims(("m",), 2)
    h = OperatorMatrix(reg, np.zeros((2, 2), dtype=complex))
    kappa, t = 0.31, 1.7
    gen = liouvillian(h, NoiseModel(loss={"m": kappa}))
    rho0 = np.array([[0.25, 0.4], [0.4, 0.75]], dtype=complex)
    rho = (expm(gen * t) @ rho0.reshape(-1, order="F")).reshape(2, 2, order="F")
    assert rho[1, 1] == pytest.approx(0.75 * math.exp(-kappa * t), rel=1e-10)
    assert rho[0, 1] == pytest.approx(0.4 * math.exp(-kappa * t / 2), rel=1e-10)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)


def test_dephasing_analytic_decay():
    # sqrt(2/Tphi) n gives coherence decay exp(-t/Tphi) between n=0 and n=1
    reg = ModeRegister.from_dims(("m",), 2)
    h = OperatorMatrix(reg, np.zeros((2, 2), dtype=complex))
    kphi, t = 0.2, 2.3
    gen = liouvillian(h, NoiseModel(dephasing={"m": kphi}))
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    rho = (expm(gen * t) @ rho0.reshape(-1, order="F")).reshape(2, 2, order="F")
    assert rho[0, 1] == pytest.approx(0.5 * math.exp(-kphi * t), rel=1e-10)
    assert rho[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_sparse_and_dense_liouvillians_agree():
    reg = ModeRegister.from_dims(("m", "p"), 2)
    a = build_mode_operator(reg, "m", "annihilate")
    h = OperatorMatrix(reg, (a @ a.dag()).data + (a.dag() @ a).data)
    noise = NoiseModel(loss={"m": 0.1}, dephasing={"p": 0.05})
    dense = liouvillian(h, noise)
    sparse = liouvillian(h, noise, sparse=True)
    np.testing.assert_allclose(sparse.toarray(), dense, atol=1e-14)


def test_noiseless_propagation_matches_unitary(table_params, register2):
    schedule = build_schedule(table_params, register2)
    u = ideal_unitary(schedule).data
    rho0 = DensityMatrix.basis_state(register2, {"a2": 1, "b1": 1})
    result = propagate(schedule, NoiseModel.none(), rho0)
    expected = u @ rho0.data @ u.conj().T
    np.testing.assert_allclose(result.state.data, expected, atol=1e-9)
    assert result.elapsed == pytest.approx(schedule.total_duration)


def test_propagate_register_mismatch_raises(table_params, register2):
    schedule = build_schedule(table_params, register2)
    other = DensityMatrix.basis_state(ModeRegister.standard(3), {"a1": 1, "b1": 1})
    with pytest.raises(ValueError, match="register"):
        propagate(schedule, NoiseModel.none(), other)


def test_propagate_partition_probabilities(table_params, register2):
    schedule = build_schedule(table_params, register2)
    noise = NoiseModel.from_params(table_params)
    proj = codespace_projector(register2, (DualRailCode("a1", "a2"),
                                           DualRailCode("b1", "b2")), "c")
    rho0 = DensityMatrix.basis_state(register2, {"a1": 1, "b1": 1})
    result = propagate(schedule, noise, rho0, partition={"codespace": proj})
    assert 0.99 < result.probabilities["codespace"] < 1.0
    assert result.state.trace == pytest.approx(1.0, abs=1e-10)


def test_gate_superoperator_matches_propagate(table_params, register2):
    schedule = build_schedule(table_params, register2)
    noise = NoiseModel.from_params(table_params)
    s = gate_superoperator(schedule, noise)
    rho0 = DensityMatrix.basis_state(register2, {"a2": 1, "b1": 1})
    via_superop = (s @ rho0.data.reshape(-1, order="F")).reshape(
        register2.dim, register2.dim, order="F")
    direct = propagate(schedule, noise, rho0).state.data
    np.testing.assert_allclose(via_superop, direct, atol=1e-10)


def test_gate_superoperator_refuses_large_registers(table_params):
    reg = ModeRegister.standard(3)
    assert reg.dim > SPARSE_THRESHOLD
    schedule = build_schedule(table_params, reg)
    with pytest.raises(ValueError, match="propagate"):
        gate_superoperator(schedule, NoiseModel.none())


def test_sparse_propagation_path(table_params):
    # above the threshold the same schedule streams through expm_multiply
    reg = ModeRegister.standard(3)
    schedule = build_schedule(table_params, reg)
    rho0 = DensityMatrix.basis_state(reg, {"a2": 1, "b2": 1})
    result = propagate(schedule, NoiseModel.none(), rho0)
    proj = codespace_projector(reg, (DualRailCode("a1", "a2"),
                                     DualRailCode("b1", "b2")), "c")
    assert np.real(np.trace(proj.data @ result.state.data)) == pytest.approx(1.0, abs=1e-9)
    assert result.state.trace == pytest.approx(1.0, abs=1e-9)


def test_condition_projects_and_renormalizes(register2):
    proj = codespace_projector(register2, (DualRailCode("a1", "a2"),
                                           DualRailCode("b1", "b2")), "c")
    inside = DensityMatrix.basis_state(register2, {"a1": 1, "b1": 1})
    outside = DensityMatrix.basis_state(register2, {"c": 1})
    mixed = DensityMatrix(register2, 0.25 * inside.data + 0.75 * outside.data)
    state, fraction = condition(mixed, proj)
    assert fraction == pytest.approx(0.25)
    assert state.trace == pytest.approx(1.0)
    np.testing.assert_allclose(state.data, inside.data, atol=1e-12)
    with pytest.raises(ValueError, match="null outcome"):
        condition(outside, proj)
    bad = OperatorMatrix(register2, 0.5 * np.eye(register2.dim, dtype=complex))
    with pytest.raises(ValueError, match="idempotent"):
        condition(inside, bad)
