"""Hamiltonian assembly, time grid, and control interpolation."""

import numpy as np
import pytest

from qocgrape import (
    ContractViolation,
    ControlGrid,
    HamiltonianModel,
    TimeGrid,
    assemble_hamiltonian,
    interpolate_controls,
    step_unitary,
)
from qocgrape.linalg import is_hermitian, is_unitary
from qocgrape.model import knot_bracket, step_generator

from conftest import PAULI_X, PAULI_Y, PAULI_Z


@pytest.fixture
def one_qubit():
    model = HamiltonianModel(np.zeros((2, 2)), [PAULI_X])
    grid = TimeGrid.uniform(4, 0.5)
    return model, grid


class TestConstruction:
    def test_non_hermitian_drift_rejected(self):
        with pytest.raises(ContractViolation):
            HamiltonianModel(np.array([[0, 1], [0, 0]]), [PAULI_X])

    def test_non_hermitian_control_rejected(self):
        with pytest.raises(ContractViolation):
            HamiltonianModel(np.zeros((2, 2)), [np.array([[0, 1], [0, 0]])])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            HamiltonianModel(np.zeros((2, 2)), [np.eye(4)])

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ContractViolation):
            TimeGrid(2, 1.0, np.array([0.0, 1.0, 2.5]))

    def test_decreasing_grid_rejected(self):
        with pytest.raises(ContractViolation):
            TimeGrid(2, 1.0, np.array([0.0, 1.0, 0.5]))

    def test_complex_controls_rejected(self):
        grid = TimeGrid.uniform(1, 1.0)
        with pytest.raises(ContractViolation):
            ControlGrid(np.array([[1j, 0.0]]), grid.knot_times)

    def test_nonfinite_controls_rejected(self):
        grid = TimeGrid.uniform(1, 1.0)
        with pytest.raises(ContractViolation):
            ControlGrid(np.array([[np.nan, 0.0]]), grid.knot_times)


class TestInterpolation:
    def test_knot_hit_right_closed(self):
        grid = TimeGrid.uniform(4, 1.0)
        values = np.array([[0.0, 1.0, 4.0, 9.0, 16.0]])
        controls = ControlGrid(values, grid.knot_times)
        for j in range(1, 5):
            assert interpolate_controls(float(j), controls) == pytest.approx(values[:, j])

    def test_midpoint_average(self):
        grid = TimeGrid.uniform(2, 1.0)
        controls = ControlGrid(np.array([[0.0, 2.0, 6.0]]), grid.knot_times)
        assert interpolate_controls(0.5, controls)[0] == pytest.approx(1.0)
        assert interpolate_controls(1.5, controls)[0] == pytest.approx(4.0)

    def test_direct_formula(self):
        # knots (0, 1) with values (0, 10) at t = 0.25 gives 2.5
        grid = TimeGrid.uniform(1, 1.0)
        controls = ControlGrid(np.array([[0.0, 10.0]]), grid.knot_times)
        assert interpolate_controls(0.25, controls)[0] == pytest.approx(2.5)

    def test_left_endpoint(self):
        grid = TimeGrid.uniform(1, 1.0)
        controls = ControlGrid(np.array([[3.0, 10.0]]), grid.knot_times)
        assert interpolate_controls(0.0, controls)[0] == pytest.approx(3.0)

    def test_out_of_range(self):
        grid = TimeGrid.uniform(1, 1.0)
        controls = ControlGrid(np.array([[0.0, 1.0]]), grid.knot_times)
        with pytest.raises(ContractViolation):
            interpolate_controls(-0.1, controls)
        with pytest.raises(ContractViolation):
            interpolate_controls(1.1, controls)

    def test_affine_between_knots(self):
        rng = np.random.default_rng(0)
        grid = TimeGrid.uniform(5, 0.7)
        values = rng.normal(size=(2, 6))
        controls = ControlGrid(values, grid.knot_times)
        for _ in range(50):
            i = int(rng.integers(1, 6))
            alpha = float(rng.uniform())
            t = (1 - alpha) * grid.knot_times[i - 1] + alpha * grid.knot_times[i]
            expected = (1 - alpha) * values[:, i - 1] + alpha * values[:, i]
            got = interpolate_controls(t, controls)
            assert np.allclose(got, expected, rtol=1e-14, atol=1e-14)

    def test_bracket_index(self):
        times = np.array([0.0, 1.0, 2.0])
        assert knot_bracket(0.0, times) == (1, 0.0)
        assert knot_bracket(1.0, times)[0] == 1
        assert knot_bracket(1.5, times) == (2, 0.5)
        assert knot_bracket(2.0, times) == (2, 1.0)


class TestAssembly:
    def test_zero_controls_give_drift(self):
        model = HamiltonianModel(PAULI_Z, [PAULI_X])
        assert np.array_equal(assemble_hamiltonian(model, np.zeros(1)), PAULI_Z)

    def test_scaling(self):
        model = HamiltonianModel(np.zeros((2, 2)), [PAULI_X])
        assert np.allclose(assemble_hamiltonian(model, [0.5]), 0.5 * PAULI_X)

    def test_entrywise_sum(self):
        model = HamiltonianModel(PAULI_Z, [PAULI_X, PAULI_Y])
        got = assemble_hamiltonian(model, [1.0, 2.0])
        assert np.allclose(got, PAULI_Z + PAULI_X + 2 * PAULI_Y)
        assert is_hermitian(got)

    def test_length_mismatch(self):
        model = HamiltonianModel(PAULI_Z, [PAULI_X])
        with pytest.raises(ContractViolation):
            assemble_hamiltonian(model, [1.0, 2.0])

    def test_hermiticity_preserved(self):
        rng = np.random.default_rng(1)
        model = HamiltonianModel(PAULI_Z, [PAULI_X, PAULI_Y])
        for _ in range(20):
            h = assemble_hamiltonian(model, rng.normal(size=2))
            assert is_hermitian(h, tol=1e-11)


class TestStepUnitary:
    def test_zero_hamiltonian(self, one_qubit):
        model, grid = one_qubit
        controls = ControlGrid(np.zeros((1, 5)), grid.knot_times)
        assert np.allclose(step_unitary(model, grid, controls, 0), np.eye(2), atol=1e-15)

    def test_pi_half_pulse(self):
        # constant u = 1 so the midpoint Hamiltonian is sx; dt = pi/2
        model = HamiltonianModel(np.zeros((2, 2)), [PAULI_X])
        grid = TimeGrid.uniform(1, np.pi / 2)
        controls = ControlGrid(np.ones((1, 2)), grid.knot_times)
        assert np.allclose(step_unitary(model, grid, controls, 0), -1j * PAULI_X, atol=1e-14)

    def test_diagonal_phase(self):
        model = HamiltonianModel(PAULI_Z, [PAULI_X])
        grid = TimeGrid.uniform(1, 1.0)
        controls = ControlGrid(np.zeros((1, 2)), grid.knot_times)
        got = step_unitary(model, grid, controls, 0)
        assert np.allclose(got, np.diag([np.exp(-1j), np.exp(1j)]), atol=1e-14)

    def test_midpoint_sampling(self):
        # linear ramp u(t) = t: step 0 of dt=1 sees u(0.5) = 0.5
        model = HamiltonianModel(np.zeros((2, 2)), [PAULI_X])
        grid = TimeGrid.uniform(2, 1.0)
        controls = ControlGrid(np.array([[0.0, 1.0, 2.0]]), grid.knot_times)
        gen = step_generator(model, grid, controls, 0)
        assert np.allclose(gen, -1j * 0.5 * PAULI_X, atol=1e-15)

    def test_unitary_for_any_controls(self):
        rng = np.random.default_rng(2)
        model = HamiltonianModel(PAULI_Z, [PAULI_X, PAULI_Y])
        grid = TimeGrid.uniform(3, 0.3)
        for _ in range(20):
            controls = ControlGrid(rng.normal(scale=5.0, size=(2, 4)), grid.knot_times)
            for j in range(3):
                assert is_unitary(step_unitary(model, grid, controls, j))

    def test_step_out_of_range(self, one_qubit):
        model, grid = one_qubit
        controls = ControlGrid(np.zeros((1, 5)), grid.knot_times)
        with pytest.raises(ContractViolation):
            step_unitary(model, grid, controls, 4)
