"""Cost terms, weighted totals, and adjoint seeds."""

import numpy as np
import pytest

from qocgrape import (
    ContractViolation,
    CostSpec,
    control_energy,
    control_smoothness,
    evaluate,
    final_state_infidelity,
    finite_difference_gradient,
    forbidden_occupation,
    gate_infidelity,
    gradient,
    running_gate_infidelity,
    running_state_infidelity,
)
from qocgrape.cost import CostSeeder

from conftest import PAULI_X, make_instance, random_unitary


class TestGateInfidelity:
    def test_exact_match(self):
        rng = np.random.default_rng(0)
        k = random_unitary(rng, 4)
        assert gate_infidelity(k, k) == pytest.approx(0.0, abs=1e-12)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(1)
        k = random_unitary(rng, 4)
        for phi in rng.uniform(0, 2 * np.pi, size=100):
            assert gate_infidelity(np.exp(1j * phi) * k, k) == pytest.approx(0.0, abs=1e-12)

    def test_traceless_target(self):
        assert gate_infidelity(np.eye(2, dtype=complex), PAULI_X) == pytest.approx(1.0)


class TestRunningTerms:
    def test_running_gate_perfect(self):
        rng = np.random.default_rng(2)
        k = random_unitary(rng, 2)
        assert running_gate_infidelity([k, k, k], k) == pytest.approx(0.0, abs=1e-12)

    def test_running_gate_single_orthogonal(self):
        assert running_gate_infidelity([np.eye(2, dtype=complex)], PAULI_X) == pytest.approx(1.0)

    def test_running_gate_two_step_arithmetic(self):
        # overlaps-squared (1, 0.5) average to 0.75, infidelity 0.25
        k_t = np.eye(2, dtype=complex)
        half = np.diag([1.0, np.exp(1j * np.pi / 2)])  # |tr/2|^2 = 0.5
        assert running_gate_infidelity([k_t, half], k_t) == pytest.approx(0.25, abs=1e-12)

    def test_running_state_two_step_arithmetic(self):
        psi_t = np.array([[1.0], [0.0]], dtype=complex)
        psi_full = psi_t
        psi_08 = np.array([[0.8], [0.6]], dtype=complex)  # overlap^2 = 0.64
        got = running_state_infidelity([psi_full, psi_08], psi_t)
        assert got == pytest.approx(0.18, abs=1e-12)

    def test_running_state_orthogonal(self):
        psi_t = np.array([[1.0], [0.0]], dtype=complex)
        psi_perp = np.array([[0.0], [1.0]], dtype=complex)
        assert running_state_infidelity([psi_perp, psi_perp], psi_t) == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            running_gate_infidelity([], np.eye(2, dtype=complex))


class TestFinalStateAndForbidden:
    def test_final_match(self):
        psi = np.array([[0.6], [0.8j]], dtype=complex)
        assert final_state_infidelity(psi, psi) == pytest.approx(0.0, abs=1e-12)

    def test_final_orthogonal(self):
        a = np.array([[1.0], [0.0]], dtype=complex)
        b = np.array([[0.0], [1.0]], dtype=complex)
        assert final_state_infidelity(a, b) == pytest.approx(1.0)

    def test_final_overlap_amplitude(self):
        a = np.array([[1.0], [0.0]], dtype=complex)
        c = np.array([[0.6], [0.8]], dtype=complex)
        assert final_state_infidelity(c, a) == pytest.approx(0.64, abs=1e-12)

    def test_forbidden_zero_when_orthogonal(self):
        a = np.array([[1.0], [0.0]], dtype=complex)
        b = np.array([[0.0], [1.0]], dtype=complex)
        assert forbidden_occupation([a, a], b) == pytest.approx(0.0)

    def test_forbidden_full_hit(self):
        a = np.array([[1.0], [0.0]], dtype=complex)
        assert forbidden_occupation([a], a) == pytest.approx(1.0)

    def test_forbidden_sums_over_steps(self):
        f = np.array([[1.0], [0.0]], dtype=complex)
        half = np.array([[0.5], [np.sqrt(0.75)]], dtype=complex)  # overlap^2 = 0.25
        assert forbidden_occupation([half, half], f) == pytest.approx(0.5, abs=1e-12)


class TestControlTerms:
    def test_energy(self):
        assert control_energy(np.zeros((2, 3))) == 0.0
        assert control_energy(np.array([[3.0]])) == 9.0
        assert control_energy(np.array([[1.0, 2.0], [2.0, 1.0]])) == 10.0

    def test_smoothness(self):
        assert control_smoothness(np.full((2, 4), 1.3)) == 0.0
        assert control_smoothness(np.array([[0.0, 1.0, 0.0]])) == pytest.approx(2.0)
        assert control_smoothness(np.array([[0.0, 2.0]])) == pytest.approx(4.0)


class TestTotalCost:
    def test_linear_in_weights(self):
        model, grid, controls, spec, psi0 = make_instance(2, 8, seed=3, all_terms=True)
        _, base = evaluate(model, grid, controls, spec, psi0)
        doubled = CostSpec(
            w_gate=2 * spec.w_gate,
            w_running_gate=spec.w_running_gate,
            w_running_state=spec.w_running_state,
            w_final_state=spec.w_final_state,
            w_energy=spec.w_energy,
            w_smoothness=spec.w_smoothness,
            w_forbidden=spec.w_forbidden,
            target_gate=spec.target_gate,
            target_states=spec.target_states,
            forbidden_states=spec.forbidden_states,
        )
        _, up = evaluate(model, grid, controls, doubled, psi0)
        assert up.total - base.total == pytest.approx(
            spec.w_gate * base.gate_infidelity, rel=1e-12
        )

    def test_terms_in_unit_range(self):
        model, grid, controls, spec, psi0 = make_instance(2, 10, seed=4, all_terms=True)
        _, report = evaluate(model, grid, controls, spec, psi0)
        eps = 1e-12
        for name in ("gate_infidelity", "running_gate_infidelity",
                     "running_state_infidelity", "final_state_infidelity"):
            val = getattr(report, name)
            assert -eps <= val <= 1 + eps
        assert report.control_energy >= 0
        assert report.control_smoothness >= 0
        assert report.forbidden_occupation >= 0

    def test_missing_targets_skipped_when_unweighted(self):
        model, grid, controls, _, _ = make_instance(1, 4, seed=5)
        spec = CostSpec(w_energy=1.0)
        _, report = evaluate(model, grid, controls, spec)
        assert report.gate_infidelity == 0.0
        assert report.total == pytest.approx(report.control_energy)

    def test_weight_without_target_rejected(self):
        with pytest.raises(ContractViolation):
            CostSpec(w_gate=1.0)
        with pytest.raises(ContractViolation):
            CostSpec(w_final_state=1.0)

    def test_nonunitary_target_rejected(self):
        with pytest.raises(ContractViolation):
            CostSpec(w_gate=1.0, target_gate=2 * np.eye(2))


class TestSeeds:
    def test_all_weights_zero_gives_no_seeds(self):
        rng = np.random.default_rng(6)
        spec = CostSpec()
        seeder = CostSeeder(spec, n_steps=5)
        assert seeder.propagator_seed(random_unitary(rng, 2), 5) is None
        assert np.array_equal(seeder.control_seed(np.ones((1, 6))), np.zeros((1, 6)))

    def test_energy_seed_is_two_u(self):
        spec = CostSpec(w_energy=1.0)
        seeder = CostSeeder(spec, n_steps=3)
        u = np.arange(8.0).reshape(2, 4)
        assert np.allclose(seeder.control_seed(u), 2 * u)

    def test_each_term_matches_finite_differences(self):
        # activate one term at a time and compare the full gradient to FD
        model, grid, controls, full, psi0 = make_instance(1, 6, seed=7, all_terms=True)
        term_kwargs = {
            "w_gate": {"target_gate": full.target_gate},
            "w_running_gate": {"target_gate": full.target_gate},
            "w_running_state": {"target_states": full.target_states},
            "w_final_state": {"target_states": full.target_states},
            "w_energy": {},
            "w_smoothness": {},
            "w_forbidden": {"forbidden_states": full.forbidden_states},
        }
        for weight_name, targets in term_kwargs.items():
            spec = CostSpec(**{weight_name: 1.0}, **targets)
            res = gradient(model, grid, controls, spec, psi0)
            fd = finite_difference_gradient(model, grid, controls, spec, psi0, h=1e-7)
            scale = np.max(np.abs(fd)) + 1e-12
            rel = np.max(np.abs(res.grad - fd)) / scale
            assert rel <= 1e-5, f"{weight_name}: rel error {rel}"

    def test_gate_seed_matches_fd_at_target(self):
        # seed stays correct at the optimum of the gate term
        model, grid, controls, _, _ = make_instance(1, 4, seed=8)
        final, _ = evaluate(model, grid, controls, CostSpec())
        spec = CostSpec(w_gate=1.0, target_gate=final.k_mat)
        res = gradient(model, grid, controls, spec)
        fd = finite_difference_gradient(model, grid, controls, spec, h=1e-6)
        assert np.max(np.abs(res.grad - fd)) <= 1e-7
