import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_gramian.control import (ControlProblem, MinimumEnergyControl, SingularGramianError,
                                     control_action, energy_report, expm_action, min_energy,
                                     simulate, synthesize_control)
from lattice_gramian.gramian import finite_gramian_closed


def scalar_problem(b=1.0):
    return ControlProblem([[-1.0]], [[1.0]], [[1.0]], [0.0], [b], 1.0)


def test_expm_action_examples():
    v = np.array([1.0, -2.0, 3.0])
    A = np.diag([-1.0, 0.5, -3.0])
    assert np.array_equal(expm_action(A, 0.0, v), v)
    assert expm_action([[-5.0]], 1.0, [2.0])[0] == pytest.approx(2 * math.exp(-5), rel=1e-14)
    np.testing.assert_allclose(expm_action(A, 0.7, v), np.exp(np.diag(A) * 0.7) * v, rtol=1e-13)
    with pytest.raises(ValueError):
        expm_action([[0.0, 1.0], [0.0, 0.0]], 1.0, [1.0, 1.0])


def test_expm_action_against_scipy(rng):
    import scipy.linalg
    M = rng.standard_normal((6, 6))
    A = -(M @ M.T) / 6
    v = rng.standard_normal(6)
    np.testing.assert_allclose(expm_action(A, 1.3, v), scipy.linalg.expm(1.3 * A) @ v, rtol=1e-12)


def test_control_action(system_iv):
    A, B, C = system_iv
    prob = ControlProblem(A, B, C, np.zeros(441), [1, 1, 1], 5.0)
    assert np.array_equal(control_action(prob), [1.0, 1.0, 1.0])
    x0 = np.linspace(0, 1, 441)
    free = C @ expm_action(A, 5.0, x0)
    prob = ControlProblem(A, B, C, x0, free, 5.0)
    assert np.abs(control_action(prob)).max() < 1e-15


def test_problem_validation():
    with pytest.raises(ValueError):
        ControlProblem([[-1.0]], [[1.0]], [[1.0]], [0.0], [1.0], 0.0)
    assert scalar_problem().is_output_controllable()


def test_min_energy_examples():
    assert min_energy([0.0, 0.0], np.eye(2)) == 0.0
    assert min_energy([3.0, 4.0], np.eye(2)) == pytest.approx(25.0, rel=1e-15)


def test_energy_report_diag():
    rep = energy_report([1.0, 1.0], np.diag([2.0, 4.0]))
    assert rep.energy == pytest.approx(0.75, rel=1e-15)
    assert rep.mu_min == 2.0
    assert rep.mode_contributions.sum() == pytest.approx(rep.energy, rel=1e-10)
    assert np.all(np.diff(rep.eigenvalues) >= 0)


@settings(max_examples=100, deadline=None)
@given(q=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_eigen_form_identity(q, seed):
    r = np.random.default_rng(seed)
    M = r.standard_normal((q, q))
    W = M @ M.T + 0.1 * np.eye(q)
    b = r.standard_normal(q)
    rep = energy_report(b, W)
    assert rep.energy == pytest.approx(min_energy(b, W), rel=1e-10)
    zmin = rep.eigenvectors[:, 0]
    assert rep.energy <= b @ b * q / rep.mu_min * (1 + 1e-12)
    assert rep.energy >= (b @ zmin) ** 2 / rep.mu_min * (1 - 1e-12)


def test_singular_gramian():
    with pytest.raises(SingularGramianError):
        min_energy([1.0, 1.0], np.ones((2, 2)))
    with pytest.raises(SingularGramianError):
        min_energy([1.0, 1.0], np.diag([1.0, 1e-16]))
    with pytest.raises(SingularGramianError):
        energy_report([1.0, 1.0], np.diag([1.0, -1.0]))
    assert issubclass(SingularGramianError, np.linalg.LinAlgError)


def test_scalar_closed_form_control():
    prob = scalar_problem(b=2.0)
    W1 = (1 - math.exp(-2)) / 2
    gram = finite_gramian_closed(prob.A, prob.B, 1.0)
    assert gram.matrix[0, 0] == pytest.approx(W1, rel=1e-14)
    for t in [0.0, 0.25, 0.5, 1.0]:
        u = synthesize_control(prob, gram, t)
        assert u[0] == pytest.approx(math.exp(-(1 - t)) * 2.0 / W1, rel=1e-13)
    with pytest.raises(ValueError):
        synthesize_control(prob, gram, 1.5)


def test_zero_action_gives_zero_control():
    prob = scalar_problem(b=0.0)
    ctrl = MinimumEnergyControl(prob, finite_gramian_closed(prob.A, prob.B, 1.0))
    assert ctrl.predicted_energy == 0.0
    assert all(ctrl(t)[0] == 0.0 for t in np.linspace(0, 1, 7))


def test_output_gramian_shape_checked():
    prob = scalar_problem()
    with pytest.raises(ValueError):
        MinimumEnergyControl(prob, np.eye(2))


def test_lower_bound_property(rng):
    # admissible perturbations phi satisfy int_0^1 e^{-(1-t)} phi(t) dt = 0
    prob = scalar_problem(b=1.0)
    ctrl = MinimumEnergyControl(prob, finite_gramian_closed(prob.A, prob.B, 1.0))
    t = np.linspace(0, 1, 20001)
    w = np.exp(-(1 - t))
    u_star = np.array([ctrl(x)[0] for x in t])

    def trap(y):
        return float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2)

    e_star = trap(u_star**2)
    assert e_star == pytest.approx(ctrl.predicted_energy, rel=1e-7)
    for _ in range(10):
        c = rng.standard_normal(4)
        phi = sum(ck * np.cos((k + 1) * np.pi * t) for k, ck in enumerate(c))
        phi -= trap(phi * w) / trap(w * w) * w
        for eps in (0.1, -0.1):
            assert trap((u_star + eps * phi) ** 2) >= e_star


def test_simulate_zero_input():
    A = np.array([[-2.0, 1.0], [1.0, -3.0]])
    prob = ControlProblem(A, [[1.0], [0.0]], [[1.0, 0.0]], [0.0, 0.0], [0.0], 2.0)
    sim = simulate(prob, lambda t: np.zeros(1), 100)
    assert np.all(sim.trajectory == 0) and sim.realized_energy == 0.0
    assert sim.times.shape == (101,) and sim.trajectory.shape == (101, 2)
    prob = ControlProblem(A, [[1.0], [0.0]], [[1.0, 0.0]], [1.0, -1.0], [0.0], 2.0)
    sim = simulate(prob, lambda t: np.zeros(1), 400)
    np.testing.assert_allclose(sim.trajectory[-1], expm_action(A, 2.0, prob.x0), atol=1e-9)
    with pytest.raises(ValueError):
        simulate(prob, lambda t: np.zeros(1), 0)


def test_scalar_end_to_end():
    prob = scalar_problem(b=1.0)
    ctrl = MinimumEnergyControl(prob, finite_gramian_closed(prob.A, prob.B, 1.0))
    sim = simulate(prob, ctrl, 400)
    assert abs(sim.y_final[0] - 1.0) < 1e-9
    assert sim.realized_energy == pytest.approx(ctrl.predicted_energy, rel=1e-9)
    assert ctrl.predicted_energy == pytest.approx(2 / (1 - math.exp(-2)), rel=1e-14)


def test_free_evolution_target(system_iv, gramian_iv):
    A, B, C = system_iv
    x0 = np.zeros(441)
    x0[220] = 1.0
    prob = ControlProblem(A, B, C, x0, C @ expm_action(A, 5.0, x0), 5.0)
    ctrl = MinimumEnergyControl(prob, gramian_iv)
    assert ctrl.predicted_energy < 1e-25
    assert np.abs(ctrl(2.0)).max() < 1e-12


def test_energy_views_agree(system_iv, gramian_iv):
    A, B, C = system_iv
    Wout = C @ gramian_iv.matrix @ C.T
    b = np.ones(3)
    assert energy_report(b, Wout).energy == pytest.approx(min_energy(b, Wout), rel=1e-10)
    prob = ControlProblem(A, B, C, np.zeros(441), b, 5.0)
    assert MinimumEnergyControl(prob, gramian_iv).predicted_energy == pytest.approx(
        min_energy(b, Wout), rel=1e-12)
