import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from nmqrt.dynamics import ensemble_density
from nmqrt.ensemble import RateEnsemble, TlsModel
from nmqrt.errors import StabilityError, StabilityWarning, ValidationError
from nmqrt.kernels import RationalKernel, invert_rational_kernel
from nmqrt.operators import DOWN, UP, bloch_to_density
from nmqrt.tls import driven_volterra, free_decay_volterra, master_approximation, p_pi
from nmqrt.volterra import MemoryTerm, convolve_direct, volterra_evolve

A = np.array([[-0.3, 1.0], [-1.0, -0.1]])


def test_no_memory_is_matrix_exponential():
    t = np.linspace(0, 10, 101)
    B = np.eye(2) * -0.2
    k = RationalKernel(1.0, [-1.0], [0.0])
    res = volterra_evolve(A, [MemoryTerm(k, B)], [1.0, 0.0], t)
    ref = np.array([expm((A + B) * s) @ [1.0, 0.0] for s in t])
    assert np.abs(res.x - ref).max() < 1e-8


def test_scalar_memory_closed_form():
    # x' = -int e^{-(t-s)} x(s) ds, x(0) = 1: x = e^{-t/2}(cos wt + sin(wt)/(2w)), w = sqrt(3)/2
    t = np.linspace(0, 12, 241)
    k = RationalKernel(0.0, [-1.0], [1.0])
    res = volterra_evolve([[0.0]], [MemoryTerm(k, [[-1.0]])], [1.0], t)
    w = np.sqrt(3) / 2
    ref = np.exp(-t / 2) * (np.cos(w * t) + np.sin(w * t) / (2 * w))
    assert np.abs(res.x[:, 0] - ref).max() < 1e-9


def test_auxiliary_variables_match_direct_quadrature():
    t = np.linspace(0, 4, 161)
    k1 = RationalKernel(0.5, [-1.0, -3.0], [0.4, -0.2])
    k2 = RationalKernel(0.0, [-0.5 + 1j, -0.5 - 1j], [0.3, 0.3])
    terms = [MemoryTerm(k1, np.diag([-1.0, 0.0])), MemoryTerm(k2, np.array([[0.0, -1.0], [0.0, -0.5]]))]
    res = volterra_evolve(A, terms, [1.0, 0.5], t)
    direct = convolve_direct(terms, t, res.x)
    # two history points reduce Simpson to the trapezoid rule; compare from the third on
    assert np.abs(res.memory[2:] - direct[2:]).max() < 1e-6


def test_free_decay_populations(fig1_model):
    t = np.linspace(0, 10, 201)
    traj = free_decay_volterra(fig1_model, UP, t)
    np.testing.assert_allclose(traj.states[:, 0, 0].real, p_pi(fig1_model, t), atol=1e-6)


def test_thermal_coherent_start(fig1_model):
    m = fig1_model.with_(n_th=0.4)
    rho0 = bloch_to_density([0.6, -0.3, 0.2])
    t = np.linspace(0, 10, 201)
    gap = np.abs(free_decay_volterra(m, rho0, t).bloch - ensemble_density(m, rho0, t).bloch).max()
    assert gap < 1e-6


@pytest.mark.parametrize("n_th, omega, gphi", [(0.0, 0.2, 0.02), (0.3, 1.0, 0.1)])
def test_driven(fig1_model, n_th, omega, gphi):
    m = fig1_model.with_(n_th=n_th, omega_rabi=omega, gamma_phi=gphi)
    t = np.linspace(0, 10, 201)
    gap = np.abs(driven_volterra(m, UP, t).bloch - ensemble_density(m, UP, t).bloch).max()
    assert gap < 1e-5


def test_master_approximation_single_rate():
    t = np.linspace(0, 10, 101)
    _, gap = master_approximation(RateEnsemble([1.0], [1.0]), 0.1, 0.0, t, UP)
    assert gap < 1e-8


def test_master_approximation_dominant_fast_rate():
    # P_slow << P_fast, gamma_slow << gamma_Phi << gamma_fast: coherences follow exp(-<gamma> t)
    e = RateEnsemble([10.0, 0.01], [0.99, 0.01])
    t = np.linspace(0, 1.5, 61)
    rho0 = bloch_to_density([1.0, 0.0, 0.0])
    traj, _ = master_approximation(e, 1.0, 0.0, t, rho0)
    target = np.exp(-np.dot(e.weights, e.rates) / 2 * t) * np.exp(-1.0 * t)
    assert np.abs(traj.bloch[:, 0] - target).max() < 5 * 0.01 / 0.99


def test_master_approximation_populations(fig1_model):
    t = np.linspace(0, 10, 101)
    traj, _ = master_approximation(RateEnsemble(fig1_model.rates, fig1_model.weights), 0.02, 0.0, t, UP)
    np.testing.assert_allclose(traj.bloch[:, 2], -1 + 2 * p_pi(fig1_model, t), atol=1e-6)


def test_nonuniform_grid():
    k = RationalKernel(0.0, [-1.0], [1.0])
    with pytest.raises(ValidationError):
        volterra_evolve([[0.0]], [MemoryTerm(k, [[-1.0]])], [1.0], [0.0, 0.1, 0.3])
    with pytest.raises(ValidationError):
        volterra_evolve([[0.0]], [MemoryTerm(k, [[-1.0]])], [1.0], [0.1, 0.2])


def test_structure_shape():
    k = RationalKernel(0.0, [-1.0], [1.0])
    with pytest.raises(ValidationError):
        volterra_evolve(A, [MemoryTerm(k, [[-1.0]])], [1.0, 0.0], [0.0, 0.1])


def test_step_too_large():
    k = RationalKernel(0.0, [-50.0], [1.0])
    args = ([[0.0]], [MemoryTerm(k, [[-1.0]])], [1.0], [0.0, 1.0])
    with pytest.warns(StabilityWarning):
        volterra_evolve(*args, substeps=1)
    with pytest.raises(StabilityError):
        volterra_evolve(*args, substeps=1, strict=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = volterra_evolve(*args)
    assert res.step * 50 <= 0.02 + 1e-12


def test_trajectory_states_are_densities(fig3_model):
    traj = driven_volterra(fig3_model, DOWN, np.linspace(0, 5, 51))
    np.testing.assert_allclose(np.trace(traj.states, axis1=1, axis2=2), 1.0, atol=1e-12)
    assert np.array_equal(traj.states[0], DOWN.astype(complex))


def test_two_rate_population_kernel_volterra(two_rate):
    m = TlsModel(two_rate)
    K = invert_rational_kernel(two_rate)
    assert K.markov_weight == pytest.approx(2.0)
    t = np.linspace(0, 6, 121)
    np.testing.assert_allclose(free_decay_volterra(m, UP, t).states[:, 0, 0].real, p_pi(two_rate, t), atol=1e-8)
