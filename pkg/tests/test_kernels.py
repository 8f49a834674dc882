import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmqrt.ensemble import RateEnsemble
from nmqrt.errors import ValidationError
from nmqrt.kernels import RationalKernel, invert_rational_kernel, kernel_from_laplace, mixture_kernel, residues_by_contour
from nmqrt.tls import coherence_kernel, population_kernel


def test_single_rate_is_markovian():
    k = invert_rational_kernel(RateEnsemble([1.7], [1.0]))
    assert k.markov_weight == pytest.approx(1.7)
    assert k.poles.size == 0 and k.is_markovian


def test_two_rate_partial_fractions(two_rate):
    k = invert_rational_kernel(two_rate)
    assert k.markov_weight == pytest.approx(2.0)
    np.testing.assert_allclose(k.poles, [-2.0], atol=1e-14)
    np.testing.assert_allclose(k.residues, [-1.0], atol=1e-13)
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(k.regular(t).real, -np.exp(-2 * t), atol=1e-13)


def test_poles_interlace(fig1_model):
    e = RateEnsemble(fig1_model.rates, fig1_model.weights)
    k = invert_rational_kernel(e)
    assert k.poles.size == 4
    assert np.all(np.abs(k.poles.imag) == 0) and np.all(k.poles.real < 0)
    g = np.sort(e.rates)
    p = np.sort(-k.poles.real)
    assert np.all((g[:-1] < p) & (p < g[1:]))
    assert k.is_stable()


@pytest.mark.parametrize("kind, gphi", [("population", 0.0), ("coherence", 0.0), ("coherence", 0.3)])
def test_laplace_round_trip(fig1_model, kind, gphi):
    e = RateEnsemble(fig1_model.rates, fig1_model.weights)
    k = invert_rational_kernel(e, kind, gphi)
    u = np.array([0.01, 0.3, 1.0, 12.0, 3 + 2j])
    ref = population_kernel(e, u) if kind == "population" else coherence_kernel(e, gphi, u)
    np.testing.assert_allclose(k.laplace(u), ref, rtol=1e-10)


@given(st.lists(st.floats(0.05, 20), min_size=2, max_size=6, unique=True), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_random_mixtures_invert_exactly(rates, seed):
    rates = np.array(rates)
    if np.min(np.diff(np.sort(rates))) < 1e-3:
        return
    w = np.random.default_rng(seed).dirichlet(np.ones(len(rates)))
    e = RateEnsemble(rates, w)
    k = invert_rational_kernel(e)
    u = np.array([0.1, 1.0, 10.0])
    np.testing.assert_allclose(k.laplace(u), mixture_kernel(e.rates, e.weights, u), rtol=1e-9)
    # completely monotone memory: negative residues on negative poles
    assert np.all(k.residues.real < 0)


def test_unknown_kind(two_rate):
    with pytest.raises(ValidationError):
        invert_rational_kernel(two_rate, "other")


def test_shape_validation():
    with pytest.raises(ValidationError):
        RationalKernel(1.0, [-1.0, -2.0], [1.0])


def test_contour_residues():
    fn = lambda u: 3.0 / (u + 1) - 2.0 / (u + 4) + 0.5  # noqa: E731
    np.testing.assert_allclose(residues_by_contour(fn, [-1, -4]), [3.0, -2.0], atol=1e-12)
    k = kernel_from_laplace(fn, [-1, -4], 0.5)
    assert k.laplace(2.0) == pytest.approx(fn(2.0))
