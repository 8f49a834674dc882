import json

import numpy as np
import pytest

from nmqrt.balance import (
    VALID,
    VIOLATED,
    averaged_balance_check,
    balance_report,
    markovian_db_check,
    nonmarkovian_db_check,
    population_balance,
    stationary_dispersion,
    stationary_state,
    stationary_states,
)
from nmqrt.correlations import deviation_F
from nmqrt.ensemble import RateEnsemble, TlsModel
from nmqrt.errors import DegenerateStationaryStateError
from nmqrt.operators import DOWN, SP, SM, SX, SY, UP, Superoperator, density_to_bloch
from nmqrt.tls import memory_superop, stationary_bloch

US = [0.1, 1.0, 10.0]


class TestStationary:
    def test_ground_state_without_drive(self, fig1_model):
        members, avg = stationary_states(fig1_model)
        for r in members:
            np.testing.assert_allclose(r, DOWN, atol=1e-12)
        np.testing.assert_allclose(avg, DOWN, atol=1e-12)

    def test_unit_drive(self):
        r = stationary_state(TlsModel(RateEnsemble([1.0], [1.0]), omega_rabi=1.0).liouvillians[0])
        np.testing.assert_allclose(density_to_bloch(r), [0, 2 / 3, -1 / 3], atol=1e-12)

    def test_closed_form(self, fig3_model):
        members, _ = stationary_states(fig3_model)
        S = stationary_bloch(fig3_model, 0.02, 0.2, 0.0)
        np.testing.assert_allclose([density_to_bloch(r) for r in members], S, atol=1e-10)

    def test_degenerate(self):
        with pytest.raises(DegenerateStationaryStateError):
            stationary_state(Superoperator.zero(2), 3)


class TestMarkovian:
    @pytest.mark.parametrize("n_th", [0.0, 0.5])
    def test_free_decay_passes(self, fig1_model, n_th):
        m = fig1_model.with_(n_th=n_th)
        for k in range(5):
            assert markovian_db_check(m, k).max_residual < 1e-10

    def test_driven_fails_commutation(self, fig3_model):
        for k in range(5):
            r = markovian_db_check(fig3_model, k)
            assert r.commutation > 1e-6 and not r.passed

    def test_population_balance(self, fig1_model):
        m = fig1_model.with_(n_th=0.3)
        assert max(population_balance(m, k) for k in range(5)) < 1e-14


class TestNonMarkovian:
    def test_free_decay_passes(self, fig1_model):
        r = nonmarkovian_db_check(fig1_model, US)
        assert r.passed and r.max_residual < 1e-10 and r.u_samples == US

    def test_driven_fails_everywhere(self, fig3_model):
        r = nonmarkovian_db_check(fig3_model, US)
        assert min(r.residuals) > 1e-3

    def test_single_rate_driven_fails(self):
        r = nonmarkovian_db_check(TlsModel(RateEnsemble([1.0], [1.0]), omega_rabi=0.2), US)
        assert not r.passed and min(r.residuals) > 1e-3

    def test_closed_form_memory_reproduces(self, fig3_model):
        m = fig3_model.with_(n_th=0.2)
        a = nonmarkovian_db_check(m, US)
        b = nonmarkovian_db_check(m, US, memory=lambda u: memory_superop(m, m.gamma_phi, m.omega_rabi, m.n_th, u))
        np.testing.assert_allclose(a.residuals, b.residuals, atol=1e-9)

    def test_pole_sample_skipped(self, fig1_model):
        r = nonmarkovian_db_check(fig1_model, [0.0, 1.0])
        assert r.skipped == [0.0] and r.u_samples == [1.0]


class TestAveraged:
    def test_free_decay(self, fig1_model):
        a = averaged_balance_check(fig1_model, US)
        assert max(a.residuals) < 1e-10

    def test_driven(self, fig3_model):
        a = averaged_balance_check(fig3_model, US)
        assert min(a.residuals) > 1e-6


class TestDispersion:
    def test_vanishes_without_drive(self, fig1_model):
        assert np.abs(stationary_dispersion(fig1_model)).max() < 1e-15

    def test_symmetric_psd(self, fig3_model):
        xi = stationary_dispersion(fig3_model)
        np.testing.assert_allclose(xi, xi.T)
        assert np.linalg.eigvalsh(xi).min() > -1e-15
        assert np.abs(xi[0]).max() < 1e-15


class TestReport:
    def test_free_decay_valid(self, fig1_model, tmp_path):
        rep = balance_report(fig1_model)
        assert rep.verdict == VALID and not rep.marginal
        assert rep.markovian_pass and rep.nonmarkovian_pass
        data = json.loads(rep.to_json(tmp_path / "b.json").read_text())
        assert data["verdict"] == VALID
        assert len(data["markovian"]) == 5 and len(data["nonmarkovian"]["u_samples"]) == 5

    def test_driven_violated(self, fig3_model):
        rep = balance_report(fig3_model, US)
        assert rep.verdict == VIOLATED and rep.magnitude > 1e-6
        assert not rep.markovian_pass and not rep.nonmarkovian_pass

    def test_marginal_band(self, two_rate):
        rep = balance_report(TlsModel(two_rate, omega_rabi=1e-4), US)
        assert rep.verdict == VIOLATED and rep.marginal

    def test_implication_chain(self, fig1_model, fig3_model):
        taus = np.concatenate([[0], np.logspace(-2, 3, 100)])
        for m in (fig1_model, fig3_model):
            rep = balance_report(m, US)
            _, rho = stationary_states(m)
            F = np.abs(deviation_F(m, SX, SY, rho, 0.0, taus)).max()
            F_updown = np.abs(deviation_F(m, SP, SM, UP, np.inf, taus)).max()
            if rep.markovian_pass:
                assert rep.verdict == VALID and F < 1e-12
            else:
                assert rep.verdict == VIOLATED and F_updown > 1e-3
