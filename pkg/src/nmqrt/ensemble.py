"""Random-rate ensembles and the two-level system models built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .operators import (
    DOWN,
    SM,
    SP,
    SX,
    SZ,
    commutator_superop,
    lindblad_superop,
)

WEIGHT_REJECT = 1e-6
MERGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class RateEnsemble:
    """Finite set of dissipation rates gamma_R with probabilities P_R.

    Duplicate rates are merged (weights summed, first-appearance order kept)
    and weights are renormalised to unit sum when they are within 1e-6 of it.
    """

    rates: np.ndarray
    weights: np.ndarray
    #: (gamma0, b, a, N) when built by exponential_ensemble
    exponential: tuple | None = field(default=None)

    def __post_init__(self):
        rates = np.atleast_1d(np.asarray(self.rates, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if rates.ndim != 1 or rates.shape != weights.shape or rates.size == 0:
            raise ValidationError("rates and weights must be nonempty lists of equal length")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ValidationError("rates must be finite and nonnegative")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValidationError("weights must be finite and nonnegative")
        total = weights.sum()
        if abs(total - 1) > WEIGHT_REJECT:
            raise ValidationError(f"weights sum to {total:.12g}, not 1")
        weights = weights / total

        merged_r, merged_w = [], []
        for r, w in zip(rates, weights):
            for k, r0 in enumerate(merged_r):
                if abs(r - r0) <= MERGE_RTOL * max(r, r0):
                    merged_w[k] += w
                    break
            else:
                merged_r.append(r)
                merged_w.append(w)
        rates = np.array(merged_r)
        weights = np.array(merged_w)
        rates.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.rates)

    def mean(self, values):
        """Weighted average of per-member values (summed in index order)."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def average(self, fn):
        return self.mean([fn(g) for g in self.rates])

    def scaled(self, c):
        exp = None
        if self.exponential is not None:
            g0, b, a, n = self.exponential
            exp = (g0 * c, b, a, n)
        return RateEnsemble(self.rates * c, self.weights, exp)

    def normalized(self):
        """Rescaled copy with mean rate 1 (the time unit of the figures)."""
        return self.scaled(1.0 / self.stats().gamma_mean)

    def stats(self):
        return ensemble_stats(self)


@dataclass(frozen=True)
class EnsembleStats:
    gamma_mean: float
    beta: float
    alpha: float | None = None


def ensemble_stats(e):
    g = float(e.mean(e.rates))
    g2 = float(e.mean(e.rates**2))
    var = max(g2 - g * g, 0.0)
    beta = var / g if g > 0 else 0.0
    alpha = None
    if e.exponential is not None:
        _, b, a, _ = e.exponential
        alpha = a / b
    return EnsembleStats(g, beta, alpha)


def exponential_ensemble(gamma0, b, a, N):
    """gamma_R = gamma0 e^{-bR}, P_R proportional to e^{-aR}, R = 0..N-1."""
    if not gamma0 > 0 or not b > 0 or not a > 0:
        raise ValidationError("gamma0, b and a must be positive")
    if int(N) != N or N < 1:
        raise ValidationError("N must be a positive integer")
    R = np.arange(int(N))
    rates = gamma0 * np.exp(-b * R)
    weights = -np.expm1(-a) / -np.expm1(-a * N) * np.exp(-a * R)
    return RateEnsemble(rates, weights, (float(gamma0), float(b), float(a), int(N)))


def thermal_dissipator(n_th):
    """L_th with (1+n) sigma-decay and n sigma^+-absorption channels."""
    return lindblad_superop(np.diag([1 + n_th, n_th]), [SM, SP])


def dephasing_dissipator():
    """L_Phi = ([sz, . sz] + [sz ., sz]) / 2."""
    return lindblad_superop([[1.0]], [SZ])


@dataclass(frozen=True, eq=False)
class LindbladEnsemble:
    """Generic random-generator model: one Hamiltonian, one dissipator per member."""

    weights: np.ndarray
    hamiltonian: np.ndarray
    dissipators: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.dissipators):
            raise ValidationError("one dissipator per weight is required")
        if abs(w.sum() - 1) > WEIGHT_REJECT or np.any(w < 0):
            raise ValidationError("weights must be a probability vector")
        object.__setattr__(self, "weights", w / w.sum())
        object.__setattr__(self, "dissipators", tuple(self.dissipators))

    @property
    def dim(self):
        return self.dissipators[0].dim

    @cached_property
    def hamiltonian_superop(self):
        return commutator_superop(self.hamiltonian)

    @cached_property
    def liouvillians(self):
        return tuple(self.hamiltonian_superop + D for D in self.dissipators)

    @property
    def members(self):
        return self

    def max_rate(self):
        return max(float(np.abs(np.linalg.eigvals(L.matrix)).max()) for L in self.liouvillians)


@dataclass(frozen=True, eq=False)
class TlsModel:
    """Two-level system in a structured thermal reservoir (rotating frame).

    ``ensemble`` carries the bare thermal rates gamma'_R; the effective
    rates are gamma_R = gamma'_R (1 + 2 n_th) and gamma_R^Phi = gamma_R/2 + gamma_Phi.
    ``omega_A`` is metadata only.
    """

    ensemble: RateEnsemble
    n_th: float = 0.0
    gamma_phi: float = 0.0
    omega_rabi: float = 0.0
    omega_A: float | None = None

    def __post_init__(self):
        if self.n_th < 0 or self.gamma_phi < 0 or self.omega_rabi < 0:
            raise ValidationError("n_th, gamma_phi and omega_rabi must be nonnegative")

    @property
    def weights(self):
        return self.ensemble.weights

    @property
    def dim(self):
        return 2

    @property
    def rates(self):
        return self.ensemble.rates * (1 + 2 * self.n_th)

    @property
    def dephasing_rates(self):
        return self.rates / 2 + self.gamma_phi

    @property
    def pi_plus_eq(self):
        return self.n_th / (1 + 2 * self.n_th)

    @property
    def pi_minus_eq(self):
        return (1 + self.n_th) / (1 + 2 * self.n_th)

    @property
    def sz_inf(self):
        """Thermal inversion Pi+^eq - Pi-^eq."""
        return -1.0 / (1 + 2 * self.n_th)

    @property
    def thermal_state(self):
        return self.pi_plus_eq * (np.eye(2) - DOWN) + self.pi_minus_eq * DOWN

    @property
    def hamiltonian(self):
        return 0.5 * self.omega_rabi * SX

    @cached_property
    def members(self):
        Lth = thermal_dissipator(self.n_th)
        Lphi = dephasing_dissipator()
        diss = tuple(g * Lth + (self.gamma_phi / 2) * Lphi for g in self.ensemble.rates)
        return LindbladEnsemble(self.weights, self.hamiltonian, diss)

    @property
    def hamiltonian_superop(self):
        return self.members.hamiltonian_superop

    @property
    def dissipators(self):
        return self.members.dissipators

    @property
    def liouvillians(self):
        return self.members.liouvillians

    def max_rate(self):
        return float(self.rates.max() + self.omega_rabi + self.gamma_phi)

    def with_(self, **changes):
        params = dict(
            ensemble=self.ensemble,
            n_th=self.n_th,
            gamma_phi=self.gamma_phi,
            omega_rabi=self.omega_rabi,
            omega_A=self.omega_A,
        )
        params.update(changes)
        return TlsModel(**params)


def build_liouvillians(model):
    """Per-member generators L_H + gamma'_R L_th + (gamma_Phi/2) L_Phi."""
    return list(model.liouvillians)


def as_members(model):
    """Accept a TlsModel or a LindbladEnsemble and return the latter."""
    return model.members
