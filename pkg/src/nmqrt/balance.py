"""Quantum detailed-balance audits and the stationary dispersion of the ensemble.

Every superoperator identity is checked as a matrix identity in the
Hermitian basis, with "left-multiply by rho" itself a superoperator; the
residual is the largest absolute entry of the difference.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import tolerances as tol
from .dynamics import laplace_kernel
from .ensemble import TlsModel
from .errors import DegenerateStationaryStateError, SingularityError
from .io import write_json
from .operators import (
    Superoperator,
    dual,
    hermitian_basis,
    left_multiplication,
    resolvent,
    reversal,
    time_reverse,
)

VALID = "QRT_ASYMPTOTICALLY_VALID"
VIOLATED = "QRT_VIOLATED"

U_SCALES = (1e-2, 1e-1, 1.0, 1e1, 1e2)

U_SAMPLING_NOTE = (
    "the memory superoperator is rational in u with finitely many poles, so "
    "agreement on a finite real-axis sample away from the poles is the check "
    "applied; samples that hit a pole are skipped and listed"
)


def stationary_state(L, member=None):
    """Unique null vector of L normalised to unit trace (linear solve)."""
    m = L.matrix
    d = L.dim
    s = np.linalg.svd(m, compute_uv=False)
    null = int((s <= 1e-10 * max(s.max(), 1.0)).sum())
    if null != 1:
        raise DegenerateStationaryStateError(
            f"member {member}: stationary null space has dimension {null}", member
        )
    A = m.copy()
    A[0] = 0
    A[0, 0] = 1
    b = np.zeros(len(m), dtype=complex)
    b[0] = 1 / np.sqrt(d)
    x = np.linalg.solve(A, b)
    rho = hermitian_basis(d).operator(x)
    return 0.5 * (rho + rho.conj().T)


def stationary_states(model):
    """(member stationary states, their weighted average)."""
    members = [stationary_state(L, k) for k, L in enumerate(model.liouvillians)]
    avg = sum(w * r for w, r in zip(model.weights, members))
    return members, avg


def _bloch(rho):
    d = rho.shape[0]
    # sqrt(2) x_i are the Pauli expectations for d = 2 (Gell-Mann in general)
    return np.sqrt(2) * hermitian_basis(d).coords(rho)[1:].real


def stationary_dispersion(model):
    """Xi_JK = <S_J S_K> - <S_J><S_K> over the member stationary states."""
    members, _ = stationary_states(model)
    S = np.array([_bloch(r) for r in members])
    P = np.asarray(model.weights)
    mean = P @ S
    xi = (S * P[:, None]).T @ S - np.outer(mean, mean)
    return 0.5 * (xi + xi.T)


@dataclass
class MemberBalance:
    member: int
    reversal: float
    commutation: float
    dissipator: float

    @property
    def max_residual(self):
        return max(self.reversal, self.commutation, self.dissipator)

    @property
    def passed(self):
        return self.max_residual < tol.VERDICT


def markovian_db_check(model, member_index, rho=None):
    """Residuals of the three per-member conditions.

    reversal: rho~ = rho; commutation: [H, rho] = 0; dissipator:
    rho D#[.] = D~[rho .] with D the member dissipator.
    """
    D = model.dissipators[member_index]
    if rho is None:
        rho = stationary_state(model.liouvillians[member_index], member_index)
    H = np.asarray(model.hamiltonian, dtype=complex)
    left = left_multiplication(rho)
    r_a = float(np.abs(reversal(rho) - rho).max())
    r_b = float(np.abs(H @ rho - rho @ H).max())
    r_c = (left @ dual(D) - time_reverse(D) @ left).norm()
    return MemberBalance(member_index, r_a, r_b, r_c)


def mean_rate(model):
    if isinstance(model, TlsModel):
        return float(np.dot(model.weights, model.rates))
    rates = [np.abs(np.linalg.eigvals(L.matrix).real).max() for L in model.dissipators]
    return float(np.dot(model.weights, rates))


def default_u_samples(model):
    return [s * mean_rate(model) for s in U_SCALES]


@dataclass
class NonMarkovianBalance:
    reversal: float
    u_samples: list
    residuals: list
    skipped: list

    @property
    def max_residual(self):
        return max([self.reversal, *self.residuals])

    @property
    def passed(self):
        return self.max_residual < tol.VERDICT


def _memory_condition(Lh, LL, rho):
    left = left_multiplication(rho)
    return (left @ (dual(Lh) + dual(LL)) - (time_reverse(Lh) + time_reverse(LL)) @ left).norm()


def nonmarkovian_db_check(model, u_samples=None, memory=None):
    """Stationary-state reversal and the memory-superoperator identity at each u.

    ``memory`` maps u to LL(u); by default it comes from the ensemble
    resolvents.  Samples at which LL(u) cannot be formed are skipped.
    """
    if u_samples is None:
        u_samples = default_u_samples(model)
    _, rho = stationary_states(model)
    Lh = model.hamiltonian_superop
    if memory is None:
        memory = lambda u: laplace_kernel(model, u)[1]  # noqa: E731
    used, res, skipped = [], [], []
    for u in u_samples:
        try:
            LL = memory(u)
        except SingularityError:
            skipped.append(u)
            continue
        used.append(u)
        res.append(_memory_condition(Lh, LL, rho))
    r_a = float(np.abs(reversal(rho) - rho).max())
    return NonMarkovianBalance(r_a, used, res, skipped)


@dataclass
class AveragedBalance:
    u_samples: list
    residuals: list
    alternate_residuals: list
    orderings_differ: bool


def averaged_balance_check(model, u_samples=None):
    """Averaged microreversibility identity, member stationary states inside the average.

    Left side <rho_R (u - L_R#)^-1>, right side <(u - L_R~)^-1 [rho_R~ .]>.
    The alternate ordering places rho_R to the right of the dual resolvent
    and is reported alongside; ``orderings_differ`` flags a disagreement.
    """
    if u_samples is None:
        u_samples = default_u_samples(model)
    members, _ = stationary_states(model)
    res, alt, used = [], [], []
    for u in u_samples:
        try:
            lhs = rhs = lhs_alt = 0
            for w, L, rho in zip(model.weights, model.liouvillians, members):
                left = left_multiplication(rho)
                Rd = resolvent(dual(L), u)
                Rt = resolvent(time_reverse(L), u)
                lhs = lhs + w * (left @ Rd).matrix
                lhs_alt = lhs_alt + w * (Rd @ left).matrix
                rhs = rhs + w * (Rt @ left_multiplication(reversal(rho))).matrix
        except SingularityError:
            continue
        used.append(u)
        res.append(float(np.abs(lhs - rhs).max()))
        alt.append(float(np.abs(lhs_alt - rhs).max()))
    differ = any((a < tol.VERDICT) != (b < tol.VERDICT) for a, b in zip(res, alt))
    return AveragedBalance(used, res, alt, differ)


def population_balance(model, member_index, rho=None):
    """Classical detailed balance of the population sector: W_mn p_n = W_nm p_m."""
    L = model.liouvillians[member_index]
    if rho is None:
        rho = stationary_state(L, member_index)
    d = L.dim
    p = np.real(np.diag(rho))
    W = np.zeros((d, d))
    for n in range(d):
        proj = np.zeros((d, d), dtype=complex)
        proj[n, n] = 1
        W[:, n] = np.real(np.diag(L.apply(proj)))
    flux = W * p[None, :]
    off = ~np.eye(d, dtype=bool)
    return float(np.abs((flux - flux.T)[off]).max()) if d > 1 else 0.0


@dataclass
class BalanceReport:
    markovian: list
    nonmarkovian: NonMarkovianBalance
    averaged: AveragedBalance
    population: list
    dispersion: np.ndarray
    verdict: str
    magnitude: float
    marginal: bool
    notes: list = field(default_factory=list)

    @property
    def markovian_pass(self):
        return all(m.passed for m in self.markovian)

    @property
    def nonmarkovian_pass(self):
        return self.nonmarkovian.passed

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "magnitude": self.magnitude,
            "marginal": self.marginal,
            "tolerance": tol.VERDICT,
            "marginal_band": tol.MARGINAL,
            "markovian": [
                {**asdict(m), "max_residual": m.max_residual, "passed": m.passed} for m in self.markovian
            ],
            "markovian_pass": self.markovian_pass,
            "nonmarkovian": {
                "stationary_reversal": self.nonmarkovian.reversal,
                "u_samples": list(self.nonmarkovian.u_samples),
                "residuals": list(self.nonmarkovian.residuals),
                "skipped_u": list(self.nonmarkovian.skipped),
                "max_residual": self.nonmarkovian.max_residual,
                "passed": self.nonmarkovian.passed,
            },
            "averaged": asdict(self.averaged),
            "population_residuals": list(self.population),
            "stationary_dispersion": self.dispersion.tolist(),
            "notes": list(self.notes),
        }

    def to_json(self, path):
        return write_json(path, self.to_dict())


def balance_report(model, u_samples=None):
    members, _ = stationary_states(model)
    markov = [markovian_db_check(model, k, r) for k, r in enumerate(members)]
    nonmarkov = nonmarkovian_db_check(model, u_samples)
    averaged = averaged_balance_check(model, nonmarkov.u_samples + nonmarkov.skipped)
    population = [population_balance(model, k, r) for k, r in enumerate(members)]
    xi = stationary_dispersion(model)
    magnitude = float(np.abs(xi).max())
    verdict = VALID if magnitude < tol.VERDICT else VIOLATED
    marginal = tol.VERDICT <= magnitude < tol.MARGINAL
    notes = [U_SAMPLING_NOTE]
    if averaged.orderings_differ:
        notes.append("averaged identity depends on the operator ordering inside the average")
    return BalanceReport(markov, nonmarkov, averaged, population, xi, verdict, magnitude, marginal, notes)
