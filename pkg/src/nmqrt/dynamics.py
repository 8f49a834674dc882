"""Per-member Markovian propagation and ensemble-averaged non-Markovian dynamics.

Expectation values of the Hermitian basis operators are exactly the
coordinates of the density matrix, so the expectation-value propagator of a
member is ``exp(L_R t)`` in coordinates and its kernel matrix is
``M_R = -L_R``.  The ensemble kernel ``M(u)`` is obtained from
``<G_R(u)> (u + M(u)) = 1``.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import SingularityError, ValidationError
from .operators import Flow, Superoperator, check_density, density_to_bloch, hermitian_basis, resolvent


@dataclass
class Trajectory:
    tgrid: np.ndarray
    states: np.ndarray  # (len(tgrid), d, d)

    @property
    def bloch(self):
        """(len(tgrid), 3) array of S_X, S_Y, S_Z (two-level systems only)."""
        return np.array([density_to_bloch(r) for r in self.states])

    def rows(self):
        for t, rho, s in zip(self.tgrid, self.states, self.bloch):
            yield [t, rho[0, 0].real, rho[1, 1].real, rho[0, 1].real, rho[0, 1].imag, *s]

    def to_csv(self, path, meta=None):
        from .io import write_csv

        return write_csv(path, ["t", "re_rho00", "re_rho11", "re_rho01", "im_rho01", "S_X", "S_Y", "S_Z"], self.rows(), meta)


def _check_grid(tgrid):
    tgrid = np.asarray(tgrid, dtype=float)
    if tgrid.ndim != 1 or tgrid.size == 0 or tgrid[0] != 0 or np.any(np.diff(tgrid) <= 0):
        raise ValidationError("time grid must be increasing and start at 0")
    return tgrid


def propagate_member(L, rho0, tgrid):
    """states(t) = exp(L t)[rho0] on the grid."""
    tgrid = _check_grid(tgrid)
    rho0 = check_density(rho0)
    basis = hermitian_basis(L.dim)
    coords = Flow(L).apply(basis.coords(rho0), tgrid)
    states = basis.operator(coords)
    states[0] = rho0
    return Trajectory(tgrid, states)


def _member_coords(model, x0, times, workers=1):
    flows = [Flow(L) for L in model.liouvillians]
    job = lambda f: f.apply(x0, times)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, flows))
    return [job(f) for f in flows]


def ensemble_density(model, rho0, tgrid, workers=1):
    """rho_S(t) = sum_R P_R rho_R(t), every member launched from rho0.

    The reduction runs in index-ascending order regardless of ``workers``.
    """
    tgrid = _check_grid(tgrid)
    rho0 = check_density(rho0)
    basis = hermitian_basis(model.dim)
    per_member = _member_coords(model, basis.coords(rho0), tgrid, workers)
    total = np.zeros_like(per_member[0])
    for w, c in zip(model.weights, per_member):
        total = total + w * c
    states = basis.operator(total)
    states[0] = rho0
    return Trajectory(tgrid, states)


def averaged_propagator(model, tau):
    """<exp(L_R tau)>: the expectation-value propagator G(tau)."""
    acc = np.zeros((model.dim**2,) * 2, dtype=complex)
    for w, L in zip(model.weights, model.liouvillians):
        acc = acc + w * Flow(L).matrix(tau)
    return Superoperator(acc, model.dim)


def semigroup_defect(model, times):
    """D[i, j] = max|G(t_i + t_j) - G(t_j) G(t_i)| and the scale max_t max|G(t)|.

    Zero for a Markovian (single-generator) ensemble; dispersion in the
    rates breaks the composition law.
    """
    times = np.asarray(times, dtype=float)
    G = {t: averaged_propagator(model, t).matrix for t in np.unique(np.add.outer(times, times))}
    G.update({t: averaged_propagator(model, t).matrix for t in times if t not in G})
    D = np.array([[np.abs(G[t + s] - G[s] @ G[t]).max() for s in times] for t in times])
    scale = max(float(np.abs(G[t]).max()) for t in times)
    return D, scale


def averaged_resolvent(model, u):
    acc = np.zeros((model.dim**2,) * 2, dtype=complex)
    for w, L in zip(model.weights, model.liouvillians):
        acc = acc + w * resolvent(L, u).matrix
    return Superoperator(acc, model.dim)


def laplace_kernel(model, u):
    """(M(u), LL(u)) from the member resolvents.

    M(u) = <G_R>^{-1} <G_R M_R> acts on expectation-value coordinates and
    LL(u) = <G_R>^{-1} <G_R D_R> is the memory superoperator of the
    density-matrix equation (D_R the member dissipator).
    """
    G = averaged_resolvent(model, u).matrix
    if np.linalg.cond(G) > 1e13:
        w = np.linalg.eigvals(G)
        raise SingularityError(f"averaged resolvent is singular at u={u}", w[np.argmin(np.abs(w))])
    GM = np.zeros_like(G)
    GD = np.zeros_like(G)
    for w, L, D in zip(model.weights, model.liouvillians, model.dissipators):
        GR = resolvent(L, u).matrix
        GM = GM + w * (GR @ -L.matrix)
        GD = GD + w * (GR @ D.matrix)
    M = np.linalg.solve(G, GM)
    LL = np.linalg.solve(G, GD)
    return Superoperator(M, model.dim), Superoperator(LL, model.dim)


class KernelRealization:
    """Exact state-space form of the ensemble kernel matrix.

    With A = blockdiag(L_R), broadcast B, weighted average C and the
    projector Q = 1 - BC,

        M(u) = -CAB - CAQ (u - QAQ)^{-1} QAB,

    so M(t) = M_markov delta(t) + H exp(F t) J with F = QAQ restricted to the
    traceless part of range(Q).  Its eigenvalues are the kernel poles.
    """

    def __init__(self, model):
        Ls = [L.matrix for L in model.liouvillians]
        P = np.asarray(model.weights)
        n = Ls[0].shape[0]
        N = len(Ls)
        A = np.zeros((N * n, N * n), dtype=complex)
        for k, L in enumerate(Ls):
            A[k * n : (k + 1) * n, k * n : (k + 1) * n] = L
        B = np.vstack([np.eye(n)] * N)
        C = np.hstack([p * np.eye(n) for p in P])
        Q = np.eye(N * n) - B @ C
        traceless = np.arange(N * n) % n != 0
        Qr = Q[np.ix_(traceless, traceless)]
        U, s, _ = np.linalg.svd(Qr)
        rank = int((s > 1e-12 * max(s.max(), 1.0)).sum()) if s.size else 0
        Ufull = np.zeros((N * n, rank), dtype=complex)
        Ufull[traceless] = U[:, :rank]
        V = Ufull.conj().T @ Q
        self.n = n
        self.markov = -(C @ A @ B)
        self.F = V @ A @ Ufull
        self.H = -(C @ A @ Ufull)
        self.J = V @ A @ B

    def laplace(self, u):
        """M(u) (expectation-value coordinates)."""
        if self.F.size == 0:
            return self.markov.copy()
        return self.markov + self.H @ np.linalg.solve(u * np.eye(len(self.F)) - self.F, self.J)

    def memory(self, t):
        """Regular part of M(t) for t > 0."""
        if self.F.size == 0:
            return np.zeros_like(self.markov)
        return self.H @ Flow(self.F).matrix(t) @ self.J

    def poles_residues(self, merge=tol.POLE_MERGE):
        """(poles, residue matrices) with M(t) = markov delta + sum R_k e^{p_k t}.

        Poles closer than ``merge`` are merged and their residues summed;
        contributions with negligible residue are dropped.
        """
        if self.F.size == 0:
            return np.zeros(0, dtype=complex), np.zeros((0, self.n, self.n), dtype=complex)
        w, V = np.linalg.eig(self.F)
        if np.linalg.cond(V) > tol.EIG_CONDITION_MAX:
            from .errors import DegeneratePoleError

            raise DegeneratePoleError("kernel generator is not diagonalisable (Jordan block)")
        Vinv = np.linalg.inv(V)
        res = np.einsum("ik,kj->kij", self.H @ V, Vinv @ self.J)
        poles, residues = [], []
        for p, R in zip(w, res):
            for k, q in enumerate(poles):
                if abs(p - q) <= merge * max(1.0, abs(q)):
                    residues[k] = residues[k] + R
                    break
            else:
                poles.append(p)
                residues.append(R)
        poles = np.array(poles)
        residues = np.array(residues)
        scale = max(np.abs(residues).max(), 1e-300)
        keep = np.abs(residues).reshape(len(poles), -1).max(axis=1) > 1e-14 * scale
        return poles[keep], residues[keep]


@dataclass
class StationaryLaunch:
    """Member states at the stationarity-detected time standing in for t = infinity."""

    t: float
    converged: bool
    member_coords: list
    rho: np.ndarray


def _slowest_rate(model):
    rates = []
    for L in model.liouvillians:
        re = np.abs(np.linalg.eigvals(L.matrix).real)
        re = re[re > 1e-300]
        if re.size:
            rates.append(re.min())
    return min(rates) if rates else 1.0


def stationary_launch(model, rho0):
    """Propagate until ||d rho_S/dt|| < 1e-10 or t = 1e3 / (slowest rate)."""
    rho0 = check_density(rho0)
    basis = hermitian_basis(model.dim)
    x0 = basis.coords(rho0)
    flows = [Flow(L) for L in model.liouvillians]
    t_cap = 1e3 / _slowest_rate(model)
    t = 0.0
    t_next = 1.0 / max(model.max_rate(), 1e-300)
    while True:
        coords = [f.matrix(t) @ x0 for f in flows]
        deriv = sum(w * (L.matrix @ c) for w, L, c in zip(model.weights, model.liouvillians, coords))
        converged = float(np.abs(basis.operator(deriv)).max()) < tol.STATIONARITY
        if converged or t >= t_cap:
            rho = basis.operator(sum(w * c for w, c in zip(model.weights, coords)))
            return StationaryLaunch(t, converged, coords, rho)
        t = min(t_next, t_cap)
        t_next *= 2
