"""Closed forms for the two-level system in a random-rate thermal reservoir.

Unless a function takes a TlsModel, ``e`` is a RateEnsemble of *effective*
rates gamma_R = gamma'_R (1 + 2 n_th); a TlsModel is accepted anywhere an
ensemble is and contributes its effective rates.  Bloch-vector Volterra
states are ordered (1, S_X, S_Y, S_Z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import KernelRealization, Trajectory, ensemble_density
from .ensemble import RateEnsemble, TlsModel
from .kernels import RationalKernel, invert_rational_kernel, kernel_from_laplace
from .operators import ID2, SM, SP, SX, SY, SZ, Superoperator, density_to_bloch, lindblad_superop
from .volterra import MemoryTerm, volterra_evolve


def effective_ensemble(e):
    if isinstance(e, TlsModel):
        return RateEnsemble(e.rates, e.weights)
    return e


def _rw(e):
    e = effective_ensemble(e)
    return np.asarray(e.rates, dtype=float), np.asarray(e.weights, dtype=float)


def _mix(e, fn):
    """sum_R P_R fn(gamma_R), broadcasting over the leading axes of fn's argument."""
    g, P = _rw(e)
    return np.sum(P * fn(g), axis=-1)


@dataclass
class SurvivalPair:
    t: np.ndarray
    P_Pi: np.ndarray
    P_Phi: np.ndarray


def p_pi(e, t):
    t = np.asarray(t, dtype=float)
    return _mix(e, lambda g: np.exp(-np.multiply.outer(t, g)))


def p_phi(e, gamma_phi, t):
    t = np.asarray(t, dtype=float)
    return np.exp(-gamma_phi * t) * p_pi(e, t / 2)


def survival_functions(e, gamma_phi, tgrid):
    """P_Pi(t) = <exp(-gamma_R t)> and P_Phi(t) = exp(-gamma_Phi t) P_Pi(t/2)."""
    t = np.asarray(tgrid, dtype=float)
    return SurvivalPair(t, p_pi(e, t), p_phi(e, gamma_phi, t))


def deviation_functions(e, gamma_phi, t, tau):
    """(f0, f_Phi, f_Pi): transient departures from exponential factorisation."""
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    f0 = np.exp(-gamma_phi * tau) * p_pi(e, t + tau / 2) - p_pi(e, t) * p_phi(e, gamma_phi, tau)
    f_phi = p_phi(e, gamma_phi, t + tau) - p_phi(e, gamma_phi, t) * p_phi(e, gamma_phi, tau)
    f_pi = p_pi(e, t + tau) - p_pi(e, t) * p_pi(e, tau)
    return f0, f_phi, f_pi


def sz_free(e, n_th, SZ0, t):
    s_inf = -1.0 / (1 + 2 * n_th)
    return s_inf + p_pi(e, t) * (SZ0 - s_inf)


def cxy_closed_form(e, gamma_phi, n_th, SZ0, t, tau):
    """<sx(t) sy(t+tau)> for free decay."""
    s_inf = -1.0 / (1 + 2 * n_th)
    f0, _, _ = deviation_functions(e, gamma_phi, t, tau)
    return 1j * (p_phi(e, gamma_phi, tau) * sz_free(e, n_th, SZ0, t) + f0 * (SZ0 - s_inf))


def population_kernel(e, u):
    """K(u) = <gamma_R/(u+gamma_R)> / <1/(u+gamma_R)>."""
    u = np.asarray(u, dtype=complex)
    return 1.0 / _mix(e, lambda g: 1.0 / (u[..., None] + g)) - u


def coherence_kernel(e, gamma_phi, u):
    """K_Phi(u), the same ratio built on gamma_R/2 + gamma_Phi."""
    u = np.asarray(u, dtype=complex)
    return 1.0 / _mix(e, lambda g: 1.0 / (u[..., None] + g / 2 + gamma_phi)) - u


@dataclass
class DrivenKernels:
    u: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    gamma_x: np.ndarray
    gamma_y: np.ndarray
    gamma_z: np.ndarray
    upsilon: np.ndarray


def driven_kernels(e, gamma_phi, omega, u):
    """Exact Laplace kernels of the driven Bloch equations (vectorised over u)."""
    u = np.asarray(u, dtype=complex)
    uu = u[..., None]
    g, P = _rw(e)
    T = 0.5 / ((uu + g) * (uu + g / 2 + gamma_phi) + omega**2)
    PT = P * T
    B = np.sum(PT * g, axis=-1) / np.sum(PT, axis=-1)
    C = np.sum(PT * g * g, axis=-1) / np.sum(PT * g, axis=-1)
    D = (B / 2) / ((u + B) * (u + B / 2 + gamma_phi) + omega**2)
    gx = coherence_kernel(e, gamma_phi, u)
    gy = D * ((u + C) * (B / 2 + u + gamma_phi) + omega**2) + gamma_phi
    gz = 2 * D * ((u + B) * (C / 2 + u + gamma_phi) + omega**2)
    ups = D * (C - B) * omega
    return DrivenKernels(u, B, C, D, gx, gy, gz, ups)


def lindblad_u_matrix(e, gamma_phi, omega, n_th, u):
    """(Upsilon(u)/2, a(u)) for the channels V = (sigma, sigma^+, sigma_z).

    The memory superoperator is -i (Upsilon/2)[sx, .] plus the Lindblad form
    with the returned 3x3 coefficient matrix.
    """
    k = driven_kernels(e, gamma_phi, omega, complex(u))
    gx, gy, gz, ups = (complex(v) for v in (k.gamma_x, k.gamma_y, k.gamma_z, k.upsilon))
    pp = n_th / (1 + 2 * n_th)
    pm = (1 + n_th) / (1 + 2 * n_th)
    c = 1j * ups / (4 * (1 + 2 * n_th))
    a = np.array(
        [
            [pm * gz, -(gx - gy) / 2, -c],
            [-(gx - gy) / 2, pp * gz, -c],
            [c, c, (gx + gy - gz) / 4],
        ]
    )
    return ups / 2, a


def memory_superop(e, gamma_phi, omega, n_th, u):
    """Assembled memory superoperator LL(u) of the density-matrix equation."""
    h, a = lindblad_u_matrix(e, gamma_phi, omega, n_th, u)
    ham = Superoperator.from_map(lambda X: -1j * h * (SX @ X - X @ SX), 2)
    return ham + lindblad_superop(a, [SM, SP, SZ], hermitian=False)


def stationary_bloch(e, gamma_phi, omega, n_th):
    """Member stationary Bloch vectors, shape (N, 3)."""
    g, _ = _rw(e)
    s_inf = -1.0 / (1 + 2 * n_th)
    gphi = g / 2 + gamma_phi
    den = g * gphi + omega**2
    sz = g * gphi * s_inf / den
    sy = -omega * g * s_inf / den
    return np.column_stack([np.zeros_like(g), sy, sz])


def stationary_dispersion_closed_form(e, gamma_phi, omega, n_th):
    """Covariance of the member stationary Bloch vectors across the ensemble."""
    _, P = _rw(e)
    S = stationary_bloch(e, gamma_phi, omega, n_th)
    mean = P @ S
    return (S * P[:, None]).T @ S - np.outer(mean, mean)


def coherent_closed_form(e, gamma_phi, omega, n_th):
    """(exact, QRT) values of <sigma^+(inf) sigma(inf + inf)>."""
    _, P = _rw(e)
    S = stationary_bloch(e, gamma_phi, omega, n_th)
    amp = (S[:, 0] + 1j * S[:, 1]) / 2  # <sigma^+> per member
    return float(np.sum(P * np.abs(amp) ** 2)), float(np.abs(np.sum(P * amp)) ** 2)


def intensity_asymptotics(e, gamma_phi, n_th, omega):
    """Leading-order stationary dispersion in the weak and strong drive limits.

    Both estimates refer to the S_Y-S_Y entry: Omega^2 Var(1/gamma^Phi_R) and
    Var(gamma_R)/Omega^2, each over (1 + 2 n_th)^2.
    """
    g, P = _rw(e)

    def var(x):
        m = np.sum(P * x)
        return float(max(np.sum(P * x * x) - m * m, 0.0))

    scale = (1 + 2 * n_th) ** 2
    low = omega**2 * var(1.0 / (g / 2 + gamma_phi)) / scale
    high = var(g) / omega**2 / scale if omega > 0 else np.inf
    return low, high


def _bloch_states(x):
    S = np.real(x[:, 1:4])
    return 0.5 * (ID2 + S[:, 0, None, None] * SX + S[:, 1, None, None] * SY + S[:, 2, None, None] * SZ)


def _bloch_start(rho0):
    return np.concatenate([[1.0], density_to_bloch(rho0)])


def _zero():
    return np.zeros((4, 4))


def _solve(local, terms, rho0, tgrid, **kw):
    res = volterra_evolve(local, terms, _bloch_start(rho0), tgrid, **kw)
    traj = Trajectory(res.tgrid, _bloch_states(res.x))
    traj.states[0] = np.asarray(rho0, dtype=complex)
    return traj


def _coherence_term(K, scale=1.0):
    Bx = _zero()
    Bx[1, 1] = Bx[2, 2] = -scale
    return MemoryTerm(K, Bx)


def _population_term(K, s_inf):
    Bz = _zero()
    Bz[3, 3] = -1
    Bz[3, 0] = s_inf
    return MemoryTerm(K, Bz)


def free_decay_volterra(model, rho0, tgrid, **kw):
    """Non-Markovian Bloch equations of free decay solved with exact kernels.

    Populations relax with K and coherences with K_Phi.
    """
    e = effective_ensemble(model)
    K = invert_rational_kernel(e, "population")
    KP = invert_rational_kernel(e, "coherence", model.gamma_phi)
    terms = [_coherence_term(KP), _population_term(K, model.sz_inf)]
    return _solve(_zero(), terms, rho0, tgrid, **kw)


def master_approximation(e, gamma_phi, n_th, tgrid, rho0, **kw):
    """Single-kernel approximated master equation and its gap to the exact evolution.

    Coherences obey dS/dt = -gamma_Phi S - (1/2) int K S; populations keep the
    exact K.  Returns (trajectory, sup-norm Bloch-vector gap).
    """
    e = effective_ensemble(e)
    K = invert_rational_kernel(e, "population")
    local = _zero()
    local[1, 1] = local[2, 2] = -gamma_phi
    terms = [_coherence_term(K, 0.5), _population_term(K, -1.0 / (1 + 2 * n_th))]
    model = TlsModel(e.scaled(1.0 / (1 + 2 * n_th)), n_th=n_th, gamma_phi=gamma_phi)
    traj = _solve(local, terms, rho0, tgrid, **kw)
    exact = ensemble_density(model, rho0, tgrid)
    gap = float(np.abs(traj.bloch - exact.bloch).max())
    return traj, gap


def driven_rational_kernels(model):
    """Time-domain forms of Gamma_X, Gamma_Y, Gamma_Z and Upsilon.

    Poles are the eigenvalues of the ensemble kernel realisation; residues
    come from contour integrals of the closed-form Laplace kernels.  The
    delta weights are the u -> infinity limits <gamma^Phi_R>, <gamma^Phi_R>,
    <gamma_R> and 0.
    """
    e = effective_ensemble(model)
    gphi, om = model.gamma_phi, model.omega_rabi
    gx = invert_rational_kernel(e, "coherence", gphi)
    w = np.linalg.eigvals(KernelRealization(model).F) if len(e) > 1 else np.zeros(0)
    poles = []
    for p in w:
        if all(abs(p - q) > 1e-8 * max(1.0, abs(q)) for q in poles):
            poles.append(p)
    mean = float(np.dot(e.weights, e.rates))

    def part(name, markov):
        fn = lambda u: complex(getattr(driven_kernels(e, gphi, om, u), name))  # noqa: E731
        k = kernel_from_laplace(fn, poles, markov)
        keep = np.abs(k.residues) > 1e-13 * max(np.abs(k.residues).max(initial=0.0), 1.0)
        return RationalKernel(markov, k.poles[keep], k.residues[keep])

    gy = part("gamma_y", mean / 2 + gphi)
    gz = part("gamma_z", mean)
    ups = part("upsilon", 0.0)
    return gx, gy, gz, ups


def driven_volterra(model, rho0, tgrid, **kw):
    """Driven non-Markovian Bloch equations with the exact driven kernels."""
    gx, gy, gz, ups = driven_rational_kernels(model)
    om, s_inf = model.omega_rabi, model.sz_inf
    local = _zero()
    local[2, 3] = -om
    local[3, 2] = om
    Bx = _zero()
    Bx[1, 1] = -1
    By = _zero()
    By[2, 2] = -1
    Bu = _zero()
    Bu[2, 3] = -1
    Bu[2, 0] = s_inf
    Bu[3, 2] = 1
    terms = [MemoryTerm(gx, Bx), MemoryTerm(gy, By), MemoryTerm(ups, Bu), _population_term(gz, s_inf)]
    return _solve(local, terms, rho0, tgrid, **kw)
