"""Two-time and three-operator correlations: exact ensemble averages versus the QRT.

With rho_R(t) the member states and G_R(tau) = exp(L_R tau),

    exact  <O(t) A(t+tau)> = sum_R P_R Tr{A G_R(tau)[rho_R(t) O]}
    QRT                    = sum_R P_R Tr{A G_R(tau)[rho_S(t) O]}

so the deviation is the covariance sum_R P_R Tr{A G_R(tau)[(rho_R - rho_S) O]}.
A waiting time of ``np.inf`` launches from the stationarity-detected state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .balance import stationary_states
from .dynamics import _check_grid, stationary_launch
from .errors import ValidationError
from .operators import Flow, check_density, hermitian_basis


@dataclass
class CorrelationGrid:
    t: float
    taugrid: np.ndarray
    exact: np.ndarray
    qrt: np.ndarray
    deviation: np.ndarray
    meta: dict = field(default_factory=dict)

    def rows(self):
        for tau, e, q, d in zip(self.taugrid, self.exact, self.qrt, self.deviation):
            yield [self.t, tau, e.real, e.imag, q.real, q.imag, d.real, d.imag]

    def to_csv(self, path, meta=None):
        from .io import write_csv

        header = ["t", "tau", "exact_re", "exact_im", "qrt_re", "qrt_im", "dev_re", "dev_im"]
        return write_csv(path, header, self.rows(), {**self.meta, **(meta or {})})


@dataclass
class MemberStates:
    """Member density coordinates at the waiting time t."""

    t: float
    coords: np.ndarray  # (N, d^2)
    launch_time: float
    stationary: bool | None


def member_states(model, rho0, t):
    basis = hermitian_basis(model.dim)
    rho0 = check_density(rho0)
    x0 = basis.coords(rho0)
    if np.isinf(t):
        launch = stationary_launch(model, rho0)
        return MemberStates(t, np.array(launch.member_coords), launch.t, launch.converged)
    if t < 0:
        raise ValidationError("waiting time must be nonnegative")
    coords = np.array([Flow(L).matrix(t) @ x0 for L in model.liouvillians])
    return MemberStates(t, coords, t, None)


def _ops(model, coords):
    return hermitian_basis(model.dim).operator(coords)


def _propagate_pair(model, carriers, A, taugrid, workers=1):
    """(N, T) values Tr{A G_R(tau)[carrier_R]} for every member and delay."""
    basis = hermitian_basis(model.dim)
    a = basis.pairing(A)
    xs = basis.coords(carriers)

    def one(k):
        return Flow(model.liouvillians[k]).apply(xs[k], taugrid) @ a

    idx = range(len(model.weights))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return np.array(list(pool.map(one, idx)))
    return np.array([one(k) for k in idx])


def _reduce(model, values):
    out = np.zeros(values.shape[1:], dtype=complex)
    for w, v in zip(model.weights, values):
        out = out + w * v
    return out


def _meta(states):
    meta = {"t": states.t, "launch_time": states.launch_time}
    if states.stationary is not None:
        meta["stationary"] = states.stationary
    return meta


def _prepare(model, O, A, rho0, t, taugrid):
    taugrid = _check_grid(taugrid)
    states = member_states(model, rho0, t)
    rhos = _ops(model, states.coords)
    rho_s = _reduce(model, rhos[:, None])[0]
    return taugrid, states, rhos, rho_s, np.asarray(O, dtype=complex), np.asarray(A, dtype=complex)


def _channel(model, carriers, A, taugrid, workers, equal_time):
    out = _reduce(model, _propagate_pair(model, carriers, A, taugrid, workers))
    # both constructions share the equal-time value Tr{A rho_S O}
    out[taugrid == 0] = equal_time
    return out


def _equal_time(rho_s, O, A):
    return complex(np.trace(A @ rho_s @ O))


def exact_two_time(model, O, A, rho0, t, taugrid, workers=1):
    taugrid, _, rhos, rho_s, O, A = _prepare(model, O, A, rho0, t, taugrid)
    return _channel(model, rhos @ O, A, taugrid, workers, _equal_time(rho_s, O, A))


def qrt_two_time(model, O, A, rho0, t, taugrid, workers=1):
    taugrid, _, rhos, rho_s, O, A = _prepare(model, O, A, rho0, t, taugrid)
    carriers = np.broadcast_to(rho_s @ O, rhos.shape)
    return _channel(model, carriers, A, taugrid, workers, _equal_time(rho_s, O, A))


def deviation_F(model, O, A, rho0, t, taugrid, workers=1):
    """F(t, tau) = <G_R(tau) X_R> - <G_R(tau)><X_R>, as a covariance sum."""
    taugrid, _, rhos, rho_s, O, A = _prepare(model, O, A, rho0, t, taugrid)
    return _channel(model, (rhos - rho_s) @ O, A, taugrid, workers, 0.0)


def correlate(model, O, A, rho0, t, taugrid, workers=1):
    """CorrelationGrid with exact, QRT and deviation channels."""
    taugrid, states, rhos, rho_s, O, A = _prepare(model, O, A, rho0, t, taugrid)
    eq = _equal_time(rho_s, O, A)
    exact = _channel(model, rhos @ O, A, taugrid, workers, eq)
    qrt = _channel(model, np.broadcast_to(rho_s @ O, rhos.shape), A, taugrid, workers, eq)
    dev = _channel(model, (rhos - rho_s) @ O, A, taugrid, workers, 0.0)
    return CorrelationGrid(t, taugrid, exact, qrt, dev, _meta(states))


def exact_three_op(model, O1, A, O2, rho0, t, tau):
    """<O1(t) A(t+tau) O2(t)> = sum_R P_R Tr{A G_R(tau)[O2 rho_R(t) O1]}."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    states = member_states(model, rho0, t)
    rhos = _ops(model, states.coords)
    carriers = np.asarray(O2) @ rhos @ np.asarray(O1)
    out = _reduce(model, _propagate_pair(model, carriers, A, tau))
    return out if out.size > 1 else complex(out[0])


def qrt_three_op(model, O1, A, O2, rho0, t, tau):
    """Three-operator correlation with the averaged propagator acting on the averaged carrier."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    states = member_states(model, rho0, t)
    rhos = _ops(model, states.coords)
    rho_s = _reduce(model, rhos[:, None])[0]
    carriers = np.broadcast_to(np.asarray(O2) @ rho_s @ np.asarray(O1), rhos.shape)
    out = _reduce(model, _propagate_pair(model, carriers, A, tau))
    return out if out.size > 1 else complex(out[0])


@dataclass
class FluctuationCorrelation:
    exact: np.ndarray
    qrt: np.ndarray
    deltaF: np.ndarray
    residual: float


def fluctuation_correlation(model, O, A, rho0, t, taugrid):
    """Fluctuation-operator correlation, its QRT propagation and the deviation dF.

    exact: <O(t)A(t+tau)> - <O(t)><A(t+tau)>.  qrt: the averaged propagator
    applied to the member-averaged equal-time fluctuation carrier
    <rho_R O - <O>_R rho_R>.  dF uses its two-part definition; ``residual``
    is |exact - qrt - dF|.
    """
    taugrid, _, rhos, rho_s, O, A = _prepare(model, O, A, rho0, t, taugrid)
    o_r = np.einsum("kab,ba->k", rhos, O)  # <O(t)>_R
    fluct = rhos @ O - o_r[:, None, None] * rhos
    fluct_avg = _reduce(model, fluct[:, None])[0]
    a_r = _propagate_pair(model, rhos, A, taugrid)  # <A(t+tau)>_R
    exact_full = _reduce(model, _propagate_pair(model, rhos @ O, A, taugrid))
    o_s = complex(np.dot(model.weights, o_r))
    a_s = _reduce(model, a_r)
    exact = exact_full - o_s * a_s
    qrt = _reduce(model, _propagate_pair(model, np.broadcast_to(fluct_avg, rhos.shape), A, taugrid))
    cov_g = _reduce(model, _propagate_pair(model, fluct - fluct_avg, A, taugrid))
    cov_c = _reduce(model, o_r[:, None] * a_r) - o_s * a_s
    dF = cov_g + cov_c
    residual = float(np.abs(exact - qrt - dF).max())
    return FluctuationCorrelation(exact, qrt, dF, residual)


def coherent_component(model, O, A):
    """(exact, QRT) coherent components from member stationary solves."""
    members, _ = stationary_states(model)
    o = np.array([np.trace(np.asarray(O) @ r) for r in members])
    a = np.array([np.trace(np.asarray(A) @ r) for r in members])
    P = np.asarray(model.weights)
    return complex(np.sum(P * o * a)), complex(np.sum(P * o) * np.sum(P * a))
