"""Linear Volterra integro-differential equations with rational kernels.

Solves

    dx/dt = A x(t) + sum_j int_0^t k_j(t - s) B_j x(s) ds

where every k_j is a RationalKernel.  The delta part of each kernel is
folded into the local generator; each pole p of the smooth part gets an
auxiliary state y with dy/dt = p y + B_j x, so the memory costs O(#poles)
per step instead of a history convolution.  Integration is classical RK4
on a fixed step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import tolerances as tol
from .errors import StabilityError, StabilityWarning, ValidationError


@dataclass(frozen=True, eq=False)
class MemoryTerm:
    kernel: object  # RationalKernel
    structure: np.ndarray


@dataclass
class VolterraResult:
    tgrid: np.ndarray
    x: np.ndarray  # (T, n)
    memory: np.ndarray  # (T, n) value of the convolution terms, delta parts included
    step: float
    substeps: int


def _uniform(tgrid):
    tgrid = np.asarray(tgrid, dtype=float)
    if tgrid.ndim != 1 or tgrid.size < 2 or tgrid[0] != 0:
        raise ValidationError("time grid must start at 0 and have at least two points")
    h = np.diff(tgrid)
    if np.any(h <= 0) or np.ptp(h) > 1e-9 * h.mean():
        raise ValidationError("Volterra solver requires a uniform time grid")
    return tgrid, float(h.mean())


def volterra_evolve(local, memory, x0, tgrid, substeps=None, step_rate=0.02, strict=False):
    """Integrate the memory equation on a uniform output grid.

    ``substeps`` internal RK4 steps are taken per output interval; by default
    enough that h * (fastest local rate or pole) <= ``step_rate``.
    """
    tgrid, h_out = _uniform(tgrid)
    A = np.asarray(local, dtype=complex)
    n = len(A)
    x0 = np.asarray(x0, dtype=complex)
    terms = [m if isinstance(m, MemoryTerm) else MemoryTerm(*m) for m in memory]

    A_eff = A.copy()
    poles, coeffs, owners = [], [], []
    structures = []
    for j, term in enumerate(terms):
        Bj = np.asarray(term.structure, dtype=complex)
        if Bj.shape != (n, n):
            raise ValidationError(f"memory structure {j} has shape {Bj.shape}, expected {(n, n)}")
        structures.append(Bj)
        A_eff = A_eff + term.kernel.markov_weight * Bj
        for p, c in zip(term.kernel.poles, term.kernel.residues):
            poles.append(p)
            coeffs.append(c)
            owners.append(j)
    poles = np.array(poles, dtype=complex)
    coeffs = np.array(coeffs, dtype=complex)
    Bstack = np.array([structures[j] for j in owners]).reshape(len(owners), n, n)

    pole_scale = float(np.abs(poles).max()) if poles.size else 0.0
    rate_scale = max(pole_scale, float(np.abs(np.linalg.eigvals(A_eff)).max()), 1e-300)
    if substeps is None:
        substeps = max(1, int(np.ceil(h_out * rate_scale / step_rate)))
    h = h_out / substeps
    if h * pole_scale > tol.STEP_POLE:
        msg = f"step h={h:.3g} too large for kernel poles: h*max|p| = {h * pole_scale:.3g} > {tol.STEP_POLE}"
        if strict:
            raise StabilityError(msg)
        warnings.warn(msg, StabilityWarning, stacklevel=2)

    def rhs(x, Y):
        dx = A_eff @ x
        if poles.size:
            dx = dx + coeffs @ Y
            dY = poles[:, None] * Y + Bstack @ x
        else:
            dY = Y
        return dx, dY

    def mem(x, Y):
        out = (A_eff - A) @ x
        return out + coeffs @ Y if poles.size else out

    x = x0.copy()
    Y = np.zeros((len(poles), n), dtype=complex)
    xs = [x.copy()]
    ms = [mem(x, Y)]
    for _ in range(len(tgrid) - 1):
        for _ in range(substeps):
            k1x, k1y = rhs(x, Y)
            k2x, k2y = rhs(x + 0.5 * h * k1x, Y + 0.5 * h * k1y)
            k3x, k3y = rhs(x + 0.5 * h * k2x, Y + 0.5 * h * k2y)
            k4x, k4y = rhs(x + h * k3x, Y + h * k3y)
            x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            if poles.size:
                Y = Y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        xs.append(x.copy())
        ms.append(mem(x, Y))
    return VolterraResult(tgrid, np.array(xs), np.array(ms), h, substeps)


def convolve_direct(memory, tgrid, xs):
    """Memory terms evaluated by direct quadrature of the convolution.

    Composite Simpson over the sampled history ``xs``; the reference path
    against which the auxiliary-variable reduction is checked.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    xs = np.asarray(xs, dtype=complex)
    terms = [m if isinstance(m, MemoryTerm) else MemoryTerm(*m) for m in memory]
    out = np.zeros_like(xs)
    for i, t in enumerate(tgrid):
        for term in terms:
            B = np.asarray(term.structure, dtype=complex)
            out[i] += term.kernel.markov_weight * (B @ xs[i])
            if i == 0:
                continue
            k = term.kernel.regular(t - tgrid[: i + 1])
            integrand = k[:, None] * (xs[: i + 1] @ B.T)
            out[i] += simpson(integrand, x=tgrid[: i + 1], axis=0)
    return out
