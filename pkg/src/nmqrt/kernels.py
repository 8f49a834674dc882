"""Rational memory kernels and their exact time-domain (partial-fraction) form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import tolerances as tol
from .errors import DegeneratePoleError, ValidationError


@dataclass(frozen=True, eq=False)
class RationalKernel:
    """K(t) = markov_weight * delta(t) + sum_k residues[k] * exp(poles[k] t)."""

    markov_weight: complex
    poles: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        c = np.atleast_1d(np.asarray(self.residues, dtype=complex))
        if p.shape != c.shape:
            raise ValidationError("poles and residues must have equal length")
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", c)

    def laplace(self, u):
        u = np.asarray(u, dtype=complex)
        return self.markov_weight + np.sum(self.residues / (u[..., None] - self.poles), axis=-1)

    def regular(self, t):
        """Smooth part sum_k c_k e^{p_k t} (excludes the delta term)."""
        t = np.asarray(t, dtype=float)
        return np.sum(self.residues * np.exp(np.multiply.outer(t, self.poles)), axis=-1)

    @property
    def is_markovian(self):
        return len(self.poles) == 0 or bool(np.all(self.residues == 0))

    def is_stable(self):
        return bool(np.all(self.poles.real < 0))


def _mixture_rates(e, kind, gamma_phi):
    if kind == "population":
        rates = np.asarray(e.rates, dtype=float)
    elif kind == "coherence":
        rates = np.asarray(e.rates, dtype=float) / 2 + gamma_phi
    else:
        raise ValidationError(f"unknown kernel kind {kind!r}")
    w = np.asarray(e.weights, dtype=float)
    keep = w > 0
    return rates[keep], w[keep]


def mixture_kernel(rates, weights, u):
    """K(u) = <g/(u+g)> / <1/(u+g)> = 1/<1/(u+g)> - u."""
    u = np.asarray(u, dtype=complex)
    f = np.sum(weights / (u[..., None] + rates), axis=-1)
    return 1.0 / f - u


def invert_rational_kernel(e, kind="population", gamma_phi=0.0):
    """Exact partial fractions of the population kernel K or coherence kernel K_Phi.

    ``e`` holds the effective rates gamma_R.  The poles are the zeros of
    f(u) = sum_R P_R/(u + g_R), one in each gap between consecutive -g_R, and
    the residue at a pole p is 1/f'(p).
    """
    rates, weights = _mixture_rates(e, kind, gamma_phi)
    order = np.argsort(rates)
    g = rates[order]
    P = weights[order]
    mean = float(np.dot(P, g))
    if len(g) < 2:
        return RationalKernel(mean, [], [])

    def f(u):
        return np.sum(P / (u + g))

    poles = []
    for lo, hi in zip(g[:-1], g[1:]):
        gap = hi - lo
        a = -hi + gap * 1e-13
        b = -lo - gap * 1e-13
        if not (f(a) > 0 > f(b)):
            raise DegeneratePoleError(f"cannot bracket kernel pole between -{hi:g} and -{lo:g}")
        poles.append(brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
    poles = np.array(poles)
    residues = -1.0 / np.array([np.sum(P / (p + g) ** 2) for p in poles])

    merged_p, merged_c = [], []
    for p, c in zip(poles, residues):
        if merged_p and abs(p - merged_p[-1]) <= tol.POLE_MERGE * max(1.0, abs(p)):
            merged_c[-1] += c
        else:
            merged_p.append(p)
            merged_c.append(c)
    return RationalKernel(mean, merged_p, merged_c)


def residues_by_contour(fn, poles, nodes=64, shrink=0.3):
    """Residues of a meromorphic ``fn`` at known simple poles.

    Trapezoid rule on a circle of radius ``shrink`` times the distance to the
    nearest other pole; exponentially accurate for analytic remainders.
    """
    poles = np.asarray(poles, dtype=complex)
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    ring = np.exp(1j * theta)
    out = []
    for k, p in enumerate(poles):
        others = np.delete(poles, k)
        d = np.abs(others - p).min() if others.size else abs(p)
        r = shrink * d
        z = p + r * ring
        vals = np.array([fn(zz) for zz in z])
        out.append(np.mean(vals * r * ring))
    return np.array(out)


def kernel_from_laplace(fn, poles, markov_weight):
    """RationalKernel for a Laplace-domain function with the given simple poles."""
    return RationalKernel(markov_weight, poles, residues_by_contour(fn, poles))
