"""Dense operator and superoperator algebra.

Superoperators are stored as matrices acting on operator coordinates in a
trace-orthonormal Hermitian basis ``{B_i}``, i.e. ``x_i = Tr{B_i X}`` and
``S_ij = Tr{B_i S[B_j]}``.  In this representation the dual under the trace
pairing is the plain transpose and a Hermiticity-preserving map has a real
matrix.  Coordinates of a density matrix are (up to normalisation) the
expectation values of the basis operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import tolerances as tol
from .errors import InvalidDimensionError, SingularityError, ValidationError

# Two-level operators; index 0 is the upper level |+>.
ID2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)  # sigma^dagger = |+><-|
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # sigma = |-><+|
UP = np.array([[1, 0], [0, 0]], dtype=complex)
DOWN = np.array([[0, 0], [0, 1]], dtype=complex)

PAULI = {"id": ID2, "sx": SX, "sy": SY, "sz": SZ, "sp": SP, "sm": SM}


def is_hermitian(X, atol=tol.STRUCTURE):
    X = np.asarray(X)
    return np.allclose(X, X.conj().T, rtol=0, atol=atol)


def check_density(rho, atol=tol.STRUCTURE):
    """Raise ValidationError unless rho is a valid density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, atol):
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValidationError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho).min() < tol.POSITIVITY:
        raise ValidationError("density matrix has negative eigenvalues")
    return rho


def bloch_to_density(r):
    """rho = (I + r.sigma)/2 for a Bloch vector of norm <= 1."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValidationError("Bloch vector must have three components")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ValidationError(f"Bloch vector norm {np.linalg.norm(r):.6g} exceeds 1")
    return 0.5 * (ID2 + r[0] * SX + r[1] * SY + r[2] * SZ)


def density_to_bloch(rho):
    rho = np.asarray(rho)
    return np.real([np.trace(rho @ SX), np.trace(rho @ SY), np.trace(rho @ SZ)])


@dataclass(frozen=True)
class HermitianBasis:
    """Trace-orthonormal Hermitian operator basis; element 0 is I/sqrt(dim)."""

    dim: int
    elements: np.ndarray  # (dim**2, dim, dim)
    #: B_i^* = reversal_signs[i] * B_i (entrywise conjugation)
    reversal_signs: np.ndarray

    def __len__(self):
        return self.dim**2

    def __getitem__(self, i):
        return self.elements[i]

    def coords(self, X):
        """x_i = Tr{B_i X}; works on a stack of operators (..., d, d)."""
        return np.einsum("iab,...ba->...i", self.elements, np.asarray(X, dtype=complex))

    def operator(self, x):
        return np.einsum("...i,iab->...ab", np.asarray(x, dtype=complex), self.elements)

    def pairing(self, A):
        """Row vector a with Tr{A X} = a @ coords(X)."""
        return np.einsum("ab,iba->i", np.asarray(A, dtype=complex), self.elements)


@lru_cache(maxsize=None)
def hermitian_basis(dim):
    """Generalised Gell-Mann basis normalised to Tr{B_i B_j} = delta_ij.

    Ordering: identity, then for each pair j<k the symmetric and the
    antisymmetric element, then the traceless diagonals.  For dim=2 this is
    {I, sx, sy, sz}/sqrt(2).
    """
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"basis dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    els = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    signs = [1.0]
    for j in range(dim):
        for k in range(j + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k], a[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            els += [s, a]
            signs += [1.0, -1.0]
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        els.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
        signs.append(1.0)
    elements = np.array(els)
    elements.setflags(write=False)
    signs = np.array(signs)
    signs.setflags(write=False)
    return HermitianBasis(dim, elements, signs)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on d x d operators, stored in Hermitian-basis coordinates."""

    matrix: np.ndarray
    dim: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.dim**2, self.dim**2):
            raise ValidationError(f"superoperator matrix shape {m.shape} incompatible with dim={self.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def basis(self):
        return hermitian_basis(self.dim)

    @classmethod
    def from_map(cls, fn, dim):
        """Tabulate an arbitrary linear operator map X -> fn(X)."""
        basis = hermitian_basis(dim)
        cols = [basis.coords(fn(b)) for b in basis.elements]
        return cls(np.array(cols).T, dim)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim**2), dim)

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros((dim**2, dim**2)), dim)

    def apply(self, X):
        b = self.basis
        return b.operator(self.matrix @ b.coords(X))

    def __call__(self, X):
        return self.apply(X)

    def _wrap(self, m):
        return Superoperator(m, self.dim)

    def __matmul__(self, other):
        return self._wrap(self.matrix @ other.matrix)

    def __add__(self, other):
        return self._wrap(self.matrix + other.matrix)

    def __sub__(self, other):
        return self._wrap(self.matrix - other.matrix)

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __mul__(self, c):
        return self._wrap(c * self.matrix)

    __rmul__ = __mul__

    def norm(self):
        """Largest absolute matrix entry (the residual norm used throughout)."""
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    def allclose(self, other, atol=tol.STRUCTURE):
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))

    def is_trace_preserving(self, atol=tol.STRUCTURE):
        return bool(np.abs(self.matrix[0]).max() <= atol)

    def is_hermiticity_preserving(self, atol=tol.STRUCTURE):
        return bool(np.abs(self.matrix.imag).max() <= atol)


def commutator_superop(H):
    """X -> -i[H, X] (hbar = 1)."""
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H):
        raise ValidationError("Hamiltonian must be Hermitian")
    return Superoperator.from_map(lambda X: -1j * (H @ X - X @ H), H.shape[0])


def lindblad_superop(coeffs, ops, hermitian=True):
    """X -> 1/2 sum_ab a_ab ([V_a, X V_b^+] + [V_a X, V_b^+]).

    ``hermitian=False`` skips the coefficient check, for Laplace-domain
    coefficient matrices evaluated at complex u.
    """
    a = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    ops = [np.asarray(V, dtype=complex) for V in ops]
    if a.shape != (len(ops), len(ops)):
        raise ValidationError(f"coefficient matrix {a.shape} does not match {len(ops)} operators")
    if hermitian and not is_hermitian(a):
        raise ValidationError("Lindblad coefficient matrix must be Hermitian")
    dims = {V.shape for V in ops}
    if len(dims) != 1 or any(s[0] != s[1] for s in dims):
        raise ValidationError("Lindblad operators must be square with a common shape")
    dim = ops[0].shape[0]

    def fn(X):
        out = np.zeros_like(X)
        for i, Va in enumerate(ops):
            for j, Vb in enumerate(ops):
                if a[i, j] == 0:
                    continue
                Vbd = Vb.conj().T
                out += 0.5 * a[i, j] * (Va @ X @ Vbd - X @ Vbd @ Va + Va @ X @ Vbd - Vbd @ Va @ X)
        return out

    return Superoperator.from_map(fn, dim)


def left_multiplication(rho):
    """X -> rho X."""
    rho = np.asarray(rho, dtype=complex)
    return Superoperator.from_map(lambda X: rho @ X, rho.shape[0])


def dual(S):
    """Trace-pairing dual: Tr{O S[rho]} = Tr{rho S#[O]}."""
    return Superoperator(S.matrix.T, S.dim)


def reversal(X):
    """Time reversal of an operator: entrywise conjugation in the energy basis."""
    return np.conj(X)


def time_reverse(S):
    """S~ = Theta o S o Theta with Theta the (antilinear) conjugation map."""
    s = S.basis.reversal_signs
    return Superoperator(s[:, None] * S.matrix.conj() * s[None, :], S.dim)


class Flow:
    """exp(S t) for many t from a single decomposition.

    Eigendecomposition is used when the eigenvector matrix is well
    conditioned; otherwise each time falls back to scaling-and-squaring.
    """

    def __init__(self, S):
        m = S.matrix if isinstance(S, Superoperator) else np.asarray(S, dtype=complex)
        self.generator = m
        w, V = np.linalg.eig(m)
        self.cond = np.linalg.cond(V)
        self.diagonal = bool(np.isfinite(self.cond) and self.cond <= tol.EIG_CONDITION_MAX)
        if self.diagonal:
            self.eigvals = w
            self.V = V
            self.Vinv = np.linalg.inv(V)

    def matrix(self, t):
        if t < 0:
            raise ValidationError("propagation time must be nonnegative")
        if t == 0:
            return np.eye(len(self.generator), dtype=complex)
        if self.diagonal:
            return (self.V * np.exp(self.eigvals * t)) @ self.Vinv
        return scipy.linalg.expm(self.generator * t)

    def apply(self, x, times):
        """Rows exp(S t_k) x for every t_k; x may be (n,) or (n, m)."""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValidationError("propagation time must be nonnegative")
        x = np.asarray(x, dtype=complex)
        if self.diagonal:
            z = self.Vinv @ x
            phase = np.exp(np.outer(times, self.eigvals))  # (T, n)
            if x.ndim == 1:
                out = (phase * z) @ self.V.T
            else:
                out = np.einsum("tk,km,jk->tjm", phase, z, self.V)
            zero = times == 0
            out[zero] = x
            return out
        return np.array([self.matrix(t) @ x for t in times])


def expm_superop(S, t):
    return Superoperator(Flow(S).matrix(t), S.dim)


def resolvent(S, u):
    """(u Id - S)^{-1}, refusing to invert at or next to an eigenvalue."""
    m = S.matrix if isinstance(S, Superoperator) else np.asarray(S, dtype=complex)
    n = len(m)
    shifted = u * np.eye(n) - m
    if np.linalg.cond(shifted) > 1e13:
        w = np.linalg.eigvals(m)
        nearest = w[np.argmin(np.abs(w - u))]
        raise SingularityError(f"u={u} coincides with eigenvalue {nearest}", nearest)
    inv = np.linalg.solve(shifted, np.eye(n))
    if isinstance(S, Superoperator):
        return Superoperator(inv, S.dim)
    return inv
