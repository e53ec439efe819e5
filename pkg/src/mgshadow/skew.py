"""Skew-symmetric linear algebra: Pfaffians and Pfaffian-pencil polynomials.

The Pfaffian is computed by Parlett-Reid tridiagonalization with partial
pivoting (O(m^3)); a vectorized variant evaluates whole batches of small
matrices at once, which is what keeps the Monte Carlo sampling loops cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

SKEW_TOL = 1e-12
PIVOT_TOL = 1e-13
MAX_PENCIL_HALF_DIM = 32


def check_skew(entries: np.ndarray, tol: float = SKEW_TOL) -> np.ndarray:
    """Validate and return a skew-symmetric matrix (A^T = -A within tol)."""
    A = np.asarray(entries)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max()) if A.size else 1.0)
    if A.size and np.abs(A + A.T).max() > tol * scale:
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return A


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """A validated skew-symmetric matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", check_skew(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _as_skew_array(A) -> np.ndarray:
    if isinstance(A, SkewMatrix):
        return A.entries
    return check_skew(A)


def skew_submatrix(A, S) -> np.ndarray:
    """Rows and columns of A restricted to the 1-based index set S, ascending."""
    M = _as_skew_array(A)
    idx = sorted(int(s) - 1 for s in S)
    if idx and (idx[0] < 0 or idx[-1] >= M.shape[0]):
        raise ValueError(f"index set {sorted(S)} out of range for dim {M.shape[0]}")
    ix = np.asarray(idx, dtype=int)
    return M[np.ix_(ix, ix)]


def pfaffian(A) -> complex | float:
    """Pfaffian of a skew-symmetric matrix; 0 for odd dimension."""
    M = _as_skew_array(A)
    out = pfaffian_batch(M[None, :, :])[0]
    if np.iscomplexobj(M):
        return complex(out)
    return float(out.real)


def pfaffian_batch(mats: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack of skew-symmetric matrices, shape (B, m, m).

    Skew-symmetry is assumed, not checked (hot path). Uses Parlett-Reid
    elimination with partial pivoting; a pivot column below PIVOT_TOL makes
    that Pfaffian exactly zero.
    """
    A = np.array(mats, dtype=complex if np.iscomplexobj(mats) else float)
    B, m, m2 = A.shape
    if m != m2:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    if m % 2 == 1:
        return np.zeros(B, dtype=A.dtype)
    if m == 0:
        return np.ones(B, dtype=A.dtype)

    rows = np.arange(B)
    pf = np.ones(B, dtype=A.dtype)
    alive = np.ones(B, dtype=bool)
    for k in range(0, m - 1, 2):
        # partial pivot: move the largest |A[j, k]| for j > k into row k+1
        col = np.abs(A[:, k + 1 :, k])
        kp = k + 1 + np.argmax(col, axis=1)
        need_swap = kp != k + 1
        if need_swap.any():
            b = rows[need_swap]
            kpb = kp[need_swap]
            tmp = A[b, k + 1, :].copy()
            A[b, k + 1, :] = A[b, kpb, :]
            A[b, kpb, :] = tmp
            tmp = A[b, :, k + 1].copy()
            A[b, :, k + 1] = A[b, :, kpb]
            A[b, :, kpb] = tmp
            pf = np.where(need_swap, -pf, pf)
        pivot = A[:, k + 1, k]
        dead = np.abs(pivot) < PIVOT_TOL
        alive &= ~dead
        pf = pf * A[:, k, k + 1]
        if k + 2 < m:
            safe = np.where(dead, 1.0, A[:, k, k + 1])
            tau = A[:, k, k + 2 :] / safe[:, None]
            colv = A[:, k + 2 :, k + 1]
            A[:, k + 2 :, k + 2 :] += tau[:, :, None] * colv[:, None, :]
            A[:, k + 2 :, k + 2 :] -= colv[:, :, None] * tau[:, None, :]
    pf = np.where(alive, pf, 0.0)
    return pf


def pfaffian_matching_sum(A) -> complex | float:
    """Pfaffian as the signed sum over perfect matchings (exponential oracle).

    Independent of the elimination algorithm; only sensible for small m.
    """
    M = _as_skew_array(A)
    m = M.shape[0]
    if m % 2 == 1:
        return 0.0
    if m == 0:
        return 1.0

    def rec(remaining: tuple[int, ...]):
        if not remaining:
            return 1.0
        i = remaining[0]
        total = 0.0
        for pos in range(1, len(remaining)):
            j = remaining[pos]
            rest = remaining[1:pos] + remaining[pos + 1 :]
            sign = (-1) ** (pos - 1)
            total = total + sign * M[i, j] * rec(rest)
        return total

    out = rec(tuple(range(m)))
    return complex(out) if np.iscomplexobj(M) else float(out)


@dataclass(frozen=True)
class PfaffianPolynomial:
    """Coefficients c_0..c_n of pf(A + x B) as a polynomial in x."""

    coefficients: np.ndarray

    def __call__(self, x: float) -> complex:
        return complex(np.polynomial.polynomial.polyval(x, self.coefficients))

    def __len__(self) -> int:
        return len(self.coefficients)


@lru_cache(maxsize=64)
def _inv_vandermonde(npts: int) -> np.ndarray:
    """Exact inverse of the Vandermonde matrix on nodes 0, 1, ..., npts-1."""
    V = [[Fraction(t) ** k for k in range(npts)] for t in range(npts)]
    inv = [
        [Fraction(1) if i == j else Fraction(0) for j in range(npts)]
        for i in range(npts)
    ]
    for c in range(npts):
        p = next(r for r in range(c, npts) if V[r][c] != 0)
        V[c], V[p] = V[p], V[c]
        inv[c], inv[p] = inv[p], inv[c]
        piv = V[c][c]
        V[c] = [v / piv for v in V[c]]
        inv[c] = [v / piv for v in inv[c]]
        for r in range(npts):
            if r != c and V[r][c] != 0:
                f = V[r][c]
                V[r] = [a - f * b for a, b in zip(V[r], V[c])]
                inv[r] = [a - f * b for a, b in zip(inv[r], inv[c])]
    out = np.array([[float(v) for v in row] for row in inv])
    out.flags.writeable = False
    return out


def pencil_coeffs_batch(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Coefficients of x -> pf(A + x B) for stacks of even-dim skew matrices.

    A, B have shape (batch, 2r, 2r); the result has shape (batch, r + 1).
    Evaluates the Pfaffian on the integer nodes 0..r and solves the
    Vandermonde system once (exact rational inverse, cached).
    """
    m = A.shape[-1]
    if m % 2 == 1:
        raise ValueError("pencil coefficients need even dimension")
    r = m // 2
    if r > MAX_PENCIL_HALF_DIM:
        raise ValueError(
            f"pencil interpolation on integer nodes is limited to half-dim "
            f"{MAX_PENCIL_HALF_DIM} (requested {r}): the Vandermonde solve "
            f"becomes ill-conditioned"
        )
    nodes = np.arange(r + 1)
    stacked = A[:, None, :, :] + nodes[None, :, None, None] * B[:, None, :, :]
    batch = stacked.reshape(-1, m, m)
    vals = pfaffian_batch(batch).reshape(A.shape[0], r + 1)
    return vals @ _inv_vandermonde(r + 1).T


def pfaffian_pencil_coeffs(A, B) -> PfaffianPolynomial:
    """Polynomial coefficients of x -> pf(A + x B) for one matrix pair."""
    Ma = _as_skew_array(A)
    Mb = _as_skew_array(B)
    if Ma.shape != Mb.shape:
        raise ValueError(f"dimension mismatch: {Ma.shape} vs {Mb.shape}")
    coeffs = pencil_coeffs_batch(Ma[None], Mb[None])[0]
    return PfaffianPolynomial(coeffs)
