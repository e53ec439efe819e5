"""Dense Jordan-Wigner Majorana operators and weight-subspace projections.

This is the brute-force oracle layer: everything here builds explicit
2^n x 2^n matrices, so it is only meant for small systems (n <= 6).

Conventions fixed once for the whole package:

* gamma_{2m-1} = Z^(m-1) (x) X (x) I...,  gamma_{2m} = Z^(m-1) (x) Y (x) I...
* qubit 1 is the most significant bit of a computational-basis index, so the
  bitstring (x_1, ..., x_n) labels the basis state with index
  sum_m x_m * 2^(n-m).
* subsets are iterated in lexicographic (ascending) order everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

MAX_DENSE_QUBITS = 6

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_mode_count(n: int) -> None:
    if n < 1:
        raise ValueError(f"mode count must be positive, got {n}")
    if n > MAX_DENSE_QUBITS:
        raise ValueError(
            f"dense operators are capped at n = {MAX_DENSE_QUBITS} qubits "
            f"(requested n = {n}; 2^n x 2^n matrices beyond that are impractical)"
        )


def pauli_string(letters: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, qubit 1 leftmost."""
    op = np.array([[1.0 + 0j]])
    for c in letters:
        op = np.kron(op, _PAULI[c])
    return op


@lru_cache(maxsize=128)
def majorana_matrix(n: int, j: int) -> np.ndarray:
    """The j-th Majorana operator (1 <= j <= 2n) as a dense matrix."""
    _check_mode_count(n)
    if not 1 <= j <= 2 * n:
        raise ValueError(f"Majorana index {j} out of range [1, {2 * n}]")
    m = (j + 1) // 2
    tail = "X" if j % 2 == 1 else "Y"
    letters = "Z" * (m - 1) + tail + "I" * (n - m)
    g = pauli_string(letters)
    g.flags.writeable = False
    return g


@dataclass(frozen=True)
class MajoranaIndexSet:
    """Strictly increasing Majorana indices in [1, 2n]."""

    indices: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        idx = self.indices
        if any(idx[i] >= idx[i + 1] for i in range(len(idx) - 1)):
            raise ValueError(f"indices must be strictly increasing, got {idx}")
        if idx and (idx[0] < 1 or idx[-1] > 2 * self.n):
            raise ValueError(f"indices {idx} outside [1, {2 * self.n}]")

    def __len__(self) -> int:
        return len(self.indices)


def _as_indices(S, n: int) -> tuple[int, ...]:
    if isinstance(S, MajoranaIndexSet):
        if S.n != n:
            raise ValueError(f"index set built for n = {S.n}, used with n = {n}")
        return S.indices
    return MajoranaIndexSet(tuple(S), n).indices


def gamma_S(n: int, S) -> np.ndarray:
    """Ordered product gamma_{l_1} ... gamma_{l_k}; gamma_emptyset = identity."""
    idx = _as_indices(S, n)
    op = np.eye(2**n, dtype=complex)
    for j in idx:
        op = op @ majorana_matrix(n, j)
    return op


def doubled_indices(modes) -> tuple[int, ...]:
    """Map a mode subset S of [n] to D(S) = {2j-1, 2j : j in S}."""
    out: list[int] = []
    for j in sorted(modes):
        out.extend((2 * j - 1, 2 * j))
    return tuple(out)


def mode_subsets(n: int, k: int):
    """All k-element subsets of [n], lexicographic."""
    return combinations(range(1, n + 1), k)


@lru_cache(maxsize=32)
def gamma_basis(n: int, weight: int) -> np.ndarray:
    """Stack of all gamma_S with |S| = weight, lexicographic in S."""
    _check_mode_count(n)
    mats = [gamma_S(n, S) for S in combinations(range(1, 2 * n + 1), weight)]
    out = np.stack(mats) if mats else np.zeros((0, 2**n, 2**n), dtype=complex)
    out.flags.writeable = False
    return out


def project_onto_gamma_subspace(A: np.ndarray, k: int, n: int) -> np.ndarray:
    """Project A onto the span of weight-k Majorana products.

    Returns sum_{|S|=k} gamma_S tr(gamma_S^dag A) / 2^n.
    """
    basis = gamma_basis(n, k)
    # gamma_S^dag = (-1)^(k(k-1)/2) gamma_S
    sign = (-1) ** (k * (k - 1) // 2)
    coeffs = sign * np.einsum("sij,ji->s", basis, A) / 2**n
    return np.einsum("s,sij->ij", coeffs, basis)


def vacuum_projector_overlap(n: int, k: int) -> float:
    """Closed-form vacuum overlap <<0|P_2k|0>> = 2^-n binom(n, k)."""
    if not 0 <= k <= n:
        raise ValueError(f"k = {k} out of range [0, {n}]")
    return comb(n, k) / 2**n


def bitstring_index(x) -> int:
    """Index of the basis state labelled by bits (x_1, ..., x_n), x_1 leading."""
    i = 0
    for b in x:
        i = (i << 1) | int(b)
    return i


def index_bits(i: int, n: int) -> tuple[int, ...]:
    return tuple((i >> (n - m)) & 1 for m in range(1, n + 1))


def basis_state(n: int, x) -> np.ndarray:
    """Density matrix |x><x| for a bitstring x."""
    rho = np.zeros((2**n, 2**n), dtype=complex)
    i = bitstring_index(x)
    rho[i, i] = 1.0
    return rho


def covariance_of_state(rho: np.ndarray) -> np.ndarray:
    """Covariance matrix C[a, b] = -i tr(gamma_a gamma_b rho) for a != b.

    For a valid (Hermitian) state this is real and skew-symmetric; a small
    residual imaginary part is discarded after a sanity check.
    """
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    C = np.zeros((2 * n, 2 * n), dtype=complex)
    gammas = [majorana_matrix(n, j) for j in range(1, 2 * n + 1)]
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            val = -1j * np.trace(gammas[a] @ gammas[b] @ rho)
            C[a, b] = val
            C[b, a] = -val
    if np.abs(C.imag).max() > 1e-9:
        raise ValueError("state covariance has a non-negligible imaginary part")
    return C.real
