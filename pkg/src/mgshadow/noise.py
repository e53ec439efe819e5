"""GTM noise channels and their even-subspace fidelities B_k.

One fixed channel is composed after every sampled matchgate (gate-independent,
time-stationary, Markovian). Each model knows its dense action on operators,
its Kraus decomposition, and where a closed form exists, the fidelity vector
(B_0, ..., B_n) of the twirled measurement channel; `brute_force_B` evaluates
the defining sum directly with dense matrices as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from math import comb

import numpy as np

from .majorana import (
    MAX_DENSE_QUBITS,
    basis_state,
    doubled_indices,
    gamma_S,
    index_bits,
    pauli_string,
)
from .rotations import RotationQ, compile_matchgate

KRAUS_TOL = 1e-10
MAX_BRUTE_FORCE_MODES = 5


class NoiseModel:
    """Base class; concrete channels implement apply / kraus / analytic_B."""

    label = "abstract"

    def apply(self, A: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kraus_operators(self, n: int) -> list[np.ndarray]:
        raise NotImplementedError

    def analytic_B(self, n: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def strength(self) -> float:
        raise NotImplementedError

    # hooks for the vectorized sampling loop
    needs_full_state = False
    diagonal_samplable = False

    @property
    def modes(self) -> int | None:
        """Mode count the channel is pinned to, or None if size-agnostic."""
        return None

    def measurement_diag_from_diag(self, diags: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def measurement_diag_from_state(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pre_compose_rotation(self) -> np.ndarray | None:
        """Rotation to left-compose when the channel is itself a matchgate."""
        return None

    def outcome_post_channel(self, xs: np.ndarray, dim: int, gen) -> np.ndarray | None:
        """Classical channel on sampled outcomes, when the noise only mixes
        the Z-basis distribution; None means no such representation exists."""
        return None

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Noiseless(NoiseModel):
    label = "noiseless"
    diagonal_samplable = True

    def apply(self, A):
        return np.asarray(A)

    def kraus_operators(self, n):
        return [np.eye(2**n, dtype=complex)]

    def analytic_B(self, n):
        return np.ones(n + 1)

    @property
    def strength(self):
        return 0.0

    def measurement_diag_from_diag(self, diags):
        return diags

    def outcome_post_channel(self, xs, dim, gen):
        return xs

    def to_config(self):
        return {"kind": "noiseless"}


@dataclass(frozen=True)
class Depolarizing(NoiseModel):
    p: float
    label = "depolarizing"
    diagonal_samplable = True

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing strength must be in [0, 1], got {self.p}")

    def apply(self, A):
        A = np.asarray(A)
        d = A.shape[0]
        return (1 - self.p) * A + self.p * np.trace(A) * np.eye(d) / d

    def kraus_operators(self, n):
        if n > MAX_BRUTE_FORCE_MODES:
            raise ValueError("Pauli Kraus set is only built for small n")
        d = 2**n
        ops = [np.sqrt(1 - self.p + self.p / d**2) * np.eye(d, dtype=complex)]
        for letters in product("IXYZ", repeat=n):
            if set(letters) == {"I"}:
                continue
            ops.append(np.sqrt(self.p) / d * pauli_string("".join(letters)))
        return ops

    def analytic_B(self, n):
        B = np.full(n + 1, 1 - self.p)
        B[0] = 1.0
        return B

    @property
    def strength(self):
        return self.p

    def measurement_diag_from_diag(self, diags):
        d = diags.shape[-1]
        return (1 - self.p) * diags + self.p / d

    def outcome_post_channel(self, xs, dim, gen):
        redraw = gen.random(xs.shape[0]) < self.p
        uniform = gen.integers(0, dim, size=xs.shape[0])
        return np.where(redraw, uniform, xs)

    def to_config(self):
        return {"kind": "depolarizing", "p": self.p}


@dataclass(frozen=True, eq=False)
class GenAmpDamping(NoiseModel):
    """Generalized amplitude damping with jump operators sqrt(p_uv)|v><u|.

    `p_bar` is the symmetric parameterization (p_uv = p_bar[u] for all v != u)
    that the closed-form B_k covers; a fully general `table` p[u, v] is
    accepted for simulation, in which case analytic_B is unavailable.
    """

    n: int
    p_bar: tuple[float, ...] | None = None
    table: np.ndarray | None = field(default=None)
    label = "damping"
    diagonal_samplable = True

    def __post_init__(self):
        d = 2**self.n
        if (self.p_bar is None) == (self.table is None):
            raise ValueError("specify exactly one of p_bar or table")
        if self.p_bar is not None:
            if len(self.p_bar) != d:
                raise ValueError(f"p_bar must have 2^n = {d} entries")
            if any(p < 0 for p in self.p_bar):
                raise ValueError("p_bar entries must be nonnegative")
            if any((d - 1) * p > 1 + 1e-12 for p in self.p_bar):
                raise ValueError("(2^n - 1) * p_bar_u must not exceed 1")
        else:
            T = np.asarray(self.table, dtype=float)
            if T.shape != (d, d):
                raise ValueError(f"table must be {d} x {d}")
            if (T < 0).any() or np.abs(np.diag(T)).max() > 0:
                raise ValueError("table needs nonnegative entries, zero diagonal")
            if (T.sum(axis=1) > 1 + 1e-12).any():
                raise ValueError("row sums sum_v p_uv must not exceed 1")
            object.__setattr__(self, "table", T)

    def _jump_table(self) -> np.ndarray:
        d = 2**self.n
        if self.table is not None:
            return self.table
        T = np.tile(np.asarray(self.p_bar)[:, None], (1, d))
        np.fill_diagonal(T, 0.0)
        return T

    def _survival_amplitudes(self) -> np.ndarray:
        return np.sqrt(np.clip(1.0 - self._jump_table().sum(axis=1), 0.0, None))

    def apply(self, A):
        A = np.asarray(A, dtype=complex)
        T = self._jump_table()
        e = self._survival_amplitudes()
        out = np.outer(e, e) * A
        out[np.diag_indices_from(out)] += T.T @ np.diag(A)
        return out

    def kraus_operators(self, n=None):
        d = 2**self.n
        T = self._jump_table()
        ops = [np.diag(self._survival_amplitudes()).astype(complex)]
        for u in range(d):
            for v in range(d):
                if u != v and T[u, v] > 0:
                    E = np.zeros((d, d), dtype=complex)
                    E[v, u] = np.sqrt(T[u, v])
                    ops.append(E)
        return ops

    @property
    def modes(self):
        return self.n

    def analytic_B(self, n):
        if n != self.n:
            raise ValueError(f"channel built for n = {self.n}, asked for n = {n}")
        if self.p_bar is None:
            raise ValueError(
                "closed-form B_k covers only the symmetric p_bar parameterization; "
                "use brute_force_B for a general jump table"
            )
        B = np.full(n + 1, 1.0 - sum(self.p_bar))
        B[0] = 1.0
        return B

    @property
    def strength(self):
        T = self._jump_table()
        return float(T.sum() / (T.shape[0] - 1))

    def measurement_diag_from_diag(self, diags):
        T = self._jump_table()
        e2 = 1.0 - T.sum(axis=1)
        return diags * e2 + diags @ T

    def outcome_post_channel(self, xs, dim, gen):
        T = self._jump_table()
        rows = T[xs]
        rows[np.arange(xs.shape[0]), xs] += 1.0 - rows.sum(axis=1)
        cum = np.cumsum(rows, axis=1)
        u = gen.random(xs.shape[0])
        out = (cum < u[:, None]).sum(axis=1)
        return np.minimum(out, dim - 1)

    def to_config(self):
        if self.p_bar is not None:
            return {"kind": "damping", "n": self.n, "p_bar": list(self.p_bar)}
        return {"kind": "damping", "n": self.n, "table": self.table.tolist()}


@dataclass(frozen=True)
class XRotation(NoiseModel):
    """Coherent over-rotation exp(-i sum_l theta_l X_l / 2) on every qubit."""

    thetas: tuple[float, ...]
    label = "x-rotation"
    needs_full_state = True

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def modes(self):
        return self.n

    def _unitary(self) -> np.ndarray:
        return _x_rotation_unitary(self.thetas)

    def apply(self, A):
        R = self._unitary()
        return R @ np.asarray(A) @ R.conj().T

    def kraus_operators(self, n=None):
        return [self._unitary()]

    def analytic_B(self, n):
        if n != self.n:
            raise ValueError(f"channel built for n = {self.n}, asked for n = {n}")
        cos = np.cos(self.thetas)
        B = np.empty(n + 1)
        B[0] = 1.0
        for k in range(1, n + 1):
            B[k] = sum(np.prod(cos[list(S)]) for S in combinations(range(n), k))
            B[k] /= comb(n, k)
        return B

    @property
    def strength(self):
        return float(1.0 - np.mean(np.cos(self.thetas)))

    def measurement_diag_from_state(self, states):
        R = self._unitary()
        return np.einsum("ij,bjk,ik->bi", R, states, R.conj(), optimize=True)

    def to_config(self):
        return {"kind": "x-rotation", "thetas": list(self.thetas)}


@lru_cache(maxsize=16)
def _x_rotation_unitary(thetas: tuple[float, ...]) -> np.ndarray:
    R = np.array([[1.0 + 0j]])
    for th in thetas:
        c, s = np.cos(th / 2), np.sin(th / 2)
        R = np.kron(R, np.array([[c, -1j * s], [-1j * s, c]]))
    R.flags.writeable = False
    return R


@dataclass(frozen=True, eq=False)
class GaussianUnitary(NoiseModel):
    """Noise that is itself a matchgate: conjugation by U_{Q_noise}."""

    q: RotationQ
    label = "gaussian-unitary"
    needs_full_state = True
    diagonal_samplable = True

    @property
    def modes(self):
        return self.q.n

    def _unitary(self) -> np.ndarray:
        return _gaussian_unitary_dense(tuple(map(tuple, self.q.entries)))

    def apply(self, A):
        U = self._unitary()
        return U @ np.asarray(A) @ U.conj().T

    def kraus_operators(self, n=None):
        return [self._unitary()]

    def analytic_B(self, n):
        if self.q.n != n:
            raise ValueError(f"channel built for n = {self.q.n}, asked for n = {n}")
        Q = self.q.entries
        B = np.empty(n + 1)
        B[0] = 1.0
        for k in range(1, n + 1):
            total = 0.0
            for S in combinations(range(1, n + 1), k):
                ix = np.array(doubled_indices(S)) - 1
                total += np.linalg.det(Q[np.ix_(ix, ix)])
            B[k] = total / comb(n, k)
        return B

    @property
    def strength(self):
        return 0.0

    def measurement_diag_from_state(self, states):
        U = self._unitary()
        return np.einsum("ij,bjk,ik->bi", U, states, U.conj(), optimize=True)

    def pre_compose_rotation(self):
        return self.q.entries

    def outcome_post_channel(self, xs, dim, gen):
        return xs

    def to_config(self):
        return {"kind": "gaussian-unitary", "q": self.q.entries.tolist()}


@lru_cache(maxsize=8)
def _gaussian_unitary_dense(entries: tuple) -> np.ndarray:
    U = compile_matchgate(RotationQ(np.array(entries)))
    U.flags.writeable = False
    return U


def noise_from_config(cfg: dict) -> NoiseModel:
    kind = cfg.get("kind")
    if kind == "noiseless":
        return Noiseless()
    if kind == "depolarizing":
        return Depolarizing(float(cfg["p"]))
    if kind == "damping":
        n = int(cfg["n"])
        if "p_bar" in cfg:
            return GenAmpDamping(n, p_bar=tuple(float(p) for p in cfg["p_bar"]))
        return GenAmpDamping(n, table=np.asarray(cfg["table"], dtype=float))
    if kind == "x-rotation":
        return XRotation(tuple(float(t) for t in cfg["thetas"]))
    if kind == "gaussian-unitary":
        return GaussianUnitary(RotationQ(np.asarray(cfg["q"], dtype=float)))
    raise ValueError(f"unknown noise kind {kind!r}")


def apply_noise(model: NoiseModel, rho: np.ndarray) -> np.ndarray:
    """Apply the channel to a density matrix, validating both ends."""
    from .simulator import validate_density

    validate_density(rho)
    out = model.apply(rho)
    if abs(np.trace(out) - 1.0) > 1e-10:
        raise ValueError("channel did not preserve the trace")
    return out


def check_kraus_completeness(model: NoiseModel, n: int, tol: float = KRAUS_TOL) -> float:
    ops = model.kraus_operators(n)
    total = sum(E.conj().T @ E for E in ops)
    dev = float(np.abs(total - np.eye(total.shape[0])).max())
    if dev > tol:
        raise ValueError(f"Kraus completeness violated by {dev:.3e}")
    return dev


def brute_force_B(model: NoiseModel, n: int, k: int) -> float:
    """Direct dense evaluation of the subspace fidelity B_k.

    B_k = (-i)^k / (2^n C(n,k)) sum_x sum_{|S|=k} (-1)^{x_S}
          tr(|x><x| Lambda(gamma_{D(S)})).
    """
    if n > MAX_BRUTE_FORCE_MODES:
        raise ValueError(
            f"brute-force B_k is capped at n = {MAX_BRUTE_FORCE_MODES}, got {n}"
        )
    if not 0 <= k <= n:
        raise ValueError(f"k = {k} out of range [0, {n}]")
    total = 0.0 + 0.0j
    for S in combinations(range(1, n + 1), k):
        lam = model.apply(gamma_S(n, doubled_indices(S)))
        diag = np.diag(lam)
        for xi in range(2**n):
            bits = index_bits(xi, n)
            sign = (-1) ** sum(bits[j - 1] for j in S)
            total += sign * diag[xi]
    val = (-1j) ** k * total / (2**n * comb(n, k))
    if abs(val.imag) > 1e-9:
        raise ValueError(f"B_k came out non-real: {val}")
    return float(val.real)


_SINGLE_QUBIT_DESIGN = [
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    np.array([1.0, -1.0], dtype=complex) / np.sqrt(2),
    np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2),
    np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2),
]


def fidelity_table(model: NoiseModel, n: int = 1) -> tuple[float, float, float]:
    """(F_avg, F_Z, B_1) computed from the dense channel action.

    F_avg uses the six-state 2-design and is only defined here for n = 1;
    F_Z = 2^-n sum_b <b|Lambda(|b><b|)|b> works for any n.
    """
    if n != 1:
        raise ValueError("F_avg via the six-state 2-design is single-qubit only")
    f_avg = 0.0
    for psi in _SINGLE_QUBIT_DESIGN:
        out = model.apply(np.outer(psi, psi.conj()))
        f_avg += float(np.real(psi.conj() @ out @ psi))
    f_avg /= len(_SINGLE_QUBIT_DESIGN)

    f_z = 0.0
    for b in range(2**n):
        rho_b = basis_state(n, index_bits(b, n))
        f_z += float(np.real(model.apply(rho_b)[b, b]))
    f_z /= 2**n

    b1 = float(model.analytic_B(n)[1])
    return f_avg, f_z, b1
