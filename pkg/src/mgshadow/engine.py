"""Noise-calibrated shadow estimation.

Calibration learns the eigenvalues f_2k of the noisy measurement channel from
rounds on the vacuum state; estimators then invert those eigenvalues per
weight sector to undo the noise bias. Per-round values are Pfaffians of
rotated covariance matrices, so a round costs O(n^3) classical work.

Orientation convention (pinned by the dense-projector cross-checks in the
test suite): the back-rotated outcome state U_Q^dag |x><x| U_Q has covariance
Q^T C_x Q, and the compiled unitaries satisfy U^dag gamma_j U = sum Q_{jl}
gamma_l throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .majorana import basis_state, gamma_S, gamma_basis, majorana_matrix
from .rotations import RotationQ, SeededRng, compile_matchgate, compile_matchgates_batch
from .simulator import (
    ShadowBatch,
    ShadowSample,
    basis_covariance_batch,
    run_shadow_rounds,
    vacuum_covariance,
)
from .skew import pencil_coeffs_batch, pfaffian_batch

INVERTIBILITY_SE_FACTOR = 10.0
INVERTIBILITY_FLOOR = 1e-12
MIN_GAUSSIAN_MU = 1e-6


class MitigationFailure(RuntimeError):
    """The calibrated channel is statistically non-invertible on a needed sector."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Means-group sizes and group counts for estimation and calibration."""

    n_e: int
    k_e: int
    n_c: int
    k_c: int

    def __post_init__(self) -> None:
        for name in ("n_e", "k_e", "n_c", "k_c"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def estimation_rounds(self) -> int:
        return self.n_e * self.k_e

    @property
    def calibration_rounds(self) -> int:
        return self.n_c * self.k_c


def median_of_means(values, N: int, K: int):
    """Median of the K means of consecutive length-N groups.

    Complex inputs are aggregated componentwise; an even K uses the midpoint
    of the two central means.
    """
    vals = np.asarray(values)
    if vals.ndim != 1 or len(vals) != N * K:
        raise ValueError(f"expected N*K = {N * K} values, got shape {vals.shape}")
    means = vals.reshape(K, N).mean(axis=1)
    if np.iscomplexobj(means):
        return complex(np.median(means.real) + 1j * np.median(means.imag))
    return float(np.median(means))


def _outcome_covariances(batch: ShadowBatch) -> np.ndarray:
    """Covariances Q^T C_x Q of the back-rotated outcome states."""
    cx = basis_covariance_batch(batch.xs, batch.n)
    return np.transpose(batch.qs, (0, 2, 1)) @ cx @ batch.qs


def f_estimates_batch(batch: ShadowBatch) -> np.ndarray:
    """Per-round channel-coefficient estimates, shape (rounds, n + 1).

    Column k holds binom(n,k)^{-1} [z^k] pf(C_0 + z Q^T C_x Q); column 0 is
    identically 1.
    """
    n = batch.n
    M = _outcome_covariances(batch)
    C0 = np.broadcast_to(vacuum_covariance(n), M.shape)
    coeffs = pencil_coeffs_batch(C0, M)
    scale = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    return coeffs / scale


def single_round_f_estimates(sample: ShadowSample) -> np.ndarray:
    """Channel-coefficient estimates from one round."""
    n = sample.q.n
    xs = np.array([sum(b << (n - 1 - i) for i, b in enumerate(sample.x))])
    batch = ShadowBatch(sample.q.entries[None], xs, n)
    return f_estimates_batch(batch)[0]


@dataclass(frozen=True, eq=False)
class CalibrationEstimate:
    """Estimated channel eigenvalues with sampling metadata."""

    f_hat: np.ndarray
    std_error: np.ndarray
    rounds_used: int
    group: str
    n: int
    failed: frozenset[int]

    def inverse(self, k: int) -> float:
        """1 / f_hat_{2k}; raises when that sector failed the invertibility test."""
        if k in self.failed:
            raise MitigationFailure(
                f"calibrated f_{2 * k} = {self.f_hat[k]:.3e} is within "
                f"{INVERTIBILITY_SE_FACTOR} standard errors of zero; the noisy "
                f"channel cannot be inverted on the weight-{2 * k} sector"
            )
        return 1.0 / float(self.f_hat[k])


def calibrate(
    model,
    n: int,
    config: EstimatorConfig,
    group: str,
    rng: SeededRng,
) -> CalibrationEstimate:
    """Estimate the noisy-channel eigenvalues from vacuum rounds.

    Runs N_c * K_c rounds on |0^n><0^n| (assumed noiselessly preparable),
    aggregates each weight sector by median of means, and flags sectors whose
    estimate is statistically indistinguishable from zero.
    """
    rho0 = basis_state(n, (0,) * n)
    batch = run_shadow_rounds(rho0, model, group, config.calibration_rounds, rng)
    per_round = f_estimates_batch(batch)
    f_hat = np.array(
        [
            median_of_means(per_round[:, k], config.n_c, config.k_c)
            for k in range(n + 1)
        ]
    )
    se = per_round.std(axis=0, ddof=1) / np.sqrt(len(batch))
    failed = frozenset(
        k
        for k in range(n + 1)
        if abs(f_hat[k]) < INVERTIBILITY_SE_FACTOR * se[k] + INVERTIBILITY_FLOOR
    )
    return CalibrationEstimate(
        f_hat=f_hat,
        std_error=se,
        rounds_used=len(batch),
        group=group,
        n=n,
        failed=failed,
    )


def ideal_f2k(n: int, k: int) -> float:
    """Noiseless channel eigenvalue binom(n,k) / binom(2n,2k)."""
    return comb(n, k) / comb(2 * n, 2 * k)


# ---------------------------------------------------------------------------
# Majorana-product expectations


def _validate_majorana_set(S, n: int) -> tuple[np.ndarray, int]:
    idx = sorted(int(s) for s in S)
    if len(set(idx)) != len(idx) or (idx and (idx[0] < 1 or idx[-1] > 2 * n)):
        raise ValueError(f"invalid Majorana index set {S} for n = {n}")
    if len(idx) % 2:
        raise ValueError(f"only even-weight products are measurable, got |S| = {len(idx)}")
    return np.array(idx, dtype=int) - 1, len(idx) // 2


def majorana_round_values(batch: ShadowBatch, S, Q1: RotationQ) -> np.ndarray:
    """Un-normalized per-round values i^k pf((Q1 Q^T C_x Q Q1^T)|_S)."""
    ix, k = _validate_majorana_set(S, batch.n)
    M = _outcome_covariances(batch)
    A = Q1.entries[None] @ M @ Q1.entries.T[None]
    sub = A[:, ix[:, None], ix[None, :]]
    return (1j**k) * pfaffian_batch(sub)


def estimate_majorana(
    batch: ShadowBatch,
    cal: CalibrationEstimate,
    S,
    Q1: RotationQ,
    config: EstimatorConfig,
) -> complex:
    """Mitigated estimate of tr(rho gamma~_S), gamma~_S = U_{Q1}^dag gamma_S U_{Q1}."""
    _, k = _validate_majorana_set(S, batch.n)
    vals = majorana_round_values(batch, S, Q1) * cal.inverse(k)
    return median_of_means(vals, config.n_e, config.k_e)


def estimate_unmitigated(
    batch: ShadowBatch,
    S,
    Q1: RotationQ,
    config: EstimatorConfig,
) -> complex:
    """Baseline estimate that divides by the ideal coefficient instead of f_hat."""
    _, k = _validate_majorana_set(S, batch.n)
    vals = majorana_round_values(batch, S, Q1) / ideal_f2k(batch.n, k)
    return median_of_means(vals, config.n_e, config.k_e)


def dense_gamma_tilde(n: int, S, Q1: RotationQ) -> np.ndarray:
    """Dense gamma~_S = U_{Q1}^dag gamma_S U_{Q1} for exact reference values."""
    U1 = compile_matchgate(Q1)
    return U1.conj().T @ gamma_S(n, sorted(int(s) for s in S)) @ U1


# ---------------------------------------------------------------------------
# Gaussian-state overlaps


@dataclass(frozen=True, eq=False)
class GaussianStateSpec:
    """Gaussian state prod_k (I - i mu_k g~_{2k-1} g~_{2k}) / 2, g~ = U_Q^dag g U_Q."""

    mu: tuple[float, ...]
    q: RotationQ

    def __post_init__(self) -> None:
        if len(self.mu) != self.q.n:
            raise ValueError("need one mu per mode")
        if any(abs(m) > 1.0 + 1e-12 for m in self.mu):
            raise ValueError("mu entries must lie in [-1, 1]")

    @property
    def n(self) -> int:
        return len(self.mu)

    def _blocks(self, values) -> np.ndarray:
        D = np.zeros((2 * self.n, 2 * self.n))
        for j, v in enumerate(values):
            D[2 * j, 2 * j + 1] = v
            D[2 * j + 1, 2 * j] = -v
        return D

    def covariance(self) -> np.ndarray:
        Q = self.q.entries
        return Q.T @ self._blocks(self.mu) @ Q

    def neg_inverse_covariance(self) -> np.ndarray:
        if min(abs(m) for m in self.mu) < MIN_GAUSSIAN_MU:
            raise ValueError(
                f"|mu_j| >= {MIN_GAUSSIAN_MU} required for an invertible covariance"
            )
        Q = self.q.entries
        return Q.T @ self._blocks([1.0 / m for m in self.mu]) @ Q

    def pfaffian_of_covariance(self) -> float:
        return float(np.linalg.det(self.q.entries)) * float(np.prod(self.mu))

    def dense(self) -> np.ndarray:
        """Explicit density matrix (small n oracle path)."""
        n = self.n
        U = compile_matchgate(self.q)
        gt = [U.conj().T @ majorana_matrix(n, j) @ U for j in range(1, 2 * n + 1)]
        rho = np.eye(2**n, dtype=complex)
        for kk in range(n):
            rho = rho @ (
                np.eye(2**n) - 1j * self.mu[kk] * gt[2 * kk] @ gt[2 * kk + 1]
            ) / 2.0
        return rho


def gaussian_round_coeffs(batch: ShadowBatch, gspec: GaussianStateSpec) -> np.ndarray:
    """Per-round sector values tr(rho_g P_2k(U^dag|x><x|U)), shape (rounds, n+1).

    Column k is the z^k coefficient of
    2^-n pf(C_g) pf(-C_g^{-1} + z Q^T C_x Q).
    """
    if gspec.n != batch.n:
        raise ValueError("Gaussian state and samples disagree on mode count")
    M = _outcome_covariances(batch)
    A = np.broadcast_to(gspec.neg_inverse_covariance(), M.shape)
    coeffs = pencil_coeffs_batch(A, M)
    return coeffs * (gspec.pfaffian_of_covariance() / 2**batch.n)


def estimate_gaussian_overlap(
    batch: ShadowBatch,
    cal: CalibrationEstimate,
    gspec: GaussianStateSpec,
    config: EstimatorConfig,
) -> float:
    """Mitigated estimate of the overlap tr(rho rho_g)."""
    coeffs = gaussian_round_coeffs(batch, gspec)
    inv = np.array([cal.inverse(k) for k in range(batch.n + 1)])
    vals = coeffs @ inv
    return float(np.real(median_of_means(vals, config.n_e, config.k_e)))


def estimate_gaussian_overlap_unmitigated(
    batch: ShadowBatch,
    gspec: GaussianStateSpec,
    config: EstimatorConfig,
) -> float:
    coeffs = gaussian_round_coeffs(batch, gspec)
    inv = np.array([1.0 / ideal_f2k(batch.n, k) for k in range(batch.n + 1)])
    vals = coeffs @ inv
    return float(np.real(median_of_means(vals, config.n_e, config.k_e)))


# ---------------------------------------------------------------------------
# Slater-determinant inner products


@dataclass(frozen=True, eq=False)
class SlaterSpec:
    """tau-fermion Slater determinant b~_1^dag ... b~_tau^dag |0^n>.

    Row k of the unitary defines b~_k^dag = sum_l u[k, l] b_l^dag.
    """

    tau: int
    u: np.ndarray

    def __post_init__(self) -> None:
        U = np.asarray(self.u, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("mode-rotation matrix must be square")
        if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > 1e-10:
            raise ValueError("mode rotation must be unitary")
        if not 1 <= self.tau <= U.shape[0]:
            raise ValueError(f"tau = {self.tau} out of range [1, {U.shape[0]}]")
        object.__setattr__(self, "u", U)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def dense_state(self) -> np.ndarray:
        """State vector of the Slater determinant on 2^n amplitudes."""
        n = self.n
        creators = [
            (majorana_matrix(n, 2 * l - 1) - 1j * majorana_matrix(n, 2 * l)) / 2.0
            for l in range(1, n + 1)
        ]
        vec = np.zeros(2**n, dtype=complex)
        vec[0] = 1.0
        for k in range(self.tau, 0, -1):
            op = sum(self.u[k - 1, l] * creators[l] for l in range(n))
            vec = op @ vec
        return vec


def slater_register_size(n: int, tau: int) -> int:
    """Qubits needed for the phase-sensitive overlap readout."""
    return n + 1 if tau % 2 == 1 else n + 2


def slater_register_state(psi: np.ndarray, tau: int) -> np.ndarray:
    """Input state (|0...0> + |anc=1...1>|psi>)(h.c.) / 2 on the extended register.

    One ancilla qubit suffices when tau is odd; an even tau needs two so that
    the readout observable stays in the even Majorana subspace.
    """
    psi = np.asarray(psi, dtype=complex)
    n = psi.shape[0].bit_length() - 1
    anc = 1 if tau % 2 == 1 else 2
    dim = 2 ** (n + anc)
    vec = np.zeros(dim, dtype=complex)
    vec[0] = 1.0
    offset = (2**anc - 1) * 2**n  # ancillas all 1, then psi
    vec[offset : offset + 2**n] = psi
    vec /= np.sqrt(2.0)
    return np.outer(vec, vec.conj())


def slater_observable(sspec: SlaterSpec, psi_qubits: int) -> np.ndarray:
    """Readout operator |anc=1...1>|phi_tau><0...0| with tr(rho H) = <psi|phi>/2."""
    if sspec.n != psi_qubits:
        raise ValueError("Slater spec and state register size disagree")
    anc = 1 if sspec.tau % 2 == 1 else 2
    dim = 2 ** (psi_qubits + anc)
    phi = sspec.dense_state()
    ket = np.zeros(dim, dtype=complex)
    offset = (2**anc - 1) * 2**psi_qubits
    ket[offset : offset + 2**psi_qubits] = phi
    H = np.zeros((dim, dim), dtype=complex)
    H[:, 0] = ket
    return H


def general_round_values(batch: ShadowBatch, H: np.ndarray) -> np.ndarray:
    """Dense per-round sector values tr(H P_2k(U^dag|x><x|U)), shape (rounds, n+1).

    This is the general estimator path (and the oracle the fast Pfaffian
    routes are validated against): it recompiles each rotation and projects
    the outcome state onto every even weight sector explicitly.
    """
    n = batch.n
    us = compile_matchgates_batch(batch.qs)
    # U^dag |x> is the conjugated x-th row of U
    c = np.conj(us[np.arange(len(batch)), batch.xs, :])
    out = np.empty((len(batch), n + 1), dtype=complex)
    for k in range(n + 1):
        basis = gamma_basis(n, 2 * k)
        sign = (-1) ** k  # gamma_S^dag = (-1)^k gamma_S at weight 2k
        a = sign * np.einsum("bi,sij,bj->bs", c.conj(), basis, c, optimize=True)
        h = np.einsum("ij,sji->s", H, basis, optimize=True)
        out[:, k] = (a @ h) / 2**n
    return out


def estimate_slater_overlap(
    batch: ShadowBatch,
    cal: CalibrationEstimate,
    sspec: SlaterSpec,
    psi: np.ndarray,
    config: EstimatorConfig,
) -> complex:
    """Mitigated estimate of <psi|phi_tau> (complex, both quadratures).

    The samples must come from rounds on the extended-register input state
    `slater_register_state(psi, tau)`.
    """
    psi = np.asarray(psi, dtype=complex)
    nq = psi.shape[0].bit_length() - 1
    if sspec.tau > sspec.n:
        raise ValueError("tau exceeds the mode count")
    if batch.n != slater_register_size(nq, sspec.tau):
        raise ValueError(
            f"samples are on {batch.n} qubits; expected the extended register "
            f"of {slater_register_size(nq, sspec.tau)}"
        )
    H = slater_observable(sspec, nq)
    per_k = general_round_values(batch, H)
    inv = np.array([cal.inverse(k) for k in range(batch.n + 1)])
    vals = per_k @ inv
    return 2.0 * median_of_means(vals, config.n_e, config.k_e)
