"""Dense density-matrix engine for noisy shadow rounds.

One round: prepare rho, apply a random matchgate U_Q, apply the noise channel,
measure in the Z basis. Rounds are embarrassingly parallel; the batched driver
compiles whole blocks of rotations at once and draws every random number from
a counter-based stream keyed by the block's first round index, so results are
reproducible for a fixed master seed regardless of how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .majorana import index_bits
from .noise import NoiseModel
from .rotations import (
    RotationQ,
    SeededRng,
    compile_matchgates_batch,
    sample_haar_orthogonal_batch,
    sample_signed_permutation_batch,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

ROUND_BATCH = 8192

GROUPS = ("orth", "signed-perm")


def validate_density(rho: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < EIGENVALUE_FLOOR:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def random_pure_state(n: int, rng: SeededRng) -> np.ndarray:
    """Haar-random pure state as a rank-1 density matrix."""
    gen = rng.generator()
    v = gen.standard_normal(2**n) + 1j * gen.standard_normal(2**n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def z_measurement_distribution(rho: np.ndarray) -> np.ndarray:
    """Computational-basis outcome probabilities (the diagonal of rho)."""
    validate_density(rho)
    p = np.real(np.diag(rho)).copy()
    p[p < 0] = 0.0
    return p / p.sum()


def basis_covariance(x) -> np.ndarray:
    """Covariance matrix of |x><x|: blocks [[0, (-1)^x_j], [-(-1)^x_j, 0]]."""
    bits = list(x)
    n = len(bits)
    C = np.zeros((2 * n, 2 * n))
    for j, b in enumerate(bits):
        s = 1.0 if b == 0 else -1.0
        C[2 * j, 2 * j + 1] = s
        C[2 * j + 1, 2 * j] = -s
    return C


def vacuum_covariance(n: int) -> np.ndarray:
    return basis_covariance((0,) * n)


def basis_covariance_batch(xs: np.ndarray, n: int) -> np.ndarray:
    """Covariances of |x><x| for a vector of basis-state indices."""
    B = xs.shape[0]
    signs = 1.0 - 2.0 * (
        (xs[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    ).astype(float)
    C = np.zeros((B, 2 * n, 2 * n))
    j = np.arange(n)
    C[:, 2 * j, 2 * j + 1] = signs
    C[:, 2 * j + 1, 2 * j] = -signs
    return C


@dataclass(frozen=True)
class ShadowSample:
    """One experiment round: the sampled rotation and the measured bitstring."""

    q: RotationQ
    x: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.x) != self.q.n or any(b not in (0, 1) for b in self.x):
            raise ValueError(f"outcome {self.x} is not a bitstring of length {self.q.n}")


@dataclass(frozen=True, eq=False)
class ShadowBatch:
    """Struct-of-arrays form of many rounds: rotations (R, 2n, 2n), outcomes (R,)."""

    qs: np.ndarray
    xs: np.ndarray
    n: int

    def __len__(self) -> int:
        return self.qs.shape[0]

    def sample(self, i: int) -> ShadowSample:
        return ShadowSample(RotationQ(self.qs[i]), index_bits(int(self.xs[i]), self.n))

    def slice(self, start: int, stop: int) -> "ShadowBatch":
        return ShadowBatch(self.qs[start:stop], self.xs[start:stop], self.n)


def _sample_rotations(n: int, count: int, group: str, gen: np.random.Generator):
    if group == "orth":
        return sample_haar_orthogonal_batch(n, count, gen)
    if group == "signed-perm":
        return sample_signed_permutation_batch(n, count, gen)
    raise ValueError(f"unknown sampling group {group!r}; expected one of {GROUPS}")


def measurement_probs_batch(
    us: np.ndarray, rho: np.ndarray, model: NoiseModel
) -> np.ndarray:
    """Z-basis distributions diag(Lambda(U rho U^dag)) for a stack of unitaries."""
    if model.needs_full_state:
        states = np.einsum("bij,jk,blk->bil", us, rho, us.conj(), optimize=True)
        probs = np.real(model.measurement_diag_from_state(states))
    else:
        diags = np.real(np.einsum("bij,jk,bik->bi", us, rho, us.conj(), optimize=True))
        probs = model.measurement_diag_from_diag(diags)
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum(axis=1, keepdims=True)


def _sample_outcomes(probs: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = gen.random(probs.shape[0])
    xs = (cum < u[:, None]).sum(axis=1)
    return np.minimum(xs, probs.shape[1] - 1)


def sample_gaussian_outcomes(covs: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Z-basis samples from Gaussian states given their covariance matrices.

    Sequentially samples each mode's occupation and conditions the remaining
    covariance with a rank-2 update; exact and O(n) matrix work per round.
    """
    M = np.array(covs, dtype=float)
    B = M.shape[0]
    n = M.shape[1] // 2
    xs = np.zeros(B, dtype=np.int64)
    for j in range(n):
        p1 = 0.5 * (1.0 - M[:, 2 * j, 2 * j + 1])
        p1 = np.clip(p1, 0.0, 1.0)
        hit = gen.random(B) < p1
        xs = (xs << 1) | hit
        if j == n - 1:
            break
        p_observed = np.clip(np.where(hit, p1, 1.0 - p1), 1e-300, None)
        sign = np.where(hit, -1.0, 1.0)
        row_a = M[:, 2 * j + 1, :].copy()
        row_b = M[:, 2 * j, :].copy()
        factor = (sign / (2.0 * p_observed))[:, None, None]
        M += factor * (row_a[:, :, None] * row_b[:, None, :]
                       - row_b[:, :, None] * row_a[:, None, :])
    return xs


def _is_vacuum(rho: np.ndarray) -> bool:
    if abs(rho[0, 0] - 1.0) > 1e-14:
        return False
    off = rho.copy()
    off[0, 0] = 0.0
    return bool(np.abs(off).max() < 1e-14)


def run_shadow_rounds(
    rho: np.ndarray,
    model: NoiseModel,
    group: str,
    count: int,
    rng: SeededRng,
    batch_size: int = ROUND_BATCH,
) -> ShadowBatch:
    """Run `count` independent noisy shadow rounds.

    Block b of rounds draws all of its randomness (rotations first, then the
    measurement uniforms) from the stream keyed by its first round index, so
    the full record depends only on the master seed and the fixed block size.

    Vacuum input with diagonal-representable noise (every model except the
    coherent X over-rotation) avoids dense compilation entirely: the
    pre-measurement state stays Gaussian, outcomes are drawn by conditional
    covariance sampling, and the noise acts as a classical channel on the
    sampled bitstring.
    """
    rho = validate_density(np.asarray(rho, dtype=complex))
    n = rho.shape[0].bit_length() - 1
    fast = model.diagonal_samplable and _is_vacuum(rho)
    pre = model.pre_compose_rotation()
    C0 = vacuum_covariance(n)
    qs_out = np.empty((count, 2 * n, 2 * n))
    xs_out = np.empty(count, dtype=np.int64)
    for start in range(0, count, batch_size):
        stop = min(start + batch_size, count)
        gen = rng.stream(rng.stream_index + start).generator()
        qs = _sample_rotations(n, stop - start, group, gen)
        if fast:
            total = qs if pre is None else pre[None] @ qs
            covs = total @ C0[None] @ np.transpose(total, (0, 2, 1))
            xs = sample_gaussian_outcomes(covs, gen)
            xs = model.outcome_post_channel(xs, 2**n, gen)
        else:
            us = compile_matchgates_batch(qs)
            probs = measurement_probs_batch(us, rho, model)
            xs = _sample_outcomes(probs, gen)
        qs_out[start:stop] = qs
        xs_out[start:stop] = xs
    return ShadowBatch(qs_out, xs_out, n)


def run_shadow_round(
    rho: np.ndarray,
    model: NoiseModel,
    group: str,
    rng: SeededRng,
    q: RotationQ | None = None,
) -> ShadowSample:
    """One round; pass `q` to force a specific rotation instead of sampling."""
    rho = validate_density(np.asarray(rho, dtype=complex))
    n = rho.shape[0].bit_length() - 1
    gen = rng.generator()
    qm = _sample_rotations(n, 1, group, gen) if q is None else q.entries[None]
    us = compile_matchgates_batch(qm)
    probs = measurement_probs_batch(us, rho, model)
    x = int(_sample_outcomes(probs, gen)[0])
    return ShadowSample(RotationQ(qm[0]), index_bits(x, n))
