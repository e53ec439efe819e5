"""Closed-form reference quantities: exact channel eigenvalues, estimator
moments, variance bounds, and sample-count planning.

Everything here is an oracle for the Monte Carlo machinery: binomials are
evaluated in exact integer arithmetic before any float conversion, so the
reference values carry no cancellation error of their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, comb, log

import numpy as np

from .engine import MitigationFailure
from .majorana import majorana_matrix
from .noise import NoiseModel, brute_force_B
from .rotations import RotationQ, compile_matchgate

MAX_TRIPLE_SUM_MODES = 3


def fidelity_vector(model: NoiseModel, n: int) -> np.ndarray:
    """(B_0, ..., B_n), closed form when available, brute force otherwise."""
    try:
        return np.asarray(model.analytic_B(n), dtype=float)
    except ValueError:
        return np.array([brute_force_B(model, n, k) for k in range(n + 1)])


def exact_f2k(model: NoiseModel, n: int, k: int) -> float:
    """Channel eigenvalue f_2k = binom(2n,2k)^{-1} binom(n,k) B_k."""
    if not 0 <= k <= n:
        raise ValueError(f"k = {k} out of range [0, {n}]")
    return comb(n, k) / comb(2 * n, 2 * k) * float(fidelity_vector(model, n)[k])


def exact_f2k_vector(model: NoiseModel, n: int) -> np.ndarray:
    B = fidelity_vector(model, n)
    return np.array([comb(n, k) / comb(2 * n, 2 * k) * B[k] for k in range(n + 1)])


def _multinomial(n: int, *parts: int) -> int:
    rest = n - sum(parts)
    if rest < 0 or any(p < 0 for p in parts):
        return 0
    out = 1
    left = n
    for p in parts:
        out *= comb(left, p)
        left -= p
    return out


def exact_fhat_second_moment(model: NoiseModel, n: int, k: int) -> float:
    """E[f_hat_{2k}^2] of the single-round calibration estimator.

    binom(n,k)^{-2} sum_l binom(2n; 2l, 2k-2l, 2l)^{-1}
    binom(n; l, k-l, l)^2 B_{2l}, summed over 0 <= l <= min(k, n-k).
    """
    if not 0 <= k <= n:
        raise ValueError(f"k = {k} out of range [0, {n}]")
    B = fidelity_vector(model, n)
    total = 0.0
    for l in range(min(k, n - k) + 1):
        big = _multinomial(2 * n, 2 * l, 2 * k - 2 * l, 2 * l)
        small = _multinomial(n, l, k - l, l)
        total += small**2 / big * B[2 * l]
    return total / comb(n, k) ** 2


def variance_bound_majorana(model: NoiseModel, n: int, k: int, eps_c: float) -> float:
    """Single-round variance bound (1+eps_c)^2 binom(2n,2k) / (B_k^2 binom(n,k))."""
    Bk = float(fidelity_vector(model, n)[k])
    if Bk == 0.0:
        raise MitigationFailure(
            f"B_{k} = 0: the weight-{2 * k} variance is unbounded under this noise"
        )
    return (1 + eps_c) ** 2 * comb(2 * n, 2 * k) / (Bk**2 * comb(n, k))


def _disjoint_triples(indices: tuple[int, ...], sizes: tuple[int, int, int]):
    a, b, c = sizes
    for S1 in combinations(indices, a):
        rest1 = tuple(i for i in indices if i not in S1)
        for S2 in combinations(rest1, b):
            rest2 = tuple(i for i in rest1 if i not in S2)
            for S3 in combinations(rest2, c):
                yield S1, S2, S3


def variance_bound_general(
    model: NoiseModel,
    n: int,
    H: np.ndarray,
    rho: np.ndarray,
    eps_c: float,
    q1: RotationQ | None = None,
) -> float:
    """Exact evaluation of the general single-round variance bound.

    Triple sum over disjoint even-weight index sets with binomial/fidelity
    weights; the Majorana basis may be rotated by q1 so that observables of
    the form gamma~_S collapse the sum analytically. Dense and exponential in
    n, hence capped at n <= 3.
    """
    if n > MAX_TRIPLE_SUM_MODES:
        raise ValueError(f"triple sum is capped at n = {MAX_TRIPLE_SUM_MODES}")
    B = fidelity_vector(model, n)
    dim = 2**n
    H0 = np.asarray(H, dtype=complex)
    H0 = H0 - np.trace(H0) * np.eye(dim) / dim

    gam = [majorana_matrix(n, j) for j in range(1, 2 * n + 1)]
    if q1 is not None:
        U1 = compile_matchgate(q1)
        gam = [U1.conj().T @ g @ U1 for g in gam]

    prods: dict[tuple[int, ...], np.ndarray] = {(): np.eye(dim, dtype=complex)}

    def gamma_of(S: tuple[int, ...]) -> np.ndarray:
        if S not in prods:
            op = gam[S[0] - 1]
            for j in S[1:]:
                op = op @ gam[j - 1]
            prods[S] = op
        return prods[S]

    indices = tuple(range(1, 2 * n + 1))
    total = 0.0
    for l1 in range(n + 1):
        for l2 in range(n + 1 - l1):
            for l3 in range(n + 1 - l1 - l2):
                triple_sum = 0.0 + 0.0j
                for S1, S2, S3 in _disjoint_triples(indices, (2 * l1, 2 * l2, 2 * l3)):
                    g1, g2, g3 = gamma_of(S1), gamma_of(S2), gamma_of(S3)
                    t1 = np.trace(g1 @ g2 @ H0)
                    if t1 == 0:
                        continue
                    t2 = np.trace(g2 @ g3 @ H0.conj().T)
                    if t2 == 0:
                        continue
                    t3 = np.trace(g3 @ g1 @ rho)
                    triple_sum += t1 * t2 * t3
                if abs(triple_sum) < 1e-14:
                    continue
                den_b = B[l1 + l2] * B[l2 + l3]
                if den_b == 0.0:
                    raise MitigationFailure(
                        f"B_{l1 + l2} B_{l2 + l3} = 0 with a nonvanishing trace term: "
                        "the variance bound diverges"
                    )
                w = (
                    (-1) ** (l1 + l2 + l3)
                    * _multinomial(n, l1, l2, l3)
                    * comb(2 * n, 2 * l1 + 2 * l2)
                    * comb(2 * n, 2 * l2 + 2 * l3)
                    * B[l1 + l3]
                ) / (
                    _multinomial(2 * n, 2 * l1, 2 * l2, 2 * l3)
                    * comb(n, l1 + l2)
                    * comb(n, l2 + l3)
                    * den_b
                )
                total += w * triple_sum.real
    return (1 + eps_c) ** 2 / 2 ** (2 * n) * total


@dataclass(frozen=True)
class SamplePlan:
    """Sample counts meeting target errors (eps_e, eps_c) and failure rates."""

    r_e: int
    n_e: int
    k_e: int
    r_c: int
    n_c: int
    k_c: int
    eps_e: float
    delta_e: float
    eps_c: float
    delta_c: float
    m: int


def calibration_moment_ratio(model: NoiseModel, n: int) -> float:
    """max_k E[f_hat_{2k}^2] / f_{2k}^2, the calibration-cost driver."""
    worst = 0.0
    for k in range(n + 1):
        f = exact_f2k(model, n, k)
        if f == 0.0:
            raise MitigationFailure(
                f"f_{2 * k} = 0: calibration cannot bound the relative error"
            )
        worst = max(worst, exact_fhat_second_moment(model, n, k) / f**2)
    return worst


def plan_samples(
    model: NoiseModel,
    n: int,
    k: int,
    m: int,
    eps_e: float,
    delta_e: float,
    eps_c: float,
    delta_c: float,
) -> SamplePlan:
    """Median-of-means sample counts for m weight-2k observables.

    K = ceil(2 ln(2 m / delta)) groups of N = ceil(34 Var / eps^2) rounds for
    estimation; calibration replaces the variance with the exact worst-sector
    second-moment ratio.
    """
    for name, val in (("eps_e", eps_e), ("delta_e", delta_e),
                      ("eps_c", eps_c), ("delta_c", delta_c)):
        if not 0 < val < 1:
            raise ValueError(f"{name} must lie in (0, 1), got {val}")
    if m < 1 or not 0 <= k <= n:
        raise ValueError("need m >= 1 and 0 <= k <= n")

    k_e = ceil(2 * log(2 * m / delta_e))
    n_e = ceil(34 * variance_bound_majorana(model, n, k, eps_c) / eps_e**2)
    k_c = ceil(2 * log(2 / delta_c))
    n_c = ceil(
        34 * (1 + eps_c) ** 2 / eps_c**2 * calibration_moment_ratio(model, n)
    )
    return SamplePlan(
        r_e=n_e * k_e,
        n_e=n_e,
        k_e=k_e,
        r_c=n_c * k_c,
        n_c=n_c,
        k_c=k_c,
        eps_e=eps_e,
        delta_e=delta_e,
        eps_c=eps_c,
        delta_c=delta_c,
        m=m,
    )
