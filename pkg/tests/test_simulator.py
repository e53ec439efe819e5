import numpy as np
import pytest

from conftest import random_density
from mgshadow.majorana import basis_state, gamma_basis, index_bits
from mgshadow.noise import Depolarizing, GaussianUnitary, GenAmpDamping, Noiseless, XRotation
from mgshadow.rotations import (
    RotationQ,
    SeededRng,
    compile_matchgates_batch,
    reflection,
    sample_haar_orthogonal,
    sample_haar_orthogonal_batch,
)
from mgshadow.simulator import (
    ShadowSample,
    basis_covariance,
    basis_covariance_batch,
    measurement_probs_batch,
    random_pure_state,
    run_shadow_round,
    run_shadow_rounds,
    sample_gaussian_outcomes,
    validate_density,
    vacuum_covariance,
    z_measurement_distribution,
)


def test_validate_density_rejects_bad_inputs():
    with pytest.raises(ValueError):
        validate_density(np.eye(4))  # trace 4
    bad = np.diag([1.2, -0.2]).astype(complex)
    with pytest.raises(ValueError):
        validate_density(bad)
    nonherm = np.array([[1.0, 0.5], [0.0, 0.0]])
    with pytest.raises(ValueError):
        validate_density(nonherm)


def test_random_pure_state_is_pure_and_deterministic():
    rho = random_pure_state(3, SeededRng(1))
    assert abs(np.trace(rho) - 1) < 1e-10
    assert abs(np.trace(rho @ rho) - 1) < 1e-10
    assert np.array_equal(rho, random_pure_state(3, SeededRng(1)))
    assert not np.array_equal(rho, random_pure_state(3, SeededRng(2)))


def test_random_pure_state_is_haar_centered():
    # mean of <Z_1> over many draws -> 0
    vals = []
    for t in range(10_000):
        rho = random_pure_state(1, SeededRng(3, t))
        vals.append(np.real(rho[0, 0] - rho[1, 1]))
    vals = np.array(vals)
    assert abs(vals.mean()) < 3 * vals.std(ddof=1) / np.sqrt(len(vals))


def test_measurement_distribution_base_cases():
    assert np.array_equal(z_measurement_distribution(basis_state(2, (0, 0))), [1, 0, 0, 0])
    assert np.allclose(z_measurement_distribution(np.eye(4) / 4), 0.25)
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert np.allclose(z_measurement_distribution(plus), [0.5, 0.5])


def test_basis_covariance_batch_matches_scalar():
    xs = np.arange(8)
    C = basis_covariance_batch(xs, 3)
    for xi in xs:
        assert np.array_equal(C[xi], basis_covariance(index_bits(int(xi), 3)))


def test_forced_identity_round_is_deterministic():
    rho0 = basis_state(2, (0, 0))
    s = run_shadow_round(rho0, Noiseless(), "orth", SeededRng(4), q=RotationQ(np.eye(4)))
    assert s.x == (0, 0)


def test_forced_reflection_flips_the_last_bit():
    rho0 = basis_state(1, (0,))
    s = run_shadow_round(rho0, Noiseless(), "orth", SeededRng(5), q=reflection(1, 1))
    assert s.x == (1,)


def test_full_depolarization_gives_uniform_outcomes():
    rho0 = basis_state(2, (0, 0))
    batch = run_shadow_rounds(rho0, Depolarizing(1.0), "orth", 10_000, SeededRng(6))
    counts = np.bincount(batch.xs, minlength=4)
    chi2 = ((counts - 2500.0) ** 2 / 2500.0).sum()
    assert chi2 < 11.3  # p > 0.01 at 3 dof


def test_shadow_sample_validation():
    with pytest.raises(ValueError):
        ShadowSample(RotationQ(np.eye(4)), (0, 2))


def test_gaussian_sampler_matches_dense_born_rule():
    n = 3
    qs = sample_haar_orthogonal_batch(n, 3, SeededRng(7).generator())
    covs = qs @ vacuum_covariance(n)[None] @ np.transpose(qs, (0, 2, 1))
    us = compile_matchgates_batch(qs)
    dense = measurement_probs_batch(us, basis_state(n, (0,) * n), Noiseless())
    reps = 100_000
    for b in range(3):
        cc = np.broadcast_to(covs[b], (reps, 2 * n, 2 * n))
        xs = sample_gaussian_outcomes(cc, np.random.default_rng(b))
        emp = np.bincount(xs, minlength=2**n) / reps
        assert np.abs(emp - dense[b]).max() < 5 / np.sqrt(reps)


@pytest.mark.parametrize(
    "model",
    [
        Noiseless(),
        Depolarizing(0.35),
        GenAmpDamping(2, p_bar=(0.04, 0.02, 0.05, 0.01)),
        GaussianUnitary(reflection(2, 1)),
    ],
)
def test_fast_path_distribution_matches_dense_channel(model):
    """Vacuum-input sampling shortcut reproduces diag(Lambda(U rho U^dag))."""
    n = 2
    rho0 = basis_state(n, (0, 0))
    q = sample_haar_orthogonal(n, SeededRng(8))
    us = compile_matchgates_batch(q.entries[None])
    dense = measurement_probs_batch(us, rho0, model)[0]
    reps = 60_000
    gen = SeededRng(9).generator()
    covs = np.broadcast_to(
        q.entries @ vacuum_covariance(n) @ q.entries.T, (reps, 4, 4)
    )
    pre = model.pre_compose_rotation()
    if pre is not None:
        covs = np.broadcast_to(
            (pre @ q.entries) @ vacuum_covariance(n) @ (pre @ q.entries).T,
            (reps, 4, 4),
        )
    xs = sample_gaussian_outcomes(covs, gen)
    xs = model.outcome_post_channel(xs, 2**n, gen)
    emp = np.bincount(xs, minlength=4) / reps
    assert np.abs(emp - dense).max() < 5 / np.sqrt(reps)


def test_channel_positivity_over_random_rounds(rng):
    n = 2
    models = [
        Depolarizing(0.3),
        GenAmpDamping(n, p_bar=(0.05,) * 4),
        XRotation((0.3, 0.5)),
        GaussianUnitary(sample_haar_orthogonal(n, SeededRng(10))),
    ]
    rho = random_density(rng, n)
    qs = sample_haar_orthogonal_batch(n, 250, SeededRng(11).generator())
    us = compile_matchgates_batch(qs)
    states = np.einsum("bij,jk,blk->bil", us, rho, us.conj())
    for model in models:
        for b in range(250):
            out = model.apply(states[b])
            assert np.linalg.eigvalsh(out).min() > -1e-9


def test_noise_placement_superoperator_identity(rng):
    """Applying the channel after the unitary equals composing superoperators."""
    n = 2
    model = GenAmpDamping(n, p_bar=(0.03, 0.06, 0.02, 0.04))
    q = sample_haar_orthogonal(n, SeededRng(12))
    U = compile_matchgates_batch(q.entries[None])[0]
    dim = 2**n

    def superop(fn):
        M = np.zeros((dim * dim, dim * dim), dtype=complex)
        for a in range(dim):
            for b in range(dim):
                E = np.zeros((dim, dim), dtype=complex)
                E[a, b] = 1.0
                M[:, a * dim + b] = fn(E).reshape(-1)
        return M

    left = superop(lambda E: model.apply(U @ E @ U.conj().T))
    composed = superop(model.apply) @ superop(lambda E: U @ E @ U.conj().T)
    assert np.abs(left - composed).max() < 1e-10

    rho = random_density(rng, n)
    direct = model.apply(U @ rho @ U.conj().T)
    via_superop = (left @ rho.reshape(-1)).reshape(dim, dim)
    assert np.abs(direct - via_superop).max() < 1e-10


def test_round_streams_reproducible_and_batch_invariant():
    rho0 = basis_state(2, (0, 0))
    a = run_shadow_rounds(rho0, Depolarizing(0.2), "orth", 300, SeededRng(13))
    b = run_shadow_rounds(rho0, Depolarizing(0.2), "orth", 300, SeededRng(13))
    assert np.array_equal(a.qs, b.qs) and np.array_equal(a.xs, b.xs)
    c = run_shadow_rounds(rho0, Depolarizing(0.2), "orth", 300, SeededRng(14))
    assert not np.array_equal(a.xs, c.xs)


def test_sample_accessor_round_trips():
    rho0 = basis_state(2, (0, 0))
    batch = run_shadow_rounds(rho0, Noiseless(), "signed-perm", 5, SeededRng(15))
    s = batch.sample(3)
    assert s.q.entries.shape == (4, 4)
    assert len(s.x) == 2


def test_unknown_group_rejected():
    with pytest.raises(ValueError):
        run_shadow_rounds(basis_state(1, (0,)), Noiseless(), "clifford", 2, SeededRng(0))
