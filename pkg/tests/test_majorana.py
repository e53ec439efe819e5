from itertools import combinations

import numpy as np
import pytest

from mgshadow.majorana import (
    MajoranaIndexSet,
    basis_state,
    covariance_of_state,
    doubled_indices,
    gamma_S,
    index_bits,
    majorana_matrix,
    project_onto_gamma_subspace,
    vacuum_projector_overlap,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def test_single_mode_operators_are_pauli_x_and_y():
    assert np.array_equal(majorana_matrix(1, 1), X)
    assert np.array_equal(majorana_matrix(1, 2), Y)


def test_trace_of_anticommuting_square():
    g1, g2 = majorana_matrix(2, 1), majorana_matrix(2, 2)
    assert np.trace(g1 @ g2 @ g1 @ g2) == pytest.approx(-4)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_clifford_algebra_relations(n):
    gammas = [majorana_matrix(n, j) for j in range(1, 2 * n + 1)]
    for a, ga in enumerate(gammas):
        assert np.abs(ga - ga.conj().T).max() < 1e-14
        assert np.abs(ga @ ga - np.eye(2**n)).max() < 1e-14
        for gb in gammas[a + 1 :]:
            assert np.abs(ga @ gb + gb @ ga).max() < 1e-14


def test_index_validation():
    with pytest.raises(ValueError):
        majorana_matrix(2, 5)
    with pytest.raises(ValueError):
        majorana_matrix(2, 0)
    with pytest.raises(ValueError):
        majorana_matrix(7, 1)  # dense cap
    with pytest.raises(ValueError):
        MajoranaIndexSet((2, 1), 2)
    with pytest.raises(ValueError):
        MajoranaIndexSet((1, 1), 2)


def test_gamma_product_base_cases():
    assert np.array_equal(gamma_S(2, ()), np.eye(4))
    assert np.abs(gamma_S(1, (1, 2)) - 1j * Z).max() < 1e-14


def test_top_weight_product_against_product_state_formula():
    # tr(gamma_{1..4} |00><00|) = (-i)^2 * (-1)^(x1+x2) = -1
    rho = basis_state(2, (0, 0))
    assert np.trace(gamma_S(2, (1, 2, 3, 4)) @ rho) == pytest.approx(-1)


def test_diagonal_product_trace_formula():
    # tr(gamma_{D(S)} |x><x|) = prod_{j in S} i (-1)^{x_j}, any x, any S
    n = 3
    for xi in range(2**n):
        x = index_bits(xi, n)
        rho = basis_state(n, x)
        for k in range(n + 1):
            for S in combinations(range(1, n + 1), k):
                got = np.trace(gamma_S(n, doubled_indices(S)) @ rho)
                want = np.prod([1j * (-1) ** x[j - 1] for j in S]) if S else 1.0
                assert abs(got - want) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_orthogonality(n):
    sets = [S for k in range(2 * n + 1) for S in combinations(range(1, 2 * n + 1), k)]
    if n == 3:  # full quadratic sweep is slow; sample pairs
        gen = np.random.default_rng(5)
        pairs = [(sets[gen.integers(len(sets))], sets[gen.integers(len(sets))]) for _ in range(200)]
    else:
        pairs = [(S, T) for S in sets for T in sets]
    for S, T in pairs:
        val = np.trace(gamma_S(n, S).conj().T @ gamma_S(n, T))
        want = 2**n if S == T else 0.0
        assert abs(val - want) < 1e-12


def test_projector_fixes_own_subspace_and_kills_others():
    A = gamma_S(2, (1, 2))
    assert np.abs(project_onto_gamma_subspace(A, 2, 2) - A).max() < 1e-12
    assert np.abs(project_onto_gamma_subspace(A, 4, 2)).max() < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projector_completeness_and_idempotence(n, rng):
    dim = 2**n
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    parts = [project_onto_gamma_subspace(A, k, n) for k in range(2 * n + 1)]
    assert np.abs(sum(parts) - A).max() < 1e-10
    for k, P in enumerate(parts):
        assert np.abs(project_onto_gamma_subspace(P, k, n) - P).max() < 1e-10


def test_vacuum_overlap_closed_form():
    assert vacuum_projector_overlap(4, 0) == pytest.approx(1 / 16)
    assert vacuum_projector_overlap(4, 2) == pytest.approx(6 / 16)
    with pytest.raises(ValueError):
        vacuum_projector_overlap(4, 5)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_vacuum_overlap_matches_dense_projection(n):
    rho0 = basis_state(n, (0,) * n)
    for k in range(n + 1):
        dense = sum(
            abs(np.trace(rho0 @ gamma_S(n, S))) ** 2 / 2**n
            for S in combinations(range(1, 2 * n + 1), 2 * k)
        )
        assert dense == pytest.approx(vacuum_projector_overlap(n, k), abs=1e-12)


def test_covariance_of_basis_states():
    C = covariance_of_state(basis_state(2, (0, 1)))
    want = np.zeros((4, 4))
    want[0, 1], want[1, 0] = 1, -1
    want[2, 3], want[3, 2] = -1, 1
    assert np.abs(C - want).max() < 1e-12
