import numpy as np
import pytest

from flocert.antisym import block_diagonalize, canonical_block_matrix, random_special_orthogonal
from flocert.clifford import correlator_matrix, even_masks, majorana_operators, mask_to_indices, maximally_mixed, parity_operator
from flocert.gaussian import (
    GaussianPureState,
    apply_lambda,
    correlation_matrix,
    dephase,
    flo_unitary,
    gaussian_from_correlation,
    gaussian_symmetric_projector,
    is_gaussian,
    lambda_operator,
    lambda_sandwich_norm,
    lambda_trace_norm,
    pure_state_from_pairing,
    purity,
    random_even_pure_state,
    random_even_state,
    random_mixed_gaussian,
    random_pure_gaussian,
    swap_operator,
    von_neumann_entropy,
    wick_expectation,
)

from math import comb


def test_correlation_of_maximally_mixed_is_zero():
    assert np.abs(correlation_matrix(maximally_mixed(3))).max() == 0.0


def test_correlation_roundtrip():
    rng = np.random.default_rng(21)
    for m in (1, 2, 3):
        R = random_special_orthogonal(2 * m, rng)
        lams = rng.uniform(-1, 1, m)
        M = R @ canonical_block_matrix(lams) @ R.T
        rho = gaussian_from_correlation(M)
        assert np.abs(correlation_matrix(rho) - M).max() < 1e-10


def test_gaussian_from_zero_matrix_is_maximally_mixed():
    rho = gaussian_from_correlation(np.zeros((6, 6)))
    assert np.abs(rho.matrix - np.eye(8) / 8).max() < 1e-14


def test_gaussian_purity_cases():
    pure = gaussian_from_correlation(canonical_block_matrix([1.0, 1.0]))
    assert abs(purity(pure) - 1.0) < 1e-10
    assert np.linalg.matrix_rank(pure.matrix, tol=1e-10) == 1
    half = gaussian_from_correlation(canonical_block_matrix([1.0, 0.0]))
    assert np.linalg.matrix_rank(half.matrix, tol=1e-10) == 2
    assert abs(von_neumann_entropy(half) - np.log(2)) < 1e-10


def test_gaussian_from_correlation_rejects_large_lambda():
    with pytest.raises(ValueError):
        gaussian_from_correlation(canonical_block_matrix([1.2, 0.0]))


def test_wick_trivial_cases():
    rng = np.random.default_rng(5)
    rho = random_mixed_gaussian(2, rng)
    M = correlation_matrix(rho)
    assert wick_expectation(M, ()) == 1.0
    assert wick_expectation(M, (1, 3)) == M[0, 2]
    with pytest.raises(ValueError):
        wick_expectation(M, (1, 2, 3))


def test_wick_matches_dense_traces_m3():
    rng = np.random.default_rng(6)
    rho = random_mixed_gaussian(3, rng)
    M = correlation_matrix(rho)
    for mask in even_masks(3):
        dense = np.trace(correlator_matrix(mask, 3) @ rho.matrix).real
        assert abs(wick_expectation(M, mask_to_indices(mask)) - dense) < 1e-9


def test_lambda_operator_spectrum_and_trace_norm():
    for m in (1, 2):
        L = lambda_operator(m)
        vals = np.sort(np.linalg.eigvalsh(L))
        want = np.sort([2 * k - 2 * m for k in range(2 * m + 1)
                        for _ in range(comb(2 * m, k))])
        assert np.abs(vals - want).max() < 1e-10
        assert abs(np.abs(vals).sum() - lambda_trace_norm(m)) < 1e-10
    assert lambda_trace_norm(1) == 4.0
    assert lambda_trace_norm(2) == 24.0
    assert lambda_trace_norm(3) == 120.0


def test_lambda_null_space_dimension():
    for m in (1, 2, 3):
        vals = np.linalg.eigvalsh(lambda_operator(m))
        assert int((np.abs(vals) < 1e-10).sum()) == comb(2 * m, m)


def test_apply_lambda_matches_dense():
    rng = np.random.default_rng(8)
    for m in (1, 2, 3):
        v = rng.standard_normal((1 << m) ** 2) + 1j * rng.standard_normal((1 << m) ** 2)
        assert np.abs(apply_lambda(v, m) - lambda_operator(m) @ v).max() < 1e-12


def test_is_gaussian_verdicts():
    ok, res = is_gaussian(maximally_mixed(2))
    assert ok and res < 1e-12
    rng = np.random.default_rng(10)
    ok, res = is_gaussian(random_mixed_gaussian(3, rng))
    assert ok and res < 1e-9
    # an even pure state at m = 4 built from a non-Gaussian superposition
    v = np.zeros(16, dtype=complex)
    v[0b0000] = 1 / np.sqrt(2)
    v[0b0011] = 0.5
    v[0b1111] = 0.5
    rho = np.outer(v, v.conj())
    ok, res = is_gaussian(rho)
    assert not ok and res > 1e-3


def test_lambda_sandwich_identity_even_states():
    rng = np.random.default_rng(11)
    for m in (1, 2, 3):
        for _ in range(5):
            rho = random_even_state(m, rng)
            lhs, rhs = lambda_sandwich_norm(rho)
            assert abs(lhs - rhs) < 1e-8


def test_lambda_sandwich_pure_gaussian_vanishes():
    st = random_pure_gaussian(2, 3)
    lhs, rhs = lambda_sandwich_norm(st.density())
    assert abs(lhs) < 1e-9 and abs(rhs) < 1e-9


def test_lambda_sandwich_maximally_mixed():
    for m in (1, 2):
        lhs, rhs = lambda_sandwich_norm(maximally_mixed(m))
        assert abs(lhs - 2 * m) < 1e-9 and rhs == 2 * m


def test_lambda_annihilates_pure_gaussian_tensor_square():
    rng = np.random.default_rng(14)
    for m in (2, 3, 4):
        st = random_pure_gaussian(m, rng)
        psi = st.state_vector()
        residual = np.linalg.norm(apply_lambda(np.kron(psi, psi), m))
        assert residual < 1e-9


def test_even_pure_states_small_m_are_gaussian():
    rng = np.random.default_rng(15)
    for m in (1, 2, 3):
        for _ in range(10):
            rho = random_even_pure_state(m, rng, sector=rng.choice([-1, 1]))
            M = correlation_matrix(rho)
            assert np.abs(M.T @ M - np.eye(2 * m)).max() < 1e-7
            ok, res = is_gaussian(rho, tol=1e-7)
            assert ok, res


def test_lemma_purity_iff_orthogonal_correlation():
    rng = np.random.default_rng(16)
    rho = random_even_state(2, rng)
    M = correlation_matrix(rho)
    lams = np.abs(block_diagonalize(M).lambdas)
    assert lams.max() <= 1 + 1e-9
    assert np.abs(M.T @ M - np.eye(4)).max() > 1e-3  # mixed state
    st = random_pure_gaussian(2, rng)
    Mp = st.correlation()
    assert np.abs(Mp.T @ Mp - np.eye(4)).max() < 1e-10
    assert abs(purity(st.density()) - 1) < 1e-8


def test_flo_unitary_conjugation_rule():
    rng = np.random.default_rng(18)
    for m in (2, 3):
        R = random_special_orthogonal(2 * m, rng)
        U = flo_unitary(R)
        assert np.abs(U @ U.conj().T - np.eye(1 << m)).max() < 1e-9
        cs = majorana_operators(m)
        for i in range(2 * m):
            want = sum(R[j, i] * cs[j] for j in range(2 * m))
            assert np.abs(U @ cs[i] @ U.conj().T - want).max() < 1e-9


def test_flo_unitary_correlation_transform():
    rng = np.random.default_rng(19)
    m = 3
    rho = random_mixed_gaussian(m, rng)
    M = correlation_matrix(rho)
    R = random_special_orthogonal(2 * m, rng)
    U = flo_unitary(R)
    evolved = U @ rho.matrix @ U.conj().T
    assert np.abs(correlation_matrix(evolved) - R @ M @ R.T).max() < 1e-9


def test_flo_invariance_of_parity():
    rng = np.random.default_rng(20)
    for m in (2, 3):
        R = random_special_orthogonal(2 * m, rng)
        U = flo_unitary(R)
        C = parity_operator(m)
        assert np.abs(U @ C @ U.conj().T - C).max() < 1e-9


def test_dephase_fixes_maximally_mixed():
    rho = dephase(maximally_mixed(2))
    assert np.abs(rho.matrix - np.eye(4) / 4).max() < 1e-12


def test_dephase_leaves_gaussian_states_invariant():
    rng = np.random.default_rng(22)
    rho = random_mixed_gaussian(2, rng)
    out = dephase(rho)
    assert np.abs(out.matrix - rho.matrix).max() < 1e-10


def test_dephase_properties_random_even():
    rng = np.random.default_rng(23)
    for m in (2, 3):
        rho = random_even_state(m, rng)
        M = correlation_matrix(rho)
        out = dephase(rho)
        assert np.abs(correlation_matrix(out) - M).max() < 1e-9
        assert von_neumann_entropy(out) >= von_neumann_entropy(rho) - 1e-10
        # output commutes with each canonical pair operator
        form = block_diagonalize(M)
        cs = majorana_operators(m)
        for k in range(m):
            ct = [sum(form.rotation[b, a] * cs[b] for b in range(2 * m))
                  for a in (2 * k, 2 * k + 1)]
            K = 1j * ct[0] @ ct[1]
            assert np.abs(K @ out.matrix - out.matrix @ K).max() < 1e-9


def test_dephase_output_eigenstates_are_gaussian_m2():
    rng = np.random.default_rng(24)
    rho = random_even_state(2, rng)
    out = dephase(rho)
    vals, vecs = np.linalg.eigh(out.matrix)
    for idx in range(len(vals)):
        if vals[idx] < 1e-8:
            continue
        pure = np.outer(vecs[:, idx], vecs[:, idx].conj())
        M = correlation_matrix(pure)
        assert np.abs(M.T @ M - np.eye(4)).max() < 1e-7


def test_gaussian_symmetric_projector_properties():
    for m in (1, 2, 3):
        P = gaussian_symmetric_projector(m)
        assert abs(np.trace(P) - comb(2 * m, m)) < 1e-8
        assert np.abs(P @ P - P).max() < 1e-10
        assert np.abs(lambda_operator(m) @ P).max() < 1e-10
        S = swap_operator(m)
        assert np.abs(P @ S - P).max() < 1e-10


def test_projector_matches_sign_vector_accumulation_m2():
    # independent route: sum the rank-1 projectors over balanced sign vectors
    from itertools import combinations
    m = 2
    cs = majorana_operators(m)
    terms = [np.kron(c, c) for c in cs]
    dim = 16
    acc = np.zeros((dim, dim), dtype=complex)
    for minus in combinations(range(4), 2):
        P = np.eye(dim, dtype=complex)
        for i, t in enumerate(terms):
            mu = -1.0 if i in minus else 1.0
            P = P @ (np.eye(dim) + mu * t)
        acc += P / 4.0 ** m
    assert np.abs(acc - gaussian_symmetric_projector(m)).max() < 1e-12


def test_projector_strictly_inside_symmetric_subspace_m2():
    P = gaussian_symmetric_projector(2)
    S = swap_operator(2)
    sym_rank = round(np.trace(0.5 * (np.eye(16) + S)).real)
    assert sym_rank == comb(4 + 1, 2) == 10
    assert round(np.trace(P).real) == 6 < sym_rank


def test_projector_fixes_gaussian_tensor_squares():
    rng = np.random.default_rng(25)
    P = gaussian_symmetric_projector(2)
    for _ in range(50):
        psi = random_pure_gaussian(2, rng).state_vector()
        v = np.kron(psi, psi)
        assert np.linalg.norm(P @ v - v) < 1e-9


def test_random_pure_gaussian_contract():
    st = random_pure_gaussian(3, 77)
    M = st.correlation()
    assert np.abs(M.T @ M - np.eye(6)).max() < 1e-10
    ok, _ = is_gaussian(st.density())
    assert ok
    st2 = random_pure_gaussian(3, 77)
    assert np.array_equal(st.rotation, st2.rotation)
    assert np.array_equal(st.signs, st2.signs)


def test_random_pure_gaussian_m1_structure():
    st = random_pure_gaussian(1, 5)
    vals = np.linalg.eigvalsh(st.density().matrix)
    assert np.abs(np.sort(vals) - [0.0, 1.0]).max() < 1e-10


def test_pure_state_from_pairing_handles_odd_permutations():
    st = pure_state_from_pairing(((1, 3), (2, 4)), [1, 1], 2)
    assert abs(np.linalg.det(st.rotation) - 1.0) < 1e-12
    M = st.correlation()
    assert M[0, 2] == 1.0 and abs(M[1, 3]) == 1.0
    assert np.abs(M.T @ M - np.eye(4)).max() < 1e-12


def test_gaussian_pure_state_json_roundtrip():
    st = random_pure_gaussian(2, 9)
    back = GaussianPureState.from_json_dict(st.to_json_dict())
    assert np.abs(back.rotation - st.rotation).max() < 1e-15
    assert np.array_equal(back.signs, st.signs)


def test_correlation_rejects_corrupt_input():
    X = np.diag([0.5 + 0.1j, 0.5 - 0.1j])  # not Hermitian
    with pytest.raises(ValueError):
        correlation_matrix(X)
