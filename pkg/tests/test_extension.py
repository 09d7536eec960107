import json

import numpy as np
import pytest
import scipy.sparse as sp

from flocert.clifford import density_operator, majorana_operators, maximally_mixed
from flocert.extension import (
    SdpInstance,
    build_basis,
    build_extension_sdp,
    export_sdpa,
    partial_transpose_first,
    read_sdpa,
    real_embed,
    reduce_equalities,
    solve_feasibility,
    variable_layout,
    verify_extension,
)
from flocert.gaussian import (
    gaussian_from_correlation,
    lambda_operator,
    random_even_state,
    random_pure_gaussian,
)


def test_build_basis_m1():
    basis = build_basis(1)
    assert len(basis) == 2
    assert np.abs(basis[0] - np.eye(2)).max() == 0.0
    cs = majorana_operators(1)
    assert np.abs(basis[1] - 1j * cs[0] @ cs[1]).max() == 0.0


def test_build_basis_counts_and_orthogonality():
    assert len(build_basis(2)) == 8
    basis = build_basis(3)
    assert len(basis) == 2 ** (2 * 3 - 1)
    for i, A in enumerate(basis):
        for j, B in enumerate(basis):
            want = 8.0 if i == j else 0.0
            assert abs(np.trace(A @ B).real - want) < 1e-12


def test_variable_count_formula():
    assert len(variable_layout(1)) == 1
    assert len(variable_layout(2)) == 28
    assert len(variable_layout(3)) == 496
    assert len(variable_layout(4)) == 2 ** (2 * 4 - 3) * (2 ** (2 * 4) - 2) == 8128


def test_real_embed_spectra():
    assert np.abs(real_embed(np.eye(2, dtype=complex)) - np.eye(4)).max() == 0.0
    vals = np.linalg.eigvalsh(real_embed(np.diag([1.0 + 0j, -1.0])))
    assert np.abs(np.sort(vals) - [-1, -1, 1, 1]).max() < 1e-12
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    Z = Z + Z.conj().T
    got = np.sort(np.linalg.eigvalsh(real_embed(Z)))
    want = np.sort(np.repeat(np.linalg.eigvalsh(Z), 2))
    assert np.abs(got - want).max() < 1e-10
    with pytest.raises(ValueError):
        real_embed(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_partial_transpose_on_product_operators():
    # exhaustive over the correlator basis for m <= 2
    for m in (1, 2):
        basis = build_basis(m)
        for X in basis:
            for Y in basis:
                got = partial_transpose_first(np.kron(X, Y), m)
                assert np.abs(got - np.kron(X.T, Y)).max() == 0.0


def test_equality_system_matches_dense_flattening_m1():
    rho = maximally_mixed(1)
    inst = build_extension_sdp(rho, reduce=False)
    A = np.asarray(inst.eq_A.todense())
    L = lambda_operator(1)
    # dense route: stack real and imaginary parts of vec(L F_i)
    f0 = inst.f_complex(0)
    f1 = inst.f_complex(1)
    dense_A = np.concatenate([(L @ f1).real.ravel(), (L @ f1).imag.ravel()])
    dense_b = -np.concatenate([(L @ f0).real.ravel(), (L @ f0).imag.ravel()])
    # both systems must have the same solution set (here: a unique point)
    x_struct = np.linalg.lstsq(A, inst.eq_b, rcond=None)[0]
    x_dense = np.linalg.lstsq(dense_A[:, None], dense_b, rcond=None)[0]
    assert abs(x_struct[0] - x_dense[0]) < 1e-12
    assert abs(x_struct[0] - 0.25) < 1e-12


def test_equality_system_soundness_m2():
    rng = np.random.default_rng(7)
    rho = random_even_state(2, rng)
    inst = build_extension_sdp(rho)
    A = np.asarray(inst.eq_A.todense())
    x0 = np.linalg.lstsq(A, inst.eq_b, rcond=None)[0]
    _, s, Vt = np.linalg.svd(A)
    null = Vt[(s > 1e-10 * s[0]).sum():].T
    L = lambda_operator(2)
    for _ in range(3):
        x = x0 + null @ rng.standard_normal(null.shape[1])
        ext = inst.assemble(x)
        assert np.abs(L @ ext).max() < 1e-9
        partial = np.einsum("iaja->ij", ext.reshape(4, 4, 4, 4))
        assert np.abs(partial - rho.matrix).max() < 1e-10
        assert abs(np.trace(ext) - 1.0) < 1e-12


def test_echelon_reduction_preserves_solutions():
    rng = np.random.default_rng(8)
    rho = random_even_state(2, rng)
    raw = build_extension_sdp(rho, reduce=False)
    red = build_extension_sdp(rho, reduce=True)
    A_raw = np.asarray(raw.eq_A.todense())
    A_red = np.asarray(red.eq_A.todense())
    assert A_red.shape[0] == red.meta["rank"] <= A_raw.shape[0]
    x0 = np.linalg.lstsq(A_red, red.eq_b, rcond=None)[0]
    _, s, Vt = np.linalg.svd(A_red)
    null = Vt[(s > 1e-10 * s[0]).sum():].T
    for _ in range(3):
        x = x0 + null @ rng.standard_normal(null.shape[1])
        assert np.abs(A_raw @ x - raw.eq_b).max() < 1e-9


def test_reduce_equalities_flags_inconsistency():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    b = np.array([1.0, 2.0])
    A_red, b_red, rank = reduce_equalities(A, b)
    assert rank == 1
    assert A_red.shape[0] == 2 and np.abs(A_red[-1]).max() == 0.0
    assert b_red[-1] > 0.1


def test_variable_count_in_meta():
    inst = build_extension_sdp(maximally_mixed(1))
    assert inst.variable_count == 1
    assert inst.meta["block_dims"] == [8]
    inst = build_extension_sdp(maximally_mixed(2))
    assert inst.variable_count == 28
    assert inst.meta["block_dims"] == [32]


def test_instance_matrix_views():
    inst = build_extension_sdp(maximally_mixed(1), ppt=True)
    assert inst.dim == 16  # two real blocks of side 8
    f0 = inst.f0
    assert f0.shape == (16, 16)
    assert np.abs(f0 - f0.T).max() == 0.0
    assert len(inst.fs) == 1
    f1 = inst.fs[0]
    assert f1.shape == (16, 16)
    assert np.abs(f1 - f1.T).max() == 0.0
    assert np.abs(inst.fs[-1] - f1).max() == 0.0
    with pytest.raises(IndexError):
        inst.fs[1]


def test_known_extension_satisfies_instance_m2():
    rng = np.random.default_rng(9)
    states = [random_pure_gaussian(2, rng) for _ in range(2)]
    weights = [0.4, 0.6]
    rho_mat = sum(w * s.density().matrix for w, s in zip(weights, states))
    rho = density_operator(rho_mat)
    inst = build_extension_sdp(rho)
    ext = sum(w * np.kron(s.density().matrix, s.density().matrix)
              for w, s in zip(weights, states))
    # project the explicit extension onto the variable coordinates
    basis = build_basis(2)
    x = np.zeros(inst.variable_count)
    for (j, k), pos in inst.var_index.items():
        val = np.trace(np.kron(basis[j], basis[k]).conj().T @ ext).real / 16.0
        x[pos] = val
    A = np.asarray(inst.eq_A.todense())
    assert np.abs(A @ x - inst.eq_b).max() < 1e-9
    assert np.abs(inst.assemble(x) - ext).max() < 1e-9
    report = verify_extension(ext, rho, tol=1e-9)
    assert report["passed"], report


def test_verify_extension_cases():
    st = random_pure_gaussian(2, 11)
    sigma = st.density().matrix
    report = verify_extension(np.kron(sigma, sigma), density_operator(sigma),
                              tol=1e-7)
    assert report["passed"]
    assert report["lambda"] < 1e-10

    from flocert.convex import depolarized_a8
    rho = depolarized_a8(0.0)
    bad = np.kron(rho.matrix, rho.matrix)
    report = verify_extension(bad, rho, tol=1e-7)
    assert not report["passed"]
    assert report["lambda"] > 1e-3

    mixed = maximally_mixed(1)
    ext = np.eye(4) / 4.0
    report = verify_extension(ext, mixed, tol=1e-7)
    assert report["lambda"] > 0.1
    assert report["partial_trace"] < 1e-12


def test_solve_m1_family():
    from flocert.antisym import canonical_block_matrix
    for lam in (-1.0, -0.5, 0.0, 0.7, 1.0):
        rho = gaussian_from_correlation(canonical_block_matrix([lam]))
        cert = solve_feasibility(build_extension_sdp(rho))
        assert cert.feasible, (lam, cert.status, cert.residuals)
        assert cert.residuals["min_eigenvalue"] > -1e-7


def test_solve_m2_random_even_states():
    rng = np.random.default_rng(13)
    for _ in range(3):
        rho = random_even_state(2, rng)
        cert = solve_feasibility(build_extension_sdp(rho))
        assert cert.feasible
        report = verify_extension(cert.extension, rho, tol=1e-7)
        assert report["passed"], report


def test_solve_with_ppt():
    rng = np.random.default_rng(14)
    for m in (2, 3):
        rho = random_even_state(m, rng)
        cert = solve_feasibility(build_extension_sdp(rho, ppt=True))
        assert cert.feasible
        pt = partial_transpose_first(cert.extension, m)
        assert np.linalg.eigvalsh(pt).min() > -1e-7


def test_solve_pure_gaussian_m3_boundary():
    # the only extension of a pure-state input is rank one: zero margin, but
    # verification at tolerance must still succeed
    st = random_pure_gaussian(3, 99)
    rho = density_operator(st.density().matrix)
    cert = solve_feasibility(build_extension_sdp(rho))
    assert cert.feasible
    assert cert.residuals["min_eigenvalue"] > -1e-7


def test_solve_pure_gaussian_boundary_case():
    st = random_pure_gaussian(2, 15)
    rho = density_operator(st.density().matrix)
    cert = solve_feasibility(build_extension_sdp(rho))
    assert cert.feasible
    assert cert.residuals["min_eigenvalue"] > -1e-7


def test_solver_infeasible_synthetic_instance():
    # x * I >= 0 with the equality x = -1: positivity must fail
    layout = {(1, 1): 0}
    inst = SdpInstance(
        m=1, ppt=False, var_index=layout,
        beta0=np.array([0.25, 0.0]),
        eq_A=sp.csr_matrix(np.array([[1.0]])),
        eq_b=np.array([-1.0]),
        meta={"m": 1, "n": 2, "ppt": False, "variable_count": 1,
              "block_dims": [8], "equality_rows": 1, "reduced": True},
    )
    cert = solve_feasibility(inst)
    assert cert.status == "infeasible"
    assert cert.certificate


def test_solver_rejects_oversized_instance_without_long_run():
    inst = build_extension_sdp(maximally_mixed(4), reduce=False)
    with pytest.raises(ValueError):
        solve_feasibility(inst)


def test_separable_extension_lambda_trace_identity():
    # for sum_i p_i sigma_i (x) sigma_i the two-copy trace identity
    # sum_i p_i Tr M^T(sigma_i) M(sigma_i) = 2m holds exactly
    rng = np.random.default_rng(16)
    m = 2
    weights = rng.dirichlet(np.ones(4))
    states = [random_pure_gaussian(m, rng) for _ in range(4)]
    total = sum(w * np.trace(s.correlation().T @ s.correlation())
                for w, s in zip(weights, states))
    assert abs(total - 2 * m) < 1e-8


def test_export_roundtrip_m1(tmp_path):
    inst = build_extension_sdp(maximally_mixed(1))
    path = tmp_path / "inst.dat-s"
    meta_path = export_sdpa(inst, path)
    nvars, dims, entries = read_sdpa(path)
    assert nvars == 1
    assert dims[0] == 8
    # every written value must round-trip bit-exactly
    for v in range(nvars + 1):
        sign = -1.0 if v == 0 else 1.0
        for bi, block in enumerate(inst.f_real_blocks(v), start=1):
            got = entries.get((v, bi), {})
            for i, j in zip(*np.nonzero(np.triu(block))):
                assert got[(i + 1, j + 1)] == sign * block[i, j]
    meta = json.loads((tmp_path / "inst.dat-s.meta.json").read_text())
    assert meta["variable_count"] == 1 and meta["m"] == 1
    assert meta_path.endswith(".meta.json")


def test_export_roundtrip_m2_with_ppt(tmp_path):
    rng = np.random.default_rng(17)
    rho = random_even_state(2, rng)
    inst = build_extension_sdp(rho, ppt=True)
    path = tmp_path / "inst2.dat-s"
    export_sdpa(inst, path)
    nvars, dims, entries = read_sdpa(path)
    assert nvars == 28
    assert dims[:2] == [32, 32]
    assert dims[2] == -2 * inst.meta["equality_rows"]
    # equality block: diagonal entries reproduce A and b exactly
    eq_block = len(dims)
    rows = inst.meta["equality_rows"]
    A = np.asarray(inst.eq_A.todense())
    got = entries[(0, eq_block)]
    for r in range(rows):
        if inst.eq_b[r] != 0.0:
            assert got[(r + 1, r + 1)] == inst.eq_b[r]
            assert got[(rows + r + 1, rows + r + 1)] == -inst.eq_b[r]
    for pos in range(nvars):
        col = A[:, pos]
        written = entries.get((pos + 1, eq_block), {})
        for r in np.nonzero(col)[0]:
            assert written[(r + 1, r + 1)] == col[r]
