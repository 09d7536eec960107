"""Two-copy symmetric-extension feasibility programs.

An even state rho on m modes is expanded over the Hermitian correlator basis
{M_j}, and a candidate extension on the tensor square is parametrized as

    rho_ext = sum_j beta_jj M_j x M_j
            + sum_{j<k} beta_jk (M_j x M_k + M_k x M_j),

with beta_{0j} pinned to alpha_j / 2^m by the partial-trace constraint.  The
annihilation constraint L rho_ext = 0 (L = sum_i c_i x c_i) becomes a linear
system A x = b, assembled structurally: c_i M_j is a single odd correlator up
to a phase in {+-1, +-i}, so each equation row is indexed by an ordered pair
of odd masks and split into real and imaginary parts.  Positivity is posed on
the real embedding [[Re, -Im], [Im, Re]]; with the PPT variant the block
rho_ext^{T1} is appended.

The embedded solver eliminates the equalities, restricts the positivity
blocks to their joint reachable support (every feasible point is annihilated
by L, so the blocks live on a fixed low-dimensional face), and maximizes the
minimum eigenvalue with cvxopt's interior-point SDP solver.  Infeasibility is
only reported together with a validated dual certificate; precision failures
come back as ``unknown``.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .clifford import (
    DensityOperator,
    check_modes,
    correlator_matrix,
    even_masks,
    expand_even,
    odd_masks,
)
from .gaussian import lambda_operator, swap_operator

EMBEDDED_SOLVE_MODE_CAP = 3
RANK_TOL = 1e-10


def build_basis(m):
    """Hermitian correlator basis over even masks, ascending mask order.

    Returns 2^{2m-1} dense operators with M_0 = I and Tr(M_j M_k) = 2^m d_jk.
    """
    m = check_modes(m)
    return [np.asarray(correlator_matrix(mask, m)) for mask in even_masks(m)]


def variable_layout(m):
    """Map (j, k) basis pairs with 1 <= j <= k to variable positions.

    Diagonal variables come first, then off-diagonal pairs in lexicographic
    order; the count is 2^{2m-3} (2^{2m} - 2).
    """
    n_basis = 1 << (2 * m - 1)
    layout = {}
    pos = 0
    for j in range(1, n_basis):
        layout[(j, j)] = pos
        pos += 1
    for j in range(1, n_basis):
        for k in range(j + 1, n_basis):
            layout[(j, k)] = pos
            pos += 1
    return layout


def _odd_product_phase(i, even_mask):
    """Phase of c_i M_{even_mask} = phase * O_{even_mask XOR bit(i)}."""
    bit = 1 << (i - 1)
    below = bin(even_mask & (bit - 1)).count("1")
    sign = -1.0 if below % 2 else 1.0
    if even_mask & bit:
        return sign * 1j
    return complex(sign)


def build_equality_system(m, beta0):
    """Rows of the annihilation constraint as a sparse system A x = b.

    ``beta0`` is the vector of pinned coefficients beta_{0j} over even masks.
    Row (a, b) over odd-mask pairs with a <= b collects, for each Majorana
    index i, the contribution of the variable (a^i, b^i); swap symmetry of
    the parametrization makes (b, a) redundant.  Returns (A_csr, b, nnz_rows).
    """
    m = check_modes(m)
    evens = even_masks(m)
    odds = odd_masks(m)
    even_pos = {mask: idx for idx, mask in enumerate(evens)}
    layout = variable_layout(m)
    nvars = len(layout)
    data, rows, cols, bvals = [], [], [], []
    nrows = 0
    for ai in range(len(odds)):
        for bi in range(ai, len(odds)):
            a, b = odds[ai], odds[bi]
            x_re, x_im = {}, {}
            b_re = b_im = 0.0
            for i in range(1, 2 * m + 1):
                bit = 1 << (i - 1)
                jm, km = a ^ bit, b ^ bit
                phase = _odd_product_phase(i, jm) * _odd_product_phase(i, km)
                j, k = even_pos[jm], even_pos[km]
                if j == 0 or k == 0:
                    other = k if j == 0 else j
                    coeff = beta0[other] * phase
                    b_re += coeff.real
                    b_im += coeff.imag
                else:
                    var = layout[(min(j, k), max(j, k))]
                    if abs(phase.real) > 0:
                        x_re[var] = x_re.get(var, 0.0) + phase.real
                    else:
                        x_im[var] = x_im.get(var, 0.0) + phase.imag
            for part, bpart in ((x_re, b_re), (x_im, b_im)):
                entries = {v: c for v, c in part.items() if c != 0.0}
                if not entries and abs(bpart) < 1e-15:
                    continue
                for v, c in entries.items():
                    rows.append(nrows)
                    cols.append(v)
                    data.append(c)
                bvals.append(-bpart)
                nrows += 1
    A = sp.csr_matrix((data, (rows, cols)), shape=(nrows, nvars))
    return A, np.asarray(bvals), nrows


def reduce_equalities(A, b, tol=RANK_TOL):
    """Row-reduce A x = b to full row rank, preserving the solution set.

    Dense QR with column pivoting; an inconsistent system keeps one sentinel
    row (0 ... 0 | residual) so infeasibility is not silently dropped.
    """
    A = np.asarray(A.todense() if sp.issparse(A) else A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[0] == 0:
        return A, b, 0
    Q, R, perm = sla.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int((diag > tol * scale).sum())
    A_red = np.zeros((rank, A.shape[1]))
    A_red[:, perm] = R[:rank]
    qb = Q.T @ b
    b_red = qb[:rank]
    residual = np.linalg.norm(A @ np.linalg.lstsq(A, b, rcond=None)[0] - b)
    if residual > 1e-9 * max(1.0, np.linalg.norm(b)):
        A_red = np.vstack([A_red, np.zeros((1, A.shape[1]))])
        b_red = np.concatenate([b_red, [residual]])
    return A_red, b_red, rank


@dataclass(eq=False)
class SdpInstance:
    """Feasibility program F0 + sum_i x_i F_i >= 0, A x = b.

    Positivity blocks are kept in complex form (``f_complex``) plus the real
    embedding used for solving/export.  ``meta['reduced']`` records whether
    the equality system is in reduced (full row rank) form.
    """

    m: int
    ppt: bool
    var_index: dict
    beta0: np.ndarray
    eq_A: "sp.csr_matrix | np.ndarray"
    eq_b: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def variable_count(self):
        return len(self.var_index)

    @property
    def dim(self):
        """Side length of the (direct-summed) positivity block."""
        return sum(self.meta["block_dims"])

    @property
    def f0(self):
        """Constant positivity term as one real symmetric matrix."""
        return sla.block_diag(*self.f_real_blocks(0))

    @property
    def fs(self):
        """Lazy sequence of the per-variable real symmetric matrices."""
        return _LazyFs(self)

    @property
    def basis(self):
        return build_basis(self.m)

    def f_complex(self, v):
        """Complex positivity term for variable v (v = 0 gives F0)."""
        basis = self.basis
        if v == 0:
            dim = basis[0].shape[0]
            out = np.zeros((dim * dim, dim * dim), dtype=complex)
            out += self.beta0[0] * np.kron(basis[0], basis[0])
            for j in range(1, len(basis)):
                if self.beta0[j] != 0.0:
                    out += self.beta0[j] * (np.kron(basis[0], basis[j])
                                            + np.kron(basis[j], basis[0]))
            return out
        j, k = self._pair_of(v)
        if j == k:
            return np.kron(basis[j], basis[j])
        return np.kron(basis[j], basis[k]) + np.kron(basis[k], basis[j])

    def _pair_of(self, v):
        if not hasattr(self, "_pairs"):
            self._pairs = {pos + 1: pair for pair, pos in self.var_index.items()}
        return self._pairs[v]

    def f_real_blocks(self, v):
        """Real symmetric blocks of the positivity constraint for variable v."""
        Z = self.f_complex(v)
        blocks = [real_embed(Z)]
        if self.ppt:
            blocks.append(real_embed(partial_transpose_first(Z, self.m)))
        return blocks

    def assemble(self, x, include_constant=True):
        """Dense complex extension candidate rho_ext(x).

        With ``include_constant=False`` the pinned beta_{0j} row is dropped,
        which gives the homogeneous direction sum_v x_v F_v.
        """
        basis = self.basis
        n = len(basis)
        beta = np.zeros((n, n))
        if include_constant:
            beta[0, :] = self.beta0
            beta[:, 0] = self.beta0
        for (j, k), pos in self.var_index.items():
            beta[j, k] = x[pos]
            beta[k, j] = x[pos]
        stack = np.stack(basis)
        W = np.tensordot(beta, stack, axes=(1, 0))
        dim = basis[0].shape[0]
        out = np.zeros((dim * dim, dim * dim), dtype=complex)
        for j in range(n):
            if np.abs(W[j]).max() != 0.0:
                out += np.kron(stack[j], W[j])
        return out


class _LazyFs:
    """Sequence view over the per-variable positivity matrices, built on
    demand (materializing all of them would need ~17 GB at m = 4)."""

    def __init__(self, inst):
        self._inst = inst

    def __len__(self):
        return self._inst.variable_count

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return sla.block_diag(*self._inst.f_real_blocks(i + 1))


def real_embed(Z, tol=1e-9):
    """[[Re Z, -Im Z], [Im Z, Re Z]]: PSD iff the Hermitian Z is PSD; every
    eigenvalue of Z appears twice."""
    Z = np.asarray(Z, dtype=complex)
    if np.abs(Z - Z.conj().T).max() > tol * max(1.0, np.abs(Z).max()):
        raise ValueError("real embedding expects a Hermitian matrix")
    re, im = Z.real, Z.imag
    return np.block([[re, -im], [im, re]])


def partial_transpose_first(X, m):
    """Transpose on the first tensor factor: (A x B)^{T1} = A^T x B."""
    dim = 1 << m
    X = np.asarray(X)
    if X.shape != (dim * dim, dim * dim):
        raise ValueError("operator does not live on the tensor square")
    T = X.reshape(dim, dim, dim, dim)
    return T.transpose(2, 1, 0, 3).reshape(dim * dim, dim * dim)


def build_extension_sdp(rho, ppt=False, reduce=None):
    """Build the n = 2 extension feasibility instance for an even state.

    ``reduce`` controls equality-system row reduction; by default systems are
    reduced for m <= 3 and kept as deduplicated sparse rows at m = 4, where
    dense reduction conflicts with the export-tier memory budget.
    """
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(m=check_modes(int(np.log2(len(rho)))),
                              matrix=np.asarray(rho, dtype=complex), parity="even")
    m = check_modes(rho.m, tensor_square=True)
    op = expand_even(rho.matrix, m, tol=1e-13)
    evens = even_masks(m)
    dim = 1 << m
    alpha = np.array([op.coefficient(mask) for mask in evens])
    if abs(alpha[0] - 1.0 / dim) > 1e-9:
        raise ValueError("state is not normalized")
    beta0 = alpha / dim
    layout = variable_layout(m)
    A, b, raw_rows = build_equality_system(m, beta0)
    if reduce is None:
        reduce = m <= 3
    if reduce:
        A_red, b_red, rank = reduce_equalities(A, b)
        eq_A, eq_b = sp.csr_matrix(A_red), b_red
        reduced = True
    else:
        eq_A, eq_b, rank = A, b, None
        reduced = False
    meta = {
        "m": m,
        "n": 2,
        "ppt": bool(ppt),
        "variable_count": len(layout),
        "block_dims": [2 * dim * dim] * (2 if ppt else 1),
        "equality_rows": int(eq_A.shape[0]),
        "raw_equality_rows": int(raw_rows),
        "rank": rank,
        "reduced": reduced,
    }
    return SdpInstance(m=m, ppt=bool(ppt), var_index=layout, beta0=beta0,
                       eq_A=eq_A, eq_b=eq_b, meta=meta)


# -- solving ---------------------------------------------------------------------

@dataclass
class ExtensionCertificate:
    """Outcome of the feasibility solve.

    ``feasible`` carries the variable vector and the assembled extension;
    ``infeasible`` carries a validated dual (improving-ray) certificate;
    ``unknown`` means precision or iteration limits were hit.
    """

    status: str
    x: np.ndarray | None = None
    extension: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    certificate: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status == "feasible"


def _null_space(A, tol=RANK_TOL):
    if A.shape[0] == 0:
        return np.eye(A.shape[1])
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int((s > tol * (s[0] if s.size else 1.0)).sum())
    return Vt[rank:].T


def solve_feasibility(inst, tol=1e-7, max_iters=100, long_run=False):
    """Decide feasibility of an extension instance.

    The embedded path targets m <= 2 and m = 3 (m = 3 with PPT, and m = 4,
    are gated behind ``long_run``).  Equalities are eliminated first; the
    positivity blocks are restricted to their joint support and the minimum
    eigenvalue is maximized with cvxopt.  ``feasible`` is only returned when
    the assembled extension passes :func:`verify_extension` at ``tol``;
    ``infeasible`` only with a validated dual certificate.
    """
    import cvxopt
    import cvxopt.solvers

    m = inst.meta["m"]
    if m > EMBEDDED_SOLVE_MODE_CAP and not long_run:
        raise ValueError(
            "embedded solving is capped at m <= 3; export the instance or pass long_run=True")
    eq_A = inst.eq_A.todense() if sp.issparse(inst.eq_A) else inst.eq_A
    eq_A = np.asarray(eq_A, dtype=float)
    if not inst.meta.get("reduced", True):
        eq_A_red, eq_b_red, _ = reduce_equalities(eq_A, inst.eq_b)
        eq_A, eq_b = eq_A_red, eq_b_red
    else:
        eq_b = np.asarray(inst.eq_b, dtype=float)

    x0, *_ = np.linalg.lstsq(eq_A, eq_b, rcond=None) if eq_A.shape[0] else (
        np.zeros(inst.variable_count),)
    if eq_A.shape[0]:
        eq_residual = np.linalg.norm(eq_A @ x0 - eq_b)
        if eq_residual > 1e-8 * max(1.0, np.linalg.norm(eq_b)):
            return ExtensionCertificate(
                status="infeasible",
                residuals={"equality": float(eq_residual)},
                certificate={"reason": "inconsistent equality system",
                             "residual": float(eq_residual)})
    N = _null_space(eq_A) if eq_A.shape[0] else np.eye(inst.variable_count)
    q = N.shape[1]

    def blocks_of(Z):
        blocks = [real_embed(Z)]
        if inst.ppt:
            blocks.append(real_embed(partial_transpose_first(Z, m)))
        return blocks

    def direction_blocks(d):
        return blocks_of(inst.assemble(N[:, d], include_constant=False))

    # two passes over the directions: accumulate the joint support of each
    # block first, then store only the support-projected blocks
    base_blocks = blocks_of(inst.assemble(x0))
    grams = [B @ B for B in base_blocks]
    for d in range(q):
        for bi, B in enumerate(direction_blocks(d)):
            grams[bi] += B @ B
    supports = []
    for G in grams:
        vals, vecs = np.linalg.eigh(G)
        keep = vals > 1e-11 * max(vals.max(), 1e-300)
        supports.append(vecs[:, keep])
    reduced_base = [U.T @ B @ U for U, B in zip(supports, base_blocks)]
    reduced_dirs = []
    for d in range(q):
        reduced_dirs.append([U.T @ B @ U
                             for U, B in zip(supports, direction_blocks(d))])

    def certify(x, strict_margin=None):
        rho_ext = inst.assemble(x)
        target = _target_state(inst)
        residuals = verify_extension(rho_ext, target, tol=tol, ppt=inst.ppt)
        residuals["equality"] = float(
            np.linalg.norm(eq_A @ x - eq_b)) if eq_A.shape[0] else 0.0
        if strict_margin is not None:
            residuals["margin"] = strict_margin
        status = "feasible" if residuals["passed"] else "unknown"
        return ExtensionCertificate(status=status, x=x, extension=rho_ext,
                                    residuals=residuals)

    if q == 0:
        cert = certify(x0)
        if cert.status != "feasible":
            min_eig = cert.residuals.get("min_eigenvalue", 0.0)
            if min_eig < -tol:
                cert.status = "infeasible"
                cert.certificate = {"reason": "equalities pin a unique candidate "
                                              "that violates positivity",
                                    "min_eigenvalue": min_eig}
        return cert

    # maximize t subject to B(z) - t I >= 0 per block: variables (z, t)
    c = cvxopt.matrix([0.0] * q + [-1.0])
    Gs, hs = [], []
    for bi in range(len(reduced_base)):
        k = reduced_base[bi].shape[0]
        cols = []
        for d in range(q):
            cols.append(-reduced_dirs[d][bi].reshape(-1, order="F"))
        cols.append(np.eye(k).reshape(-1, order="F"))
        Gs.append(cvxopt.matrix(np.column_stack(cols)))
        hs.append(cvxopt.matrix(reduced_base[bi]))
    Gl = cvxopt.matrix(np.concatenate([np.zeros(q), [1.0]])).T
    hl = cvxopt.matrix([10.0])
    options = {"show_progress": False, "maxiters": int(max_iters),
               "abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9}
    try:
        sol = cvxopt.solvers.sdp(c, Gl=Gl, hl=hl, Gs=Gs, hs=hs, options=options)
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        return ExtensionCertificate(status="unknown",
                                    certificate={"reason": f"solver failure: {exc}"})
    if sol["status"] not in ("optimal", "unknown"):
        return ExtensionCertificate(
            status="unknown",
            certificate={"reason": f"solver status {sol['status']}"})
    y = np.asarray(sol["x"]).ravel()
    z, t_star = y[:q], float(y[q])
    x = x0 + N @ z

    if t_star >= -tol:
        cert = certify(x, strict_margin=t_star)
        if cert.status == "feasible" or sol["status"] == "optimal":
            return cert
        return ExtensionCertificate(status="unknown", x=x,
                                    residuals=cert.residuals,
                                    certificate={"reason": "verification failed"})
    if sol["status"] != "optimal":
        return ExtensionCertificate(status="unknown",
                                    certificate={"reason": "solver did not converge"})
    # validate the dual certificate: blocks Y_b >= 0 with
    # sum_b <Y_b, B_d(b)> = 0 for every direction d and sum_b <Y_b, B0(b)> < 0
    # prove that no point of the affine space has all blocks PSD.
    duals = [0.5 * (np.asarray(Z) + np.asarray(Z).T) for Z in sol["zs"]]
    trace_total = float(sum(np.trace(Y) for Y in duals))
    scale = max(trace_total, 1e-300)
    min_eig = min(float(np.linalg.eigvalsh(Y).min()) for Y in duals)
    orth = max(
        abs(float(sum(np.tensordot(Y, reduced_dirs[d][bi])
                      for bi, Y in enumerate(duals))))
        for d in range(q))
    value = float(sum(np.tensordot(Y, reduced_base[bi])
                      for bi, Y in enumerate(duals)))
    certificate = {
        "margin": -t_star,
        "dual_value": value / scale,
        "dual_min_eigenvalue": min_eig / scale,
        "dual_orthogonality": orth / scale,
    }
    if min_eig / scale > -1e-7 and orth / scale < 1e-6 and value < 0:
        return ExtensionCertificate(status="infeasible", x=x,
                                    certificate=certificate)
    return ExtensionCertificate(status="unknown", x=x, certificate=certificate)


def _target_state(inst):
    basis = inst.basis
    dim = basis[0].shape[0]
    rho = np.zeros((dim, dim), dtype=complex)
    for j, mat in enumerate(basis):
        rho += inst.beta0[j] * dim * mat
    return rho


def verify_extension(rho_ext, rho, tol=1e-7, ppt=False):
    """Constraint residuals of a candidate extension against a target state.

    Reports the partial-trace, trace, annihilation, positivity and
    Bose-symmetry residuals independently; ``passed`` is their conjunction
    at ``tol``.
    """
    rho_ext = np.asarray(rho_ext, dtype=complex)
    if isinstance(rho, DensityOperator):
        m, rho = rho.m, rho.matrix
    else:
        rho = np.asarray(rho, dtype=complex)
        m = rho.shape[0].bit_length() - 1
    dim = 1 << m
    if rho_ext.shape != (dim * dim, dim * dim):
        raise ValueError("extension does not live on the tensor square")
    partial = np.einsum("iaja->ij", rho_ext.reshape(dim, dim, dim, dim))
    L = lambda_operator(m)
    P = swap_operator(m)
    residuals = {
        "trace": float(abs(np.trace(rho_ext) - 1.0)),
        "partial_trace": float(np.linalg.norm(partial - rho)),
        "lambda": float(np.linalg.norm(L @ rho_ext)),
        "min_eigenvalue": float(np.linalg.eigvalsh(rho_ext).min()),
        "bose": float(np.linalg.norm(P @ rho_ext - rho_ext)),
    }
    if ppt:
        pt = partial_transpose_first(rho_ext, m)
        residuals["ppt_min_eigenvalue"] = float(np.linalg.eigvalsh(pt).min())
    checks = [
        residuals["trace"] < tol,
        residuals["partial_trace"] < tol,
        residuals["lambda"] < tol,
        residuals["min_eigenvalue"] > -tol,
        residuals["bose"] < tol,
    ]
    if ppt:
        checks.append(residuals["ppt_min_eigenvalue"] > -tol)
    residuals["passed"] = bool(all(checks))
    return residuals


# -- SDPA sparse export ------------------------------------------------------------

def _fmt(value):
    return f"{value:.17g}"


def _monomial_stack(m):
    """(perm, val) arrays of every basis correlator: row i holds val[i] at
    column perm[i] (the correlators are monomial matrices)."""
    perms, vals = [], []
    for mat in build_basis(m):
        cols = np.argmax(np.abs(mat) > 0.5, axis=1)
        perms.append(cols)
        vals.append(mat[np.arange(mat.shape[0]), cols])
    return np.stack(perms), np.stack(vals)


def _kron_entries(pj, vj, pk, vk):
    """COO entries of the monomial tensor product."""
    n = pj.size
    rows = (np.arange(n)[:, None] * n + np.arange(n)[None, :]).ravel()
    cols = (pj[:, None] * n + pk[None, :]).ravel()
    vals = (vj[:, None] * vk[None, :]).ravel()
    return rows, cols, vals


def _transpose_monomial(p, v):
    pt = np.empty_like(p)
    vt = np.empty_like(v)
    pt[p] = np.arange(p.size)
    vt[p] = v
    return pt, vt


def _f_entry_arrays(inst, v, perms, vals, transpose_first=False):
    """Merged complex COO entries of the positivity term for variable v."""
    dim = perms.shape[1]

    def prepared(j):
        if transpose_first:
            return _transpose_monomial(perms[j], vals[j])
        return perms[j], vals[j]

    pieces = []
    if v == 0:
        pj0, vj0 = prepared(0)
        pieces.append(_kron_entries(pj0, inst.beta0[0] * vj0, perms[0], vals[0]))
        for j in range(1, perms.shape[0]):
            if inst.beta0[j] == 0.0:
                continue
            pj, vj = prepared(j)
            pieces.append(_kron_entries(pj0, inst.beta0[j] * vj0, perms[j], vals[j]))
            pieces.append(_kron_entries(pj, inst.beta0[j] * vj, perms[0], vals[0]))
    else:
        j, k = inst._pair_of(v)
        pj, vj = prepared(j)
        pk, vk = prepared(k)
        pieces.append(_kron_entries(pj, vj, perms[k], vals[k]))
        if j != k:
            pieces.append(_kron_entries(pk, vk, perms[j], vals[j]))
    rows = np.concatenate([p[0] for p in pieces])
    cols = np.concatenate([p[1] for p in pieces])
    data = np.concatenate([p[2] for p in pieces])
    merged = sp.coo_matrix((data, (rows, cols)),
                           shape=(dim * dim, dim * dim)).tocsr()
    merged.eliminate_zeros()
    merged = merged.tocoo()
    return merged.row, merged.col, merged.data


def _write_embedded_entries(fh, v, block, rows, cols, data, n, sign):
    """Emit the upper triangle of [[Re, -Im], [Im, Re]] for complex entries."""
    for i, j, z in zip(rows, cols, data):
        re, im = sign * z.real, sign * z.imag
        if re != 0.0 and i <= j:
            fh.write(f"{v} {block} {i + 1} {j + 1} {_fmt(re)}\n")
            fh.write(f"{v} {block} {i + n + 1} {j + n + 1} {_fmt(re)}\n")
        if im != 0.0:
            fh.write(f"{v} {block} {i + 1} {j + n + 1} {_fmt(-im)}\n")


def export_sdpa(inst, path):
    """Write the instance in SDPA sparse format, streaming entry lines.

    Positivity blocks come first; the equality system is encoded as a
    diagonal block of paired inequalities (a^T x - b >= 0 and b - a^T x >= 0).
    The SDPA convention is X = sum_i x_i F_i - F0 >= 0, so the constant
    positivity term is written with a sign flip.  A JSON sidecar with the
    instance metadata is written next to the file.
    """
    eq_A = inst.eq_A.tocoo() if sp.issparse(inst.eq_A) else sp.coo_matrix(inst.eq_A)
    eq_rows = eq_A.shape[0]
    block_dims = list(inst.meta["block_dims"])
    blocks = block_dims + [-2 * eq_rows] if eq_rows else block_dims
    nvars = inst.variable_count
    with open(path, "w", buffering=1 << 20) as fh:
        fh.write(f'"extension feasibility instance: m={inst.m} n=2 ppt={int(inst.ppt)}"\n')
        fh.write(f"{nvars}\n")
        fh.write(f"{len(blocks)}\n")
        fh.write(" ".join(str(bd) for bd in blocks) + "\n")
        fh.write(" ".join(["0"] * nvars) + "\n")
        perms, vals = _monomial_stack(inst.m)
        n = perms.shape[1] ** 2
        for v in range(nvars + 1):
            sign = -1.0 if v == 0 else 1.0
            rows, cols, data = _f_entry_arrays(inst, v, perms, vals)
            _write_embedded_entries(fh, v, 1, rows, cols, data, n, sign)
            if inst.ppt:
                rows, cols, data = _f_entry_arrays(inst, v, perms, vals,
                                                   transpose_first=True)
                _write_embedded_entries(fh, v, 2, rows, cols, data, n, sign)
        if eq_rows:
            eq_block = len(blocks)
            b = np.asarray(inst.eq_b)
            for r, val in enumerate(b):
                if val != 0.0:
                    fh.write(f"0 {eq_block} {r + 1} {r + 1} {_fmt(val)}\n")
                    fh.write(f"0 {eq_block} {eq_rows + r + 1} {eq_rows + r + 1} {_fmt(-val)}\n")
            order = np.argsort(eq_A.col, kind="stable")
            for idx in order:
                r, v, val = int(eq_A.row[idx]), int(eq_A.col[idx]), float(eq_A.data[idx])
                fh.write(f"{v + 1} {eq_block} {r + 1} {r + 1} {_fmt(val)}\n")
                fh.write(f"{v + 1} {eq_block} {eq_rows + r + 1} {eq_rows + r + 1} {_fmt(-val)}\n")
    meta_path = str(path) + ".meta.json"
    with open(meta_path, "w") as fh:
        json.dump({
            "m": inst.m,
            "n": inst.meta["n"],
            "ppt": inst.ppt,
            "variable_count": nvars,
            "block_dims": block_dims,
            "equality_rows": int(eq_rows),
        }, fh, indent=1)
    return meta_path


def read_sdpa(path):
    """Parse an SDPA sparse file back into (nvars, block sizes, entries).

    ``entries`` maps (var, block) to a dict {(i, j): value} over the upper
    triangle, suitable for bitwise round-trip comparison.
    """
    with open(path) as fh:
        lines = iter(fh)
        header = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith(("*", '"')):
                continue
            header.append(line)
            if len(header) == 3:
                break
        nvars = int(header[0])
        nblocks = int(header[1])
        dims = [int(tok) for tok in header[2].replace(",", " ").split()]
        if len(dims) != nblocks:
            raise ValueError("block structure length mismatch")
        for line in lines:  # objective vector
            if line.strip() and not line.lstrip().startswith(("*", '"')):
                break
        entries = {}
        for line in lines:
            line = line.strip()
            if not line or line.startswith(("*", '"')):
                continue
            v, blk, i, j, val = line.split()
            key = (int(v), int(blk))
            entries.setdefault(key, {})[(int(i), int(j))] = float(val)
    return nvars, dims, entries
