"""Fermionic Gaussian states and Gaussianity tests.

Correlation matrices M_ab = (i/2) Tr(rho [c_a, c_b]), synthesis of Gaussian
states from their correlation matrix, Wick's theorem, the two-copy operator
L = sum_i c_i (x) c_i with its null-space projector, the dephasing channel,
and the unitary lift of SO(2m) rotations.

Conventions:

- a pure Gaussian state is stored as (rotation R, lambda signs s) with
  correlation matrix M = R (⊕ [[0, s_j], [-s_j, 0]]) R^T, M^T M = I;
- the lift U = exp((1/4) sum_jk h_jk c_j c_k) with h = log R conjugates
  states so that correlation matrices transform as M -> R M R^T.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .antisym import (
    block_diagonalize,
    canonical_block_matrix,
    ensure_antisymmetric,
    pfaffian_minor,
    random_special_orthogonal,
    so_log,
)
from .clifford import (
    DensityOperator,
    PARITY_EVEN,
    check_modes,
    majorana_operators,
    mask_to_indices,
    parity_operator,
)

CORRELATION_TOL = 1e-9


def _as_matrix(rho):
    if isinstance(rho, DensityOperator):
        return rho.matrix, rho.m
    rho = np.asarray(rho, dtype=complex)
    m = rho.shape[0].bit_length() - 1
    return rho, check_modes(m)


def correlation_matrix(rho, imag_tol=1e-10):
    """Correlation matrix M_ab = (i/2) Tr(rho [c_a, c_b]) of an even state.

    The entries of M are real for Hermitian input; an imaginary residue above
    ``imag_tol`` signals corrupt input and raises.
    """
    X, m = _as_matrix(rho)
    cs = majorana_operators(m)
    n = 2 * m
    M = np.zeros((n, n))
    worst = 0.0
    for a in range(n):
        rc = X @ cs[a]
        for b in range(a + 1, n):
            val = 1j * np.trace(cs[b] @ rc)
            worst = max(worst, abs(val.imag))
            M[a, b] = val.real
            M[b, a] = -val.real
    if worst > imag_tol:
        raise ValueError(f"imaginary residue {worst:.3e} in correlation matrix")
    return M


def check_correlation(M, tol=CORRELATION_TOL):
    """Validate that M is antisymmetric with all |lambda_j| <= 1 + tol."""
    M = ensure_antisymmetric(M)
    form = block_diagonalize(M)
    if np.abs(form.lambdas).max(initial=0.0) > 1.0 + tol:
        raise ValueError("correlation matrix has |lambda| > 1")
    return M


def gaussian_from_correlation(M, tol=CORRELATION_TOL):
    """Gaussian state (1/2^m) prod_k (I + i l_k ct_{2k-1} ct_{2k}) with the
    rotated Majoranas ct_a = sum_b R_ba c_b block-diagonalizing M."""
    M = ensure_antisymmetric(M)
    m = check_modes(M.shape[0] // 2)
    form = block_diagonalize(M)
    if np.abs(form.lambdas).max(initial=0.0) > 1.0 + tol:
        raise ValueError("lambda outside [-1, 1]: not a valid correlation matrix")
    lams = np.clip(form.lambdas, -1.0, 1.0)
    return _standard_form_state(form.rotation, lams, m)


def _rotated_majoranas(R, m):
    cs = majorana_operators(m)
    dim = 1 << m
    out = []
    for a in range(2 * m):
        op = np.zeros((dim, dim), dtype=complex)
        for b in range(2 * m):
            if R[b, a] != 0.0:
                op += R[b, a] * cs[b]
        out.append(op)
    return out


def _standard_form_state(R, lambdas, m):
    ct = _rotated_majoranas(R, m)
    dim = 1 << m
    rho = np.eye(dim, dtype=complex)
    for k in range(m):
        rho = rho @ (np.eye(dim) + 1j * lambdas[k] * ct[2 * k] @ ct[2 * k + 1])
    rho /= dim
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(m=m, matrix=rho, parity=PARITY_EVEN)


def wick_expectation(M, indices):
    """Expectation of the Hermitian correlator B_S in the Gaussian state with
    correlation matrix M: equals Pf(M restricted to S)."""
    idx = sorted(int(i) for i in indices)
    if len(idx) % 2 == 1:
        raise ValueError("correlator must have even cardinality")
    return pfaffian_minor(np.asarray(M, dtype=float), idx)


@dataclass(eq=False)
class GaussianPureState:
    """Pure Gaussian state given by a rotation and lambda signs in {-1, +1}."""

    rotation: np.ndarray
    signs: np.ndarray

    @property
    def m(self):
        return self.rotation.shape[0] // 2

    def correlation(self):
        return self.rotation @ canonical_block_matrix(self.signs) @ self.rotation.T

    def density(self):
        return _standard_form_state(self.rotation, np.asarray(self.signs, float), self.m)

    def state_vector(self):
        """Unit eigenvector of the rank-1 density matrix, phase-fixed."""
        vals, vecs = np.linalg.eigh(self.density().matrix)
        v = vecs[:, -1]
        pivot = np.argmax(np.abs(v))
        v = v * np.exp(-1j * np.angle(v[pivot]))
        return v

    def to_json_dict(self):
        return {
            "m": self.m,
            "rotation": np.asarray(self.rotation).tolist(),
            "signs": [int(s) for s in self.signs],
        }

    @classmethod
    def from_json_dict(cls, data):
        R = np.asarray(data["rotation"], dtype=float)
        signs = np.asarray(data["signs"], dtype=int)
        if R.shape != (2 * len(signs), 2 * len(signs)):
            raise ValueError("rotation size does not match sign count")
        if not set(np.unique(signs)) <= {-1, 1}:
            raise ValueError("lambda signs must be +-1")
        return cls(rotation=R, signs=signs)


def random_pure_gaussian(m, seed):
    """Seed-deterministic random pure Gaussian state on m modes."""
    m = check_modes(m)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R = random_special_orthogonal(2 * m, rng)
    signs = rng.choice([-1, 1], size=m)
    return GaussianPureState(rotation=R, signs=signs)


def pure_state_from_pairing(pairs, signs, m):
    """Pure Gaussian state with M = sum_k s_k (E_{a_k b_k} - E_{b_k a_k}).

    ``pairs`` is a perfect matching of {1..2m} given as (a, b) tuples with
    a < b.  If the induced permutation is odd, the last rotation column is
    negated and the last sign flipped, keeping the same correlation matrix
    with det R = +1.
    """
    m = check_modes(m)
    perm = []
    for a, b in pairs:
        if not 1 <= a < b <= 2 * m:
            raise ValueError("invalid pair")
        perm.extend([a - 1, b - 1])
    if sorted(perm) != list(range(2 * m)):
        raise ValueError("pairs must partition 1..2m")
    R = np.zeros((2 * m, 2 * m))
    for src, dst in enumerate(perm):
        R[dst, src] = 1.0
    signs = np.asarray(signs, dtype=int).copy()
    if np.linalg.det(R) < 0:
        R[:, -1] = -R[:, -1]
        signs[-1] = -signs[-1]
    return GaussianPureState(rotation=R, signs=signs)


# -- two-copy machinery ------------------------------------------------------

@lru_cache(maxsize=None)
def lambda_operator(m):
    """Dense two-copy operator L = sum_i c_i (x) c_i (real symmetric)."""
    m = check_modes(m, tensor_square=True)
    cs = majorana_operators(m)
    dim = (1 << m) ** 2
    L = np.zeros((dim, dim))
    for c in cs:
        L += np.kron(c, c).real
    L.setflags(write=False)
    return L


def apply_lambda(vec, m):
    """Matrix-free application of L to a tensor-square vector."""
    m = check_modes(m, tensor_square=True)
    dim = 1 << m
    V = np.asarray(vec, dtype=complex).reshape(dim, dim)
    out = np.zeros_like(V)
    for c in majorana_operators(m):
        out += c @ V @ c.T
    return out.reshape(-1)


def swap_operator(m):
    """SWAP on the tensor square of the 2^m-dimensional space."""
    dim = 1 << m
    P = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            P[i * dim + j, j * dim + i] = 1.0
    return P


def is_gaussian(rho, tol=1e-9):
    """Commutation test: rho is Gaussian iff [L, rho (x) rho] = 0.

    Returns (verdict, residual) with the Frobenius norm of the commutator.
    """
    X, m = _as_matrix(rho)
    L = lambda_operator(m)
    B = np.kron(X, X)
    comm = L @ B - B @ L
    residual = float(np.linalg.norm(comm))
    return residual <= tol, residual


def lambda_sandwich_norm(rho):
    """Trace norm of L (rho x rho) L against its correlation-matrix value.

    Returns (lhs, rhs) where lhs is computed densely from the two-copy
    operator and rhs = 2m - Tr(M^T M).
    """
    X, m = _as_matrix(rho)
    L = lambda_operator(m)
    sandwich = L @ np.kron(X, X) @ L
    lhs = float(np.abs(np.linalg.eigvalsh(sandwich)).sum())
    M = correlation_matrix(X)
    rhs = float(2 * m - np.trace(M.T @ M))
    return lhs, rhs


@lru_cache(maxsize=None)
def gaussian_symmetric_projector(m):
    """Projector onto the null space of L, of rank C(2m, m).

    Accumulates the rank-1 projectors P_mu = 4^{-m} prod_i (I + mu_i c_i x c_i)
    over the sign vectors mu with sum mu_i = 0.
    """
    from itertools import combinations

    m = check_modes(m, tensor_square=True)
    cs = majorana_operators(m)
    dim = (1 << m) ** 2
    terms = [np.kron(c, c).real for c in cs]
    proj = np.zeros((dim, dim))
    eye = np.eye(dim)
    for minus in combinations(range(2 * m), m):
        mu = np.ones(2 * m)
        mu[list(minus)] = -1.0
        P = eye.copy()
        for i, t in enumerate(terms):
            P = P @ (eye + mu[i] * t)
        proj += P
    proj /= 4.0 ** m
    proj.setflags(write=False)
    return proj


def lambda_trace_norm(m):
    """Trace norm of L: sum over mu of |sum_i mu_i|."""
    from math import comb

    m = check_modes(m)
    return float(sum(comb(2 * m, k) * abs(2 * k - 2 * m) for k in range(2 * m + 1)))


# -- FLO unitaries and dephasing ---------------------------------------------

def flo_unitary(R):
    """Unitary lift U = exp((1/4) sum h_jk c_j c_k), h = log R.

    Conjugation by U maps correlation matrices as M -> R M R^T; on operators,
    U c_i U^dag = sum_j R_ji c_j.
    """
    R = np.asarray(R, dtype=float)
    m = check_modes(R.shape[0] // 2)
    h = so_log(R)
    cs = majorana_operators(m)
    dim = 1 << m
    K = np.zeros((dim, dim), dtype=complex)
    for j in range(2 * m):
        for k in range(2 * m):
            if j != k and h[j, k] != 0.0:
                K += 0.25 * h[j, k] * (cs[j] @ cs[k])
    return sla.expm(K)


def dephase(rho):
    """Average rho over the sign flips of each canonical Majorana pair.

    Works in the basis block-diagonalizing the correlation matrix of rho; the
    output commutes with every i ct_{2k-1} ct_{2k}, has the same correlation
    matrix, and its eigenstates are pure Gaussian states.
    """
    X, m = _as_matrix(rho)
    M = correlation_matrix(X)
    form = block_diagonalize(M)
    ct = _rotated_majoranas(form.rotation, m)
    out = np.asarray(X, dtype=complex).copy()
    for k in range(m):
        U = ct[2 * k] @ ct[2 * k + 1]
        out = 0.5 * (out + U @ out @ U.conj().T)
    out = 0.5 * (out + out.conj().T)
    return DensityOperator(m=m, matrix=out, parity=PARITY_EVEN)


def von_neumann_entropy(rho, clip=1e-14):
    """Entropy -sum p log p with eigenvalues clipped at ``clip``."""
    X, _ = _as_matrix(rho)
    vals = np.linalg.eigvalsh(X)
    vals = vals[vals > clip]
    return float(-(vals * np.log(vals)).sum())


def purity(rho):
    X, _ = _as_matrix(rho)
    return float(np.trace(X @ X).real)


# -- random-state samplers ----------------------------------------------------

def random_even_pure_state(m, seed, sector=1):
    """Random pure state vector supported on one parity sector.

    Gaussian-random complex amplitudes on the +1 (or -1) eigenspace of the
    parity operator, normalized.  Returns a DensityOperator.
    """
    m = check_modes(m)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 1 << m
    parity = np.diag(parity_operator(m)).real
    support = np.where(parity == sector)[0]
    v = np.zeros(dim, dtype=complex)
    amps = rng.standard_normal(len(support)) + 1j * rng.standard_normal(len(support))
    v[support] = amps / np.linalg.norm(amps)
    return DensityOperator(m=m, matrix=np.outer(v, v.conj()), parity=PARITY_EVEN)


def random_even_state(m, seed, rank=None):
    """Random even mixed state: a Ginibre density matrix projected onto the
    even-correlator span (which preserves positivity)."""
    m = check_modes(m)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 1 << m
    r = rank or dim
    G = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    X = G @ G.conj().T
    C = parity_operator(m)
    X = 0.5 * (X + C @ X @ C)
    X /= np.trace(X).real
    return DensityOperator(m=m, matrix=X, parity=PARITY_EVEN)


def random_mixed_gaussian(m, seed):
    """Random Gaussian state with Haar rotation and uniform lambdas."""
    m = check_modes(m)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R = random_special_orthogonal(2 * m, rng)
    lams = rng.uniform(-1.0, 1.0, size=m)
    M = R @ canonical_block_matrix(lams) @ R.T
    return gaussian_from_correlation(M)


def gaussian_expectation_of(coeffs, M):
    """Expectation of an even operator (coefficient dict mask -> value) in the
    Gaussian state with correlation matrix M, via Wick's theorem."""
    total = 0.0
    for mask, coeff in coeffs.items():
        total += coeff * wick_expectation(M, mask_to_indices(mask))
    return total
