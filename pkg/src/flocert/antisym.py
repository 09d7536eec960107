"""Real antisymmetric matrix kernels.

Pfaffians via Parlett-Reid tridiagonalization with partial pivoting,
block diagonalization A = R (⊕_j [[0, l_j], [-l_j, 0]]) R^T with
R in SO(2m), and constructors/samplers for special orthogonal matrices.

Index lists passed to ``pfaffian_minor`` are 1-based row/column labels,
matching the Majorana-operator convention of :mod:`flocert.clifford`.
"""

from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np
import scipy.linalg as sla

ANTISYM_TOL = 1e-12


def ensure_antisymmetric(A, tol=ANTISYM_TOL):
    """Validate A^T = -A within tol (relative) and return the symmetrized copy."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, np.abs(A).max())
    if np.abs(A + A.T).max() > tol * scale * 10:
        raise ValueError("matrix is not antisymmetric within tolerance")
    return 0.5 * (A - A.T)


def pfaffian(A):
    """Pfaffian of a real antisymmetric matrix of even dimension.

    Parlett-Reid tridiagonalization with partial pivoting; O(n^3) and free of
    complex arithmetic.  Raises on odd dimension or asymmetry.
    """
    A = ensure_antisymmetric(A)
    n = A.shape[0]
    if n % 2 == 1:
        raise ValueError("Pfaffian requires even dimension")
    if n == 0:
        return 1.0
    A = A.copy()
    value = 1.0
    for k in range(0, n - 1, 2):
        pivot = k + 1 + np.abs(A[k + 1:, k]).argmax()
        if pivot != k + 1:
            A[[k + 1, pivot], k:] = A[[pivot, k + 1], k:]
            A[k:, [k + 1, pivot]] = A[k:, [pivot, k + 1]]
            value = -value
        if A[k + 1, k] == 0.0:
            return 0.0
        value *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1]
            A[k + 2:, k + 2:] += np.outer(tau, col)
            A[k + 2:, k + 2:] -= np.outer(col, tau)
    return float(value)


def pfaffian_minor(A, indices):
    """Pfaffian of the principal submatrix selected by 1-based ``indices``.

    Indices must be strictly increasing with even count; the empty selection
    returns 1 by convention.
    """
    A = np.asarray(A, dtype=float)
    idx = [int(i) for i in indices]
    if len(idx) == 0:
        return 1.0
    if len(idx) % 2 == 1:
        raise ValueError("index list must have even cardinality")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("indices must be strictly increasing")
    if idx[0] < 1 or idx[-1] > A.shape[0]:
        raise ValueError("index out of range")
    sel = np.asarray(idx) - 1
    if len(sel) == 2:
        return float(A[sel[0], sel[1]])
    return pfaffian(A[np.ix_(sel, sel)])


@dataclass
class BlockDiagonalForm:
    """Canonical block form of an antisymmetric matrix.

    ``rotation`` is in SO(2m); ``lambdas`` are sorted descending by absolute
    value and nonnegative except possibly the last entry, which carries the
    sign of Pf(A) (a negative Pfaffian cannot be reconciled with det R = +1
    and all-nonnegative lambdas, since Pf(A) = det(R) * prod lambda_j).
    """

    rotation: np.ndarray
    lambdas: np.ndarray

    def matrix(self):
        """Reconstruct R D R^T."""
        D = canonical_block_matrix(self.lambdas)
        return self.rotation @ D @ self.rotation.T


def canonical_block_matrix(lambdas):
    """Direct sum of blocks [[0, l], [-l, 0]]."""
    lambdas = np.asarray(lambdas, dtype=float)
    n = 2 * lambdas.size
    D = np.zeros((n, n))
    for j, lam in enumerate(lambdas):
        D[2 * j, 2 * j + 1] = lam
        D[2 * j + 1, 2 * j] = -lam
    return D


def _block_order(blocks, gap=1e-10):
    """Sort (lambda, u, v) triples by decreasing |lambda|; ties broken by
    lexicographic order of the first rotation column for determinism."""

    def cmp(a, b):
        la, lb = abs(a[0]), abs(b[0])
        if abs(la - lb) > gap:
            return -1 if la > lb else 1
        for x, y in zip(a[1], b[1]):
            if abs(x - y) > gap:
                return -1 if x > y else 1
        return 0

    return sorted(blocks, key=cmp_to_key(cmp))


def block_diagonalize(A, tol=1e-12):
    """Canonical form A = R D R^T with R in SO(2m).

    Built from the real Schur decomposition, which is block diagonal for
    antisymmetric input; zero rows pair up into lambda = 0 blocks.
    """
    A = ensure_antisymmetric(A)
    n = A.shape[0]
    if n % 2 == 1:
        raise ValueError("even dimension required")
    if n == 0:
        return BlockDiagonalForm(rotation=np.eye(0), lambdas=np.zeros(0))
    scale = max(1.0, np.abs(A).max())
    T, Q = sla.schur(A, output="real")
    blocks = []
    zero_cols = []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > tol * scale:
            lam = 0.5 * (T[i, i + 1] - T[i + 1, i])
            u, v = Q[:, i].copy(), Q[:, i + 1].copy()
            if lam < 0:
                u, v, lam = v, u, -lam
            blocks.append((lam, u, v))
            i += 2
        else:
            zero_cols.append(Q[:, i].copy())
            i += 1
    for a in range(0, len(zero_cols), 2):
        blocks.append((0.0, zero_cols[a], zero_cols[a + 1]))
    blocks = _block_order(blocks)
    R = np.empty((n, n))
    lambdas = np.empty(n // 2)
    for j, (lam, u, v) in enumerate(blocks):
        R[:, 2 * j] = u
        R[:, 2 * j + 1] = v
        lambdas[j] = lam
    if np.linalg.det(R) < 0:
        R[:, -1] = -R[:, -1]
        lambdas[-1] = -lambdas[-1]
    return BlockDiagonalForm(rotation=R, lambdas=lambdas)


def givens_rotation(dim, i, j, theta):
    """Rotation by theta in the (i, j) coordinate plane (1-based indices)."""
    if i == j:
        raise ValueError("plane requires two distinct indices")
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ValueError("plane index out of range")
    R = np.eye(dim)
    c, s = np.cos(theta), np.sin(theta)
    a, b = i - 1, j - 1
    R[a, a] = c
    R[b, b] = c
    R[a, b] = -s
    R[b, a] = s
    return R


def so_from_blocks(dim, angles=None, givens=None, permutation=None):
    """Assemble a special orthogonal matrix from simple building blocks.

    Exactly one of the keyword arguments selects the construction:

    - ``angles``: rotation angles for the planes (1,2), (3,4), ...;
    - ``givens``: iterable of (i, j, theta) plane rotations (1-based),
      composed left to right;
    - ``permutation``: 0-based image list; must be an even permutation,
      otherwise the determinant would be -1 and a ValueError is raised.
    """
    provided = [x is not None for x in (angles, givens, permutation)]
    if sum(provided) != 1:
        raise ValueError("provide exactly one of angles, givens, permutation")
    if angles is not None:
        angles = list(angles)
        if 2 * len(angles) != dim:
            raise ValueError("need dim/2 angles")
        R = np.eye(dim)
        for k, theta in enumerate(angles):
            R[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [
                [np.cos(theta), -np.sin(theta)],
                [np.sin(theta), np.cos(theta)],
            ]
        return R
    if givens is not None:
        R = np.eye(dim)
        for (i, j, theta) in givens:
            R = givens_rotation(dim, i, j, theta) @ R
        return R
    perm = list(permutation)
    if sorted(perm) != list(range(dim)):
        raise ValueError("not a permutation of 0..dim-1")
    R = np.zeros((dim, dim))
    for src, dst in enumerate(perm):
        R[dst, src] = 1.0
    if np.linalg.det(R) < 0:
        raise ValueError("odd permutation has determinant -1; compensation required")
    return R


def random_special_orthogonal(dim, seed):
    """Haar-ish sample from SO(dim): QR of a Gaussian matrix with the sign fix
    Q <- Q sign(diag(R)), then the last column negated if det = -1.
    Deterministic for a given seed (int or numpy Generator)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    if np.linalg.det(Q) < 0:
        Q[:, -1] = -Q[:, -1]
    return Q


def so_log(R, tol=1e-9):
    """Real antisymmetric logarithm of a special orthogonal matrix.

    Uses the real Schur form (block diagonal with 2x2 rotations and +-1
    singletons for orthogonal input); -1 singletons are paired into pi
    rotations, which keeps the logarithm real even when scipy's generic
    ``logm`` would go complex.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    if np.abs(R @ R.T - np.eye(n)).max() > tol:
        raise ValueError("matrix is not orthogonal within tolerance")
    if np.linalg.det(R) < 0:
        raise ValueError("determinant -1: no real antisymmetric logarithm")
    T, Q = sla.schur(R, output="real")
    G = np.zeros((n, n))
    minus_positions = []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > tol:
            c = 0.5 * (T[i, i] + T[i + 1, i + 1])
            s = 0.5 * (T[i + 1, i] - T[i, i + 1])
            theta = np.arctan2(s, c)
            G[i, i + 1] = -theta
            G[i + 1, i] = theta
            i += 2
        else:
            if T[i, i] < 0:
                minus_positions.append(i)
            i += 1
    if len(minus_positions) % 2 == 1:
        raise ValueError("inconsistent Schur form for a rotation")
    for a in range(0, len(minus_positions), 2):
        p, q = minus_positions[a], minus_positions[a + 1]
        G[p, q] = -np.pi
        G[q, p] = np.pi
    return Q @ G @ Q.T
