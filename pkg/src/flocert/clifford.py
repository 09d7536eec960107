"""Dense Clifford-algebra machinery for systems of m fermionic modes.

The 2m Majorana operators are represented as dense 2^m x 2^m matrices under
a fixed Jordan-Wigner convention,

    c_{2k-1} = Z_1 ... Z_{k-1} X_k,      c_{2k} = Z_1 ... Z_{k-1} Y_k,

so that every c_i is Hermitian and traceless with entries in {0, +-1, +-i},
and {c_j, c_k} = 2 delta_{jk} I holds exactly.  Majorana indices are 1-based
throughout the public API (c_1 ... c_2m); index sets are encoded as 2m-bit
masks with bit i-1 standing for index i.

Hermitian even operators expand over the orthogonal correlator basis

    B_S = i^{|S|/2} c_{a_1} c_{a_2} ... c_{a_2k},   S = {a_1 < ... < a_2k},

with purely real coefficients; ``expand_even``/``assemble_even`` convert
between the dense and coefficient representations.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MODE_CAP = 6
TENSOR_SQUARE_DIM_CAP = 2 ** 12
DEFAULT_TOL = 1e-10

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def check_modes(m, tensor_square=False):
    """Validate a mode count against the size caps; returns m as int."""
    m = int(m)
    if not 1 <= m <= MODE_CAP:
        raise ValueError(f"mode count m={m} outside supported range 1..{MODE_CAP}")
    if tensor_square and (1 << (2 * m)) ** 2 > TENSOR_SQUARE_DIM_CAP ** 2:
        raise ValueError(f"tensor-square operations unsupported for m={m}")
    return m


@lru_cache(maxsize=None)
def _majorana_cache(m):
    dim = 1 << m
    ops = []
    for k in range(1, m + 1):
        z_prefix = np.eye(1, dtype=complex)
        for _ in range(k - 1):
            z_prefix = np.kron(z_prefix, _Z)
        tail = np.eye(1 << (m - k), dtype=complex)
        for local in (_X, _Y):
            op = np.kron(np.kron(z_prefix, local), tail)
            op.setflags(write=False)
            ops.append(op)
    assert ops[0].shape == (dim, dim)
    return tuple(ops)


def majorana_matrix(k, m):
    """Dense matrix of the Majorana operator c_k (1 <= k <= 2m)."""
    m = check_modes(m)
    if not 1 <= k <= 2 * m:
        raise ValueError(f"Majorana index {k} out of range 1..{2 * m}")
    return _majorana_cache(m)[k - 1]


def majorana_operators(m):
    """Tuple of all 2m Majorana matrices (c_1, ..., c_2m)."""
    return _majorana_cache(check_modes(m))


@lru_cache(maxsize=None)
def parity_operator(m):
    """Fermion number-parity operator, prod_k (I - 2 a_k^dag a_k) = Z x ... x Z."""
    m = check_modes(m)
    op = np.eye(1, dtype=complex)
    for _ in range(m):
        op = np.kron(op, _Z)
    op.setflags(write=False)
    return op


def mask_to_indices(mask):
    """Sorted 1-based Majorana indices packed in a bitmask."""
    return tuple(i + 1 for i in range(int(mask).bit_length()) if (mask >> i) & 1)


def indices_to_mask(indices):
    """Bitmask for a collection of 1-based Majorana indices."""
    mask = 0
    for i in indices:
        bit = 1 << (int(i) - 1)
        if mask & bit:
            raise ValueError(f"duplicate index {i}")
        mask |= bit
    return mask


def even_masks(m):
    """All even-cardinality index masks over {1..2m}, ascending."""
    m = check_modes(m)
    return [s for s in range(1 << (2 * m)) if bin(s).count("1") % 2 == 0]


def odd_masks(m):
    """All odd-cardinality index masks over {1..2m}, ascending."""
    m = check_modes(m)
    return [s for s in range(1 << (2 * m)) if bin(s).count("1") % 2 == 1]


@lru_cache(maxsize=None)
def correlator_matrix(mask, m):
    """Hermitian correlator B_S = i^floor(|S|/2) c_{a_1} ... c_{a_|S|} for mask S.

    Even |S| gives the coefficient basis used by ``expand_even``; odd |S| is
    exposed for the extension machinery.  B_S is Hermitian, B_S^2 = I, and
    Tr(B_S B_T) = 2^m delta_{ST}.
    """
    m = check_modes(m)
    mask = int(mask)
    if mask >> (2 * m):
        raise ValueError(f"mask {mask} out of range for m={m}")
    cs = _majorana_cache(m)
    dim = 1 << m
    result = np.eye(dim, dtype=complex)
    count = 0
    for i in range(2 * m):
        if (mask >> i) & 1:
            result = result @ cs[i]
            count += 1
    out = (1j ** (count // 2)) * result
    out.setflags(write=False)
    return out


@dataclass
class EvenOperator:
    """Real coefficients of a Hermitian even operator over the B_S basis.

    ``coeffs`` maps index masks (even cardinality) to real numbers; the
    identity coefficient lives at mask 0.
    """

    m: int
    coeffs: dict = field(default_factory=dict)

    def coefficient(self, mask):
        return self.coeffs.get(int(mask), 0.0)

    def to_json_dict(self):
        return {
            "m": self.m,
            "coeffs": [
                {"mask": int(k), "value": float(v)}
                for k, v in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        coeffs = {int(e["mask"]): float(e["value"]) for e in data["coeffs"]}
        return cls(m=check_modes(data["m"]), coeffs=coeffs)


def even_part(X, m):
    """Projection of X onto the even-correlator span, (X + C X C)/2."""
    C = parity_operator(m)
    return 0.5 * (X + C @ X @ C)


def odd_part(X, m):
    """Projection of X onto the odd-correlator span, (X - C X C)/2."""
    C = parity_operator(m)
    return 0.5 * (X - C @ X @ C)


def expand_even(X, m, tol=DEFAULT_TOL):
    """Expand a Hermitian even matrix over the correlator basis.

    Raises if X is not Hermitian or carries an odd component above tol.
    Coefficients with magnitude below tol are dropped; the identity
    coefficient equals Tr(X)/2^m.
    """
    m = check_modes(m)
    X = np.asarray(X, dtype=complex)
    dim = 1 << m
    if X.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix for m={m}")
    scale = max(1.0, np.abs(X).max())
    if np.abs(X - X.conj().T).max() > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    odd_norm = np.abs(odd_part(X, m)).max()
    if odd_norm > tol * scale:
        raise ValueError(f"odd component {odd_norm:.3e} above tolerance")
    coeffs = {}
    for mask in even_masks(m):
        val = np.trace(correlator_matrix(mask, m) @ X).real / dim
        if abs(val) > tol:
            coeffs[mask] = float(val)
    return EvenOperator(m=m, coeffs=coeffs)


def assemble_even(op):
    """Dense Hermitian matrix of an EvenOperator."""
    m = check_modes(op.m)
    dim = 1 << m
    X = np.zeros((dim, dim), dtype=complex)
    for mask, val in op.coeffs.items():
        X += val * correlator_matrix(int(mask), m)
    return X


PARITY_EVEN = "even"
PARITY_ODD = "odd"
PARITY_MIXED = "mixed"


@dataclass(eq=False)
class DensityOperator:
    """Dense 2^m x 2^m Hermitian operator with a parity-support tag."""

    m: int
    matrix: np.ndarray
    parity: str

    @property
    def dim(self):
        return 1 << self.m

    def validate_state(self, tol=1e-8):
        """Check Hermiticity, unit trace and positivity within tol."""
        X = self.matrix
        if np.abs(X - X.conj().T).max() > tol:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(X).real - 1.0) > tol or abs(np.trace(X).imag) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(X).min() < -tol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    def to_json_dict(self):
        flat = np.ascontiguousarray(self.matrix).reshape(-1)
        interleaved = np.empty(2 * flat.size)
        interleaved[0::2] = flat.real
        interleaved[1::2] = flat.imag
        return {"m": self.m, "parity": self.parity, "data": interleaved.tolist()}

    @classmethod
    def from_json_dict(cls, data):
        m = check_modes(data["m"])
        dim = 1 << m
        arr = np.asarray(data["data"], dtype=float)
        if arr.size != 2 * dim * dim:
            raise ValueError("serialized matrix has the wrong size")
        mat = (arr[0::2] + 1j * arr[1::2]).reshape(dim, dim)
        return density_operator(mat, m=m)


def parity_tag(X, m, tol=1e-12):
    """Classify support of X as even, odd or mixed relative to the parity operator."""
    scale = max(1.0, np.abs(X).max())
    has_even = np.abs(even_part(X, m)).max() > tol * scale
    has_odd = np.abs(odd_part(X, m)).max() > tol * scale
    if has_even and has_odd:
        return PARITY_MIXED
    return PARITY_ODD if has_odd else PARITY_EVEN


def density_operator(matrix, m=None, check=True, tol=1e-8):
    """Wrap a dense matrix as a DensityOperator, inferring m when omitted."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("density matrix must be square")
    dim = matrix.shape[0]
    if m is None:
        m = dim.bit_length() - 1
    m = check_modes(m)
    if dim != (1 << m):
        raise ValueError(f"matrix dimension {dim} does not match m={m}")
    rho = DensityOperator(m=m, matrix=matrix, parity=parity_tag(matrix, m))
    if check:
        rho.validate_state(tol=tol)
    return rho


def maximally_mixed(m):
    """The state I / 2^m."""
    m = check_modes(m)
    dim = 1 << m
    return DensityOperator(m=m, matrix=np.eye(dim, dtype=complex) / dim,
                           parity=PARITY_EVEN)
