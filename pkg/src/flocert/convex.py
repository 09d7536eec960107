"""Convex-Gaussianity toolkit for the depolarized 4-mode ancilla family.

The central objects are the stabilizer-type ancilla state on 4 modes,

    |a> <a| = (1/16)(I + S1)(I + S2)(I + S3)(I + Q),
    S1 = -c1 c2 c5 c6,  S2 = -c2 c3 c6 c7,  S3 = -c1 c2 c3 c4,
    Q = c1 c2 c3 c4 c5 c6 c7 c8,

its depolarized family rho(p) = (1-p) |a><a| + p I/16, the overlap witness
with Gaussian-achievable bound 1/2, an explicit convex-Gaussian decomposition
over three pairing families with feasibility threshold 8/9, and a
ball-around-the-maximally-mixed-state decomposition that certifies
eps * rho + (1 - eps) I/2^m as convex-Gaussian for an explicitly constructed
eps = 1/(1+c).
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.optimize import minimize_scalar, nnls

from .antisym import givens_rotation
from .clifford import (
    DensityOperator,
    PARITY_EVEN,
    check_modes,
    even_masks,
    expand_even,
    indices_to_mask,
    majorana_operators,
    mask_to_indices,
)
from .gaussian import (
    GaussianPureState,
    gaussian_from_correlation,
    pure_state_from_pairing,
    wick_expectation,
)
from .simulator import GaussianEnsemble

ANCILLA_MODES = 4
WITNESS_BOUND = 0.5
NOT_CONVEX_GAUSSIAN = "not-convex-gaussian"
INCONCLUSIVE = "inconclusive"

# Majorana pairings of the three decomposition families.
PAIRINGS = {
    1: ((1, 2), (3, 4), (5, 6), (7, 8)),
    2: ((1, 3), (2, 4), (5, 7), (6, 8)),
    3: ((1, 4), (2, 3), (5, 8), (6, 7)),
}


def _stabilizer_generators():
    cs = majorana_operators(ANCILLA_MODES)

    def word(*idx):
        out = np.eye(1 << ANCILLA_MODES, dtype=complex)
        for i in idx:
            out = out @ cs[i - 1]
        return out

    s1 = -word(1, 2, 5, 6)
    s2 = -word(2, 3, 6, 7)
    s3 = -word(1, 2, 3, 4)
    q = word(1, 2, 3, 4, 5, 6, 7, 8)
    return s1, s2, s3, q


@lru_cache(maxsize=1)
def _ancilla_matrix():
    dim = 1 << ANCILLA_MODES
    eye = np.eye(dim, dtype=complex)
    rho = eye.copy()
    for g in _stabilizer_generators():
        rho = rho @ (eye + g)
    rho /= dim
    rho = 0.5 * (rho + rho.conj().T)
    rho.setflags(write=False)
    return rho


def ancilla_a8():
    """The rank-1 ancilla state on 4 modes (zero correlation matrix)."""
    return DensityOperator(m=ANCILLA_MODES, matrix=_ancilla_matrix().copy(),
                           parity=PARITY_EVEN)


@lru_cache(maxsize=1)
def ancilla_coefficients():
    """Correlator coefficients of the ancilla projector: 16 entries of
    magnitude 1/16 (identity, 14 quartic words, the full word)."""
    op = expand_even(_ancilla_matrix(), ANCILLA_MODES, tol=1e-12)
    return dict(op.coeffs)


def depolarized_a8(p):
    """(1-p) |a><a| + p I/16 for p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarization strength must lie in [0, 1]")
    dim = 1 << ANCILLA_MODES
    mat = (1.0 - p) * _ancilla_matrix() + p * np.eye(dim, dtype=complex) / dim
    return DensityOperator(m=ANCILLA_MODES, matrix=mat, parity=PARITY_EVEN)


def witness_value(p):
    """Overlap of the ancilla projector with the depolarized family: 1 - 15p/16."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarization strength must lie in [0, 1]")
    return 1.0 - 15.0 * p / 16.0


def witness_verdict(rho, slack=1e-9):
    """Certify non-convex-Gaussianity by the overlap witness.

    Returns ``not-convex-gaussian`` iff Tr(|a><a| rho) exceeds 1/2 + slack
    (no pure Gaussian state has squared overlap above 1/2 with the ancilla),
    ``inconclusive`` otherwise.
    """
    if isinstance(rho, DensityOperator):
        if rho.m != ANCILLA_MODES:
            raise ValueError("witness is defined on 4-mode states")
        X = rho.matrix
    else:
        X = np.asarray(rho, dtype=complex)
        if X.shape != (16, 16):
            raise ValueError("witness is defined on 4-mode states")
    value = float(np.trace(_ancilla_matrix() @ X).real)
    return NOT_CONVEX_GAUSSIAN if value > WITNESS_BOUND + slack else INCONCLUSIVE


@lru_cache(maxsize=1)
def _overlap_terms():
    terms = []
    for mask, coeff in sorted(ancilla_coefficients().items()):
        idx = tuple(i - 1 for i in mask_to_indices(mask))
        terms.append((idx, coeff))
    return tuple(terms)


def gaussian_overlap_a8(M):
    """Squared overlap of the pure Gaussian state with correlation matrix M
    against the ancilla: a 16-term sum of Pfaffian minors of M."""
    M = np.asarray(M, dtype=float)
    total = 0.0
    for idx, coeff in _overlap_terms():
        if len(idx) == 0:
            pf = 1.0
        elif len(idx) == 4:
            a, b, c, d = idx
            pf = (M[a, b] * M[c, d] - M[a, c] * M[b, d] + M[a, d] * M[b, c])
        else:
            pf = wick_expectation(M, tuple(i + 1 for i in idx))
        total += coeff * pf
    return float(total)


def max_overlap_search(iterations, seed):
    """Search for the largest ancilla overlap over pure Gaussian states.

    Deterministic canonical-basis candidates are tried first, then random
    restarts refined by coordinate descent over Givens rotations.  The total
    number of overlap evaluations is capped by ``iterations``.  Returns
    (best overlap, best GaussianPureState).
    """
    rng = np.random.default_rng(seed)
    n = 2 * ANCILLA_MODES
    evaluations = 0
    best_val = -np.inf
    best_state = None

    def consider(state):
        nonlocal evaluations, best_val, best_state
        evaluations += 1
        val = gaussian_overlap_a8(state.correlation())
        if val > best_val:
            best_val = val
            best_state = state
        return val

    for signs in product((1, -1), repeat=ANCILLA_MODES):
        if evaluations >= iterations:
            return best_val, best_state
        consider(pure_state_from_pairing(PAIRINGS[1], np.array(signs), ANCILLA_MODES))

    planes = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    while evaluations < iterations:
        rotation = np.linalg.qr(rng.standard_normal((n, n)))[0]
        if np.linalg.det(rotation) < 0:
            rotation[:, -1] = -rotation[:, -1]
        state = GaussianPureState(rotation=rotation,
                                  signs=rng.choice([-1, 1], size=ANCILLA_MODES))
        center_val = consider(state)
        improved = True
        while improved and evaluations < iterations:
            improved = False
            for (i, j) in planes:
                if evaluations >= iterations:
                    break
                base = state.rotation

                def objective(theta):
                    G = givens_rotation(n, i, j, theta)
                    return -consider(GaussianPureState(rotation=G @ base,
                                                       signs=state.signs))

                res = minimize_scalar(objective, bounds=(-np.pi, np.pi),
                                      method="bounded",
                                      options={"maxiter": 12, "xatol": 1e-4})
                if -res.fun > center_val + 1e-12:
                    state = GaussianPureState(
                        rotation=givens_rotation(n, i, j, float(res.x)) @ base,
                        signs=state.signs)
                    center_val = -res.fun
                    improved = True
    return best_val, best_state


# -- extreme points of the three pairing families -------------------------------

def family_correlation(type_index, lambdas):
    """Correlation matrix of the family ``type_index`` with the given lambdas."""
    pairs = PAIRINGS[int(type_index)]
    M = np.zeros((8, 8))
    for lam, (a, b) in zip(lambdas, pairs):
        M[a - 1, b - 1] = lam
        M[b - 1, a - 1] = -lam
    return M


def canonical_x(x):
    """Normalize a 4-bit label to the canonical representative with first bit 0.

    Accepts an int (0..15) or a 4-character bit string; phi states satisfy
    phi(x) = phi(~x), so labels are identified with their bitwise negation.
    """
    if isinstance(x, str):
        if len(x) != 4 or set(x) - {"0", "1"}:
            raise ValueError("x must be a 4-bit string")
        bits = tuple(int(b) for b in x)
    else:
        x = int(x)
        if not 0 <= x < 16:
            raise ValueError("x out of range")
        bits = tuple((x >> (3 - k)) & 1 for k in range(4))
    if bits[0] == 1:
        bits = tuple(1 - b for b in bits)
    return bits


def phi_state(type_index, x):
    """Extreme point phi_i(x): the even mixture of the two pure Gaussian states
    with lambdas +-(-1)^{x_k} on the type-i pairing.

    Returns (DensityOperator, GaussianEnsemble of its 2 components).  Every
    phi has zero correlation matrix and is convex-Gaussian by construction.
    """
    if type_index not in PAIRINGS:
        raise ValueError("type must be 1, 2 or 3")
    bits = canonical_x(x)
    lams = np.array([1 - 2 * b for b in bits], dtype=int)
    plus = pure_state_from_pairing(PAIRINGS[type_index], lams, ANCILLA_MODES)
    minus = pure_state_from_pairing(PAIRINGS[type_index], -lams, ANCILLA_MODES)
    mat = 0.5 * (plus.density().matrix + minus.density().matrix)
    rho = DensityOperator(m=ANCILLA_MODES, matrix=mat, parity=PARITY_EVEN)
    ensemble = GaussianEnsemble(entries=[(0.5, plus), (0.5, minus)])
    return rho, ensemble


def _phi_labels():
    return [(i, bits) for i in (1, 2, 3)
            for bits in (canonical_x(x) for x in range(8))]


@lru_cache(maxsize=1)
def _phi_coefficient_table():
    """Columns of the decomposition linear system: correlator coefficients of
    the 24 phi states over all even masks at m = 4."""
    masks = even_masks(ANCILLA_MODES)
    mask_pos = {mask: row for row, mask in enumerate(masks)}
    labels = _phi_labels()
    A = np.zeros((len(masks), len(labels)))
    for col, (i, bits) in enumerate(labels):
        pairs = PAIRINGS[i]
        lams = [1 - 2 * b for b in bits]
        # phi expands over unions of whole pairs with even pair count
        for select in product((0, 1), repeat=4):
            if sum(select) % 2 == 1:
                continue
            idx = []
            coeff = 1.0 / 16.0
            crossing_pairs = []
            for k, take in enumerate(select):
                if take:
                    idx.extend(pairs[k])
                    coeff *= lams[k]
                    crossing_pairs.append(pairs[k])
            coeff *= _crossing_sign(crossing_pairs)
            A[mask_pos[indices_to_mask(idx)], col] += coeff
    return masks, labels, A


def _crossing_sign(pairs):
    """Parity of crossings of a partial pairing: the Pfaffian of the union
    minor equals this sign times the product of pair entries."""
    sign = 1
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            (p, q), (r, s) = sorted([pairs[a], pairs[b]])
            if p < r < q < s:
                sign = -sign
    return sign


@dataclass
class A8Decomposition:
    """Outcome of the decomposition over the three pairing families."""

    p: float
    feasible: bool
    gammas: dict
    residual: float
    ensemble: GaussianEnsemble | None = None
    certificate: dict | None = None

    def reconstruction(self):
        """Dense state rebuilt from the gammas (for residual checks)."""
        dim = 1 << ANCILLA_MODES
        total = np.zeros((dim, dim), dtype=complex)
        for (i, bits), gamma in self.gammas.items():
            total += gamma * phi_state(i, "".join(map(str, bits)))[0].matrix
        return total


def decompose_a8(p, tol=1e-10):
    """Decompose the depolarized ancilla over the 24 extreme points.

    Solves the nonnegative linear system rho(p) = sum gamma_i(x) phi_i(x) by
    nonnegative least squares.  Feasible for p >= 8/9; on failure the
    certificate records the negative entries of the least-squares solution.
    The expanded ensemble has at most 48 pure Gaussian entries.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarization strength must lie in [0, 1]")
    masks, labels, A = _phi_coefficient_table()
    target = {mask: (1.0 - p) * coeff
              for mask, coeff in ancilla_coefficients().items()}
    target[0] = target.get(0, 0.0) + p / 16.0
    b = np.array([target.get(mask, 0.0) for mask in masks])
    gamma, rnorm = nnls(A, b)
    if rnorm <= tol:
        gammas = {labels[i]: float(g) for i, g in enumerate(gamma) if g > 1e-12}
        total = sum(gammas.values())
        gammas = {k: v / total for k, v in gammas.items()}
        entries = []
        for (i, bits), g in sorted(gammas.items()):
            _, ensemble = phi_state(i, "".join(map(str, bits)))
            for w, state in ensemble.entries:
                entries.append((g * w, state))
        ensemble = GaussianEnsemble(entries=entries).validate()
        return A8Decomposition(p=p, feasible=True, gammas=gammas,
                               residual=float(rnorm), ensemble=ensemble)
    ls, *_ = np.linalg.lstsq(A, b, rcond=None)
    negative = {labels[i]: float(v) for i, v in enumerate(ls) if v < -1e-12}
    certificate = {
        "least_squares_residual": float(np.linalg.norm(A @ ls - b)),
        "negative_gammas": negative,
    }
    return A8Decomposition(p=p, feasible=False, gammas={},
                           residual=float(rnorm), certificate=certificate)


# -- ball decomposition ----------------------------------------------------------

@dataclass
class BallTerm:
    """One Gaussian mixed state xi(lambda, pairing) with its peel weight."""

    weight: float
    lambdas: np.ndarray
    pairing: tuple

    def correlation(self):
        M = np.zeros((2 * len(self.pairing), 2 * len(self.pairing)))
        for lam, (a, b) in zip(self.lambdas, self.pairing):
            M[a - 1, b - 1] = lam
            M[b - 1, a - 1] = -lam
        return M

    def density(self):
        return gaussian_from_correlation(self.correlation())


@dataclass
class BallDecomposition:
    """rho = sum w xi(lambda, pairing) - c I/2^m with w, c >= 0.

    eps = 1/(1+c) certifies eps rho + (1-eps) I/2^m as convex-Gaussian; the
    expanded pure ensemble for that state is produced by :meth:`ensemble`.
    """

    m: int
    terms: list
    c: float

    @property
    def epsilon(self):
        return 1.0 / (1.0 + self.c)

    def reconstruction(self):
        dim = 1 << self.m
        total = -self.c * np.eye(dim, dtype=complex) / dim
        for term in self.terms:
            total += term.weight * term.density().matrix
        return total

    def ensemble(self):
        """Pure-Gaussian ensemble of eps rho + (1 - eps) I/2^m."""
        scale = self.epsilon
        entries = []
        for term in self.terms:
            zero_slots = [k for k, lam in enumerate(term.lambdas)
                          if abs(lam) < 0.5]
            for branch in product((-1, 1), repeat=len(zero_slots)):
                signs = np.array([int(np.sign(l)) if abs(l) >= 0.5 else 0
                                  for l in term.lambdas])
                for slot, s in zip(zero_slots, branch):
                    signs[slot] = s
                weight = term.weight * scale / (2 ** len(zero_slots))
                if weight < 1e-15:
                    continue
                entries.append(
                    (weight, pure_state_from_pairing(term.pairing, signs, self.m)))
        return GaussianEnsemble(entries=entries).validate()


def _consecutive_pairing(indices):
    return tuple((indices[i], indices[i + 1]) for i in range(0, len(indices), 2))


def ball_decomposition(rho, m=None, coeff_tol=1e-13):
    """Peel correlators of an even state into Gaussian mixed states.

    Masks are processed by decreasing cardinality (ascending mask order within
    a cardinality).  Each peel removes the current correlator exactly using a
    mixed state xi whose pairing joins the correlator's indices consecutively
    (lambda = +-1 there, 0 elsewhere), with weight w = |alpha| 2^m; the
    leftover identity weight sets c.
    """
    if isinstance(rho, DensityOperator):
        X, m = rho.matrix, rho.m
    else:
        X = np.asarray(rho, dtype=complex)
        m = check_modes(m if m is not None else X.shape[0].bit_length() - 1)
    if m > 4:
        raise ValueError("ball decomposition supported for m <= 4")
    dim = 1 << m
    op = expand_even(X, m, tol=coeff_tol)
    coeffs = dict(op.coeffs)
    all_indices = list(range(1, 2 * m + 1))
    order = sorted((mask for mask in even_masks(m) if mask),
                   key=lambda s: (-bin(s).count("1"), s))
    terms = []
    for mask in order:
        alpha = coeffs.get(mask, 0.0)
        if abs(alpha) < coeff_tol:
            continue
        idx = list(mask_to_indices(mask))
        inside = _consecutive_pairing(idx)
        rest = [i for i in all_indices if i not in idx]
        pairing = inside + _consecutive_pairing(rest)
        lams = np.zeros(m)
        lams[: len(inside)] = 1.0
        lams[len(inside) - 1] = np.sign(alpha)
        weight = abs(alpha) * dim
        # subtract the xi expansion from the remaining coefficients
        for select in product((0, 1), repeat=len(inside)):
            sub_idx = []
            contrib = 1.0
            for k, take in enumerate(select):
                if take:
                    sub_idx.extend(inside[k])
                    contrib *= lams[k]
            coeffs_key = indices_to_mask(sub_idx)
            coeffs[coeffs_key] = coeffs.get(coeffs_key, 0.0) - weight * contrib / dim
        coeffs[mask] = 0.0
        terms.append(BallTerm(weight=weight, lambdas=lams, pairing=pairing))
    remainder = coeffs.get(0, 0.0)
    if remainder * dim > 1e-15:
        terms.append(BallTerm(weight=remainder * dim, lambdas=np.zeros(m),
                              pairing=_consecutive_pairing(all_indices)))
        c = 0.0
    else:
        c = max(0.0, -remainder * dim)
    return BallDecomposition(m=m, terms=terms, c=c)
