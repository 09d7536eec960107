"""Classical simulation of fermionic-linear-optics computation.

A run tracks the 2m x 2m correlation matrix of the register: rotations act as
M -> R M R^T, number measurements update M by a rank-2 conditioning formula
validated against the dense projector oracle, and noisy ancillae are injected
by sampling a pure-Gaussian ensemble and direct-summing the sampled state's
correlation matrix.

Mode and Majorana indices are 1-based.  Measurement outcome 0 corresponds to
eigenvalue +1 of i c_{2k-1} c_{2k}; the vacuum register has M with every
canonical lambda equal to +1.  Per-shot randomness comes from a counter-based
Philox stream keyed by (seed, shot), so runs are reproducible and shots are
independent.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .antisym import canonical_block_matrix
from .clifford import check_modes
from .gaussian import GaussianPureState

ZERO_PROB_TOL = 1e-12


# -- circuit description -------------------------------------------------------

@dataclass(frozen=True)
class Rotate:
    matrix: tuple  # nested tuples, kept hashable/immutable

    def array(self):
        return np.asarray(self.matrix, dtype=float)


@dataclass(frozen=True)
class Braid:
    i: int
    j: int


@dataclass(frozen=True)
class MeasureMode:
    mode: int


@dataclass(frozen=True)
class InjectAncilla:
    ensemble: "GaussianEnsemble"


@dataclass
class GaussianEnsemble:
    """Weighted list of pure Gaussian states."""

    entries: list  # of (weight, GaussianPureState)

    @property
    def m(self):
        return self.entries[0][1].m

    def validate(self, tol=1e-9):
        if not self.entries:
            raise ValueError("empty ensemble")
        weights = np.array([w for w, _ in self.entries], dtype=float)
        if weights.min() < -1e-15:
            raise ValueError("negative ensemble weight")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("ensemble weights do not sum to 1")
        for _, state in self.entries:
            M = state.correlation()
            if np.abs(M.T @ M - np.eye(M.shape[0])).max() > tol:
                raise ValueError("ensemble entry is not a pure Gaussian state")
        return self

    def sample(self, rng):
        weights = np.array([w for w, _ in self.entries], dtype=float)
        idx = int(rng.choice(len(self.entries), p=weights / weights.sum()))
        return idx, self.entries[idx][1]

    def to_json_dict(self):
        return {
            "m": self.m,
            "entries": [
                {"weight": float(w), "state": s.to_json_dict()}
                for w, s in self.entries
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        entries = [
            (float(e["weight"]), GaussianPureState.from_json_dict(e["state"]))
            for e in data["entries"]
        ]
        return cls(entries=entries).validate()


@dataclass
class FloCircuit:
    """Initial mode count plus an ordered list of steps.

    The register grows at each injection; validation walks the step list and
    checks all indices against the mode count current at that step.
    """

    modes: int
    steps: list = field(default_factory=list)

    def validate(self):
        m = check_modes(self.modes)
        for step in self.steps:
            if isinstance(step, Rotate):
                R = step.array()
                if R.shape != (2 * m, 2 * m):
                    raise ValueError(
                        f"rotation of shape {R.shape} applied at mode count {m}")
                if np.abs(R @ R.T - np.eye(2 * m)).max() > 1e-9:
                    raise ValueError("rotation is not orthogonal")
                if np.linalg.det(R) < 0:
                    raise ValueError("rotation has determinant -1")
            elif isinstance(step, Braid):
                if step.i == step.j:
                    raise ValueError("braid needs two distinct Majorana indices")
                if not (1 <= step.i <= 2 * m and 1 <= step.j <= 2 * m):
                    raise ValueError("braid index out of range")
            elif isinstance(step, MeasureMode):
                if not 1 <= step.mode <= m:
                    raise ValueError(f"measured mode {step.mode} out of range 1..{m}")
            elif isinstance(step, InjectAncilla):
                step.ensemble.validate()
                m = check_modes(m + step.ensemble.m)
            else:
                raise ValueError(f"unknown step {step!r}")
        return self

    def final_modes(self):
        m = self.modes
        for step in self.steps:
            if isinstance(step, InjectAncilla):
                m += step.ensemble.m
        return m

    def measurement_count(self):
        return sum(1 for s in self.steps if isinstance(s, MeasureMode))

    def to_json_dict(self, ensemble_paths=None):
        steps = []
        for idx, step in enumerate(self.steps):
            if isinstance(step, Rotate):
                steps.append({"op": "rotate", "matrix": step.array().tolist()})
            elif isinstance(step, Braid):
                steps.append({"op": "braid", "i": step.i, "j": step.j})
            elif isinstance(step, MeasureMode):
                steps.append({"op": "measure", "mode": step.mode})
            elif isinstance(step, InjectAncilla):
                ref = None if ensemble_paths is None else ensemble_paths.get(idx)
                if ref is not None:
                    steps.append({"op": "inject", "ensemble": ref})
                else:
                    steps.append({"op": "inject",
                                  "ensemble": step.ensemble.to_json_dict()})
        return {"modes": self.modes, "steps": steps}

    @classmethod
    def from_json_dict(cls, data, ensemble_loader=None):
        steps = []
        for entry in data["steps"]:
            op = entry["op"]
            if op == "rotate":
                R = np.asarray(entry["matrix"], dtype=float)
                steps.append(Rotate(matrix=tuple(map(tuple, R.tolist()))))
            elif op == "braid":
                steps.append(Braid(i=int(entry["i"]), j=int(entry["j"])))
            elif op == "measure":
                steps.append(MeasureMode(mode=int(entry["mode"])))
            elif op == "inject":
                ref = entry["ensemble"]
                if isinstance(ref, str):
                    if ensemble_loader is None:
                        ensemble = load_ensemble(ref)
                    else:
                        ensemble = ensemble_loader(ref)
                else:
                    ensemble = GaussianEnsemble.from_json_dict(ref)
                steps.append(InjectAncilla(ensemble=ensemble))
            else:
                raise ValueError(f"unknown circuit op {op!r}")
        return cls(modes=int(data["modes"]), steps=steps).validate()


def load_circuit(path):
    with open(path) as fh:
        return FloCircuit.from_json_dict(json.load(fh))


def dump_circuit(circuit, path):
    with open(path, "w") as fh:
        json.dump(circuit.to_json_dict(), fh, indent=1)


def load_ensemble(path):
    with open(path) as fh:
        return GaussianEnsemble.from_json_dict(json.load(fh))


def dump_ensemble(ensemble, path):
    with open(path, "w") as fh:
        json.dump(ensemble.to_json_dict(), fh, indent=1)


# -- elementary updates ---------------------------------------------------------

def vacuum_correlation(m):
    """Correlation matrix with every canonical lambda equal to +1."""
    return canonical_block_matrix(np.ones(check_modes(m)))


def apply_rotation(M, R, tol=1e-9):
    """M -> R M R^T for R in SO(2m)."""
    M = np.asarray(M, dtype=float)
    R = np.asarray(R, dtype=float)
    if R.shape != M.shape:
        raise ValueError("rotation and correlation matrix sizes differ")
    if np.abs(R @ R.T - np.eye(R.shape[0])).max() > tol:
        raise ValueError("rotation is not orthogonal within tolerance")
    out = R @ M @ R.T
    return 0.5 * (out - out.T)


def braid_rotation(i, j, dim):
    """Braid generator on Majoranas i, j: c_i -> c_j, c_j -> -c_i (1-based).

    Returned as the SO(dim) matrix whose column action realizes the map;
    applying it twice gives the pi rotation c_i -> -c_i, c_j -> -c_j.
    """
    if i == j:
        raise ValueError("braid needs two distinct indices")
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ValueError("braid index out of range")
    R = np.eye(dim)
    a, b = i - 1, j - 1
    R[a, a] = 0.0
    R[b, b] = 0.0
    R[b, a] = 1.0
    R[a, b] = -1.0
    return R


def measure_probability(M, k):
    """p(outcome 0) = (1 + M_{2k-1,2k}) / 2 for number measurement on mode k."""
    a = 2 * (k - 1)
    return 0.5 * (1.0 + float(M[a, a + 1]))


def measure_mode(M, k, rng=None, outcome=None):
    """Number measurement on mode k.

    Returns (probability, posterior M, outcome).  The posterior follows the
    conditioning update

        M' = M - s/(1 + s M_ab) (M_a M_b^T - M_b M_a^T)   off the (a, b) rows,
        M'_ab = s = +-1,

    with a = 2k-1, b = 2k and s = +1 for outcome 0.  Forcing an outcome whose
    probability is below 1e-12 raises.
    """
    M = np.asarray(M, dtype=float)
    m = M.shape[0] // 2
    if not 1 <= k <= m:
        raise ValueError(f"mode {k} out of range 1..{m}")
    p0 = measure_probability(M, k)
    if outcome is None:
        if rng is None:
            raise ValueError("provide either an rng or a forced outcome")
        outcome = 0 if rng.random() < p0 else 1
    outcome = int(outcome)
    prob = p0 if outcome == 0 else 1.0 - p0
    if prob < ZERO_PROB_TOL:
        raise ValueError(f"forced outcome {outcome} has probability {prob:.3e}")
    s = 1.0 if outcome == 0 else -1.0
    a, b = 2 * (k - 1), 2 * k - 1
    row_a = M[a, :].copy()
    row_b = M[b, :].copy()
    out = M - (s / (1.0 + s * M[a, b])) * (np.outer(row_a, row_b) - np.outer(row_b, row_a))
    out[a, :] = 0.0
    out[:, a] = 0.0
    out[b, :] = 0.0
    out[:, b] = 0.0
    out[a, b] = s
    out[b, a] = -s
    out = 0.5 * (out - out.T)
    return prob, out, outcome


def inject_ancilla(M, ensemble, rng):
    """Sample one pure state from the ensemble and direct-sum its correlation
    matrix onto M.  Returns (new M, sampled index)."""
    idx, state = ensemble.sample(rng)
    Ma = state.correlation()
    n, na = M.shape[0], Ma.shape[0]
    out = np.zeros((n + na, n + na))
    out[:n, :n] = M
    out[n:, n:] = Ma
    return out, idx


# -- full runs -----------------------------------------------------------------

@dataclass(eq=False)
class SimulationRecord:
    """Replayable trace of one shot."""

    shot: int
    seed: int
    outcomes: str
    injected: list
    step_hashes: list
    final_correlation: np.ndarray

    def identical_to(self, other):
        return (
            self.shot == other.shot
            and self.seed == other.seed
            and self.outcomes == other.outcomes
            and self.injected == other.injected
            and self.step_hashes == other.step_hashes
            and self.final_correlation.tobytes() == other.final_correlation.tobytes()
        )


def _hash_correlation(M):
    return hashlib.sha256(np.ascontiguousarray(M).tobytes()).hexdigest()[:16]


def _shot_rng(seed, shot):
    return np.random.Generator(np.random.Philox(key=np.random.SeedSequence([seed, shot]).generate_state(2, np.uint64)))


def run_shot(circuit, seed, shot):
    """Simulate a single shot; deterministic in (circuit, seed, shot)."""
    rng = _shot_rng(seed, shot)
    M = vacuum_correlation(circuit.modes)
    outcomes = []
    injected = []
    hashes = []
    for step in circuit.steps:
        if isinstance(step, Rotate):
            M = apply_rotation(M, step.array())
        elif isinstance(step, Braid):
            M = apply_rotation(M, braid_rotation(step.i, step.j, M.shape[0]))
        elif isinstance(step, MeasureMode):
            _, M, outcome = measure_mode(M, step.mode, rng=rng)
            outcomes.append(outcome)
        elif isinstance(step, InjectAncilla):
            M, idx = inject_ancilla(M, step.ensemble, rng)
            injected.append(idx)
        hashes.append(_hash_correlation(M))
    return SimulationRecord(
        shot=shot,
        seed=seed,
        outcomes="".join(map(str, outcomes)),
        injected=injected,
        step_hashes=hashes,
        final_correlation=M,
    )


def run(circuit, shots, seed):
    """Simulate ``shots`` independent shots.

    Returns (histogram, records): histogram maps outcome bitstrings to counts,
    records is the per-shot list.  Shots own independent Philox streams, so
    the result is reproducible and order-independent.
    """
    circuit.validate()
    if shots < 1:
        raise ValueError("need at least one shot")
    seed = int(seed)
    histogram = {}
    records = []
    for shot in range(shots):
        rec = run_shot(circuit, seed, shot)
        histogram[rec.outcomes] = histogram.get(rec.outcomes, 0) + 1
        records.append(rec)
    return histogram, records


def exact_distribution(circuit, prune=ZERO_PROB_TOL):
    """Exact outcome distribution by branching over measurement outcomes and
    ancilla ensemble entries.  Returns a dict bitstring -> probability.

    Branches below ``prune`` are dropped; the default matches the forced-
    outcome threshold of :func:`measure_mode`, and the pruned mass is far
    below any tolerance used on the output."""
    circuit.validate()

    dist = {}

    def walk(step_idx, M, weight, outcomes):
        if weight <= prune:
            return
        if step_idx == len(circuit.steps):
            key = "".join(map(str, outcomes))
            dist[key] = dist.get(key, 0.0) + weight
            return
        step = circuit.steps[step_idx]
        if isinstance(step, Rotate):
            walk(step_idx + 1, apply_rotation(M, step.array()), weight, outcomes)
        elif isinstance(step, Braid):
            R = braid_rotation(step.i, step.j, M.shape[0])
            walk(step_idx + 1, apply_rotation(M, R), weight, outcomes)
        elif isinstance(step, MeasureMode):
            p0 = measure_probability(M, step.mode)
            for outcome, p in ((0, p0), (1, 1.0 - p0)):
                if p <= prune:
                    continue
                _, M2, _ = measure_mode(M, step.mode, outcome=outcome)
                walk(step_idx + 1, M2, weight * p, outcomes + [outcome])
        elif isinstance(step, InjectAncilla):
            n = M.shape[0]
            for w, state in step.ensemble.entries:
                if w <= prune:
                    continue
                Ma = state.correlation()
                M2 = np.zeros((n + Ma.shape[0], n + Ma.shape[0]))
                M2[:n, :n] = M
                M2[n:, n:] = Ma
                walk(step_idx + 1, M2, weight * w, outcomes)

    walk(0, vacuum_correlation(circuit.modes), 1.0, [])
    return dist


def write_histogram_csv(fh, histogram, shots=None):
    """CSV rows ``bitstring,count,probability`` sorted by bitstring."""
    total = shots if shots is not None else sum(histogram.values())
    fh.write("bitstring,count,probability\n")
    for key in sorted(histogram):
        count = histogram[key]
        fh.write(f"{key},{count},{count / total:.17g}\n")
