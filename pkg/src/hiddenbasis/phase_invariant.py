"""Phase-invariant operators: detection, physical lifting, exact preparation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import ATOL, MAX_DENSE_DIM, InvalidStateError, UnitaryMatrix
from .hidden_basis import (
    HiddenBasisSpec,
    LogicalState,
    WeightBlockDensity,
    WeightBlockOperator,
    hamming_weights,
    number_state_index,
    weight_indices,
)


def is_phase_invariant(T, tol: float = ATOL) -> bool:
    """True iff T has no entry above ``tol`` linking different weights."""
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("expected a square matrix")
    n = int(T.shape[0]).bit_length() - 1
    if T.shape[0] != 2**n:
        raise ValueError(f"dimension {T.shape[0]} is not a power of two")
    weights = hamming_weights(n)
    off = weights[:, None] != weights[None, :]
    return not off.any() or bool(np.abs(T[off]).max() <= tol)


# -- lifting to the physical space -------------------------------------------


def _local_indices(base: int, k: int) -> np.ndarray:
    return np.indices((base,) * k, dtype=np.int64).reshape(k, base**k).T


def _sector_indices(spec: HiddenBasisSpec, n: int, w: int) -> np.ndarray:
    """Physical basis indices of the weight-w sector, shape (C(n,w), d0^(n-w) d1^w).

    Row z lists the strings whose S0/S1 pattern is the z-th weight-w label;
    column c fixes the local indices (i_1..i_{n-w}, j_1..j_w). Equal columns
    across rows are related by the permutations pi^w_z.
    """
    d = spec.d
    a_idx = _local_indices(spec.d0, n - w)
    b_idx = _local_indices(spec.d1, w)
    a_all = np.repeat(a_idx, len(b_idx), axis=0)
    b_all = np.tile(b_idx, (len(a_idx), 1)) + spec.d0
    place = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    rows = []
    for y in weight_indices(n, w):
        bits = [(int(y) >> (n - 1 - k)) & 1 for k in range(n)]
        zeros = [k for k in range(n) if bits[k] == 0]
        ones = [k for k in range(n) if bits[k] == 1]
        rows.append(a_all @ place[zeros] + b_all @ place[ones])
    return np.array(rows, dtype=np.int64)


class LiftedUnitary:
    """Physical realization V' of a phase-invariant logical unitary.

    Applies each weight block sector by sector; ``to_matrix`` materializes
    the dense form when d^n is at most ``MAX_DENSE_DIM``.
    """

    def __init__(self, V: WeightBlockOperator, spec: HiddenBasisSpec):
        if not V.is_unitary():
            raise ValueError("every weight block must be unitary")
        self.V = V
        self.spec = spec
        self.n = V.n
        self.dim = spec.d**V.n
        self._sectors = [_sector_indices(spec, V.n, w) for w in range(V.n + 1)]

    def apply(self, vec) -> np.ndarray:
        vec = np.asarray(vec, dtype=complex)
        if vec.shape[0] != self.dim:
            raise ValueError(f"expected physical vector of length {self.dim}")
        out = vec.copy()
        for block, idx in zip(self.V.blocks, self._sectors):
            out[idx] = np.tensordot(block, vec[idx], axes=([1], [0]))
        return out

    def to_matrix(self) -> np.ndarray:
        if self.dim > MAX_DENSE_DIM:
            raise ValueError(f"dense lift capped at dimension {MAX_DENSE_DIM}; use apply()")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for block, idx in zip(self.V.blocks, self._sectors):
            for k in range(idx.shape[0]):
                for z in range(idx.shape[0]):
                    out[idx[k], idx[z]] = block[k, z]
        return out


def lift_unitary(V: WeightBlockOperator, spec: HiddenBasisSpec, dense: bool | None = None):
    """Lift V to the physical space; dense UnitaryMatrix when small enough."""
    lifted = LiftedUnitary(V, spec)
    if dense is None:
        dense = lifted.dim <= MAX_DENSE_DIM
    if dense:
        return UnitaryMatrix(lifted.to_matrix())
    return lifted


# -- exact preparation ---------------------------------------------------------


def symmetric_state(n: int, w: int) -> LogicalState:
    idx = weight_indices(n, w)
    vec = np.zeros(2**n, dtype=complex)
    vec[idx] = 1 / np.sqrt(len(idx))
    return LogicalState(vec, n)


def _prefix_probabilities(probs: np.ndarray, n: int, length: int) -> np.ndarray:
    """p_x for every prefix x of the given length, indexed by int(x)."""
    return probs.reshape(2**length, 2 ** (n - length)).sum(axis=1)


@dataclass
class PrepStep:
    """One controlled rotation layer U_j.

    ``amplitudes`` maps a prefix string x (length j-1) to
    (sqrt p_{0|x}, sqrt p_{1|x}); prefixes in ``unreachable`` had p_x = 0.
    """

    j: int
    amplitudes: dict[str, tuple[float, float]]
    unreachable: set[str] = field(default_factory=set)


@dataclass
class PrepCircuit:
    n: int
    w: int
    steps: list[PrepStep]
    phases: np.ndarray  # over weight_indices(n, w)

    @property
    def copies(self) -> tuple[int, int]:
        """Copies of (|0>, |1>) consumed by the initial product state."""
        return (self.n - self.w, self.w)

    def initial_state(self) -> np.ndarray:
        vec = np.zeros(2**self.n, dtype=complex)
        vec[number_state_index(self.n, self.w)] = 1.0
        return vec

    def _rotation_pairs(self, step: PrepStep):
        n, w = self.n, self.w
        free = n - step.j + 1
        for x, (s0, s1) in step.amplitudes.items():
            d = w - x.count("1")
            if not 0 < d < free:
                continue
            stay = x + "0" * (free - d) + "1" * d
            move = x + "1" + "0" * (free - d) + "1" * (d - 1)
            yield int(stay, 2), int(move, 2), s0, s1

    def apply(self, vec, inverse: bool = False) -> np.ndarray:
        """Apply the circuit (or its inverse) to a logical state vector.

        Each layer rotates |x 0 d> into sqrt(p0)|x 0 d> + sqrt(p1)|x 1 (d-1)>;
        only weight-w labels are touched, so circuits for different weights
        commute.
        """
        out = np.array(vec, dtype=complex)
        idx = weight_indices(self.n, self.w)
        steps = reversed(self.steps) if inverse else self.steps
        if inverse:
            out[idx] *= self.phases.conj()
        for step in steps:
            for a, b, s0, s1 in self._rotation_pairs(step):
                va, vb = out[a], out[b]
                if inverse:
                    out[a], out[b] = s0 * va + s1 * vb, -s1 * va + s0 * vb
                else:
                    out[a], out[b] = s0 * va - s1 * vb, s1 * va + s0 * vb
        if not inverse:
            out[idx] *= self.phases
        return out

    def simulate(self) -> LogicalState:
        return LogicalState(self.apply(self.initial_state()), self.n)

    def unitary(self) -> np.ndarray:
        return np.stack([self.apply(col) for col in np.eye(2**self.n)], axis=1)

    def conditional(self, x: str, bit: int) -> float:
        step = self.steps[len(x)]
        return step.amplitudes[x][bit] ** 2

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "w": self.w,
            "copies": {"zero": self.copies[0], "one": self.copies[1]},
            "steps": [
                {
                    "j": s.j,
                    "p": {x: [a**2, b**2] for x, (a, b) in sorted(s.amplitudes.items())},
                    "unreachable": sorted(s.unreachable),
                }
                for s in self.steps
            ],
            "phases": [float(np.angle(p)) for p in self.phases],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def prepare_weight_state(eta, n: int, w: int) -> PrepCircuit:
    """Circuit taking |0>^(n-w)|1>^w to the weight-w state ``eta``.

    ``eta`` is given over ``weight_indices(n, w)`` (length C(n, w)) or as a
    full 2^n logical vector supported on weight w.
    """
    if not 0 <= w <= n:
        raise ValueError(f"weight w={w} out of range for n={n}")
    idx = weight_indices(n, w)
    eta = np.asarray(eta, dtype=complex)
    if eta.size == 2**n and eta.size != idx.size:
        if np.abs(np.delete(eta, idx)).max(initial=0.0) > ATOL:
            raise ValueError("target has support outside the weight-w subspace")
        eta = eta[idx]
    if eta.shape != (comb(n, w),):
        raise ValueError(f"expected {comb(n, w)} amplitudes for n={n}, w={w}")
    norm = np.linalg.norm(eta)
    if norm < ATOL:
        raise ValueError("target state has zero norm")
    if abs(norm - 1.0) > ATOL:
        raise InvalidStateError(f"target norm is {norm!r}, expected 1")

    phases = np.where(np.abs(eta) > 0, np.exp(1j * np.angle(eta)), 1.0)
    if w in (0, n):
        return PrepCircuit(n, w, [], phases)

    probs = np.zeros(2**n)
    probs[idx] = np.abs(eta) ** 2
    steps = []
    for j in range(1, n + 1):
        parent = _prefix_probabilities(probs, n, j - 1)
        child = _prefix_probabilities(probs, n, j)
        amplitudes, unreachable = {}, set()
        free = n - j + 1
        for xi in range(2 ** (j - 1)):
            x = format(xi, f"0{j - 1}b") if j > 1 else ""
            d = w - x.count("1")
            if not 0 <= d <= free:
                continue
            px = parent[xi]
            if px <= 0.0:
                unreachable.add(x)
                amplitudes[x] = (1.0, 0.0)
                continue
            p1 = min(1.0, max(0.0, child[2 * xi + 1] / px))
            amplitudes[x] = (float(np.sqrt(1.0 - p1)), float(np.sqrt(p1)))
        steps.append(PrepStep(j, amplitudes, unreachable))
    return PrepCircuit(n, w, steps, phases)


@dataclass
class PreparedSample:
    state: LogicalState
    w: int
    circuit: PrepCircuit

    @property
    def copies(self) -> tuple[int, int]:
        return self.circuit.copies


def phase_invariant_ensemble(rho: WeightBlockDensity, tol: float = 1e-14):
    """Pure-state decomposition of rho: list of (probability, w, circuit)."""
    out = []
    for w, block in enumerate(rho.blocks):
        vals, vecs = np.linalg.eigh(block)
        for lam, vec in zip(vals, vecs.T):
            if lam > tol:
                out.append((float(lam), w, prepare_weight_state(vec, rho.n, w)))
    return out


def prepare_phase_invariant_density(rho, rng: np.random.Generator) -> PreparedSample:
    """Sample one pure phase-invariant state from rho and build its circuit."""
    if not isinstance(rho, WeightBlockDensity):
        rho = WeightBlockDensity(rho.n, rho.blocks) if isinstance(rho, WeightBlockOperator) else WeightBlockDensity.from_matrix(rho)
    ensemble = phase_invariant_ensemble(rho)
    probs = np.array([p for p, _, _ in ensemble])
    pick = rng.choice(len(ensemble), p=probs / probs.sum())
    _, w, circuit = ensemble[pick]
    return PreparedSample(circuit.simulate(), w, circuit)


def ensemble_density(rho: WeightBlockDensity) -> np.ndarray:
    """Density matrix realized exactly by the preparation ensemble."""
    out = np.zeros((2**rho.n, 2**rho.n), dtype=complex)
    for p, _, circuit in phase_invariant_ensemble(rho):
        vec = circuit.apply(circuit.initial_state())
        out += p * np.outer(vec, vec.conj())
    return out


def binomial_mixture(n: int) -> WeightBlockDensity:
    """Uniform-phase average of ((|0> + e^{i theta}|1>)/sqrt 2)^n."""
    blocks = []
    for w in range(n + 1):
        size = comb(n, w)
        blocks.append(np.full((size, size), 1.0 / 2**n))
    return WeightBlockDensity(n, blocks)


def dephase(rho) -> np.ndarray:
    """Block-diagonal part of a logical density matrix (uniform theta average)."""
    rho = np.asarray(rho, dtype=complex)
    n = int(rho.shape[0]).bit_length() - 1
    weights = hamming_weights(n)
    return np.where(weights[:, None] == weights[None, :], rho, 0.0)
