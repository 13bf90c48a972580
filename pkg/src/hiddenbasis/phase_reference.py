"""Approximate phase-shifted Hadamard gates driven by a bounded phase reference.

The reference register never leaves the span of the 1-number states
|w^(t)> = |0>^(t-w)|1>^w, so it is stored as t+1 amplitudes instead of a
2^t vector. A joint system/reference state is a (2^m, t+1) array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import ATOL, fidelity
from .hidden_basis import WeightBlockOperator, weight_indices

DEFAULT_ALPHA = 1 / np.sqrt(2)

S_GATE = np.diag([1, 1j])
T_GATE = np.diag([1, np.exp(1j * np.pi / 4)])
Z_GATE = np.diag([1, -1]).astype(complex)
CZ_GATE = np.diag([1, 1, 1, -1]).astype(complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class ReferenceExhausted(ValueError):
    """The reference is too small for the requested number of gate uses."""


def g_theta(theta: float, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    s = np.sqrt(1 - alpha**2)
    return np.array(
        [[alpha, 1j * s * np.exp(-1j * theta)], [1j * s * np.exp(1j * theta), alpha]],
        dtype=complex,
    )


def h_theta(theta: float, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    s = np.sqrt(1 - alpha**2)
    return np.array(
        [[alpha, s * np.exp(-1j * theta)], [s * np.exp(1j * theta), -alpha]],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class ReferenceState:
    t: int
    c: np.ndarray
    uses: int = 0
    theta: float | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        if c.shape != (self.t + 1,):
            raise ValueError(f"expected {self.t + 1} number-state amplitudes")
        if abs(np.linalg.norm(c) - 1.0) > ATOL:
            raise ValueError("reference amplitudes are not normalized")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_profile(cls, moduli, theta: float = 0.0) -> "ReferenceState":
        """Reference with arbitrary moduli and phases e^{i w theta}."""
        moduli = np.asarray(moduli, dtype=float)
        t = moduli.size - 1
        c = moduli * np.exp(1j * theta * np.arange(t + 1))
        return cls(t, c / np.linalg.norm(c), theta=theta)

    @classmethod
    def number_state(cls, t: int, w: int) -> "ReferenceState":
        c = np.zeros(t + 1, dtype=complex)
        c[w] = 1.0
        return cls(t, c)

    @property
    def copies(self) -> tuple[int, int]:
        """Copies of (|0>, |1>) needed to build the reference: t of each."""
        return (self.t, self.t)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "uses": self.uses,
            "theta": self.theta,
            "c": [[float(z.real), float(z.imag)] for z in self.c],
        }


def make_reference(theta: float, t: int, start: int = 1) -> ReferenceState:
    """Normalized constant-modulus reference sum_{w=start}^t e^{iw theta}|w^(t)>.

    ``start=0`` gives the variant whose sum begins at w = 0.
    """
    if t < 3:
        raise ValueError("reference size t must be at least 3")
    if start not in (0, 1):
        raise ValueError("start must be 0 or 1")
    moduli = np.zeros(t + 1)
    moduli[start:] = 1.0
    return ReferenceState.from_profile(moduli, theta)


def trimmed_reference(theta: float, t: int, used: int) -> np.ndarray:
    """Amplitudes of the ideal reference after ``used`` gate applications."""
    lo, hi = 1 + used, t - used
    if hi < lo:
        raise ReferenceExhausted(f"reference of size {t} cannot support {used} uses")
    c = np.zeros(t + 1, dtype=complex)
    w = np.arange(lo, hi + 1)
    c[w] = np.exp(1j * theta * w) / np.sqrt(hi - lo + 1)
    return c


def random_theta_reference(t: int, rng: np.random.Generator) -> ReferenceState:
    """Uniformly random 1-number state |w^(t)>, w in 1..t."""
    if t < 3:
        raise ValueError("reference size t must be at least 3")
    return ReferenceState.number_state(t, int(rng.integers(1, t + 1)))


def dephased_reference_density(t: int, start: int = 1) -> np.ndarray:
    diag = np.zeros(t + 1)
    diag[start:] = 1.0 / (t + 1 - start)
    return np.diag(diag).astype(complex)


class JointState:
    """Logical system qubits (m of them) together with a reference register."""

    def __init__(self, amplitudes, uses: int = 0):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.ndim != 2:
            raise ValueError("joint amplitudes must have shape (2^m, t+1)")
        m = int(amps.shape[0]).bit_length() - 1
        if amps.shape[0] != 2**m:
            raise ValueError("system dimension must be a power of two")
        self.amplitudes = amps
        self.m = m
        self.t = amps.shape[1] - 1
        self.uses = uses

    @classmethod
    def product(cls, system, reference: ReferenceState) -> "JointState":
        return cls(np.outer(np.asarray(system, dtype=complex), reference.c), reference.uses)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def system_density(self) -> np.ndarray:
        a = self.amplitudes
        return a @ a.conj().T

    def reference_density(self) -> np.ndarray:
        a = self.amplitudes
        return a.T @ a.conj()

    def number_support(self, tol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(np.linalg.norm(self.amplitudes, axis=0) > tol)

    def copy(self) -> "JointState":
        return JointState(self.amplitudes.copy(), self.uses)


def _split(amps: np.ndarray, m: int, qubit: int) -> np.ndarray:
    return amps.reshape(2**qubit, 2, 2 ** (m - qubit - 1), amps.shape[-1])


def apply_logical(joint: JointState, gate, qubits) -> JointState:
    """Apply a system-only gate; the reference is untouched."""
    qubits = [qubits] if np.isscalar(qubits) else list(qubits)
    gate = np.asarray(gate, dtype=complex)
    k = len(qubits)
    if gate.shape != (2**k, 2**k):
        raise ValueError("gate size does not match the number of target qubits")
    m, t = joint.m, joint.t
    if k == 1 and gate[0, 1] == 0 and gate[1, 0] == 0:
        out = _split(joint.amplitudes, m, qubits[0]) * gate.diagonal()[None, :, None, None]
        return JointState(out.reshape(joint.amplitudes.shape), joint.uses)
    tens = joint.amplitudes.reshape((2,) * m + (t + 1,))
    g = gate.reshape((2,) * (2 * k))
    tens = np.tensordot(g, tens, axes=(list(range(k, 2 * k)), qubits))
    tens = np.moveaxis(tens, list(range(k)), qubits)
    return JointState(tens.reshape(2**m, t + 1), joint.uses)


def _pair_rotate(joint: JointState, qubit: int, m00, m01, m10, m11, edge0, edge1) -> JointState:
    """Rotate each pair (0, a), (1, a-1) of the target qubit by [[m00, m01], [m10, m11]].

    (0, 0) is scaled by ``edge0`` and (1, t) by ``edge1``.
    """
    if not 0 <= qubit < joint.m:
        raise ValueError(f"qubit {qubit} out of range for m={joint.m}")
    src = _split(joint.amplitudes, joint.m, qubit)
    out = np.empty_like(src)
    a0 = src[:, 0, :, 1:]
    a1 = src[:, 1, :, :-1]
    np.multiply(a0, m00, out=out[:, 0, :, 1:])
    out[:, 0, :, 1:] += m01 * a1
    np.multiply(a1, m11, out=out[:, 1, :, :-1])
    out[:, 1, :, :-1] += m10 * a0
    out[:, 0, :, 0] = edge0 * src[:, 0, :, 0]
    out[:, 1, :, -1] = edge1 * src[:, 1, :, -1]
    return JointState(out.reshape(joint.amplitudes.shape), joint.uses + 1)


def apply_G(joint: JointState, qubit: int, alpha: float = DEFAULT_ALPHA) -> JointState:
    """Controlled-root-SWAP-like interaction between a system qubit and the reference.

    Pairs (0, a) with (1, a-1) for a = 1..t and rotates each pair by
    [[alpha, i s], [i s, alpha]], s = sqrt(1 - alpha^2). The states
    (0, 0) and (1, t) are left alone.
    """
    s = np.sqrt(1 - alpha**2)
    return _pair_rotate(joint, qubit, alpha, 1j * s, 1j * s, alpha, 1.0, 1.0)


def apply_H_theta(joint: JointState, qubit: int, alpha: float = DEFAULT_ALPHA) -> JointState:
    """Approximate H_theta(alpha) as Z S G S Z with the reference-driven G.

    Z S = S Z = diag(1, -i), so the conjugated interaction is the real
    rotation [[alpha, s], [s, -alpha]] on each pair, with (1, t) flipped
    in sign; it is applied in one pass.
    """
    s = np.sqrt(1 - alpha**2)
    return _pair_rotate(joint, qubit, alpha, s, s, -alpha, 1.0, -1.0)


_FIXED_GATES = {"S": S_GATE, "T": T_GATE, "Z": Z_GATE, "cZ": CZ_GATE}


@dataclass(frozen=True)
class GateSpec:
    kind: str
    qubits: tuple[int, ...]
    alpha: float = DEFAULT_ALPHA
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        qubits = (self.qubits,) if isinstance(self.qubits, (int, np.integer)) else tuple(self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if self.kind == "H":
            if len(qubits) != 1 or not 0 <= self.alpha <= 1:
                raise ValueError("H gates take one qubit and alpha in [0, 1]")
        elif self.kind in _FIXED_GATES:
            expected = 2 if self.kind == "cZ" else 1
            if len(qubits) != expected:
                raise ValueError(f"{self.kind} acts on {expected} qubit(s)")
        elif self.kind == "custom":
            from .phase_invariant import is_phase_invariant

            if self.matrix is None or not is_phase_invariant(self.matrix):
                raise ValueError("custom gates must be phase invariant")
            if np.asarray(self.matrix).shape[0] != 2 ** len(qubits):
                raise ValueError("custom gate size does not match its qubits")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def logical_matrix(self) -> np.ndarray:
        if self.kind == "H":
            raise ValueError("H gates have no phase-invariant matrix")
        if self.kind == "custom":
            return np.asarray(self.matrix, dtype=complex)
        return _FIXED_GATES[self.kind]

    def ideal_matrix(self, theta: float) -> np.ndarray:
        if self.kind == "H":
            return h_theta(theta, self.alpha)
        return self.logical_matrix()


def H(qubit: int, alpha: float = DEFAULT_ALPHA) -> GateSpec:
    return GateSpec("H", (qubit,), alpha)


def _embed_gate(gate: np.ndarray, qubits, m: int) -> np.ndarray:
    """Dense 2^m operator for a gate on the listed qubits (qubit 0 = MSB)."""
    dummy = JointState(np.eye(2**m, dtype=complex).reshape(2**m, 2**m))
    # treat the identity columns as a "reference" index of size 2^m
    return apply_logical(dummy, gate, qubits).amplitudes


def ideal_circuit_unitary(gates, m: int, theta: float) -> np.ndarray:
    """U(theta) W U(theta)^dagger for the circuit, i.e. H replaced by H_theta."""
    out = np.eye(2**m, dtype=complex)
    for g in gates:
        out = _embed_gate(g.ideal_matrix(theta), g.qubits, m) @ out
    return out


@dataclass
class CircuitReport:
    t: int
    l: int
    theta: float
    per_gate_overlap: list[float]
    final_fidelity: float
    joint: JointState | None = None
    states: list[JointState] = field(default_factory=list, repr=False)

    @property
    def bound(self) -> float:
        return float(np.sqrt(max(0.0, 1 - 2 * self.l / self.t)))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "l": self.l,
            "theta": self.theta,
            "per_gate_overlap": list(self.per_gate_overlap),
            "final_fidelity": self.final_fidelity,
            "bound_sqrt_1_minus_2l_over_t": self.bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _pure_inputs(rho0):
    arr = np.asarray(rho0, dtype=complex)
    if arr.ndim == 1:
        return [(1.0, arr)]
    vals, vecs = np.linalg.eigh(arr)
    return [(float(p), v) for p, v in zip(vals, vecs.T) if p > 1e-14]


def run_circuit(rho0, gates, reference: ReferenceState, theta: float | None = None) -> CircuitReport:
    """Run the gate list against one shared reference and score the result.

    ``rho0`` is a logical state vector or density matrix. The fidelity is
    the root fidelity between the system marginal and the ideal output in
    the phase-shifted basis. ``per_gate_overlap`` lists, for each H gate,
    the factor by which it shrinks the overlap with the ideal branch
    (ideal system state tensor the trimmed constant-modulus reference);
    it is only reported for constant-modulus references.
    """
    gates = list(gates)
    if theta is None:
        theta = 0.0 if reference.theta is None else reference.theta
    l = sum(1 for g in gates if g.kind == "H")
    t = reference.t
    if 2 * (reference.uses + l) >= t:
        raise ReferenceExhausted(f"reference of size {t} cannot support {reference.uses + l} H gates (need t > 2l)")

    inputs = _pure_inputs(rho0)
    m = int(inputs[0][1].size).bit_length() - 1
    ideal_u = ideal_circuit_unitary(gates, m, theta)
    track = _constant_modulus(reference)
    phases = np.exp(1j * theta * np.arange(t + 1)) if track else None

    rho_out = np.zeros((2**m, 2**m), dtype=complex)
    ideal_out = np.zeros_like(rho_out)
    per_gate: list[float] = []
    final_joint = None
    for weight, psi in inputs:
        joint = JointState.product(psi, reference)
        ideal_sys = psi.copy()
        used = reference.uses
        branch = _branch_overlap(joint, ideal_sys, phases, used) if track else None
        overlaps = []
        for g in gates:
            if g.kind == "H":
                joint = apply_H_theta(joint, g.qubits[0], g.alpha)
            else:
                joint = apply_logical(joint, g.logical_matrix(), g.qubits)
            ideal_sys = _embed_gate(g.ideal_matrix(theta), g.qubits, m) @ ideal_sys
            if g.kind == "H" and track:
                used += 1
                new_branch = _branch_overlap(joint, ideal_sys, phases, used)
                overlaps.append(abs(new_branch) / abs(branch))
                branch = new_branch
        if not per_gate:
            per_gate = overlaps
        rho_out += weight * joint.system_density()
        target = ideal_u @ psi
        ideal_out += weight * np.outer(target, target.conj())
        final_joint = joint

    if len(inputs) == 1:
        target = ideal_u @ inputs[0][1]
        fid = fidelity(target, rho_out)
    else:
        fid = fidelity(rho_out, ideal_out)
    return CircuitReport(t, l, float(theta), per_gate, fid, final_joint)


def _constant_modulus(reference: ReferenceState) -> bool:
    if reference.theta is None or reference.uses:
        return False
    mags = np.abs(reference.c)
    support = mags[mags > 1e-14]
    return bool(np.allclose(support, support[0], atol=ATOL)) and mags[0] < 1e-14


def _branch_overlap(joint: JointState, ideal_sys, phases, used) -> complex:
    """Overlap with ideal_sys tensor the reference trimmed by ``used`` uses."""
    t = joint.t
    lo, hi = 1 + used, t - used
    row = ideal_sys.conj() @ joint.amplitudes[:, lo : hi + 1]
    return complex(np.dot(phases[lo : hi + 1].conj(), row) / np.sqrt(hi - lo + 1))


def step_overlap(phi, t: int, used: int, theta: float = 0.0, alpha: float = DEFAULT_ALPHA) -> complex:
    """<G phi, Psi(used+1) | U | phi, Psi(used)> for a fresh trimmed reference."""
    phi = np.asarray(phi, dtype=complex)
    ref = trimmed_reference(theta, t, used)
    joint = JointState(np.outer(phi, ref))
    out = apply_G(joint, 0, alpha)
    ideal = np.outer(g_theta(theta, alpha) @ phi, trimmed_reference(theta, t, used + 1))
    return complex(np.vdot(ideal.ravel(), out.amplitudes.ravel()))


def measure_phase_invariant_observable(state, M: WeightBlockOperator, decimals: int = 9) -> dict[float, float]:
    """Outcome distribution of a phase-invariant observable.

    Each block M_w = V_w diag(lambda) V_w^dagger; the state is rotated by
    the direct sum of the V_w^dagger and measured in the hidden
    computational basis. Returns {eigenvalue: probability}, merging
    eigenvalues equal to ``decimals`` places.
    """
    if not M.is_hermitian():
        raise ValueError("observable blocks must be Hermitian")
    if isinstance(state, JointState):
        rho = state.system_density()
    else:
        arr = np.asarray(state, dtype=complex)
        rho = np.outer(arr, arr.conj()) if arr.ndim == 1 else arr
    n = M.n
    if rho.shape != (2**n, 2**n):
        raise ValueError("state and observable act on different numbers of qubits")
    rotation_blocks, eigenvalues = [], np.zeros(2**n)
    for w, block in enumerate(M.blocks):
        vals, vecs = np.linalg.eigh(block)
        rotation_blocks.append(vecs.conj().T)
        eigenvalues[weight_indices(n, w)] = vals
    rotation = WeightBlockOperator(n, rotation_blocks).to_matrix()
    rotated = rotation @ rho @ rotation.conj().T
    probs = np.clip(np.diagonal(rotated).real, 0.0, None)
    dist: dict[float, float] = {}
    for lam, p in zip(np.round(eigenvalues, decimals), probs):
        key = float(lam) + 0.0
        dist[key] = dist.get(key, 0.0) + float(p)
    return dict(sorted(dist.items()))


def weight_projector(n: int, w: int) -> WeightBlockOperator:
    blocks = [np.eye(len(weight_indices(n, k))) * (k == w) for k in range(n + 1)]
    return WeightBlockOperator(n, blocks)


def logical_z_observable(n: int, qubit: int) -> WeightBlockOperator:
    signs = 1 - 2 * ((np.arange(2**n) >> (n - 1 - qubit)) & 1)
    return WeightBlockOperator.diagonal(n, signs)

