"""Quantum-public-key identification: honest kernel, black-box attack, forgery.

Everything runs in the logical frame: |0> is the known reference state
and |psi> (the secret fingerprint) plays the role of the logical |1>.
Alice knows psi and applies exact logical gates; Eve may only use
phase-invariant operations plus the states she holds.

Kernel registers: logical qubit 0 is the register Bob sends to the
prover, qubit 1 is the one he keeps. The prover's reference (if any) is
the number-state register of a :class:`JointState`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, log

import numpy as np

from .core import ATOL, as_density, random_state, reduced_density
from .hidden_basis import WeightBlockDensity, number_state_index
from .phase_invariant import dephase, ensemble_density, prepare_weight_state, symmetric_state
from .phase_reference import (
    HADAMARD,
    Z_GATE,
    JointState,
    ReferenceState,
    apply_H_theta,
    apply_logical,
    h_theta,
)

PROVERS = ("honest", "eve")


def swap_test(rho, sigma) -> float:
    """Pass probability (1 + tr(rho sigma)) / 2."""
    r, s = as_density(rho), as_density(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape[0]} vs {s.shape[0]}")
    return float((1 + np.trace(r @ s).real) / 2)


# -- fingerprint families ---------------------------------------------------


@dataclass
class FingerprintFamily:
    states: list[np.ndarray]
    delta: float
    zero_state: np.ndarray
    orthogonal_to_zero: bool = True

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")
        self.states = [np.asarray(s, dtype=complex) for s in self.states]
        self.zero_state = np.asarray(self.zero_state, dtype=complex)
        for s in self.states:
            if abs(np.linalg.norm(s) - 1) > ATOL:
                raise ValueError("fingerprint states must be normalized")
        if self.max_overlap() > self.delta + ATOL:
            raise ValueError("pairwise overlap exceeds delta")
        if self.orthogonal_to_zero and self.states and self.zero_overlap() > ATOL:
            raise ValueError("family is flagged orthogonal to |0> but is not")

    @property
    def M(self) -> int:
        return self.zero_state.size

    def gram(self) -> np.ndarray:
        mat = np.array(self.states)
        return mat.conj() @ mat.T

    def max_overlap(self) -> float:
        if len(self.states) < 2:
            return 0.0
        g = np.abs(self.gram())
        np.fill_diagonal(g, 0.0)
        return float(g.max())

    def zero_overlap(self) -> float:
        return float(max(abs(np.vdot(self.zero_state, s)) for s in self.states))


def orthonormal_family(k: int, M: int) -> FingerprintFamily:
    """Basis vectors e_1..e_k (delta = 0) with |0> = e_0."""
    if k >= M:
        raise ValueError("need k < M so that |0> stays outside the family")
    eye = np.eye(M, dtype=complex)
    return FingerprintFamily([eye[i] for i in range(1, k + 1)], 0.0, eye[0])


def random_family(
    k: int, M: int, delta: float, rng: np.random.Generator, orthogonal_to_zero: bool = True, max_tries: int = 10_000
) -> FingerprintFamily:
    """Haar-random states accepted one at a time while overlaps stay <= delta."""
    zero = np.zeros(M, dtype=complex)
    zero[0] = 1.0
    states: list[np.ndarray] = []
    for _ in range(max_tries):
        if len(states) == k:
            break
        cand = random_state(M, rng)
        if orthogonal_to_zero:
            cand[0] = 0.0
            cand /= np.linalg.norm(cand)
        if all(abs(np.vdot(s, cand)) <= delta for s in states):
            states.append(cand)
    if len(states) < k:
        raise RuntimeError(f"could not draw {k} states with overlap <= {delta} in C^{M}")
    return FingerprintFamily(states, delta, zero, orthogonal_to_zero)


# -- identification kernel ------------------------------------------------------


def public_key_state(theta: float = 0.0) -> np.ndarray:
    """(|0> + e^{i theta}|psi>)/sqrt 2 in the logical frame."""
    return np.array([1, np.exp(1j * theta)], dtype=complex) / np.sqrt(2)


def bob_symmetric_state() -> np.ndarray:
    """|S^2_1> prepared with the exact weight-state circuit."""
    circuit = prepare_weight_state(symmetric_state(2, 1).amplitudes, 2, 1)
    return circuit.simulate().amplitudes


@dataclass
class KernelResult:
    pass_probability: float
    outcome_probabilities: tuple[float, float]


def _finish_kernel(joint: JointState, key: np.ndarray) -> KernelResult:
    """Measure the prover's register, let Bob correct and SWAP-test.

    Returns the exact pass probability summed over both reported bits.
    """
    amps = joint.amplitudes.reshape(2, 2, joint.t + 1)
    total, probs = 0.0, []
    for bit in (0, 1):
        kept = amps[bit]
        if bit:
            kept = Z_GATE @ kept
        p = float(np.vdot(kept, kept).real)
        rho_unnorm = kept @ kept.conj().T
        total += (p + np.vdot(key, rho_unnorm @ key).real) / 2
        probs.append(p)
    return KernelResult(float(total), (probs[0], probs[1]))


def kernel_honest(theta: float = 0.0) -> KernelResult:
    """One kernel with honest Alice, in a frame rotated by ``theta``.

    Alice's exact logical Hadamard in that frame is H_theta.
    """
    joint = JointState(bob_symmetric_state().reshape(4, 1))
    joint = apply_logical(joint, h_theta(theta), 0)
    return _finish_kernel(joint, public_key_state(theta))


def symmetric_state_decomposition() -> tuple[np.ndarray, np.ndarray]:
    """Both sides of |S^2_1> = (H|0>)(|0>+|psi>) - (H|psi>) Z (|0>+|psi>), normalized."""
    zero, one = np.eye(2, dtype=complex)
    plus = zero + one
    hinv = np.linalg.inv(HADAMARD)
    zinv = np.linalg.inv(Z_GATE)
    rhs = np.kron(hinv @ zero, plus) - np.kron(hinv @ one, zinv @ plus)
    return bob_symmetric_state(), rhs / np.linalg.norm(rhs)


def eve_reference(r_prime: int, theta: float = 0.0) -> ReferenceState:
    """Binomial reference obtained from r' copies of |0> + |psi>."""
    if r_prime < 1:
        raise ValueError("Eve needs at least one copy")
    denom = 2**r_prime
    moduli = np.sqrt([comb(r_prime, w) / denom for w in range(r_prime + 1)])
    return ReferenceState.from_profile(moduli, theta)


def eve_reference_from_copies(r_prime: int, theta: float = 0.0) -> tuple[ReferenceState, float]:
    """Build Eve's reference by running the inverse preparation circuits.

    Starts from the dense 2^r' product state and maps each |S^r'_w> to
    |w^(r')>. Returns the reference and the norm left outside the
    number states (zero for an exact inverse).
    """
    if r_prime > 14:
        raise ValueError("dense construction limited to r' <= 14")
    vec = np.ones(1, dtype=complex)
    for _ in range(r_prime):
        vec = np.kron(vec, public_key_state(theta))
    for w in range(r_prime + 1):
        circuit = prepare_weight_state(symmetric_state(r_prime, w).amplitudes, r_prime, w)
        vec = circuit.apply(vec, inverse=True)
    idx = [number_state_index(r_prime, w) for w in range(r_prime + 1)]
    c = vec[idx]
    leftover = float(np.linalg.norm(np.delete(vec, idx)))
    return ReferenceState(r_prime, c / np.linalg.norm(c), theta=theta), leftover


def kernel_eve(r_prime: int, theta: float = 0.0) -> KernelResult:
    """One kernel with Eve as prover, using her r'-copy binomial reference.

    Eve replaces Alice's Hadamard by the reference-driven approximation
    and reports her {|0>, |psi>} measurement outcome. ``theta`` rotates
    the whole frame (her reference and Bob's key copy together).
    """
    if r_prime < 3:
        raise ValueError("Eve's reference must have r' >= 3")
    reference = eve_reference(r_prime, theta)
    joint = JointState.product(bob_symmetric_state(), reference)
    joint = apply_H_theta(joint, 0)
    return _finish_kernel(joint, public_key_state(theta))


def kernel_eve_quadrature(r_prime: int, points: int = 64) -> float:
    """Eve's pass probability averaged over a uniform theta grid."""
    thetas = 2 * np.pi * np.arange(points) / points
    return float(np.mean([kernel_eve(r_prime, th).pass_probability for th in thetas]))


def attack_curve(r_primes) -> list[tuple[int, float]]:
    return [(int(r), kernel_eve(int(r)).pass_probability) for r in r_primes]


def failure_slope(curve) -> float:
    """Least-squares log-log slope of 1 - pass against r'."""
    r = np.array([c[0] for c in curve], dtype=float)
    fail = np.array([1 - c[1] for c in curve])
    return float(np.polyfit(np.log(r), np.log(fail), 1)[0])


# -- sessions -------------------------------------------------------------------


class ReusabilityExceeded(RuntimeError):
    """Alice was asked to engage more times than there are public-key copies."""


@dataclass
class AliceKey:
    """Bookkeeping for one private key with r public-key copies in circulation."""

    r: int
    engagements: int = 0

    def engage(self):
        if self.engagements >= self.r:
            raise ReusabilityExceeded(f"Alice already engaged {self.engagements} times (r={self.r})")
        self.engagements += 1


@dataclass
class SessionReport:
    r: int
    s: int
    prover: str
    kernel_pass_probs: list[float] = field(repr=False)
    accept_prob: float

    @property
    def kernel_pass_prob(self) -> float:
        return self.kernel_pass_probs[0] if self.kernel_pass_probs else 1.0

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "prover": self.prover,
            "kernel_pass_prob": self.kernel_pass_prob,
            "accept_prob": self.accept_prob,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def run_session(r: int, s: int, prover: str = "honest", alice: AliceKey | None = None) -> SessionReport:
    """s independent kernels; Bob accepts iff every SWAP-test passes.

    Eve holds r' = r - 1 copies of the public key.
    """
    if prover not in PROVERS:
        raise ValueError(f"prover must be one of {PROVERS}")
    if r < 1 or s < 1:
        raise ValueError("r and s must be positive")
    if prover == "honest":
        if alice is not None:
            alice.engage()
        per_kernel = kernel_honest().pass_probability
    else:
        per_kernel = kernel_eve(r - 1).pass_probability
    probs = [per_kernel] * s
    return SessionReport(r, s, prover, probs, float(np.prod(probs)))


def min_security_parameter(r: int, epsilon: float) -> dict:
    """Smallest s with pass(r-1)^s <= epsilon, next to the r log(r/epsilon) shape."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    p = kernel_eve(r - 1).pass_probability
    s = int(np.ceil(log(epsilon) / log(p)))
    while p**s > epsilon:
        s += 1
    return {"r": r, "epsilon": epsilon, "kernel_pass_prob": p, "s": s, "r_log_r_over_eps": r * log(r / epsilon)}


# -- signature forgery ------------------------------------------------------------


def product_signature(n: int) -> np.ndarray:
    """((|0> + |psi>)(<0| + <psi|)/2)^{tensor n} as a logical density matrix."""
    vec = np.ones(1, dtype=complex)
    for _ in range(n):
        vec = np.kron(vec, public_key_state())
    return np.outer(vec, vec.conj())


def invariant_verifiers(n: int) -> dict[str, callable]:
    """SWAP-test verifiers that only use copies of |psi> (and the public |0>)."""
    zero, one = np.eye(2, dtype=complex)
    all_one = np.zeros(2**n, dtype=complex)
    all_one[-1] = 1.0
    out = {}
    for k in range(n):
        out[f"swap_psi_register_{k}"] = lambda rho, k=k: swap_test(reduced_density(rho, [k], n), one)
        out[f"swap_zero_register_{k}"] = lambda rho, k=k: swap_test(reduced_density(rho, [k], n), zero)
    out["swap_psi_all"] = lambda rho: swap_test(rho, all_one)
    return out


def phase_sensitive_verifier(n: int):
    """SWAP-test of register 0 against |0> + |psi>; depends on psi's global phase."""
    return lambda rho: swap_test(reduced_density(rho, [0], n), public_key_state())


@dataclass
class ForgeryReport:
    n: int
    forged: np.ndarray = field(repr=False)
    authentic: np.ndarray = field(repr=False)
    invariant_stats: dict[str, tuple[float, float]]
    control_stats: tuple[float, float]
    preparation_error: float

    @property
    def max_invariant_gap(self) -> float:
        return max(abs(a - f) for a, f in self.invariant_stats.values())

    @property
    def control_gap(self) -> float:
        return abs(self.control_stats[0] - self.control_stats[1])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "invariant_stats": {k: {"authentic": a, "forged": f} for k, (a, f) in self.invariant_stats.items()},
            "max_invariant_gap": self.max_invariant_gap,
            "control": {"authentic": self.control_stats[0], "forged": self.control_stats[1]},
            "control_gap": self.control_gap,
            "preparation_error": self.preparation_error,
        }


def forge_signature_mixture(sigma, n: int) -> ForgeryReport:
    """Forge the uniform-phase mixture of a signature state and compare verifiers.

    ``sigma`` must be given by its (public) coefficients in the logical
    basis, i.e. as a 2^n x 2^n matrix. The forgery is the exact ensemble
    produced by the weight-state preparation circuits.
    """
    sigma = as_density(sigma)
    if sigma.shape != (2**n, 2**n):
        raise ValueError(
            "signature must be described by public coefficients over the logical basis "
            f"(expected a {2**n}x{2**n} matrix); a description over the physical space depends on the private key"
        )
    target = dephase(sigma)
    forged = ensemble_density(WeightBlockDensity.from_matrix(target))
    prep_err = float(np.abs(forged - target).max())
    stats = {name: (f(sigma), f(forged)) for name, f in invariant_verifiers(n).items()}
    control = phase_sensitive_verifier(n)
    return ForgeryReport(n, forged, sigma, stats, (control(sigma), control(forged)), prep_err)
