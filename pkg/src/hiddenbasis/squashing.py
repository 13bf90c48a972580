"""Copy-count lower bounds for squashing (making |0> + |psi> from copies of |psi>).

The A2 family lives in C^M. All A2 numerics are done in the Fourier frame,
i.e. with the common unitary F^dagger dropped from every member and F
applied to the reference |0>; every trace distance below is invariant
under that change of frame.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import ceil, log
from typing import NamedTuple

import numpy as np

from .core import MAX_DENSE_DIM, trace_distance

FRAME_NOTE = "Fourier frame: members are |j*>, reference is F|0>; the common F^dagger is dropped"
CSV_COLUMNS = ("M", "epsilon", "bound_t", "chain_lhs", "chain_rhs", "dense_check_pass")


@dataclass(frozen=True)
class SquashInstance:
    states: tuple
    epsilon: float
    zero_state: np.ndarray

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 1/2)")

    def target(self, psi) -> np.ndarray:
        return squash_target(self.zero_state, psi)


def squash_target(zero, psi) -> np.ndarray:
    """Density matrix of the normalized state |0> + |psi>."""
    vec = np.asarray(zero, dtype=complex) + np.asarray(psi, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def fourier_zero(M: int) -> np.ndarray:
    return np.full(M, 1 / np.sqrt(M), dtype=complex)


def a2_state(j: int, M: int) -> np.ndarray:
    """|j*>: +1/sqrt(M) at j, -1/sqrt(M) elsewhere."""
    if not 0 <= j < M:
        raise ValueError(f"j={j} out of range for M={M}")
    vec = np.full(M, -1 / np.sqrt(M), dtype=complex)
    vec[j] = 1 / np.sqrt(M)
    return vec


def a2_instance(M: int, epsilon: float) -> SquashInstance:
    return SquashInstance(tuple(a2_state(j, M) for j in range(M)), epsilon, fourier_zero(M))


def tensor_power_trace_distance(overlap: complex, t: int) -> float:
    """Trace distance between t copies of two pure states with the given overlap."""
    if abs(overlap) > 1 + 1e-12:
        raise ValueError("overlap modulus exceeds 1")
    if t < 1:
        raise ValueError("t must be positive")
    return float(np.sqrt(max(0.0, 1 - min(1.0, abs(overlap)) ** (2 * t))))


def dense_tensor_power_trace_distance(psi, phi, t: int) -> float:
    psi, phi = np.asarray(psi, dtype=complex), np.asarray(phi, dtype=complex)
    if psi.size**t > MAX_DENSE_DIM:
        raise ValueError(f"dense check limited to dimension {MAX_DENSE_DIM}")
    a, b = np.ones(1, dtype=complex), np.ones(1, dtype=complex)
    for _ in range(t):
        a, b = np.kron(a, psi), np.kron(b, phi)
    return trace_distance(a, b)


class CopyBound(NamedTuple):
    t: float
    slope: float  # asymptotic growth of the bound per unit M


def squash_copy_lower_bound(M: int, epsilon: float) -> CopyBound:
    """log(4 eps (1 - eps)) / (2 log(1 - 4/M)) and its large-M slope."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if M <= 4:
        raise ValueError("M must exceed 4")
    num = log(4 * epsilon * (1 - epsilon))
    return CopyBound(num / (2 * log(1 - 4 / M)), -num / 8)


@dataclass
class ChainReport:
    M: int
    t: int
    epsilon: float
    target_distance: float
    dense_distance: float | None
    closed_form_distance: float
    bound_t: float
    frame: str = FRAME_NOTE

    @property
    def chain_lhs(self) -> float:
        return 1 - 2 * self.epsilon

    @property
    def dense_check_pass(self) -> bool:
        return self.dense_distance is not None and abs(self.dense_distance - self.closed_form_distance) <= 1e-9

    @property
    def chain_feasible(self) -> bool:
        """False when the required output distance exceeds what t copies offer."""
        return self.chain_lhs <= self.closed_form_distance

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "t": self.t,
            "epsilon": self.epsilon,
            "target_distance": self.target_distance,
            "dense_distance": self.dense_distance,
            "closed_form_distance": self.closed_form_distance,
            "chain_lhs": self.chain_lhs,
            "chain_rhs": self.closed_form_distance,
            "bound_t": self.bound_t,
            "bound_t_ceil": ceil(self.bound_t),
            "chain_feasible": self.chain_feasible,
            "dense_check_pass": self.dense_check_pass,
            "frame": self.frame,
            "note": "t(A2, 1/3, 1) is read as t(A2, 1/3)",
        }

    def csv_row(self) -> tuple:
        return (self.M, self.epsilon, self.bound_t, self.chain_lhs, self.closed_form_distance, self.dense_check_pass)


def verify_chain(M: int, t: int, epsilon: float, i: int = 0, j: int = 1, dense: bool = True) -> ChainReport:
    """Evaluate each link of the A2 distinguishability chain for one (i, j) pair."""
    if i == j:
        raise ValueError("i and j must differ")
    if dense and M**t > MAX_DENSE_DIM:
        raise ValueError(f"M^t = {M**t} exceeds the dense cap {MAX_DENSE_DIM}")
    psi, phi = a2_state(i, M), a2_state(j, M)
    zero = fourier_zero(M)
    target = trace_distance(squash_target(zero, psi), squash_target(zero, phi))
    closed = tensor_power_trace_distance(np.vdot(psi, phi), t)
    dense_val = dense_tensor_power_trace_distance(psi, phi, t) if dense else None
    bound = squash_copy_lower_bound(M, epsilon).t if M > 4 and 0 < epsilon < 0.5 else float("nan")
    return ChainReport(M, t, epsilon, target, dense_val, closed, bound)


def no_increase_copies(delta: float) -> int:
    """Smallest t with delta^t <= (1 - delta)/2.

    For a family with pairwise overlap <= delta and <0|psi> = 0, this t
    makes the t-copy distance at least the target distance.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return max(1, ceil(log((1 - delta) / 2) / log(delta)))


def no_increase_check(family, t: int) -> list[tuple[float, float]]:
    """(target distance, t-copy distance) for every distinct pair in the family."""
    out = []
    states = family.states
    for a in range(len(states)):
        for b in range(a + 1, len(states)):
            lhs = trace_distance(
                squash_target(family.zero_state, states[a]), squash_target(family.zero_state, states[b])
            )
            rhs = tensor_power_trace_distance(np.vdot(states[a], states[b]), t)
            out.append((lhs, rhs))
    return out


def log_series_slack(x) -> np.ndarray:
    """2x + log(1 - x); nonnegative for x in (0, 1/2]."""
    x = np.asarray(x, dtype=float)
    return 2 * x + np.log1p(-x)


def chain_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        writer.writerow([_fmt(v) for v in rep.csv_row()])
    return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)
