"""Hidden basis description, logical states and Hamming-weight bookkeeping.

Logical basis labels ``y`` in {0,1}^n are stored as integers with the
leftmost register as the most significant bit, so lexicographic order of
the strings coincides with numeric order of the indices.

Physical qudits have dimension ``d = d0 + d1``: the known basis of the
subspace containing |0> occupies indices ``0 .. d0-1`` and the one of the
subspace containing |1> occupies ``d0 .. d-1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import NamedTuple

import numpy as np

from .core import ATOL, InvalidStateError, PureState, is_unitary


def _complex_pairs(vec) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex)]


def _from_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 1:
        return arr.astype(complex)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass(frozen=True, eq=False)
class HiddenBasisSpec:
    """Classical description of the hidden basis vectors.

    ``alpha`` gives |0> over the basis of S0 and ``beta`` gives |1> over
    the basis of S1. This is the private-key artifact; it serializes to
    ``{"d0", "d1", "alpha": [[re, im], ...], "beta": [[re, im], ...]}``.
    """

    d0: int
    d1: int
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=complex)
        beta = np.array(self.beta, dtype=complex)
        if self.d0 < 1 or self.d1 < 1:
            raise ValueError("subspace dimensions must be positive")
        if alpha.shape != (self.d0,) or beta.shape != (self.d1,):
            raise ValueError("alpha/beta lengths must equal d0/d1")
        for name, vec in (("alpha", alpha), ("beta", beta)):
            if abs(np.linalg.norm(vec) - 1.0) > ATOL:
                raise InvalidStateError(f"{name} is not a unit vector")
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def d(self) -> int:
        return self.d0 + self.d1

    @property
    def zero_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, np.zeros(self.d1, dtype=complex)])

    @property
    def one_vector(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.d0, dtype=complex), self.beta])

    @classmethod
    def qubit(cls) -> "HiddenBasisSpec":
        return cls(1, 1, np.ones(1), np.ones(1))

    @classmethod
    def random(cls, d0: int, d1: int, rng: np.random.Generator) -> "HiddenBasisSpec":
        def unit(k):
            v = rng.normal(size=k) + 1j * rng.normal(size=k)
            return v / np.linalg.norm(v)

        return cls(d0, d1, unit(d0), unit(d1))

    def to_dict(self) -> dict:
        return {
            "d0": self.d0,
            "d1": self.d1,
            "alpha": _complex_pairs(self.alpha),
            "beta": _complex_pairs(self.beta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HiddenBasisSpec":
        return cls(int(data["d0"]), int(data["d1"]), _from_pairs(data["alpha"]), _from_pairs(data["beta"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "HiddenBasisSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class LogicalState(PureState):
    """Pure state on n logical qubits, amplitudes indexed by labels y."""

    n: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.n == 0 and self.amplitudes.size > 1:
            object.__setattr__(self, "n", int(self.amplitudes.size).bit_length() - 1)
        if self.amplitudes.size != 2**self.n:
            raise ValueError(f"expected {2**self.n} amplitudes for n={self.n}")

    @classmethod
    def from_vector(cls, vec, n: int | None = None, normalize: bool = False) -> "LogicalState":
        vec = np.asarray(vec, dtype=complex)
        if n is None:
            n = int(vec.size).bit_length() - 1
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(vec, n)

    @classmethod
    def from_label(cls, bits: str) -> "LogicalState":
        n = len(bits)
        return cls(np.eye(2**n, dtype=complex)[int(bits, 2)], n)


class WeightLabel(NamedTuple):
    n: int
    w: int
    z: int  # 1-based position within the weight-w block
    bits: str

    @property
    def index(self) -> int:
        return int(self.bits, 2)


def _check_weight(n: int, w: int):
    if n < 0 or not 0 <= w <= n:
        raise ValueError(f"weight w={w} out of range for n={n}")


@lru_cache(maxsize=None)
def hamming_weights(n: int) -> np.ndarray:
    """Hamming weight H(y) of every label y, indexed by y."""
    idx = np.arange(2**n)
    weights = np.zeros(2**n, dtype=int)
    for k in range(n):
        weights += (idx >> k) & 1
    weights.setflags(write=False)
    return weights


@lru_cache(maxsize=None)
def weight_indices(n: int, w: int) -> np.ndarray:
    """Integer labels of weight w, ascending (= lexicographic)."""
    _check_weight(n, w)
    out = np.flatnonzero(hamming_weights(n) == w)
    out.setflags(write=False)
    return out


def weight_basis(n: int, w: int) -> list[WeightLabel]:
    return [
        WeightLabel(n, w, z + 1, format(int(y), f"0{n}b") if n else "")
        for z, y in enumerate(weight_indices(n, w))
    ]


def number_state_index(n: int, w: int) -> int:
    """Label of |0...01...1> with w trailing ones."""
    _check_weight(n, w)
    return (1 << w) - 1


def embedding_matrix(spec: HiddenBasisSpec, n: int) -> np.ndarray:
    """Isometry from logical labels to the physical space, shape (d^n, 2^n)."""
    single = np.stack([spec.zero_vector, spec.one_vector], axis=1)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, single)
    return out


def embed(spec: HiddenBasisSpec, psi) -> PureState:
    vec = np.asarray(psi, dtype=complex)
    n = int(vec.size).bit_length() - 1
    if vec.size != 2**n:
        raise ValueError("logical state length must be a power of two")
    # contract one register at a time instead of forming the d^n x 2^n isometry
    single = np.stack([spec.zero_vector, spec.one_vector], axis=1)
    tens = vec.reshape((2,) * n) if n else vec.reshape(())
    for k in range(n):
        tens = np.tensordot(single, tens, axes=([1], [k]))
        tens = np.moveaxis(tens, 0, k)
    return PureState(tens.reshape(-1))


class WeightBlockOperator:
    """Operator on n logical qubits stored as its weight blocks T_0 ... T_n.

    Block ``w`` is indexed by ``weight_indices(n, w)``.
    """

    def __init__(self, n: int, blocks):
        self.n = n
        self.blocks = [np.array(b, dtype=complex) for b in blocks]
        if len(self.blocks) != n + 1:
            raise ValueError(f"expected {n + 1} blocks, got {len(self.blocks)}")
        for w, b in enumerate(self.blocks):
            size = comb(n, w)
            if b.shape != (size, size):
                raise ValueError(f"block {w} has shape {b.shape}, expected {(size, size)}")

    @classmethod
    def identity(cls, n: int) -> "WeightBlockOperator":
        return cls(n, [np.eye(comb(n, w)) for w in range(n + 1)])

    @classmethod
    def diagonal(cls, n: int, entries) -> "WeightBlockOperator":
        entries = np.asarray(entries, dtype=complex)
        return cls(n, [np.diag(entries[weight_indices(n, w)]) for w in range(n + 1)])

    @classmethod
    def from_matrix(cls, mat, tol: float = ATOL) -> "WeightBlockOperator":
        mat = np.asarray(mat, dtype=complex)
        n = int(mat.shape[0]).bit_length() - 1
        weights = hamming_weights(n)
        off = weights[:, None] != weights[None, :]
        if off.any() and np.abs(mat[off]).max() > tol:
            raise ValueError("matrix is not block diagonal over weight subspaces")
        return cls(n, [mat[np.ix_(weight_indices(n, w), weight_indices(n, w))] for w in range(n + 1)])

    @classmethod
    def random_unitary(cls, n: int, rng: np.random.Generator) -> "WeightBlockOperator":
        from .core import random_unitary

        return cls(n, [random_unitary(comb(n, w), rng) for w in range(n + 1)])

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for w, b in enumerate(self.blocks):
            idx = weight_indices(self.n, w)
            out[np.ix_(idx, idx)] = b
        return out

    def apply(self, vec) -> np.ndarray:
        vec = np.asarray(vec, dtype=complex)
        out = np.zeros_like(vec)
        for w, b in enumerate(self.blocks):
            idx = weight_indices(self.n, w)
            out[idx] = b @ vec[idx]
        return out

    def __matmul__(self, other):
        if isinstance(other, WeightBlockOperator):
            if other.n != self.n:
                raise ValueError("operators act on different numbers of qubits")
            return WeightBlockOperator(self.n, [a @ b for a, b in zip(self.blocks, other.blocks)])
        return self.apply(other)

    def adjoint(self) -> "WeightBlockOperator":
        return WeightBlockOperator(self.n, [b.conj().T for b in self.blocks])

    def is_unitary(self, tol: float = ATOL) -> bool:
        return all(is_unitary(b, tol) for b in self.blocks)

    def is_hermitian(self, tol: float = ATOL) -> bool:
        return all(np.allclose(b, b.conj().T, atol=tol, rtol=0) for b in self.blocks)

    def to_dict(self) -> dict:
        return {"n": self.n, "blocks": [[_complex_pairs(row) for row in b] for b in self.blocks]}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightBlockOperator":
        n = int(data["n"])
        blocks = []
        for w, b in enumerate(data["blocks"]):
            size = comb(n, w)
            blocks.append(_from_pairs(b).reshape(size, size))
        return cls(n, blocks)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


class WeightBlockDensity(WeightBlockOperator):
    """Phase-invariant density operator: Hermitian PSD blocks, total trace 1."""

    def __init__(self, n: int, blocks):
        super().__init__(n, blocks)
        if not self.is_hermitian():
            raise InvalidStateError("density blocks must be Hermitian")
        total = sum(np.trace(b).real for b in self.blocks)
        if abs(total - 1.0) > ATOL:
            raise InvalidStateError(f"density blocks have total trace {total!r}")
        for b in self.blocks:
            if b.size and np.linalg.eigvalsh(b).min() < -ATOL:
                raise InvalidStateError("density block has a negative eigenvalue")

    @classmethod
    def from_state(cls, vec) -> "WeightBlockDensity":
        vec = np.asarray(vec, dtype=complex)
        return cls.from_matrix(np.outer(vec, vec.conj()))


def phase_shift(theta: float, n: int) -> WeightBlockOperator:
    """U(theta): |y> -> exp(i H(y) theta) |y>."""
    return WeightBlockOperator.diagonal(n, np.exp(1j * theta * hamming_weights(n)))


def phase_shift_matrix(theta: float, n: int) -> np.ndarray:
    return np.diag(np.exp(1j * theta * hamming_weights(n)))
