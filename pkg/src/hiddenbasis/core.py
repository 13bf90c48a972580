"""Dense complex linear algebra shared by every other module.

States and operators are thin validated wrappers around numpy arrays.
All public functions also accept plain arrays, so callers that already
hold an ``ndarray`` do not need to wrap it first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-10
CHAIN_ATOL = 1e-9
MAX_DENSE_DIM = 8192


class DimensionError(ValueError):
    """Raised when operands live in spaces of different dimension."""


class InvalidStateError(ValueError):
    """Raised when an array violates a state or operator invariant."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise InvalidStateError("amplitudes must be a non-empty vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise InvalidStateError(f"state norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, vec) -> "PureState":
        vec = np.asarray(vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(vec / norm)

    @classmethod
    def basis(cls, index: int, dim: int) -> "PureState":
        vec = np.zeros(dim, dtype=complex)
        vec[index] = 1.0
        return cls(vec)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError("density operator must be a square matrix")
        if not np.allclose(mat, mat.conj().T, atol=ATOL, rtol=0):
            raise InvalidStateError("density operator is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > ATOL:
            raise InvalidStateError("density operator does not have unit trace")
        if np.linalg.eigvalsh(mat).min() < -ATOL:
            raise InvalidStateError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError("unitary must be a square matrix")
        if not is_unitary(mat, ATOL):
            raise InvalidStateError("matrix is not unitary")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def is_unitary(mat, tol: float = ATOL) -> bool:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    return bool(np.abs(mat @ mat.conj().T - np.eye(mat.shape[0])).max() <= tol)


def as_vector(state) -> np.ndarray:
    vec = np.asarray(state, dtype=complex)
    if vec.ndim != 1:
        raise InvalidStateError("expected a state vector")
    return vec


def as_density(state) -> np.ndarray:
    """Return a density matrix for a PureState, DensityOperator or array.

    One-dimensional arrays are treated as pure state vectors.
    """
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise InvalidStateError(f"cannot interpret array of shape {arr.shape} as a state")


def _check_same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def tensor(a, b) -> PureState:
    return PureState(np.kron(as_vector(a), as_vector(b)))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    r, s = as_density(rho), as_density(sigma)
    _check_same_dim(r, s)
    sv = np.linalg.svd(r - s, compute_uv=False)
    return float(min(1.0, 0.5 * sv.sum()))


def fidelity_pure(a, b) -> float:
    va, vb = as_vector(a), as_vector(b)
    _check_same_dim(va, vb)
    return float(min(1.0, abs(np.vdot(va, vb))))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho, sigma) -> float:
    """Root fidelity tr|sqrt(rho) sqrt(sigma)| for arbitrary states.

    Pure inputs take the cheap route; this is the quantity the gate
    fidelity bounds are stated in (not its square).
    """
    ra, sa = np.asarray(rho), np.asarray(sigma)
    if ra.ndim == 1 and sa.ndim == 1:
        return fidelity_pure(ra, sa)
    if ra.ndim == 1 or sa.ndim == 1:
        vec, mat = (ra, as_density(sa)) if ra.ndim == 1 else (sa, as_density(ra))
        _check_same_dim(vec, mat)
        return float(np.sqrt(max(0.0, np.vdot(vec, mat @ vec).real)))
    r, s = as_density(ra), as_density(sa)
    _check_same_dim(r, s)
    sr = _psd_sqrt(r)
    inner = sr @ s @ sr
    vals = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
    return float(min(1.0, np.sqrt(vals).sum()))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with the phase fix of Mezzadri."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def reduced_density(rho, keep, n: int) -> np.ndarray:
    """Partial trace of an n-qubit density matrix onto the qubits in ``keep``."""
    rho = as_density(rho)
    keep = sorted(keep)
    drop = [k for k in range(n) if k not in keep]
    tens = rho.reshape((2,) * (2 * n))
    for offset, k in enumerate(drop):
        axis = k - offset
        tens = np.trace(tens, axis1=axis, axis2=axis + tens.ndim // 2)
    size = 2 ** len(keep)
    return tens.reshape(size, size)
