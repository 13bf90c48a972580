import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiddenbasis.core import (
    DensityOperator,
    DimensionError,
    InvalidStateError,
    PureState,
    UnitaryMatrix,
    fidelity,
    is_unitary,
    random_density,
    random_state,
    random_unitary,
    reduced_density,
    tensor,
    trace_distance,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_pure_state_rejects_unnormalized():
    with pytest.raises(InvalidStateError):
        PureState(np.array([1.0, 1.0]))
    assert np.allclose(PureState.normalized([3, 4]).amplitudes, [0.6, 0.8])


def test_pure_state_is_immutable():
    psi = PureState.basis(1, 3)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_normalizing_zero_vector_fails():
    with pytest.raises(InvalidStateError):
        PureState.normalized(np.zeros(2))


def test_density_validation():
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.array([[0.5, 1], [0, 0.5]]))
    DensityOperator(np.eye(2) / 2)


def test_unitary_validation():
    UnitaryMatrix(np.array([[0, 1], [1, 0]]))
    with pytest.raises(InvalidStateError):
        UnitaryMatrix(np.ones((2, 2)))
    assert not is_unitary(np.ones((2, 3)))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        trace_distance(np.array([1, 0]), np.array([1, 0, 0]))


def test_tensor_order():
    out = tensor([1, 0], [0, 1])
    assert np.allclose(out.amplitudes, [0, 1, 0, 0])


def test_orthogonal_states_are_perfectly_distinguishable():
    assert trace_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    assert fidelity([1, 0], [0, 1]) == pytest.approx(0.0)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_pure_trace_distance_matches_overlap(seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(4, rng), random_state(4, rng)
    expected = np.sqrt(1 - abs(np.vdot(a, b)) ** 2)
    assert trace_distance(a, b) == pytest.approx(expected, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_uhlmann_agrees_with_pure_formula(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(3, rng)
    rho = random_density(3, rng)
    assert fidelity(np.outer(psi, psi.conj()), rho) == pytest.approx(fidelity(psi, rho), abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_fuchs_van_de_graaf(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(4, rng), random_density(4, rng)
    f, d = fidelity(rho, sigma), trace_distance(rho, sigma)
    assert 1 - f <= d + 1e-9
    assert d <= np.sqrt(1 - f**2) + 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_trace_distance_unitarily_invariant(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(4, rng), random_density(4, rng)
    u = random_unitary(4, rng)
    rotated = trace_distance(u @ rho @ u.conj().T, u @ sigma @ u.conj().T)
    assert rotated == pytest.approx(trace_distance(rho, sigma), abs=1e-10)


def test_random_unitary_is_unitary(rng):
    assert is_unitary(random_unitary(7, rng))


def test_reduced_density_of_product(rng):
    a, b, c = (random_state(2, rng) for _ in range(3))
    full = np.kron(np.kron(a, b), c)
    assert np.allclose(reduced_density(full, [1], 3), np.outer(b, b.conj()))
    assert np.allclose(reduced_density(full, [0, 2], 3), np.outer(np.kron(a, c), np.kron(a, c).conj()))


def test_reduced_density_of_bell_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(reduced_density(bell, [0], 2), np.eye(2) / 2)
