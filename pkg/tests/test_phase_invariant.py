from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiddenbasis.core import InvalidStateError, random_density, random_state, random_unitary, trace_distance
from hiddenbasis.hidden_basis import (
    HiddenBasisSpec,
    WeightBlockDensity,
    WeightBlockOperator,
    embed,
    embedding_matrix,
    phase_shift_matrix,
    weight_indices,
)
from hiddenbasis.phase_invariant import (
    LiftedUnitary,
    PrepStep,
    binomial_mixture,
    dephase,
    ensemble_density,
    is_phase_invariant,
    lift_unitary,
    phase_invariant_ensemble,
    prepare_phase_invariant_density,
    prepare_weight_state,
    symmetric_state,
)

seeds = st.integers(0, 2**32 - 1)
THETAS = 2 * np.pi * np.arange(64) / 64


# -- phase invariance ------------------------------------------------------------


def _commutes_on_grid(T, n):
    return all(
        np.allclose(phase_shift_matrix(th, n) @ T @ phase_shift_matrix(th, n).conj().T, T, atol=1e-10)
        for th in THETAS
    )


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4), st.booleans())
def test_block_criterion_matches_commutation_grid(seed, n, invariant):
    rng = np.random.default_rng(seed)
    if invariant:
        T = WeightBlockOperator.random_unitary(n, rng).to_matrix()
    else:
        T = random_unitary(2**n, rng)
    assert is_phase_invariant(T) == _commutes_on_grid(T, n) == invariant


def test_is_phase_invariant_input_checks():
    with pytest.raises(ValueError):
        is_phase_invariant(np.eye(3))
    with pytest.raises(ValueError):
        is_phase_invariant(np.ones((2, 4)))


def test_standard_gates_classified():
    assert is_phase_invariant(np.diag([1, 1j]))
    assert is_phase_invariant(np.diag([1, 1, 1, -1]))
    assert not is_phase_invariant(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert is_phase_invariant(swap)


# -- lifting ---------------------------------------------------------------------


@pytest.mark.parametrize("d0,d1,n", [(2, 2, 1), (2, 2, 3), (1, 3, 2), (3, 2, 2)])
def test_lift_intertwines_with_embedding(rng, d0, d1, n):
    spec = HiddenBasisSpec.random(d0, d1, rng)
    V = WeightBlockOperator.random_unitary(n, rng)
    lifted = lift_unitary(V, spec).matrix
    E = embedding_matrix(spec, n)
    assert np.allclose(lifted @ E, E @ V.to_matrix(), atol=1e-10)
    assert np.allclose(lifted @ lifted.conj().T, np.eye(spec.d**n), atol=1e-10)


def test_lift_commutes_with_physical_phase_rotation(rng):
    # V' is built from the sector structure alone, so it commutes with every
    # physical operator acting as e^{i theta} on S1.
    spec = HiddenBasisSpec.random(2, 2, rng)
    lifted = lift_unitary(WeightBlockOperator.random_unitary(2, rng), spec).matrix
    local = np.diag([1, 1, np.exp(0.9j), np.exp(0.9j)])
    U = np.kron(local, local)
    assert np.allclose(U @ lifted, lifted @ U)


def test_lift_composition(rng):
    spec = HiddenBasisSpec.random(2, 2, rng)
    A, B = WeightBlockOperator.random_unitary(2, rng), WeightBlockOperator.random_unitary(2, rng)
    lhs = lift_unitary(A @ B, spec).matrix
    rhs = lift_unitary(A, spec).matrix @ lift_unitary(B, spec).matrix
    assert np.allclose(lhs, rhs)


def test_lift_is_independent_of_hidden_vectors(rng):
    V = WeightBlockOperator.random_unitary(2, rng)
    a = lift_unitary(V, HiddenBasisSpec.random(2, 2, rng)).matrix
    b = lift_unitary(V, HiddenBasisSpec.random(2, 2, rng)).matrix
    assert np.allclose(a, b)


def test_sparse_lift_matches_dense(rng):
    spec = HiddenBasisSpec.random(2, 3, rng)
    V = WeightBlockOperator.random_unitary(2, rng)
    sparse = lift_unitary(V, spec, dense=False)
    assert isinstance(sparse, LiftedUnitary)
    vec = random_state(spec.d**2, rng)
    assert np.allclose(sparse.apply(vec), lift_unitary(V, spec).matrix @ vec)


def test_lift_rejects_non_unitary_blocks(rng):
    V = WeightBlockOperator(1, [np.eye(1) * 2, np.eye(1)])
    with pytest.raises(ValueError):
        lift_unitary(V, HiddenBasisSpec.random(2, 2, rng))


# -- exact preparation -----------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 6))
def test_weight_state_preparation(rng, n):
    for w in range(n + 1):
        eta = random_state(comb(n, w), rng)
        circuit = prepare_weight_state(eta, n, w)
        out = circuit.simulate().amplitudes
        assert abs(np.vdot(eta, out[weight_indices(n, w)])) == pytest.approx(1, abs=1e-12)
        assert np.allclose(out[weight_indices(n, w)], eta)
        assert circuit.copies == (n - w, w)


def test_circuit_is_phase_invariant_unitary(rng):
    circuit = prepare_weight_state(random_state(comb(4, 2), rng), 4, 2)
    U = circuit.unitary()
    assert np.allclose(U @ U.conj().T, np.eye(16))
    assert is_phase_invariant(U)


def test_inverse_undoes_circuit(rng):
    circuit = prepare_weight_state(random_state(comb(4, 1), rng), 4, 1)
    vec = random_state(16, rng)
    assert np.allclose(circuit.apply(circuit.apply(vec), inverse=True), vec)


def test_extreme_weights_need_no_rotations():
    for w in (0, 3):
        circuit = prepare_weight_state([1.0], 3, w)
        assert circuit.steps == []


def test_symmetric_conditionals():
    circuit = prepare_weight_state(symmetric_state(4, 2).amplitudes, 4, 2)
    # first qubit is 1 with probability C(3,1)/C(4,2)
    assert circuit.conditional("", 1) == pytest.approx(0.5)
    assert circuit.conditional("1", 1) == pytest.approx(1 / 3)


def test_unreachable_prefixes_do_not_affect_output():
    n, w = 4, 2
    eta = np.zeros(comb(n, w), dtype=complex)
    eta[[0, -1]] = [0.6, 0.8j]  # only 0011 and 1100
    circuit = prepare_weight_state(eta, n, w)
    assert any(step.unreachable for step in circuit.steps)
    baseline = circuit.simulate().amplitudes
    for step in circuit.steps:
        for x in step.unreachable:
            step.amplitudes[x] = (np.cos(1.1), np.sin(1.1))
    assert np.allclose(circuit.simulate().amplitudes, baseline)
    assert np.allclose(baseline[weight_indices(n, w)], eta)


def test_full_vector_target_accepted():
    vec = symmetric_state(3, 1).amplitudes
    circuit = prepare_weight_state(vec, 3, 1)
    assert np.allclose(circuit.simulate().amplitudes, vec)


def test_preparation_input_errors():
    with pytest.raises(ValueError):
        prepare_weight_state([1.0], 2, 3)
    with pytest.raises(ValueError):
        prepare_weight_state(np.zeros(3), 3, 1)
    with pytest.raises(InvalidStateError):
        prepare_weight_state(np.ones(3), 3, 1)
    with pytest.raises(ValueError):
        prepare_weight_state(np.ones(8) / np.sqrt(8), 3, 1)


def test_trace_records_unreachable_and_probabilities():
    d = prepare_weight_state(symmetric_state(3, 1).amplitudes, 3, 1).to_dict()
    assert d["copies"] == {"zero": 2, "one": 1}
    assert d["steps"][0]["p"][""] == pytest.approx([2 / 3, 1 / 3])
    assert isinstance(PrepStep(1, {}).unreachable, set)


# -- mixtures --------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 4])
def test_binomial_mixture_is_theta_average(n):
    plus = np.ones(2**n) / np.sqrt(2**n)
    avg = np.zeros((2**n, 2**n), dtype=complex)
    for th in THETAS:
        v = phase_shift_matrix(th, n) @ plus
        avg += np.outer(v, v.conj()) / len(THETAS)
    assert np.allclose(binomial_mixture(n).to_matrix(), avg, atol=1e-12)
    assert np.allclose(dephase(np.outer(plus, plus)), avg, atol=1e-12)


def test_ensemble_realizes_density_exactly(rng):
    rho = WeightBlockDensity.from_matrix(dephase(random_density(8, rng)))
    assert np.allclose(ensemble_density(rho), rho.to_matrix(), atol=1e-12)


def test_mixture_histogram_is_binomial():
    n, samples = 5, 10_000
    rng = np.random.default_rng(7)
    ensemble = phase_invariant_ensemble(binomial_mixture(n))
    probs = np.array([p for p, _, _ in ensemble])
    picks = rng.choice(len(ensemble), size=samples, p=probs / probs.sum())
    counts = np.bincount([ensemble[i][1] for i in picks], minlength=n + 1)
    expected = np.array([comb(n, k) for k in range(n + 1)]) / 2**n * samples
    sigma = np.sqrt(expected * (1 - expected / samples))
    assert np.all(np.abs(counts - expected) <= 3 * sigma)


def test_maximally_mixed_empirical_state():
    n, samples = 2, 100_000
    rng = np.random.default_rng(11)
    rho = WeightBlockDensity(n, [np.eye(1) / 4, np.eye(2) / 4, np.eye(1) / 4])
    ensemble = phase_invariant_ensemble(rho)
    probs = np.array([p for p, _, _ in ensemble])
    counts = np.bincount(rng.choice(len(ensemble), size=samples, p=probs), minlength=len(ensemble))
    emp = np.zeros((4, 4), dtype=complex)
    for c, (_, _, circuit) in zip(counts, ensemble):
        v = circuit.simulate().amplitudes
        emp += c / samples * np.outer(v, v.conj())
    assert trace_distance(emp, np.eye(4) / 4) <= 0.02


def test_sampled_preparation_reports_copies(rng):
    sample = prepare_phase_invariant_density(binomial_mixture(3), rng)
    assert sample.copies == (3 - sample.w, sample.w)
    assert np.allclose(np.abs(sample.state.amplitudes[weight_indices(3, sample.w)]) ** 2, 1 / comb(3, sample.w))
