import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiddenbasis.core import trace_distance
from hiddenbasis.protocol import orthonormal_family, random_family
from hiddenbasis.squashing import (
    CSV_COLUMNS,
    a2_instance,
    a2_state,
    chain_csv,
    dense_tensor_power_trace_distance,
    fourier_zero,
    log_series_slack,
    no_increase_check,
    no_increase_copies,
    squash_copy_lower_bound,
    squash_target,
    tensor_power_trace_distance,
    verify_chain,
)


def test_a2_states_are_unit_vectors():
    for j in range(8):
        assert np.linalg.norm(a2_state(j, 8)) == pytest.approx(1)
    with pytest.raises(ValueError):
        a2_state(8, 8)


def test_a2_overlap():
    M = 8
    assert np.vdot(a2_state(0, M), a2_state(3, M)).real == pytest.approx(1 - 4 / M)


def test_a2_targets_orthogonal_after_squashing():
    # |0*> + |j*> in this frame is proportional to e_j
    M = 8
    zero = fourier_zero(M)
    for i, j in [(0, 1), (2, 5)]:
        assert trace_distance(squash_target(zero, a2_state(i, M)), squash_target(zero, a2_state(j, M))) == pytest.approx(1)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_dense_chain_matches_closed_form(t):
    rep = verify_chain(8, t, 1 / 3)
    expected = np.sqrt(1 - (1 - 4 / 8) ** (2 * t))
    assert rep.dense_distance == pytest.approx(expected, abs=1e-9)
    assert rep.dense_check_pass
    assert rep.target_distance == pytest.approx(1, abs=1e-10)


def test_chain_guards():
    with pytest.raises(ValueError):
        verify_chain(16, 4, 1 / 3)
    with pytest.raises(ValueError):
        verify_chain(8, 1, 1 / 3, i=2, j=2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.integers(1, 3))
def test_tensor_power_formula_random_overlaps(c, t):
    psi = np.array([1, 0])
    phi = np.array([c, np.sqrt(1 - c**2)])
    assert dense_tensor_power_trace_distance(psi, phi, t) == pytest.approx(tensor_power_trace_distance(c, t), abs=1e-9)


def test_copy_bound_value_and_linearity():
    b = squash_copy_lower_bound(8, 1 / 3)
    assert b.t == pytest.approx(np.log(8 / 9) / (2 * np.log(0.5)))
    for M in (64, 128, 256):
        ratio = squash_copy_lower_bound(2 * M, 1 / 3).t / squash_copy_lower_bound(M, 1 / 3).t
        assert 1.9 <= ratio <= 2.1
    big = squash_copy_lower_bound(10**6, 1 / 3)
    assert big.t / 10**6 == pytest.approx(big.slope, rel=1e-4)


def test_copy_bound_domain():
    with pytest.raises(ValueError):
        squash_copy_lower_bound(4, 0.1)
    with pytest.raises(ValueError):
        squash_copy_lower_bound(8, 0.5)


def test_log_series_slack_nonnegative():
    x = np.linspace(1e-6, 0.5, 200)
    assert np.all(log_series_slack(x) >= 0)


@pytest.mark.parametrize("delta", [0.2, 0.5, 0.7])
def test_no_increase_argument(rng, delta):
    t = no_increase_copies(delta)
    assert delta**t <= (1 - delta) / 2
    fam = random_family(4, 32, delta, rng)
    for lhs, rhs in no_increase_check(fam, t):
        assert lhs <= rhs + 1e-12


def test_no_increase_orthonormal_family():
    assert all(l <= r for l, r in no_increase_check(orthonormal_family(3, 4), 1))


def test_chain_csv_format():
    text = chain_csv([verify_chain(8, 2, 1 / 3)])
    header, row = text.strip().split("\n")
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert row.split(",")[-1] == "true"
    assert "0.33333333333333331" in row


def test_instance_has_all_members():
    inst = a2_instance(8, 0.1)
    assert len(inst.states) == 8
    with pytest.raises(ValueError):
        a2_instance(8, 0.6)
