import numpy as np
import pytest

from hiddenbasis.core import random_density
from hiddenbasis.phase_invariant import symmetric_state
from hiddenbasis.protocol import (
    AliceKey,
    FingerprintFamily,
    ReusabilityExceeded,
    attack_curve,
    bob_symmetric_state,
    eve_reference,
    eve_reference_from_copies,
    failure_slope,
    forge_signature_mixture,
    kernel_eve,
    kernel_eve_quadrature,
    kernel_honest,
    min_security_parameter,
    orthonormal_family,
    product_signature,
    random_family,
    run_session,
    swap_test,
    symmetric_state_decomposition,
)

SWEEP = [4, 8, 16, 32, 64, 128, 256, 512]


def test_swap_test_values(rng):
    assert swap_test([1, 0], [1, 0]) == pytest.approx(1.0)
    assert swap_test([1, 0], [0, 1]) == pytest.approx(0.5)
    rho = random_density(3, rng)
    assert swap_test(rho, rho) == pytest.approx((1 + np.trace(rho @ rho).real) / 2)
    with pytest.raises(ValueError):
        swap_test([1, 0], [1, 0, 0])


def test_orthonormal_family():
    fam = orthonormal_family(3, 5)
    assert fam.max_overlap() == 0 and fam.zero_overlap() == 0
    assert fam.M == 5
    with pytest.raises(ValueError):
        orthonormal_family(5, 5)


def test_random_family_respects_delta(rng):
    fam = random_family(6, 8, 0.6, rng)
    assert fam.max_overlap() <= 0.6
    assert fam.zero_overlap() < 1e-12


def test_family_validation():
    e = np.eye(3)
    with pytest.raises(ValueError):
        FingerprintFamily([e[1], (e[1] + e[2]) / np.sqrt(2)], 0.5, e[0])
    with pytest.raises(ValueError):
        FingerprintFamily([e[0]], 0.1, e[0])


def test_bob_state_is_prepared_symmetric_state():
    assert np.allclose(bob_symmetric_state(), symmetric_state(2, 1).amplitudes)


def test_symmetric_decomposition_identity():
    lhs, rhs = symmetric_state_decomposition()
    assert np.abs(lhs - rhs).max() <= 1e-10


@pytest.mark.parametrize("theta", [0.0, 0.4, 2.9])
def test_honest_kernel_always_passes(theta):
    res = kernel_honest(theta)
    assert abs(res.pass_probability - 1) <= 1e-12
    assert res.outcome_probabilities == pytest.approx((0.5, 0.5))


def test_eve_reference_matches_copy_construction():
    for r in (3, 6, 9):
        ref, leftover = eve_reference_from_copies(r, 0.3)
        assert leftover < 1e-12
        assert np.allclose(ref.c, eve_reference(r, 0.3).c, atol=1e-12)


def test_eve_kernel_is_frame_independent():
    base = kernel_eve(8).pass_probability
    assert kernel_eve(8, 1.7).pass_probability == pytest.approx(base, abs=1e-12)
    assert kernel_eve_quadrature(8, points=16) == pytest.approx(base, abs=1e-12)


def test_eve_attack_curve():
    curve = attack_curve(SWEEP)
    passes = [p for _, p in curve]
    assert all(p < 1 for p in passes)
    assert all(a < b for a, b in zip(passes, passes[1:]))
    assert -1.3 <= failure_slope(curve) <= -0.7


def test_eve_needs_three_copies():
    with pytest.raises(ValueError):
        kernel_eve(2)


def test_sessions():
    honest = run_session(4, 10)
    assert honest.accept_prob == pytest.approx(1.0)
    eve = run_session(4, 10, "eve")
    assert eve.accept_prob == pytest.approx(kernel_eve(3).pass_probability ** 10)
    assert eve.accept_prob < 1
    with pytest.raises(ValueError):
        run_session(4, 10, "mallory")


def test_alice_reusability_limit():
    alice = AliceKey(2)
    run_session(2, 1, alice=alice)
    run_session(2, 1, alice=alice)
    with pytest.raises(ReusabilityExceeded):
        run_session(2, 1, alice=alice)


def test_min_security_parameter():
    out = min_security_parameter(4, 1e-3)
    p = out["kernel_pass_prob"]
    assert p ** out["s"] <= 1e-3 < p ** (out["s"] - 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_forgery_fools_invariant_verifiers(n):
    rep = forge_signature_mixture(product_signature(n), n)
    assert rep.max_invariant_gap <= 1e-10
    assert rep.control_gap >= 0.1
    assert rep.preparation_error <= 1e-12


def test_forgery_rejects_key_dependent_description():
    with pytest.raises(ValueError):
        forge_signature_mixture(np.eye(16) / 16, 2)
