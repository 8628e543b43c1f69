"""Oracle backends: ground-truth values, sampling accuracy, copy accounting."""

import math

import numpy as np
import pytest

from prodstate.errors import ResourceBudgetError
from prodstate.instances import bell_state, maximally_mixed, random_mixed
from prodstate.oracle import (
    StateOracle,
    estimate_fidelity,
    estimate_z,
    exact_z,
    fidelity_copy_cost,
    median_group_count,
    raw_z_shadows,
    subnormalized_attempts,
    subnormalized_budget,
    subspace_tomography,
    subnormalized_tomography,
    tomography_copy_cost,
    weight_leq_indices,
    z_copy_cost,
)
from prodstate.states import (
    ProductParams,
    QuantumState,
    partial_trace,
    product_state_vector,
    product_unitary,
    random_product_params,
    recenter_unitaries,
)


def identity_basis(n):
    return [np.eye(2, dtype=complex) for _ in range(n)]


def zero_state(n):
    vec = np.zeros(2**n)
    vec[0] = 1.0
    return QuantumState.pure(vec)


# --- estimate_z ------------------------------------------------------------


def test_z_zero_state_identity_frame():
    for backend in ("exact", "sampling"):
        o = StateOracle(zero_state(3), backend=backend, seed=5)
        a = estimate_z(o, identity_basis(3), eps=0.5, delta=0.3)
        assert np.linalg.norm(a) <= 0.5


def test_z_single_excitation_closed_form():
    # psi = alpha|000> + beta|100>  ->  z = (alpha*beta, 0, 0).
    alpha, beta = 0.8, 0.6
    vec = np.zeros(8)
    vec[0], vec[4] = alpha, beta
    state = QuantumState.pure(vec)
    z = exact_z(state)
    assert np.allclose(z, [alpha * beta, 0.0, 0.0], atol=1e-12)

    o = StateOracle(state, backend="exact")
    a = estimate_z(o, identity_basis(3), eps=0.2, delta=0.3)
    assert np.allclose(a, z)  # noise 0: exact

    o = StateOracle(state, backend="sampling", seed=9)
    a = estimate_z(o, identity_basis(3), eps=0.5, delta=1 / 3)
    assert np.linalg.norm(a - z) <= 0.5


def test_z_exact_noise_bounded_and_seeded():
    rng = np.random.default_rng(0)
    state = random_mixed(2, rng)
    z = exact_z(state)
    o1 = StateOracle(state, backend="exact", seed=3, noise_opnorm=0.05)
    o2 = StateOracle(state, backend="exact", seed=3, noise_opnorm=0.05)
    a1 = estimate_z(o1, identity_basis(2), eps=0.5, delta=0.3)
    a2 = estimate_z(o2, identity_basis(2), eps=0.5, delta=0.3)
    assert np.linalg.norm(a1 - z) <= 0.05 + 1e-12
    assert np.array_equal(a1, a2)


def test_z_respects_rotated_frame():
    rng = np.random.default_rng(4)
    params = random_product_params(rng, 3)
    state = QuantumState.pure(product_state_vector(params).data)
    basis = recenter_unitaries(params)
    # Recentred onto |000>, the amplitude vector vanishes.
    o = StateOracle(state, backend="exact")
    a = estimate_z(o, basis, eps=0.4, delta=0.3)
    assert np.linalg.norm(a) < 1e-9


def test_z_norm_at_most_half():
    # For any state and any product frame the amplitude vector obeys |z| <= 1/2.
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 7))
        state = random_mixed(n, rng)
        basis = [u for u in recenter_unitaries(random_product_params(rng, n))]
        z = exact_z(state, basis)
        worst = max(worst, float(np.linalg.norm(z)))
    assert worst <= 0.5 + 1e-9


def test_raw_shadows_unbiased_5_sigma():
    rng = np.random.default_rng(21)
    state = random_mixed(2, rng)
    basis = [u for u in recenter_unitaries(random_product_params(rng, 2))]
    z = exact_z(state, basis)
    o = StateOracle(state, backend="sampling", seed=11)
    shots = raw_z_shadows(o, basis, 10_000)
    for part in (np.real, np.imag):
        mean = part(shots).mean(axis=0)
        sem = part(shots).std(axis=0) / math.sqrt(shots.shape[0])
        assert np.all(np.abs(mean - part(z)) <= 5 * sem + 1e-12)


def test_raw_shadow_variance_dimension_free():
    # Mean squared single-shot error stays below 3n (the design bound).
    rng = np.random.default_rng(31)
    state = random_mixed(2, rng)
    z = exact_z(state)
    o = StateOracle(state, backend="sampling", seed=13)
    shots = raw_z_shadows(o, identity_basis(2), 10_000)
    mse = float(np.mean(np.abs(shots - z) ** 2) * shots.shape[1])
    assert mse <= 3 * 2 * 1.1


# --- subspace tomography ---------------------------------------------------


def test_weight_leq_indices():
    assert weight_leq_indices(3, 0) == [0]
    assert weight_leq_indices(3, 1) == [0, 1, 2, 4]
    assert weight_leq_indices(2, 2) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        weight_leq_indices(2, 3)


def test_subspace_zero_state():
    for backend in ("exact", "sampling"):
        o = StateOracle(zero_state(3), backend=backend, seed=2)
        est = subspace_tomography(o, prefix_m=2, d=1, eps=0.9, delta=0.5)
        target = np.zeros((4, 4))
        target[0, 0] = 1.0
        tol = 1e-12 if backend == "exact" else 0.9
        assert np.linalg.norm(est - target, 2) <= tol


def test_subspace_exact_is_truncation_bitwise():
    rng = np.random.default_rng(8)
    state = random_mixed(3, rng)
    o = StateOracle(state, backend="exact")
    est = subspace_tomography(o, prefix_m=2, d=1, eps=0.3, delta=0.3)
    rho2 = partial_trace(state.density(), 3, [0, 1])
    idx = weight_leq_indices(2, 1)
    target = np.zeros((4, 4), dtype=complex)
    target[np.ix_(idx, idx)] = rho2[np.ix_(idx, idx)]
    assert np.array_equal(est, target)


def test_subspace_psd_trace_and_support():
    rng = np.random.default_rng(14)
    state = random_mixed(3, rng)
    for backend, noise in (("exact", 0.2), ("sampling", 0.0)):
        o = StateOracle(state, backend=backend, seed=6, noise_opnorm=noise)
        est = subspace_tomography(o, prefix_m=3, d=1, eps=0.8, delta=0.5)
        assert np.allclose(est, est.conj().T)
        assert np.linalg.eigvalsh(est).min() >= -1e-10
        assert np.real(np.trace(est)) <= 1 + 1e-10
        # No support outside the low-weight block.
        outside = [i for i in range(8) if i not in weight_leq_indices(3, 1)]
        assert np.abs(est[outside, :]).max() == 0.0


def test_subspace_sampling_monte_carlo_failure_rate():
    # 200 seeded runs: the op-norm guarantee fails at most a delta fraction
    # of the time (plus 3-sigma binomial slack).
    rng = np.random.default_rng(55)
    state = random_mixed(2, rng)
    rho1 = partial_trace(state.density(), 2, [0])
    eps, delta, runs = 0.9, 1 / 3, 200
    errors = []
    for seed in range(runs):
        o = StateOracle(state, backend="sampling", seed=seed)
        est = subspace_tomography(o, prefix_m=1, d=1, eps=eps, delta=delta)
        errors.append(np.linalg.norm(est - rho1, 2))
    failures = sum(e > eps for e in errors)
    assert failures <= delta * runs + 3 * math.sqrt(runs * delta * (1 - delta))
    # And the estimator is genuinely accurate, not just under a loose bound.
    assert np.median(errors) <= eps / 2


# --- subnormalized tomography ----------------------------------------------


def test_subnormalized_zero_state():
    o = StateOracle(zero_state(4), backend="exact")
    est = subnormalized_tomography(o, None, zeroed_prefix=2, eps=0.5, delta=0.3)
    target = np.zeros((4, 4))
    target[0, 0] = 1.0
    assert np.allclose(est, target, atol=1e-12)


def test_subnormalized_orthogonal_prefix_returns_zero():
    vec = np.zeros(4)
    vec[3] = 1.0  # |11>: prefix qubit is never 0
    o = StateOracle(QuantumState.pure(vec), backend="exact")
    est = subnormalized_tomography(o, None, zeroed_prefix=1, eps=0.5, delta=0.3)
    assert np.array_equal(est, np.zeros((2, 2)))
    n_mu, _, _ = subnormalized_budget(2, 0.5, 0.3)
    assert o.copies_consumed == n_mu


def test_subnormalized_exact_matches_block():
    rng = np.random.default_rng(19)
    state = random_mixed(3, rng)
    o = StateOracle(state, backend="exact")
    est = subnormalized_tomography(o, None, zeroed_prefix=1, eps=0.4, delta=0.3)
    assert np.allclose(est, state.density()[:4, :4], atol=1e-12)


def test_subnormalized_respects_frame():
    rng = np.random.default_rng(23)
    state = random_mixed(2, rng)
    frame = product_unitary([u for u in recenter_unitaries(random_product_params(rng, 2))])
    o = StateOracle(state, backend="exact")
    est = subnormalized_tomography(o, frame, zeroed_prefix=1, eps=0.4, delta=0.3)
    rot = frame @ state.density() @ frame.conj().T
    assert np.allclose(est, rot[:2, :2], atol=1e-12)


def test_subnormalized_sampling_accuracy():
    eps, delta = 0.8, 0.8
    o = StateOracle(bell_state(), backend="sampling", seed=3)
    est = subnormalized_tomography(o, None, zeroed_prefix=1, eps=eps, delta=delta)
    target = bell_state().density()[:2, :2]
    err = float(np.abs(np.linalg.eigvalsh(
        (est - target + (est - target).conj().T) / 2)).sum())
    assert err <= eps
    assert np.linalg.eigvalsh(est).min() >= -1e-10


# --- estimate_fidelity -----------------------------------------------------


def test_fidelity_own_state():
    rng = np.random.default_rng(2)
    params = random_product_params(rng, 3)
    state = QuantumState.pure(product_state_vector(params).data)
    for backend in ("exact", "sampling"):
        o = StateOracle(state, backend=backend, seed=4)
        est = estimate_fidelity(o, 3, params, eps=0.2, delta=0.3)
        assert est >= 1 - 0.2


def test_fidelity_maximally_mixed_prefix():
    o = StateOracle(maximally_mixed(3), backend="sampling", seed=8)
    params = ProductParams((0.0, 0.0))
    est = estimate_fidelity(o, 2, params, eps=0.15, delta=0.1)
    assert abs(est - 0.25) <= 0.15


def test_fidelity_exact_noise_zero():
    rng = np.random.default_rng(44)
    state = random_mixed(2, rng)
    params = random_product_params(rng, 2)
    o = StateOracle(state, backend="exact")
    vec = product_state_vector(params).data
    truth = float(np.real(vec.conj() @ state.density() @ vec))
    assert estimate_fidelity(o, 2, params, eps=0.3, delta=0.3) == pytest.approx(truth, abs=1e-15)


def test_fidelity_dimension_mismatch():
    o = StateOracle(maximally_mixed(3), backend="exact")
    with pytest.raises(ValueError):
        estimate_fidelity(o, 3, ProductParams((0.0,)), eps=0.3, delta=0.3)


# --- accounting, budgets, determinism ---------------------------------------


def test_copy_accounting_matches_formulas():
    rng = np.random.default_rng(3)
    state = random_mixed(2, rng)
    for backend in ("exact", "sampling"):
        o = StateOracle(state, backend=backend, seed=1)
        total = 0
        estimate_z(o, identity_basis(2), eps=0.5, delta=0.3)
        total += z_copy_cost(2, 0.5, 0.3)
        assert o.copies_consumed == total
        subspace_tomography(o, prefix_m=1, d=1, eps=0.9, delta=0.5)
        total += tomography_copy_cost(len(weight_leq_indices(1, 1)) + 1, 0.9, 0.5)
        assert o.copies_consumed == total
        estimate_fidelity(o, 2, ProductParams((0.0, 0.0)), eps=0.3, delta=0.3)
        total += fidelity_copy_cost(0.3, 0.3)
        assert o.copies_consumed == total


def test_subnormalized_accounting():
    rng = np.random.default_rng(9)
    state = random_mixed(2, rng)
    eps, delta = 0.7, 0.6
    n_mu, wanted, _ = subnormalized_budget(2, eps, delta)

    o = StateOracle(state, backend="exact")
    subnormalized_tomography(o, None, zeroed_prefix=1, eps=eps, delta=delta)
    mu = float(np.real(np.trace(state.density()[:2, :2])))
    assert o.copies_consumed == n_mu + subnormalized_attempts(wanted, mu)

    o = StateOracle(state, backend="sampling", seed=5)
    subnormalized_tomography(o, None, zeroed_prefix=1, eps=eps, delta=delta)
    spent = o.copies_consumed - n_mu
    valid = {subnormalized_attempts(wanted, k / n_mu) for k in range(1, n_mu + 1)}
    assert spent in valid


def test_copy_counter_monotone():
    o = StateOracle(maximally_mixed(2), backend="exact")
    seen = [o.copies_consumed]
    for _ in range(3):
        estimate_fidelity(o, 1, ProductParams((1.0,)), eps=0.4, delta=0.4)
        seen.append(o.copies_consumed)
    assert all(b > a for a, b in zip(seen, seen[1:]))


def test_shot_budget_enforced():
    o = StateOracle(maximally_mixed(2), backend="sampling", seed=0, shot_budget=1000)
    with pytest.raises(ResourceBudgetError):
        estimate_z(o, identity_basis(2), eps=0.05, delta=0.1)
    # Exact backend ignores the budget entirely.
    o = StateOracle(maximally_mixed(2), backend="exact", shot_budget=1000)
    estimate_z(o, identity_basis(2), eps=0.05, delta=0.1)


def test_sampling_deterministic_under_seed():
    rng = np.random.default_rng(6)
    state = random_mixed(2, rng)
    outs = []
    for _ in range(2):
        o = StateOracle(state, backend="sampling", seed=42)
        outs.append((
            estimate_z(o, identity_basis(2), eps=0.6, delta=0.4),
            estimate_fidelity(o, 2, ProductParams((0.1, -0.2j)), eps=0.3, delta=0.3),
            o.copies_consumed,
        ))
    assert np.array_equal(outs[0][0], outs[1][0])
    assert outs[0][1] == outs[1][1]
    assert outs[0][2] == outs[1][2]


def test_parameter_validation():
    o = StateOracle(maximally_mixed(2), backend="exact")
    with pytest.raises(ValueError):
        estimate_z(o, identity_basis(2), eps=0.0, delta=0.3)
    with pytest.raises(ValueError):
        estimate_z(o, identity_basis(2), eps=0.3, delta=1.0)
    with pytest.raises(ValueError):
        subspace_tomography(o, prefix_m=3, d=1, eps=0.3, delta=0.3)
    with pytest.raises(ValueError):
        subspace_tomography(o, prefix_m=2, d=3, eps=0.3, delta=0.3)
    with pytest.raises(ValueError):
        subnormalized_tomography(o, None, zeroed_prefix=2, eps=0.3, delta=0.3)
    with pytest.raises(ValueError):
        StateOracle(maximally_mixed(2), backend="approximate")
