"""Copy-based access to an unknown quantum state.

A :class:`StateOracle` wraps a hidden mixed state and exposes only the
measurement-driven estimators a learner is allowed to call: amplitude-vector
estimation in a rotated frame, low-weight-subspace tomography, subnormalized
tomography behind a measured prefix, and direct fidelity estimation.  Two
backends share identical signatures and copy accounting:

* ``exact`` — returns ground-truth values plus optional seeded noise.  Copy
  counts are still charged using the sampling formulas, so resource reports
  are backend-independent.
* ``sampling`` — simulates single-copy randomized measurements (Haar-basis
  shadows on a compressed register) with explicit copy consumption.

Copy-cost formulas are exported as plain functions so tests can assert the
counter matches them exactly.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .errors import ResourceBudgetError
from .states import (
    ProductParams,
    QuantumState,
    batched_haar_unitaries,
    partial_trace,
    product_state_vector,
    product_unitary,
)

# Hard cap on simulated measurement shots per oracle call; beyond this a
# sampling run is not a desk-scale experiment and is refused.
DEFAULT_SHOT_BUDGET = 50_000_000


def _check_unit_interval(value: float, name: str) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


# --- copy-cost formulas (the documented accounting) -----------------------


def median_group_count(delta: float) -> int:
    """Number of independent estimate groups whose median boosts 2/3 to 1-delta."""
    return max(1, math.ceil(18.0 * math.log(1.0 / delta)))


def z_group_size(n: int, eps: float) -> int:
    """Shots per group so one group mean of the amplitude vector errs < eps/3 w.p. 2/3."""
    return math.ceil(81.0 * n / eps**2)


def z_copy_cost(n: int, eps: float, delta: float) -> int:
    return median_group_count(delta) * z_group_size(n, eps)


def tomography_group_size(dim: int, eps: float) -> int:
    """Shots per group for a compressed-register shadow estimate of a dim x dim block."""
    return math.ceil(27.0 * (dim * dim + dim - 1) * (1.0 + math.sqrt(dim)) ** 2 / eps**2)


def tomography_copy_cost(dim: int, eps: float, delta: float) -> int:
    return median_group_count(delta) * tomography_group_size(dim, eps)


def fidelity_copy_cost(eps: float, delta: float) -> int:
    """Single-basis Bernoulli estimation shot count (Hoeffding)."""
    return math.ceil(math.log(2.0 / delta) / (2.0 * eps**2))


def subnormalized_budget(dim_suffix: int, eps: float, delta: float) -> tuple[int, int, int]:
    """(prefix-rate shots, wanted suffix shadows, group count) for subnormalized tomography.

    The accuracy budget is split evenly: half of eps to the prefix success
    rate, half to the conditional suffix state (estimated in Frobenius norm at
    eps / (2 sqrt(dim)) so the trace-norm error stays below eps/2).
    """
    n_mu = math.ceil(2.0 * math.log(4.0 / delta) / eps**2)
    r = eps / (2.0 * math.sqrt(dim_suffix))
    groups = max(1, math.ceil(18.0 * math.log(2.0 / delta)))
    per_group = math.ceil(27.0 * (dim_suffix**2 + dim_suffix - 1) / r**2)
    return n_mu, groups * per_group, groups


def subnormalized_attempts(wanted_shadows: int, mu_hat: float) -> int:
    """Copies spent hunting for `wanted_shadows` prefix successes at estimated rate mu_hat."""
    return math.ceil(2.0 * wanted_shadows / mu_hat)


def weight_leq_indices(m: int, d: int) -> list[int]:
    """Basis indices (ascending) of m-qubit strings with Hamming weight <= d."""
    if not (0 <= d <= m):
        raise ValueError("need 0 <= d <= m")
    idx = []
    for k in range(d + 1):
        for ones in combinations(range(m), k):
            idx.append(sum(1 << (m - 1 - i) for i in ones))
    return sorted(idx)


# --- oracle handle ---------------------------------------------------------


class StateOracle:
    """Single-threaded handle dispensing measurement results on a hidden state.

    ``backend`` is ``"exact"`` (ground truth + noise of strength up to
    ``noise_opnorm``) or ``"sampling"`` (simulated single-copy measurements).
    ``copies_consumed`` counts every copy any estimator has used; it only
    grows, and both backends charge the same documented formulas.
    """

    def __init__(self, hidden: QuantumState, backend: str = "exact", seed: int = 0,
                 noise_opnorm: float = 0.0, shot_budget: int = DEFAULT_SHOT_BUDGET):
        if backend not in ("exact", "sampling"):
            raise ValueError(f"unknown backend {backend!r}")
        if noise_opnorm < 0:
            raise ValueError("noise_opnorm must be >= 0")
        if hidden.local_dim != 2:
            raise ValueError("oracles are implemented for qubit registers")
        self.hidden = hidden
        self.backend = backend
        self.seed = int(seed)
        self.noise_opnorm = float(noise_opnorm)
        self.shot_budget = int(shot_budget)
        self.copies_consumed = 0
        self._rng = np.random.default_rng(self.seed)
        self._rho = hidden.density()

    @property
    def n(self) -> int:
        return self.hidden.n

    def _charge(self, copies: int) -> None:
        self.copies_consumed += int(copies)

    def _check_shots(self, shots: int) -> None:
        if self.backend == "sampling" and shots > self.shot_budget:
            raise ResourceBudgetError(
                f"sampling call needs {shots} copies, above the {self.shot_budget} budget")

    def _noise_scale(self, eps: float) -> float:
        """Magnitude of the injected error on the exact backend (0 disables it)."""
        if self.noise_opnorm == 0.0:
            return 0.0
        return min(eps, self.noise_opnorm) * float(self._rng.uniform())


# --- shared internals ------------------------------------------------------


def _basis_unitary(o: StateOracle, basis: list[np.ndarray] | None) -> np.ndarray | None:
    if basis is None:
        return None
    if len(basis) != o.n:
        raise ValueError("need one single-site unitary per site")
    return product_unitary(list(basis))


def _rotated_block(rho: np.ndarray, u: np.ndarray | None, idx: list[int]) -> np.ndarray:
    """The [idx, idx] block of u rho u* without forming the full rotation."""
    if u is None:
        return rho[np.ix_(idx, idx)]
    rows = u[idx, :]
    return rows @ rho @ rows.conj().T


def _rotated_zero_column(rho: np.ndarray, u: np.ndarray | None) -> np.ndarray:
    """Column 0 of u rho u* without forming the full rotation."""
    if u is None:
        return rho[:, 0]
    return u @ (rho @ u[0, :].conj())


def _framed_density(o: StateOracle, frame: np.ndarray | None) -> np.ndarray:
    if frame is None:
        return o._rho
    frame = np.asarray(frame)
    if frame.shape != (o.hidden.dim, o.hidden.dim):
        raise ValueError("frame must be a unitary on the full register")
    return frame @ o._rho @ frame.conj().T


def _z_from_column(col: np.ndarray, n: int) -> np.ndarray:
    return np.array([col[1 << (n - 1 - i)] for i in range(n)])


def _compressed_z_register(rho: np.ndarray, u: np.ndarray | None, n: int) -> np.ndarray:
    """State on span{|0^n>, |e_1>..|e_n>} plus one junk slot for leftover population.

    The compression is the channel that first checks membership in the
    low-excitation span and dumps everything else into a fixed extra basis
    state; the matrix elements the amplitude estimator reads are unchanged.
    """
    idx = [0] + [1 << (n - 1 - i) for i in range(n)]
    dim = n + 2
    sigma = np.zeros((dim, dim), dtype=complex)
    sigma[: n + 1, : n + 1] = _rotated_block(rho, u, idx)
    sigma[n + 1, n + 1] = max(0.0, 1.0 - float(np.real(np.trace(sigma))))
    return (sigma + sigma.conj().T) / 2.0


def exact_z(state: QuantumState, basis: list[np.ndarray] | None = None) -> np.ndarray:
    """Ground-truth amplitude vector z_i = <e_i| U rho U* |0^n> (test helper)."""
    u = product_unitary(list(basis)) if basis is not None else None
    return _z_from_column(_rotated_zero_column(state.density(), u), state.n)


def _geometric_median(points: np.ndarray) -> np.ndarray:
    """The group estimate minimizing the median distance to all groups.

    Robust selection: whenever a strict majority of groups lies within r of
    the truth, the winner lies within 3r.  Ties resolve to the lowest index.
    """
    k = points.shape[0]
    if k == 1:
        return points[0]
    flat = points.reshape(k, -1)
    dists = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
    med = np.median(dists, axis=1)
    return points[int(np.argmin(med))]


def _sample_shadow_rows(rng: np.random.Generator, sigma: np.ndarray, shots: int,
                        chunk_size: int = 20_000) -> np.ndarray:
    """Post-measurement basis rows u = V*|b> from Haar-basis measurements of sigma.

    Each shot draws an independent Haar unitary V on the compressed register,
    measures sigma in the rotated computational basis, and records the state
    row the outcome projects onto.  Shape (shots, dim).
    """
    dim = sigma.shape[0]
    out = np.empty((shots, dim), dtype=complex)
    done = 0
    while done < shots:
        b = min(chunk_size, shots - done)
        vs = batched_haar_unitaries(dim, b, rng)
        probs = ((vs @ sigma) * vs.conj()).sum(axis=2).real
        np.clip(probs, 0.0, None, out=probs)
        probs /= probs.sum(axis=1, keepdims=True)
        cum = np.cumsum(probs, axis=1)
        picks = (rng.random((b, 1)) > cum).sum(axis=1)
        np.clip(picks, 0, dim - 1, out=picks)
        out[done:done + b] = vs[np.arange(b), picks, :].conj()
        done += b
    return out


def _shadow_block_means(rows: np.ndarray, groups: int) -> np.ndarray:
    """Per-group means of the shadow matrices (dim+1)|u><u| - I, shape (groups, dim, dim)."""
    shots, dim = rows.shape
    per = shots // groups
    ug = rows[: groups * per].reshape(groups, per, dim)
    means = (dim + 1) * np.einsum("kni,knj->kij", ug, ug.conj()) / per
    means -= np.eye(dim)
    return means


def _project_psd(mat: np.ndarray, trace_cap: float = 1.0) -> np.ndarray:
    """Hermitize, clip negative eigenvalues, and rescale only if trace exceeds the cap."""
    h = (mat + mat.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(h)
    np.clip(vals, 0.0, None, out=vals)
    out = (vecs * vals) @ vecs.conj().T
    t = float(np.real(np.trace(out)))
    if t > trace_cap and t > 0.0:
        out *= trace_cap / t
    return out


def _random_direction(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _random_hermitian_unit(rng: np.random.Generator, dim: int, norm: str) -> np.ndarray:
    """Random Hermitian matrix normalized to unit operator/trace/Frobenius norm."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2.0
    if norm == "op":
        h /= np.linalg.norm(h, 2)
    elif norm == "tr":
        h /= np.abs(np.linalg.eigvalsh(h)).sum()
    else:
        h /= np.linalg.norm(h)
    return h


# --- estimators ------------------------------------------------------------


def estimate_z(o: StateOracle, basis: list[np.ndarray], eps: float, delta: float) -> np.ndarray:
    """Estimate the first-excitation amplitude vector in the rotated frame.

    With U the product of the per-site `basis` unitaries and rho' = U rho U*,
    the target is z_i = <e_i| rho' |0^n>.  Returns a vector within l2 distance
    eps of z with probability >= 1 - delta (always, on the exact backend with
    zero noise).

    Copies: median_group_count(delta) * z_group_size(n, eps) on both backends.
    """
    _check_unit_interval(eps, "eps")
    _check_unit_interval(delta, "delta")
    n = o.n
    copies = z_copy_cost(n, eps, delta)
    u = _basis_unitary(o, basis)

    if o.backend == "exact":
        o._charge(copies)
        z = _z_from_column(_rotated_zero_column(o._rho, u), n)
        scale = o._noise_scale(eps)
        if scale == 0.0:
            return z
        return z + scale * _random_direction(o._rng, n)

    o._check_shots(copies)
    groups = median_group_count(delta)
    per = z_group_size(n, eps)
    sigma = _compressed_z_register(o._rho, u, n)
    dim = sigma.shape[0]

    rows = _sample_shadow_rows(o._rng, sigma, groups * per)
    shots_z = (dim + 1) * rows[:, 1: n + 1] * rows[:, [0]].conj()
    group_means = shots_z.reshape(groups, per, n).mean(axis=1)
    o._charge(copies)
    return _geometric_median(group_means)


def raw_z_shadows(o: StateOracle, basis: list[np.ndarray], shots: int) -> np.ndarray:
    """Single-shot amplitude-vector estimates before any averaging (test hook).

    Returns a (shots, n) array whose rows are unbiased one-copy estimates of
    the amplitude vector z in the rotated frame.  Sampling backend only;
    charges `shots` copies.
    """
    if o.backend != "sampling":
        raise ValueError("raw shadows exist only on the sampling backend")
    n = o.n
    o._check_shots(shots)
    sigma = _compressed_z_register(o._rho, _basis_unitary(o, basis), n)
    dim = sigma.shape[0]
    rows = _sample_shadow_rows(o._rng, sigma, shots)
    o._charge(shots)
    return (dim + 1) * rows[:, 1: n + 1] * rows[:, [0]].conj()


def subspace_tomography(o: StateOracle, prefix_m: int, d: int, eps: float,
                        delta: float) -> np.ndarray:
    """Estimate the low-excitation block of the first-`prefix_m`-sites marginal.

    Returns a 2^m x 2^m PSD matrix of trace <= 1 supported on computational
    strings of Hamming weight <= d, within operator-norm eps of the true
    weight-truncated marginal with probability >= 1 - delta.

    Copies: median_group_count(delta) * tomography_group_size(W + 1, eps)
    where W counts the weight-<= d strings, on both backends.
    """
    _check_unit_interval(eps, "eps")
    _check_unit_interval(delta, "delta")
    n = o.n
    if not (1 <= prefix_m <= n):
        raise ValueError("prefix_m out of range")
    if not (0 <= d <= prefix_m):
        raise ValueError("d out of range")
    idx = weight_leq_indices(prefix_m, d)
    w = len(idx)
    dim = w + 1
    copies = tomography_copy_cost(dim, eps, delta)

    rho_m = o._rho if prefix_m == n else partial_trace(o._rho, n, list(range(prefix_m)))
    block = rho_m[np.ix_(idx, idx)]
    full = np.zeros((2**prefix_m, 2**prefix_m), dtype=complex)

    if o.backend == "exact":
        o._charge(copies)
        scale = o._noise_scale(eps)
        if scale != 0.0:
            block = block + scale * _random_hermitian_unit(o._rng, w, "op")
            block = _project_psd(block)
        full[np.ix_(idx, idx)] = block
        return full

    o._check_shots(copies)
    groups = median_group_count(delta)
    per = tomography_group_size(dim, eps)
    sigma = np.zeros((dim, dim), dtype=complex)
    sigma[:w, :w] = block
    sigma[w, w] = max(0.0, 1.0 - float(np.real(np.trace(sigma))))
    sigma = (sigma + sigma.conj().T) / 2.0

    rows = _sample_shadow_rows(o._rng, sigma, groups * per)
    means = _shadow_block_means(rows, groups)
    est = _geometric_median(means)[:w, :w]
    o._charge(copies)
    full[np.ix_(idx, idx)] = _project_psd(est)
    return full


def subnormalized_tomography(o: StateOracle, frame: np.ndarray | None, zeroed_prefix: int,
                             eps: float, delta: float) -> np.ndarray:
    """Estimate the suffix block left after projecting the first sites onto zero.

    With rho' the hidden state conjugated by `frame` and i = zeroed_prefix,
    the target is sigma = (<0^i| (x) I) rho' (|0^i> (x) I), a PSD matrix on the
    remaining n - i sites with trace mu <= 1.  The estimate is within
    trace-norm eps with probability >= 1 - delta.

    Copies: n_mu + attempts with (n_mu, wanted, groups) =
    subnormalized_budget(2^(n-i), eps, delta) and attempts =
    subnormalized_attempts(wanted, mu_hat); the reported success rate mu_hat
    is the exact mu on the exact backend.  A zero rate returns the zero
    matrix after the n_mu rate-estimation copies.
    """
    _check_unit_interval(eps, "eps")
    _check_unit_interval(delta, "delta")
    n = o.n
    if not (0 <= zeroed_prefix < n):
        raise ValueError("zeroed_prefix out of range")
    dim_s = 2 ** (n - zeroed_prefix)
    n_mu, wanted, groups = subnormalized_budget(dim_s, eps, delta)
    rho_rot = _framed_density(o, frame)
    block = rho_rot[:dim_s, :dim_s]
    mu = float(np.real(np.trace(block)))

    if o.backend == "exact":
        mu_hat = mu
        if mu_hat <= 0.0:
            o._charge(n_mu)
            return np.zeros((dim_s, dim_s), dtype=complex)
        o._charge(n_mu + subnormalized_attempts(wanted, mu_hat))
        scale = o._noise_scale(eps)
        if scale == 0.0:
            return block.copy()
        noisy = block + scale * _random_hermitian_unit(o._rng, dim_s, "tr")
        return _project_psd(noisy)

    o._check_shots(n_mu)
    mu = min(max(mu, 0.0), 1.0)
    mu_hat = o._rng.binomial(n_mu, mu) / n_mu
    if mu_hat <= 0.0:
        o._charge(n_mu)
        return np.zeros((dim_s, dim_s), dtype=complex)
    attempts = subnormalized_attempts(wanted, mu_hat)
    o._check_shots(n_mu + attempts)
    successes = int(o._rng.binomial(attempts, mu))
    o._charge(n_mu + attempts)
    shots = min(wanted, successes)
    if shots == 0 or mu == 0.0:
        return np.zeros((dim_s, dim_s), dtype=complex)
    tau = block / mu
    tau = (tau + tau.conj().T) / 2.0
    rows = _sample_shadow_rows(o._rng, tau, shots)
    k = min(groups, shots)
    tau_hat = _geometric_median(_shadow_block_means(rows, k))
    return _project_psd(mu_hat * tau_hat)


def estimate_fidelity(o: StateOracle, prefix_m: int, p: ProductParams, eps: float,
                      delta: float) -> float:
    """Estimate the overlap of a product state with the first-`prefix_m`-sites marginal.

    Measures each copy in a product basis containing the candidate state, so
    the outcome is a Bernoulli with mean <pi| rho_[m] |pi>.  The estimate is
    within eps with probability >= 1 - delta.

    Copies: fidelity_copy_cost(eps, delta) on both backends.
    """
    _check_unit_interval(eps, "eps")
    _check_unit_interval(delta, "delta")
    n = o.n
    if not (1 <= prefix_m <= n):
        raise ValueError("prefix_m out of range")
    if p.n != prefix_m:
        raise ValueError("product parameters must cover exactly the measured prefix")
    copies = fidelity_copy_cost(eps, delta)
    rho_m = o._rho if prefix_m == n else partial_trace(o._rho, n, list(range(prefix_m)))
    vec = product_state_vector(p).data
    f = float(np.real(vec.conj() @ rho_m @ vec))
    f = min(max(f, 0.0), 1.0)

    if o.backend == "exact":
        o._charge(copies)
        scale = o._noise_scale(eps)
        if scale == 0.0:
            return f
        return min(max(f + scale * (1.0 if o._rng.uniform() < 0.5 else -1.0), 0.0), 1.0)

    o._check_shots(copies)
    hits = int(o._rng.binomial(copies, f))
    o._charge(copies)
    return hits / copies
