"""Product-state geometry: parametrization, tangent distance, weight projections.

A pure product state on n qubits is parametrized by a complex vector z, one
entry per site, as the tensor product of (|0> + z_i |1>)/sqrt(1 + |z_i|^2).
This module provides that parametrization, the tangent distance between two
such states, Hamming-weight projectors, the single-site unitaries that rotate
a product state onto |0...0>, fidelity evaluation, and the small closed-form
bounds (fidelity sandwiches, weight-tail bounds) that the learners rely on.

Basis convention: index b encodes the string x via b = sum_i x_i * d^(n-i),
i.e. site 1 is the most significant digit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

Z_MAX = 1e12
DEFAULT_ATOL = 1e-9


@dataclass(frozen=True)
class ProductParams:
    """Per-site parameters z of the product state ⊗_i (|0> + z_i|1>)/√(1+|z_i|²).

    Entries must be finite with |z_i| <= Z_MAX.  The empty tuple is allowed and
    denotes the zero-site prefix used to seed prefix-extension sweeps.
    """

    z: tuple[complex, ...]

    def __post_init__(self):
        z = tuple(complex(v) for v in self.z)
        object.__setattr__(self, "z", z)
        for v in z:
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("product parameters must be finite")
            if abs(v) > Z_MAX:
                raise ValueError(f"|z| = {abs(v):.3e} exceeds the cap {Z_MAX:.0e}")

    @property
    def n(self) -> int:
        return len(self.z)

    def asarray(self) -> np.ndarray:
        return np.asarray(self.z, dtype=complex)

    def concat(self, other: "ProductParams") -> "ProductParams":
        return ProductParams(self.z + other.z)


def cap_param(value: complex) -> complex:
    """Clamp a single parameter's magnitude to Z_MAX, preserving its phase."""
    value = complex(value)
    mag = abs(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)) or mag == 0.0:
        if mag == 0.0:
            return 0.0 + 0.0j
        # An infinite/NaN ratio means the |1> component dominates completely.
        return complex(Z_MAX)
    if mag > Z_MAX:
        return value / mag * Z_MAX
    return value


@dataclass(frozen=True)
class QuantumState:
    """Dense pure state vector or density matrix on n sites of dimension local_dim.

    kind is "pure" (data: amplitude vector of length local_dim**n) or "mixed"
    (data: Hermitian PSD matrix of that side).  Normalized states are the
    default; pass normalized=False for deliberately sub-normalized objects
    (weight projections, post-selected states).
    """

    n: int
    local_dim: int
    kind: str
    data: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in ("pure", "mixed"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.n < 1 or self.local_dim < 2:
            raise ValueError("need n >= 1 sites of local dimension >= 2")
        dim = self.local_dim**self.n
        data = np.array(self.data, dtype=complex)
        if self.kind == "pure":
            if data.shape != (dim,):
                raise ValueError(f"pure state needs shape ({dim},), got {data.shape}")
            if self.normalized and abs(np.linalg.norm(data) - 1.0) > DEFAULT_ATOL:
                raise ValueError("pure state vector is not normalized")
        else:
            if data.shape != (dim, dim):
                raise ValueError(f"density matrix needs shape ({dim},{dim})")
            if np.max(np.abs(data - data.conj().T)) > DEFAULT_ATOL:
                raise ValueError("density matrix is not Hermitian")
            eigs = np.linalg.eigvalsh((data + data.conj().T) / 2)
            if eigs.min() < -DEFAULT_ATOL:
                raise ValueError("density matrix has a negative eigenvalue")
            if self.normalized and abs(np.trace(data).real - 1.0) > DEFAULT_ATOL:
                raise ValueError("density matrix trace differs from 1")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, vector, local_dim: int = 2, normalized: bool = True) -> "QuantumState":
        vector = np.asarray(vector, dtype=complex)
        n = _infer_sites(vector.shape[0], local_dim)
        return cls(n=n, local_dim=local_dim, kind="pure", data=vector, normalized=normalized)

    @classmethod
    def mixed(cls, matrix, local_dim: int = 2, normalized: bool = True) -> "QuantumState":
        matrix = np.asarray(matrix, dtype=complex)
        n = _infer_sites(matrix.shape[0], local_dim)
        return cls(n=n, local_dim=local_dim, kind="mixed", data=matrix, normalized=normalized)

    @property
    def dim(self) -> int:
        return self.local_dim**self.n

    def norm(self) -> float:
        if self.kind == "pure":
            return float(np.linalg.norm(self.data))
        return float(np.trace(self.data).real)

    def density(self) -> np.ndarray:
        """The state as a density matrix (outer product for pure states)."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return np.asarray(self.data)


def _infer_sites(dim: int, local_dim: int) -> int:
    n = round(math.log(dim, local_dim))
    if local_dim**n != dim:
        raise ValueError(f"dimension {dim} is not a power of {local_dim}")
    return max(n, 1)


@lru_cache(maxsize=None)
def hamming_weights(n: int, local_dim: int = 2) -> np.ndarray:
    """Number of nonzero digits of every basis index (site 1 most significant)."""
    idx = np.arange(local_dim**n)
    weights = np.zeros(local_dim**n, dtype=np.int64)
    for site in range(n):
        digit = (idx // local_dim ** (n - 1 - site)) % local_dim
        weights += digit != 0
    weights.setflags(write=False)
    return weights


def string_to_index(x, local_dim: int = 2) -> int:
    """Basis index of the digit string x, site 1 most significant."""
    b = 0
    for digit in x:
        b = b * local_dim + int(digit)
    return b


def index_to_string(b: int, n: int, local_dim: int = 2) -> tuple[int, ...]:
    digits = []
    for _ in range(n):
        digits.append(b % local_dim)
        b //= local_dim
    return tuple(reversed(digits))


def _site_vector(z: complex) -> np.ndarray:
    v = np.array([1.0, z], dtype=complex)
    return v / math.sqrt(1.0 + abs(z) ** 2)


def _fix_global_phase(vector: np.ndarray, atol: float = DEFAULT_ATOL) -> np.ndarray:
    mags = np.abs(vector)
    top = mags.max()
    if top == 0.0:
        return vector
    first = int(np.argmax(mags > top * 1e-12))
    phase = vector[first] / abs(vector[first])
    return vector / phase


def product_state_vector(p: ProductParams) -> QuantumState:
    """The pure product state with amplitudes Π_i z_i^{x_i} / Π_i √(1+|z_i|²).

    The global phase is fixed so that the lexicographically-first nonzero
    amplitude is real positive (which makes the |0...0> amplitude real positive
    whenever it is nonzero).
    """
    if p.n == 0:
        raise ValueError("cannot build a state on zero sites")
    vec = np.array([1.0 + 0.0j])
    for z in p.z:
        vec = np.kron(vec, _site_vector(z))
    return QuantumState.pure(_fix_global_phase(vec), local_dim=2)


def tangent_distance(p: ProductParams, q: ProductParams) -> float:
    """sqrt(Σ_i |(z_i − a_i)/(1 + conj(z_i)·a_i)|²); +inf on an orthogonal site.

    Not a metric (the triangle inequality can fail), but symmetric, zero iff
    the states coincide, and invariant under joint single-site unitaries.
    A site contributes +inf exactly when its denominator vanishes while the
    numerator does not; comparisons should treat +inf as exceeding any
    threshold.
    """
    if p.n != q.n:
        raise ValueError("parameter vectors must have the same number of sites")
    total = 0.0
    for z, a in zip(p.z, q.z):
        num = abs(z - a)
        den = abs(1.0 + z.conjugate() * a)
        if den == 0.0:
            if num == 0.0:
                continue
            return math.inf
        total += (num / den) ** 2
    return math.sqrt(total)


def project_hamming(s: QuantumState, mode: str, d: int) -> QuantumState:
    """Zero out all components on basis strings whose weight violates the mode.

    mode "leq" keeps weight <= d, "geq" keeps weight >= d.  The result is
    generally sub-normalized.  Qubit states only.
    """
    if s.local_dim != 2:
        raise ValueError("weight projection is defined for qubit states")
    if mode not in ("leq", "geq"):
        raise ValueError(f"unknown mode {mode!r}; expected 'leq' or 'geq'")
    if not 0 <= d <= s.n:
        raise ValueError(f"weight threshold {d} out of range [0, {s.n}]")
    weights = hamming_weights(s.n, 2)
    keep = weights <= d if mode == "leq" else weights >= d
    if s.kind == "pure":
        return QuantumState.pure(np.where(keep, s.data, 0.0), normalized=False)
    mat = np.where(np.outer(keep, keep), s.data, 0.0)
    return QuantumState.mixed(mat, normalized=False)


def recenter_unitaries(p: ProductParams) -> list[np.ndarray]:
    """Single-site unitaries U_i whose tensor product maps |π_p> to |0...0>."""
    out = []
    for z in p.z:
        scale = 1.0 / math.sqrt(1.0 + abs(z) ** 2)
        u = scale * np.array([[1.0, z.conjugate()], [-z, 1.0]], dtype=complex)
        out.append(u)
    return out


def product_unitary(unitaries) -> np.ndarray:
    """Tensor (Kronecker) product of a list of single-site unitaries."""
    full = np.array([[1.0 + 0.0j]])
    for u in unitaries:
        full = np.kron(full, u)
    return full


def apply_product_unitary(state: QuantumState, unitaries) -> QuantumState:
    full = product_unitary(unitaries)
    if state.kind == "pure":
        return QuantumState.pure(full @ state.data, state.local_dim, state.normalized)
    return QuantumState.mixed(full @ state.data @ full.conj().T, state.local_dim, state.normalized)


def transform_params(unitaries, p: ProductParams, inverse: bool = False) -> ProductParams:
    """Parameters of (⊗U_i)|π_p> (each U_i maps product states to product states).

    With inverse=True applies each U_i's adjoint instead.  A site whose |0>
    component is annihilated gets the capped parameter Z_MAX with the correct
    phase.
    """
    if len(unitaries) != p.n:
        raise ValueError("need exactly one unitary per site")
    new = []
    for u, z in zip(unitaries, p.z):
        mat = u.conj().T if inverse else u
        v0 = mat[0, 0] + mat[0, 1] * z
        v1 = mat[1, 0] + mat[1, 1] * z
        new.append(_ratio_param(v0, v1))
    return ProductParams(tuple(new))


def _ratio_param(v0: complex, v1: complex) -> complex:
    """The capped parameter v1/v0, keeping the ratio's phase when it overflows."""
    if abs(v0) * Z_MAX <= abs(v1):
        if abs(v0) == 0.0:
            return complex(Z_MAX)
        ph = cmath.phase(v1) - cmath.phase(v0)
        return complex(Z_MAX * math.cos(ph), Z_MAX * math.sin(ph))
    return cap_param(v1 / v0)


def fidelity(s: QuantumState, p: ProductParams) -> float:
    """⟨π_p|ρ|π_p⟩ for mixed s, |⟨π_p|ψ⟩|² for pure s."""
    if s.local_dim != 2:
        raise ValueError("product-state fidelity is defined for qubit states")
    if p.n != s.n:
        raise ValueError("site-count mismatch between state and parameters")
    pi = product_state_vector(p).data
    if s.kind == "pure":
        val = abs(np.vdot(pi, s.data)) ** 2
    else:
        val = float(np.real(np.vdot(pi, s.data @ pi)))
    return float(min(max(val, 0.0), 1.0))


def product_fidelity(p: ProductParams, q: ProductParams) -> float:
    """|⟨π_p|π_q⟩|² computed sitewise (cheap at any n)."""
    if p.n != q.n:
        raise ValueError("parameter vectors must have the same number of sites")
    log_f = 0.0
    for z, a in zip(p.z, q.z):
        overlap_sq = abs(1.0 + z.conjugate() * a) ** 2 / ((1.0 + abs(z) ** 2) * (1.0 + abs(a) ** 2))
        if overlap_sq == 0.0:
            return 0.0
        log_f += math.log(overlap_sq)
    return math.exp(log_f)


def excitation_probs(p: ProductParams) -> np.ndarray:
    """Per-site probability |z_i|²/(1+|z_i|²) of measuring 1 on site i."""
    mags = np.abs(p.asarray()) ** 2
    return mags / (1.0 + mags)


def mean_excitation(p: ProductParams) -> float:
    """Expected Hamming weight μ = Σ_i |z_i|²/(1+|z_i|²) of a measurement."""
    return float(excitation_probs(p).sum())


def weight_distribution(site_probs) -> np.ndarray:
    """Distribution of the total weight for independent per-site 1-probabilities."""
    dist = np.array([1.0])
    for q in np.asarray(site_probs, dtype=float):
        dist = np.convolve(dist, [1.0 - q, q])
    return dist


def weight_tail_bound(mu: float, d: float) -> float:
    """Upper bound exp(−d·log(d/μ) + (d−μ)) on the mass at weight ≥ d, for d ≥ μ."""
    if d < mu:
        raise ValueError("the tail bound needs d >= mu")
    if mu == 0.0:
        return 1.0 if d == 0 else 0.0
    if d == 0:
        return 1.0
    return math.exp(-d * math.log(d / mu) + (d - mu))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-distributed unitary (QR of a complex Gaussian, phases fixed)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def batched_haar_unitaries(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count independent Haar unitaries, shape (count, dim, dim).

    Orthonormalizes Gaussian columns by batched modified Gram-Schmidt, which
    fixes the triangular factor's diagonal real positive, so the result is
    exactly Haar-distributed.  Vectorizing over the batch beats per-matrix
    factorizations by a wide margin at the small dimensions used here.
    """
    g = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    for j in range(dim):
        col = g[:, :, j]
        for k in range(j):
            done = g[:, :, k]
            col -= np.einsum("bi,bi->b", done.conj(), col)[:, None] * done
        col /= np.linalg.norm(col, axis=1, keepdims=True)
    return g


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-random pure state vector."""
    g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return g / np.linalg.norm(g)


def random_product_params(rng: np.random.Generator, n: int, scale: float = 1.0) -> ProductParams:
    """Parameters drawn uniformly from the complex disk of radius scale, per site."""
    radii = scale * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return ProductParams(tuple(radii * np.exp(1j * angles)))


def haar_product_params(rng: np.random.Generator, n: int) -> ProductParams:
    """Parameters of a product of independent Haar-random qubit states."""
    out = []
    for _ in range(n):
        v = haar_state(2, rng)
        if abs(v[0]) * Z_MAX <= abs(v[1]):
            out.append(cap_param(complex(Z_MAX)))
        else:
            out.append(cap_param(v[1] / v[0]))
    return ProductParams(tuple(out))


def vector_to_params(vector: np.ndarray) -> ProductParams:
    """Parameters of a single-qubit state vector (ratio amp1/amp0, capped)."""
    v = np.asarray(vector, dtype=complex)
    if v.shape != (2,):
        raise ValueError("expected a single-qubit state vector")
    return ProductParams((_ratio_param(v[0], v[1]),))


def partial_trace(matrix: np.ndarray, n: int, keep, local_dim: int = 2) -> np.ndarray:
    """Partial trace of an n-site density matrix, keeping the listed sites.

    keep is an iterable of 0-based site indices in increasing order.
    """
    keep = list(keep)
    if keep != sorted(set(keep)) or any(not 0 <= k < n for k in keep):
        raise ValueError("keep must be strictly increasing valid site indices")
    d = local_dim
    tensor = np.asarray(matrix, dtype=complex).reshape((d,) * (2 * n))
    drop = [site for site in range(n) if site not in keep]
    m = n
    for site in sorted(drop, reverse=True):
        tensor = np.trace(tensor, axis1=site, axis2=site + m)
        m -= 1
    side = d ** len(keep)
    return tensor.reshape(side, side)
