"""Improper learning of low-bond-dimension matrix product states.

The learner sweeps the register once: at each step it estimates the
postselected few-site marginal, rotates the heavy eigenspace onto a zeroed
leading site with a disentangling unitary, and projects that site away.  One
final small-register tomography plus the stored rotations reconstructs a
matrix product state whose fidelity tracks the best bond-r state.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space

from .errors import PromiseViolationError, ResourceBudgetError
from .oracle import StateOracle, subnormalized_tomography
from .states import QuantumState, partial_trace

__all__ = [
    "MatrixProductState",
    "disentangling_unitary",
    "mps_learn",
    "mps_to_state",
    "schmidt_rank",
    "state_to_mps",
]

# Largest dense dimension mps_to_state will materialize.
DENSE_BUDGET = 4_194_304


class MatrixProductState:
    """Open-boundary tensor train; tensors[i] has shape (r_{i-1}, d, r_i).

    The contraction is validated to be a unit-norm state (within 1e-8) using
    transfer matrices, so construction stays cheap even when the dense
    amplitude vector would not fit in memory.
    """

    def __init__(self, tensors):
        tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if not tensors:
            raise ValueError("a matrix product state needs at least one site")
        d = None
        for t in tensors:
            if t.ndim != 3:
                raise ValueError("site tensors must have (left, phys, right) axes")
            if d is None:
                d = t.shape[1]
                if d < 2:
                    raise ValueError("physical dimension must be >= 2")
            elif t.shape[1] != d:
                raise ValueError("all sites must share one physical dimension")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for left, right in zip(tensors, tensors[1:]):
            if left.shape[2] != right.shape[0]:
                raise ValueError("neighboring bond dimensions do not match")

        transfer = np.ones((1, 1), dtype=complex)
        for t in tensors:
            # transfer_{b b'} = sum_s (A^s)^dagger transfer A^s
            transfer = np.einsum("asb,ac,csd->bd", t.conj(), transfer, t)
        norm_sq = float(np.real(transfer[0, 0]))
        if abs(norm_sq - 1.0) > 1e-8:
            raise ValueError(f"contraction norm^2 is {norm_sq}, not 1")

        self.tensors = tuple(tensors)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def local_dim(self) -> int:
        return self.tensors[0].shape[1]

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return (1,) + tuple(t.shape[2] for t in self.tensors)

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)


def mps_to_state(m: MatrixProductState, budget: int = DENSE_BUDGET) -> QuantumState:
    """Contract the train into a dense normalized pure state."""
    dim = m.local_dim**m.n
    if dim > budget:
        raise ResourceBudgetError(
            f"dense contraction of dimension {dim} exceeds the {budget} budget")
    amps = np.ones((1, 1), dtype=complex)
    for t in m.tensors:
        # amps: (prefix_dim, r_left) -> (prefix_dim * d, r_right)
        amps = np.tensordot(amps, t, axes=([1], [0]))
        amps = amps.reshape(amps.shape[0] * amps.shape[1], amps.shape[2])
    vec = amps[:, 0]
    return QuantumState.pure(vec / np.linalg.norm(vec), local_dim=m.local_dim)


def state_to_mps(s: QuantumState, max_bond: int | None = None,
                 tol: float = 1e-12) -> MatrixProductState:
    """Exact tensor train of a pure state via successive factorizations.

    Bond ranks are the Schmidt ranks above tol, optionally capped at
    max_bond (which truncates the smallest Schmidt coefficients).
    """
    if s.kind != "pure":
        raise ValueError("only pure states have a tensor-train form")
    d = s.local_dim
    work = s.data.reshape(1, -1)
    tensors = []
    for _ in range(s.n - 1):
        mat = work.reshape(work.shape[0] * d, -1)
        u, sing, vh = np.linalg.svd(mat, full_matrices=False)
        rank = max(1, int(np.sum(sing > tol)))
        if max_bond is not None:
            rank = min(rank, max_bond)
        tensors.append(u[:, :rank].reshape(-1, d, rank))
        work = sing[:rank, None] * vh[:rank]
    tensors.append(work.reshape(-1, d, 1))
    tensors[-1] = tensors[-1] / np.linalg.norm(tensors[-1])
    return MatrixProductState(tensors)


def schmidt_rank(s: QuantumState, cut: int, tol: float = 1e-10) -> int:
    """Number of Schmidt coefficients above tol across sites [1..cut]|[cut+1..n]."""
    if s.kind != "pure":
        raise ValueError("Schmidt rank is defined for pure states")
    if not 1 <= cut < s.n:
        raise ValueError("cut must split the register into two nonempty parts")
    mat = s.data.reshape(s.local_dim**cut, -1)
    sing = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sing > tol))


def disentangling_unitary(basis: np.ndarray) -> np.ndarray:
    """Unitary sending the given subspace onto the zeroed-first-site block.

    ``basis`` holds orthonormal columns spanning a subspace of (C^d)^{x kappa}
    whose dimension is exactly a 1/d fraction of the space.  The result U
    maps every subspace vector to |0> (x) (something) and every orthogonal
    vector to a state with no |0>-first-site component.
    """
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim != 2 or basis.shape[0] % basis.shape[1] != 0:
        raise ValueError("basis must be (d^kappa, d^(kappa-1)) with integer d")
    d = basis.shape[0] // basis.shape[1]
    if d < 2:
        raise ValueError("subspace dimension must be a proper fraction of the space")
    gram = basis.conj().T @ basis
    if not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-9):
        raise ValueError("basis columns must be orthonormal")
    complement = null_space(basis.conj().T)
    return np.hstack([basis, complement]).conj().T


def _embed_unitary(u: np.ndarray, left_sites: int, total: int, d: int) -> np.ndarray:
    """Extend a unitary on consecutive sites to the full register."""
    span = round(math.log(u.shape[0], d))
    right = total - left_sites - span
    full = u
    if left_sites:
        full = np.kron(np.eye(d**left_sites), full)
    if right:
        full = np.kron(full, np.eye(d**right))
    return full


def _top_eigenvector(mat: np.ndarray) -> np.ndarray:
    """Unit top eigenvector with the largest-magnitude amplitude made real positive."""
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2.0)
    vec = vecs[:, -1]
    pivot = int(np.argmax(np.abs(vec)))
    phase = vec[pivot] / abs(vec[pivot])
    return vec / phase


def _learn(o: StateOracle, r: int, eps: float, delta: float,
           kappa_override: int | None, keep_trace: bool):
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if r < 1:
        raise ValueError("bond dimension parameter must be a positive integer")
    n = o.n
    d = o.hidden.local_dim
    if d & (d - 1):
        raise ValueError("the disentangler synthesis needs a power-of-2 local dimension")

    tau = eps * eps / (9.0 * n * n * r**4)
    if kappa_override is None:
        # The guarantee-level window; at desk scale it usually spans the
        # whole register, collapsing the sweep to one full tomography.
        kappa = min(n, math.ceil(math.log(1.0 / tau, d)) + 1)
    else:
        kappa = int(kappa_override)
        if not 1 <= kappa <= n:
            raise ValueError("kappa_override must lie in [1, n]")
    block = d ** (kappa - 1)
    delta_call = delta / n

    frame: np.ndarray | None = None
    frames: list[np.ndarray] = []
    masses: list[float] = []
    for i in range(1, n - kappa + 1):
        suffix = subnormalized_tomography(o, frame, i - 1, tau, delta_call)
        masses.append(float(np.real(np.trace(suffix))))
        sigma = partial_trace(suffix, n - i + 1, range(kappa), d)
        vals, vecs = np.linalg.eigh((sigma + sigma.conj().T) / 2.0)
        order = np.argsort(vals)[::-1]
        heavy = int(np.sum(vals > tau))
        if heavy > block:
            raise PromiseViolationError(
                f"step {i} kept {heavy} eigenvalues above {tau}, beyond the "
                f"{block}-dimensional window; the estimate's trace must have "
                "failed")
        u = disentangling_unitary(vecs[:, order[:block]])
        step = _embed_unitary(u, i - 1, n, d)
        frame = step if frame is None else step @ frame
        if keep_trace:
            frames.append(frame.copy())

    final = subnormalized_tomography(o, frame, n - kappa, tau, delta_call)
    masses.append(float(np.real(np.trace(final))))
    psi = _top_eigenvector(final)

    vec = np.zeros(d**n, dtype=complex)
    vec[: psi.shape[0]] = psi
    if frame is not None:
        vec = frame.conj().T @ vec
    state = QuantumState.pure(vec / np.linalg.norm(vec), local_dim=d)
    result = state_to_mps(state, max_bond=block)
    info = {"kappa": kappa, "tau": tau, "frames": frames, "masses": masses}
    return result, info


def mps_learn(o: StateOracle, r: int, eps: float, delta: float,
              kappa_override: int | None = None) -> MatrixProductState:
    """Learn a tensor train competing with the best bond-r state.

    With probability 1 - delta the output's fidelity with the hidden state
    is within eps of the best bond-r matrix product state, and its bond
    dimension never exceeds d^(kappa-1).  ``kappa_override`` narrows the
    sweep window below the guarantee-level width, which keeps desk-scale
    sweeps multi-step; it is sound whenever every postselected marginal
    concentrates on that many dimensions.
    """
    result, _ = _learn(o, r, eps, delta, kappa_override, keep_trace=False)
    return result
