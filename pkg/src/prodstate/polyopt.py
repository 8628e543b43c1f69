"""Constrained optimization of low-degree polynomials over the complex sphere.

The objective is f(x) = c + sum_k <x^(x)k| M_k |x^(x)k> for Hermitian-ordered
coefficient tensors M_k, maximized in absolute value over a domain cut out by
a norm shell, a flatness cap on individual coordinates, and an affine
subspace constraint.  The solver exploits two structural facts: the objective
only notices the projection of x onto a low-dimensional "effective" subspace
read off the tensors' singular vectors, and the remaining mass of any
feasible flat vector can be rerouted onto a small coordinate support.  That
reduces the search to deterministic grids over small subspaces, which is
exact enough at desk scale and refuses (with a resource error) when the
requested resolution would need more than a configured number of grid points.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .errors import ResourceBudgetError

DEFAULT_NET_BUDGET = 5_000_000
_EVAL_CHUNK = 100_000


class PolySystem:
    """Coefficient data of a degree-d sesquilinear polynomial on C^n.

    `tensors[k-1]` holds the degree-k coefficients as an array of shape
    (n,) * 2k; the first k indices pair with the conjugated copies of x and
    the last k with the plain copies, so the term value is
    <x^(x)k| reshape(T, (n^k, n^k)) |x^(x)k>.  The total Frobenius mass
    |constant| + sum_k |T_k|_F must stay at most 1 (small slack), the scale
    on which the solver's accuracy guarantees are quoted.
    """

    def __init__(self, n: int, constant: complex = 0.0, tensors: tuple = ()):
        if n < 1:
            raise ValueError("ambient dimension must be >= 1")
        self.n = int(n)
        self.constant = complex(constant)
        self.tensors = tuple(np.asarray(t, dtype=complex) for t in tensors)
        self._mats = []
        total = abs(self.constant)
        for k, t in enumerate(self.tensors, start=1):
            if t.shape != (n,) * (2 * k):
                raise ValueError(f"degree-{k} tensor must have shape {(n,) * (2 * k)}")
            total += float(np.linalg.norm(t))
            self._mats.append(t.reshape(n**k, n**k))
        if total > 1.0 + 1e-9:
            raise ValueError("total coefficient mass exceeds 1")

    @property
    def degree(self) -> int:
        return len(self.tensors)


class OptDomain:
    """Search domain: norm shell, subspace pin, and per-coordinate flatness.

    Membership at slack factor c (the domain commonly written with gamma
    doubled) means: | |x| - nu | <= c*gamma, |A x - v| <= c*gamma, and
    |x_i| <= mu + c*gamma for every coordinate.  A has operator norm at most
    1 and may have zero rows (no subspace pin); gamma never exceeds nu.
    """

    def __init__(self, a: np.ndarray, v: np.ndarray, nu: float, mu: float, gamma: float):
        self.a = np.asarray(a, dtype=complex)
        if self.a.ndim != 2 or self.a.shape[1] < 1:
            raise ValueError("A must be a matrix with >= 1 column (possibly zero rows)")
        self.v = np.asarray(v, dtype=complex).reshape(self.a.shape[0])
        if self.a.shape[0] and np.linalg.norm(self.a, 2) > 1.0 + 1e-9:
            raise ValueError("A must have operator norm at most 1")
        if not (0.0 < nu <= 1.0):
            raise ValueError("nu must lie in (0, 1]")
        if mu <= 0.0:
            raise ValueError("mu must be positive")
        if not (0.0 < gamma <= nu):
            raise ValueError("gamma must lie in (0, nu]")
        self.nu = float(nu)
        self.mu = float(mu)
        self.gamma = float(gamma)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def contains(self, x: np.ndarray, factor: float = 1.0) -> bool:
        g = factor * self.gamma
        if abs(np.linalg.norm(x) - self.nu) > g:
            return False
        if x.size and np.max(np.abs(x)) > self.mu + g:
            return False
        if self.a.shape[0] and np.linalg.norm(self.a @ x - self.v) > g:
            return False
        return True

    def membership_mask(self, points: np.ndarray, factor: float = 1.0) -> np.ndarray:
        g = factor * self.gamma
        mask = np.abs(np.linalg.norm(points, axis=1) - self.nu) <= g
        if points.shape[1]:
            mask &= np.max(np.abs(points), axis=1) <= self.mu + g
        if self.a.shape[0]:
            mask &= np.linalg.norm(points @ self.a.T - self.v, axis=1) <= g
        return mask


def evaluate_poly(sys: PolySystem, x: np.ndarray) -> complex:
    """f(x) = constant + sum_k <x^(x)k| M_k |x^(x)k>."""
    x = np.asarray(x, dtype=complex).reshape(sys.n)
    return complex(evaluate_poly_batch(sys, x[None, :])[0])


def evaluate_poly_batch(sys: PolySystem, points: np.ndarray) -> np.ndarray:
    """Vectorized objective values for a (p, n) array of points."""
    p = points.shape[0]
    vals = np.full(p, sys.constant, dtype=complex)
    power = np.ones((p, 1), dtype=complex)
    for mat in sys._mats:
        power = (power[:, :, None] * points[:, None, :]).reshape(p, -1)
        vals += (power.conj() * (power @ mat.T)).sum(axis=1)
    return vals


def _orthonormal_columns(stacked: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span (n x q, q possibly 0)."""
    if stacked.size == 0:
        return np.zeros((stacked.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    return u[:, s > tol]


def effective_subspace(sys: PolySystem, eps: float) -> np.ndarray:
    """Orthonormal columns spanning every direction the objective can notice.

    Collects, for every coefficient tensor and every mode, the singular
    directions with singular value >= eps / (d+1)^2, together with their
    conjugates.  Projecting the input onto the result changes the objective
    by at most eps on the unit ball, and the dimension is at most
    8 (d+1)^6 / eps^2.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    threshold = eps / (sys.degree + 1) ** 2
    blocks = []
    for k, t in enumerate(sys.tensors, start=1):
        for mode in range(2 * k):
            flat = np.moveaxis(t, mode, 0).reshape(sys.n, -1)
            u, s, _ = np.linalg.svd(flat, full_matrices=False)
            keep = u[:, s >= threshold]
            if keep.shape[1]:
                blocks.append(keep)
                blocks.append(keep.conj())
    if not blocks:
        return np.zeros((sys.n, 0), dtype=complex)
    return _orthonormal_columns(np.concatenate(blocks, axis=1))


def _grid_axis(radius: float, pitch: float) -> np.ndarray:
    steps = math.floor(radius / pitch)
    return np.arange(-steps, steps + 1) * pitch


def _iter_ball_grid(dim_c: int, radius: float, pitch: float):
    """Chunked complex grid points of the radius ball in C^dim_c.

    Yields (coords, raw_count) pairs where raw_count is the number of raw
    grid points processed for the chunk (before the ball filter); the grid is
    the integer lattice of the given pitch over real and imaginary parts.
    """
    if dim_c == 0:
        yield np.zeros((1, 0), dtype=complex), 1
        return
    axis = _grid_axis(radius, pitch)
    g = len(axis)
    total = g ** (2 * dim_c)
    shape = (g,) * (2 * dim_c)
    for start in range(0, total, _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, total)
        multi = np.unravel_index(np.arange(start, stop), shape)
        reals = axis[np.stack(multi, axis=1)]
        keep = (reals**2).sum(axis=1) <= radius**2
        reals = reals[keep]
        yield reals[:, :dim_c] + 1j * reals[:, dim_c:], stop - start


def _grid_point_count(dim_c: int, radius: float, pitch: float) -> int:
    if dim_c == 0:
        return 1
    return len(_grid_axis(radius, pitch)) ** (2 * dim_c)


def _certainly_empty(dom: OptDomain, factor: float) -> bool:
    """True when the flatness cap alone keeps every candidate below the norm shell."""
    g = factor * dom.gamma
    return (dom.mu + g) * math.sqrt(dom.n) < dom.nu - g


def _support_sets(n: int, max_size: int):
    for size in range(max_size + 1):
        yield from combinations(range(n), size)


def solve_constrained(sys: PolySystem, dom: OptDomain, eps: float,
                      net_budget: int = DEFAULT_NET_BUDGET):
    """Maximize |f| over the domain by sparse-support guessing plus grid nets.

    Returns a point x in the factor-2 domain whose |f(x)| is within eps of
    the best value over the factor-1 domain, or None when the factor-2 domain
    contains no grid point (in particular when it is empty).  Search space:
    for each coordinate support S of size at most min(n, 1/mu^2 + 1), a grid
    of pitch gamma / sqrt(2 q) over the ball of radius nu + 2 gamma in
    span(effective subspace, rows of A, axes of S) with q complex
    coordinates.  Enumerating more than `net_budget` raw grid points raises
    ResourceBudgetError.  Deterministic: supports in size-then-lex order,
    first-found argmax, early exit once the value is provably within eps of
    the global ceiling.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    if dom.n != sys.n:
        raise ValueError("domain and polynomial dimensions differ")
    if _certainly_empty(dom, 2.0):
        return None
    wide = _orthonormal_columns(
        np.concatenate([effective_subspace(sys, eps), dom.a.conj().T], axis=1))
    max_support = min(sys.n, int(1.0 / dom.mu**2) + 1)
    radius = dom.nu + 2.0 * dom.gamma
    ceiling = abs(sys.constant) + sum(
        float(np.linalg.norm(t)) * (1.0 + 2.0 * dom.gamma) ** (2 * k)
        for k, t in enumerate(sys.tensors, start=1))
    eye = np.eye(sys.n, dtype=complex)
    best_val, best_x = -1.0, None
    used = 0
    for support in _support_sets(sys.n, max_support):
        basis = _orthonormal_columns(
            np.concatenate([wide, eye[:, list(support)]], axis=1))
        q = basis.shape[1]
        pitch = dom.gamma / math.sqrt(2.0 * max(q, 1))
        used += _grid_point_count(q, radius, pitch)
        if used > net_budget:
            raise ResourceBudgetError(
                f"net enumeration needs more than {net_budget} grid points; "
                "coarsen gamma or restrict supports")
        for coords, _ in _iter_ball_grid(q, radius, pitch):
            points = coords @ basis.T
            mask = dom.membership_mask(points, factor=2.0)
            if not mask.any():
                continue
            feasible = points[mask]
            vals = np.abs(evaluate_poly_batch(sys, feasible))
            top = int(np.argmax(vals))
            if vals[top] > best_val:
                best_val, best_x = float(vals[top]), feasible[top]
        if best_val >= ceiling - eps:
            break
    return best_x


def sparse_witness_exists(dom: OptDomain, support_budget: int,
                          net_budget: int = DEFAULT_NET_BUDGET):
    """Search for a feasible point of the form (subspace part) + (sparse part).

    Nets over span(rows of A, axes of S) for every support S of size at most
    support_budget, testing factor-1 membership.  Returns
    (found, witness or None); the same net budget applies.
    """
    if support_budget < 0:
        raise ValueError("support budget must be >= 0")
    if _certainly_empty(dom, 1.0):
        return False, None
    n = dom.n
    rowspace = _orthonormal_columns(dom.a.conj().T)
    radius = dom.nu + dom.gamma
    eye = np.eye(n, dtype=complex)
    used = 0
    for support in _support_sets(n, min(n, support_budget)):
        basis = _orthonormal_columns(
            np.concatenate([rowspace, eye[:, list(support)]], axis=1))
        q = basis.shape[1]
        pitch = dom.gamma / math.sqrt(2.0 * max(q, 1))
        used += _grid_point_count(q, radius, pitch)
        if used > net_budget:
            raise ResourceBudgetError(
                f"witness search needs more than {net_budget} grid points")
        for coords, _ in _iter_ball_grid(q, radius, pitch):
            points = coords @ basis.T
            mask = dom.membership_mask(points, factor=1.0)
            if mask.any():
                return True, points[mask][0]
    return False, None
