"""Covers of the high-fidelity product states of an unknown register.

Given measurement access to an n-qubit state and a fidelity level eta, a
*cover* is a short list of product parameter vectors such that (1) every
member has fidelity at least eta - eps with the state, (2) members are
pairwise at tangent distance at least 2/eta, and (3) every product state of
fidelity at least eta lies within tangent distance 3/eta of some member.

`build_cover` constructs one by sweeping the register left to right,
maintaining a cover of each prefix.  At a new site every previous member is
branched over a fixed six-state local net; each branch (a "root") is
recentered to the origin by single-site rotations, and new members far from
the already-accepted ones are located on a weight-truncated estimate of the
prefix marginal.  Candidates close to the root are read straight off a grid
net over a small subspace; candidates whose remaining coordinates carry a
spread-out norm are completed through the constrained polynomial maximizer
(`polyopt`).  `verify_cover` audits the three properties against the exact
state, and `estimate_opt` wraps the builder in a bisection over eta to
estimate the best product-state fidelity with a witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np

from .errors import PromiseViolationError, ResourceBudgetError
from .oracle import StateOracle, estimate_fidelity, subspace_tomography
from .polyopt import (
    DEFAULT_NET_BUDGET,
    OptDomain,
    PolySystem,
    _grid_point_count,
    _iter_ball_grid,
    _orthonormal_columns,
    _support_sets,
    solve_constrained,
)
from .states import (
    ProductParams,
    QuantumState,
    Z_MAX,
    fidelity,
    hamming_weights,
    haar_product_params,
    product_unitary,
    recenter_unitaries,
    tangent_distance,
    transform_params,
)

__all__ = [
    "CoverOverrides",
    "CoverParams",
    "Cover",
    "DESK_OVERRIDES",
    "LOCAL_NET",
    "extend_candidate",
    "build_cover",
    "verify_cover",
    "estimate_opt",
]

# Six single-site states whose tangent-distance balls of radius 1 cover the
# Bloch sphere: |0>, |1>, and the four equator states (|0> ± |1>)/sqrt(2),
# (|0> ± i|1>)/sqrt(2).  Branching every member over this net keeps some
# root within per-site tangent distance 1 of any product state.
LOCAL_NET = (0.0 + 0.0j, complex(Z_MAX), 1.0 + 0.0j, -1.0 + 0.0j, 1.0j, -1.0j)

# Maximum dense coefficient entries a flat-completion handoff may allocate.
_FLAT_TENSOR_BUDGET = 4_000_000

# Row batch used when evaluating quadratic forms on large nets.
_OVERLAP_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class CoverOverrides:
    """Desk-scale tuning knobs for the cover search; None keeps each default.

    The defaults follow the guarantee-carrying schedule, which is far too
    expensive off asymptotia; the overrides coarsen the nets (`tol_floor`,
    `net_radius`, `net_budget`), shrink the searched supports (`support_cap`,
    `mu_floor`, `degree_cap`), and bound the flat-completion work
    (`flat_steps`, `flat_candidate_cap`) to make small registers tractable.
    """

    degree_cap: int | None = None
    support_cap: int | None = None
    mu_floor: float | None = None
    tol_floor: float | None = None
    net_radius: float | None = None
    net_budget: int | None = None
    polyopt_gamma: float | None = None
    polyopt_eps: float | None = None
    tomo_eps: float | None = None
    flat_steps: int | None = None
    flat_candidate_cap: int | None = None


#: Coarsening used by the command-line runner and the small-register tests.
DESK_OVERRIDES = CoverOverrides(
    support_cap=1,
    mu_floor=2.5,
    tol_floor=0.75,
    net_radius=2.2,
    polyopt_gamma=0.4,
    polyopt_eps=0.3,
    flat_steps=0,
    flat_candidate_cap=8,
    net_budget=20_000_000,
)


@dataclass(frozen=True)
class CoverParams:
    """Level, accuracy, and failure budget of a cover, plus derived radii.

    `eta` is the fidelity level being covered, `eps` the slack (members are
    only guaranteed fidelity eta - eps), and `delta` the total failure
    probability budget across every measurement the builder makes.
    """

    eta: float
    eps: float
    delta: float
    overrides: CoverOverrides = field(default_factory=CoverOverrides)

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not 0.0 < self.eps < self.eta / 3.0:
            raise ValueError("eps must lie in (0, eta/3)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    # --- radii ---------------------------------------------------------

    @property
    def b(self) -> float:
        """Pairwise member separation (tangent distance)."""
        return 2.0 / self.eta

    @property
    def b_far(self) -> float:
        """Coverage radius: every eta-fidelity state is this close to a member."""
        return 3.0 / self.eta

    @property
    def b_root(self) -> float:
        """Norm bound on a sought candidate after recentering its root."""
        return 4.0 / self.eta

    @property
    def eps_tilde(self) -> float:
        """Internal approximation scale driving truncation and handoff accuracy."""
        return self.eps / 100.0

    @property
    def member_cap(self) -> float:
        """Hard member-count cap; exceeding it means the level promise failed."""
        return math.ceil(6.0 / self.eta) + 2

    @property
    def mu(self) -> float:
        """Flatness threshold splitting direct-net from flat-completion search."""
        raw = 0.1 * min(self.b, 1.0 / self.b, math.sqrt(self.eps_tilde) / self.b_root)
        if self.overrides.mu_floor is not None:
            raw = max(raw, float(self.overrides.mu_floor))
        return raw

    # --- per-prefix schedule -------------------------------------------

    def degree(self, m: int) -> int:
        """Excitation-weight kept by the prefix-m truncated tomography."""
        d = min(math.ceil(10.0 * self.b_root**2 + math.log(2.0 / self.eps_tilde)), m)
        if self.overrides.degree_cap is not None:
            d = min(d, int(self.overrides.degree_cap))
        return max(d, 0)

    def polyopt_gamma(self, m: int) -> float:
        """Grid pitch scale handed to the flat-completion maximizer."""
        if self.overrides.polyopt_gamma is not None:
            return float(self.overrides.polyopt_gamma)
        return min(self.mu**4 / math.sqrt(m), 0.01 * self.eps)

    def tol(self, m: int) -> float:
        """Pitch scale of the direct candidate net at prefix length m."""
        raw = min(self.polyopt_gamma(m), self.mu**4 / math.sqrt(m), 0.01 * self.eps)
        if self.overrides.tol_floor is not None:
            raw = max(raw, float(self.overrides.tol_floor))
        return raw

    def support_limit(self, m: int) -> int:
        """Largest coordinate support enumerated by the candidate search."""
        s = min(m, math.floor(self.b_root**2 / self.mu**2))
        if self.overrides.support_cap is not None:
            s = min(s, int(self.overrides.support_cap))
        return max(s, 0)

    def net_radius(self) -> float:
        """Radius of the direct candidate net (recentered coordinates)."""
        if self.overrides.net_radius is not None:
            return min(self.b_root, float(self.overrides.net_radius))
        return self.b_root

    def flat_steps(self, m: int) -> int:
        """Number of norm rungs tried for the spread-out remainder."""
        if self.overrides.flat_steps is not None:
            return max(int(self.overrides.flat_steps), 0)
        return math.ceil(self.b_root / self.polyopt_gamma(m))

    @property
    def polyopt_eps(self) -> float:
        if self.overrides.polyopt_eps is not None:
            return float(self.overrides.polyopt_eps)
        return self.eps_tilde / 10.0

    @property
    def tomo_eps(self) -> float:
        if self.overrides.tomo_eps is not None:
            return float(self.overrides.tomo_eps)
        return self.eps / 8.0

    @property
    def net_budget(self) -> int:
        if self.overrides.net_budget is not None:
            return int(self.overrides.net_budget)
        return DEFAULT_NET_BUDGET


@dataclass(frozen=True)
class Cover:
    """A cover of the fidelity-eta product states of the first m sites."""

    members: tuple[ProductParams, ...]
    m: int
    params: CoverParams

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# --- candidate search internals ---------------------------------------------


def _truncate_weight(mat: np.ndarray, m: int, d: int) -> np.ndarray:
    """Zero all matrix entries touching a basis string of weight above d."""
    keep = hamming_weights(m, 2) <= d
    return np.where(np.outer(keep, keep), mat, 0.0)


def _batch_amplitudes(points: np.ndarray) -> np.ndarray:
    """Normalized product-state amplitude rows for bounded parameter rows."""
    count, m = points.shape
    amps = np.ones((count, 1), dtype=complex)
    for i in range(m):
        z = points[:, i]
        scale = 1.0 / np.sqrt(1.0 + np.abs(z) ** 2)
        site = np.stack([scale, scale * z], axis=1)
        amps = (amps[:, :, None] * site[:, None, :]).reshape(count, -1)
    return amps


def _batch_overlap(rho: np.ndarray, points: np.ndarray) -> np.ndarray:
    """<pi_z| rho |pi_z> for each parameter row, batched to bound memory."""
    count, m = points.shape
    out = np.empty(count)
    rows = max(256, _OVERLAP_ELEMENTS // (1 << max(m, 1)))
    for start in range(0, count, rows):
        amps = _batch_amplitudes(points[start:start + rows])
        out[start:start + rows] = np.real(
            np.einsum("pi,ij,pj->p", amps.conj(), rho, amps))
    return out


def _site_tangent_sq(z: np.ndarray, a: complex) -> np.ndarray:
    """Per-point squared single-site tangent distance to the value a."""
    num2 = np.abs(z - a) ** 2
    den2 = np.abs(1.0 + np.conj(z) * a) ** 2
    safe = np.where(den2 > 0.0, den2, 1.0)
    term = np.where(den2 > 0.0, num2 / safe, np.inf)
    return np.where((den2 == 0.0) & (num2 == 0.0), 0.0, term)


def _batched_tangent_sq(points: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Squared tangent distance of each parameter row to the vector a."""
    total = np.zeros(points.shape[0])
    for i in range(points.shape[1]):
        total = total + _site_tangent_sq(points[:, i], complex(a[i]))
    return total


def _flat_poly_system(rho: np.ndarray, m: int, s_mask: np.ndarray,
                      v_point: np.ndarray, nu: float, degree: int) -> PolySystem:
    """Coefficients of the truncated overlap as a polynomial in the remainder.

    With the support coordinates pinned to `v_point` and the remaining
    coordinates written as nu * t, the overlap against the weight-truncated
    matrix expands into matched-degree terms in t; this collects them into
    the solver's tensor format (the mixed-degree remainder is dropped — the
    located point is always re-scored exactly before acceptance).
    """
    mbar = int(np.count_nonzero(~s_mask))
    kmax = min(degree, mbar)
    if sum(mbar ** (2 * k) for k in range(1, kmax + 1)) > _FLAT_TENSOR_BUDGET:
        raise ResourceBudgetError(
            f"flat completion on {mbar} free sites needs more than "
            f"{_FLAT_TENSOR_BUDGET} dense coefficient entries")
    contractor = np.ones((1, 1), dtype=complex)
    for i in range(m):
        if s_mask[i]:
            block = np.array([[1.0], [v_point[i]]], dtype=complex)
        else:
            block = np.eye(2, dtype=complex)
        contractor = np.kron(contractor, block)
    sigma = contractor.conj().T @ rho @ contractor

    norm_s = float(np.prod(1.0 + np.abs(v_point[s_mask]) ** 2))
    scale = math.exp(-nu * nu) / (10.0 * norm_s)
    constant = complex(sigma[0, 0]) * scale
    tensors = []
    for k in range(1, kmax + 1):
        tensor = np.zeros((mbar,) * (2 * k), dtype=complex)
        weight = nu ** (2 * k) * scale / (math.factorial(k) ** 2)
        for left in combinations(range(mbar), k):
            row = sum(1 << (mbar - 1 - pos) for pos in left)
            for right in combinations(range(mbar), k):
                col = sum(1 << (mbar - 1 - pos) for pos in right)
                val = sigma[row, col] * weight
                if val == 0.0:
                    continue
                for lp in permutations(left):
                    for rp in permutations(right):
                        tensor[lp + rp] = val
        tensors.append(tensor)
    mass = abs(constant) + sum(float(np.linalg.norm(t)) for t in tensors)
    if mass > 1.0:
        constant /= mass
        tensors = [t / mass for t in tensors]
    return PolySystem(mbar, constant, tuple(tensors))


def extend_candidate(truncation: np.ndarray, constraints, root: ProductParams,
                     params: CoverParams) -> ProductParams | None:
    """Search one recentered branch for a new admissible cover member.

    `truncation` is the weight-truncated estimate of the prefix marginal (in
    the original frame), `constraints` a list of (member, bound) pairs the
    candidate must stay tangent-distance-far from, and `root` the branch
    point pulled to the origin before searching.  Returns the best candidate
    found (original frame) whose truncated overlap reaches eta - eps/2 and
    whose exact tangent distance clears every bound, or None.
    """
    m = root.n
    if m == 0:
        raise ValueError("the search root must have at least one site")
    d = params.degree(m)
    units = recenter_unitaries(root)
    frame = product_unitary(units)
    rho = _truncate_weight(frame @ np.asarray(truncation, dtype=complex)
                           @ frame.conj().T, m, d)
    rho = 0.5 * (rho + rho.conj().T)
    thresh = params.eta - 0.5 * params.eps

    # No unit vector beats the top eigenvalue, so neither will any candidate.
    ceiling = float(np.linalg.eigvalsh(rho)[-1])
    if ceiling < thresh - 1e-12:
        return None

    cons = [(transform_params(units, member), float(bound))
            for member, bound in constraints]
    cons_arrays = [member.asarray() for member, _ in cons]
    bounds = np.array([bound for _, bound in cons])

    tol = params.tol(m)
    radius = params.net_radius()
    gamma_po = params.polyopt_gamma(m)
    rungs = [j * gamma_po for j in range(1, params.flat_steps(m) + 1)
             if j * gamma_po <= params.b_root]
    flat_calls_left = (math.inf if params.overrides.flat_candidate_cap is None
                       else int(params.overrides.flat_candidate_cap))
    budget = params.net_budget
    used = 0

    best_val = -math.inf
    best_z: np.ndarray | None = None

    def consider(z_vec: np.ndarray) -> None:
        nonlocal best_val, best_z
        for a, bound in zip(cons_arrays, bounds):
            if math.sqrt(float(_batched_tangent_sq(z_vec[None, :], a)[0])) \
                    < bound - 1e-12:
                return
        val = float(_batch_overlap(rho, z_vec[None, :])[0])
        if val >= thresh - 1e-12 and val > best_val:
            best_val = val
            best_z = z_vec.copy()

    for support in _support_sets(m, params.support_limit(m)):
        s_mask = np.zeros(m, dtype=bool)
        s_mask[list(support)] = True
        sbar = ~s_mask

        cols = list(cons_arrays) + [np.eye(m, dtype=complex)[:, i] for i in support]
        stacked = (np.stack(cols, axis=1) if cols
                   else np.zeros((m, 0), dtype=complex))
        basis = _orthonormal_columns(stacked)
        q = basis.shape[1]
        pitch = 2.0 * tol / math.sqrt(2.0 * max(q, 1))

        used += _grid_point_count(q, radius, pitch)
        if used > budget:
            raise ResourceBudgetError(
                f"candidate nets need {used} grid points, above the "
                f"{budget} budget")

        for coords, _ in _iter_ball_grid(q, radius, pitch):
            points = coords @ basis.T
            count = points.shape[0]
            vbar2 = (np.abs(points[:, sbar]) ** 2).sum(axis=1)
            vs2 = (np.abs(points[:, s_mask]) ** 2).sum(axis=1)

            # Far-candidate prefilter: a candidate built on this point can
            # only clear the bound to member s when the point's support part
            # plus its remainder offset already look far from that member.
            pieces = []
            for a, bound in zip(cons_arrays, bounds):
                dtan2 = np.zeros(count)
                for i in support:
                    dtan2 = dtan2 + _site_tangent_sq(points[:, i], complex(a[i]))
                dbar2 = (np.abs(points[:, sbar] - a[sbar]) ** 2).sum(axis=1)
                pieces.append((dtan2, dbar2, 1.49 * bound * bound))

            def rung_mask(nu: float) -> np.ndarray:
                keep = np.ones(count, dtype=bool)
                for dtan2, dbar2, need in pieces:
                    keep &= nu * nu - vbar2 + dbar2 >= need - dtan2 - 1e-9
                return keep

            # Direct candidates: the net point itself (remainder included).
            mask0 = rung_mask(0.0)
            if mask0.any():
                sel = np.nonzero(mask0)[0]
                good = np.ones(len(sel), dtype=bool)
                for a, bound in zip(cons_arrays, bounds):
                    good &= _batched_tangent_sq(points[sel], a) \
                        >= (bound - 1e-12) ** 2
                sel = sel[good]
                if len(sel):
                    vals = _batch_overlap(rho, points[sel])
                    top = int(np.argmax(vals))
                    if vals[top] >= thresh - 1e-12 and vals[top] > best_val:
                        best_val = float(vals[top])
                        best_z = points[sel[top]].copy()

            # Flat completions: pin the support to the net point, hand the
            # remainder (at each norm rung) to the polynomial maximizer.
            mbar = m - len(support)
            if mbar == 0 or not rungs or flat_calls_left <= 0:
                continue
            for nu in rungs:
                fits = rung_mask(nu) & (vs2 + nu * nu <= params.b_root**2 + 1e-9)
                for idx in np.nonzero(fits)[0]:
                    if flat_calls_left <= 0:
                        break
                    flat_calls_left -= 1
                    point = points[idx]
                    system = _flat_poly_system(rho, m, s_mask, point, nu, d)
                    if cons_arrays:
                        pin = _orthonormal_columns(
                            np.stack([a[sbar] for a in cons_arrays], axis=1))
                        a_mat = pin.conj().T
                    else:
                        a_mat = np.zeros((0, mbar), dtype=complex)
                    target = a_mat @ (point[sbar] / nu)
                    dom = OptDomain(a_mat, target, 1.0, params.mu / nu,
                                    min(gamma_po / nu, 1.0))
                    found = solve_constrained(system, dom, params.polyopt_eps,
                                              net_budget=budget)
                    if found is None:
                        continue
                    z_vec = np.array(point, dtype=complex)
                    z_vec[sbar] = nu * found
                    consider(z_vec)

        if best_val >= ceiling - 1e-9:
            break

    if best_z is None:
        return None
    return transform_params(units, ProductParams(tuple(best_z)), inverse=True)


# --- cover construction ------------------------------------------------------


def _build(o: StateOracle, params: CoverParams, keep_trace: bool):
    """Sweep the register, returning the final cover and optional prefix trace."""
    n = o.n
    cap = params.member_cap
    per_level = 1 + 6 * cap * (cap + 2)
    delta_call = params.delta / (n * per_level)

    members: list[ProductParams] = [ProductParams(())]
    trace: list[Cover] = []
    for m in range(1, n + 1):
        truncation = subspace_tomography(o, m, params.degree(m),
                                         params.tomo_eps, delta_call)
        new: list[ProductParams] = []
        for prev in members:
            for branch in LOCAL_NET:
                root = ProductParams(prev.z + (branch,))
                while True:
                    cons = [(mem, params.b) for mem in new]
                    cand = extend_candidate(truncation, cons, root, params)
                    if cand is None:
                        break
                    est = estimate_fidelity(o, m, cand, params.eps / 4.0,
                                            delta_call)
                    far = all(tangent_distance(cand, mem) >= params.b
                              for mem in new)
                    if est < params.eta - 0.75 * params.eps or not far:
                        break
                    if len(new) >= cap:
                        raise PromiseViolationError(
                            f"prefix-{m} cover exceeded {cap} members; the "
                            "packing bound for this fidelity level failed")
                    new.append(cand)
        members = new
        if keep_trace:
            trace.append(Cover(tuple(members), m, params))
        if not members:
            break
    return Cover(tuple(members), n, params), trace


def build_cover(o: StateOracle, params: CoverParams) -> Cover:
    """Build a cover of the fidelity-eta product states of the full register.

    Uses one truncated tomography call per prefix length plus one fidelity
    estimate per accepted-or-rejected candidate; the failure probabilities
    of all calls sum to at most params.delta.  Returns an empty cover when
    no product state reaches fidelity eta - eps at some prefix.
    """
    cover, _ = _build(o, params, keep_trace=False)
    return cover


def verify_cover(rho: QuantumState, cover: Cover, trials: int,
                 rng_seed: int = 0) -> dict:
    """Audit the three cover properties against the exact state.

    Checks that every member reaches fidelity eta - eps, that members are
    pairwise at tangent distance 2/eta, and that `trials` random product
    states filtered to fidelity >= eta each lie within tangent distance
    3/eta of some member.  Returns a report dict with the violations found.
    """
    p = cover.params
    fids = [fidelity(rho, member) for member in cover.members]
    low_fidelity = [(i, f) for i, f in enumerate(fids)
                    if f < p.eta - p.eps - 1e-9]
    close_pairs = []
    for i in range(len(cover.members)):
        for j in range(i + 1, len(cover.members)):
            dist = tangent_distance(cover.members[i], cover.members[j])
            if dist < p.b - 1e-9:
                close_pairs.append((i, j, dist))

    rng = np.random.default_rng(rng_seed)
    tested = 0
    uncovered = []
    for _ in range(trials):
        witness = haar_product_params(rng, cover.m)
        if fidelity(rho, witness) < p.eta:
            continue
        tested += 1
        nearest = min((tangent_distance(witness, member)
                       for member in cover.members), default=math.inf)
        if nearest > p.b_far + 1e-9:
            uncovered.append((witness, nearest))
    return {
        "eta": p.eta,
        "eps": p.eps,
        "members": len(cover.members),
        "member_fidelities": fids,
        "low_fidelity": low_fidelity,
        "close_pairs": close_pairs,
        "witnesses_tested": tested,
        "uncovered": uncovered,
        "ok": not (low_fidelity or close_pairs or uncovered),
    }


def estimate_opt(o: StateOracle, eps: float, delta: float,
                 overrides: CoverOverrides | None = None):
    """Estimate the best product-state fidelity of the hidden state.

    Bisects the fidelity level: a nonempty cover at level eta certifies a
    product state of fidelity eta - eps and raises the floor, an empty cover
    lowers the ceiling.  Returns (estimate, witness) where the witness is
    the best measured member of the last nonempty cover, or (0.0, None)
    when every probed level came up empty.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if overrides is None:
        overrides = CoverOverrides()
    iterations = math.ceil(math.log2(1.0 / eps)) + 2
    delta_iter = delta / (2 * iterations)

    lo, hi = 0.0, 1.0
    eta = 0.5
    best_val = 0.0
    best_witness: ProductParams | None = None
    for _ in range(iterations):
        if eta < eps:
            break
        level_eps = min(eps, eta / 4.0)
        params = CoverParams(eta, level_eps, delta_iter, overrides)
        cover = build_cover(o, params)
        if cover.members:
            lo = eta
            share = delta_iter / len(cover.members)
            ests = [estimate_fidelity(o, o.n, member, eps / 4.0, share)
                    for member in cover.members]
            top = int(np.argmax(ests))
            best_val = float(ests[top])
            best_witness = cover.members[top]
        else:
            hi = eta
        if hi - lo <= 2.0 * eps:
            break
        eta = 0.5 * (lo + hi)
    if best_witness is None:
        return 0.0, None
    return best_val, best_witness
