"""Learning the high-fidelity members of a finite menu of product states.

Each site carries a finite list of allowed single-site pure states; the class
is every tensor product of per-site choices.  The learner sweeps the register
site by site, keeping exactly the prefixes whose estimated prefix fidelity
clears the level, so the surviving index tuples sandwich the true
high-fidelity set.  A brute-force census over the whole class serves as the
ground-truth oracle at desk scale.
"""

from __future__ import annotations

import itertools
import logging
import math

import numpy as np

from .errors import PromiseViolationError, ResourceBudgetError
from .oracle import StateOracle, estimate_fidelity
from .states import ProductParams, QuantumState, Z_MAX, cap_param, partial_trace

__all__ = [
    "DiscreteClass",
    "class_fidelity_census",
    "discrete_learn",
    "member_vector",
]

logger = logging.getLogger(__name__)

# Largest class the census will enumerate.
CENSUS_BUDGET = 250_000

# Smallest pairwise-overlap bound the survivor-count guarantee is stated for;
# smaller bounds still run but are flagged as outside the guarantee.
STATED_GAMMA_FLOOR = 1.0 / math.e


class DiscreteClass:
    """Per-site menus of unit vectors defining a finite product-state class.

    ``site_states[k]`` lists the allowed states of site k as vectors in C^d.
    ``gamma`` upper-bounds the squared overlap of any two distinct states in
    the same menu; it defaults to the largest such overlap and must lie in
    (0, 1), so menus of exactly orthogonal states need an explicit bound.
    """

    def __init__(self, site_states, gamma: float | None = None):
        menus = []
        local_dim = None
        for k, menu in enumerate(site_states):
            vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in menu]
            if not vecs:
                raise ValueError(f"site {k} has an empty menu")
            if local_dim is None:
                local_dim = vecs[0].shape[0]
                if local_dim < 2:
                    raise ValueError("site states must have dimension >= 2")
            for v in vecs:
                if v.shape[0] != local_dim:
                    raise ValueError("all site states must share one dimension")
                if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                    raise ValueError("site states must be unit vectors")
            menus.append(tuple(v.copy() for v in vecs))
        if not menus:
            raise ValueError("class needs at least one site")

        worst = 0.0
        for menu in menus:
            for u, v in itertools.combinations(menu, 2):
                worst = max(worst, float(abs(np.vdot(u, v)) ** 2))
        if gamma is None:
            gamma = worst
        if not worst <= gamma + 1e-12:
            raise ValueError(
                f"gamma={gamma} is below the largest same-site overlap {worst}")
        if not 0.0 < gamma < 1.0:
            raise ValueError(
                "gamma must lie in (0, 1); menus with only orthogonal states "
                "need an explicit positive bound")

        self.site_states = tuple(menus)
        self.gamma = float(gamma)
        self.local_dim = int(local_dim)

    @property
    def n(self) -> int:
        return len(self.site_states)

    @property
    def s(self) -> int:
        return max(len(menu) for menu in self.site_states)

    @property
    def size(self) -> int:
        return math.prod(len(menu) for menu in self.site_states)

    @property
    def gamma_below_stated_range(self) -> bool:
        """True when the overlap bound is below the guaranteed regime."""
        return self.gamma < STATED_GAMMA_FLOOR


def member_vector(cls: DiscreteClass, member: tuple[int, ...]) -> np.ndarray:
    """Dense amplitudes of the class member picked by per-site indices."""
    if len(member) == 0 or len(member) > cls.n:
        raise ValueError("member needs between 1 and n site indices")
    vec = np.array([1.0 + 0.0j])
    for site, idx in enumerate(member):
        vec = np.kron(vec, cls.site_states[site][idx])
    return vec


def _qubit_param(phi: np.ndarray) -> complex:
    """Amplitude-ratio parameter of a single-qubit unit vector."""
    if abs(phi[0]) * Z_MAX <= abs(phi[1]):
        return cap_param(complex(Z_MAX))
    return cap_param(phi[1] / phi[0])


def _member_params(cls: DiscreteClass, member: tuple[int, ...]) -> ProductParams:
    return ProductParams(tuple(
        _qubit_param(cls.site_states[site][idx])
        for site, idx in enumerate(member)))


def class_fidelity_census(rho: QuantumState, cls: DiscreteClass,
                          threshold: float,
                          budget: int = CENSUS_BUDGET) -> set[tuple[int, ...]]:
    """Every class member with exact fidelity >= threshold, by enumeration."""
    if rho.local_dim != cls.local_dim or rho.n != cls.n:
        raise ValueError("state and class shapes do not match")
    if cls.size > budget:
        raise ResourceBudgetError(
            f"census over {cls.size} members exceeds the {budget} budget")
    density = rho.kind == "mixed"
    mat_or_vec = rho.data
    out = set()
    for member in itertools.product(*(range(len(m)) for m in cls.site_states)):
        vec = member_vector(cls, member)
        if density:
            fid = float(np.real(np.vdot(vec, mat_or_vec @ vec)))
        else:
            fid = float(abs(np.vdot(vec, mat_or_vec)) ** 2)
        if fid >= threshold:
            out.add(member)
    return out


def exact_prefix_fidelity(rho: QuantumState, cls: DiscreteClass,
                          member: tuple[int, ...]) -> float:
    """Exact fidelity of a prefix member against the matching marginal."""
    m = len(member)
    vec = member_vector(cls, member)
    reduced = partial_trace(rho.density(), rho.n, range(m), rho.local_dim)
    return float(np.real(np.vdot(vec, reduced @ vec)))


def discrete_learn(o: StateOracle, cls: DiscreteClass, eta: float, eps: float,
                   delta: float) -> set[tuple[int, ...]]:
    """Member index tuples whose fidelity with the hidden state clears eta.

    Sweeps sites in order, extending each surviving prefix by every menu
    entry of the next site and keeping those whose estimated prefix fidelity
    is at least eta - eps/2.  With probability 1 - delta the output contains
    every member of fidelity >= eta and only members of fidelity >=
    eta - eps.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if not 0.0 < eps <= eta / 2.0:
        raise ValueError("eps must lie in (0, eta/2]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if o.hidden.local_dim != cls.local_dim:
        raise ValueError("oracle local dimension does not match the class")
    if o.n != cls.n:
        raise ValueError("oracle register size does not match the class")
    if cls.gamma_below_stated_range:
        logger.warning(
            "class overlap bound %.4f is below %.4f; the survivor-count "
            "guarantee is not stated for this range", cls.gamma,
            STATED_GAMMA_FLOOR)

    n, s = cls.n, cls.s
    spread = math.log(1.0 / cls.gamma)
    log_base = math.log(10.0 * n * s)
    # Worst-case estimation-call count and survivor bound, kept in log space
    # because near-parallel menus push both beyond float range.
    log_calls = math.log(20.0 / eta) / spread * log_base
    delta_call = delta * math.exp(-min(max(log_calls, 0.0), 690.0))
    log_guard = math.log(4.0) + math.log(2.0 / (eta - eps)) / spread * log_base

    survivors: list[tuple[int, ...]] = [()]
    for m in range(1, n + 1):
        new: list[tuple[int, ...]] = []
        for prefix in survivors:
            for idx in range(len(cls.site_states[m - 1])):
                member = prefix + (idx,)
                est = estimate_fidelity(o, m, _member_params(cls, member),
                                        eps / 2.0, delta_call)
                if est >= eta - eps / 2.0:
                    if math.log(len(new) + 1.0) > log_guard:
                        raise PromiseViolationError(
                            f"prefix-{m} survivor count exceeded "
                            f"{math.exp(min(log_guard, 690.0)):.1f}; the "
                            "class size bound failed, indicating estimation "
                            "failure")
                    new.append(member)
        survivors = sorted(new)
    return set(survivors)
