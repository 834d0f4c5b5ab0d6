"""
Stage-size policies for sampling a drifted Brownian motion X(t) (drift mu,
unit variance) in stages until it is across a boundary a.

Families
--------
geometric    every stage is t(remaining, z) with z frozen, so each stage
             crosses with probability Phi(-z).
interior     the m-level sampler for cost ratios inside band m: levels m..2
             take one stage each aimed at z = sqrt(log(x / h(x)^2 + 1));
             each descent replaces h by h o f^-1; level 1 is geometric with
             z = zeta(x) frozen at the level's starting distance.
boundary     the m-level sampler for cost ratios on the boundary of band m:
             levels m..2 aim at z = sqrt((1 - 2^-(level-1)) log(x + 1)),
             level 1 takes one stage at the given z, then geometric clean-up
             with z = nu(x) frozen.
fixed_group  constant stage length.

A sampler is driven through explicit values: `initial_state` builds the
state for a boundary a, `next_stage` maps (spec, state) to the next stage
length and the successor state, and the caller moves the state to the new
remaining distance once the stage has been observed.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from scipy.optimize import brentq

from . import DEGENERATE_DISTANCE
from .critical_bands import HSpec
from .errors import ConvergenceError, DomainError, PreconditionError
from .normal_kernel import Phi, delta, expected_overshoot, phi, stage_size

logger = logging.getLogger(__name__)

# --- Configuration Constants ---
GEOMETRIC = "geometric"
INTERIOR = "interior"
BOUNDARY = "boundary"
FIXED_GROUP = "fixed_group"
FAMILIES = (GEOMETRIC, INTERIOR, BOUNDARY, FIXED_GROUP)

BOUND_MAX_TERMS = 10**4
F_INVERSE_RTOL = 1e-13


@dataclass(frozen=True)
class SamplerSpec:
    """Which sampler family, its parameters, and the drift it is tuned for."""

    family: str
    mu: float
    z: Optional[float] = None
    m: Optional[int] = None
    h: Optional[HSpec] = None
    group: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown sampler family {self.family!r}; expected one of {FAMILIES}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise DomainError(f"drift must be positive and finite, got {self.mu!r}")
        if self.family in (GEOMETRIC, BOUNDARY) and (self.z is None or not math.isfinite(self.z)):
            raise DomainError(f"{self.family} sampler needs a finite z")
        if self.family in (INTERIOR, BOUNDARY) and (self.m is None or int(self.m) != self.m or self.m < 1):
            raise DomainError(f"{self.family} sampler needs an integer m >= 1, got {self.m!r}")
        if self.family == INTERIOR and self.h is None:
            raise DomainError("interior sampler needs a cost-ratio function h")
        if self.family == FIXED_GROUP and not (self.group is not None and self.group > 0.0):
            raise DomainError(f"fixed_group sampler needs a positive group size, got {self.group!r}")

    @classmethod
    def geometric(cls, z, mu):
        return cls(GEOMETRIC, mu, z=z)

    @classmethod
    def interior(cls, m, h, mu):
        return cls(INTERIOR, mu, m=m, h=h)

    @classmethod
    def boundary(cls, m, z, mu):
        return cls(BOUNDARY, mu, z=z, m=m)

    @classmethod
    def fixed_group(cls, group, mu):
        return cls(FIXED_GROUP, mu, group=group)

    @property
    def label(self):
        if self.family == GEOMETRIC:
            return f"geometric(z={self.z:g})"
        if self.family == INTERIOR:
            return f"interior(m={self.m},h={self.h})"
        if self.family == BOUNDARY:
            return f"boundary(m={self.m},z={self.z:g})"
        return f"fixed_group({self.group:g})"

    def to_dict(self):
        out = {"family": self.family}
        if self.z is not None:
            out["z"] = self.z
        if self.m is not None:
            out["m"] = self.m
        if self.h is not None:
            out["h"] = self.h.to_string()
        if self.group is not None:
            out["group"] = self.group
        out["mu"] = self.mu
        return out

    @classmethod
    def from_dict(cls, data):
        known = {"family", "z", "m", "h", "group", "mu"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown sampler keys: {sorted(unknown)}")
        if "family" not in data or "mu" not in data:
            raise DomainError("sampler spec needs 'family' and 'mu'")
        h = data.get("h")
        return cls(
            family=data["family"],
            mu=float(data["mu"]),
            z=None if data.get("z") is None else float(data["z"]),
            m=None if data.get("m") is None else int(data["m"]),
            h=None if h is None else (h if isinstance(h, HSpec) else HSpec.parse(h)),
            group=None if data.get("group") is None else float(data["group"]),
        )


@dataclass(frozen=True)
class SamplerState:
    """
    Position of one run inside its sampler.

    `level` counts the planned levels still to go (interior: m..1; boundary:
    m..1, then 0 for geometric clean-up); `frozen_z` is the z of the current
    geometric phase once chosen; `last_z` is the z the last emitted stage
    was aimed at (None for fixed groups).
    """

    remaining: float
    stage_index: int = 0
    level: int = 0
    frozen_z: Optional[float] = None
    last_z: Optional[float] = field(default=None, compare=False)

    @property
    def active(self):
        return self.remaining > DEGENERATE_DISTANCE

    def moved_to(self, remaining):
        return replace(self, remaining=remaining)


def initial_state(spec, a):
    """State of `spec` at the start of a run aimed at a boundary a units away."""
    if spec.family == GEOMETRIC:
        return SamplerState(remaining=a, frozen_z=spec.z)
    if spec.family in (INTERIOR, BOUNDARY):
        return SamplerState(remaining=a, level=int(spec.m))
    return SamplerState(remaining=a)


def f_forward(x, mu):
    """f(x) = (6 / sqrt(mu)) * sqrt(x * log(x + 1)); strictly increasing from f(0) = 0."""
    if x < 0.0:
        raise DomainError(f"f is defined for x >= 0, got {x!r}")
    return (6.0 / math.sqrt(mu)) * math.sqrt(x * math.log1p(x))


def f_inverse(y, mu):
    """Functional inverse of f_forward, to relative tolerance ~1e-13."""
    if y < 0.0:
        raise DomainError(f"f inverse is defined for y >= 0, got {y!r}")
    if y == 0.0:
        return 0.0
    hi = 1.0
    while f_forward(hi, mu) < y:
        hi *= 2.0
    return brentq(lambda x: f_forward(x, mu) - y, 0.0, hi,
                  xtol=1e-300, rtol=F_INVERSE_RTOL, maxiter=500)


@dataclass(frozen=True)
class ComposedH:
    """h o f^-1 o ... o f^-1 with `depth` inverse applications."""

    base: HSpec
    depth: int
    mu: float

    def __call__(self, x):
        if self.base.x_power == 0.0 and self.base.log_power == 0.0:
            return self.base.coeff
        for _ in range(self.depth):
            x = f_inverse(x, self.mu)
        return self.base(x)


def zeta(x, h_value):
    """-min(sqrt(h) / x**(1/4), x**(1/7)): the frozen z of the interior sampler's last level."""
    return -min(math.sqrt(h_value) / x ** 0.25, x ** (1.0 / 7.0))


def nu(x):
    """-sqrt(log(x + 1)): the frozen z of the boundary sampler's clean-up phase."""
    return -math.sqrt(math.log1p(x))


def _interior_z(spec, state):
    x = state.remaining
    if state.level > 1:
        h_value = ComposedH(spec.h, spec.m - state.level, spec.mu)(x)
        return math.sqrt(math.log(x / (h_value * h_value) + 1.0)), state.level - 1, None
    if state.frozen_z is None:
        h_value = ComposedH(spec.h, spec.m - 1, spec.mu)(x)
        z = zeta(x, h_value)
        return z, 1, z
    return state.frozen_z, 1, state.frozen_z


def _boundary_z(spec, state):
    x = state.remaining
    if state.level > 1:
        z = math.sqrt((1.0 - 0.5 ** (state.level - 1)) * math.log1p(x))
        return z, state.level - 1, None
    if state.level == 1:
        return spec.z, 0, None
    z = state.frozen_z if state.frozen_z is not None else nu(x)
    return z, 0, z


def next_stage(spec, state):
    """Length of the next stage and the successor state; pure in (spec, state)."""
    if not state.active:
        raise PreconditionError(
            f"next_stage called on an inactive state (remaining = {state.remaining!r})"
        )
    if spec.family == FIXED_GROUP:
        return spec.group, replace(state, stage_index=state.stage_index + 1, last_z=None)
    if spec.family == GEOMETRIC:
        z, level, frozen = spec.z, 0, spec.z
    elif spec.family == INTERIOR:
        z, level, frozen = _interior_z(spec, state)
    else:
        z, level, frozen = _boundary_z(spec, state)
    length = stage_size(state.remaining, z, spec.mu)
    new_state = replace(state, stage_index=state.stage_index + 1, level=level,
                        frozen_z=frozen, last_z=z)
    return length, new_state


def g_map(x, z, mu):
    """g(x) = Delta(-z) / (2 mu q) * (sqrt(4 x mu + z^2) - z), q = Phi(z)."""
    return delta(-z) * math.sqrt(stage_size(x, z, mu)) / Phi(z)


def geometric_fixed_point(z, mu):
    """The unique positive fixed point of g: Delta(-z) phi(z) / (mu q^2)."""
    q = Phi(z)
    return delta(-z) * phi(z) / (mu * q * q)


def geometric_time_bound(a, z, mu, tol=1e-12, max_terms=BOUND_MAX_TERMS):
    """
    Upper bound on E(T) - a/mu for geometric sampling at z.

    z >= 0:  q Delta(z) / (mu Delta(-z)) g(a) + (1/mu) sum_{k>=2} g^(k)(a) q^k
    z <= 0:  q Delta(z) / (mu Delta(-z)) sum_{k>=1} g^(k)(a) q^(k-1)

    with q = Phi(z) and g^(k) the k-th iterate of g_map.  The series stops
    once a term drops below tol times the running sum.
    """
    if not a > 0.0:
        raise DomainError(f"boundary must be positive, got {a!r}")
    q = Phi(z)
    if q == 0.0:
        return expected_overshoot(a, z, mu) / mu
    lead = q * delta(z) / (mu * delta(-z))
    x = g_map(a, z, mu)
    total = lead * x
    if z >= 0.0:
        weight, scale = q, 1.0 / mu
    else:
        weight, scale = 1.0, lead
    for k in range(2, max_terms + 1):
        x = g_map(x, z, mu)
        weight *= q
        term = scale * x * weight
        total += term
        if term <= tol * total:
            logger.debug("time bound series converged after %d terms", k)
            return total
    raise ConvergenceError(
        f"time bound series for z = {z!r}, a = {a!r} did not converge in {max_terms} terms"
    )


def overshoot_order(a, z):
    """|z| sqrt(a): the order of the expected overshoot of geometric sampling as z -> -inf."""
    return abs(z) * math.sqrt(a)
