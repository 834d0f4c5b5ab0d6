"""
Critical functions, band constants and the band classification of a
cost-ratio function.

The cost ratio h = d/c (cost per stage over cost per unit time) decides how
many stages an efficient sampler uses.  The critical functions

    h_m(x) = x**(2**-m) * (log x)**(1/2 - 2**-m),    h_0(x) = x

separate the bands: h in band m (interior) when h_m << h << h_(m-1), and on
the boundary between bands m and m+1 when h / h_m tends to a finite positive
limit Q.  Cost ratios are restricted to the family c * x**p * log(x+e)**q,
which makes the classification an exact comparison of exponent pairs.
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from . import M_STAR_CAP
from .errors import (
    ConvergenceError,
    DomainError,
    NoFiniteBandError,
    PreconditionError,
)
from .normal_kernel import Phi, delta, hazard, log_hazard

logger = logging.getLogger(__name__)

INTERIOR = "interior"
BOUNDARY = "boundary"

EXPONENT_TOL = 1e-12

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
HSPEC_PATTERN = re.compile(
    rf"^\s*({_NUMBER})\s*\*\s*x\s*\^\s*({_NUMBER})\s*\*\s*log\s*\^\s*({_NUMBER})\s*$"
)


def _fmt(value):
    return "%.12g" % value


@dataclass(frozen=True)
class HSpec:
    """Cost-ratio function h(x) = coeff * x**x_power * log(x + e)**log_power."""

    coeff: float
    x_power: float = 0.0
    log_power: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.coeff) and self.coeff > 0.0):
            raise DomainError(f"h coefficient must be positive and finite, got {self.coeff!r}")
        if not (math.isfinite(self.x_power) and math.isfinite(self.log_power)):
            raise DomainError("h exponents must be finite")

    @classmethod
    def parse(cls, text):
        """Parse the 'c*x^p*log^q' form, e.g. '1*x^0.5*log^0'."""
        match = HSPEC_PATTERN.match(str(text))
        if match is None:
            raise DomainError(f"cannot parse h spec {text!r}; expected 'c*x^p*log^q'")
        return cls(*(float(g) for g in match.groups()))

    @classmethod
    def constant(cls, value):
        return cls(float(value), 0.0, 0.0)

    def to_string(self):
        return f"{_fmt(self.coeff)}*x^{_fmt(self.x_power)}*log^{_fmt(self.log_power)}"

    def __str__(self):
        return self.to_string()

    def __call__(self, x):
        if not x > 0.0:
            raise DomainError(f"h is defined for x > 0, got {x!r}")
        value = self.coeff
        if self.x_power != 0.0:
            value *= x ** self.x_power
        if self.log_power != 0.0:
            value *= math.log(x + math.e) ** self.log_power
        return value


@dataclass(frozen=True)
class BandClass:
    """Band membership of a cost ratio: interior of band m, or boundary with limit Q."""

    m: int
    kind: str
    Q: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (INTERIOR, BOUNDARY):
            raise DomainError(f"unknown band kind {self.kind!r}")
        if self.kind == BOUNDARY and not (self.Q is not None and 0.0 < self.Q < math.inf):
            raise DomainError("boundary band requires a finite positive Q")
        if self.kind == INTERIOR and self.Q is not None:
            raise DomainError("interior band carries no Q")


def h_m(m, x):
    """Critical function h_m(x); h_0(x) = x."""
    if m < 0:
        raise DomainError(f"critical function index must be >= 0, got {m!r}")
    if not x > 1.0:
        raise DomainError(f"critical functions need x > 1, got {x!r}")
    if m == 0:
        return float(x)
    e = 0.5 ** m
    return x ** e * math.log(x) ** (0.5 - e)


def C_km(k, m):
    """Closed-form undershoot constant C_k^m, 1 <= k <= m."""
    if not 1 <= k <= m:
        raise DomainError(f"C_k^m needs 1 <= k <= m, got k={k!r}, m={m!r}")
    tail = 0.5 ** (m - 1)
    value = 1.0
    for i in range(1, k):
        value *= (0.5 ** (k - 1 - i) - tail) ** (0.5 ** (i + 1))
    return value


def C_km_recurrence(k, m):
    """C_k^m from C_1^m = 1 and C_(j+1)^m = sqrt(C_j^m) * [2**-(j-1) - 2**-(m-1)]**(1/4)."""
    if not 1 <= k <= m:
        raise DomainError(f"C_k^m needs 1 <= k <= m, got k={k!r}, m={m!r}")
    tail = 0.5 ** (m - 1)
    value = 1.0
    for j in range(1, k):
        value = math.sqrt(value) * (0.5 ** (j - 1) - tail) ** 0.25
    return value


def kappa(m, mu):
    """Band constant kappa_m(mu) = mu**(-2 + 2**-m) * C_m^m."""
    if m < 1:
        raise DomainError(f"kappa needs m >= 1, got {m!r}")
    if not mu > 0.0:
        raise DomainError(f"drift must be positive, got {mu!r}")
    return mu ** (-2.0 + 0.5 ** m) * C_km(m, m)


def band_transfer_ratio(m, mu, x):
    """
    kappa_m h_m(sqrt((1 - 2**-m)/mu * x log x)) / (kappa_(m+1) h_(m+1)(x)).

    Tends to 1 as x grows; for m = 1 it is identically 1.
    """
    y = math.sqrt((1.0 - 0.5 ** m) / mu * x * math.log(x))
    return kappa(m, mu) * h_m(m, y) / (kappa(m + 1, mu) * h_m(m + 1, x))


def F_iterate(h, k, x):
    """
    k-fold iterate of F_y(v) = sqrt(v * log(v / y**2)) started at x, with
    y = h(x) held fixed (h itself is not iterated).
    """
    if k < 0:
        raise DomainError(f"iterate count must be >= 0, got {k!r}")
    y = h(x)
    floor = y * y
    value = float(x)
    for index in range(k):
        if not value > floor:
            raise DomainError(
                f"F iterate {index} = {value!r} is not above h(x)^2 = {floor!r}; "
                f"x = {x!r} is below the asymptotic regime for k = {k}",
                iterate_index=index,
            )
        value = math.sqrt(value * math.log(value / floor))
    return value


def classify(h):
    """Band of h by lexicographic comparison of (x_power, log_power) with the h_m pairs."""
    p, q = h.x_power, h.log_power
    if not 0.0 < p < 1.0:
        raise NoFiniteBandError(f"h = {h} has no finite band (x power {p!r} outside (0, 1))")
    for m in range(1, M_STAR_CAP + 1):
        edge_p = 0.5 ** m
        edge_q = 0.5 - edge_p
        if math.isclose(p, edge_p, rel_tol=0.0, abs_tol=EXPONENT_TOL):
            if math.isclose(q, edge_q, rel_tol=0.0, abs_tol=EXPONENT_TOL):
                return BandClass(m, BOUNDARY, h.coeff)
            if q > edge_q:
                return BandClass(m, INTERIOR)
            return BandClass(m + 1, INTERIOR)
        if p > edge_p:
            return BandClass(m, INTERIOR)
    raise NoFiniteBandError(f"h = {h} has no finite band (x power {p!r} below 2^-{M_STAR_CAP})")


def z_star_from_target(target):
    """The unique z with hazard(z) = target, target > 0."""
    if not (target > 0.0 and math.isfinite(target)):
        raise DomainError(f"hazard target must be positive and finite, got {target!r}")
    log_target = math.log(target)

    def gap(z):
        return log_hazard(z) - log_target

    lo, hi = -10.0, 10.0
    while gap(lo) > 0.0:
        lo *= 2.0
    while gap(hi) < 0.0:
        hi *= 2.0
    logger.debug("z* bracket [%g, %g] for hazard target %g", lo, hi, target)
    return brentq(gap, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)


def z_star(m, mu, h):
    """Upper quantile z* of the boundary sampler that is optimal for h on boundary m."""
    band = classify(h)
    if band.kind != BOUNDARY or band.m != m:
        raise PreconditionError(
            f"z* needs h on the boundary of band {m}; h = {h} is {band.kind} of band {band.m}"
        )
    return z_star_from_target(kappa(m, mu) / band.Q)


def m_star(mu, a, h_ratio):
    """Smallest m >= 1 with kappa_m(mu) * h_m(a) <= h_ratio."""
    if not mu > 0.0:
        raise DomainError(f"drift must be positive, got {mu!r}")
    if not a > 1.0:
        raise DomainError(f"boundary must exceed 1, got {a!r}")
    if not h_ratio > 0.0:
        raise DomainError(f"cost ratio must be positive, got {h_ratio!r}")
    for m in range(1, M_STAR_CAP + 1):
        if kappa(m, mu) * h_m(m, a) <= h_ratio:
            return m
    raise ConvergenceError(
        f"no stage count up to {M_STAR_CAP} fits cost ratio {h_ratio!r} at a = {a!r}"
    )


def risk_coefficient(m, kind, z_star=None):
    """First-order risk of the optimal sampler in units of h(a)."""
    kind = getattr(kind, "kind", kind)
    if kind == INTERIOR:
        if z_star is not None:
            raise PreconditionError("interior band takes no z*")
        return float(m)
    if kind == BOUNDARY:
        if z_star is None:
            raise PreconditionError("boundary band needs z*")
        return m + Phi(z_star) + delta(z_star) * hazard(z_star)
    raise DomainError(f"unknown band kind {kind!r}")


def asymptotic_optimal_risk(m, kind, z_star, h_at_a):
    return risk_coefficient(m, kind, z_star) * h_at_a


def boundary_excess_bound(m, z, mu, a):
    """Delta(z) * kappa_m(mu) * h_m(a): first-order bound on E(T - a/mu) for the boundary sampler."""
    return delta(z) * kappa(m, mu) * h_m(m, a)


def stage_count_limit(family, m=None, z=None):
    """Large-a limit of the expected stage count, or None when there is none."""
    if family == "interior":
        return float(m)
    if family == "boundary":
        return m + Phi(z)
    if family == "geometric":
        return 1.0 / Phi(-z)
    return None
