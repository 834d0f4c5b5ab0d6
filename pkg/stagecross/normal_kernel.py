"""
Standard-normal functions and the overshoot / stage-size kernels.

A stage of length t aimed at a boundary x units away is parametrised by the
upper normal quantile z of the probability of being across the boundary at
the end of the stage:

    (x - mu * t) / sqrt(t) = z

Everything here is a pure function of floats; no state is shared.
"""

import math
import sys

from scipy.special import erfcx, log_ndtr, ndtr, ndtri

from .errors import DomainError

# --- Configuration Constants ---
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LOG_SQRT_2_OVER_PI = math.log(SQRT_2_OVER_PI)
LOG_FLOAT_MAX = math.log(sys.float_info.max)
# Above this z delta is summed from its tail series instead of phi(z) - z * Phi(-z).
DELTA_SERIES_Z = 30.0
DELTA_SERIES_TERMS = 11
# Below this z the tail probability saturates and delta is -z to double precision.
DELTA_LINEAR_Z = -38.0
# erfcx(z / sqrt(2)) is finite and well conditioned for z above this.
HAZARD_ERFCX_Z = -20.0


def phi(z):
    """Standard normal density."""
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


def Phi(z):
    """Standard normal distribution function."""
    return float(ndtr(z))


def z_quantile(p):
    """Upper p-quantile: the z with Phi(-z) = p."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile probability must lie in (0, 1), got {p!r}")
    z = -float(ndtri(p))
    # one Newton step on Phi(-z) - p
    density = phi(z)
    if density > 0.0:
        z += (Phi(-z) - p) / density
    return z


def delta(z):
    """
    Delta(z) = phi(z) - z * Phi(-z), the integral of Phi(-x) over [z, inf).

    Nonnegative and decreasing; behaves like |z| as z -> -inf and like
    phi(z) / z**2 as z -> +inf.
    """
    if z > DELTA_SERIES_Z:
        return _delta_tail(z)
    if z < DELTA_LINEAR_Z:
        return -z
    return max(phi(z) - z * Phi(-z), 0.0)


def _delta_tail(z):
    # phi(z) * sum_k (-1)^k (2k+1)!! / z^(2k+2), assembled in logs so that
    # subnormal results keep their leading digits
    w = 1.0 / (z * z)
    total, term = 0.0, w
    for n in range(1, DELTA_SERIES_TERMS + 1):
        total += term
        term *= -(2 * n + 1) * w
    return math.exp(-0.5 * z * z - LOG_SQRT_2PI + math.log(total))


def log_hazard(z):
    """
    log of phi(z) / (1 - Phi(z)); finite for every real z.

    Uses phi(z) / Phi(-z) = sqrt(2/pi) / erfcx(z / sqrt(2)) wherever erfcx is
    finite, so large positive z keep full relative precision.
    """
    if z > HAZARD_ERFCX_Z:
        return LOG_SQRT_2_OVER_PI - math.log(float(erfcx(z / SQRT2)))
    return -0.5 * z * z - LOG_SQRT_2PI - float(log_ndtr(-z))


def hazard(z):
    """phi(z) / (1 - Phi(z)), strictly increasing from 0 to infinity."""
    if z > HAZARD_ERFCX_Z:
        return SQRT_2_OVER_PI / float(erfcx(z / SQRT2))
    return math.exp(log_hazard(z))


def mills_ratio(z):
    """Phi(-z) / phi(z); infinite once it leaves the float range."""
    if z > HAZARD_ERFCX_Z:
        return float(erfcx(z / SQRT2)) / SQRT_2_OVER_PI
    log_ratio = -log_hazard(z)
    if log_ratio > LOG_FLOAT_MAX:
        return math.inf
    return math.exp(log_ratio)


def _check_stage_args(x, mu):
    if not x > 0.0:
        raise DomainError(f"distance to boundary must be positive, got {x!r}")
    if not mu > 0.0:
        raise DomainError(f"drift must be positive, got {mu!r}")


def stage_size(x, z, mu):
    """
    Stage length t(x, z) solving (x - mu*t)/sqrt(t) = z.

    Works with s = sqrt(t), the positive root of mu*s**2 + z*s - x = 0, using
    the cancellation-free branch for each sign of z.
    """
    _check_stage_args(x, mu)
    root = math.sqrt(z * z + 4.0 * mu * x)
    if z > 0.0:
        s = 2.0 * x / (z + root)
    else:
        s = (root - z) / (2.0 * mu)
    return s * s


def expected_overshoot(x, z, mu):
    """E[X(t) - x; X(t) >= x] for one stage of length t(x, z)."""
    return math.sqrt(stage_size(x, z, mu)) * delta(z)


def truncated_normal_mean(y, lam, sigma):
    """E(Y; Y >= y) for Y ~ Normal(lam, sigma**2)."""
    if not sigma > 0.0:
        raise DomainError(f"standard deviation must be positive, got {sigma!r}")
    w = (y - lam) / sigma
    return sigma * delta(w) + y * Phi(-w)
