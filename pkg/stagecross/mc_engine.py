"""
Monte Carlo simulation of staged Brownian sampling.

Every replication draws from its own random stream, keyed by the master seed
and the replication index, so a batch gives the same numbers whether it runs
in one process or is split across a worker pool.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from . import DEGENERATE_DISTANCE, REPLICATION_CAP, STAGE_CAP
from .critical_bands import INTERIOR as BAND_INTERIOR
from .critical_bands import F_iterate, classify, stage_count_limit
from .errors import DomainError, PreconditionError, StageCapExceeded
from .samplers import INTERIOR, initial_state, next_stage

logger = logging.getLogger(__name__)

# --- Configuration Constants ---
RISK_COLUMNS = [
    "sampler", "mu", "a", "h_spec", "reps", "seed",
    "mean_excess_time", "se_excess_time", "mean_stages", "se_stages",
    "risk", "se_risk", "mean_overshoot",
]
CHUNKS_PER_WORKER = 8


def replication_rng(seed, *key):
    """Independent generator for the stream identified by (seed, *key)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(sequence))


@dataclass(frozen=True)
class Trajectory:
    """One simulated run: stage lengths, end-of-stage values and the boundary."""

    lengths: tuple
    end_values: tuple
    a: float
    z_values: tuple = ()

    @property
    def total_time(self):
        return math.fsum(self.lengths)

    @property
    def stage_count(self):
        return len(self.lengths)

    @property
    def final_value(self):
        return self.end_values[-1]

    @property
    def overshoot(self):
        return max(self.final_value - self.a, 0.0)

    def remaining_after(self, k):
        """a - X_k, the distance left after k stages (k = 0 gives a)."""
        if k == 0:
            return self.a
        return self.a - self.end_values[k - 1]


def simulate_trajectory(spec, a, rng):
    """Run `spec` against boundary a, drawing increments Normal(mu t, t) from `rng`."""
    if not a > 0.0:
        raise DomainError(f"boundary must be positive, got {a!r}")
    if a <= DEGENERATE_DISTANCE:
        return Trajectory((0.0,), (a,), a, (None,))

    lengths, values, zs = [], [], []
    state = initial_state(spec, a)
    x = 0.0
    while True:
        if len(lengths) >= STAGE_CAP:
            raise StageCapExceeded(
                f"{spec.label} used more than {STAGE_CAP} stages at a = {a!r}"
            )
        length, state = next_stage(spec, state)
        x += spec.mu * length + math.sqrt(length) * rng.standard_normal()
        lengths.append(length)
        values.append(x)
        zs.append(state.last_z)
        if a - x <= DEGENERATE_DISTANCE:
            break
        state = state.moved_to(a - x)
    return Trajectory(tuple(lengths), tuple(values), a, tuple(zs))


@dataclass(frozen=True)
class ReplicationBatch:
    """Per-replication summaries in replication-index order."""

    total_time: np.ndarray
    stage_count: np.ndarray
    final_value: np.ndarray
    remaining_at_check: Optional[np.ndarray] = None

    @property
    def reps(self):
        return len(self.total_time)


def _simulate_chunk(spec, a, seed, check_stage, start, stop):
    size = stop - start
    total_time = np.empty(size)
    stage_count = np.empty(size, dtype=np.int64)
    final_value = np.empty(size)
    remaining = np.full(size, np.nan) if check_stage is not None else None
    for offset, index in enumerate(range(start, stop)):
        path = simulate_trajectory(spec, a, replication_rng(seed, index))
        total_time[offset] = path.total_time
        stage_count[offset] = path.stage_count
        final_value[offset] = path.final_value
        if remaining is not None and path.stage_count > check_stage:
            remaining[offset] = path.remaining_after(check_stage)
    return total_time, stage_count, final_value, remaining


def _chunk_bounds(reps, workers):
    size = max(1, math.ceil(reps / (max(1, workers) * CHUNKS_PER_WORKER)))
    return [(start, min(start + size, reps)) for start in range(0, reps, size)]


def run_chunked(worker, args, reps, workers=1, progress=False, desc="Replications"):
    """
    Apply `worker(*args, start, stop)` over index chunks of range(reps) and
    return the per-chunk results in index order.
    """
    bounds = _chunk_bounds(reps, workers)
    logger.debug("dispatching %d replications in %d chunks to %d worker(s)", reps, len(bounds), workers)
    results = []
    with tqdm(total=reps, desc=desc, unit="rep", ascii=True, leave=False,
              disable=not progress) as pbar:
        if workers <= 1:
            for start, stop in bounds:
                results.append(worker(*args, start, stop))
                pbar.update(stop - start)
        else:
            tasks = (delayed(worker)(*args, start, stop) for start, stop in bounds)
            chunks = Parallel(n_jobs=workers, return_as="generator")(tasks)
            for chunk, (start, stop) in zip(chunks, bounds):
                results.append(chunk)
                pbar.update(stop - start)
    return results


def _check_reps(reps):
    if not 2 <= reps <= REPLICATION_CAP:
        raise DomainError(f"reps must lie in [2, {REPLICATION_CAP}], got {reps!r}")


def run_replications(spec, a, reps, seed, workers=1, check_stage=None, progress=False):
    """Simulate `reps` independent runs of `spec` against a."""
    _check_reps(reps)
    chunks = run_chunked(_simulate_chunk, (spec, a, seed, check_stage), reps, workers, progress)
    total_time, stage_count, final_value, remaining = zip(*chunks)
    return ReplicationBatch(
        total_time=np.concatenate(total_time),
        stage_count=np.concatenate(stage_count),
        final_value=np.concatenate(final_value),
        remaining_at_check=None if check_stage is None else np.concatenate(remaining),
    )


def mean_and_se(values):
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise DomainError("need at least two replications for a standard error")
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass(frozen=True)
class RiskEstimate:
    """Sample means and standard errors of excess time, stage count and risk."""

    sampler: str
    mu: float
    a: float
    h_spec: str
    reps: int
    seed: int
    mean_excess_time: float
    se_excess_time: float
    mean_stages: float
    se_stages: float
    risk: float
    se_risk: float
    mean_overshoot: float
    h_at_a: float = 0.0
    wald_gap: float = 0.0
    se_wald_gap: float = 0.0

    def to_row(self):
        return {column: getattr(self, column) for column in RISK_COLUMNS}


def summarize_batch(spec, a, h, batch, seed):
    """RiskEstimate of a ReplicationBatch; risk SE comes from the per-replication scalar."""
    h_at_a = h(a) if h is not None else 0.0
    excess = batch.total_time - a / spec.mu
    mean_excess, se_excess = mean_and_se(excess)
    mean_stages, se_stages = mean_and_se(batch.stage_count)
    _, se_risk = mean_and_se(excess + h_at_a * batch.stage_count)
    wald_gap, se_wald = mean_and_se(batch.final_value - spec.mu * batch.total_time)
    return RiskEstimate(
        sampler=spec.label,
        mu=spec.mu,
        a=a,
        h_spec="" if h is None else h.to_string(),
        reps=batch.reps,
        seed=seed,
        mean_excess_time=mean_excess,
        se_excess_time=se_excess,
        mean_stages=mean_stages,
        se_stages=se_stages,
        risk=mean_excess + h_at_a * mean_stages,
        se_risk=se_risk,
        mean_overshoot=float(np.mean(np.maximum(batch.final_value - a, 0.0))),
        h_at_a=h_at_a,
        wald_gap=wald_gap,
        se_wald_gap=se_wald,
    )


def estimate_risk(spec, a, h, reps, seed, workers=1, progress=False):
    """Estimate E(T - a/mu), EM and the risk E(T - a/mu) + h(a) EM over `reps` runs."""
    batch = run_replications(spec, a, reps, seed, workers=workers, progress=progress)
    estimate = summarize_batch(spec, a, h, batch, seed)
    logger.info(
        "%s a=%g: EM=%.4f (se %.4f), risk=%.5g (se %.3g)",
        spec.label, a, estimate.mean_stages, estimate.se_stages, estimate.risk, estimate.se_risk,
    )
    return estimate


def stage_count_limit_check(spec, a_grid, h, reps, seed, workers=1, progress=False):
    """Empirical EM across an increasing a-grid next to its large-a limit."""
    a_grid = [float(a) for a in a_grid]
    if any(b <= a for a, b in zip(a_grid, a_grid[1:])):
        raise DomainError("a-grid must be strictly increasing")
    if spec.family == INTERIOR:
        band = classify(h if h is not None else spec.h)
        if band.kind != BAND_INTERIOR or band.m != spec.m:
            raise PreconditionError(
                f"interior sampler with m = {spec.m} does not match h in {band.kind} band {band.m}"
            )
    limit = stage_count_limit(spec.family, m=spec.m, z=spec.z)
    rows = []
    for a in a_grid:
        estimate = estimate_risk(spec, a, h, reps, seed, workers=workers, progress=progress)
        rows.append({
            "a": a,
            "mean_stages": estimate.mean_stages,
            "se_stages": estimate.se_stages,
            "limit": limit,
            "abs_gap": abs(estimate.mean_stages - limit) if limit is not None else float("nan"),
        })
    return pd.DataFrame(rows, columns=["a", "mean_stages", "se_stages", "limit", "abs_gap"])


def schedule_threshold(h, k, a, mu, eps):
    """(1 - eps) (1/mu)^(1 - 2^-k) F_h^(k)(a): the undershoot a schedule must keep at stage k."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return (1.0 - eps) * (1.0 / mu) ** (1.0 - 0.5 ** k) * F_iterate(h, k, a)


@dataclass(frozen=True)
class ScheduleReport:
    """Share of runs whose undershoot after k stages stays above the threshold."""

    k: int
    a: float
    eps: float
    threshold: float
    reps: int
    frequency: float
    se_frequency: float
    early_fraction: float


def schedule_check(spec, a, h, k, eps, reps, seed, workers=1, progress=False):
    """
    Frequency of {a - X_k >= schedule_threshold} over `reps` runs; runs that
    crossed at or before stage k count as satisfying and are reported in
    `early_fraction`.
    """
    if k < 0:
        raise DomainError(f"stage index must be >= 0, got {k!r}")
    threshold = schedule_threshold(h, k, a, spec.mu, eps)
    batch = run_replications(spec, a, reps, seed, workers=workers, check_stage=k, progress=progress)
    early = batch.stage_count <= k
    satisfied = early | (np.nan_to_num(batch.remaining_at_check, nan=-np.inf) >= threshold)
    frequency, se = mean_and_se(satisfied.astype(float))
    return ScheduleReport(
        k=k, a=a, eps=eps, threshold=threshold, reps=batch.reps,
        frequency=frequency, se_frequency=se, early_fraction=float(np.mean(early)),
    )
