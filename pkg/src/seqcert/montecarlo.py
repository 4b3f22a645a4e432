"""Reproducible Monte Carlo estimates of validity, coverage and normality.

Replication ``r`` draws from its own Philox stream keyed by
``(master_seed, r)``, so aggregate results do not depend on how the
replications are chunked or spread across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats

from .bounds import gain_asymptotic_params, gap_asymptotic_params
from .core import DomainError, check_probability
from .intervals import ConfidenceLevel, endpoint
from .pvalues import TestKind, log_p, log_p_exact
from .supermartingale import FactorPolicy, PbrClamped, PbrPoint, batch_log_trajectory

CHUNK_REPS = 1000


class ConfigurationError(ValueError):
    """A simulation plan is inconsistent with the requested estimate."""


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Iid:
    theta: float

    def __post_init__(self):
        check_probability("theta", self.theta)

    @property
    def cap(self) -> float:
        return self.theta


@dataclass(frozen=True)
class Drifting:
    """Piecewise-constant success probability.

    ``schedule`` holds ``(first_trial_index, theta)`` pairs; the first pair
    must start at trial 0.
    """

    schedule: tuple[tuple[int, float], ...]

    def __post_init__(self):
        sched = tuple(sorted((int(i), float(t)) for i, t in self.schedule))
        if not sched or sched[0][0] != 0:
            raise DomainError("drifting schedule must start at trial 0")
        for _, t in sched:
            check_probability("theta", t)
        object.__setattr__(self, "schedule", sched)

    @property
    def cap(self) -> float:
        return max(t for _, t in self.schedule)

    def probabilities(self, n: int) -> np.ndarray:
        p = np.empty(n)
        for j, (start, theta) in enumerate(self.schedule):
            stop = self.schedule[j + 1][0] if j + 1 < len(self.schedule) else n
            p[start:stop] = theta
        return p


@dataclass(frozen=True)
class PastDependent:
    """Success probability ``floor + (cap - floor) * f`` where ``f`` is the
    success frequency over the last ``window`` trials (1/2 before any trial).

    With ``cap <= phi`` every path lies in the extended null for ``phi``.
    """

    cap: float
    window: int = 10
    floor: float = 0.05

    def __post_init__(self):
        check_probability("cap", self.cap)
        check_probability("floor", self.floor)
        if self.floor > self.cap:
            raise DomainError("floor must not exceed cap")
        if self.window < 1:
            raise DomainError("window must be positive")


GeneratorSpec = Union[Iid, Drifting, PastDependent]


# ---------------------------------------------------------------------------
# Stopping rules and plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedN:
    n: int

    @property
    def max_n(self) -> int:
        return self.n


@dataclass(frozen=True)
class ThresholdLogT:
    """Stop at the first trial with ``log T >= c``, or at ``max_n``."""

    c: float
    max_n: int


@dataclass(frozen=True)
class MaxOverRun:
    """Run to ``max_n`` and report the running maximum of ``T``."""

    max_n: int


StoppingRule = Union[FixedN, ThresholdLogT, MaxOverRun]


@dataclass(frozen=True)
class ReplicationPlan:
    reps: int
    master_seed: int
    generator: GeneratorSpec
    rule: StoppingRule

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be positive")
        if self.rule.max_n < 1:
            raise DomainError("max_n must be positive")


def replication_rng(master_seed: int, rep: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(rep,))
    return np.random.Generator(np.random.Philox(seq))


def _thread_count() -> int:
    raw = os.environ.get("SEQCERT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


@dataclass
class PathBatch:
    bits: np.ndarray
    # largest conditional success probability along each path
    theta_max: np.ndarray


def simulate_paths(generator: GeneratorSpec, n: int, seed: int, reps: Sequence[int]) -> PathBatch:
    u = np.stack([replication_rng(seed, r).random(n) for r in reps]) if len(reps) else np.empty((0, n))
    if isinstance(generator, Iid):
        return PathBatch((u < generator.theta).astype(np.int8), np.full(len(reps), generator.theta))
    if isinstance(generator, Drifting):
        p = generator.probabilities(n)
        return PathBatch((u < p).astype(np.int8), np.full(len(reps), p.max()))
    bits = np.zeros(u.shape, dtype=np.int8)
    theta_max = np.zeros(len(reps))
    span = generator.cap - generator.floor
    for i in range(n):
        lo = max(0, i - generator.window)
        freq = bits[:, lo:i].mean(axis=1) if i > lo else np.full(len(reps), 0.5)
        p = generator.floor + span * freq
        if np.any(p > generator.cap):
            raise AssertionError("conditional probability above cap")
        bits[:, i] = u[:, i] < p
        np.maximum(theta_max, p, out=theta_max)
    return PathBatch(bits, theta_max)


def _map_chunks(plan: ReplicationPlan, fn: Callable[[PathBatch], np.ndarray]) -> np.ndarray:
    """Apply ``fn`` to each chunk of simulated paths; results in replication order."""
    n = plan.rule.max_n
    chunks = [range(s, min(s + CHUNK_REPS, plan.reps)) for s in range(0, plan.reps, CHUNK_REPS)]

    def work(reps):
        return fn(simulate_paths(plan.generator, n, plan.master_seed, reps))

    threads = _thread_count()
    if threads == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    stderr: float
    reps: int

    @classmethod
    def from_hits(cls, hits: np.ndarray) -> "RateEstimate":
        reps = len(hits)
        rate = float(np.mean(hits))
        return cls(rate, math.sqrt(max(rate * (1.0 - rate), 0.0) / reps), reps)

    def at_most(self, bound: float, z: float = 3.0) -> bool:
        return self.rate <= bound + z * self.stderr

    def at_least(self, bound: float, z: float = 3.0) -> bool:
        return self.rate >= bound - z * self.stderr


def stopped_log_t(log_traj: np.ndarray, rule: StoppingRule) -> np.ndarray:
    """``log T`` at the stopping time (or its running maximum) for each row."""
    if isinstance(rule, FixedN):
        return log_traj[:, rule.n - 1]
    if isinstance(rule, MaxOverRun):
        return np.maximum(log_traj.max(axis=1), 0.0)
    crossed = log_traj >= rule.c
    first = np.where(crossed.any(axis=1), crossed.argmax(axis=1), log_traj.shape[1] - 1)
    return log_traj[np.arange(len(log_traj)), first]


def run_validity(
    plan: ReplicationPlan,
    phi: float,
    level: ConfidenceLevel,
    policy: FactorPolicy | None = None,
) -> RateEstimate:
    """Rejection rate of the supermartingale test when the null holds.

    The default clamped factors are valid for every path in the extended
    null. Unclamped point factors are a supermartingale only when every
    trial has success probability exactly ``phi``, so they are refused
    for any other generator.
    """
    phi = check_probability("phi", phi)
    if plan.generator.cap > phi:
        raise ConfigurationError(f"generator reaches {plan.generator.cap} > phi = {phi}")
    policy = policy or PbrClamped()
    if isinstance(policy, PbrPoint) and plan.generator != Iid(phi):
        raise ConfigurationError("point factors need an i.i.d. generator at theta = phi")
    alpha = level.alpha

    def chunk(batch: PathBatch) -> np.ndarray:
        traj = batch_log_trajectory(batch.bits, phi, policy)
        return stopped_log_t(traj, plan.rule) >= alpha

    return RateEstimate.from_hits(_map_chunks(plan, chunk))


def exact_rejection_thresholds(max_n: int, phi: float, level: ConfidenceLevel) -> np.ndarray:
    """Smallest success count with exact ``p <= a`` after each ``k = 1..max_n`` (``k+1`` if none)."""
    alpha = level.alpha
    out = np.empty(max_n, dtype=np.int64)
    s = 0
    for k in range(1, max_n + 1):
        # the threshold is non-decreasing in k, so the search resumes where it stopped
        while s <= k and float(log_p_exact(k, s, phi)) < alpha:
            s += 1
        out[k - 1] = s
    return out


def run_exact_stopping(plan: ReplicationPlan, phi: float, level: ConfidenceLevel) -> RateEstimate:
    """Rejection rate of the fixed-n exact test when stopped at its first rejection.

    Demonstrates that the exact p-value loses validity under optional stopping.
    """
    phi = check_probability("phi", phi)
    thresholds = exact_rejection_thresholds(plan.rule.max_n, phi, level)

    def chunk(batch: PathBatch) -> np.ndarray:
        return (np.cumsum(batch.bits, axis=1) >= thresholds).any(axis=1)

    return RateEstimate.from_hits(_map_chunks(plan, chunk))


def run_coverage(
    plan: ReplicationPlan,
    kind: TestKind | str,
    level: ConfidenceLevel,
    theta: float | None = None,
) -> RateEstimate:
    """Fraction of replications whose lower endpoint lies at or below the target.

    The target is ``theta`` for an i.i.d. generator and the realised largest
    conditional success probability otherwise.
    """
    if not isinstance(plan.rule, FixedN):
        raise ConfigurationError("coverage needs a fixed number of trials")
    kind = TestKind.parse(kind)
    n = plan.rule.n
    if theta is not None and isinstance(plan.generator, Iid) and theta != plan.generator.theta:
        raise ConfigurationError("theta does not match the generator")
    table = np.array([endpoint(kind, n, k, level).phi_endpoint for k in range(n + 1)])

    def chunk(batch: PathBatch) -> np.ndarray:
        counts = batch.bits.sum(axis=1, dtype=np.int64)
        return table[counts] <= batch.theta_max

    return RateEstimate.from_hits(_map_chunks(plan, chunk))


@dataclass(frozen=True)
class NormalityReport:
    statistic: str
    n: int
    reps: int
    sample_mean: float
    sample_sd: float
    target_sd: float
    ks_stat: float
    samples: np.ndarray = field(repr=False, compare=False)

    @property
    def sd_ratio(self) -> float:
        return self.sample_sd / self.target_sd


NORMALITY_STATISTICS = ("gain", "gap_pbr", "gap_exact")


def run_normality(
    plan: ReplicationPlan,
    kind: TestKind | str,
    phi: float,
    theta: float,
    statistic: str = "gain",
) -> NormalityReport:
    """Scaled fluctuations of the gain per trial or of a log(p) gap.

    ``gain`` gives ``sqrt(n) (G_n - KL(theta | phi))`` for test ``kind``;
    ``gap_pbr`` and ``gap_exact`` give the centred, scaled gap to the
    Chernoff-Hoeffding value (``kind`` is then ignored).
    """
    if not isinstance(plan.generator, Iid) or not isinstance(plan.rule, FixedN):
        raise ConfigurationError("normality needs an i.i.d. generator and fixed n")
    if plan.generator.theta != theta:
        raise ConfigurationError("theta does not match the generator")
    if statistic not in NORMALITY_STATISTICS:
        raise DomainError(f"unknown statistic {statistic!r}")
    kind = TestKind.parse(kind)
    n = plan.rule.n
    root_n = math.sqrt(n)

    if statistic == "gain":
        kl, var = gain_asymptotic_params(theta, phi)

        def transform(k: int) -> float:
            return root_n * (float(log_p(kind, n, k, phi)) / n - kl)
    else:
        params = gap_asymptotic_params(theta, phi)
        which = statistic.split("_")[1]
        params.require(which)
        var = params.var_pbr if which == "pbr" else params.var_exact

        def transform(k: int) -> float:
            ch = float(log_p(TestKind.CHERNOFF_HOEFFDING, n, k, phi))
            if which == "pbr":
                gap = float(log_p(TestKind.PBR, n, k, phi)) - ch
                return root_n * (gap + 0.5 * math.log(n) - params.mean_pbr)
            gap = float(log_p(TestKind.EXACT, n, k, phi)) - ch
            return root_n * (gap - 0.5 * math.log(n) - params.mean_exact)

    counts = _map_chunks(plan, lambda b: b.bits.sum(axis=1, dtype=np.int64))
    cache: dict[int, float] = {}
    for k in np.unique(counts):
        cache[int(k)] = transform(int(k))
    samples = np.array([cache[int(k)] for k in counts])
    target_sd = math.sqrt(var)
    ks = float(stats.kstest(samples, "norm", args=(0.0, target_sd)).statistic) if target_sd > 0 else math.nan
    return NormalityReport(
        statistic=statistic,
        n=n,
        reps=plan.reps,
        sample_mean=float(np.mean(samples)),
        sample_sd=float(np.std(samples, ddof=1)),
        target_sd=target_sd,
        ks_stat=ks,
        samples=samples,
    )
