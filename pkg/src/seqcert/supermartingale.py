"""Streaming test-supermartingale engine for Bernoulli trials.

The running product ``T_k`` is kept as ``log T_k``.  The factor applied to
trial ``k+1`` depends only on the state after trial ``k``, so the engine can
be fed outcomes one at a time with no look-ahead.

Three factor policies are supported:

``PbrPoint``
    add-one smoothed PBR factors; a martingale under Bernoulli(phi).
``PbrClamped``
    same factors, replaced by 1 whenever the smoothed estimate is below phi;
    a supermartingale for every theta <= phi.
``TrainedSplit(m)``
    factor 1 for the first ``m`` trials, then a single factor frozen from the
    training frequency (and set to 1 if that frequency is below phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Union

import numpy as np

from .core import (
    DegenerateTraining,
    DomainError,
    LogPValue,
    TrialSequence,
    check_probability,
)
from .pvalues import log_p_pbr_point


@dataclass(frozen=True)
class PbrPoint:
    pass


@dataclass(frozen=True)
class PbrClamped:
    pass


@dataclass(frozen=True)
class TrainedSplit:
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise DomainError(f"training size must be >= 0, got {self.m}")


FactorPolicy = Union[PbrPoint, PbrClamped, TrainedSplit]


@dataclass(frozen=True)
class TildeTheta:
    k: int
    s_k: int

    @property
    def value(self) -> float:
        return (self.s_k + 1.0) / (self.k + 2.0)


def pbr_test_factor(tilde_theta: float, phi: float, outcome: int) -> float:
    tilde_theta = check_probability("tilde_theta", tilde_theta)
    phi = check_probability("phi", phi)
    if outcome == 1:
        return tilde_theta / phi
    if outcome == 0:
        return (1.0 - tilde_theta) / (1.0 - phi)
    raise DomainError(f"outcome must be 0 or 1, got {outcome!r}")


def _log_factor(estimate: float, phi: float, outcome: int) -> float:
    if outcome:
        return math.log(estimate) - math.log(phi)
    return math.log1p(-estimate) - math.log1p(-phi)


@dataclass(frozen=True)
class SupermartingaleState:
    phi: float
    policy: FactorPolicy = PbrPoint()
    k: int = 0
    s_k: int = 0
    log_t: float = 0.0
    # includes T_0 = 1, so never negative
    log_t_max: float = 0.0
    # successes in the training block, recorded once k reaches m
    s_train: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", check_probability("phi", self.phi))

    @property
    def tilde_theta(self) -> TildeTheta:
        return TildeTheta(self.k, self.s_k)

    @property
    def train_estimate(self) -> float | None:
        if not isinstance(self.policy, TrainedSplit) or self.s_train is None:
            return None
        return self.s_train / self.policy.m

    def log_factor(self, outcome: int) -> float:
        """Log of the factor that ``step(outcome)`` would apply."""
        policy, phi = self.policy, self.phi
        if isinstance(policy, PbrPoint):
            return _log_factor(self.tilde_theta.value, phi, outcome)
        if isinstance(policy, PbrClamped):
            est = self.tilde_theta.value
            return 0.0 if est < phi else _log_factor(est, phi, outcome)
        if self.k < policy.m:
            return 0.0
        est = self.s_train / policy.m
        if est in (0.0, 1.0):
            raise DegenerateTraining(
                f"training estimate is {est} after {policy.m} trials"
            )
        return 0.0 if phi > est else _log_factor(est, phi, outcome)

    def step(self, outcome: int) -> "SupermartingaleState":
        if outcome not in (0, 1):
            raise DomainError(f"outcome must be 0 or 1, got {outcome!r}")
        log_t = self.log_t + self.log_factor(outcome)
        k, s_k = self.k + 1, self.s_k + outcome
        s_train = self.s_train
        if isinstance(self.policy, TrainedSplit) and k == self.policy.m:
            s_train = s_k
        return replace(
            self,
            k=k,
            s_k=s_k,
            log_t=log_t,
            log_t_max=max(self.log_t_max, log_t),
            s_train=s_train,
        )

    @property
    def log_p_final(self) -> LogPValue:
        return LogPValue(self.log_t)

    @property
    def log_p_max(self) -> LogPValue:
        return LogPValue(self.log_t_max)


def initial_state(phi: float, policy: FactorPolicy | None = None) -> SupermartingaleState:
    state = SupermartingaleState(phi=phi, policy=policy or PbrPoint())
    if isinstance(state.policy, TrainedSplit) and state.policy.m == 0:
        raise DomainError("trained split needs at least one training trial")
    return state


def trajectory(
    outcomes: Iterable[int], phi: float, policy: FactorPolicy | None = None
) -> Iterator[SupermartingaleState]:
    """Yield the state after each consumed outcome."""
    state = initial_state(phi, policy)
    for b in outcomes:
        state = state.step(int(b))
        yield state


def run(outcomes: Iterable[int], phi: float, policy: FactorPolicy | None = None) -> SupermartingaleState:
    state = initial_state(phi, policy)
    for b in outcomes:
        state = state.step(int(b))
    return state


def closed_form_check(seq: TrialSequence, phi: float) -> tuple[float, float]:
    """Streaming ``log T_n`` next to the closed form ``-log P0_PBR(S_n/n | phi)``."""
    log_t = run(seq.outcomes, phi, PbrPoint()).log_t
    return log_t, float(log_p_pbr_point(seq.n, seq.successes, phi))


# ---------------------------------------------------------------------------
# Trained-split p-value
# ---------------------------------------------------------------------------


def train_size(n: int, lam: float) -> int:
    """``floor(lam * n)`` clamped to ``[1, n - 1]``."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam!r}")
    if n < 2:
        raise DomainError(f"trained split needs n >= 2, got {n}")
    return min(max(int(math.floor(lam * n)), 1), n - 1)


@dataclass(frozen=True)
class TrainedSplitState:
    lam: float
    n: int
    m: int
    s_train: int
    s_eval: int

    @classmethod
    def from_sequence(cls, seq: TrialSequence, lam: float) -> "TrainedSplitState":
        m = train_size(seq.n, lam)
        return cls(lam, seq.n, m, seq.s(m), seq.successes - seq.s(m))

    @classmethod
    def from_counts(cls, n: int, lam: float, s_train: int, s_eval: int) -> "TrainedSplitState":
        m = train_size(n, lam)
        if not (0 <= s_train <= m and 0 <= s_eval <= n - m):
            raise DomainError("split counts out of range")
        return cls(lam, n, m, s_train, s_eval)

    @property
    def theta_hat_m(self) -> float:
        return self.s_train / self.m

    @property
    def theta_hat_prime(self) -> float:
        return self.s_eval / (self.n - self.m)

    @property
    def theta_hat(self) -> float:
        return (self.s_train + self.s_eval) / self.n

    def check_nondegenerate(self) -> None:
        if self.s_train in (0, self.m):
            raise DegenerateTraining(
                f"training estimate is {self.theta_hat_m} after {self.m} trials"
            )

    def log_q(self, phi: float) -> float:
        """``-log Q_lambda(phi)``, the unclamped frozen-factor product."""
        est = self.theta_hat_m
        fails = self.n - self.m - self.s_eval
        out = 0.0
        if self.s_eval:
            out += self.s_eval * (math.log(est) - math.log(phi))
        if fails:
            out += fails * (math.log1p(-est) - math.log1p(-phi))
        return out


def trained_lambda_log_p(seq: TrialSequence, phi: float, lam: float) -> LogPValue:
    split = TrainedSplitState.from_sequence(seq, lam)
    return trained_split_log_p(split, phi)


def trained_split_log_p(split: TrainedSplitState, phi: float) -> LogPValue:
    phi = check_probability("phi", phi)
    split.check_nondegenerate()
    if phi > split.theta_hat_m:
        return LogPValue(0.0)
    return LogPValue(split.log_q(phi))


# ---------------------------------------------------------------------------
# Vectorised engine (many independent paths in lockstep)
# ---------------------------------------------------------------------------


def batch_log_factors(bits: np.ndarray, phi: float, policy: FactorPolicy | None = None) -> np.ndarray:
    """Log factors for a ``(paths, trials)`` 0/1 array, one row per path.

    Matches :meth:`SupermartingaleState.step` element for element.
    """
    phi = check_probability("phi", phi)
    policy = policy or PbrPoint()
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 2:
        raise DomainError("bits must be a 2-d array")
    _, n = bits.shape
    s_prev = np.cumsum(bits, axis=1) - bits
    k = np.arange(n)
    log_phi, log_1mphi = math.log(phi), math.log1p(-phi)

    if isinstance(policy, (PbrPoint, PbrClamped)):
        est = (s_prev + 1.0) / (k + 2.0)
        out = np.where(bits == 1, np.log(est) - log_phi, np.log1p(-est) - log_1mphi)
        if isinstance(policy, PbrClamped):
            out = np.where(est < phi, 0.0, out)
        return out

    m = policy.m
    out = np.zeros(bits.shape)
    if m >= n:
        return out
    s_train = bits[:, :m].sum(axis=1)
    if np.any((s_train == 0) | (s_train == m)):
        raise DegenerateTraining("some paths have a degenerate training estimate")
    est = (s_train / m)[:, None]
    tail = np.where(bits[:, m:] == 1, np.log(est) - log_phi, np.log1p(-est) - log_1mphi)
    out[:, m:] = np.where(phi > est, 0.0, tail)
    return out


def batch_log_trajectory(bits: np.ndarray, phi: float, policy: FactorPolicy | None = None) -> np.ndarray:
    """``log T_k`` for k = 1..n along each row."""
    return np.cumsum(batch_log_factors(bits, phi, policy), axis=1)
