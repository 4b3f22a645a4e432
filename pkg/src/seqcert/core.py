"""Domain types and scalar kernels shared by every other module.

All log quantities are natural logs.  Kernels are pure functions of their
arguments and validate their inputs eagerly: a NaN or an out-of-range
probability raises :class:`DomainError` instead of propagating.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterable

from scipy.special import erfcx

LOG_2 = math.log(2.0)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)

# log C(n, k) is taken from exact integer arithmetic up to this n.
_EXACT_COMB_MAX_N = 1024


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class HypothesisViolated(ValueError):
    """The hypotheses of an interval statement do not hold for the inputs."""


class DegenerateTraining(ValueError):
    """The training block of a split test produced an estimate of 0 or 1."""


def check_probability(name: str, x: float, *, open_interval: bool = True) -> float:
    x = float(x)
    if math.isnan(x):
        raise DomainError(f"{name} is NaN")
    if open_interval:
        if not 0.0 < x < 1.0:
            raise DomainError(f"{name}={x!r} must lie in (0, 1)")
    elif not 0.0 <= x <= 1.0:
        raise DomainError(f"{name}={x!r} must lie in [0, 1]")
    return x


def check_counts(n: int, k: int) -> tuple[int, int]:
    if int(n) != n or int(k) != k:
        raise DomainError(f"counts must be integers, got n={n!r}, k={k!r}")
    n, k = int(n), int(k)
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    return n, k


def count_from_fraction(n: int, t: float) -> int:
    """Return the integer ``n*t``, insisting that it is (numerically) an integer."""
    nt = n * float(t)
    k = round(nt)
    if abs(nt - k) > 1e-9 * max(1.0, n):
        raise DomainError(f"n*t must be an integer, got n={n}, t={t!r}")
    return int(k)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


class NullSemantics(enum.Enum):
    POINT = "point"
    COMPOSITE = "composite"
    EXTENDED = "extended"


@dataclass(frozen=True)
class NullSpec:
    """Null parameter ``phi`` and which family of distributions it names.

    ``POINT`` is the single Bernoulli(phi), ``COMPOSITE`` is i.i.d.
    Bernoulli(theta) with theta <= phi, and ``EXTENDED`` allows every
    conditional success probability given the past to be any theta <= phi.
    """

    phi: float
    semantics: NullSemantics = NullSemantics.EXTENDED

    def __post_init__(self):
        object.__setattr__(self, "phi", check_probability("phi", self.phi))


@dataclass(frozen=True)
class TrialSequence:
    """Ordered Bernoulli outcomes together with their prefix sums."""

    outcomes: tuple[int, ...]
    running_sums: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        bits = tuple(int(b) for b in self.outcomes)
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise DomainError(f"outcome {i} is {b!r}, expected 0 or 1")
        sums = [0]
        for b in bits:
            sums.append(sums[-1] + b)
        object.__setattr__(self, "outcomes", bits)
        object.__setattr__(self, "running_sums", tuple(sums))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "TrialSequence":
        return cls(tuple(bits))

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def successes(self) -> int:
        return self.running_sums[-1]

    def s(self, k: int) -> int:
        """Number of successes among the first ``k`` trials (``S_k``)."""
        return self.running_sums[k]

    def theta_hat(self, k: int | None = None) -> float:
        k = self.n if k is None else k
        if k <= 0:
            raise DomainError("theta_hat needs at least one trial")
        return self.running_sums[k] / k

    def __len__(self) -> int:
        return self.n


class LogPValue(float):
    """``-log p`` in natural log, carried as a plain float.

    The PBR bound can exceed one close to the null parameter, in which case
    the stored value is negative; :attr:`p` reports the clamped p-value and
    :attr:`p_bound` the raw bound.
    """

    def __new__(cls, neg_log_p: float):
        value = float(neg_log_p)
        if math.isnan(value) or value == -math.inf:
            raise DomainError(f"invalid log(p)-value {value!r}")
        return super().__new__(cls, value)

    @property
    def neg_log_p(self) -> float:
        return float(self)

    @property
    def clamped(self) -> float:
        return max(0.0, float(self))

    @property
    def p_bound(self) -> float:
        return math.exp(-float(self)) if float(self) > -700 else math.inf

    @property
    def p(self) -> float:
        return math.exp(-self.clamped)

    @property
    def log10_p(self) -> float:
        return -self.clamped / math.log(10.0) if self.clamped else 0.0

    def gain(self, n: int) -> float:
        """Gain per trial ``-log(p)/n``."""
        return float(self) / n

    def __repr__(self) -> str:
        return f"LogPValue({float(self)!r})"


@dataclass(frozen=True)
class BoundInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise DomainError("interval endpoint is NaN")
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def shift(self, c: float) -> "BoundInterval":
        return BoundInterval(self.lo + c, self.hi + c)

    def __add__(self, other: "BoundInterval") -> "BoundInterval":
        return BoundInterval(self.lo + other.lo, self.hi + other.hi)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def bd0(x: float, m: float) -> float:
    """Deviance term ``x log(x/m) + m - x``, stable when ``x`` is close to ``m``."""
    if x == 0.0:
        return m
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / m) + m - x


def stirlerr(n: float) -> float:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)`` for integer ``n >= 1``."""
    if n <= 15:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - HALF_LOG_2PI
    nn = n * n
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    if n > 500:
        return (s0 - s1 / nn) / n
    if n > 80:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def kl_bernoulli(t: float, phi: float) -> float:
    """KL divergence between Bernoulli(t) and Bernoulli(phi), with 0 log 0 = 0."""
    t = check_probability("t", t, open_interval=False)
    phi = check_probability("phi", phi)
    return bd0(t, phi) + bd0(1.0 - t, 1.0 - phi)


@functools.lru_cache(maxsize=1 << 16)
def _log_comb_exact(n: int, k: int) -> float:
    return math.log(math.comb(n, k))


def log_binomial(n: int, k: int) -> float:
    """``log C(n, k)``."""
    n, k = check_counts(n, k)
    if k == 0 or k == n:
        return 0.0
    if n <= _EXACT_COMB_MAX_N:
        return _log_comb_exact(n, k)
    m = n - k
    return (
        stirlerr(n)
        - stirlerr(k)
        - stirlerr(m)
        + 0.5 * math.log(n / (2.0 * math.pi * k * m))
        + k * math.log(n / k)
        + m * math.log1p(k / m)
    )


def log_binom_pmf(k: int, n: int, p: float) -> float:
    """``log[C(n,k) p^k (1-p)^(n-k)]``.

    ``p`` may be 0 or 1 (giving ``-inf`` where the pmf vanishes).  Above
    ``n = 1024`` the saddle-point split into ``stirlerr`` and ``bd0`` terms
    avoids cancellation between the binomial coefficient and the powers.
    """
    n, k = check_counts(n, k)
    p = check_probability("p", p, open_interval=False)
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    return _log_pmf(k, n, p)


def _log_pmf(k: int, n: int, p: float) -> float:
    """Unchecked kernel of :func:`log_binom_pmf` for ``0 < p < 1``."""
    if k == 0:
        return n * math.log1p(-p)
    if k == n:
        return n * math.log(p)
    m = n - k
    if n <= _EXACT_COMB_MAX_N:
        return _log_comb_exact(n, k) + k * math.log(p) + m * math.log1p(-p)
    lc = stirlerr(n) - stirlerr(k) - stirlerr(m) - bd0(k, n * p) - bd0(m, n * (1.0 - p))
    return lc + 0.5 * math.log(n / (2.0 * math.pi * k * m))


def h_n(n: int, t: float) -> float:
    """``H_n(t) = -n t log t - n(1-t) log(1-t) - log C(n, nt) - log(n+1)/2``."""
    k = count_from_fraction(n, t)
    check_counts(n, k)
    if n == 0:
        return 0.0
    if k == 0 or k == n:
        return -0.5 * math.log(n + 1.0)
    # log pmf at its own mean equals log C(n,k) minus the binary entropy term.
    return -log_binom_pmf(k, n, k / n) - 0.5 * math.log(n + 1.0)


def y_mills(x: float) -> float:
    """``Y(x) = e^{x^2/2} * integral_x^inf e^{-s^2/2} ds``."""
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"y_mills needs x >= 0, got {x!r}")
    return SQRT_HALF_PI * float(erfcx(x / math.sqrt(2.0)))


def q_neg_log_tail(x: float) -> float:
    """Negative log of the standard normal upper tail at ``x >= 0``."""
    return 0.5 * x * x + HALF_LOG_2PI - math.log(y_mills(x))


_Q_OF_ONE = None


def q_of_one() -> float:
    global _Q_OF_ONE
    if _Q_OF_ONE is None:
        _Q_OF_ONE = q_neg_log_tail(1.0)
    return _Q_OF_ONE


def q_inverse(alpha: float, rtol: float = 1e-12) -> float:
    """Solve ``q(x) = alpha`` for ``x > 0``.

    Newton steps use ``dq/dx = 1/Y(x)``; iterates leaving the bracket
    ``[sqrt(alpha - q(1) + 1), sqrt(2 (alpha - log 2))]`` fall back to bisection.
    """
    alpha = float(alpha)
    if math.isnan(alpha) or alpha <= LOG_2:
        raise DomainError(f"q_inverse needs alpha > log 2, got {alpha!r}")
    tol = rtol * max(1.0, alpha)
    lo = math.sqrt(alpha - q_of_one() + 1.0) if alpha >= q_of_one() else 0.0
    hi = math.sqrt(2.0 * (alpha - LOG_2))
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = q_neg_log_tail(x) - alpha
        if abs(f) <= tol:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        step = x - f * y_mills(x)
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            return x
    return x
