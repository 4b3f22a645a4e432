"""Lower confidence endpoints by inverting the tests in the null parameter.

For data ``k`` successes in ``n`` trials, each test's ``-log p`` is a
non-increasing function of ``phi``.  The level-``a`` confidence set is
``[phi_a, 1]`` where ``phi_a`` solves ``-log p(phi) = -log a``; it is found by
bisection, which needs nothing beyond that monotonicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .core import (
    BoundInterval,
    DomainError,
    HypothesisViolated,
    LOG_2,
    check_counts,
    check_probability,
    h_n,
    q_inverse,
)
from .pvalues import TestKind, log_p, log_p_exact
from .supermartingale import TrainedSplitState

EPS = 1e-15
MAX_ITER = 200
BRACKET_TOL = 1e-12
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class ConfidenceLevel:
    a: float

    def __post_init__(self):
        check_probability("a", self.a)

    @classmethod
    def from_alpha(cls, alpha: float) -> "ConfidenceLevel":
        if not alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {alpha!r}")
        return cls(math.exp(-alpha))

    @property
    def alpha(self) -> float:
        return -math.log(self.a)

    def halved(self) -> "ConfidenceLevel":
        return ConfidenceLevel(self.a / 2.0)


@dataclass(frozen=True)
class TrainedLambda:
    """Trained split test with training fraction ``lam``.

    ``train_successes`` counts successes among the first ``train_size(n, lam)``
    trials; the rest of the ``k`` successes fall in the evaluation block.
    """

    lam: float
    train_successes: int

    @property
    def label(self) -> str:
        return f"trained:{self.lam:g}"


EndpointKind = Union[TestKind, TrainedLambda]


def _label(kind: EndpointKind) -> str:
    return kind.label if isinstance(kind, TrainedLambda) else kind.value


@dataclass(frozen=True)
class EndpointResult:
    kind: str
    n: int
    k: int
    alpha: float
    phi_endpoint: float
    sigma_hat: float
    bracket_width: float
    iterations: int
    residual: float
    converged: bool
    # nothing in (0, upper] is rejected; phi_endpoint is 0
    no_rejection: bool = False
    # k in {0, n}: outside the interior the deviation is not finite
    boundary: bool = False

    @property
    def theta_hat(self) -> float:
        return self.k / self.n

    @property
    def gamma(self) -> float:
        return gamma_deviation(self)


def gamma_deviation(result: EndpointResult) -> float:
    """``(theta_hat - phi_a) / sigma_hat``."""
    gap = result.theta_hat - result.phi_endpoint
    if result.sigma_hat == 0.0:
        return 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
    return gap / result.sigma_hat


def _objective(kind: EndpointKind, n: int, k: int) -> tuple[Callable[[float], float], float]:
    """``phi -> -log p(phi)`` and the top of the search bracket."""
    if isinstance(kind, TrainedLambda):
        split = TrainedSplitState.from_counts(n, kind.lam, kind.train_successes, k - kind.train_successes)
        split.check_nondegenerate()
        return split.log_q, min(split.theta_hat_m, split.theta_hat_prime)
    if kind is TestKind.EXACT:
        # the exact tail can stay significant slightly above k/n
        return (lambda phi: float(log_p_exact(n, k, phi))), 1.0 - EPS
    return (lambda phi: float(log_p(kind, n, k, phi))), min(k / n, 1.0 - EPS)


def endpoint(kind: EndpointKind | str, n: int, k: int, level: ConfidenceLevel) -> EndpointResult:
    """Lower endpoint ``phi_a`` of the level-``a`` confidence set."""
    if isinstance(kind, str):
        kind = TestKind.parse(kind)
    n, k = check_counts(n, k)
    if n == 0:
        raise DomainError("need at least one trial")
    alpha = level.alpha
    theta_hat = k / n
    sigma_hat = math.sqrt(theta_hat * (1.0 - theta_hat) / n)
    boundary = k in (0, n)
    common = dict(kind=_label(kind), n=n, k=k, alpha=alpha, sigma_hat=sigma_hat, boundary=boundary)

    f, upper = _objective(kind, n, k)
    if upper <= EPS or f(EPS) < alpha:
        return EndpointResult(phi_endpoint=0.0, bracket_width=0.0, iterations=0,
                              residual=math.nan, converged=True, no_rejection=True, **common)
    if f(upper) >= alpha:
        return EndpointResult(phi_endpoint=upper, bracket_width=0.0, iterations=0,
                              residual=f(upper) - alpha, converged=True, **common)

    # invariant: f(lo) >= alpha > f(hi)
    lo, hi = EPS, upper
    it = 0
    while it < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        if f(mid) >= alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BRACKET_TOL and abs(f(lo) - alpha) <= RESIDUAL_TOL:
            break
    residual = f(lo) - alpha
    width = hi - lo
    return EndpointResult(
        phi_endpoint=lo,
        bracket_width=width,
        iterations=it,
        residual=residual,
        converged=width <= BRACKET_TOL or abs(residual) <= RESIDUAL_TOL,
        **common,
    )


@dataclass(frozen=True)
class TrueDeviation:
    theta: float
    sigma: float
    tilde_gamma: float


def true_deviation(theta: float, result: EndpointResult, n: int | None = None) -> TrueDeviation:
    """Endpoint distance below the true ``theta`` in units of its own standard deviation."""
    theta = check_probability("theta", theta)
    n = result.n if n is None else n
    sigma = math.sqrt(theta * (1.0 - theta) / n)
    return TrueDeviation(theta, sigma, (theta - result.phi_endpoint) / sigma)


def two_sided(kind: TestKind | str, n: int, k: int, level: ConfidenceLevel) -> tuple[float, float]:
    """Two-sided interval at level ``a``: each side at ``a/2``, the upper side by relabelling."""
    kind = TestKind.parse(kind)
    half = level.halved()
    lower = endpoint(kind, n, k, half).phi_endpoint
    upper = 1.0 - endpoint(kind, n, n - k, half).phi_endpoint
    return lower, upper


# ---------------------------------------------------------------------------
# Interval statements for the endpoint deviation
# ---------------------------------------------------------------------------

EXACT_C1 = 64.0 / (15.0 * math.sqrt(15.0))
EXACT_C2_CONST = math.sqrt(math.pi / 6.0)
EXACT_C2_SLOPE = 8.0 / math.sqrt(15.0)
EXACT_C3 = 2.0 / math.sqrt(5.0)


def _ch_form(alpha: float, scale: float) -> BoundInterval:
    r = 2.5 * math.sqrt(alpha) / scale
    root = math.sqrt(2.0 * alpha)
    return BoundInterval(root / math.sqrt(1.0 + r), root / math.sqrt(1.0 - r))


def _q_inverse_or_zero(y: float) -> float:
    return q_inverse(y) if y > LOG_2 else 0.0


def endpoint_guaranteed_interval(
    kind: TestKind | str, n: int, theta_hat: float, level: ConfidenceLevel
) -> BoundInterval:
    """Guaranteed range for the endpoint deviation ``gamma``.

    Raises :class:`HypothesisViolated` when ``alpha`` (shifted by the PBR
    offset for that test) is outside the range where the statement holds.
    """
    kind = TestKind.parse(kind)
    theta_hat = check_probability("theta_hat", theta_hat)
    alpha = level.alpha
    v = theta_hat * (1.0 - theta_hat)
    scale = math.sqrt(n * v)
    cap = n * v * v / 8.0

    if kind is TestKind.PBR:
        alpha = alpha + 0.5 * math.log(n + 1.0) - h_n(n, theta_hat)
    if kind is TestKind.EXACT and not alpha > LOG_2:
        raise HypothesisViolated(f"need alpha > log 2, got {alpha}")
    if not 0.0 < alpha <= cap:
        raise HypothesisViolated(f"need 0 < alpha <= {cap:.6g}, got {alpha:.6g}")
    if kind is not TestKind.EXACT:
        return _ch_form(alpha, scale)

    s = math.sqrt(alpha)
    c1 = EXACT_C1 * s / scale
    c2 = (EXACT_C2_CONST + EXACT_C2_SLOPE * s) / scale
    c3 = EXACT_C3 * s / scale
    lo = _q_inverse_or_zero(alpha * (1.0 - c1) - c2) * (1.0 - c3)
    hi = _q_inverse_or_zero(alpha * (1.0 + c1) + c2) * (1.0 + c3)
    return BoundInterval(max(0.0, lo), hi)


def asymptotic_gamma(kind: TestKind | str, n: int, theta_hat: float, level: ConfidenceLevel) -> float:
    """Leading-order endpoint deviation with the ``O(1/sqrt(n))`` terms dropped."""
    kind = TestKind.parse(kind)
    alpha = level.alpha
    if kind is TestKind.CHERNOFF_HOEFFDING:
        return math.sqrt(2.0 * alpha)
    if kind is TestKind.PBR:
        # sqrt(2 (alpha + offset)) with the PBR offset log(n)/2 - log(2 pi v)/2
        v = theta_hat * (1.0 - theta_hat)
        return math.sqrt(2.0 * alpha + math.log(n) - math.log(2.0 * math.pi * v))
    return _q_inverse_or_zero(alpha)


def trained_gamma_reference(level: ConfidenceLevel, lam: float) -> float:
    """Large-n deviation of the trained split test at a balanced split: ``sqrt(2 alpha / (1 - lam))``."""
    return math.sqrt(2.0 * level.alpha / (1.0 - lam))


# ---------------------------------------------------------------------------
# Quantiles of the empirical frequency
# ---------------------------------------------------------------------------


def binomial_log_cdf(k: int, n: int, theta: float) -> float:
    """``log P(S_n <= k)`` for ``S_n ~ Binomial(n, theta)``."""
    n, k = check_counts(n, k)
    if k == n:
        return 0.0
    # P(S <= k) = P(n - S >= n - k), and n - S is Binomial(n, 1 - theta)
    return -float(log_p_exact(n, n - k, 1.0 - theta))


def binomial_quantile(r: float, n: int, theta: float) -> float:
    """Smallest ``k/n`` whose cumulative probability is at least ``r``."""
    r = check_probability("r", r, open_interval=False)
    if r == 0.0:
        raise DomainError("r must be positive")
    theta = check_probability("theta", theta)
    n, _ = check_counts(n, 0)
    if r == 1.0:
        return 1.0
    log_r = math.log(r)
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if binomial_log_cdf(mid, n, theta) >= log_r:
            hi = mid
        else:
            lo = mid + 1
    return lo / n


# ---------------------------------------------------------------------------
# Grid sweep
# ---------------------------------------------------------------------------

STANDARD_THETA_HATS = tuple(round(0.1 * i, 1) for i in range(1, 10))
STANDARD_ENDPOINT_NS = (10, 30, 100, 300, 1000, 10_000)
STANDARD_AS = (0.1, 0.01, 0.001, 1e-6)


@dataclass(frozen=True)
class EndpointCheck:
    check: str
    n: int
    theta_hat: float
    a: float
    gamma: float
    lo: float
    hi: float
    ok: bool


def endpoint_checks(
    ns=STANDARD_ENDPOINT_NS,
    theta_hats=STANDARD_THETA_HATS,
    levels=STANDARD_AS,
    kinds=(TestKind.CHERNOFF_HOEFFDING, TestKind.PBR, TestKind.EXACT),
):
    """Deviation containments at every grid point where the statement applies."""
    for n in ns:
        for th in theta_hats:
            k = round(n * th)
            if abs(k - n * th) > 1e-9:
                continue
            for a in levels:
                level = ConfidenceLevel(a)
                for kind in kinds:
                    try:
                        interval = endpoint_guaranteed_interval(kind, n, th, level)
                    except HypothesisViolated:
                        continue
                    g = endpoint(kind, n, k, level).gamma
                    ok = interval.contains(g, tol=1e-9 * max(1.0, abs(g)))
                    yield EndpointCheck(f"gamma_{kind.value}", n, th, a, g, interval.lo, interval.hi, ok)
