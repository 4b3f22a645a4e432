"""Interval oracles for log(p)-value gaps and their asymptotic parameters.

Each ``*_interval`` function evaluates an explicit two-sided bound on a
quantity the other modules compute exactly; the sweeps at the bottom check
the containments on a grid of ``(n, t, phi)``.

Gaps are all measured against the Chernoff-Hoeffding value
``-log P_CH = n KL(t | phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .core import (
    BoundInterval,
    DomainError,
    HypothesisViolated,
    check_probability,
    count_from_fraction,
    h_n,
    kl_bernoulli,
    y_mills,
)
from .pvalues import log_p_ch, log_p_exact, log_p_pbr

STANDARD_NS = (10, 30, 100, 300, 1000, 10_000)
STANDARD_PHIS = tuple(round(0.1 * i, 1) for i in range(1, 10))


def _interior_count(n: int, t: float) -> int:
    k = count_from_fraction(n, t)
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= n*t <= n-1, got n={n}, t={t}")
    return k


def _check_above(t: float, phi: float, strict: bool) -> None:
    check_probability("phi", phi)
    check_probability("t", t)
    if t < phi or (strict and t == phi):
        raise DomainError(f"need phi {'<' if strict else '<='} t, got t={t}, phi={phi}")


@dataclass(frozen=True)
class LogPGap:
    reference: float
    gap_pbr: float
    gap_exact: float


def log_p_gaps(n: int, k: int, phi: float) -> LogPGap:
    ch = float(log_p_ch(n, k, phi))
    return LogPGap(
        reference=ch,
        gap_pbr=float(log_p_pbr(n, k, phi)) - ch,
        gap_exact=float(log_p_exact(n, k, phi)) - ch,
    )


def mills_argument(n: int, t: float, phi: float) -> float:
    return math.sqrt(n / (phi * (1.0 - phi))) * (t - phi)


def l_e(n: int, t: float, phi: float) -> float:
    """Saturating slack term ``min((t-phi) sqrt(pi n / (8 phi (1-phi))), 1)``."""
    return min((t - phi) * math.sqrt(math.pi * n / (8.0 * phi * (1.0 - phi))), 1.0)


def hn_interval(n: int, t: float) -> BoundInterval:
    _interior_count(n, t)
    base = 0.5 * math.log(2.0 * math.pi * t * (1.0 - t)) - 0.5 * math.log1p(1.0 / n)
    return BoundInterval(base, base + 1.0 / (12.0 * n * t * (1.0 - t)))


def pbr_minus_ch_interval(n: int, t: float, phi: float) -> BoundInterval:
    """Bounds on ``-log P_PBR - (-log P_CH)`` for ``phi <= t``."""
    _check_above(t, phi, strict=False)
    return hn_interval(n, t).shift(-0.5 * math.log(n + 1.0))


def _exact_slack_lo(n: int, t: float, phi: float) -> float:
    return -l_e(n, t, phi) / (n * (t - phi))


def exact_minus_pbr_interval(n: int, t: float, phi: float) -> BoundInterval:
    """Bounds on ``-log P_X - (-log P_PBR)`` for ``phi < t``, via the Mills ratio."""
    _check_above(t, phi, strict=True)
    _interior_count(n, t)
    centre = (
        math.log(n + 1.0)
        - math.log(t * math.sqrt((1.0 - phi) / phi))
        - math.log(math.sqrt(n) * y_mills(mills_argument(n, t, phi)))
    )
    return BoundInterval(centre + _exact_slack_lo(n, t, phi), centre)


def exact_minus_ch_mills_interval(n: int, t: float, phi: float) -> BoundInterval:
    """Bounds on ``-log P_X - (-log P_CH)`` still written with the Mills ratio."""
    _check_above(t, phi, strict=True)
    _interior_count(n, t)
    centre = (
        0.5 * math.log(n)
        - math.log(math.sqrt(t * (1.0 - phi) / (2.0 * math.pi * (1.0 - t) * phi)))
        - math.log(math.sqrt(n) * y_mills(mills_argument(n, t, phi)))
    )
    return BoundInterval(
        centre + _exact_slack_lo(n, t, phi),
        centre + 1.0 / (12.0 * n * t * (1.0 - t)),
    )


def exact_minus_ch_interval(n: int, t: float, phi: float) -> BoundInterval:
    """Bounds on ``-log P_X - (-log P_CH)`` with the Mills ratio eliminated."""
    _check_above(t, phi, strict=True)
    _interior_count(n, t)
    centre = 0.5 * math.log(n) - math.log(
        (1.0 - phi) / (t - phi) * math.sqrt(t / (2.0 * math.pi * (1.0 - t)))
    )
    hi = phi * (1.0 - phi) / ((t - phi) ** 2 * n) + 1.0 / (12.0 * n * t * (1.0 - t))
    return BoundInterval(centre + _exact_slack_lo(n, t, phi), centre + hi)


# ---------------------------------------------------------------------------
# Asymptotic parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapParams:
    """Centring constants and limiting variances of the scaled gaps.

    The PBR statistic is ``sqrt(n) (gap_pbr + log(n)/2 - mean_pbr)`` and the
    exact one ``sqrt(n) (gap_exact - log(n)/2 - mean_exact)``.  The two
    ``*_excluded`` flags mark parameter values where the limit theorem makes
    no claim.
    """

    mean_pbr: float
    var_pbr: float
    mean_exact: float
    var_exact: float
    pbr_excluded: bool
    exact_excluded: bool

    def require(self, which: str) -> None:
        if which == "pbr" and self.pbr_excluded:
            raise HypothesisViolated("PBR gap normality excludes theta = 1/2")
        if which == "exact" and self.exact_excluded:
            raise HypothesisViolated("exact gap normality excludes phi = theta(2 theta - 1)")


def _check_phi_below_theta(theta: float, phi: float) -> None:
    check_probability("theta", theta)
    check_probability("phi", phi)
    if not phi < theta:
        raise DomainError(f"need phi < theta, got theta={theta}, phi={phi}")


def gap_asymptotic_params(theta: float, phi: float) -> GapParams:
    _check_phi_below_theta(theta, phi)
    v = theta * (1.0 - theta)
    return GapParams(
        mean_pbr=0.5 * math.log(2.0 * math.pi * v),
        var_pbr=(1.0 - 2.0 * theta) ** 2 / (4.0 * v),
        mean_exact=math.log(
            (theta - phi) / (1.0 - phi) * math.sqrt(2.0 * math.pi * (1.0 - theta) / theta)
        ),
        var_exact=(theta * (1.0 - 2.0 * theta) + phi) ** 2
        / (4.0 * (theta - phi) ** 2 * v),
        pbr_excluded=math.isclose(theta, 0.5, rel_tol=0.0, abs_tol=1e-15),
        exact_excluded=math.isclose(phi, theta * (2.0 * theta - 1.0), rel_tol=0.0, abs_tol=1e-15),
    )


def gain_asymptotic_params(theta: float, phi: float) -> tuple[float, float]:
    """``(KL(theta | phi), sigma_G^2)`` for the gain per trial."""
    _check_phi_below_theta(theta, phi)
    slope = math.log(theta / (1.0 - theta) * (1.0 - phi) / phi)
    return kl_bernoulli(theta, phi), theta * (1.0 - theta) * slope * slope


# ---------------------------------------------------------------------------
# Grid sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    check: str
    n: int
    t: float
    phi: float | None
    value: float
    lo: float
    hi: float
    ok: bool


def _tol(value: float) -> float:
    return 1e-10 * max(1.0, abs(value))


def _record(check, n, t, phi, value, interval: BoundInterval, scale: float) -> BoundCheck:
    ok = interval.contains(value, tol=_tol(scale))
    return BoundCheck(check, n, t, phi, value, interval.lo, interval.hi, ok)


def exact_region(n: int, t: float, phi: float) -> bool:
    """Whether ``t`` is at least three null standard deviations above ``phi``."""
    return t - phi >= 3.0 * math.sqrt(phi * (1.0 - phi) / n)


def hn_checks(ns: Iterable[int]) -> Iterator[BoundCheck]:
    for n in ns:
        for k in range(1, n):
            t = k / n
            yield _record("hn", n, t, None, h_n(n, t), hn_interval(n, t), 1.0)


def gap_checks(
    ns: Sequence[int] = STANDARD_NS,
    phis: Sequence[float] = STANDARD_PHIS,
) -> Iterator[BoundCheck]:
    """All log(p)-gap containments on the grid, in canonical (n, phi, t) order."""
    for n in ns:
        for phi in phis:
            k0 = math.floor(n * phi) + 1
            for k in range(max(k0, 1), n):
                t = k / n
                if t <= phi:
                    continue
                g = log_p_gaps(n, k, phi)
                yield _record("pbr_minus_ch", n, t, phi, g.gap_pbr,
                              pbr_minus_ch_interval(n, t, phi), g.reference)
                if not exact_region(n, t, phi):
                    continue
                scale = g.reference
                yield _record("exact_minus_ch", n, t, phi, g.gap_exact,
                              exact_minus_ch_interval(n, t, phi), scale)
                yield _record("exact_minus_ch_mills", n, t, phi, g.gap_exact,
                              exact_minus_ch_mills_interval(n, t, phi), scale)
                yield _record("exact_minus_pbr", n, t, phi, g.gap_exact - g.gap_pbr,
                              exact_minus_pbr_interval(n, t, phi), scale)
