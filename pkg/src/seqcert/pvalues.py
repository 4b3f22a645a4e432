"""Exact, Chernoff-Hoeffding and PBR p-value bounds for Bernoulli trials.

Every function returns ``-log p`` as a :class:`~seqcert.core.LogPValue`.
For the same data the three values are ordered
``exact >= chernoff_hoeffding >= pbr``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import (
    LogPValue,
    check_counts,
    check_probability,
    kl_bernoulli,
    log_binom_pmf,
    _log_pmf,
)

# Stop summing once the geometric bound on the remaining tail drops below
# this fraction of the accumulated mass.
_TAIL_RTOL = 1e-17


class TestKind(enum.Enum):
    EXACT = "exact"
    CHERNOFF_HOEFFDING = "ch"
    PBR = "pbr"

    # keep pytest from collecting the enum as a test class
    __test__ = False

    @classmethod
    def parse(cls, name: "str | TestKind") -> "TestKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"x": "exact", "chernoff-hoeffding": "ch", "chernoff_hoeffding": "ch"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ThetaMaxView:
    theta_hat: float
    phi: float

    @property
    def theta_max(self) -> float:
        return max(self.theta_hat, self.phi)


def _validate(n, k, phi):
    n, k = check_counts(n, k)
    phi = check_probability("phi", phi)
    return n, k, phi


def _relative_sum(n: int, r: float, start: int, stop: int) -> float:
    """Sum of binomial pmf terms from ``start`` to ``stop`` (either direction),
    each divided by the term at ``start``, which must be the largest."""
    terms = [1.0]
    total = 1.0
    t, i = 1.0, start
    up = stop > start
    while i != stop:
        ratio = (n - i) / (i + 1) * r if up else i / ((n - i + 1) * r)
        t *= ratio
        i += 1 if up else -1
        if t == 0.0:
            break
        terms.append(t)
        total += t
        if ratio < 1.0 and t * ratio / (1.0 - ratio) < _TAIL_RTOL * total:
            break
    return math.fsum(terms)


def log_p_exact(n: int, k: int, phi: float) -> LogPValue:
    """``-log P(S_n >= k)`` for ``S_n ~ Binomial(n, phi)``.

    Terms are summed relative to the largest one.  Below the mean the
    complementary lower tail is summed instead, so that p-values within
    rounding of one keep their full relative accuracy.
    """
    n, k, phi = _validate(n, k, phi)
    if k == 0:
        return LogPValue(0.0)
    r = phi / (1.0 - phi)
    if k - 1 < n * phi:
        # k - 1 is at or below the mode, so the lower tail peaks at k - 1
        log_lower = _log_pmf(k - 1, n, phi) + math.log(_relative_sum(n, r, k - 1, 0))
        return LogPValue(-math.log1p(-math.exp(log_lower)))
    mode = min(n, int(math.floor((n + 1) * phi)))
    start = max(k, mode)
    total = _relative_sum(n, r, start, n)
    if start > k:
        total += _relative_sum(n, r, start, k) - 1.0
    return LogPValue(max(-(_log_pmf(start, n, phi) + math.log(total)), 0.0))


def log_p_ch(n: int, k: int, phi: float) -> LogPValue:
    """Optimal Chernoff-Hoeffding bound: ``n KL(k/n | phi)`` above phi, else 0."""
    n, k, phi = _validate(n, k, phi)
    if n == 0:
        return LogPValue(0.0)
    t = k / n
    if t < phi:
        return LogPValue(0.0)
    return LogPValue(n * kl_bernoulli(t, phi))


def log_p_pbr_point(n: int, k: int, phi: float) -> LogPValue:
    """Point-null PBR value ``-log[phi^k (1-phi)^(n-k) (n+1) C(n,k)]``.

    Accepts ``phi`` in ``[0, 1]`` because the composite maximiser ``k/n`` can
    sit on the boundary.
    """
    n, k = check_counts(n, k)
    phi = check_probability("phi", phi, open_interval=False)
    return LogPValue(-(log_binom_pmf(k, n, phi) + math.log(n + 1.0)))


def log_p_pbr(n: int, k: int, phi: float) -> LogPValue:
    """PBR bound for the composite null ``theta <= phi``.

    The point-null value is maximised over ``phi' <= phi``; the maximiser is
    ``phi`` itself when ``k/n >= phi`` and ``k/n`` otherwise.  The bound can
    exceed one (negative return value) when ``phi`` is close to ``k/n``.
    """
    n, k, phi = _validate(n, k, phi)
    if n == 0:
        return LogPValue(0.0)
    t = k / n
    return log_p_pbr_point(n, k, phi if t >= phi else t)


_DISPATCH = {
    TestKind.EXACT: log_p_exact,
    TestKind.CHERNOFF_HOEFFDING: log_p_ch,
    TestKind.PBR: log_p_pbr,
}


def log_p(kind: TestKind | str, n: int, k: int, phi: float) -> LogPValue:
    return _DISPATCH[TestKind.parse(kind)](n, k, phi)


def log_p_all(n: int, k: int, phi: float) -> dict[TestKind, LogPValue]:
    return {kind: fn(n, k, phi) for kind, fn in _DISPATCH.items()}
