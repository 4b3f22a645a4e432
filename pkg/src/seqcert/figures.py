"""Plot data for the log(p)-value and endpoint comparisons.

Each builder returns ``(header, rows)`` ready for CSV output; the first
column is the x coordinate.
"""

from __future__ import annotations

import math
from typing import Sequence

from .core import DomainError, kl_bernoulli
from .intervals import ConfidenceLevel, asymptotic_gamma, binomial_quantile, endpoint
from .pvalues import TestKind, log_p

Table = tuple[list[str], list[list[float]]]

ENDPOINT_NS = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000)
DEVIATION_LEVELS = {4: 0.1, 5: 0.01, 6: 0.001}
_KINDS = (TestKind.EXACT, TestKind.CHERNOFF_HOEFFDING, TestKind.PBR)


def _per_trial(kind: TestKind, n: int, t: float, phi: float) -> float:
    if kind is TestKind.CHERNOFF_HOEFFDING:
        # n * KL / n does not round-trip in floating point
        return kl_bernoulli(t, phi) if t >= phi else 0.0
    return float(log_p(kind, n, round(n * t), phi)) / n


def logp_quantiles(n: int = 100, theta: float = 0.5, phis: Sequence[float] | None = None) -> Table:
    """Quantiles of the per-trial log(p)-values against ``phi`` at fixed ``theta``."""
    phis = phis or [i / 100 for i in range(1, 100)]
    t16, t50, t84 = (binomial_quantile(r, n, theta) for r in (0.16, 0.5, 0.84))
    header = ["phi", "ch_q16", "ch_median", "ch_q84", "pbr_minus_ch_median",
              "exact_minus_ch_median", "ch_q16_minus_median", "ch_q84_minus_median", "kl"]
    rows = []
    for phi in phis:
        ch = [_per_trial(TestKind.CHERNOFF_HOEFFDING, n, t, phi) for t in (t16, t50, t84)]
        pbr = _per_trial(TestKind.PBR, n, t50, phi)
        exact = _per_trial(TestKind.EXACT, n, t50, phi)
        rows.append([phi, *ch, pbr - ch[1], exact - ch[1], ch[0] - ch[1], ch[2] - ch[1],
                     kl_bernoulli(theta, phi) if phi <= theta else 0.0])
    return header, rows


def normalized_gaps(
    ns: Sequence[int] = (100, 1000, 10_000),
    phi: float = 0.5,
    theta_hats: Sequence[float] | None = None,
) -> Table:
    """Gaps to the Chernoff-Hoeffding log(p)-value divided by ``log n``, against ``theta_hat``."""
    step = min(ns)
    if theta_hats is None:
        lo = math.floor(phi * step) + 1
        theta_hats = [k / step for k in range(lo, step)]
    header = ["theta_hat"]
    for n in ns:
        header += [f"pbr_n{n}", f"exact_n{n}"]
    rows = []
    for th in theta_hats:
        row = [th]
        for n in ns:
            k = round(n * th)
            if abs(k - n * th) > 1e-9:
                raise DomainError(f"theta_hat={th} is not a multiple of 1/{n}")
            ch = float(log_p(TestKind.CHERNOFF_HOEFFDING, n, k, phi))
            scale = math.log(n)
            row += [(float(log_p(TestKind.PBR, n, k, phi)) - ch) / scale,
                    (float(log_p(TestKind.EXACT, n, k, phi)) - ch) / scale]
        rows.append(row)
    return header, rows


def _even_ns(ns: Sequence[int], theta_hat: float) -> list[int]:
    keep = [n for n in ns if abs(round(n * theta_hat) - n * theta_hat) < 1e-9]
    if not keep:
        raise DomainError(f"no n in the list makes n*{theta_hat} an integer")
    return keep


def lower_endpoints(a: float = 0.01, theta_hat: float = 0.5, ns: Sequence[int] = ENDPOINT_NS) -> Table:
    level = ConfidenceLevel(a)
    header = ["n", "exact", "ch", "pbr"]
    rows = []
    for n in _even_ns(ns, theta_hat):
        k = round(n * theta_hat)
        rows.append([n] + [endpoint(kind, n, k, level).phi_endpoint for kind in _KINDS])
    return header, rows


def endpoint_deviations(a: float, theta_hat: float = 0.5, ns: Sequence[int] = ENDPOINT_NS) -> Table:
    """Measured endpoint deviations next to their leading-order expressions."""
    level = ConfidenceLevel(a)
    header = ["n", "gamma_exact", "gamma_ch", "gamma_pbr",
              "leading_exact", "leading_ch", "leading_pbr"]
    rows = []
    for n in _even_ns(ns, theta_hat):
        k = round(n * theta_hat)
        measured = [endpoint(kind, n, k, level).gamma for kind in _KINDS]
        leading = [asymptotic_gamma(kind, n, theta_hat, level) for kind in _KINDS]
        rows.append([n, *measured, *leading])
    return header, rows


def figure_table(fig_id: int, n=None, theta=None, a=None) -> Table:
    """Dispatch on figure number with optional overrides (``n`` may be a list)."""
    ns = [n] if isinstance(n, int) else (list(n) if n else None)
    if fig_id == 1:
        return logp_quantiles(n=ns[0] if ns else 100, theta=theta if theta is not None else 0.5)
    if fig_id == 2:
        return normalized_gaps(ns=ns or (100, 1000, 10_000), phi=theta if theta is not None else 0.5)
    th = theta if theta is not None else 0.5
    if fig_id == 3:
        return lower_endpoints(a=a if a is not None else 0.01, theta_hat=th, ns=ns or ENDPOINT_NS)
    if fig_id in DEVIATION_LEVELS:
        return endpoint_deviations(a=a if a is not None else DEVIATION_LEVELS[fig_id],
                                   theta_hat=th, ns=ns or ENDPOINT_NS)
    raise DomainError(f"unknown figure id {fig_id}")
