"""``seqcert`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 failed assertion.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import bounds, figures
from .core import DegenerateTraining, DomainError, HypothesisViolated, LogPValue
from .intervals import ConfidenceLevel, TrainedLambda, endpoint, endpoint_checks
from .montecarlo import (
    ConfigurationError,
    FixedN,
    Iid,
    MaxOverRun,
    PastDependent,
    ReplicationPlan,
    ThresholdLogT,
    run_coverage,
    run_exact_stopping,
    run_normality,
    run_validity,
)
from .pvalues import TestKind, log_p
from .supermartingale import PbrClamped, PbrPoint, TrainedSplit, initial_state, train_size

SCHEMA_VERSION = "1"

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_ASSERTION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


@dataclass
class OutputRecord:
    command: str
    inputs: dict
    header: list[str] = field(default_factory=list)
    rows: list[list[Any]] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    fmt: str = "csv"
    failed: bool = False

    def render(self) -> str:
        if self.fmt == "json":
            payload = {
                "schema_version": SCHEMA_VERSION,
                "command": self.command,
                "inputs": self.inputs,
                "outputs": self.outputs or [dict(zip(self.header, r)) for r in self.rows],
            }
            return json.dumps(payload, indent=2, sort_keys=False, allow_nan=True) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_num(x) for x in row])
        return buf.getvalue()


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from e


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from e


def _require_unit(flag: str, x: float) -> float:
    if not (0.0 < x < 1.0):
        raise DomainError(f"{flag} must lie in (0, 1), got {x!r}")
    return x


def _require_counts(n: int, k: int) -> None:
    if n < 0:
        raise DomainError(f"--n must be non-negative, got {n}")
    if not 0 <= k <= n:
        raise DomainError(f"--successes must lie in [0, --n], got {k}")


# ---------------------------------------------------------------------------
# pvalue
# ---------------------------------------------------------------------------


def _p_columns(v: LogPValue) -> list[Any]:
    p = v.p
    return [float(v), p if p > 0.0 else None, v.log10_p]


def cmd_pvalue(args) -> OutputRecord:
    _require_counts(args.n, args.successes)
    _require_unit("--phi", args.phi)
    kinds = list(TestKind) if args.all else [TestKind.parse(args.test)]
    rec = OutputRecord(
        "pvalue",
        {"n": args.n, "successes": args.successes, "phi": args.phi},
        ["test", "n", "successes", "phi", "neg_log_p", "p", "log10_p"],
        fmt=args.format,
    )
    for kind in kinds:
        v = log_p(kind, args.n, args.successes, args.phi)
        rec.rows.append([kind.value, args.n, args.successes, args.phi, *_p_columns(v)])
    return rec


# ---------------------------------------------------------------------------
# martingale
# ---------------------------------------------------------------------------


def read_bits(lines: Iterable[str]) -> list[int]:
    bits = []
    for lineno, line in enumerate(lines, start=1):
        for token in line.split():
            if token not in ("0", "1"):
                raise DomainError(f"line {lineno}: invalid token {token!r}, expected 0 or 1")
            bits.append(int(token))
    return bits


def cmd_martingale(args) -> OutputRecord:
    _require_unit("--phi", args.phi)
    if args.input in (None, "-"):
        bits = read_bits(sys.stdin)
    else:
        with open(args.input, encoding="utf-8") as fh:
            bits = read_bits(fh)

    if args.policy == "point":
        policy = PbrPoint()
    elif args.policy == "clamped":
        policy = PbrClamped()
    else:
        if args.lam is None:
            raise UsageError("--policy trained requires --lambda")
        _require_unit("--lambda", args.lam)
        policy = TrainedSplit(train_size(len(bits), args.lam))

    inputs = {"phi": args.phi, "policy": args.policy, "lambda": args.lam, "n": len(bits)}
    header = ["trial", "outcome", "successes", "log_t", "log_t_max", "p_final", "p_max"]
    rec = OutputRecord("martingale", inputs, header, fmt=args.format)

    def row(state, outcome):
        return [state.k, outcome, state.s_k, state.log_t, state.log_t_max,
                state.log_p_final.p, state.log_p_max.p]

    state = initial_state(args.phi, policy)
    if args.emit_trajectory:
        rec.rows.append(row(state, None))
    for b in bits:
        state = state.step(b)
        if args.emit_trajectory:
            rec.rows.append(row(state, b))
    if not args.emit_trajectory:
        rec.rows.append(row(state, None))
    return rec


# ---------------------------------------------------------------------------
# endpoint
# ---------------------------------------------------------------------------


def cmd_endpoint(args) -> OutputRecord:
    _require_counts(args.n, args.successes)
    _require_unit("--a", args.a)
    level = ConfidenceLevel(args.a)
    if args.test == "trained":
        if args.lam is None or args.train_successes is None:
            raise UsageError("--test trained requires --lambda and --train-successes")
        _require_unit("--lambda", args.lam)
        kinds = [TrainedLambda(args.lam, args.train_successes)]
    elif args.all:
        kinds = list(TestKind)
    else:
        kinds = [TestKind.parse(args.test)]
    rec = OutputRecord(
        "endpoint",
        {"n": args.n, "successes": args.successes, "a": args.a},
        ["test", "n", "k", "a", "phi_endpoint", "gamma", "converged"],
        fmt=args.format,
    )
    for kind in kinds:
        r = endpoint(kind, args.n, args.successes, level)
        rec.rows.append([r.kind, r.n, r.k, args.a, r.phi_endpoint, r.gamma, r.converged])
    return rec


# ---------------------------------------------------------------------------
# figure
# ---------------------------------------------------------------------------


def cmd_figure(args) -> OutputRecord:
    header, rows = figures.figure_table(args.id, n=args.n, theta=args.theta, a=args.a)
    inputs = {"id": args.id, "n": args.n, "theta": args.theta, "a": args.a}
    return OutputRecord("figure", inputs, header, rows)


# ---------------------------------------------------------------------------
# verify-bounds
# ---------------------------------------------------------------------------

VERIFY_HEADER = ["check", "n", "t", "phi", "a", "value", "lo", "hi", "pass"]


def verify_rows(ns: Sequence[int], phis: Sequence[float], levels: Sequence[float], with_endpoints: bool):
    for c in bounds.hn_checks(ns):
        yield [c.check, c.n, c.t, None, None, c.value, c.lo, c.hi, c.ok]
    for c in bounds.gap_checks(ns, phis):
        yield [c.check, c.n, c.t, c.phi, None, c.value, c.lo, c.hi, c.ok]
    if with_endpoints:
        for c in endpoint_checks(ns=ns, levels=levels):
            yield [c.check, c.n, c.theta_hat, None, c.a, c.gamma, c.lo, c.hi, c.ok]


def cmd_verify_bounds(args) -> OutputRecord:
    for phi in args.phi:
        _require_unit("--phi", phi)
    rec = OutputRecord(
        "verify-bounds",
        {"n": args.n, "phi": args.phi, "a": args.a},
        VERIFY_HEADER,
    )
    rec.rows = list(verify_rows(args.n, args.phi, args.a, not args.skip_endpoints))
    rec.failed = not all(r[-1] for r in rec.rows)
    return rec


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _rule(args, n: int):
    if args.rule == "fixed":
        return FixedN(n)
    if args.rule == "max":
        return MaxOverRun(n)
    c = args.threshold if args.threshold is not None else -math.log(args.a)
    return ThresholdLogT(c, n)


def cmd_simulate(args) -> OutputRecord:
    _require_unit("--a", args.a)
    _require_unit("--phi", args.phi)
    level = ConfidenceLevel(args.a)
    if args.generator == "iid":
        theta = _require_unit("--theta", args.theta if args.theta is not None else args.phi)
        gen = Iid(theta)
    else:
        cap = _require_unit("--cap", args.cap if args.cap is not None else args.phi)
        gen = PastDependent(cap, window=args.window)
        theta = None
    rule = FixedN(args.n) if args.estimate in ("coverage", "normality") else _rule(args, args.n)
    plan = ReplicationPlan(args.reps, args.seed, gen, rule)
    inputs = {
        "estimate": args.estimate, "reps": args.reps, "seed": args.seed, "n": args.n,
        "generator": args.generator, "theta": theta, "cap": args.cap, "phi": args.phi,
        "a": args.a, "rule": type(rule).__name__, "test": args.test,
        "statistic": args.statistic, "policy": args.policy,
    }
    outputs: dict[str, Any] = {}
    checks: dict[str, bool] = {}
    if args.estimate == "validity":
        policy = PbrPoint() if args.policy == "point" else PbrClamped()
        r = run_validity(plan, args.phi, level, policy)
        outputs.update(rejection_rate=r.rate, stderr=r.stderr)
        checks["rate_at_most_a_plus_3se"] = r.at_most(args.a)
    elif args.estimate == "exact-stopping":
        r = run_exact_stopping(plan, args.phi, level)
        outputs.update(rejection_rate=r.rate, stderr=r.stderr)
    elif args.estimate == "coverage":
        r = run_coverage(plan, args.test, level, theta)
        outputs.update(coverage=r.rate, stderr=r.stderr)
        checks["coverage_at_least_1_minus_a_minus_3se"] = r.at_least(1.0 - args.a)
    else:
        if theta is None:
            raise UsageError("normality needs --generator iid")
        rep = run_normality(plan, args.test, args.phi, theta, args.statistic)
        outputs.update(sample_mean=rep.sample_mean, sample_sd=rep.sample_sd,
                       target_sd=rep.target_sd, sd_ratio=rep.sd_ratio, ks_stat=rep.ks_stat)
        tol = 0.05 if args.statistic == "gain" else 0.10
        checks[f"sd_within_{int(tol * 100)}pct"] = abs(rep.sd_ratio - 1.0) <= tol
    outputs["pass"] = checks
    rec = OutputRecord("simulate", inputs, outputs=outputs, fmt="json")
    rec.failed = not all(checks.values())
    return rec


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqcert", description="Bernoulli p-values, supermartingales and confidence endpoints.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    tests = ["exact", "ch", "pbr"]

    s = sub.add_parser("pvalue", help="-log p for one or all tests")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--test", choices=tests)
    g.add_argument("--all", action="store_true")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--successes", type=int, required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_pvalue)

    s = sub.add_parser("martingale", help="stream 0/1 outcomes through the test supermartingale")
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--policy", choices=["point", "clamped", "trained"], default="point")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--input", default="-", help="file of whitespace-separated 0/1 tokens ('-' for stdin)")
    s.add_argument("--emit-trajectory", action="store_true")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_martingale)

    s = sub.add_parser("endpoint", help="lower confidence endpoint and its deviation")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--test", choices=tests + ["trained"])
    g.add_argument("--all", action="store_true")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--successes", type=int, required=True)
    s.add_argument("--a", type=float, default=0.01)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--train-successes", type=int)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_endpoint)

    s = sub.add_parser("figure", help="plot data as CSV")
    s.add_argument("--id", type=int, required=True, choices=range(1, 7))
    s.add_argument("--out", default="-")
    s.add_argument("--n", type=_int_list)
    s.add_argument("--theta", type=float)
    s.add_argument("--a", type=float)
    s.set_defaults(func=cmd_figure)

    s = sub.add_parser("verify-bounds", help="check every interval oracle on a grid")
    s.add_argument("--n", type=_int_list, default=list(bounds.STANDARD_NS))
    s.add_argument("--phi", type=_float_list, default=list(bounds.STANDARD_PHIS))
    s.add_argument("--a", type=_float_list, default=[0.1, 0.01, 0.001, 1e-6])
    s.add_argument("--skip-endpoints", action="store_true")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("simulate", help="Monte Carlo validity, coverage or normality")
    s.add_argument("--estimate", choices=["validity", "coverage", "normality", "exact-stopping"],
                   default="validity")
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=1000, help="trials (or max trials for stopping rules)")
    s.add_argument("--generator", choices=["iid", "past-dependent"], default="iid")
    s.add_argument("--theta", type=float)
    s.add_argument("--cap", type=float)
    s.add_argument("--window", type=int, default=10)
    s.add_argument("--phi", type=float, default=0.5)
    s.add_argument("--a", type=float, default=0.05)
    s.add_argument("--rule", choices=["fixed", "threshold", "max"], default="threshold")
    s.add_argument("--threshold", type=float)
    s.add_argument("--test", choices=tests, default="pbr")
    s.add_argument("--statistic", choices=["gain", "gap_pbr", "gap_exact"], default="gain")
    s.add_argument("--policy", choices=["point", "clamped"], default="clamped",
                   help="supermartingale factors for --estimate validity")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rec = args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"seqcert: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, HypothesisViolated, DegenerateTraining, ConfigurationError) as e:
        print(f"seqcert: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as e:
        print(f"seqcert: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    _write(rec.render(), args.out)
    return EXIT_ASSERTION if rec.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
