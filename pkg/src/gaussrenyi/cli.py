"""Command-line front end: ``gaussrenyi validate|compute|sweep|oracle-check``.

Exit codes: 0 success, 1 usage, parse or numerical error, 2 invalid state
(not a legitimate covariance matrix, or not faithful where the measure needs it).
"""

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import divergences as dv
from . import fock
from .errors import (
    AlphaOutOfRange,
    AsymmetricInput,
    GaussRenyiError,
    NotFaithful,
    NotLegitimate,
    NotPositiveDefinite,
    ParseError,
    SpectrumFloorHit,
    TruncationInsufficient,
)
from .statespec import load_moments, load_state, random_pairs, state_to_dict
from .symplectic import validate_covariance

SCHEMA_VERSION = 1
ORACLE_TOLERANCE = 1e-5
MEASURES = ("petz", "sandwiched", "dmax", "fidelity", "relative", "chernoff")
ALPHA_MEASURES = ("petz", "sandwiched")
ORACLE_KINDS = ("petz", "sandwiched", "fidelity", "dmax", "relative")
CSV_HEADER = ["alpha", "value", "quasi", "margin", "note"]

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2
_INVALID = (NotLegitimate, NotFaithful, AsymmetricInput, NotPositiveDefinite)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for invalid states here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(x):
    """Text form of a number: shortest round-trip repr, ``inf``/``-inf``/``nan`` literals."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _json_number(x):
    # JSON has no infinities; they become the string "inf"
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _error_payload(exc):
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def _exit_code(exc):
    return EXIT_INVALID if isinstance(exc, _INVALID) else EXIT_ERROR


# --------------------------------------------------------------------- validate


def cmd_validate(args, out):
    try:
        mean, cov = load_moments(args.state)
        report = validate_covariance(cov)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except AsymmetricInput as exc:
        print(f"invalid: {exc}", file=out)
        return EXIT_INVALID
    nu = "[" + ", ".join(f"{v:.12g}" for v in report.nu) + "]"
    legit = "legitimate" if report.legitimate else "not legitimate"
    faithful = "faithful" if report.faithful else "not faithful"
    print(f"{legit}, {faithful}, nu={nu}", file=out)
    return EXIT_OK if report.legitimate else EXIT_INVALID


# ---------------------------------------------------------------------- compute


def evaluate_measure(measure, rho, sigma, alpha=None, family="petz"):
    """Evaluate one CLI measure.

    Returns:
        dict with ``measure``, ``alpha``, ``value`` (nats), ``quasi``,
        ``margin`` and ``reason``.
    """
    if measure in ALPHA_MEASURES:
        fn = dv.petz_quasi if measure == "petz" else dv.sandwiched_quasi
        res = fn(rho, sigma, alpha)
        return {
            "measure": measure,
            "alpha": res.alpha,
            "value": res.value,
            "quasi": res.quasi,
            "margin": res.feasibility_margin,
            "reason": res.reason,
        }
    if measure == "dmax":
        res = dv.dmax(rho, sigma)
        return {"measure": measure, "alpha": None, "value": res.value, "quasi": res.quasi,
                "margin": res.feasibility_margin, "reason": res.reason}
    if measure == "fidelity":
        res = dv.sandwiched_quasi(rho, sigma, 0.5)
        F = dv.fidelity(rho, sigma)
        return {"measure": measure, "alpha": 0.5, "value": F, "quasi": res.quasi,
                "margin": res.feasibility_margin, "reason": ""}
    if measure == "relative":
        res = dv.relative_entropy(rho, sigma, kind=family)
        return {"measure": measure, "alpha": 1.0, "value": res.value, "quasi": None,
                "margin": res.feasibility_margin, "reason": res.reason}
    if measure == "chernoff":
        res = dv.chernoff_exponent(rho, sigma)
        return {"measure": measure, "alpha": res.alpha_star, "value": res.exponent,
                "quasi": math.exp(-res.exponent), "margin": math.nan, "reason": ""}
    raise ValueError(f"unknown measure {measure!r}")


def _to_bits(row):
    # fidelity is a number in [0, 1], not an entropy, and is left alone
    if row["measure"] != "fidelity" and row["value"] is not None:
        row = dict(row, value=row["value"] / math.log(2.0))
    return row


def cmd_compute(args, out):
    try:
        if args.measure in ALPHA_MEASURES and args.alpha is None:
            raise _UsageError(f"--alpha is required for measure {args.measure}")
        rho = load_state(args.rho)
        sigma = load_state(args.sigma)
        row = evaluate_measure(args.measure, rho, sigma, args.alpha, args.family)
    except _UsageError as exc:
        args.parser.error(str(exc))
    except (GaussRenyiError, ValueError, ArithmeticError) as exc:
        if args.format == "json":
            print(json.dumps(_error_payload(exc), indent=2), file=out)
        elif args.format == "csv":
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["measure", "alpha", "value", "quasi", "margin", "reason", "error"])
            writer.writerow([args.measure, fmt(args.alpha), "", "", "", "", f"{type(exc).__name__}: {exc}"])
        else:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)

    if args.bits:
        row = _to_bits(row)
    units = "bits" if args.bits else "nats"
    if row["measure"] == "fidelity":
        units = ""
    if args.format == "json":
        payload = {k: (_json_number(v) if k in ("alpha", "value", "quasi", "margin") else v)
                   for k, v in row.items()}
        payload["units"] = units
        print(json.dumps(payload, indent=2), file=out)
    elif args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["measure", "alpha", "value", "quasi", "margin", "reason"])
        writer.writerow([row["measure"], fmt(row["alpha"]), fmt(row["value"]), fmt(row["quasi"]),
                         fmt(row["margin"]), row["reason"]])
    else:
        parts = [f"measure={row['measure']}"]
        if row["alpha"] is not None:
            parts.append(f"alpha={fmt(row['alpha'])}")
        parts += [f"value={fmt(row['value'])}", f"quasi={fmt(row['quasi'])}",
                  f"margin={fmt(row['margin'])}"]
        if units:
            parts.append(f"units={units}")
        print(" ".join(parts), file=out)
        if row["reason"]:
            print(f"reason: {row['reason']}", file=out)
    return EXIT_OK


class _UsageError(Exception):
    pass


# ------------------------------------------------------------------------ sweep


def parse_grid(text):
    """``start:stop:count`` to an ascending ``numpy.linspace`` grid."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise ParseError(f"alpha grid must be start:stop:count, got {text!r}") from exc
    if count < 1:
        raise ParseError("alpha grid count must be at least 1")
    return np.sort(np.linspace(start, stop, count))


def sweep_rows(rho, sigma, measure, grid):
    """One CSV row per grid point; errors and excluded orders become warning rows."""
    rows = []
    for a in grid:
        a = float(a)
        if a <= 0:
            rows.append([fmt(a), "skipped", "", "", "warning: alpha must be positive"])
            continue
        if abs(a - 1.0) <= 1e-12:
            rows.append([fmt(a), "skipped", "", "", "warning: alpha = 1 excluded, use measure relative"])
            continue
        try:
            row = evaluate_measure(measure, rho, sigma, a)
        except (GaussRenyiError, ValueError, ArithmeticError) as exc:
            rows.append([fmt(a), "error", "", "", f"{type(exc).__name__}: {exc}"])
            continue
        note = row["reason"]
        rows.append([fmt(a), fmt(row["value"]), fmt(row["quasi"]), fmt(row["margin"]), note])
    return rows


def cmd_sweep(args, out):
    try:
        grid = parse_grid(args.alpha_grid)
        rho = load_state(args.rho)
        sigma = load_state(args.sigma)
    except (GaussRenyiError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(sweep_rows(rho, sigma, args.measure, grid))
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# ----------------------------------------------------------------- oracle-check


def _closed_form(kind, rho, sigma, alpha):
    """``(value, feasible, margin)`` of the closed form on the oracle's scale."""
    if kind in ALPHA_MEASURES:
        fn = dv.petz_quasi if kind == "petz" else dv.sandwiched_quasi
        res = fn(rho, sigma, alpha)
        return res.quasi, res.feasible, res.feasibility_margin
    if kind == "fidelity":
        return dv.fidelity(rho, sigma), True, math.nan
    if kind == "dmax":
        res = dv.dmax(rho, sigma)
        return res.value, res.feasible, res.feasibility_margin
    res = dv.relative_entropy(rho, sigma)
    return res.value, True, res.feasibility_margin


def _relative_error(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_pair(rho, sigma, alphas, kinds, max_cutoff):
    """Compare closed forms with the oracle for one pair.

    Returns:
        dict with ``cutoffs``, ``status`` and per-entry ``results``.
    """
    entry = {}
    try:
        cutoff = fock.comparison_cutoffs(rho, sigma, max_cutoff)
        pair = fock.OraclePair(rho, sigma, cutoff)
        pair.states()
    except TruncationInsufficient as exc:
        entry.update(cutoffs=None, status="skipped", reason=str(exc), results=[])
        return entry
    entry.update(cutoffs=list(pair.cutoffs), status="ok", reason="")

    results = []
    for kind in kinds:
        orders = alphas if kind in ALPHA_MEASURES else [None]
        for a in orders:
            item = {"kind": kind, "alpha": a}
            try:
                closed, feasible, margin = _closed_form(kind, rho, sigma, a)
            except GaussRenyiError as exc:
                item.update(status="skipped", reason=f"{type(exc).__name__}: {exc}")
                results.append(item)
                continue
            item.update(feasible=feasible, margin=_json_number(margin), closed_form=_json_number(closed))
            if not feasible or not math.isfinite(closed):
                item.update(status="infeasible", reason="closed form is infinite; no oracle comparison")
                results.append(item)
                continue
            try:
                res = pair.evaluate(kind, a)
            except SpectrumFloorHit as exc:
                item.update(status="skipped", reason=f"SpectrumFloorHit: {exc}")
                results.append(item)
                continue
            item.update(
                status="compared",
                oracle=_json_number(res.value),
                rel_error=_relative_error(res.value, closed),
                roundoff_probe=res.diagnostics["roundoff_probe"],
            )
            results.append(item)
    entry["results"] = results
    return entry


def run_oracle_check(seed, pairs, modes, alphas, kinds=("petz", "sandwiched"), max_cutoff=80,
                     tolerance=ORACLE_TOLERANCE):
    """Build the oracle-check report; deterministic for fixed arguments."""
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "oracle-check",
        "inputs": {
            "seed": int(seed),
            "pairs": int(pairs),
            "modes": int(modes),
            "alphas": [float(a) for a in alphas],
            "kinds": list(kinds),
            "max_cutoff": int(max_cutoff),
            "max_dim": fock.max_dim(),
            "tolerance": tolerance,
            "generator": {"nu_range": [1.1, 3.0], "r_max": 0.4, "mean_radius": 2.0},
        },
        "pairs": [],
    }
    worst = 0.0
    counts = {"compared": 0, "infeasible": 0, "skipped": 0}
    for i, (rho, sigma) in enumerate(random_pairs(seed, pairs, modes)):
        entry = {"index": i, "rho": state_to_dict(rho), "sigma": state_to_dict(sigma)}
        entry.update(check_pair(rho, sigma, alphas, kinds, max_cutoff))
        if entry["status"] == "skipped":
            counts["skipped"] += 1
        for item in entry["results"]:
            counts[item["status"]] += 1
            if item["status"] == "compared":
                worst = max(worst, item["rel_error"])
        report["pairs"].append(entry)
    report["summary"] = dict(
        counts,
        max_rel_error=worst,
        passed=bool(counts["compared"] > 0 and worst <= tolerance),
    )
    return report


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def cmd_oracle_check(args, out):
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
        for a in alphas:
            dv._check_alpha(a)
        kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
        bad = set(kinds) - set(ORACLE_KINDS)
        if bad:
            raise _UsageError(f"unknown kinds {sorted(bad)}; choose from {ORACLE_KINDS}")
    except (ValueError, _UsageError) as exc:
        args.parser.error(str(exc))
    if args.pairs < 1:
        args.parser.error("--pairs must be at least 1")

    t0 = time.perf_counter()
    report = run_oracle_check(args.seed, args.pairs, args.modes, alphas, kinds, args.max_cutoff)
    elapsed = time.perf_counter() - t0
    if args.timing:
        report["wall_time_s"] = elapsed
    text = dumps_report(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    s = report["summary"]
    print(
        f"compared {s['compared']}, infeasible {s['infeasible']}, skipped {s['skipped']}, "
        f"max relative error {s['max_rel_error']:.3e}, {elapsed:.1f} s",
        file=sys.stderr,
    )
    return EXIT_OK if s["passed"] else EXIT_ERROR


# ----------------------------------------------------------------------- parser


def build_parser():
    parser = _Parser(prog="gaussrenyi", description="Renyi divergences of Gaussian states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a state file")
    p.add_argument("state")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compute", help="evaluate one measure for a pair of states")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.add_argument("--measure", required=True, choices=MEASURES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--family", choices=ALPHA_MEASURES, default="petz",
                   help="Renyi family whose alpha -> 1 limit gives the relative entropy")
    p.add_argument("--bits", action="store_true", help="report entropies in bits")
    fmt_group = p.add_mutually_exclusive_group()
    fmt_group.add_argument("--json", dest="format", action="store_const", const="json")
    fmt_group.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.set_defaults(func=cmd_compute, format="text")

    p = sub.add_parser("sweep", help="evaluate a measure over a grid of orders")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.add_argument("--measure", required=True, choices=ALPHA_MEASURES)
    p.add_argument("--alpha-grid", required=True, help="start:stop:count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="compare closed forms with the Fock-space oracle")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--pairs", type=int, default=5)
    p.add_argument("--modes", type=int, choices=(1, 2), default=1)
    p.add_argument("--alphas", default="0.5", help="comma-separated orders")
    p.add_argument("--kinds", default="petz,sandwiched", help=f"comma-separated subset of {ORACLE_KINDS}")
    p.add_argument("--max-cutoff", type=int, default=80)
    p.add_argument("--report")
    p.add_argument("--timing", action="store_true",
                   help="add wall time to the report (makes it non-reproducible)")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None, out=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    try:
        return args.func(args, out if out is not None else sys.stdout)
    except AlphaOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
