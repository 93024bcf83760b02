"""Command-line front end: ``nclp <command> [flags]``.

Every command writes ``<command>.json`` (an envelope around the results)
and, where a table makes sense, ``<command>.csv`` into ``--output-dir``.
Exit codes: 0 success, 2 invalid input, 3 a verification suite found a
genuine property failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import NclpError
from .interpolation import (
    LorentzParams,
    divergence_curve,
    k_functional_curve,
    k_functional_generic,
    k_functional_s1_sinf,
    lorentz_schatten_norm,
    lorentz_seq_norm,
    real_interp_norm,
    symmetric_pair,
)
from .mixed import as_tuple, diag_column_embed, mixed_norm
from .spectral import INF, ExponentTriple, as_square, matrix_from_json, matrix_to_json, schatten_norm
from .theorem_lab import (
    amplify_violation,
    counterexample_expansion,
    counterexample_pair,
    counterexample_values,
    find_violation,
    log_convexity_suite,
    log_grid,
    power_mean_suite,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def exponent(text: str) -> float:
    """Parse a positive exponent; ``inf`` spells infinity."""
    if text.strip().lower() in ("inf", "infinity"):
        return INF
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an exponent: {text!r}") from None
    if not val > 0 or math.isnan(val) or math.isinf(val):
        raise argparse.ArgumentTypeError(f"exponent must be positive (or inf), got {text!r}")
    return val


def positive_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text!r}")
    return val


def positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return val


def unit_interval(text: str) -> float:
    val = positive_float(text)
    if not val < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text!r}")
    return val


def number_list(text: str) -> list:
    try:
        return [complex(tok.strip().replace("i", "j")) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None


def _real_list(vals):
    if any(v.imag != 0 for v in vals):
        raise UsageError("expected real numbers")
    return [v.real for v in vals]


def entries_matrix(text: str) -> np.ndarray:
    """``"1,2;3,4"``: rows separated by ``;``, complex entries like ``1+2j`` allowed."""
    rows = [number_list(row) for row in text.split(";")]
    if not rows or len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError("matrix rows must have equal length")
    return np.array(rows, dtype=complex)


# ----------------------------------------------------------------------------
# input helpers


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read matrix file {path}: {exc}") from None


def _matrix_input(args) -> np.ndarray:
    given = [args.diag is not None, args.entries is not None, args.matrix is not None]
    if sum(given) != 1:
        raise UsageError("give exactly one of --diag, --entries, --matrix")
    if args.diag is not None:
        return np.diag(np.asarray(args.diag, dtype=complex))
    if args.entries is not None:
        return as_square(args.entries)
    return matrix_from_json(_load_json(args.matrix))


def _tuple_input(args) -> np.ndarray:
    given = [args.diag is not None, args.matrix is not None]
    if sum(given) != 1:
        raise UsageError("give exactly one of --diag, --matrix")
    if args.diag is not None:
        return diag_column_embed(_real_list(args.diag))
    obj = _load_json(args.matrix)
    items = obj.get("tuple") if isinstance(obj, dict) else obj
    if not isinstance(items, list):
        raise UsageError("tuple file must hold a list of matrix objects or {\"tuple\": [...]}")
    return as_tuple([matrix_from_json(m) for m in items])


# ----------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        if math.isinf(val):
            return "inf" if val > 0 else "-inf"
        if math.isnan(val):
            return None
        return val
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1]:
            return matrix_to_json(obj)
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return obj.real if obj.imag == 0 else {"re": obj.real, "im": obj.imag}
    return obj


def atomic_write(path: str, text: str) -> None:
    """Write `text` to `path` through a temporary file and a rename."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return v


def _config(args) -> dict:
    skip = {"func", "output_dir", "format"}
    return _jsonable({k: v for k, v in sorted(vars(args).items()) if k not in skip})


def emit(args, results: dict, table=None) -> None:
    """Write the JSON envelope and/or the CSV table for a command."""
    stem = os.path.join(args.output_dir, args.command)
    if args.format in ("json", "both"):
        envelope = {
            "tool_version": __version__,
            "command": args.command,
            "config": _config(args),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "results": _jsonable(results),
        }
        atomic_write(stem + ".json", json.dumps(envelope, indent=2, sort_keys=True) + "\n")
    if table is not None and args.format in ("csv", "both"):
        header, rows = table
        atomic_write(stem + ".csv", csv_text(header, rows))


def _say(text: str) -> None:
    print(text)


# ----------------------------------------------------------------------------
# commands


def cmd_norm(args):
    m = _matrix_input(args)
    val = schatten_norm(m, args.p)
    emit(args, {"p": args.p, "norm": val}, (["p", "value"], [(args.p, val)]))
    _say(f"||x||_{args.p:g} = {val:.12g}")
    return EXIT_OK


def cmd_mixed(args):
    ExponentTriple(args.p, args.q).mixed_norm_domain()
    xs = _tuple_input(args)
    est = mixed_norm(xs, args.p, args.q, restarts=args.restarts, seed=args.seed)
    res = est.to_json()
    trip = ExponentTriple(args.p, args.q)
    if args.diag is not None:
        scal = np.abs(_real_list(args.diag))
        res["exact_diagonal_value"] = float(np.sum(scal ** trip.r_pq) ** (1.0 / trip.r_pq)) \
            if math.isfinite(trip.r_pq) else float(scal.max())
    emit(args, res, (["lower", "value", "upper", "gap", "status"],
                     [(est.lower, est.value, est.upper, est.gap, est.status)]))
    _say(f"mixed norm in [{est.lower:.12g}, {est.upper:.12g}], gap {est.gap:.2e}, {est.status}")
    return EXIT_OK


def _t_range(args):
    if args.t_min >= args.t_max:
        raise UsageError("--t-min must be smaller than --t-max")


def cmd_kfun(args):
    m = _matrix_input(args)
    _t_range(args)
    lo, hi = math.floor(math.log2(args.t_min)), math.ceil(math.log2(args.t_max))
    half = max(abs(lo), abs(hi))
    curve = k_functional_curve(m, (args.p0, args.p1), half_width=half)
    keep = (curve.grid >= 2.0**lo) & (curve.grid <= 2.0**hi)
    rows = [(t, v) for t, v, k in zip(curve.grid, curve.values, keep) if k]
    checks = curve.check()
    emit(args, {"params": {"pair": curve.pair_tag, "p0": args.p0, "p1": args.p1},
                "rows": [{"t": t, "value": v} for t, v in rows], "checks": checks},
         (["t", "value"], rows))
    _say(f"K-functional {curve.pair_tag} on {len(rows)} dyadic points; checks {checks}")
    return EXIT_OK


def cmd_interp(args):
    m = _matrix_input(args)
    if args.p0 is None and args.p1 is None:
        p0, p1, theta = symmetric_pair(args.p)
    elif args.p0 is not None and args.p1 is not None:
        p0, p1 = args.p0, args.p1
        ip0, ip1, ip = 1 / p0, (0.0 if p1 == INF else 1 / p1), (0.0 if args.p == INF else 1 / args.p)
        if ip0 == ip1:
            raise UsageError("--p0 and --p1 must differ")
        theta = (ip0 - ip) / (ip0 - ip1)
    else:
        raise UsageError("give both --p0 and --p1, or neither")
    if args.theta is not None:
        theta = args.theta
    if not 0 < theta < 1:
        raise UsageError(f"p must lie strictly between p0 and p1 (theta = {theta:g})")
    est = real_interp_norm(m, theta, args.p, (p0, p1))
    ref = schatten_norm(m, args.p)
    res = est.to_json()
    res.update(theta=theta, p0=p0, p1=p1, schatten_norm=ref,
               equivalence_ratio=est.value / ref if ref > 0 else None)
    emit(args, res, (["theta", "lower", "upper", "schatten_norm"], [(theta, est.lower, est.upper, ref)]))
    _say(f"(S_{p0:g}, S_{p1:g})_{{{theta:.4g},{args.p:g}}} norm in [{est.lower:.10g}, {est.upper:.10g}]"
         f" vs ||x||_{args.p:g} = {ref:.10g}")
    return EXIT_OK


def cmd_lorentz(args):
    params = LorentzParams(args.r, args.p)
    if args.diag is not None and args.entries is None and args.matrix is None:
        val = lorentz_seq_norm(_real_list(args.diag), params)
        kind = "sequence"
    else:
        val = lorentz_schatten_norm(_matrix_input(args), params)
        kind = "schatten"
    emit(args, {"r": args.r, "p": args.p, "kind": kind, "norm": val},
         (["r", "p", "value"], [(args.r, args.p, val)]))
    _say(f"Lorentz ({args.r:g}, {args.p:g}) {kind} norm = {val:.12g}")
    return EXIT_OK


def cmd_verify(args):
    if args.suite == "thm3":
        if args.r is not None and args.q is not None and not args.r <= args.q:
            raise UsageError("--r must not exceed --q")
        if args.q == INF or args.r == INF:
            raise UsageError("--q and --r must be finite")
        out = power_mean_suite(args.trials, args.seed, p=args.p, q=args.q, r=args.r, jobs=args.jobs)
        key, val = "min_relative_margin", out["min_relative_margin"]
        table = (["trial", "p", "q", "r", "lhs", "rhs", "margin", "ratio"],
                 [(w["trial"], w["p"], w["q"], w["r"], w["lhs"], w["rhs"], w["margin"], w["ratio"])
                  for w in out["rows"]])
    elif args.suite == "logconv":
        out = log_convexity_suite(args.trials, args.seed, p=args.p, jobs=args.jobs)
        key, val = "min_gap", out["min_gap"]
        table = (["trial", "p", "q0", "q1", "alpha", "gap"],
                 [(w["trial"], w["p"], w["q0"], w["q1"], w["alpha"], w["gap"]) for w in out["rows"]])
    else:
        out = _kfun_suite(args.trials, args.seed)
        key, val = "max_relative_error", out["max_relative_error"]
        table = (["trial", "dim", "t", "closed_form", "generic", "relative_error"], out["rows"])
    emit(args, out, table)
    _say(f"verify {args.suite}: {out['trials']} trials, {key} {val if val is None else f'{val:.3e}'},"
         f" {'passed' if out['passed'] else 'FAILED'}")
    return EXIT_OK if out["passed"] else EXIT_FAILURE


def _kfun_suite(trials, seed, tol=1e-6):
    from .theorem_lab import trial_rng

    rows = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        n = int(rng.integers(2, 7))
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for t in (0.5, 1.0, 2.0, 5.0):
            a = k_functional_s1_sinf(x, t)
            b = k_functional_generic(x, t, 1.0, INF).value
            rows.append((i, n, t, a, b, abs(a - b) / max(abs(a), 1e-300)))
    err = max(r[-1] for r in rows)
    return {"suite": "kfun", "trials": trials, "max_relative_error": err, "passed": err <= tol,
            "rows": rows}


def cmd_counterexample(args):
    if not (0 < args.p < 1 < args.q < INF):
        raise UsageError("counterexample needs 0 < p < 1 < q < inf")
    _t_range(args)
    if args.t_max > 0.1:
        raise UsageError("--t-max must not exceed 0.1")
    grid = log_grid(args.t_min, args.t_max)
    sum_fit, pow_fit = counterexample_expansion(args.p, args.q, grid)
    rs, rp = sum_fit.point_residuals(), pow_fit.point_residuals()
    rows = []
    for i, t in enumerate(grid):
        ex_sum, ex_pow = counterexample_values(args.p, args.q, t)
        two = 2.0**args.p
        rows.append((t, two + ex_pow, two + ex_sum, rp[i], rs[i], bool(pow_fit.used[i])))
    amp = amplify_violation(counterexample_pair(args.t_amp), args.p, args.q, 1.0, max_k=args.k_max)
    res = {
        "sum_fit": {"exponent": sum_fit.fitted_exponent, "coefficient": sum_fit.fitted_coefficient,
                    "residual": sum_fit.residual, "expected_coefficient": 2.0 ** (-args.p)},
        "power_fit": {"exponent": pow_fit.fitted_exponent, "coefficient": pow_fit.fitted_coefficient,
                      "residual": pow_fit.residual, "expected_coefficient": 2.0 ** (-args.p / args.q)},
        "amplification": {"t": args.t_amp, "k": amp.k, "ratio": amp.ratio, "status": amp.status,
                          "multiprecision_ratio": amp.multiprecision_ratio, "rows": amp.rows},
    }
    emit(args, res, (["t", "lhs_p", "rhs_p", "lhs_residual", "rhs_residual", "fitted"], rows))
    _say(f"||x+y||_p^p - 2^p ~ {sum_fit.fitted_coefficient:.4f} t^{sum_fit.fitted_exponent:.4f};"
         f" ||(x^q+y^q)^(1/q)||_p^p - 2^p ~ {pow_fit.fitted_coefficient:.4f} t^{pow_fit.fitted_exponent:.4f};"
         f" amplified ratio {amp.ratio:.6f} at k={amp.k} ({amp.status})")
    return EXIT_OK


def cmd_divergence(args):
    if args.n_min > args.n_max:
        raise UsageError("--n-min must not exceed --n-max")
    sizes = []
    n = args.n_min
    while n <= args.n_max:
        sizes.append(n)
        n *= 2
    table = divergence_curve(args.r, args.p, sizes)
    rows = table.rows()
    emit(args, {"params": {"r": args.r, "p": args.p, "slope": table.slope,
                           "predicted_slope": table.predicted_slope},
                "rows": [{"n": n, "value": v} for n, v in rows]},
         (["n", "value"], rows))
    _say(f"l_(r,p)/l_r on k^(-1/r): {rows[0][1]:.6g} at n={rows[0][0]} to {rows[-1][1]:.6g} at n={rows[-1][0]};"
         f" slope vs log log n {table.slope if table.slope is None else f'{table.slope:.4f}'}"
         f" (predicted {table.predicted_slope:.4f})")
    return EXIT_OK


def cmd_amplify(args):
    if not (args.p < args.r < args.q < INF):
        raise UsageError("amplify needs p < r < q < inf")
    rep = find_violation(args.p, args.q, args.r, trials=args.trials, seed=args.seed,
                         jobs=args.jobs, max_k=args.k_max)
    summary = rep.summary()
    emit(args, {"summary": summary, "trials": rep.trials},
         (["trial", "family", "ratio"], [(t["trial"], t["family"], t["ratio"]) for t in rep.trials]))
    if args.format in ("json", "both"):
        lines = "".join(json.dumps(_jsonable(t), sort_keys=True) + "\n" for t in rep.trials)
        atomic_write(os.path.join(args.output_dir, "amplify-trials.jsonl"), lines)
    ratio = rep.amplified_ratio
    _say(f"violation search: {rep.status}" + (f", ratio {ratio:.6f} at k={rep.k}" if ratio else ""))
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (NCLP_SEED overrides)")
    p.add_argument("--jobs", type=positive_int, default=1, help="worker processes")
    p.add_argument("--output-dir", default="nclp-out", help="directory for results")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")


def _matrix_flags(p):
    p.add_argument("--diag", type=number_list, help="diagonal entries, comma separated")
    p.add_argument("--entries", type=entries_matrix, help="rows separated by ';', entries by ','")
    p.add_argument("--matrix", help="JSON file {dim, re, im}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nclp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nclp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="Schatten norm of a matrix")
    p.add_argument("--p", type=exponent, required=True)
    _matrix_flags(p)
    _common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("mixed", help="mixed norm L_p(l_q) of a matrix tuple")
    p.add_argument("--p", type=exponent, required=True)
    p.add_argument("--q", type=exponent, required=True)
    p.add_argument("--diag", type=number_list, help="scalars for the diagonal column embedding")
    p.add_argument("--matrix", help="JSON file with a list of matrix objects")
    p.add_argument("--restarts", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_mixed)

    p = sub.add_parser("kfun", help="K-functional curve on a dyadic grid")
    p.add_argument("--p0", type=exponent, default=1.0)
    p.add_argument("--p1", type=exponent, default=INF)
    p.add_argument("--t-min", type=positive_float, default=2.0**-8)
    p.add_argument("--t-max", type=positive_float, default=2.0**8)
    _matrix_flags(p)
    _common(p)
    p.set_defaults(func=cmd_kfun)

    p = sub.add_parser("interp", help="real interpolation norm against the Schatten norm")
    p.add_argument("--p", type=exponent, required=True)
    p.add_argument("--p0", type=exponent)
    p.add_argument("--p1", type=exponent)
    p.add_argument("--theta", type=unit_interval)
    _matrix_flags(p)
    _common(p)
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("lorentz", help="Lorentz sequence or Lorentz-Schatten norm")
    p.add_argument("--r", type=exponent, required=True)
    p.add_argument("--p", type=exponent, required=True)
    _matrix_flags(p)
    _common(p)
    p.set_defaults(func=cmd_lorentz)

    p = sub.add_parser("verify", help="property suites")
    p.add_argument("suite", choices=("thm3", "logconv", "kfun"))
    p.add_argument("--p", type=exponent)
    p.add_argument("--q", type=exponent)
    p.add_argument("--r", type=exponent)
    p.add_argument("--trials", type=positive_int, default=1000)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", help="2x2 counterexample expansion and amplification")
    p.add_argument("--p", type=exponent, default=0.5)
    p.add_argument("--q", type=exponent, default=2.0)
    p.add_argument("--t-min", type=positive_float, default=1e-5)
    p.add_argument("--t-max", type=positive_float, default=1e-2)
    p.add_argument("--t-amp", type=positive_float, default=1e-2)
    p.add_argument("--k-max", type=positive_int, default=12)
    _common(p)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("divergence", help="Lorentz vs l_r ratios on the profile k^(-1/r)")
    p.add_argument("--r", type=exponent, required=True)
    p.add_argument("--p", type=exponent, required=True)
    p.add_argument("--n-min", type=positive_int, default=2**4)
    p.add_argument("--n-max", type=positive_int, default=2**20)
    _common(p)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("amplify", help="randomized violation search with tensor amplification")
    p.add_argument("--p", type=exponent, required=True)
    p.add_argument("--q", type=exponent, required=True)
    p.add_argument("--r", type=exponent, required=True)
    p.add_argument("--trials", type=positive_int, default=200)
    p.add_argument("--k-max", type=positive_int, default=12)
    _common(p)
    p.set_defaults(func=cmd_amplify)
    return parser


def run(argv=None) -> int:
    """Parse `argv`, run the command and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        env_seed = os.environ.get("NCLP_SEED")
        if env_seed is not None:
            try:
                args.seed = int(env_seed)
            except ValueError:
                raise UsageError(f"NCLP_SEED must be an integer, got {env_seed!r}") from None
        return args.func(args)
    except (UsageError, NclpError) as exc:
        msg = " ".join(str(exc).split())
        print(f"nclp: error: {msg}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
