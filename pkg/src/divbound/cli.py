"""Command-line front end.

Every command accepts either flags or ``--config file.json`` whose keys are
the long flag names (dashes or underscores); flags given on the command line
take precedence.  Data goes to stdout (or ``--out``), diagnostics to stderr.
Exit status: 0 on success, 2 on usage or precondition errors, 1 on internal
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from . import elliptical, gamma_tv, oracle, student_normal
from .core import DivboundError, PreconditionError
from .reduction import CovariancePair, DiagonalScales, NotPositiveDefiniteError, reduce_pair


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def parse_n_range(text: str) -> list[int]:
    """``"10..800..10"``, ``"2..10"``, ``"5"`` or ``"2,4,8"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            parts = [int(p) for p in text.split("..")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step < 1 or stop < start:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad --n value {text!r}; expected e.g. 10..800..10, 5 or 2,4,8") from None
    if not values or min(values) < 1:
        raise UsageError(f"--n must select dimensions >= 1, got {text!r}")
    if max(values) > student_normal.MAX_DIMENSION:
        raise UsageError(f"--n exceeds the supported maximum {student_normal.MAX_DIMENSION}")
    return values


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_d_file(path: str) -> list[float]:
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("d")
    if not isinstance(data, list) or not data:
        raise UsageError(f"{path} must hold a non-empty JSON array (or an object with key 'd')")
    try:
        return [float(v) for v in data]
    except (TypeError, ValueError):
        raise UsageError(f"{path}: scale entries must be numbers") from None


def resolve_scales(args: argparse.Namespace, n_max: int) -> tuple[list[float], bool]:
    """The scale vector and whether it was generated from ``--d-range``."""
    if args.d_file and args.d_range:
        raise UsageError("give either --d-file or --d-range, not both")
    if args.d_file:
        d = _load_d_file(args.d_file)
        generated = False
    elif args.d_range:
        lo, hi = (float(v) for v in args.d_range)
        if not 0 < lo <= hi:
            raise UsageError("--d-range needs 0 < LO <= HI")
        dim = int(args.d_dim) if args.d_dim else n_max
        rng = np.random.default_rng(int(args.d_seed or 0))
        d = [float(v) for v in rng.uniform(lo, hi, size=dim)]
        generated = True
    else:
        d = [1.0] * n_max
        generated = False
    if len(d) < n_max:
        raise UsageError(f"scale vector has {len(d)} entries but the sweep needs n up to {n_max}")
    if any(not (v > 0 and math.isfinite(v)) for v in d):
        raise UsageError("scale entries must be finite and positive")
    return d, generated


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def render(columns: Sequence[str], rows: Sequence[dict], fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"columns": list(columns), "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        if extra:
            doc.update({k: _json_value(v) for k, v in extra.items()})
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_scales(args: argparse.Namespace, d: Sequence[float], generated: bool) -> None:
    path = args.d_out or (args.out + ".d.json" if args.out and generated else None)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"d": list(d), "d_range": args.d_range, "d_seed": args.d_seed}, fh)
            fh.write("\n")


def thread_count() -> int:
    cap = os.environ.get("DIVBOUND_THREADS")
    default = min(8, os.cpu_count() or 1)
    if cap:
        try:
            return max(1, min(default, int(cap)))
        except ValueError:
            raise UsageError(f"DIVBOUND_THREADS must be an integer, got {cap!r}") from None
    return default


def ordered_map(fn: Callable, items: Sequence) -> list:
    """Parallel map whose results come back in input order."""
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

TV_COLUMNS = ("n", "lower", "upper", "regime", "n0", "regime_change", "clipped", "d_minus", "d_plus", "log_c", "reason")


def _tv_row(nu: float, d: Sequence[float], n: int) -> dict:
    scales = DiagonalScales.from_values(d[:n])
    problem = student_normal.StudentNormalProblem(nu, scales)
    n0 = student_normal.compute_n0(nu, scales.d_minus)
    row = {"n": n, "n0": n0, "d_minus": scales.d_minus, "d_plus": scales.d_plus, "log_c": problem.log_c}
    try:
        bound = student_normal.tv_bounds_student_normal(problem)
    except PreconditionError as exc:
        row["reason"] = "n<n0" if exc.code == student_normal.N_TOO_SMALL else exc.code
        return row
    row.update(lower=bound.lower, upper=bound.upper, regime=bound.regime, clipped=bound.clipped)
    return row


def cmd_student_normal_tv(args: argparse.Namespace) -> int:
    nu = _require_float(args, "nu")
    ns = parse_n_range(_require(args, "n"))
    d, generated = resolve_scales(args, max(ns))
    rows = ordered_map(lambda n: _tv_row(nu, d, n), ns)
    prev = None
    for r in rows:
        regime = r.get("regime")
        r["regime_change"] = bool(regime and prev and regime != prev)
        if regime:
            prev = regime
    extra = {"nu": nu, "d": d} if args.format == "json" else None
    _emit(args, render(TV_COLUMNS, rows, args.format, extra))
    _emit_scales(args, d, generated)
    skipped = sum(1 for r in rows if r.get("reason"))
    if skipped:
        print(f"{skipped} of {len(rows)} dimensions lie below n0; their bounds are left empty", file=sys.stderr)
    return 0


KL_COLUMNS = ("n", "kl_forward", "reverse_lower", "reverse_upper", "reverse_clipped", "d_minus", "d_plus")


def _kl_row(nu: float, d: Sequence[float], n: int) -> dict:
    problem = student_normal.StudentNormalProblem(nu, DiagonalScales.from_values(d[:n]))
    rev = student_normal.kl_reverse_bounds(problem)
    return {
        "n": n,
        "kl_forward": student_normal.kl_exact_t_vs_normal(problem),
        "reverse_lower": rev.lower,
        "reverse_upper": rev.upper,
        "reverse_clipped": rev.clipped,
        "d_minus": problem.d.d_minus,
        "d_plus": problem.d.d_plus,
    }


def cmd_student_normal_kl(args: argparse.Namespace) -> int:
    nu = _require_float(args, "nu")
    ns = parse_n_range(_require(args, "n"))
    d, generated = resolve_scales(args, max(ns))
    rows = ordered_map(lambda n: _kl_row(nu, d, n), ns)
    extra = {"nu": nu, "d": d} if args.format == "json" else None
    _emit(args, render(KL_COLUMNS, rows, args.format, extra))
    _emit_scales(args, d, generated)
    return 0


def load_gamma_spec(path: str) -> gamma_tv.GammaProductSpec:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path} must hold a JSON object with keys alpha, beta, lambda, mu")
    try:
        vals = [data[k] for k in ("alpha", "beta")] + [data.get("lambda", data.get("lam")), data["mu"]]
    except KeyError as exc:
        raise UsageError(f"{path} is missing key {exc}") from None
    if any(v is None for v in vals):
        raise UsageError(f"{path} is missing key 'lambda'")
    vals = [v if isinstance(v, list) else [v] for v in vals]
    try:
        return gamma_tv.GammaProductSpec(*vals)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


GAMMA_COLUMNS = ("n", "point", "eps_bound", "lower", "upper", "c0", "flags")


def cmd_gamma_tv(args: argparse.Namespace) -> int:
    spec = load_gamma_spec(_require(args, "spec"))
    c0 = float(args.c0) if args.c0 is not None else gamma_tv.DEFAULT_C0
    est = gamma_tv.tv_estimate(spec, c0)
    row = {
        "n": spec.n,
        "point": est.point,
        "eps_bound": est.eps_bound,
        "lower": est.lower,
        "upper": est.upper,
        "c0": est.c0_used,
        "flags": ";".join(est.flags),
    }
    _emit(args, render(GAMMA_COLUMNS, [row], args.format))
    return 0


ELLIPTICAL_COLUMNS = ("quantity", "lower", "upper", "exact")


def cmd_elliptical(args: argparse.Namespace) -> int:
    ns = parse_n_range(_require(args, "n"))
    if len(ns) != 1:
        raise UsageError("elliptical takes a single dimension --n")
    n = ns[0]
    d, generated = resolve_scales(args, n)
    try:
        g1 = elliptical.generator_from_preset(_require(args, "g1"), n)
        g2 = elliptical.generator_from_preset(args.g2 or "normal", n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scales = DiagonalScales.from_values(d[:n])
    equal = scales.d_minus == scales.d_plus == 1.0
    rows = []
    what = args.what or "both"
    if what in ("tv", "both"):
        b = elliptical.tv_bounds(g1, g2, scales)
        exact = elliptical.tv_exact_equal_scales(g1, g2) if equal else None
        rows.append({"quantity": "tv", "lower": b.lower, "upper": b.upper, "exact": exact})
    if what in ("kl", "both"):
        b = elliptical.kl_bounds(g1, g2, scales)
        exact = elliptical.kl_exact_equal_scales(g1, g2) if equal else None
        rows.append({"quantity": "kl", "lower": b.lower, "upper": b.upper, "exact": exact})
    _emit(args, render(ELLIPTICAL_COLUMNS, rows, args.format))
    _emit_scales(args, d[:n], generated)
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    path = _require(args, "sigma_file")
    data = _read_json(path)
    try:
        pair = CovariancePair(np.asarray(data["sigma1"], dtype=float), np.asarray(data["sigma2"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: need square symmetric 'sigma1' and 'sigma2' ({exc})") from None
    try:
        scales = reduce_pair(pair)
    except NotPositiveDefiniteError as exc:
        raise UsageError(f"{path}: {exc}") from None
    rows = [{"index": i, "d": v} for i, v in enumerate(scales.d)]
    _emit(args, render(("index", "d"), rows, args.format, {"d_minus": scales.d_minus, "d_plus": scales.d_plus}))
    return 0


ORACLE_COLUMNS = ("estimator", "estimate", "std_error", "samples", "seed")


def _oracle_setup(args: argparse.Namespace):
    preset = _require(args, "preset")
    if preset == "gamma":
        spec = load_gamma_spec(_require(args, "spec"))
        s1 = lambda rng, m: oracle.sample_gamma_product(spec.alpha, spec.lam, rng, m)  # noqa: E731
        s2 = lambda rng, m: oracle.sample_gamma_product(spec.beta, spec.mu, rng, m)  # noqa: E731
        l1 = lambda x: oracle.gamma_product_log_pdf(x, spec.alpha, spec.lam)  # noqa: E731
        l2 = lambda x: oracle.gamma_product_log_pdf(x, spec.beta, spec.mu)  # noqa: E731
        return s1, s2, l1, l2
    if preset not in ("student-normal", "normal-student"):
        raise UsageError(f"unknown preset {preset!r}; use student-normal, normal-student or gamma")
    nu = _require_float(args, "nu")
    ns = parse_n_range(_require(args, "n"))
    if len(ns) != 1:
        raise UsageError("oracle takes a single dimension --n")
    n = ns[0]
    d, _ = resolve_scales(args, n)
    d = d[:n]
    st = (lambda rng, m: oracle.sample_student(nu, n, rng, m), lambda x: oracle.student_log_pdf(x, nu))
    nm = (lambda rng, m: oracle.sample_diag_normal(d, rng, m), lambda x: oracle.diag_normal_log_pdf(x, d))
    first, second = (st, nm) if preset == "student-normal" else (nm, st)
    return first[0], second[0], first[1], second[1]


def cmd_oracle(args: argparse.Namespace) -> int:
    s1, s2, l1, l2 = _oracle_setup(args)
    cfg = oracle.McConfig(
        samples=int(args.samples or 1_000_000),
        seed=int(args.seed or 0),
        chunk=int(args.chunk or (1 << 16)),
        workers=thread_count(),
    )
    if args.estimator == "mc-tv":
        res = oracle.mc_tv(s1, s2, l1, l2, cfg)
    else:
        res = oracle.mc_kl(s1, l1, l2, cfg)
    row = {
        "estimator": args.estimator,
        "estimate": res.estimate,
        "std_error": res.std_error,
        "samples": res.samples_used,
        "seed": cfg.seed,
    }
    _emit(args, render(ORACLE_COLUMNS, [row], args.format))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _require(args: argparse.Namespace, name: str):
    v = getattr(args, name, None)
    if v is None:
        raise UsageError(f"missing required option --{name.replace('_', '-')}")
    return v


def _require_float(args: argparse.Namespace, name: str) -> float:
    try:
        v = float(_require(args, name))
    except (TypeError, ValueError):
        raise UsageError(f"--{name} must be a number") from None
    if not (v > 0 and math.isfinite(v)):
        raise UsageError(f"--{name} must be positive and finite")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values (keys are long option names)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", help="write data here instead of stdout")


def _add_scales(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d-file", help="JSON array of scales (or object with key 'd')")
    p.add_argument("--d-range", nargs=2, metavar=("LO", "HI"), help="draw scales uniformly from [LO, HI]")
    p.add_argument("--d-seed", type=int, help="seed for --d-range (default 0)")
    p.add_argument("--d-dim", type=int, help="length of the generated vector (default: largest n)")
    p.add_argument("--d-out", help="where to write the scale vector used")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divbound", description="Bounds on TVD and KLD between high-dimensional laws.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("student-normal-tv", help="TVD bounds, Student t vs diagonal normal, over a dimension sweep")
    _add_common(p)
    _add_scales(p)
    p.add_argument("--nu")
    p.add_argument("--n", help="dimension(s): 10..800..10, 5 or 2,4,8")
    p.set_defaults(func=cmd_student_normal_tv)

    p = sub.add_parser("student-normal-kl", help="exact KLD and reverse-KLD bounds over a dimension sweep")
    _add_common(p)
    _add_scales(p)
    p.add_argument("--nu")
    p.add_argument("--n")
    p.set_defaults(func=cmd_student_normal_kl)

    p = sub.add_parser("gamma-tv", help="normal-approximation TVD between Gamma products")
    _add_common(p)
    p.add_argument("--spec", help="JSON with vectors alpha, beta, lambda, mu")
    p.add_argument("--c0", type=float, help=f"Berry-Esseen constant (default {gamma_tv.DEFAULT_C0})")
    p.set_defaults(func=cmd_gamma_tv)

    p = sub.add_parser("elliptical", help="generic TVD/KLD bounds between two elliptical laws")
    _add_common(p)
    _add_scales(p)
    p.add_argument("--g1", help="generator preset: student:<nu>, normal, normal:<variance>")
    p.add_argument("--g2", help="generator preset (default normal)")
    p.add_argument("--n")
    p.add_argument("--what", choices=("tv", "kl", "both"))
    p.set_defaults(func=cmd_elliptical)

    p = sub.add_parser("reduce", help="reduce a covariance pair to diagonal scales")
    _add_common(p)
    p.add_argument("--sigma-file", help="JSON object with matrices sigma1 and sigma2")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("oracle", help="Monte Carlo estimates of TVD or KLD")
    p.add_argument("estimator", choices=("mc-tv", "mc-kl"))
    _add_common(p)
    _add_scales(p)
    p.add_argument("--preset", help="student-normal, normal-student or gamma")
    p.add_argument("--nu")
    p.add_argument("--n")
    p.add_argument("--spec", help="Gamma spec JSON for the gamma preset")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chunk", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    data = _read_json(args.config)
    if not isinstance(data, dict):
        raise UsageError(f"{args.config} must hold a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "func", "config"):
            continue
        if not hasattr(args, dest):
            raise UsageError(f"{args.config}: unknown option {key!r} for {args.command}")
        if getattr(args, dest) is None:
            if isinstance(value, (int, float)) and dest in ("n", "nu"):
                value = str(value)
            setattr(args, dest, value)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        if args.format is None:
            args.format = "csv"
        if args.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        return args.func(args)
    except UsageError as exc:
        print(f"divbound {args.command}: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"divbound {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DivboundError, ArithmeticError) as exc:
        print(f"divbound {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"divbound {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
