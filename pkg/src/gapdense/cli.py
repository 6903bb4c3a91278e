"""Batch command line: one invocation, one CSV table plus a metadata sidecar.

Exit codes: 0 success, 1 failed ``--check`` or other numerical failure,
2 configuration/schema error, 3 precision exhausted, 4 atom at a zero of t.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import mpmath

from . import __version__
from .errors import (
    AtomAtZeroOfT,
    DensitySyntaxError,
    GapdenseError,
    PreconditionError,
    PrecisionExhausted,
    UnknownIdentifier,
)
from .expr import parse_density
from .gapspan import gap_project_normal, gap_project_weighted, muntz_partial_sums
from .measures import load_measure, measure_hash
from .orthopoly import build_system, coefficient_ratio
from .scalars import PrecisionContext, required_bits
from .sobolev import maindense2_demo, ratio_table
from .weighted import TFactor, build_weighted_system, counterexample_demo, expand_in_q, t_over_tk

log = logging.getLogger("gapdense")

BITS_ENV = "GAPDENSE_BITS"

# command -> {param: kind}; kinds: int, ints (list), str, bool, strs
SCHEMA = {
    "orthopoly": {"degree": "int"},
    "gapspan": {"f": "str", "j": "int", "N": "ints", "both_methods": "bool"},
    "tdense-demo": {"t": "str", "degree": "int"},
    "counterexample": {"w": "str"},
    "sobolev-demo": {"g": "str", "n": "int", "N": "ints"},
    "ratio-table": {"k": "int", "n": "ints"},
    "muntz": {"lambdas": "strs", "J": "int"},
}
NEEDS_MEASURE = {"orthopoly", "gapspan", "tdense-demo", "sobolev-demo", "ratio-table"}
OPTIONAL = {"both_methods": False}

HEADERS = {
    "orthopoly": ["n", "a_n", "b_n", "gamma_nn", "p_n(0)", "ratio_k0"],
    "gapspan": ["j", "N", "residual", "method"],
    "gapspan-both": ["j", "N", "residual", "method", "agreement"],
    "tdense-demo": ["k", "N", "residual"],
    "counterexample": ["d_t", "d1_sq"],
    "sobolev-demo": ["N", "objective", "q_norm", "gap_residual", "p_at_0"],
    "ratio-table": ["n", "ratio"],
    "muntz": ["i", "lambda", "S_i"],
}


class ConfigError(GapdenseError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    measure_path: str | None = None
    bits: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in SCHEMA:
            raise ConfigError(f"unknown command {self.command!r}")
        schema = SCHEMA[self.command]
        extra = set(self.params) - set(schema)
        if extra:
            raise ConfigError(f"unknown fields for {self.command}: {sorted(extra)}")
        missing = set(schema) - set(self.params) - set(OPTIONAL)
        if missing:
            raise ConfigError(f"missing fields for {self.command}: {sorted(missing)}")
        for key, kind in schema.items():
            if key in self.params:
                _check_kind(key, self.params[key], kind)
        if self.command in NEEDS_MEASURE and not self.measure_path:
            raise ConfigError(f"{self.command} needs a measure file")
        if self.command not in NEEDS_MEASURE and self.measure_path:
            raise ConfigError(f"{self.command} takes no measure")
        if self.bits is not None and (not isinstance(self.bits, int) or self.bits < 64):
            raise ConfigError("bits must be an integer >= 64")

    @classmethod
    def from_json(cls, obj) -> "ExperimentConfig":
        if not isinstance(obj, dict) or "command" not in obj:
            raise ConfigError("config must be an object with a 'command' field")
        obj = dict(obj)
        command = obj.pop("command")
        measure = obj.pop("measure", None)
        bits = obj.pop("bits", None)
        return cls(command, measure, bits, obj)

    def max_degree(self) -> int:
        p = self.params
        if self.command == "orthopoly":
            return p["degree"]
        if self.command in ("gapspan", "sobolev-demo"):
            return max(p["N"])
        if self.command == "tdense-demo":
            return p["degree"] + TFactor.parse(p["t"]).degree
        if self.command == "ratio-table":
            return max(p["n"])
        return 1


def _check_kind(key, value, kind):
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "ints": lambda v: isinstance(v, list) and v and all(isinstance(i, int) and not isinstance(i, bool) for i in v),
        "str": lambda v: isinstance(v, str) and v != "",
        "strs": lambda v: isinstance(v, list) and v and all(isinstance(s, (str, int)) and not isinstance(s, bool) for s in v),
        "bool": lambda v: isinstance(v, bool),
    }[kind](value)
    if not ok:
        raise ConfigError(f"field {key!r} must be of kind {kind}, got {value!r}")


def parse_int_list(text: str) -> list[int]:
    """``"5,10,20"`` or ``"5..30"`` (inclusive)."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not an integer list: {text!r}") from None


def resolve_context(cfg: ExperimentConfig) -> PrecisionContext:
    bits = cfg.bits
    if bits is None and os.environ.get(BITS_ENV):
        try:
            bits = int(os.environ[BITS_ENV])
        except ValueError:
            raise ConfigError(f"{BITS_ENV} must be an integer") from None
    if bits is None:
        bits = required_bits(max(cfg.max_degree(), 1))
    if bits < 64:
        raise ConfigError("bits must be >= 64")
    return PrecisionContext(bits)


def _table(cfg: ExperimentConfig, ctx: PrecisionContext):
    """Compute the table for ``cfg``: (header, rows of strings, stdout text or None)."""
    p = cfg.params
    fmt = ctx.fmt
    mu = load_measure(cfg.measure_path) if cfg.measure_path else None

    if cfg.command == "orthopoly":
        N = p["degree"]
        sys_ = build_system(mu, N, ctx)
        rows = []
        for n in range(N + 1):
            poly = sys_.polys[n]
            ratio = fmt(coefficient_ratio(sys_, n, 0)) if n >= 1 else ""
            rows.append([str(n), fmt(sys_.a[n]), fmt(sys_.b[n]), fmt(sys_.leading(n)), fmt(poly.coeff(0)), ratio])
        return HEADERS["orthopoly"], rows, None

    if cfg.command == "gapspan":
        f = parse_density(p["f"])
        both = p.get("both_methods", False)
        rows = []
        for N in p["N"]:
            a = gap_project_normal(f, p["j"], N, mu, ctx)
            if not both:
                rows.append([str(a.j), str(N), fmt(a.residual), a.method])
                continue
            b = gap_project_weighted(f, p["j"], N, mu, ctx)
            agree = max(
                [abs(u - v) / max(1, abs(u)) for u, v in zip(a.coeffs, b.coeffs)] + [abs(a.residual - b.residual)]
            )
            for r in (a, b):
                rows.append([str(r.j), str(N), fmt(r.residual), r.method, fmt(agree)])
        return HEADERS["gapspan-both" if both else "gapspan"], rows, None

    if cfg.command == "tdense-demo":
        t = TFactor.parse(p["t"])
        N = p["degree"]
        ws = build_weighted_system(mu, t, N, ctx)
        rows = []
        for k in range(1, t.degree + 1):
            exp = expand_in_q(t_over_tk(t, k), ws, N, ctx)
            rows += [[str(k), str(n), fmt(r)] for n, r in enumerate(exp.residuals)]
        return HEADERS["tdense-demo"], rows, None

    if cfg.command == "counterexample":
        res = counterexample_demo(p["w"], ctx)
        line = f"d_t={fmt(res.d_t)} d1_sq={fmt(res.d1_sq)}"
        return HEADERS["counterexample"], [[fmt(res.d_t), fmt(res.d1_sq)]], line

    if cfg.command == "sobolev-demo":
        g = parse_density(p["g"])
        rows = [
            [str(r.N), fmt(r.objective), fmt(r.q_norm), fmt(r.gap_residual), fmt(r.p_at_0)]
            for r in maindense2_demo(g, p["n"], p["N"], mu, ctx)
        ]
        return HEADERS["sobolev-demo"], rows, None

    if cfg.command == "ratio-table":
        tab = ratio_table(mu, p["k"], p["n"], ctx)
        return HEADERS["ratio-table"], [[str(n), fmt(v)] for n, v in tab], None

    if cfg.command == "muntz":
        lam = [str(v) for v in p["lambdas"]]
        sums = muntz_partial_sums(lam, p["J"])
        return HEADERS["muntz"], [[str(i + 1), lam[i], fmt(s)] for i, s in enumerate(sums)], None

    raise ConfigError(f"unknown command {cfg.command!r}")  # pragma: no cover


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def metadata(cfg: ExperimentConfig, ctx: PrecisionContext, csv_name: str) -> dict:
    mu_hash = measure_hash(load_measure(cfg.measure_path)) if cfg.measure_path else None
    return {
        "command": cfg.command,
        "params": cfg.params,
        "bits": ctx.mantissa_bits,
        "rel_tol": ctx.fmt(ctx.rel_tol),
        "measure_sha256": mu_hash,
        "csv": csv_name,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def run(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None, stdout=None) -> int:
    """Execute one experiment; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        ctx = resolve_context(cfg)
        header, rows, line = _table(cfg, ctx)
    except PrecisionExhausted as exc:
        log.error("precision exhausted: %s", exc)
        return 3
    except AtomAtZeroOfT as exc:
        log.error("atom at a zero of t: %s", exc)
        return 4
    except (ConfigError, PreconditionError, DensitySyntaxError, UnknownIdentifier, OSError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return 2
    except GapdenseError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    text = render_csv(header, rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = f"{cfg.command}.csv"
        (out / name).write_text(text, encoding="utf-8")
        meta = metadata(cfg, ctx, name)
        (out / f"{cfg.command}.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if line is not None:
        stdout.write(line + "\n")
    elif out_dir is None:
        stdout.write(text)
    return 0


# --- verification mode -------------------------------------------------------


def _num(s: str):
    mp = mpmath.MPContext()
    mp.dps = max(len(s), 20) + 5
    return mp.mpf(s)


def check_csv(path) -> list[str]:
    """Re-verify row-level invariants of a CSV emitted by :func:`run`.

    Returns a list of failure messages (empty when the file passes).
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        rows = [r for r in reader]
    kind = next((k for k, h in HEADERS.items() if h == header), None)
    if kind is None:
        raise ConfigError(f"{path}: unrecognized header {header}")
    if any(len(r) != len(header) for r in rows):
        raise ConfigError(f"{path}: ragged rows")
    digits = min((len(c.lstrip("-").replace(".", "")) for r in rows for c in r if c and "e" not in c), default=20)
    tol = mpmath.mpf(10) ** (-max(digits // 2, 8))
    fails = []

    def nonincreasing(values, label):
        for i in range(1, len(values)):
            if values[i] > values[i - 1] + tol * max(1, abs(values[0])):
                fails.append(f"{label}: value rises at row {i}")

    try:
        if kind == "orthopoly":
            b = [_num(r[2]) for r in rows]
            gam = [_num(r[3]) for r in rows]
            for i, r in enumerate(rows):
                if gam[i] <= 0:
                    fails.append(f"row {i}: gamma_nn not positive")
                if i >= 1:
                    if b[i] <= 0:
                        fails.append(f"row {i}: b_n not positive")
                    elif abs(gam[i] * b[i] - gam[i - 1]) > tol * gam[i - 1]:
                        fails.append(f"row {i}: gamma_nn b_n != gamma_(n-1)(n-1)")
        elif kind in ("gapspan", "gapspan-both"):
            groups = {}
            for r in rows:
                groups.setdefault((r[0], r[3]), []).append(_num(r[2]))
                if _num(r[2]) < 0:
                    fails.append("negative residual")
                if kind == "gapspan-both" and _num(r[4]) > tol:
                    fails.append(f"N={r[1]}: methods disagree by {r[4]}")
            for key, vals in groups.items():
                nonincreasing(vals, f"j={key[0]} {key[1]}")
        elif kind == "tdense-demo":
            groups = {}
            for r in rows:
                groups.setdefault(r[0], []).append(_num(r[2]))
            for k, vals in groups.items():
                nonincreasing(vals, f"k={k}")
        elif kind == "sobolev-demo":
            nonincreasing([_num(r[1]) for r in rows], "objective")
            for r in rows:
                obj, qn, gap = _num(r[1]), _num(r[2]), _num(r[3])
                if gap > mpmath.sqrt(obj) + qn + tol:
                    fails.append(f"N={r[0]}: triangle bound violated")
        elif kind == "ratio-table":
            if any(_num(r[1]) < 0 for r in rows):
                fails.append("negative ratio")
        elif kind == "muntz":
            vals = [_num(r[2]) for r in rows]
            if any(b < a for a, b in zip(vals, vals[1:])):
                fails.append("partial sums decrease")
        elif kind == "counterexample":
            if _num(rows[0][0]) != 0:
                fails.append("d_t is not zero")
            if _num(rows[0][1]) <= 0:
                fails.append("d1_sq is not positive")
    except ValueError as exc:
        raise ConfigError(f"{path}: unparseable number ({exc})") from None
    return fails


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapdense", description=__doc__.splitlines()[0])
    parser.add_argument("--check", metavar="CSV", help="re-verify the invariants of an emitted CSV")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    def common(p, measure=True):
        if measure:
            p.add_argument("--measure", required=True, help="measure JSON file")
        p.add_argument("--bits", type=int, help=f"mantissa bits (default: ${BITS_ENV} or the precision policy)")
        p.add_argument("--out", help="artifact directory for <command>.csv and <command>.json")
        return p

    p = common(sub.add_parser("orthopoly", help="recurrence table of the orthonormal system"))
    p.add_argument("--degree", type=int, required=True)

    p = common(sub.add_parser("gapspan", help="distance from f to span{x^j..x^N}"))
    p.add_argument("--f", required=True, help="integrand expression in x")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--N", required=True, help="comma list, e.g. 5,10,20")
    p.add_argument("--both-methods", action="store_true")

    p = common(sub.add_parser("tdense-demo", help="expansion residuals of t/t_k in the q_{n,t}"))
    p.add_argument("--t", required=True, help="c,s,x1,x2,...")
    p.add_argument("--degree", type=int, required=True)

    p = common(sub.add_parser("counterexample", help="mass point at a zero of t"), measure=False)
    p.add_argument("--w", required=True, help="atom weight, decimal string")

    p = common(sub.add_parser("sobolev-demo", help="penalized jet fits and gap residuals"))
    p.add_argument("--g", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", required=True)

    p = common(sub.add_parser("ratio-table", help="|gamma_{n,k}/gamma_{n,k+1}| table"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", required=True, help="e.g. 5..30 or 5,10,20")

    p = common(sub.add_parser("muntz", help="partial sums of sum lambda/(lambda^2+1)"), measure=False)
    p.add_argument("--lambdas", required=True, help="comma list of increasing positive exponents")
    p.add_argument("--J", type=int, required=True)

    p = sub.add_parser("run", help="run an experiment config JSON")
    p.add_argument("config")
    p.add_argument("--out")
    return parser


def config_from_args(args) -> ExperimentConfig:
    c = args.command
    if c == "run":
        with open(args.config, encoding="utf-8") as fh:
            return ExperimentConfig.from_json(json.load(fh))
    measure = getattr(args, "measure", None)
    if c == "orthopoly":
        params = {"degree": args.degree}
    elif c == "gapspan":
        params = {"f": args.f, "j": args.j, "N": parse_int_list(args.N), "both_methods": args.both_methods}
    elif c == "tdense-demo":
        params = {"t": args.t, "degree": args.degree}
    elif c == "counterexample":
        params = {"w": args.w}
    elif c == "sobolev-demo":
        params = {"g": args.g, "n": args.n, "N": parse_int_list(args.N)}
    elif c == "ratio-table":
        params = {"k": args.k, "n": parse_int_list(args.n)}
    else:
        params = {"lambdas": [v.strip() for v in args.lambdas.split(",")], "J": args.J}
    return ExperimentConfig(c, measure, args.bits, params)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    if args.check:
        try:
            fails = check_csv(args.check)
        except (ConfigError, OSError) as exc:
            log.error("%s", exc)
            return 2
        for msg in fails:
            print(f"FAIL {msg}")
        print("OK" if not fails else f"{len(fails)} invariant(s) failed")
        return 0 if not fails else 1
    if not args.command:
        parser.print_help()
        return 2
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return 2
    return run(cfg, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
