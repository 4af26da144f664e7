"""Command-line entry point.

Every subcommand prints a short text result, or its JSON payload with
``--json``.  Exit status: 0 on success, 1 on domain errors (and on a failing
``compare``), 2 on usage errors.  ``batch`` runs a JSON-lines manifest and
emits one JSON line per job in manifest order.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import formula as F
from . import mvol, orbital, padic
from . import presburger as PB
from .motive import filtration_degree


class UsageError(Exception):
    """Bad flag values; reported with exit status 2."""


@dataclass
class RunReport:
    command: str
    inputs: dict
    result: dict | None = None
    ok: bool = True
    error: str | None = None
    exit_code: int = 0
    text: str = ""
    wall_time: float = 0.0

    def to_json(self, timing: bool = False) -> dict:
        out = {"command": self.command, "inputs": self.inputs, "exit": self.exit_code}
        if self.error is None:
            out["result"] = self.result
        else:
            out["error"] = self.error
        if timing:
            out["wall_time"] = round(self.wall_time, 6)
        return out


# ---------------------------------------------------------------------------
# Flag parsing helpers
# ---------------------------------------------------------------------------


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of integers, got {text!r}") from None


def _odd_prime(p: int) -> int:
    if p < 3 or not padic.is_prime(p):
        raise UsageError(f"{p} is not an odd prime")
    return p


def _required(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return value


def _context(args) -> padic.PadicContext:
    p = _odd_prime(_required(args, "prime"))
    depth = args.depth if args.depth is not None else 6
    if depth < 1:
        raise UsageError("--depth must be positive")
    return padic.PadicContext(p, depth)


def _formula_text(args) -> str:
    if args.formula is not None:
        return args.formula
    path = args.formula_file
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read formula file: {exc}") from None


def _read_formula(args) -> F.Formula:
    return F.parse(_formula_text(args))


def _parse_assign(text: str | None, ctx: padic.PadicContext, as_class: bool) -> dict:
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"assignment {item!r} is not of the form name=value")
        name, value = (s.strip() for s in item.split("=", 1))
        try:
            n = int(value)
        except ValueError:
            raise UsageError(f"value of {name} must be an integer") from None
        if F.sort_of_name(name) is F.Sort.FIELD and as_class:
            out[name] = padic.PadicApprox(n % ctx.modulus, ctx.p, ctx.depth)
        else:
            out[name] = n
    return out


def _frac(v: Fraction) -> str:
    return str(v)


# ---------------------------------------------------------------------------
# Subcommands: each returns (payload, text, ok)
# ---------------------------------------------------------------------------


def cmd_parse(args):
    f = _read_formula(args)
    free = [[n, s.value] for n, s in F.free_variables(f)]
    payload = {"formula": str(f), "free_variables": free, "quantifier_free": F.is_quantifier_free(f)}
    return payload, str(f), True


def cmd_check(args):
    f = _read_formula(args)
    try:
        g = F.parse(Path(_required(args, "against")).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read formula file: {exc}") from None
    same = F.sample_equivalent(f, g, bound=args.bound, trials=args.trials, seed=args.seed)
    payload = {"equivalent": same, "bound": args.bound, "trials": args.trials, "seed": args.seed}
    return payload, "equivalent" if same else "not equivalent", True


def cmd_qe(args):
    f = _read_formula(args)
    g = PB.eliminate(f)
    payload = {"input": str(f), "output": str(g), "quantifier_free": F.is_quantifier_free(g)}
    return payload, str(g), True


def cmd_decide(args):
    f = _read_formula(args)
    value = PB.decide(f)
    return {"input": str(f), "output": value}, "true" if value else "false", True


def cmd_eval(args):
    ctx = _context(args)
    f = _read_formula(args)
    truth = padic.evaluate(f, _parse_assign(args.assign, ctx, args.as_class), ctx)
    text = truth.name.lower()
    return {"p": ctx.p, "depth": ctx.depth, "value": text}, text, True


def _bounds_payload(ctx, lower, upper, **extra):
    payload = {"p": ctx.p, "depth": ctx.depth, **extra}
    payload.update(lower=_frac(lower), upper=_frac(upper), exact=lower == upper)
    text = f"{lower}" if lower == upper else f"[{lower}, {upper}]"
    return payload, text, True


def cmd_volume(args):
    ctx = _context(args)
    lower, upper = mvol.numeric_bounds(_read_formula(args), None, ctx)
    return _bounds_payload(ctx, lower, upper)


def cmd_integrate(args):
    ctx = _context(args)
    a = _required(args, "exponent")
    if a < 0:
        raise UsageError("--exponent must be non-negative")
    lower, upper = mvol.numeric_bounds(_read_formula(args), a, ctx)
    return _bounds_payload(ctx, lower, upper, exponent=a)


def cmd_mvol(args):
    f = _read_formula(args)
    a = args.exponent or 0
    if a < 0:
        raise UsageError("--exponent must be non-negative")
    value, bad = mvol.motivic_monomial_integral(f, a)
    payload = {
        "motive": value.to_json(),
        "motive_text": str(value),
        "bad_primes": sorted(bad),
        "filtration_degree": str(filtration_degree(value)),
    }
    return payload, str(value), True


def cmd_compare(args):
    primes = [_odd_prime(p) for p in _ints(args.primes or "3,5,7", "--primes")]
    depth = args.depth if args.depth is not None else 6
    if depth < 1:
        raise UsageError("--depth must be positive")
    report = mvol.compare(_read_formula(args), args.exponent, primes, depth)
    lines = [f"motive: {report.motive}"]
    for r in report.records:
        if r.skipped:
            lines.append(f"p={r.p}: skipped ({r.reason})")
        else:
            lines.append(f"p={r.p}: {r.symbolic} in [{r.lower}, {r.upper}] {'pass' if r.passed else 'FAIL'}")
    return report.to_json(), "\n".join(lines), report.passed


def _qp_poly(args, depth_default: int) -> orbital.QpPoly:
    p = _odd_prime(_required(args, "prime"))
    coeffs = _ints(_required(args, "poly"), "--poly")
    depth = args.depth if args.depth is not None else depth_default
    if depth < 1:
        raise UsageError("--depth must be positive")
    return orbital.QpPoly.from_ints(coeffs, padic.PadicContext(p, depth))


def cmd_newton(args):
    polygon = orbital.newton_polygon(_qp_poly(args, 6))
    text = ", ".join(f"({s}, {m})" for s, m in polygon.segments)
    return {"segments": polygon.to_json()}, f"[{text}]", True


def cmd_strip(args):
    try:
        s = orbital.StripParams(_required(args, "ell"), _required(args, "h"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    coeffs = _ints(_required(args, "poly"), "--poly")
    lead = [c for c in coeffs if c][-1] if any(coeffs) else 1
    p = _odd_prime(_required(args, "prime"))
    # enough precision for the reduced polynomial unless given explicitly
    default = s.ell * len(coeffs) + s.h * padic.valuation(lead, p) + 2
    member, R = orbital.strip_membership(_qp_poly(args, default), s)
    payload = {"member": member, "R": None if R is None else R.to_list()}
    return payload, f"member: {str(member).lower()}" + (f", R = {R}" if R else ""), True


def cmd_curve(args):
    p = _odd_prime(_required(args, "prime"))
    R = orbital.FpPoly(p, tuple(_ints(_required(args, "R"), "--R")))
    count = orbital.curve_point_count(R)
    return count.to_json(), f"affine: {count.affine}, smooth: {str(count.smooth).lower()}", True


def cmd_family(args):
    p = _odd_prime(_required(args, "prime"))
    count = orbital.family_count(_required(args, "a"), _required(args, "b"), p)
    return count.to_json(), f"affine: {count.affine}, smooth: {str(count.smooth).lower()}", True


def cmd_transfer(args):
    polys = [_ints(_required(args, k), f"--{k}") for k in ("PX", "PY", "PZ")]
    if args.prime is not None:
        p = _odd_prime(args.prime)
        polys = [orbital.FpPoly(p, tuple(c)) for c in polys]
    support = orbital.transfer_support(*polys)
    return {"support": support}, "true" if support else "false", True


COMMANDS: dict[str, Callable] = {
    "parse": cmd_parse,
    "check": cmd_check,
    "qe": cmd_qe,
    "decide": cmd_decide,
    "eval": cmd_eval,
    "volume": cmd_volume,
    "integrate": cmd_integrate,
    "mvol": cmd_mvol,
    "compare": cmd_compare,
    "newton": cmd_newton,
    "strip": cmd_strip,
    "curve": cmd_curve,
    "family": cmd_family,
    "transfer": cmd_transfer,
}


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so batch jobs can report usage errors."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pasvol", description="Definable sets in Pas's language: QE, volumes, orbital tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help: str, formula: bool = False) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--json", action="store_true", help="print the JSON payload")
        if formula:
            sp.add_argument("--formula-file", help="formula text file ('-' or absent: stdin)")
            sp.add_argument("--formula", help="formula text given inline")
        return sp

    add("parse", "parse, sort-check and print a formula", formula=True)
    sp = add("check", "sample-test equivalence of two Presburger formulas", formula=True)
    sp.add_argument("--against", help="second formula file")
    sp.add_argument("--bound", type=int, default=100)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    add("qe", "eliminate quantifiers from a Presburger formula", formula=True)
    add("decide", "decide a closed Presburger sentence", formula=True)
    for name, help in (
        ("eval", "three-valued evaluation at a precision class"),
        ("volume", "numeric volume bracket"),
        ("integrate", "numeric bracket for the integral of |x|^a"),
    ):
        sp = add(name, help, formula=True)
        sp.add_argument("--prime", type=int)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
        if name == "eval":
            sp.add_argument("--assign", help='e.g. "x0=6,m0=2"')
            sp.add_argument("--as-class", action="store_true", help="field values denote classes mod p^N")
        if name == "integrate":
            sp.add_argument("--exponent", type=int)
    sp = add("mvol", "symbolic motivic volume", formula=True)
    sp.add_argument("--exponent", type=int)
    sp = add("compare", "specialise the symbolic volume and check the numeric bracket", formula=True)
    sp.add_argument("--exponent", type=int)
    sp.add_argument("--primes", help="comma-separated odd primes (default 3,5,7)")
    sp.add_argument("--depth", type=int)
    for name, help in (("newton", "Newton polygon"), ("strip", "equal-valuation strip membership")):
        sp = add(name, help)
        sp.add_argument("--prime", type=int)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--poly", help="ascending integer coefficients, e.g. 1,0,-5")
        if name == "strip":
            sp.add_argument("--ell", type=int)
            sp.add_argument("--h", type=int)
    sp = add("curve", "affine points of y^2 = R(x^2)")
    sp.add_argument("--prime", type=int)
    sp.add_argument("--R", help="ascending coefficients of a quadratic")
    sp = add("family", "affine points of y^2 = x^4 + a x^2 + b")
    sp.add_argument("--prime", type=int)
    sp.add_argument("--a", type=int)
    sp.add_argument("--b", type=int)
    sp = add("transfer", "support of the transfer-factor sign")
    for k in ("PX", "PY", "PZ"):
        sp.add_argument(f"--{k}", help="ascending coefficients")
    sp.add_argument("--prime", type=int, help="work over F_p instead of Q")
    sp = sub.add_parser("batch", help="run a JSON-lines manifest of jobs")
    sp.add_argument("manifest")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--timing", action="store_true", help="include wall times")
    return parser


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

DOMAIN_ERRORS = (ValueError, ArithmeticError, NotImplementedError)
_LIST_FLAGS = {"--poly", "--R", "--PX", "--PY", "--PZ", "--a", "--b", "--primes", "--assign"}


def _join_negative_values(argv: list[str]) -> list[str]:
    """argparse reads "-5,0,1" as an option; glue such values to their flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _LIST_FLAGS and nxt is not None and nxt[:1] == "-" and nxt[1:2].isdigit():
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv: list[str]) -> RunReport:
    """Run one non-batch subcommand without printing anything."""
    start = time.perf_counter()
    report = RunReport(argv[0] if argv else "", {"argv": list(argv)})
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        if args.command == "batch":
            raise UsageError("batch jobs cannot nest")
        payload, text, ok = COMMANDS[args.command](args)
        report.result, report.text, report.ok = payload, text, ok
        report.exit_code = 0 if ok else 1
        if not ok:
            report.error = f"{args.command} failed"
    except UsageError as exc:
        report.ok, report.error, report.exit_code = False, f"usage: {exc}", 2
    except DOMAIN_ERRORS as exc:
        report.ok, report.error, report.exit_code = False, f"{type(exc).__name__}: {exc}", 1
    report.wall_time = time.perf_counter() - start
    return report


def job_argv(job: dict, base: Path) -> list[str]:
    """Turn {"command": ..., "flag": value, ...} into argv; file flags are
    resolved relative to the manifest directory."""
    if not isinstance(job, dict) or "command" not in job:
        raise UsageError("each manifest line must be an object with a 'command' key")
    argv = [str(job["command"])]
    for key, value in job.items():
        if key == "command":
            continue
        flag = "--" + key.replace("_", "-")
        if key.replace("_", "-") in ("formula-file", "against") and value != "-":
            value = str(base / value)
        if value is True:
            argv.append(flag)
        elif value is False or value is None:
            continue
        else:
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            argv += [flag, str(value)]
    return argv


def _run_job(item: tuple[int, dict | str, str]) -> tuple[dict, float]:
    index, job, base = item
    try:
        if isinstance(job, str):
            raise UsageError(job)
        argv = job_argv(job, Path(base))
    except UsageError as exc:
        inputs = None if isinstance(job, str) else job
        return {"job": index, "command": None, "inputs": inputs, "exit": 2, "error": f"usage: {exc}"}, 0.0
    report = run(argv)
    line = {"job": index, **report.to_json()}
    line["inputs"] = job
    return line, report.wall_time


def run_batch(manifest: str, jobs: int = 1, timing: bool = False, out=None) -> int:
    out = out or sys.stdout
    path = Path(manifest)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return 1
    items = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            job = json.loads(line)
        except json.JSONDecodeError as exc:
            job = f"line {i + 1}: invalid JSON ({exc.msg})"
        items.append((len(items), job, str(path.parent)))

    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, items))
    else:
        results = [_run_job(item) for item in items]

    failed = []
    for line, wall in results:
        if timing:
            line["wall_time"] = round(wall, 6)
        print(json.dumps(line, sort_keys=True), file=out)
        if line["exit"] != 0:
            failed.append(line)
    for line in failed:
        print(f"job {line['job']} ({line['command']}) failed: {line.get('error')}", file=sys.stderr)
    summary = {"jobs": len(results), "failed": len(failed), "pass": not failed}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    if args.command == "batch":
        if args.jobs < 1:
            print("usage error: --jobs must be positive", file=sys.stderr)
            return 2
        return run_batch(args.manifest, args.jobs, args.timing)

    report = run(argv)
    if report.result is not None:
        if args.json:
            print(json.dumps(report.result, sort_keys=True))
        else:
            print(report.text)
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
