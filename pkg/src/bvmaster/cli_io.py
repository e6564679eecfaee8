"""Model files, result bundles and the ``bvmaster`` command line."""

import argparse
from dataclasses import dataclass, field
from fractions import Fraction
import json
import os
import re
import sys

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bv_model import GAUGED, ISOLATED, GaugeData, ModelSpec, build_model
from .correlators import (
    correlator_table,
    cross_check,
    expectation_vector,
    omega,
    p_sharp,
    quantum_coordinates,
    z_coefficient,
)
from .errors import BVError, InternalIdentityViolation, ModelInvalid, OracleMismatch, ParseError
from .groebner import MonomialOrder
from .laurent import Laurent, frac_str
from .master_solver import Check, random_gauge, solve, verify_semiclassical
from .obstruction_tower import build_tower, load_complex, tower_report
from .super_algebra import Element, Variable, VariableTable, render


# polynomial parser ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()·]))")


class _Parser:
    """expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
    unary := ('+'|'-') unary | power ; power := atom ('^' integer)? ;
    atom := number | name | '(' expr ')'."""

    def __init__(self, text, table, line=1, col0=1):
        self.text = text
        self.table = table
        self.line = line
        self.col0 = col0
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                self.fail(f"unexpected character {text[pos:].lstrip()[0]!r}",
                          pos + len(text[pos:]) - len(text[pos:].lstrip()))
            start = m.start(m.lastindex)
            kind = ("num", "name", "op")[m.lastindex - 1]
            val = m.group(m.lastindex)
            if val == "**":
                val = "^"
            if val == "·":
                val = "*"
            self.toks.append((kind, val, start))
            pos = m.end()
        self.i = 0

    def fail(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise ParseError(msg, self.line, self.col0 + pos)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        if not self.toks:
            self.fail("empty polynomial")
        e = self.expr()
        if self.i < len(self.toks):
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1], self.peek()[2]
            r = self.unary()
            if op == "*":
                e = e * r
            else:
                c = _constant(r)
                if c is None:
                    self.fail("division only by nonzero constants", pos)
                e = e.scale(1 / c)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                self.fail("exponent must be a non-negative integer", pos)
            out = self.table.one()
            for _ in range(int(val)):
                out = out * base
            return out
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return self.table.const(Fraction(val))
        if kind == "name":
            if val not in self.table.index:
                self.fail(f"unknown variable {val!r}", pos)
            return self.table.var(val)
        if val == "(":
            e = self.expr()
            if self.peek()[1] != ")":
                self.fail("expected ')'")
            self.take()
            return e
        self.fail("unexpected end of polynomial" if kind is None else f"unexpected {val!r}", pos)


def _constant(e):
    if not e.terms:
        return None
    if len(e.terms) == 1:
        (k, c), = e.terms.items()
        if not any(k):
            return c
    return None


def parse_polynomial(text, table, line=1, column=1):
    """Parse text like ``p*(x^3 + y^3)/3 - 2*x*y`` into an Element over ``table``."""
    return _Parser(text, table, line, column).parse()


# model files -----------------------------------------------------------------

@dataclass
class ModelFile:
    spec: ModelSpec
    order: int = 4
    arity: int = 2
    expectation: dict | None = None
    corrupt_lambda: bool = False
    path: str = ""


def _locate(text, key):
    """(line, column) just inside the string value of ``key = "..."``."""
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(rf'\s*{re.escape(key)}\s*=\s*("""|\'\'\'|"|\')', line)
        if m:
            return n, m.end() + 1
    return None, None


def _frac(v, where):
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as err:
        raise ParseError(f"{where}: not a rational number: {v!r}") from err


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    return parse_model(text, path)


def parse_model(text, path="<string>"):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        m = re.search(r"\(at line (\d+), column (\d+)\)", str(err))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (getattr(err, "lineno", None), getattr(err, "colno", None))
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(err))
        raise ParseError(msg, line, col) from err
    vars_ = doc.get("variables")
    if not isinstance(vars_, list) or not vars_:
        raise ParseError("model file needs a non-empty [[variables]] list")
    decls = []
    for i, v in enumerate(vars_):
        if "name" not in v or "ghost" not in v:
            raise ParseError(f"variable #{i + 1} needs 'name' and 'ghost'")
        try:
            decls.append(Variable(
                name=str(v["name"]),
                ghost=int(v["ghost"]),
                parity=int(v["parity"]) if "parity" in v else None,
                weight=int(v.get("weight", 1)),
                partner=v.get("partner"),
                charge=int(v.get("charge", 0)),
            ))
        except (TypeError, ValueError) as err:
            raise ParseError(f"variable {v.get('name')!r}: {err}") from err
    table = VariableTable(decls)
    if "action" not in doc:
        raise ParseError("model file needs an 'action'")
    line, col = _locate(text, "action")
    action = parse_polynomial(str(doc["action"]), table, line or 1, col or 1)
    cls = doc.get("class", ISOLATED)
    if cls not in (ISOLATED, GAUGED):
        raise ParseError(f"class must be '{ISOLATED}' or '{GAUGED}'", *_locate(text, "class"))
    gauge = None
    if cls == GAUGED:
        g = doc.get("gauge")
        if not isinstance(g, dict) or not {"p", "x", "c"} <= set(g):
            raise ParseError("gauged model needs a [gauge] table with p, x and c")
        gauge = GaugeData(str(g["p"]), tuple(g["x"]), str(g["c"]))
    kind = doc.get("monomial_order", "grevlex")
    try:
        order = MonomialOrder(kind)
    except ValueError as err:
        raise ParseError(str(err), *_locate(text, "monomial_order")) from err
    spec = ModelSpec(table, action, cls, order, str(doc.get("name", os.path.basename(path))), gauge,
                     degree_cap=int(doc.get("degree_cap", 64)))
    expectation = None
    if "expectation" in doc:
        expectation = {}
        for k, v in doc["expectation"].items():
            if isinstance(v, list):
                expectation[k] = {i: _frac(c, f"expectation {k}") for i, c in enumerate(v)}
            else:
                expectation[k] = _frac(v, f"expectation {k}")
    debug = doc.get("debug", {})
    return ModelFile(spec, int(doc.get("order", 4)), int(doc.get("arity", 2)), expectation,
                     bool(debug.get("corrupt_lambda", False)), path)


def resolve_expectation(ctx, raw):
    """Map names or indices in the model file onto H-basis indices."""
    if raw is None:
        return expectation_vector(ctx)
    names = ctx.basis.names
    vals = {}
    for k, v in raw.items():
        if isinstance(k, str) and k in names:
            g = names.index(k)
        else:
            try:
                g = int(k)
            except ValueError:
                raise ModelInvalid(f"expectation key {k!r} is neither a basis element nor an index") from None
        vals[g] = v
    return expectation_vector(ctx, vals)


# result bundles ----------------------------------------------------------------

CONVENTIONS = {
    "derivative": "left derivative for odd variables",
    "delta": "sum over pairs of (-1)^|field| d_field d_antifield",
    "lambda_gauge": "deterministic pivoting under the fixed monomial order",
    "components": "graded-symmetric components include multiplicity factorials",
}


def _mu_key(mu):
    return ",".join(str(a) for a in mu)


def _mu_from(s):
    return tuple(int(a) for a in s.split(",")) if s else ()


@dataclass
class ResultBundle:
    model: dict
    h_basis: list
    order: int = 0
    tensors: dict = field(default_factory=dict)         # n -> {mu: tuple of Fraction}
    theta: dict = field(default_factory=dict)           # n -> {mu: rendered Element}
    coordinates: dict = field(default_factory=dict)     # gamma -> {mu: Laurent}
    correlators: dict = field(default_factory=dict)     # n -> {mu: Laurent}
    expectation: list = field(default_factory=list)     # Laurent per basis element
    checks: list = field(default_factory=list)          # Check
    extra: dict = field(default_factory=dict)
    engine: dict = field(default_factory=lambda: {"name": "bvmaster", "version": __version__,
                                                  "conventions": dict(CONVENTIONS)})

    def passed(self):
        return all(c.passed for c in self.checks)

    def to_json(self):
        return {
            "engine": self.engine,
            "model": self.model,
            "h_basis": self.h_basis,
            "order": self.order,
            "structure_tensors": {
                str(n): {_mu_key(mu): [frac_str(x) for x in v] for mu, v in sorted(row.items())}
                for n, row in sorted(self.tensors.items())},
            "theta": {str(n): dict(sorted((_mu_key(mu), s) for mu, s in row.items()))
                      for n, row in sorted(self.theta.items())},
            "quantum_coordinates": {
                str(g): {_mu_key(mu): c.to_json() for mu, c in sorted(row.items())}
                for g, row in sorted(self.coordinates.items())},
            "correlators": {
                str(n): {_mu_key(mu): c.to_json() for mu, c in sorted(row.items())}
                for n, row in sorted(self.correlators.items())},
            "expectation": [c.to_json() for c in self.expectation],
            "verification": {"passed": self.passed(), "checks": [c.to_json() for c in self.checks]},
            "extra": self.extra,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, obj):
        return cls(
            model=obj["model"],
            h_basis=obj["h_basis"],
            order=obj["order"],
            tensors={int(n): {_mu_from(k): tuple(Fraction(x) for x in v) for k, v in row.items()}
                     for n, row in obj["structure_tensors"].items()},
            theta={int(n): {_mu_from(k): s for k, s in row.items()} for n, row in obj["theta"].items()},
            coordinates={int(g): {_mu_from(k): Laurent.from_json(c) for k, c in row.items()}
                         for g, row in obj["quantum_coordinates"].items()},
            correlators={int(n): {_mu_from(k): Laurent.from_json(c) for k, c in row.items()}
                         for n, row in obj["correlators"].items()},
            expectation=[Laurent.from_json(c) for c in obj["expectation"]],
            checks=[Check(c["identity"], c["order"], c["passed"], c["detail"]) for c in obj["verification"]["checks"]],
            extra=obj.get("extra", {}),
            engine=obj["engine"],
        )

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))


def _model_json(mf, ctx):
    t = ctx.table
    return {
        "name": mf.spec.name,
        "class": mf.spec.model_class,
        "action": render(ctx.S),
        "variables": [{"name": v.name, "ghost": v.ghost, "parity": v.parity, "weight": v.weight,
                       "partner": v.partner, "charge": v.charge} for v in t.variables],
    }


def _basis_json(ctx):
    t = ctx.table
    out = []
    for i, (o, g, n) in enumerate(zip(ctx.basis.elements, ctx.basis.ghosts, ctx.basis.names)):
        out.append({"index": i, "name": n, "ghost": g, "weight": max(t.weight_of(k) for k in o.terms)})
    return out


def ring_report(ctx):
    basis = _basis_json(ctx)
    by_weight = {}
    for b in basis:
        by_weight[b["weight"]] = by_weight.get(b["weight"], 0) + 1
    dims = getattr(ctx, "slice_dimensions", None) or [by_weight[w] for w in sorted(by_weight)]
    return {
        "model": ctx.spec.name,
        "class": ctx.spec.model_class,
        "h_basis": basis,
        "dimensions": dims,
        "total": len(basis),
    }


def _threads(args):
    if args.threads:
        return max(1, args.threads)
    env = os.environ.get("BVMASTER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParseError(f"BVMASTER_THREADS must be an integer, got {env!r}") from None
    return 1


def _corrupt_hook(ctx):
    t = ctx.table
    f, g = t.pairs[0][:2]
    bad = Element.monomial(t, {t.names[f - 1]: 1, t.names[g - 1]: 1})

    def hook(n, mu, lam):
        return lam + bad if n == 2 and 0 not in mu else lam
    return hook


def run_solve(mf, order=None, arity=None, threads=1, oracle=False, correlators_only=False, gauge_rng=None):
    ctx = build_model(mf.spec)
    N = order or mf.order
    hook = _corrupt_hook(ctx) if mf.corrupt_lambda else (random_gauge(ctx, gauge_rng) if gauge_rng else None)
    state = solve(ctx, N, threads=threads, lambda_hook=hook)
    vec = resolve_expectation(ctx, mf.expectation)
    for n in range(1, N + 1):
        omega(state, n)
        p_sharp(state, n)
    T, Z = quantum_coordinates(state, vec)
    k = min(arity or mf.arity, N)
    table = correlator_table(state, vec, k)
    extra = {}
    if oracle:
        extra["oracle_checked"] = cross_check(state, vec, k)
    checks = list(state.log.checks)
    if ctx.model_class == ISOLATED:
        semi = verify_semiclassical(state)
        checks.extend(semi.checks)
        extra["semiclassical"] = semi.all_passed()
    bundle = ResultBundle(
        model=_model_json(mf, ctx),
        h_basis=_basis_json(ctx),
        order=N,
        tensors={} if correlators_only else {n: dict(state.m[n].components()) for n in range(2, N + 1)},
        theta={} if correlators_only else {n: {mu: render(e) for mu, e in state.theta[n].items()}
                                           for n in range(1, N + 1)},
        coordinates={} if correlators_only else {g: dict(T[g].items()) for g in T},
        correlators={n: {mu: c for mu, c in row.items()} for n, row in table.items()},
        expectation=vec,
        checks=checks,
        extra=extra,
    )
    bundle.extra["z_derivatives"] = {str(n): {_mu_key(mu): z_coefficient(n, c).to_json() for mu, c in sorted(row.items())}
                                     for n, row in table.items()}
    return ctx, state, bundle


# command line --------------------------------------------------------------------

class _Parser_(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser():
    p = _Parser_(prog="bvmaster", description="Quantum master equation solver for polynomial BV models.")
    p.add_argument("--version", action="version", version=f"bvmaster {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser_)
    for name, help_ in [("ring", "cohomology basis of a model"),
                        ("solve", "solve the master equation and emit a result bundle"),
                        ("correlators", "correlator table"),
                        ("verify", "verification log only"),
                        ("obstruction", "obstruction tower of a finite complex")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("file")
        s.add_argument("--order", type=int)
        s.add_argument("--arity", type=int)
        s.add_argument("--oracle", action="store_true", help="cross-check correlators by the partition formula")
        s.add_argument("--out", help="write JSON here instead of stdout")
        s.add_argument("--threads", type=int, help="worker threads (default: $BVMASTER_THREADS or 1)")
    return p


def _emit(obj, out):
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _checks_json(checks):
    return {"passed": all(c.passed for c in checks), "checks": [c.to_json() for c in checks]}


def cmd_ring(args):
    mf = load_model(args.file)
    return ring_report(build_model(mf.spec)), 0


def cmd_solve(args):
    mf = load_model(args.file)
    _, _, bundle = run_solve(mf, args.order, args.arity, _threads(args), args.oracle)
    return bundle.dumps(), 0 if bundle.passed() else 3


def cmd_correlators(args):
    mf = load_model(args.file)
    _, _, bundle = run_solve(mf, args.order, args.arity, _threads(args), args.oracle, correlators_only=True)
    out = bundle.to_json()
    keep = {k: out[k] for k in ("correlators", "expectation", "h_basis", "order", "extra")}
    keep["verification"] = out["verification"]
    return keep, 0 if bundle.passed() else 3


def cmd_verify(args):
    mf = load_model(args.file)
    try:
        _, _, bundle = run_solve(mf, args.order, args.arity, _threads(args), args.oracle)
    except InternalIdentityViolation as err:
        report = {"passed": False, "failed_identity": err.identity, "detail": err.detail}
        return report, err.exit_code
    report = _checks_json(bundle.checks)
    report["semiclassical"] = bundle.extra.get("semiclassical")
    return report, 0 if bundle.passed() else 3


def cmd_obstruction(args):
    obj, cx = load_complex(args.file)
    if args.order is not None:
        if args.order > cx.order:
            from .linalg import Mat
            cx.K = list(cx.K) + [Mat.zero(cx.dim, cx.dim) for _ in range(args.order - cx.order)]
        else:
            cx.K = list(cx.K)[:args.order]
    tower = build_tower(cx)
    report = tower_report(tower)
    expected = obj.get("expected")
    if expected and "kappa" in expected:
        got = report["kappa"][:len(expected["kappa"])]
        norm = lambda m: [[str(Fraction(x)) for x in row] for row in m]
        if [norm(m) for m in got] != [norm(m) for m in expected["kappa"]]:
            raise OracleMismatch("kappa differs from the frozen expectation in the complex file")
        report["regression"] = "match"
    return report, 0


COMMANDS = {"ring": cmd_ring, "solve": cmd_solve, "correlators": cmd_correlators,
            "verify": cmd_verify, "obstruction": cmd_obstruction}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        out, code = COMMANDS[args.command](args)
    except BVError as err:
        print(f"bvmaster: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code
    _emit(out, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
