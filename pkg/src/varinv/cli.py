"""Command-line front end: ``varinv <command> <problem-file> [flags]``.

Problem files are line oriented ``key = expression`` bindings with ``#``
comments.  Header keys: ``n``, ``m``, ``max_order``, ``seed``, ``samples``,
``ansatz_degree``, ``quad_order``.  Bindings: ``f`` (a Lagrangian or a plain
expression), ``e<j>`` (equations), ``F<j>`` and ``F<j><j'>[i,i']`` (first-order
data), ``c<j>[i]`` (first-order reference functions) and ``c<j>`` (order-zero
reference).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field

from .errors import (
    AnsatzFailed,
    ConditionsFailed,
    IncompatibleHessian,
    NotClosedFormIntegrable,
    PoleExhaustion,
    PotentialVerificationFailed,
    VarinvError,
)
from .expr.core import ZERO, ConstructionError, Expr, simplify
from .expr.text import ParseError, parse, to_text
from .expr.zerotest import ZeroStatus, ZeroTestConfig, is_zero
from .helmholtz import Verdict, conditions_m1, conditions_m2, conditions_n1, helmholtz_check, residual_id
from .inverse import DEFAULT_ANSATZ_DEGREE, ReferenceFunctions, solve
from .jet import JetContext
from .reduction import reduce_order
from .tonti import DEFAULT_QUAD_ORDER, ClosedForm, tonti_lagrangian
from .variational import InverseProblemData, decompose_second_order, el_split_first_order, euler_lagrange

EXIT_OK, EXIT_CONDITIONS, EXIT_LIMITATION, EXIT_INPUT = 0, 2, 3, 4
COMMANDS = ("el", "split", "helmholtz", "tonti", "solve", "reduce", "simplify", "zero-test")
HEADER = ("n", "m", "max_order", "seed", "samples", "ansatz_degree", "quad_order")

_KEY_PATTERNS = [
    ("data2", re.compile(r"F(\d)(\d)\[(\d+),(\d+)\]$")),
    ("data1", re.compile(r"F(\d+)$")),
    ("eq", re.compile(r"e(\d+)$")),
    ("ref1", re.compile(r"c(\d+)\[(\d+)\]$")),
    ("ref0", re.compile(r"c(\d+)$")),
    ("f", re.compile(r"f$")),
]


class InputError(Exception):
    """Malformed problem file; carries the offending line or token."""


@dataclass
class Problem:
    n: int
    m: int
    max_order: int = 6
    seed: int = 0
    samples: int = 8
    ansatz_degree: int = DEFAULT_ANSATZ_DEGREE
    quad_order: int = DEFAULT_QUAD_ORDER
    f: Expr | None = None
    e: dict = field(default_factory=dict)
    F1: dict = field(default_factory=dict)
    F2: dict = field(default_factory=dict)
    c1: dict = field(default_factory=dict)
    c0: dict = field(default_factory=dict)

    @property
    def ctx(self) -> JetContext:
        return JetContext(self.n, self.m, self.max_order)

    def equations(self) -> list | None:
        if self.e:
            return [self.e.get(j, ZERO) for j in range(1, self.m + 1)]
        if self.F1 or self.F2:
            return self.data().recompose()
        return None

    def data(self, cfg=None) -> InverseProblemData:
        if self.F1 or self.F2:
            F1 = [self.F1.get(j, ZERO) for j in range(1, self.m + 1)]
            try:
                return InverseProblemData.from_entries(self.n, self.m, F1, self.F2, cfg)
            except ValueError as err:
                raise InputError(str(err)) from None
        if self.e:
            return decompose_second_order(self.equations(), self.ctx, cfg)
        raise InputError("no equations (e<j>) or data (F<j>, F<j><j'>[i,i']) given")

    def c0_list(self) -> list:
        return [self.c0.get(j, ZERO) for j in range(1, self.m + 1)]


def parse_problem(text: str) -> Problem:
    header: dict = {}
    bindings = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace(" ", "")
        if key in HEADER:
            try:
                header[key] = int(value)
            except ValueError:
                raise InputError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
        else:
            bindings.append((lineno, key, value))
    for k in ("n", "m"):
        if k not in header:
            raise InputError(f"missing header key {k!r}")
    prob = Problem(**header)
    if prob.n < 1 or prob.m < 1:
        raise InputError("n and m must be positive")
    for lineno, key, value in bindings:
        kind, match = _classify(key, lineno)
        try:
            expr = parse(value, n=prob.n, m=prob.m)
        except ParseError as err:
            raise InputError(f"line {lineno}: {err}") from None
        idx = tuple(int(g) for g in match.groups())
        _check_ranges(prob, kind, idx, lineno, key)
        if kind == "f":
            prob.f = expr
        elif kind == "eq":
            prob.e[idx[0]] = expr
        elif kind == "data1":
            prob.F1[idx[0]] = expr
        elif kind == "data2":
            if idx in prob.F2:
                raise InputError(f"line {lineno}: duplicate entry {key}")
            prob.F2[idx] = expr
        elif kind == "ref1":
            prob.c1[idx] = expr
        else:
            prob.c0[idx[0]] = expr
    return prob


def _classify(key: str, lineno: int):
    for kind, pat in _KEY_PATTERNS:
        match = pat.match(key)
        if match:
            return kind, match
    raise InputError(f"line {lineno}: unknown key {key!r}")


def _check_ranges(prob: Problem, kind: str, idx: tuple, lineno: int, key: str):
    if kind == "f":
        return
    js = idx[:2] if kind == "data2" else idx[:1]
    is_ = idx[2:] if kind == "data2" else idx[1:]
    if any(not 1 <= j <= prob.m for j in js) or any(not 1 <= i <= prob.n for i in is_):
        raise InputError(f"line {lineno}: index out of range in {key!r}")


# --------------------------------------------------------------------------
# reports


@dataclass
class Report:
    command: str
    verdict: str | None = None
    expressions: list = field(default_factory=list)  # (name, text)
    conditions: list = field(default_factory=list)  # (id, status)
    diagnostics: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)  # extra text lines
    exit_code: int = EXIT_OK

    def text(self) -> str:
        out = []
        if self.verdict is not None:
            out.append(f"verdict: {self.verdict}")
        out.extend(self.lines)
        out.extend(f"{name} = {value}" for name, value in self.expressions)
        if self.conditions:
            out.append("conditions:")
            out.extend(f"  {cid}: {status}" for cid, status in self.conditions)
        return "\n".join(out) + "\n"

    def json(self) -> str:
        doc = {
            "command": self.command,
            "verdict": self.verdict,
            "expressions": {name: value for name, value in self.expressions},
            "conditions": [{"id": cid, "status": status} for cid, status in self.conditions],
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _fmt_point(point: dict | None, n: int) -> str:
    if point is None:
        return "-"
    from .expr.core import Var

    items = sorted(point.items(), key=lambda kv: kv[0].key)
    return "{" + ", ".join(f"{to_text(Var(r), n)}: {v}" for r, v in items) + "}"


def _txt(prob: Problem, e: Expr) -> str:
    return to_text(e, prob.n)


def _table_entries(prob: Problem, name: str, table: dict):
    """Non-redundant entries of a symmetric second-order table."""
    out = []
    for (j, jp, i, ip), v in sorted(table.items()):
        if j > jp or (j == jp and i > ip) or v.is_zero_literal():
            continue
        out.append((f"{name}{j}{jp}[{i},{ip}]", _txt(prob, v)))
    return out


def _need_f(prob: Problem) -> Expr:
    if prob.f is None:
        raise InputError("this command needs a binding 'f = ...'")
    return prob.f


def _need_e(prob: Problem) -> list:
    eqs = prob.equations()
    if eqs is None:
        if prob.f is not None:
            return euler_lagrange(prob.f, prob.ctx)
        raise InputError("no equations given")
    return eqs


def cmd_el(prob, cfg, args) -> Report:
    rep = Report("el")
    for j, ej in enumerate(euler_lagrange(_need_f(prob), prob.ctx), start=1):
        rep.expressions.append((f"e{j}", _txt(prob, ej)))
    return rep


def cmd_split(prob, cfg, args) -> Report:
    rep = Report("split")
    if prob.f is not None:
        dec = el_split_first_order(prob.f, prob.ctx)
        for j, v in enumerate(dec.E, start=1):
            rep.expressions.append((f"E{j}", _txt(prob, v)))
        rep.expressions.extend(_table_entries(prob, "E", dec.E2))
        return rep
    data = prob.data(cfg)
    for j, v in enumerate(data.F1, start=1):
        rep.expressions.append((f"F{j}", _txt(prob, v)))
    rep.expressions.extend(_table_entries(prob, "F", data.F2))
    for key, diff, status in data.symmetry_defects:
        rep.conditions.append(("(2.3)[" + ",".join(map(str, key)) + "]", str(status)))
    return rep


def _case_report(prob, cfg):
    try:
        data = prob.data(cfg)
    except VarinvError:
        return None
    if not data.is_first_order():
        return None
    if prob.m == 1:
        return conditions_m1(data, cfg)
    if prob.n == 1:
        c = [prob.c1.get((j, 1), ZERO) for j in range(1, prob.m + 1)]
        return conditions_n1(data, c, cfg)
    if prob.m == 2:
        try:
            return conditions_m2(data, prob.c1 or None, cfg)
        except VarinvError:
            return conditions_m2(data, None, cfg, level_set=False)
    return None


def cmd_helmholtz(prob, cfg, args) -> Report:
    res = helmholtz_check(_need_e(prob), prob.ctx, cfg)
    rep = Report("helmholtz", str(res.verdict))
    keys = sorted(res.residuals, key=lambda k: (k[0], k[1], len(k[2]), k[2]))
    for key in keys:
        rep.lines.append(f"residual {residual_id(key)} = {_txt(prob, res.residuals[key])}: {res.statuses[key].status}")
    if res.witness is not None:
        rep.lines.append(f"witness: {res.witness[0]} at {_fmt_point(res.witness[1], prob.n)}")
        rep.diagnostics["witness"] = {"id": res.witness[0], "point": _fmt_point(res.witness[1], prob.n)}
    rep.diagnostics["residuals"] = [
        {"id": residual_id(k), "expr": _txt(prob, res.residuals[k]), "status": str(res.statuses[k].status)} for k in keys
    ]
    if prob.equations() is not None or prob.f is not None:
        cases = _case_report(prob, cfg) if prob.equations() is not None else None
        if cases is not None:
            rep.conditions = [(c.id, str(c.status)) for c in cases]
    if res.verdict is Verdict.NOT_VARIATIONAL:
        rep.exit_code = EXIT_CONDITIONS
    return rep


def cmd_tonti(prob, cfg, args) -> Report:
    c = prob.c0_list()
    res = tonti_lagrangian(_need_e(prob), c, prob.ctx, args.quad_order or prob.quad_order)
    rep = Report("tonti")
    if isinstance(res, ClosedForm):
        rep.verdict = "ClosedForm"
        rep.expressions.append(("f", _txt(prob, res.expr)))
    else:
        rep.verdict = "QuadratureForm"
        rep.expressions.append(("integrand", _txt(prob, res.integrand)))
        rep.lines.append(f"quadrature order = {res.order}")
        rep.diagnostics["quad_order"] = res.order
    return rep


def cmd_solve(prob, cfg, args) -> Report:
    data = prob.data(cfg)
    ref = ReferenceFunctions.make(prob.n, prob.m, prob.c1, prob.c0_list())
    method = None if args.case in (None, "auto") else args.case
    degree = args.ansatz_degree if args.ansatz_degree is not None else prob.ansatz_degree
    sol = solve(data, ref, prob.ctx, method, cfg, ansatz_degree=degree)
    rep = Report("solve", "Solved")
    rep.expressions.append(("f", _txt(prob, sol.f)))
    rep.expressions.append(("fbar", _txt(prob, sol.fbar)))
    for (j, i), v in sorted(sol.A1.items()):
        if not v.is_zero_literal():
            rep.expressions.append((f"A{j}[{i}]", _txt(prob, v)))
    rep.expressions.append(("A", _txt(prob, sol.A0)))
    if sol.G is not None:
        for (i, ip), v in sorted(sol.G.Gbar.items()):
            if i < ip:
                rep.expressions.append((f"Gbar12[{i},{ip}]", _txt(prob, v)))
        for (i, ip), v in sorted(sol.G.C.items()):
            if i < ip:
                rep.expressions.append((f"C12[{i},{ip}]", _txt(prob, v)))
    report = sol.diagnostics.get("report")
    if report is not None:
        rep.conditions = [(c.id, str(c.status)) for c in report]
    contract = sol.diagnostics.get("contract", {})
    worst = min(contract.values(), default=ZeroStatus.ZERO)
    rep.lines.append(f"residual contract: {worst}")
    rep.diagnostics["residual_contract"] = str(worst)
    return rep


def cmd_reduce(prob, cfg, args) -> Report:
    tr = reduce_order(_need_f(prob), prob.ctx, cfg)
    rep = Report("reduce", str(tr.stop.kind))
    for k, (dh, g) in enumerate(tr.steps, start=1):
        rep.lines.append(f"step {k}: subtract {_txt(prob, dh)} -> {_txt(prob, g)}")
    rep.expressions.append(("final", _txt(prob, tr.final)))
    rep.diagnostics["steps"] = len(tr.steps)
    rep.diagnostics["euler_lagrange_preserved"] = str(tr.status)
    return rep


def cmd_simplify(prob, cfg, args) -> Report:
    rep = Report("simplify")
    rep.expressions.append(("f", _txt(prob, simplify(_need_f(prob), normalize=True))))
    return rep


def cmd_zero_test(prob, cfg, args) -> Report:
    res = is_zero(_need_f(prob), cfg)
    rep = Report("zero-test", str(res.status))
    if res.witness is not None and res.status is ZeroStatus.NONZERO:
        rep.lines.append(f"witness: {_fmt_point(res.witness, prob.n)}")
        rep.diagnostics["witness"] = _fmt_point(res.witness, prob.n)
        if res.value is not None:
            rep.lines.append(f"value: {res.value}")
            rep.diagnostics["value"] = str(res.value)
    return rep


HANDLERS = {
    "el": cmd_el, "split": cmd_split, "helmholtz": cmd_helmholtz, "tonti": cmd_tonti,
    "solve": cmd_solve, "reduce": cmd_reduce, "simplify": cmd_simplify, "zero-test": cmd_zero_test,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varinv", description="Inverse problem of the calculus of variations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("problem", help="problem file, or '-' for standard input")
    ap.add_argument("--case", choices=("m1", "n1", "m2", "auto"), default="auto")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--quad-order", type=int, default=None)
    ap.add_argument("--ansatz-degree", type=int, default=None)
    ap.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def run(command: str, text: str, args) -> tuple[int, str]:
    """Execute ``command`` on problem text; returns (exit code, output)."""
    fmt = getattr(args, "format", "text")

    def fail(code: int, kind: str, message: str, conditions=()):
        rep = Report(command, kind, conditions=list(conditions), diagnostics={"error": message}, exit_code=code)
        rep.lines.append(f"error: {message}")
        return code, (rep.json() if fmt == "json" else rep.text())

    try:
        prob = parse_problem(text)
        seed = args.seed if args.seed is not None else prob.seed
        samples = args.samples if args.samples is not None else prob.samples
        cfg = ZeroTestConfig(samples=samples, seed=seed)
        rep = HANDLERS[command](prob, cfg, args)
    except ConditionsFailed as err:
        conds = [(c.id, str(c.status)) for c in err.report] if err.report is not None else []
        return fail(EXIT_CONDITIONS, "ConditionsFailed", str(err), conds)
    except (IncompatibleHessian, PotentialVerificationFailed) as err:
        return fail(EXIT_CONDITIONS, type(err).__name__, str(err))
    except (NotClosedFormIntegrable, AnsatzFailed, PoleExhaustion) as err:
        return fail(EXIT_LIMITATION, type(err).__name__, str(err))
    except (InputError, ParseError, VarinvError, ConstructionError, ValueError) as err:
        return fail(EXIT_INPUT, type(err).__name__, str(err))
    return rep.exit_code, (rep.json() if fmt == "json" else rep.text())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.problem == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(args.problem, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_INPUT
    code, out = run(args.command, text, args)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
