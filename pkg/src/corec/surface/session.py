"""The pipeline driver: declarations and commands in source order."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any

from ..coinduction import Certificate, Lemma, Prover, check_certificate, empirical_eq
from ..errors import CorecError, FuelExhausted, RuleViolation, show_value
from ..interp import Program, compile_expr, sort_desc
from ..registry import define, init_state, register
from ..runtime import (
    DEFAULT_FUEL, Codatatype, Differ, ListPrefix, limited, random_value, take_prefix, to_json,
)
from ..syntax import (
    CheckCmd, CodatatypeDecl, ForceCmd, FunDecl, ProveCmd, RegisterCmd, SourceFile,
)
from .parser import parse_file
from .pretty import pp_expr
from .resolve import Resolver, Signature


@dataclass
class Report:
    command: str
    verdict: str
    detail: Any = None
    ok: bool = True
    shown: str | None = None  # text form of the detail, when nicer than the generic one

    def to_json(self):
        return {"command": self.command, "verdict": self.verdict, "detail": self.detail}

    def text(self):
        s = f"{self.command}: {self.verdict}"
        if self.shown is not None:
            s += "\n  " + self.shown
        elif self.detail is not None and self.detail != {}:
            s += "\n  " + _show_detail(self.detail)
        return s


def _show_detail(d) -> str:
    if isinstance(d, dict):
        return ", ".join(f"{k}={_show_detail(v)}" for k, v in d.items())
    if isinstance(d, list):
        return "[" + ", ".join(_show_detail(x) for x in d) + "]"
    return str(d)


def show_observation(obs) -> str:
    """Streams as `0 1 2`, lazy lists with `.` when they end, trees as `label[children]`."""
    if isinstance(obs, ListPrefix):
        return " ".join(map(str, obs.items)) + (" ." if obs.terminated else " ...")
    if isinstance(obs, list):
        return " ".join(map(str, obs))
    if isinstance(obs, dict):
        if obs.get("truncated"):
            return "…"
        return f"{obs.get('label')}[" + ", ".join(show_observation(c) for c in obs.get("children", ())) + "]"
    return str(obs)


def _span(s):
    return None if s is None else str(s)


@dataclass
class Session:
    """Mutable pipeline state: the signature, the program, proven lemmas, reports."""

    fuel: int = DEFAULT_FUEL
    samples: int = 200
    depth: int = 5
    trials: int = 64
    corroborate: int = 20
    corroborate_depth: int = 500
    corroborate_seconds: float = 10.0  # shared by all instances of one prove
    seed: int = 0
    sig: Signature = field(default_factory=Signature)
    prog: Program = field(default_factory=Program)
    lemmas: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)

    def __post_init__(self):
        self.resolver = Resolver(self.sig)

    # whole files
    def run_text(self, text: str) -> list:
        """Parse and run every declaration; resolution errors propagate."""
        return self.run_file(parse_file(text))

    def run_file(self, f: SourceFile) -> list:
        out = []
        for d in f.decls:
            out.extend(self.run(self.resolver.decl(d)))
        return out

    def run(self, d) -> list:
        reps = run_command(d, self)
        self.reports.extend(reps)
        return reps

    @property
    def ok(self):
        return all(r.ok for r in self.reports)

    # expression evaluation for commands
    def value(self, e):
        return compile_expr(e, self.prog, "<command>")({})

    def value_of(self, text: str):
        """Evaluate a closed expression written in surface syntax."""
        from .parser import parse_expr
        from .resolve import ExprResolver

        return self.value(ExprResolver(self.sig).res(parse_expr(text)))

    def fun(self, name):
        return self.prog.funcs[name]


def run_command(d, session: Session) -> list:
    """Dispatch one resolved declaration or command; returns its reports."""
    match d:
        case CodatatypeDecl():
            return _codatatype(d, session)
        case FunDecl():
            return _define(d, session)
        case ForceCmd():
            return [_force(d, session)]
        case CheckCmd():
            return [_check(d, session)]
        case RegisterCmd() if d.name not in session.prog.funcs:
            return [_register_selector(d, session)]
        case RegisterCmd():
            return [_register(d.name, session, f"register {d.name}")]
        case ProveCmd():
            return [_prove(d, session)]
    raise TypeError(d)


def _codatatype(d: CodatatypeDecl, s: Session):
    codt = Codatatype(d.name, [(c.name, [(sel, sort_desc(t, d.name)) for sel, t in c.fields]) for c in d.ctors])
    s.prog.add_codatatype(codt)
    s.prog.states[d.name] = init_state(codt)
    return []


def _define(d: FunDecl, s: Session):
    fn = define(d, s.prog)
    cls = fn.classification
    detail = None
    if cls.rejected:
        detail = {"reason": cls.reason, "span": _span(cls.span), "message": cls.message}
    reps = [Report(f"corec {d.name}", str(cls), detail)]
    if d.well_behaved:
        reps.append(_register(d.name, s, f"register {d.name}"))
    return reps


def _register(name, s: Session, cmd):
    fn = s.prog.funcs[name]
    try:
        entry = register(name, s.prog, samples=s.samples, depth=s.depth, seed=s.seed)
    except RuleViolation as e:
        return Report(cmd, "FAIL", {
            "name": name, "classification": str(fn.classification), "verdict": "Rejected",
            "reason": e.reason, "span": _span(e.span), "message": e.message,
        }, ok=False)
    except CorecError as e:
        detail = {"name": name, "classification": str(fn.classification), "verdict": "Rejected",
                  "reason": e.code, "message": e.message}
        ce = getattr(e, "counterexample", None)
        if ce is not None:
            detail["counterexample"] = ce
        return Report(cmd, "FAIL", detail, ok=False)
    return Report(cmd, "PASS", {
        "name": name, "arity": repr(entry.arity), "classification": str(fn.classification),
        "checkSamples": s.samples, "verdict": "WellBehaved",
    })


def _register_selector(d: RegisterCmd, s: Session):
    # the wrapper lives only for the attempt; a selector is never callable as a function
    fn = define(s.resolver.selector_decl(d.name, d.span), s.prog)
    try:
        return _register(d.name, s, f"register {d.name}")
    finally:
        if not fn.registered:
            del s.prog.funcs[d.name]


def _force(d: ForceCmd, s: Session):
    cmd = f"force {pp_expr(d.expr)} upto {d.count}"
    try:
        with limited(d.fuel or s.fuel):
            obs = take_prefix(s.value(d.expr), d.count)
    except FuelExhausted as e:
        return Report(cmd, "FuelExhausted", e.to_json(), ok=False)
    except CorecError as e:
        return Report(cmd, e.code, {"message": e.message}, ok=False)
    return Report(cmd, "OK", to_json(obs), shown=show_observation(obs))


def _check(d: CheckCmd, s: Session):
    cmd = f"check {pp_expr(d.lhs)} = {pp_expr(d.rhs)} upto {d.count}"
    try:
        with limited(d.fuel or s.fuel):
            r = empirical_eq(s.value(d.lhs), s.value(d.rhs), d.count)
    except FuelExhausted as e:
        return Report(cmd, "FuelExhausted", e.to_json(), ok=False)
    except CorecError as e:
        return Report(cmd, e.code, {"message": e.message}, ok=False)
    if isinstance(r, Differ):
        return Report(cmd, "FAIL", {
            "index": r.index, "path": list(r.path), "left": show_value(r.left), "right": show_value(r.right),
        }, ok=False)
    return Report(cmd, "PASS", {"depth": d.count})


def _prove(d: ProveCmd, s: Session):
    label = f"{d.label}: " if d.label else ""
    cmd = f"prove {label}{pp_expr(d.lhs)} = {pp_expr(d.rhs)}"
    lemmas = []
    for name in d.lemmas:
        lm = s.lemmas.get(name)
        if lm is None:
            return Report(cmd, "FAIL", {"stage": "lemmas", "detail": f"{name} is not a verified lemma"}, ok=False)
        lemmas.append(lm)
    pv = Prover(s.prog, trials=s.trials, seed=s.seed)
    try:
        goal = (pv.to_sym(d.lhs), pv.to_sym(d.rhs))
        schemas = [(pv.to_sym(a), pv.to_sym(b)) for a, b in d.schemas]
    except CorecError as e:
        return Report(cmd, "FAIL", {"stage": "translate", "detail": e.message}, ok=False)
    with limited(s.fuel):
        res = check_certificate(goal, Certificate(schemas, d.depth, lemmas), pv)
    if not res.verified:
        return Report(cmd, "FAIL", res.to_json(), ok=False)
    detail = res.to_json()
    cor = corroborate(d, s)
    detail["corroboration"] = cor
    rules = sorted(set().union(*(_rules(x) for x in res.derivations)))
    shown = f"rules {', '.join(rules)}; " + _show_corroboration(cor)
    if not cor["agree"]:
        return Report(cmd, "FAIL", detail, ok=False, shown=shown)
    if d.label:
        s.lemmas[d.label] = Lemma(d.label, goal[0], goal[1])
    return Report(cmd, "VERIFIED", detail, shown=shown)


def _rules(x) -> set:
    if isinstance(x, dict):
        out = {x["rule"]} if "rule" in x and isinstance(x["rule"], str) else set()
        for v in x.values():
            out |= _rules(v)
        return out
    if isinstance(x, list):
        return set().union(set(), *(_rules(v) for v in x))
    return set()


def _show_corroboration(c) -> str:
    if not c["agree"]:
        return f"ground instance {c['instance']} differs at index {c.get('index')}"
    s = f"agrees on {c['instances']} ground instances to depth {c['depth']}"
    if c["depth"] < c["requested"]:
        s += f" (requested {c['requested']}; stopped by the time budget)"
    return s


def goal_vars(d: ProveCmd) -> dict:
    from ..syntax import Var, walk

    out = {}
    for side in (d.lhs, d.rhs):
        for e in walk(side):
            if isinstance(e, Var) and e.ref == ("implicit",):
                out[e.name] = e.sort.name
    return out


def corroborate(d: ProveCmd, s: Session, instances=None, depth=None, seconds=None):
    """Compare both sides on random instantiations of the goal variables.

    Each instance gets an equal share of `seconds`; when its share runs out the
    comparison stops early, and the least depth completed is reported."""
    instances = s.corroborate if instances is None else instances
    depth = s.corroborate_depth if depth is None else depth
    seconds = s.corroborate_seconds if seconds is None else seconds
    vs = goal_vars(d)
    rng = random.Random(s.seed)
    n = instances if vs else 1
    reached = depth
    for i in range(n):
        env = {v: random_value(s.prog.codts[so], rng, nodes=3, max_nat=3) for v, so in sorted(vs.items())}
        deadline = time.monotonic() + seconds / n
        try:
            with limited(s.fuel):
                lhs = compile_expr(d.lhs, s.prog)(env)
                rhs = compile_expr(d.rhs, s.prog)(env)
                r = empirical_eq(lhs, rhs, depth, deadline)
        except FuelExhausted as e:
            return {"agree": False, "instance": i, "fuelExhausted": e.to_json()}
        if isinstance(r, Differ):
            return {"agree": False, "instance": i, "index": r.index, "path": list(r.path),
                    "left": show_value(r.left), "right": show_value(r.right)}
        reached = min(reached, r.depth)
    return {"agree": True, "instances": n, "depth": reached, "requested": depth}
