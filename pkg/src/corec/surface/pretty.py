"""Pretty printer; `parse_file(pretty(ast))` pretty-prints back to the same text."""

from __future__ import annotations

from ..syntax import (
    BinOp, BoolLit, Call, CheckCmd, CodatatypeDecl, ExistsIn, FImage, ForceCmd, FunDecl, If,
    ListLit, MapLam, NatLit, Not, ProveCmd, RegisterCmd, SetLit, SourceFile, TupleLit, UnitLit, Var,
)
from .lexer import OP_SYMBOLS

PREC = {"or": 1, "and": 2, "=": 4, "<": 4, ">": 4, "+": 5, "-": 5, "*": 6, "^": 7}
APP, ATOM = 8, 9


def _paren(s: str, own: int, ctx: int) -> str:
    return f"({s})" if own < ctx else s


def pp_expr(e, ctx: int = 0) -> str:
    match e:
        case NatLit(value=v):
            return str(v)
        case BoolLit(value=v):
            return "true" if v else "false"
        case UnitLit():
            return "()"
        case Var(name=n):
            return n
        case Call(fn=f, args=args, infix=True) if len(args) == 2:
            p = 5 if OP_SYMBOLS.get(f) == "add" else 6
            s = f"{pp_expr(args[0], p)} {f} {pp_expr(args[1], p + 1)}"
            return _paren(s, p, ctx)
        case Call(fn=f, args=()):
            return f
        case Call(fn=f, args=(a,)):
            return _paren(f"{f} {pp_expr(a, ATOM)}", APP, ctx)
        case Call(fn=f, args=args):
            return _paren(f"{f}(" + ", ".join(pp_expr(a) for a in args) + ")", APP, ctx)
        case BinOp(op=op, left=l, right=r):
            p = PREC[op]
            if op == "^":
                s = f"{pp_expr(l, p + 1)} ^ {pp_expr(r, p)}"
            elif p == 4:
                s = f"{pp_expr(l, p + 1)} {op} {pp_expr(r, p + 1)}"
            else:
                s = f"{pp_expr(l, p)} {op} {pp_expr(r, p + 1)}"
            return _paren(s, p, ctx)
        case Not(arg=a):
            return _paren(f"not {pp_expr(a, 3)}", 3, ctx)
        case If(cond=c, then=t, orelse=o):
            return _paren(f"if {pp_expr(c)} then {pp_expr(t)} else {pp_expr(o)}", 0, ctx)
        case TupleLit(items=items):
            return "(" + ", ".join(pp_expr(i) for i in items) + ")"
        case ListLit(items=items):
            return "[" + ", ".join(pp_expr(i) for i in items) + "]"
        case SetLit(items=items):
            return "{" + ", ".join(pp_expr(i) for i in items) + "}"
        case MapLam(pattern=pat, body=b, lst=l):
            s = f"map (λ({', '.join(pat)}). {pp_expr(b)}) {pp_expr(l, ATOM)}"
            return _paren(s, APP, ctx)
        case FImage(fn=f, arg=a):
            return _paren(f"fimage {f} {pp_expr(a, ATOM)}", APP, ctx)
        case ExistsIn(lst=l, pred=p):
            return _paren(f"exists-in {pp_expr(l, ATOM)} {p}", APP, ctx)
    raise TypeError(f"cannot print {e!r}")


def pp_decl(d) -> str:
    match d:
        case CodatatypeDecl(name=n, ctors=ctors):
            alts = []
            for c in ctors:
                fields = "".join(f" ({s}: {t})" for s, t in c.fields)
                alts.append(c.name + fields)
            return f"codatatype {n} = " + " | ".join(alts)
        case FunDecl(name=n, params=ps, result=r, body=b, well_behaved=wb):
            head = "corec " + ("well_behaved " if wb else "") + n
            if ps:
                head += "(" + ", ".join(f"{p}: {s}" for p, s in ps) + ")"
            return f"{head}: {r} =\n  {pp_expr(b)}"
        case ForceCmd(expr=e, count=k, fuel=f):
            return f"force {pp_expr(e)} upto {k}" + (f" fuel {f}" if f is not None else "")
        case CheckCmd(lhs=l, rhs=r, count=k, fuel=f):
            s = f"check {pp_expr(l, 5)} = {pp_expr(r)} upto {k}"
            return s + (f" fuel {f}" if f is not None else "")
        case RegisterCmd(name=n):
            return f"register {n}"
        case ProveCmd(label=lab, lhs=l, rhs=r, schemas=sch, depth=dp, lemmas=lem):
            s = "prove " + (f"{lab}: " if lab else "") + f"{pp_expr(l, 5)} = {pp_expr(r)}"
            if sch is not None:
                s += " via { " + "; ".join(f"({pp_expr(a)}, {pp_expr(b)})" for a, b in sch) + " }"
            s += f" depth {dp}"
            if lem:
                s += " using " + " ".join(lem)
            return s
    raise TypeError(f"cannot print {d!r}")


def pretty(f: SourceFile) -> str:
    return "".join(pp_decl(d) + "\n" for d in f.decls)
