"""Recursive-descent parser for `.corec` source files."""

from __future__ import annotations

from ..errors import SyntaxError
from ..syntax import (
    BOOL, NAT, UNIT, BinOp, BoolLit, Call, CheckCmd, CodataSort, CodatatypeDecl, CtorDecl,
    ExistsIn, FImage, FinSetSort, ForceCmd, FunDecl, If, ListLit, ListSort, MapLam, NatLit,
    Not, ProdSort, ProveCmd, RegisterCmd, SetLit, SourceFile, TupleLit, UnitLit, Var,
)
from .lexer import OP_SYMBOLS, Token, tokenize

DECL_STARTS = {"codatatype", "corec", "force", "check", "register", "prove"}
ATOM_STARTS = {"<nat>", "<ident>", "true", "false", "(", "[", "{"}
EXPR_STARTS = ATOM_STARTS | {"if", "not", "map", "fimage", "exists-in"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "punct", "op") and t.text == text

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected):
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        exp = sorted(expected)
        raise SyntaxError(f"unexpected {got}, expected one of {', '.join(exp)}", t.span, exp)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail({text})
        return self.next()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail({"<ident>"})
        return self.next()

    def nat(self) -> int:
        if self.tok.kind != "nat":
            self.fail({"<nat>"})
        return int(self.next().text)

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("nat", "ident"):
            return True
        return t.kind in ("kw", "punct") and t.text in ("true", "false", "(", "[", "{")

    # -- declarations

    def file(self) -> SourceFile:
        decls = []
        while self.tok.kind != "eof":
            decls.append(self.decl())
        return SourceFile(tuple(decls))

    def decl(self):
        t = self.tok
        if t.kind != "kw" or t.text not in DECL_STARTS:
            self.fail(DECL_STARTS)
        return getattr(self, "decl_" + t.text)()

    def decl_codatatype(self):
        start = self.next().span
        name = self.ident().text
        self.expect("=")
        ctors = [self.ctor()]
        while self.at("|"):
            self.next()
            ctors.append(self.ctor())
        return CodatatypeDecl(name, tuple(ctors), span=start.to(self.toks[self.i - 1].span))

    def ctor(self):
        t = self.ident()
        fields = []
        while self.at("("):
            self.next()
            sel = self.ident().text
            self.expect(":")
            fields.append((sel, self.sort()))
            self.expect(")")
        return CtorDecl(t.text, tuple(fields), span=t.span)

    def sort(self):
        if self.at("("):
            self.next()
            items = [self.sort()]
            while self.at(","):
                self.next()
                items.append(self.sort())
            self.expect(")")
            return items[0] if len(items) == 1 else ProdSort(tuple(items))
        name = self.ident().text
        if name == "Nat":
            return NAT
        if name == "Bool":
            return BOOL
        if name == "Unit":
            return UNIT
        if name == "List":
            return ListSort(self.sort_atom())
        if name == "FinSet":
            return FinSetSort(self.sort_atom())
        return CodataSort(name)

    def sort_atom(self):
        if self.at("("):
            return self.sort()
        name = self.ident().text
        return {"Nat": NAT, "Bool": BOOL, "Unit": UNIT}.get(name, CodataSort(name))

    def decl_corec(self):
        start = self.next().span
        wb = False
        if self.at("well_behaved"):
            self.next()
            wb = True
        infix = False
        if self.tok.kind == "op":
            name = self.next().text
            infix = True
        else:
            name = self.ident().text
        params = []
        if self.at("("):
            self.next()
            if not self.at(")"):
                params.append(self.param())
                while self.at(","):
                    self.next()
                    params.append(self.param())
            self.expect(")")
        self.expect(":")
        result = self.sort()
        self.expect("=")
        body = self.expr()
        return FunDecl(name, tuple(params), result, body, wb, span=start.to(self.toks[self.i - 1].span), infix=infix)

    def param(self):
        name = self.ident().text
        self.expect(":")
        return (name, self.sort())

    def fuel_opt(self):
        if self.at("fuel"):
            self.next()
            return self.nat()
        return None

    def decl_force(self):
        start = self.next().span
        e = self.expr()
        self.expect("upto")
        n = self.nat()
        return ForceCmd(e, n, self.fuel_opt(), span=start.to(self.toks[self.i - 1].span))

    def decl_check(self):
        start = self.next().span
        lhs = self.expr(no_eq=True)
        self.expect("=")
        rhs = self.expr()
        self.expect("upto")
        n = self.nat()
        return CheckCmd(lhs, rhs, n, self.fuel_opt(), span=start.to(self.toks[self.i - 1].span))

    def decl_register(self):
        start = self.next().span
        if self.tok.kind == "op":
            name = self.next().text
        else:
            name = self.ident().text
        return RegisterCmd(name, span=start.to(self.toks[self.i - 1].span))

    def decl_prove(self):
        start = self.next().span
        label = None
        if self.tok.kind == "ident" and self.peek().kind == "punct" and self.peek().text == ":":
            label = self.next().text
            self.next()
        lhs = self.expr(no_eq=True)
        self.expect("=")
        rhs = self.expr()
        schemas = None
        if self.at("via"):
            self.next()
            schemas = self.schemas()
        self.expect("depth")
        depth = self.nat()
        lemmas = []
        if self.at("using"):
            self.next()
            while self.tok.kind == "ident":
                lemmas.append(self.next().text)
        return ProveCmd(label, lhs, rhs, schemas, depth, tuple(lemmas), span=start.to(self.toks[self.i - 1].span))

    def schemas(self):
        self.expect("{")
        schemas = []
        if not self.at("}"):
            schemas.append(self.schema())
            while self.at(";"):
                self.next()
                if self.at("}"):
                    break
                schemas.append(self.schema())
        self.expect("}")
        return tuple(schemas)

    def schema(self):
        self.expect("(")
        a = self.expr()
        self.expect(",")
        b = self.expr()
        self.expect(")")
        return (a, b)

    # -- expressions

    def expr(self, no_eq=False):
        if self.at("if"):
            start = self.next().span
            c = self.expr()
            self.expect("then")
            t = self.expr()
            self.expect("else")
            o = self.expr(no_eq)
            return If(c, t, o, span=start.to(self.toks[self.i - 1].span))
        return self.or_expr(no_eq)

    def or_expr(self, no_eq):
        e = self.and_expr(no_eq)
        while self.at("or"):
            self.next()
            r = self.and_expr(no_eq)
            e = BinOp("or", e, r, span=e.span.to(r.span))
        return e

    def and_expr(self, no_eq):
        e = self.not_expr(no_eq)
        while self.at("and"):
            self.next()
            r = self.not_expr(no_eq)
            e = BinOp("and", e, r, span=e.span.to(r.span))
        return e

    def not_expr(self, no_eq):
        if self.at("not"):
            start = self.next().span
            a = self.not_expr(no_eq)
            return Not(a, span=start.to(a.span))
        return self.cmp_expr(no_eq)

    def cmp_expr(self, no_eq):
        e = self.add_expr()
        t = self.tok
        if t.kind == "punct" and t.text in ("<", ">") or (t.kind == "punct" and t.text == "=" and not no_eq):
            self.next()
            r = self.add_expr()
            e = BinOp(t.text, e, r, span=e.span.to(r.span))
        return e

    def _binop_chain(self, sub, builtin, klass):
        e = sub()
        while True:
            t = self.tok
            if t.kind == "punct" and t.text in builtin:
                self.next()
                r = sub()
                op = "*" if t.text == "×" else t.text
                e = BinOp(op, e, r, span=e.span.to(r.span))
            elif t.kind == "op" and OP_SYMBOLS[t.text] == klass:
                self.next()
                r = sub()
                e = Call(t.text, (e, r), span=e.span.to(r.span), infix=True)
            else:
                return e

    def add_expr(self):
        return self._binop_chain(self.mul_expr, ("+", "-"), "add")

    def mul_expr(self):
        return self._binop_chain(self.pow_expr, ("*", "×"), "mul")

    def pow_expr(self):
        e = self.app_expr()
        if self.at("^"):
            self.next()
            r = self.pow_expr()
            e = BinOp("^", e, r, span=e.span.to(r.span))
        return e

    def app_expr(self):
        t = self.tok
        if t.kind == "kw" and t.text == "map":
            self.next()
            self.expect("(")
            if not (self.at("λ") or self.at("\\")):
                self.fail({"λ", "\\"})
            self.next()
            self.expect("(")
            names = [self.ident().text]
            while self.at(","):
                self.next()
                names.append(self.ident().text)
            self.expect(")")
            self.expect(".")
            body = self.expr()
            self.expect(")")
            lst = self.atom()
            return MapLam(tuple(names), body, lst, span=t.span.to(lst.span))
        if t.kind == "kw" and t.text == "fimage":
            self.next()
            fn = self.ident().text
            arg = self.atom()
            return FImage(fn, arg, span=t.span.to(arg.span))
        if t.kind == "kw" and t.text == "exists-in":
            self.next()
            lst = self.atom()
            pred = self.ident()
            return ExistsIn(lst, pred.text, span=t.span.to(pred.span))
        if t.kind == "ident":
            self.next()
            args = []
            while self.starts_atom():
                args.append(self.atom())
            if not args:
                return Var(t.text, span=t.span)
            if len(args) == 1 and isinstance(args[0], TupleLit):
                args = list(args[0].items)
            return Call(t.text, tuple(args), span=t.span.to(self.toks[self.i - 1].span))
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "nat":
            self.next()
            return NatLit(int(t.text), span=t.span)
        if t.kind == "ident":
            self.next()
            return Var(t.text, span=t.span)
        if self.at("true") or self.at("false"):
            self.next()
            return BoolLit(t.text == "true", span=t.span)
        if self.at("("):
            self.next()
            if self.at(")"):
                end = self.next().span
                return UnitLit(span=t.span.to(end))
            items = [self.expr()]
            while self.at(","):
                self.next()
                items.append(self.expr())
            end = self.expect(")").span
            if len(items) == 1:
                return items[0]
            return TupleLit(tuple(items), span=t.span.to(end))
        if self.at("[") or self.at("{"):
            close = "]" if t.text == "[" else "}"
            self.next()
            items = []
            if not self.at(close):
                items.append(self.expr())
                while self.at(","):
                    self.next()
                    items.append(self.expr())
            end = self.expect(close).span
            cls = ListLit if close == "]" else SetLit
            return cls(tuple(items), span=t.span.to(end))
        self.fail(EXPR_STARTS)


def parse_file(text: str) -> SourceFile:
    return Parser(text).file()


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail({"<eof>"})
    return e
