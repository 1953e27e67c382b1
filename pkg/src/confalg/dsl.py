"""The declaration DSL: lexer, parser, expression evaluation, workspace.

Files declare algebras, rings, structures and auxiliary objects:

    algebra V { gens u; params c }
    pva Vir on V { u u = (D + 2*l)*u + c*l^3; }
    lcad K = kahler(Vir)
    ring R { gens x; }
    lad T on R { gens f; anchor f x = 1; }
    poisson Pc on R2 { x y = x; }
    module M on K { gens w; du w = l*w; }
    cochain c0 on K coeff adjoint degree 0 { () = u^2; }
    cocycle w3 on K coeff trivial { du du = l^3; }

Declarations are immutable once parsed; references resolve to earlier
declarations.  `D` is the derivation symbol, `l`, `m`, `l1`.. are lambda
variables, jet orders are written u', u'', u''' or u^(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diffpoly import AlgebraSig, DiffPoly, OpPoly, render_diffpoly
from .errors import ConfalgError
from .freemod import OpVec
from .jetcur import LieAlgebroid, PoissonAlgebra, current_lcad, jet_pva, kahler_lad
from .lamcalc import LValue, render_lvalue
from .lcad import (
    DualLCAdModule,
    FreeLCAdModule,
    LCAdStructure,
    TransferredPVAModule,
    TrivialLCAdModule,
    kahler_lcad,
    quotient_lad,
    sae_pva,
    semidirect,
)
from .pva import AdjointPVAModule, FreePVAModule, PVAStructure, TABLE_VAR
from .cohom import CocycleData, LCAdCochain, PVACochain

LAMBDA_NAMES = {"l", "m"} | {f"l{i}" for i in range(1, 10)}
RESERVED = LAMBDA_NAMES | {"D"}


class ParseError(ConfalgError):
    def __init__(self, msg: str, line: int, col: int, expected: list[str] | None = None):
        loc = f"{line}:{col}"
        if expected:
            msg = f"{msg} (expected one of: {', '.join(expected)})"
        super().__init__(f"parse error at {loc}: {msg}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# lexer


@dataclass
class Token:
    kind: str  # IDENT INT PUNCT EOF
    text: str
    line: int
    col: int
    primes: int = 0


PUNCT = set("{}();,=+-*/^[]")


def lex(src: str) -> list[Token]:
    toks: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            name = src[i:j]
            primes = 0
            while j < n and src[j] == "'":
                primes += 1
                j += 1
            toks.append(Token("IDENT", name, line, start_col, primes))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in PUNCT:
            toks.append(Token("PUNCT", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# expression AST


@dataclass
class ENum:
    value: Fraction


@dataclass
class ESym:
    name: str
    jet: int = 0


@dataclass
class ENeg:
    arg: object


@dataclass
class EAdd:
    terms: list


@dataclass
class EMul:
    factors: list


@dataclass
class EPow:
    base: object
    exp: int


class Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def err(self, msg: str, expected: list[str] | None = None):
        t = self.peek()
        raise ParseError(f"{msg}, found {t.text!r}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            self.err(f"expected {text!r}", [text])
        return self.next()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind != "IDENT":
            self.err("expected a name", ["identifier"])
        return self.next()

    def expect_int(self) -> int:
        t = self.peek()
        if t.kind != "INT":
            self.err("expected an integer", ["integer"])
        return int(self.next().text)

    # ----- expressions ----------------------------------------------------

    def expr(self):
        terms = [self.term()]
        ops = []
        while self.peek().text in ("+", "-"):
            op = self.next().text
            t = self.term()
            terms.append(ENeg(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else EAdd(terms)

    def term(self):
        if self.peek().text == "-":
            self.next()
            return ENeg(self.term())
        factors = [self.power()]
        while True:
            t = self.peek()
            if t.text == "*":
                self.next()
                factors.append(self.power())
            else:
                break
        return factors[0] if len(factors) == 1 else EMul(factors)

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            save = self.i
            self.next()
            t = self.peek()
            if t.kind == "INT":
                return EPow(base, int(self.next().text))
            if t.text == "(" and isinstance(base, ESym) and base.jet == 0:
                # jet order marker u^(n)
                self.next()
                n = self.expect_int()
                self.expect(")")
                return ESym(base.name, n)
            self.i = save
            self.err("expected an integer exponent or a jet order")
        return base

    def atom(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            num = Fraction(int(t.text))
            if self.peek().text == "/":
                self.next()
                den = self.expect_int()
                num = num / den
            return ENum(num)
        if t.kind == "IDENT":
            self.next()
            return ESym(t.text, t.primes)
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        self.err("expected an expression atom")


# ---------------------------------------------------------------------------
# expression evaluation


class VMixed:
    """Operator-valued polynomial: D-power -> lambda-polynomial over DiffPoly."""

    def __init__(self, parts: dict[int, LValue]):
        self.parts = {d: v for d, v in parts.items() if not v.is_zero()}

    @staticmethod
    def const(v: LValue) -> "VMixed":
        return VMixed({0: v})

    def __add__(self, other: "VMixed") -> "VMixed":
        parts = dict(self.parts)
        for d, v in other.parts.items():
            parts[d] = parts[d] + v if d in parts else v
        return VMixed(parts)

    def __neg__(self) -> "VMixed":
        return VMixed({d: -v for d, v in self.parts.items()})

    def mul(self, other: "VMixed") -> "VMixed":
        from math import comb

        parts: dict[int, LValue] = {}
        for i, a in self.parts.items():
            for j, b in other.parts.items():
                cur = b
                for t in range(i + 1):
                    contrib = a_mul_lv(a, cur)
                    d = i - t + j
                    contrib = contrib.smul(comb(i, t))
                    parts[d] = parts[d] + contrib if d in parts else contrib
                    cur = cur.dtot()
        return VMixed(parts)

    def apply_module(self, m: LValue) -> LValue:
        res = LValue.zero()
        for d, a in self.parts.items():
            cur = m
            for _ in range(d):
                cur = cur.dtot()
            res = res + lv_mul_generic(a, cur)
        return res


def a_mul_lv(a: LValue, b: LValue) -> LValue:
    """Product of two DiffPoly-valued LValues."""
    from .lamcalc import lv_mul

    return lv_mul(a, b)


def lv_mul_generic(a: LValue, b: LValue) -> LValue:
    from .lamcalc import lv_mul

    return lv_mul(a, b)


@dataclass
class ExprContext:
    sig: AlgebraSig
    lambdas: set[str]
    module_gens: dict[str, int] = field(default_factory=dict)
    module_rank: int = 0
    allow_D: bool = True


def eval_expr(node, ctx: ExprContext):
    """Evaluate an AST node to VMixed or a module-valued LValue."""
    if isinstance(node, ENum):
        return VMixed.const(LValue.const(DiffPoly.const(ctx.sig, node.value)))
    if isinstance(node, ESym):
        name = node.name
        if name == "D":
            if not ctx.allow_D:
                raise ConfalgError("the derivation symbol is not allowed here")
            if node.jet:
                raise ConfalgError("D takes no jet marks")
            return VMixed({1: LValue.const(DiffPoly.one(ctx.sig))})
        if name in ctx.lambdas:
            if node.jet:
                raise ConfalgError(f"lambda variable {name!r} takes no jet marks")
            return VMixed.const(LValue.mono(DiffPoly.one(ctx.sig), (name, 1)))
        if name in LAMBDA_NAMES:
            raise ConfalgError(f"lambda variable {name!r} is not in scope here")
        if name in ctx.module_gens:
            if node.jet:
                vec = OpVec.single(ctx.sig, ctx.module_rank, ctx.module_gens[name],
                                   OpPoly.d(ctx.sig, node.jet))
            else:
                vec = OpVec.basis(ctx.sig, ctx.module_rank, ctx.module_gens[name])
            return LValue.const(vec)
        if name in ctx.sig.gens:
            i = ctx.sig.gens.index(name)
            return VMixed.const(LValue.const(DiffPoly.gen(ctx.sig, i, node.jet)))
        if name in ctx.sig.params:
            if node.jet:
                raise ConfalgError(f"parameter {name!r} takes no jet marks")
            return VMixed.const(LValue.const(DiffPoly.param(ctx.sig, name)))
        raise ConfalgError(f"unknown name {name!r}")
    if isinstance(node, ENeg):
        v = eval_expr(node.arg, ctx)
        return -v if isinstance(v, VMixed) else -v
    if isinstance(node, EAdd):
        vals = [eval_expr(t, ctx) for t in node.terms]
        mixed = [v for v in vals if isinstance(v, VMixed)]
        mods = [v for v in vals if not isinstance(v, VMixed)]
        if mods and mixed:
            # scalar zero may appear in a module-valued sum
            for v in mixed:
                if v.parts:
                    raise ConfalgError("cannot add an algebra value to a module value")
            mixed = []
        if mods:
            res = mods[0]
            for v in mods[1:]:
                res = res + v
            return res
        res = mixed[0]
        for v in mixed[1:]:
            res = res + v
        return res
    if isinstance(node, EMul):
        acc = None
        for f in node.factors:
            v = eval_expr(f, ctx)
            if acc is None:
                acc = v
            elif isinstance(acc, VMixed) and isinstance(v, VMixed):
                acc = acc.mul(v)
            elif isinstance(acc, VMixed):
                acc = acc.apply_module(v)
            elif isinstance(v, VMixed) and all(d == 0 for d in v.parts):
                # lambda/scalar factors commute across module elements
                acc = v.apply_module(acc)
            else:
                raise ConfalgError("module elements multiply only from the left")
        return acc
    if isinstance(node, EPow):
        v = eval_expr(node.base, ctx)
        if not isinstance(v, VMixed):
            raise ConfalgError("module elements cannot be raised to powers")
        res = VMixed.const(LValue.const(DiffPoly.one(ctx.sig)))
        for _ in range(node.exp):
            res = res.mul(v)
        return res
    raise ConfalgError(f"unhandled expression node {node!r}")


def to_lvalue_diffpoly(v, ctx: ExprContext) -> LValue:
    """Interpret an algebra-valued expression as the operator applied to 1.

    Composition has already performed the Leibniz expansion, so extraction
    keeps the order-zero part: (D + 2*l)*u evaluates to u' + 2*l*u, and a
    dangling derivation such as u*D evaluates to 0.
    """
    if not isinstance(v, VMixed):
        raise ConfalgError("expected an algebra-valued expression")
    return v.parts.get(0, LValue.zero())


def to_lvalue_module(v, ctx: ExprContext) -> LValue:
    if isinstance(v, VMixed):
        if v.parts:
            raise ConfalgError("expected a module-valued expression")
        return LValue.zero()
    return v


def to_diffpoly(v, ctx: ExprContext) -> DiffPoly:
    lv = to_lvalue_diffpoly(v, ctx)
    if any(mono for mono in lv.terms):
        raise ConfalgError("lambda variables are not allowed here")
    return lv.terms.get((), DiffPoly.zero(ctx.sig))


# ---------------------------------------------------------------------------
# workspace


@dataclass
class WorkspaceEntry:
    kind: str
    obj: object
    source: str
    meta: dict = field(default_factory=dict)


class Workspace:
    def __init__(self):
        self.entries: dict[str, WorkspaceEntry] = {}
        self.order: list[str] = []

    def add(self, name: str, entry: WorkspaceEntry):
        if name in self.entries:
            raise ConfalgError(f"duplicate declaration of {name!r}")
        self.entries[name] = entry
        self.order.append(name)

    def get(self, name: str, kind: str | None = None) -> WorkspaceEntry:
        if name not in self.entries:
            raise ConfalgError(f"unknown name {name!r}")
        e = self.entries[name]
        if kind is not None and e.kind != kind:
            raise ConfalgError(f"{name!r} is a {e.kind}, not a {kind}")
        return e

    def render(self) -> str:
        return "".join(self.entries[n].source for n in self.order)


def parse(src: str) -> Workspace:
    ws = Workspace()
    p = Parser(lex(src))
    while p.peek().kind != "EOF":
        t = p.peek()
        if t.kind != "IDENT":
            p.err("expected a declaration keyword")
        kw = t.text
        if kw == "algebra":
            _parse_algebra(p, ws)
        elif kw == "ring":
            _parse_ring(p, ws)
        elif kw == "pva":
            _parse_pva(p, ws)
        elif kw == "lcad":
            _parse_lcad(p, ws)
        elif kw == "lad":
            _parse_lad(p, ws)
        elif kw == "poisson":
            _parse_poisson(p, ws)
        elif kw == "module":
            _parse_module(p, ws)
        elif kw == "cochain":
            _parse_cochain(p, ws)
        elif kw == "cocycle":
            _parse_cocycle(p, ws)
        else:
            p.err(f"unknown declaration {kw!r}",
                  ["algebra", "ring", "pva", "lcad", "lad", "poisson",
                   "module", "cochain", "cocycle"])
    return ws


def _names_list(p: Parser) -> list[str]:
    names = [p.expect_ident().text]
    while p.peek().kind == "IDENT" and p.peek().text != ";":
        names.append(p.expect_ident().text)
    return names


def _check_names(names: list[str]):
    for n in names:
        if n in RESERVED:
            raise ConfalgError(f"name {n!r} is reserved")


def _parse_algebra(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    p.expect("{")
    p.expect("gens")
    gens = _names_list(p)
    p.expect(";")
    params: list[str] = []
    if p.peek().text == "params":
        p.next()
        params = _names_list(p)
        p.expect(";")
    p.expect("}")
    _check_names(gens + params)
    sig = AlgebraSig(tuple(gens), tuple(params))
    src = f"algebra {name} {{ gens {' '.join(gens)};"
    if params:
        src += f" params {' '.join(params)};"
    src += " }\n"
    ws.add(name, WorkspaceEntry("algebra", sig, src))


def _parse_ring(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    p.expect("{")
    p.expect("gens")
    gens = _names_list(p)
    p.expect(";")
    p.expect("}")
    _check_names(gens)
    sig = AlgebraSig(tuple(gens), ())
    src = f"ring {name} {{ gens {' '.join(gens)}; }}\n"
    ws.add(name, WorkspaceEntry("ring", sig, src))


def _entry_exprs(p: Parser):
    """Parse `ident ident = expr ;` entries until the closing brace."""
    entries = []
    while p.peek().text != "}":
        kind = None
        if p.peek().text in ("anchor", "psi"):
            kind = p.next().text
        a = p.expect_ident().text
        b = None
        if kind != "psi":
            b = p.expect_ident().text
        p.expect("=")
        e = p.expr()
        p.expect(";")
        entries.append((kind, a, b, e))
    return entries


def _parse_pva(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    if p.peek().text == "=":
        p.next()
        fn = p.expect_ident().text
        p.expect("(")
        arg = p.expect_ident().text
        p.expect(")")
        if fn == "sae":
            L = ws.get(arg, "lcad").obj
            P = sae_pva(L, name=name)
        elif fn == "jetpva":
            Q = ws.get(arg, "poisson").obj
            P = jet_pva(Q, name=name)
        else:
            raise ConfalgError(f"unknown pva constructor {fn!r}")
        ws.add(name, WorkspaceEntry("pva", P, f"pva {name} = {fn}({arg})\n",
                                    {"derived": f"{fn}({arg})"}))
        return
    p.expect("on")
    alg = p.expect_ident().text
    sig = ws.get(alg, "algebra").obj
    p.expect("{")
    entries = _entry_exprs(p)
    p.expect("}")
    ctx = ExprContext(sig, {TABLE_VAR})
    table: dict[tuple[int, int], LValue] = {}
    for kind, a, b, e in entries:
        if kind is not None:
            raise ConfalgError("pva tables take plain bracket entries")
        i, j = sig.gen_index(a), sig.gen_index(b)
        table[(i, j)] = to_lvalue_diffpoly(eval_expr(e, ctx), ctx)
    # omitted pairs default by skewsymmetry
    from .pva import skew_mirror

    for i in range(sig.rank):
        for j in range(sig.rank):
            if (i, j) not in table and (j, i) in table:
                table[(i, j)] = skew_mirror(table[(j, i)], TABLE_VAR)
    P = PVAStructure(sig, table, name=name)
    src_entries = "".join(
        f"  {sig.gens[i]} {sig.gens[j]} = {render_lvalue(P.table[(i, j)], render_diffpoly)};\n"
        for i in range(sig.rank)
        for j in range(sig.rank)
        if not P.table[(i, j)].is_zero()
    )
    src = f"pva {name} on {alg} {{\n{src_entries}}}\n"
    ws.add(name, WorkspaceEntry("pva", P, src, {"algebra": alg}))


def _parse_lcad(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    if p.peek().text == "=":
        p.next()
        fn = p.expect_ident().text
        p.expect("(")
        args = [p.expect_ident().text]
        while p.peek().text == ",":
            p.next()
            args.append(p.expect_ident().text)
        p.expect(")")
        meta: dict = {"derived": f"{fn}({', '.join(args)})"}
        if fn == "kahler":
            P = ws.get(args[0], "pva").obj
            L = kahler_lcad(P, name=name)
            meta["kahler_of"] = args[0]
        elif fn == "current":
            F = ws.get(args[0], "lad").obj
            L = current_lcad(F, name=name)
        elif fn == "semidirect":
            L0 = ws.get(args[0], "lcad").obj
            M = ws.get(args[1], "module").obj
            L = semidirect(L0, M, name=name)
        elif fn == "extension":
            L0 = ws.get(args[0], "lcad").obj
            M = ws.get(args[1], "module").obj
            omega = ws.get(args[2], "cocycle").obj
            from .cohom import extension_from_cocycle

            L = extension_from_cocycle(L0, M, omega, name=name)
        else:
            raise ConfalgError(f"unknown lcad constructor {fn!r}")
        src = f"lcad {name} = {fn}({', '.join(args)})\n"
        ws.add(name, WorkspaceEntry("lcad", L, src, meta))
        return
    p.expect("on")
    alg = p.expect_ident().text
    sig = ws.get(alg, "algebra").obj
    p.expect("{")
    p.expect("gens")
    gens = _names_list(p)
    p.expect(";")
    _check_names(gens)
    entries = _entry_exprs(p)
    p.expect("}")
    rank = len(gens)
    gidx = {g: a for a, g in enumerate(gens)}
    ctx = ExprContext(sig, {TABLE_VAR}, gidx, rank)
    btable: dict[tuple[int, int], LValue] = {}
    atable: dict[tuple[int, int], LValue] = {}
    for kind, a, b, e in entries:
        if kind == "anchor":
            atable[(gidx[a], sig.gen_index(b))] = to_lvalue_diffpoly(eval_expr(e, ctx), ctx)
        elif kind is None:
            btable[(gidx[a], gidx[b])] = to_lvalue_module(eval_expr(e, ctx), ctx)
        else:
            raise ConfalgError("lcad bodies take bracket and anchor entries")
    from .lcad import skew_mirror_vec

    for a in range(rank):
        for b in range(rank):
            if (a, b) not in btable and (b, a) in btable:
                btable[(a, b)] = skew_mirror_vec(btable[(b, a)], TABLE_VAR)
    L = LCAdStructure(sig, rank, btable, atable, gen_names=gens, name=name)
    src = render_lcad_decl(name, alg, L)
    ws.add(name, WorkspaceEntry("lcad", L, src, {"algebra": alg}))


def render_lcad_decl(name: str, alg: str, L: LCAdStructure) -> str:
    lines = [f"lcad {name} on {alg} {{", f"  gens {' '.join(L.gen_names)};"]
    for a in range(L.rank):
        for b in range(L.rank):
            v = L.btable[(a, b)]
            if not v.is_zero():
                lines.append(
                    f"  {L.gen_names[a]} {L.gen_names[b]} = "
                    f"{render_lvalue(v, lambda w: w.render(L.gen_names))};"
                )
    for a in range(L.rank):
        for i in range(L.sig.rank):
            v = L.atable[(a, i)]
            if not v.is_zero():
                lines.append(
                    f"  anchor {L.gen_names[a]} {L.sig.gens[i]} = "
                    f"{render_lvalue(v, render_diffpoly)};"
                )
    lines.append("}\n")
    return "\n".join(lines)


def _parse_lad(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    if p.peek().text == "=":
        p.next()
        fn = p.expect_ident().text
        p.expect("(")
        arg = p.expect_ident().text
        p.expect(")")
        if fn == "kahlerlad":
            P = ws.get(arg, "poisson").obj
            F = kahler_lad(P, name=name)
        elif fn == "quotient":
            L = ws.get(arg, "lcad").obj
            F = quotient_lad(L)
        else:
            raise ConfalgError(f"unknown lad constructor {fn!r}")
        ws.add(name, WorkspaceEntry("lad", F, f"lad {name} = {fn}({arg})\n",
                                    {"derived": f"{fn}({arg})"}))
        return
    p.expect("on")
    ring = p.expect_ident().text
    sig = ws.get(ring, "ring").obj
    p.expect("{")
    p.expect("gens")
    gens = _names_list(p)
    p.expect(";")
    _check_names(gens)
    entries = _entry_exprs(p)
    p.expect("}")
    rank = len(gens)
    gidx = {g: a for a, g in enumerate(gens)}
    ctx = ExprContext(sig, set(), gidx, rank, allow_D=False)
    c_table: dict[tuple[int, int], list[DiffPoly]] = {}
    rho: dict[int, list[DiffPoly]] = {}
    for kind, a, b, e in entries:
        if kind == "anchor":
            ai = gidx[a]
            row = rho.setdefault(ai, [DiffPoly.zero(sig)] * sig.rank)
            row[sig.gen_index(b)] = to_diffpoly(eval_expr(e, ctx), ctx)
        elif kind is None:
            v = to_lvalue_module(eval_expr(e, ctx), ctx)
            vec = v.terms.get((), OpVec.zero(sig, rank))
            if any(mono for mono in v.terms):
                raise ConfalgError("Lie algebroid brackets are lambda-free")
            comps = []
            for q in vec.comps:
                if q.order() > 0:
                    raise ConfalgError("Lie algebroid brackets take ring coefficients")
                comps.append(q.coeff(0))
            c_table[(gidx[a], gidx[b])] = comps
    for a in range(rank):
        for b in range(rank):
            if (a, b) not in c_table and (b, a) in c_table:
                c_table[(a, b)] = [-q for q in c_table[(b, a)]]
    F = LieAlgebroid(sig, rank, c_table, rho, gen_names=gens, name=name)
    lines = [f"lad {name} on {ring} {{", f"  gens {' '.join(gens)};"]
    for a in range(rank):
        for b in range(rank):
            vec = F.c[(a, b)]
            if any(not q.is_zero() for q in vec):
                lines.append(f"  {gens[a]} {gens[b]} = {F.render_vec(vec)};")
    for a in range(rank):
        for j in range(sig.rank):
            q = F.rho[a][j]
            if not q.is_zero():
                lines.append(f"  anchor {gens[a]} {sig.gens[j]} = {render_diffpoly(q)};")
    lines.append("}\n")
    ws.add(name, WorkspaceEntry("lad", F, "\n".join(lines), {"ring": ring}))


def _parse_poisson(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    p.expect("on")
    ring = p.expect_ident().text
    sig = ws.get(ring, "ring").obj
    p.expect("{")
    entries = _entry_exprs(p)
    p.expect("}")
    ctx = ExprContext(sig, set(), allow_D=False)
    pi: dict[tuple[int, int], DiffPoly] = {}
    for kind, a, b, e in entries:
        if kind is not None:
            raise ConfalgError("poisson tables take plain bracket entries")
        pi[(sig.gen_index(a), sig.gen_index(b))] = to_diffpoly(eval_expr(e, ctx), ctx)
    P = PoissonAlgebra(sig, pi, name=name)
    lines = [f"poisson {name} on {ring} {{"]
    for i in range(sig.rank):
        for j in range(i, sig.rank):
            q = P.pi[(i, j)]
            if not q.is_zero():
                lines.append(f"  {sig.gens[i]} {sig.gens[j]} = {render_diffpoly(q)};")
    lines.append("}\n")
    ws.add(name, WorkspaceEntry("poisson", P, "\n".join(lines), {"ring": ring}))


def _parse_module(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    if p.peek().text == "=":
        p.next()
        fn = p.expect_ident().text
        p.expect("(")
        arg = p.expect_ident().text
        p.expect(")")
        if fn == "trivial":
            L = ws.get(arg, "lcad").obj
            M = TrivialLCAdModule(L)
            meta = {"of": arg, "target": "lcad"}
        elif fn == "adjoint":
            P = ws.get(arg, "pva").obj
            M = AdjointPVAModule(P)
            meta = {"of": arg, "target": "pva"}
        elif fn == "dual":
            M0e = ws.get(arg, "module")
            if not isinstance(M0e.obj, FreeLCAdModule):
                raise ConfalgError("dual() needs a free lcad module")
            M = DualLCAdModule(M0e.obj)
            meta = {"of": arg, "target": "lcad"}
        else:
            raise ConfalgError(f"unknown module constructor {fn!r}")
        ws.add(name, WorkspaceEntry("module", M, f"module {name} = {fn}({arg})\n", meta))
        return
    p.expect("on")
    owner = p.expect_ident().text
    oe = ws.get(owner)
    p.expect("{")
    p.expect("gens")
    gens = _names_list(p)
    p.expect(";")
    _check_names(gens)
    entries = _entry_exprs(p)
    p.expect("}")
    rank = len(gens)
    gidx = {g: l for l, g in enumerate(gens)}
    if oe.kind == "lcad":
        L: LCAdStructure = oe.obj
        ctx = ExprContext(L.sig, {TABLE_VAR}, gidx, rank)
        table: dict[tuple[int, int], LValue] = {}
        lidx = {g: a for a, g in enumerate(L.gen_names)}
        for kind, a, b, e in entries:
            if kind is not None or a not in lidx:
                raise ConfalgError("module actions pair a structure generator with a module generator")
            table[(lidx[a], gidx[b])] = to_lvalue_module(eval_expr(e, ctx), ctx)
        M = FreeLCAdModule(L, rank, table, gen_names=gens)
        lines = [f"module {name} on {owner} {{", f"  gens {' '.join(gens)};"]
        for a in range(L.rank):
            for l in range(rank):
                v = M.table[(a, l)]
                if not v.is_zero():
                    lines.append(
                        f"  {L.gen_names[a]} {gens[l]} = "
                        f"{render_lvalue(v, lambda w: w.render(gens))};"
                    )
        lines.append("}\n")
        ws.add(name, WorkspaceEntry("module", M, "\n".join(lines),
                                    {"of": owner, "target": "lcad"}))
    elif oe.kind == "pva":
        P: PVAStructure = oe.obj
        ctx = ExprContext(P.sig, {TABLE_VAR}, gidx, rank)
        table = {}
        for kind, a, b, e in entries:
            if kind is not None:
                raise ConfalgError("module actions take plain entries")
            table[(P.sig.gen_index(a), gidx[b])] = to_lvalue_module(eval_expr(e, ctx), ctx)
        M = FreePVAModule(P, rank, table, gen_names=gens)
        lines = [f"module {name} on {owner} {{", f"  gens {' '.join(gens)};"]
        for i in range(P.sig.rank):
            for l in range(rank):
                v = M.table[(i, l)]
                if not v.is_zero():
                    lines.append(
                        f"  {P.sig.gens[i]} {gens[l]} = "
                        f"{render_lvalue(v, lambda w: w.render(gens))};"
                    )
        lines.append("}\n")
        ws.add(name, WorkspaceEntry("module", M, "\n".join(lines),
                                    {"of": owner, "target": "pva"}))
    else:
        raise ConfalgError("modules live over a pva or an lcad")


def resolve_module(ws: Workspace, ref: str, owner_entry: WorkspaceEntry):
    """Resolve a module reference: a declared name, `adjoint`, or `trivial`."""
    if ref == "trivial":
        if owner_entry.kind != "lcad":
            raise ConfalgError("trivial coefficients need an lcad owner")
        return TrivialLCAdModule(owner_entry.obj)
    if ref == "adjoint":
        if owner_entry.kind == "pva":
            return AdjointPVAModule(owner_entry.obj)
        if owner_entry.kind == "lcad" and "kahler_of" in owner_entry.meta:
            P = ws.get(owner_entry.meta["kahler_of"], "pva").obj
            return TransferredPVAModule(P, AdjointPVAModule(P), owner_entry.obj)
        raise ConfalgError("adjoint coefficients need a pva or a Kahler-derived lcad")
    e = ws.get(ref, "module")
    M = e.obj
    if owner_entry.kind == "lcad" and e.meta.get("target") == "pva":
        if "kahler_of" not in owner_entry.meta:
            raise ConfalgError("pva modules transfer only to Kahler-derived lcads")
        P = ws.get(owner_entry.meta["kahler_of"], "pva").obj
        return TransferredPVAModule(P, M, owner_entry.obj)
    return M


def _parse_cochain(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    p.expect("on")
    owner = p.expect_ident().text
    oe = ws.get(owner)
    p.expect("coeff")
    modref = p.expect_ident().text
    p.expect("degree")
    degree = p.expect_int()
    rep = "quotient"
    if p.peek().text == "rep":
        p.next()
        rep = p.expect_ident().text
    p.expect("{")
    # entries: gen tuple = expr; degree 0 uses ()
    entries = []
    while p.peek().text != "}":
        gens = []
        if p.peek().text == "(":
            p.next()
            p.expect(")")
        else:
            while p.peek().text != "=":
                gens.append(p.expect_ident().text)
        p.expect("=")
        e = p.expr()
        p.expect(";")
        entries.append((gens, e))
    p.expect("}")
    M = resolve_module(ws, modref, oe)
    nnames = lnames_for(degree, rep)
    if oe.kind == "lcad":
        L: LCAdStructure = oe.obj
        lidx = {g: a for a, g in enumerate(L.gen_names)}
        table = {}
        for gens, e in entries:
            t = tuple(sorted(lidx[g] for g in gens))
            if len(t) != degree:
                raise ConfalgError("cochain entry arity must equal the degree")
            table[t] = _eval_cochain_value(e, L.sig, M, nnames)
        c = LCAdCochain(L, M, degree, rep, table, validate=True)
    elif oe.kind == "pva":
        P: PVAStructure = oe.obj
        table = {}
        for gens, e in entries:
            t = tuple(sorted(P.sig.gen_index(g) for g in gens))
            if len(t) != degree:
                raise ConfalgError("cochain entry arity must equal the degree")
            table[t] = _eval_cochain_value(e, P.sig, M, nnames)
        c = PVACochain(P, M, degree, rep, table, validate=True)
    else:
        raise ConfalgError("cochains live over a pva or an lcad")
    rend = render_cochain_decl(name, owner, modref, c)
    ws.add(name, WorkspaceEntry("cochain", c, rend, {"on": owner, "coeff": modref}))


def lnames_for(degree: int, rep: str) -> set[str]:
    from .cohom import lnames

    if rep == "quotient":
        return set(lnames(degree)[:-1]) if degree else set()
    return set(lnames(degree))


def _eval_cochain_value(e, sig, M, allowed_lambdas: set[str]) -> LValue:
    mg = {}
    rank = 0
    if hasattr(M, "gen_names") and hasattr(M, "rank") and M.rank:
        mg = {g: l for l, g in enumerate(M.gen_names)}
        rank = M.rank
    ctx = ExprContext(sig, allowed_lambdas, mg, rank)
    v = eval_expr(e, ctx)
    if rank:
        return to_lvalue_module(v, ctx)
    lv = to_lvalue_diffpoly(v, ctx)
    return lv


def render_cochain_decl(name: str, owner: str, modref: str, c) -> str:
    lines = [
        f"cochain {name} on {owner} coeff {modref} degree {c.degree} rep {c.rep} {{"
    ]
    if isinstance(c, LCAdCochain):
        gnames = c.L.gen_names
    else:
        gnames = list(c.P.sig.gens)
    for t, v in sorted(c.table.items()):
        if v.is_zero():
            continue
        key = "() " if not t else " ".join(gnames[i] for i in t) + " "
        lines.append(f"  {key}= {render_lvalue(v, c.M.render_elem)};")
    lines.append("}\n")
    return "\n".join(lines)


def _parse_cocycle(p: Parser, ws: Workspace):
    p.next()
    name = p.expect_ident().text
    p.expect("on")
    owner = p.expect_ident().text
    oe = ws.get(owner, "lcad")
    p.expect("coeff")
    modref = p.expect_ident().text
    p.expect("{")
    entries = _entry_exprs(p)
    p.expect("}")
    L: LCAdStructure = oe.obj
    M = resolve_module(ws, modref, oe)
    lidx = {g: a for a, g in enumerate(L.gen_names)}
    mg = {}
    rank = 0
    if hasattr(M, "gen_names") and getattr(M, "rank", None):
        mg = {g: l for l, g in enumerate(M.gen_names)}
        rank = M.rank
    ctx = ExprContext(L.sig, {TABLE_VAR}, mg, rank)
    table: dict[tuple[int, int], LValue] = {}
    psi = None
    for kind, a, b, e in entries:
        if kind == "psi":
            raise ConfalgError("psi entries belong to coboundary declarations")
        v = eval_expr(e, ctx)
        table[(lidx[a], lidx[b])] = (
            to_lvalue_module(v, ctx) if rank else to_lvalue_diffpoly(v, ctx)
        )
    omega = CocycleData(L, M, table)
    lines = [f"cocycle {name} on {owner} coeff {modref} {{"]
    for a in range(L.rank):
        for b in range(a, L.rank):
            v = omega.table[(a, b)]
            if not v.is_zero():
                lines.append(
                    f"  {L.gen_names[a]} {L.gen_names[b]} = "
                    f"{render_lvalue(v, M.render_elem)};"
                )
    lines.append("}\n")
    ws.add(name, WorkspaceEntry("cocycle", omega, "\n".join(lines),
                                {"on": owner, "coeff": modref}))
