"""TPTP concrete syntax.

Input is a THF dialect with dependent types: ``!>[X:A]: B`` for Pi types,
``a @ t1 @ .. @ tn`` for applied base types and ``A ?| p`` for predicate
subtypes.  Output is plain TH0 for external provers.  Identifiers that are
not TPTP lower words are renamed on output; the renaming is written to a
comment header so :func:`reparse_th0` can undo it.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Optional

from dhol.errors import HolTypeError, ParseError
from dhol.hol import (
    Arrow, Base, HolAssumption, HolAxiom, HolConstDecl, HolContext, HolTheory, HolTypeDecl,
    HolVar,
)
from dhol.syntax import (
    And, App, Assumption, Axiom, BaseApp, Bool, BoolType, Const, ConstDecl, Context, Eq,
    Exists, Falsity, Forall, Hole, Impl, Lam, Not, Or, Pi, Psub, Term, Theory, Truth, Type,
    TypeDecl, Var, VarDecl, spine,
)

# --- lexing ----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*|/\*.*?\*/)
  | (?P<op><=>|<~>|=>|<=|!=|!>|\?\||[()\[\],:.!?^@&|~=>])
  | (?P<dollar>\$\$?[a-zA-Z][A-Za-z0-9_]*)
  | (?P<lower>[a-z][A-Za-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<hole>_(?![A-Za-z0-9_]))
  | (?P<quoted>'(?:[^'\\]|\\.)*')
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            s = m.group()
            if kind == "quoted":
                s = re.sub(r"\\(.)", r"\1", s[1:-1])
                if not s:
                    raise ParseError("empty quoted name", line, pos - line_start + 1)
            out.append(Tok(kind, s, line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    out.append(Tok("eof", "", line, pos - line_start + 1))
    return out


# --- parsing ---------------------------------------------------------------

ROLES = {"type", "axiom", "definition", "hypothesis", "lemma", "theorem", "conjecture"}


@dataclass(frozen=True)
class Statement:
    name: str
    role: str
    body: object  # TypeDecl | ConstDecl | VarDecl | Term
    line: int = 0


@dataclass(frozen=True)
class DholProblem:
    theory: Theory
    context: Context = Context()
    conjecture: Optional[Term] = None
    conjecture_name: str = "conjecture"


class _Parser:
    def __init__(self, toks: list):
        self.toks = toks
        self.i = 0

    # helpers

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Tok] = None):
        t = tok or self.tok
        shown = t.text or "end of input"
        return ParseError(f"{msg} (found {shown!r})", t.line, t.col)

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "dollar") and t.text in texts

    def eat(self, text: str) -> Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        t = self.tok
        if t.kind in ("lower", "quoted", "upper"):
            self.i += 1
            return t.text
        raise self.error("expected a name")

    # statements

    def statements(self, include_dirs=(), seen=()) -> list:
        out = []
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "lower" and t.text == "include":
                self.i += 1
                self.eat("(")
                path = self.tok
                if path.kind != "quoted":
                    raise self.error("expected a quoted file name")
                self.i += 1
                self.eat(")")
                self.eat(".")
                out.extend(_include(path, include_dirs, seen))
                continue
            if t.kind != "lower" or t.text not in ("thf", "tff"):
                raise self.error("expected a thf(...) statement")
            self.i += 1
            self.eat("(")
            name = self.name()
            self.eat(",")
            role_tok = self.tok
            role = self.name()
            if role not in ROLES:
                raise self.error(f"unsupported role {role}", role_tok)
            self.eat(",")
            body = self.type_statement() if role == "type" else self.formula()
            if self.at(","):  # ignore annotations
                raise self.error("annotations are not supported")
            self.eat(")")
            self.eat(".")
            out.append(Statement(name, role, body, t.line))
        return out

    def type_statement(self):
        if self.at("("):
            self.i += 1
            d = self.type_statement()
            self.eat(")")
            return d
        t = self.tok
        sym = self.name()
        self.eat(":")
        if self.at("$tType"):
            self.i += 1
            return TypeDecl(sym)
        if self.at("!>"):
            save = self.i
            self.i += 1
            binders = self.binders()
            self.eat(":")
            if self.at("$tType"):
                self.i += 1
                return TypeDecl(sym, tuple(binders))
            self.i = save
        ty = self.type_()
        kind_args = _kind_arrows(ty)
        if kind_args is not None:
            return TypeDecl(sym, tuple((f"X{k + 1}", a) for k, a in enumerate(kind_args)))
        if t.kind == "upper":
            return VarDecl(sym, ty)
        return ConstDecl(sym, ty)

    def binders(self) -> list:
        self.eat("[")
        out = []
        while True:
            t = self.tok
            if t.kind != "upper":
                raise self.error("expected a variable")
            self.i += 1
            self.eat(":")
            out.append((t.text, self.type_()))
            if self.at("]"):
                self.i += 1
                return out
            self.eat(",")

    # types

    def type_(self) -> Type:
        dom = self.psub_type()
        if self.at(">"):
            self.i += 1
            return Pi("_", dom, self.type_())
        return dom

    def psub_type(self) -> Type:
        ty = self.unit_type()
        while self.at("?|"):
            self.i += 1
            ty = Psub(ty, self.unary())
        return ty

    def unit_type(self) -> Type:
        t = self.tok
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.eat(")")
            return ty
        if self.at("$o"):
            self.i += 1
            return Bool
        if self.at("$tType"):
            self.i += 1
            return _TTYPE
        if self.at("!>"):
            self.i += 1
            binders = self.binders()
            self.eat(":")
            body = self.type_()
            for x, a in reversed(binders):
                body = Pi(x, a, body)
            return body
        if t.kind in ("lower", "quoted"):
            self.i += 1
            args = []
            while self.at("@"):
                self.i += 1
                args.append(self.unary())
            return BaseApp(t.text, tuple(args))
        raise self.error("expected a type")

    # terms

    def formula(self) -> Term:
        left = self.disjunction()
        if self.at("=>"):
            self.i += 1
            return Impl(left, self.formula())
        if self.at("<="):
            self.i += 1
            return Impl(self.formula(), left)
        if self.at("<=>"):
            self.i += 1
            return Eq(Bool, left, self.formula())
        if self.at("<~>"):
            self.i += 1
            return Not(Eq(Bool, left, self.formula()))
        return left

    def disjunction(self) -> Term:
        f = self.conjunction()
        while self.at("|"):
            self.i += 1
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Term:
        f = self.equation()
        while self.at("&"):
            self.i += 1
            f = And(f, self.equation())
        return f

    def equation(self) -> Term:
        l = self.application()
        if self.at("="):
            self.i += 1
            return Eq(None, l, self.application())
        if self.at("!="):
            self.i += 1
            return Not(Eq(None, l, self.application()))
        return l

    def application(self) -> Term:
        f = self.unary()
        while self.at("@"):
            self.i += 1
            f = App(f, self.unary())
        return f

    def unary(self) -> Term:
        t = self.tok
        if self.at("~"):
            self.i += 1
            return Not(self.unary())
        if self.at("!", "?", "^"):
            self.i += 1
            binders = self.binders()
            self.eat(":")
            body = self.application()
            node = {"!": Forall, "?": Exists, "^": Lam}[t.text]
            for x, a in reversed(binders):
                body = node(x, a, body)
            return body
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.eat(")")
            return f
        if self.at("$true"):
            self.i += 1
            return Truth()
        if self.at("$false"):
            self.i += 1
            return Falsity()
        if t.kind == "upper":
            self.i += 1
            return Var(t.text)
        if t.kind in ("lower", "quoted"):
            self.i += 1
            return Const(t.text)
        if t.kind == "hole":
            self.i += 1
            return Hole()
        raise self.error("expected a term")


class _TType(Type):
    """Placeholder for ``$tType`` while reading kind signatures."""

    def _show(self, prec: int) -> str:
        return "$tType"


_TTYPE = _TType()


def _kind_arrows(ty) -> Optional[list]:
    args = []
    while isinstance(ty, Pi):
        args.append(ty.domain)
        ty = ty.codomain
    return args if ty is _TTYPE else None


def _include(tok: Tok, include_dirs, seen) -> list:
    for d in include_dirs:
        path = os.path.join(d, tok.text)
        if os.path.isfile(path):
            real = os.path.realpath(path)
            if real in seen:
                raise ParseError(f"cyclic include of {tok.text}", tok.line, tok.col)
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            return _parse_statements(text, include_dirs, seen + (real,))
    raise ParseError(f"cannot resolve include {tok.text!r}", tok.line, tok.col)


def _parse_statements(text, include_dirs=(), seen=()) -> list:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not UTF-8: {e.reason}", 0, e.start) from None
    try:
        return _Parser(tokenize(text)).statements(tuple(include_dirs), seen)
    except RecursionError:
        raise ParseError("input nested too deeply") from None


def _check_names(stmts: list) -> None:
    names, conj = set(), 0
    for s in stmts:
        if s.name in names:
            raise ParseError(f"duplicate statement name {s.name}", s.line, 1)
        names.add(s.name)
        conj += s.role == "conjecture"
        if conj > 1:
            raise ParseError("more than one conjecture", s.line, 1)


def _no_ttype(e, line: int) -> None:
    """Reject ``$tType`` anywhere except a kind signature."""
    if e is _TTYPE:
        raise ParseError("$tType is only allowed in type declarations", line, 1)
    if hasattr(e, "__dataclass_fields__"):
        for f in e.__dataclass_fields__:
            v = getattr(e, f)
            if isinstance(v, tuple):
                for x in v:
                    _no_ttype(x, line)
            elif isinstance(v, (Term, Type)):
                _no_ttype(v, line)


def parse_dhol(text, include_dirs=()) -> DholProblem:
    """Parse the dependent dialect; raises :class:`ParseError` on bad input."""
    stmts = _parse_statements(text, include_dirs)
    _check_names(stmts)
    decls, ctx, conj, conj_name = [], [], None, "conjecture"
    for s in stmts:
        match s.role, s.body:
            case "type", TypeDecl(_, tele) as d:
                for _, a in tele:
                    _no_ttype(a, s.line)
                decls.append(d)
            case "type", ConstDecl(_, ty) as d:
                _no_ttype(ty, s.line)
                decls.append(d)
            case "type", VarDecl(_, ty) as d:
                _no_ttype(ty, s.line)
                ctx.append(d)
            case "hypothesis", f:
                _no_ttype(f, s.line)
                ctx.append(Assumption(s.name, f))
            case "conjecture", f:
                _no_ttype(f, s.line)
                conj, conj_name = f, s.name
            case _, f:
                _no_ttype(f, s.line)
                decls.append(Axiom(s.name, f))
    return DholProblem(Theory(tuple(decls)), Context(tuple(ctx)), conj, conj_name)


def parse_term(text: str) -> Term:
    p = _Parser(tokenize(text))
    try:
        f = p.formula()
    except RecursionError:
        raise ParseError("input nested too deeply") from None
    if p.tok.kind != "eof":
        raise p.error("trailing input")
    return f


def parse_type(text: str) -> Type:
    p = _Parser(tokenize(text))
    ty = p.type_()
    if p.tok.kind != "eof":
        raise p.error("trailing input")
    return ty


# --- TH0 emission ----------------------------------------------------------

_LOWER = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
HEADER = "% dhol-names: "


class _Names:
    """Injective renaming into TPTP lower words, deterministic in input order."""

    def __init__(self):
        self.out: dict = {}
        self.used: set = set()

    def get(self, name: str) -> str:
        if name in self.out:
            return self.out[name]
        base = name if _LOWER.match(name) else "c_" + re.sub(r"[^A-Za-z0-9_]", "_", name)
        cand, k = base, 1
        while cand in self.used:
            cand, k = f"{base}_{k}", k + 1
        self.out[name] = cand
        self.used.add(cand)
        return cand

    def renamed(self) -> dict:
        return {v: k for k, v in self.out.items() if k != v}


class _BoundNames:
    """Injective map from bound variable names to TPTP upper words."""

    def __init__(self):
        self.out: dict = {}

    def get(self, name: str) -> str:
        if name not in self.out:
            self.out[name] = _upper(name, set(self.out.values()))
        return self.out[name]

    def renamed(self) -> dict:
        return {v: k for k, v in self.out.items() if k != v}


class _StatementNames:
    """Unique statement names; remembers the original of renamed ones."""

    def __init__(self):
        self.used: set = set()
        self.renamed: dict = {}

    def new(self, name: str, record: bool = True) -> str:
        base = name if _LOWER.match(name) else "s_" + re.sub(r"[^A-Za-z0-9_]", "_", name)
        cand, k = base, 1
        while cand in self.used:
            cand, k = f"{base}_{k}", k + 1
        self.used.add(cand)
        if record and cand != name:
            self.renamed[cand] = name
        return cand


def _show_type(ty) -> str:
    match ty:
        case BoolType():
            return "$o"
        case Base(n):
            return n
        case Arrow(d, c):
            ds = f"({_show_type(d)})" if isinstance(d, Arrow) else _show_type(d)
            return f"{ds} > {_show_type(c)}"
    raise ValueError(f"not a HOL type: {ty!r}")


class _Emitter:
    def __init__(self):
        self.syms = _Names()
        self.stmt_names = _StatementNames()
        self.bound = _BoundNames()
        self.vars: list = []

    def ty(self, ty) -> str:
        return _show_type(_map_base(ty, self.syms.get))

    def term(self, t: Term, env: dict) -> str:
        match t:
            case Var(n):
                return env[n] if n in env else self.syms.get(n)
            case Const(n):
                return self.syms.get(n)
            case Truth():
                return "$true"
            case Falsity():
                return "$false"
            case App():
                head, args = spine(t)
                return "(" + " @ ".join(self.term(x, env) for x in [head, *args]) + ")"
            case Eq(_, l, r):
                return f"({self.term(l, env)} = {self.term(r, env)})"
            case Impl(l, r):
                return f"({self.term(l, env)} => {self.term(r, env)})"
            case And(l, r):
                return f"({self.term(l, env)} & {self.term(r, env)})"
            case Or(l, r):
                return f"({self.term(l, env)} | {self.term(r, env)})"
            case Not(b):
                return f"(~ {self.term(b, env)})"
            case Lam() | Forall() | Exists():
                q = {Lam: "^", Forall: "!", Exists: "?"}[type(t)]
                binders, body, env2 = [], t, dict(env)
                while type(body) is type(t):
                    v = self.bound.get(body.var)
                    binders.append(f"{v}:{self.ty(body.annot)}")
                    env2[body.var] = v
                    body = body.body
                return f"({q}[{','.join(binders)}]: {self.term(body, env2)})"
        raise ValueError(f"cannot emit {t!r}")


def _map_base(ty, f):
    match ty:
        case Base(n):
            return Base(f(n))
        case Arrow(d, c):
            return Arrow(_map_base(d, f), _map_base(c, f))
    return ty


def _upper(name: str, taken: set) -> str:
    base = re.sub(r"[^A-Za-z0-9_]", "", name.replace("'", "_p")) or "X"
    base = base[0].upper() + base[1:] if base[0].isalpha() else "X" + base
    cand, k = base, 1
    while cand in taken:
        cand, k = f"{base}{k}", k + 1
    return cand


def emit_th0(out, conjecture: Optional[Term] = None, context: Optional[HolContext] = None,
             conjecture_name: str = "goal") -> str:
    """Deterministic TH0 text for a translated theory (``TranslationOutput`` or
    ``HolTheory``), optional context and conjecture."""
    theory = out.theory if hasattr(out, "per_names") else out
    em = _Emitter()
    lines = []

    def decl_name(n: str, record: bool = False) -> str:
        return em.stmt_names.new(n, record)

    for d in theory:
        match d:
            case HolTypeDecl(n):
                sym = em.syms.get(n)
                lines.append(f"thf({decl_name(n + '_decl')}, type, {sym}: $tType).")
            case HolConstDecl(n, ty):
                sym = em.syms.get(n)
                lines.append(f"thf({decl_name(n + '_decl')}, type, {sym}: {em.ty(ty)}).")
            case HolAxiom(n, f):
                lines.append(f"thf({decl_name(n, True)}, axiom, {em.term(f, {})}).")
    for e in (context or HolContext()):
        match e:
            case HolVar(n, ty):
                sym = em.syms.get(n)
                em.vars.append(n)
                lines.append(f"thf({decl_name(n + '_decl')}, type, {sym}: {em.ty(ty)}).")
            case HolAssumption(n, f):
                lines.append(f"thf({decl_name(n, True)}, hypothesis, {em.term(f, {})}).")
    if conjecture is not None:
        lines.append(f"thf({decl_name(conjecture_name, True)}, conjecture, "
                     f"{em.term(conjecture, {})}).")
    meta = {"symbols": em.syms.renamed(), "statements": em.stmt_names.renamed,
            "vars": em.vars, "bound": em.bound.renamed()}
    head = ["% TH0 problem produced by the dhol erasure translation",
            HEADER + json.dumps(meta, sort_keys=True, ensure_ascii=True)]
    return "\n".join(head + lines) + "\n"


def emit_problem(problem) -> str:
    """TH0 text for a :class:`dhol.translate.HolProblem`."""
    return emit_th0(problem.theory, problem.conjecture, problem.context,
                    getattr(problem, "name", "goal"))


# --- TH0 re-parsing --------------------------------------------------------


@dataclass(frozen=True)
class Th0Problem:
    theory: HolTheory
    context: HolContext = HolContext()
    conjecture: Optional[Term] = None
    conjecture_name: Optional[str] = None


def _header(text: str) -> dict:
    for line in text.splitlines():
        if line.startswith(HEADER):
            try:
                return json.loads(line[len(HEADER):])
            except json.JSONDecodeError as e:
                raise ParseError(f"bad name header: {e}") from None
    return {"symbols": {}, "statements": {}, "vars": [], "bound": {}}


def _hol_type(ty, names: dict, line: int):
    match ty:
        case BoolType():
            return Bool
        case BaseApp(n, ()):
            return Base(names.get(n, n))
        case Pi(_, d, c):
            return Arrow(_hol_type(d, names, line), _hol_type(c, names, line))
    raise ParseError(f"not a TH0 type: {ty}", line, 1)


def _hol_term(t: Term, names: dict, vars_: set, bound: frozenset, line: int,
              binders: Optional[dict] = None) -> Term:
    """Undo renaming, convert annotations to HOL types, reject dependent syntax."""
    binders = binders or {}
    rec = lambda x, b=bound: _hol_term(x, names, vars_, b, line, binders)  # noqa: E731
    match t:
        case Var(n):
            if n not in bound:
                raise ParseError(f"unbound variable {n}", line, 1)
            return Var(binders.get(n, n))
        case Const(n):
            orig = names.get(n, n)
            return Var(orig) if orig in vars_ else Const(orig)
        case App(f, a):
            return App(rec(f), rec(a))
        case Eq(at, l, r):
            return Eq(at, rec(l), rec(r))
        case Impl(l, r) | And(l, r) | Or(l, r):
            return type(t)(rec(l), rec(r))
        case Not(b):
            return Not(rec(b))
        case Lam(x, a, b) | Forall(x, a, b) | Exists(x, a, b):
            return type(t)(binders.get(x, x), _hol_type(a, names, line), rec(b, bound | {x}))
        case Truth() | Falsity():
            return t
    raise ParseError(f"not a TH0 term: {t}", line, 1)


def annotate_equalities(t: Term, theory: HolTheory, ctx: HolContext = HolContext()) -> Term:
    """Fill each ``Eq`` annotation with the HOL type of its left side."""
    from dhol.hol import hol_infer

    def go(t, local):
        match t:
            case Eq(_, l, r):
                lctx = ctx.extend(*(HolVar(x, a) for x, a in local))
                try:
                    at = hol_infer(lctx, l, theory)
                except HolTypeError as e:
                    raise ParseError(f"cannot type equation side: {e}") from None
                return Eq(at, go(l, local), go(r, local))
            case App(f, a):
                return App(go(f, local), go(a, local))
            case Impl(l, r) | And(l, r) | Or(l, r):
                return type(t)(go(l, local), go(r, local))
            case Not(b):
                return Not(go(b, local))
            case Lam(x, a, b) | Forall(x, a, b) | Exists(x, a, b):
                return type(t)(x, a, go(b, local + ((x, a),)))
        return t

    return go(t, ())


def reparse_th0(text: str) -> Th0Problem:
    """Read back :func:`emit_th0` output (or compatible TH0)."""
    meta = _header(text)
    sym = meta.get("symbols", {})
    stmt = meta.get("statements", {})
    vars_ = set(meta.get("vars", []))
    binders = meta.get("bound", {})
    stmts = _parse_statements(text)
    _check_names(stmts)
    decls, ctx, conj, conj_name = [], [], None, None
    theory = HolTheory()

    def orig(s: Statement) -> str:
        return stmt.get(s.name, s.name)

    for s in stmts:
        match s.role, s.body:
            case "type", TypeDecl(n, ()):
                decls.append(HolTypeDecl(sym.get(n, n)))
            case "type", (ConstDecl(n, ty) | VarDecl(n, ty)):
                name = sym.get(n, n)
                hty = _hol_type(ty, sym, s.line)
                if name in vars_:
                    ctx.append(HolVar(name, hty))
                else:
                    decls.append(HolConstDecl(name, hty))
            case "type", _:
                raise ParseError("dependent type declaration in TH0 input", s.line, 1)
            case role, f:
                theory = HolTheory(tuple(decls))
                hf = _hol_term(f, sym, vars_, frozenset(), s.line, binders)
                hf = annotate_equalities(hf, theory, HolContext(tuple(ctx)))
                if role == "conjecture":
                    conj, conj_name = hf, orig(s)
                elif role == "hypothesis":
                    ctx.append(HolAssumption(orig(s), hf))
                else:
                    decls.append(HolAxiom(orig(s), hf))
    return Th0Problem(HolTheory(tuple(decls)), HolContext(tuple(ctx)), conj, conj_name)
