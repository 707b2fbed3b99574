"""Simply-typed higher-order logic: types, theories, a decidable checker and
beta-eta normalization.

HOL terms reuse the node classes of :mod:`dhol.syntax`; only the annotation
types differ.  Type equality is structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional

from dhol.errors import HolTypeError
from dhol.syntax import (
    And, App, Bool, BoolType, Const, Eq, Exists, Falsity, Forall, Impl, Lam, Not,
    Or, Term, Truth, Type, Var, free_vars, subst,
)


@dataclass(frozen=True)
class Base(Type):
    name: str

    def _show(self, prec: int) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow(Type):
    dom: Type
    cod: Type

    def _show(self, prec: int) -> str:
        d = self.dom._show(1) if isinstance(self.dom, Arrow) else str(self.dom)
        s = f"{d} → {self.cod._show(0) if isinstance(self.cod, Arrow) else self.cod}"
        return f"({s})" if prec > 0 else s


def arrows(*types: Type) -> Type:
    """``arrows(A, B, C)`` is ``A → B → C``."""
    out = types[-1]
    for t in reversed(types[:-1]):
        out = Arrow(t, out)
    return out


def is_hol_type(t) -> bool:
    match t:
        case BoolType() | Base():
            return True
        case Arrow(d, c):
            return is_hol_type(d) and is_hol_type(c)
        case _:
            return False


# --- declarations ----------------------------------------------------------


@dataclass(frozen=True)
class HolTypeDecl:
    name: str


@dataclass(frozen=True)
class HolConstDecl:
    name: str
    type: Type


@dataclass(frozen=True)
class HolAxiom:
    name: str
    formula: Term


@dataclass(frozen=True)
class HolTheory:
    """Ordered declarations.  Symbols (types, constants) and axiom names live
    in separate namespaces."""

    decls: tuple = ()

    @cached_property
    def _symbols(self) -> dict:
        return {d.name: d for d in self.decls if not isinstance(d, HolAxiom)}

    def const_type(self, name: str) -> Optional[Type]:
        d = self._symbols.get(name)
        return d.type if isinstance(d, HolConstDecl) else None

    def has_type(self, name: str) -> bool:
        return isinstance(self._symbols.get(name), HolTypeDecl)

    def axioms(self) -> list:
        return [d for d in self.decls if isinstance(d, HolAxiom)]

    def extend(self, *decls) -> "HolTheory":
        return HolTheory(self.decls + tuple(decls))

    def __iter__(self) -> Iterator:
        return iter(self.decls)

    def __len__(self) -> int:
        return len(self.decls)


@dataclass(frozen=True)
class HolVar:
    name: str
    type: Type


@dataclass(frozen=True)
class HolAssumption:
    name: str
    formula: Term


@dataclass(frozen=True)
class HolContext:
    entries: tuple = ()

    def var_type(self, name: str) -> Optional[Type]:
        for e in reversed(self.entries):
            if isinstance(e, HolVar) and e.name == name:
                return e.type
        return None

    def extend(self, *entries) -> "HolContext":
        return HolContext(self.entries + tuple(entries))

    def assumptions(self) -> list:
        return [e for e in self.entries if isinstance(e, HolAssumption)]

    def __iter__(self) -> Iterator:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


# --- type checking ---------------------------------------------------------


def check_type_wf(theory: HolTheory, ty: Type, path: tuple = ()) -> None:
    match ty:
        case BoolType():
            return
        case Base(n):
            if not theory.has_type(n):
                raise HolTypeError(f"unknown base type {n}", path)
        case Arrow(d, c):
            check_type_wf(theory, d, path)
            check_type_wf(theory, c, path)
        case _:
            raise HolTypeError(f"not a HOL type: {ty}", path)


def hol_infer(ctx: HolContext, t: Term, theory: HolTheory, path: tuple = ()) -> Type:
    """Synthesize the type of ``t``; raises :class:`HolTypeError` on mismatch."""
    return _infer(theory, ctx, {}, t, path)


def _expect(actual: Type, expected: Type, what: str, path: tuple) -> None:
    if actual != expected:
        raise HolTypeError(f"{what}: got {actual}, expected {expected}", path)


def _infer(theory, ctx, local, t, path) -> Type:
    match t:
        case Var(n):
            ty = local.get(n) or ctx.var_type(n)
            if ty is None:
                raise HolTypeError(f"unbound variable {n}", path)
            return ty
        case Const(n):
            ty = theory.const_type(n)
            if ty is None:
                raise HolTypeError(f"unknown constant {n}", path)
            return ty
        case Lam(x, a, b):
            check_type_wf(theory, a, path)
            return Arrow(a, _infer(theory, ctx, {**local, x: a}, b, path + ("λ" + x,)))
        case App(f, a):
            ft = _infer(theory, ctx, local, f, path + ("fun",))
            if not isinstance(ft, Arrow):
                raise HolTypeError(f"applying a non-function of type {ft}", path)
            at = _infer(theory, ctx, local, a, path + ("arg",))
            _expect(at, ft.dom, "argument type", path)
            return ft.cod
        case Eq(a, l, r):
            lt = _infer(theory, ctx, local, l, path + ("lhs",))
            rt = _infer(theory, ctx, local, r, path + ("rhs",))
            if a is not None:
                check_type_wf(theory, a, path)
                _expect(lt, a, "left side of equality", path)
            _expect(rt, lt, "right side of equality", path)
            return Bool
        case Impl(l, r) | And(l, r) | Or(l, r):
            _expect(_infer(theory, ctx, local, l, path + ("l",)), Bool, "connective operand", path)
            _expect(_infer(theory, ctx, local, r, path + ("r",)), Bool, "connective operand", path)
            return Bool
        case Not(b):
            _expect(_infer(theory, ctx, local, b, path), Bool, "negated formula", path)
            return Bool
        case Forall(x, a, b) | Exists(x, a, b):
            check_type_wf(theory, a, path)
            body = _infer(theory, ctx, {**local, x: a}, b, path + (x,))
            _expect(body, Bool, "quantifier body", path)
            return Bool
        case Truth() | Falsity():
            return Bool
        case _:
            raise HolTypeError(f"not a HOL term: {t!r}", path)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    error: Optional[str] = None
    location: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def hol_check_theory(theory: HolTheory) -> Verdict:
    """Accept iff every declaration is well-formed relative to its prefix."""
    try:
        _check_decls(theory)
    except HolTypeError as e:
        return Verdict(False, str(e), e.path[0] if e.path else None)
    return Verdict(True)


def _check_decls(theory: HolTheory) -> HolTheory:
    sofar = HolTheory()
    symbols, axioms = set(), set()
    for d in theory:
        loc = (d.name,)
        names = axioms if isinstance(d, HolAxiom) else symbols
        if d.name in names:
            raise HolTypeError(f"duplicate name {d.name}", loc)
        names.add(d.name)
        if isinstance(d, HolConstDecl):
            check_type_wf(sofar, d.type, loc)
        elif isinstance(d, HolAxiom):
            _expect(hol_infer(HolContext(), d.formula, sofar, loc), Bool, "axiom", loc)
        elif not isinstance(d, HolTypeDecl):
            raise HolTypeError(f"unexpected declaration {d!r}", loc)
        sofar = sofar.extend(d)
    return sofar


def hol_check_context(ctx: HolContext, theory: HolTheory) -> Verdict:
    try:
        sofar = HolContext()
        seen = set()
        for e in ctx:
            loc = (e.name,)
            if e.name in seen:
                raise HolTypeError(f"duplicate name {e.name}", loc)
            seen.add(e.name)
            if isinstance(e, HolVar):
                check_type_wf(theory, e.type, loc)
            else:
                _expect(hol_infer(sofar, e.formula, theory, loc), Bool, "assumption", loc)
            sofar = sofar.extend(e)
    except HolTypeError as e:
        return Verdict(False, str(e), e.path[0] if e.path else None)
    return Verdict(True)


# --- normalization ---------------------------------------------------------


class _Fuel:
    def __init__(self, n: int):
        self.n = n

    def tick(self) -> None:
        self.n -= 1
        if self.n < 0:
            raise HolTypeError("normalization did not terminate within budget")


def beta_eta_normalize(t: Term, fuel: int = 100_000) -> Term:
    """Beta-normal, eta-contracted form (terminating on simply-typed input)."""
    return _nf(t, _Fuel(fuel))


def _nf(t, fuel):
    match t:
        case App(f, a):
            f2 = _nf(f, fuel)
            a2 = _nf(a, fuel)
            if isinstance(f2, Lam):
                fuel.tick()
                return _nf(subst(f2.body, f2.var, a2), fuel)
            return App(f2, a2)
        case Lam(x, a, b):
            b2 = _nf(b, fuel)
            if isinstance(b2, App) and b2.arg == Var(x) and x not in free_vars(b2.fun):
                return b2.fun
            return Lam(x, a, b2)
        case Eq(a, l, r):
            return Eq(a, _nf(l, fuel), _nf(r, fuel))
        case Impl(l, r) | And(l, r) | Or(l, r):
            return type(t)(_nf(l, fuel), _nf(r, fuel))
        case Not(b):
            return Not(_nf(b, fuel))
        case Forall(x, a, b) | Exists(x, a, b):
            return type(t)(x, a, _nf(b, fuel))
        case _:
            return t
