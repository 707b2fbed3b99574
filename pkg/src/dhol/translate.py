"""Erasure of DHOL into HOL.

Every dependent base type ``a x1..xn`` becomes the plain base type ``a``
together with a relation ``a_per : A1 -> .. -> An -> a -> a -> bool`` that
carves out the elements of each instance.  Equality at a type is translated
to that type's relation, and quantifiers are relativized to its diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from dhol.errors import TranslationError
from dhol.hol import (
    Base, HolAssumption, HolAxiom, HolConstDecl, HolContext, HolTheory, HolTypeDecl,
    HolVar, arrows,
)
from dhol.syntax import (
    And, App, Assumption, Axiom, BaseApp, Bool, BoolType, Const, ConstDecl, Context, Eq,
    Exists, Falsity, Forall, Impl, Lam, Not, Or, Pi, Psub, Term, Theory, Truth, Type,
    TypeDecl, Var, VarDecl, app, free_vars, fresh, subst,
)

AXIOM_SETS = ("appendix", "minimal")


def per_name(type_name: str) -> str:
    return type_name + "_per"


def tp_name(name: str) -> str:
    return name + "_tp"


@dataclass(frozen=True)
class TranslationOutput:
    theory: HolTheory
    per_names: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)  # HOL decl -> DHOL decl name


@dataclass(frozen=True)
class HolProblem:
    theory: HolTheory
    context: HolContext
    conjecture: Term
    name: str = "goal"


def translate_type(ty: Type) -> Type:
    match ty:
        case BoolType():
            return Bool
        case BaseApp(a, _):
            return Base(a)
        case Pi(_, dom, cod):
            return arrows(translate_type(dom), translate_type(cod))
        case Psub(base, _):
            return translate_type(base)
        case _:
            raise TranslationError(f"not a DHOL type: {ty!r}")


def per_of(ty: Type, s: Term, t: Term) -> Term:
    """The relation of ``ty`` applied to the HOL terms ``s`` and ``t``."""
    match ty:
        case BaseApp(a, args):
            return app(Const(per_name(a)), *(translate_term(x) for x in args), s, t)
        case BoolType():
            return Eq(Bool, s, t)
        case Pi(x, dom, cod):
            avoid = free_vars(s) | free_vars(t) | (free_vars(cod) - {x})
            if x == "_":  # arrow: name the bound argument
                x2 = fresh("x", avoid)
            else:
                x2 = fresh(x, avoid) if x in avoid else x
            if x2 != x:
                cod = subst(cod, x, Var(x2))
            y = fresh(x2 + "'", avoid | {x2})
            hd = translate_type(dom)
            body = Impl(per_of(dom, Var(x2), Var(y)),
                        per_of(cod, App(s, Var(x2)), App(t, Var(y))))
            return Forall(x2, hd, Forall(y, hd, body))
        case Psub(base, p):
            hp = translate_term(p)
            return And(And(per_of(base, s, t), App(hp, s)), App(hp, t))
        case _:
            raise TranslationError(f"not a DHOL type: {ty!r}")


def translate_term(t: Term) -> Term:
    match t:
        case Const() | Var() | Truth() | Falsity():
            return t
        case Lam(x, a, b):
            return Lam(x, translate_type(a), translate_term(b))
        case App(f, a):
            return App(translate_term(f), translate_term(a))
        case Eq(at, l, r):
            if at is None:
                raise TranslationError(f"equality without a type annotation: {t}")
            return per_of(at, translate_term(l), translate_term(r))
        case Impl(l, r):
            return Impl(translate_term(l), translate_term(r))
        case And(l, r):
            return And(translate_term(l), translate_term(r))
        case Or(l, r):
            return Or(translate_term(l), translate_term(r))
        case Not(b):
            return Not(translate_term(b))
        case Forall(x, a, b):
            return Forall(x, translate_type(a), Impl(per_of(a, Var(x), Var(x)), translate_term(b)))
        case Exists(x, a, b):
            return Exists(x, translate_type(a), And(per_of(a, Var(x), Var(x)), translate_term(b)))
        case _:
            raise TranslationError(f"cannot translate {t!r}")


def _foralls(binders, body: Term) -> Term:
    for x, ty in reversed(binders):
        body = Forall(x, ty, body)
    return body


def per_axioms(decl: TypeDecl, axiom_set: str = "appendix") -> list:
    """The axioms that make ``a_per x1..xn`` a partial equivalence."""
    a = decl.name
    tele = [(x, translate_type(ty)) for x, ty in decl.telescope]
    taken = {x for x, _ in tele}
    u = fresh("u", taken)
    v = fresh("v", taken | {u})
    w = fresh("w", taken | {u, v})
    rel = app(Const(per_name(a)), *(Var(x) for x, _ in tele))
    R = lambda l, r: App(App(rel, Var(l)), Var(r))  # noqa: E731
    base = Base(a)
    if axiom_set == "minimal":
        return [HolAxiom(per_name(a), _foralls(
            tele + [(u, base), (v, base)], Impl(R(u, v), Eq(base, Var(u), Var(v)))))]
    if axiom_set != "appendix":
        raise TranslationError(f"unknown axiom set {axiom_set!r}")
    return [
        HolAxiom(a + "_trans", _foralls(
            tele + [(u, base), (v, base), (w, base)],
            Impl(R(u, v), Impl(R(v, w), R(u, w))))),
        HolAxiom(a + "_sym", _foralls(
            tele + [(u, base), (v, base)], Impl(R(u, v), R(v, u)))),
        HolAxiom(per_name(a), _foralls(
            tele + [(u, base), (v, base)],
            Impl(R(v, v), Eq(Bool, R(u, v), Eq(base, Var(u), Var(v)))))),
    ]


@lru_cache(maxsize=64)
def translate_theory(theory: Theory, axiom_set: str = "appendix") -> TranslationOutput:
    user_symbols = {d.name for d in theory if not isinstance(d, Axiom)}
    user_axioms = {d.name for d in theory if isinstance(d, Axiom)}
    symbols, axioms = set(), set()

    def claim(pool: set, name: str, user: set, source: str) -> None:
        if name in user or name in pool:
            raise TranslationError(
                f"generated name {name} (from {source}) clashes with an existing declaration")
        pool.add(name)

    out, per_names, prov = [], {}, {}
    for d in theory:
        match d:
            case TypeDecl(a, tele):
                pn = per_name(a)
                claim(symbols, pn, user_symbols, a)
                rel_ty = arrows(*(translate_type(ty) for _, ty in tele), Base(a), Base(a), Bool)
                new = [HolTypeDecl(a), HolConstDecl(pn, rel_ty)]
                for ax in per_axioms(d, axiom_set):
                    claim(axioms, ax.name, user_axioms, a)
                    new.append(ax)
                per_names[a] = pn
            case ConstDecl(c, ty):
                claim(axioms, tp_name(c), user_axioms, c)
                new = [HolConstDecl(c, translate_type(ty)),
                       HolAxiom(tp_name(c), per_of(ty, Const(c), Const(c)))]
            case Axiom(n, f):
                new = [HolAxiom(n, translate_term(f))]
            case _:
                raise TranslationError(f"unknown declaration {d!r}")
        for h in new:
            prov[h] = d.name
        out.extend(new)
    return TranslationOutput(HolTheory(tuple(out)), per_names, prov)


def translate_context(ctx: Context) -> HolContext:
    names = set(ctx.names())
    out = []
    for e in ctx:
        match e:
            case VarDecl(x, ty):
                if tp_name(x) in names:
                    raise TranslationError(f"generated assumption {tp_name(x)} clashes")
                names.add(tp_name(x))
                out += [HolVar(x, translate_type(ty)),
                        HolAssumption(tp_name(x), per_of(ty, Var(x), Var(x)))]
            case Assumption(n, f):
                out.append(HolAssumption(n, translate_term(f)))
    return HolContext(tuple(out))


def translate_problem(theory: Theory, formula: Term, ctx: Context = Context(),
                      axiom_set: str = "appendix", name: str = "goal") -> HolProblem:
    return HolProblem(translate_theory(theory, axiom_set).theory, translate_context(ctx),
                      translate_term(formula), name)


def translate_obligation(ob, axiom_set: str = "appendix",
                         name: Optional[str] = None) -> HolProblem:
    """Package an obligation's theory prefix, context and formula for an oracle."""
    return translate_problem(ob.theory, ob.formula, ob.context, axiom_set,
                             name or f"obligation_{ob.seq}")
