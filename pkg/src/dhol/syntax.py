"""Abstract syntax shared by the dependent and simple layers.

Terms are one family of frozen dataclasses used both for DHOL and HOL; only
the type annotations differ (``BaseApp``/``Pi``/``Psub`` here, ``Base``/``Arrow``
in :mod:`dhol.hol`).  ``Bool`` is common to both.

Variables are named.  Substitution renames binders on demand by appending a
numeric suffix, so user names survive into printed output.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Optional, Union


class Type:
    """Marker base class for all types."""

    def __str__(self) -> str:
        return show(self)


class Term:
    """Marker base class for all terms."""

    def __str__(self) -> str:
        return show(self)


# --- types -----------------------------------------------------------------


@dataclass(frozen=True)
class BoolType(Type):
    """The type of Booleans."""


Bool = BoolType()


@dataclass(frozen=True)
class BaseApp(Type):
    """Applied type constructor ``a t1 ... tn``."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Pi(Type):
    var: str
    domain: Type
    codomain: Type


@dataclass(frozen=True)
class Psub(Type):
    """Predicate subtype ``A|p``."""

    base: Type
    pred: Term


# --- terms -----------------------------------------------------------------


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lam(Term):
    var: str
    annot: Type
    body: Term


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Eq(Term):
    """Typed equality ``lhs =_at rhs``; ``at`` is None until elaborated."""

    at: Optional[Type]
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Impl(Term):
    ante: Term
    cons: Term


@dataclass(frozen=True)
class Forall(Term):
    var: str
    annot: Type
    body: Term


@dataclass(frozen=True)
class Exists(Term):
    var: str
    annot: Type
    body: Term


@dataclass(frozen=True)
class And(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Term):
    body: Term


@dataclass(frozen=True)
class Truth(Term):
    pass


@dataclass(frozen=True)
class Falsity(Term):
    pass


@dataclass(frozen=True)
class Hole(Term):
    """An inferable argument ``_`` left by the parser."""


SUGAR = (Forall, Exists, And, Or, Not, Truth, Falsity)
Expr = Union[Term, Type]


def app(f: Term, *args: Term) -> Term:
    for a in args:
        f = App(f, a)
    return f


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split ``f a1 ... an`` into ``(f, [a1, ..., an])``."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def arrow(dom: Type, cod: Type) -> Type:
    """Non-dependent function type ``dom -> cod`` as a Pi with an unused binder."""
    return Pi(fresh("_", free_vars(cod)), dom, cod)


# --- theories and contexts -------------------------------------------------


@dataclass(frozen=True)
class TypeDecl:
    name: str
    telescope: tuple = ()  # of (var, Type)


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: Type


@dataclass(frozen=True)
class Axiom:
    name: str
    formula: Term


@dataclass(frozen=True)
class Theory:
    decls: tuple = ()

    @cached_property
    def _index(self) -> dict:
        return {d.name: d for d in self.decls}

    def lookup(self, name: str):
        return self._index.get(name)

    def type_decl(self, name: str) -> Optional[TypeDecl]:
        d = self._index.get(name)
        return d if isinstance(d, TypeDecl) else None

    def const_type(self, name: str) -> Optional[Type]:
        d = self._index.get(name)
        return d.type if isinstance(d, ConstDecl) else None

    def names(self) -> set:
        return set(self._index)

    def extend(self, *decls) -> "Theory":
        return Theory(self.decls + tuple(decls))

    def prefix(self, k: int) -> "Theory":
        return Theory(self.decls[:k])

    def __len__(self) -> int:
        return len(self.decls)

    def __iter__(self) -> Iterator:
        return iter(self.decls)


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: Type


@dataclass(frozen=True)
class Assumption:
    name: str
    formula: Term


@dataclass(frozen=True)
class Context:
    entries: tuple = ()

    def extend(self, *entries) -> "Context":
        return Context(self.entries + tuple(entries))

    def var_type(self, name: str) -> Optional[Type]:
        for e in reversed(self.entries):
            if isinstance(e, VarDecl) and e.name == name:
                return e.type
        return None

    def names(self) -> set:
        return {e.name for e in self.entries}

    def assumptions(self) -> list:
        return [e.formula for e in self.entries if isinstance(e, Assumption)]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator:
        return iter(self.entries)

    def __str__(self) -> str:
        if not self.entries:
            return "."
        parts = []
        for e in self.entries:
            if isinstance(e, VarDecl):
                parts.append(f"{e.name}:{show(e.type)}")
            else:
                parts.append(f"{e.name}:{show(e.formula)}")
        return ", ".join(parts)


# --- binding ---------------------------------------------------------------


def fresh(name: str, avoid: Iterable[str]) -> str:
    """``name`` itself if unused, else ``name`` plus the smallest free numeric suffix."""
    avoid = set(avoid)
    if name not in avoid:
        return name
    base = name.rstrip("0123456789") or name
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def free_vars(e) -> frozenset:
    """Free variables of a term or type, including those inside annotations."""
    out: set = set()
    _fv(e, frozenset(), out)
    return frozenset(out)


def _fv(e, bound, out) -> None:
    match e:
        case None:
            return
        case Var(n):
            if n not in bound:
                out.add(n)
        case App(f, a):
            _fv(f, bound, out)
            _fv(a, bound, out)
        case Lam(x, a, b) | Forall(x, a, b) | Exists(x, a, b):
            _fv(a, bound, out)
            _fv(b, bound | {x}, out)
        case Eq(a, l, r):
            _fv(a, bound, out)
            _fv(l, bound, out)
            _fv(r, bound, out)
        case Impl(l, r) | And(l, r) | Or(l, r):
            _fv(l, bound, out)
            _fv(r, bound, out)
        case Not(b):
            _fv(b, bound, out)
        case BaseApp(_, args):
            for a in args:
                _fv(a, bound, out)
        case Pi(x, a, b):
            _fv(a, bound, out)
            _fv(b, bound | {x}, out)
        case Psub(a, p):
            _fv(a, bound, out)
            _fv(p, bound, out)
        case _:
            return


def subst(e, var: str, repl: Term):
    """Capture-avoiding substitution ``e[var := repl]`` on terms and types."""
    return _subst(e, var, repl, free_vars(repl))


def _binder(x, body, var, repl, fv_repl):
    # returns (binder, substituted body)
    if x == var:
        return x, body
    if x in fv_repl and var in free_vars(body):
        x2 = fresh(x, fv_repl | free_vars(body) | {var})
        body = _subst(body, x, Var(x2), frozenset({x2}))
        x = x2
    return x, _subst(body, var, repl, fv_repl)


def _subst(e, var, repl, fv_repl):
    match e:
        case None:
            return None
        case Var(n):
            return repl if n == var else e
        case App(f, a):
            return App(_subst(f, var, repl, fv_repl), _subst(a, var, repl, fv_repl))
        case Lam(x, a, b) | Forall(x, a, b) | Exists(x, a, b):
            a2 = _subst(a, var, repl, fv_repl)
            x2, b2 = _binder(x, b, var, repl, fv_repl)
            return type(e)(x2, a2, b2)
        case Eq(a, l, r):
            return Eq(_subst(a, var, repl, fv_repl), _subst(l, var, repl, fv_repl),
                      _subst(r, var, repl, fv_repl))
        case Impl(l, r) | And(l, r) | Or(l, r):
            return type(e)(_subst(l, var, repl, fv_repl), _subst(r, var, repl, fv_repl))
        case Not(b):
            return Not(_subst(b, var, repl, fv_repl))
        case BaseApp(n, args):
            return BaseApp(n, tuple(_subst(a, var, repl, fv_repl) for a in args))
        case Pi(x, a, b):
            a2 = _subst(a, var, repl, fv_repl)
            x2, b2 = _binder(x, b, var, repl, fv_repl)
            return Pi(x2, a2, b2)
        case Psub(a, p):
            return Psub(_subst(a, var, repl, fv_repl), _subst(p, var, repl, fv_repl))
        case _:
            return e


def rename_binder(x: str, body, new: str):
    """Rename bound ``x`` to ``new`` inside ``body`` (``new`` assumed fresh)."""
    if x == new:
        return body
    return _subst(body, x, Var(new), frozenset({new}))


def alpha_eq(a, b) -> bool:
    """Equality up to consistent renaming of bound variables."""
    return _aeq(a, b, {}, {}, 0)


def _aeq(a, b, ea, eb, depth) -> bool:
    if a is b and not ea and not eb:
        return True
    match a, b:
        case None, None:
            return True
        case Var(x), Var(y):
            ix, iy = ea.get(x), eb.get(y)
            if ix is None and iy is None:
                return x == y
            return ix == iy
        case Const(x), Const(y):
            return x == y
        case App(f, s), App(g, t):
            return _aeq(f, g, ea, eb, depth) and _aeq(s, t, ea, eb, depth)
        case (Lam(x, s, u), Lam(y, t, v)) | (Forall(x, s, u), Forall(y, t, v)) | (
            Exists(x, s, u), Exists(y, t, v)) | (Pi(x, s, u), Pi(y, t, v)):
            if type(a) is not type(b) or not _aeq(s, t, ea, eb, depth):
                return False
            return _aeq(u, v, {**ea, x: depth}, {**eb, y: depth}, depth + 1)
        case Eq(s, l1, r1), Eq(t, l2, r2):
            return (_aeq(s, t, ea, eb, depth) and _aeq(l1, l2, ea, eb, depth)
                    and _aeq(r1, r2, ea, eb, depth))
        case (Impl(l1, r1), Impl(l2, r2)) | (And(l1, r1), And(l2, r2)) | (Or(l1, r1), Or(l2, r2)):
            if type(a) is not type(b):
                return False
            return _aeq(l1, l2, ea, eb, depth) and _aeq(r1, r2, ea, eb, depth)
        case Not(s), Not(t):
            return _aeq(s, t, ea, eb, depth)
        case BaseApp(n, xs), BaseApp(m, ys):
            return n == m and len(xs) == len(ys) and all(
                _aeq(s, t, ea, eb, depth) for s, t in zip(xs, ys))
        case Psub(s, p), Psub(t, q):
            return _aeq(s, t, ea, eb, depth) and _aeq(p, q, ea, eb, depth)
        case _:
            return type(a) is type(b) and a == b


def canonical(e, _env=None, _depth=0):
    """Rename every bound variable to a depth-indexed name.

    Two expressions are alpha-equal iff their canonical forms are ``==``, which
    makes canonical forms usable as dictionary keys.
    """
    env = _env or {}
    c = canonical
    match e:
        case None:
            return None
        case Var(n):
            return Var(env[n]) if n in env else e
        case App(f, a):
            return App(c(f, env, _depth), c(a, env, _depth))
        case Lam(x, a, b) | Forall(x, a, b) | Exists(x, a, b):
            name = f"%{_depth}"
            return type(e)(name, c(a, env, _depth), c(b, {**env, x: name}, _depth + 1))
        case Pi(x, a, b):
            name = f"%{_depth}"
            return Pi(name, c(a, env, _depth), c(b, {**env, x: name}, _depth + 1))
        case Eq(a, l, r):
            return Eq(c(a, env, _depth), c(l, env, _depth), c(r, env, _depth))
        case Impl(l, r) | And(l, r) | Or(l, r):
            return type(e)(c(l, env, _depth), c(r, env, _depth))
        case Not(b):
            return Not(c(b, env, _depth))
        case BaseApp(n, args):
            return BaseApp(n, tuple(c(a, env, _depth) for a in args))
        case Psub(a, p):
            return Psub(c(a, env, _depth), c(p, env, _depth))
        case _:
            return e


# --- sugar -----------------------------------------------------------------


def _fun(dom: Type, cod: Type, simple: bool) -> Type:
    if simple:
        from dhol.hol import Arrow

        return Arrow(dom, cod)
    return arrow(dom, cod)


def _is_simple(t) -> bool:
    from dhol.hol import Arrow, Base

    return isinstance(t, (Base, Arrow))


def expand_sugar(form: Term, *, deep: bool = False, simple: Optional[bool] = None) -> Term:
    """Definitional expansion of a quantifier/connective node.

    One step by default; ``deep=True`` expands every sugar node until only
    core syntax remains.  ``simple`` selects HOL arrows for the function types
    introduced by quantifier and truth expansions (inferred from the binder
    annotation when there is one).
    """
    if deep:
        return _deep_expand(form, simple)
    if simple is None:
        simple = isinstance(form, (Forall, Exists)) and _is_simple(form.annot)
    match form:
        case Truth():
            ident = Lam("x", Bool, Var("x"))
            return Eq(_fun(Bool, Bool, simple), ident, ident)
        case Falsity():
            return Forall("x", Bool, Var("x"))
        case Not(f):
            return Impl(f, Falsity())
        case And(f, g):
            return Not(Impl(f, Not(g)))
        case Or(f, g):
            return Impl(Not(f), g)
        case Forall(x, a, f):
            return Eq(_fun(a, Bool, simple), Lam(x, a, f), Lam(x, a, Truth()))
        case Exists(x, a, f):
            return Not(Forall(x, a, Not(f)))
        case _:
            return form


def _deep_expand(e, simple):
    d = lambda t: _deep_expand(t, simple)  # noqa: E731
    if isinstance(e, SUGAR):
        return d(expand_sugar(e, simple=simple))
    match e:
        case App(f, a):
            return App(d(f), d(a))
        case Lam(x, a, b):
            return Lam(x, d(a), d(b))
        case Eq(a, l, r):
            return Eq(d(a), d(l), d(r))
        case Impl(l, r):
            return Impl(d(l), d(r))
        case BaseApp(n, args):
            return BaseApp(n, tuple(d(a) for a in args))
        case Pi(x, a, b):
            return Pi(x, d(a), d(b))
        case Psub(a, p):
            return Psub(d(a), d(p))
        case _:
            return e


def beta_head(f: Term, arg: Term) -> Term:
    """``f arg`` with a single head beta step when ``f`` is a lambda."""
    if isinstance(f, Lam):
        return subst(f.body, f.var, arg)
    return App(f, arg)


# --- printing --------------------------------------------------------------


def show(e) -> str:
    return _show(e, 0)


def _atomic(s: str, prec: int, need: int) -> str:
    return f"({s})" if prec > need else s


def _show(e, prec: int) -> str:
    # prec: 0 top, 1 operand of binary connective, 2 function position, 3 argument
    match e:
        case None:
            return "?"
        case BoolType():
            return "bool"
        case Var(n) | Const(n):
            return n
        case Hole():
            return "_"
        case Truth():
            return "true"
        case Falsity():
            return "false"
        case App():
            h, args = spine(e)
            s = " ".join([_show(h, 3)] + [_show(a, 3) for a in args])
            return _atomic(s, prec, 2)
        case Lam(x, a, b):
            return _atomic(f"λ{x}:{_show(a, 1)}. {_show(b, 0)}", prec, 0)
        case Forall(x, a, b):
            return _atomic(f"∀{x}:{_show(a, 1)}. {_show(b, 0)}", prec, 0)
        case Exists(x, a, b):
            return _atomic(f"∃{x}:{_show(a, 1)}. {_show(b, 0)}", prec, 0)
        case Eq(a, l, r):
            op = "=" if a is None else f"=[{_show(a, 0)}]"
            return _atomic(f"{_show(l, 2)} {op} {_show(r, 2)}", prec, 1)
        case Impl(l, r):
            return _atomic(f"{_show(l, 1)} ⟹ {_show(r, 1)}", prec, 0)
        case And(l, r):
            return _atomic(f"{_show(l, 1)} ∧ {_show(r, 1)}", prec, 0)
        case Or(l, r):
            return _atomic(f"{_show(l, 1)} ∨ {_show(r, 1)}", prec, 0)
        case Not(b):
            return _atomic(f"¬{_show(b, 3)}", prec, 2)
        case BaseApp(n, args):
            if not args:
                return n
            return _atomic(" ".join([n] + [_show(a, 3) for a in args]), prec, 2)
        case Pi(x, a, b):
            if x in free_vars(b):
                return _atomic(f"Π{x}:{_show(a, 1)}. {_show(b, 0)}", prec, 0)
            return _atomic(f"{_show(a, 1)} → {_show(b, 0)}", prec, 0)
        case Psub(a, p):
            return _atomic(f"{_show(a, 2)}|{_show(p, 3)}", prec, 1)
        case _:
            return e._show(prec) if hasattr(e, "_show") else repr(e)
