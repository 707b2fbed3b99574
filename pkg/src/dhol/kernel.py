"""Bidirectional type checking for DHOL.

The checker decides everything structural and turns the remaining validity
questions into :class:`Obligation` objects.  Obligations are handed to the
configured oracle the moment they are emitted, so every oracle call happens
in depth-first, left-to-right order over the derivation.  This is what makes
each emitted formula well-typed given that the earlier ones held.
"""

from __future__ import annotations

import enum
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional, Protocol

from dhol.errors import TypeCheckError
from dhol.oracle import OracleVerdict, Status as OracleStatus
from dhol.syntax import (
    And, App, Assumption, Axiom, BaseApp, Bool, BoolType, Const, ConstDecl, Context,
    Eq, Exists, Falsity, Forall, Hole, Impl, Lam, Not, Or, Pi, Psub, Term, Theory,
    Truth, Type, TypeDecl, Var, VarDecl, alpha_eq, app, beta_head, free_vars, fresh,
    rename_binder, spine, subst,
)


@dataclass(frozen=True)
class Provenance:
    """Which rule demanded an obligation."""

    kind: str
    detail: tuple = ()

    def __str__(self) -> str:
        if not self.detail:
            return self.kind
        return f"{self.kind}({', '.join(str(d) for d in self.detail)})"


BASE_ARG_EQ = "BaseArgEq"
PSUB_INTRO = "PsubIntro"
PSUB_VARIANCE = "PsubVariance"
TYPE_EQ_PRED = "TypeEqPred"
CONJECTURE = "Conjecture"
OTHER = "Other"


@dataclass(frozen=True)
class Obligation:
    context: Context
    formula: Term
    provenance: Provenance
    seq: int
    theory: Theory = Theory()
    location: Optional[str] = None

    def __str__(self) -> str:
        return f"[{self.seq}] {self.provenance}: {self.context} ⊢ {self.formula}"


class ValidityOracle(Protocol):
    def decide(self, obligation: Obligation) -> OracleVerdict: ...


class Verdict(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    UNKNOWN = "unknown"


@dataclass
class CheckReport:
    verdict: Verdict
    obligations: list = field(default_factory=list)
    discharged: dict = field(default_factory=dict)  # seq -> OracleVerdict
    reason: Optional[str] = None
    location: Optional[str] = None
    theory: Optional[Theory] = None  # elaborated
    context: Optional[Context] = None
    conjecture: Optional[Term] = None

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPTED

    def open_obligations(self) -> list:
        return [o for o in self.obligations
                if self.discharged.get(o.seq) is None
                or self.discharged[o.seq].status is not OracleStatus.PROVED]


class ObligationRefuted(TypeCheckError):
    def __init__(self, obligation: Obligation, verdict: OracleVerdict):
        super().__init__(f"obligation refuted by {verdict.by}: {obligation.formula}",
                         obligation.location)
        self.obligation = obligation
        self.verdict = verdict


# --- predicate subtype normalization ---------------------------------------


def normalize_psub(ty: Type) -> Type:
    """Hoist predicate subtypes out of Pi codomains and merge nested ones."""
    match ty:
        case Pi(x, dom, cod):
            dom2, cod2 = normalize_psub(dom), normalize_psub(cod)
            if isinstance(cod2, Psub):
                core = Pi(x, dom2, cod2.base)
                p = cod2.pred
                f = fresh("f", free_vars(p) | free_vars(core) | {x})
                pred = Lam(f, core, Forall(x, dom2, App(p, App(Var(f), Var(x)))))
                return Psub(core, pred)
            return Pi(x, dom2, cod2)
        case Psub(base, q):
            base2 = normalize_psub(base)
            if isinstance(base2, Psub):
                p = base2.pred
                z = fresh("x", free_vars(p) | free_vars(q))
                pred = Lam(z, base2.base, And(App(p, Var(z)), App(q, Var(z))))
                return Psub(base2.base, pred)
            return Psub(base2, q)
        case _:
            return ty


def strip_psub(ty: Type) -> Type:
    while isinstance(ty, Psub):
        ty = ty.base
    return ty


def trivially_valid(ctx: Context, formula: Term) -> bool:
    """Reflexivity and assumption lookup; the fast pre-pass before any oracle."""
    match formula:
        case Truth():
            return True
        case Eq(_, l, r) if alpha_eq(l, r):
            return True
        case Impl(l, r) if alpha_eq(l, r):
            return True
        case And(l, r):
            return trivially_valid(ctx, l) and trivially_valid(ctx, r)
    return any(alpha_eq(a, formula) for a in ctx.assumptions())


def _instantiate_telescope(telescope, args) -> list:
    """Types of a telescope with earlier variables replaced by ``args`` (simultaneously)."""
    tmp = [f"{x}#{i}" for i, (x, _) in enumerate(telescope)]
    out = []
    for i, (_, ty) in enumerate(telescope):
        for j in range(i):
            ty = subst(ty, telescope[j][0], Var(tmp[j]))
        for j in range(i):
            ty = subst(ty, tmp[j], args[j])
        out.append(ty)
    return out


# --- the checker -----------------------------------------------------------


class Checker:
    def __init__(self, theory: Theory = Theory(), oracle: Optional[ValidityOracle] = None):
        self.theory = theory
        self.oracle = oracle
        self.location: Optional[str] = None
        self.obligations: list = []
        self.discharged: dict = {}
        self._seq = 0
        self._quiet = 0

    # obligations

    @contextmanager
    def quiet(self):
        """Suppress obligation emission (used for speculative inference)."""
        self._quiet += 1
        try:
            yield
        finally:
            self._quiet -= 1

    def emit(self, ctx: Context, formula: Term, provenance: Provenance) -> Optional[Obligation]:
        if self._quiet:
            return None
        ob = Obligation(ctx, formula, provenance, self._seq, self.theory, self.location)
        self._seq += 1
        self.obligations.append(ob)
        if trivially_valid(ctx, formula):
            verdict = OracleVerdict.proved("trivial", 0.0)
        elif self.oracle is None:
            verdict = OracleVerdict.unknown("not-attempted")
        else:
            verdict = self.oracle.decide(ob)
        self.discharged[ob.seq] = verdict
        if verdict.status is OracleStatus.REFUTED:
            raise ObligationRefuted(ob, verdict)
        return ob

    def status(self) -> Verdict:
        if any(v.status is not OracleStatus.PROVED for v in self.discharged.values()):
            return Verdict.UNKNOWN
        return Verdict.ACCEPTED

    # binders

    def _fresh_binder(self, ctx: Context, x: str, *bodies) -> tuple:
        """Rename ``x`` if it clashes with the context; returns (name, bodies...)."""
        if x not in ctx.names():
            return (x, *bodies)
        avoid = set(ctx.names())
        for b in bodies:
            avoid |= free_vars(b) - {x}
        x2 = fresh(x, avoid)
        return (x2, *(rename_binder(x, b, x2) for b in bodies))

    def _assume(self, ctx: Context, formula: Term) -> Context:
        return ctx.extend(Assumption(fresh("ass", ctx.names()), formula))

    # well-formed types

    def wf(self, ctx: Context, ty: Type) -> Type:
        match ty:
            case BoolType():
                return ty
            case BaseApp(a, args):
                decl = self.theory.type_decl(a)
                if decl is None:
                    raise TypeCheckError(f"unknown type constructor {a}", self.location)
                if len(args) != len(decl.telescope):
                    raise TypeCheckError(
                        f"arity mismatch: type constructor {a} expects "
                        f"{len(decl.telescope)} arguments, got {len(args)}", self.location)
                done: list = []
                for i, arg in enumerate(args):
                    expected = _instantiate_telescope(decl.telescope[: i + 1], done)[i]
                    done.append(self.check(ctx, arg, expected))
                return BaseApp(a, tuple(done))
            case Pi(x, dom, cod):
                dom2 = self.wf(ctx, dom)
                x, cod = self._fresh_binder(ctx, x, cod)
                return Pi(x, dom2, self.wf(ctx.extend(VarDecl(x, dom2)), cod))
            case Psub(base, pred):
                base2 = self.wf(ctx, base)
                z = fresh("x", ctx.names())
                return Psub(base2, self.check(ctx, pred, Pi(z, base2, Bool)))
            case _:
                raise TypeCheckError(f"not a DHOL type: {ty!r}", self.location)

    # inference

    def infer(self, ctx: Context, t: Term) -> tuple:
        """Return the elaborated term and its synthesized type."""
        match t:
            case Var(n):
                ty = ctx.var_type(n)
                if ty is None:
                    raise TypeCheckError(f"unbound variable {n}", self.location)
                return t, ty
            case Const(n):
                ty = self.theory.const_type(n)
                if ty is None:
                    what = "type constructor used as a term" if self.theory.type_decl(n) else \
                        "unknown constant"
                    raise TypeCheckError(f"{what} {n}", self.location)
                return t, ty
            case App():
                if any(isinstance(a, Hole) for a in spine(t)[1]):
                    t = self._solve_holes(ctx, t, None)
                f, a = t.fun, t.arg
                f2, fty = self.infer(ctx, f)
                core = strip_psub(fty)
                if not isinstance(core, Pi):
                    raise TypeCheckError(f"{f} is not a function (type {fty})", self.location)
                a2 = self.check(ctx, a, core.domain)
                return App(f2, a2), subst(core.codomain, core.var, a2)
            case Lam(x, dom, body):
                dom2 = self.wf(ctx, dom)
                x, body = self._fresh_binder(ctx, x, body)
                body2, bty = self.infer(ctx.extend(VarDecl(x, dom2)), body)
                return Lam(x, dom2, body2), Pi(x, dom2, bty)
            case Eq(at, l, r):
                if at is None:
                    l2, at2 = self.infer(ctx, l)
                else:
                    at2 = self.wf(ctx, at)
                    l2 = self.check(ctx, l, at2)
                return Eq(at2, l2, self.check(ctx, r, at2)), Bool
            case Impl(f, g):
                f2 = self.check(ctx, f, Bool)
                return Impl(f2, self.check(self._assume(ctx, f2), g, Bool)), Bool
            case And(f, g):
                f2 = self.check(ctx, f, Bool)
                return And(f2, self.check(self._assume(ctx, f2), g, Bool)), Bool
            case Or(f, g):
                f2 = self.check(ctx, f, Bool)
                return Or(f2, self.check(self._assume(ctx, Not(f2)), g, Bool)), Bool
            case Not(f):
                return Not(self.check(ctx, f, Bool)), Bool
            case Forall(x, dom, body) | Exists(x, dom, body):
                dom2 = self.wf(ctx, dom)
                x, body = self._fresh_binder(ctx, x, body)
                body2 = self.check(ctx.extend(VarDecl(x, dom2)), body, Bool)
                return type(t)(x, dom2, body2), Bool
            case Truth() | Falsity():
                return t, Bool
            case Hole():
                raise TypeCheckError("cannot infer the value of '_' here", self.location)
            case _:
                raise TypeCheckError(f"not a DHOL term: {t!r}", self.location)

    # checking

    def check(self, ctx: Context, t: Term, ty: Type) -> Term:
        if isinstance(ty, Psub):
            t2 = self.check(ctx, t, ty.base)
            self.emit(ctx, beta_head(ty.pred, t2), Provenance(PSUB_INTRO))
            return t2
        if isinstance(t, Lam) and isinstance(ty, Pi):
            dom2 = self.wf(ctx, t.annot)
            self.subtype(ctx, ty.domain, dom2)
            avoid = set(ctx.names()) | (free_vars(t.body) - {t.var}) | (
                free_vars(ty.codomain) - {ty.var})
            x = t.var if t.var not in avoid else fresh(t.var, avoid)
            body = rename_binder(t.var, t.body, x)
            cod = subst(ty.codomain, ty.var, Var(x))
            body2 = self.check(ctx.extend(VarDecl(x, ty.domain)), body, cod)
            return Lam(x, dom2, body2)
        if isinstance(t, App) and any(isinstance(a, Hole) for a in spine(t)[1]):
            t = self._solve_holes(ctx, t, ty)
        t2, actual = self.infer(ctx, t)
        self.subtype(ctx, actual, ty)
        return t2

    # type equality and subtyping

    def type_equal(self, ctx: Context, a: Type, b: Type) -> None:
        a, b = normalize_psub(a), normalize_psub(b)
        if alpha_eq(a, b):
            return
        match a, b:
            case BaseApp(n, ss), BaseApp(m, ts) if n == m and len(ss) == len(ts):
                decl = self.theory.type_decl(n)
                if decl is None:
                    raise TypeCheckError(f"unknown type constructor {n}", self.location)
                for i, (s, t) in enumerate(zip(ss, ts)):
                    if alpha_eq(s, t):
                        continue
                    at = _instantiate_telescope(decl.telescope[: i + 1], list(ts[:i]))[i]
                    self.emit(ctx, Eq(at, s, t), Provenance(BASE_ARG_EQ, (n, i)))
            case Pi(x, d1, c1), Pi(y, d2, c2):
                self.type_equal(ctx, d1, d2)
                z = fresh(x, ctx.names() | (free_vars(c1) - {x}) | (free_vars(c2) - {y}))
                self.type_equal(ctx.extend(VarDecl(z, d1)), subst(c1, x, Var(z)),
                                subst(c2, y, Var(z)))
            case Psub(a0, p), Psub(b0, q):
                self.type_equal(ctx, a0, b0)
                if not alpha_eq(p, q):
                    z = self._pred_var(ctx, p, q)
                    self.emit(ctx, Forall(z, a0, Eq(Bool, beta_head(p, Var(z)),
                                                     beta_head(q, Var(z)))),
                              Provenance(TYPE_EQ_PRED))
            case Psub(a0, p), _:
                self.type_equal(ctx, a0, b)
                z = self._pred_var(ctx, p)
                self.emit(ctx, Forall(z, a0, beta_head(p, Var(z))), Provenance(TYPE_EQ_PRED))
            case _, Psub(b0, q):
                self.type_equal(ctx, a, b0)
                z = self._pred_var(ctx, q)
                self.emit(ctx, Forall(z, a, beta_head(q, Var(z))), Provenance(TYPE_EQ_PRED))
            case _:
                raise TypeCheckError(f"type mismatch: {a} vs {b}", self.location)

    def subtype(self, ctx: Context, a: Type, b: Type) -> None:
        a, b = normalize_psub(a), normalize_psub(b)
        if alpha_eq(a, b):
            return
        match a, b:
            case Psub(a0, p), Psub(b0, q):
                self.subtype(ctx, a0, b0)
                if not alpha_eq(p, q):
                    z = self._pred_var(ctx, p, q)
                    self.emit(ctx.extend(VarDecl(z, a0)),
                              Impl(beta_head(p, Var(z)), beta_head(q, Var(z))),
                              Provenance(PSUB_VARIANCE))
            case Psub(a0, _), _:
                self.subtype(ctx, a0, b)
            case _, Psub(b0, q):
                self.subtype(ctx, a, b0)
                z = self._pred_var(ctx, q)
                self.emit(ctx.extend(VarDecl(z, a)), beta_head(q, Var(z)),
                          Provenance(PSUB_VARIANCE))
            case Pi(x, d1, c1), Pi(y, d2, c2):
                self.subtype(ctx, d2, d1)
                z = fresh(x, ctx.names() | (free_vars(c1) - {x}) | (free_vars(c2) - {y}))
                self.subtype(ctx.extend(VarDecl(z, d2)), subst(c1, x, Var(z)),
                             subst(c2, y, Var(z)))
            case _:
                self.type_equal(ctx, a, b)

    def _pred_var(self, ctx: Context, *preds) -> str:
        avoid = set(ctx.names())
        for p in preds:
            avoid |= free_vars(p)
        return fresh("x", avoid)

    # implicit arguments

    def _solve_holes(self, ctx: Context, t: Term, expected: Optional[Type]) -> Term:
        """Fill ``_`` arguments by first-order matching of argument types
        against the head's domains, and of the result type against ``expected``."""
        head, args = spine(t)
        with self.quiet():
            _, cur = self.infer(ctx, head)
        metas: dict = {}
        filled = []
        for i, a in enumerate(args):
            cur = strip_psub(cur)
            if not isinstance(cur, Pi):
                raise TypeCheckError(f"{head} is applied to too many arguments", self.location)
            if isinstance(a, Hole):
                m = Var(f"?{len(metas)}")
                metas[m.name] = None
                filled.append(m)
                cur = subst(cur.codomain, cur.var, m)
                continue
            try:
                with self.quiet():
                    _, aty = self.infer(ctx, a)
                _match_type(cur.domain, aty, metas)
            except TypeCheckError:
                pass
            filled.append(a)
            cur = subst(cur.codomain, cur.var, a)
        if expected is not None:
            _match_type(cur, expected, metas)
        missing = [m for m, v in metas.items() if v is None]
        if missing:
            raise TypeCheckError(
                f"cannot infer {len(missing)} implicit argument(s) of {head}", self.location)
        out = [metas[a.name] if isinstance(a, Var) and a.name in metas else a for a in filled]
        # solutions may themselves mention metas solved later
        for _ in range(len(metas)):
            out = [_resolve(a, metas) for a in out]
        return app(head, *out)

    # declarations

    def check_telescope(self, ctx: Context, telescope) -> tuple:
        out = []
        for x, ty in telescope:
            if x in ctx.names():
                raise TypeCheckError(f"duplicate variable {x}", self.location)
            ty2 = self.wf(ctx, ty)
            out.append((x, ty2))
            ctx = ctx.extend(VarDecl(x, ty2))
        return tuple(out)

    def check_decl(self, d):
        if d.name in self.theory.names():
            raise TypeCheckError(f"duplicate name {d.name}", d.name)
        match d:
            case TypeDecl(name, tele):
                return TypeDecl(name, self.check_telescope(Context(), tele))
            case ConstDecl(name, ty):
                return ConstDecl(name, self.wf(Context(), ty))
            case Axiom(name, formula):
                return Axiom(name, self.check(Context(), formula, Bool))
            case _:
                raise TypeCheckError(f"unknown declaration {d!r}", self.location)

    def check_context_entries(self, ctx: Context) -> Context:
        out = Context()
        for e in ctx:
            if e.name in out.names():
                raise TypeCheckError(f"duplicate name {e.name}", self.location)
            if isinstance(e, VarDecl):
                out = out.extend(VarDecl(e.name, self.wf(out, e.type)))
            else:
                out = out.extend(Assumption(e.name, self.check(out, e.formula, Bool)))
        return out


def _match_type(pat, target, metas) -> None:
    match pat, target:
        case BaseApp(n, ps), BaseApp(m, ts) if n == m and len(ps) == len(ts):
            for p, t in zip(ps, ts):
                _match_term(p, t, metas)
        case Pi(x, d1, c1), Pi(y, d2, c2):
            _match_type(d1, d2, metas)
            _match_type(c1, subst(c2, y, Var(x)), metas)
        case Psub(b1, p), Psub(b2, q):
            _match_type(b1, b2, metas)
            _match_term(p, q, metas)
        case Psub(b1, _), _:
            _match_type(b1, target, metas)
        case _, Psub(b2, _):
            _match_type(pat, b2, metas)


def _match_term(pat, target, metas) -> None:
    match pat, target:
        case Var(m), _ if m in metas:
            if metas[m] is None:
                metas[m] = target
        case App(f, a), App(g, b):
            _match_term(f, g, metas)
            _match_term(a, b, metas)


def _resolve(t, metas):
    for m, v in metas.items():
        if v is not None and m in free_vars(t):
            t = subst(t, m, v)
    return t


# --- module-level entry points ---------------------------------------------


def _report(ch: Checker, **kw) -> CheckReport:
    return CheckReport(ch.status(), list(ch.obligations), dict(ch.discharged), **kw)


def _rejected(ch: Checker, err: TypeCheckError, **kw) -> CheckReport:
    return CheckReport(Verdict.REJECTED, list(ch.obligations), dict(ch.discharged),
                       reason=err.message, location=err.location or ch.location, **kw)


def check_theory(theory: Theory, oracle: Optional[ValidityOracle] = None,
                 checker: Optional[Checker] = None) -> CheckReport:
    """Check declarations left to right, discharging obligations as they arise."""
    ch = checker or Checker(Theory(), oracle)
    for d in theory:
        ch.location = d.name
        try:
            ch.theory = ch.theory.extend(ch.check_decl(d))
        except TypeCheckError as e:
            return _rejected(ch, e, theory=ch.theory)
    return _report(ch, theory=ch.theory)


def check_context(ctx: Context, theory: Theory, oracle: Optional[ValidityOracle] = None
                  ) -> CheckReport:
    ch = Checker(theory, oracle)
    ch.location = "context"
    try:
        out = ch.check_context_entries(ctx)
    except TypeCheckError as e:
        return _rejected(ch, e, theory=theory)
    return _report(ch, theory=theory, context=out)


def check_conjecture(theory: Theory, conjecture: Term, oracle: Optional[ValidityOracle] = None,
                     ctx: Context = Context(), checker: Optional[Checker] = None,
                     name: str = "conjecture") -> CheckReport:
    """Check that ``conjecture`` is a well-typed Boolean (not that it holds)."""
    ch = checker or Checker(theory, oracle)
    ch.theory = theory
    ch.location = name
    try:
        ctx2 = ch.check_context_entries(ctx)
        f = ch.check(ctx2, conjecture, Bool)
    except TypeCheckError as e:
        return _rejected(ch, e, theory=theory)
    return _report(ch, theory=theory, context=ctx2, conjecture=f)


def check_problem(theory: Theory, conjecture: Optional[Term],
                  oracle: Optional[ValidityOracle] = None,
                  conjecture_name: str = "conjecture", ctx: Context = Context()
                  ) -> CheckReport:
    """Theory, then context and conjecture, with one obligation numbering."""
    ch = Checker(Theory(), oracle)
    rep = check_theory(theory, checker=ch)
    if rep.verdict is Verdict.REJECTED:
        return rep
    if conjecture is None:
        conjecture, conjecture_name = Truth(), "context"
        rep2 = check_conjecture(rep.theory, conjecture, checker=ch, ctx=ctx, name=conjecture_name)
        rep2.conjecture = None
        return rep2
    return check_conjecture(rep.theory, conjecture, checker=ch, ctx=ctx, name=conjecture_name)


def infer_type(theory: Theory, ctx: Context, t: Term,
               oracle: Optional[ValidityOracle] = None) -> tuple:
    """``(type, obligations)``; raises :class:`TypeCheckError` when ill-typed."""
    ch = Checker(theory, oracle)
    _, ty = ch.infer(ctx, t)
    return ty, ch.obligations


def elaborate(theory: Theory, ctx: Context, t: Term,
              oracle: Optional[ValidityOracle] = None) -> tuple:
    """``(elaborated term, type, obligations)``."""
    ch = Checker(theory, oracle)
    t2, ty = ch.infer(ctx, t)
    return t2, ty, ch.obligations


def check_type(theory: Theory, ctx: Context, t: Term, ty: Type,
               oracle: Optional[ValidityOracle] = None) -> list:
    ch = Checker(theory, oracle)
    ch.check(ctx, t, ty)
    return ch.obligations


def wf_type(theory: Theory, ctx: Context, ty: Type,
            oracle: Optional[ValidityOracle] = None) -> list:
    ch = Checker(theory, oracle)
    ch.wf(ctx, ty)
    return ch.obligations


def type_equal(theory: Theory, ctx: Context, a: Type, b: Type,
               oracle: Optional[ValidityOracle] = None) -> list:
    ch = Checker(theory, oracle)
    ch.type_equal(ctx, a, b)
    return ch.obligations


def subtype(theory: Theory, ctx: Context, a: Type, b: Type,
            oracle: Optional[ValidityOracle] = None) -> list:
    ch = Checker(theory, oracle)
    ch.subtype(ctx, a, b)
    return ch.obligations
