"""A small, bounded HOL prover with replayable proofs.

Goals are first decomposed by introduction rules.  What remains is handed
to a congruence closure over ground terms in which every fact ``F`` is
merged with ``true`` (a fact holds iff it equals ``true``), extended with
propositional propagation and bounded forward chaining through universally
quantified implications.  Every merge remembers why it happened, so a
successful run can be turned into an explicit derivation, which
:func:`replay` re-checks rule by rule.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from dhol.errors import HolTypeError
from dhol.hol import Arrow, HolContext, HolTheory, HolVar, beta_eta_normalize, hol_infer
from dhol.syntax import (
    And, App, Bool, BoolType, Const, Eq, Exists, Falsity, Forall, Impl, Lam, Not, Or,
    Term, Truth, Var, alpha_eq, canonical, free_vars, fresh, spine, subst,
)

TRUE_T, FALSE_T = Truth(), Falsity()


def _nf(t: Term) -> Term:
    return beta_eta_normalize(t)


# --- proofs ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Proof:
    """One inference step.  ``concl`` is ``("holds", F)`` or ``("eq", s, t)``."""

    rule: str
    concl: tuple
    premises: tuple = ()
    data: tuple = ()

    def size(self) -> int:
        seen, todo = set(), [self]
        while todo:
            p = todo.pop()
            if id(p) not in seen:
                seen.add(id(p))
                todo.extend(p.premises)
        return len(seen)


def _holds(p: Proof) -> Term:
    if p.concl[0] != "holds":
        raise ReplayError(f"{p.rule}: expected a formula, got an equation")
    return p.concl[1]


def _eq(p: Proof) -> tuple:
    if p.concl[0] != "eq":
        raise ReplayError(f"{p.rule}: expected an equation, got a formula")
    return p.concl[1], p.concl[2]


def hyp(name: str, f: Term) -> Proof:
    return Proof("hyp", ("holds", f), data=(name,))


def betaeta(p: Proof, concl: tuple) -> Proof:
    return Proof("betaeta", concl, (p,))


def refl(t: Term) -> Proof:
    return Proof("refl", ("eq", t, t))


def sym(p: Proof) -> Proof:
    s, t = _eq(p)
    return Proof("sym", ("eq", t, s), (p,))


def trans(p: Proof, q: Proof) -> Proof:
    return Proof("trans", ("eq", _eq(p)[0], _eq(q)[1]), (p, q))


def cong(l: Term, r: Term, kids: tuple) -> Proof:
    return Proof("cong", ("eq", l, r), tuple(kids))


def eqtrue_intro(p: Proof) -> Proof:
    return Proof("eqtrue_intro", ("eq", _holds(p), TRUE_T), (p,))


def eqtrue_elim(p: Proof) -> Proof:
    return Proof("eqtrue_elim", ("holds", _eq(p)[0]), (p,))


def eq_intro(e: Term, p: Proof) -> Proof:
    return Proof("eq_intro", ("holds", e), (p,))


def eq_elim(p: Proof) -> Proof:
    e = _holds(p)
    return Proof("eq_elim", ("eq", e.lhs, e.rhs), (p,))


def rule(name: str, concl_formula: Term, *premises: Proof, data: tuple = ()) -> Proof:
    return Proof(name, ("holds", concl_formula), tuple(premises), data)


def not_false(p: Proof) -> Proof:
    return Proof("not_false", ("eq", _holds(p).body, FALSE_T), (p,))


def inst(p: Proof, t: Term) -> Proof:
    f = _holds(p)
    return rule("inst", _nf(subst(f.body, f.var, t)), p, data=(t,))


# --- replay ----------------------------------------------------------------


class ReplayError(Exception):
    pass


@dataclass(frozen=True)
class Scope:
    """Hypotheses and typed variables a proof step may use."""

    theory: HolTheory
    vars: tuple = ()  # (name, type)
    hyps: tuple = ()  # (name, formula)

    def with_var(self, x: str, ty) -> "Scope":
        return Scope(self.theory, self.vars + ((x, ty),), self.hyps)

    def with_hyp(self, name: str, f: Term) -> "Scope":
        return Scope(self.theory, self.vars, self.hyps + ((name, f),))

    def new_hyp_name(self) -> str:
        return f"h{len(self.hyps)}"

    def hyp(self, name: str) -> Optional[Term]:
        for n, f in reversed(self.hyps):
            if n == name:
                return f
        return None

    def used_names(self) -> set:
        out = {x for x, _ in self.vars}
        for _, f in self.hyps:
            out |= free_vars(f)
        return out

    def context(self) -> HolContext:
        return HolContext(tuple(HolVar(x, ty) for x, ty in self.vars))

    def type_of(self, t: Term):
        return hol_infer(self.context(), t, self.theory)


def problem_scope(problem) -> Scope:
    hyps = tuple(("ax:" + a.name, a.formula) for a in problem.theory.axioms())
    vars_, ctx_hyps = [], []
    for e in problem.context:
        if isinstance(e, HolVar):
            vars_.append((e.name, e.type))
        else:
            ctx_hyps.append(("ctx:" + e.name, e.formula))
    return Scope(problem.theory, tuple(vars_), hyps + tuple(ctx_hyps))


def replay(proof: Proof, problem) -> None:
    """Re-check every step of ``proof`` against ``problem``; raises ReplayError."""
    scope = problem_scope(problem)
    got = _Replayer().check(proof, scope)
    if got[0] != "holds" or not alpha_eq(got[1], problem.conjecture):
        raise ReplayError("proof does not conclude the conjecture")


def _same_concl(a: tuple, b: tuple) -> bool:
    return a[0] == b[0] and len(a) == len(b) and all(alpha_eq(x, y) for x, y in zip(a[1:], b[1:]))


def _nf_concl(c: tuple) -> tuple:
    return (c[0], *(_nf(x) for x in c[1:]))


def _shape(t: Term):
    match t:
        case App(f, a):
            return ("app",), (f, a)
        case Eq(at, l, r):
            return ("eq", at), (l, r)
        case Impl(l, r):
            return ("imp",), (l, r)
        case And(l, r):
            return ("and",), (l, r)
        case Or(l, r):
            return ("or",), (l, r)
        case Not(b):
            return ("not",), (b,)
    return None, ()


class _Replayer:
    def __init__(self):
        self.memo: dict = {}

    def check(self, p: Proof, scope: Scope) -> tuple:
        key = (id(p), id(scope))
        if key not in self.memo:
            got = self._check(p, scope)
            if not _same_concl(got, p.concl):
                raise ReplayError(f"{p.rule}: stated conclusion does not follow")
            self.memo[key] = (p, scope, got)  # keep both alive so ids stay unique
        return self.memo[key][2]

    def _bool(self, scope: Scope, f: Term) -> None:
        try:
            ty = scope.type_of(f)
        except HolTypeError as e:
            raise ReplayError(f"ill-typed formula: {e}") from None
        if ty != Bool:
            raise ReplayError(f"not a formula: {f}")

    def _check(self, p: Proof, scope: Scope) -> tuple:
        prem = lambda i, s=scope: self.check(p.premises[i], s)  # noqa: E731
        H = lambda i, s=scope: _holds_c(prem(i, s))  # noqa: E731
        E = lambda i, s=scope: _eq_c(prem(i, s))  # noqa: E731
        c = p.concl
        match p.rule:
            case "hyp":
                f = scope.hyp(p.data[0])
                if f is None:
                    raise ReplayError(f"unknown hypothesis {p.data[0]}")
                return ("holds", f)
            case "betaeta":
                if not _same_concl(_nf_concl(prem(0)), _nf_concl(c)):
                    raise ReplayError("betaeta: not convertible")
                return c
            case "refl":
                return c if c[0] == "eq" and alpha_eq(c[1], c[2]) else ("bad",)
            case "sym":
                s, t = E(0)
                return ("eq", t, s)
            case "trans":
                s, t = E(0)
                t2, u = E(1)
                if not alpha_eq(t, t2):
                    raise ReplayError("trans: middle terms differ")
                return ("eq", s, u)
            case "cong":
                l, r = c[1], c[2]
                sl, kl = _shape(l)
                sr, kr = _shape(r)
                if sl is None or sl != sr or len(p.premises) != len(kl):
                    raise ReplayError("cong: shapes differ")
                for i, (a, b) in enumerate(zip(kl, kr)):
                    x, y = E(i)
                    if not (alpha_eq(a, x) and alpha_eq(b, y)):
                        raise ReplayError("cong: argument equation does not match")
                return c
            case "eqtrue_intro":
                return ("eq", H(0), TRUE_T)
            case "eqtrue_elim":
                s, t = E(0)
                if t != TRUE_T:
                    raise ReplayError("eqtrue_elim: right side is not true")
                self._bool(scope, s)
                return ("holds", s)
            case "eq_intro":
                e = c[1]
                if not isinstance(e, Eq):
                    raise ReplayError("eq_intro: not an equation")
                s, t = E(0)
                if not (alpha_eq(s, e.lhs) and alpha_eq(t, e.rhs)):
                    raise ReplayError("eq_intro: sides differ")
                self._bool(scope, e)
                return c
            case "eq_elim":
                e = H(0)
                if not isinstance(e, Eq):
                    raise ReplayError("eq_elim: not an equation")
                return ("eq", e.lhs, e.rhs)
            case "truth_i":
                return ("holds", TRUE_T)
            case "mp":
                f, a = H(0), H(1)
                if not isinstance(f, Impl) or not alpha_eq(f.ante, a):
                    raise ReplayError("mp: antecedent mismatch")
                return ("holds", f.cons)
            case "imp_k":
                f = c[1]
                if not isinstance(f, Impl) or not alpha_eq(f.cons, H(0)):
                    raise ReplayError("imp_k: consequent mismatch")
                self._bool(scope, f)
                return c
            case "and_i":
                return ("holds", And(H(0), H(1)))
            case "and_e1" | "and_e2":
                f = H(0)
                if not isinstance(f, And):
                    raise ReplayError("and_e: not a conjunction")
                return ("holds", f.left if p.rule == "and_e1" else f.right)
            case "or_i1" | "or_i2":
                f = c[1]
                if not isinstance(f, Or):
                    raise ReplayError("or_i: not a disjunction")
                side = f.left if p.rule == "or_i1" else f.right
                if not alpha_eq(side, H(0)):
                    raise ReplayError("or_i: disjunct mismatch")
                self._bool(scope, f)
                return c
            case "or_ds":
                f = H(0)
                s, t = E(1)
                if not isinstance(f, Or) or not alpha_eq(s, f.left) or t != FALSE_T:
                    raise ReplayError("or_ds: shape mismatch")
                return ("holds", f.right)
            case "not_false":
                f = H(0)
                if not isinstance(f, Not):
                    raise ReplayError("not_false: not a negation")
                return ("eq", f.body, FALSE_T)
            case "not_i_false":
                s, t = E(0)
                if t != FALSE_T:
                    raise ReplayError("not_i_false: right side is not false")
                return ("holds", Not(s))
            case "false_e":
                got = prem(0)
                ok = (got[0] == "holds" and got[1] == FALSE_T) or (
                    got[0] == "eq" and {got[1], got[2]} == {TRUE_T, FALSE_T})
                if not ok:
                    raise ReplayError("false_e: no contradiction")
                self._bool(scope, c[1])
                return c
            case "inst":
                f = H(0)
                t = p.data[0]
                if not isinstance(f, Forall):
                    raise ReplayError("inst: not a universal")
                try:
                    ty = scope.type_of(t)
                except HolTypeError as e:
                    raise ReplayError(f"inst: ill-typed witness: {e}") from None
                if ty != f.annot:
                    raise ReplayError("inst: witness has the wrong type")
                return ("holds", _nf(subst(f.body, f.var, t)))
            case "ex_i":
                f = c[1]
                t = p.data[0]
                if not isinstance(f, Exists) or scope.type_of(t) != f.annot:
                    raise ReplayError("ex_i: bad witness")
                if not alpha_eq(_nf(subst(f.body, f.var, t)), _nf(H(0))):
                    raise ReplayError("ex_i: body mismatch")
                self._bool(scope, f)
                return c
            case "all_i":
                f = c[1]
                x = p.data[0]
                if not isinstance(f, Forall):
                    raise ReplayError("all_i: not a universal")
                self._fresh(scope, x)
                inner = scope.with_var(x, f.annot)
                got = H(0, inner)
                if not alpha_eq(_nf(got), _nf(subst(f.body, f.var, Var(x)))):
                    raise ReplayError("all_i: body mismatch")
                self._bool(scope, f)
                return c
            case "imp_i" | "not_i" | "or_c":
                f = c[1]
                name = p.data[0]
                if p.rule == "imp_i" and isinstance(f, Impl):
                    assumed, goal = f.ante, f.cons
                elif p.rule == "not_i" and isinstance(f, Not):
                    assumed, goal = f.body, FALSE_T
                elif p.rule == "or_c" and isinstance(f, Or):
                    assumed, goal = Not(f.left), f.right
                else:
                    raise ReplayError(f"{p.rule}: wrong connective")
                self._bool(scope, f)
                if not alpha_eq(H(0, scope.with_hyp(name, assumed)), goal):
                    raise ReplayError(f"{p.rule}: subproof proves something else")
                return c
            case "bool_ext":
                f = c[1]
                if not (isinstance(f, Eq) and f.at == Bool):
                    raise ReplayError("bool_ext: not a Boolean equation")
                if not (alpha_eq(H(0), Impl(f.lhs, f.rhs)) and alpha_eq(H(1), Impl(f.rhs, f.lhs))):
                    raise ReplayError("bool_ext: directions do not match")
                self._bool(scope, f)
                return c
            case "fun_ext":
                f = c[1]
                x = p.data[0]
                if not (isinstance(f, Eq) and isinstance(f.at, Arrow)):
                    raise ReplayError("fun_ext: not a function equation")
                self._fresh(scope, x)
                s, t = _eq_c(prem(0, scope.with_var(x, f.at.dom)))
                if not (alpha_eq(_nf(s), _nf(App(f.lhs, Var(x))))
                        and alpha_eq(_nf(t), _nf(App(f.rhs, Var(x))))):
                    raise ReplayError("fun_ext: pointwise equation does not match")
                self._bool(scope, f)
                return c
            case _:
                raise ReplayError(f"unknown rule {p.rule}")

    def _fresh(self, scope: Scope, x: str) -> None:
        if x in scope.used_names():
            raise ReplayError(f"eigenvariable {x} is not fresh")


def _holds_c(c: tuple) -> Term:
    if c[0] != "holds":
        raise ReplayError("expected a formula")
    return c[1]


def _eq_c(c: tuple) -> tuple:
    if c[0] != "eq":
        raise ReplayError("expected an equation")
    return c[1], c[2]


# --- congruence closure ----------------------------------------------------


def _has_pvars(t: Term) -> bool:
    return any(v.startswith("?") for v in free_vars(t))


def _triggers(t: Term, pvars: set) -> list:
    """Smallest compound subterms of ``t`` mentioning every variable in ``pvars``."""
    found: list = []

    def walk(u: Term) -> None:
        shape, kids = _shape(u)
        if shape is None:
            return
        for k in kids:
            walk(k)
        if pvars <= free_vars(u) and not any(pvars <= free_vars(f) for f in found
                                                 if _occurs(f, u)):
            found.append(u)

    walk(t)
    return found


def _occurs(s: Term, t: Term) -> bool:
    if s is t:
        return True
    return any(_occurs(s, k) for k in _shape(t)[1])


def _symbols(t: Term) -> set:
    """Constants and free (non-pattern) variables of ``t``."""
    return _consts(t, set()) | {v for v in free_vars(t) if not v.startswith("?")}


def _consts(t: Term, out: set) -> set:
    match t:
        case Const(n):
            out.add(n)
        case App(f, a) | Eq(_, f, a) | Impl(f, a) | And(f, a) | Or(f, a):
            _consts(f, out)
            _consts(a, out)
        case Not(b) | Lam(_, _, b) | Forall(_, _, b) | Exists(_, _, b):
            _consts(b, out)
    return out


@dataclass
class Stats:
    instantiations: int = 0
    rounds: int = 0
    capped: bool = False
    nodes: int = 0


@dataclass
class _Clause:
    formula: Term
    proof: Callable[[], Proof]
    pvars: list  # pattern variable names, in binder order
    types: dict
    premises: list  # patterns
    conclusion: Term
    relevant: bool = False
    # quantified premises cannot be e-matched; they are proved as subgoals instead
    deferred: frozenset = frozenset()


def _make_clause(formula: Term, proof) -> Optional[_Clause]:
    pvars, types, premises = [], {}, []
    body = formula
    while True:
        match body:
            case Forall(x, ty, b):
                pv = f"?{len(pvars)}"
                pvars.append(pv)
                types[pv] = ty
                body = subst(b, x, Var(pv))
            case Impl(a, b):
                premises.append(a)
                body = b
            case _:
                break
    if not pvars:
        return None
    deferred = frozenset(i for i, a in enumerate(premises) if isinstance(a, (Forall, Exists)))
    return _Clause(formula, proof, pvars, types, premises, body, deferred=deferred)


class _CC:
    def __init__(self, scope: Scope, stats: Stats):
        self.scope = scope
        self.stats = stats
        self.terms: list = []
        self.index: dict = {}
        self.shapes: list = []
        self.kids: list = []
        self.parent: list = []
        self.members: dict = {}
        self.adj: list = []
        self.reasons: list = []
        self.types: dict = {}
        self.gens: list = []  # instantiation generation that created each node
        self.generation = 0
        self._explained: dict = {}
        self._pv_cache: dict = {}
        self.by_shape: dict = {}  # shape -> nodes with that shape
        self._cand_cache: dict = {}
        self.TRUE = self.node(TRUE_T)
        self.FALSE = self.node(FALSE_T)

    # nodes

    def node(self, t: Term) -> int:
        key = canonical(t)
        n = self.index.get(key)
        if n is not None:
            return n
        shape, kids = _shape(t)
        kid_ids = tuple(self.node(k) for k in kids)
        n = len(self.terms)
        self.terms.append(t)
        self.index[key] = n
        self.shapes.append(shape)
        if shape is not None:
            self.by_shape.setdefault(shape, []).append(n)
        self.kids.append(kid_ids)
        self.parent.append(n)
        self.members[n] = [n]
        self.adj.append([])
        self.gens.append(self.generation)
        self.stats.nodes = len(self.terms)
        return n

    def gen(self, n: int) -> int:
        """A class is as old as its oldest member."""
        return min(self.gens[m] for m in self.members[self.find(n)])

    def find(self, n: int) -> int:
        root = n
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[n] != root:
            self.parent[n], n = root, self.parent[n]
        return root

    def type_of(self, n: int):
        if n not in self.types:
            try:
                self.types[n] = self.scope.type_of(self.terms[n])
            except HolTypeError:
                self.types[n] = None
        return self.types[n]

    def is_true(self, n: int) -> bool:
        return self.find(n) == self.find(self.TRUE)

    def is_false(self, n: int) -> bool:
        return self.find(n) == self.find(self.FALSE)

    def inconsistent(self) -> bool:
        return self.find(self.TRUE) == self.find(self.FALSE)

    def congruent(self, a: int, b: int) -> bool:
        if self.find(a) == self.find(b):
            return True
        sa = self.shapes[a]
        return sa is not None and sa == self.shapes[b] and all(
            self.congruent(x, y) for x, y in zip(self.kids[a], self.kids[b]))

    # merging

    def merge(self, x: int, y: int, kind: str, data=None) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        idx = len(self.reasons)
        self.reasons.append((x, y, kind, data))
        self.adj[x].append((y, idx))
        self.adj[y].append((x, idx))
        if len(self.members[rx]) > len(self.members[ry]):
            rx, ry = ry, rx
        self.parent[rx] = ry
        self.members[ry].extend(self.members.pop(rx))
        return True

    def add_fact(self, proof_or_thunk, formula: Term) -> int:
        n = self.node(formula)
        self.merge(n, self.TRUE, "fact", proof_or_thunk)
        return n

    def propagate(self) -> None:
        changed = True
        while changed and not self.inconsistent():
            changed = False
            sig: dict = {}
            for n in range(len(self.terms)):
                shape = self.shapes[n]
                if shape is None:
                    continue
                key = (shape, tuple(self.find(k) for k in self.kids[n]))
                m = sig.setdefault(key, n)
                if m != n and self.find(m) != self.find(n):
                    changed |= self.merge(n, m, "cong")
            for n in range(len(self.terms)):
                changed |= self._logic(n)

    def _logic(self, n: int) -> bool:
        t, k, T = self.terms[n], self.kids[n], self.TRUE
        on = self.is_true(n)
        match t:
            case Eq():
                if not on and self.find(k[0]) == self.find(k[1]):
                    return self.merge(n, T, "eq_intro")
                if on and self.find(k[0]) != self.find(k[1]):
                    return self.merge(k[0], k[1], "eq_elim", n)
            case Impl():
                if on and self.is_true(k[0]) and not self.is_true(k[1]):
                    return self.merge(k[1], T, "mp", n)
                if not on and self.is_true(k[1]):
                    return self.merge(n, T, "imp_k")
            case And():
                if on:
                    a = not self.is_true(k[0]) and self.merge(k[0], T, "and_e1", n)
                    b = not self.is_true(k[1]) and self.merge(k[1], T, "and_e2", n)
                    return a or b
                if self.is_true(k[0]) and self.is_true(k[1]):
                    return self.merge(n, T, "and_i")
            case Not():
                if on and not self.is_false(k[0]):
                    return self.merge(k[0], self.FALSE, "not_false", n)
                if not on and self.is_false(k[0]):
                    return self.merge(n, T, "not_i_false")
            case Or():
                if on and self.is_false(k[0]) and not self.is_true(k[1]):
                    return self.merge(k[1], T, "or_ds", n)
                if not on and self.is_true(k[0]):
                    return self.merge(n, T, "or_i1")
                if not on and self.is_true(k[1]):
                    return self.merge(n, T, "or_i2")
        return False

    # explanations

    def _path(self, a: int, b: int) -> list:
        prev = {a: None}
        todo = deque([a])
        while todo:
            u = todo.popleft()
            if u == b:
                break
            for v, idx in self.adj[u]:
                if v not in prev:
                    prev[v] = (u, idx)
                    todo.append(v)
        if b not in prev:
            raise AssertionError("explain: nodes are not connected")
        out = []
        while prev[b] is not None:
            u, idx = prev[b]
            out.append((u, b, idx))
            b = u
        return out[::-1]

    def explain(self, a: int, b: int) -> Proof:
        """A proof of ``term(a) = term(b)``; both must be in one class."""
        if a == b:
            return refl(self.terms[a])
        key = (a, b)
        if key not in self._explained:
            steps = [self._edge(u, v, idx) for u, v, idx in self._path(a, b)]
            p = steps[0]
            for q in steps[1:]:
                p = trans(p, q)
            self._explained[key] = p
        return self._explained[key]

    def holds(self, n: int) -> Proof:
        return eqtrue_elim(self.explain(n, self.TRUE))

    def _edge(self, u: int, v: int, idx: int) -> Proof:
        x, y, kind, data = self.reasons[idx]
        p = self._reason(x, y, kind, data)
        return p if (u, v) == (x, y) else sym(p)

    def _reason(self, x: int, y: int, kind: str, data) -> Proof:
        tx, ty_ = self.terms[x], self.terms[y]
        k = self.kids[x]
        match kind:
            case "fact":
                p = data() if callable(data) else data
                if not alpha_eq(_holds(p), tx):
                    p = betaeta(p, ("holds", tx))
                return eqtrue_intro(p)
            case "cong":
                return cong(tx, ty_, tuple(self.explain(a, b)
                                           for a, b in zip(self.kids[x], self.kids[y])))
            case "eq_intro":
                return eqtrue_intro(eq_intro(tx, self.explain(k[0], k[1])))
            case "eq_elim":
                return eq_elim(self.holds(data))
            case "mp":
                src = self.terms[data]
                return eqtrue_intro(rule("mp", src.cons, self.holds(data),
                                         self.holds(self.kids[data][0])))
            case "imp_k":
                return eqtrue_intro(rule("imp_k", tx, self.holds(k[1])))
            case "and_e1" | "and_e2":
                src = self.terms[data]
                part = src.left if kind == "and_e1" else src.right
                return eqtrue_intro(rule(kind, part, self.holds(data)))
            case "and_i":
                return eqtrue_intro(rule("and_i", tx, self.holds(k[0]), self.holds(k[1])))
            case "not_false":
                return not_false(self.holds(data))
            case "not_i_false":
                return eqtrue_intro(Proof("not_i_false", ("holds", tx),
                                          (self.explain(k[0], self.FALSE),)))
            case "or_ds":
                src = self.terms[data]
                return eqtrue_intro(rule("or_ds", src.right, self.holds(data),
                                         self.explain(self.kids[data][0], self.FALSE)))
            case "or_i1" | "or_i2":
                side = k[0] if kind == "or_i1" else k[1]
                return eqtrue_intro(rule(kind, tx, self.holds(side)))
        raise AssertionError(f"unknown merge reason {kind}")

    # matching

    def _has_pvars(self, pat: Term) -> bool:
        hit = self._pv_cache.get(id(pat))
        if hit is None or hit[0] is not pat:
            hit = self._pv_cache[id(pat)] = (pat, _has_pvars(pat))
        return hit[1]

    def ematch(self, pat: Term, n: int, sigma: dict, types: dict):
        if isinstance(pat, Var) and pat.name in types:
            v = pat.name
            if v in sigma:
                if self.congruent(sigma[v], n):
                    yield sigma
            elif self.type_of(n) == types[v]:
                yield {**sigma, v: n}
            return
        if not self._has_pvars(pat):
            if self.congruent(self.node(pat), n):
                yield sigma
            return
        shape, pkids = _shape(pat)
        if shape is None:
            return
        done = set()
        for m in list(self.members[self.find(n)]):
            if self.shapes[m] == shape:
                sig = tuple(self.find(k) for k in self.kids[m])
                if sig not in done:  # congruent members match identically
                    done.add(sig)
                    yield from self._ematch_all(pkids, self.kids[m], sigma, types)

    def _stamp(self) -> tuple:
        return len(self.terms), len(self.reasons)

    def roots(self) -> set:
        hit = self._cand_cache.get("roots")
        if hit is None or hit[0] != self._stamp():
            hit = self._cand_cache["roots"] = (
                self._stamp(), {self.find(n) for n in range(len(self.terms))})
        return hit[1]

    def candidates(self, pat: Term, types: dict):
        """Classes that may match ``pat`` (None: any).

        A sound over-approximation of :meth:`ematch`, cached until the graph
        changes, so triggers are not matched against hopeless classes.
        """
        key = (id(pat), id(types))
        hit = self._cand_cache.get(key)
        if hit is None or hit[0] is not pat or hit[1] is not types or hit[2] != self._stamp():
            out = self._candidates(pat, types)
            hit = self._cand_cache[key] = (pat, types, self._stamp(), out)
        return hit[3]

    def _candidates(self, pat, types):
        if isinstance(pat, Var) and pat.name in types:
            return None
        if not self._has_pvars(pat):
            n = self.node(pat)
            # a ground leaf only matches its own class; compound ones match congruently
            return {self.find(n)} if self.shapes[n] is None else None
        shape, pkids = _shape(pat)
        if shape is None:
            return set()
        subs = [self._candidates(k, types) for k in pkids]
        return {self.find(m) for m in self.by_shape.get(shape, ())
                if all(c is None or self.find(k) in c for c, k in zip(subs, self.kids[m]))}

    def _ematch_all(self, pats, ns, sigma, types):
        if not pats:
            yield sigma
            return
        for s in self.ematch(pats[0], ns[0], sigma, types):
            yield from self._ematch_all(pats[1:], ns[1:], s, types)


# --- the prover ------------------------------------------------------------


@dataclass(frozen=True)
class Bounds:
    depth: int = 3  # longest chain of instantiations a derived term may rest on
    max_instantiations: int = 64
    max_terms: int = 8  # ground candidates tried per unconstrained variable
    max_witnesses: int = 8
    batch: int = 16  # instances per round; merges between rounds prune duplicates
    max_nesting: int = 2  # quantified premises proved by recursive subproofs
    ceiling: int = 16  # total instantiations per problem, in units of max_instantiations


@dataclass
class BuiltinResult:
    proof: Optional[Proof]
    stats: Stats = field(default_factory=Stats)
    error: Optional[str] = None


class _Prover:
    def __init__(self, bounds: Bounds):
        self.bounds = bounds
        self.stats = Stats()
        self.nesting = 0
        self.ceiling = bounds.ceiling * bounds.max_instantiations
        self.failed: set = set()
        self.active: set = set()  # subgoals on the current nesting stack

    def prove(self, scope: Scope, goal: Term) -> Optional[Proof]:
        g = _nf(goal)
        p = self._prove(scope, g)
        if p is not None and not alpha_eq(g, goal):
            p = betaeta(p, ("holds", goal))
        return p

    def _prove(self, scope: Scope, g: Term) -> Optional[Proof]:
        if self.stats.instantiations >= self.ceiling and not isinstance(g, Truth):
            self.stats.capped = True
            return None
        match g:
            case Truth():
                return rule("truth_i", g)
            case Forall(x, ty, body):
                x0 = fresh(x, scope.used_names() | free_vars(g))
                p = self._prove(scope.with_var(x0, ty), _nf(subst(body, x, Var(x0))))
                return p and rule("all_i", g, p, data=(x0,))
            case Impl(a, b):
                name = scope.new_hyp_name()
                p = self._prove(scope.with_hyp(name, a), b)
                return p and rule("imp_i", g, p, data=(name,))
            case Not(a):
                name = scope.new_hyp_name()
                p = self._prove(scope.with_hyp(name, a), FALSE_T)
                return p and rule("not_i", g, p, data=(name,))
            case And(a, b):
                p = self._prove(scope, a)
                q = p and self._prove(scope, b)
                return q and rule("and_i", g, p, q)
        p, cc = self.saturate(scope, g)
        if p is not None:
            return p
        match g:
            case Eq(BoolType(), a, b):
                p = self._prove(scope, Impl(a, b))
                q = p and self._prove(scope, Impl(b, a))
                return q and rule("bool_ext", g, p, q)
            case Eq(Arrow(dom, cod), f, h):
                x0 = fresh("x", scope.used_names() | free_vars(g))
                inner = scope.with_var(x0, dom)
                p = self._prove(inner, Eq(cod, _nf(App(f, Var(x0))), _nf(App(h, Var(x0)))))
                return p and Proof("fun_ext", ("holds", g), (p,), (x0,))
            case Or(a, b):
                name = scope.new_hyp_name()
                p = self._prove(scope.with_hyp(name, Not(a)), b)
                return p and rule("or_c", g, p, data=(name,))
            case Exists(x, ty, body):
                for n in self._universe(cc, ty)[: self.bounds.max_witnesses]:
                    t = cc.terms[n]
                    p = self._prove(scope, _nf(subst(body, x, t)))
                    if p is not None:
                        return rule("ex_i", g, p, data=(t,))
        return None

    def _universe(self, cc: _CC, ty) -> list:
        return [n for n in range(len(cc.terms))
                if cc.terms[n] not in (TRUE_T, FALSE_T) and cc.type_of(n) == ty]

    def saturate(self, scope: Scope, goal: Term):
        cc = _CC(scope, self.stats)
        g = cc.node(goal)
        goal_nodes = set(range(len(cc.terms)))
        goal_syms = _symbols(goal)
        for name, f in scope.hyps:  # local hypotheses are part of the problem at hand
            if not name.startswith("ax:"):
                goal_syms |= _symbols(f)
        clauses: list = []
        seen_clauses: set = set()

        def add_clause(formula, proof):
            key = canonical(formula)
            if key in seen_clauses:
                return
            seen_clauses.add(key)
            c = _make_clause(formula, proof)
            if c is not None:
                head = spine(c.conclusion)[0]
                c.relevant = bool(_symbols(c.conclusion) & goal_syms) and (
                    not isinstance(head, (Const, Var)) or head.name.startswith("?")
                    or head.name in goal_syms)
                clauses.append(c)

        for name, f in scope.hyps:
            nf = _nf(f)
            p = hyp(name, f)
            if not alpha_eq(nf, f):
                p = betaeta(p, ("holds", nf))
            start = len(cc.terms)
            cc.add_fact(p, nf)
            if not name.startswith("ax:"):
                goal_nodes.update(range(start, len(cc.terms)))
            add_clause(nf, p)
        cc.propagate()

        def done():
            if cc.inconsistent():
                return rule("false_e", goal, cc.explain(cc.TRUE, cc.FALSE))
            if cc.is_true(g):
                return cc.holds(g)
            return None

        applied: set = set()
        # nested proofs get their own budget; the ceiling bounds the whole search
        budget = min(self.bounds.max_instantiations, self.ceiling - self.stats.instantiations)
        while True:
            if (p := done()) is not None:
                return p, cc
            if budget <= 0:
                self.stats.capped = True
                break
            # instances are identified up to congruence, which only coarsens
            applied = {(i, tuple(cc.find(n) for n in ns)) for i, ns in applied}
            for n in list(cc.members[cc.find(cc.TRUE)]):
                if isinstance(cc.terms[n], Forall):
                    add_clause(cc.terms[n], (lambda n=n: cc.holds(n)))
            self.stats.rounds += 1
            ranked = sorted(range(len(clauses)),
                            key=lambda i: (not clauses[i].relevant, len(clauses[i].pvars), i))
            todo = []
            goal_roots = {cc.find(n) for n in goal_nodes}
            for rank, i in enumerate(ranked):
                for sigma in self._instances(cc, clauses[i], goal_nodes):
                    key = (i, tuple(cc.find(sigma[v]) for v in clauses[i].pvars))
                    if key in applied:
                        continue
                    gen = 1 + max((cc.gen(n) for n in sigma.values()), default=0)
                    if gen > self.bounds.depth:
                        self.stats.capped = True
                        continue
                    off = sum(cc.find(n) not in goal_roots for n in sigma.values())
                    prio = (not clauses[i].relevant, off, gen)
                    todo.append((prio, rank, len(todo), key, clauses[i], sigma))
            if not todo:
                break
            if budget <= 0:
                self.stats.capped = True
                break
            # instances closest to the goal first; the rest wait until these run out
            todo.sort(key=lambda e: e[:3])
            todo = [e for e in todo if e[0] == todo[0][0]][: self.bounds.batch]
            # premises first, so congruence can settle before conclusions are justified
            staged = []
            for gen, _, _, key, clause, sigma in todo:
                if budget <= 0:
                    self.stats.capped = True
                    break
                budget -= 1
                applied.add(key)
                self.stats.instantiations += 1
                cc.generation = gen[2]
                premises, concl = self._instantiate(clause, sigma, cc)
                staged.append((clause, sigma, [cc.node(a) for a in premises], concl))
            cc.propagate()
            for clause, sigma, prem_nodes, concl in staged:
                for i in clause.deferred:
                    if not cc.is_true(prem_nodes[i]):
                        self._subgoal(scope, cc, prem_nodes[i])
                if all(cc.is_true(n) for n in prem_nodes):
                    cc.add_fact(lambda c=clause, s=sigma: self._inst_proof(c, s, cc), concl)
            cc.propagate()
        return done(), cc

    def _subgoal(self, scope: Scope, cc: _CC, n: int) -> None:
        """Try to establish a quantified premise by a nested, bounded proof."""
        f = cc.terms[n]
        key = (scope.vars, scope.hyps, canonical(f))
        if (self.nesting >= self.bounds.max_nesting or key in self.failed
                or key in self.active):
            return
        self.nesting += 1
        self.active.add(key)
        try:
            p = self._prove(scope, f)
        finally:
            self.nesting -= 1
            self.active.discard(key)
        if p is None:
            self.failed.add(key)
        else:
            cc.add_fact(p, f)
            cc.propagate()

    def _instantiate(self, clause: _Clause, sigma: dict, cc: _CC):
        f, premises = clause.formula, []
        k = 0
        while True:
            match f:
                case Forall(x, _, b) if k < len(clause.pvars):
                    f = _nf(subst(b, x, cc.terms[sigma[clause.pvars[k]]]))
                    k += 1
                case Impl(a, b) if len(premises) < len(clause.premises):
                    premises.append(a)
                    f = b
                case _:
                    return premises, f

    def _inst_proof(self, clause: _Clause, sigma: dict, cc: _CC) -> Proof:
        p = clause.proof() if callable(clause.proof) else clause.proof
        k = n_prem = 0
        while k < len(clause.pvars) or n_prem < len(clause.premises):
            f = _holds(p)
            if isinstance(f, Forall):
                p = inst(p, cc.terms[sigma[clause.pvars[k]]])
                k += 1
            else:
                p = rule("mp", f.cons, p, cc.holds(cc.node(f.ante)))
                n_prem += 1
        return p

    def _instances(self, cc: _CC, clause: _Clause, goal_nodes: set) -> list:
        limit = 4 * self.bounds.max_instantiations
        out: list = []
        seen: set = set()

        def go(i: int, sigma: dict) -> None:
            if len(out) >= limit:
                self.stats.capped = True
                return
            if i < len(clause.premises) and i in clause.deferred:
                go(i + 1, sigma)
                return
            if i == len(clause.premises):
                key = tuple(sorted((v, cc.find(n)) for v, n in sigma.items()))
                if key not in seen:
                    seen.add(key)
                    out.extend(self._fill(cc, clause, sigma, goal_nodes))
                return
            for s in list(cc.ematch(clause.premises[i], cc.TRUE, sigma, clause.types)):
                go(i + 1, s)

        go(0, {})
        return out[:limit]

    def _fill(self, cc: _CC, clause: _Clause, sigma: dict, goal_nodes: set) -> list:
        free = [v for v in clause.pvars if v not in sigma]
        if not free:
            return [sigma]
        # bind the remaining variables through a conclusion subterm that already occurs
        out, seen = [], set()
        trigs = _triggers(clause.conclusion, set(clause.pvars)) or _triggers(
            clause.conclusion, set(free))
        for trig in trigs:
            hits = cc.candidates(trig, clause.types)
            for root in cc.roots():
                if hits is not None and root not in hits:
                    continue
                for s in cc.ematch(trig, root, sigma, clause.types):
                    key = tuple(cc.find(s[v]) for v in free)
                    if key not in seen:
                        seen.add(key)
                        out.append(s)
        if out:
            return out
        pools = []
        for v in free:
            pool = sorted(self._universe(cc, clause.types[v]),
                          key=lambda n: (n not in goal_nodes, n))
            if len(pool) > self.bounds.max_terms:
                self.stats.capped = True
                pool = pool[: self.bounds.max_terms]
            if not pool:
                return []
            pools.append(pool)
        return [{**sigma, **dict(zip(free, combo))} for combo in itertools.product(*pools)]


def builtin_decide(problem, depth: int = 3, max_instantiations: int = 64,
                   check: bool = True) -> BuiltinResult:
    """Try to prove ``problem``; a returned proof has passed :func:`replay`."""
    prover = _Prover(Bounds(depth, max_instantiations))
    scope = problem_scope(problem)
    try:
        proof = prover.prove(scope, problem.conjecture)
    except (HolTypeError, RecursionError) as e:
        return BuiltinResult(None, prover.stats, f"{type(e).__name__}: {e}")
    if proof is not None and check:
        try:
            replay(proof, problem)
        except ReplayError as e:
            return BuiltinResult(None, prover.stats, f"replay failed: {e}")
    return BuiltinResult(proof, prover.stats)
