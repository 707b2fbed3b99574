import random

from hypothesis import given, settings

from dhol.syntax import (
    And, BaseApp, Bool, Const, Eq, Exists, Falsity, Forall, Impl, Lam, Not, Or, Pi,
    Truth, Var, alpha_eq, arrow, canonical, expand_sugar, free_vars, show, subst,
)
from strategies import GenConfig, random_theory, seeds

obj = BaseApp("obj")


def mor(a, b):
    return BaseApp("mor", (a, b))


x, y, u, m = Var("x"), Var("y"), Var("u"), Var("m")


# --- subst -----------------------------------------------------------------


def test_subst_variable():
    assert subst(x, "x", u) == u


def test_subst_stops_at_shadowing_binder():
    t = Lam("x", obj, x)
    assert subst(t, "x", u) == t


def test_subst_reaches_type_annotations():
    t = Lam("m", mor(x, x), m)
    assert subst(t, "x", u) == Lam("m", mor(u, u), m)


def test_subst_renames_to_avoid_capture():
    out = subst(Lam("y", obj, x), "x", y)
    assert isinstance(out, Lam) and out.var != "y"
    assert out.body == y
    assert alpha_eq(out, Lam("z", obj, y))


def test_subst_in_pi_codomain_and_eq_annotation():
    ty = Pi("m", mor(x, y), mor(x, x))
    assert subst(ty, "x", u) == Pi("m", mor(u, y), mor(u, u))
    e = Eq(mor(x, x), Var("f"), Var("g"))
    assert subst(e, "x", u).at == mor(u, u)


# --- alpha_eq / free_vars --------------------------------------------------


def test_alpha_eq_examples():
    assert alpha_eq(Lam("x", obj, x), Lam("y", obj, y))
    assert not alpha_eq(Lam("x", obj, x), Lam("x", obj, Const("c")))
    assert alpha_eq(Pi("x", obj, mor(x, x)), Pi("y", obj, mor(y, y)))


def test_alpha_eq_distinguishes_free_from_bound():
    assert not alpha_eq(Lam("x", obj, y), Lam("y", obj, y))


def test_free_vars_examples():
    assert free_vars(Lam("x", mor(u, u), x)) == {"u"}
    assert free_vars(Eq(obj, x, y)) == {"x", "y"}
    assert free_vars(Const("id")) == set()


def test_canonical_is_alpha_invariant():
    a = Forall("x", obj, Exists("y", obj, Eq(obj, x, y)))
    b = Forall("p", obj, Exists("q", obj, Eq(obj, Var("p"), Var("q"))))
    assert canonical(a) == canonical(b)


# --- sugar -----------------------------------------------------------------

F, G = Var("F"), Var("G")


def test_expand_and():
    assert expand_sugar(And(F, G)) == Not(Impl(F, Not(G)))


def test_expand_or():
    assert expand_sugar(Or(F, G)) == Impl(Not(F), G)


def test_expand_forall():
    out = expand_sugar(Forall("x", Bool, x))
    assert out == Eq(arrow(Bool, Bool), Lam("x", Bool, x), Lam("x", Bool, Truth()))


def test_expand_truth_falsity_not_exists():
    ident = Lam("x", Bool, x)
    assert expand_sugar(Truth()) == Eq(arrow(Bool, Bool), ident, ident)
    assert expand_sugar(Falsity()) == Forall("x", Bool, x)
    assert expand_sugar(Not(F)) == Impl(F, Falsity())
    assert expand_sugar(Exists("x", obj, F)) == Not(Forall("x", obj, Not(F)))


def test_deep_expansion_leaves_only_core_syntax():
    out = expand_sugar(Exists("x", obj, And(Eq(obj, x, x), Truth())), deep=True)
    assert "∀" not in show(out) and "∧" not in show(out) and "¬" not in show(out)


def test_arrow_prints_without_binder():
    assert show(Pi("x", obj, obj)) == "obj → obj"
    assert show(Pi("x", obj, mor(x, x))) == "Πx:obj. mor x x"


# --- properties ------------------------------------------------------------


def _random_term(seed):
    cfg = GenConfig(binder_pool=("x", "y", "z"), psub=True, annotate_eq=True)
    th, g = random_theory(seed, cfg)
    g.context(3)  # brings context variables into scope
    scope = g.scope
    for name in ("x", "y", "z"):
        scope = scope.extend(Var(name), g.type(scope, 1))
    return g.formula(scope, 4), g, scope


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_subst_identity_is_alpha_equal(seed):
    t, _, _ = _random_term(seed)
    for v in ("x", "y", "z"):
        assert alpha_eq(subst(t, v, Var(v)), t)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_subst_free_vars_bound(seed):
    t, g, scope = _random_term(seed)
    rng = random.Random(seed)
    u = g.term(scope, g.type(scope, 1), 2) or Var("y")
    v = rng.choice(["x", "y", "z"])
    assert free_vars(subst(t, v, u)) <= (free_vars(t) - {v}) | free_vars(u)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_subst_commutes_with_expand_sugar(seed):
    t, g, scope = _random_term(seed)
    u = g.term(scope, g.type(scope, 1), 2) or Var("y")
    for v in ("x", "y"):
        a = subst(expand_sugar(t, deep=True), v, expand_sugar(u, deep=True))
        b = expand_sugar(subst(t, v, u), deep=True)
        assert alpha_eq(a, b)


@settings(max_examples=100, deadline=None)
@given(seeds, seeds, seeds)
def test_alpha_eq_is_an_equivalence(s1, s2, s3):
    ts = [_random_term(s)[0] for s in (s1, s2, s3)]
    # renamed copies make the relation non-trivially exercised
    ts += [subst(t, "x", Var("x")) for t in ts]
    for a in ts:
        assert alpha_eq(a, a)
        for b in ts:
            assert alpha_eq(a, b) == alpha_eq(b, a)
            for c in ts:
                if alpha_eq(a, b) and alpha_eq(b, c):
                    assert alpha_eq(a, c)
