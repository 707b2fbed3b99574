import pytest
from hypothesis import given, settings

from dhol.errors import HolTypeError, TypeCheckError
from dhol.hol import (
    Arrow, Base, HolAxiom, HolConstDecl, HolContext, HolTheory, HolTypeDecl, HolVar,
    arrows, beta_eta_normalize, hol_check_context, hol_check_theory, hol_infer,
)
from dhol.syntax import App, Bool, Const, Context, Eq, Forall, Impl, Lam, Var, alpha_eq
from dhol.translate import translate_term, translate_theory
from dhol.kernel import check_theory, elaborate
from strategies import random_theory, seeds

obj, mor = Base("obj"), Base("mor")
cat = HolTheory((HolTypeDecl("obj"), HolTypeDecl("mor"),
                 HolConstDecl("id", Arrow(obj, mor)),
                 HolConstDecl("u", obj)))
x = Var("x")


def test_infer_application():
    ctx = HolContext((HolVar("x", obj),))
    assert hol_infer(ctx, App(Const("id"), x), cat) == mor


def test_infer_lambda():
    assert hol_infer(HolContext(), Lam("x", Bool, x), cat) == Arrow(Bool, Bool)


def test_infer_rejects_bad_argument():
    ident = Lam("x", Bool, x)
    with pytest.raises(HolTypeError, match="bool"):
        hol_infer(HolContext(), App(ident, ident), cat)


def test_infer_unbound_name():
    with pytest.raises(HolTypeError):
        hol_infer(HolContext(), Const("nope"), cat)


def test_infer_equality_and_implication():
    f = Impl(Eq(obj, Const("u"), Const("u")), Forall("x", obj, Eq(obj, x, x)))
    assert hol_infer(HolContext(), f, cat) == Bool


def test_normalize_beta():
    assert beta_eta_normalize(App(Lam("x", Bool, x), Const("c"))) == Const("c")


def test_normalize_eta():
    f = Var("f")
    assert beta_eta_normalize(Lam("x", obj, App(f, x))) == f
    # not an eta redex: the bound variable occurs in the function part
    t = Lam("x", obj, App(App(Var("g"), x), x))
    assert beta_eta_normalize(t) == t


def test_normalize_two_steps():
    t = App(App(Lam("f", Arrow(obj, mor), Var("f")), Const("id")), Const("u"))
    assert beta_eta_normalize(t) == App(Const("id"), Const("u"))


def test_check_theory_examples():
    assert hol_check_theory(HolTheory()).ok
    assert hol_check_theory(cat).ok
    bad = cat.extend(HolAxiom("bad", Eq(Bool, Const("id"), Const("id"))))
    v = hol_check_theory(bad)
    assert not v.ok and v.location == "bad"


def test_check_theory_rejects_unknown_base_type():
    v = hol_check_theory(HolTheory((HolConstDecl("c", Base("nat")),)))
    assert not v.ok


def test_check_context():
    ctx = HolContext((HolVar("x", obj),))
    assert hol_check_context(ctx, cat).ok
    assert not hol_check_context(HolContext((HolVar("x", Base("nat")),)), cat).ok


def test_translated_category_theory_is_accepted(category):
    rep = check_theory(category)
    assert hol_check_theory(translate_theory(rep.theory).theory).ok


# --- properties over translated random terms -------------------------------


def _hol_term(seed):
    th, g = random_theory(seed)
    ty = g.type(g.scope, 2)
    t = g.term(g.scope, ty, 3)
    if t is None:
        return None
    rep = check_theory(th)
    if rep.theory is None or len(rep.theory) != len(th):
        return None
    try:
        t2, _, _ = elaborate(rep.theory, Context(), t)
    except TypeCheckError:
        return None
    return translate_theory(rep.theory).theory, translate_term(t2)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_normalize_idempotent_and_type_preserving(seed):
    got = _hol_term(seed)
    if got is None:
        return
    theory, t = got
    ty = hol_infer(HolContext(), t, theory)
    n = beta_eta_normalize(t)
    assert alpha_eq(beta_eta_normalize(n), n)
    assert hol_infer(HolContext(), n, theory) == ty


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_infer_is_deterministic(seed):
    got = _hol_term(seed)
    if got is None:
        return
    theory, t = got
    assert hol_infer(HolContext(), t, theory) == hol_infer(HolContext(), t, theory)


def test_arrows_right_associates():
    assert arrows(obj, obj, mor) == Arrow(obj, Arrow(obj, mor))
