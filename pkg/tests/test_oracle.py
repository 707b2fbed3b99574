import stat
import time

import pytest
from hypothesis import given, settings

from dhol.builtin import ReplayError, builtin_decide, replay
from dhol.errors import TypeCheckError
from dhol.hol import (
    Base, HolAssumption, HolConstDecl, HolContext, HolTheory, HolTypeDecl, HolVar,
)
from dhol.kernel import check_problem, check_theory, elaborate
from dhol.oracle import (
    ENV_COMMAND, GAVE_UP, NOT_ATTEMPTED, PARSE_FAILURE, TIMEOUT, AcceptAll, OracleConfig,
    OracleVerdict, Status, TranslatingOracle, parse_szs, prove, run_external,
)
from dhol.syntax import (
    App, BaseApp, Const, Context, Eq, Falsity, Forall, Truth, Var, VarDecl,
)
from dhol.translate import (
    HolProblem, translate_obligation, translate_problem, translate_term, translate_theory,
)
from conftest import load
from strategies import GenConfig, random_theory, seeds

obj = BaseApp("obj")
x = Var("x")


@pytest.fixture(scope="module")
def cat():
    return check_theory(load("category.p").theory).theory


def builtin_proves(problem) -> bool:
    res = builtin_decide(problem)
    if res.proof is not None:
        replay(res.proof, problem)
    return res.proof is not None


# --- builtin examples ------------------------------------------------------


def test_identity_is_self_equal_in_context(cat):
    idx = App(Const("id"), x)
    prob = translate_problem(cat, Eq(BaseApp("mor", (x, x)), idx, idx),
                             Context((VarDecl("x", obj),)))
    v = prove(prob)
    assert v.status is Status.PROVED and v.by == "builtin"


def test_unrelated_objects_stay_unknown():
    rep = check_theory(load("undecidable.p").theory)
    v = prove(translate_obligation(rep.obligations[0]))
    assert v.status is Status.UNKNOWN and v.reason == GAVE_UP


def test_truth_is_proved():
    assert prove(translate_problem(check_theory(load("category.p").theory).theory,
                                   Truth())).status is Status.PROVED


def test_dependent_implication_obligations_by_symmetry():
    p = load("depimpl.p")
    rep = check_problem(p.theory, p.conjecture)
    assert len(rep.obligations) == 2
    for ob in rep.obligations:
        assert builtin_proves(translate_obligation(ob))


def test_reflexivity_and_transitivity():
    a = Base("a")
    th = HolTheory((HolTypeDecl("a"), HolConstDecl("s", a)))
    s = Const("s")
    assert builtin_proves(HolProblem(th, HolContext(), Eq(a, s, s)))
    ctx = HolContext((HolVar("p", a), HolVar("q", a), HolVar("r", a),
                      HolAssumption("pq", Eq(a, Var("p"), Var("q"))),
                      HolAssumption("qr", Eq(a, Var("q"), Var("r")))))
    assert builtin_proves(HolProblem(th, ctx, Eq(a, Var("p"), Var("r"))))
    assert not builtin_proves(HolProblem(th, ctx, Eq(a, Var("p"), s)))


def test_extra_assumptions_keep_obligation_proved():
    p = load("depimpl.p")
    ob = check_problem(p.theory, p.conjecture).obligations[0]
    prob = translate_obligation(ob)
    X, Y = Var("X"), Var("Y")
    noise = (HolAssumption("n1", Eq(Base("obj"), X, X)),
             HolAssumption("n2", Forall("z", Base("obj"), App(App(Const("obj_per"), Var("z")), Y))))
    bigger = HolProblem(prob.theory, HolContext(prob.context.entries + noise), prob.conjecture)
    assert builtin_proves(prob) and builtin_proves(bigger)


def test_falsity_is_not_proved():
    assert builtin_decide(HolProblem(HolTheory(), HolContext(), Falsity())).proof is None


def test_replay_rejects_proof_of_another_goal():
    a = Base("a")
    th = HolTheory((HolTypeDecl("a"), HolConstDecl("s", a), HolConstDecl("t", a)))
    good = HolProblem(th, HolContext(), Eq(a, Const("s"), Const("s")))
    proof = builtin_decide(good).proof
    other = HolProblem(th, HolContext(), Eq(a, Const("t"), Const("t")))
    with pytest.raises(ReplayError):
        replay(proof, other)


def test_replay_rejects_missing_hypothesis():
    a = Base("a")
    th = HolTheory((HolTypeDecl("a"), HolConstDecl("s", a), HolConstDecl("t", a)))
    goal = Eq(a, Const("s"), Const("t"))
    ctx = HolContext((HolAssumption("st", goal),))
    proof = builtin_decide(HolProblem(th, ctx, goal)).proof
    with pytest.raises(ReplayError):
        replay(proof, HolProblem(th, HolContext(), goal))


# --- SZS parsing -----------------------------------------------------------


@pytest.mark.parametrize("status, want, reason", [
    ("Theorem", Status.PROVED, None),
    ("Unsatisfiable", Status.PROVED, None),
    ("CounterSatisfiable", Status.REFUTED, None),
    ("Satisfiable", Status.REFUTED, None),
    ("Timeout", Status.UNKNOWN, TIMEOUT),
    ("GaveUp", Status.UNKNOWN, GAVE_UP),
    ("Unknown", Status.UNKNOWN, GAVE_UP),
])
def test_szs_table(status, want, reason):
    v = parse_szs(f"% some banner\n% SZS status {status} for problem.p\n", "leo")
    assert v.status is want and v.reason == reason and v.by == "leo"


def test_szs_missing_line():
    v = parse_szs("segmentation fault\n")
    assert v.status is Status.UNKNOWN and v.reason == PARSE_FAILURE
    assert "segmentation" in v.diagnostics


# --- external driver -------------------------------------------------------


def _script(tmp_path, body: str) -> str:
    path = tmp_path / "fake_atp.sh"
    path.write_text("#!/bin/sh\n" + body + "\n")
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


@pytest.fixture
def problem():
    return translate_problem(check_theory(load("category.p").theory).theory, Truth())


def test_external_proved(tmp_path, problem):
    # the script sees a TH0 file and the timeout in seconds
    atp = _script(tmp_path, 'grep -q "thf(" "$1" && [ "$2" = 7 ] && echo "% SZS status Theorem"')
    v = run_external(problem, atp + " {file} {timeout}", 7.0)
    assert v.status is Status.PROVED and v.by == atp


def test_external_file_placeholder_is_optional(tmp_path, problem):
    atp = _script(tmp_path, 'test -f "$1" && echo "SZS status CounterSatisfiable"')
    assert run_external(problem, atp, 5.0).status is Status.REFUTED


def test_external_timeout(tmp_path, problem):
    atp = _script(tmp_path, "sleep 5")
    t0 = time.perf_counter()
    v = run_external(problem, atp, 0.3)
    assert v.status is Status.UNKNOWN and v.reason == TIMEOUT
    assert time.perf_counter() - t0 < 4


def test_external_missing_binary(problem):
    v = run_external(problem, "/nonexistent/prover {file}", 5.0)
    assert v.status is Status.UNKNOWN and v.reason == GAVE_UP
    assert "could not run" in v.diagnostics


def test_external_keeps_problem_file_on_request(tmp_path, problem):
    atp = _script(tmp_path, 'echo "SZS status Theorem"')
    keep = tmp_path / "kept"
    run_external(problem, atp, 5.0, keep_temp=str(keep))
    files = list(keep.glob("*.p"))
    assert len(files) == 1 and "thf(" in files[0].read_text()


def test_external_without_command_is_not_attempted(monkeypatch, problem):
    monkeypatch.delenv(ENV_COMMAND, raising=False)
    v = prove(problem, OracleConfig(chain=("external",)))
    assert v.status is Status.UNKNOWN and v.reason == NOT_ATTEMPTED


def test_external_command_from_environment(monkeypatch, tmp_path, problem):
    atp = _script(tmp_path, 'echo "SZS status Theorem"')
    monkeypatch.setenv(ENV_COMMAND, atp)
    assert OracleConfig().external_command() == atp
    assert prove(problem, OracleConfig(chain=("external",))).by == atp
    assert OracleConfig(command="other").external_command() == "other"


# --- chain and configuration -----------------------------------------------


def _fixed(verdict):
    calls = []

    def oracle(problem, cfg):
        calls.append(problem)
        return verdict
    oracle.calls = calls
    return oracle


def test_chain_first_decisive_wins(problem):
    first = _fixed(OracleVerdict.unknown(TIMEOUT, "a"))
    second = _fixed(OracleVerdict.refuted("b"))
    third = _fixed(OracleVerdict.proved("c"))
    v = prove(problem, OracleConfig(chain=(first, second, third)))
    assert v.status is Status.REFUTED and v.by == "b"
    assert len(first.calls) == 1 and third.calls == []


def test_chain_all_unknown_keeps_last_reason(problem):
    chain = (_fixed(OracleVerdict.unknown(TIMEOUT)), _fixed(OracleVerdict.unknown(GAVE_UP)))
    v = prove(problem, OracleConfig(chain=chain))
    assert v.status is Status.UNKNOWN and v.reason == GAVE_UP


def test_chain_rejects_ill_formed_theory():
    bad = HolProblem(HolTheory((HolConstDecl("c", Base("nope")),)), HolContext(), Truth())
    v = prove(bad, OracleConfig(chain=("accept-all",)))
    assert v.status is Status.UNKNOWN and "rejected" in v.diagnostics


@pytest.mark.parametrize("kw", [{"chain": ()}, {"timeout": 0}, {"timeout": -1.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OracleConfig(**kw)


def test_unknown_chain_member(problem):
    with pytest.raises(ValueError, match="unknown oracle"):
        prove(problem, OracleConfig(chain=("vampire-9000",)))


def test_config_defaults():
    cfg = OracleConfig()
    assert cfg.chain == ("builtin",)
    assert (cfg.depth, cfg.max_instantiations) == (3, 64)


def test_verdict_rendering():
    assert str(OracleVerdict.unknown(TIMEOUT)) == "unknown (timeout)"
    assert str(OracleVerdict.proved("builtin", 0.5)) == "proved by builtin in 0.500s"
    assert OracleVerdict.refuted("x").decisive and not OracleVerdict.unknown(GAVE_UP).decisive


def test_kernel_adapters():
    p = load("depimpl.p")
    rep = check_problem(p.theory, p.conjecture, TranslatingOracle())
    assert rep.accepted
    assert all(v.status is Status.PROVED for v in rep.discharged.values())
    rep = check_theory(load("undecidable.p").theory, AcceptAll())
    assert rep.accepted


# --- properties over random problems ---------------------------------------


def _random_problem(seed, n_hyps):
    """A translated random goal with ``n_hyps`` translated random assumptions."""
    th, g = random_theory(seed, GenConfig(annotate_eq=True))
    rep = check_theory(th)
    if rep.theory is None or len(rep.theory) != len(th):
        return None
    forms = []
    for _ in range(1 + n_hyps):
        try:
            f, _, _ = elaborate(rep.theory, Context(), g.formula(g.scope, 3))
        except TypeCheckError:
            return None
        forms.append(translate_term(f))
    hol = translate_theory(rep.theory).theory
    hyps = tuple(HolAssumption(f"h{i}", f) for i, f in enumerate(forms[1:]))
    return hol, hyps, forms[0]


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_builtin_proofs_replay_and_never_refute(seed):
    got = _random_problem(seed, 1)
    if got is None:
        return
    hol, hyps, goal = got
    prob = HolProblem(hol, HolContext(hyps), goal)
    v = prove(prob)
    assert v.status is not Status.REFUTED
    if v.status is Status.PROVED:
        replay(v.proof, prob)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_builtin_is_monotone_in_assumptions(seed):
    got = _random_problem(seed, 2)
    if got is None:
        return
    hol, hyps, goal = got
    fewer = builtin_decide(HolProblem(hol, HolContext(hyps[:1]), goal))
    if fewer.proof is None:
        return
    more = builtin_decide(HolProblem(hol, HolContext(hyps), goal))
    # extra assumptions can use up the search budget before the old proof is
    # found again; that is reported as a capped search, never silently
    assert more.proof is not None or more.stats.capped, (fewer.stats, more.stats)
