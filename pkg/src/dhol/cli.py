"""Command-line driver: check, translate, prove and list obligations.

Exit status is 0 for accepted/proved, 1 for rejected, ill-typed or refuted,
and 2 for anything inconclusive or an operational error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, replace
from typing import Optional

from dhol.errors import DholError, ParseError, TranslationError
from dhol.kernel import CheckReport, Verdict, check_problem
from dhol.oracle import (
    ENV_COMMAND, OracleConfig, OracleVerdict, Status, TranslatingOracle, prove,
)
from dhol.tptp import emit_problem, emit_th0, parse_dhol
from dhol.translate import (
    AXIOM_SETS, translate_context, translate_obligation, translate_problem, translate_term,
    translate_theory,
)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2
COMMANDS = ("check", "translate", "prove", "obligations")


@dataclass(frozen=True)
class CliConfig:
    command: str
    input: str
    output: Optional[str] = None
    oracle: OracleConfig = OracleConfig()
    axiom_set: str = "appendix"
    skip_check: bool = False
    verbose: bool = False
    json: bool = False
    emit_dir: Optional[str] = None
    include_dirs: tuple = ()
    # extra chain entries tried first on the conjecture only, never on typing
    # obligations; an API hook for exercising the check-before-prove rule
    conjecture_oracles: tuple = ()

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.axiom_set not in AXIOM_SETS:
            raise ValueError(f"unknown axiom set {self.axiom_set!r}")


# --- report ----------------------------------------------------------------


@dataclass(frozen=True)
class ObligationRecord:
    seq: int
    provenance: str
    location: Optional[str]
    context: str
    formula: str
    status: str
    by: Optional[str] = None
    reason: Optional[str] = None
    elapsed: float = 0.0


@dataclass(frozen=True)
class Report:
    command: str
    input: str
    exit: int
    verdict: str
    reason: Optional[str] = None
    location: Optional[str] = None
    obligations: tuple = ()
    proof_status: Optional[str] = None
    proof_by: Optional[str] = None
    warnings: tuple = ()

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        d["obligations"] = tuple(ObligationRecord(**o) for o in d.get("obligations", ()))
        d["warnings"] = tuple(d.get("warnings", ()))
        return cls(**d)


def _records(rep: Optional[CheckReport]) -> tuple:
    if rep is None:
        return ()
    out = []
    for ob in rep.obligations:
        v = rep.discharged.get(ob.seq) or OracleVerdict.unknown("not-attempted")
        out.append(ObligationRecord(
            ob.seq, str(ob.provenance), ob.location, str(ob.context), str(ob.formula),
            v.status.value, v.by, v.reason, round(v.elapsed, 6)))
    return tuple(out)


def _check_exit(rep: CheckReport) -> int:
    match rep.verdict:
        case Verdict.ACCEPTED:
            return EXIT_OK
        case Verdict.REJECTED:
            return EXIT_FAIL
        case _:
            return EXIT_INCONCLUSIVE


# --- pipeline helpers ------------------------------------------------------


def _read(path: str) -> tuple:
    """Text and the include directories implied by ``path``."""
    if path == "-":
        return sys.stdin.read(), ()
    with open(path, encoding="utf-8") as fh:
        return fh.read(), (os.path.dirname(os.path.abspath(path)),)


def _parse(cfg: CliConfig):
    text, dirs = _read(cfg.input)
    return parse_dhol(text, list(cfg.include_dirs) + list(dirs))


def _check(cfg: CliConfig, problem, discharge: bool = True) -> CheckReport:
    oracle = TranslatingOracle(cfg.oracle, cfg.axiom_set) if discharge else None
    return check_problem(problem.theory, problem.conjecture, oracle,
                         problem.conjecture_name or "conjecture", problem.context)


def _print_obligations(rep: CheckReport, stream) -> None:
    for r in _records(rep):
        print(f"[{r.seq}] {r.provenance} at {r.location}", file=stream)
        print(f"    context: {r.context}", file=stream)
        print(f"    formula: {r.formula}", file=stream)
        status = r.status if r.reason is None else f"{r.status} ({r.reason})"
        print(f"    status:  {status}" + (f" by {r.by}" if r.by else ""), file=stream)


def _diagnose(rep: CheckReport, stream) -> None:
    if rep.verdict is Verdict.REJECTED:
        print(f"rejected at {rep.location}: {rep.reason}", file=stream)
    elif rep.verdict is Verdict.UNKNOWN:
        opened = rep.open_obligations()
        print(f"inconclusive: {len(opened)} obligation(s) not discharged", file=stream)
        for ob in opened:
            print(f"  [{ob.seq}] {ob.provenance} at {ob.location}: {ob.formula}", file=stream)


# --- commands --------------------------------------------------------------


def cmd_check(cfg: CliConfig, out=sys.stdout, err=sys.stderr) -> tuple:
    problem = _parse(cfg)
    rep = _check(cfg, problem)
    code = _check_exit(rep)
    if cfg.verbose:
        _print_obligations(rep, out)
    _diagnose(rep, err)
    if not cfg.json:
        print(rep.verdict.value, file=out)
    return code, Report("check", cfg.input, code, rep.verdict.value, rep.reason,
                        rep.location, _records(rep))


def cmd_translate(cfg: CliConfig, out=sys.stdout, err=sys.stderr) -> tuple:
    problem = _parse(cfg)
    # elaboration fills implicit arguments and equality types either way;
    # --skip-check only stops undischarged obligations from blocking output
    rep = _check(cfg, problem, discharge=not cfg.skip_check)
    if rep.verdict is Verdict.REJECTED or (rep.verdict is Verdict.UNKNOWN and not cfg.skip_check):
        _diagnose(rep, err)
        code = _check_exit(rep)
        return code, Report("translate", cfg.input, code, rep.verdict.value, rep.reason,
                            rep.location, _records(rep))
    hol = translate_theory(rep.theory, cfg.axiom_set)
    ctx = translate_context(rep.context) if rep.context is not None else None
    conj = translate_term(rep.conjecture) if rep.conjecture is not None else None
    text = emit_th0(hol, conj, ctx, problem.conjecture_name or "goal")
    if cfg.output and cfg.output != "-":
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif not cfg.json:
        out.write(text)
    return EXIT_OK, Report("translate", cfg.input, EXIT_OK, rep.verdict.value,
                           obligations=_records(rep))


def cmd_prove(cfg: CliConfig, out=sys.stdout, err=sys.stderr) -> tuple:
    """Type-check first; only a well-typed conjecture reaches the prover."""
    problem = _parse(cfg)
    if problem.conjecture is None:
        print("error: input has no conjecture", file=err)
        return EXIT_INCONCLUSIVE, Report("prove", cfg.input, EXIT_INCONCLUSIVE, "error",
                                         "input has no conjecture")
    name = problem.conjecture_name or "conjecture"
    rep = _check(cfg, problem)
    opened = rep.open_obligations()
    if rep.verdict is Verdict.REJECTED or any(ob.location == name for ob in opened):
        # an undischarged typing obligation of the conjecture means we cannot
        # show it is well-typed, so proving its translation would be unsound
        _diagnose(rep, err)
        verdict = "rejected" if rep.verdict is Verdict.REJECTED else "ill-typed"
        if not cfg.json:
            print(verdict, file=out)
        return EXIT_FAIL, Report("prove", cfg.input, EXIT_FAIL, verdict, rep.reason,
                                 rep.location or name, _records(rep))
    if rep.verdict is Verdict.UNKNOWN:
        _diagnose(rep, err)
        if not cfg.json:
            print("unknown", file=out)
        return EXIT_INCONCLUSIVE, Report("prove", cfg.input, EXIT_INCONCLUSIVE, "unknown",
                                         "theory has undischarged obligations", None,
                                         _records(rep))
    hp = translate_problem(rep.theory, rep.conjecture, rep.context, cfg.axiom_set, name)
    chain = tuple(cfg.conjecture_oracles) + tuple(cfg.oracle.chain)
    v = prove(hp, replace(cfg.oracle, chain=chain))
    warnings = ()
    if v.status is Status.UNKNOWN and not _has_external(cfg.oracle):
        warnings = (f"builtin prover gave up; configure an external prover with --oracle "
                    f"or ${ENV_COMMAND}",)
        print("warning: " + warnings[0], file=err)
    code = {Status.PROVED: EXIT_OK, Status.REFUTED: EXIT_FAIL}.get(v.status, EXIT_INCONCLUSIVE)
    if not cfg.json:
        print(str(v) if v.status is not Status.PROVED else f"proved by {v.by}", file=out)
    return code, Report("prove", cfg.input, code, v.status.value, v.reason, name,
                        _records(rep), v.status.value, v.by, warnings)


def _has_external(oc: OracleConfig) -> bool:
    return "external" in oc.chain and oc.external_command() is not None


def cmd_obligations(cfg: CliConfig, out=sys.stdout, err=sys.stderr) -> tuple:
    problem = _parse(cfg)
    rep = _check(cfg, problem)
    if not cfg.json:
        _print_obligations(rep, out)
    if cfg.emit_dir:
        os.makedirs(cfg.emit_dir, exist_ok=True)
        for ob in rep.obligations:
            hp = translate_obligation(ob, cfg.axiom_set)
            path = os.path.join(cfg.emit_dir, f"{hp.name}.p")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(emit_problem(hp))
    _diagnose(rep, err)
    code = _check_exit(rep)
    return code, Report("obligations", cfg.input, code, rep.verdict.value, rep.reason,
                        rep.location, _records(rep))


_COMMANDS = {"check": cmd_check, "translate": cmd_translate, "prove": cmd_prove,
             "obligations": cmd_obligations}


def run(cfg: CliConfig, out=None, err=None) -> tuple:
    """Run one command, turning operational failures into exit status 2."""
    # resolved late so redirected streams are honoured
    out, err = out or sys.stdout, err or sys.stderr
    try:
        code, report = _COMMANDS[cfg.command](cfg, out, err)
    except ParseError as e:
        print(f"parse error: {e}", file=err)
        code, report = EXIT_INCONCLUSIVE, Report(cfg.command, cfg.input, 2, "error", str(e))
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: {e}", file=err)
        code, report = EXIT_INCONCLUSIVE, Report(cfg.command, cfg.input, 2, "error", str(e))
    except (TranslationError, DholError) as e:
        print(f"error: {e}", file=err)
        code, report = EXIT_INCONCLUSIVE, Report(cfg.command, cfg.input, 2, "error", str(e))
    if cfg.json:
        print(report.to_json(), file=out)
    return code, report


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dhol", description="Type-check, translate and prove DHOL problems in TPTP syntax.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("check", "type-check a problem"),
                        ("translate", "write the HOL translation as TH0"),
                        ("prove", "type-check, then prove the conjecture"),
                        ("obligations", "list the proof obligations of type checking")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", help="problem file, or - for stdin")
        p.add_argument("--oracle", metavar="CMD-TEMPLATE",
                       help="external TH0 prover command; {file} and {timeout} are "
                            f"substituted (default: ${ENV_COMMAND})")
        p.add_argument("--timeout", type=float, default=60.0, metavar="SECS",
                       help="per-call prover timeout")
        p.add_argument("--axiom-set", choices=AXIOM_SETS, default="appendix",
                       help="PER axioms generated for each type constructor")
        p.add_argument("--keep-temp", metavar="DIR", nargs="?", const=".",
                       help="keep TH0 files sent to the external prover")
        p.add_argument("--json", action="store_true", help="print a JSON report")
        p.add_argument("-v", "--verbose", action="store_true", help="list obligations")
        p.add_argument("-I", "--include", action="append", default=[], metavar="DIR",
                       help="directory searched by include()")
        p.add_argument("--depth", type=int, default=3, help="builtin prover depth")
        p.add_argument("--max-instantiations", type=int, default=64,
                       help="builtin prover instantiation budget")
        if name == "translate":
            p.add_argument("-o", "--output", metavar="PATH", help="output file (default stdout)")
            p.add_argument("--skip-check", action="store_true",
                           help="translate even if obligations remain undischarged")
        if name == "obligations":
            p.add_argument("--emit-dir", metavar="DIR",
                           help="write one TH0 file per obligation")
    return ap


def config_from_args(ns: argparse.Namespace) -> CliConfig:
    command = ns.oracle or os.environ.get(ENV_COMMAND) or None
    chain = ("builtin", "external") if command else ("builtin",)
    oracle = OracleConfig(chain=chain, timeout=ns.timeout, command=command, depth=ns.depth,
                          max_instantiations=ns.max_instantiations, keep_temp=ns.keep_temp)
    return CliConfig(
        command=ns.command, input=ns.input, output=getattr(ns, "output", None),
        oracle=oracle, axiom_set=ns.axiom_set, skip_check=getattr(ns, "skip_check", False),
        verbose=ns.verbose, json=ns.json, emit_dir=getattr(ns, "emit_dir", None),
        include_dirs=tuple(ns.include))


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValueError as e:
        ap.error(str(e))
    code, _ = run(cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
