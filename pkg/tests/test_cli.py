import io
import json
import sys

import pytest

from dhol.cli import CliConfig, Report, build_parser, config_from_args, main, run
from dhol.oracle import OracleConfig
from dhol.tptp import reparse_th0
from conftest import CORPUS, GOLDEN

sys.path.insert(0, str(CORPUS.parent / "scripts"))
from regen_goldens import GOLDENS  # noqa: E402


def invoke(command, name, **kw):
    out, err = io.StringIO(), io.StringIO()
    src = name if name == "-" or "/" in name else str(CORPUS / name)
    code, report = run(CliConfig(command, src, **kw), out, err)
    return code, report, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name, code", [
    ("category.p", 0), ("depimpl.p", 0), ("isomorphisms.p", 0), ("simple.p", 0),
    ("truth.p", 0), ("noninj.p", 2), ("undecidable.p", 2),
])
def test_check_exit_codes(name, code):
    got, report, out, _ = invoke("check", name)
    assert got == code == report.exit
    assert out.strip() == report.verdict


def test_undecidable_reports_the_open_obligation():
    code, report, _, err = invoke("check", "undecidable.p")
    assert code == 2
    assert [ob.provenance for ob in report.obligations] == ["BaseArgEq(mor, 1)"]
    assert "v =[obj] v2" in err


def test_parse_error_exits_2(tmp_path):
    bad = tmp_path / "bad.p"
    bad.write_text("thf(a, axiom, (X = ).")
    code, report, _, err = invoke("check", str(bad))
    assert code == 2 and report.verdict == "error"
    assert err.startswith("parse error")


def test_missing_file_exits_2(tmp_path):
    code, _, _, err = invoke("check", str(tmp_path / "absent.p"))
    assert code == 2 and "error" in err


@pytest.mark.parametrize("name, code, verdict", [
    ("truth.p", 0, "proved"),
    ("simple.p", 0, "proved"),
    ("depimpl.p", 0, "proved"),
    ("noninj.p", 1, "ill-typed"),
])
def test_prove_exit_codes(name, code, verdict):
    got, report, _, _ = invoke("prove", name)
    assert got == code
    assert report.verdict == verdict


def test_prove_without_conjecture_is_an_error():
    code, report, _, err = invoke("prove", "category.p")
    assert code == 2 and "no conjecture" in err
    assert report.verdict == "error"


def test_prove_warns_when_builtin_gives_up():
    code, report, out, err = invoke("prove", "isomorphisms.p")
    assert code == 2
    assert out.strip().startswith("unknown")
    assert "warning: builtin prover gave up" in err
    assert report.warnings


def test_prove_uses_external_command(tmp_path):
    script = tmp_path / "atp.sh"
    script.write_text("#!/bin/sh\necho '% SZS status Theorem for x'\n")
    script.chmod(0o755)
    oc = OracleConfig(chain=("builtin", "external"), command=f"{script} {{file}}")
    code, report, out, err = invoke("prove", "isomorphisms.p", oracle=oc)
    assert code == 0 and report.proof_by == str(script)
    assert "warning" not in err


def test_prove_refuted_exits_1(tmp_path):
    script = tmp_path / "atp.sh"
    script.write_text("#!/bin/sh\necho '% SZS status CounterSatisfiable for x'\n")
    script.chmod(0o755)
    oc = OracleConfig(chain=("builtin", "external"), command=f"{script} {{file}}")
    code, report, _, _ = invoke("prove", "isomorphisms.p", oracle=oc)
    assert code == 1 and report.proof_status == "refuted"


def test_refuted_typing_obligation_rejects(tmp_path):
    script = tmp_path / "atp.sh"
    script.write_text("#!/bin/sh\necho '% SZS status CounterSatisfiable for x'\n")
    script.chmod(0o755)
    oc = OracleConfig(chain=("external",), command=f"{script} {{file}}")
    code, report, _, _ = invoke("prove", "isomorphisms.p", oracle=oc)
    assert code == 1 and report.verdict == "rejected"
    assert report.proof_status is None


def test_translate_matches_goldens():
    for golden, source, axiom_set in GOLDENS:
        code, _, out, _ = invoke("translate", source, axiom_set=axiom_set)
        assert code == 0
        assert out == (GOLDEN / golden).read_text(encoding="utf-8"), golden


def test_translate_to_file(tmp_path):
    target = tmp_path / "out.p"
    code, _, out, _ = invoke("translate", "category.p", output=str(target))
    assert code == 0 and out == ""
    assert target.read_text() == (GOLDEN / "category.p").read_text()
    assert reparse_th0(target.read_text()).theory is not None


def test_translate_refuses_undischarged_unless_skipped():
    code, _, out, _ = invoke("translate", "undecidable.p")
    assert code == 2 and out == ""
    code, _, out, _ = invoke("translate", "undecidable.p", skip_check=True)
    assert code == 0 and "thf(" in out


def test_translate_ill_typed_exits_1(tmp_path):
    bad = tmp_path / "bad.p"
    bad.write_text("thf(o, type, obj: $tType).\nthf(a, axiom, obj).")
    code, _, out, _ = invoke("translate", str(bad))
    assert code == 1 and out == ""


def test_obligations_listing():
    _, report, out, _ = invoke("obligations", "isomorphisms.p")
    assert [ob.provenance for ob in report.obligations] == ["PsubIntro"]
    assert "PsubIntro at inv_id" in out
    _, report, out, _ = invoke("obligations", "simple.p")
    assert report.obligations == () and out == ""


def test_obligations_emit_dir(tmp_path):
    code, report, _, _ = invoke("obligations", "undecidable.p", emit_dir=str(tmp_path))
    assert code == 2
    files = sorted(tmp_path.glob("*.p"))
    assert len(files) == len(report.obligations) == 1
    back = reparse_th0(files[0].read_text())
    assert back.conjecture is not None


def test_stdin_input(monkeypatch):
    text = (CORPUS / "depimpl.p").read_text()
    monkeypatch.setattr(sys, "stdin", io.StringIO(text))
    code, _, _, _ = invoke("check", "-", include_dirs=(str(CORPUS),))
    assert code == 0


def test_json_report_round_trips():
    code, report, out, _ = invoke("check", "undecidable.p", json=True)
    parsed = Report.from_json(out)
    assert parsed == report
    assert json.loads(out)["exit"] == code == 2


def test_main_end_to_end(capsys, tmp_path):
    assert main(["check", str(CORPUS / "category.p")]) == 0
    assert capsys.readouterr().out.strip() == "accepted"
    assert main(["prove", str(CORPUS / "noninj.p")]) == 1
    assert main(["translate", str(CORPUS / "truth.p"), "-o", str(tmp_path / "t.p")]) == 0
    assert (tmp_path / "t.p").read_text() == (GOLDEN / "truth.p").read_text()


def test_main_json(capsys):
    assert main(["obligations", str(CORPUS / "isomorphisms.p"), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["obligations"][0]["provenance"] == "PsubIntro"


def test_argument_errors_exit_2():
    with pytest.raises(SystemExit) as ei:
        main(["check"])
    assert ei.value.code == 2
    with pytest.raises(SystemExit):
        main(["check", "x.p", "--axiom-set", "bogus"])


def test_config_from_args_reads_env(monkeypatch):
    monkeypatch.setenv("DHOL_ATP", "eprover {file}")
    ns = build_parser().parse_args(["prove", "x.p", "--timeout", "5", "--axiom-set", "minimal"])
    cfg = config_from_args(ns)
    assert cfg.oracle.chain == ("builtin", "external")
    assert cfg.oracle.command == "eprover {file}" and cfg.oracle.timeout == 5
    assert cfg.axiom_set == "minimal"
    monkeypatch.delenv("DHOL_ATP")
    cfg = config_from_args(build_parser().parse_args(["check", "x.p"]))
    assert cfg.oracle.chain == ("builtin",)


def test_config_validation():
    with pytest.raises(ValueError):
        CliConfig("frobnicate", "x.p")
    with pytest.raises(ValueError):
        CliConfig("check", "x.p", axiom_set="everything")
