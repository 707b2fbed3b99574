"""Rewrite tests/golden/*.p from the corpus via the translate command.

Run after an intentional change to the translation or the TH0 printer, then
review the diff before committing.
"""

import argparse
import io
import sys
from pathlib import Path

from dhol.cli import CliConfig, run

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = ROOT / "tests" / "golden"

# (golden file, corpus input, axiom set)
GOLDENS = (
    ("category.p", "category.p", "appendix"),
    ("category_minimal.p", "category.p", "minimal"),
    ("depimpl.p", "depimpl.p", "appendix"),
    ("simple.p", "simple.p", "appendix"),
    ("truth.p", "truth.p", "appendix"),
)


def render(source: str, axiom_set: str) -> str:
    out, err = io.StringIO(), io.StringIO()
    code, _ = run(CliConfig("translate", str(CORPUS / source), axiom_set=axiom_set), out, err)
    if code != 0:
        raise SystemExit(f"{source}: translate exited {code}: {err.getvalue()}")
    return out.getvalue()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true", help="report stale goldens, write nothing")
    args = ap.parse_args(argv)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    stale = 0
    for name, source, axiom_set in GOLDENS:
        text = render(source, axiom_set)
        path = GOLDEN / name
        if path.exists() and path.read_text(encoding="utf-8") == text:
            continue
        stale += 1
        print(("stale: " if args.check else "wrote: ") + str(path.relative_to(ROOT)))
        if not args.check:
            path.write_text(text, encoding="utf-8")
    return 1 if args.check and stale else 0


if __name__ == "__main__":
    sys.exit(main())
