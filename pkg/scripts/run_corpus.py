"""Run check and prove over every corpus problem and print a summary table.

    PYTHONPATH=src python3 scripts/run_corpus.py [--oracle CMD] [--json]
"""

import argparse
import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from dhol.cli import CliConfig, run
from dhol.oracle import OracleConfig

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@dataclass
class Row:
    problem: str
    check_exit: int
    check: str
    obligations: int
    open: int
    prove_exit: Optional[int]
    prove: Optional[str]
    seconds: float


def run_one(path: Path, oracle: OracleConfig) -> Row:
    t0 = time.perf_counter()
    sink = io.StringIO()
    code, rep = run(CliConfig("check", str(path), oracle=oracle), sink, sink)
    opened = sum(ob.status != "proved" for ob in rep.obligations)
    text = path.read_text(encoding="utf-8")
    p_code = p_verdict = None
    if ", conjecture," in text:
        p_code, p_rep = run(CliConfig("prove", str(path), oracle=oracle), sink, sink)
        p_verdict = p_rep.verdict
        if p_rep.proof_by is not None:
            p_verdict += f" ({p_rep.proof_by})"
    return Row(path.name, code, rep.verdict, len(rep.obligations), opened, p_code, p_verdict,
               round(time.perf_counter() - t0, 3))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--oracle", help="external prover command template ({file}, {timeout})")
    ap.add_argument("--timeout", type=float, default=60.0)
    ap.add_argument("--json", action="store_true", help="one JSON object per problem")
    ap.add_argument("files", nargs="*", help="problems (default: the whole corpus)")
    args = ap.parse_args(argv)
    chain = ("builtin", "external") if args.oracle else ("builtin",)
    oracle = OracleConfig(chain=chain, command=args.oracle, timeout=args.timeout)
    paths = [Path(f) for f in args.files] or sorted(CORPUS.glob("*.p"))
    rows = [run_one(p, oracle) for p in paths]
    if args.json:
        for r in rows:
            print(json.dumps(asdict(r)))
        return 0
    print(f"{'problem':<18}{'check':<12}{'obl':>4}{'open':>5}  {'prove':<22}{'secs':>7}")
    for r in rows:
        prove = "-" if r.prove is None else f"{r.prove_exit} {r.prove}"
        print(f"{r.problem:<18}{f'{r.check_exit} {r.check}':<12}{r.obligations:>4}{r.open:>5}"
              f"  {prove:<22}{r.seconds:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
