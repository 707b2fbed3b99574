"""Validity oracles: verdicts, the oracle chain, and the external ATP driver."""

from __future__ import annotations

import enum
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Optional, Union

ENV_COMMAND = "DHOL_ATP"

TIMEOUT = "timeout"
GAVE_UP = "gave-up"
PARSE_FAILURE = "parse-failure"
NOT_ATTEMPTED = "not-attempted"


class Status(enum.Enum):
    PROVED = "proved"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class OracleVerdict:
    status: Status
    by: Optional[str] = None
    elapsed: float = 0.0
    reason: Optional[str] = None  # only for UNKNOWN
    diagnostics: str = ""
    proof: Any = field(default=None, compare=False, repr=False)

    @classmethod
    def proved(cls, by: str, elapsed: float = 0.0, proof=None, diagnostics: str = ""):
        return cls(Status.PROVED, by, elapsed, None, diagnostics, proof)

    @classmethod
    def refuted(cls, by: str, elapsed: float = 0.0, diagnostics: str = ""):
        return cls(Status.REFUTED, by, elapsed, None, diagnostics)

    @classmethod
    def unknown(cls, reason: str, by: Optional[str] = None, elapsed: float = 0.0,
                diagnostics: str = ""):
        return cls(Status.UNKNOWN, by, elapsed, reason, diagnostics)

    @property
    def decisive(self) -> bool:
        return self.status is not Status.UNKNOWN

    def __str__(self) -> str:
        match self.status:
            case Status.UNKNOWN:
                return f"unknown ({self.reason})"
            case _:
                return f"{self.status.value} by {self.by} in {self.elapsed:.3f}s"


ChainSpec = Union[str, Callable[..., OracleVerdict]]


@dataclass(frozen=True)
class OracleConfig:
    """``chain`` entries are ``"builtin"``, ``"external"``, ``"accept-all"``
    (a test double) or a callable ``(problem, cfg) -> OracleVerdict``."""

    chain: tuple = ("builtin",)
    timeout: float = 60.0
    command: Optional[str] = None
    depth: int = 3
    max_instantiations: int = 64
    keep_temp: Optional[str] = None

    def __post_init__(self):
        if not self.chain:
            raise ValueError("oracle chain must not be empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def external_command(self) -> Optional[str]:
        return self.command or os.environ.get(ENV_COMMAND) or None


# --- builtin ---------------------------------------------------------------


@lru_cache(maxsize=64)
def _theory_ok(theory) -> tuple:
    from dhol.hol import hol_check_theory
    v = hol_check_theory(theory)
    return v.ok, v.error


def builtin_oracle(problem, cfg: OracleConfig) -> OracleVerdict:
    from dhol.builtin import builtin_decide
    t0 = time.perf_counter()
    res = builtin_decide(problem, cfg.depth, cfg.max_instantiations)
    elapsed = time.perf_counter() - t0
    diag = (f"instantiations={res.stats.instantiations} rounds={res.stats.rounds} "
            f"nodes={res.stats.nodes} capped={res.stats.capped}")
    if res.error:
        diag += f" error={res.error}"
    if res.proof is not None:
        return OracleVerdict.proved("builtin", elapsed, res.proof, diag)
    return OracleVerdict.unknown(GAVE_UP, "builtin", elapsed, diag)


def accept_all(problem, cfg: OracleConfig) -> OracleVerdict:
    """Claims every problem is a theorem.  Only for exercising the driver."""
    return OracleVerdict.proved("accept-all")


# --- external --------------------------------------------------------------

_SZS = re.compile(r"SZS status\s+(\w+)")
_PROVED = {"Theorem", "Unsatisfiable", "ContradictoryAxioms"}
_REFUTED = {"CounterSatisfiable", "Satisfiable"}


def parse_szs(output: str, by: str = "external", elapsed: float = 0.0) -> OracleVerdict:
    m = _SZS.search(output)
    if m is None:
        return OracleVerdict.unknown(PARSE_FAILURE, by, elapsed, output[-2000:])
    status = m.group(1)
    if status in _PROVED:
        return OracleVerdict.proved(by, elapsed, diagnostics=status)
    if status in _REFUTED:
        return OracleVerdict.refuted(by, elapsed, diagnostics=status)
    if status in ("Timeout", "ResourceOut"):
        return OracleVerdict.unknown(TIMEOUT, by, elapsed, status)
    return OracleVerdict.unknown(GAVE_UP, by, elapsed, status)


def _render(template: str, path: str, timeout: float) -> list:
    secs = str(max(1, int(round(timeout))))
    if "{file}" not in template:
        template = template + " {file}"
    cmd = template.replace("{file}", shlex.quote(path)).replace("{timeout}", secs)
    return shlex.split(cmd)


def run_external(problem, template: str, timeout: float,
                 keep_temp: Optional[str] = None) -> OracleVerdict:
    """Serialize ``problem`` to TH0, run the prover, and read its SZS status."""
    from dhol.tptp import emit_problem
    text = emit_problem(problem)
    if keep_temp:
        os.makedirs(keep_temp, exist_ok=True)
    fd, path = tempfile.mkstemp(prefix="dhol-", suffix=".p", dir=keep_temp or None)
    by = shlex.split(template)[0] if template.strip() else "external"
    t0 = time.perf_counter()
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        try:
            argv = _render(template, path, timeout)
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return OracleVerdict.unknown(TIMEOUT, by, time.perf_counter() - t0)
        except (OSError, ValueError) as e:
            return OracleVerdict.unknown(GAVE_UP, by, time.perf_counter() - t0,
                                         f"could not run {template!r}: {e}")
        out = proc.stdout + "\n" + proc.stderr
        return parse_szs(out, by, time.perf_counter() - t0)
    finally:
        if not keep_temp:
            try:
                os.unlink(path)
            except OSError:
                pass


def external_oracle(problem, cfg: OracleConfig) -> OracleVerdict:
    cmd = cfg.external_command()
    if not cmd:
        return OracleVerdict.unknown(NOT_ATTEMPTED, "external",
                                     diagnostics=f"no prover configured (set ${ENV_COMMAND})")
    return run_external(problem, cmd, cfg.timeout, cfg.keep_temp)


_NAMED = {"builtin": builtin_oracle, "external": external_oracle, "accept-all": accept_all}


def _resolve(spec: ChainSpec):
    if callable(spec):
        return spec
    try:
        return _NAMED[spec]
    except KeyError:
        raise ValueError(f"unknown oracle {spec!r}") from None


def prove(problem, cfg: OracleConfig = OracleConfig()) -> OracleVerdict:
    """Run the chain in order; the first decisive answer wins."""
    ok, err = _theory_ok(problem.theory)
    if not ok:
        return OracleVerdict.unknown(GAVE_UP, diagnostics=f"translated theory rejected: {err}")
    last = OracleVerdict.unknown(NOT_ATTEMPTED)
    for spec in cfg.chain:
        v = _resolve(spec)(problem, cfg)
        if v.decisive:
            return v
        last = v
    return last


# --- adapters for the kernel -----------------------------------------------


class TranslatingOracle:
    """Decides DHOL obligations by translating them and calling :func:`prove`."""

    def __init__(self, cfg: OracleConfig = OracleConfig(), axiom_set: str = "appendix"):
        self.cfg = cfg
        self.axiom_set = axiom_set

    def decide(self, obligation) -> OracleVerdict:
        from dhol.errors import TranslationError
        from dhol.translate import translate_obligation
        try:
            problem = translate_obligation(obligation, self.axiom_set)
        except TranslationError as e:
            return OracleVerdict.unknown(GAVE_UP, diagnostics=str(e))
        return prove(problem, self.cfg)


class AcceptAll:
    """Kernel-side test double that claims every obligation holds."""

    def decide(self, obligation) -> OracleVerdict:
        return OracleVerdict.proved("accept-all")
