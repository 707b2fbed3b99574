"""Dependently typed higher-order logic: checking, erasure to HOL, and proving.

Typical use::

    from dhol.tptp import parse_dhol
    from dhol.kernel import check_problem
    from dhol.oracle import TranslatingOracle

    problem = parse_dhol(open("corpus/depimpl.p").read(), ["corpus"])
    report = check_problem(problem.theory, problem.conjecture, TranslatingOracle())
"""

__version__ = "0.1.0"
