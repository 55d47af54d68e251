"""Counters for verifying the offline/online split.

Every quadrature-loop assembly routine reports the number of element
evaluations it performed.  Online solvers must leave the counter untouched;
tests assert this.
"""

QUADRATURE_EVALS = 0


def count_quadrature(n: int):
    global QUADRATURE_EVALS
    QUADRATURE_EVALS += int(n)


def quadrature_evals() -> int:
    return QUADRATURE_EVALS
