"""Eigenvalue convergence as the damping exponent grows.

As n -> infinity the dampings x^(2n) + a0 concentrate onto the interval
(-1, 1) with constant damping a0, and the non-real eigenvalue branches
lambda_k(n, a0, q0) converge to the closed-form interval spectrum
lambda_k(infinity, a0, q0).  This module runs that spectral-exactness
experiment: oscillator eigenvalues feed the characteristic equations, the
admissible branch nearest the limit is tracked per n, and the error table is
checked for eventual decrease.

Indexing: the limit modes are numbered k = 1, 2, ... (Dirichlet modes of the
interval); the branch converging to limit mode k is fed by oscillator
eigenvalue mu of index k-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import (
    LimitEigenvalue,
    PencilParams,
    limit_lambda,
    line_char_poly,
    physical_roots,
    roots_all,
)
from .errors import ParameterError
from .oscillator import anharmonic_eigenvalues

__all__ = [
    "ConvergenceRow",
    "ConvergenceTable",
    "branch_ray_angle",
    "angular_gap",
    "lambda_branch",
    "verify_exactness",
]


@dataclass
class ConvergenceRow:
    n: int
    mu: float
    lam: complex | None
    error: float | None
    branch_lost: bool = False


@dataclass
class ConvergenceTable:
    k: int
    a0: float
    q0: float
    limit: LimitEigenvalue
    rows: list = field(default_factory=list)

    @property
    def errors(self) -> list:
        return [r.error for r in self.rows if not r.branch_lost]


def branch_ray_angle(n: int) -> float:
    """Exact argument pi*(n+1)/(2n+1) of every branch when a0 = q0 = 0."""
    return np.pi * (n + 1) / (2 * n + 1)


def angular_gap(n: int) -> float:
    """Angle between the branch ray and the limit line: pi / (2*(2n+1))."""
    return np.pi / (2 * (2 * n + 1))


def _limit_distance(lam: complex, limit: LimitEigenvalue) -> float:
    return min(abs(lam - complex(v)) for v in limit.values)


def _neighbour_limits(k: int, a0: float, q0: float, ell: float) -> list:
    neighbours = [limit_lambda(k + 1, a0, q0, ell)]
    if k > 1:
        neighbours.append(limit_lambda(k - 1, a0, q0, ell))
    return neighbours


def lambda_branch(
    n_list,
    k: int,
    a0: float = 0.0,
    q0: float = 0.0,
    tol: float = 1e-8,
) -> ConvergenceTable:
    """Track the branch lambda_k(n, a0, q0) along ascending n.

    For each n the oscillator eigenvalue of index k-1 is computed to ``tol``,
    the characteristic polynomial is solved, admissible branches are
    filtered, and the one nearest the limit value is recorded together with
    its distance to the limit set.  A matched branch must be strictly nearer
    to this limit than to the neighbouring limit modes; otherwise the row is
    recorded as lost, not fatal.
    """
    n_list = [int(n) for n in n_list]
    if sorted(n_list) != n_list:
        raise ParameterError("n_list must be ascending")
    if k < 1:
        raise ParameterError(f"limit mode index k must be >= 1, got {k}")
    limit = limit_lambda(k, a0, q0, ell=1.0)
    neighbours = _neighbour_limits(k, a0, q0, ell=1.0)
    table = ConvergenceTable(k=k, a0=a0, q0=q0, limit=limit)
    for n in n_list:
        mu = float(anharmonic_eigenvalues(n, k - 1, tol=tol).values[k - 1])
        params = PencilParams(n=n, a0=a0, q0=q0)
        branches = physical_roots(roots_all(line_char_poly(params, mu)), params, mu=mu, k=k)
        if not branches:
            table.rows.append(ConvergenceRow(n=n, mu=mu, lam=None, error=None, branch_lost=True))
            continue
        best = min(branches, key=lambda b: _limit_distance(b.lam, limit))
        err = _limit_distance(best.lam, limit)
        ambiguous = any(_limit_distance(best.lam, other) <= err for other in neighbours)
        table.rows.append(
            ConvergenceRow(n=n, mu=mu, lam=best.lam, error=err, branch_lost=ambiguous)
        )
    return table


def verify_exactness(table: ConvergenceTable, window: int) -> tuple[bool, dict]:
    """Check eventual decrease of the error table.

    True iff each of the trailing ``window`` errors is smaller than the first
    error and the last error is the minimum of the whole table.  The report
    carries the empirical rates log(e_i / e_{i+1}).
    """
    errors = table.errors if isinstance(table, ConvergenceTable) else list(table)
    if len(errors) < window + 1:
        raise ParameterError(f"need at least window+1={window + 1} errors, got {len(errors)}")
    first = errors[0]
    trailing = errors[-window:]
    ok = all(e < first for e in trailing) and errors[-1] == min(errors)
    rates = [
        float(np.log(errors[i] / errors[i + 1])) if errors[i + 1] > 0 else np.inf
        for i in range(len(errors) - 1)
    ]
    report = {
        "errors": [float(e) for e in errors],
        "rates": rates,
        "first": float(first),
        "min": float(min(errors)),
        "verdict": bool(ok),
    }
    return bool(ok), report
