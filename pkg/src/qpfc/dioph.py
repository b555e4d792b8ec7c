"""Integer search for comb amplitudes.

Level ``n`` of the bond comb conjugates with a period-``3**n`` x-field of
amplitude ``a``. It works exactly when, in units of pi/2,

    a * c1 is an odd integer, a * c2 and a * c3 are integers,

with ``c1, c2, c3`` the cosine differences from :func:`coefficients`. The
first condition is solved exactly for ``a`` at each odd numerator ``2p + 1``;
the other two are scored by their distance to the nearest integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import compare_fidelity, zz_phase, Target
from .lattice import Axis, LatticeGeometry, Periodic, Schedule
from .schedule_io import fmt_real

HALF_PI = math.pi / 2
# residuals closer than this count as tied
TIE_EPS = 1e-12


def coefficients(n: int) -> tuple[float, float, float]:
    if n < 1:
        raise ValueError("comb level must be >= 1")
    big, small = 3**n, 3 ** (n - 1)
    c1 = math.cos((small + 1) * math.pi / big) - math.cos((small - 1) * math.pi / big)
    c2 = math.cos((big - 1) * math.pi / big) - math.cos((small - 1) * math.pi / big)
    c3 = 1.0 - math.cos((big - 1) * math.pi / big)
    return c1, c2, c3


def substitute(a: float, n: int) -> tuple[float, float, float]:
    """The three left-hand sides ``a * c_i`` divided by pi/2."""
    return tuple(a * c / HALF_PI for c in coefficients(n))


@dataclass(frozen=True)
class AnSolution:
    level: int
    a: float
    p: int
    l: int
    m_eq4: int
    r2: float
    r3: float
    tol: float

    @property
    def residual(self) -> float:
        return max(abs(self.r2), abs(self.r3))

    def __str__(self) -> str:
        return (f"a_n={self.a:.15g} p={self.p} l={self.l} mEq4={self.m_eq4} "
                f"r2={self.r2:.15g} r3={self.r3:.15g}")


class AnNotFoundError(ValueError):
    """No amplitude within the search bound meets the tolerance."""

    def __init__(self, best: AnSolution):
        super().__init__(
            f"no amplitude for level {best.level} within tol {best.tol:g}; "
            f"best residual {best.residual:.6g} at p={best.p}"
        )
        self.best = best


def _candidates(n: int, bound: int):
    c1, c2, c3 = coefficients(n)
    p = np.arange(-bound, bound + 1)
    a = (2 * p + 1) * math.pi / (2 * c1)
    x2, x3 = a * c2 / HALF_PI, a * c3 / HALF_PI
    l, m = np.round(x2), np.round(x3)
    return p, a, l, m, x2 - l, x3 - m


def _solution(n, tol, p, a, l, m, r2, r3, i) -> AnSolution:
    return AnSolution(n, float(a[i]), int(p[i]), int(l[i]), int(m[i]),
                      float(r2[i]), float(r3[i]), tol)


def solve_an(n: int, tol: float, bound: int) -> AnSolution:
    """Best amplitude for comb level ``n`` over ``p`` in ``[-bound, bound]``.

    Among tied residuals the smallest ``|a|`` wins, then positive ``a``.
    Raises :class:`AnNotFoundError` (carrying the best candidate) when the
    best residual exceeds ``tol``.
    """
    if tol < 0 or bound < 1:
        raise ValueError("need tol >= 0 and bound >= 1")
    p, a, l, m, r2, r3 = _candidates(n, bound)
    resid = np.maximum(np.abs(r2), np.abs(r3))
    tied = np.flatnonzero(resid <= resid.min() + TIE_EPS)
    i = min(tied, key=lambda k: (abs(2 * p[k] + 1), a[k] < 0))
    sol = _solution(n, tol, p, a, l, m, r2, r3, i)
    if sol.residual > tol:
        raise AnNotFoundError(sol)
    return sol


def best_residual(n: int, bound: int) -> float:
    *_, r2, r3 = _candidates(n, bound)
    return float(np.maximum(np.abs(r2), np.abs(r3)).min())


def pareto_front(n: int, bound: int) -> list[AnSolution]:
    """Candidates that beat every smaller numerator ``|2p + 1|``, in order of ``|a|``."""
    p, a, l, m, r2, r3 = _candidates(n, bound)
    resid = np.maximum(np.abs(r2), np.abs(r3))
    order = sorted(range(p.size), key=lambda k: (abs(2 * p[k] + 1), a[k] < 0))
    front, best = [], math.inf
    for k in order:
        if resid[k] < best - TIE_EPS:
            best = resid[k]
            front.append(_solution(n, math.inf, p, a, l, m, r2, r3, k))
    return front


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    infidelity: float
    a: float
    p: int

    def __str__(self) -> str:
        return f"residual={fmt_real(self.residual)} infidelity={fmt_real(self.infidelity)}"


def comb_stage_check(a: float, n_sites: int, level: int, theta: float = 0.3,
                     k: int | None = None, seed: int = 0, mode: str | None = None):
    """One comb level built on an ideal previous level, compared with the ideal result.

    The previous level is the exact phase ``exp(i theta B_b)`` on every bond
    ``b = k + 3**(level-1) j``; a perfect amplitude leaves ``exp(2 i theta B_b)``
    on the bonds with ``j`` divisible by 3.
    """
    geometry = LatticeGeometry.chain(n_sites)
    k = (n_sites // 2) if k is None else k
    spacing = 3 ** (level - 1)
    prev = [(b, b + 1) for b in range(1, n_sites) if (b - k) % spacing == 0]
    kept = [(b, b + 1) for b in range(1, n_sites) if (b - k) % (3 * spacing) == 0]
    inner = zz_phase(prev, theta)
    conj = Periodic(Axis.X, a, 3**level, k - (3**level - 1) / 2)
    sched = Schedule(geometry, (conj, inner, conj.inverse(), inner))
    target = Target(geometry, 2, (zz_phase(kept, 2 * theta),))
    return compare_fidelity(sched, target, seed=seed, mode=mode)


def residual_to_infidelity(solution: AnSolution, n_sites: int, level: int | None = None,
                           **kwargs) -> ResidualReport:
    """Measure how a solver residual turns into comb infidelity on a chain."""
    level = solution.level if level is None else level
    report = comb_stage_check(solution.a, n_sites, level, **kwargs)
    return ResidualReport(solution.residual, 1.0 - report.value, solution.a, solution.p)
