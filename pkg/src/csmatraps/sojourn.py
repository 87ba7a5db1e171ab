"""Trap durations.

Times are in units of the mean transmission duration. A trap with leftmost
column ``l``, depth ``d`` and column sizes ``|A_l| .. |A_{l+d}|`` is lumped
column-by-column into a birth-death chain whose hitting time of column
``l - 1`` has a closed form; ``exact_exit_times`` solves the unlumped
first-step equations and serves as the reference.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import LevelOutOfRange, SingularSystem
from .statespace import StateGraph, _check_rho
from .traps import Trap

RHO0 = 5.35  # typical 802.11 access intensity
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class BirthDeathChain:
    """Column-lumped chain on levels ``l-1 .. l+d``; level ``l-1`` absorbs."""

    level: int
    depth: int
    column_sizes: tuple[int, ...]
    rho: float

    @property
    def levels(self) -> range:
        return range(self.level - 1, self.level + self.depth + 1)

    def _check(self, i: int) -> int:
        k = i - self.level
        if not 0 <= k <= self.depth:
            raise LevelOutOfRange(f"level {i} outside {self.level}..{self.level + self.depth}")
        return k

    def down_rate(self, i: int) -> float:
        self._check(i)
        return float(i)

    def up_rate(self, i: int) -> float:
        k = self._check(i)
        if k == self.depth:
            return 0.0
        return self.column_sizes[k + 1] / self.column_sizes[k] * (i + 1) * self.rho


@dataclass(frozen=True)
class SojournResult:
    value: float
    beta: Fraction
    depth: int
    exact: bool
    coefficients: tuple[Fraction, ...]  # index = power of rho


def aggregate_birth_death(trap: Trap, sg: StateGraph, rho: float) -> BirthDeathChain:
    _check_rho(rho)
    return BirthDeathChain(trap.level, trap.depth, trap.column_sizes, float(rho))


def passage_coefficients(column_sizes, level: int, i: int) -> tuple[Fraction, ...]:
    """Exact coefficients (by power of rho) of the lumped hitting time from column ``i``.

    ``sum_k sum_{j<=min(k, i-l)} |A_{l+d-k+j}| / ((l+j)|A_{l+j}|) * rho**(d-k)``
    """
    d = len(column_sizes) - 1
    if not 0 <= i - level <= d:
        raise LevelOutOfRange(f"level {i} outside {level}..{level + d}")
    coeffs = [Fraction(0)] * (d + 1)
    for k in range(d + 1):
        for j in range(min(k, i - level) + 1):
            coeffs[d - k] += Fraction(column_sizes[d - k + j], (level + j) * column_sizes[j])
    return tuple(coeffs)


def _poly(coeffs, rho: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * rho + float(c)
    return acc


def bd_passage_time(chain: BirthDeathChain, i: int, rho: float | None = None) -> float:
    rho = chain.rho if rho is None else rho
    return _poly(passage_coefficients(chain.column_sizes, chain.level, i), rho)


def sojourn_coefficients(trap: Trap) -> tuple[Fraction, ...]:
    return passage_coefficients(trap.column_sizes, trap.level, trap.level)


def asymptotic_sojourn(trap: Trap) -> tuple[Fraction, int]:
    """Leading term ``beta * rho**d`` of the trap duration."""
    beta = Fraction(trap.column_sizes[-1], trap.level * trap.column_sizes[0])
    return beta, trap.depth


def is_uniform(trap: Trap, sg: StateGraph) -> bool:
    """True when states sharing a column have equal up-degree inside the trap.

    In that case lumping columns loses nothing and the closed form is exact.
    """
    seen: dict[int, int] = {}
    members = trap.member_set
    for k in trap.states:
        n_up = sum(1 for t, _ in sg.up[k] if t in members)
        col = int(sg.sizes[k])
        if seen.setdefault(col, n_up) != n_up:
            return False
    return True


def sojourn_time(trap: Trap, sg: StateGraph, rho: float) -> SojournResult:
    _check_rho(rho)
    coeffs = sojourn_coefficients(trap)
    beta, d = asymptotic_sojourn(trap)
    return SojournResult(_poly(coeffs, rho), beta, d, is_uniform(trap, sg), coeffs)


def exact_exit_times(trap: Trap, sg: StateGraph, rho: float) -> np.ndarray:
    """Expected time to leave ``trap`` from each member state (same order as ``trap.states``).

    Solves ``(m_s + n_s rho) T_s - sum_children T - rho sum_parents T = 1`` with
    ``T = 0`` outside the trap, where ``m_s = |s|`` and ``n_s`` counts
    up-neighbours inside the trap.
    """
    _check_rho(rho)
    local = {k: a for a, k in enumerate(trap.states)}
    n = len(local)
    rows, cols, vals = [], [], []
    for a, k in enumerate(trap.states):
        diag = float(sg.sizes[k])
        for t, _ in sg.up[k]:
            b = local.get(t)
            if b is not None:
                diag += rho
                rows.append(a)
                cols.append(b)
                vals.append(-rho)
        for t, _ in sg.down[k]:
            b = local.get(t)
            if b is not None:
                rows.append(a)
                cols.append(b)
                vals.append(-1.0)
        rows.append(a)
        cols.append(a)
        vals.append(diag)
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rhs = np.ones(n)
    try:
        if n <= DENSE_LIMIT:
            out = scipy.linalg.solve(A.toarray(), rhs)
        else:
            out = scipy.sparse.linalg.splu(A.tocsc()).solve(rhs)
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        raise SingularSystem(f"exit-time system for trap {trap.name} is singular") from exc
    if not np.all(np.isfinite(out)):
        raise SingularSystem(f"exit-time system for trap {trap.name} is singular")
    return out


def exact_sojourn(trap: Trap, sg: StateGraph, rho: float) -> float:
    """Exit time averaged over the leftmost column, where every visit begins."""
    t = exact_exit_times(trap, sg, rho)
    left = [a for a, k in enumerate(trap.states) if sg.sizes[k] == trap.level]
    return float(t[left].mean())
