"""Exact and hashing-based approximate model counting over a sampling set."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .engine import DEFAULT_BSAT_TIMEOUT, SolverSession, bsat, bsat_hashed
from .errors import ContractViolation, CountingError, EnumerationGuardError
from .formula import CnfFormula, SamplingSet
from .hashing import sample_cell, sample_hash

EXACT_GUARD = 24
TRIAL_SUCCESS = 0.77  # per-trial success lower bound, 1 - e^{-3/2} rounded down
MAX_TRIAL_ATTEMPTS = 10  # failed trials are retried, up to this many times t


@dataclass(frozen=True)
class CountEstimate:
    value: int
    tolerance: float
    confidence: float
    exact: bool = False

    def within(self, truth: int) -> bool:
        """Does the estimate satisfy the (1 + tolerance) band around ``truth``?"""
        return truth / (1 + self.tolerance) <= self.value <= (1 + self.tolerance) * truth


class Counter(Protocol):
    def __call__(self, f: CnfFormula, s: SamplingSet, tolerance: float, confidence: float,
                 rng: np.random.Generator, *, budget: float | None = ...) -> CountEstimate: ...


def exact_count(f: CnfFormula, s: SamplingSet, *, guard: int = EXACT_GUARD,
                budget: float | None = None, kernel: str | None = None) -> int:
    """Number of distinct projections of ``f``'s witnesses onto ``s``."""
    if len(s) > guard:
        raise EnumerationGuardError(f"|S| = {len(s)} exceeds exact-count guard {guard}")
    session = SolverSession(f, s, budget=budget, kernel=kernel)
    count, _ = session.count(2 ** len(s))
    return count


def exact_counter(f, s, tolerance, confidence, rng=None, *, budget=None) -> CountEstimate:
    """:class:`Counter` adapter around :func:`exact_count` (always in band)."""
    return CountEstimate(exact_count(f, s, budget=budget), tolerance, 1.0, exact=True)


def cell_threshold(tolerance: float) -> int:
    return 2 * math.ceil(math.exp(0.5) * (1 + 1 / tolerance) ** 2)


def trials_for(confidence: float, p: float = TRIAL_SUCCESS) -> int:
    """Smallest odd ``t`` such that a majority of ``t`` trials succeeds w.p. >= confidence."""
    t = 1
    while True:
        need = t // 2 + 1
        prob = sum(math.comb(t, k) * p ** k * (1 - p) ** (t - k) for k in range(need, t + 1))
        if prob >= confidence:
            return t
        t += 2


def _trial(f, s, threshold, rng, budget, kernel):
    n = len(s)
    for m in range(1, n + 1):
        h = sample_hash(rng, n, m)
        alpha = sample_cell(rng, m)
        cell = bsat_hashed(f, h, alpha, s, threshold + 1, budget, kernel=kernel)
        if cell.timed_out:
            raise CountingError(f"solver timed out at hash width {m}")
        if 1 <= len(cell) <= threshold:
            return len(cell) * 2 ** m
    return None


def approx_count(f: CnfFormula, s: SamplingSet, tolerance: float, confidence: float,
                 rng: np.random.Generator, *, budget: float | None = DEFAULT_BSAT_TIMEOUT,
                 kernel: str | None = None) -> CountEstimate:
    """Estimate the projected count within ``1 + tolerance`` with the given confidence.

    Each trial hashes with widths ``m = 1, 2, ...`` and stops at the first cell
    holding between 1 and ``cell_threshold(tolerance)`` witnesses, returning
    ``|cell| * 2**m``; the estimate is the median over ``trials_for(confidence)``
    successful trials.
    """
    if not tolerance > 0:
        raise ContractViolation("tolerance must be positive")
    if not 0 < confidence < 1:
        raise ContractViolation("confidence must lie in (0, 1)")
    s.check(f)
    threshold = cell_threshold(tolerance)

    # width 0 is the whole solution space; it is also the small-count fast path
    first = bsat(f, [], s, threshold + 1, budget, kernel=kernel)
    if first.timed_out:
        raise CountingError("solver timed out on the unhashed formula")
    if len(first) <= threshold:
        return CountEstimate(len(first), tolerance, 1.0, exact=True)

    t = trials_for(confidence)
    estimates = []
    for _ in range(MAX_TRIAL_ATTEMPTS * t):
        est = _trial(f, s, threshold, rng, budget, kernel)
        if est is not None:
            estimates.append(est)
            if len(estimates) == t:
                break
    if not estimates:
        raise CountingError("every counting trial failed")
    estimates.sort()
    return CountEstimate(estimates[(len(estimates) - 1) // 2], tolerance, confidence)

