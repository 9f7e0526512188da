"""CNF + XOR satisfiability and bounded witness enumeration.

XOR constraints are first put in reduced row echelon form by Gauss-Jordan
elimination, then lowered to plain CNF before they reach the solver: a
constraint over at most ``xor_width`` variables becomes the
``2**(w-1)`` clauses forbidding every wrong-parity assignment, and a wider
one is cut into a chain of such pieces joined by fresh auxiliary variables.
Auxiliary variables never appear in witnesses or blocking clauses.

The enumeration kernel is the compiled :mod:`unigen._kernel` when it was
built, else :mod:`unigen._kernel_py`. Set ``UNIGEN_PURE_PYTHON=1`` to force
the fallback.
"""

from __future__ import annotations

import itertools
import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernel_py
from .errors import ContractViolation, SolverTimeout
from .formula import Assignment, CnfFormula, SamplingSet
from .hashing import CellId, HashFunction, XorConstraint

log = logging.getLogger(__name__)

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

DEFAULT_XOR_WIDTH = 6
DEFAULT_BSAT_TIMEOUT = 2500.0


def get_kernel(name: str | None = None):
    """Return the kernel module for ``"compiled"``, ``"python"`` or the default."""
    if name is None:
        name = "python" if os.environ.get("UNIGEN_PURE_PYTHON") else "auto"
    if name == "python":
        return _kernel_py
    if name in ("compiled", "auto"):
        if _compiled is None:
            if name == "compiled":
                raise ImportError("compiled kernel unavailable; reinstall with Cython present")
            return _kernel_py
        return _compiled
    raise ValueError(f"unknown kernel {name!r}")


def backend_name(kernel=None) -> str:
    kernel = kernel or get_kernel()
    return "python" if kernel is _kernel_py else "compiled"


# ---------------------------------------------------------------- XOR -> CNF

@lru_cache(maxsize=None)
def _parity_patterns(width: int, parity: int) -> np.ndarray:
    """Sign matrix: one row per forbidden assignment, +1/-1 per variable."""
    rows = []
    for bits in itertools.product((0, 1), repeat=width):
        if sum(bits) % 2 != parity:
            rows.append([-1 if b else 1 for b in bits])
    arr = np.array(rows, dtype=np.int32).reshape(len(rows), width)
    arr.setflags(write=False)
    return arr


def _expand(vars_: list[int], parity: int) -> np.ndarray:
    pat = _parity_patterns(len(vars_), parity)
    body = pat * np.asarray(vars_, dtype=np.int32)
    return np.hstack([body, np.zeros((body.shape[0], 1), dtype=np.int32)]).ravel()


def encode_xor(x: XorConstraint, next_var: int, width: int = DEFAULT_XOR_WIDTH):
    """Lower one XOR constraint to flat CNF.

    Returns ``(flat_literals, next_var)`` where ``next_var`` is the first
    auxiliary index still unused.
    """
    if width < 3:
        raise ContractViolation("xor chunk width must be at least 3")
    return _encode_parity(list(x.vars), x.parity, next_var, width)


def _encode_parity(rest: list, parity: int, next_var: int, width: int):
    if not rest:
        # "0 = parity": vacuous, or the empty clause
        return (np.zeros(1, dtype=np.int32) if parity else np.zeros(0, dtype=np.int32)), next_var
    carry = None
    parts = []
    while True:
        head = [carry] if carry is not None else []
        room = width - len(head)
        if len(rest) <= room:
            parts.append(_expand(head + rest, parity))
            break
        take = room - 1
        aux = next_var
        next_var += 1
        parts.append(_expand(head + rest[:take] + [aux], 0))
        rest = rest[take:]
        carry = aux
    return np.concatenate(parts), next_var


def reduce_parity_system(mask: np.ndarray, parities: np.ndarray):
    """Gauss-Jordan elimination of ``mask @ y = parities`` over GF(2).

    Columns are variables in ascending order; each pivot is the highest
    remaining column of its row, so every pivot variable occurs in exactly
    one output row and the low-indexed variables stay free. Returns
    ``(mask, parities)`` without zero rows; an inconsistent system reduces to
    the single row ``0 = 1``.
    """
    a = np.array(mask, dtype=bool, copy=True).reshape(len(parities), -1)
    b = np.array(parities, dtype=bool, copy=True)
    r = 0
    for col in range(a.shape[1] - 1, -1, -1):
        if r == a.shape[0]:
            break
        hits = np.flatnonzero(a[r:, col])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
            b[[r, p]] = b[[p, r]]
        others = np.flatnonzero(a[:, col])
        others = others[others != r]
        a[others] ^= a[r]
        b[others] ^= b[r]
        r += 1
    if b[r:].any():
        return np.zeros((1, a.shape[1]), dtype=bool), np.ones(1, dtype=bool)
    return a[:r], b[:r]


def encode_parity_system(mask, parities, vars_sorted, next_var: int, width: int = DEFAULT_XOR_WIDTH):
    """Reduce, then lower each row to CNF; returns ``(flat, next_var)``."""
    a, b = reduce_parity_system(mask, parities)
    vars_sorted = np.asarray(vars_sorted)
    parts = [np.zeros(0, dtype=np.int32)]
    for row, parity in zip(a, b):
        flat, next_var = _encode_parity(vars_sorted[row].tolist(), int(parity), next_var, width)
        parts.append(flat)
    return np.concatenate(parts), next_var


def encode_xors(xors: Sequence[XorConstraint], num_vars: int, width: int = DEFAULT_XOR_WIDTH):
    """Lower all constraints as one reduced system; returns ``(flat, total_vars)``."""
    if not xors:
        return np.zeros(0, dtype=np.int32), num_vars
    cols = sorted({v for x in xors for v in x.vars})
    index = {v: i for i, v in enumerate(cols)}
    mask = np.zeros((len(xors), len(cols)), dtype=bool)
    for i, x in enumerate(xors):
        mask[i, [index[v] for v in x.vars]] = True
    flat, next_var = encode_parity_system(mask, [x.parity for x in xors], cols, num_vars + 1, width)
    return flat, next_var - 1


# ---------------------------------------------------------------- results

@dataclass
class WitnessList:
    """Output of :func:`bsat`.

    ``models`` is a ``(k, num_vars)`` 0/1 array of full models; rows are
    pairwise distinct on ``sampling_set``.
    """

    models: np.ndarray
    sampling_set: SamplingSet
    exhausted: bool
    timed_out: bool

    def __len__(self):
        return self.models.shape[0]

    @property
    def projection_bits(self) -> np.ndarray:
        return self.models[:, np.asarray(self.sampling_set.vars) - 1]

    @property
    def witnesses(self) -> list[Assignment]:
        n = self.models.shape[1]
        vs = tuple(range(1, n + 1))
        return [Assignment.from_bits(vs, row) for row in self.models]

    @property
    def projections(self) -> list[Assignment]:
        vs = self.sampling_set.vars
        return [Assignment.from_bits(vs, row) for row in self.projection_bits]


# ---------------------------------------------------------------- sessions

class SolverSession:
    """One formula plus active XOR constraints and blocking clauses.

    A session is single-threaded. Distinct sessions over the same formula
    may run on different threads; the compiled kernel releases the GIL.
    """

    def __init__(self, formula: CnfFormula, blocking_set: SamplingSet | None = None, *,
                 budget: float | None = DEFAULT_BSAT_TIMEOUT,
                 xor_width: int = DEFAULT_XOR_WIDTH, kernel: str | None = None):
        self.formula = formula
        self.blocking_set = (blocking_set or SamplingSet.full(formula)).check(formula)
        self.budget = budget
        self.xor_width = xor_width
        self.kernel = get_kernel(kernel)
        self.xors: list[XorConstraint] = []
        self.blocking: list[tuple[int, ...]] = []
        self._block_lookup = frozenset(self.blocking_set.vars)
        self._block_arr = np.asarray(self.blocking_set.vars, dtype=np.int32)

    def add_xors(self, xors: Sequence[XorConstraint]):
        for x in xors:
            if not self._block_lookup.issuperset(x.vars):
                raise ContractViolation("xor constraint mentions a variable outside the blocking set")
            self.xors.append(x)
            if log.isEnabledFor(logging.DEBUG):
                log.debug("add %s", x.to_line())

    def block(self, a: Assignment):
        """Exclude every model agreeing with ``a`` on the blocking set."""
        vals = a.as_dict()
        try:
            clause = tuple(-v if vals[v] else v for v in self.blocking_set.vars)
        except KeyError as exc:
            raise ContractViolation(f"assignment misses blocking variable {exc.args[0]}") from None
        self.blocking.append(clause)
        if log.isEnabledFor(logging.DEBUG):
            log.debug("block %s", " ".join(map(str, clause)))

    def reset(self):
        if log.isEnabledFor(logging.DEBUG):
            log.debug("retract %d xors, %d blocking clauses", len(self.xors), len(self.blocking))
        self.xors.clear()
        self.blocking.clear()

    def _stream(self):
        xflat, total = encode_xors(self.xors, self.formula.num_vars, self.xor_width)
        parts = [self.formula.flat, xflat]
        for c in self.blocking:
            parts.append(np.array(c + (0,), dtype=np.int32))
        return np.concatenate(parts), total

    def enumerate(self, bound: int) -> WitnessList:
        if bound < 1:
            raise ContractViolation("bound must be at least 1")
        flat, total = self._stream()
        models, status = self.kernel.enumerate_models(
            total, flat, self._block_arr, self.formula.num_vars, int(bound), self.budget
        )
        return WitnessList(
            models=models,
            sampling_set=self.blocking_set,
            exhausted=status == _kernel_py.STATUS_EXHAUSTED,
            timed_out=status == _kernel_py.STATUS_TIMEOUT,
        )

    def count(self, limit: int) -> tuple[int, bool]:
        """Count models distinct on the blocking set, stopping at ``limit``.

        Returns ``(count, exhausted)``; models themselves are not kept.
        """
        if limit < 1:
            raise ContractViolation("limit must be at least 1")
        flat, total = self._stream()
        models, status = self.kernel.enumerate_models(
            total, flat, self._block_arr, 0, int(limit), self.budget
        )
        if status == _kernel_py.STATUS_TIMEOUT:
            raise SolverTimeout(f"solver budget of {self.budget}s exhausted")
        return models.shape[0], status == _kernel_py.STATUS_EXHAUSTED

    def solve_one(self) -> Assignment | None:
        """A model of formula, xors and blocking clauses, or ``None`` if unsat.

        Raises :class:`SolverTimeout` when the budget runs out first.
        """
        res = self.enumerate(1)
        if res.timed_out:
            raise SolverTimeout(f"solver budget of {self.budget}s exhausted")
        if len(res) == 0:
            return None
        return res.witnesses[0]


def solve_one(session: SolverSession) -> Assignment | None:
    return session.solve_one()


def bsat(f: CnfFormula, xors: Sequence[XorConstraint], s: SamplingSet, bound: int,
         budget: float | None = DEFAULT_BSAT_TIMEOUT, *, xor_width: int = DEFAULT_XOR_WIDTH,
         kernel: str | None = None) -> WitnessList:
    """Up to ``bound`` witnesses of ``f`` and ``xors``, distinct on ``s``.

    ``exhausted`` is set when the enumeration proved no further witness
    exists; ``timed_out`` when ``budget`` seconds ran out first, in which case
    the witnesses found so far are returned.
    """
    if bound < 1:
        raise ContractViolation("bound must be at least 1")
    session = SolverSession(f, s, budget=budget, xor_width=xor_width, kernel=kernel)
    session.add_xors(xors)
    return session.enumerate(bound)


def bsat_hashed(f: CnfFormula, h: HashFunction, alpha: CellId, s: SamplingSet, bound: int,
                budget: float | None = DEFAULT_BSAT_TIMEOUT, *, xor_width: int = DEFAULT_XOR_WIDTH,
                kernel: str | None = None) -> WitnessList:
    """:func:`bsat` under the constraints ``h(y) = alpha``, skipping the
    intermediate :class:`XorConstraint` objects."""
    if bound < 1:
        raise ContractViolation("bound must be at least 1")
    if h.n != len(s) or alpha.m != h.m:
        raise ContractViolation("hash, cell and sampling set dimensions disagree")
    svars = np.asarray(s.vars, dtype=np.int64)
    order = np.argsort(svars)
    sorted_vars = svars[order]
    mask = h.matrix[:, order].astype(bool)
    parities = np.bitwise_xor(np.asarray(alpha.bits, dtype=np.uint8), h.constants)
    xflat, next_var = encode_parity_system(mask, parities, sorted_vars, f.num_vars + 1, xor_width)
    parts = [f.flat, xflat]
    models, status = get_kernel(kernel).enumerate_models(
        next_var - 1, np.concatenate(parts), svars.astype(np.int32), f.num_vars, int(bound), budget
    )
    return WitnessList(models, s, status == _kernel_py.STATUS_EXHAUSTED,
                       status == _kernel_py.STATUS_TIMEOUT)
