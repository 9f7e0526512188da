"""CNF formulas, sampling sets and assignments, plus DIMACS I/O.

Variables are 1-indexed everywhere. The sampling set travels inside DIMACS
files as ``c ind v1 v2 ... 0`` comment lines, which may be split over
several lines and may appear before or after the problem line.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractViolation, DimacsParseError


def _lit_key(lit):
    return (abs(lit), lit > 0)


@dataclass(frozen=True)
class CnfFormula:
    """Immutable clause database over variables ``1..num_vars``.

    Each clause is stored as a tuple of signed literals sorted by variable.
    Clauses must be non-empty, duplicate-free and non-tautological.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise ContractViolation("num_vars must be positive")
        norm = []
        for idx, clause in enumerate(self.clauses):
            lits = tuple(sorted((int(l) for l in clause), key=_lit_key))
            if not lits:
                raise ContractViolation(f"clause {idx} is empty")
            vars_seen = set()
            for lit in lits:
                v = abs(lit)
                if lit == 0 or v > self.num_vars:
                    raise ContractViolation(f"clause {idx}: literal {lit} out of range")
                if v in vars_seen:
                    kind = "tautological" if -lit in lits else "duplicate literal"
                    raise ContractViolation(f"clause {idx}: {kind} ({lit})")
                vars_seen.add(v)
            norm.append(lits)
        object.__setattr__(self, "clauses", tuple(norm))

    @property
    def num_clauses(self):
        return len(self.clauses)

    @cached_property
    def flat(self) -> np.ndarray:
        """Zero-terminated literal stream, as consumed by the kernels."""
        out = []
        for c in self.clauses:
            out.extend(c)
            out.append(0)
        arr = np.array(out, dtype=np.int32)
        arr.setflags(write=False)
        return arr

    @cached_property
    def digest(self) -> str:
        """SHA-256 of the canonical DIMACS body (no sampling set)."""
        return hashlib.sha256(emit_dimacs(self).encode()).hexdigest()


@dataclass(frozen=True)
class SamplingSet:
    """Ordered, duplicate-free, non-empty set of variables to hash over."""

    vars: tuple[int, ...]

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vars)
        if not vs:
            raise ContractViolation("sampling set must be non-empty")
        if len(set(vs)) != len(vs):
            raise ContractViolation("sampling set contains duplicates")
        if min(vs) < 1:
            raise ContractViolation("sampling set variables must be positive")
        object.__setattr__(self, "vars", vs)

    def __len__(self):
        return len(self.vars)

    def __iter__(self):
        return iter(self.vars)

    @classmethod
    def full(cls, f: CnfFormula) -> SamplingSet:
        return cls(tuple(range(1, f.num_vars + 1)))

    def check(self, f: CnfFormula) -> SamplingSet:
        if max(self.vars) > f.num_vars:
            raise ContractViolation(
                f"sampling variable {max(self.vars)} exceeds num_vars={f.num_vars}"
            )
        return self


@dataclass(frozen=True)
class Assignment:
    """Total truth assignment over ``vars`` (kept in ascending order)."""

    vars: tuple[int, ...]
    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.vars) != len(self.values):
            raise ContractViolation("vars and values differ in length")
        pairs = sorted(zip((int(v) for v in self.vars), (bool(b) for b in self.values)))
        vs = tuple(p[0] for p in pairs)
        if len(set(vs)) != len(vs):
            raise ContractViolation("assignment lists a variable twice")
        object.__setattr__(self, "vars", vs)
        object.__setattr__(self, "values", tuple(p[1] for p in pairs))

    @classmethod
    def from_mapping(cls, values: Mapping[int, bool]) -> Assignment:
        items = sorted(values.items())
        return cls(tuple(k for k, _ in items), tuple(bool(v) for _, v in items))

    @classmethod
    def from_literals(cls, lits: Iterable[int]) -> Assignment:
        lits = list(lits)
        return cls(tuple(abs(l) for l in lits), tuple(l > 0 for l in lits))

    @classmethod
    def from_bits(cls, vars: Iterable[int], bits) -> Assignment:
        return cls(tuple(vars), tuple(bool(b) for b in bits))

    def as_dict(self) -> dict[int, bool]:
        return dict(zip(self.vars, self.values))

    def __getitem__(self, var: int) -> bool:
        try:
            return self.values[self.vars.index(var)]
        except ValueError:
            raise KeyError(var) from None

    def __len__(self):
        return len(self.vars)

    def literals(self) -> tuple[int, ...]:
        return tuple(v if b else -v for v, b in zip(self.vars, self.values))


# ---------------------------------------------------------------- DIMACS

def parse_dimacs(text: str) -> tuple[CnfFormula, SamplingSet | None]:
    """Parse DIMACS CNF with optional ``c ind`` sampling-set lines."""
    header = None
    header_line = None
    clauses = []
    current = []
    ind_vars = []
    ind_seen = set()
    ind_lines = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            toks = line.split()
            if len(toks) >= 2 and toks[0] == "c" and toks[1] == "ind":
                for tok in toks[2:]:
                    try:
                        v = int(tok)
                    except ValueError:
                        raise DimacsParseError(f"bad sampling variable {tok!r}", lineno)
                    if v == 0:
                        continue
                    if v < 0:
                        raise DimacsParseError(f"negative sampling variable {v}", lineno)
                    if v in ind_seen:
                        raise DimacsParseError(f"duplicate sampling variable {v}", lineno)
                    ind_seen.add(v)
                    ind_vars.append(v)
                    ind_lines.append(lineno)
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            toks = line.split()
            if header is not None:
                raise DimacsParseError("second problem line", lineno)
            if len(toks) != 4 or toks[1] != "cnf":
                raise DimacsParseError("malformed header, expected 'p cnf <vars> <clauses>'", lineno)
            try:
                n, m = int(toks[2]), int(toks[3])
            except ValueError:
                raise DimacsParseError("non-integer header field", lineno)
            if n < 1 or m < 0:
                raise DimacsParseError("header counts out of range", lineno)
            header = (n, m)
            header_line = lineno
            continue
        if header is None:
            raise DimacsParseError("clause before problem line", lineno)
        n = header[0]
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsParseError(f"bad literal {tok!r}", lineno)
            if lit == 0:
                if not current:
                    raise DimacsParseError("empty clause", lineno)
                if len({abs(l) for l in current}) != len(current):
                    if any(-l in current for l in current):
                        raise DimacsParseError("tautological clause", lineno)
                    raise DimacsParseError("duplicate literal in clause", lineno)
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > n:
                raise DimacsParseError(f"literal {lit} out of range 1..{n}", lineno)
            else:
                current.append(lit)

    if header is None:
        raise DimacsParseError("missing problem line")
    if current:
        raise DimacsParseError("last clause not terminated by 0")
    n, m = header
    if len(clauses) != m:
        raise DimacsParseError(
            f"header declares {m} clauses, found {len(clauses)}", header_line
        )
    for v, lineno in zip(ind_vars, ind_lines):
        if v > n:
            raise DimacsParseError(f"sampling variable {v} out of range 1..{n}", lineno)
    formula = CnfFormula(n, tuple(clauses))
    return formula, (SamplingSet(tuple(ind_vars)) if ind_vars else None)


def emit_dimacs(f: CnfFormula, s: SamplingSet | None = None, *, ind_per_line: int = 10) -> str:
    lines = []
    if s is not None:
        vs = s.vars
        for k in range(0, len(vs), ind_per_line):
            chunk = vs[k:k + ind_per_line]
            lines.append("c ind " + " ".join(map(str, chunk)) + " 0")
    lines.append(f"p cnf {f.num_vars} {f.num_clauses}")
    for c in f.clauses:
        lines.append(" ".join(map(str, c)) + " 0")
    return "\n".join(lines) + "\n"


def read_dimacs(path) -> tuple[CnfFormula, SamplingSet | None]:
    with open(path) as fh:
        return parse_dimacs(fh.read())


# ---------------------------------------------------------------- semantics

def evaluate(f: CnfFormula, a: Assignment) -> bool:
    """True iff every clause of ``f`` has a literal satisfied by ``a``."""
    vals = a.as_dict()
    for v in range(1, f.num_vars + 1):
        if v not in vals:
            raise ContractViolation(f"assignment is partial: variable {v} missing")
    for clause in f.clauses:
        if not any(vals[abs(l)] == (l > 0) for l in clause):
            return False
    return True


def project(a: Assignment, s: SamplingSet) -> Assignment:
    vals = a.as_dict()
    missing = [v for v in s.vars if v not in vals]
    if missing:
        raise ContractViolation(f"sampling variables {missing} not in assignment domain")
    return Assignment(s.vars, tuple(vals[v] for v in s.vars))


def format_witness(a: Assignment) -> str:
    """``1 -2 3 0`` style line, ascending variable order."""
    return " ".join(map(str, a.literals())) + " 0"


def parse_witness(line: str) -> Assignment:
    toks = [int(t) for t in line.split()]
    if not toks or toks[-1] != 0:
        raise DimacsParseError("witness line must end with 0")
    return Assignment.from_literals(toks[:-1])
