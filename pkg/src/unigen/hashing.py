"""The affine XOR hash family over GF(2).

A member ``h: {0,1}^n -> {0,1}^m`` is given by an ``m x (n+1)`` bit matrix
``A``; output bit ``i`` is ``A[i,0] xor (A[i,1]*y[1] xor ... xor A[i,n]*y[n])``.
Drawing every bit of ``A`` uniformly at random selects a uniform member of
the family, which is 3-wise independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DimacsParseError
from .formula import Assignment, SamplingSet


class HashFunction:
    """Member of the affine XOR family; column 0 of ``coeffs`` holds the constants."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ContractViolation("hash coefficients must be an m x (n+1) matrix, m, n >= 1")
        if np.any(arr > 1):
            raise ContractViolation("hash coefficients must be bits")
        arr.setflags(write=False)
        self.coeffs = arr

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def constants(self) -> np.ndarray:
        return self.coeffs[:, 0]

    @property
    def matrix(self) -> np.ndarray:
        return self.coeffs[:, 1:]

    def __eq__(self, other):
        if not isinstance(other, HashFunction):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.coeffs.shape, self.coeffs.tobytes()))

    def __repr__(self):
        return f"HashFunction(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class CellId:
    """Target vector alpha; its length is the hash width m."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ContractViolation("cell bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    @property
    def m(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class XorConstraint:
    """``xor(vars) == parity``. An empty ``vars`` means the constant 0."""

    vars: tuple[int, ...]
    parity: int

    def __post_init__(self):
        vs = tuple(sorted(int(v) for v in self.vars))
        if len(set(vs)) != len(vs):
            raise ContractViolation("xor constraint repeats a variable")
        if self.parity not in (0, 1):
            raise ContractViolation("parity must be 0 or 1")
        object.__setattr__(self, "vars", vs)

    def satisfied_by(self, a: Assignment) -> bool:
        vals = a.as_dict()
        acc = 0
        for v in self.vars:
            acc ^= int(vals[v])
        return acc == self.parity

    def to_line(self) -> str:
        """Extended-DIMACS ``x`` line; parity 0 is encoded by negating the first literal.

        The vacuous empty constraint (parity 0) has no literal to negate and
        is written as the comment ``c x 0``.
        """
        if not self.vars:
            return "x 0" if self.parity else "c x 0"
        lits = list(self.vars)
        if self.parity == 0:
            lits[0] = -lits[0]
        return "x " + " ".join(map(str, lits)) + " 0"

    @classmethod
    def from_line(cls, line: str) -> XorConstraint:
        toks = line.split()
        if toks[:2] == ["c", "x"] and toks[2:] == ["0"]:
            return cls((), 0)
        if not toks or toks[0] != "x" or toks[-1] != "0":
            raise DimacsParseError(f"not an xor line: {line!r}")
        lits = [int(t) for t in toks[1:-1]]
        if not lits:
            return cls((), 1)
        parity = 1
        if lits[0] < 0:
            parity = 0
        if any(l < 0 for l in lits[1:]):
            raise DimacsParseError("only the first xor literal may be negated")
        return cls(tuple(abs(l) for l in lits), parity)


def sample_hash(rng: np.random.Generator, n: int, m: int) -> HashFunction:
    if n < 1 or m < 1:
        raise ContractViolation(f"hash dimensions must be positive (n={n}, m={m})")
    return HashFunction(rng.integers(0, 2, size=(m, n + 1), dtype=np.uint8))


def sample_cell(rng: np.random.Generator, m: int) -> CellId:
    return CellId(tuple(rng.integers(0, 2, size=m, dtype=np.uint8).tolist()))


def apply(h: HashFunction, y) -> CellId:
    """Hash ``y``, a bit sequence or an :class:`Assignment` in sampling order."""
    if isinstance(y, Assignment):
        y = y.values
    bits = np.asarray(y, dtype=np.uint8)
    if bits.shape != (h.n,):
        raise ContractViolation(f"hash expects {h.n} input bits, got {bits.shape}")
    out = (h.constants + h.matrix.astype(np.int64) @ bits) & 1
    return CellId(tuple(out.tolist()))


def apply_many(h: HashFunction, ys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`apply`: rows of ``ys`` -> rows of output bits."""
    ys = np.asarray(ys, dtype=np.int64)
    return ((ys @ h.matrix.T.astype(np.int64)) + h.constants) & 1


def to_constraints(h: HashFunction, alpha: CellId, s: SamplingSet) -> list[XorConstraint]:
    if h.n != len(s):
        raise ContractViolation(f"hash width n={h.n} but |S|={len(s)}")
    if alpha.m != h.m:
        raise ContractViolation(f"cell has {alpha.m} bits but hash has m={h.m}")
    svars = np.asarray(s.vars)
    out = []
    for i in range(h.m):
        row = h.coeffs[i]
        vars_i = svars[np.flatnonzero(row[1:])]
        out.append(XorConstraint(tuple(vars_i.tolist()), alpha.bits[i] ^ int(row[0])))
    return out


def constraints_to_text(xors: Sequence[XorConstraint]) -> str:
    return "".join(x.to_line() + "\n" for x in xors)
