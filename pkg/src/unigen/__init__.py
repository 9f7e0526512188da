"""Almost-uniform generation of SAT witnesses by 3-wise independent XOR hashing."""

from .counting import CountEstimate, approx_count, exact_count
from .engine import SolverSession, WitnessList, backend_name, bsat
from .errors import (
    ContractViolation,
    CountingError,
    DimacsParseError,
    EnumerationGuardError,
    SolverTimeout,
    UnigenError,
)
from .formula import Assignment, CnfFormula, SamplingSet, emit_dimacs, parse_dimacs, read_dimacs
from .hashing import CellId, HashFunction, XorConstraint, sample_hash
from .sampler import (
    DrawOutcome,
    PresampleState,
    compute_kappa_pivot,
    draw,
    draw_many,
    draw_until_success,
    presample,
    unigen,
)

__version__ = "0.1.0"
