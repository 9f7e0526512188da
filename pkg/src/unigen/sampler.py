"""Almost-uniform witness generation by hashing over a sampling set.

Usage is split in two phases. :func:`presample` runs once per formula: it
derives the cell-size window from the tolerance, enumerates the formula
outright when it has few witnesses, and otherwise estimates the witness
count to anchor the hash width ``q``. :func:`draw` then produces one witness
per call by trying hash widths ``q-3 .. q`` with fresh random hashes,
returning a uniform pick from the first cell whose size falls inside the
window.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .counting import CountEstimate, approx_count
from .engine import DEFAULT_BSAT_TIMEOUT, bsat, bsat_hashed
from .errors import ContractViolation, UnigenError
from .formula import Assignment, CnfFormula, SamplingSet, parse_witness, format_witness
from .hashing import sample_cell, sample_hash

EPSILON_FLOOR = 1.71
KAPPA_TOL = 1e-9
COUNTER_TOLERANCE = 0.8
COUNTER_CONFIDENCE = 0.8
DEFAULT_RETRY_CAP = 3
STATE_HEADER = "unigen-presample 1"


def _tolerance_of(kappa: float) -> float:
    return (1 + kappa) * (2.23 + 0.48 / (1 - kappa) ** 2) - 1


@dataclass(frozen=True)
class KappaPivot:
    kappa: float
    pivot: int

    @property
    def hi_thresh(self) -> float:
        return 1 + (1 + self.kappa) * self.pivot

    @property
    def lo_thresh(self) -> float:
        return self.pivot / (1 + self.kappa)

    @property
    def cell_bound(self) -> int:
        """Enumeration bound: one past the largest admissible cell."""
        return math.ceil(self.hi_thresh) + 1


def compute_kappa_pivot(epsilon: float) -> KappaPivot:
    """Solve for the internal tolerance kappa by bisection, then size the pivot."""
    if not epsilon > EPSILON_FLOOR:
        raise ContractViolation(f"epsilon must exceed {EPSILON_FLOOR}, got {epsilon}")
    lo, hi = 0.0, 1.0
    kappa = 0.5
    for _ in range(200):
        kappa = (lo + hi) / 2
        if kappa in (lo, hi):
            break
        resid = _tolerance_of(kappa) - epsilon
        if abs(resid) <= KAPPA_TOL / 100:
            break
        if resid < 0:
            lo = kappa
        else:
            hi = kappa
    pivot = math.ceil(3 * math.exp(0.5) * (1 + 1 / kappa) ** 2)
    return KappaPivot(kappa, pivot)


# ---------------------------------------------------------------- state

@dataclass(frozen=True)
class EasyPath:
    """All witnesses, enumerated exhaustively; rows sorted on the sampling set."""

    models: np.ndarray = field(repr=False)

    @property
    def witnesses(self) -> list[Assignment]:
        vs = tuple(range(1, self.models.shape[1] + 1))
        return [Assignment.from_bits(vs, row) for row in self.models]


@dataclass(frozen=True)
class HashPath:
    q: int
    estimate: CountEstimate


@dataclass(frozen=True)
class PresampleState:
    formula: CnfFormula
    sampling_set: SamplingSet
    epsilon: float
    params: KappaPivot
    mode: Union[EasyPath, HashPath]


@dataclass(frozen=True)
class DrawOutcome:
    """Result of one draw: a witness, or ``None`` on failure.

    ``widths`` lists the hash widths tried, ``cell_size`` the size of the
    last cell examined, and ``reason`` one of ``"ok"``, ``"window"`` (no
    cell fell inside the size window), ``"timeout"`` or ``"unsat"``.
    """

    witness: Assignment | None
    widths: tuple[int, ...] = ()
    cell_size: int | None = None
    reason: str = "ok"

    @property
    def ok(self) -> bool:
        return self.witness is not None


def hash_anchor(count: int, pivot: int) -> int:
    return math.ceil(math.log2(count) + math.log2(1.8) - math.log2(pivot))


def _sorted_rows(models: np.ndarray, s: SamplingSet) -> np.ndarray:
    if models.shape[0] < 2:
        return models
    proj = models[:, np.asarray(s.vars) - 1]
    order = np.lexsort(proj.T[::-1])
    return models[order]


def presample(f: CnfFormula, epsilon: float, s: SamplingSet, rng: np.random.Generator, *,
              counter=approx_count, budget: float | None = DEFAULT_BSAT_TIMEOUT,
              kernel: str | None = None) -> PresampleState:
    """One-time setup: thresholds, then either full enumeration or a count estimate."""
    params = compute_kappa_pivot(epsilon)
    s.check(f)
    first = bsat(f, [], s, params.cell_bound, budget, kernel=kernel)
    if first.timed_out:
        from .errors import SolverTimeout
        raise SolverTimeout("enumeration timed out during presampling")
    if len(first) <= params.hi_thresh:
        models = _sorted_rows(first.models, s)
        models.setflags(write=False)
        return PresampleState(f, s, epsilon, params, EasyPath(models))
    estimate = counter(f, s, COUNTER_TOLERANCE, COUNTER_CONFIDENCE, rng, budget=budget)
    q = hash_anchor(max(estimate.value, 1), params.pivot)
    return PresampleState(f, s, epsilon, params, HashPath(q, estimate))


def _row_assignment(row) -> Assignment:
    return Assignment.from_bits(range(1, len(row) + 1), row)


def draw(state: PresampleState, rng: np.random.Generator, *,
         budget: float | None = DEFAULT_BSAT_TIMEOUT, retry_cap: int = DEFAULT_RETRY_CAP,
         kernel: str | None = None) -> DrawOutcome:
    """Generate one witness (or report failure) from a presampled state."""
    mode = state.mode
    if isinstance(mode, EasyPath):
        k = mode.models.shape[0]
        if k == 0:
            return DrawOutcome(None, (), 0, "unsat")
        j = int(rng.integers(k))
        return DrawOutcome(_row_assignment(mode.models[j]), (), k, "ok")

    f, s, params = state.formula, state.sampling_set, state.params
    n = len(s)
    tried = []
    size = None
    # width 0 is the whole space, already known to exceed the window
    for i in range(max(mode.q - 3, 1), mode.q + 1):
        retries = 0
        while True:
            h = sample_hash(rng, n, i)
            alpha = sample_cell(rng, i)
            cell = bsat_hashed(f, h, alpha, s, params.cell_bound, budget, kernel=kernel)
            if not cell.timed_out:
                break
            retries += 1
            if retries > retry_cap:
                return DrawOutcome(None, tuple(tried + [i]), len(cell), "timeout")
        tried.append(i)
        size = len(cell)
        if params.lo_thresh <= size <= params.hi_thresh:
            rows = _sorted_rows(cell.models, s)
            j = int(rng.integers(size))
            return DrawOutcome(_row_assignment(rows[j]), tuple(tried), size, "ok")
    return DrawOutcome(None, tuple(tried), size, "window")


def unigen(f: CnfFormula, epsilon: float, s: SamplingSet, rng: np.random.Generator,
           **kwargs) -> DrawOutcome:
    """Presample and draw once."""
    counter = kwargs.pop("counter", approx_count)
    state = presample(f, epsilon, s, rng, counter=counter,
                      budget=kwargs.get("budget", DEFAULT_BSAT_TIMEOUT),
                      kernel=kwargs.get("kernel"))
    return draw(state, rng, **kwargs)


def iter_draws(state: PresampleState, n: int, rng: np.random.Generator, *,
               workers: int = 1, chunk: int = 4096, **kwargs) -> Iterator[DrawOutcome]:
    """Yield ``n`` draws, each on its own child stream spawned from ``rng``.

    Results come back in stream order whatever ``workers`` is, so the output
    is a function of the seed alone.
    """
    if n < 1:
        raise ContractViolation("draw count must be at least 1")
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        done = 0
        while done < n:
            streams = rng.spawn(min(chunk, n - done))
            done += len(streams)
            if pool is None:
                for g in streams:
                    yield draw(state, g, **kwargs)
            else:
                yield from pool.map(lambda g: draw(state, g, **kwargs), streams)
    finally:
        if pool is not None:
            pool.shutdown()


def draw_many(state: PresampleState, n: int, rng: np.random.Generator, **kwargs) -> list[DrawOutcome]:
    return list(iter_draws(state, n, rng, **kwargs))


def draw_until_success(state: PresampleState, rng: np.random.Generator, max_attempts: int = 10,
                       **kwargs) -> DrawOutcome:
    """Repeat independent draws until one succeeds; returns the last outcome."""
    out = DrawOutcome(None, reason="window")
    for _ in range(max_attempts):
        out = draw(state, rng, **kwargs)
        if out.ok or out.reason == "unsat":
            return out
    return out


# ---------------------------------------------------------------- persistence

def dump_state(state: PresampleState) -> str:
    p = state.params
    lines = [
        STATE_HEADER,
        f"formula-sha256 {state.formula.digest}",
        "sampling-set " + " ".join(map(str, state.sampling_set.vars)),
        f"epsilon {state.epsilon!r}",
        f"kappa {p.kappa!r}",
        f"pivot {p.pivot}",
    ]
    if isinstance(state.mode, EasyPath):
        lines.append("mode easy")
        lines.append(f"witnesses {state.mode.models.shape[0]}")
        for w in state.mode.witnesses:
            lines.append("w " + format_witness(w))
    else:
        est = state.mode.estimate
        lines.append("mode hash")
        lines.append(f"q {state.mode.q}")
        lines.append(f"estimate {est.value} {est.tolerance!r} {est.confidence!r} {int(est.exact)}")
    return "\n".join(lines) + "\n"


def load_state(text: str, f: CnfFormula) -> PresampleState:
    """Rebuild a state saved by :func:`dump_state` for the same formula."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != STATE_HEADER:
        raise UnigenError("not a presample state file (bad header)")
    kv = {}
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "w":
            rows.append(parse_witness(rest))
        else:
            kv[key] = rest.strip()
    if kv.get("formula-sha256") != f.digest:
        raise UnigenError("presample state belongs to a different formula")
    s = SamplingSet(tuple(int(v) for v in kv["sampling-set"].split())).check(f)
    epsilon = float(kv["epsilon"])
    params = compute_kappa_pivot(epsilon)
    if params.pivot != int(kv["pivot"]) or abs(params.kappa - float(kv["kappa"])) > KAPPA_TOL:
        raise UnigenError("stored kappa/pivot disagree with epsilon")
    if kv["mode"] == "easy":
        if len(rows) != int(kv["witnesses"]):
            raise UnigenError("witness count mismatch in state file")
        models = np.array([[int(b) for b in w.values] for w in rows], dtype=np.uint8)
        models = models.reshape(len(rows), f.num_vars)
        models.setflags(write=False)
        mode = EasyPath(models)
    else:
        value, tol, conf, exact = kv["estimate"].split()
        mode = HashPath(int(kv["q"]), CountEstimate(int(value), float(tol), float(conf), bool(int(exact))))
    return PresampleState(f, s, epsilon, params, mode)
