"""Uniformity evaluation: an exactly uniform reference sampler, histograms,
Theorem-style probability bounds and a chi-square comparison."""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .counting import EXACT_GUARD
from .engine import bsat
from .errors import EnumerationGuardError
from .formula import CnfFormula, SamplingSet
from .sampler import DrawOutcome, iter_draws, presample

DEFAULT_SLACK = 4.0
_WORD_BITS = 32


@dataclass
class Histogram:
    """Draw counts keyed by the witness's S-projection (a tuple of signed literals).

    Only witnesses drawn at least once appear in ``counts``.
    """

    counts: Counter = field(default_factory=Counter)
    total: int = 0
    failures: int = 0

    def record(self, outcome: DrawOutcome, s: SamplingSet):
        self.total += 1
        if outcome.witness is None:
            self.failures += 1
            return
        vals = outcome.witness.values
        self.counts[tuple(v if vals[v - 1] else -v for v in s.vars)] += 1

    @property
    def successes(self) -> int:
        return self.total - self.failures

    @property
    def success_rate(self) -> float:
        return self.successes / self.total if self.total else 0.0

    def frequency_of_frequency(self, support: int | None = None) -> dict[int, int]:
        """Map from occurrence count to number of witnesses drawn that often.

        With ``support`` (the number of witnesses), never-drawn witnesses are
        reported under count 0.
        """
        fof = Counter(self.counts.values())
        if support is not None and support > len(self.counts):
            fof[0] += support - len(self.counts)
        return dict(sorted(fof.items()))

    def chi_square(self, support: int) -> float:
        """Pearson statistic of the successful draws against uniform over ``support``."""
        n = self.successes
        if n == 0:
            return 0.0
        expected = n / support
        seen = np.fromiter(self.counts.values(), dtype=np.float64, count=len(self.counts))
        unseen = support - len(self.counts)
        return float(((seen - expected) ** 2).sum() / expected + unseen * expected)


def enumerate_projections(f: CnfFormula, s: SamplingSet, *, guard: int = EXACT_GUARD) -> list[tuple[int, ...]]:
    """Every S-projection of a witness, as sorted literal tuples."""
    if len(s) > guard:
        raise EnumerationGuardError(f"|S| = {len(s)} exceeds exact enumeration guard {guard}")
    res = bsat(f, [], s, 2 ** len(s), budget=None)
    keys = [tuple(v if b else -v for v, b in zip(s.vars, row)) for row in res.projection_bits]
    return sorted(keys)


def uniform_indices(words: np.ndarray, k: int, bits: int = _WORD_BITS) -> np.ndarray:
    """Map raw ``bits``-bit words to uniform indices in ``[0, k)`` by rejection.

    Words at or above the largest multiple of ``k`` are discarded, so every
    index is hit by exactly ``2**bits // k`` word values.
    """
    if k < 1:
        raise ValueError("k must be positive")
    words = np.asarray(words, dtype=np.uint64)
    limit = (2 ** bits // k) * k
    return (words[words < limit] % k).astype(np.int64)


def ideal_sampler(f: CnfFormula, s: SamplingSet, n: int, rng: np.random.Generator,
                  witnesses: list | None = None) -> Histogram:
    """``n`` exactly uniform draws from the projected witness set."""
    keys = witnesses if witnesses is not None else enumerate_projections(f, s)
    hist = Histogram(total=n)
    if n == 0:
        return hist
    if not keys:
        hist.failures = n
        return hist
    k = len(keys)
    got = []
    need = n
    while need > 0:
        idx = uniform_indices(rng.integers(0, 2 ** _WORD_BITS, size=need + 16, dtype=np.uint64), k)
        got.append(idx[:need])
        need -= len(got[-1])
    tally = np.bincount(np.concatenate(got), minlength=k)
    hist.counts = Counter({keys[i]: int(c) for i, c in enumerate(tally) if c})
    return hist


def theorem_bounds(epsilon: float, support: int) -> tuple[float, float]:
    """Per-witness probability window ``[1/((1+eps)(K-1)), (1+eps)/(K-1)]``."""
    d = support - 1
    return 1 / ((1 + epsilon) * d), (1 + epsilon) / d


@dataclass(frozen=True)
class UniformityReport:
    epsilon: float
    witnesses: int
    draws: int
    successes: int
    p_min: float
    p_max: float
    lower: float
    upper: float
    slack: float
    bounds_ok: bool
    chi2_unigen: float
    chi2_ideal: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.draws if self.draws else 0.0

    @property
    def chi2_ratio(self) -> float:
        return self.chi2_unigen / self.chi2_ideal if self.chi2_ideal else math.inf

    def summary(self) -> str:
        g = "{:.6g}".format
        rows = [
            ("epsilon", g(self.epsilon)),
            ("witnesses", str(self.witnesses)),
            ("draws", str(self.draws)),
            ("successes", str(self.successes)),
            ("success_rate", g(self.success_rate)),
            ("p_min", g(self.p_min)),
            ("p_max", g(self.p_max)),
            ("bound_lower", g(self.lower)),
            ("bound_upper", g(self.upper)),
            ("slack_sigmas", g(self.slack)),
            ("bounds_ok", "yes" if self.bounds_ok else "no"),
            ("chi2_unigen", g(self.chi2_unigen)),
            ("chi2_ideal", g(self.chi2_ideal)),
            ("chi2_ratio", g(self.chi2_ratio)),
        ]
        return "".join(f"{k}: {v}\n" for k, v in rows)


def check_bounds(hist: Histogram, epsilon: float, support: int, slack: float = DEFAULT_SLACK):
    """Empirical ``count / draws`` extremes and whether all of them sit inside
    the probability window widened by ``slack`` binomial standard deviations."""
    n = hist.total
    lower, upper = theorem_bounds(epsilon, support)
    counts = list(hist.counts.values())
    lo_count = min(counts) if len(counts) == support else 0
    p_min = lo_count / n if n else 0.0
    p_max = max(counts) / n if counts and n else 0.0
    sd = lambda p: math.sqrt(p * (1 - p) / n) if n else math.inf
    ok = p_min >= lower - slack * sd(lower) and p_max <= min(upper, 1.0) + slack * sd(min(upper, 1.0))
    return p_min, p_max, lower, upper, ok


def build_report(hist_u: Histogram, hist_i: Histogram, epsilon: float, support: int,
                 slack: float = DEFAULT_SLACK) -> UniformityReport:
    p_min, p_max, lower, upper, ok = check_bounds(hist_u, epsilon, support, slack)
    return UniformityReport(
        epsilon=epsilon, witnesses=support, draws=hist_u.total, successes=hist_u.successes,
        p_min=p_min, p_max=p_max, lower=lower, upper=upper, slack=slack, bounds_ok=ok,
        chi2_unigen=hist_u.chi_square(support), chi2_ideal=hist_i.chi_square(support),
    )


def unigen_histogram(f: CnfFormula, s: SamplingSet, epsilon: float, n: int,
                     rng: np.random.Generator, **kwargs) -> Histogram:
    """Presample once, then record ``n`` draws (failures included)."""
    state = presample(f, epsilon, s, rng, budget=kwargs.get("budget", 2500.0), kernel=kwargs.get("kernel"))
    hist = Histogram()
    for out in iter_draws(state, n, rng, **kwargs):
        hist.record(out, s)
    return hist


def run_comparison(f: CnfFormula, s: SamplingSet, epsilon: float, n: int, seed: int, *,
                   slack: float = DEFAULT_SLACK, **kwargs):
    """Draw ``n`` times from both samplers and compare.

    The two samplers get independent child streams of one seed, so the whole
    comparison is a function of ``(f, s, epsilon, n, seed)``.
    """
    keys = enumerate_projections(f, s)
    seq_u, seq_i = np.random.SeedSequence(seed).spawn(2)
    hist_u = unigen_histogram(f, s, epsilon, n, np.random.default_rng(seq_u), **kwargs)
    hist_i = ideal_sampler(f, s, n, np.random.default_rng(seq_i), witnesses=keys)
    return hist_u, hist_i, build_report(hist_u, hist_i, epsilon, len(keys), slack)


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def fof_csv(hist: Histogram, support: int | None = None) -> str:
    rows = ["count,multiplicity"]
    rows += [f"{c},{m}" for c, m in hist.frequency_of_frequency(support).items()]
    return "\n".join(rows) + "\n"


def histogram_csv(hist: Histogram) -> str:
    rows = ["witness,count"]
    rows += [" ".join(map(str, key)) + f",{c}" for key, c in sorted(hist.counts.items())]
    return "\n".join(rows) + "\n"


def emit_report(report: UniformityReport, hist_u: Histogram, hist_i: Histogram, out_dir) -> list[str]:
    """Write CSVs and ``summary.txt`` into ``out_dir``; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "summary.txt": report.summary(),
        "unigen_fof.csv": fof_csv(hist_u, report.witnesses),
        "ideal_fof.csv": fof_csv(hist_i, report.witnesses),
        "unigen_histogram.csv": histogram_csv(hist_u),
        "ideal_histogram.csv": histogram_csv(hist_i),
    }
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        _write(path, text)
        paths.append(path)
    return paths
