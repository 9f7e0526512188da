import itertools
import threading

import numpy as np
import pytest

from formulas import pigeonhole
from oracles import models, projections, random_cnf
from unigen import engine
from unigen.engine import (
    SolverSession,
    bsat,
    bsat_hashed,
    encode_xor,
    encode_xors,
    get_kernel,
    reduce_parity_system,
)
from unigen.errors import ContractViolation, SolverTimeout
from unigen.formula import Assignment, CnfFormula, SamplingSet
from unigen.hashing import XorConstraint, sample_cell, sample_hash, to_constraints

KERNELS = ["python"] + (["compiled"] if engine._compiled is not None else [])


def test_compiled_kernel_is_built():
    assert engine._compiled is not None
    assert engine.backend_name() in ("compiled", "python")


def test_kernel_selection(monkeypatch):
    assert get_kernel("python") is engine._kernel_py
    monkeypatch.setenv("UNIGEN_PURE_PYTHON", "1")
    assert get_kernel() is engine._kernel_py
    with pytest.raises(ValueError):
        get_kernel("fortran")


@pytest.mark.parametrize("width", [3, 4, 6])
def test_xor_encoding_exact(width):
    # every model of the CNF encoding, projected on the xor variables, has the
    # right parity, and every right-parity assignment extends to exactly one model
    for size in range(1, 11):
        for parity in (0, 1):
            x = XorConstraint(tuple(range(1, size + 1)), parity)
            flat, nxt = encode_xor(x, size + 1, width)
            total = nxt - 1
            clauses, cur = [], []
            for lit in flat.tolist():
                if lit == 0:
                    clauses.append(tuple(cur))
                    cur = []
                else:
                    cur.append(lit)
            assert all(len(c) <= width for c in clauses)
            rows = models(total, clauses)
            base = rows[:, :size]
            assert (base.sum(axis=1) % 2 == parity).all()
            assert len(rows) == 2 ** (size - 1) == len(projections(rows, range(1, size + 1)))


def test_xor_encoding_empty():
    flat, nxt = encode_xor(XorConstraint((), 0), 5)
    assert flat.size == 0 and nxt == 5
    flat, _ = encode_xor(XorConstraint((), 1), 5)
    assert flat.tolist() == [0]


def _solutions(a, b):
    pts = np.array(list(itertools.product((0, 1), repeat=a.shape[1])), dtype=np.int64)
    return {tuple(p) for p in pts if ((a.astype(np.int64) @ p) % 2 == b).all()}


def test_reduce_parity_system_keeps_solutions():
    rng = np.random.default_rng(5)
    for _ in range(300):
        m, k = int(rng.integers(1, 7)), int(rng.integers(1, 8))
        a = rng.integers(0, 2, size=(m, k)).astype(bool)
        b = rng.integers(0, 2, size=m).astype(bool)
        ra, rb = reduce_parity_system(a, b)
        assert _solutions(ra, rb) == _solutions(a, b)
        if not _solutions(a, b):
            assert ra.shape[0] == 1 and not ra.any() and rb[0]
            continue
        assert ra.shape[0] <= m and ra.any(axis=1).all()
        # each row's pivot is its highest column and appears in no other row
        pivots = [int(np.flatnonzero(row)[-1]) for row in ra]
        assert len(set(pivots)) == len(pivots)
        for i, c in enumerate(pivots):
            assert ra[:, c].sum() == 1 and ra[i, c]


def test_encode_xors_inconsistent_is_empty_clause():
    xs = [XorConstraint((1, 2), 0), XorConstraint((2, 3), 0), XorConstraint((1, 3), 1)]
    flat, total = encode_xors(xs, 3)
    assert flat.tolist() == [0] and total == 3


def test_encode_xors_numbers_aux_after_formula():
    xs = [XorConstraint(tuple(range(1, 11)), 1), XorConstraint((1, 2), 0)]
    flat, total = encode_xors(xs, 10, width=4)
    assert total > 10
    assert max(abs(flat)) == total


@pytest.mark.parametrize("kernel", KERNELS)
def test_unit_formula(kernel):
    f = CnfFormula(1, ((1,),))
    s = SamplingSet((1,))
    a = SolverSession(f, s, kernel=kernel).solve_one()
    assert a == Assignment.from_mapping({1: True})
    sess = SolverSession(f, s, kernel=kernel)
    sess.add_xors([XorConstraint((1,), 0)])
    assert sess.solve_one() is None


@pytest.mark.parametrize("kernel", KERNELS)
def test_bsat_or_clause(kernel):
    f = CnfFormula(2, ((1, 2),))
    s = SamplingSet((1, 2))
    res = bsat(f, [], s, 5, kernel=kernel)
    assert len(res) == 3 and res.exhausted and not res.timed_out
    res = bsat(f, [], s, 2, kernel=kernel)
    assert len(res) == 2 and not res.exhausted


@pytest.mark.parametrize("kernel", KERNELS)
def test_solve_matches_brute_force_sat(kernel):
    rng = np.random.default_rng(10)
    sat_seen = set()
    for _ in range(60):
        clauses = random_cnf(rng, 10, int(rng.integers(20, 60)), 2, 3)
        f = CnfFormula(10, tuple(clauses))
        expect = len(models(10, clauses)) > 0
        a = SolverSession(f, kernel=kernel).solve_one()
        assert (a is not None) == expect
        if a is not None:
            row = np.array([[int(b) for b in a.values]], dtype=np.uint8)
            assert len(models(10, clauses)) and tuple(row[0]) in {tuple(r) for r in models(10, clauses)}
        sat_seen.add(expect)
    assert sat_seen == {True, False}


def _random_hashed_instance(rng, n):
    clauses = random_cnf(rng, n, int(rng.integers(0, 3 * n)))
    f = CnfFormula(n, tuple(clauses))
    k = int(rng.integers(1, n + 1))
    s = SamplingSet(tuple(int(v) for v in rng.choice(n, size=k, replace=False) + 1))
    m = int(rng.integers(1, min(k, 4) + 1))
    h, alpha = sample_hash(rng, k, m), sample_cell(rng, m)
    return f, s, h, alpha


def _oracle_cell(f, s, h, alpha):
    xs = to_constraints(h, alpha, s)
    rows = models(f.num_vars, f.clauses, [(x.vars, x.parity) for x in xs])
    return projections(rows, s.vars)


@pytest.mark.parametrize("kernel", KERNELS)
def test_bsat_matches_brute_force(kernel):
    rng = np.random.default_rng(20)
    reps = 60 if kernel == "python" else 200
    for _ in range(reps):
        f, s, h, alpha = _random_hashed_instance(rng, int(rng.integers(1, 13)))
        expect = _oracle_cell(f, s, h, alpha)
        res = bsat(f, to_constraints(h, alpha, s), s, 2 ** f.num_vars + 1, kernel=kernel)
        got = {tuple(int(b) for b in r) for r in res.projection_bits}
        assert res.exhausted and got == expect and len(res) == len(expect)
        # full models really are models
        for row in res.models:
            a = tuple(row)
            assert a in {tuple(r) for r in models(f.num_vars, f.clauses)}


def test_bsat_hashed_agrees_with_xor_path():
    rng = np.random.default_rng(21)
    for _ in range(100):
        f, s, h, alpha = _random_hashed_instance(rng, int(rng.integers(2, 13)))
        a = bsat(f, to_constraints(h, alpha, s), s, 50)
        b = bsat_hashed(f, h, alpha, s, 50)
        assert np.array_equal(a.models, b.models)
        assert (a.exhausted, a.timed_out) == (b.exhausted, b.timed_out)


def test_bound_is_respected():
    f = CnfFormula(8, ((1, 2),))
    res = bsat(f, [], SamplingSet.full(f), 17)
    assert len(res) == 17 and not res.exhausted


def test_witnesses_distinct_on_sampling_set_only():
    # x3 is free, so each projection on (1, 2) has two extensions
    f = CnfFormula(3, ((1, 2),))
    res = bsat(f, [], SamplingSet((1, 2)), 10)
    assert len(res) == 3 and res.exhausted
    assert len({tuple(r) for r in res.projection_bits}) == 3


def test_aux_variables_not_in_output():
    f = CnfFormula(12, ())
    s = SamplingSet.full(f)
    x = XorConstraint(tuple(range(1, 13)), 1)
    res = bsat(f, [x], s, 4)
    assert res.models.shape == (4, 12)


@pytest.mark.skipif(engine._compiled is None, reason="compiled kernel not built")
def test_kernels_agree_bit_for_bit():
    rng = np.random.default_rng(30)
    for _ in range(40):
        n = int(rng.integers(20, 60))
        flat = []
        for c in random_cnf(rng, n, int(3.5 * n), 3, 3):
            flat.extend(c)
            flat.append(0)
        flat = np.array(flat, dtype=np.int32)
        blk = np.sort(rng.choice(n, size=int(rng.integers(1, n)), replace=False) + 1).astype(np.int32)
        outs = [get_kernel(k).enumerate_models(n, flat, blk, n, 40, None) for k in ("python", "compiled")]
        assert outs[0][1] == outs[1][1]
        assert np.array_equal(outs[0][0], outs[1][0])


@pytest.mark.parametrize("kernel", KERNELS)
def test_timeout_reported(kernel):
    f = pigeonhole(9, 8)
    res = bsat(f, [], SamplingSet.full(f), 1, budget=1e-9, kernel=kernel)
    assert res.timed_out and not res.exhausted and len(res) == 0
    with pytest.raises(SolverTimeout):
        SolverSession(f, budget=1e-9, kernel=kernel).solve_one()


def test_pigeonhole_unsat_without_budget():
    f = pigeonhole(5, 4)
    res = bsat(f, [], SamplingSet.full(f), 1, budget=None)
    assert res.exhausted and len(res) == 0


def test_session_block_and_reset():
    f = CnfFormula(2, ((1, 2),))
    sess = SolverSession(f, SamplingSet((1, 2)))
    seen = []
    while (a := sess.solve_one()) is not None:
        seen.append(a)
        sess.block(a)
    assert len(seen) == 3 and len(set(seen)) == 3
    sess.reset()
    assert sess.solve_one() is not None
    assert sess.count(10) == (3, True)


def test_session_contracts():
    f = CnfFormula(3, ())
    sess = SolverSession(f, SamplingSet((1, 2)))
    with pytest.raises(ContractViolation):
        sess.add_xors([XorConstraint((3,), 1)])
    with pytest.raises(ContractViolation):
        sess.block(Assignment.from_mapping({1: True}))
    with pytest.raises(ContractViolation):
        sess.enumerate(0)


def test_concurrent_sessions_match_sequential():
    rng = np.random.default_rng(40)
    jobs = [_random_hashed_instance(rng, 12) for _ in range(16)]
    seq = [bsat_hashed(f, h, a, s, 30).models for f, s, h, a in jobs]
    par = [None] * len(jobs)

    def work(i):
        f, s, h, a = jobs[i]
        par[i] = bsat_hashed(f, h, a, s, 30).models

    threads = [threading.Thread(target=work, args=(i,)) for i in range(len(jobs))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(a, b) for a, b in zip(seq, par))


def test_debug_logging(caplog):
    f = CnfFormula(2, ((1, 2),))
    with caplog.at_level("DEBUG", logger="unigen.engine"):
        sess = SolverSession(f, SamplingSet((1, 2)))
        sess.add_xors([XorConstraint((1, 2), 0)])
        sess.block(Assignment.from_mapping({1: True, 2: True}))
        sess.reset()
    text = caplog.text
    assert "add x -1 2 0" in text and "block -1 -2" in text and "retract" in text
