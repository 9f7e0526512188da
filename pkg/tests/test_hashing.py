import itertools
from collections import Counter

import numpy as np
import pytest

from oracles import all_hashes, hash_bits
from unigen.errors import ContractViolation, DimacsParseError
from unigen.formula import Assignment, SamplingSet
from unigen.hashing import (
    CellId,
    HashFunction,
    XorConstraint,
    apply,
    apply_many,
    constraints_to_text,
    sample_cell,
    sample_hash,
    to_constraints,
)


def _hash_table(n, m):
    """(num_hashes, 2**n) matrix of output codes, computed by the oracle."""
    ys = list(itertools.product((0, 1), repeat=n))
    table = []
    for coeffs in all_hashes(n, m):
        row = []
        for y in ys:
            bits = hash_bits(coeffs, y)
            row.append(sum(b << i for i, b in enumerate(bits)))
        table.append(row)
    return np.array(table)


def joint_counts(n, m, r):
    """For every r distinct inputs: counts of each joint output over the family."""
    table = _hash_table(n, m)
    base = 2 ** m
    out = []
    for ys in itertools.combinations(range(2 ** n), r):
        code = np.zeros(table.shape[0], dtype=np.int64)
        for y in ys:
            code = code * base + table[:, y]
        out.append(np.bincount(code, minlength=base ** r))
    return np.array(out), table.shape[0]


def test_sample_hash_is_deterministic():
    a = sample_hash(np.random.default_rng(4), 7, 3)
    b = sample_hash(np.random.default_rng(4), 7, 3)
    assert a == b and hash(a) == hash(b)
    assert a.coeffs.shape == (3, 8)


def test_sample_hash_dimensions_checked():
    rng = np.random.default_rng(0)
    with pytest.raises(ContractViolation):
        sample_hash(rng, 0, 1)
    with pytest.raises(ContractViolation):
        sample_hash(rng, 3, 0)


def test_hash_function_is_immutable():
    h = sample_hash(np.random.default_rng(1), 3, 2)
    with pytest.raises(ValueError):
        h.coeffs[0, 0] = 1


def test_sampled_family_is_uniform_n3_m2():
    # each of the 256 coefficient settings is one family member; sampling
    # draws 8 independent fair bits, so all members are equally likely
    members = {tuple(map(tuple, c)) for c in all_hashes(3, 2)}
    assert len(members) == 256
    rng = np.random.default_rng(8)
    seen = Counter(tuple(map(tuple, sample_hash(rng, 3, 2).coeffs.tolist())) for _ in range(256 * 200))
    assert set(seen) == members
    counts = np.array(list(seen.values()))
    # multinomial with 200 expected per cell
    assert abs(counts.mean() - 200) < 1e-9
    assert ((counts - 200) ** 2 / 200).sum() < 255 + 5 * np.sqrt(2 * 255)


def test_apply_zero_hash():
    h = HashFunction(np.zeros((3, 5), dtype=np.uint8))
    for y in itertools.product((0, 1), repeat=4):
        assert apply(h, y) == CellId((0, 0, 0))


def test_apply_identity_row():
    coeffs = np.zeros((1, 4), dtype=np.uint8)
    coeffs[0, 1] = 1
    assert apply(HashFunction(coeffs), (1, 0, 0)) == CellId((1,))


def test_apply_matches_definition():
    rng = np.random.default_rng(2)
    for _ in range(50):
        h = sample_hash(rng, 6, 3)
        ys = rng.integers(0, 2, size=(20, 6))
        many = apply_many(h, ys)
        for y, row in zip(ys, many):
            expect = hash_bits(h.coeffs.tolist(), y)
            assert apply(h, y).bits == expect == tuple(row)


def test_apply_accepts_assignment():
    h = sample_hash(np.random.default_rng(6), 3, 2)
    a = Assignment.from_bits((1, 2, 3), (1, 0, 1))
    assert apply(h, a) == apply(h, (1, 0, 1))


@pytest.mark.parametrize("n, m", [(1, 1), (2, 1), (3, 1), (3, 2), (4, 1), (4, 2)])
def test_single_point_uniform_exhaustive(n, m):
    counts, total = joint_counts(n, m, 1)
    assert (counts * 2 ** m == total).all()


@pytest.mark.parametrize("n, m", [(3, 1), (3, 2), (4, 2)])
def test_three_wise_independent_exhaustive(n, m):
    counts, total = joint_counts(n, m, 3)
    assert (counts * 2 ** (3 * m) == total).all()


def test_not_four_wise_independent():
    # y1 ^ y2 ^ y3 ^ y4 = 0 forces h(y1) ^ h(y2) ^ h(y3) ^ h(y4) = 0
    table = _hash_table(2, 1)
    ys = [0, 1, 2, 3]
    joint = Counter(tuple(row[ys]) for row in table)
    assert all(sum(k) % 2 == 0 for k in joint)
    assert len(joint) == 8


def test_mean_xor_width_n72():
    rng = np.random.default_rng(72)
    rows = np.concatenate([sample_hash(rng, 72, 100).matrix for _ in range(100)])
    assert rows.shape == (10_000, 72)
    mean = rows.sum(axis=1).mean()
    sigma = np.sqrt(72 / 4 / 10_000)
    assert abs(mean - 36) <= 3 * sigma


def test_constraints_zero_hash_alpha_zero_vacuous():
    h = HashFunction(np.zeros((2, 4), dtype=np.uint8))
    xs = to_constraints(h, CellId((0, 0)), SamplingSet((1, 2, 3)))
    assert xs == [XorConstraint((), 0)] * 2
    a = Assignment.from_bits((1, 2, 3), (1, 1, 0))
    assert all(x.satisfied_by(a) for x in xs)


def test_constraints_zero_hash_alpha_one_unsat():
    h = HashFunction(np.zeros((2, 4), dtype=np.uint8))
    xs = to_constraints(h, CellId((1, 0)), SamplingSet((1, 2, 3)))
    assert xs[0] == XorConstraint((), 1)
    for bits in itertools.product((0, 1), repeat=3):
        assert not xs[0].satisfied_by(Assignment.from_bits((1, 2, 3), bits))


def test_constraints_equal_hash_preimage():
    rng = np.random.default_rng(12)
    s = SamplingSet((7, 2, 5, 3))
    for _ in range(40):
        h, alpha = sample_hash(rng, 4, 3), sample_cell(rng, 3)
        xs = to_constraints(h, alpha, s)
        for y in itertools.product((0, 1), repeat=4):
            a = Assignment.from_bits(s.vars, y)
            assert all(x.satisfied_by(a) for x in xs) == (apply(h, y) == alpha)


def test_constraints_dimension_checks():
    h = sample_hash(np.random.default_rng(0), 3, 2)
    with pytest.raises(ContractViolation):
        to_constraints(h, CellId((0, 1)), SamplingSet((1, 2)))
    with pytest.raises(ContractViolation):
        to_constraints(h, CellId((0,)), SamplingSet((1, 2, 3)))


@pytest.mark.parametrize(
    "x, line",
    [
        (XorConstraint((1, 2, 3), 1), "x 1 2 3 0"),
        (XorConstraint((3, 1), 0), "x -1 3 0"),
        (XorConstraint((), 1), "x 0"),
        (XorConstraint((), 0), "c x 0"),
    ],
)
def test_xor_line_roundtrip(x, line):
    assert x.to_line() == line
    assert XorConstraint.from_line(line) == x


def test_xor_line_errors():
    with pytest.raises(DimacsParseError):
        XorConstraint.from_line("x 1 -2 0")
    with pytest.raises(DimacsParseError):
        XorConstraint.from_line("1 2 0")
    with pytest.raises(ContractViolation):
        XorConstraint((1, 1), 0)


def test_constraints_to_text():
    text = constraints_to_text([XorConstraint((1, 2), 1), XorConstraint((2,), 0)])
    assert text == "x 1 2 0\nx -2 0\n"
