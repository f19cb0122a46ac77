from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (naive_correlation, naive_energy_pairs,
                     naive_energy_quadruple, naive_has_distinct_solution,
                     naive_lambda, naive_symmetry_set)
from spandoubler.additive import (EquationSpec, PointSet, additive_energy,
                                  correlation, correlation_counts,
                                  doubling_constant,
                                  has_nondegenerate_solution, indicator,
                                  lambda_bruteforce, lambda_fourier,
                                  solution_count, spectrum, sumset,
                                  symmetry_set)
from spandoubler.errors import BudgetExceeded
from spandoubler.groups import make_group
from spandoubler.harmonic import Measure


def _z7_013():
    g = make_group([7])
    return g, PointSet.from_coords(g, [(0,), (1,), (3,)])


def _subgroup_z3sq():
    g = make_group([3, 3])
    h = PointSet.from_coords(g, [(0, 0), (0, 1), (0, 2)])
    return g, h


# -- sumset and doubling -----------------------------------------------------


def test_sumset_and_doubling_examples():
    g = make_group([5])
    a = PointSet.from_coords(g, [(0,), (1,)])
    assert sorted(int(i) for i in sumset(a, a).indices) == [0, 1, 2]
    assert doubling_constant(a) == Fraction(3, 2)

    _, h = _subgroup_z3sq()
    assert doubling_constant(h) == 1

    g7, a7 = _z7_013()
    assert sorted(int(i) for i in sumset(a7, a7).indices) == [0, 1, 2, 3, 4, 6]
    assert doubling_constant(a7) == 2


def test_doubling_empty_and_group_mismatch():
    g = make_group([5])
    with pytest.raises(ValueError):
        doubling_constant(PointSet.empty(g))
    with pytest.raises(ValueError):
        sumset(PointSet.full(g), PointSet.full(make_group([7])))


# -- correlation ----------------------------------------------------------------


def test_correlation_examples():
    g, h = _subgroup_z3sq()
    counts = correlation_counts(h, h)
    for idx in h.indices:
        assert counts[idx] == 3
    assert counts[h.mask].sum() == 9
    assert counts[~h.mask].sum() == 0

    g7, a7 = _z7_013()
    counts = correlation_counts(a7, a7)
    assert counts[0] == 3 and np.all(counts[1:] == 1)

    empty = PointSet.empty(g7)
    assert np.all(correlation_counts(a7, empty) == 0)


def test_correlation_matches_naive_oracle():
    rng = np.random.default_rng(4)
    for factors in [(7,), (3, 3), (2, 2, 3)]:
        g = make_group(factors)
        a = PointSet.from_mask(g, rng.random(g.order) < 0.5)
        b = PointSet.from_mask(g, rng.random(g.order) < 0.5)
        assert np.array_equal(correlation_counts(a, b),
                              naive_correlation(g, a.indices, b.indices))


def test_correlation_function_is_integer_valued():
    g7, a7 = _z7_013()
    f = correlation(a7, a7)
    assert f.measure is Measure.COUNTING
    assert np.all(f.values.imag == 0)
    assert np.all(f.values.real == np.round(f.values.real))


# -- spectrum ---------------------------------------------------------------------


def test_spectrum_examples():
    g = make_group([2, 2])
    a = PointSet.from_coords(g, [(0, 0), (0, 1)])
    spec = spectrum(indicator(a, Measure.PROBABILITY), 1)
    assert sorted(int(i) for i in spec.indices) == \
        sorted([g.index_of((0, 0)), g.index_of((1, 0))])

    g3 = make_group([3])
    point = PointSet.from_coords(g3, [(0,)])
    for delta in (1, 0.5, 0.1):
        assert spectrum(indicator(point, Measure.PROBABILITY), delta).size == 3

    full = PointSet.full(g3)
    spec = spectrum(indicator(full, Measure.PROBABILITY), 1)
    assert sorted(int(i) for i in spec.indices) == [0]


def test_spectrum_validation_and_monotonicity():
    g = make_group([3, 3])
    a = PointSet.from_coords(g, [(0, 0), (1, 2), (2, 1)])
    f = indicator(a, Measure.PROBABILITY)
    with pytest.raises(ValueError):
        spectrum(f, 0)
    with pytest.raises(ValueError):
        spectrum(f, 1.5)
    with pytest.raises(ValueError):
        spectrum(indicator(a, Measure.COUNTING), 0.5)
    prev = None
    for delta in (1, 0.75, 0.5, 0.25):
        spec = spectrum(f, delta)
        assert spec.contains_index(0)
        alpha = a.size / g.order
        assert spec.size <= delta**-2 / alpha + 1e-9
        if prev is not None:
            assert prev.is_subset(spec)
        prev = spec


# -- symmetry sets -----------------------------------------------------------------


def test_symmetry_set_examples():
    _, h = _subgroup_z3sq()
    assert symmetry_set(h, 1).bits == h.bits

    g7, a7 = _z7_013()
    assert sorted(int(i) for i in symmetry_set(a7, Fraction(2, 3)).indices) == [0]
    assert symmetry_set(a7, Fraction(1, 3)).size == 7


def test_symmetry_set_matches_naive_and_properties():
    rng = np.random.default_rng(8)
    for factors in [(7,), (3, 3), (2, 2, 2)]:
        g = make_group(factors)
        a = PointSet.from_mask(g, rng.random(g.order) < 0.6)
        if a.size == 0:
            a = PointSet.from_indices(g, [0])
        for eta in (Fraction(1), Fraction(2, 3), Fraction(1, 4)):
            got = {int(i) for i in symmetry_set(a, eta).indices}
            assert got == naive_symmetry_set(g, a.indices, eta)
        sym = symmetry_set(a, Fraction(1, 2))
        assert sym.contains_index(0)
        assert sym.negate().bits == sym.bits
    with pytest.raises(ValueError):
        symmetry_set(a, 0)


# -- additive energy -----------------------------------------------------------------


def test_energy_examples():
    _, h = _subgroup_z3sq()
    assert additive_energy(h) == 27   # |H|^3

    g7, a7 = _z7_013()
    assert additive_energy(a7) == 15

    single = PointSet.from_indices(g7, [2])
    assert additive_energy(single) == 1


def test_energy_matches_quadruple_loop():
    rng = np.random.default_rng(13)
    for factors in [(7,), (3, 3), (2, 2, 2)]:
        g = make_group(factors)
        a = PointSet.from_mask(g, rng.random(g.order) < 0.45)
        assert additive_energy(a) == naive_energy_quadruple(g, a.indices)
        assert additive_energy(a) == naive_energy_pairs(g, a.indices)


# -- equation counting -----------------------------------------------------------------


def test_equation_spec_validation():
    with pytest.raises(ValueError):
        EquationSpec(5, (1, 2))
    with pytest.raises(ValueError):
        EquationSpec(5, (1, 5, 1))
    eq = EquationSpec(3, (1, 1, 1))
    assert eq.balanced
    assert not EquationSpec(3, (1, 1, 2)).balanced


def test_lambda_examples():
    g3 = make_group([3])
    a = PointSet.from_coords(g3, [(0,), (1,)])
    eq = EquationSpec(3, (1, 1, 1))
    assert lambda_bruteforce(a, eq) == Fraction(2, 9)
    assert lambda_fourier(a, eq) == pytest.approx(2 / 9, abs=1e-9)

    full = PointSet.full(g3)
    assert lambda_bruteforce(full, eq) == 1
    assert lambda_fourier(full, eq) == pytest.approx(1.0, abs=1e-9)

    assert lambda_bruteforce(PointSet.empty(g3), eq) == 0

    g5 = make_group([5])
    zero = PointSet.from_indices(g5, [0])
    eq5 = EquationSpec(5, (1, 1, 3))
    assert lambda_bruteforce(zero, eq5) == Fraction(1, 25)


def test_lambda_budget():
    g = make_group([7])
    a = PointSet.full(g)
    with pytest.raises(BudgetExceeded):
        lambda_bruteforce(a, EquationSpec(7, (1, 1, 1, 1, 1)), budget=100)


def test_lambda_matches_naive_oracle():
    rng = np.random.default_rng(19)
    for factors, r in [((7,), 3), ((3, 3), 4), ((5,), 5)]:
        g = make_group(factors)
        p = g.prime_field
        a = PointSet.from_mask(g, rng.random(g.order) < 0.5)
        coeffs = tuple(int(rng.integers(1, p)) for _ in range(r))
        eq = EquationSpec(p, coeffs)
        expected = naive_lambda(g, a.indices, coeffs)
        assert lambda_bruteforce(a, eq) == expected
        assert lambda_fourier(a, eq) == pytest.approx(float(expected), abs=1e-9)


def test_has_nondegenerate_solution_examples():
    g3 = make_group([3])
    eq = EquationSpec(3, (1, 1, 1))
    found, witness = has_nondegenerate_solution(PointSet.full(g3), eq)
    assert found
    coords = [w.coords for w in witness]
    assert len(set(coords)) == 3
    total = tuple(sum(c[0] for c in coords) % 3 for _ in range(1))
    assert total == (0,)

    small = PointSet.from_coords(g3, [(0,), (1,)])
    assert has_nondegenerate_solution(small, eq) == (False, None)

    tiny = PointSet.from_indices(g3, [0])
    assert has_nondegenerate_solution(tiny, eq) == (False, None)  # |A| < r


def test_has_nondegenerate_solution_matches_naive():
    rng = np.random.default_rng(20)
    for _ in range(10):
        g = make_group([5])
        a = PointSet.from_mask(g, rng.random(g.order) < 0.6)
        coeffs = tuple(int(rng.integers(1, 5)) for _ in range(3))
        eq = EquationSpec(5, coeffs)
        got, witness = has_nondegenerate_solution(a, eq)
        assert got == naive_has_distinct_solution(g, a.indices, coeffs)
        if got:
            idx = [w.coords for w in witness]
            assert len(set(idx)) == 3
            acc = sum(c * w.coords[0] for c, w in zip(coeffs, witness)) % 5
            assert acc == 0


@given(st.integers(min_value=0, max_value=2**9 - 1),
       st.sampled_from([(3, 3), (7,), (2, 2, 2)]))
@settings(max_examples=50, deadline=None)
def test_energy_always_matches_pair_multiset(bits, factors):
    g = make_group(factors)
    a = PointSet(g, bits & ((1 << g.order) - 1))
    assert additive_energy(a) == naive_energy_pairs(g, a.indices)


def test_solution_count_consistency_with_fraction():
    g = make_group([3, 3])
    rng = np.random.default_rng(77)
    a = PointSet.from_mask(g, rng.random(g.order) < 0.5)
    eq = EquationSpec(3, (1, 2, 1, 2))
    count = solution_count(a, eq)
    assert lambda_bruteforce(a, eq) == Fraction(count, g.order**3)
