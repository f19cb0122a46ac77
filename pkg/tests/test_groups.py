import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spandoubler.groups import (GroupElement, arithmetic, character_eval,
                                make_group)

small_factors = st.lists(st.sampled_from([2, 3, 4, 5, 7]), min_size=1, max_size=3)


def test_make_group_basic():
    g = make_group([3, 3])
    assert g.order == 9
    assert g.prime_field == 3
    g = make_group([2, 2, 2])
    assert g.order == 8
    assert g.prime_field == 2


def test_make_group_non_prime_field():
    assert make_group([4]).prime_field is None
    assert make_group([2, 4]).prime_field is None
    assert make_group([6, 6]).prime_field is None
    assert make_group([7]).prime_field == 7


def test_make_group_rejects_bad_factors():
    with pytest.raises(ValueError):
        make_group([6], max_order=4)
    with pytest.raises(ValueError):
        make_group([1, 3])
    with pytest.raises(ValueError):
        make_group([])


def test_order_cap_env_override(monkeypatch):
    monkeypatch.setenv("SPANDOUBLER_MAX_ORDER", "10")
    with pytest.raises(ValueError):
        make_group([3, 4])
    assert make_group([3, 3]).order == 9


def test_arithmetic_examples():
    g = make_group([3, 3])
    assert arithmetic(g, "add", (1, 2), (2, 2)).coords == (0, 1)
    assert arithmetic(g, "negate", (1, 0)).coords == (2, 0)
    g5 = make_group([5, 5])
    assert arithmetic(g5, "scalar_mul", 2, (1, 2)).coords == (2, 4)


def test_scalar_mul_rejects_non_prime_and_zero():
    g = make_group([4])
    with pytest.raises(ValueError):
        g.scalar_mul(3, (1,))
    g5 = make_group([5])
    with pytest.raises(ValueError):
        g5.scalar_mul(10, (1,))


def test_character_eval_examples():
    g2 = make_group([2])
    assert character_eval(g2, (0,), (1,)) == pytest.approx(1.0)
    assert character_eval(g2, (1,), (1,)) == pytest.approx(-1.0)
    g3 = make_group([3])
    assert character_eval(g3, (1,), (2,)) == pytest.approx(np.exp(4j * np.pi / 3))


def test_character_eval_shape_mismatch():
    g = make_group([3, 3])
    with pytest.raises(ValueError):
        character_eval(g, (1,), (0, 0))


def test_index_roundtrip_exhaustive():
    for factors in [(2,), (5,), (2, 3), (3, 3, 3), (2, 2, 2, 2)]:
        g = make_group(factors)
        for i in range(g.order):
            assert g.index_of(g.element_at(i)) == i


def test_canonical_order_is_lexicographic():
    g = make_group([2, 3])
    seen = [g.element_at(i).coords for i in range(g.order)]
    assert seen == sorted(seen)
    assert seen[0] == (0, 0)


def test_character_multiplicative_exhaustive_small():
    # gamma(x + y) = gamma(x) * gamma(y) for every triple, orders <= 64
    for factors in [(2, 2, 2), (3, 3), (12,), (2, 3, 5), (7,)]:
        g = make_group(factors)
        n = g.order
        table = np.array(
            [[character_eval(g, g.element_at(t), g.element_at(x)) for x in range(n)]
             for t in range(n)]
        )
        for y in range(n):
            perm = g.shift_perm(y)
            assert np.max(np.abs(table[:, perm] - table * table[:, y][:, None])) < 1e-9


def test_scalar_roundtrip_exhaustive():
    for factors in [(3,), (5, 5), (7,), (3, 3, 3)]:
        g = make_group(factors)
        p = g.prime_field
        for c in range(1, p):
            cinv = pow(c, -1, p)
            perm = g.scalar_perm(c)[g.scalar_perm(cinv)]
            assert np.array_equal(perm, np.arange(g.order))


@given(small_factors, st.integers(min_value=0, max_value=10**6),
       st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_add_commutes_and_negation(factors, i, j):
    g = make_group(factors)
    x = g.element_at(i % g.order)
    y = g.element_at(j % g.order)
    assert g.add(x, y) == g.add(y, x)
    assert g.add(x, g.negate(x)).coords == g.element_at(0).coords


@given(small_factors, st.integers(min_value=0, max_value=10**6))
@settings(max_examples=40, deadline=None)
def test_shift_perm_matches_elementwise_add(factors, w):
    g = make_group(factors)
    widx = w % g.order
    perm = g.shift_perm(widx)
    for z in range(min(g.order, 12)):
        expected = g.index_of(g.add(g.element_at(z), g.element_at(widx)))
        assert perm[z] == expected


def test_group_element_iteration():
    e = GroupElement((1, 2))
    assert list(e) == [1, 2]
    assert len(e) == 2
