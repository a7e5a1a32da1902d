import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tilecocycle.algebra import (COMPLEX_NON_PERRON, COMPLEX_PISOT, REDUCIBLE, STRONGLY_NON_PISOT, THREE_REAL,
                                 CubicParams, classify_cubic, complex_root, cubic_roots, has_complex_root,
                                 integer_root)
from tilecocycle.errors import Degenerate, NoComplexRoot, UsageError


def discriminant(p, q, r):
    # a t^3 + b t^2 + c t + d with a=1, b=-p, c=q, d=r
    a, b, c, d = 1, -p, q, r
    return 18 * a * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * a * c ** 3 - 27 * a * a * d * d


def numeric_class(p, q, r):
    """Independent classifier from numpy.roots; None near a tie."""
    roots = np.roots([1, -p, q, r])
    for k in range(-r, r + 1):
        if k and k ** 3 - p * k * k + q * k + r == 0:
            return REDUCIBLE
    cplx = [z for z in roots if abs(z.imag) > 1e-7]
    if not cplx:
        return THREE_REAL
    real = [z.real for z in roots if abs(z.imag) <= 1e-7]
    if len(real) != 1:
        return None
    beta, lam = abs(real[0]), abs(cplx[0])
    if abs(beta - 1) < 1e-9 or abs(beta - lam) < 1e-9:
        return None
    if lam <= beta:
        return COMPLEX_NON_PERRON
    return COMPLEX_PISOT if beta < 1 else STRONGLY_NON_PISOT


GRID = list(itertools.product(range(7), range(7), range(1, 9)))


@pytest.mark.parametrize("p,q,r", GRID)
def test_classifier_matches_numeric_roots(p, q, r):
    expected = numeric_class(p, q, r)
    if expected is None:
        pytest.skip("boundary tie")
    try:
        got = classify_cubic(CubicParams(p, q, r)).tag
    except Degenerate:
        pytest.fail("Degenerate raised away from a tie")
    assert got == expected


@pytest.mark.parametrize("p,q,r", GRID)
def test_complex_root_test_agrees_with_discriminant(p, q, r):
    disc = discriminant(p, q, r)
    if disc == 0:
        with pytest.raises(Degenerate):
            has_complex_root(CubicParams(p, q, r))
    else:
        assert has_complex_root(CubicParams(p, q, r)) == (disc < 0)


@pytest.mark.parametrize("params,tag,wm", [
    ((1, 1, 1), COMPLEX_PISOT, False),
    ((1, 1, 4), STRONGLY_NON_PISOT, True),
    ((1, 2, 5), STRONGLY_NON_PISOT, True),
])
def test_reference_models(params, tag, wm):
    cls = classify_cubic(CubicParams(*params))
    assert cls.tag == tag
    assert cls.weak_mixing is wm


def test_tribonacci_root_values():
    cls = classify_cubic(CubicParams(1, 1, 1))
    # frozen from numpy.roots([1, -1, 1, 1])
    assert cls.lam == pytest.approx(0.7718445063460382 + 1.1151425080399373j, abs=1e-13)
    assert cls.real_root == pytest.approx(-0.5436890126920764, abs=1e-14)
    assert abs(cls.lam) ** 2 == pytest.approx(1.8392867552141612, rel=1e-13)


def test_reducible_label():
    cls = classify_cubic(CubicParams(1, 1, 3))
    assert cls.tag == REDUCIBLE
    assert cls.integer_root == -1
    assert cls.label() == "Reducible(-1)"


def test_non_perron():
    assert classify_cubic(CubicParams(0, 0, 2)).tag == COMPLEX_NON_PERRON


def test_no_complex_root_raises():
    # x^3 - 3x^2 + 1: discriminant 81 > 0, no integer root
    assert classify_cubic(CubicParams(3, 0, 1)).tag == THREE_REAL
    with pytest.raises(NoComplexRoot):
        complex_root(CubicParams(3, 0, 1))


@pytest.mark.parametrize("bad", [(-1, 0, 1), (0, -2, 1), (0, 0, 0), (1.5, 1, 1)])
def test_invalid_params(bad):
    with pytest.raises(UsageError):
        CubicParams(*bad)


@given(st.integers(0, 40), st.integers(0, 40), st.integers(1, 200))
def test_roots_satisfy_vieta(p, q, r):
    P = CubicParams(p, q, r)
    roots = cubic_roots(P)
    scale = max(1.0, max(abs(z) for z in roots))
    assert abs(sum(roots) - p) <= 1e-9 * scale
    prod = roots[0] * roots[1] * roots[2]
    assert abs(prod + r) <= 1e-9 * scale ** 3


@given(st.integers(0, 40), st.integers(0, 40), st.integers(1, 200))
def test_integer_root_is_exact(p, q, r):
    P = CubicParams(p, q, r)
    k = integer_root(P)
    if k is not None:
        assert P.f(k) == 0
        assert r % abs(k) == 0
    else:
        assert all(P.f(c) != 0 for c in range(-r, r + 1))


@given(st.integers(0, 30), st.integers(0, 30), st.integers(1, 100))
def test_strongly_non_pisot_iff_real_root_outside_unit_circle(p, q, r):
    try:
        cls = classify_cubic(CubicParams(p, q, r))
    except Degenerate:
        return
    if cls.tag in (COMPLEX_PISOT, STRONGLY_NON_PISOT):
        assert (cls.tag == STRONGLY_NON_PISOT) == (abs(cls.real_root) > 1)
        assert abs(cls.lam) > abs(cls.real_root)
