from fractions import Fraction
from itertools import product
import random

from hypothesis import given, settings, strategies as st
import pytest

from bvmaster.errors import NonHomogeneousIdeal, NotZeroDimensional, OddVariablePresent
from bvmaster.groebner import (
    MonomialOrder,
    buchberger,
    element_to_poly,
    graded_slice,
    is_zero_dimensional,
    normal_form,
    poly_to_element,
    reconstruct,
    slice_count,
    standard_monomials,
)
from bvmaster.linalg import EchelonSpace
from bvmaster.super_algebra import Element, Variable, VariableTable, derivative, render

from conftest import model

NAMES = ["x", "y", "z"]


def xyz():
    vs = [Variable(n, 0, partner=n + "b") for n in NAMES]
    vs += [Variable(n + "b", -1, partner=n, weight=2) for n in NAMES]
    return VariableTable(vs)


def hesse(t):
    x, y, z = (t.var(n) for n in NAMES)
    G = (x * x * x + y * y * y + z * z * z) / 3 + x * y * z
    return [derivative(G, t.index[n] + 1) for n in NAMES]


def test_fermat_cubic_jacobian_ring():
    t = xyz()
    x, y, z = (t.var(n) for n in NAMES)
    G = buchberger([x * x, y * y, z * z], variables=NAMES)
    mons = standard_monomials(G)
    assert len(mons) == 8
    assert [slice_count(G, d) for d in range(4)] == [1, 3, 3, 1]
    assert [render(m) for m in graded_slice(G, 3)] == ["x*y*z"]


def test_a3_normal_forms():
    ctx = model("a3")
    x = ctx.table.var("x")
    G = ctx.gb
    assert [render(m) for m in standard_monomials(G)] == ["1", "x", "x^2"]
    res = normal_form(x * x * x * x + x, G)
    assert res.remainder == x
    assert res.quotients[0] == x


def test_unit_ideal():
    t = xyz()
    x = t.var("x")
    G = buchberger([x, x + 1], variables=NAMES)
    assert G.is_unit_ideal()
    assert standard_monomials(G) == []


def test_not_zero_dimensional():
    t = xyz()
    x, y = t.var("x"), t.var("y")
    G = buchberger([x * y, x * x], variables=NAMES)
    assert not is_zero_dimensional(G)
    with pytest.raises(NotZeroDimensional):
        standard_monomials(G)
    assert len(standard_monomials(G, degree_cap=2)) > 0


def test_non_homogeneous_slice():
    t = xyz()
    x, y, z = (t.var(n) for n in NAMES)
    G = buchberger([x * x + y, y * y, z], variables=NAMES)
    with pytest.raises(NonHomogeneousIdeal):
        graded_slice(G, 2)


def test_odd_variable_rejected():
    t = xyz()
    with pytest.raises(OddVariablePresent):
        element_to_poly(t.var("x") * t.var("xb"), NAMES)
    with pytest.raises(OddVariablePresent):
        element_to_poly(t.hbar(), NAMES)


def test_orders():
    with pytest.raises(ValueError):
        MonomialOrder("lex")
    t = xyz()
    gens = hesse(t)
    for order in (MonomialOrder("grevlex"), MonomialOrder("grlex"), MonomialOrder("wgrevlex", (1, 1, 1))):
        G = buchberger(gens, order, NAMES)
        assert len(standard_monomials(G)) == 8


def _bounded_count(deg, n, cap):
    # coefficient of q^deg in (1 + q + ... + q^cap)^n
    return sum(1 for e in product(range(cap + 1), repeat=n) if sum(e) == deg)


def test_quintic_slices():
    ctx = model("fermat_quintic")
    G = ctx.gb
    for d in (0, 5, 10, 15):
        assert slice_count(G, d) == _bounded_count(d, 5, 3)
    top = graded_slice(G, 15)
    assert [render(m) for m in top] == ["x1^3*x2^3*x3^3*x4^3*x5^3"]


def test_reconstruction():
    t = xyz()
    G = buchberger(hesse(t), variables=NAMES)
    for i in range(len(G.basis)):
        assert reconstruct(G, i) == G.basis[i]


def _random_poly(t, rng, deg):
    out = t.zero()
    for _ in range(rng.randint(1, 5)):
        e = [rng.randint(0, deg) for _ in NAMES]
        c = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        out = out + poly_to_element(t, NAMES, {tuple(e): c})
    return out


def _homogeneous_parts(t, f):
    parts = {}
    for e, c in element_to_poly(f, NAMES).items():
        parts.setdefault(sum(e), {})[e] = c
    return parts


def _in_ideal_dense(gens, part, deg):
    # membership of a homogeneous polynomial by spanning monomial multiples of the generators
    space = EchelonSpace(track=False)
    for g in gens:
        gd = sum(next(iter(g)))
        if gd > deg:
            continue
        for m in product(range(deg - gd + 1), repeat=len(NAMES)):
            if sum(m) != deg - gd:
                continue
            space.add({tuple(a + b for a, b in zip(e, m)): c for e, c in g.items()})
    return space.contains(part)


seeds = st.integers(min_value=0, max_value=2 ** 32)


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_division_and_membership(seed):
    rng = random.Random(seed)
    t = xyz()
    gens = hesse(t)
    G = buchberger(gens, variables=NAMES)
    f = _random_poly(t, rng, 4)
    if rng.random() < 0.5:
        f = f * gens[rng.randrange(3)]
    res = normal_form(f, G)
    recon = res.remainder
    for q, g in zip(res.quotients, gens):
        recon = recon + q * g
    assert recon == f
    again = normal_form(res.remainder, G)
    assert again.remainder == res.remainder
    assert not any(again.quotients)
    polys = [element_to_poly(g, NAMES) for g in gens]
    dense = all(_in_ideal_dense(polys, part, d) for d, part in _homogeneous_parts(t, f).items())
    assert dense == (not res.remainder)
