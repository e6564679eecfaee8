from fractions import Fraction
import random

from hypothesis import given, settings, strategies as st
import pytest

from bvmaster.errors import ModelInvalid, ModelMismatch
from bvmaster.super_algebra import (
    MIXED,
    Element,
    Variable,
    VariableTable,
    bracket_from_delta,
    bv_bracket,
    bv_delta,
    ghost_number,
    k_operator,
    mul,
    q_operator,
    random_element,
    render,
)

from conftest import SHIPPED, a_table, model


def two_odd():
    return VariableTable([
        Variable("x", 0, partner="e1"), Variable("y", 0, partner="e2"),
        Variable("e1", -1, partner="x"), Variable("e2", -1, partner="y"),
    ])


def test_even_odd_commute():
    t = a_table()
    x, eta = t.var("x"), t.var("eta")
    assert x * eta == eta * x
    assert render(eta * x) == "x*eta"


def test_odd_anticommute():
    t = two_odd()
    e1, e2 = t.var("e1"), t.var("e2")
    assert e2 * e1 == -(e1 * e2)
    assert e1 * e1 == t.zero()


def test_commutative_subring():
    t = a_table()
    x = t.var("x")
    assert (x + 1) * (x - 1) == x * x - 1


def test_mismatched_tables():
    with pytest.raises(ModelMismatch):
        mul(a_table().var("x"), two_odd().var("x"))


def test_delta_examples():
    t = a_table()
    x, eta = t.var("x"), t.var("eta")
    assert bv_delta(x * eta) == t.one()
    assert bv_delta(x * x * eta) == x.scale(2)
    assert not bv_delta(x)
    assert not bv_delta(t.one())


def test_bracket_examples():
    t = a_table()
    x, eta = t.var("x"), t.var("eta")
    assert bv_bracket(x, eta) == t.one()
    # graded commutativity with |x| = 0, |eta| = -1 forces the opposite sign
    assert bv_bracket(eta, x) == -t.one()
    assert not bv_bracket(x, x)
    assert bv_bracket(x * x * x, eta) == (x * x).scale(3)


def test_q_and_k_examples():
    t = a_table()
    x, eta = t.var("x"), t.var("eta")
    S = x * x * x / 3
    assert q_operator(S, eta) == x * x
    assert not q_operator(S, x)
    assert not q_operator(S, t.one())
    assert k_operator(S, eta) == x * x
    assert k_operator(S, x * eta) == x * x * x - t.hbar()
    assert not k_operator(S, t.one())


def test_ghost_number():
    t = a_table()
    x, eta = t.var("x"), t.var("eta")
    assert ghost_number(x) == 0
    assert ghost_number(eta) == -1
    assert ghost_number(x + eta) == MIXED


def test_partner_must_have_opposite_parity():
    with pytest.raises(ModelInvalid):
        VariableTable([Variable("x", 0, partner="y"), Variable("y", 0, partner="x")])


def test_hbar_division():
    t = a_table()
    x = t.var("x")
    e = x.mul_hbar(2)
    assert e.div_hbar(2) == x
    with pytest.raises(Exception):
        (x + e).div_hbar(1)


def _sign(p):
    return Fraction((-1) ** p)


def _triple(table, seed, hbar_max=0):
    rng = random.Random(seed)
    gh = [-2, -1, 0, 1]
    return [random_element(table, rng, max_weight=3, n_terms=3, ghost=rng.choice(gh), hbar_max=hbar_max)
            for _ in range(3)]


seeds = st.integers(min_value=0, max_value=2 ** 32)


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_delta_squared(name, seed):
    a, _, _ = _triple(model(name).table, seed, 2)
    assert not bv_delta(bv_delta(a))


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_product_laws(name, seed):
    a, b, c = _triple(model(name).table, seed, 1)
    assert a * b == (b * a).scale(_sign(a.parity() * b.parity()))
    assert (a * b) * c == a * (b * c)


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_bracket_laws(name, seed):
    a, b, c = _triple(model(name).table, seed)
    pa, pb = a.parity(), b.parity()
    assert bv_bracket(a, b) == -bv_bracket(b, a).scale(_sign((pa + 1) * (pb + 1)))
    assert bv_bracket(a, bv_bracket(b, c)) == (
        bv_bracket(bv_bracket(a, b), c) + bv_bracket(b, bv_bracket(a, c)).scale(_sign((pa + 1) * (pb + 1))))
    assert bv_bracket(a, b * c) == bv_bracket(a, b) * c + (b * bv_bracket(a, c)).scale(_sign((pa + 1) * pb))


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_bracket_matches_delta_definition(name, seed):
    a, b, _ = _triple(model(name).table, seed)
    assert bv_bracket(a, b) == bracket_from_delta(a, b)


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_k_laws(name, seed):
    ctx = model(name)
    a, b, _ = _triple(ctx.table, seed, 2)
    pa = a.parity()
    assert not ctx.K(ctx.K(a))
    assert not ctx.Q(ctx.Q(a))
    fail = ctx.K(a * b) - ctx.K(a) * b - (a * ctx.K(b)).scale(_sign(pa))
    assert fail == bv_bracket(a, b).mul_hbar(1).scale(-_sign(pa))
    lhs = ctx.K(bv_bracket(a, b))
    rhs = bv_bracket(ctx.K(a), b) + bv_bracket(a, ctx.K(b)).scale(_sign(pa + 1))
    assert lhs == rhs
