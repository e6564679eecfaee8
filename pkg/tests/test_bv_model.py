from fractions import Fraction
import random

from hypothesis import given, settings, strategies as st
import pytest

from bvmaster.bv_model import build_model
from bvmaster.cli_io import parse_model
from bvmaster.errors import (
    DeltaSNonzero,
    MasterEquationFails,
    ModelInvalid,
    NonIsolatedSingularity,
    NotClosed,
    UnitInIdeal,
)
from bvmaster.super_algebra import random_element, render

from conftest import MODELS, SHIPPED, model


def isolated(action, names=("x", "y")):
    lines = [f'name = "t"', f'class = "isolated"', f'action = "{action}"']
    for n in names:
        lines += ["[[variables]]", f'name = "{n}"', "ghost = 0", f'partner = "{n}b"']
    for n in names:
        lines += ["[[variables]]", f'name = "{n}b"', "ghost = -1", "weight = 2", f'partner = "{n}"']
    return build_model(parse_model("\n".join(lines)).spec)


def cubic_with(action):
    text = (MODELS / "fermat_cubic.toml").read_text()
    old = next(line for line in text.splitlines() if line.startswith("action"))
    return build_model(parse_model(text.replace(old, f'action = "{action}"')).spec)


def test_h_bases():
    assert model("a2").basis.names == ["1", "x"]
    assert model("a3").basis.names == ["1", "x", "x^2"]
    assert model("two_variable").basis.names == ["1", "y", "x", "x*y"]
    assert model("fermat_cubic").basis.names == ["1", "p*x*y*z"]
    assert model("fermat_cubic").slice_dimensions == [1, 1]


def test_xy_model():
    ctx = isolated("x*y")
    assert ctx.basis.names == ["1"]


def test_decompose_a2():
    ctx = model("a2")
    t = ctx.table
    x, eta = t.var("x"), t.var("eta")
    dec = ctx.decompose(x * x * x)
    assert dec.coefficients == (0, 0)
    assert ctx.Q(dec.homotopy) == x * x * x
    dec = ctx.decompose(x.scale(3) + 2)
    assert dec.coefficients == (2, 3)
    assert not dec.homotopy
    assert ctx.is_exact(x * x)[0]
    assert not ctx.is_exact(x)[0]


def test_decompose_rejects():
    ctx = model("a2")
    t = ctx.table
    with pytest.raises(ModelInvalid):
        ctx.decompose(t.var("x").mul_hbar(1))
    with pytest.raises(ModelInvalid):
        ctx.decompose(model("a3").table.var("x"))


def test_gauge_element():
    ctx = model("fermat_cubic")
    t = ctx.table
    c, cb = t.var("c"), t.var("cb")
    # the displayed action gives Q(c^dagger) = -R
    assert ctx.Q(-cb) == ctx.R
    assert not ctx.Q(ctx.R)
    assert render(ctx.R) == "-3*p*pb + x*xb + y*yb + z*zb"


def test_gauged_c_class_not_exact():
    ctx = model("fermat_cubic")
    c = ctx.table.var("c")
    assert not ctx.Q(c)
    assert ctx.cohomology_dimension(1, 1) == 1


def test_errors():
    with pytest.raises(UnitInIdeal):
        isolated("x + y^2")
    with pytest.raises(NonIsolatedSingularity):
        isolated("x^2*y")
    with pytest.raises(DeltaSNonzero):
        cubic_with("p*(x^3 + y^3 + z^3)/3 + c*(x*xb + y*yb + z*zb - 2*p*pb)")
    with pytest.raises(MasterEquationFails):
        cubic_with("p*(x^3 + y^3 + z^2)/3 + c*(x*xb + y*yb + z*zb - 3*p*pb)")
    with pytest.raises(ModelInvalid):
        isolated("x^3*xb")


def test_not_closed():
    ctx = model("fermat_cubic")
    t = ctx.table
    m = t.var("p") * t.var("pb") * t.var("c")
    with pytest.raises(NotClosed):
        ctx.decompose(m)
    with pytest.raises(NotClosed):
        ctx.decompose(m, check_closed=False)
    with pytest.raises(ModelInvalid):
        ctx.decompose(t.one(), backend="groebner")


seeds = st.integers(min_value=0, max_value=2 ** 32)


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_backends_agree(name, seed):
    ctx = model(name)
    rng = random.Random(seed)
    t = ctx.table
    # a ghost-0 closed element: combination of basis elements plus something exact
    coeffs = [Fraction(rng.randint(-3, 3)) for _ in ctx.basis.elements]
    M = ctx.combine(coeffs)
    beta = random_element(t, rng, max_weight=4, n_terms=3, ghost=-1)
    if ctx.charged:
        beta = beta.split(lambda k: t.charge_of(k)).get(0, t.zero())
    M = M + ctx.Q(beta)
    lin = ctx.decompose(M, 0, backend="linear")
    g = ctx.decompose(M, 0, backend="groebner") if ctx.model_class == "isolated" else lin
    assert tuple(g.coefficients) == tuple(coeffs)
    assert tuple(lin.coefficients) == tuple(coeffs)
    assert ctx.combine(lin.coefficients) + ctx.Q(lin.homotopy) == M
    assert not ctx.Q(g.homotopy - lin.homotopy)
