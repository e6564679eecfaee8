"""BV models built from a classical action: validation, cohomology basis, decomposition.

Two model classes are supported.  ``isolated``: S(x) with an isolated critical
locus, fields x^i paired with odd antifields; H is the Jacobian ring.
``gauged``: S = p G(x) + c R with R = x^i xb_i - (n+2) p pb and a C*-charge;
H is spanned by p^k times degree k(n+2) slices of the Jacobian ring of G.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import random as _random

from .errors import (
    DeltaSNonzero,
    InternalIdentityViolation,
    MasterEquationFails,
    ModelInvalid,
    NonIsolatedSingularity,
    NotClosed,
    UnboundedSlice,
    UnitInIdeal,
)
from .groebner import MonomialOrder, buchberger, graded_slice, is_zero_dimensional, normal_form, standard_monomials
from .linalg import EchelonSpace
from .super_algebra import (
    Element,
    bv_bracket,
    bv_delta,
    derivative,
    ghost_number,
    k_operator,
    monomials,
    q_operator,
    render,
)

ISOLATED = "isolated"
GAUGED = "gauged"


@dataclass
class GaugeData:
    p: str
    xs: tuple
    c: str


@dataclass
class ModelSpec:
    table: object
    action: Element
    model_class: str = ISOLATED
    order: MonomialOrder = field(default_factory=MonomialOrder)
    name: str = ""
    gauge: GaugeData | None = None
    expectation: dict | None = None      # H index -> Fraction or {hbar power: Fraction}
    degree_cap: int = 64


@dataclass
class HBasis:
    elements: list
    ghosts: list
    names: list

    def __len__(self):
        return len(self.elements)

    def coupling(self, i):
        return f"t{i}"


@dataclass
class Decomposition:
    coefficients: tuple        # m^gamma over the H basis
    homotopy: Element          # Lambda with M = sum m O + Q Lambda
    verified: bool = True
    backend: str = ""


class ModelContext:
    def __init__(self, spec):
        self.spec = spec
        self.table = spec.table
        self.S = spec.action
        self.gb = None
        self.ring_vars = ()
        self.basis = None
        self.G = None
        self.R = None
        self._slices = {}
        self.backend = None        # force "groebner" or "linear" for every decomposition
        self._check_grading()

    # operators
    def Q(self, a):
        return q_operator(self.S, a)

    def K(self, a):
        return k_operator(self.S, a)

    def delta(self, a):
        return bv_delta(a)

    def bracket(self, a, b):
        return bv_bracket(a, b)

    @property
    def model_class(self):
        return self.spec.model_class

    def _check_grading(self):
        t = self.table
        pair_w = {t.weights[f - 1] + t.weights[g - 1] for f, g, _, _ in t.pairs}
        s_w = {t.weight_of(k) for k in self.S.terms}
        self.graded = len(pair_w) == 1 and len(s_w) <= 1 and all(w > 0 for w in t.weights)
        self.q_shift = (s_w.pop() - pair_w.pop()) if self.graded and s_w else 0
        self.charged = any(t.charges) and all(t.charge_of(k) == 0 for k in self.S.terms)

    def h_basis(self):
        return self.basis

    # decomposition ------------------------------------------------------
    def decompose(self, M, expected_ghost=0, backend=None, check_closed=True):
        if M.table != self.table:
            raise ModelInvalid("element lives over a different variable table")
        if not M.is_classical():
            raise ModelInvalid("decompose expects an hbar-free element")
        if check_closed:
            qm = self.Q(M)
            if qm:
                raise NotClosed(f"Q(M) = {render(qm)}")
        g = ghost_number(M)
        if g not in (None, expected_ghost):
            raise ModelInvalid(f"expected ghost {expected_ghost}, got {g}")
        backend = backend or self.backend
        if backend is None:
            backend = "groebner" if self.model_class == ISOLATED and expected_ghost == 0 else "linear"
        if backend == "groebner":
            if self.model_class != ISOLATED or expected_ghost != 0:
                raise ModelInvalid("the Groebner route covers ghost-0 slices of isolated models only")
            dec = self._decompose_groebner(M)
        else:
            dec = self._decompose_linear(M, expected_ghost)
        recon = self.combine(dec.coefficients) + self.Q(dec.homotopy)
        if recon != M:
            raise InternalIdentityViolation("decomposition round trip", render(M - recon))
        return dec

    def combine(self, coeffs):
        out = self.table.zero()
        for c, o in zip(coeffs, self.basis.elements):
            if c:
                out = out + o.scale(c)
        return out

    def _decompose_groebner(self, M):
        res = normal_form(M, self.gb)
        coeffs = [Fraction(0)] * len(self.basis)
        index = {next(iter(o.terms)): i for i, o in enumerate(self.basis.elements)}
        for k, c in res.remainder.terms.items():
            coeffs[index[k]] = c
        lam = self.table.zero()
        for q, eta, sign in zip(res.quotients, self._antifields, self._jac_signs):
            if q:
                lam = lam + (q * eta).scale(sign)
        return Decomposition(tuple(coeffs), lam, True, "groebner")

    def _slice_space(self, ghost, charge, weight, exact):
        sig = (ghost, charge, weight, exact)
        sp = self._slices.get(sig)
        if sp is not None:
            return sp
        if weight > self.spec.degree_cap:
            raise UnboundedSlice(f"weighted degree {weight} exceeds cap {self.spec.degree_cap}")
        src_w = weight - self.q_shift
        space = EchelonSpace()
        if src_w >= 0:
            src = monomials(self.table, src_w, ghost=ghost - 1, charge=charge,
                            exact_weight=src_w if exact else None)
            for key in src:
                img = self.Q(Element(self.table, {key: Fraction(1)}))
                if img:
                    space.add(img.terms, ("q", key))
        for i, o in enumerate(self.basis.elements):
            if self.basis.ghosts[i] != ghost:
                continue
            k0 = next(iter(o.terms))
            if exact and self.table.weight_of(k0) != weight:
                continue
            if charge is not None and self.table.charge_of(k0) != charge:
                continue
            if not space.add(o.terms, ("o", i)):
                raise ModelInvalid(f"H basis element {render(o)} is not independent modulo Im Q")
        self._slices[sig] = space
        return space

    def _solve_in(self, space, part):
        residual, combo = space.reduce(part.terms)
        if residual:
            return None
        coeffs = [Fraction(0)] * len(self.basis)
        lam = {}
        for (kind, obj), c in combo.items():
            if kind == "o":
                coeffs[obj] += c
            else:
                lam[obj] = lam.get(obj, 0) + c
        return coeffs, Element(self.table, {k: c for k, c in lam.items() if c})

    def _decompose_linear(self, M, ghost):
        coeffs = [Fraction(0)] * len(self.basis)
        lam = self.table.zero()
        t = self.table
        if self.graded:
            parts = M.split(lambda k: (t.weight_of(k), t.charge_of(k) if self.charged else None))
            items = sorted(parts.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0))
            for (w, ch), part in items:
                sol = self._solve_in(self._slice_space(ghost, ch, w, True), part)
                if sol is None:
                    raise NotClosed(f"slice (weight {w}, charge {ch}) not in span(H) + Im Q")
                coeffs = [a + b for a, b in zip(coeffs, sol[0])]
                lam = lam + sol[1]
        elif M:
            top = max(t.weight_of(k) for k in M.terms)
            for slack in range(0, 6):
                sol = self._solve_in(self._slice_space(ghost, None, top + slack, False), M)
                if sol is not None:
                    coeffs, lam = sol
                    break
            else:
                raise NotClosed("element not in span(H) + Im Q within the degree window")
        return Decomposition(tuple(coeffs), lam, True, "linear")

    def is_exact(self, M, expected_ghost=0):
        if not M:
            return True, self.table.zero()
        dec = self.decompose(M, expected_ghost)
        if any(dec.coefficients):
            return False, None
        return True, dec.homotopy

    # random data for gauge tests -----------------------------------------
    def random_closed(self, like=None, rng=None, n_terms=3, ghost=None, weight=None):
        """Random Q-exact element shaped like ``like`` (or of the given ghost and weight)."""
        rng = rng or _random.Random()
        t = self.table
        g = ghost
        if g is None and like:
            g = ghost_number(like)
        if g is None or g == "Mixed":
            g = -1
        if weight is None and like:
            weight = max(t.weight_of(k) for k in like.terms)
        if self.graded:
            if weight is None:
                return t.zero()
            w = weight - self.q_shift
            pool = monomials(t, w, ghost=g - 1, charge=0 if self.charged else None, exact_weight=w) if w >= 0 else []
        else:
            pool = monomials(t, max(weight or 2, 2), ghost=g - 1)
        if not pool:
            return t.zero()
        beta = {}
        for _ in range(n_terms):
            key = rng.choice(pool)
            beta[key] = beta.get(key, 0) + Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        beta = Element(t, {k: c for k, c in beta.items() if c})
        return self.Q(beta)

    def multi_index_weight(self, mu):
        """Weight of the classical obstruction at the t-monomial mu (graded models)."""
        t = self.table
        return sum(max(t.weight_of(k) for k in self.basis.elements[a].terms) for a in mu)

    def default_expectation(self):
        """Residue-style default: 1 on the top basis element, 0 elsewhere."""
        vec = [Fraction(0)] * len(self.basis)
        vec[-1] = Fraction(1)
        return vec

    def cohomology_dimension(self, ghost, weight, charge=0):
        """dim of Q-cohomology on the (ghost, charge, weight) slice, by rank counting."""
        if not self.graded:
            raise ModelInvalid("slice cohomology needs a graded model")
        t = self.table
        ch = charge if self.charged else None
        src = monomials(t, weight - self.q_shift, ghost=ghost - 1, charge=ch,
                        exact_weight=weight - self.q_shift) if weight - self.q_shift >= 0 else []
        mid = monomials(t, weight, ghost=ghost, charge=ch, exact_weight=weight)
        im = EchelonSpace(track=False)
        for key in src:
            img = self.Q(Element(t, {key: Fraction(1)}))
            if img:
                im.add(img.terms)
        ker_rank = EchelonSpace(track=False)
        for key in mid:
            img = self.Q(Element(t, {key: Fraction(1)}))
            if img:
                ker_rank.add(img.terms)
        return len(mid) - len(ker_rank) - len(im)


def build_model(spec):
    """Validate the action and compute the Groebner basis and H basis."""
    t = spec.table
    S = spec.action
    if S and ghost_number(S) != 0:
        raise ModelInvalid("action must have ghost number 0")
    if S.parity() != 0:
        raise ModelInvalid("action must be even")
    if not S.is_classical():
        raise ModelInvalid("action must not contain hbar")
    if bv_delta(S):
        raise DeltaSNonzero(f"Delta S = {render(bv_delta(S))}")
    ss = bv_bracket(S, S)
    if ss:
        raise MasterEquationFails(f"(S,S) = {render(ss)}")
    ctx = ModelContext(spec)
    if spec.model_class == ISOLATED:
        _build_isolated(ctx)
    elif spec.model_class == GAUGED:
        _build_gauged(ctx)
    else:
        raise ModelInvalid(f"unknown model class {spec.model_class!r}")
    for o in ctx.basis.elements:
        if ctx.Q(o):
            raise InternalIdentityViolation("H representatives closed", render(o))
    return ctx


def _build_isolated(ctx):
    t = ctx.table
    fields, antifields = [], []
    for f, g, _, field_odd in t.pairs:
        if field_odd or t.ghosts[f - 1] != 0:
            raise ModelInvalid("isolated models pair ghost-0 even fields with odd antifields only")
        fields.append(t.names[f - 1])
        antifields.append(t.names[g - 1])
    for k in ctx.S.terms:
        for i, e in enumerate(k[1:]):
            if e and t.names[i] not in fields:
                raise ModelInvalid(f"action involves {t.names[i]}, which is not a field")
    ctx.ring_vars = tuple(fields)
    jac = [derivative(ctx.S, t.index[x] + 1) for x in fields]
    if all(not j for j in jac):
        raise NonIsolatedSingularity("Jacobian ideal is zero")
    gens = [j if j else t.zero() for j in jac]
    ctx.gb = buchberger([g for g in gens], ctx.spec.order, fields)
    if ctx.gb.is_unit_ideal():
        raise UnitInIdeal("1 lies in the Jacobian ideal: no critical points")
    if not is_zero_dimensional(ctx.gb):
        raise NonIsolatedSingularity("Jacobian ideal is not zero-dimensional")
    ctx._antifields = [t.var(a) for a in antifields]
    signs = []
    for eta, j in zip(ctx._antifields, jac):
        q = ctx.Q(eta)
        if q == j:
            signs.append(1)
        elif q == -j:
            signs.append(-1)
        else:
            raise InternalIdentityViolation("Q(antifield) = dS/dx", render(q))
    ctx._jac_signs = signs
    mons = standard_monomials(ctx.gb)
    mons.sort(key=lambda m: (t.weight_of(next(iter(m.terms))), ctx.gb.order.key(_exps(m, fields))))
    ctx.basis = HBasis(mons, [0] * len(mons), [render(m) for m in mons])


def _exps(m, names):
    k = next(iter(m.terms))
    t = m.table
    return tuple(k[t.index[n] + 1] for n in names)


def _build_gauged(ctx):
    t = ctx.table
    gd = ctx.spec.gauge
    if gd is None:
        raise ModelInvalid("gauged model needs p, x and c roles")
    p, c, xs = t.var(gd.p), t.var(gd.c), [t.var(x) for x in gd.xs]
    pb = t.var(t.variables[t.index[gd.p]].partner)
    xbs = [t.var(t.variables[t.index[x]].partner) for x in gd.xs]
    n = len(xs) - 2
    S = ctx.S
    # split off the c-linear part
    cpos = t.index[gd.c] + 1
    S_cl = Element(t, {k: v for k, v in S.terms.items() if not k[cpos]})
    G = derivative(S_cl, t.index[gd.p] + 1)
    if p * G != S_cl:
        raise ModelInvalid("classical action must have the form p*G(x)")
    for k in G.terms:
        for i, e in enumerate(k[1:]):
            if e and t.names[i] not in gd.xs:
                raise ModelInvalid("G must depend on the x variables only")
    R = sum((x * xb for x, xb in zip(xs, xbs)), t.zero()) - (p * pb).scale(n + 2)
    if S - S_cl != c * R:
        raise ModelInvalid("action must be p*G + c*R with R = x^i xb_i - (n+2) p pb")
    ctx.G, ctx.R = G, R
    jac = [derivative(G, t.index[x] + 1) for x in gd.xs]
    weights = tuple(t.weights[t.index[x]] for x in gd.xs)
    order = ctx.spec.order
    if order.kind == "wgrevlex" and not order.weights:
        order = MonomialOrder("wgrevlex", weights)
    ctx.ring_vars = tuple(gd.xs)
    ctx.gb = buchberger(jac, order, gd.xs)
    if ctx.gb.is_unit_ideal():
        raise UnitInIdeal("1 lies in the Jacobian ideal of G")
    if not is_zero_dimensional(ctx.gb):
        raise NonIsolatedSingularity("Jacobian ideal of G is not zero-dimensional")
    elements, names = [], []
    for k in range(n + 1):
        for m in graded_slice(ctx.gb, k * (n + 2)):
            o = m
            for _ in range(k):
                o = o * p
            elements.append(o)
            names.append(render(o))
    ctx.basis = HBasis(elements, [0] * len(elements), names)
    ctx.slice_dimensions = [len(graded_slice(ctx.gb, k * (n + 2))) for k in range(n + 1)]
