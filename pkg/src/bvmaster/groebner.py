"""Buchberger's algorithm over the rationals with cofactor tracking.

Polynomials here are plain dicts ``exponent tuple -> Fraction`` over a chosen
list of even variables.  Every basis element remembers how it is built from the
original generators, so divisions report quotients against those generators.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import NonHomogeneousIdeal, NotZeroDimensional, OddVariablePresent
from .super_algebra import Element


@dataclass(frozen=True)
class MonomialOrder:
    kind: str = "grevlex"          # grevlex | grlex | wgrevlex
    weights: tuple = ()

    def __post_init__(self):
        if self.kind not in ("grevlex", "grlex", "wgrevlex"):
            raise ValueError(f"unknown monomial order {self.kind!r}")

    def degree(self, e):
        if self.kind == "wgrevlex":
            return sum(a * w for a, w in zip(e, self.weights))
        return sum(e)

    def key(self, e):
        """Sort key: larger key means larger monomial."""
        return _order_key(self.kind, self.weights, e)


@lru_cache(maxsize=None)
def _order_key(kind, weights, e):
    if kind == "grlex":
        return (sum(e), e)
    d = sum(a * w for a, w in zip(e, weights)) if kind == "wgrevlex" else sum(e)
    return (d, tuple(-a for a in reversed(e)))


# dict-polynomial helpers ---------------------------------------------------

def _add_into(p, q, c=1, shift=None):
    for e, v in q.items():
        if shift is not None:
            e = tuple(a + b for a, b in zip(e, shift))
        nv = p.get(e, 0) + c * v
        if nv:
            p[e] = nv
        else:
            p.pop(e, None)


def _mul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            nv = out.get(e, 0) + c1 * c2
            if nv:
                out[e] = nv
            else:
                out.pop(e, None)
    return out


def _divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def _lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


@dataclass
class _Gen:
    poly: dict
    cof: list            # list of dict polys, one per original generator
    lm: tuple = None


@dataclass
class GroebnerBasis:
    basis: list                 # reduced basis, dict polys, monic, sorted by leading monomial
    cofactors: list             # cofactors[i][j]: coefficient poly of original generator j
    generators: list            # original generators, dict polys
    order: MonomialOrder
    variables: tuple            # variable names of the polynomial ring
    table: object = None        # VariableTable used for conversion
    leading: list = field(default_factory=list)

    def lm(self, p):
        return max(p, key=self.order.key)

    def basis_elements(self):
        return [poly_to_element(self.table, self.variables, g) for g in self.basis]

    def is_unit_ideal(self):
        return any(not any(lm) for lm in self.leading)


@dataclass
class DivisionResult:
    remainder: Element
    quotients: list            # Elements, aligned with the original generators


def element_to_poly(a, variables):
    """Convert an even Element to a dict polynomial over ``variables``."""
    table = a.table
    pos = [table.index[v] + 1 for v in variables]
    allowed = set(pos) | {0}
    out = {}
    for k, c in a.terms.items():
        for i, e in enumerate(k):
            if e and i not in allowed:
                name = table.names[i - 1]
                if table.variables[i - 1].parity:
                    raise OddVariablePresent(f"odd variable {name} in Groebner input")
                raise OddVariablePresent(f"variable {name} is outside the polynomial ring {variables}")
        if k[0]:
            raise OddVariablePresent("hbar is not allowed in Groebner input")
        out[tuple(k[p] for p in pos)] = c
    return out


def poly_to_element(table, variables, p):
    pos = [table.index[v] + 1 for v in variables]
    out = {}
    for e, c in p.items():
        key = [0] * (table.nvars + 1)
        for p_, x in zip(pos, e):
            key[p_] = x
        out[tuple(key)] = c
    return Element(table, out)


def _reduce(f, fcof, G, order, full=True):
    """Reduce (f, fcof) by the list G of monic _Gen; returns (remainder, cofactor)."""
    p = dict(f)
    cof = [dict(c) for c in fcof]
    r = {}
    key = order.key
    while p:
        lm = max(p, key=key)
        c = p[lm]
        g = next((g for g in G if _divides(g.lm, lm)), None)
        if g is None:
            r[lm] = p.pop(lm)
            if not full:
                _add_into(r, p)
                return r, cof
            continue
        m = _sub(lm, g.lm)
        _add_into(p, g.poly, -c, m)
        for j, gc in enumerate(g.cof):
            if gc:
                _add_into(cof[j], gc, -c, m)
    return r, cof


def _normalize(poly, cof, order):
    lm = max(poly, key=order.key)
    inv = 1 / poly[lm]
    poly = {e: c * inv for e, c in poly.items()}
    cof = [{e: c * inv for e, c in q.items()} for q in cof]
    return _Gen(poly, cof, lm)


def buchberger(generators, order=None, variables=None):
    """Reduced Groebner basis of the ideal spanned by even Elements ``generators``."""
    order = order or MonomialOrder()
    if not generators:
        raise ValueError("need at least one generator")
    table = generators[0].table
    if variables is None:
        variables = tuple(v.name for v in table.variables if not v.parity)
    variables = tuple(variables)
    if order.kind == "wgrevlex" and not order.weights:
        order = MonomialOrder("wgrevlex", tuple(table.weights[table.index[v]] for v in variables))
    gens = [element_to_poly(g, variables) for g in generators]
    ng = len(gens)
    zero = tuple(0 for _ in variables)
    G = []
    for j, g in enumerate(gens):
        if not g:
            continue
        cof = [{} for _ in range(ng)]
        cof[j] = {zero: Fraction(1)}
        G.append(_normalize(g, cof, order))
    key = order.key
    pairs = {(i, j) for j in range(len(G)) for i in range(j)}
    done = set()

    while pairs:
        i, j = min(pairs, key=lambda ij: (key(_lcm(G[ij[0]].lm, G[ij[1]].lm)), ij))
        pairs.discard((i, j))
        done.add((i, j))
        gi, gj = G[i], G[j]
        L = _lcm(gi.lm, gj.lm)
        if L == tuple(a + b for a, b in zip(gi.lm, gj.lm)):
            continue  # product criterion
        if any(
            k not in (i, j)
            and _divides(G[k].lm, L)
            and (min(i, k), max(i, k)) not in pairs
            and (min(j, k), max(j, k)) not in pairs
            for k in range(len(G))
        ):
            continue  # chain criterion
        mi, mj = _sub(L, gi.lm), _sub(L, gj.lm)
        s = {}
        _add_into(s, gi.poly, 1, mi)
        _add_into(s, gj.poly, -1, mj)
        scof = [{} for _ in range(ng)]
        for t in range(ng):
            if gi.cof[t]:
                _add_into(scof[t], gi.cof[t], 1, mi)
            if gj.cof[t]:
                _add_into(scof[t], gj.cof[t], -1, mj)
        r, rcof = _reduce(s, scof, G, order)
        if r:
            G.append(_normalize(r, rcof, order))
            n = len(G) - 1
            pairs |= {(k, n) for k in range(n)}

    # minimal basis
    keep = []
    for i, g in enumerate(G):
        if any(_divides(h.lm, g.lm) and (h.lm != g.lm or j < i) for j, h in enumerate(G) if j != i):
            continue
        keep.append(g)
    # interreduce
    reduced = []
    for i, g in enumerate(keep):
        others = [h for j, h in enumerate(keep) if j != i]
        lead = {g.lm: g.poly[g.lm]}
        tail = {e: c for e, c in g.poly.items() if e != g.lm}
        r, rcof = _reduce(tail, g.cof, others, order)
        poly = dict(r)
        _add_into(poly, lead)
        reduced.append(_Gen(poly, rcof, g.lm))
    reduced.sort(key=lambda g: key(g.lm))
    gb = GroebnerBasis(
        basis=[g.poly for g in reduced],
        cofactors=[g.cof for g in reduced],
        generators=gens,
        order=order,
        variables=variables,
        table=table,
        leading=[g.lm for g in reduced],
    )
    return gb


def normal_form(p, G):
    """Divide ``p`` by G; quotients are expressed against the original generators."""
    f = element_to_poly(p, G.variables)
    gens = [_Gen(b, c, lm) for b, c, lm in zip(G.basis, G.cofactors, G.leading)]
    ng = len(G.generators)
    r, cof = _reduce(f, [{} for _ in range(ng)], gens, G.order)
    quotients = [poly_to_element(G.table, G.variables, {e: -c for e, c in q.items()}) for q in cof]
    return DivisionResult(poly_to_element(G.table, G.variables, r), quotients)


def is_zero_dimensional(G):
    if G.is_unit_ideal():
        return True
    n = len(G.variables)
    for i in range(n):
        if not any(lm[i] > 0 and sum(lm) == lm[i] for lm in G.leading):
            return False
    return True


def _standard(G, exps):
    return not any(_divides(lm, exps) for lm in G.leading)


def standard_monomials(G, degree_cap=None):
    """Monomials outside the leading ideal, sorted by (degree, order). Returns Elements."""
    if degree_cap is None and not is_zero_dimensional(G):
        raise NotZeroDimensional("staircase is infinite; pass a degree cap")
    n = len(G.variables)
    found = set()
    frontier = [tuple(0 for _ in range(n))]
    if G.is_unit_ideal():
        return []
    while frontier:
        e = frontier.pop()
        if e in found or not _standard(G, e):
            continue
        if degree_cap is not None and G.order.degree(e) > degree_cap:
            continue
        found.add(e)
        for i in range(n):
            nxt = tuple(a + (1 if k == i else 0) for k, a in enumerate(e))
            if nxt not in found:
                frontier.append(nxt)
    mons = sorted(found, key=G.order.key)
    return [poly_to_element(G.table, G.variables, {e: Fraction(1)}) for e in mons]


def _homogeneous(p, deg):
    return len({deg(e) for e in p}) <= 1


def graded_slice(G, weighted_degree):
    """Standard monomials of exactly the given weighted degree (homogeneous ideals only)."""
    deg = G.order.degree
    if not all(_homogeneous(g, deg) for g in G.basis):
        raise NonHomogeneousIdeal("ideal is not homogeneous for the order's grading")
    if G.is_unit_ideal():
        return []
    n = len(G.variables)
    w = G.order.weights if G.order.kind == "wgrevlex" else (1,) * n
    out = []

    def rec(i, left, acc):
        if i == n:
            if not left:
                e = tuple(acc)
                if _standard(G, e):
                    out.append(e)
            return
        for a in range(left // w[i] + 1):
            acc.append(a)
            rec(i + 1, left - a * w[i], acc)
            acc.pop()

    rec(0, weighted_degree, [])
    out.sort(key=G.order.key)
    return [poly_to_element(G.table, G.variables, {e: Fraction(1)}) for e in out]


def slice_count(G, weighted_degree):
    return len(graded_slice(G, weighted_degree))


def reconstruct(G, i):
    """Cofactor row i applied to the original generators (should equal basis[i])."""
    out = {}
    for q, g in zip(G.cofactors[i], G.generators):
        if q:
            _add_into(out, _mul(q, g))
    return out
