"""Exact arithmetic in graded super-commutative polynomial algebras.

An :class:`Element` is a finite map from monomial keys to ``Fraction``
coefficients.  A key is the tuple ``(h, e_0, ..., e_{k-1})`` where ``h`` is the
power of the formal parameter hbar and ``e_i`` the exponent of the i-th declared
variable.  Odd variables have exponent 0 or 1 and a monomial always means the
product of its variables in declaration order, so Koszul signs live in the
coefficient.  Because hbar is just one more (even, ghost 0) slot, polynomials in
hbar with Element coefficients are Elements too; ``HbarPoly`` is an alias.
"""

from dataclasses import dataclass
from fractions import Fraction
from operator import add
import random as _random

from .errors import HbarDivisionFails, ModelInvalid, ModelMismatch

MIXED = "Mixed"


@dataclass(frozen=True)
class Variable:
    name: str
    ghost: int
    parity: int | None = None
    weight: int = 1
    partner: str | None = None
    charge: int = 0

    def __post_init__(self):
        if self.parity is None:
            object.__setattr__(self, "parity", self.ghost % 2)
        if self.parity not in (0, 1):
            raise ModelInvalid(f"variable {self.name}: parity must be 0 or 1")


class VariableTable:
    """Ordered variable declarations plus the derived data used by the kernels."""

    def __init__(self, variables):
        self.variables = tuple(variables)
        self.names = tuple(v.name for v in self.variables)
        if len(set(self.names)) != len(self.names):
            raise ModelInvalid("variable names must be unique")
        self.index = {n: i for i, n in enumerate(self.names)}
        self.nvars = len(self.variables)
        self.ghosts = tuple(v.ghost for v in self.variables)
        self.weights = tuple(v.weight for v in self.variables)
        self.charges = tuple(v.charge for v in self.variables)
        self.odd_positions = tuple(i + 1 for i, v in enumerate(self.variables) if v.parity)
        self.odd_rank = {p: r for r, p in enumerate(self.odd_positions)}
        self.pairs = self._pairs()
        self._masks = {}

    def _pairs(self):
        pairs = []
        seen = set()
        for i, v in enumerate(self.variables):
            if v.partner is None:
                continue
            if v.partner not in self.index:
                raise ModelInvalid(f"variable {v.name}: unknown partner {v.partner}")
            j = self.index[v.partner]
            w = self.variables[j]
            if w.partner != v.name:
                raise ModelInvalid(f"partner relation of {v.name} is not an involution")
            if v.parity == w.parity:
                raise ModelInvalid(f"partners {v.name}, {w.name} must have opposite parity")
            if v.ghost + w.ghost != -1:
                raise ModelInvalid(f"partners {v.name}, {w.name}: ghost numbers must sum to -1")
            if (i, j) in seen or (j, i) in seen:
                continue
            seen.add((i, j))
            f, g = (i, j) if v.ghost >= 0 else (j, i)
            field_odd = self.variables[f].parity
            pairs.append((f + 1, g + 1, -1 if field_odd else 1, field_odd))
        return tuple(pairs)

    def __eq__(self, other):
        return isinstance(other, VariableTable) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def __repr__(self):
        return f"VariableTable({', '.join(self.names)})"

    def mask(self, key):
        m = self._masks.get(key)
        if m is None:
            m = 0
            for r, p in enumerate(self.odd_positions):
                if key[p]:
                    m |= 1 << r
            self._masks[key] = m
        return m

    def ghost_of(self, key):
        return sum(e * g for e, g in zip(key[1:], self.ghosts) if e)

    def weight_of(self, key):
        return sum(e * w for e, w in zip(key[1:], self.weights) if e)

    def charge_of(self, key):
        return sum(e * c for e, c in zip(key[1:], self.charges) if e)

    def unit_key(self, h=0):
        return (h,) + (0,) * self.nvars

    # convenience constructors
    def var(self, name):
        key = [0] * (self.nvars + 1)
        key[self.index[name] + 1] = 1
        return Element(self, {tuple(key): Fraction(1)})

    def one(self):
        return Element(self, {self.unit_key(): Fraction(1)})

    def zero(self):
        return Element(self, {})

    def hbar(self, k=1):
        return Element(self, {self.unit_key(k): Fraction(1)})

    def const(self, c):
        c = Fraction(c)
        return Element(self, {self.unit_key(): c} if c else {})


def _koszul(ma, mb):
    """Sign exponent for concatenating odd sets ``ma`` then ``mb`` into sorted order."""
    s = 0
    while mb:
        low = mb & -mb
        s += (ma >> low.bit_length()).bit_count()
        mb ^= low
    return s


class Element:
    """Exact rational combination of super-monomials (with hbar powers)."""

    __slots__ = ("table", "terms")

    def __init__(self, table, terms=None):
        self.table = table
        self.terms = terms if terms is not None else {}

    # construction
    @classmethod
    def monomial(cls, table, exps, coeff=1, h=0):
        key = [0] * (table.nvars + 1)
        key[0] = h
        for name, e in exps.items():
            i = table.index[name]
            if table.variables[i].parity and e > 1:
                return cls(table, {})
            key[i + 1] = e
        c = Fraction(coeff)
        return cls(table, {tuple(key): c} if c else {})

    def _check(self, other):
        if other.table is not self.table and other.table != self.table:
            raise ModelMismatch("operands live over different variable tables")

    # ring structure
    def __add__(self, other):
        if not isinstance(other, Element):
            if other == 0:
                return self
            other = self.table.const(other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return Element(self.table, out)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.table, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = Fraction(c)
        if not c:
            return Element(self.table, {})
        return Element(self.table, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Element):
            return mul(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        return self.scale(Fraction(1) / Fraction(other))

    def __eq__(self, other):
        if isinstance(other, Element):
            return self.table == other.table and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.table.const(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # gradings
    def ghost_number(self):
        return ghost_number(self)

    def parity_parts(self):
        """Return (even part, odd part)."""
        ev, od = {}, {}
        for k, c in self.terms.items():
            (od if self.table.mask(k).bit_count() & 1 else ev)[k] = c
        return Element(self.table, ev), Element(self.table, od)

    def parity(self):
        ps = {self.table.mask(k).bit_count() & 1 for k in self.terms}
        if len(ps) > 1:
            return MIXED
        return ps.pop() if ps else 0

    def split(self, grading):
        """Split into homogeneous parts for ``grading(key) -> hashable``."""
        parts = {}
        for k, c in self.terms.items():
            parts.setdefault(grading(k), {})[k] = c
        return {g: Element(self.table, t) for g, t in parts.items()}

    # hbar structure
    def hbar_degree(self):
        return max((k[0] for k in self.terms), default=-1)

    def hbar_coeffs(self):
        """Map hbar power -> classical Element."""
        out = {}
        for k, c in self.terms.items():
            out.setdefault(k[0], {})[(0,) + k[1:]] = c
        return {h: Element(self.table, t) for h, t in sorted(out.items())}

    def hbar_part(self, h):
        return Element(self.table, {(0,) + k[1:]: c for k, c in self.terms.items() if k[0] == h})

    def classical(self):
        return self.hbar_part(0)

    def mul_hbar(self, n=1):
        return Element(self.table, {(k[0] + n,) + k[1:]: c for k, c in self.terms.items()})

    def div_hbar(self, n=1):
        bad = [k for k in self.terms if k[0] < n]
        if bad:
            raise HbarDivisionFails(f"nonzero hbar^{bad[0][0]} part: {Element(self.table, {k: self.terms[k] for k in bad})}")
        return Element(self.table, {(k[0] - n,) + k[1:]: c for k, c in self.terms.items()})

    def is_classical(self):
        return all(k[0] == 0 for k in self.terms)

    # calculus
    def deriv(self, name):
        return derivative(self, self.table.index[name] + 1)

    def coefficient(self, exps, h=0):
        key = [0] * (self.table.nvars + 1)
        key[0] = h
        for name, e in exps.items():
            key[self.table.index[name] + 1] = e
        return self.terms.get(tuple(key), Fraction(0))

    # text
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kc: _order_key(self.table, kc[0]))

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"Element({render(self)})"


HbarPoly = Element


def _order_key(table, key):
    return (key[0], table.weight_of(key), sum(key[1:]), tuple(-e for e in key[1:]))


def render_monomial(table, key):
    parts = []
    if key[0]:
        parts.append("hbar" if key[0] == 1 else f"hbar^{key[0]}")
    for name, e in zip(table.names, key[1:]):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def render(a):
    """Deterministic text form, e.g. ``1/2*x^2 - hbar*eta``."""
    if not a.terms:
        return "0"
    out = []
    for k, c in a.sorted_terms():
        mono = render_monomial(a.table, k)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


def mul(a, b):
    """Super-commutative product with Koszul signs; ghost numbers add."""
    if a.table is not b.table and a.table != b.table:
        raise ModelMismatch("operands live over different variable tables")
    table = a.table
    if not a.terms or not b.terms:
        return Element(table, {})
    mask = table.mask
    bs = [(kb, cb, mask(kb)) for kb, cb in b.terms.items()]
    out = {}
    for ka, ca in a.terms.items():
        ma = mask(ka)
        for kb, cb, mb in bs:
            if ma & mb:
                continue
            c = ca * cb
            if mb and ma and _koszul(ma, mb) & 1:
                c = -c
            key = tuple(map(add, ka, kb))
            v = out.get(key)
            if v is None:
                out[key] = c
            else:
                v += c
                if v:
                    out[key] = v
                else:
                    del out[key]
    return Element(table, out)


def derivative(a, pos):
    """Left derivative with respect to the variable stored at key position ``pos``."""
    table = a.table
    out = {}
    rank = table.odd_rank.get(pos)
    for k, c in a.terms.items():
        e = k[pos]
        if not e:
            continue
        if rank is None:
            c = c * e
        elif (table.mask(k) & ((1 << rank) - 1)).bit_count() & 1:
            c = -c
        nk = k[:pos] + (e - 1,) + k[pos + 1:]
        out[nk] = out.get(nk, 0) + c
    return Element(table, {k: c for k, c in out.items() if c})


def bv_delta(a):
    """Second-order BV operator: sum over conjugate pairs of (-1)^|field| d_field d_antifield."""
    table = a.table
    out = {}
    for k, c in a.terms.items():
        m = None
        for f, g, sign, field_odd in table.pairs:
            ef, eg = k[f], k[g]
            if not ef or not eg:
                continue
            if m is None:
                m = table.mask(k)
            odd_pos, even_pos = (f, g) if field_odd else (g, f)
            val = c * sign * k[even_pos]
            if (m & ((1 << table.odd_rank[odd_pos]) - 1)).bit_count() & 1:
                val = -val
            nk = list(k)
            nk[f] -= 1
            nk[g] -= 1
            nk = tuple(nk)
            out[nk] = out.get(nk, 0) + val
    return Element(table, {k: v for k, v in out.items() if v})


def bv_bracket(a, b):
    """BV bracket, computed from first derivatives over each conjugate pair.

    Agrees with :func:`bracket_from_delta`; the test suite checks this.
    """
    table = a.table
    if b.table is not table and b.table != table:
        raise ModelMismatch("operands live over different variable tables")
    result = Element(table, {})
    if not a.terms or not b.terms:
        return result
    for part, p in zip(a.parity_parts(), (0, 1)):
        if not part.terms:
            continue
        sa = -1 if p else 1
        for f, g, _sign, field_odd in table.pairs:
            da_f, da_g = derivative(part, f), derivative(part, g)
            db_f, db_g = derivative(b, f), derivative(b, g)
            if field_odd:
                t = mul(da_g, db_f).scale(-1) + mul(da_f, db_g).scale(-sa)
            else:
                t = mul(da_g, db_f).scale(sa) + mul(da_f, db_g)
            result = result + t
    return result


def bracket_from_delta(a, b):
    """Bracket straight from its definition: (-1)^|a| (a,b) = D(ab) - D(a) b - (-1)^|a| a D(b)."""
    result = Element(a.table, {})
    for part, p in zip(a.parity_parts(), (0, 1)):
        if not part.terms:
            continue
        sa = -1 if p else 1
        t = bv_delta(mul(part, b)) - mul(bv_delta(part), b) - mul(part, bv_delta(b)).scale(sa)
        result = result + t.scale(sa)
    return result


def q_operator(S, a):
    return bv_bracket(S, a)


def k_operator(S, a):
    """K = -hbar Delta + Q."""
    return q_operator(S, a) - bv_delta(a).mul_hbar(1)


def ghost_number(a):
    """Common ghost number of all monomials, ``MIXED`` if they differ, None for zero."""
    gs = {a.table.ghost_of(k) for k in a.terms}
    if not gs:
        return None
    if len(gs) > 1:
        return MIXED
    return gs.pop()


def monomials(table, max_weight, ghost=None, charge=None, exact_weight=None, h=0):
    """Enumerate monomial keys with weighted degree <= max_weight (or == exact_weight).

    Every variable must have positive weight.
    """
    if any(w <= 0 for w in table.weights):
        raise ModelInvalid("monomial enumeration needs positive weights")
    target = exact_weight if exact_weight is not None else max_weight
    out = []
    n = table.nvars
    odd = [v.parity for v in table.variables]

    def rec(i, left, acc, gh, ch):
        if i == n:
            if exact_weight is not None and left:
                return
            if ghost is not None and gh != ghost:
                return
            if charge is not None and ch != charge:
                return
            out.append((h,) + tuple(acc))
            return
        w = table.weights[i]
        top = min(left // w, 1 if odd[i] else left // w)
        for e in range(top + 1):
            acc.append(e)
            rec(i + 1, left - e * w, acc, gh + e * table.ghosts[i], ch + e * table.charges[i])
            acc.pop()

    rec(0, target, [], 0, 0)
    return out


def random_element(table, rng=None, max_weight=3, n_terms=4, ghost=None, hbar_max=0, coeff_range=3):
    """Random Element for property tests; ghost restricts the monomials used."""
    rng = rng or _random.Random()
    pool = monomials(table, max_weight, ghost=ghost)
    if not pool:
        return Element(table, {})
    out = {}
    for _ in range(n_terms):
        k = rng.choice(pool)
        h = rng.randint(0, hbar_max)
        c = Fraction(rng.randint(-coeff_range, coeff_range), rng.randint(1, 2))
        if c:
            key = (h,) + k[1:]
            v = out.get(key, 0) + c
            if v:
                out[key] = v
            else:
                out.pop(key, None)
    return Element(table, out)
