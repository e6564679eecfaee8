"""Truncated series in commuting couplings t^0, t^1, ...

A monomial in the couplings is a sorted tuple of indices, e.g. (0, 1, 1) for
t^0 (t^1)^2.  Coefficients can be any ring elements supporting +, *, unary -
and truthiness (Element, Laurent, Fraction).  The symmetric component at a
multi-index is the stored coefficient times the product of multiplicity
factorials.
"""

from collections import Counter
from math import factorial


def sort_index(indices):
    return tuple(sorted(indices))


def multiplicity_factor(mu):
    f = 1
    for m in Counter(mu).values():
        f *= factorial(m)
    return f


def _merge(a, b):
    return tuple(sorted(a + b))


class TSeries:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def monomial(cls, mu, coeff):
        return cls({sort_index(mu): coeff})

    def __bool__(self):
        return bool(self.coeffs)

    def items(self):
        return sorted(self.coeffs.items())

    def get(self, mu, default=None):
        return self.coeffs.get(sort_index(mu), default)

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            if k in out:
                out[k] = out[k] + v
            else:
                out[k] = v
        return TSeries(out)

    def __neg__(self):
        return TSeries({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return TSeries({k: c * v for k, v in self.coeffs.items()})

    def map(self, f):
        return TSeries({k: f(v) for k, v in self.coeffs.items()})

    def bilinear(self, other, f):
        out = {}
        for k1, a in self.coeffs.items():
            for k2, b in other.coeffs.items():
                v = f(a, b)
                if not v:
                    continue
                k = _merge(k1, k2)
                out[k] = out[k] + v if k in out else v
        return TSeries(out)

    def __mul__(self, other):
        if isinstance(other, TSeries):
            return self.bilinear(other, lambda a, b: a * b)
        return NotImplemented

    def deriv(self, alpha):
        out = {}
        for k, v in self.coeffs.items():
            m = k.count(alpha)
            if not m:
                continue
            i = k.index(alpha)
            nk = k[:i] + k[i + 1:]
            w = v * m
            out[nk] = out[nk] + w if nk in out else w
        return TSeries(out)

    def layer(self, n):
        return TSeries({k: v for k, v in self.coeffs.items() if len(k) == n})

    def truncate(self, n):
        return TSeries({k: v for k, v in self.coeffs.items() if len(k) <= n})

    def word_lengths(self):
        return sorted({len(k) for k in self.coeffs})

    def component(self, indices):
        """Graded-symmetric component (coefficient times multiplicity factorials)."""
        mu = sort_index(indices)
        v = self.coeffs.get(mu)
        if v is None:
            return None
        return v * multiplicity_factor(mu)

    def __eq__(self, other):
        if not isinstance(other, TSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        body = ", ".join(f"{k}: {v}" for k, v in self.items())
        return f"TSeries({{{body}}})"


def apply_derivation(images, F):
    """Apply the derivation t^g -> images[g] (TSeries with scalar coefficients) to F."""
    out = TSeries()
    for g, img in images.items():
        if not img:
            continue
        dF = F.deriv(g)
        if dF:
            out = out + img.bilinear(dF, lambda a, b: a * b)
    return out


def multi_indices(dim, n):
    """All sorted multi-indices of length n over range(dim)."""
    from itertools import combinations_with_replacement
    return list(combinations_with_replacement(range(dim), n))
