"""Finite Laurent polynomials in hbar with rational coefficients."""

from fractions import Fraction


class Laurent:
    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        if isinstance(coeffs, (int, Fraction)):
            coeffs = {0: coeffs}
        self.c = {k: Fraction(v) for k, v in (coeffs or {}).items() if v}

    @classmethod
    def hbar(cls, k=1, coeff=1):
        return cls({k: coeff})

    def __bool__(self):
        return bool(self.c)

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) + v
        return Laurent(out)

    __radd__ = __add__

    def __neg__(self):
        return Laurent({k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Laurent({k: v * other for k, v in self.c.items()})
        if not isinstance(other, Laurent):
            return NotImplemented
        out = {}
        for a, x in self.c.items():
            for b, y in other.c.items():
                out[a + b] = out.get(a + b, 0) + x * y
        return Laurent(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def shift(self, k):
        return Laurent({a + k: v for a, v in self.c.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Laurent(other)
        if not isinstance(other, Laurent):
            return NotImplemented
        return self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def min_degree(self):
        return min(self.c, default=0)

    def max_degree(self):
        return max(self.c, default=0)

    def is_polynomial(self):
        return all(k >= 0 for k in self.c)

    def to_json(self):
        """{"low": lowest power, "coeffs": ["p/q", ...]} with consecutive powers."""
        if not self.c:
            return {"low": 0, "coeffs": []}
        lo, hi = self.min_degree(), self.max_degree()
        return {"low": lo, "coeffs": [frac_str(self.c.get(k, Fraction(0))) for k in range(lo, hi + 1)]}

    @classmethod
    def from_json(cls, obj):
        lo = obj["low"]
        return cls({lo + i: Fraction(s) for i, s in enumerate(obj["coeffs"])})

    def __str__(self):
        if not self.c:
            return "0"
        parts = []
        for k in sorted(self.c):
            v = self.c[k]
            if k == 0:
                parts.append(str(v))
            else:
                h = "hbar" if k == 1 else f"hbar^{k}"
                parts.append(h if v == 1 else ("-" + h if v == -1 else f"{v}*{h}"))
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def _lift(x):
    if isinstance(x, Laurent):
        return x
    return Laurent(x)


def frac_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def minus_hbar_pow(k):
    """(-hbar)^k for k >= 0."""
    return Laurent({k: (-1) ** k})
