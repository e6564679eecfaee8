"""Exact rational linear algebra: an incremental sparse echelon basis and dense matrix helpers."""

from fractions import Fraction


def _axpy(target, c, vec):
    """target += c * vec, in place, dropping zeros."""
    for k, v in vec.items():
        nv = target.get(k, 0) + c * v
        if nv:
            target[k] = nv
        else:
            target.pop(k, None)


class EchelonSpace:
    """Span of sparse vectors kept in fully reduced echelon form.

    Each stored row remembers how it is made from the inserted generators, so
    :meth:`reduce` can return a witness ``combo`` with
    ``vec == sum(combo[t] * generator[t]) + residual``.
    """

    def __init__(self, track=True):
        self.rows = {}      # pivot column -> row (pivot entry 1)
        self.combos = {}    # pivot column -> combination of generator tags
        self.track = track

    def __len__(self):
        return len(self.rows)

    def reduce(self, vec):
        v = dict(vec)
        combo = {}
        for col in [c for c in v if c in self.rows]:
            c = v.get(col)
            if not c:
                continue
            _axpy(v, -c, self.rows[col])
            if self.track:
                _axpy(combo, c, self.combos[col])
        return v, combo

    def add(self, vec, tag=None):
        """Insert a generator; return True when it enlarged the span."""
        v, combo = self.reduce(vec)
        if not v:
            return False
        piv = min(v)
        inv = 1 / v[piv]
        v = {k: x * inv for k, x in v.items()}
        if self.track:
            combo = {t: -x * inv for t, x in combo.items()}
            combo[tag] = combo.get(tag, 0) + inv
            if not combo[tag]:
                del combo[tag]
        for col, row in self.rows.items():
            c = row.get(piv)
            if c:
                _axpy(row, -c, v)
                if self.track:
                    _axpy(self.combos[col], -c, combo)
        self.rows[piv] = v
        if self.track:
            self.combos[piv] = combo
        return True

    def contains(self, vec):
        return not self.reduce(vec)[0]


# dense helpers -------------------------------------------------------------

def zeros(r, c):
    return [[Fraction(0)] * c for _ in range(r)]


def eye(n):
    m = zeros(n, n)
    for i in range(n):
        m[i][i] = Fraction(1)
    return m


def to_fractions(m):
    return [[Fraction(x) for x in row] for row in m]


def shape(m, cols=None):
    return (len(m), len(m[0]) if m else (cols or 0))


def mat_mul(a, b, inner=None):
    if not a:
        return []
    n = len(b) if b else (inner or 0)
    if not b:
        return zeros(len(a), 0)
    cols = len(b[0])
    out = []
    for row in a:
        acc = [Fraction(0)] * cols
        for k in range(n):
            x = row[k]
            if x:
                bk = b[k]
                for j in range(cols):
                    if bk[j]:
                        acc[j] += x * bk[j]
        out.append(acc)
    return out


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a, c):
    return [[x * c for x in row] for row in a]


def is_zero(a):
    return all(not x for row in a for x in row)


def transpose(a, cols=None):
    if not a:
        return [[] for _ in range(cols or 0)]
    return [list(col) for col in zip(*a)]


def columns(a):
    return transpose(a)


def from_columns(cols, nrows):
    if not cols:
        return [[] for _ in range(nrows)]
    return [list(r) for r in zip(*cols)]


def rref(a):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [list(row) for row in a]
    if not m:
        return m, []
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(a):
    return len(rref(a)[1])


def nullspace(a, ncols=None):
    """Basis (list of column vectors) of {v : a v = 0}."""
    if not a:
        n = ncols or 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    cols = len(a[0])
    m, piv = rref(a)
    free = [c for c in range(cols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -m[i][f]
        basis.append(v)
    return basis


def solve(a, b):
    """Some x with a x = b (column vector b), or None.  Free variables are set to 0."""
    rows = len(a)
    cols = len(a[0]) if a else 0
    aug = [list(a[i]) + [b[i]] for i in range(rows)]
    m, piv = rref(aug)
    if cols in piv:
        return None
    x = [Fraction(0)] * cols
    for i, p in enumerate(piv):
        x[p] = m[i][cols]
    return x


def mat_vec(a, v):
    return [sum((x * y for x, y in zip(row, v) if x and y), Fraction(0)) for row in a]


def inverse(a):
    """Inverse of a square matrix, or None when singular."""
    n = len(a)
    aug = [list(a[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    m, piv = rref(aug)
    if piv[:n] != list(range(n)):
        return None
    return [row[n:] for row in m]


class Mat:
    """Dense rational matrix that remembers its shape, including empty ones."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows, cols, data=None):
        self.rows, self.cols = rows, cols
        if data is None:
            data = zeros(rows, cols)
        self.data = [[Fraction(x) for x in row] for row in data]
        if len(self.data) != rows or any(len(r) != cols for r in self.data):
            raise ValueError(f"matrix data does not have shape {rows}x{cols}")

    @classmethod
    def zero(cls, rows, cols):
        return cls(rows, cols)

    @classmethod
    def identity(cls, n):
        return cls(n, n, eye(n))

    @classmethod
    def from_columns(cls, cols, nrows):
        return cls(nrows, len(cols), from_columns(cols, nrows) if cols else [[] for _ in range(nrows)])

    def column(self, j):
        return [self.data[i][j] for i in range(self.rows)]

    def columns(self):
        return [self.column(j) for j in range(self.cols)]

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        if not self.rows or not other.cols:
            return Mat(self.rows, other.cols)
        return Mat(self.rows, other.cols, mat_mul(self.data, other.data) if self.cols else None)

    def __add__(self, other):
        return Mat(self.rows, self.cols, mat_add(self.data, other.data))

    def __sub__(self, other):
        return Mat(self.rows, self.cols, mat_sub(self.data, other.data))

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        return Mat(self.rows, self.cols, mat_scale(self.data, Fraction(c)))

    def T(self):
        return Mat(self.cols, self.rows, [list(c) for c in zip(*self.data)] if self.rows else [[] for _ in range(self.cols)])

    def is_zero(self):
        return is_zero(self.data)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        return isinstance(other, Mat) and (self.rows, self.cols) == (other.rows, other.cols) and self.data == other.data

    def inverse(self):
        inv = inverse(self.data) if self.rows else []
        return None if inv is None else Mat(self.rows, self.rows, inv)

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in row) for row in self.data)
        return f"Mat({self.rows}x{self.cols}: {body})"
