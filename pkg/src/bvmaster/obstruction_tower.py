"""Obstruction towers for finite-dimensional complexes with a deformed differential.

A complex is a ghost-graded rational vector space with matrices Q and
K^(1..N); K = Q + hbar K^(1) + hbar^2 K^(2) + ... squares to zero order by
order.  The tower consists of kappa^(n) on the cohomology H and maps
f^(n): H -> C with K f = f kappa.  Classes killed by every kappa^(n) extend to
quantum observables; the others are invisible.

Power series in hbar are lists of Mat indexed by the hbar power.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import json
import random as _random

from .errors import InternalIdentityViolation, ModelInvalid, NotClosed, NotNilpotent, ParseError
from .laurent import Laurent, frac_str
from .linalg import Mat, nullspace, rank, solve
from .master_solver import Check, VerificationLog


@dataclass
class FiniteComplex:
    ghosts: list                 # ghost number of each basis vector
    Q: Mat
    K: list                      # K[l - 1] is K^(l)
    names: list = None

    def __post_init__(self):
        if self.names is None:
            self.names = [f"v{i}" for i in range(len(self.ghosts))]

    @property
    def dim(self):
        return len(self.ghosts)

    @property
    def order(self):
        return len(self.K)

    def series(self):
        """[Q, K^(1), ..., K^(N)]."""
        return [self.Q] + list(self.K)

    def dimensions(self):
        out = {}
        for g in self.ghosts:
            out[g] = out.get(g, 0) + 1
        return dict(sorted(out.items()))


# series helpers ------------------------------------------------------------

def s_mul(A, B, N):
    """Product of two matrix series, truncated at hbar^N."""
    out = []
    for n in range(N + 1):
        acc = Mat.zero(A[0].rows, B[0].cols)
        for a in range(n + 1):
            if a < len(A) and n - a < len(B):
                acc = acc + A[a] @ B[n - a]
        out.append(acc)
    return out


def s_add(A, B):
    return [a + b for a, b in zip(A, B)]


def s_sub(A, B):
    return [a - b for a, b in zip(A, B)]


def s_inv(A, N):
    a0 = A[0].inverse()
    if a0 is None:
        raise ModelInvalid("leading coefficient of the series is singular")
    out = [a0]
    for n in range(1, N + 1):
        acc = Mat.zero(a0.rows, a0.cols)
        for a in range(1, n + 1):
            if a < len(A):
                acc = acc + A[a] @ out[n - a]
        out.append(-(a0 @ acc))
    return out


def s_is_zero(A):
    return all(a.is_zero() for a in A)


def _pad(A, N, rows, cols):
    return [A[n] if n < len(A) else Mat.zero(rows, cols) for n in range(N + 1)]


# validation ----------------------------------------------------------------

def _degree_violation(cx, M, shift):
    for i in range(M.rows):
        for j in range(M.cols):
            if M.data[i][j] and cx.ghosts[i] != cx.ghosts[j] + shift:
                return (i, j)
    return None


def validate(cx):
    """Check shapes, ghost degrees and the nilpotence relations up to order N."""
    d = cx.dim
    log = VerificationLog(strict=False)
    for l, M in enumerate(cx.series()):
        if (M.rows, M.cols) != (d, d):
            raise ModelInvalid(f"K^({l}) has shape {M.rows}x{M.cols}, expected {d}x{d}")
        bad = _degree_violation(cx, M, 1)
        if bad:
            raise ModelInvalid(f"K^({l}) does not raise ghost number by 1 at entry {bad}")
    Ks = cx.series()
    for n in range(0, cx.order + 1):
        acc = Mat.zero(d, d)
        for a in range(n + 1):
            acc = acc + Ks[a] @ Ks[n - a]
        if not acc.is_zero():
            raise NotNilpotent(n, "Q^2 != 0" if n == 0 else "sum_l K^(n-l) K^(l) != 0")
        log.record("K^2 = 0", n, True)
    return log


# cohomology ----------------------------------------------------------------

@dataclass
class CohomologyData:
    f0: Mat                      # d x h, columns are representatives
    ghosts: list                 # ghost number of each H basis vector
    Q: Mat
    _aug: Mat = None

    @property
    def dim(self):
        return self.f0.cols

    def split(self, v):
        """Closed v = f0 a + Q w; returns (a, w)."""
        if any((self.Q @ Mat(len(v), 1, [[x] for x in v])).column(0)):
            raise NotClosed("vector is not Q-closed")
        h = self.dim
        if self._aug is None:
            self._aug = Mat(self.Q.rows, h + self.Q.cols,
                            [self.f0.data[i] + self.Q.data[i] for i in range(self.Q.rows)])
        x = solve(self._aug.data, list(v)) if self.Q.rows else [Fraction(0)] * (h + self.Q.cols)
        if x is None:
            raise InternalIdentityViolation("H representatives span Ker Q / Im Q", str(v))
        return x[:h], x[h:]

    def project(self, v):
        return self.split(v)[0]

    def contract(self, v):
        """Some w with Q w = v, for v in Im Q."""
        a, w = self.split(v)
        if any(a):
            raise InternalIdentityViolation("vector is Q-exact", str(v))
        return w


def cohomology(cx):
    """Representatives of H chosen by pivoting, degree by degree."""
    Q = cx.Q
    d = cx.dim
    reps, ghosts = [], []
    for g in sorted(set(cx.ghosts)):
        idx = [i for i in range(d) if cx.ghosts[i] == g]
        sub = [[Q.data[r][i] for i in idx] for r in range(d)]
        ker = nullspace(sub, len(idx))
        image = [Q.column(j) for j in range(d) if cx.ghosts[j] == g - 1]
        span = [c for c in image if any(c)]
        r0 = rank(span) if span else 0
        for kv in ker:
            v = [Fraction(0)] * d
            for i, x in zip(idx, kv):
                v[i] = x
            r1 = rank(span + [v])
            if r1 > r0:
                span.append(v)
                r0 = r1
                reps.append(v)
                ghosts.append(g)
    f0 = Mat.from_columns(reps, d)
    return CohomologyData(f0, ghosts, Q)


# tower ---------------------------------------------------------------------

@dataclass
class ObstructionTower:
    complex: FiniteComplex
    data: CohomologyData
    kappa: list                  # kappa[0] = 0, kappa[n] = kappa^(n)
    f: list                      # f[0] = f0
    log: VerificationLog = field(default_factory=VerificationLog)

    @property
    def order(self):
        return len(self.kappa) - 1

    @property
    def hdim(self):
        return self.data.dim


def _apply_cols(M, fn):
    cols = [fn(c) for c in M.columns()]
    return cols


def build_tower(cx, data=None, strict=True):
    validate(cx)
    data = data or cohomology(cx)
    d, h, N = cx.dim, data.dim, cx.order
    Ks = cx.series()
    f = [data.f0]
    kappa = [Mat.zero(h, h)]
    log = VerificationLog(strict=strict)
    log.record("Q f0 = 0", 0, (cx.Q @ data.f0).is_zero())
    for n in range(N):
        m = n + 1
        g = Ks[m] @ f[0]
        for l in range(1, m):
            g = g + Ks[m - l] @ f[l] - f[l] @ kappa[m - l]
        kk = Mat.zero(h, h)
        for l in range(1, m):
            kk = kk + kappa[m - l] @ kappa[l]
        lhs = cx.Q @ g
        log.record("Q g^(n+1) = -sum f kappa kappa", m, lhs == -(f[0] @ kk), "")
        log.record("kappa^2 = 0", m, kk.is_zero(), repr(kk))
        acols, wcols = [], []
        for c in g.columns():
            a, w = data.split(c)
            acols.append(a)
            wcols.append([-x for x in w])
        kappa.append(Mat.from_columns(acols, h) if h else Mat.zero(0, 0))
        f.append(Mat.from_columns(wcols, d) if h else Mat.zero(d, 0))
        if h:
            bad = _degree_violation_rect(data.ghosts, data.ghosts, kappa[m], 1)
            log.record("kappa raises ghost by 1", m, bad is None, str(bad))
    tower = ObstructionTower(cx, data, kappa, f, log)
    ok, detail = chain_relation(tower)
    log.record("K f = f kappa mod hbar^(N+1)", N, ok, detail)
    return tower


def _degree_violation_rect(row_ghosts, col_ghosts, M, shift):
    for i in range(M.rows):
        for j in range(M.cols):
            if M.data[i][j] and row_ghosts[i] != col_ghosts[j] + shift:
                return (i, j)
    return None


def chain_relation(tower, f=None, kappa=None):
    cx = tower.complex
    N = cx.order
    f = f or tower.f
    kappa = kappa or tower.kappa
    lhs = s_mul(cx.series(), f, N)
    rhs = s_mul(f, kappa, N)
    for n in range(N + 1):
        if lhs[n] != rhs[n]:
            return False, f"hbar^{n}"
    return True, ""


def kappa_squared_zero(kappa, N):
    sq = s_mul(kappa, kappa, N)
    return s_is_zero(sq)


# classification and extension ----------------------------------------------

@dataclass
class Classification:
    observables: list            # H vectors spanning the common kernel of the kappas
    invisibles: list             # complement, chosen among standard basis vectors


def classify(tower):
    h = tower.hdim
    rows = []
    for k in tower.kappa[1:]:
        rows.extend(k.data)
    obs = nullspace(rows, h) if rows else [[Fraction(int(i == j)) for i in range(h)] for j in range(h)]
    span = list(obs)
    r = rank(span) if span else 0
    inv = []
    for j in range(h):
        e = [Fraction(int(i == j)) for i in range(h)]
        r1 = rank(span + [e])
        if r1 > r:
            span.append(e)
            inv.append(e)
            r = r1
    return Classification(obs, inv)


@dataclass
class Extension:
    chain: list                  # chain[l] = f^(l)(a), vectors in C
    observable: bool
    closed: bool                 # K f(a) = 0 mod hbar^(N+1)


def _vec(v):
    return Mat(len(v), 1, [[Fraction(x)] for x in v])


def quantum_extend(tower, a):
    a = _vec(a)
    chain = [(fl @ a).column(0) for fl in tower.f]
    observable = all((k @ a).is_zero() for k in tower.kappa[1:])
    cx = tower.complex
    Ks = cx.series()
    closed = True
    for n in range(cx.order + 1):
        acc = [Fraction(0)] * cx.dim
        for l in range(n + 1):
            col = (Ks[n - l] @ _vec(chain[l])).column(0)
            acc = [x + y for x, y in zip(acc, col)]
        if any(acc):
            closed = False
            break
    if observable and not closed:
        raise InternalIdentityViolation("K f(a) = 0 for observables", str(a.column(0)))
    return Extension(chain, observable, closed)


# gauge transformations ------------------------------------------------------

def gauge_transform(tower, s, xi):
    """f' = f xi + K s + s kappa', kappa' = xi^-1 kappa xi."""
    cx = tower.complex
    N = cx.order
    d, h = cx.dim, tower.hdim
    s = _pad(s, N, d, h)
    xi = _pad(xi, N, h, h)
    kp = s_mul(s_mul(s_inv(xi, N), tower.kappa, N), xi, N)
    fp = s_add(s_add(s_mul(tower.f, xi, N), s_mul(cx.series(), s, N)), s_mul(s, kp, N))
    return fp, kp


def gauge_check(tower, s, xi):
    fp, kp = gauge_transform(tower, s, xi)
    log = VerificationLog(strict=False)
    ok, detail = chain_relation(tower, fp, kp)
    log.record("K f' = f' kappa'", tower.order, ok, detail)
    log.record("kappa'^2 = 0", tower.order, kappa_squared_zero(kp, tower.order))
    log.record("kappa'^(1) = kappa^(1)", 1, tower.order < 1 or kp[1] == (s_inv(_pad(xi, tower.order, tower.hdim, tower.hdim), 0)[0] @ tower.kappa[1] @ xi[0]))
    return log, fp, kp


def _random_graded(rng, row_ghosts, col_ghosts, shift, lo=-2, hi=2):
    m = Mat.zero(len(row_ghosts), len(col_ghosts))
    for i, gi in enumerate(row_ghosts):
        for j, gj in enumerate(col_ghosts):
            if gi == gj + shift:
                m.data[i][j] = Fraction(rng.randint(lo, hi))
    return m


def random_automorphism(rng, ghosts, N):
    """Ghost-preserving xi with invertible unipotent-times-diagonal leading term."""
    h = len(ghosts)
    x0 = Mat.identity(h)
    for i in range(h):
        x0.data[i][i] = Fraction(rng.choice([1, -1, 2, -2]))
        for j in range(i):
            if ghosts[i] == ghosts[j]:
                x0.data[i][j] = Fraction(rng.randint(-2, 2))
    return [x0] + [_random_graded(rng, ghosts, ghosts, 0) for _ in range(N)]


def random_homotopy(rng, cx, hghosts):
    return [_random_graded(rng, cx.ghosts, hghosts, -1) for _ in range(cx.order + 1)]


# functionals and iota --------------------------------------------------------

def functional_space(cx):
    """Basis of functionals c = sum hbar^n c^(n) with c K = 0 mod hbar^(N+1).

    Each basis element is a list of 1 x d row Mats.
    """
    d, N = cx.dim, cx.order
    Ks = cx.series()
    rows = []
    for n in range(N + 1):
        for j in range(d):
            row = [Fraction(0)] * ((N + 1) * d)
            for a in range(n + 1):
                Kb = Ks[n - a]
                for i in range(d):
                    if Kb.data[i][j]:
                        row[a * d + i] += Kb.data[i][j]
            rows.append(row)
    basis = nullspace(rows, (N + 1) * d)
    return [[Mat(1, d, [v[a * d:(a + 1) * d]]) for a in range(N + 1)] for v in basis]


def random_functional(cx, rng):
    space = functional_space(cx)
    d = cx.dim
    out = [Mat.zero(1, d) for _ in range(cx.order + 1)]
    for b in space:
        c = rng.randint(-3, 3)
        if c:
            out = [x + y.scale(c) for x, y in zip(out, b)]
    return out


def check_functional(cx, c):
    return s_is_zero(s_mul(c, cx.series(), cx.order))


def iota(tower, c, a, f=None):
    """iota(a) = c(f(a)) truncated at hbar^N; ``a`` is an H vector or a series of them."""
    N = tower.order
    f = f or tower.f
    if a and not isinstance(a[0], Mat):
        a = [_vec(a)]
    a = _pad(a, N, tower.hdim, 1)
    val = s_mul(s_mul(c, f, N), a, N)
    return Laurent({n: val[n].data[0][0] for n in range(N + 1)})


def iota_invariance(tower, c, r, s, xi):
    """Check iota' - iota(xi .) = (c s + r f xi + r K s) kappa' on the H basis,
    and iota'(xi^-1 a) = iota(a) on observables.  Returns a VerificationLog."""
    cx = tower.complex
    N, h, d = cx.order, tower.hdim, cx.dim
    log = VerificationLog(strict=False)
    if not check_functional(cx, c):
        raise ModelInvalid("functional does not satisfy c K = 0")
    s = _pad(s, N, d, h)
    xi = _pad(xi, N, h, h)
    fp, kp = gauge_transform(tower, s, xi)
    cp = s_add(c, s_mul(r, cx.series(), N))
    Ks = cx.series()
    corr = s_add(s_add(s_mul(c, s, N), s_mul(s_mul(r, tower.f, N), xi, N)), s_mul(r, s_mul(Ks, s, N), N))
    corr = s_mul(corr, kp, N)
    for j in range(h):
        e = [_vec([Fraction(int(i == j)) for i in range(h)])]
        lhs = iota(tower, cp, e, fp) - iota(tower, c, s_mul(xi, _pad(e, N, h, 1), N))
        rhs = s_mul(corr, _pad(e, N, h, 1), N)
        rhs = Laurent({n: rhs[n].data[0][0] for n in range(N + 1)})
        log.record("iota' - iota xi = (c s + r f xi + r K s) kappa'", j, lhs == rhs, f"{lhs} != {rhs}")
    xinv = s_inv(xi, N)
    for a in classify(tower).observables:
        av = _pad([_vec(a)], N, h, 1)
        log.record("iota'(xi^-1 a) = iota(a) for observables", N,
                   iota(tower, cp, s_mul(xinv, av, N), fp) == iota(tower, c, av), str(a))
    return log


# generators of test complexes -------------------------------------------------

def conjugate(cx_series, ghosts, gser, N):
    """K' = g K g^-1 truncated at hbar^N, with g ghost-preserving and invertible."""
    d = len(ghosts)
    K = _pad(cx_series, N, d, d)
    Kp = s_mul(s_mul(gser, K, N), s_inv(gser, N), N)
    return Kp


def standard_differential(rng, dims):
    """Random square-zero Q in a normal form, then a random graded change of basis."""
    ghosts = [g for g in sorted(dims) for _ in range(dims[g])]
    d = len(ghosts)
    Q = Mat.zero(d, d)
    start = {}
    pos = 0
    for g in sorted(dims):
        start[g] = pos
        pos += dims[g]
    used_targets = {g: 0 for g in dims}
    for g in sorted(dims):
        if g + 1 not in dims:
            continue
        free_src = dims[g] - used_targets[g]
        room = dims[g + 1]
        r = rng.randint(0, max(0, min(free_src, room)))
        for i in range(r):
            src = start[g] + used_targets[g] + i
            tgt = start[g + 1] + i
            Q.data[tgt][src] = Fraction(1)
        used_targets[g + 1] = r
    P = random_automorphism(rng, ghosts, 0)[0]
    return ghosts, P @ Q @ P.inverse()


def conjugated_complex(rng, dims, N):
    """A complex K = g Q g^-1; its obstruction tower vanishes."""
    ghosts, Q = standard_differential(rng, dims)
    d = len(ghosts)
    g = [Mat.identity(d)] + [_random_graded(rng, ghosts, ghosts, 0, -1, 1) for _ in range(N)]
    Kp = conjugate([Q], ghosts, g, N)
    return FiniteComplex(ghosts, Kp[0], Kp[1:])


def two_dim_complex():
    """a (ghost 0), b (ghost 1), Q = 0, K^(1) a = b."""
    Q = Mat.zero(2, 2)
    K1 = Mat(2, 2, [[0, 0], [1, 0]])
    return FiniteComplex([0, 1], Q, [K1], ["a", "b"])


def kappa2_core(N=2):
    """a, u (ghost 0), v, b (ghost 1); Q u = v, K1 a = v, K1 u = -b.

    kappa^(1) = 0 while kappa^(2) a = b.
    """
    Q = Mat.zero(4, 4)
    Q.data[2][1] = Fraction(1)
    K1 = Mat.zero(4, 4)
    K1.data[2][0] = Fraction(1)
    K1.data[3][1] = Fraction(-1)
    K = [K1] + [Mat.zero(4, 4) for _ in range(N - 1)]
    return FiniteComplex([0, 0, 1, 1], Q, K, ["a", "u", "v", "b"])


def _height(M):
    return max((max(abs(x.numerator), x.denominator) for row in M.data for x in row), default=0)


def search_kappa2_fixture(seed=0, N=3, attempts=200, max_height=12):
    """Search over random basis changes and conjugations of the core complex for a
    presentation with kappa^(1) = 0, kappa^(2) != 0 and small entries."""
    core = kappa2_core(N)
    for k in range(attempts):
        rng = _random.Random(seed + k)
        P = random_automorphism(rng, core.ghosts, 0)[0]
        Pinv = P.inverse()
        base = [P @ M @ Pinv for M in core.series()]
        g = [Mat.identity(4)] + [_random_graded(rng, core.ghosts, core.ghosts, 0, -1, 1) for _ in range(N)]
        Kp = conjugate(base, core.ghosts, g, N)
        cx = FiniteComplex(core.ghosts, Kp[0], Kp[1:], [f"e{i}" for i in range(4)])
        if any(_height(M) > max_height for M in Kp):
            continue
        try:
            tower = build_tower(cx)
        except (NotNilpotent, InternalIdentityViolation):
            continue
        if tower.kappa[1].is_zero() and not tower.kappa[2].is_zero():
            return seed + k, cx, tower
    raise ModelInvalid("no fixture found")


# JSON ----------------------------------------------------------------------------

def _mat_json(M):
    return [[frac_str(x) if x.denominator != 1 else str(x.numerator) for x in row] for row in M.data]


def _mat_from(obj, d, what):
    try:
        if len(obj) != d or any(len(r) != d for r in obj):
            raise ParseError(f"{what} must be a {d}x{d} matrix")
        return Mat(d, d, [[Fraction(x) for x in r] for r in obj])
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise ParseError(f"{what}: {err}") from err


def complex_to_json(cx):
    return {
        "dimensions": {str(g): n for g, n in cx.dimensions().items()},
        "names": list(cx.names),
        "Q": _mat_json(cx.Q),
        "K": [_mat_json(M) for M in cx.K],
    }


def complex_from_json(obj):
    if not isinstance(obj, dict) or "dimensions" not in obj or "Q" not in obj:
        raise ParseError("complex file needs 'dimensions' and 'Q'")
    try:
        dims = {int(g): int(n) for g, n in obj["dimensions"].items()}
    except (TypeError, ValueError, AttributeError) as err:
        raise ParseError(f"dimensions: {err}") from err
    ghosts = [g for g in sorted(dims) for _ in range(dims[g])]
    d = len(ghosts)
    Q = _mat_from(obj["Q"], d, "Q")
    K = [_mat_from(m, d, f"K^({l + 1})") for l, m in enumerate(obj.get("K", []))]
    names = obj.get("names")
    if names is not None and len(names) != d:
        raise ParseError("names must list one name per basis vector")
    return FiniteComplex(ghosts, Q, K, names)


def load_complex(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno, err.colno) from err
    return obj, complex_from_json(obj)


def tower_report(tower):
    cls = classify(tower)
    vecs = lambda vs: [[frac_str(x) for x in v] for v in vs]
    return {
        "dimensions": {str(g): n for g, n in tower.complex.dimensions().items()},
        "cohomology_ghosts": list(tower.data.ghosts),
        "representatives": vecs(tower.data.f0.columns()),
        "kappa": [_mat_json(k) for k in tower.kappa[1:]],
        "f": [_mat_json(M.T()) for M in tower.f],
        "observables": vecs(cls.observables),
        "invisibles": vecs(cls.invisibles),
        "checks": [c.to_json() for c in tower.log.checks],
    }


# cross-engine bridge -----------------------------------------------------------

def model_complex(ctx, max_degree):
    """Finite subcomplex of a graded polynomial model, cut by weight - q_shift*ghost.

    Q preserves that grading and -Delta lowers it, so the cut is a subcomplex
    for K = Q - hbar Delta.  Returns (complex, monomial keys).
    """
    from .super_algebra import Element, bv_delta, monomials
    if not ctx.graded:
        raise ModelInvalid("model_complex needs a graded model")
    t = ctx.table
    qs = ctx.q_shift
    if any(g > 0 and not v.parity for g, v in zip(t.ghosts, t.variables)):
        raise ModelInvalid("even variables of positive ghost number make the cut infinite")
    top = sum(g for g, v in zip(t.ghosts, t.variables) if g > 0)
    keys = [k for k in monomials(t, max_degree + qs * top, charge=0 if ctx.charged else None)
            if t.weight_of(k) - qs * t.ghost_of(k) <= max_degree]
    keys.sort(key=lambda k: (t.ghost_of(k), t.weight_of(k), k))
    index = {k: i for i, k in enumerate(keys)}
    d = len(keys)
    Q, K1 = Mat.zero(d, d), Mat.zero(d, d)
    for j, k in enumerate(keys):
        e = Element(t, {k: Fraction(1)})
        for M, img in ((Q, ctx.Q(e)), (K1, -bv_delta(e))):
            for kk, c in img.terms.items():
                if kk not in index:
                    raise ModelInvalid("truncation is not closed under the differential")
                M.data[index[kk]][j] = c
    ghosts = [t.ghost_of(k) for k in keys]
    from .super_algebra import render_monomial
    return FiniteComplex(ghosts, Q, [K1], [render_monomial(t, k) for k in keys]), keys
