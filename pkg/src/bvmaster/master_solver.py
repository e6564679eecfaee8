"""Order-by-order solution of the quantum master equation.

State at order n holds Theta_1..Theta_n (t-series layers with Element
coefficients), the structure tensors m_2..m_n and the homotopies
Lambda_2..Lambda_n.  Each extension step builds the obstruction M_n from lower
orders, splits its classical limit as m_n Theta_1 + Q Lambda_n, and divides the
remainder by hbar.  Every relation that must hold along the way is checked by
exact arithmetic and recorded in the verification log.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import HbarDivisionFails, InternalIdentityViolation, ModelInvalid, QuantumExtensionFails
from .super_algebra import bv_bracket, bv_delta, render
from .tseries import TSeries, apply_derivation, multi_indices, multiplicity_factor, sort_index


@dataclass
class Check:
    identity: str
    order: int
    passed: bool
    detail: str = ""

    def to_json(self):
        return {"identity": self.identity, "order": self.order, "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationLog:
    checks: list = field(default_factory=list)
    strict: bool = True

    def record(self, identity, order, passed, detail=""):
        self.checks.append(Check(identity, order, bool(passed), "" if passed else detail))
        if not passed and self.strict:
            raise InternalIdentityViolation(identity, f"order {order}: {detail}")

    def all_passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def extend(self, other):
        for c in other.checks:
            self.checks.append(c)


class StructureTensor:
    """m_n stored as the derivation images m_n^*(t^gamma), polynomials of word length n."""

    def __init__(self, arity, dim, images):
        self.arity = arity
        self.dim = dim
        self.images = images        # gamma -> TSeries with Fraction coefficients

    def component(self, indices):
        mu = sort_index(indices)
        f = multiplicity_factor(mu)
        return tuple(self.images[g].coeffs.get(mu, Fraction(0)) * f for g in range(self.dim))

    def components(self):
        """Nonzero components in sorted multi-index order."""
        out = []
        for mu in multi_indices(self.dim, self.arity):
            v = self.component(mu)
            if any(v):
                out.append((mu, v))
        return out

    def is_zero(self):
        return all(not img for img in self.images.values())

    def apply(self, F):
        return apply_derivation(self.images, F)

    def __eq__(self, other):
        return isinstance(other, StructureTensor) and self.arity == other.arity and self.images == other.images


class MasterState:
    def __init__(self, ctx, truncation):
        self.ctx = ctx
        self.N = truncation
        self.order = 0
        self.theta = {}
        self.m = {}
        self.lam = {}
        self.obstruction = {}
        self.log = VerificationLog()
        self.dim = len(ctx.basis)
        self.threads = 1
        self.lambda_hook = None

    def theta_series(self, upto=None):
        out = TSeries()
        for n in range(1, (upto or self.order) + 1):
            out = out + self.theta[n]
        return out

    def lambda_series(self):
        out = TSeries()
        for n in range(2, self.order + 1):
            out = out + self.lam[n]
        return out


def _tmap(F, f):
    return F.map(f)


def _bracket_series(A, B):
    return A.bilinear(B, bv_bracket)


def init(ctx, truncation=4, theta1=None):
    """Order-1 state Theta_1 = sum t^a O_a."""
    if truncation < 1:
        raise ModelInvalid("truncation order must be at least 1")
    basis = ctx.basis
    if basis.elements[0] != ctx.table.one():
        raise ModelInvalid("first H basis element must be the unit")
    if any(g % 2 for g in basis.ghosts):
        raise ModelInvalid("couplings of odd degree are not supported")
    state = MasterState(ctx, truncation)
    if theta1 is None:
        for o in basis.elements:
            if bv_delta(o):
                raise QuantumExtensionFails(f"Delta({render(o)}) != 0; supply a corrected Theta_1")
        theta1 = TSeries({(a,): o for a, o in enumerate(basis.elements)})
    state.theta[1] = theta1
    state.order = 1
    log = state.log
    k1 = _tmap(theta1, ctx.K)
    log.record("K Theta_1 = 0", 1, not k1, str(k1))
    d0 = theta1.deriv(0)
    log.record("d0 Theta_1 = 1", 1, d0 == TSeries({(): ctx.table.one()}), str(d0))
    return state


def build_obstruction(state, n):
    """The element M_n assembled from Theta_1..Theta_{n-1}, m_2..m_{n-1}, Lambda_2..Lambda_{n-1}."""
    if state.order != n - 1 or n < 2:
        raise ModelInvalid(f"state is at order {state.order}; cannot build M_{n}")
    th, lam, m = state.theta, state.lam, state.m
    total = TSeries()
    for k in range(1, n):
        total = total + (th[k] * th[n - k]).scale(Fraction(k * (n - k)))
    for k in range(2, n):
        total = total - m[n - k + 1].apply(th[k]).scale(Fraction((n - k + 1) * (n - k)))
    for k in range(2, n):
        total = total - _bracket_series(th[n - k], lam[k]).scale(Fraction(k * (k - 1)))
    M = total.scale(Fraction(1, n * (n - 1)))
    ctx = state.ctx
    lhs = _tmap(M, ctx.K)
    rhs = TSeries()
    for k in range(1, n):
        rhs = rhs + _bracket_series(th[k], th[n - k])
    rhs = rhs.map(lambda e: e.mul_hbar(1).scale(Fraction(-1, 2)))
    state.log.record("K M_n = -hbar/2 sum (Theta_k, Theta_{n-k})", n, lhs == rhs, _first_diff(lhs, rhs))
    d0 = M.deriv(0)
    if n == 2:
        # at n = 2 there is no m_2 term to cancel d0(Theta_1 Theta_1 / 2) = Theta_1
        state.log.record("d0 M_2 = Theta_1", n, d0 == th[1], str(d0))
    else:
        state.log.record("d0 M_n = 0", n, not d0, str(d0))
    return M


def _first_diff(a, b):
    diff = a - b
    if not diff:
        return ""
    mu, v = diff.items()[0]
    return f"t-monomial {mu}: {render(v) if hasattr(v, 'terms') else v}"


def extend(state, M=None):
    """Advance the state by one order."""
    n = state.order + 1
    if n > state.N:
        raise ModelInvalid(f"truncation order {state.N} reached")
    if M is None:
        M = build_obstruction(state, n)
    ctx = state.ctx
    classical = {mu: e.classical() for mu, e in M.coeffs.items()}
    keys = sorted(k for k, v in classical.items() if v)

    def work(mu):
        try:
            return ctx.decompose(classical[mu], 0)
        except InternalIdentityViolation as err:
            raise InternalIdentityViolation(err.identity, f"t-monomial {mu}: {err.detail}") from err

    if state.threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(state.threads) as ex:
            decs = list(ex.map(work, keys))
    else:
        decs = [work(mu) for mu in keys]
    images = {g: {} for g in range(state.dim)}
    lam = {}
    for mu, dec in zip(keys, decs):
        for g, c in enumerate(dec.coefficients):
            if c:
                images[g][mu] = c
        if dec.homotopy:
            lam[mu] = dec.homotopy
    if state.lambda_hook is not None:
        # a gauge hook may move every Lambda, including the vanishing ones
        for mu in multi_indices(state.dim, n):
            h = state.lambda_hook(n, mu, lam.get(mu, ctx.table.zero()))
            if h:
                lam[mu] = h
            else:
                lam.pop(mu, None)
    m_n = StructureTensor(n, state.dim, {g: TSeries(v) for g, v in images.items()})
    lam_n = TSeries(lam)
    d0l = lam_n.deriv(0)
    state.log.record("d0 Lambda_n = 0", n, not d0l, _first_diff(d0l, TSeries()))
    m_theta = m_n.apply(state.theta[1])
    rest = M - m_theta - _tmap(lam_n, ctx.K)
    theta_n = {}
    for mu, e in rest.coeffs.items():
        try:
            theta_n[mu] = e.div_hbar(1)
        except HbarDivisionFails as err:
            state.log.record("hbar-divisibility", n, False, f"t-monomial {mu}: {err.detail}")
            raise
    state.log.record("hbar-divisibility", n, True)
    theta_n = TSeries(theta_n)
    state.theta[n] = theta_n
    state.m[n] = m_n
    state.lam[n] = lam_n
    state.obstruction[n] = M
    state.order = n
    _check_layer(state, n)
    return state


def _check_layer(state, n):
    ctx = state.ctx
    th = state.theta
    log = state.log
    d0 = th[n].deriv(0)
    log.record("d0 Theta_n = 0", n, not d0, str(d0))
    lhs = _tmap(th[n], ctx.K)
    half = TSeries()
    for k in range(1, n):
        half = half + _bracket_series(th[k], th[n - k])
    total = lhs + half.scale(Fraction(1, 2))
    log.record("K Theta_n + 1/2 sum (Theta_k, Theta_{n-k}) = 0", n, not total, _first_diff(total, TSeries()))
    ok, detail = unit_axioms(state.m[n])
    log.record("unit axioms", n, ok, detail)


def unit_axioms(m):
    dim = m.dim
    if m.arity == 2:
        for b in range(dim):
            v = m.component((0, b))
            want = tuple(Fraction(int(g == b)) for g in range(dim))
            if v != want:
                return False, f"m_(0,{b}) = {v}"
        return True, ""
    for mu in multi_indices(dim, m.arity - 1):
        v = m.component((0,) + mu)
        if any(v):
            return False, f"m_{(0,) + mu} = {v}"
    return True, ""


def random_gauge(ctx, rng):
    """A lambda_hook adding a random Q-exact element of the right ghost and weight."""
    def hook(n, mu, lam):
        if 0 in mu:
            return lam      # Lambda must stay independent of t^0
        w = ctx.multi_index_weight(mu) - ctx.q_shift if ctx.graded else None
        return lam + ctx.random_closed(lam, rng, ghost=-1, weight=w)
    return hook


def solve(ctx, N=4, threads=1, lambda_hook=None, theta1=None):
    state = init(ctx, N, theta1)
    state.threads = threads
    state.lambda_hook = lambda_hook
    while state.order < N:
        extend(state)
    check_descendant(state)
    return state


def check_descendant(state):
    """Full-series checks mod t^{N+1}: quantum identity, quantum and classical descendant equations."""
    ctx = state.ctx
    N = state.order
    theta = state.theta_series()
    d0 = theta.deriv(0)
    state.log.record("d0 Theta = 1", N, d0 == TSeries({(): ctx.table.one()}), str(d0))
    qde = (_tmap(theta, ctx.K) + _bracket_series(theta, theta).scale(Fraction(1, 2))).truncate(N)
    state.log.record("K Theta + 1/2 (Theta, Theta) = 0 mod t^(N+1)", N, not qde, _first_diff(qde, TSeries()))
    bar = theta.map(lambda e: e.classical())
    cde = (_tmap(bar, ctx.Q) + _bracket_series(bar, bar).scale(Fraction(1, 2))).truncate(N)
    state.log.record("Q Theta0 + 1/2 (Theta0, Theta0) = 0 mod t^(N+1)", N, not cde, _first_diff(cde, TSeries()))


def verify_semiclassical(state, strict=False):
    """Check Delta Theta_1 = 0 and Theta_n = Delta Lambda_n; returns a VerificationLog."""
    log = VerificationLog(strict=strict)
    d1 = _tmap(state.theta[1], bv_delta)
    log.record("Delta Theta_1 = 0", 1, not d1, str(d1))
    for n in range(2, state.order + 1):
        diff = state.theta[n] - _tmap(state.lam[n], bv_delta)
        log.record("Theta_n = Delta Lambda_n", n, not diff, _first_diff(diff, TSeries()))
    return log


def extract_descendant_morphism(state, indices):
    """Symmetric component of Theta_k at the multi-index (an Element, possibly with hbar)."""
    k = len(indices)
    if k > state.order or k < 1:
        raise ModelInvalid(f"component of arity {k} not available at order {state.order}")
    v = state.theta[k].component(indices)
    return v if v is not None else state.ctx.table.zero()


def jacobian_table(ctx):
    """m_2 computed independently: normal forms of pairwise products of basis elements."""
    dim = len(ctx.basis)
    out = {}
    for a in range(dim):
        for b in range(a, dim):
            dec = ctx.decompose(ctx.basis.elements[a] * ctx.basis.elements[b], 0)
            out[(a, b)] = tuple(dec.coefficients)
    return out
