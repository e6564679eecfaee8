"""Quantum correlators, the p-tower, expectation values and quantum coordinates.

Everything here is computed from a solved MasterState.  Expectation values
enter only through <O_gamma>, so <Omega_n> is obtained by applying p_n to
<Theta_1> = t^gamma <O_gamma>.  The partition formula gives an independent
route to the same numbers and is used as an oracle.
"""

from fractions import Fraction
from itertools import combinations

from .errors import InternalIdentityViolation, ModelInvalid, OracleMismatch
from .laurent import Laurent
from .super_algebra import render
from .tseries import TSeries, apply_derivation, multi_indices, multiplicity_factor, sort_index


def _minus_hbar(e, k):
    """(-hbar)^k * e for an Element e."""
    return e.mul_hbar(k).scale(Fraction((-1) ** k)) if k else e


def _cache(state):
    c = getattr(state, "_corr_cache", None)
    if c is None:
        c = {"omega": {}, "p": {}}
        state._corr_cache = c
    return c


# Omega -------------------------------------------------------------------

def omega(state, n):
    """Layer Omega_n of exp(-Theta/hbar) rescaled to be hbar-polynomial."""
    if n < 1 or n > state.order:
        raise ModelInvalid(f"Omega_{n} needs the state at order >= {n}")
    cache = _cache(state)["omega"]
    if n in cache:
        return cache[n]
    th = state.theta
    if n == 1:
        out = th[1]
    else:
        acc = th[n].map(lambda e: _minus_hbar(e, n - 1))
        for j in range(1, n):
            prod = (th[j] * omega(state, n - j)).map(lambda e, j=j: _minus_hbar(e, j - 1))
            acc = acc + prod.scale(Fraction(j, n))
        out = acc
    ctx = state.ctx
    log = state.log
    k = out.map(ctx.K)
    log.record("K Omega_n = 0", n, not k, "")
    d0 = out.deriv(0)
    if n == 1:
        want = TSeries({(): ctx.table.one()})
        log.record("d0 Omega_1 = 1", 1, d0 == want, str(d0))
    else:
        log.record("d0 Omega_n = Omega_{n-1}", n, d0 == omega(state, n - 1), str(d0))
    cache[n] = out
    return out


# p-tower -----------------------------------------------------------------

def _apply_m(state, k, F):
    """m_k applied as a derivation to a TSeries F with Laurent coefficients."""
    m = state.m[k]
    images = {g: img.map(Laurent) for g, img in m.images.items()}
    return apply_derivation(images, F)


def p_image(state, n, gamma):
    """p_n(t^gamma): TSeries of word length n with coefficients in Q[hbar]."""
    if n < 1 or n > state.order:
        raise ModelInvalid(f"p_{n} needs the state at order >= {n}")
    cache = _cache(state)["p"]
    key = (n, gamma)
    if key in cache:
        return cache[key]
    if n == 1:
        out = TSeries({(gamma,): Laurent(1)})
    else:
        lead = state.m[n].images[gamma].map(Laurent)
        out = lead.map(lambda c: c * Laurent({n - 2: (-1) ** (n - 2)}))
        for k in range(2, n):
            inner = p_image(state, n + 1 - k, gamma)
            term = _apply_m(state, k, inner)
            w = Laurent({k - 2: Fraction((-1) ** (k - 2) * k * (k - 1), n * (n - 1))})
            out = out + term.map(lambda c, w=w: c * w)
    cache[key] = out
    return out


class PTensor:
    """p_n as components p_{alpha_1..alpha_n}^gamma in Q[hbar]."""

    def __init__(self, state, n):
        self.arity = n
        self.dim = state.dim
        self.images = {g: p_image(state, n, g) for g in range(state.dim)}

    def component(self, indices):
        mu = sort_index(indices)
        f = multiplicity_factor(mu)
        return tuple(self.images[g].coeffs.get(mu, Laurent()) * f for g in range(self.dim))


def p_sharp(state, n):
    """p_n with the d0-compatibility p_{0 alpha} = p_alpha checked."""
    P = PTensor(state, n)
    if n >= 2:
        for g in range(state.dim):
            d0 = P.images[g].deriv(0)
            want = p_image(state, n - 1, g)
            state.log.record("d0 p_n = p_{n-1}", n, d0 == want, f"gamma {g}")
    return P


# symbolic words in the m's ----------------------------------------------

def p_words(n):
    """p_n as a combination of compositions of m's.

    Returns {(word, hbar power): coefficient}; the word (2, 3) stands for
    m_2 applied after m_3.
    """
    if n == 2:
        return {((2,), 0): Fraction(1)}
    out = {((n,), n - 2): Fraction((-1) ** (n - 2))}
    for k in range(2, n):
        c = Fraction((-1) ** (k - 2) * k * (k - 1), n * (n - 1))
        for (word, h), v in p_words(n + 1 - k).items():
            key = ((k,) + word, h + k - 2)
            out[key] = out.get(key, 0) + c * v
    return {k: v for k, v in out.items() if v}


def evaluate_words(state, words, gamma):
    """Apply a word combination to t^gamma on the actual structure tensors."""
    out = TSeries()
    for (word, h), c in words.items():
        F = TSeries({(gamma,): Laurent(1)})
        for k in reversed(word):
            F = _apply_m(state, k, F)
        out = out + F.map(lambda v, h=h, c=c: v * Laurent({h: c}))
    return out


# expectation values -----------------------------------------------------

def expectation_vector(ctx, values=None):
    """<O_gamma> as Laurent polynomials; defaults to the model's functional."""
    if values is None:
        values = ctx.spec.expectation
    if values is None:
        return [Laurent(v) for v in ctx.default_expectation()]
    dim = len(ctx.basis)
    vec = [Laurent() for _ in range(dim)]
    items = values.items() if isinstance(values, dict) else enumerate(values)
    for g, v in items:
        g = int(g)
        if not 0 <= g < dim:
            raise ModelInvalid(f"expectation index {g} out of range")
        if isinstance(v, Laurent):
            vec[g] = v
        elif isinstance(v, dict):
            vec[g] = Laurent({int(k): Fraction(c) for k, c in v.items()})
        else:
            vec[g] = Laurent(Fraction(v))
    return vec


def expectation(state, vec, n):
    """<Omega_n> = p_n <Theta_1>, as a TSeries layer with Laurent coefficients."""
    out = TSeries()
    for g, val in enumerate(vec):
        if val:
            out = out + p_image(state, n, g).map(lambda c, val=val: c * val)
    return out


def correlator_table(state, vec, arity):
    """{n: {multi-index: <pi_alpha>}} for n <= arity, nonzero entries only."""
    arity = min(arity, state.order)
    table = {}
    for n in range(1, arity + 1):
        layer = expectation(state, vec, n)
        row = {}
        for mu, c in layer.items():
            row[mu] = c * multiplicity_factor(mu)
        table[n] = row
    return table


def z_coefficient(n, value):
    """The n-th derivative of Z at t = 0 from <pi>: (-hbar)^(-n) <pi>."""
    return value * Laurent({-n: (-1) ** n})


def quantum_coordinates(state, vec):
    """T^gamma(t) and Z(t) to the solved order; d0 T identity is checked."""
    N = state.order
    T = {}
    for g in range(state.dim):
        s = TSeries({(g,): Laurent(1)})
        for n in range(2, N + 1):
            s = s + p_image(state, n, g).map(lambda c, n=n: c * Laurent({-(n - 1): (-1) ** (n - 1)}))
        T[g] = s
    for g in range(state.dim):
        d0 = T[g].deriv(0).truncate(N - 1)
        want = (TSeries({(): Laurent(1)}) if g == 0 else TSeries()) - T[g].truncate(N - 1).map(
            lambda c: c * Laurent({-1: 1}))
        state.log.record("d0 T^gamma = delta_0^gamma - T^gamma/hbar", N, d0 == want, f"gamma {g}")
    Z = TSeries({(): vec[0]})
    for g, val in enumerate(vec):
        if val:
            Z = Z - T[g].map(lambda c, val=val: c * val * Laurent({-1: 1}))
    direct = TSeries({(): vec[0]})
    for n in range(1, N + 1):
        direct = direct + expectation(state, vec, n).map(lambda c, n=n: z_coefficient(n, c))
    state.log.record("Z = sum (-hbar)^(-n) <Omega_n>", N, Z == direct, "")
    return T, Z


# partition oracle -------------------------------------------------------

def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest) + 1):
        for others in combinations(rest, k):
            block = (first,) + others
            remaining = [x for x in rest if x not in others]
            for p in set_partitions(remaining):
                yield [block] + p


def pi_element(state, indices):
    """pi_n(a_1..a_n) = sum over set partitions of (-hbar)^(n-|P|) prod phi_|B|(B)."""
    n = len(indices)
    if n > state.order:
        raise ModelInvalid(f"pi_{n} needs the state at order >= {n}")
    t = state.ctx.table
    total = t.zero()
    for part in set_partitions(range(n)):
        prod = t.one()
        for block in part:
            phi = state.theta[len(block)].component([indices[i] for i in block])
            if phi is None:
                prod = None
                break
            prod = prod * phi
        if prod is None or not prod:
            continue
        total = total + _minus_hbar(prod, n - len(part))
    return total


def reduce_closed(ctx, e, max_steps=200):
    """Write a K-closed element as sum a_gamma(hbar) O_gamma + K(...); returns the a's.

    The hbar^0 part is Q-closed and splits as m O + Q lam.  Subtracting
    m O + K lam leaves an element divisible by hbar, which is again K-closed.
    """
    dim = len(ctx.basis)
    out = [Laurent() for _ in range(dim)]
    shift = 0
    for _ in range(max_steps):
        if not e:
            return out
        e0 = e.classical()
        if e0:
            dec = ctx.decompose(e0, 0)
            for g, c in enumerate(dec.coefficients):
                if c:
                    out[g] = out[g] + Laurent({shift: c})
            e = e - ctx.combine(dec.coefficients) - ctx.K(dec.homotopy)
        e = e.div_hbar(1)
        shift += 1
    raise InternalIdentityViolation("K-reduction terminates", f"no convergence after {max_steps} steps")


def partition_oracle(state, indices, vec):
    """Returns (pi element, its H[hbar] vector, its expectation value)."""
    ctx = state.ctx
    pi = pi_element(state, indices)
    kp = ctx.K(pi)
    state.log.record("K pi_n = 0", len(indices), not kp, render(kp) if kp else "")
    coeffs = reduce_closed(ctx, pi)
    value = Laurent()
    for a, v in zip(coeffs, vec):
        value = value + a * v
    return pi, coeffs, value


def cross_check(state, vec, arity):
    """Compare partition and p-tower routes for every multi-index up to ``arity``."""
    arity = min(arity, state.order)
    checked = 0
    for n in range(1, arity + 1):
        P = PTensor(state, n)
        for mu in multi_indices(state.dim, n):
            _, coeffs, value = partition_oracle(state, mu, vec)
            want = P.component(mu)
            if tuple(coeffs) != want:
                raise OracleMismatch(f"pi{mu}: partition route {coeffs} != p-tower {want}")
            pval = Laurent()
            for a, v in zip(want, vec):
                pval = pval + a * v
            if value != pval:
                raise OracleMismatch(f"<pi{mu}>: {value} != {pval}")
            checked += 1
    state.log.record("partition route = p-tower route", arity, True)
    return checked
