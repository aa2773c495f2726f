"""Dense univariate polynomials over a prime field, plus the scalar-sequence
toolbox: Berlekamp-Massey, numerators, squarefree parts, Laurent expansion,
CRT and power projection.

Coefficients are stored lowest degree first in a numpy array (int64 or
object depending on the field); the zero polynomial has an empty coefficient
array and degree -1.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DivisionByZero,
    InsufficientTerms,
    InvalidInput,
    NotCoprime,
    NotInvertible,
)
from .field import Field


def _trim(c: np.ndarray) -> np.ndarray:
    n = len(c)
    while n > 0 and c[n - 1] == 0:
        n -= 1
    return c[:n]


class Poly:
    __slots__ = ("field", "c")

    def __init__(self, field: Field, coeffs=()):
        self.field = field
        self.c = _trim(field.array(list(coeffs)))

    @classmethod
    def _raw(cls, field: Field, arr: np.ndarray) -> "Poly":
        p = cls.__new__(cls)
        p.field = field
        p.c = _trim(arr)
        return p

    @classmethod
    def zero(cls, field: Field) -> "Poly":
        return cls(field, ())

    @classmethod
    def one(cls, field: Field) -> "Poly":
        return cls(field, (1,))

    @classmethod
    def x(cls, field: Field) -> "Poly":
        return cls(field, (0, 1))

    @classmethod
    def constant(cls, field: Field, a) -> "Poly":
        return cls(field, (a,))

    # -- basics -------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return len(self.c) == 0

    def is_one(self) -> bool:
        return len(self.c) == 1 and self.c[0] == 1

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.field == other.field
            and len(self.c) == len(other.c)
            and bool(np.all(self.c == other.c))
        )

    def __hash__(self):
        return hash((self.field.p, tuple(int(v) for v in self.c)))

    def __repr__(self):
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            a = int(self.c[i])
            if a == 0:
                continue
            if i == 0:
                terms.append(f"{a}")
            elif i == 1:
                terms.append("T" if a == 1 else f"{a}*T")
            else:
                terms.append(f"T^{i}" if a == 1 else f"{a}*T^{i}")
        return " + ".join(terms)

    def coeff(self, i: int) -> int:
        return int(self.c[i]) if 0 <= i < len(self.c) else 0

    def lead(self) -> int:
        if self.is_zero():
            raise InvalidInput("zero polynomial has no leading coefficient")
        return int(self.c[-1])

    # -- ring ops -------------------------------------------------------

    def _addsub(self, other: "Poly", sign: int) -> "Poly":
        f = self.field
        n = max(len(self.c), len(other.c))
        out = f.zeros(n)
        out[: len(self.c)] = self.c
        out[: len(other.c)] = (out[: len(other.c)] + sign * other.c) % f.p
        return Poly._raw(f, out)

    def __add__(self, other):
        return self._addsub(other, 1)

    def __sub__(self, other):
        return self._addsub(other, -1)

    def __neg__(self):
        return Poly._raw(self.field, (-self.c) % self.field.p)

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.is_zero() or other.is_zero():
                return Poly.zero(self.field)
            return Poly._raw(self.field, self.field.convolve(self.c, other.c))
        return self.scale(other)

    def scale(self, a) -> "Poly":
        a %= self.field.p
        if a == 0:
            return Poly.zero(self.field)
        return Poly._raw(self.field, (self.c * a) % self.field.p)

    def shift(self, k: int) -> "Poly":
        """Multiply by T^k."""
        if self.is_zero() or k == 0:
            return self
        f = self.field
        out = f.zeros(len(self.c) + k)
        out[k:] = self.c
        return Poly._raw(f, out)

    def truncate(self, n: int) -> "Poly":
        """Reduce mod T^n."""
        return Poly._raw(self.field, self.c[:n].copy())

    def div_power(self, n: int) -> "Poly":
        """Quotient by T^n (drop low-order coefficients)."""
        return Poly._raw(self.field, self.c[n:].copy())

    def quo_rem(self, other: "Poly"):
        if other.is_zero():
            raise DivisionByZero("polynomial division by zero")
        f = self.field
        if self.degree < other.degree:
            return Poly.zero(f), self
        r = self.c.copy()
        d = other.degree
        inv_lc = f.inv(int(other.c[-1]))
        q = f.zeros(len(r) - d)
        for i in range(len(r) - 1, d - 1, -1):
            coef = r[i] * inv_lc % f.p
            if coef:
                q[i - d] = coef
                r[i - d : i + 1] = (r[i - d : i + 1] - coef * other.c) % f.p
        return Poly._raw(f, q), Poly._raw(f, r)

    def __floordiv__(self, other):
        return self.quo_rem(other)[0]

    def __mod__(self, other):
        return self.quo_rem(other)[1]

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        lc = int(self.c[-1])
        if lc == 1:
            return self
        return self.scale(self.field.inv(lc))

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def xgcd(self, other: "Poly"):
        """Returns (g, s, t) monic with s*self + t*other = g."""
        f = self.field
        r0, r1 = self, other
        s0, s1 = Poly.one(f), Poly.zero(f)
        t0, t1 = Poly.zero(f), Poly.one(f)
        while not r1.is_zero():
            q, r = r0.quo_rem(r1)
            r0, r1 = r1, r
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0.is_zero():
            return r0, s0, t0
        inv_lc = f.inv(r0.lead())
        return r0.scale(inv_lc), s0.scale(inv_lc), t0.scale(inv_lc)

    def modinv(self, modulus: "Poly") -> "Poly":
        g, s, _ = self.xgcd(modulus)
        if not g.is_one():
            raise NotInvertible("inputs not coprime", gcd=g)
        return s % modulus

    def modmul(self, other: "Poly", modulus: "Poly") -> "Poly":
        return (self * other) % modulus

    def modpow(self, e: int, modulus: "Poly") -> "Poly":
        result = Poly.one(self.field) % modulus
        base = self % modulus
        while e:
            if e & 1:
                result = result.modmul(base, modulus)
            base = base.modmul(base, modulus)
            e >>= 1
        return result

    def eval(self, x) -> int:
        f = self.field
        acc = 0
        for a in self.c[::-1]:
            acc = (acc * x + int(a)) % f.p
        return acc

    def derivative(self) -> "Poly":
        if self.degree < 1:
            return Poly.zero(self.field)
        f = self.field
        mult = f.array(np.arange(1, len(self.c), dtype=object))
        return Poly._raw(f, (self.c[1:] * mult) % f.p)

    def series_inv(self, prec: int) -> "Poly":
        """Inverse mod T^prec; needs nonzero constant term."""
        if self.is_zero() or self.c[0] == 0:
            raise InvalidInput("series inverse needs a unit constant term")
        f = self.field
        inv0 = f.inv(int(self.c[0]))
        x = Poly.constant(f, inv0)
        k = 1
        while k < prec:
            k = min(2 * k, prec)
            # Newton: x <- x(2 - a x) mod T^k
            ax = (self.truncate(k) * x).truncate(k)
            two_minus = Poly.constant(f, 2) - ax
            x = (x * two_minus).truncate(k)
        return x.truncate(prec)

    def compose_linear(self, a) -> "Poly":
        """Returns self(T + a)."""
        f = self.field
        a %= f.p
        if a == 0 or self.is_zero():
            return self
        out = Poly.zero(f)
        lin = Poly(f, (a, 1))
        for coef in self.c[::-1]:
            out = out * lin + Poly.constant(f, int(coef))
        return out


def poly_arith(a: Poly, b, op: str):
    """Dispatch helper matching the module contract (mostly for tests)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "quo_rem":
        return a.quo_rem(b)
    if op == "gcd":
        return a.gcd(b)
    if op == "modinv":
        return a.modinv(b)
    if op == "eval":
        return a.eval(b)
    if op == "derivative":
        return a.derivative()
    raise InvalidInput(f"unknown op {op!r}")


# -- sequences ----------------------------------------------------------


def berlekamp_massey(seq, field: Field, bound: int) -> Poly:
    """Monic minimal polynomial of a linearly recurrent prefix.

    The returned polynomial is the minimal generator of the supplied finite
    prefix.  It equals the minimal polynomial of the infinite sequence only
    when at least 2*bound terms are supplied with bound a proven degree
    bound; every caller in this package relies on such a bound.
    """
    p = field.p
    terms = [int(x) % p for x in seq]
    if len(terms) < 2 * bound:
        raise InsufficientTerms(f"need {2 * bound} terms, got {len(terms)}")
    # C is the current connection polynomial, B the previous one.
    C = [1]
    B = [1]
    L, m, b = 0, 1, 1
    for n, tn in enumerate(terms):
        d = tn
        for i in range(1, L + 1):
            d = (d + C[i] * terms[n - i]) % p
        if d == 0:
            m += 1
        elif 2 * L <= n:
            T = C[:]
            coef = d * pow(b, p - 2, p) % p
            C = C + [0] * (len(B) + m - len(C))
            for i, bi in enumerate(B):
                C[i + m] = (C[i + m] - coef * bi) % p
            L = n + 1 - L
            B = T
            b = d
            m = 1
        else:
            coef = d * pow(b, p - 2, p) % p
            C = C + [0] * max(0, len(B) + m - len(C))
            for i, bi in enumerate(B):
                C[i + m] = (C[i + m] - coef * bi) % p
            m += 1
    # C(T) = 1 + c_1 T + ... encodes P(T) = T^L + c_1 T^{L-1} + ...
    rev = [0] * (L + 1)
    for i in range(min(len(C), L + 1)):
        rev[L - i] = C[i] % p
    return Poly(field, rev).monic()


def scalar_numerator_direct(seq, field: Field, P: Poly) -> Poly:
    """Numerator of a cancelled scalar sequence with respect to P.

    Computed as (P * sum_{s<d} l_{d-1-s} T^s) div T^d with d = deg(P); this
    is the brute-force oracle against which the block route is checked.
    """
    d = P.degree
    terms = [int(x) % field.p for x in seq]
    if len(terms) < d:
        raise InsufficientTerms(f"need {d} terms, got {len(terms)}")
    if d == 0:
        return Poly.zero(field)
    rev = Poly(field, terms[:d][::-1])
    return (P * rev).div_power(d)


def laurent_expand(A: Poly, F: Poly, k: int) -> list:
    """First k coefficients v_s of A/F = sum_s v_s / T^(s+1)."""
    if F.is_zero():
        raise InvalidInput("zero denominator")
    if not A.is_zero() and A.degree >= F.degree:
        raise InvalidInput("numerator degree must be below denominator degree")
    f = A.field
    r = F.degree
    inv_lc = f.inv(F.lead())
    v = []
    for s in range(k):
        if s < r:
            # coefficient of T^(r-1-s) in A equals sum_{j<=s} F_{r-s+j} v_j
            acc = A.coeff(r - 1 - s)
            for j in range(s):
                acc -= F.coeff(r - s + j) * v[j]
            v.append(acc * inv_lc % f.p)
        else:
            acc = 0
            for i in range(r):
                acc -= F.coeff(i) * v[s - r + i]
            v.append(acc * inv_lc % f.p)
    return v


def crt_pair(a1: Poly, q1: Poly, a2: Poly, q2: Poly) -> Poly:
    """Unique r mod q1*q2 with r = a1 mod q1 and r = a2 mod q2."""
    g, s, _ = q1.xgcd(q2)
    if not g.is_one():
        raise NotCoprime("moduli share a common factor")
    # r = a1 + q1 * ((a2 - a1) * inv(q1) mod q2)
    diff = (a2 - a1) % q2
    lift = (diff * (s % q2)) % q2
    return (a1 + q1 * lift) % (q1 * q2)


def squarefree_part(P: Poly) -> Poly:
    if P.is_zero():
        raise InvalidInput("squarefree part of zero")
    if P.degree == 0:
        return Poly.one(P.field)
    g = P.gcd(P.derivative())
    return (P // g).monic()


# -- power projection ---------------------------------------------------


def transposed_modmul(G: Poly, ell, F: Poly):
    """Values of f -> ell(G*f mod F) on the basis 1, T, ..., T^(deg F - 1).

    Uses the extended projection values ell(T^s mod F) for s < 2r-1: the new
    vector is a windowed dot product of G against that sequence.
    """
    f = F.field
    r = F.degree
    ell = [int(x) % f.p for x in ell]
    if len(ell) != r:
        raise InvalidInput("linear form must have deg(F) values")
    g = G.c
    if len(g) == 0:
        return [0] * r
    inv_lc = f.inv(F.lead())
    Fc = f.array(F.c[:r])
    ext = f.zeros(2 * r - 1)
    ext[:r] = f.array(ell)
    for s in range(r, 2 * r - 1):
        acc = int(f.matmul(Fc, ext[s - r : s]))
        ext[s] = (-acc * inv_lc) % f.p
    windows = np.lib.stride_tricks.sliding_window_view(ext, len(g))[:r]
    return [int(x) for x in f.matmul(windows, g)]


def _power_projection_bsgs(F: Poly, H: Poly, ell, t: int):
    f = F.field
    r = F.degree
    H = H % F
    k = max(1, math.isqrt(t - 1) + 1)
    nb = min(k, t)
    baby = f.zeros((nb, r))
    cur_pow = Poly.one(f) % F
    for j in range(nb):
        if j:
            cur_pow = cur_pow.modmul(H, F)
        if len(cur_pow.c):
            baby[j, : len(cur_pow.c)] = cur_pow.c
    G = H.modpow(k, F) if t > k else None
    out = []
    cur = [int(x) % f.p for x in ell]
    s = 0
    while s < t:
        block = f.matmul(baby, f.array(cur))
        out.extend(int(x) for x in block[: min(k, t - s)])
        s += k
        if s < t:
            cur = transposed_modmul(G, cur, F)
    return out


def power_projection_naive(F: Poly, H: Poly, ell, t: int):
    """Oracle: explicit modular powers of H, then dot products."""
    f = F.field
    ell = [int(x) % f.p for x in ell]
    out = []
    cur = Poly.one(f) % F
    Hm = H % F
    for _ in range(t):
        acc = 0
        for i, a in enumerate(cur.c):
            acc += int(a) * ell[i]
        out.append(acc % f.p)
        cur = cur.modmul(Hm, F)
    return out


def power_projection(F: Poly, H: Poly, ell, t: int):
    """Compute ell(H^s mod F) for s = 0, ..., t-1.

    Baby-step/giant-step with transposed modular multiplication while
    s < deg F; beyond that the sequence is linearly recurrent with generator
    of degree <= deg F, so the remaining values are unrolled from the
    recurrence found by Berlekamp-Massey.
    """
    if t < 0:
        raise InvalidInput("negative length")
    if t == 0:
        return []
    f = F.field
    r = F.degree
    if r <= 0:
        return [0] * t
    if t <= 2 * r:
        return _power_projection_bsgs(F, H, ell, t)
    head = _power_projection_bsgs(F, H, ell, 2 * r)
    P = berlekamp_massey(head, f, r)
    d = P.degree
    out = list(head)
    if d == 0:
        return out + [0] * (t - len(out))
    inv_lc = f.inv(P.lead())
    while len(out) < t:
        s = len(out) - d
        acc = 0
        for i in range(d):
            acc -= P.coeff(i) * out[s + i]
        out.append(acc * inv_lc % f.p)
    return out


def rational_reconstruct(series: Poly, prec: int, dnum: int, dden: int):
    """Find (n, d) with n/d = series mod T^prec, deg n <= dnum, deg d <= dden.

    Requires dnum + dden < prec for uniqueness.  Returns None on failure.
    """
    f = series.field
    if dnum + dden >= prec:
        raise InvalidInput("precision too low for requested degrees")
    mod = Poly._raw(f, f.zeros(prec + 1))
    mod.c = f.zeros(prec + 1)
    mod.c[prec] = 1
    mod = Poly._raw(f, mod.c)
    r0, r1 = mod, series.truncate(prec)
    t0, t1 = Poly.zero(f), Poly.one(f)
    while not r1.is_zero() and r1.degree > dnum:
        q, r = r0.quo_rem(r1)
        r0, r1 = r1, r
        t0, t1 = t1, t0 - q * t1
    if t1.is_zero() or t1.degree > dden:
        return None
    if t1.coeff(0) == 0:
        return None
    num, den = r1, t1
    # normalize denominator monic
    inv_lc = f.inv(den.lead())
    num, den = num.scale(inv_lc), den.scale(inv_lc)
    # consistency: den * series = num mod T^prec
    if not ((den * series).truncate(prec) - num.truncate(prec)).is_zero():
        return None
    return num, den
