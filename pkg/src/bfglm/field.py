"""Prime field arithmetic and seeded randomness.

Elements of Z/pZ are plain Python ints in [0, p); matrices and vectors are
numpy arrays of such ints.  A :class:`Field` carries the modulus and decides,
once, whether int64 arithmetic is safe or whether object-dtype (exact Python
int) arrays must be used.  Primes are limited to < 2**62 so that a single
product always fits in a double word.
"""

from __future__ import annotations

import numpy as np

from .errors import DivisionByZero, InvalidInput

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_INT64_MAX = 2**63 - 1


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Field:
    """The prime field Z/pZ."""

    __slots__ = ("p", "dtype", "_acc_limit")

    def __init__(self, p: int):
        if not isinstance(p, int) or p >= 2**62 or not is_prime(p):
            raise InvalidInput(f"modulus must be a prime < 2**62, got {p!r}")
        self.p = p
        # How many products of reduced elements can be summed in an int64.
        self._acc_limit = _INT64_MAX // max((p - 1) * (p - 1), 1)
        self.dtype = np.int64 if self._acc_limit >= 1 else object

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return f"Field({self.p})"

    # -- scalar ops -------------------------------------------------------

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise DivisionByZero("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def div(self, a, b):
        return a * self.inv(b) % self.p

    def arith(self, a, b, op: str):
        """Dispatch helper matching the {add,sub,mul,div,inv,neg} contract."""
        if op == "add":
            return self.add(a, b)
        if op == "sub":
            return self.sub(a, b)
        if op == "mul":
            return self.mul(a, b)
        if op == "div":
            return self.div(a, b)
        if op == "inv":
            return self.inv(a)
        if op == "neg":
            return self.neg(a)
        raise InvalidInput(f"unknown op {op!r}")

    # -- array helpers ----------------------------------------------------

    def array(self, data) -> np.ndarray:
        a = np.asarray(data, dtype=object) % self.p
        if self.dtype is np.int64:
            return a.astype(np.int64)
        return a

    def zeros(self, shape) -> np.ndarray:
        if self.dtype is np.int64:
            return np.zeros(shape, dtype=np.int64)
        z = np.empty(shape, dtype=object)
        z[...] = 0
        return z

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Exact A @ B mod p, chunking the inner dimension against overflow."""
        if self.dtype is object:
            return np.dot(A.astype(object), B.astype(object)) % self.p
        k = A.shape[-1]
        lim = self._acc_limit
        if k <= lim:
            return np.dot(A, B) % self.p
        acc = np.zeros(np.dot(A[..., :1], B[:1]).shape, dtype=np.int64)
        for lo in range(0, k, lim):
            hi = min(lo + lim, k)
            acc = (acc + np.dot(A[..., lo:hi], B[lo:hi])) % self.p
        return acc

    def convolve(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact polynomial-coefficient convolution mod p."""
        if len(a) == 0 or len(b) == 0:
            return self.zeros(0)
        if self.dtype is object:
            out = self.zeros(len(a) + len(b) - 1)
            for i, ai in enumerate(a):
                if ai:
                    out[i : i + len(b)] = (out[i : i + len(b)] + ai * b) % self.p
            return out
        lim = self._acc_limit
        if min(len(a), len(b)) <= lim:
            return np.convolve(a, b) % self.p
        # chunk the shorter operand
        if len(b) > len(a):
            a, b = b, a
        out = np.zeros(len(a) + len(b) - 1, dtype=np.int64)
        for lo in range(0, len(b), lim):
            hi = min(lo + lim, len(b))
            seg = np.convolve(a, b[lo:hi]) % self.p
            out[lo : lo + len(seg)] = (out[lo : lo + len(seg)] + seg) % self.p
        return out


# Named constants used throughout the tests and examples.
P_SMALL = 101
P_DEFAULT = 65537


class Rng:
    """Deterministic seeded randomness; one handle per solve, no globals.

    Child streams for parallel or logically independent phases are derived
    from the seed, so results never depend on call interleaving across
    children.
    """

    __slots__ = ("seed", "_gen", "_children")

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.default_rng(self.seed)
        self._children = 0

    def child(self) -> "Rng":
        self._children += 1
        # splitmix-style derivation keeps children independent of the
        # parent's consumption position.
        z = (self.seed + 0x9E3779B97F4A7C15 * self._children) & 0xFFFFFFFFFFFFFFFF
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & 0xFFFFFFFFFFFFFFFF
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & 0xFFFFFFFFFFFFFFFF
        return Rng(z ^ (z >> 31))

    def element(self, field: Field) -> int:
        return int(self._gen.integers(0, field.p))

    def nonzero_element(self, field: Field) -> int:
        return 1 + int(self._gen.integers(0, field.p - 1))

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def block(self, field: Field, rows: int, cols: int) -> np.ndarray:
        if rows < 1 or cols < 1:
            raise InvalidInput("block dimensions must be >= 1")
        a = self._gen.integers(0, field.p, size=(rows, cols), dtype=np.int64)
        return a if field.dtype is np.int64 else a.astype(object)

    def vector(self, field: Field, n: int) -> np.ndarray:
        return self.block(field, n, 1)[:, 0]

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def sample_block(rng: Rng, field: Field, rows: int, cols: int) -> np.ndarray:
    """Uniform dense block, used for U, V, t, y and random right-hand sides."""
    return rng.block(field, rows, cols)
