"""Negacyclic polynomial arithmetic in Z_p[X]/(X^N + 1).

Coefficients are stored as ``uint64`` numpy arrays. Modular products use a
floating-point quotient estimate followed by an exact wrap-around correction,
which is exact for primes below 2^50. Every transform also accepts stacked
inputs of shape ``(k, N)`` against a column of ``k`` primes so the RNS layer
can process a whole modulus chain in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit, vectorize
from sympy import isprime

MAX_PRIME_BITS = 50


def _as_u64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint64)


@vectorize(["uint64(uint64, uint64, uint64, float64)"], nopython=True, cache=True)
def _mulmod_kernel(a, b, p, pinv):
    q = np.uint64(np.float64(a) * np.float64(b) * pinv)
    r = a * b - q * p
    if np.int64(r) < 0:
        r += p
    elif r >= p:
        r -= p
    return r


def mulmod(a: np.ndarray, b: np.ndarray, p: np.ndarray, pinv: np.ndarray) -> np.ndarray:
    """Exact ``a * b mod p`` for operands already reduced below ``p < 2^50``."""
    return _mulmod_kernel(a, b, p, pinv)


def mulmod_reference(a: np.ndarray, b: np.ndarray, p: np.ndarray, pinv: np.ndarray) -> np.ndarray:
    """Pure numpy twin of :func:`mulmod`."""
    q = (a.astype(np.float64) * b.astype(np.float64) * pinv).astype(np.uint64)
    return _fix_product(a * b, q, p)


def mulmod_shoup(a: np.ndarray, w: np.ndarray, w_over_p: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``a * w mod p`` with ``w / p`` precomputed in float64 (fixed multiplicand)."""
    q = (a.astype(np.float64) * w_over_p).astype(np.uint64)
    return _fix_product(a * w, q, p)


def _fix_product(ab: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    # q is floor(ab/p) up to +-1, so ab - q*p (mod 2^64) lies in [-p, 2p)
    r = ab - q * p
    np.minimum(r, r + p, out=r)
    np.minimum(r, r - p, out=r)
    return r


def addmod(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    s = a + b
    return np.minimum(s, s - p)


def submod(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    d = a - b
    return np.minimum(d, d + p)


def negmod(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    return submod(np.zeros_like(a), a, p)


def reduce_signed(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Map signed int64 values into ``[0, p)``."""
    return np.mod(np.asarray(x, dtype=np.int64), np.asarray(p).view(np.int64)).view(np.uint64)


def center(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Representatives of residues in ``(-p/2, p/2]`` as int64."""
    s = x.view(np.int64)
    pi = np.asarray(p).view(np.int64)
    return np.where(s > pi // 2, s - pi, s)


def bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _primitive_root_2n(p: int, two_n: int) -> int:
    """Smallest-generator primitive 2N-th root of unity modulo ``p``."""
    exp = (p - 1) // two_n
    for g in range(2, p):
        psi = pow(g, exp, p)
        if pow(psi, two_n // 2, p) == p - 1:
            return psi
    raise ValueError(f"no primitive {two_n}-th root of unity mod {p}")


@dataclass(frozen=True, eq=False)
class NttTables:
    """Precomputed twiddles for the negacyclic NTT modulo one prime.

    The forward transform takes coefficients in natural order and returns the
    evaluations at psi^(2 * bitrev(i) + 1) at position ``i``; the inverse
    undoes it. ``forward_twiddles[i]`` is psi^bitrev(i) and
    ``inverse_twiddles[i]`` is psi^-bitrev(i).
    """

    modulus: int
    degree_log2: int
    root: int
    n_inverse: int
    forward_twiddles: np.ndarray = field(repr=False)
    inverse_twiddles: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return 1 << self.degree_log2


def make_ntt_tables(p: int, degree_log2: int) -> NttTables:
    p = int(p)
    n = 1 << degree_log2
    if p.bit_length() > MAX_PRIME_BITS:
        raise ValueError(f"modulus {p} exceeds {MAX_PRIME_BITS} bits")
    if (p - 1) % (2 * n) != 0:
        raise ValueError(f"modulus {p} is not congruent to 1 mod {2 * n}")
    if not isprime(p):
        raise ValueError(f"modulus {p} is not prime")
    return _make_tables_cached(p, degree_log2)


@lru_cache(maxsize=None)
def _make_tables_cached(p: int, degree_log2: int) -> NttTables:
    n = 1 << degree_log2
    psi = _primitive_root_2n(p, 2 * n)
    psi_inv = pow(psi, p - 2, p)
    rev = bit_reverse_permutation(n)
    fwd = np.array([pow(psi, int(r), p) for r in rev], dtype=np.uint64)
    inv = np.array([pow(psi_inv, int(r), p) for r in rev], dtype=np.uint64)
    fwd.setflags(write=False)
    inv.setflags(write=False)
    return NttTables(p, degree_log2, psi, pow(n, p - 2, p), fwd, inv)


def evaluation_exponents(degree_log2: int) -> np.ndarray:
    """Odd exponent e such that NTT slot ``i`` holds a(psi^e)."""
    return 2 * bit_reverse_permutation(1 << degree_log2) + 1


class StackedTables:
    """NTT tables for several primes laid out for batched ``(k, N)`` transforms."""

    def __init__(self, tables: list[NttTables]):
        if not tables:
            raise ValueError("at least one prime is required")
        logs = {t.degree_log2 for t in tables}
        if len(logs) != 1:
            raise ValueError("all tables must share a ring degree")
        self.tables = tuple(tables)
        self.degree_log2 = logs.pop()
        self.n = 1 << self.degree_log2
        self.moduli = tuple(t.modulus for t in tables)
        self.p = _as_u64(self.moduli).reshape(-1, 1)
        self.pinv = 1.0 / self.p.astype(np.float64)
        pf = self.p.astype(np.float64)
        self._fwd = np.stack([t.forward_twiddles for t in tables])
        self._inv = np.stack([t.inverse_twiddles for t in tables])
        self._fwd_f = self._fwd.astype(np.float64) / pf
        self._inv_f = self._inv.astype(np.float64) / pf
        n_inv = _as_u64([t.n_inverse for t in tables]).reshape(-1, 1)
        self._n_inv = n_inv
        self._n_inv_f = n_inv.astype(np.float64) / pf

    def __len__(self) -> int:
        return len(self.tables)

    def forward(self, a: np.ndarray) -> np.ndarray:
        """Coefficients ``(k, N)`` -> evaluations (bit-reversed order)."""
        x = np.array(a, dtype=np.uint64, copy=True, order="C")
        _forward_kernel(x, self._fwd, self._fwd_f, self.p[:, 0])
        return x

    def inverse(self, evals: np.ndarray) -> np.ndarray:
        x = np.array(evals, dtype=np.uint64, copy=True, order="C")
        _inverse_kernel(x, self._inv, self._inv_f, self.p[:, 0])
        return mulmod_shoup(x, self._n_inv, self._n_inv_f, self.p)


@njit(cache=True, nogil=True)
def _reduce_product(a, w, wf, p):
    q = np.uint64(np.float64(a) * wf)
    v = a * w - q * p
    if np.int64(v) < 0:
        v += p
    elif v >= p:
        v -= p
    return v


@njit(cache=True, nogil=True)
def _forward_kernel(x, tw, tw_f, moduli):
    # Cooley-Tukey with the psi twist merged into the twiddles
    k, n = x.shape
    for r in range(k):
        p = moduli[r]
        m = 1
        t = n
        while m < n:
            t //= 2
            for i in range(m):
                j1 = 2 * i * t
                w = tw[r, m + i]
                wf = tw_f[r, m + i]
                for j in range(j1, j1 + t):
                    u = x[r, j]
                    v = _reduce_product(x[r, j + t], w, wf, p)
                    s = u + v
                    x[r, j] = s - p if s >= p else s
                    d = u + p - v
                    x[r, j + t] = d - p if d >= p else d
            m *= 2


@njit(cache=True, nogil=True)
def _inverse_kernel(x, tw, tw_f, moduli):
    # Gentleman-Sande; the final N^-1 scaling is applied by the caller
    k, n = x.shape
    for r in range(k):
        p = moduli[r]
        t = 1
        m = n
        while m > 1:
            h = m // 2
            j1 = 0
            for i in range(h):
                w = tw[r, h + i]
                wf = tw_f[r, h + i]
                for j in range(j1, j1 + t):
                    u = x[r, j]
                    v = x[r, j + t]
                    s = u + v
                    x[r, j] = s - p if s >= p else s
                    d = u + p - v
                    if d >= p:
                        d -= p
                    x[r, j + t] = _reduce_product(d, w, wf, p)
                j1 += 2 * t
            t *= 2
            m = h


@lru_cache(maxsize=256)
def stacked_tables(moduli: tuple, degree_log2: int) -> StackedTables:
    return StackedTables([make_ntt_tables(q, degree_log2) for q in moduli])


@dataclass(frozen=True, eq=False)
class RingPoly:
    """Element of Z_p[X]/(X^N + 1) in coefficient form."""

    coeffs: np.ndarray
    modulus: int

    def __post_init__(self):
        c = _as_u64(self.coeffs)
        n = c.shape[-1] if c.ndim == 1 else -1
        if c.ndim != 1 or n < 1 or n & (n - 1):
            raise ValueError("coefficient vector length must be a power of two")
        if np.any(c >= np.uint64(self.modulus)):
            raise ValueError("coefficients must lie in [0, p)")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "modulus", int(self.modulus))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree_log2(self) -> int:
        return self.degree.bit_length() - 1

    @classmethod
    def from_signed(cls, values, modulus: int) -> "RingPoly":
        return cls(reduce_signed(values, _as_u64(modulus)), modulus)

    def __eq__(self, other):
        if not isinstance(other, RingPoly):
            return NotImplemented
        return self.modulus == other.modulus and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.modulus, self.coeffs.tobytes()))


def _check_pair(a: RingPoly, b: RingPoly):
    if a.modulus != b.modulus:
        raise ValueError(f"modulus mismatch: {a.modulus} != {b.modulus}")
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} != {b.degree}")


def _single(t: NttTables) -> StackedTables:
    return stacked_tables((t.modulus,), t.degree_log2)


def ntt_forward(a: RingPoly, t: NttTables) -> np.ndarray:
    if a.modulus != t.modulus:
        raise ValueError("polynomial and tables use different moduli")
    if a.degree != t.degree:
        raise ValueError("polynomial and tables use different ring degrees")
    return _single(t).forward(a.coeffs[None, :])[0]


def ntt_inverse(evals, t: NttTables) -> RingPoly:
    evals = _as_u64(evals)
    if evals.shape != (t.degree,):
        raise ValueError("evaluation vector length does not match the tables")
    if np.any(evals >= np.uint64(t.modulus)):
        raise ValueError("evaluations must be reduced modulo the table prime")
    return RingPoly(_single(t).inverse(evals[None, :])[0], t.modulus)


def negacyclic_mul(a: RingPoly, b: RingPoly, t: NttTables | None = None) -> RingPoly:
    _check_pair(a, b)
    if t is None:
        t = make_ntt_tables(a.modulus, a.degree_log2)
    st = _single(t)
    fa = st.forward(a.coeffs[None, :])
    fb = st.forward(b.coeffs[None, :])
    prod = mulmod(fa, fb, st.p, st.pinv)
    return RingPoly(st.inverse(prod)[0], a.modulus)


def poly_add(a: RingPoly, b: RingPoly) -> RingPoly:
    _check_pair(a, b)
    return RingPoly(addmod(a.coeffs, b.coeffs, _as_u64(a.modulus)), a.modulus)


def poly_sub(a: RingPoly, b: RingPoly) -> RingPoly:
    _check_pair(a, b)
    return RingPoly(submod(a.coeffs, b.coeffs, _as_u64(a.modulus)), a.modulus)


def poly_scalar_mul(a: RingPoly, c: int) -> RingPoly:
    p = _as_u64(a.modulus)
    cu = np.full_like(a.coeffs, int(c) % a.modulus)
    return RingPoly(mulmod(a.coeffs, cu, p, 1.0 / p.astype(np.float64)), a.modulus)


def sample_uniform(p: int, n: int, rng: np.random.Generator) -> RingPoly:
    return RingPoly(rng.integers(0, p, size=n, dtype=np.uint64), p)


def sample_ternary(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(-1, 2, size=n, dtype=np.int64)


def sample_error(n: int, stddev: float, rng: np.random.Generator) -> np.ndarray:
    if not stddev > 0:
        raise ValueError("stddev must be positive")
    return np.rint(rng.normal(0.0, stddev, size=n)).astype(np.int64)


def find_ntt_primes(bits: int, count: int, degree_log2: int, exclude=()) -> list[int]:
    """Largest ``count`` primes of exactly ``bits`` bits with p = 1 mod 2N.

    The scan walks downward from 2^bits; primes in ``exclude`` are skipped.
    """
    if bits > MAX_PRIME_BITS:
        raise ValueError(f"prime size {bits} exceeds {MAX_PRIME_BITS} bits")
    two_n = 2 << degree_log2
    found: list[int] = []
    skip = set(exclude)
    k = ((1 << bits) - 2) // two_n
    while len(found) < count:
        cand = k * two_n + 1
        if cand < (1 << (bits - 1)) or k <= 0:
            raise ValueError(
                f"only {len(found)} primes of {bits} bits are 1 mod {two_n}; need {count}")
        if cand not in skip and isprime(cand):
            found.append(cand)
        k -= 1
    return found
