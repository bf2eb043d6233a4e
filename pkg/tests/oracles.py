"""Independent reference implementations used to derive frozen test values.

These are deliberately naive (pure Python integers, loops, direct formulas)
and share no code with the package.
"""

import math

import numpy as np


def schoolbook_negacyclic(a, b, p):
    n = len(a)
    out = [0] * n
    for i in range(n):
        ai = int(a[i])
        for j in range(n):
            k = i + j
            term = ai * int(b[j])
            if k < n:
                out[k] += term
            else:
                out[k - n] -= term
    return [c % p for c in out]


def sieve_primes(limit):
    mark = bytearray([1]) * (limit + 1)
    mark[0:2] = b"\x00\x00"
    for i in range(2, int(limit ** 0.5) + 1):
        if mark[i]:
            mark[i * i::i] = bytearray(len(mark[i * i::i]))
    return mark


def trial_division_is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def miller_rabin(n):
    """Deterministic for n < 3.3e24 with these witnesses."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def ntt_primes_by_scan(bits, count, two_n, is_prime=None):
    is_prime = is_prime or (trial_division_is_prime if bits <= 32 else miller_rabin)
    found = []
    cand = ((1 << bits) - 1) // two_n * two_n + 1
    while len(found) < count and cand >= 1 << (bits - 1):
        if cand < (1 << bits) and is_prime(cand):
            found.append(cand)
        cand -= two_n
    return found


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def hidden_loop(X, W, b, g):
    N, M = len(X), len(W)
    H = [[0.0] * M for _ in range(N)]
    for j in range(N):
        for i in range(M):
            s = b[i]
            for k in range(len(X[j])):
                s += W[i][k] * X[j][k]
            H[j][i] = g(s)
    return np.array(H)


def zscore(col):
    n = len(col)
    mean = sum(col) / n
    var = sum((c - mean) ** 2 for c in col) / n
    return [(c - mean) / math.sqrt(var) for c in col]
