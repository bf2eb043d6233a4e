"""Key generation, encryption, decryption and key switching."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ring import (addmod, center, evaluation_exponents, mulmod, reduce_signed, sample_error,
                    sample_ternary, stacked_tables, submod)
from .ciphertext import Ciphertext
from .encoding import PlaintextPoly
from .params import CkksContext, KeyMismatchError, LevelExhaustedError, MissingKeyError


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SecretKey:
    """Ternary secret; ``ntt`` holds it over the full chain plus the special prime."""

    coeffs: np.ndarray = field(repr=False)
    ntt: np.ndarray = field(repr=False)
    params_hash: bytes

    def __post_init__(self):
        _frozen(self.coeffs, self.ntt)


@dataclass(frozen=True, eq=False)
class PublicKey:
    b: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    params_hash: bytes

    def __post_init__(self):
        _frozen(self.b, self.a)


@dataclass(frozen=True, eq=False)
class KeySwitchKey:
    """Encryptions of P * 2^shift * s' under s, one pair per key-switching digit.

    Arrays have shape ``(digits, L + 2, N)``; the last prime row is the
    special prime.
    """

    b: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    params_hash: bytes

    def __post_init__(self):
        _frozen(self.b, self.a)


@dataclass(frozen=True, eq=False)
class EvaluationKeys:
    """Everything an evaluator may hold: no secret material."""

    public_key: PublicKey
    relin_key: KeySwitchKey | None
    galois_keys: dict = field(default_factory=dict)  # galois element -> KeySwitchKey

    @property
    def params_hash(self) -> bytes:
        return self.public_key.params_hash

    def rotation_steps(self) -> list[int]:
        return sorted(self.galois_keys)


@dataclass(frozen=True, eq=False)
class KeySet:
    secret_key: SecretKey
    public: EvaluationKeys

    @property
    def public_key(self) -> PublicKey:
        return self.public.public_key

    @property
    def relin_key(self) -> KeySwitchKey | None:
        return self.public.relin_key

    @property
    def galois_keys(self) -> dict:
        return self.public.galois_keys


def check_key(ctx: CkksContext, key):
    if key.params_hash != ctx.params_hash:
        raise KeyMismatchError("key was generated for a different context")


def _error_ntt(ctx: CkksContext, basis, rng) -> np.ndarray:
    e = sample_error(ctx.degree, ctx.params.error_stddev, rng)
    return basis.forward(reduce_signed(e[None, :], basis.p))


def _uniform(basis, rng) -> np.ndarray:
    return np.stack([rng.integers(0, q, size=basis.n, dtype=np.uint64) for q in basis.moduli])


def galois_element(ctx: CkksContext, step: int) -> int:
    return pow(5, step % ctx.slot_count, 2 * ctx.degree)


def automorphism_permutation(ctx: CkksContext, galois: int) -> np.ndarray:
    """Index map so that ``a_ntt[..., perm]`` is the NTT of a(X^galois)."""
    return _perm_cache(ctx.params.degree_log2, galois)


_PERMS: dict = {}


def _perm_cache(degree_log2: int, galois: int) -> np.ndarray:
    key = (degree_log2, galois)
    if key not in _PERMS:
        n = 1 << degree_log2
        exps = evaluation_exponents(degree_log2)
        where = np.empty(2 * n, dtype=np.int64)
        where[exps] = np.arange(n)
        _PERMS[key] = where[(exps * galois) % (2 * n)]
    return _PERMS[key]


def _make_keyswitch_key(ctx: CkksContext, sk: SecretKey, target_ntt: np.ndarray, rng) -> KeySwitchKey:
    """Key switching ``target`` (NTT rows over chain + special) to ``sk``."""
    basis = ctx.ext_basis(ctx.max_level)
    special = ctx.special_prime
    bs, as_ = [], []
    for d in ctx.keyswitch_digits:
        a = _uniform(basis, rng)
        b = submod(_error_ntt(ctx, basis, rng), mulmod(a, sk.ntt, basis.p, basis.pinv), basis.p)
        i = d.prime_index
        q = ctx.modulus_chain[i]
        factor = np.uint64(special * (1 << d.shift_bits) % q)
        row = mulmod(target_ntt[i], np.full(ctx.degree, factor), basis.p[i], basis.pinv[i])
        b[i] = addmod(b[i], row, basis.p[i])
        bs.append(b)
        as_.append(a)
    return KeySwitchKey(np.stack(bs), np.stack(as_), ctx.params_hash)


def keygen(ctx: CkksContext, rng: np.random.Generator, rotations: bool = True) -> KeySet:
    """Secret, public, relinearization and power-of-two rotation keys."""
    L = ctx.max_level
    ext = ctx.ext_basis(L)
    s = sample_ternary(ctx.degree, rng)
    s_ntt = ext.forward(reduce_signed(s[None, :], ext.p))
    sk = SecretKey(s, s_ntt, ctx.params_hash)

    data = ctx.basis(L)
    a = _uniform(data, rng)
    b = submod(_error_ntt(ctx, data, rng), mulmod(a, s_ntt[:L + 1], data.p, data.pinv), data.p)
    pk = PublicKey(b, a, ctx.params_hash)

    s2 = mulmod(s_ntt, s_ntt, ext.p, ext.pinv)
    relin = _make_keyswitch_key(ctx, sk, s2, rng)

    galois = {}
    if rotations:
        step = 1
        while step < ctx.slot_count:
            g = galois_element(ctx, step)
            galois[step] = _make_keyswitch_key(ctx, sk, s_ntt[:, automorphism_permutation(ctx, g)], rng)
            step *= 2
    return KeySet(sk, EvaluationKeys(pk, relin, galois))


def encrypt(pt: PlaintextPoly, public_key: PublicKey, ctx: CkksContext,
            rng: np.random.Generator) -> Ciphertext:
    """Public-key encryption at the plaintext's level."""
    check_key(ctx, public_key)
    ctx.check_level(pt.level)
    basis = ctx.basis(pt.level)
    rows = pt.level + 1
    u = sample_ternary(ctx.degree, rng)
    u_ntt = basis.forward(reduce_signed(u[None, :], basis.p))
    c0 = mulmod(public_key.b[:rows], u_ntt, basis.p, basis.pinv)
    c0 = addmod(c0, _error_ntt(ctx, basis, rng), basis.p)
    c0 = addmod(c0, pt.residues, basis.p)
    c1 = mulmod(public_key.a[:rows], u_ntt, basis.p, basis.pinv)
    c1 = addmod(c1, _error_ntt(ctx, basis, rng), basis.p)
    return Ciphertext((c0, c1), pt.scale, pt.level)


def encrypt_symmetric(pt: PlaintextPoly, secret_key: SecretKey, ctx: CkksContext,
                      rng: np.random.Generator) -> Ciphertext:
    """Secret-key encryption: one error term instead of three."""
    check_key(ctx, secret_key)
    ctx.check_level(pt.level)
    basis = ctx.basis(pt.level)
    rows = pt.level + 1
    a = _uniform(basis, rng)
    c0 = submod(_error_ntt(ctx, basis, rng),
                mulmod(a, secret_key.ntt[:rows], basis.p, basis.pinv), basis.p)
    c0 = addmod(c0, pt.residues, basis.p)
    return Ciphertext((c0, a), pt.scale, pt.level)


def decrypt(ct: Ciphertext, secret_key: SecretKey, ctx: CkksContext) -> PlaintextPoly:
    check_key(ctx, secret_key)
    ctx.check_level(ct.level)
    basis = ctx.basis(ct.level)
    s = secret_key.ntt[:ct.level + 1]
    acc = ct.parts[0]
    s_pow = s
    for part in ct.parts[1:]:
        acc = addmod(acc, mulmod(part, s_pow, basis.p, basis.pinv), basis.p)
        s_pow = mulmod(s_pow, s, basis.p, basis.pinv)
    return PlaintextPoly(np.array(acc), ct.scale, ct.level)


def _balanced_digits(ctx: CkksContext, centered: np.ndarray, level: int) -> np.ndarray:
    out = []
    for d in ctx.keyswitch_digits:
        if d.prime_index > level:
            break
        if d.shift_bits == 0:
            rest = centered[d.prime_index]
        last = (d.shift_bits + d.width_bits >= ctx.modulus_chain[d.prime_index].bit_length())
        if last:
            out.append(rest)
        else:
            base = 1 << d.width_bits
            lo = np.mod(rest + base // 2, base) - base // 2
            out.append(lo)
            rest = (rest - lo) >> d.width_bits
    return np.stack(out)


def mod_down(ctx: CkksContext, acc: np.ndarray, level: int) -> np.ndarray:
    """Divide an extended-basis NTT polynomial by the special prime, rounding."""
    data = ctx.basis(level)
    sp = stacked_tables((ctx.special_prime,), ctx.params.degree_log2)
    tail = center(sp.inverse(acc[-1:]), sp.p)
    t = data.forward(reduce_signed(np.broadcast_to(tail, (level + 1, ctx.degree)), data.p))
    diff = submod(acc[:-1], t, data.p)
    return mulmod(diff, np.broadcast_to(ctx.inverse_of_special(level), diff.shape),
                  data.p, data.pinv)


def key_switch(ctx: CkksContext, d_ntt: np.ndarray, key: KeySwitchKey, level: int):
    """Return (c0, c1) at ``level`` with c0 + c1*s ~= d * s'."""
    check_key(ctx, key)
    data = ctx.basis(level)
    centered = center(data.inverse(d_ntt), data.p)
    digits = _balanced_digits(ctx, centered, level)
    nd = digits.shape[0]
    ext = ctx.ext_basis(level)
    k = level + 2
    lifted = reduce_signed(digits[:, None, :], ext.p[None, :, :])
    lifted = ctx.keyswitch_basis(level).forward(lifted.reshape(nd * k, ctx.degree))
    lifted = lifted.reshape(nd, k, ctx.degree)
    rows = list(range(level + 1)) + [ctx.max_level + 1]
    p3 = ext.p[None, :, :]
    pinv3 = ext.pinv[None, :, :]
    out = []
    for mat in (key.b, key.a):
        prod = mulmod(lifted, mat[:nd][:, rows, :], p3, pinv3)
        acc = np.mod(prod.sum(axis=0, dtype=np.uint64), ext.p)
        out.append(mod_down(ctx, acc, level))
    return out[0], out[1]


def require_relin(keys: EvaluationKeys) -> KeySwitchKey:
    if keys.relin_key is None:
        raise MissingKeyError("relinearization key not available")
    return keys.relin_key


def require_level(level: int, what: str):
    if level <= 0:
        raise LevelExhaustedError(f"no primes left to {what}")
