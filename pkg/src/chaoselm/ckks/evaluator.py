"""Homomorphic operations on ciphertexts.

The evaluator only ever sees :class:`EvaluationKeys`; secret material cannot
reach it. Inputs are never mutated.
"""

from __future__ import annotations

import numpy as np

from ..ring import addmod, center, mulmod, negmod, reduce_signed, stacked_tables, submod
from .ciphertext import Ciphertext
from .encoding import PlaintextPoly, encode_constant
from .keys import (EvaluationKeys, KeySet, automorphism_permutation, check_key, galois_element,
                   key_switch, require_level, require_relin)
from .params import CkksContext, MissingKeyError, ScaleError

SCALE_RTOL = 1e-9


def _scales_match(a: float, b: float) -> bool:
    return abs(a - b) <= SCALE_RTOL * max(a, b)


class Evaluator:
    def __init__(self, ctx: CkksContext, keys: EvaluationKeys):
        if isinstance(keys, KeySet) or not isinstance(keys, EvaluationKeys):
            raise TypeError("the evaluator accepts EvaluationKeys only")
        check_key(ctx, keys.public_key)
        self.ctx = ctx
        self.keys = keys

    # -- level and scale management ---------------------------------------

    def mod_switch_to(self, a: Ciphertext, level: int) -> Ciphertext:
        """Drop primes above ``level`` without touching the scale."""
        if level > a.level:
            raise ValueError(f"cannot raise level {a.level} to {level}")
        if level == a.level:
            return a
        self.ctx.check_level(level)
        return Ciphertext(tuple(p[:level + 1] for p in a.parts), a.scale, level)

    def rescale(self, a: Ciphertext) -> Ciphertext:
        """Divide by the top prime of the chain, rounding; one level down."""
        require_level(a.level, "rescale")
        ctx = self.ctx
        lvl = a.level
        low = ctx.basis(lvl - 1)
        q_top = ctx.modulus_chain[lvl]
        inv = np.broadcast_to(ctx.inverse_of_prime(lvl), (lvl, ctx.degree))
        single = stacked_tables((q_top,), ctx.params.degree_log2)
        parts = []
        for part in a.parts:
            tail = center(single.inverse(part[-1:]), single.p)
            t = low.forward(reduce_signed(np.broadcast_to(tail, (lvl, ctx.degree)), low.p))
            parts.append(mulmod(submod(part[:-1], t, low.p), inv, low.p, low.pinv))
        return Ciphertext(tuple(parts), a.scale / q_top, lvl - 1)

    def _align(self, a: Ciphertext, b: Ciphertext):
        """Bring two ciphertexts to a common level and scale.

        The higher-level operand is switched down. If scales still differ and
        that operand had a level to spare, it is multiplied by an encoded 1
        chosen so the rescale lands exactly on the other operand's scale.
        """
        if a.level == b.level:
            if not _scales_match(a.scale, b.scale):
                raise ScaleError(f"scales {a.scale} and {b.scale} differ at equal level")
            return a, b
        swap = a.level < b.level
        hi, lo = (b, a) if swap else (a, b)
        if _scales_match(hi.scale, lo.scale):
            hi = self.mod_switch_to(hi, lo.level)
        else:
            hi = self.mod_switch_to(hi, lo.level + 1)
            q = self.ctx.modulus_chain[lo.level + 1]
            hi = self.rescale(self.mul_plain(
                hi, encode_constant(1.0, lo.scale * q / hi.scale, self.ctx, hi.level)))
        return (lo, hi) if swap else (hi, lo)

    # -- additive operations ----------------------------------------------

    def add_ct(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        a, b = self._align(a, b)
        p = self.ctx.basis(a.level).p
        return Ciphertext(tuple(addmod(x, y, p) for x, y in zip(a.parts, b.parts)),
                          a.scale, a.level)

    def sub_ct(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        return self.add_ct(a, self.negate(b))

    def negate(self, a: Ciphertext) -> Ciphertext:
        p = self.ctx.basis(a.level).p
        return Ciphertext(tuple(negmod(x, p) for x in a.parts), a.scale, a.level)

    def add_plain(self, a: Ciphertext, pt: PlaintextPoly) -> Ciphertext:
        if pt.level < a.level:
            a = self.mod_switch_to(a, pt.level)
        rows = a.level + 1
        if not _scales_match(a.scale, pt.scale):
            raise ScaleError(f"plaintext scale {pt.scale} != ciphertext scale {a.scale}")
        p = self.ctx.basis(a.level).p
        c0 = addmod(a.parts[0], pt.residues[:rows], p)
        return Ciphertext((c0,) + a.parts[1:], a.scale, a.level)

    def add_constant(self, a: Ciphertext, value: float) -> Ciphertext:
        return self.add_plain(a, encode_constant(value, a.scale, self.ctx, a.level))

    # -- multiplicative operations ----------------------------------------

    def _check_product_scale(self, scale: float, level: int):
        room = sum(q.bit_length() for q in self.ctx.moduli(level)) - 1
        if np.log2(scale) >= room:
            raise ScaleError(f"product scale 2^{np.log2(scale):.1f} overflows the modulus")

    def mul_plain(self, a: Ciphertext, pt: PlaintextPoly) -> Ciphertext:
        require_level(a.level, "rescale after a multiplication")
        if pt.level < a.level:
            a = self.mod_switch_to(a, pt.level)
        rows = a.level + 1
        basis = self.ctx.basis(a.level)
        scale = a.scale * pt.scale
        self._check_product_scale(scale, a.level)
        m = pt.residues[:rows]
        parts = tuple(mulmod(x, m, basis.p, basis.pinv) for x in a.parts)
        return Ciphertext(parts, scale, a.level)

    def mul_scalar(self, a: Ciphertext, value: float, target_scale: float | None = None) -> Ciphertext:
        """Multiply by a real constant and rescale, landing on ``target_scale``.

        By default the constant is encoded at the size of the prime being
        dropped, which leaves the ciphertext scale unchanged.
        """
        require_level(a.level, "rescale after a multiplication")
        q = self.ctx.modulus_chain[a.level]
        target = a.scale if target_scale is None else target_scale
        pt = encode_constant(value, target * q / a.scale, self.ctx, a.level)
        out = self.rescale(self.mul_plain(a, pt))
        return Ciphertext(out.parts, target, out.level) if _scales_match(out.scale, target) else out

    def _tensor(self, a: Ciphertext, b: Ciphertext):
        if a.level != b.level:
            lvl = min(a.level, b.level)
            a, b = self.mod_switch_to(a, lvl), self.mod_switch_to(b, lvl)
        require_level(a.level, "rescale after a multiplication")
        basis = self.ctx.basis(a.level)
        scale = a.scale * b.scale
        self._check_product_scale(scale, a.level)
        p, pinv = basis.p, basis.pinv
        a0, a1 = a.parts
        b0, b1 = b.parts
        d0 = mulmod(a0, b0, p, pinv)
        d1 = addmod(mulmod(a0, b1, p, pinv), mulmod(a1, b0, p, pinv), p)
        d2 = mulmod(a1, b1, p, pinv)
        return d0, d1, d2, scale, a.level

    def mul_ct(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        """Product of two ciphertexts, relinearized back to two parts (not rescaled)."""
        d0, d1, d2, scale, level = self._tensor(a, b)
        return self._relinearize(d0, d1, d2, scale, level)

    def square(self, a: Ciphertext) -> Ciphertext:
        return self.mul_ct(a, a)

    def _relinearize(self, d0, d1, d2, scale, level) -> Ciphertext:
        key = require_relin(self.keys)
        k0, k1 = key_switch(self.ctx, d2, key, level)
        p = self.ctx.basis(level).p
        return Ciphertext((addmod(d0, k0, p), addmod(d1, k1, p)), scale, level)

    def relinearize(self, a: Ciphertext) -> Ciphertext:
        if a.size == 2:
            return a
        return self._relinearize(*a.parts, a.scale, a.level)

    def mul_ct_raw(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        """Three-part tensor product; callers must relinearize before sharing it."""
        d0, d1, d2, scale, level = self._tensor(a, b)
        return Ciphertext((d0, d1, d2), scale, level)

    # -- rotations ----------------------------------------------------------

    def _rotate_pow2(self, a: Ciphertext, step: int) -> Ciphertext:
        key = self.keys.galois_keys.get(step)
        if key is None:
            raise MissingKeyError(f"no rotation key for step {step}")
        g = galois_element(self.ctx, step)
        perm = automorphism_permutation(self.ctx, g)
        c0 = a.parts[0][:, perm]
        c1 = a.parts[1][:, perm]
        k0, k1 = key_switch(self.ctx, c1, key, a.level)
        p = self.ctx.basis(a.level).p
        return Ciphertext((addmod(c0, k0, p), k1), a.scale, a.level)

    def rotate(self, a: Ciphertext, k: int) -> Ciphertext:
        """Cyclic left rotation: slot ``j`` receives slot ``j + k``."""
        if a.size != 2:
            raise ValueError("relinearize before rotating")
        k %= self.ctx.slot_count
        bit = 1
        while k:
            if k & 1:
                a = self._rotate_pow2(a, bit)
            k >>= 1
            bit <<= 1
        return a

    def sum_slots(self, a: Ciphertext, n: int, full: bool = False) -> Ciphertext:
        """Sum of the first ``n`` slots into slot 0.

        Slots ``n .. 2^ceil(log2 n) - 1`` must be zero, which holds for any
        encoded length-``n`` vector. With ``full`` the ladder runs over every
        slot and the total lands in all of them.
        """
        slots = self.ctx.slot_count
        if not 1 <= n <= slots:
            raise ValueError(f"n must be within 1..{slots}")
        limit = slots if full else n
        step = 1
        while step < limit:
            a = self.add_ct(a, self.rotate(a, step))
            step *= 2
        return a

    def dot_product(self, a: Ciphertext, b: Ciphertext, n: int) -> Ciphertext:
        """<a, b> over the first ``n`` slots, in slot 0; consumes one level.

        Rotations run before the rescale so key-switching noise is divided
        down together with the doubled scale.
        """
        return self.rescale(self.sum_slots(self.mul_ct(a, b), n))
