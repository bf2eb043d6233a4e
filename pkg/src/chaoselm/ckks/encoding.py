"""Canonical-embedding encoder: real vectors <-> scaled RNS plaintexts."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..ring import center, mulmod, reduce_signed
from .params import CkksContext, ParameterError, ScaleError


@dataclass(frozen=True, eq=False)
class PlaintextPoly:
    """Encoded polynomial as RNS residues in evaluation (NTT) form.

    ``residues`` has one row per prime ``q_0 .. q_level``.
    """

    residues: np.ndarray
    scale: float
    level: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ScaleError("plaintext scale must be positive")
        if self.residues.shape[0] != self.level + 1:
            raise ValueError("residue rows do not match the level")
        self.residues.setflags(write=False)


@lru_cache(maxsize=None)
def _slot_layout(degree_log2: int):
    """Indices of the slot roots and their conjugates among the odd powers.

    Slot ``j`` is evaluated at zeta^(5^j), zeta = exp(i*pi/N); odd power
    zeta^(2k+1) sits at index ``k``.
    """
    n = 1 << degree_log2
    two_n = 2 * n
    exps = np.empty(n // 2, dtype=np.int64)
    e = 1
    for j in range(n // 2):
        exps[j] = e
        e = e * 5 % two_n
    slots = (exps - 1) // 2
    conj = (two_n - exps - 1) // 2
    twist = np.exp(1j * np.pi * np.arange(n) / n)
    return slots, conj, twist


def embed_inverse(values: np.ndarray, degree_log2: int) -> np.ndarray:
    """Real polynomial coefficients whose slot values are ``values``."""
    n = 1 << degree_log2
    slots, conj, twist = _slot_layout(degree_log2)
    z = np.zeros(n // 2, dtype=np.complex128)
    z[:len(values)] = values
    v = np.empty(n, dtype=np.complex128)
    v[slots] = z
    v[conj] = np.conj(z)
    return (np.fft.fft(v) / n / twist).real


def embed(coeffs: np.ndarray, degree_log2: int) -> np.ndarray:
    """Slot values (complex) of a real polynomial."""
    n = 1 << degree_log2
    slots, _, twist = _slot_layout(degree_log2)
    v = np.fft.ifft(coeffs * twist) * n
    return v[slots]


def _check_scale_power_of_two(scale: float):
    m, e = np.frexp(scale)
    if m != 0.5 or scale < 2:
        raise ScaleError(f"scale {scale} is not a power of two >= 2")


def encode(values, scale: float, ctx: CkksContext, level: int | None = None,
           exact_scale: bool = False) -> PlaintextPoly:
    """Encode up to ``slot_count`` reals at ``scale``.

    ``scale`` must be a power of two unless ``exact_scale`` is set; the
    evaluator uses arbitrary scales internally to keep ciphertext scales
    aligned across rescales.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size > ctx.slot_count:
        raise ParameterError(f"{values.size} values exceed {ctx.slot_count} slots")
    if not np.all(np.isfinite(values)):
        raise ParameterError("values must be finite")
    if not exact_scale:
        _check_scale_power_of_two(scale)
    elif not scale > 0:
        raise ScaleError("scale must be positive")
    level = ctx.max_level if level is None else level
    ctx.check_level(level)
    coeffs = np.rint(embed_inverse(values, ctx.params.degree_log2) * scale)
    bound = ctx.modulus_chain[0] / 2
    if coeffs.size and np.max(np.abs(coeffs)) >= bound:
        raise ScaleError("scaled plaintext exceeds the first-prime bound")
    return _from_integer_coeffs(coeffs.astype(np.int64), scale, level, ctx)


def encode_constant(value: float, scale: float, ctx: CkksContext, level: int) -> PlaintextPoly:
    """Constant ``value`` in every slot: a degree-0 polynomial."""
    c = int(np.rint(value * scale))
    if abs(c) >= ctx.modulus_chain[0] / 2:
        raise ScaleError("scaled constant exceeds the first-prime bound")
    coeffs = np.zeros(ctx.degree, dtype=np.int64)
    coeffs[0] = c
    return _from_integer_coeffs(coeffs, scale, level, ctx)


def _from_integer_coeffs(coeffs: np.ndarray, scale: float, level: int,
                         ctx: CkksContext) -> PlaintextPoly:
    basis = ctx.basis(level)
    residues = basis.forward(reduce_signed(coeffs[None, :], basis.p))
    return PlaintextPoly(residues, float(scale), level)


def crt_reconstruct(residues: np.ndarray, ctx: CkksContext, level: int) -> np.ndarray:
    """Centered integer coefficients (as float64) from coefficient-form residues."""
    if level == 0:
        return center(residues[0], np.uint64(ctx.modulus_chain[0])).astype(np.float64)
    big_q, hats, invs = ctx.crt_data(level)
    basis = ctx.basis(level)
    y = mulmod(residues, invs, basis.p, basis.pinv)
    acc = np.zeros(residues.shape[1], dtype=object)
    for row, hat in zip(y, hats):
        acc = acc + row.astype(object) * hat
    acc = acc % big_q
    acc = np.where(acc > big_q // 2, acc - big_q, acc)
    return acc.astype(np.float64)


def decode(pt: PlaintextPoly, ctx: CkksContext, length: int | None = None) -> np.ndarray:
    coeffs = ctx.basis(pt.level).inverse(pt.residues)
    ints = crt_reconstruct(coeffs, ctx, pt.level)
    out = embed(ints / pt.scale, ctx.params.degree_log2).real
    return out if length is None else out[:length]
