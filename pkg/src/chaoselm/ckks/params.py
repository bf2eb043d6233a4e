"""Scheme parameters, the modulus chain and the shared context object."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ..ring import StackedTables, find_ntt_primes, make_ntt_tables, stacked_tables

# Largest total coefficient-modulus size per ring degree at the 128-bit
# classical security level. Degrees below 2048 are desk-scale test rings and
# carry no cap.
MAX_BIT_BUDGET = {2048: 54, 4096: 109, 8192: 218, 16384: 438, 32768: 881}

# Wide RNS digits are split into sub-digits of at most this many bits during
# key switching so the key-switching noise stays far below the special prime.
KEYSWITCH_DIGIT_BITS = 24


class CkksError(Exception):
    pass


class ParameterError(CkksError, ValueError):
    pass


class LevelExhaustedError(CkksError):
    pass


class ScaleError(CkksError, ValueError):
    pass


class MissingKeyError(CkksError, KeyError):
    pass


class KeyMismatchError(CkksError, ValueError):
    pass


@dataclass(frozen=True)
class CkksParams:
    """Ring degree exponent, coefficient-modulus bit sizes and global scale.

    The first entry of ``coeff_modulus_bits`` bounds the plaintext, the middle
    entries are the rescaling primes and the last entry is the special prime
    used only for key switching.
    """

    degree_log2: int
    coeff_modulus_bits: tuple
    scale_bits: int
    error_stddev: float = 3.2

    def __post_init__(self):
        bits = tuple(int(b) for b in self.coeff_modulus_bits)
        object.__setattr__(self, "coeff_modulus_bits", bits)
        if not 1 <= self.degree_log2 <= 16:
            raise ParameterError("ring degree must be 2^1 .. 2^16")
        if len(bits) < 2:
            raise ParameterError("need at least a data prime and a special prime")
        if any(b < 2 or b > 50 for b in bits):
            raise ParameterError("prime sizes must be between 2 and 50 bits")
        cap = MAX_BIT_BUDGET.get(self.degree)
        if cap is not None and sum(bits) > cap:
            raise ParameterError(
                f"coefficient modulus uses {sum(bits)} bits; "
                f"N={self.degree} allows at most {cap}")
        if self.scale_bits < 1:
            raise ParameterError("scale must be at least 2")
        if any(self.scale_bits > b for b in bits[1:-1]):
            raise ParameterError("scale exceeds an intermediate prime size")
        if self.scale_bits >= bits[0]:
            raise ParameterError("scale must be smaller than the first prime")
        if not self.error_stddev > 0:
            raise ParameterError("error stddev must be positive")

    @property
    def degree(self) -> int:
        return 1 << self.degree_log2

    @property
    def slot_count(self) -> int:
        return self.degree // 2

    @property
    def scale(self) -> float:
        return float(2 ** self.scale_bits)

    @property
    def max_level(self) -> int:
        return len(self.coeff_modulus_bits) - 2


PAPER_PARAMS = CkksParams(13, (40, 21, 21, 21, 21, 21, 21, 40), 21)
TEST_PARAMS = CkksParams(10, (30, 21, 21, 21, 21, 21, 21, 30), 21)
PROFILES = {"paper": PAPER_PARAMS, "test": TEST_PARAMS}


def _assign_primes(params: CkksParams) -> list[int]:
    """Pick one distinct NTT-friendly prime per bit-size entry.

    Within one bit size the largest prime goes to the special slot, then to
    the data primes from the top of the chain down, so the primes dropped
    first by rescaling sit closest to 2^bits.
    """
    bits = params.coeff_modulus_bits
    order = [len(bits) - 1] + list(range(len(bits) - 2, -1, -1))
    wanted: dict[int, int] = {}
    for b in bits:
        wanted[b] = wanted.get(b, 0) + 1
    pools = {b: find_ntt_primes(b, c, params.degree_log2) for b, c in wanted.items()}
    primes = [0] * len(bits)
    for pos in order:
        primes[pos] = pools[bits[pos]].pop(0)
    return primes


@dataclass(frozen=True)
class KeySwitchDigit:
    prime_index: int
    shift_bits: int
    width_bits: int


class CkksContext:
    """Validated parameters plus modulus chain and precomputed tables.

    Immutable after construction and safe to share between threads.
    """

    def __init__(self, params: CkksParams):
        self.params = params
        primes = _assign_primes(params)
        self.modulus_chain = tuple(primes[:-1])
        self.special_prime = primes[-1]
        self.ntt_tables = tuple(make_ntt_tables(q, params.degree_log2) for q in primes)
        digits = []
        for i, q in enumerate(self.modulus_chain):
            width = q.bit_length()
            parts = -(-width // KEYSWITCH_DIGIT_BITS)
            step = -(-width // parts)
            for t in range(parts):
                digits.append(KeySwitchDigit(i, t * step, step))
        self.keyswitch_digits = tuple(digits)

    def __repr__(self):
        return (f"CkksContext(N={self.degree}, chain={list(self.modulus_chain)}, "
                f"special={self.special_prime})")

    @property
    def degree(self) -> int:
        return self.params.degree

    @property
    def slot_count(self) -> int:
        return self.params.slot_count

    @property
    def max_level(self) -> int:
        return self.params.max_level

    @property
    def scale(self) -> float:
        return self.params.scale

    @cached_property
    def params_hash(self) -> bytes:
        text = ",".join(map(str, (self.params.degree_log2, self.params.scale_bits,
                                  *self.modulus_chain, self.special_prime)))
        return hashlib.sha256(text.encode()).digest()[:8]

    def check_level(self, level: int):
        if not 0 <= level <= self.max_level:
            raise LevelExhaustedError(f"level {level} outside 0..{self.max_level}")

    def moduli(self, level: int) -> tuple:
        return self.modulus_chain[:level + 1]

    def basis(self, level: int) -> StackedTables:
        return stacked_tables(self.moduli(level), self.params.degree_log2)

    def ext_basis(self, level: int) -> StackedTables:
        return stacked_tables(self.moduli(level) + (self.special_prime,),
                              self.params.degree_log2)

    def digits_at(self, level: int) -> int:
        """Number of key-switching digits active at ``level``."""
        return sum(1 for d in self.keyswitch_digits if d.prime_index <= level)

    def keyswitch_basis(self, level: int) -> StackedTables:
        moduli = self.moduli(level) + (self.special_prime,)
        return stacked_tables(moduli * self.digits_at(level), self.params.degree_log2)

    @lru_cache(maxsize=None)
    def crt_data(self, level: int):
        """(Q, [Q/q_i], [(Q/q_i)^-1 mod q_i]) for the primes up to ``level``."""
        mods = self.moduli(level)
        big_q = 1
        for q in mods:
            big_q *= q
        hats = [big_q // q for q in mods]
        invs = [pow(h % q, -1, q) for h, q in zip(hats, mods)]
        return big_q, hats, np.array(invs, dtype=np.uint64).reshape(-1, 1)

    @lru_cache(maxsize=None)
    def inverse_of_prime(self, level: int) -> np.ndarray:
        """q_level^-1 mod q_j for j < level, as a column."""
        q = self.modulus_chain[level]
        return np.array([pow(q, -1, qj) for qj in self.modulus_chain[:level]],
                        dtype=np.uint64).reshape(-1, 1)

    @lru_cache(maxsize=None)
    def inverse_of_special(self, level: int) -> np.ndarray:
        return np.array([pow(self.special_prime, -1, qj) for qj in self.moduli(level)],
                        dtype=np.uint64).reshape(-1, 1)


def build_context(params: CkksParams, rng=None) -> CkksContext:
    """Validate ``params`` and derive the modulus chain and NTT tables.

    Prime selection is deterministic, so ``rng`` is accepted only for
    interface symmetry with key generation.
    """
    try:
        return CkksContext(params)
    except ValueError as exc:
        if isinstance(exc, CkksError):
            raise
        raise ParameterError(str(exc)) from exc
