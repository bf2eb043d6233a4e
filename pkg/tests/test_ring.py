import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoselm import ring
from chaoselm.ring import (RingPoly, find_ntt_primes, make_ntt_tables, negacyclic_mul,
                           ntt_forward, ntt_inverse, poly_add, poly_scalar_mul, poly_sub,
                           sample_error, sample_ternary, sample_uniform)

from oracles import ntt_primes_by_scan, schoolbook_negacyclic

# Largest 21-bit prime = 1 mod 16384, from the trial-division scan oracle.
P21 = 1785857
P30_N8 = 1073741441  # largest 30-bit prime = 1 mod 16
# Largest primes = 1 mod 64 at each size (scan oracle, frozen).
MULMOD_PRIMES = {20: 1048193, 30: 1073741441, 40: 1099511626049, 50: 1125899906842177}


def rand_poly(rng, p, n):
    return RingPoly(rng.integers(0, p, n, dtype=np.uint64), p)


def test_frozen_primes_match_oracle():
    for bits, p in MULMOD_PRIMES.items():
        assert ntt_primes_by_scan(bits, 1, 64) == [p]


class TestTables:
    def test_small_valid(self):
        t = make_ntt_tables(17, 2)
        assert t.modulus == 17 and t.degree == 4
        assert pow(t.root, 8, 17) == 1 and pow(t.root, 4, 17) == 16
        assert t.n_inverse * 4 % 17 == 1

    def test_congruence_rejected(self):
        with pytest.raises(ValueError, match="congruent"):
            make_ntt_tables(13, 2)

    def test_non_prime_rejected(self):
        with pytest.raises(ValueError, match="not prime"):
            make_ntt_tables(25, 2)  # 25 = 1 mod 8

    def test_paper_sized_prime(self):
        t = make_ntt_tables(P21, 13)
        assert P21 % 16384 == 1
        assert pow(t.root, 16384, P21) == 1 and pow(t.root, 8192, P21) == P21 - 1

    def test_prime_scan_matches_oracle(self):
        assert find_ntt_primes(21, 6, 13) == ntt_primes_by_scan(21, 6, 16384)
        assert find_ntt_primes(30, 2, 10) == ntt_primes_by_scan(30, 2, 2048)

    def test_prime_scan_exhaustion(self):
        with pytest.raises(ValueError, match="only"):
            find_ntt_primes(12, 5, 10)


class TestNtt:
    def test_zero_roundtrip(self):
        t = make_ntt_tables(P21, 8)
        z = RingPoly(np.zeros(256, dtype=np.uint64), P21)
        assert np.all(ntt_forward(z, t) == 0)
        assert ntt_inverse(ntt_forward(z, t), t) == z

    @pytest.mark.parametrize("log_n", [3, 6, 8, 10, 13])
    def test_random_roundtrip(self, log_n):
        rng = np.random.default_rng(log_n)
        p = ntt_primes_by_scan(30, 1, 2 << log_n)[0]
        t = make_ntt_tables(p, log_n)
        for _ in range(100 if log_n <= 10 else 5):
            a = rand_poly(rng, p, 1 << log_n)
            assert ntt_inverse(ntt_forward(a, t), t) == a

    def test_constant_evaluates_to_itself(self):
        t = make_ntt_tables(P21, 8)
        c = np.zeros(256, dtype=np.uint64)
        c[0] = 12345
        assert np.all(ntt_forward(RingPoly(c, P21), t) == 12345)

    def test_modulus_mismatch(self):
        t = make_ntt_tables(17, 2)
        with pytest.raises(ValueError, match="moduli"):
            ntt_forward(RingPoly([1, 2, 3, 4], 97), t)


class TestNegacyclic:
    def test_square_of_one_plus_x(self):
        a = RingPoly([1, 1, 0, 0], 17)
        assert negacyclic_mul(a, a) == RingPoly([1, 2, 1, 0], 17)

    def test_wraparound_sign(self):
        x3 = RingPoly([0, 0, 0, 1], 17)
        x = RingPoly([0, 1, 0, 0], 17)
        assert negacyclic_mul(x3, x) == RingPoly([16, 0, 0, 0], 17)

    @pytest.mark.parametrize("log_n", [3, 6, 8])
    def test_schoolbook_oracle(self, log_n):
        rng = np.random.default_rng(100 + log_n)
        n = 1 << log_n
        p = ntt_primes_by_scan(30, 1, 2 * n)[0]
        t = make_ntt_tables(p, log_n)
        for _ in range(100):
            a, b = rand_poly(rng, p, n), rand_poly(rng, p, n)
            assert negacyclic_mul(a, b, t).coeffs.tolist() == schoolbook_negacyclic(a.coeffs, b.coeffs, p)

    def test_fifty_bit_prime(self):
        rng = np.random.default_rng(7)
        p = ntt_primes_by_scan(50, 1, 128)[0]
        a, b = rand_poly(rng, p, 64), rand_poly(rng, p, 64)
        assert negacyclic_mul(a, b).coeffs.tolist() == schoolbook_negacyclic(a.coeffs, b.coeffs, p)

    def test_commutative_and_distributive(self):
        rng = np.random.default_rng(3)
        t = make_ntt_tables(P30_N8, 3)
        for _ in range(50):
            a, b, c = (rand_poly(rng, P30_N8, 8) for _ in range(3))
            assert negacyclic_mul(a, b, t) == negacyclic_mul(b, a, t)
            assert negacyclic_mul(a, poly_add(b, c), t) == poly_add(negacyclic_mul(a, b, t),
                                                                   negacyclic_mul(a, c, t))

    def test_mismatch_errors(self):
        with pytest.raises(ValueError, match="modulus"):
            negacyclic_mul(RingPoly([1, 0, 0, 0], 17), RingPoly([1, 0, 0, 0], 97))
        with pytest.raises(ValueError, match="degree"):
            poly_add(RingPoly([1, 0, 0, 0], 17), RingPoly([1] + [0] * 7, 17))


class TestElementwise:
    def test_identities(self):
        rng = np.random.default_rng(4)
        a = rand_poly(rng, P21, 64)
        zero = RingPoly(np.zeros(64, dtype=np.uint64), P21)
        assert poly_add(a, zero) == a
        assert poly_sub(a, a) == zero
        assert poly_scalar_mul(a, 1) == a
        assert poly_scalar_mul(a, -1) == poly_sub(zero, a)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError, match="power of two"):
            RingPoly([1, 2, 3], 17)
        with pytest.raises(ValueError, match=r"\[0, p\)"):
            RingPoly([1, 2, 3, 17], 17)

    def test_from_signed(self):
        assert RingPoly.from_signed([-1, 0, 1, -17], 17) == RingPoly([16, 0, 1, 0], 17)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_mulmod_exact(data):
    p = data.draw(st.sampled_from(sorted(MULMOD_PRIMES.values())))
    a = data.draw(st.lists(st.integers(0, p - 1), min_size=1, max_size=16))
    b = data.draw(st.lists(st.integers(0, p - 1), min_size=len(a), max_size=len(a)))
    pa = np.full(len(a), p, dtype=np.uint64)
    got = ring.mulmod(np.array(a, dtype=np.uint64), np.array(b, dtype=np.uint64), pa,
                      1.0 / pa.astype(np.float64))
    ref = ring.mulmod_reference(np.array(a, dtype=np.uint64), np.array(b, dtype=np.uint64), pa,
                                1.0 / pa.astype(np.float64))
    want = [x * y % p for x, y in zip(a, b)]
    assert got.tolist() == want and ref.tolist() == want


class TestSamplers:
    def test_error_stddev(self):
        e = sample_error(8192, 3.2, np.random.default_rng(5))
        assert e.dtype.kind == "i"
        assert abs(e.std() - 3.2) < 0.32
        assert abs(e.mean()) < 0.2

    def test_error_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            sample_error(8, 0.0, np.random.default_rng(0))

    def test_ternary(self):
        s = sample_ternary(8192, np.random.default_rng(6))
        assert set(np.unique(s).tolist()) == {-1, 0, 1}

    def test_uniform(self):
        u = sample_uniform(17, 4096, np.random.default_rng(7))
        assert u.modulus == 17 and int(u.coeffs.max()) < 17
        counts = np.bincount(u.coeffs.astype(np.int64), minlength=17)
        assert counts.min() > 150
