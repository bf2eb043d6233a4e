import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from chaoselm import chaos
from chaoselm.chaos import (LogisticMapStream, generate_chaotic_params, generate_uniform_params,
                            logistic_step, new_stream)


def direct_orbit(x, n):
    out = []
    for _ in range(n):
        x = 4.0 * x * (1.0 - x)
        out.append(x)
    return out


@pytest.mark.parametrize("x, want", [(0.2, 0.64), (0.64, 0.9216)])
def test_step_examples(x, want):
    assert logistic_step(x) == pytest.approx(want, abs=1e-15)
    s = LogisticMapStream(x, burn_in=0)
    assert s.next() == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("x0", [0.25, 0.5, 0.75, 0.75 + 1e-10])
def test_degenerate_rejected(x0):
    assert logistic_step(0.75) == 0.75
    with pytest.raises(ValueError, match="degenerate"):
        LogisticMapStream(x0)


@pytest.mark.parametrize("x0", [0.0, 1.0, -0.1, 1.5])
def test_out_of_range_rejected(x0):
    with pytest.raises(ValueError):
        LogisticMapStream(x0)


def test_negative_burn_in():
    with pytest.raises(ValueError):
        new_stream(0, burn_in=-1)


def test_burn_in_discards_prefix():
    a = LogisticMapStream(0.3, burn_in=0)
    b = LogisticMapStream(0.3, burn_in=5)
    assert a.take(8)[5:].tolist() == b.take(3).tolist()


def test_take_matches_direct_loop():
    s = LogisticMapStream(0.123, burn_in=0)
    assert s.take(50).tolist() == direct_orbit(0.123, 50)


def test_determinism_and_clone():
    a, b = new_stream(7), new_stream(7)
    assert np.array_equal(a.take(100), b.take(100))
    c = a.clone()
    assert np.array_equal(a.take(10), c.take(10))
    assert not np.array_equal(new_stream(8).take(10), new_stream(7).take(10))


def test_range_over_million_iterates():
    x = new_stream(3).take(1_000_000)
    assert x.min() >= 0.0 and x.max() <= 1.0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_range_any_start(x0):
    if chaos.is_degenerate(x0):
        return
    x = LogisticMapStream(x0, burn_in=0).take(2000)
    assert np.all((x >= 0.0) & (x <= 1.0))


def test_orbit_divergence():
    rng = np.random.default_rng(2024)
    diverged = 0
    for _ in range(1000):
        x0 = rng.uniform(0.01, 0.99)
        a, b = direct_orbit(x0, 60), direct_orbit(x0 + 1e-8, 60)
        diverged += any(abs(u - v) > 0.1 for u, v in zip(a, b))
    assert diverged >= 950


def test_histogram_not_uniform():
    x = new_stream(11).take(100_000)
    counts, _ = np.histogram(x, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue < 0.01
    # invariant density 1/(pi sqrt(x(1-x))) piles mass at the edges
    assert counts[0] > 2 * counts[10] and counts[-1] > 2 * counts[10]


class TestParams:
    def test_shapes_and_range(self):
        W, b = generate_chaotic_params(9, 4, seed=1)
        assert W.shape == (4, 9) and b.shape == (4,)
        assert np.all((W > 0) & (W < 1)) and np.all((b > 0) & (b < 1))

    def test_row_major_then_bias(self):
        W, b = generate_chaotic_params(3, 2, seed=5, burn_in=10)
        seq = new_stream(5, burn_in=10).take(8)
        assert W.ravel().tolist() == seq[:6].tolist() and b.tolist() == seq[6:].tolist()

    def test_determinism(self):
        a = generate_chaotic_params(5, 3, seed=2)
        b = generate_chaotic_params(5, 3, seed=2)
        c = generate_chaotic_params(5, 3, seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert not np.array_equal(a[0], c[0])

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            generate_chaotic_params(0, 3, seed=0)

    def test_uniform_params(self):
        W, b = generate_uniform_params(4, 6, seed=0)
        assert W.shape == (6, 4) and b.shape == (6,)
        assert np.all((W >= 0) & (W < 1))
        x = generate_uniform_params(100, 1000, seed=1)[0].ravel()
        counts, _ = np.histogram(x, bins=20, range=(0, 1))
        assert stats.chisquare(counts).pvalue > 0.001
