"""Logistic-map sequences used as weight and bias material."""

from __future__ import annotations

import numpy as np

R = 4.0
DEFAULT_BURN_IN = 100
# 0.5 -> 1 -> 0 collapses, 0.75 is a fixed point and 0.25 maps onto it.
DEGENERATE_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEGENERATE_TOL = 1e-9


def logistic_step(x: float) -> float:
    return R * x * (1.0 - x)


def is_degenerate(x: float) -> bool:
    return any(abs(x - d) < DEGENERATE_TOL for d in DEGENERATE_POINTS)


class LogisticMapStream:
    """x_{n+1} = 4 x_n (1 - x_n), started from a uniform draw.

    A stream is single-owner mutable state; use :meth:`clone` to fork it.
    """

    def __init__(self, x0: float, burn_in: int = DEFAULT_BURN_IN):
        if burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not 0.0 < x0 < 1.0:
            raise ValueError("x0 must lie in (0, 1)")
        if is_degenerate(x0):
            raise ValueError(f"x0={x0} starts a degenerate orbit")
        self.x0 = float(x0)
        self.burn_in = int(burn_in)
        self.state = float(x0)
        for _ in range(burn_in):
            self.state = logistic_step(self.state)

    @classmethod
    def from_seed(cls, seed, burn_in: int = DEFAULT_BURN_IN) -> "LogisticMapStream":
        rng = np.random.default_rng(seed)
        while True:
            x0 = rng.uniform(0.0, 1.0)
            if 0.0 < x0 < 1.0 and not is_degenerate(x0):
                return cls(x0, burn_in)

    def next(self) -> float:
        self.state = logistic_step(self.state)
        return self.state

    def take(self, n: int) -> np.ndarray:
        out = np.empty(n)
        x = self.state
        for i in range(n):
            x = R * x * (1.0 - x)
            out[i] = x
        self.state = x
        return out

    def clone(self) -> "LogisticMapStream":
        other = object.__new__(LogisticMapStream)
        other.__dict__.update(self.__dict__)
        return other


def new_stream(seed, burn_in: int = DEFAULT_BURN_IN) -> LogisticMapStream:
    return LogisticMapStream.from_seed(seed, burn_in)


def generate_chaotic_params(n_inputs: int, n_hidden: int, seed, burn_in: int = DEFAULT_BURN_IN):
    """(W, b) with W of shape (n_hidden, n_inputs) filled row-major, then b."""
    if n_inputs < 1 or n_hidden < 1:
        raise ValueError("n_inputs and n_hidden must be at least 1")
    values = new_stream(seed, burn_in).take(n_hidden * n_inputs + n_hidden)
    return values[:n_hidden * n_inputs].reshape(n_hidden, n_inputs), values[n_hidden * n_inputs:]


def generate_uniform_params(n_inputs: int, n_hidden: int, seed):
    """Traditional ELM initialization: W and b uniform on (0, 1)."""
    if n_inputs < 1 or n_hidden < 1:
        raise ValueError("n_inputs and n_hidden must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, (n_hidden, n_inputs)), rng.uniform(0.0, 1.0, n_hidden)
