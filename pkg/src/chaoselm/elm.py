"""Plaintext extreme learning machine for a single binary output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMOID_COEFFS = (0.5, 0.197, 0.0, -0.004)  # constant, x, x^2, x^3
POLY_RANGE = 5.0

ACTIVATIONS = ("exact_sigmoid", "poly_sigmoid")
OUTPUT_MODES = ("linear", "extra_sigmoid")


def exact_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # Split by sign so large |x| never overflows exp.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def poly_sigmoid(x):
    """Cubic least-squares fit of the sigmoid, accurate on [-5, 5]."""
    x = np.asarray(x, dtype=np.float64)
    c0, c1, _, c3 = SIGMOID_COEFFS
    out = c0 + c1 * x + c3 * x ** 3
    return out if out.ndim else float(out)


def activation_fn(name: str):
    if name == "exact_sigmoid":
        return exact_sigmoid
    if name == "poly_sigmoid":
        return poly_sigmoid
    raise ValueError(f"unknown activation {name!r}")


def pre_activation(X, W, b) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    if X.shape[1] != W.shape[1]:
        raise ValueError(f"X has {X.shape[1]} columns, W expects {W.shape[1]}")
    if b.shape[0] != W.shape[0]:
        raise ValueError("bias length must equal the number of hidden nodes")
    return X @ W.T + b


def hidden_matrix(X, W, b, activation: str = "exact_sigmoid") -> np.ndarray:
    """H[j, i] = g(w_i . x_j + b_i), shape (samples, hidden nodes)."""
    return activation_fn(activation)(pre_activation(X, W, b))


def moore_penrose(H) -> np.ndarray:
    """Pseudoinverse by SVD, dropping singular values below eps * max(N, Ñ) * s_max."""
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    if not np.all(np.isfinite(H)):
        raise ValueError("H must be finite")
    n, m = H.shape
    if H.size == 0:
        return np.zeros((m, n))
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m, n))
    cutoff = np.finfo(np.float64).eps * max(n, m) * s[0]
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T


def solve_beta(H, T) -> np.ndarray:
    return moore_penrose(H) @ np.asarray(T, dtype=np.float64).ravel()


@dataclass
class ElmModel:
    weights_in: np.ndarray
    biases: np.ndarray
    beta: np.ndarray | None = None
    activation: str = "exact_sigmoid"
    init_kind: str = "chaotic"

    def __post_init__(self):
        self.weights_in = np.atleast_2d(np.asarray(self.weights_in, dtype=np.float64))
        self.biases = np.asarray(self.biases, dtype=np.float64).ravel()
        if self.weights_in.shape[0] != self.biases.shape[0]:
            raise ValueError("weights_in rows must equal biases length")
        if self.beta is not None:
            self.beta = np.asarray(self.beta, dtype=np.float64).ravel()
            if self.beta.shape[0] != self.n_hidden:
                raise ValueError("beta length must equal the number of hidden nodes")
        activation_fn(self.activation)

    @property
    def n_hidden(self) -> int:
        return self.weights_in.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.weights_in.shape[1]

    def hidden(self, X) -> np.ndarray:
        return hidden_matrix(X, self.weights_in, self.biases, self.activation)


def fit(X, T, W, b, activation: str = "exact_sigmoid", init_kind: str = "chaotic") -> ElmModel:
    """Least-norm least-squares output weights for fixed (W, b)."""
    model = ElmModel(W, b, None, activation, init_kind)
    T = np.asarray(T, dtype=np.float64).ravel()
    H = model.hidden(X)
    if H.shape[0] != T.shape[0]:
        raise ValueError("X and T have different sample counts")
    beta = solve_beta(H, T)
    if not np.all(np.isfinite(beta)):
        raise FloatingPointError("solve produced a non-finite beta")
    model.beta = beta
    return model


def predict_scores(X, model: ElmModel) -> np.ndarray:
    if model.beta is None:
        raise ValueError("model is not fitted")
    return model.hidden(X) @ model.beta


def classify(scores, mode: str = "linear") -> np.ndarray:
    """Labels in {0, 1}; ties at the threshold go to class 0."""
    scores = np.asarray(scores, dtype=np.float64)
    if mode == "linear":
        return (scores > 0.5).astype(np.int64)
    if mode in ("extra_sigmoid", "sigmoid"):
        # sigmoid(s) > 0.5 iff s > 0; thresholding the sign avoids rounding to 0.5 near zero
        return (scores > 0).astype(np.int64)
    raise ValueError(f"unknown output mode {mode!r}")


def accuracy(predicted, actual) -> float:
    predicted = np.asarray(predicted).ravel()
    actual = np.asarray(actual).ravel()
    if predicted.shape != actual.shape:
        raise ValueError("length mismatch")
    if predicted.size == 0:
        raise ValueError("empty label vectors")
    return float(np.mean(predicted == actual))
