"""Online approximators for the pre-to-post-serving mapping.

All approximators share a small sklearn-style surface: ``fit_step(buffer)``
consumes any pairs appended since the last call, ``predict(X)`` maps
pre-serving contexts to predicted post-serving features (zeros before any
training data), and ``get_params()`` echoes the constructor arguments.

The ridge variants maintain their lifted Gram inverse incrementally, so a
fit step costs O(m^2) per new pair regardless of buffer size.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import SpdMatrix


class ReplayBuffer:
    """Append-only store of (x, y) pairs from played arms."""

    def __init__(self, dx: int, dy: int):
        self.dx = dx
        self.dy = dy
        self.xs: list[np.ndarray] = []
        self.ys: list[np.ndarray] = []

    def add(self, x: np.ndarray, y: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dx,) or y.shape != (self.dy,):
            raise ValueError("pair shape mismatch")
        self.xs.append(x)
        self.ys.append(y)

    def __len__(self) -> int:
        return len(self.xs)


class _BaseApproximator:
    def get_params(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}

    def fit_step(self, buffer: ReplayBuffer) -> None:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class RidgeApproximator(_BaseApproximator):
    """Multi-output ridge regression on the raw pre-serving features."""

    def __init__(self, dx: int, dy: int, reg: float = 1.0):
        self.dx = dx
        self.dy = dy
        self.reg = reg
        self._gram = SpdMatrix(dx, reg)
        self._xty = np.zeros((dx, dy))
        self._coef = np.zeros((dx, dy))
        self._consumed = 0

    def _lift(self, X: np.ndarray) -> np.ndarray:
        return X

    def fit_step(self, buffer: ReplayBuffer) -> None:
        if len(buffer) == 0:
            raise ValueError("fit_step requires a non-empty buffer")
        for i in range(self._consumed, len(buffer)):
            f = self._lift(buffer.xs[i][None, :])[0]
            self._gram.rank1_update(f, 1.0)
            self._xty += np.outer(f, buffer.ys[i])
        self._consumed = len(buffer)
        self._coef = self._gram.inv @ self._xty
        if not np.all(np.isfinite(self._coef)):
            raise ArithmeticError("non-finite ridge coefficients")

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._consumed == 0:
            out = np.zeros((X.shape[0], self.dy))
        else:
            out = self._lift(X) @ self._coef
        return out


class FourierRidgeApproximator(RidgeApproximator):
    """Ridge on random cosine features; covers smooth non-linear mappings.

    The lengthscale is ``bandwidth`` in units of the input scale, which is
    calibrated once from the first fitted batch (inputs here live in a box
    whose size depends on the joint rescaling, so a fixed lengthscale would
    leave the features locally linear and unable to represent curvature).
    """

    def __init__(self, dx: int, dy: int, reg: float = 1.0, num_features: int = 128,
                 bandwidth: float = 1.0, rng: np.random.Generator | None = None):
        if num_features < dx:
            raise ValueError("num_features must be >= dx")
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.num_features = num_features
        self.bandwidth = bandwidth
        self._w = rng.standard_normal((dx, num_features))
        self._b = rng.uniform(0.0, 2.0 * math.pi, size=num_features)
        self._input_scale = None  # fixed at the first fit_step
        super().__init__(dx, dy, reg)
        self._gram = SpdMatrix(num_features, reg)
        self._xty = np.zeros((num_features, dy))
        self._coef = np.zeros((num_features, dy))

    def fit_step(self, buffer: ReplayBuffer) -> None:
        if self._input_scale is None and len(buffer) > 0:
            # lengthscale ~ 2x the typical input norm keeps the cosine
            # features smooth across the sampling box
            rms = float(np.sqrt(np.mean(np.sum(np.square(buffer.xs), axis=1))))
            self._input_scale = 2.0 * rms if rms > 0 else 1.0
        super().fit_step(buffer)

    def _lift(self, X: np.ndarray) -> np.ndarray:
        scale = self._input_scale if self._input_scale is not None else 1.0
        proj = X @ (self._w / (self.bandwidth * scale))
        return math.sqrt(2.0 / self.num_features) * np.cos(proj + self._b)


class MlpApproximator(_BaseApproximator):
    """Two-hidden-layer ReLU network trained with adaptive-moment updates.

    Full-buffer squared-error passes, a configurable number of epochs per
    fit step.  Kept dependency-free; the workloads here are tiny.
    """

    def __init__(self, dx: int, dy: int, hidden: tuple[int, int] = (64, 64),
                 lr: float = 1e-3, epochs_per_round: int = 2,
                 rng: np.random.Generator | None = None):
        if lr <= 0:
            raise ValueError("lr must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dx = dx
        self.dy = dy
        self.hidden = hidden
        self.lr = lr
        self.epochs_per_round = epochs_per_round
        h1, h2 = hidden
        def init(n_in, n_out):
            return rng.standard_normal((n_in, n_out)) * math.sqrt(2.0 / n_in)
        self._params = {
            "w1": init(dx, h1), "b1": np.zeros(h1),
            "w2": init(h1, h2), "b2": np.zeros(h2),
            "w3": init(h2, dy), "b3": np.zeros(dy),
        }
        self._m = {k: np.zeros_like(v) for k, v in self._params.items()}
        self._v = {k: np.zeros_like(v) for k, v in self._params.items()}
        self._step = 0
        self._trained = False

    def _forward(self, X):
        p = self._params
        a1 = np.maximum(X @ p["w1"] + p["b1"], 0.0)
        a2 = np.maximum(a1 @ p["w2"] + p["b2"], 0.0)
        out = a2 @ p["w3"] + p["b3"]
        return a1, a2, out

    def fit_step(self, buffer: ReplayBuffer) -> None:
        if len(buffer) == 0:
            raise ValueError("fit_step requires a non-empty buffer")
        X = np.asarray(buffer.xs)
        Y = np.asarray(buffer.ys)
        n = len(buffer)
        p = self._params
        for _ in range(self.epochs_per_round):
            a1, a2, out = self._forward(X)
            delta3 = 2.0 * (out - Y) / n
            grads = {
                "w3": a2.T @ delta3, "b3": delta3.sum(axis=0),
            }
            delta2 = (delta3 @ p["w3"].T) * (a2 > 0)
            grads["w2"] = a1.T @ delta2
            grads["b2"] = delta2.sum(axis=0)
            delta1 = (delta2 @ p["w2"].T) * (a1 > 0)
            grads["w1"] = X.T @ delta1
            grads["b1"] = delta1.sum(axis=0)
            self._adam(grads)
        self._trained = True
        for v in p.values():
            if not np.all(np.isfinite(v)):
                raise ArithmeticError("non-finite network parameters")

    def _adam(self, grads, beta1=0.9, beta2=0.999, eps=1e-8):
        self._step += 1
        t = self._step
        for k, g in grads.items():
            self._m[k] = beta1 * self._m[k] + (1 - beta1) * g
            self._v[k] = beta2 * self._v[k] + (1 - beta2) * g * g
            mhat = self._m[k] / (1 - beta1**t)
            vhat = self._v[k] / (1 - beta2**t)
            self._params[k] -= self.lr * mhat / (np.sqrt(vhat) + eps)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self._trained:
            return np.zeros((X.shape[0], self.dy))
        return self._forward(X)[2]


def sup_error(approx, truth, grid: np.ndarray) -> float:
    """Max over the grid of the L2 prediction error against ``truth``."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("grid must be non-empty")
    pred = approx.predict(grid)
    target = np.atleast_2d(truth(grid))
    return float(np.max(np.linalg.norm(pred - target, axis=1)))


def make_approximator(kind: str, dx: int, dy: int, reg: float = 1.0,
                      rng: np.random.Generator | None = None, **kwargs):
    if kind == "ridge":
        return RidgeApproximator(dx, dy, reg=reg)
    if kind == "fourier_ridge":
        return FourierRidgeApproximator(dx, dy, reg=reg, rng=rng, **kwargs)
    if kind == "mlp":
        return MlpApproximator(dx, dy, rng=rng, **kwargs)
    raise ValueError(f"unknown approximator kind {kind!r}")
