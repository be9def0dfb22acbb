"""Synthetic dueling-bandit environment.

Generates per-round pre-serving contexts, latent post-serving features
through one of four mappings, ground-truth utilities, and binary preference
outcomes through the logistic (Bradley-Terry) link.

Joint features are rescaled by a single deterministic factor per config so
that every noise-free joint vector satisfies ``||z||_2 <= 1/2``.  The scale
is computed from the analytic supremum of the mapping over the sampling box,
not per sample, so the pre-to-post mapping stays learnable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAPPINGS = ("linear", "polynomial", "sinusoidal", "absolute")

JOINT_RADIUS = 0.5


def logistic(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def logistic_slope(x):
    g = logistic(x)
    return g * (1.0 - g)


@dataclass
class EnvConfig:
    dx: int = 10
    dy: int = 0
    K: int = 10
    T: int = 2000
    mapping: str = "linear"
    noise_std: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if min(self.dx, self.K, self.T) < 1:
            raise ValueError("dx, K, T must all be >= 1")
        if self.dy < 0:
            raise ValueError("dy must be >= 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.mapping not in MAPPINGS:
            raise ValueError(f"mapping must be one of {MAPPINGS}")
        implied = implied_dy(self.mapping, self.dx)
        if self.dy == 0:
            return
        if self.mapping == "linear":
            return  # any dy works for a linear map
        if self.dy != implied:
            raise ValueError(
                f"mapping {self.mapping!r} with dx={self.dx} produces dy={implied}, got dy={self.dy}"
            )

    @property
    def d(self) -> int:
        return self.dx + self.dy


def implied_dy(mapping: str, dx: int) -> int:
    if mapping == "absolute":
        return dx
    if mapping in ("polynomial", "sinusoidal"):
        return 2 * dx
    return dx  # linear default


@dataclass
class ThetaStar:
    vec: np.ndarray


@dataclass
class RoundContexts:
    pre: np.ndarray          # (K, dx) scaled pre-serving contexts
    post_true: np.ndarray    # (K, dy) scaled noise-free post-serving features
    post_observed: np.ndarray  # (K, dy) post_true + Gaussian noise


class Environment:
    """Owns the mapping parameters and the joint rescaling factor."""

    def __init__(self, cfg: EnvConfig, rng: np.random.Generator):
        self.cfg = cfg
        self._phi_matrix = None
        if cfg.mapping == "linear" and cfg.dy > 0:
            # fixed linear map, normalized to unit spectral norm
            m = rng.standard_normal((cfg.dx, cfg.dy))
            m /= np.linalg.norm(m, 2)
            self._phi_matrix = m
        self.scale = JOINT_RADIUS / self._sup_joint_norm()

    def _sup_joint_norm(self) -> float:
        dx = self.cfg.dx
        pre_sq = math.pi**2 * dx
        if self.cfg.dy == 0:
            return math.sqrt(pre_sq)
        m = self.cfg.mapping
        if m == "absolute":
            return math.sqrt(2 * pre_sq)
        if m == "sinusoidal":
            return math.sqrt(pre_sq + dx)
        if m == "polynomial":
            # per coordinate: x^2 + x^4 + |x| at |x| <= pi
            return math.sqrt(dx * (math.pi**2 + math.pi**4 + math.pi))
        # linear with unit spectral norm
        return math.sqrt(2 * pre_sq)

    def map_post(self, x_raw: np.ndarray) -> np.ndarray:
        """Evaluate the ground-truth mapping on raw (unscaled) contexts."""
        if self.cfg.dy == 0:
            return np.zeros(x_raw.shape[:-1] + (0,))
        m = self.cfg.mapping
        if m == "absolute":
            return np.abs(x_raw)
        if m == "polynomial":
            return np.concatenate([x_raw**2, np.sqrt(np.abs(x_raw))], axis=-1)
        if m == "sinusoidal":
            return np.concatenate([np.cos(x_raw), np.sin(x_raw)], axis=-1)
        return x_raw @ self._phi_matrix

    def true_mapping_scaled(self, x_scaled: np.ndarray) -> np.ndarray:
        """Mapping as seen by the learner: scaled pre-context to scaled post-context."""
        return self.scale * self.map_post(x_scaled / self.scale)

    def sample_round(self, t: int, rng: np.random.Generator) -> RoundContexts:
        cfg = self.cfg
        if not (1 <= t <= cfg.T):
            raise ValueError(f"round {t} outside horizon 1..{cfg.T}")
        x_raw = rng.uniform(-math.pi, math.pi, size=(cfg.K, cfg.dx))
        post_raw = self.map_post(x_raw)
        pre = self.scale * x_raw
        post_true = self.scale * post_raw
        if cfg.dy > 0 and cfg.noise_std > 0:
            noise = rng.normal(0.0, cfg.noise_std, size=post_true.shape)
        else:
            noise = np.zeros_like(post_true)
        return RoundContexts(pre=pre, post_true=post_true, post_observed=post_true + noise)


def make_theta_star(cfg: EnvConfig, rng: np.random.Generator) -> ThetaStar:
    """Standard-normal direction, normalized to unit length."""
    v = rng.standard_normal(cfg.d)
    v /= np.linalg.norm(v)
    return ThetaStar(vec=v)


def utility(theta: ThetaStar, z: np.ndarray) -> float:
    z = np.asarray(z, dtype=float)
    if z.shape != theta.vec.shape:
        raise ValueError(f"dimension mismatch: theta {theta.vec.shape} vs z {z.shape}")
    return float(theta.vec @ z)


def sample_preference(theta: ThetaStar, za: np.ndarray, zb: np.ndarray,
                      rng: np.random.Generator) -> int:
    """Returns 1 with probability g(<theta, za - zb>)."""
    margin = utility(theta, np.asarray(za) - np.asarray(zb))
    return int(rng.random() < logistic(margin))


def kappa_floor(m_bound: float, dz_bound: float = 1.0) -> float:
    """Analytic lower bound on the logistic slope over reachable margins."""
    return float(logistic_slope(m_bound * dz_bound))
