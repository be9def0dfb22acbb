"""Arm-selection strategies over a shared policy interface.

Every policy owns a :class:`PreferenceEstimator` in its own feature space and
exposes ``select`` (pick a duel from the K candidate feature rows), plus the
estimator hooks the harness drives (``observe_selection``, ``on_arrival``).
Ties break toward the lowest arm index everywhere, which keeps traces
reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import PreferenceEstimator


@dataclass
class DuelChoice:
    a: int
    b: int
    dz_hat: np.ndarray
    dz_obs: np.ndarray | None = None


def instantaneous_regret(theta_star: np.ndarray, z_star: np.ndarray,
                         a: int, b: int) -> float:
    """Half the summed utility gaps of both played arms on noise-free features."""
    u = np.asarray(z_star) @ np.asarray(theta_star)
    best = float(np.max(u))
    r = 0.5 * ((best - float(u[a])) + (best - float(u[b])))
    return max(r, 0.0)


class BasePolicy:
    name = "base"
    weighted = False        # adaptive leverage weights on updates
    phantom = False         # design matrix grows at selection time
    uses_delay_budget = False  # alpha tuned on C + D rather than C alone

    def __init__(self, d: int, lam: float = 1.0, kappa: float = 0.1966,
                 delta: float = 0.05, m_bound: float = 1.0,
                 c_budget: float = 0.0, d_budget: float = 0.0,
                 exploration_mult: float = 1.0, alpha_override: float | None = None,
                 uses_postserving: bool = True,
                 rng: np.random.Generator | None = None):
        self.d = d
        self.exploration_mult = float(exploration_mult)
        if self.exploration_mult <= 0:
            raise ValueError("exploration_mult must be positive")
        self.uses_postserving = uses_postserving
        self.rng = rng if rng is not None else np.random.default_rng(0)
        alpha = self._tuned_alpha(d, c_budget, d_budget) if alpha_override is None \
            else float(alpha_override)
        eff_c = c_budget if self.weighted else 0.0
        eff_d = d_budget if (self.weighted and self.uses_delay_budget) else 0.0
        self.est = PreferenceEstimator(
            d, lam=lam, kappa=kappa, alpha=alpha, delta=delta, m_bound=m_bound,
            c_budget=eff_c, d_budget=eff_d, phantom=self.phantom)

    def _tuned_alpha(self, d: int, c_budget: float, d_budget: float) -> float:
        if not self.weighted:
            return math.inf
        total = c_budget + (d_budget if self.uses_delay_budget else 0.0)
        return math.sqrt(d) / total if total > 0 else math.inf

    # harness hooks -----------------------------------------------------
    def observe_selection(self, t: int, dz_obs: np.ndarray) -> float:
        return self.est.observe_selection(t, dz_obs)

    def on_arrival(self, s: int, outcome: int) -> None:
        rec = self.est.arrival_update(s, outcome)
        self.est.streaming_step(rec)

    def width(self, t: int) -> float:
        """Exploration width c_t = 2 * beta_t, scaled by the override knob."""
        return 2.0 * self.est.radius(t) * self.exploration_mult

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        raise NotImplementedError

    # shared helpers ----------------------------------------------------
    def _pairwise_dist(self, Z: np.ndarray) -> np.ndarray:
        """K x K matrix of ||z_a - z_b||_{V^-1}."""
        G = Z @ self.est.V.inv @ Z.T
        diag = np.diag(G)
        sq = diag[:, None] + diag[None, :] - 2.0 * G
        return np.sqrt(np.maximum(sq, 0.0))

    def _sum_pair_argmax(self, Z: np.ndarray, beta: float) -> tuple[int, int]:
        """argmax over ordered pairs of (u_a + u_b) + beta * ||z_a - z_b||_{V^-1}."""
        u = Z @ self.est.theta
        score = u[:, None] + u[None, :] + beta * self._pairwise_dist(Z)
        flat = int(np.argmax(score))  # row-major: lowest (a, b) wins ties
        k = Z.shape[0]
        return flat // k, flat % k


class RcdpUcb(BasePolicy):
    """Greedy champion plus optimism-in-V challenger, unified C + D weighting."""

    name = "rcdp_ucb"
    weighted = True
    phantom = True
    uses_delay_budget = True

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        u = Z @ self.est.theta
        a = int(np.argmax(u))
        bonus = self.width(t) * self.est.V.mahalanobis_inv_rows(Z - Z[a])
        b = int(np.argmax(u + bonus))
        return DuelChoice(a=a, b=b, dz_hat=Z[a] - Z[b])


class Rcdb(BasePolicy):
    """Sum-utility pair UCB with corruption-only uncertainty weighting."""

    name = "rcdb"
    weighted = True
    phantom = False
    uses_delay_budget = False

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        beta = self.est.radius(t) * self.exploration_mult
        a, b = self._sum_pair_argmax(Z, beta)
        return DuelChoice(a=a, b=b, dz_hat=Z[a] - Z[b])


class Colstim(BasePolicy):
    """Gumbel-perturbed champion, toughest-competitor challenger."""

    name = "colstim"

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        u = Z @ self.est.theta
        widths = self.est.V.mahalanobis_inv_rows(Z)
        gumbel = self.rng.gumbel(0.0, 1.0, size=Z.shape[0])
        a = int(np.argmax(u + gumbel * widths))
        diff = Z - Z[a]
        score = diff @ self.est.theta + self.width(t) * self.est.V.mahalanobis_inv_rows(diff)
        b = int(np.argmax(score))
        return DuelChoice(a=a, b=b, dz_hat=Z[a] - Z[b])


class MaxInP(BasePolicy):
    """Max-variance duel within the set of plausibly-best arms."""

    name = "maxinp"

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        u = Z @ self.est.theta
        k_hat = int(np.argmax(u))
        beta = self.est.radius(t) * self.exploration_mult
        ucb = u + beta * self.est.V.mahalanobis_inv_rows(Z - Z[k_hat])
        promising = np.flatnonzero(ucb >= u[k_hat])
        if len(promising) == 1:
            k = int(promising[0])
            return DuelChoice(a=k, b=k, dz_hat=np.zeros(self.d))
        sub = self._pairwise_dist(Z[promising])
        flat = int(np.argmax(sub))
        a = int(promising[flat // len(promising)])
        b = int(promising[flat % len(promising)])
        return DuelChoice(a=a, b=b, dz_hat=Z[a] - Z[b])


class MaxPairUcb(BasePolicy):
    """Sum-utility pair UCB on the unweighted estimator."""

    name = "maxpair_ucb"

    def select(self, Z: np.ndarray, t: int) -> DuelChoice:
        beta = self.est.radius(t) * self.exploration_mult
        a, b = self._sum_pair_argmax(Z, beta)
        return DuelChoice(a=a, b=b, dz_hat=Z[a] - Z[b])


POLICY_CLASSES = {cls.name: cls for cls in (RcdpUcb, Rcdb, Colstim, MaxInP, MaxPairUcb)}


def make_policy(name: str, **kwargs) -> BasePolicy:
    try:
        cls = POLICY_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICY_CLASSES)}")
    return cls(**kwargs)
