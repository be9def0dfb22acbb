"""Weighted regularized preference MLE with dual design matrices.

Maintains two regularized Gram matrices over played feature differences:

* ``V`` grows at selection time with every weighted duel ("phantom" update),
  and anchors both the adaptive leverage weights and the exploration bonus.
* ``W`` grows only when a duel's outcome actually arrives, and preconditions
  the parameter updates.

Policies that predate the phantom-update idea set ``phantom=False``, in which
case both matrices grow together on arrival and coincide forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import logistic, logistic_slope
from .linalg import SpdMatrix


class NewtonDivergenceError(ArithmeticError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Newton failed to reach tolerance after {iterations} iterations "
                         f"(residual {residual:.3e})")
        self.residual = residual


@dataclass
class FeedbackRecord:
    round: int
    dz: np.ndarray
    weight: float
    outcome: int | None = None
    arrived: bool = False


def confidence_radius(t: int, d: int, lam: float, delta: float, m_bound: float,
                      alpha: float, c_budget: float, d_budget: float) -> float:
    """Exploration radius: statistical width plus corruption and delay bias."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    stat = 0.5 * math.sqrt(d * math.log((1.0 + t / (d * lam)) / delta))
    return stat + math.sqrt(lam) * m_bound + alpha * (c_budget + d_budget)


class PreferenceEstimator:
    def __init__(self, d: int, lam: float = 1.0, kappa: float = 0.1966,
                 alpha: float = math.inf, delta: float = 0.05, m_bound: float = 1.0,
                 c_budget: float = 0.0, d_budget: float = 0.0, phantom: bool = True):
        if lam <= 0 or kappa <= 0:
            raise ValueError("lam and kappa must be positive")
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.d = d
        self.lam = lam
        self.kappa = kappa
        self.alpha = alpha
        self.delta = delta
        self.m_bound = m_bound
        self.c_budget = c_budget
        self.d_budget = d_budget
        self.phantom = phantom
        self.theta = np.zeros(d)
        self.V = SpdMatrix(d, lam)
        self.W = SpdMatrix(d, lam)
        self.records: dict[int, FeedbackRecord] = {}

    def compute_weight(self, dz: np.ndarray) -> float:
        """min(1, alpha / ||dz||_{V^-1}); 1 for the zero direction."""
        norm = self.V.mahalanobis_inv(dz)
        if norm == 0.0 or not math.isfinite(self.alpha):
            return 1.0
        return min(1.0, self.alpha / norm)

    def observe_selection(self, t: int, dz: np.ndarray) -> float:
        """Record a played duel; phantom-update V immediately if enabled."""
        dz = np.asarray(dz, dtype=float)
        w = self.compute_weight(dz)
        if self.phantom:
            self.V.rank1_update(dz, self.kappa * w)
        self.records[t] = FeedbackRecord(round=t, dz=dz, weight=w)
        return w

    def arrival_update(self, s: int, outcome: int) -> FeedbackRecord:
        rec = self.records[s]
        if rec.arrived:
            raise ValueError(f"round {s} outcome arrived twice")
        if not self.phantom:
            # weight and both matrices are determined at arrival time
            rec.weight = self.compute_weight(rec.dz)
            self.V.rank1_update(rec.dz, self.kappa * rec.weight)
        rec.outcome = int(outcome)
        rec.arrived = True
        self.W.rank1_update(rec.dz, self.kappa * rec.weight)
        return rec

    def streaming_step(self, rec: FeedbackRecord) -> None:
        """One preconditioned weighted gradient step per arrived outcome."""
        residual = rec.outcome - float(logistic(self.theta @ rec.dz))
        self.theta = self.theta + self.W.inv @ (rec.weight * residual * rec.dz)

    def solve_newton(self, max_iter: int = 100, tol: float = 1e-8) -> np.ndarray:
        """Damped Newton on the weighted regularized negative log-likelihood.

        Converges when the estimating-equation residual drops below ``tol``;
        with no arrived feedback the regularizer alone gives theta = 0.
        """
        arrived = [r for r in self.records.values() if r.arrived]
        if not arrived:
            self.theta = np.zeros(self.d)
            return self.theta
        dZ = np.asarray([r.dz for r in arrived])
        w = np.asarray([r.weight for r in arrived])
        o = np.asarray([r.outcome for r in arrived], dtype=float)
        theta = self.theta.copy()

        def grad(th):
            m = dZ @ th
            return self.lam * th + dZ.T @ (w * (logistic(m) - o))

        def objective(th):
            m = dZ @ th
            # -log g((-1)^{1-o} m) written with log1p for stability
            nll = np.log1p(np.exp(-np.where(o == 1, m, -m)))
            return 0.5 * self.lam * float(th @ th) + float(w @ nll)

        g = grad(theta)
        for _ in range(max_iter):
            if np.linalg.norm(g) <= tol:
                self.theta = theta
                return theta
            m = dZ @ theta
            h = self.lam * np.eye(self.d) + (dZ * (w * logistic_slope(m))[:, None]).T @ dZ
            step = np.linalg.solve(h, g)
            # backtracking line search far from the optimum; near it the
            # objective decrease underflows double precision, so take the
            # pure Newton step there (quadratic convergence regime)
            scale = 1.0
            if np.linalg.norm(g) > 1e-4:
                f0 = objective(theta)
                for _ in range(50):
                    cand = theta - scale * step
                    if objective(cand) <= f0 - 1e-4 * scale * float(g @ step):
                        break
                    scale *= 0.5
                else:
                    scale = 1.0
            theta = theta - scale * step
            g = grad(theta)
        if np.linalg.norm(g) <= tol:
            self.theta = theta
            return theta
        raise NewtonDivergenceError(float(np.linalg.norm(g)), max_iter)

    def radius(self, t: int) -> float:
        alpha = 0.0 if not math.isfinite(self.alpha) else self.alpha
        return confidence_radius(t, self.d, self.lam, self.delta, self.m_bound,
                                 alpha, self.c_budget, self.d_budget)

    def min_eig_v_minus_w(self) -> float:
        return float(np.linalg.eigvalsh(self.V.mat - self.W.mat)[0])
