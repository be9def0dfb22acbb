"""Lower-bound stress instances: starvation on the ball, fixed delay on the cube.

Both constructions draw a sign-pattern parameter and starve the learner of
feedback for a blind phase; during that phase any feedback-driven policy earns
the prior-mean regret per round (2 * optimal utility in expectation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import starvation_horizon
from .environment import logistic


@dataclass
class HardInstance:
    kind: str                 # adv_delay_ball | stoch_delay_cube
    d: int
    gap: float
    theta_star: np.ndarray
    actions: np.ndarray       # (n_actions, d), random support for policies
    optimal_action: np.ndarray
    optimal_utility: float
    link: str = "logistic"    # logistic | piecewise_linear
    link_kappa: float = 1.0

    def utility(self, a: np.ndarray) -> float:
        return float(self.theta_star @ a)

    def preference_prob(self, a: np.ndarray, b: np.ndarray) -> float:
        m = self.utility(a) - self.utility(b)
        if self.link == "logistic":
            return float(logistic(m))
        return min(1.0, max(0.0, 0.5 + self.link_kappa * m))


def build_instance(kind: str, d: int, rng: np.random.Generator,
                   n_directions: int = 64, link: str = "logistic",
                   link_kappa: float = 1.0) -> HardInstance:
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind == "adv_delay_ball":
        gap = 1.0 / 8.0
        signs = rng.choice([-1.0, 1.0], size=d)
        theta = gap * signs
        opt = signs / math.sqrt(d)
        u_star = math.sqrt(d) * gap
        dirs = rng.standard_normal((n_directions, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        actions = np.vstack([opt, dirs])
    elif kind == "stoch_delay_cube":
        gap = 1.0 / 4.0
        signs = rng.choice([-1.0, 1.0], size=d)
        theta = gap * signs
        opt = signs.copy()
        u_star = d * gap
        if d <= 10:
            verts = np.array(np.meshgrid(*([[-1.0, 1.0]] * d))).T.reshape(-1, d)
        else:
            verts = rng.choice([-1.0, 1.0], size=(n_directions, d))
        actions = np.vstack([opt, verts])
    else:
        raise ValueError(f"unknown hard instance kind {kind!r}")
    return HardInstance(kind=kind, d=d, gap=gap, theta_star=theta, actions=actions,
                        optimal_action=opt, optimal_utility=u_star,
                        link=link, link_kappa=link_kappa)


def blind_phase_length(inst: HardInstance, budget: float) -> int:
    """Rounds with no feedback: starvation horizon (ball) or fixed delay (cube)."""
    if inst.kind == "adv_delay_ball":
        return starvation_horizon(int(budget))
    return int(budget)


def uniform_random_policy(inst: HardInstance, rng: np.random.Generator):
    """Picks duels uniformly from the random support (the optimum excluded)."""
    support = inst.actions[1:]

    def pick(_t: int) -> tuple[np.ndarray, np.ndarray]:
        i, j = rng.integers(0, len(support), size=2)
        return support[i], support[j]

    return pick


def blind_phase_regret(policy, inst: HardInstance, budget: float) -> float:
    """Cumulative dueling regret 2u* - u(a_t) - u(b_t) over the blind phase."""
    m = blind_phase_length(inst, budget)
    total = 0.0
    for t in range(1, m + 1):
        a, b = policy(t)
        total += 2.0 * inst.optimal_utility - inst.utility(a) - inst.utility(b)
    return total
