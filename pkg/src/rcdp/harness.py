"""Experiment orchestration: config ingestion, seeded runs, traces, summaries.

One run = (policy, seed).  Each run draws from four named RNG streams so
environment draws are identical across policies for a given seed.  Traces are
CSV (one file per run) plus a JSON manifest with the config echo and the
budget totals; all invariants are asserted in-loop and re-checked from the
persisted files by :func:`check_dir`.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from . import rng as rngmod
from .adversary import CorruptionPolicy, DelayPolicy, FeedbackQueue
from .approximator import ReplayBuffer, make_approximator
from .environment import (EnvConfig, Environment, implied_dy, kappa_floor,
                          make_theta_star, sample_preference, utility)
from .policies import POLICY_CLASSES, instantaneous_regret, make_policy

TRACE_HEADER = ["t", "policy", "r_inst", "cum_regret", "omega", "dz_norm",
                "arrivals", "d_pending"]

DEFAULT_POLICIES = ["rcdp_ucb", "rcdb", "colstim", "maxinp", "maxpair_ucb"]

SWEEPABLE = ("dx", "dy", "K", "mapping", "corruption", "delay_budget",
             "delay_mean", "delay_std")

# Baselines run at their theoretical exploration widths.  The weighted
# phantom policy's width constant is only order-accurate, so its default
# multiplier is calibrated empirically (lowest mean final regret across the
# mapping x delay-regime grid at desk scale, 10 seeds per cell).
DEFAULT_C_MULT = {"rcdp_ucb": 0.02}


class InvariantViolation(AssertionError):
    def __init__(self, invariant: str, round_idx: int, detail: str = ""):
        msg = f"invariant '{invariant}' violated at round {round_idx}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.invariant = invariant
        self.round = round_idx


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    T: int = 2000
    dx: int = 10
    dy: int = 0
    K: int = 10
    mapping: str = "linear"
    noise_std: float = 0.01
    corruption: int = 25
    corruption_strategy: str = "flip_first"
    delay_regime: str = "none"  # none | stochastic | strategic
    delay_budget: int = 0
    delay_mean: float = 0.0
    delay_std: float = 0.0
    policies: list = field(default_factory=lambda: list(DEFAULT_POLICIES))
    runs: int = 10
    seed0: int = 0
    baselines_learn_mapping: bool = True
    approximator: str = "fourier_ridge"
    mle_mode: str = "streaming"  # streaming | newton
    lam: float = 1.0
    kappa: float | None = None  # None -> analytic logistic-slope floor
    delta: float = 0.05
    m_bound: float = 1.0
    c_mult: float | dict | None = None  # scalar, {policy: mult}, or per-policy default
    alpha_override: float | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.mle_mode not in ("streaming", "newton"):
            raise ValueError("mle_mode must be 'streaming' or 'newton'")
        for p in self.policies:
            if p not in POLICY_CLASSES:
                raise ValueError(f"unknown policy {p!r}")
        if isinstance(self.c_mult, dict):
            for p in self.c_mult:
                if p not in POLICY_CLASSES:
                    raise ValueError(f"c_mult names unknown policy {p!r}")
        if self.dy == -1:  # 'auto' marker
            self.dy = implied_dy(self.mapping, self.dx)

    @property
    def d(self) -> int:
        return self.dx + self.dy

    def delay_complexity(self) -> float:
        if self.delay_regime == "strategic":
            return math.sqrt(self.delay_budget)
        if self.delay_regime == "stochastic":
            return float(self.delay_mean)
        return 0.0

    def effective_kappa(self) -> float:
        return self.kappa if self.kappa is not None else kappa_floor(self.m_bound)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    if raw.get("dy") == "auto":
        raw["dy"] = -1
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a flat key-value mapping")
    return config_from_dict(raw)


def expand_sweep(raw: dict) -> list[dict]:
    """Expand list-valued sweepable keys into a cartesian config matrix."""
    axes = [(k, raw[k]) for k in SWEEPABLE if isinstance(raw.get(k), list)]
    if not axes:
        return [dict(raw)]
    out = []
    base_name = raw.get("name", "experiment")
    for combo in itertools.product(*(vals for _, vals in axes)):
        cfg = dict(raw)
        suffix = []
        for (key, _), val in zip(axes, combo):
            cfg[key] = val
            suffix.append(f"{key}{val}")
        cfg["name"] = base_name + "_" + "_".join(suffix)
        out.append(cfg)
    return out


@dataclass
class RunTrace:
    policy: str
    seed: int
    rows: list  # per TRACE_HEADER, minus the policy column stored once
    totals: dict


def _width_mult(c_mult, name: str) -> float:
    if isinstance(c_mult, dict):
        c_mult = c_mult.get(name)
    return c_mult if c_mult is not None else DEFAULT_C_MULT.get(name, 1.0)


def _build_policy(cfg: ExperimentConfig, name: str, seed: int):
    cls = POLICY_CLASSES[name]
    uses_post = cfg.dy > 0 and (name == "rcdp_ucb" or cfg.baselines_learn_mapping)
    d = cfg.d if uses_post else cfg.dx
    return cls(
        d=d, lam=cfg.lam, kappa=cfg.effective_kappa(), delta=cfg.delta,
        m_bound=cfg.m_bound, c_budget=float(cfg.corruption),
        d_budget=cfg.delay_complexity(),
        exploration_mult=_width_mult(cfg.c_mult, name),
        alpha_override=cfg.alpha_override, uses_postserving=uses_post,
        rng=rngmod.stream("policy", seed, salt=name))


def run_single(cfg: ExperimentConfig, policy_name: str, seed: int) -> RunTrace:
    t0 = time.perf_counter()
    env_cfg = EnvConfig(dx=cfg.dx, dy=cfg.dy, K=cfg.K, T=cfg.T, mapping=cfg.mapping,
                        noise_std=cfg.noise_std, seed=seed)
    rng_env = rngmod.stream("env", seed)
    rng_adv = rngmod.stream("adversary", seed)
    env = Environment(env_cfg, rng_env)
    theta_star = make_theta_star(env_cfg, rng_env)
    corruptor = CorruptionPolicy(budget=cfg.corruption, strategy=cfg.corruption_strategy)
    delayer = DelayPolicy(regime=cfg.delay_regime, mu=cfg.delay_mean,
                          sigma=cfg.delay_std, budget=cfg.delay_budget)
    queue = FeedbackQueue()
    policy = _build_policy(cfg, policy_name, seed)

    approx = None
    buffer = None
    if policy.uses_postserving:
        approx = make_approximator(cfg.approximator, cfg.dx, cfg.dy, reg=cfg.lam,
                                   rng=rngmod.stream("approximator", seed, salt=policy_name))
        buffer = ReplayBuffer(cfg.dx, cfg.dy)

    d_bound = math.sqrt(2.0 * cfg.delay_budget) if cfg.delay_regime == "strategic" else None
    alpha = policy.est.alpha
    kappa = cfg.effective_kappa()
    ep_sum = 0.0
    cum = 0.0
    rows = []

    for t in range(1, cfg.T + 1):
        ctx = env.sample_round(t, rng_env)
        if policy.uses_postserving:
            z_sel = np.hstack([ctx.pre, approx.predict(ctx.pre)])
        else:
            z_sel = ctx.pre
        choice = policy.select(z_sel, t)
        a, b = choice.a, choice.b

        z_obs = np.hstack([ctx.pre, ctx.post_observed]) if cfg.dy > 0 else ctx.pre
        dz_obs_full = z_obs[a] - z_obs[b]
        dz_obs = dz_obs_full if policy.uses_postserving or cfg.dy == 0 \
            else ctx.pre[a] - ctx.pre[b]

        margin = float(theta_star.vec @ dz_obs_full)
        l_true = sample_preference(theta_star, z_obs[a], z_obs[b], rng_env)
        observed = corruptor.corrupt(t, l_true, margin=margin)
        # prioritized interference: falsified feedback lands immediately,
        # delays are spent on honest outcomes only
        tau = 0 if observed != l_true else delayer.assign(t, rng_adv)
        queue.push(t, t + tau, observed)

        dz_norm = policy.est.V.mahalanobis_inv(dz_obs)
        w = policy.observe_selection(t, dz_obs)

        # clipping invariant (soft constraint of the adaptive weights)
        expected_w = 1.0 if (dz_norm == 0.0 or not math.isfinite(alpha)) \
            else min(1.0, alpha / dz_norm)
        if abs(w - expected_w) > 1e-12:
            raise InvariantViolation("clipping-weight", t, f"w={w} expected={expected_w}")
        if w < 1.0 and w * dz_norm > alpha + 1e-9:
            raise InvariantViolation("clipping-soft-constraint", t,
                                     f"w*norm={w * dz_norm} alpha={alpha}")
        if math.isfinite(alpha) and math.sqrt(w) * dz_norm > max(alpha, dz_norm) + 1e-9:
            raise InvariantViolation("clipping-leverage-cap", t)
        ep_sum += min(1.0, w * dz_norm * dz_norm)

        arrivals = queue.tick(t)
        recs = [policy.est.arrival_update(s, o) for s, o in arrivals]
        if cfg.mle_mode == "streaming":
            for rec in recs:
                policy.est.streaming_step(rec)
        elif recs:
            policy.est.solve_newton()

        d_pending = queue.pending_before(t + 1)
        if d_bound is not None and d_pending > d_bound + 1e-9:
            raise InvariantViolation("invisible-feedback-bound", t,
                                     f"D_t={d_pending} > sqrt(2*budget)={d_bound}")

        if policy.uses_postserving:
            for k in (a, b):
                buffer.add(ctx.pre[k], ctx.post_observed[k])
            approx.fit_step(buffer)

        z_star = np.hstack([ctx.pre, ctx.post_true]) if cfg.dy > 0 else ctx.pre
        r = instantaneous_regret(theta_star.vec, z_star, a, b)
        cum += r
        rows.append((t, r, cum, w, dz_norm, len(arrivals), d_pending))

        if t % 200 == 0 or t == cfg.T:
            if policy.est.min_eig_v_minus_w() < -1e-9:
                raise InvariantViolation("psd-order-V-W", t)

    ep_bound = (2.0 / kappa) * policy.est.d * math.log(1.0 + kappa * cfg.T / (policy.est.d * cfg.lam))
    if ep_sum > ep_bound + 1e-9:
        raise InvariantViolation("elliptic-potential", cfg.T,
                                 f"sum={ep_sum} bound={ep_bound}")
    if corruptor.spent > cfg.corruption:
        raise InvariantViolation("corruption-budget", cfg.T)
    if cfg.delay_regime == "strategic" and delayer.spent > cfg.delay_budget:
        raise InvariantViolation("delay-budget", cfg.T)

    totals = {
        "corruption_spent": corruptor.spent,
        "delay_total": delayer.spent,
        "strategic_horizon": delayer.horizon,
        "elliptic_potential": ep_sum,
        "elliptic_potential_bound": ep_bound,
        "final_cum_regret": cum,
        "alpha": None if not math.isfinite(alpha) else alpha,
        "kappa": kappa,
        "feature_dim": policy.est.d,
        "wall_time_s": time.perf_counter() - t0,
    }
    return RunTrace(policy=policy_name, seed=seed, rows=rows, totals=totals)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def trace_path(out_dir: Path, policy: str, seed: int) -> Path:
    return Path(out_dir) / f"{policy}_seed{seed}.csv"


def write_trace(out_dir: Path, trace: RunTrace) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = trace_path(out_dir, trace.policy, trace.seed)
    tmp = path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TRACE_HEADER)
        for t, r, cum, w, norm, arrivals, pend in trace.rows:
            wr.writerow([t, trace.policy, f"{r:.17g}", f"{cum:.17g}", f"{w:.17g}",
                         f"{norm:.17g}", arrivals, pend])
    os.replace(tmp, path)
    return path


def _git_describe() -> str:
    try:
        return subprocess.run(["git", "describe", "--always", "--dirty"],
                              capture_output=True, text=True, timeout=10,
                              cwd=Path(__file__).parent).stdout.strip()
    except Exception:
        return "unknown"


def _run_job(args):
    cfg, policy, seed = args
    return run_single(cfg, policy, seed)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   threads: int = 1) -> list[RunTrace]:
    out_dir = Path(out_dir) / cfg.name
    jobs = [(cfg, p, cfg.seed0 + r) for p in cfg.policies for r in range(cfg.runs)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(_run_job, jobs))
    else:
        traces = [_run_job(j) for j in jobs]
    for tr in traces:
        write_trace(out_dir, tr)
    manifest = {
        "config": asdict(cfg),
        "git": _git_describe(),
        "runs": {f"{tr.policy}_seed{tr.seed}": tr.totals for tr in traces},
    }
    tmp = out_dir / "manifest.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    os.replace(tmp, out_dir / "manifest.json")
    return traces


# ---------------------------------------------------------------------------
# summaries and re-verification
# ---------------------------------------------------------------------------

def read_trace(path: str | Path) -> dict:
    with open(path) as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        cols = {h: [] for h in header}
        for i, row in enumerate(rd, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: malformed row {i}")
            for h, v in zip(header, row):
                cols[h].append(v)
    out = {"policy": cols["policy"][0] if cols["policy"] else ""}
    for key in ("t", "arrivals", "d_pending"):
        out[key] = np.array([int(v) for v in cols[key]])
    for key in ("r_inst", "cum_regret", "omega", "dz_norm"):
        out[key] = np.array([float(v) for v in cols[key]])
    return out


def load_experiment(exp_dir: str | Path) -> tuple[dict, dict]:
    """Returns (manifest, {policy: [trace dicts sorted by seed]})."""
    exp_dir = Path(exp_dir)
    with open(exp_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    by_policy: dict[str, list] = {}
    for path in sorted(exp_dir.glob("*_seed*.csv")):
        tr = read_trace(path)
        seed = int(path.stem.rsplit("seed", 1)[1])
        tr["seed"] = seed
        by_policy.setdefault(tr["policy"], []).append(tr)
    for lst in by_policy.values():
        lst.sort(key=lambda tr: tr["seed"])
    return manifest, by_policy


def summarize(exp_dir: str | Path) -> list[dict]:
    """Population mean/std of cumulative regret at T/4, T/2, T, per policy."""
    exp_dir = Path(exp_dir)
    manifest, by_policy = load_experiment(exp_dir)
    T = manifest["config"]["T"]
    checkpoints = sorted({max(1, T // 4), max(1, T // 2), T})
    rows = []
    for policy in sorted(by_policy):
        traces = by_policy[policy]
        for cp in checkpoints:
            vals = np.array([tr["cum_regret"][cp - 1] for tr in traces])
            rows.append({
                "policy": policy, "round": cp, "n_runs": len(vals),
                "mean_cum_regret": float(vals.mean()),
                "std_cum_regret": float(vals.std()),  # population convention
            })
    path = exp_dir / "summary.csv"
    tmp = exp_dir / "summary.csv.tmp"
    with open(tmp, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        wr.writeheader()
        for row in rows:
            wr.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v)
                         for k, v in row.items()})
    os.replace(tmp, path)
    with open(exp_dir / "summary.json", "w") as fh:
        json.dump({"config": manifest["config"], "git": manifest["git"],
                   "checkpoints": rows}, fh, indent=2, sort_keys=True)
    return rows


def check_dir(exp_dir: str | Path) -> list[str]:
    """Re-assert budget and trace invariants from persisted files.

    Returns a list of human-readable problems (empty means all good).
    """
    exp_dir = Path(exp_dir)
    problems = []
    manifest, by_policy = load_experiment(exp_dir)
    cfg = manifest["config"]
    kappa = cfg["kappa"] if cfg["kappa"] is not None else kappa_floor(cfg["m_bound"])
    strategic = cfg["delay_regime"] == "strategic"
    d_bound = math.sqrt(2.0 * cfg["delay_budget"]) if strategic else None
    for policy, traces in by_policy.items():
        for tr in traces:
            tag = f"{policy} seed {tr['seed']}"
            totals = manifest["runs"][f"{policy}_seed{tr['seed']}"]
            if np.any(np.diff(tr["cum_regret"]) < -1e-12):
                problems.append(f"{tag}: cumulative regret decreases")
            if totals["corruption_spent"] > cfg["corruption"]:
                problems.append(f"{tag}: corruption budget exceeded")
            if strategic:
                if totals["delay_total"] > cfg["delay_budget"]:
                    problems.append(f"{tag}: delay budget exceeded")
                if np.any(tr["d_pending"] > d_bound + 1e-9):
                    problems.append(f"{tag}: invisible-feedback bound violated")
            ep = float(np.sum(np.minimum(1.0, tr["omega"] * tr["dz_norm"] ** 2)))
            d_feat = totals["feature_dim"]
            bound = (2.0 / kappa) * d_feat * math.log(1.0 + kappa * cfg["T"] / (d_feat * cfg["lam"]))
            if ep > bound + 1e-6:
                problems.append(f"{tag}: elliptic potential {ep:.3f} > bound {bound:.3f}")
            alpha = totals["alpha"]
            if alpha is not None:
                bad = (tr["omega"] < 1.0) & (tr["omega"] * tr["dz_norm"] > alpha + 1e-9)
                if np.any(bad):
                    problems.append(f"{tag}: clipping soft constraint violated")
    if strategic:
        from .adversary import starvation_horizon
        want = starvation_horizon(cfg["delay_budget"])
        for key, totals in manifest["runs"].items():
            if totals["strategic_horizon"] != want:
                problems.append(f"{key}: strategic horizon {totals['strategic_horizon']} != {want}")
    return problems
