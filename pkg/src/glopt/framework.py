"""Online-to-batch conversion and its stepsize-weight schedules.

The conversion runs x_k = (1-a_k) x_{k-1} + a_k z_k with z_k produced by an
online learner fed the scaled gradients g_k = a_k pi_k ghat_k, where the
weights obey pi_k (1 - a_k) = pi_{k-1} (or the gamma-damped variant
(1 - gamma a_k) pi_k = pi_{k-1} for quasar runs). Weights are kept in log
space; the gradient stream fed to the learner is renormalized if its
accumulators ever threaten to overflow, which every learner tolerates
because all of them are invariant under a global stream rescaling.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .online import RegretRecord, learner_play, learner_step, regret_eval
from .problems import ProblemConstants, QuasarOracle, StochOracle
from .rng import RunRng

__all__ = ["Schedule", "make_schedule", "RunRecord", "run_conversion",
           "run_conversion_quasar", "SCHEDULE_KINDS"]

SCHEDULE_KINDS = ("avg", "exp_const", "two_stage", "universal", "quasar_two_stage")

# Learner accumulators above this trigger a renormalization of the stream.
RESCALE_THRESHOLD = 1e100


def _check(cond: bool, inequality: str):
    if not cond:
        raise ValueError(f"schedule regime violated: {inequality}")


@dataclass(frozen=True)
class Schedule:
    """Stepsize sequence a_k, weight sequence pi_k, and derived horizons."""

    kind: str
    pi0: float
    T: int
    S: int
    K: int
    a1: float          # stepsize for k <= stage1_end (and everywhere if no switch)
    a2: float          # stepsize after the switch
    stage1_end: int    # S*T for two-stage kinds, 0 when there is a single stage
    gamma: float = 1.0
    eps: float = 0.0
    c_hat: float = 1.0
    derived: dict = field(default_factory=dict)

    def alpha(self, k: int) -> float:
        if self.kind == "avg":
            return 1.0 / k
        return self.a1 if k <= self.stage1_end else self.a2

    def log_pi(self, k: int) -> float:
        """log(pi_k); pi_k is reconstructed from the recursion in closed form."""
        if k == 0:
            return -math.inf if self.pi0 == 0.0 else math.log(self.pi0)
        if self.kind == "avg":
            return math.log(k)
        m1 = min(k, self.stage1_end)
        out = -m1 * math.log1p(-self.gamma * self.a1)
        if k > self.stage1_end:
            out -= (k - self.stage1_end) * math.log1p(-self.gamma * self.a2)
        return out

    def pi(self, k: int) -> float:
        if k == 0:
            return self.pi0
        if self.kind == "avg":
            return float(k)  # exact rational weights
        return math.exp(self.log_pi(k))

    def log_alpha_pi(self, k: int) -> float:
        if self.kind == "avg":
            return 0.0  # a_k * pi_k = 1 exactly
        return math.log(self.alpha(k)) + self.log_pi(k)

    def describe(self) -> dict:
        out = {"kind": self.kind, "pi0": self.pi0, "T": self.T, "S": self.S,
               "K": self.K, "alpha_stage1": self.a1, "alpha_stage2": self.a2,
               "stage1_end": self.stage1_end, "gamma": self.gamma,
               "eps": self.eps, "c_hat": self.c_hat}
        out.update(self.derived)
        return out


def make_schedule(kind: str, constants: ProblemConstants, eps: float,
                  c_hat: float = 1.0, gamma: Optional[float] = None) -> Schedule:
    """Construct one of the five schedules from problem constants and a target eps.

    Horizon constants T, S, K and the stepsizes come from the closed forms the
    corresponding convergence statements prescribe; c_hat scales T. Regime
    violations raise with the failing inequality named.
    """
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}")
    _check(eps > 0, "eps > 0")
    _check(c_hat > 0, "c_hat > 0")
    c = constants
    R = c.R
    e = math.e

    if kind == "avg":
        _check(R * c.G1 >= 1, "R*G1 >= 1")
        _check(math.isfinite(c.F), "F finite")
        u = R * c.G0 / eps
        w = (R * c.G1) ** 2 * (c.F / eps)
        K = math.ceil(u**2 + w * math.log(e + u + w))
        return Schedule(kind="avg", pi0=0.0, T=0, S=0, K=max(K, 1), a1=1.0, a2=1.0,
                        stage1_end=0, eps=eps, c_hat=c_hat,
                        derived={"u=R*G0/eps": u, "w=(R*G1)^2*F/eps": w})

    if kind in ("exp_const", "two_stage"):
        _check(R * c.G1 >= 1, "R*G1 >= 1")
        _check(math.isfinite(c.F), "F finite")
        T = math.ceil(c_hat * (R * c.G1) ** 2)
        inv_a1 = T * R * c.G1
        inv_a2 = max(inv_a1, (R * c.G0 / eps) ** 2, T * R * c.G0 / eps)
        derived = {"T": T, "inv_alpha_stage1": inv_a1, "inv_alpha_stage2": inv_a2}
        if kind == "exp_const":
            _check(inv_a2 > 1, "max{T*R*G1, (R*G0/eps)^2, T*R*G0/eps} > 1")
            K = math.ceil(2.0 * inv_a2 * math.log(e + c.F / eps))
            return Schedule(kind=kind, pi0=1.0, T=T, S=0, K=K, a1=1.0 / inv_a2,
                            a2=1.0 / inv_a2, stage1_end=0, eps=eps, c_hat=c_hat,
                            derived=derived)
        _check(inv_a1 > 1, "T*R*G1 > 1 (increase c_hat)")
        S = math.ceil(2.0 * R * c.G1 * math.log(e + c.F * c.G1 / c.G0))
        K = T * S + math.ceil(2.0 * inv_a2 * math.log(e + c.G0 / (c.G1 * eps)))
        return Schedule(kind=kind, pi0=1.0, T=T, S=S, K=K, a1=1.0 / inv_a1,
                        a2=1.0 / inv_a2, stage1_end=S * T, eps=eps, c_hat=c_hat,
                        derived=derived)

    if kind == "universal":
        _check(R * c.L1 >= 1, "R*L1 >= 1")
        _check(math.isfinite(c.F), "F finite")
        nu = c.nu
        T = math.ceil(c_hat * (R * c.L1) ** 2)
        inv_a1 = T * R * c.L1
        _check(inv_a1 > 1, "T*R*L1 > 1 (increase c_hat)")
        inv_a2 = max(
            inv_a1,
            (R * c.sigma / eps) ** 2,
            (R ** (1 + nu) * c.L0 / eps) ** (2.0 / (1 + nu)),
            T * R * c.sigma / eps,
            ((T * R) ** (1 + nu) * c.L0 / eps) ** (1.0 / (1 + nu)),
        )
        F_hat = c.L0 / c.L1 ** (1 + nu) + c.sigma / c.L1
        _check(F_hat > 0, "L0/L1^(1+nu) + sigma/L1 > 0")
        S = math.ceil(2.0 * R * c.L1 * math.log(e + c.F / F_hat))
        K = T * S + math.ceil(2.0 * inv_a2 * math.log(e + F_hat / eps))
        return Schedule(kind=kind, pi0=1.0, T=T, S=S, K=K, a1=1.0 / inv_a1,
                        a2=1.0 / inv_a2, stage1_end=S * T, eps=eps, c_hat=c_hat,
                        derived={"T": T, "inv_alpha_stage1": inv_a1,
                                 "inv_alpha_stage2": inv_a2, "F_hat": F_hat})

    # quasar_two_stage
    g = c.gamma if gamma is None else gamma
    _check(0.0 < g <= 1.0, "gamma in (0, 1]")
    _check(R * c.G1 >= 1, "R*G1 >= 1")
    _check(math.isfinite(c.F), "F finite")
    T = math.ceil(c_hat * (R * c.G1 / g) ** 2)
    inv_a1 = T * R * c.G1
    _check(inv_a1 > 1, "T*R*G1 > 1 (increase c_hat)")
    inv_a2 = max(inv_a1, (R * c.G0 / eps) ** 2 / g, T * R * c.G0 / (g * eps))
    S = math.ceil((2.0 * R * c.G1 / g) * math.log(e + g * c.F * c.G1 / c.G0))
    K = T * S + math.ceil((2.0 * inv_a2 / g) * math.log(e + c.G0 / (g * c.G1 * eps)))
    return Schedule(kind=kind, pi0=1.0, T=T, S=S, K=K, a1=1.0 / inv_a1,
                    a2=1.0 / inv_a2, stage1_end=S * T, gamma=g, eps=eps, c_hat=c_hat,
                    derived={"T": T, "inv_alpha_stage1": inv_a1,
                             "inv_alpha_stage2": inv_a2})


@dataclass
class RunRecord:
    """Trajectory and diagnostics of one optimization run."""

    kind: str
    seed: int
    d: int
    K: int
    gap_hist: np.ndarray                     # gap at x_0 .. x_K
    gap_avg_hist: Optional[np.ndarray]       # gap of the running-average iterate
    step_norm: np.ndarray                    # ||x_k - x_{k-1}|| for k = 1 .. K
    eff_step: np.ndarray                     # monitored effective stepsize
    regret_running: np.ndarray               # worst-comparator regret after k steps
    measured_regret: float
    x_final: np.ndarray
    x_avg: np.ndarray
    best_gap: float
    best_k: int
    hit_k: Optional[int]                     # first k with tracked gap <= eps_target
    params: dict
    rescale_events: list
    wall_ns: int = 0
    x_hist: Optional[np.ndarray] = None
    z_hist: Optional[np.ndarray] = None
    g_hist: Optional[np.ndarray] = None

    @property
    def final_gap(self) -> float:
        return float(self.gap_hist[-1])


class _Recorder:
    """Shared bookkeeping for conversion and direct-optimizer loops."""

    def __init__(self, kind, seed, d, K, gap0, x0, *, record_avg, record_traj,
                 eps_target, params):
        self.kind, self.seed, self.d, self.K = kind, seed, d, K
        self.record_avg = record_avg
        self.record_traj = record_traj
        self.eps_target = eps_target
        self.params = params
        self.gap = np.empty(K + 1)
        self.gap[0] = gap0
        self.gap_avg = np.empty(K + 1) if record_avg else None
        if record_avg:
            self.gap_avg[0] = gap0
        self.step_norm = np.zeros(K)
        self.eff_step = np.full(K, np.nan)
        self.regret_running = np.zeros(K)
        self.sum_x = x0.copy()
        self.best_gap, self.best_k = gap0, 0
        self.hit_k = 0 if (eps_target is not None and gap0 <= eps_target) else None
        self.xs = [x0.copy()] if record_traj else None
        self.zs = [] if record_traj else None
        self.gs = [] if record_traj else None
        self.rescale_events: list = []
        self.t0 = time.perf_counter_ns()
        self.n = 0

    def step(self, k, x, gap, gap_avg, step_norm, eff=np.nan, regret=0.0,
             z=None, g=None):
        self.n = k
        self.gap[k] = gap
        if self.record_avg:
            self.gap_avg[k] = gap_avg
        self.step_norm[k - 1] = step_norm
        self.eff_step[k - 1] = eff
        self.regret_running[k - 1] = regret
        if gap < self.best_gap:
            self.best_gap, self.best_k = gap, k
        if self.hit_k is None and self.eps_target is not None:
            tracked = min(gap, gap_avg) if self.record_avg else gap
            if tracked <= self.eps_target:
                self.hit_k = k
        if self.record_traj:
            self.xs.append(x.copy())
            if z is not None:
                self.zs.append(np.asarray(z, dtype=float).copy())
            if g is not None:
                self.gs.append(np.asarray(g, dtype=float).copy())

    def finish(self, x, measured_regret=0.0) -> RunRecord:
        n = self.n
        return RunRecord(
            kind=self.kind, seed=self.seed, d=self.d, K=n,
            gap_hist=self.gap[: n + 1],
            gap_avg_hist=self.gap_avg[: n + 1] if self.record_avg else None,
            step_norm=self.step_norm[:n], eff_step=self.eff_step[:n],
            regret_running=self.regret_running[:n],
            measured_regret=measured_regret,
            x_final=x.copy(), x_avg=self.sum_x / (n + 1),
            best_gap=self.best_gap, best_k=self.best_k, hit_k=self.hit_k,
            params=self.params, rescale_events=self.rescale_events,
            wall_ns=time.perf_counter_ns() - self.t0,
            x_hist=np.array(self.xs) if self.record_traj else None,
            z_hist=np.array(self.zs) if self.record_traj and self.zs else None,
            g_hist=np.array(self.gs) if self.record_traj and self.gs else None,
        )


def _abort_if_bad(x, k, g):
    if not np.all(np.isfinite(x)):
        raise RuntimeError(
            f"non-finite iterate at step {k} (last ||g|| = {float(np.linalg.norm(g)):.3e})")


def run_conversion(oracle: StochOracle, learner, schedule: Schedule,
                   rng: Optional[RunRng] = None, K_override: Optional[int] = None,
                   *, record_avg: bool = True, record_trajectory: bool = False,
                   eps_target: Optional[float] = None,
                   early_stop: bool = False) -> RunRecord:
    """Run the conversion: form x_k from the learner's play, feed back a_k pi_k ghat_k."""
    if schedule.kind == "quasar_two_stage":
        raise ValueError("use run_conversion_quasar for the quasar schedule")
    problem = oracle.problem
    d = problem.d
    K = int(K_override) if K_override is not None else schedule.K
    fstar = problem.constants.fstar
    stream = rng.oracle if rng is not None else None
    seed = rng.master_seed if rng is not None else -1

    x = np.zeros(d)
    state = learner
    z = learner_play(state)
    rec = _Recorder("conversion/" + schedule.kind, seed, d, K, problem.value(x) - fstar,
                    x, record_avg=record_avg, record_traj=record_trajectory,
                    eps_target=eps_target,
                    params={"schedule": schedule.describe(),
                            "learner": type(learner).__name__,
                            "oracle": oracle.model})
    reg = RegretRecord.empty(d)
    geometry = state.geometry
    log_scale = 0.0
    R = state.R

    for k in range(1, K + 1):
        a = schedule.alpha(k)
        x_prev = x
        z_k = z
        x = (1.0 - a) * x_prev + a * z_k
        _abort_if_bad(x, k, z_k)
        gap = problem.value(x) - fstar
        rec.sum_x += x
        gap_avg = (problem.value(rec.sum_x / (k + 1)) - fstar) if record_avg else np.nan

        sample = oracle.sample(x, stream)
        g = math.exp(schedule.log_alpha_pi(k) - log_scale) * sample.grad
        reg.append(z_k, g)
        state, z = learner_step(state, g)

        V = getattr(state, "V", None)
        eff = np.nan
        if isinstance(V, float) and V > 0.0:
            eff = (R * schedule.alpha(k + 1)
                   * math.exp(schedule.log_pi(k) - log_scale) / math.sqrt(V))
        rec.step(k, x, gap, gap_avg, float(np.linalg.norm(x - x_prev)), eff,
                 regret_eval(reg, R, geometry), z=z_k, g=g)
        if isinstance(V, float) and V > RESCALE_THRESHOLD:
            new_log_scale = schedule.log_pi(k)
            ratio = math.exp(log_scale - new_log_scale)
            state = state.rescaled(ratio)
            reg.G_total = reg.G_total * ratio
            reg.zg_sum *= ratio
            log_scale = new_log_scale
            rec.rescale_events.append((k, new_log_scale))
        if early_stop and rec.hit_k is not None:
            break

    return rec.finish(x, measured_regret=regret_eval(reg, R, geometry))


def run_conversion_quasar(oracle: QuasarOracle, learner, schedule: Schedule,
                          rng: Optional[RunRng] = None,
                          K_override: Optional[int] = None,
                          *, zeta_override: Optional[float] = None,
                          record_avg: bool = False, record_trajectory: bool = False,
                          eps_target: Optional[float] = None,
                          early_stop: bool = False) -> RunRecord:
    """Quasar variant: the oracle is queried at a uniformly random point of the
    segment [x_{k-1}, x_k], in the direction of the step."""
    if schedule.kind != "quasar_two_stage":
        raise ValueError("run_conversion_quasar requires the quasar schedule")
    problem = oracle.problem
    d = problem.d
    K = int(K_override) if K_override is not None else schedule.K
    fstar = problem.constants.fstar
    stream = rng.oracle if rng is not None else None
    seed = rng.master_seed if rng is not None else -1

    zeta_block: np.ndarray = np.empty(0)
    zeta_pos = 0

    def next_zeta() -> float:
        nonlocal zeta_block, zeta_pos
        if zeta_override is not None:
            return float(zeta_override)
        if zeta_pos >= zeta_block.size:
            zeta_block = rng.segment.uniform(size=4096)
            zeta_pos = 0
        val = float(zeta_block[zeta_pos])
        zeta_pos += 1
        return val

    x = np.zeros(d)
    state = learner
    z = learner_play(state)
    rec = _Recorder("conversion/quasar", seed, d, K, problem.value(x) - fstar, x,
                    record_avg=record_avg, record_traj=record_trajectory,
                    eps_target=eps_target,
                    params={"schedule": schedule.describe(),
                            "learner": type(learner).__name__,
                            "oracle": oracle.model})
    reg = RegretRecord.empty(d)
    geometry = state.geometry
    log_scale = 0.0
    R = state.R

    for k in range(1, K + 1):
        a = schedule.alpha(k)
        x_prev = x
        z_k = z
        x = (1.0 - a) * x_prev + a * z_k
        _abort_if_bad(x, k, z_k)
        gap = problem.value(x) - fstar
        rec.sum_x += x
        gap_avg = (problem.value(rec.sum_x / (k + 1)) - fstar) if record_avg else np.nan

        w = x - x_prev
        xbar = x_prev + next_zeta() * w
        sample = oracle.sample_dir(xbar, w, stream)
        g = math.exp(schedule.log_alpha_pi(k) - log_scale) * sample.grad
        reg.append(z_k, g)
        state, z = learner_step(state, g)

        V = getattr(state, "V", None)
        eff = np.nan
        if isinstance(V, float) and V > 0.0:
            eff = (R * schedule.alpha(k + 1)
                   * math.exp(schedule.log_pi(k) - log_scale) / math.sqrt(V))
        rec.step(k, x, gap, gap_avg, float(np.linalg.norm(w)), eff,
                 regret_eval(reg, R, geometry), z=z_k, g=g)
        if isinstance(V, float) and V > RESCALE_THRESHOLD:
            new_log_scale = schedule.log_pi(k)
            ratio = math.exp(log_scale - new_log_scale)
            state = state.rescaled(ratio)
            reg.G_total = reg.G_total * ratio
            reg.zg_sum *= ratio
            log_scale = new_log_scale
            rec.rescale_events.append((k, new_log_scale))
        if early_stop and rec.hit_k is not None:
            break

    return rec.finish(x, measured_regret=regret_eval(reg, R, geometry))
