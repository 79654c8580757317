"""Direct, self-contained loops for every named algorithm.

The projected-descent family (gd_*, sgd_const, adagrad_norm) iterates
x_{k+1} = proj(x_k - eta_k ghat_k) from x_0 = 0 and tracks the running
average. The momentum family (adamw_*, leonw_*) iterates the clipped /
self-clipped preconditioned updates with either constant decay or a
two-stage schedule. Theorem-derived parameters are auto-computed from the
problem constants when not given, and echoed into the record's params.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .framework import RunRecord, Schedule, _abort_if_bad, _Recorder
from .numerics import clip_coord, clip_euclid, inv_sqrt_psd, project_ball
from .online import DEFAULT_DELTA, RegretRecord, regret_eval
from .problems import StochOracle
from .rng import RunRng

__all__ = ["OPTIMIZER_IDS", "OptimizerSpec", "run_optimizer"]

OPTIMIZER_IDS = (
    "gd_const", "gd_normalized", "gd_polyak", "sgd_const", "adagrad_norm",
    "adamw_avg", "adamw_exp", "adamw_diag", "leonw_diag", "leonw_matrix",
)

_PROJECTED = {"gd_const", "gd_normalized", "gd_polyak", "sgd_const", "adagrad_norm"}
_MOMENTUM = {"adamw_exp", "adamw_diag", "leonw_diag", "leonw_matrix"}


@dataclass
class OptimizerSpec:
    """Which algorithm to run and with what parameters.

    eta: fixed stepsize for gd_const / sgd_const, or the scale s in the
      adagrad_norm rule eta_k = s / sqrt(sum of squared gradient norms);
      auto-derived from the problem constants when omitted.
    schedule / alpha: decay for the momentum family (adamw_avg needs neither).
    """

    kind: str
    R: float
    K: int
    eta: Optional[float] = None
    alpha: Optional[float] = None
    schedule: Optional[Schedule] = None
    delta: float = DEFAULT_DELTA
    eps_target: Optional[float] = None
    derived: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OPTIMIZER_IDS:
            raise ValueError(f"unknown optimizer {self.kind!r}; choose from {OPTIMIZER_IDS}")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not self.K >= 1:
            raise ValueError("K must be >= 1")


def _auto_eta(spec: OptimizerSpec, oracle: StochOracle) -> float:
    c = oracle.constants
    if spec.kind == "gd_const":
        inv = max(2.0 * c.M1**2 * c.F, c.M0 * math.sqrt(spec.K + 1) / spec.R)
        spec.derived["inv_eta_terms"] = (2.0 * c.M1**2 * c.F,
                                         c.M0 * math.sqrt(spec.K + 1) / spec.R)
    elif spec.kind == "sgd_const":
        inv = max(2.0 * c.G1**2 * c.F, c.G0 * math.sqrt(spec.K + 1) / spec.R)
        spec.derived["inv_eta_terms"] = (2.0 * c.G1**2 * c.F,
                                         c.G0 * math.sqrt(spec.K + 1) / spec.R)
    else:  # adagrad_norm scale
        return spec.R / math.sqrt(2.0)
    if inv <= 0:
        raise ValueError("cannot derive a stepsize from degenerate constants")
    return 1.0 / inv


def _alpha_fn(spec: OptimizerSpec):
    """Decay sequence for the momentum family, from a schedule or a constant."""
    if spec.schedule is not None:
        sched = spec.schedule
        return sched.alpha
    if spec.alpha is not None:
        a = float(spec.alpha)
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        return lambda k: a
    raise ValueError(f"{spec.kind} needs either a schedule or a constant alpha")


def run_optimizer(spec: OptimizerSpec, oracle: StochOracle,
                  rng: Optional[RunRng] = None, *, record_avg: bool = True,
                  record_trajectory: bool = False,
                  early_stop: bool = False) -> RunRecord:
    """Run the algorithm named by `spec` on `oracle` for spec.K oracle calls."""
    if spec.kind in _PROJECTED:
        return _run_projected(spec, oracle, rng, record_avg, record_trajectory,
                              early_stop)
    return _run_momentum(spec, oracle, rng, record_avg, record_trajectory,
                         early_stop)


def _run_projected(spec, oracle, rng, record_avg, record_traj, early_stop):
    problem = oracle.problem
    c = oracle.constants
    d, R, K = problem.d, spec.R, spec.K
    fstar = problem.constants.fstar
    stream = rng.oracle if rng is not None else None
    seed = rng.master_seed if rng is not None else -1
    kind = spec.kind

    eta = spec.eta
    if eta is None and kind in ("gd_const", "sgd_const", "adagrad_norm"):
        eta = _auto_eta(spec, oracle)
    spec.derived["eta"] = eta
    if kind == "gd_polyak" and not math.isfinite(fstar):
        raise ValueError("Polyak stepsizes need a known optimal value")

    x = np.zeros(d)
    rec = _Recorder(kind, seed, d, K, problem.value(x) - fstar, x,
                    record_avg=record_avg, record_traj=record_traj,
                    eps_target=spec.eps_target,
                    params={"kind": kind, "R": R, "K": K, "eta": eta,
                            "oracle": oracle.model, **spec.derived})
    reg = RegretRecord.empty(d)
    gap = rec.gap[0]
    sumsq = 0.0

    for k in range(1, K + 1):
        sample = oracle.sample(x, stream)
        g = sample.grad
        gnorm = float(np.linalg.norm(g))
        reg.append(x, g)

        if kind in ("gd_const", "sgd_const"):
            eta_k = eta
        elif kind == "adagrad_norm":
            sumsq += gnorm * gnorm
            eta_k = eta / math.sqrt(sumsq) if sumsq > 0.0 else 0.0
        elif kind == "gd_normalized":
            # 0/0 = 0: a zero subgradient means a zero step.
            eta_k = R / (gnorm * math.sqrt(K + 1)) if gnorm > 0.0 else 0.0
        else:  # gd_polyak
            if gnorm == 0.0:
                if gap > 1e-12 * max(1.0, abs(fstar)):
                    raise RuntimeError(
                        f"zero subgradient at positive gap {gap:.3e} (step {k})")
                eta_k = 0.0
            else:
                eta_k = gap / (gnorm * gnorm)

        x_prev = x
        x = project_ball(x_prev - eta_k * g, R)
        _abort_if_bad(x, k, g)
        gap = problem.value(x) - fstar
        rec.sum_x += x
        gap_avg = (problem.value(rec.sum_x / (k + 1)) - fstar) if record_avg else np.nan
        rec.step(k, x, gap, gap_avg, float(np.linalg.norm(x - x_prev)), eta_k,
                 regret_eval(reg, R, "euclid"), g=g)
        if early_stop and rec.hit_k is not None:
            break

    return rec.finish(x, measured_regret=regret_eval(reg, R, "euclid"))


def _run_momentum(spec, oracle, rng, record_avg, record_traj, early_stop):
    problem = oracle.problem
    d, R, K = problem.d, spec.R, spec.K
    fstar = problem.constants.fstar
    stream = rng.oracle if rng is not None else None
    seed = rng.master_seed if rng is not None else -1
    kind = spec.kind

    alpha = _alpha_fn(spec) if kind in _MOMENTUM else None
    params = {"kind": kind, "R": R, "K": K, "oracle": oracle.model}
    if spec.schedule is not None:
        params["schedule"] = spec.schedule.describe()
    elif spec.alpha is not None:
        params["alpha"] = spec.alpha

    x = np.zeros(d)
    rec = _Recorder(kind, seed, d, K, problem.value(x) - fstar, x,
                    record_avg=record_avg, record_traj=record_traj,
                    eps_target=spec.eps_target, params=params)
    reg = RegretRecord.empty(d)

    if kind == "adamw_avg":
        m, v = np.zeros(d), 0.0
    elif kind == "adamw_exp":
        m, v = np.zeros(d), 0.0
    elif kind == "leonw_matrix":
        m, v = np.zeros(d), spec.delta * np.eye(d)
    else:  # adamw_diag / leonw_diag
        m, v = np.zeros(d), np.full(d, spec.delta)

    geometry = "box" if kind in ("adamw_diag", "leonw_diag") else "euclid"

    # Iterate indexing mirrors the conversion: at step k the current x is x_k
    # (x_1 = x_0 = 0), the oracle is queried at x_k, and the update produces
    # x_{k+1}, which is recorded at step k+1. gap_hist[k] is the gap at x_k.
    x_prev = x.copy()
    for k in range(1, K + 1):
        gap = problem.value(x) - fstar
        rec.sum_x += x
        gap_avg = (problem.value(rec.sum_x / (k + 1)) - fstar) if record_avg else np.nan

        sample = oracle.sample(x, stream)
        g = sample.grad
        reg.append(x, g)
        eff = np.nan

        if kind == "adamw_avg":
            m = m + g
            v = v + float(g @ g)
            direction = clip_euclid(m / math.sqrt(v)) if v > 0.0 else np.zeros(d)
            x_next = (k / (k + 1.0)) * x - (R / (k + 1.0)) * direction
            eff = R / ((k + 1.0) * math.sqrt(v)) if v > 0.0 else np.nan
        else:
            a_k, a_next = alpha(k), alpha(k + 1)
            if kind == "adamw_exp":
                m = (1.0 - a_k) * m + a_k * g
                v = (1.0 - a_k) ** 2 * v + a_k**2 * float(g @ g)
                direction = clip_euclid(m / math.sqrt(v)) if v > 0.0 else np.zeros(d)
                eff = R * a_next / math.sqrt(v) if v > 0.0 else np.nan
            elif kind == "adamw_diag":
                m = (1.0 - a_k) * m + a_k * g
                v = (1.0 - a_k) ** 2 * v + a_k**2 * (g * g)
                with np.errstate(invalid="ignore", divide="ignore"):
                    direction = clip_coord(np.where(v > 0.0, m / np.sqrt(v), 0.0))
            elif kind == "leonw_diag":
                m = (1.0 - a_k) * m + a_k * g
                v = (1.0 - a_k) ** 2 * v + a_k**2 * (g * g)
                denom = np.sqrt(m * m + v)
                with np.errstate(invalid="ignore", divide="ignore"):
                    direction = np.where(denom > 0.0, m / denom, 0.0)
            else:  # leonw_matrix
                m = (1.0 - a_k) * m + a_k * g
                v = (1.0 - a_k) ** 2 * v + a_k**2 * np.outer(g, g)
                direction = inv_sqrt_psd(np.outer(m, m) + v) @ m
            x_next = (1.0 - a_next) * x - a_next * R * direction

        _abort_if_bad(x_next, k, g)
        rec.step(k, x, gap, gap_avg, float(np.linalg.norm(x - x_prev)), eff,
                 regret_eval(reg, R, geometry), g=g)
        x_prev, x = x, x_next
        if early_stop and rec.hit_k is not None:
            break

    return rec.finish(x_prev, measured_regret=regret_eval(reg, R, geometry))
