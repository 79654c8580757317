"""Experiment orchestration: flat-file configs, deterministic CSVs, manifests.

A config describes one grid of (optimizer x seed) cells over a single
problem. Each cell writes one CSV; a manifest echoes the config and every
derived constant so a run is reconstructible from the manifest alone.
Identical (config, seed) produce byte-identical CSVs regardless of the
parallelism degree. Wall-clock timing is off by default because it is the
one inherently non-reproducible column; `timing = true` opts in and is
recorded in the manifest as breaking byte-identity.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .framework import Schedule, make_schedule, run_conversion, run_conversion_quasar
from .online import LEARNER_IDS, make_learner
from .optimizers import OPTIMIZER_IDS, OptimizerSpec, run_optimizer
from .problems import Problem, QuasarOracle, StochOracle, from_spec, make_lower_bound
from .rng import RunRng
from .verify import certify_quasar

__all__ = [
    "ExperimentConfig", "parse_config", "parse_seeds", "build_oracle",
    "derive_K", "run_cell", "cli_run", "cli_compare", "cli_lower_bound",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("run_id", "seed", "k", "f_gap", "f_gap_avg_iterate", "step_norm",
               "effective_stepsize", "regret_running", "wall_ns")

_CONV_PREFIX = "conv:"
_QUASAR_PREFIX = "quasar:"


@dataclass
class ExperimentConfig:
    problem: str
    optimizers: list
    seeds: list
    out: str = "runs"
    oracle: str = "deterministic"
    noise: float = 0.0
    schedule: str = "two_stage"
    eps: float = 0.1
    c_hat: float = 1.0
    k_override: int = 0          # 0 means "use the derived K"
    eta: float = float("nan")    # nan means "auto-derive"
    alpha: float = float("nan")
    gamma: float = float("nan")  # nan means "use the problem's or certify"
    parallel: int = 1
    timing: bool = False
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "extras"}
        d.update(self.extras)
        return d


def parse_seeds(text: str) -> list:
    """`0..4` (inclusive range) or `0,3,7`."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip() != ""]


def parse_config(text: str) -> ExperimentConfig:
    """Flat `key = value` lines; '#' starts a comment; no sections."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not val:
            raise ValueError(f"config line {lineno}: empty key or value")
        raw[key] = val
    if "problem" not in raw:
        raise ValueError("config is missing required field 'problem'")
    if "optimizer" not in raw and "optimizers" not in raw:
        raise ValueError("config is missing required field 'optimizer'")
    cfg = ExperimentConfig(
        problem=raw.pop("problem"),
        optimizers=[s.strip() for s in raw.pop("optimizers", raw.pop("optimizer", "")).split(",") if s.strip()],
        seeds=parse_seeds(raw.pop("seeds", "0")),
    )
    for key in ("out", "oracle", "schedule"):
        if key in raw:
            setattr(cfg, key, raw.pop(key))
    for key in ("noise", "eps", "c_hat", "eta", "alpha", "gamma"):
        if key in raw:
            setattr(cfg, key, float(raw.pop(key)))
    for key in ("k_override", "parallel"):
        if key in raw:
            setattr(cfg, key, int(raw.pop(key)))
    if "timing" in raw:
        cfg.timing = raw.pop("timing").lower() in ("1", "true", "yes")
    cfg.extras = raw
    if not cfg.eps > 0:
        raise ValueError("config violation: eps > 0")
    return cfg


def build_oracle(problem: Problem, model: str, noise: float) -> StochOracle:
    return StochOracle(problem, model=model, noise_scale=noise)


def derive_K(kind: str, oracle: StochOracle, eps: float) -> int:
    """Computable horizon for each method at accuracy eps, using the exact F."""
    c = oracle.constants
    R = c.R
    if kind == "gd_const":
        return max(1, math.ceil((R * c.M1) ** 2 * (c.F / eps) + (R * c.M0 / eps) ** 2))
    if kind in ("gd_normalized", "gd_polyak"):
        return max(1, 4 * math.ceil((R * c.M1) ** 2 + (R * c.M0 / eps) ** 2))
    if kind in ("sgd_const", "adagrad_norm"):
        return max(1, math.ceil((R * c.G1) ** 2 * (c.F / eps) + (R * c.G0 / eps) ** 2))
    raise ValueError(f"no horizon rule for {kind}")


def _certified_gamma(problem: Problem) -> float:
    rep = certify_quasar(problem)
    return rep.details["certified_gamma"]


def _build_runner(cfg: ExperimentConfig, optimizer_id: str, problem: Problem):
    """Returns (callable(rng) -> RunRecord, derived constants dict)."""
    oracle = build_oracle(problem, cfg.oracle, cfg.noise)
    K_over = cfg.k_override if cfg.k_override > 0 else None
    eps = cfg.eps

    if optimizer_id.startswith(_CONV_PREFIX) or optimizer_id.startswith(_QUASAR_PREFIX):
        quasar = optimizer_id.startswith(_QUASAR_PREFIX)
        parts = optimizer_id.split(":")
        if quasar:
            learner_id = parts[1] if len(parts) > 1 else "solo_scalar"
            gamma = cfg.gamma if math.isfinite(cfg.gamma) else _certified_gamma(problem)
            sched = make_schedule("quasar_two_stage", oracle.constants, eps,
                                  cfg.c_hat, gamma=gamma)
        else:
            if len(parts) != 3:
                raise ValueError(f"expected conv:<schedule>:<learner>, got {optimizer_id!r}")
            learner_id = parts[2]
            sched = make_schedule(parts[1], oracle.constants, eps, cfg.c_hat)
        if learner_id not in LEARNER_IDS:
            raise ValueError(f"unknown learner {learner_id!r}")
        derived = {"schedule": sched.describe(), "learner": learner_id}

        def runner(rng):
            learner = make_learner(learner_id, problem.d, problem.constants.R)
            if quasar:
                qoracle = QuasarOracle(problem, model=cfg.oracle, noise_scale=cfg.noise)
                return run_conversion_quasar(qoracle, learner, sched, rng,
                                             K_override=K_over, record_avg=True)
            return run_conversion(oracle, learner, sched, rng, K_override=K_over)

        return runner, derived

    if optimizer_id not in OPTIMIZER_IDS:
        raise ValueError(f"unknown optimizer {optimizer_id!r}")
    R = problem.constants.R
    eta = cfg.eta if math.isfinite(cfg.eta) else None
    alpha = cfg.alpha if math.isfinite(cfg.alpha) else None

    if optimizer_id == "adamw_avg":
        sched = make_schedule("avg", oracle.constants, eps, cfg.c_hat)
        K = K_over or sched.K
        spec = OptimizerSpec(kind=optimizer_id, R=R, K=K, eps_target=eps)
        derived = {"K": K, "schedule": sched.describe()}
    elif optimizer_id in ("adamw_exp", "adamw_diag", "leonw_diag", "leonw_matrix"):
        if alpha is not None:
            spec = OptimizerSpec(kind=optimizer_id, R=R, K=K_over or 1000,
                                 alpha=alpha, eps_target=eps)
            derived = {"K": spec.K, "alpha": alpha}
        else:
            kind = cfg.schedule if cfg.schedule in ("exp_const", "two_stage", "universal") \
                else "two_stage"
            sched = make_schedule(kind, oracle.constants, eps, cfg.c_hat)
            spec = OptimizerSpec(kind=optimizer_id, R=R, K=K_over or sched.K,
                                 schedule=sched, eps_target=eps)
            derived = {"K": spec.K, "schedule": sched.describe()}
    else:
        K = K_over or derive_K(optimizer_id, oracle, eps)
        spec = OptimizerSpec(kind=optimizer_id, R=R, K=K, eta=eta, eps_target=eps)
        derived = {"K": K, "eta": eta}

    def runner(rng):
        rec = run_optimizer(spec, oracle, rng)
        derived.update(spec.derived)
        return rec

    return runner, derived


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def _csv_text(run_id: str, seed: int, rec, timing: bool) -> str:
    lines = [",".join(CSV_COLUMNS)]
    wall = rec.wall_ns if timing else 0
    K = rec.K
    gap_avg = rec.gap_avg_hist if rec.gap_avg_hist is not None else None
    for k in range(1, K + 1):
        lines.append(",".join((
            run_id, str(seed), str(k),
            _fmt(rec.gap_hist[k]),
            _fmt(gap_avg[k]) if gap_avg is not None else "nan",
            _fmt(rec.step_norm[k - 1]),
            _fmt(rec.eff_step[k - 1]),
            _fmt(rec.regret_running[k - 1]),
            str(wall if k == K else 0),
        )))
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sanitize(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in s)


def run_cell(cfg_dict: dict, optimizer_id: str, seed: int) -> tuple:
    """Execute one (optimizer, seed) cell; returns (run_id, csv_text, derived)."""
    cfg = ExperimentConfig(**{k: v for k, v in cfg_dict.items()})
    problem = from_spec(cfg.problem)
    runner, derived = _build_runner(cfg, optimizer_id, problem)
    rng = RunRng(seed, f"{cfg.problem}|{optimizer_id}")
    rec = runner(rng)
    run_id = _sanitize(f"{cfg.problem}__{optimizer_id}__s{seed}")
    derived = dict(derived)
    derived["hit_k"] = rec.hit_k
    derived["final_gap"] = rec.final_gap
    derived["best_gap"] = rec.best_gap
    derived["rescale_events"] = rec.rescale_events
    return run_id, _csv_text(run_id, seed, rec, cfg.timing), derived


def cli_run(cfg: ExperimentConfig) -> list:
    """Execute all (optimizer x seed) cells; write one CSV per cell plus a manifest.

    Validates every cell's schedule/parameters before writing anything, so a
    bad config leaves no partial files.
    """
    out = os.environ.get("GLOPT_OUT", cfg.out)
    problem = from_spec(cfg.problem)  # validate early
    for opt in cfg.optimizers:
        _build_runner(cfg, opt, problem)

    cells = [(opt, seed) for opt in cfg.optimizers for seed in cfg.seeds]
    cfg_dict = cfg.to_dict()
    results = []
    if cfg.parallel > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            futures = [pool.submit(run_cell, cfg_dict, opt, seed) for opt, seed in cells]
            results = [f.result() for f in futures]
    else:
        results = [run_cell(cfg_dict, opt, seed) for opt, seed in cells]

    os.makedirs(out, exist_ok=True)
    paths = []
    manifest = [f"{k} = {v}" for k, v in sorted(cfg_dict.items())]
    for (run_id, csv_text, derived), (opt, seed) in zip(results, cells):
        path = os.path.join(out, run_id + ".csv")
        _atomic_write(path, csv_text)
        paths.append(path)
        manifest.append(f"derived[{run_id}] = "
                        + json.dumps(derived, sort_keys=True, default=repr))
    _atomic_write(os.path.join(out, "manifest.txt"), "\n".join(manifest) + "\n")
    return paths


def cli_compare(cfg: ExperimentConfig) -> list:
    """Iterations-to-eps per optimizer (median over seeds) next to the derived horizon.

    Returns rows of (optimizer, median_hit_k_or_None, derived_K, median_final_gap).
    """
    if len(cfg.optimizers) < 1:
        raise ValueError("compare needs at least one optimizer")
    cfg_dict = cfg.to_dict()
    rows = []
    for opt in cfg.optimizers:
        hits, finals, derived_K = [], [], None
        for seed in cfg.seeds:
            _, _, derived = run_cell(cfg_dict, opt, seed)
            derived_K = derived.get("K", derived.get("schedule", {}).get("K"))
            hits.append(derived["hit_k"] if derived["hit_k"] is not None else math.inf)
            finals.append(derived["final_gap"])
        med = float(np.median(hits))
        rows.append((opt, None if math.isinf(med) else int(med), derived_K,
                     float(np.median(finals))))
    return rows


def cli_lower_bound(kind: str, R: float, G0: float, G1: float, eps: float,
                    K_max: int, eta: float = None, seeds=(0,), c_hat: float = 1.0) -> dict:
    """Run the trap instance against its target method and the two-stage runner.

    For sgd_* kinds the target is constant-stepsize SGD; for ada_* kinds it is
    AdaGrad-Norm. Both are compared with clipped-update two-stage AdamW using
    its derived horizon. Reports first-k-to-eps (min of last and averaged
    iterate) and the trajectory floor for each method, capped at K_max steps.
    """
    problem = make_lower_bound(kind, R=R, G0=G0, G1=G1, eps=eps)
    oracle = StochOracle(problem)
    if eta is None:
        eta = 2.0 * (2.0 * R / G0) * math.exp(-R * G1 / 4.0) if kind.startswith("sgd") else R
    target = "sgd_const" if kind.startswith("sgd") else "adagrad_norm"
    sched = make_schedule("two_stage", oracle.constants, eps, c_hat)

    report = {"kind": kind, "eps": eps, "eta": eta, "adamw_K": sched.K,
              "methods": {}}
    spec = OptimizerSpec(kind=target, R=R, K=K_max, eta=eta, eps_target=eps)
    rec = run_optimizer(spec, oracle, RunRng(seeds[0], f"lb:{kind}:{target}"))
    floor = float(np.min(np.minimum(rec.gap_hist, rec.gap_avg_hist)))
    report["methods"][target] = {"hit_k": rec.hit_k, "min_gap": floor}

    hits, floors = [], []
    for seed in seeds:
        spec = OptimizerSpec(kind="adamw_exp", R=R, K=min(sched.K, K_max),
                             schedule=sched, eps_target=eps)
        rec = run_optimizer(spec, oracle, RunRng(seed, f"lb:{kind}:adamw"))
        hits.append(rec.hit_k if rec.hit_k is not None else math.inf)
        floors.append(float(np.min(np.minimum(rec.gap_hist, rec.gap_avg_hist))))
    med = float(np.median(hits))
    report["methods"]["adamw_exp_two_stage"] = {
        "hit_k": None if math.isinf(med) else int(med),
        "min_gap": float(np.median(floors)),
    }
    return report
