"""Numeric checkers that turn the structural assumptions into falsifiable tests.

Every checker is deterministic given (seed, config), reports the worst
witness it found, and doubles as a brute-force oracle for expected values
used elsewhere in the test suite. Negative controls (deliberately falsified
constants) are expected to make these fail; a checker that cannot fail is
broken.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .online import RegretRecord, learner_play, learner_step, make_learner, regret_eval
from .problems import Problem, QuasarOracle, StochOracle
from .rng import run_stream

__all__ = [
    "CheckReport",
    "check_lemma_m01",
    "check_grad_growth",
    "check_oracle_unbiased",
    "check_tech_lemma",
    "check_regret_assumption",
    "check_h_property",
    "certify_quasar",
    "slope_fit",
    "SlopeFit",
]


@dataclass
class CheckReport:
    name: str
    passed: bool
    n_checked: int
    n_violations: int
    max_violation: float
    worst_witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        return json.dumps(clean(self.__dict__), sort_keys=True)


def _sample_ball(gen: np.random.Generator, d: int, radius: float, n: int) -> np.ndarray:
    pts = gen.normal(size=(n, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= radius * gen.uniform(size=(n, 1)) ** (1.0 / d)
    return pts


def check_lemma_m01(problem: Problem, n_pairs: int = 10_000, tol: float = 1e-8,
                    seed: int = 0, M0: Optional[float] = None,
                    M1: Optional[float] = None) -> CheckReport:
    """Check both growth inequalities on sampled pairs in the doubled ball.

    |f(x') - f(x)| must be at most (M0/M1 + gap(x)) * (exp(M1 ||x'-x||) - 1)
    and at most (M0 + M1 gap(x)) * exp(M1 ||x'-x||) * ||x'-x||; the M1 = 0
    limit of the first line is M0 ||x'-x||. Pass M0/M1 overrides to run a
    negative control with falsified constants.
    """
    c = problem.constants
    M0 = c.M0 if M0 is None else M0
    M1 = c.M1 if M1 is None else M1
    gen = run_stream(seed, f"m01:{problem.name}")
    X = _sample_ball(gen, problem.d, 2.0 * c.R, n_pairs)
    Y = _sample_ball(gen, problem.d, 2.0 * c.R, n_pairs)
    worst, worst_w, nviol = -math.inf, {}, 0
    for x, y in zip(X, Y):
        fx, fy = problem.value(x), problem.value(y)
        gap = max(fx - c.fstar, 0.0)
        dist = float(np.linalg.norm(y - x))
        lhs = abs(fy - fx)
        if M1 == 0.0:
            line1 = M0 * dist
        else:
            line1 = (M0 / M1 + gap) * math.expm1(M1 * dist)
        line2 = (M0 + M1 * gap) * math.exp(M1 * dist) * dist
        viol = max(lhs - line1, lhs - line2) / max(1.0, lhs)
        if viol > worst:
            worst = viol
            worst_w = {"x": x, "y": y, "lhs": lhs, "line1": line1, "line2": line2}
        if viol > tol:
            nviol += 1
    return CheckReport(name=f"lemma_m01[{problem.name}]", passed=nviol == 0,
                       n_checked=n_pairs, n_violations=nviol, max_violation=worst,
                       worst_witness=worst_w, details={"M0": M0, "M1": M1, "tol": tol})


def check_grad_growth(problem: Problem, n_points: int = 10_000, tol: float = 1e-9,
                      seed: int = 0, M0: Optional[float] = None,
                      M1: Optional[float] = None) -> CheckReport:
    """Check ||subgrad(x)|| <= M0 + M1 * gap(x) on sampled points in the doubled ball."""
    c = problem.constants
    M0 = c.M0 if M0 is None else M0
    M1 = c.M1 if M1 is None else M1
    gen = run_stream(seed, f"grad_growth:{problem.name}")
    X = _sample_ball(gen, problem.d, 2.0 * c.R, n_points)
    worst, worst_w, nviol = -math.inf, {}, 0
    for x in X:
        gn = float(np.linalg.norm(problem.subgrad(x)))
        bound = M0 + M1 * max(problem.value(x) - c.fstar, 0.0)
        viol = (gn - bound) / max(1.0, bound)
        if viol > worst:
            worst, worst_w = viol, {"x": x, "grad_norm": gn, "bound": bound}
        if viol > tol:
            nviol += 1
    return CheckReport(name=f"grad_growth[{problem.name}]", passed=nviol == 0,
                       n_checked=n_points, n_violations=nviol, max_violation=worst,
                       worst_witness=worst_w, details={"M0": M0, "M1": M1})


def check_oracle_unbiased(oracle: StochOracle, x, n_samples: int = 100_000,
                          seed: int = 0) -> CheckReport:
    """Monte-Carlo unbiasedness: the sample mean must sit within 3 standard errors
    of the subgradient coordinate-wise, the decomposition must add up exactly,
    and the declared second-moment / gap bounds must hold per draw."""
    x = np.asarray(x, dtype=float)
    gen = run_stream(seed, f"oracle:{oracle.problem.name}:{oracle.model}")
    target = oracle.problem.subgrad(x)
    gap = oracle.problem.gap(x)
    decl = oracle.constants
    d = x.size
    acc = np.zeros(d)
    acc2 = np.zeros(d)
    u2_sum = 0.0
    worst, nviol = -math.inf, 0
    for _ in range(n_samples):
        s = oracle.sample(x, gen)
        if not np.array_equal(s.u_part + s.v_part, s.grad):
            nviol += 1
        vn = float(np.linalg.norm(s.v_part))
        viol = vn - decl.G1 * gap * (1 + 1e-12)
        worst = max(worst, viol)
        if viol > 0:
            nviol += 1
        u2_sum += float(s.u_part @ s.u_part)
        acc += s.grad
        acc2 += s.grad**2
    mean = acc / n_samples
    var = np.maximum(acc2 / n_samples - mean**2, 0.0)
    se = np.sqrt(var / n_samples)
    z = np.abs(mean - target) / np.maximum(se, 1e-15)
    bias_ok = bool(np.all(z <= 3.0) or np.allclose(mean, target, atol=1e-12))
    u2_ok = u2_sum / n_samples <= decl.G0**2 * (1 + 1e-9)
    passed = nviol == 0 and bias_ok and u2_ok
    return CheckReport(name=f"oracle_unbiased[{oracle.problem.name}/{oracle.model}]",
                       passed=passed, n_checked=n_samples, n_violations=nviol,
                       max_violation=worst,
                       worst_witness={"mean": mean, "target": target, "max_z": float(np.max(z))},
                       details={"E_u2": u2_sum / n_samples, "G0^2": decl.G0**2,
                               "bias_ok": bias_ok, "u2_ok": u2_ok})


# ---------------------------------------------------------------------------
# weighted-recursion bounds
# ---------------------------------------------------------------------------


def _random_schedule(gen, n, quasar: bool):
    """(alpha_k, pi_k, pi0, gamma) drawn from the admissible families."""
    gamma = float(gen.uniform(0.1, 1.0)) if quasar else 1.0
    style = int(gen.integers(0, 3)) if not quasar else int(gen.integers(1, 3))
    alphas = np.empty(n)
    if style == 0:  # harmonic weights, pi0 = 0
        alphas = 1.0 / np.arange(1, n + 1)
        pi0 = 0.0
    elif style == 1:  # constant
        alphas[:] = gen.uniform(0.02, 0.8)
        pi0 = 1.0
    else:  # one switch downward
        a1 = gen.uniform(0.1, 0.8)
        a2 = gen.uniform(0.01, a1)
        cut = int(gen.integers(1, n))
        alphas[:cut], alphas[cut:] = a1, a2
        pi0 = 1.0
    pis = np.empty(n + 1)
    pis[0] = pi0
    for k in range(1, n + 1):
        if pi0 == 0.0 and k == 1:
            pis[1] = 1.0  # harmonic family: pi_k = k
        else:
            pis[k] = pis[k - 1] / (1.0 - gamma * alphas[k - 1])
    return alphas, pis, pi0, gamma


def check_tech_lemma(variant: str = "tech", n_trials: int = 1000, seed: int = 0,
                     tol: float = 1e-9, n_steps: int = 40,
                     falsify: bool = False) -> CheckReport:
    """Probe the weighted-sum recursion bound with extremal sequences.

    For random (p, alpha, pi, delta) the hypothesis
    pi_k D_k <= delta_k + p * [gamma *] sum_{i<=k} a_i pi_i D_i is made to hold
    with equality (a greedy forward recursion yields the largest admissible
    D), and the concluded bound on sum a_i pi_i D_i is then verified. The
    `tech` variant uses the plain weight recursion and has the doubled
    first-term alternative at pi0 = 0; `tech2` uses the gamma-damped one.
    """
    if variant not in ("tech", "tech2"):
        raise ValueError("variant must be 'tech' or 'tech2'")
    quasar = variant == "tech2"
    gen = run_stream(seed, f"tech:{variant}")
    worst, worst_w, nviol = -math.inf, {}, 0
    for trial in range(n_trials):
        p = float(gen.uniform(0.05, 0.5))
        alphas, pis, pi0, gamma = _random_schedule(gen, n_steps, quasar)
        deltas = gen.uniform(0.0, 1.0, size=n_steps) * 10.0 ** gen.uniform(-3, 3)
        damp = gamma if quasar else 1.0
        tau = 0.0
        taus = np.empty(n_steps)
        for k in range(n_steps):
            pi_k, a_k = pis[k + 1], alphas[k]
            # equality in the hypothesis: pi_k D_k = delta_k + p*damp*(tau + a_k pi_k D_k)
            D = (deltas[k] + p * damp * tau) / (pi_k * (1.0 - p * damp * a_k))
            tau += a_k * pi_k * D
            taus[k] = tau
        # bound_k = pi_k^p * sum_{i<=k} a_i delta_i pi_{i-1}^{-p} with the first
        # term replaced by min((pi_k/pi_0)^p, 2 (pi_k/pi_1)^p) for the plain
        # recursion (1/0 = +inf when pi_0 = 0)
        pks = pis[1:] ** p
        tail = np.concatenate([[0.0], np.cumsum(alphas[1:] * deltas[1:] * pis[1:-1] ** -p)])
        plain = (1.0 / pi0**p) if pi0 > 0.0 else math.inf
        first = plain if quasar else min(plain, 2.0 / pis[1] ** p)
        bounds = pks * (tail + alphas[0] * deltas[0] * first)
        if falsify:
            bounds *= 0.5
        viols = (taus - bounds) / np.maximum(1.0, np.abs(bounds))
        k_worst = int(np.argmax(viols))
        if viols[k_worst] > worst:
            worst = float(viols[k_worst])
            worst_w = {"trial": trial, "k": k_worst + 1, "tau": taus[k_worst],
                       "bound": bounds[k_worst], "p": p, "gamma": gamma, "pi0": pi0}
        nviol += int(np.sum(viols > tol))
    return CheckReport(name=f"tech_lemma[{variant}]", passed=nviol == 0,
                       n_checked=n_trials * n_steps, n_violations=nviol,
                       max_violation=worst, worst_witness=worst_w,
                       details={"tol": tol, "falsified": falsify})


def check_regret_assumption(learner_id: str, streams: int = 100, K: int = 1000,
                            C_threshold: float = 4.0, seed: int = 0,
                            scale_range: tuple = (-3.0, 3.0),
                            R: float = 1.0) -> CheckReport:
    """Measure Reg_K / (R * sqrt(sum ||g||^2)) over random gradient streams.

    Streams mix per-step scales across the given log10 range. Reports the
    largest empirical constant; passes when it stays below C_threshold.
    """
    if not C_threshold > 0:
        raise ValueError("C_threshold must be positive")
    gen = run_stream(seed, f"regret:{learner_id}")
    worst_C, worst_w, nviol = 0.0, {}, 0
    for s in range(streams):
        d = int(gen.integers(1, 6))
        state = make_learner(learner_id, d, R)
        rec = RegretRecord.empty(d)
        z = learner_play(state)
        sumsq = 0.0
        scales = 10.0 ** gen.uniform(scale_range[0], scale_range[1], size=K)
        dirs = gen.normal(size=(K, d))
        for k in range(K):
            g = scales[k] * dirs[k]
            rec.append(z, g)
            sumsq += float(g @ g)
            state, z = learner_step(state, g)
        bound = R * math.sqrt(sumsq)
        reg = regret_eval(rec, R, state.geometry)
        C = reg / bound if bound > 0 else 0.0
        if C > worst_C:
            worst_C, worst_w = C, {"stream": s, "regret": reg, "bound": bound, "d": d}
        if C > C_threshold:
            nviol += 1
    return CheckReport(name=f"regret[{learner_id}]", passed=nviol == 0,
                       n_checked=streams, n_violations=nviol, max_violation=worst_C,
                       worst_witness=worst_w,
                       details={"C_threshold": C_threshold, "K": K})


def check_h_property(problem: Problem, n_pairs: int = 10_000, seed: int = 0,
                     big_o_constant: float = 8.0, tol: float = 1e-9,
                     L0: Optional[float] = None) -> CheckReport:
    """Smoothed-gap regularity: with h = (beta + gap)^(1/(1+nu)) and
    beta = min((sigma^(1+nu)/L0)^(1/nu), sigma/L1),
    |h(x')-h(x)|^(1+nu) <= C * (L0 + (L1 h(x))^(1+nu)) * exp(L1 ||x'-x||) * ||x'-x||^(1+nu)
    must hold with the configured explicit constant C standing in for the
    hidden one. Pass an understated L0 as a negative control."""
    c = problem.constants
    nu = c.nu
    L0 = c.L0 if L0 is None else L0
    L1, sigma = c.L1, c.sigma
    if sigma == 0.0:
        beta = 0.0
    else:
        t1 = (sigma ** (1 + nu) / L0) ** (1.0 / nu) if (L0 > 0 and nu > 0) else math.inf
        t2 = sigma / L1 if L1 > 0 else math.inf
        beta = min(t1, t2)
    gen = run_stream(seed, f"h_prop:{problem.name}")
    X = _sample_ball(gen, problem.d, 2.0 * c.R, n_pairs)
    Y = _sample_ball(gen, problem.d, 2.0 * c.R, n_pairs)

    def h(x):
        return (beta + max(problem.value(x) - c.fstar, 0.0)) ** (1.0 / (1.0 + nu))

    worst, worst_w, nviol = -math.inf, {}, 0
    for x, y in zip(X, Y):
        hx, hy = h(x), h(y)
        dist = float(np.linalg.norm(y - x))
        lhs = abs(hy - hx) ** (1 + nu)
        rhs = (big_o_constant * (L0 + (L1 * hx) ** (1 + nu))
               * math.exp(L1 * dist) * dist ** (1 + nu))
        viol = (lhs - rhs) / max(1.0, rhs)
        if viol > worst:
            worst, worst_w = viol, {"x": x, "y": y, "lhs": lhs, "rhs": rhs}
        if viol > tol:
            nviol += 1
    return CheckReport(name=f"h_property[{problem.name}]", passed=nviol == 0,
                       n_checked=n_pairs, n_violations=nviol, max_violation=worst,
                       worst_witness=worst_w,
                       details={"beta": beta, "constant": big_o_constant, "L0": L0})


def certify_quasar(problem: Problem, gamma_grid=None, t_grid=None, x_grid=None,
                   slack: float = 1e-9, oracle: Optional[QuasarOracle] = None,
                   seed: int = 0) -> CheckReport:
    """Largest grid gamma for which the quasar interpolation inequality holds.

    Checks f(t x* + (1-t) x) <= gamma t f* + (1 - gamma t) f(x) at all grid
    pairs, with slack. When an oracle is given, additionally spot-checks the
    first-order form gamma * gap <= <x - x*, grad_dir(x, w)> at sampled points.
    """
    c = problem.constants
    xs = np.asarray(c.xstar, dtype=float)
    if gamma_grid is None:
        gamma_grid = np.round(np.arange(0.01, 1.0 + 1e-9, 0.01), 10)
    if t_grid is None:
        t_grid = np.linspace(1e-4, 1.0, 200)
    if x_grid is None:
        gen = run_stream(seed, f"quasar:{problem.name}")
        x_grid = _sample_ball(gen, problem.d, 2.0 * c.R, 400)
        x_grid = x_grid[np.linalg.norm(x_grid - xs, axis=1) > 1e-6]
    # max admissible gamma at each (t, x): f(x) - f(x_t) >= gamma t (f(x) - f*)
    gamma_cap = math.inf
    worst_w = {}
    for x in x_grid:
        fx = problem.value(x)
        gap = fx - c.fstar
        if gap <= 0.0:
            continue
        for t in t_grid:
            fxt = problem.value(t * xs + (1.0 - t) * x)
            cap = (fx - fxt + slack * max(1.0, abs(fx))) / (t * gap)
            if cap < gamma_cap:
                gamma_cap = cap
                worst_w = {"x": x, "t": float(t), "cap": cap}
    certified = 0.0
    for g in sorted(np.asarray(gamma_grid)):
        if g <= gamma_cap:
            certified = float(g)
    grad_ok = True
    if oracle is not None:
        gen = run_stream(seed + 1, f"quasar_grad:{problem.name}")
        for x in x_grid[:50]:
            w = gen.normal(size=problem.d)
            s = oracle.sample_dir(x, w, gen)
            lhs = certified * (problem.value(x) - c.fstar)
            rhs = float((x - xs) @ s.grad)
            if lhs > rhs + 1e-7 * max(1.0, abs(rhs)):
                grad_ok = False
                worst_w = {"x": x, "w": w, "lhs": lhs, "rhs": rhs}
    return CheckReport(name=f"certify_quasar[{problem.name}]",
                       passed=certified > 0.0 and grad_ok,
                       n_checked=len(x_grid) * len(t_grid),
                       n_violations=0 if grad_ok else 1,
                       max_violation=float(gamma_cap), worst_witness=worst_w,
                       details={"certified_gamma": certified,
                                "gamma_cap": float(gamma_cap),
                                "first_order_ok": grad_ok})


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2_loglog: float
    r2_exponential: float
    n_points: int
    constant_series: bool = False
    exponential_like: bool = False


def slope_fit(gaps, k_min: int = 1) -> SlopeFit:
    """Least-squares slope of log(gap) vs log(k) over the tail k >= k_min.

    Requires at least 20 usable points. Flags constant series (slope pinned
    to 0) and series that a log-linear-in-k model fits distinctly better
    (geometric decay, for which a power-law slope is meaningless).
    """
    gaps = np.asarray(gaps, dtype=float)
    ks = np.arange(len(gaps))
    mask = (ks >= k_min) & (gaps > 0) & np.isfinite(gaps)
    ks, ys = ks[mask], np.log(gaps[mask])
    if ks.size < 20:
        raise ValueError(f"need >= 20 points beyond k_min, have {ks.size}")
    if np.max(ys) - np.min(ys) < 1e-12:
        return SlopeFit(0.0, float(ys[0]), 1.0, 1.0, ks.size, constant_series=True)

    def fit(xs):
        A = np.vstack([xs, np.ones_like(xs)]).T
        coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
        resid = ys - A @ coef
        ss_res = float(resid @ resid)
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        return coef, 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    (slope, intercept), r2_log = fit(np.log(ks))
    _, r2_exp = fit(ks.astype(float))
    return SlopeFit(float(slope), float(intercept), float(r2_log), float(r2_exp),
                    ks.size, exponential_like=r2_exp > r2_log + 0.05)
