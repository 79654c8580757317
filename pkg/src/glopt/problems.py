"""Objective suite with exact minimizers, growth constants, and stochastic oracles.

Each problem carries analytic constants: the Euclidean ball radius R that
contains a minimizer, gradient-growth constants (M0, M1) such that
||subgrad(x)|| <= M0 + M1*(f(x) - f*), their stochastic counterparts
(G0, G1) for the u+v oracle decomposition, the maximum gap F over the ball,
and optional smoothness/quasar parameters (nu, sigma, L0, L1, gamma).

Problems are immutable and shareable across threads. Oracles draw from an
explicit caller-owned numpy Generator.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .rng import run_stream

__all__ = [
    "ProblemConstants",
    "Problem",
    "OracleSample",
    "StochOracle",
    "QuasarOracle",
    "make_exp_inf",
    "make_power_inf",
    "make_inf_dist",
    "make_holder",
    "make_norm_power",
    "make_quasar_ripple",
    "make_lower_bound",
    "sample_grad",
    "sample_generalized_grad",
    "exact_F",
    "mf_bound",
    "from_spec",
    "default_suite",
]

LOWER_BOUND_KINDS = ("sgd_I", "sgd_II", "ada_I", "ada_II", "ada_III")


@dataclass(frozen=True)
class ProblemConstants:
    """Scalar regime constants attached to a problem."""

    R: float
    M0: float
    M1: float
    G0: float
    G1: float
    F: float
    fstar: float
    xstar: np.ndarray
    nu: float = 0.0
    sigma: float = 0.0
    L0: float = 0.0
    L1: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        xs = np.asarray(self.xstar, dtype=float)
        object.__setattr__(self, "xstar", xs)
        if np.linalg.norm(xs) > self.R * (1 + 1e-12):
            raise ValueError("||xstar|| must be <= R")
        for name in ("M0", "M1", "G0", "G1", "F", "sigma", "L0", "L1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("nu must be in [0, 1]")
        if self.nu == 0.0 and self.sigma != 0.0:
            raise ValueError("sigma must be 0 whenever nu = 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")

    def with_updates(self, **kw) -> "ProblemConstants":
        return replace(self, **kw)


@dataclass(frozen=True)
class Problem:
    """Objective with value, a deterministic subgradient selection, and constants.

    `grad_dir(x, w)`, when present, returns a generalized gradient whose inner
    product with w equals the directional derivative at x along w; it is
    required by quasar oracles and falls back to `subgrad` at smooth points.
    """

    name: str
    d: int
    value: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], np.ndarray]
    constants: ProblemConstants
    convex: bool = True
    grad_dir: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def gap(self, x) -> float:
        return max(self.value(np.asarray(x, dtype=float)) - self.constants.fstar, 0.0)

    def with_constants(self, **kw) -> "Problem":
        return replace(self, constants=self.constants.with_updates(**kw))


@dataclass(frozen=True)
class OracleSample:
    """One stochastic gradient draw with its u+v decomposition."""

    grad: np.ndarray
    u_part: np.ndarray
    v_part: np.ndarray
    xi_descriptor: int = 0


def _split_uv(g: np.ndarray, u_cap: float) -> tuple[np.ndarray, np.ndarray]:
    """Split g = u + v with ||u|| <= u_cap and v the gap-proportional excess."""
    n = float(np.linalg.norm(g))
    if n <= u_cap or n == 0.0:
        return g, np.zeros_like(g)
    u = g * (u_cap / n)
    return u, g - u


def _pack_bits(bits: np.ndarray) -> int:
    out = 0
    for i, b in enumerate(bits[:63]):
        out |= (int(b) & 1) << i
    return out


@dataclass(frozen=True)
class StochOracle:
    """Stochastic gradient oracle over a base problem.

    Models:
      deterministic -- returns the subgradient, split analytically into a
        bounded part (norm <= base G0) and a gap-proportional part.
      v_bernoulli   -- multiplies the gap-proportional part by xi in {0, 2}
        equiprobably; unbiased, and the declared G1 doubles.
      u_additive    -- adds zero-mean noise of norm `noise_scale` to the
        bounded part; the declared G0 becomes sqrt(G0^2 + noise_scale^2).
    """

    problem: Problem
    model: str = "deterministic"
    noise_scale: float = 0.0
    constants: ProblemConstants = field(init=False)

    def __post_init__(self):
        base = self.problem.constants
        if self.model == "deterministic":
            decl = base
        elif self.model == "v_bernoulli":
            decl = base.with_updates(G1=2.0 * base.G1)
        elif self.model == "u_additive":
            if not self.noise_scale >= 0:
                raise ValueError("noise_scale must be >= 0")
            decl = base.with_updates(G0=math.hypot(base.G0, self.noise_scale))
        else:
            raise ValueError(f"unknown oracle model {self.model!r}")
        object.__setattr__(self, "constants", decl)

    def sample(self, x, rng: Optional[np.random.Generator]) -> OracleSample:
        x = np.asarray(x, dtype=float)
        return self._finish(self.problem.subgrad(x), rng)

    def _finish(self, g: np.ndarray, rng) -> OracleSample:
        base = self.problem.constants
        u, v = _split_uv(g, base.G0)
        if self.model == "deterministic":
            return OracleSample(grad=u + v, u_part=u, v_part=v)
        if self.model == "v_bernoulli":
            xi = int(rng.integers(0, 2))
            v = v * (2.0 * xi)
            return OracleSample(grad=u + v, u_part=u, v_part=v, xi_descriptor=xi)
        # u_additive
        bits = rng.integers(0, 2, size=g.size)
        signs = 2.0 * bits - 1.0
        zeta = (self.noise_scale / math.sqrt(g.size)) * signs
        u = u + zeta
        return OracleSample(grad=u + v, u_part=u, v_part=v, xi_descriptor=_pack_bits(bits))


@dataclass(frozen=True)
class QuasarOracle(StochOracle):
    """Direction-dependent generalized-gradient oracle for quasar-convex problems."""

    def sample_dir(self, x, w, rng: Optional[np.random.Generator]) -> OracleSample:
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.problem.grad_dir is not None:
            g = self.problem.grad_dir(x, w)
        else:
            g = self.problem.subgrad(x)
        return self._finish(g, rng)


def sample_grad(oracle: StochOracle, x, rng) -> OracleSample:
    return oracle.sample(x, rng)


def sample_generalized_grad(oracle: QuasarOracle, x, w, rng) -> OracleSample:
    return oracle.sample_dir(x, w, rng)


# ---------------------------------------------------------------------------
# max-norm composites: f(x) = phi(||Ax - b||_inf)
# ---------------------------------------------------------------------------


def _consistent_minimizer(A: np.ndarray, b: np.ndarray, R: float) -> np.ndarray:
    xhat, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = float(np.max(np.abs(A @ xhat - b))) if b.size else 0.0
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    if res > 1e-10 * scale:
        raise ValueError("b must lie in the range of A (exact optimum required)")
    if np.linalg.norm(xhat) > R * (1 + 1e-12):
        raise ValueError("the minimizer of ||Ax - b||_inf must satisfy ||x|| <= R")
    return xhat


def _inf_norm_parts(A: np.ndarray, b: np.ndarray, x: np.ndarray):
    r = A @ x - b
    i = int(np.argmax(np.abs(r)))  # lowest max-attaining index
    return float(np.abs(r[i])), i, (1.0 if r[i] >= 0 else -1.0)


def _max_inf_on_ball(A: np.ndarray, b: np.ndarray, R: float) -> float:
    row_norms = np.linalg.norm(A, axis=1)
    return float(np.max(row_norms * R + np.abs(b)))


def make_exp_inf(A, b=None, R: float = 1.0) -> Problem:
    """f(x) = exp(||Ax - b||_inf). Gradient norms grow with the gap itself."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    if not np.any(A):
        raise ValueError("A must be nonzero")
    xstar = _consistent_minimizer(A, b, R)
    nstar, _, _ = _inf_norm_parts(A, b, xstar)
    fstar = math.exp(nstar)
    M1 = float(np.linalg.norm(A, 2))
    M0 = M1 * fstar
    F = math.exp(_max_inf_on_ball(A, b, R)) - fstar

    def value(x):
        n, _, _ = _inf_norm_parts(A, b, np.asarray(x, dtype=float))
        return math.exp(n)

    def subgrad(x):
        n, i, s = _inf_norm_parts(A, b, np.asarray(x, dtype=float))
        return math.exp(n) * s * A[i]

    consts = ProblemConstants(R=R, M0=M0, M1=M1, G0=M0, G1=M1, F=F,
                              fstar=fstar, xstar=xstar, nu=1.0, sigma=M0, L0=0.0, L1=M1)
    return Problem(name="exp_inf", d=A.shape[1], value=value, subgrad=subgrad,
                   constants=consts)


def make_power_inf(A, b=None, p: float = 2.0, M1_choice: float = 1.0,
                   R: float = 1.0) -> Problem:
    """f(x) = ||Ax - b||_inf ** p for p > 1."""
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if not M1_choice > 0:
        raise ValueError("M1_choice must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    xstar = _consistent_minimizer(A, b, R)
    nstar, _, _ = _inf_norm_parts(A, b, xstar)
    fstar = nstar**p
    opA = float(np.linalg.norm(A, 2))
    M1 = M1_choice
    M0 = opA**p * ((p - 1) / M1) ** (p - 1) + M1 * fstar
    F = _max_inf_on_ball(A, b, R) ** p - fstar

    def value(x):
        n, _, _ = _inf_norm_parts(A, b, np.asarray(x, dtype=float))
        return n**p

    def subgrad(x):
        n, i, s = _inf_norm_parts(A, b, np.asarray(x, dtype=float))
        if n == 0.0:
            return np.zeros(A.shape[1])
        return p * n ** (p - 1) * s * A[i]

    consts = ProblemConstants(R=R, M0=M0, M1=M1, G0=M0, G1=M1, F=F,
                              fstar=fstar, xstar=xstar)
    return Problem(name="power_inf", d=A.shape[1], value=value, subgrad=subgrad,
                   constants=consts)


def make_inf_dist(xstar, R: float = 1.0) -> Problem:
    """f(x) = ||x - xstar||_inf: a plain 1-Lipschitz instance (M1 = 0)."""
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    d = xstar.size
    F = R + float(np.max(np.abs(xstar)))

    def value(x):
        return float(np.max(np.abs(np.asarray(x, dtype=float) - xstar)))

    def subgrad(x):
        r = np.asarray(x, dtype=float) - xstar
        i = int(np.argmax(np.abs(r)))
        g = np.zeros(d)
        if r[i] != 0.0:
            g[i] = 1.0 if r[i] > 0 else -1.0
        return g

    consts = ProblemConstants(R=R, M0=1.0, M1=0.0, G0=1.0, G1=0.0, F=F,
                              fstar=0.0, xstar=xstar)
    return Problem(name="inf_dist", d=d, value=value, subgrad=subgrad, constants=consts)


# ---------------------------------------------------------------------------
# powers of the Euclidean distance
# ---------------------------------------------------------------------------


def _norm_power_problem(name: str, q: float, scale: float, xstar: np.ndarray,
                        consts: ProblemConstants, convex: bool) -> Problem:
    d = xstar.size

    def value(x):
        n = float(np.linalg.norm(np.asarray(x, dtype=float) - xstar))
        return scale * n**q

    def subgrad(x):
        r = np.asarray(x, dtype=float) - xstar
        n = float(np.linalg.norm(r))
        if n == 0.0:
            return np.zeros(d)
        return (scale * q * n ** (q - 1) / n) * r

    def grad_dir(x, w):
        r = np.asarray(x, dtype=float) - xstar
        n = float(np.linalg.norm(r))
        if n > 0.0:
            return (scale * q * n ** (q - 1) / n) * r
        # Kink at the minimizer: one-sided derivative along w.
        w = np.asarray(w, dtype=float)
        nw = float(np.linalg.norm(w))
        if nw == 0.0 or q > 1.0:
            return np.zeros(d)
        if q < 1.0:
            raise ValueError(f"directional derivative of ||.||^{q} is unbounded at the minimizer")
        return (scale / nw) * w  # q == 1

    return Problem(name=name, d=d, value=value, subgrad=subgrad, constants=consts,
                   convex=convex, grad_dir=grad_dir)


def make_holder(nu: float, L: float, xstar, R: float = 1.0,
                M1_choice: float = 1.0, L1: float = 1e-6) -> Problem:
    """f(x) = L/(1+nu) * ||x - xstar||^(1+nu), differentiable away from xstar.

    Declared smoothness constants: sigma = 0, L0 = L*(1+nu)^nu (tight), and the
    given L1 (any value is valid since the gap-proportional oracle part is 0).
    """
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must be in [0, 1]")
    if not L > 0:
        raise ValueError("L must be positive")
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    q = 1.0 + nu
    scale = L / q
    if nu == 0.0:
        M0, M1 = L, 0.0
    else:
        M1 = M1_choice
        M0 = scale * (nu / M1) ** nu
    F = scale * (R + float(np.linalg.norm(xstar))) ** q
    consts = ProblemConstants(R=R, M0=M0, M1=M1, G0=M0, G1=M1, F=F, fstar=0.0,
                              xstar=xstar, nu=nu, sigma=0.0,
                              L0=L * (1.0 + nu) ** nu, L1=L1)
    return _norm_power_problem("holder", q, scale, xstar, consts, convex=True)


def make_norm_power(q: float, xstar=0.0, scale: float = 1.0, R: float = 1.0,
                    M1_choice: float = 1.0) -> Problem:
    """f(x) = scale * ||x - xstar||^q for q in (0, 2].

    q >= 1 is convex; q < 1 is q-quasar-convex with unbounded gradients near
    the minimizer (usable for certification, not for the runners).
    """
    if not 0.0 < q <= 2.0:
        raise ValueError("q must be in (0, 2]")
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    if q >= 1.0:
        M1 = M1_choice if q > 1.0 else 0.0
        M0 = scale * ((q - 1.0) / M1) ** (q - 1.0) if q > 1.0 else scale * q
        gamma = 1.0
    else:
        M0, M1 = math.inf, 0.0
        gamma = q
    F = scale * (R + float(np.linalg.norm(xstar))) ** q
    consts = ProblemConstants(R=R, M0=M0, M1=M1, G0=M0, G1=M1, F=F, fstar=0.0,
                              xstar=xstar, gamma=gamma)
    return _norm_power_problem("norm_power", q, scale, xstar, consts, convex=q >= 1.0)


def make_quasar_ripple(omega: float = 0.5, R: float = 1.0, G1: float = 1.0,
                       xstar=None) -> Problem:
    """Non-convex quasar benchmark: f(x) = s*n*(2 + cos(omega*log1p(n))),
    n = ||x - xstar||.

    The radial slope is sandwiched in [s*(1 - omega), s*(3 + omega)], so with
    s = 1/(3 + omega) the gradient norm never exceeds 1 (G0 = 1) and any G1 is
    valid. The quasar parameter is at least 1 - omega/sqrt(3) globally; tighter
    values are certified numerically on a grid.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must be in (0, 1)")
    xstar = np.atleast_1d(np.asarray(0.0 if xstar is None else xstar, dtype=float))
    d = xstar.size
    s = 1.0 / (3.0 + omega)
    gamma_global = 1.0 - omega / math.sqrt(3.0)

    def radial(n: float) -> tuple[float, float]:
        u = omega * math.log1p(n)
        val = s * n * (2.0 + math.cos(u))
        slope = s * (2.0 + math.cos(u) - omega * (n / (1.0 + n)) * math.sin(u))
        return val, slope

    def value(x):
        n = float(np.linalg.norm(np.asarray(x, dtype=float) - xstar))
        return radial(n)[0]

    def subgrad(x):
        r = np.asarray(x, dtype=float) - xstar
        n = float(np.linalg.norm(r))
        if n == 0.0:
            return np.zeros(d)
        return (radial(n)[1] / n) * r

    def grad_dir(x, w):
        r = np.asarray(x, dtype=float) - xstar
        n = float(np.linalg.norm(r))
        if n > 0.0:
            return (radial(n)[1] / n) * r
        w = np.asarray(w, dtype=float)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return np.zeros(d)
        return (3.0 * s / nw) * w  # one-sided slope at the kink is s*(2+cos(0)) = 3s

    consts = ProblemConstants(R=R, M0=1.0, M1=0.0, G0=1.0, G1=G1,
                              F=radial(R + float(np.linalg.norm(xstar)))[0],
                              fstar=0.0, xstar=xstar, gamma=gamma_global)
    return Problem(name="quasar_ripple", d=d, value=value, subgrad=subgrad,
                   constants=consts, convex=False, grad_dir=grad_dir)


# ---------------------------------------------------------------------------
# adversarial 1-d instances
# ---------------------------------------------------------------------------


def _require(cond: bool, inequality: str):
    if not cond:
        raise ValueError(f"parameter regime violated: {inequality}")


def _piecewise_1d(name, value_t, subgrad_t, R, G0, G1, xstar_t, extra=None) -> Problem:
    def value(x):
        return value_t(float(np.asarray(x, dtype=float)[0]))

    def subgrad(x):
        return np.array([subgrad_t(float(np.asarray(x, dtype=float)[0]))])

    F = max(value_t(-R), value_t(R))
    kw = dict(extra or {})
    consts = ProblemConstants(R=R, M0=G0, M1=G1, G0=G0, G1=G1, F=F, fstar=0.0,
                              xstar=np.array([xstar_t]), **kw)
    return Problem(name=name, d=1, value=value, subgrad=subgrad, constants=consts)


def make_lower_bound(kind: str, R: float, G0: float, G1: float, eps: float) -> Problem:
    """Exact 1-d adversarial instances used by the stepsize-trap arguments.

    sgd_I / sgd_II target constant-stepsize SGD and require R*G1 >= 8 and
    eps <= (G0/G1)*exp(R*G1/8); ada_I / ada_II / ada_III target AdaGrad-Norm
    stepsizes and require R*G1 >= 32 and eps <= (G0/G1)*exp(R*G1/64).
    Subgradients at kinks follow the selections the trap dynamics rely on.
    """
    if kind not in LOWER_BOUND_KINDS:
        raise ValueError(f"kind must be one of {LOWER_BOUND_KINDS}")
    _require(R > 0, "R > 0")
    _require(G0 > 0, "G0 > 0")
    _require(G1 > 0, "G1 > 0")
    _require(eps > 0, "eps > 0")
    if kind.startswith("sgd"):
        _require(R * G1 >= 8, "R*G1 >= 8")
        _require(eps <= (G0 / G1) * math.exp(R * G1 / 8), "eps <= (G0/G1)*exp(R*G1/8)")
    else:
        _require(R * G1 >= 32, "R*G1 >= 32")
        _require(eps <= (G0 / G1) * math.exp(R * G1 / 64), "eps <= (G0/G1)*exp(R*G1/64)")

    C = G0 / G1

    if kind in ("sgd_I", "ada_I"):
        a, bdy = 0.75 * R, 0.5 * R
        E = math.exp(R * G1 / 4)

        def value_t(t):
            if t >= bdy:
                return C * (math.exp(G1 * abs(t - a)) - 1.0)
            return G0 * E * (bdy - t) + C * (E - 1.0)

        def subgrad_t(t):
            if t >= bdy:
                if t > a:
                    return G0 * math.exp(G1 * (t - a))
                if t < a:
                    return -G0 * math.exp(G1 * (a - t))
                return 0.0
            return -G0 * E

        return _piecewise_1d(kind, value_t, subgrad_t, R, G0, G1, a)

    if kind == "sgd_II":
        c = 0.5 * R
        slope = 8.0 * eps / R
        r = max(0.0, math.log(8.0 * eps / (R * G0)) / G1)

        def value_t(t):
            u = abs(t - c)
            if u <= r:
                return C * (math.exp(G1 * u) - 1.0)
            return slope * (u - r) + C * (math.exp(G1 * r) - 1.0)

        def subgrad_t(t):
            u = abs(t - c)
            s = 1.0 if t > c else -1.0
            if t == c:
                return 0.0
            if u <= r:
                return s * G0 * math.exp(G1 * u)
            return s * slope

        return _piecewise_1d(kind, value_t, subgrad_t, R, G0, G1, c)

    if kind == "ada_II":
        c = R / 16.0
        slope = 32.0 * eps / R
        r = max(0.0, math.log(32.0 * eps / (R * G0)) / G1)

        def value_t(t):
            if t <= c + r:
                return C * (math.exp(G1 * abs(t - c)) - 1.0)
            return slope * (t - c - r) + C * (math.exp(G1 * r) - 1.0)

        def subgrad_t(t):
            if t == c:
                return 0.0
            if t <= c + r:
                s = 1.0 if t > c else -1.0
                return s * G0 * math.exp(G1 * abs(t - c))
            return slope

        return _piecewise_1d(kind, value_t, subgrad_t, R, G0, G1, c)

    # ada_III
    slope = 32.0 * eps / R
    r = max(0.0, math.log(32.0 * eps / (R * G0)) / G1)
    m = max(G0, slope)
    quarter = 0.25 * R
    ramp_top = slope * (0.75 * R - r) + C * (math.exp(G1 * r) - 1.0)

    def value_t(t):
        if t >= R:
            return 0.0
        if t >= R - r:
            return C * (math.exp(G1 * (R - t)) - 1.0)
        if t >= quarter:
            return slope * (R - r - t) + C * (math.exp(G1 * r) - 1.0)
        return (m / G1) * (math.exp(G1 * (quarter - t)) - 1.0) + ramp_top

    def subgrad_t(t):
        if t >= R:
            return 0.0
        if t >= R - r:
            return -G0 * math.exp(G1 * (R - t))
        if t > quarter:
            return -slope
        return -m * math.exp(G1 * (quarter - t))  # steep side at the kink

    return _piecewise_1d("ada_III", value_t, subgrad_t, R, G0, G1, R)


# ---------------------------------------------------------------------------
# gap bounds
# ---------------------------------------------------------------------------


def mf_bound(M0: float, M1: float, R: float) -> tuple[float, float]:
    """Worst-case Lipschitz constant and gap over the radius-R ball.

    Returns (M, F) with M = M0*exp(2*R*M1) and F = (M0/M1)*(exp(2*R*M1) - 1);
    the M1 -> 0 limit F = 2*R*M0 is taken by continuous extension.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if M1 == 0.0:
        return M0, 2.0 * R * M0
    return M0 * math.exp(2.0 * R * M1), (M0 / M1) * math.expm1(2.0 * R * M1)


def exact_F(problem: Problem, R: float) -> float:
    """Maximum optimality gap over the radius-R ball.

    Uses the analytic value stored at construction when the radius matches;
    otherwise a dense sample (2^16 points) followed by local refinement.
    """
    c = problem.constants
    if R == c.R and math.isfinite(c.F):
        return c.F
    if problem.d == 1:
        ts = np.linspace(-R, R, 65537)
        vals = np.array([problem.value(np.array([t])) for t in ts])
        i = int(np.argmax(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
        for _ in range(80):  # ternary refinement for the (unimodal-local) max
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if problem.value(np.array([m1])) < problem.value(np.array([m2])):
                lo = m1
            else:
                hi = m2
        best = max(float(np.max(vals)), problem.value(np.array([0.5 * (lo + hi)])))
        return best - c.fstar
    gen = run_stream(0, f"exact_F:{problem.name}:{problem.d}")
    pts = gen.normal(size=(1 << 16, problem.d))
    pts *= R / np.linalg.norm(pts, axis=1, keepdims=True)
    vals = np.array([problem.value(p) for p in pts])
    i = int(np.argmax(vals))
    x, best = pts[i].copy(), float(vals[i])
    step = 0.1 * R
    while step > 1e-9 * R:  # coordinate pattern search inside the ball
        improved = False
        for j in range(problem.d):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[j] += sgn * step
                n = np.linalg.norm(y)
                if n > R:
                    y *= R / n
                v = problem.value(y)
                if v > best:
                    x, best, improved = y, v, True
        if not improved:
            step /= 2.0
    return best - c.fstar


# ---------------------------------------------------------------------------
# string-addressable suite
# ---------------------------------------------------------------------------

_SPEC_RE = re.compile(r"^([a-zA-Z_:]+[a-zA-Z_0-9]*)\s*(?:\{(.*)\})?$")


def _parse_params(body: str) -> dict:
    params = {}
    if not body:
        return params
    for item in body.split(","):
        if not item.strip():
            continue
        key, _, val = item.partition("=")
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ValueError(f"malformed parameter {item!r}")
        try:
            params[key] = int(val)
        except ValueError:
            params[key] = float(val)
    return params


def from_spec(spec: str) -> Problem:
    """Build a suite problem from an id string like `exp_inf{d=2,R=1}`.

    Supported ids: exp_inf, power_inf, inf_dist, holder, norm_power,
    quasar_ripple, and lower:<kind> for the adversarial instances.
    """
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise ValueError(f"cannot parse problem spec {spec!r}")
    name, params = m.group(1), _parse_params(m.group(2) or "")
    if name.startswith("lower:"):
        kind = name.split(":", 1)[1]
        return make_lower_bound(kind, R=params.get("R", 1.0), G0=params.get("G0", 1.0),
                                G1=params.get("G1", 8.0), eps=params.get("eps", 0.1))
    if name == "exp_inf":
        d = int(params.get("d", 1))
        return make_exp_inf(np.eye(d), R=params.get("R", 1.0))
    if name == "power_inf":
        d = int(params.get("d", 1))
        return make_power_inf(np.eye(d), p=params.get("p", 2.0),
                              M1_choice=params.get("M1", 1.0), R=params.get("R", 1.0))
    if name == "inf_dist":
        d = int(params.get("d", 1))
        off = params.get("off", 0.5)
        xstar = np.zeros(d)
        xstar[0] = off * params.get("R", 1.0)
        return make_inf_dist(xstar, R=params.get("R", 1.0))
    if name == "holder":
        d = int(params.get("d", 1))
        return make_holder(params.get("nu", 0.5), params.get("L", 1.0), np.zeros(d),
                           R=params.get("R", 1.0), M1_choice=params.get("M1", 1.0),
                           L1=params.get("L1", 1e-6))
    if name == "norm_power":
        d = int(params.get("d", 1))
        return make_norm_power(params.get("q", 2.0), np.zeros(d),
                               scale=params.get("scale", 1.0), R=params.get("R", 1.0),
                               M1_choice=params.get("M1", 1.0))
    if name == "quasar_ripple":
        off = params.get("off", 0.5)
        return make_quasar_ripple(params.get("omega", 0.5), R=params.get("R", 1.0),
                                  G1=params.get("G1", 1.0),
                                  xstar=[off * params.get("R", 1.0)])
    raise ValueError(f"unknown problem id {name!r}")


def default_suite() -> list[Problem]:
    """Representative instances used by the property checkers."""
    rot = np.array([[0.8, 0.6], [-0.6, 0.8]])
    return [
        make_exp_inf(np.eye(1)),
        make_exp_inf(rot, R=1.0),
        make_power_inf(np.eye(1), p=1.5),
        make_power_inf(rot, p=2.0, M1_choice=1.0),
        make_holder(0.5, 1.0, np.zeros(2)),
        make_holder(0.0, 1.0, np.zeros(1)),
        make_inf_dist(np.array([0.3, -0.2, 0.1])),
        make_lower_bound("sgd_I", R=1.0, G0=1.0, G1=8.0, eps=0.1),
        make_lower_bound("sgd_II", R=1.0, G0=1.0, G1=8.0, eps=0.1),
        make_lower_bound("ada_II", R=1.0, G0=1.0, G1=32.0, eps=0.05),
        make_lower_bound("ada_III", R=1.0, G0=1.0, G1=32.0, eps=0.05),
    ]
