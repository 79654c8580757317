"""Online linear-optimization learners over a Euclidean ball (or box).

Each learner is a value object: `step` returns a new state together with the
next play, so states can move freely between threads. All five variants are
invariant under a global rescaling of the gradient stream, which the
conversion loop exploits to renormalize unbounded accumulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .numerics import clip_coord, clip_euclid, inv_sqrt_psd, project_ball

__all__ = [
    "LEARNER_IDS",
    "RegretRecord",
    "make_learner",
    "learner_play",
    "learner_step",
    "regret_eval",
]

LEARNER_IDS = ("solo_scalar", "ogd_adagrad", "solo_diag", "leon_diag", "leon_matrix")

# Diagonal/matrix accumulator seed; the scalar variants start from exactly 0.
DEFAULT_DELTA = 1e-16


@dataclass(frozen=True)
class _LearnerBase:
    R: float

    @property
    def geometry(self) -> str:
        return "euclid"

    def rescaled(self, ratio: float):
        """State after multiplying the whole past gradient stream by `ratio`."""
        raise NotImplementedError


@dataclass(frozen=True)
class SoloScalar(_LearnerBase):
    """FTRL with a scalar adaptive stepsize: plays -R * clip(sum g / sqrt(sum ||g||^2))."""

    G: np.ndarray
    V: float = 0.0

    def play(self) -> np.ndarray:
        if self.V == 0.0:
            return np.zeros_like(self.G)
        return -self.R * clip_euclid(self.G / math.sqrt(self.V))

    def step(self, g: np.ndarray):
        new = replace(self, G=self.G + g, V=self.V + float(g @ g))
        return new, new.play()

    def rescaled(self, ratio: float):
        return replace(self, G=self.G * ratio, V=self.V * ratio * ratio)


@dataclass(frozen=True)
class OgdAdaGrad(_LearnerBase):
    """Projected online gradient descent with stepsize R / sqrt(2 * sum ||g||^2)."""

    z: np.ndarray
    V: float = 0.0

    def play(self) -> np.ndarray:
        return self.z

    def step(self, g: np.ndarray):
        V = self.V + float(g @ g)
        if V == 0.0:
            return replace(self, V=V), self.z
        eta = self.R / math.sqrt(2.0 * V)
        z = project_ball(self.z - eta * g, self.R)
        new = replace(self, z=z, V=V)
        return new, z

    def rescaled(self, ratio: float):
        # The play z is a point in the feasible set; only the accumulator scales.
        return replace(self, V=self.V * ratio * ratio)


@dataclass(frozen=True)
class SoloDiag(_LearnerBase):
    """Per-coordinate variant; feasible set is the box of half-width R."""

    G: np.ndarray
    V: np.ndarray

    @property
    def geometry(self) -> str:
        return "box"

    def play(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(self.V > 0.0, self.G / np.sqrt(self.V), 0.0)
        return -self.R * clip_coord(ratio)

    def step(self, g: np.ndarray):
        new = replace(self, G=self.G + g, V=self.V + g * g)
        return new, new.play()

    def rescaled(self, ratio: float):
        return replace(self, G=self.G * ratio, V=self.V * ratio * ratio)


@dataclass(frozen=True)
class LeonDiag(_LearnerBase):
    """Self-clipping per-coordinate variant: -R * G / sqrt(G*G + V)."""

    G: np.ndarray
    V: np.ndarray

    @property
    def geometry(self) -> str:
        return "box"

    def play(self) -> np.ndarray:
        denom = np.sqrt(self.G * self.G + self.V)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(denom > 0.0, self.G / denom, 0.0)
        return -self.R * out

    def step(self, g: np.ndarray):
        new = replace(self, G=self.G + g, V=self.V + g * g)
        return new, new.play()

    def rescaled(self, ratio: float):
        return replace(self, G=self.G * ratio, V=self.V * ratio * ratio)


@dataclass(frozen=True)
class LeonMatrix(_LearnerBase):
    """Matrix-preconditioned variant: -R * (G G^T + V)^(-1/2) G."""

    G: np.ndarray
    V: np.ndarray  # d x d accumulator of g g^T, seeded with delta * I
    floor: float = 1e-12

    def play(self) -> np.ndarray:
        if not np.any(self.G) and not np.any(self.V):
            return np.zeros_like(self.G)
        P = inv_sqrt_psd(np.outer(self.G, self.G) + self.V, floor=self.floor)
        return -self.R * (P @ self.G)

    def step(self, g: np.ndarray):
        new = replace(self, G=self.G + g, V=self.V + np.outer(g, g))
        return new, new.play()

    def rescaled(self, ratio: float):
        return replace(self, G=self.G * ratio, V=self.V * ratio * ratio)


def make_learner(learner_id: str, d: int, R: float, delta: Optional[float] = None):
    """Fresh learner state for one of the ids in LEARNER_IDS."""
    if not R >= 0:
        raise ValueError("R must be >= 0")
    if learner_id == "solo_scalar":
        return SoloScalar(R=R, G=np.zeros(d))
    if learner_id == "ogd_adagrad":
        return OgdAdaGrad(R=R, z=np.zeros(d))
    delta = DEFAULT_DELTA if delta is None else delta
    if learner_id == "solo_diag":
        return SoloDiag(R=R, G=np.zeros(d), V=np.full(d, delta))
    if learner_id == "leon_diag":
        return LeonDiag(R=R, G=np.zeros(d), V=np.full(d, delta))
    if learner_id == "leon_matrix":
        return LeonMatrix(R=R, G=np.zeros(d), V=delta * np.eye(d))
    raise ValueError(f"unknown learner id {learner_id!r}; choose from {LEARNER_IDS}")


def learner_play(state) -> np.ndarray:
    return state.play()


def learner_step(state, g) -> tuple[object, np.ndarray]:
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient fed to learner")
    return state.step(g)


@dataclass
class RegretRecord:
    """Running totals (and optionally full histories) for exact regret evaluation."""

    G_total: np.ndarray
    zg_sum: float = 0.0
    n: int = 0
    z_history: Optional[list] = None
    g_history: Optional[list] = None

    @classmethod
    def empty(cls, d: int, keep_history: bool = False) -> "RegretRecord":
        return cls(G_total=np.zeros(d),
                   z_history=[] if keep_history else None,
                   g_history=[] if keep_history else None)

    def append(self, z: np.ndarray, g: np.ndarray):
        if self.z_history is not None:
            self.z_history.append(z)
            self.g_history.append(g)
        self.G_total = self.G_total + g
        self.zg_sum += float(z @ g)
        self.n += 1


def regret_eval(rec: RegretRecord, R: float, geometry: str = "euclid") -> float:
    """Exact worst-comparator regret over the ball or box of radius R.

    max_z sum_k <z_k - z, g_k> equals sum_k <z_k, g_k> plus the support
    function of the feasible set at the total gradient.
    """
    if rec.n == 0:
        raise ValueError("empty gradient history")
    if geometry == "euclid":
        support = R * float(np.linalg.norm(rec.G_total))
    elif geometry == "box":
        support = R * float(np.sum(np.abs(rec.G_total)))
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return rec.zg_sum + support
