"""White-noise observations in singular coordinates and the cut-off estimator.

The observation model is y_obs_j = sigma_j * x_true_j + delta * z_j with unit
variance, mean-zero noise coordinates z_j. Truncating the coefficient-wise
inverse at level k gives the cut-off estimator; its solution-space (strong) and
image-space (weak, predictive) errors split exactly into a variance part that
grows with k and a bias part that shrinks with k. Sums beyond the problem
resolution D are identically zero: the truth is represented exactly at
resolution D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import SpectralProblem


@dataclass(frozen=True)
class NoiseModel:
    """Distribution of the noise coordinates, normalized to unit variance.

    gamma(p) returns the absolute moment constant E[z^p] for p in {2, 4};
    the fourth moment of student_t requires df > 4.
    """

    kind: str = "gaussian"
    df: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher", "student_t"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "student_t":
            if self.df is None or self.df <= 2:
                raise ValueError("student_t needs df > 2 for a finite variance")

    def gamma(self, p: int) -> float:
        if p == 2:
            return 1.0
        if p != 4:
            raise ValueError(f"moment order must be 2 or 4, got {p}")
        if self.kind == "gaussian":
            return 3.0
        if self.kind == "rademacher":
            return 1.0
        if self.df <= 4:
            raise ValueError("student_t fourth moment needs df > 4")
        return 3.0 * (self.df - 2.0) / (self.df - 4.0)


@dataclass(frozen=True)
class NoisyObservation:
    """One realization y_obs = y_clean + delta * z with its ingredients kept."""

    y_obs: np.ndarray
    y_clean: np.ndarray
    z: np.ndarray
    delta: float
    seed: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def size(self) -> int:
        return int(self.y_obs.size)


def sample_noise(model: NoiseModel, D: int, seed: int) -> np.ndarray:
    """Draw D independent unit-variance noise coordinates, reproducibly."""
    if D < 1:
        raise ValueError(f"need D >= 1, got {D}")
    rng = np.random.default_rng(seed)
    if model.kind == "gaussian":
        return rng.standard_normal(D)
    if model.kind == "rademacher":
        return 2.0 * rng.integers(0, 2, size=D).astype(float) - 1.0
    # student_t, variance df/(df-2) before normalization
    return rng.standard_t(model.df, size=D) / math.sqrt(model.df / (model.df - 2.0))


def observe(p: SpectralProblem, delta: float, model: NoiseModel, seed: int) -> NoisyObservation:
    """Generate one noisy observation of the problem's clean data."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    z = sample_noise(model, p.size, seed)
    y_clean = p.sigma * p.x_true
    return NoisyObservation(y_clean + delta * z, y_clean, z, float(delta), int(seed))


def _check_level(k: int, D: int):
    if not 0 <= k <= D:
        raise ValueError(f"truncation level {k} outside [0, {D}]")


def cutoff_coeffs(p: SpectralProblem, obs: NoisyObservation, k: int) -> np.ndarray:
    """Coefficients of the level-k cut-off estimate: y_obs_j / sigma_j up to k, then 0."""
    _check_level(k, p.size)
    out = np.zeros(p.size)
    out[:k] = obs.y_obs[:k] / p.sigma[:k]
    return out


def strong_error_sq_profile(p: SpectralProblem, obs: NoisyObservation) -> np.ndarray:
    """Squared solution-space error for every level: entry k is ||x_k - x_true||^2."""
    var = (obs.y_obs / p.sigma - p.x_true) ** 2
    bias = p.x_true**2
    return _profile(var, bias)


def weak_error_sq_profile(p: SpectralProblem, obs: NoisyObservation) -> np.ndarray:
    """Squared image-space error for every level: entry k is ||K(x_k - x_true)||^2."""
    var = (obs.y_obs - obs.y_clean) ** 2
    bias = obs.y_clean**2
    return _profile(var, bias)


def _profile(var: np.ndarray, bias: np.ndarray) -> np.ndarray:
    D = var.size
    out = np.empty(D + 1)
    out[0] = 0.0
    np.cumsum(var, out=out[1:])
    tail = np.concatenate([np.cumsum(bias[::-1])[::-1], [0.0]])
    out += tail
    return out


def strong_error(p: SpectralProblem, obs: NoisyObservation, k: int) -> float:
    """Solution-space error ||x_k - x_true|| of the level-k estimate."""
    _check_level(k, p.size)
    var = float(np.sum((obs.y_obs[:k] / p.sigma[:k] - p.x_true[:k]) ** 2))
    bias = float(np.sum(p.x_true[k:] ** 2))
    return math.sqrt(var + bias)


def weak_error(p: SpectralProblem, obs: NoisyObservation, k: int) -> float:
    """Image-space (predictive) error ||K(x_k - x_true)|| of the level-k estimate."""
    _check_level(k, p.size)
    var = float(np.sum((obs.y_obs[:k] - obs.y_clean[:k]) ** 2))
    bias = float(np.sum(obs.y_clean[k:] ** 2))
    return math.sqrt(var + bias)
