"""Discretized integral-equation test problems and their singular-coordinate form.

Four classical ill-posed model problems (phillips, deriv2, gravity, heat) are
discretized on a uniform grid, plus synthetic problems defined directly by a
singular-value sequence. A dense problem is converted to singular coordinates
with a full SVD; estimators downstream only ever see the singular data.

Coordinate convention: for a kernel problem on [a, b] with n cells of width
h = (b - a)/n and midpoints t_i, the forward matrix is A[i, j] = h * k(s_i, t_j)
and the solution vector stores cell-normalized coefficients sqrt(h) * f(t_i).
With this scaling the Euclidean norm of the coefficient vector approximates the
L2 norm of the underlying function, so noise levels and error norms are
comparable across grid sizes. Exact data in the same coordinates is
sqrt(h) * g(s_i), which is what `matrix @ f_true` converges to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DecompositionError(RuntimeError):
    """Dense SVD failed to converge or the operator is numerically zero."""


@dataclass(frozen=True)
class DenseProblem:
    """A discretized forward operator with known solution and exact data.

    `g_true` is defined as `matrix @ f_true`; analytic data formulas, where
    known, serve only as validation oracles for the quadrature.
    """

    name: str
    matrix: np.ndarray
    f_true: np.ndarray
    g_true: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"{self.name}: matrix must be square")
        if self.matrix.shape[0] < 2:
            raise ValueError(f"{self.name}: need dimension >= 2")
        for arr in (self.matrix, self.f_true, self.g_true):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{self.name}: non-finite entries")


@dataclass(frozen=True)
class SVDFactors:
    """Full SVD A = U diag(s) V^T with s nonincreasing.

    Signs are fixed so the largest-magnitude entry of each left singular
    vector is positive, which makes repeated decompositions reproducible.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class SpectralProblem:
    """An operator and truth expressed in singular coordinates.

    `sigma[j]` is the j-th singular value and `x_true[j]` the coefficient of
    the true solution against the j-th right singular vector. Everything the
    selection rules need is contained in these two vectors.
    """

    name: str
    sigma: np.ndarray
    x_true: np.ndarray
    ill_posedness: str = "synthetic"

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        x_true = np.asarray(self.x_true, dtype=float)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "x_true", x_true)
        if sigma.ndim != 1 or x_true.shape != sigma.shape:
            raise ValueError("sigma and x_true must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(x_true))):
            raise ValueError("non-finite entries")
        if sigma.size == 0 or sigma[-1] <= 0.0 or np.any(np.diff(sigma) > 0.0):
            raise ValueError("sigma must be strictly positive and nonincreasing")

    @property
    def size(self) -> int:
        return int(self.sigma.size)


_SEVERITY = {"phillips": "mild", "deriv2": "mild", "gravity": "severe", "heat": "severe"}


def _midpoints(a: float, b: float, n: int) -> tuple[np.ndarray, float]:
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), h


def _check_n(n: int):
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")


def build_phillips(n: int) -> DenseProblem:
    """Fredholm problem on [-6, 6] with kernel 1 + cos(pi (s - t)/3) on |s - t| < 3.

    Solution f(t) = 1 + cos(pi t / 3) on |t| < 3, zero outside.
    """
    _check_n(n)
    t, h = _midpoints(-6.0, 6.0, n)
    diff = t[:, None] - t[None, :]
    kernel = np.where(np.abs(diff) < 3.0, 1.0 + np.cos(np.pi * diff / 3.0), 0.0)
    f = np.where(np.abs(t) < 3.0, 1.0 + np.cos(np.pi * t / 3.0), 0.0)
    matrix = h * kernel
    f_true = math.sqrt(h) * f
    return DenseProblem("phillips", matrix, f_true, matrix @ f_true)


def build_deriv2(n: int) -> DenseProblem:
    """Second-derivative problem on [0, 1]: Green's function kernel, f(t) = t.

    k(s, t) = s (t - 1) for s < t and t (s - 1) for s >= t; the analytic data
    g(s) = (s^3 - s)/6 is exposed via `deriv2_exact_data` as a quadrature
    oracle.
    """
    _check_n(n)
    t, h = _midpoints(0.0, 1.0, n)
    s_grid = t[:, None]
    t_grid = t[None, :]
    kernel = np.where(s_grid < t_grid, s_grid * (t_grid - 1.0), t_grid * (s_grid - 1.0))
    matrix = h * kernel
    f_true = math.sqrt(h) * t
    return DenseProblem("deriv2", matrix, f_true, matrix @ f_true)


def deriv2_exact_data(n: int) -> np.ndarray:
    """Analytic data for `build_deriv2`, in the same cell-normalized coordinates."""
    s, h = _midpoints(0.0, 1.0, n)
    return math.sqrt(h) * (s**3 - s) / 6.0


def build_gravity(n: int, depth: float = 0.25) -> DenseProblem:
    """Gravity surveying problem on [0, 1]: k(s, t) = depth (depth^2 + (s-t)^2)^(-3/2).

    f(t) = sin(pi t) + 0.5 sin(2 pi t). Larger depth smooths the kernel and
    makes the problem harder.
    """
    _check_n(n)
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    t, h = _midpoints(0.0, 1.0, n)
    diff = t[:, None] - t[None, :]
    kernel = depth * (depth**2 + diff**2) ** (-1.5)
    f = np.sin(np.pi * t) + 0.5 * np.sin(2.0 * np.pi * t)
    matrix = h * kernel
    f_true = math.sqrt(h) * f
    return DenseProblem("gravity", matrix, f_true, matrix @ f_true)


def _heat_kernel(u: np.ndarray, kappa_heat: float) -> np.ndarray:
    """Causal heat kernel u^(-3/2)/(2 kappa sqrt(pi)) exp(-1/(4 kappa^2 u)), 0 at u <= 0."""
    out = np.zeros_like(u)
    pos = u > 0.0
    up = u[pos]
    out[pos] = up ** (-1.5) / (2.0 * kappa_heat * math.sqrt(math.pi)) * np.exp(
        -1.0 / (4.0 * kappa_heat**2 * up)
    )
    return out


def build_heat(n: int, kappa_heat: float = 1.0) -> DenseProblem:
    """Inverse heat (Volterra convolution) problem on [0, 1].

    Lower-triangular matrix from the causal kernel; the solution is a smooth
    pulse f(t) = exp(-20 (t - 0.25)^2).
    """
    _check_n(n)
    if kappa_heat <= 0:
        raise ValueError(f"kappa_heat must be positive, got {kappa_heat}")
    t, h = _midpoints(0.0, 1.0, n)
    diff = t[:, None] - t[None, :]
    matrix = h * _heat_kernel(diff, kappa_heat)
    f = np.exp(-20.0 * (t - 0.25) ** 2)
    f_true = math.sqrt(h) * f
    return DenseProblem("heat", matrix, f_true, matrix @ f_true)


def build_synthetic(
    D: int,
    spectrum: str = "poly",
    q: float = 1.0,
    truth: np.ndarray | None = None,
    truth_power: float | None = None,
) -> SpectralProblem:
    """Synthetic problem given directly in singular coordinates.

    spectrum "poly" sets sigma_j^2 = j^(-q); "exp" sets sigma_j^2 = e^(-j).
    The truth is either an explicit coefficient vector, a power sequence
    j^(-truth_power) (requires truth_power > 1/2), or all zeros.
    """
    if D < 1:
        raise ValueError(f"need D >= 1, got {D}")
    j = np.arange(1, D + 1, dtype=float)
    if spectrum == "poly":
        if q <= 0:
            raise ValueError(f"poly spectrum needs q > 0, got {q}")
        sigma = j ** (-q / 2.0)
    elif spectrum == "exp":
        sigma = np.exp(-j / 2.0)
    else:
        raise ValueError(f"unknown spectrum {spectrum!r}")
    if truth is not None:
        x_true = np.asarray(truth, dtype=float)
        if x_true.shape != (D,):
            raise ValueError(f"truth must have length {D}")
        if not np.all(np.isfinite(x_true)):
            raise ValueError("truth has non-finite entries")
    elif truth_power is not None:
        if truth_power <= 0.5:
            raise ValueError(f"truth_power must exceed 1/2, got {truth_power}")
        x_true = j ** (-truth_power)
    else:
        x_true = np.zeros(D)
    return SpectralProblem(f"synthetic-{spectrum}", sigma, x_true, "synthetic")


def decompose(p: DenseProblem) -> SVDFactors:
    """Full SVD of the problem matrix with the reproducible sign convention."""
    try:
        u, s, vt = np.linalg.svd(p.matrix)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but sturdier.
        try:
            from scipy.linalg import svd as scipy_svd

            u, s, vt = scipy_svd(p.matrix, lapack_driver="gesvd")
        except Exception as exc:
            raise DecompositionError(f"SVD of {p.name!r} did not converge") from exc
    v = vt.T
    lead = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[lead, np.arange(u.shape[1])])
    signs[signs == 0.0] = 1.0
    return SVDFactors(u * signs, s, v * signs)


def spectralize(p: DenseProblem, rank_tol: float = 1e-14) -> SpectralProblem:
    """Convert a dense problem to singular coordinates.

    Trailing singular values below rank_tol * s_max are dropped (they are
    numerically zero and would poison the estimators), and the truth vector is
    truncated to the retained components.
    """
    factors = decompose(p)
    s = factors.s
    if s.size == 0 or s[0] <= 0.0:
        raise DecompositionError(f"{p.name!r} is numerically a zero operator")
    keep = s > rank_tol * s[0]
    if not np.any(keep):
        raise DecompositionError(f"{p.name!r} has no singular values above threshold")
    r = int(np.max(np.nonzero(keep)[0])) + 1
    x_true = factors.v[:, :r].T @ p.f_true
    return SpectralProblem(p.name, s[:r].copy(), x_true, _SEVERITY.get(p.name, "synthetic"))


@dataclass(frozen=True)
class ProblemSpec:
    """Named recipe for a problem, used by the experiment harness and CLI."""

    name: str
    size: int
    depth: float = 0.25
    kappa_heat: float = 1.0
    q: float = 2.0
    truth_power: float = 1.0


DENSE_BUILDERS = {
    "phillips": lambda spec: build_phillips(spec.size),
    "deriv2": lambda spec: build_deriv2(spec.size),
    "gravity": lambda spec: build_gravity(spec.size, spec.depth),
    "heat": lambda spec: build_heat(spec.size, spec.kappa_heat),
}

PROBLEM_NAMES = tuple(DENSE_BUILDERS) + ("synthetic-poly", "synthetic-exp", "direct")


def make_problem(spec: ProblemSpec) -> SpectralProblem:
    """Build the spectral problem described by `spec`."""
    if spec.name in DENSE_BUILDERS:
        return spectralize(DENSE_BUILDERS[spec.name](spec))
    if spec.name == "synthetic-poly":
        return build_synthetic(spec.size, "poly", q=spec.q, truth_power=spec.truth_power)
    if spec.name == "synthetic-exp":
        return build_synthetic(spec.size, "exp", truth_power=spec.truth_power)
    if spec.name == "direct":
        j = np.arange(1, spec.size + 1, dtype=float)
        return SpectralProblem("direct", np.ones(spec.size), j ** (-spec.truth_power), "synthetic")
    raise ValueError(f"unknown problem {spec.name!r}; known: {', '.join(PROBLEM_NAMES)}")
