"""Temporal-correlation estimation, path-entropy functionals, controllability
Gramians and diffusion diagnostics.

All functions are pure; nothing here holds state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (ConfigError, DegenerateFitError, InsufficientDataError,
                     NumericalError)
from .trajectory import Trajectory

# ---------------------------------------------------------------------------
# exploration projection

@dataclass(frozen=True)
class ExplorationProjection:
    """State coordinates kept for exploration scoring, with per-coordinate weights."""

    indices: tuple
    weights: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        w = tuple(float(x) for x in self.weights)
        if len(idx) != len(set(idx)):
            raise ConfigError(f"projection indices must be unique: {idx}")
        if len(idx) != len(w):
            raise ConfigError("projection indices/weights length mismatch")
        if any(x <= 0 for x in w):
            raise ConfigError(f"projection weights must be positive: {w}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return len(self.indices)

    def apply(self, states: np.ndarray) -> np.ndarray:
        """Project states (..., d) to weighted coordinates (..., d')."""
        idx = list(self.indices)
        if max(idx) >= states.shape[-1]:
            raise ConfigError(
                f"projection index {max(idx)} out of range for state dim {states.shape[-1]}")
        return states[..., idx] * np.asarray(self.weights)

    @staticmethod
    def identity(d: int) -> "ExplorationProjection":
        return ExplorationProjection(tuple(range(d)), (1.0,) * d)


# ---------------------------------------------------------------------------
# correlation matrices

@dataclass(frozen=True)
class CorrMatrix:
    """Regularized temporal-correlation estimate over a state window."""

    matrix: np.ndarray
    reg_epsilon: float
    window_len: int
    dt: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def default_regularization(c_raw: np.ndarray) -> float:
    """Trace-scaled ridge with an absolute floor, keeping log-det defined."""
    d = c_raw.shape[-1]
    tr = float(np.trace(c_raw)) if c_raw.ndim == 2 else 0.0
    return 1e-6 * max(tr, 0.0) / d + 1e-9


def window_covariance(states: np.ndarray) -> np.ndarray:
    """Covariance of samples about the window mean, normalized by the window
    length (the window is treated as the integration interval)."""
    y = np.asarray(states, dtype=float)
    yc = y - y.mean(axis=-2, keepdims=True)
    n = y.shape[-2]
    return np.einsum("...ni,...nj->...ij", yc, yc) / n


def estimate_corr(states, proj: ExplorationProjection, dt: float,
                  reg_epsilon: Optional[float] = None) -> CorrMatrix:
    """Temporal-correlation matrix of a state window.

    Projects the window onto the exploration coordinates, takes the sample
    covariance about the window mean, and adds a ridge (the trace-scaled
    default when `reg_epsilon` is None).  The same formula serves trailing
    history windows and predicted rollout windows.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise ConfigError(f"expected a (window, d) array, got shape {states.shape}")
    if states.shape[0] < 2:
        raise InsufficientDataError(
            f"correlation window needs >= 2 samples, got {states.shape[0]}")
    if dt <= 0:
        raise ConfigError("dt must be positive")
    y = proj.apply(states)
    c_raw = window_covariance(y)
    eps = default_regularization(c_raw) if reg_epsilon is None else float(reg_epsilon)
    c = c_raw + eps * np.eye(c_raw.shape[0])
    c = 0.5 * (c + c.T)
    return CorrMatrix(c, eps, states.shape[0], float(dt))


def batched_window_corr(windows: np.ndarray, proj: ExplorationProjection) -> np.ndarray:
    """Regularized correlation matrices for a stack of windows (K, N, d) -> (K, d', d').

    Per-window trace-scaled ridge, matching estimate_corr's default.
    """
    y = proj.apply(windows)
    c = window_covariance(y)
    dprime = c.shape[-1]
    tr = np.maximum(np.trace(c, axis1=-2, axis2=-1), 0.0)
    eps = 1e-6 * tr / dprime + 1e-9
    c = c + eps[:, None, None] * np.eye(dprime)
    return c


# ---------------------------------------------------------------------------
# entropy functionals

MODE_FULL = "full"
MODE_LOGTRACE = "logtrace"


def _parse_entropy_mode(mode: str, dim: int) -> tuple[str, int]:
    if mode == MODE_FULL:
        return MODE_FULL, dim
    if mode == MODE_LOGTRACE:
        return MODE_LOGTRACE, dim
    if mode.startswith("top"):
        try:
            m = int(mode[3:])
        except ValueError:
            raise ConfigError(f"bad entropy mode {mode!r}") from None
        if not 1 <= m <= dim:
            raise ConfigError(f"top-{m} eigenvalues requested but dim is {dim}")
        return "top", m
    raise ConfigError(f"bad entropy mode {mode!r}")


def logdet_entropy(C, mode: str = MODE_FULL) -> float:
    """Half log-det of a correlation matrix, or its truncated/trace variants.

    "full": 0.5*logdet(C).  "topM": 0.5 * sum of log of the M largest
    eigenvalues.  "logtrace": 0.5*log(trace(C)).
    """
    mat = C.matrix if isinstance(C, CorrMatrix) else np.asarray(C, dtype=float)
    kind, m = _parse_entropy_mode(mode, mat.shape[0])
    if kind == MODE_LOGTRACE:
        tr = float(np.trace(mat))
        if tr <= 0:
            raise NumericalError("non-positive trace in logtrace entropy")
        return 0.5 * float(np.log(tr))
    if kind == MODE_FULL:
        sign, logdet = np.linalg.slogdet(mat)
        if sign <= 0:
            raise NumericalError("correlation matrix is not positive definite")
        return 0.5 * float(logdet)
    eig = np.linalg.eigvalsh(mat)[::-1][:m]
    if np.any(eig <= 0):
        raise NumericalError("requested leading eigenvalues are not positive")
    return 0.5 * float(np.sum(np.log(eig)))


def batched_logdet_entropy(c_batch: np.ndarray, mode: str = MODE_FULL) -> np.ndarray:
    """logdet_entropy over a stack (K, d', d') of regularized matrices."""
    kind, m = _parse_entropy_mode(mode, c_batch.shape[-1])
    if kind == MODE_LOGTRACE:
        return 0.5 * np.log(np.trace(c_batch, axis1=-2, axis2=-1))
    if kind == MODE_FULL:
        sign, logdet = np.linalg.slogdet(c_batch)
        out = np.where(sign > 0, logdet, -np.inf)
        return 0.5 * out
    eig = np.linalg.eigvalsh(c_batch)[..., ::-1][..., :m]
    return 0.5 * np.sum(np.log(np.maximum(eig, 1e-300)), axis=-1)


def maxdiff_logprob(C: CorrMatrix, x_from, x_to) -> float:
    """Log density of the one-step transition Gaussian centered at x_from.

    Inputs are already in the projected coordinates of C.
    """
    mat = C.matrix
    diff = np.asarray(x_to, dtype=float) - np.asarray(x_from, dtype=float)
    if diff.shape != (mat.shape[0],):
        raise ConfigError(
            f"projected state dim {diff.shape} does not match C dim {mat.shape[0]}")
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise NumericalError("correlation matrix is singular") from None
    z = scipy.linalg.solve_triangular(chol, diff, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    d = mat.shape[0]
    return -0.5 * float(z @ z) - 0.5 * (d * np.log(2.0 * np.pi) + logdet)


# ---------------------------------------------------------------------------
# controllability Gramians

@dataclass(frozen=True)
class GramianResult:
    W: np.ndarray
    rank: int
    logdet: float


def gramian_lti(A, B, T: float, n_steps: int = 256) -> GramianResult:
    """Finite-horizon controllability Gramian of xdot = A x + B u.

    Trapezoidal quadrature of exp(A s) B B^T exp(A^T s) on n_steps grid
    points over [0, T]; the matrix exponential of one grid interval is
    computed once and accumulated.  Numerical rank at 1e-9 times the largest
    eigenvalue; logdet of the ridge-regularized Gramian.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"A must be square, got {A.shape}")
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise ConfigError(f"B shape {B.shape} inconsistent with A {A.shape}")
    if T <= 0:
        raise ConfigError("T must be positive")
    if n_steps < 2:
        raise ConfigError("n_steps must be at least 2")
    h = T / (n_steps - 1)
    step = scipy.linalg.expm(A * h)
    d = A.shape[0]
    W = np.zeros((d, d))
    M = B.copy()                      # exp(A s) B at s = 0
    for i in range(n_steps):
        w = 0.5 if i in (0, n_steps - 1) else 1.0
        W += w * (M @ M.T)
        if i < n_steps - 1:
            M = step @ M
    W *= h
    W = 0.5 * (W + W.T)
    eig = np.linalg.eigvalsh(W)
    lam_max = float(eig[-1])
    rank = int(np.sum(eig > 1e-9 * max(lam_max, 0.0))) if lam_max > 0 else 0
    reg = default_regularization(W)
    _, logdet = np.linalg.slogdet(W + reg * np.eye(d))
    return GramianResult(W, rank, float(logdet))


def reachable_density(A, B, x0, T: float, n_steps: int = 256):
    """Gaussian over states reachable by white-noise forcing: (mean, cov).

    Mean follows the autonomous flow of x0; covariance is the controllability
    Gramian over [0, T].
    """
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (A.shape[0],):
        raise ConfigError(f"x0 shape {x0.shape} inconsistent with A {A.shape}")
    res = gramian_lti(A, B, T, n_steps)
    mean = scipy.linalg.expm(A * T) @ x0
    return mean, res.W


def lti_noise_rollouts(A, B, x0, T: float, n_steps: int, n_paths: int,
                       rng: np.random.Generator,
                       return_paths: bool = False):
    """Euler-Maruyama sample paths of xdot = A x + B xi with unit white noise.

    Returns terminal states (n_paths, d), or the full paths
    (n_paths, n_steps + 1, d) when return_paths is set.  Used as the
    Monte-Carlo counterpart of the Gramian quadrature.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    dt = T / n_steps
    x = np.tile(np.asarray(x0, dtype=float), (n_paths, 1))
    if return_paths:
        paths = np.empty((n_paths, n_steps + 1, A.shape[0]))
        paths[:, 0] = x
    sq = np.sqrt(dt)
    for k in range(n_steps):
        xi = rng.standard_normal((n_paths, B.shape[1]))
        x = x + dt * (x @ A.T) + sq * (xi @ B.T)
        if return_paths:
            paths[:, k + 1] = x
    return paths if return_paths else x


# ---------------------------------------------------------------------------
# diffusion diagnostics

@dataclass(frozen=True)
class MsdCurve:
    lags: np.ndarray          # integer step offsets, starting at 0
    msd: np.ndarray
    gamma: float
    fit_range: tuple


def default_fit_range(max_lag: int) -> tuple:
    """Middle decade of the available lags in log space."""
    lo = max(1, int(round(max_lag ** (1.0 / 3.0))))
    hi = max(lo + 1, int(round(max_lag ** (2.0 / 3.0))))
    return lo, hi


def msd(paths: Sequence[Trajectory], proj: ExplorationProjection,
        max_lag: int, fit_range: Optional[tuple] = None) -> MsdCurve:
    """Mean squared displacement over lags, pooled across paths and start
    times, with a power-law exponent fitted on log-log axes over fit_range."""
    if not paths:
        raise InsufficientDataError("msd needs at least one path")
    if max_lag < 1:
        raise ConfigError("max_lag must be >= 1")
    ys = []
    for p in paths:
        if len(p) <= max_lag:
            raise InsufficientDataError(
                f"path of length {len(p)} is not longer than max_lag {max_lag}")
        ys.append(proj.apply(p.states))
    lags = np.arange(max_lag + 1)
    totals = np.zeros(max_lag + 1)
    counts = np.zeros(max_lag + 1)
    for y in ys:
        for lag in range(1, max_lag + 1):
            d = y[lag:] - y[:-lag]
            totals[lag] += float(np.sum(d * d))
            counts[lag] += d.shape[0]
    curve = np.zeros(max_lag + 1)
    curve[1:] = totals[1:] / counts[1:]
    if fit_range is None:
        fit_range = default_fit_range(max_lag)
    lo, hi = fit_range
    sel = (lags >= lo) & (lags <= hi)
    if np.sum(sel) < 2:
        raise ConfigError(f"fit range {fit_range} selects fewer than 2 lags")
    if np.any(curve[sel] <= 0):
        raise DegenerateFitError("msd is zero inside the fit range")
    gamma = float(np.polyfit(np.log(lags[sel]), np.log(curve[sel]), 1)[0])
    return MsdCurve(lags, curve, gamma, (int(lo), int(hi)))


def birkhoff_gap(path: Trajectory, observable, ensemble: Sequence[Trajectory]) -> float:
    """Absolute gap between the time average of an observable along one path
    and its ensemble average over the final states of an ensemble."""
    if len(path) == 0 or not ensemble:
        raise InsufficientDataError("birkhoff_gap needs non-empty inputs")
    time_avg = float(np.mean([observable(s) for s in path.states]))
    ens_avg = float(np.mean([observable(p.states[-1]) for p in ensemble]))
    return abs(time_avg - ens_avg)
