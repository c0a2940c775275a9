"""Replicate sampling: deterministic coefficient draws and path evaluation.

Randomness is counter-based: every replicate owns a Philox stream keyed by
(experiment seed, replicate index, stream purpose), so draws are reproducible
independently of execution order or worker count.  Gaussian variates come
from the inverse normal CDF applied to the stream's uniforms; each normal
consumes exactly one 64-bit word, which keeps streams alignable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .covariance import Kernel
from .errors import DegeneracyError, UsageError

_MASK64 = (1 << 64) - 1

PURPOSE_COEFFS = 0
PURPOSE_GRID = 1

_ENSEMBLES = ("cosine", "stationary")

# Dense-factorization cost grows cubically; larger grids must be windowed.
MAX_GRID = 4096

_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)


def _philox(seed: int, index: int, purpose: int) -> np.random.Philox:
    if index < 0 or index >= (1 << 56):
        raise UsageError("replicate index out of the 56-bit key range")
    key = np.array([seed & _MASK64, ((index << 8) | purpose) & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)

def standard_normals(seed: int, index: int, purpose: int, n: int) -> np.ndarray:
    """n standard normal draws from the (seed, index, purpose) stream."""
    raw = _philox(seed, index, purpose).random_raw(n)
    # top 53 bits, centered: u in (0, 1) strictly, so ndtri stays finite
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


@dataclass(frozen=True)
class CoefficientVector:
    """Gaussian coefficients of one polynomial replicate.

    ``b`` is present exactly when the replicate belongs to the stationary
    (cosine+sine) ensemble.
    """

    K: int
    a: np.ndarray
    b: np.ndarray | None
    seed_info: tuple  # (seed, replicate index)

    @property
    def ensemble(self) -> str:
        return "stationary" if self.b is not None else "cosine"


def draw_coefficients(K: int, ensemble: str = "cosine", seed: int = 0, index: int = 0) -> CoefficientVector:
    """Draw one replicate's coefficient vector(s), deterministically."""
    if K < 1:
        raise UsageError(f"degree K must be >= 1, got {K}")
    if ensemble not in _ENSEMBLES:
        raise UsageError(f"unknown ensemble {ensemble!r}")
    if ensemble == "stationary":
        z = standard_normals(seed, index, PURPOSE_COEFFS, 2 * K)
        return CoefficientVector(K=K, a=z[:K], b=z[K:], seed_info=(seed, index))
    z = standard_normals(seed, index, PURPOSE_COEFFS, K)
    return CoefficientVector(K=K, a=z, b=None, seed_info=(seed, index))


def draw_coefficient_batch(K: int, ensemble: str, seed: int, indices) -> tuple:
    """Coefficient rows for many replicates; row i uses stream ``indices[i]``.

    Returns (a, b) with shapes (B, K); ``b`` is None for the cosine ensemble.
    """
    if ensemble not in _ENSEMBLES:
        raise UsageError(f"unknown ensemble {ensemble!r}")
    per = 2 * K if ensemble == "stationary" else K
    rows = np.empty((len(indices), per))
    for i, idx in enumerate(indices):
        rows[i] = standard_normals(seed, int(idx), PURPOSE_COEFFS, per)
    if ensemble == "stationary":
        return rows[:, :K], rows[:, K:]
    return rows, None


def eval_path(coeffs: CoefficientVector, t, rescaled: bool = True):
    """Evaluate a replicate's path and derivative at ``t``.

    Rescaled axis: K^{-1/2} sum a_n cos(n t / K) (+ sine part), frequencies
    n/K; original axis: frequencies n on [0, 2*pi).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    pts = np.atleast_1d(t)
    K = coeffs.K
    freqs = np.arange(1, K + 1, dtype=float)
    if rescaled:
        freqs = freqs / K
    ang = np.multiply.outer(pts, freqs)
    cos_m = np.cos(ang)
    sin_m = np.sin(ang)
    scale = 1.0 / np.sqrt(K)
    val = scale * (cos_m @ coeffs.a)
    der = -scale * (sin_m * freqs) @ coeffs.a
    if coeffs.b is not None:
        val = val + scale * (sin_m @ coeffs.b)
        der = der + scale * ((cos_m * freqs) @ coeffs.b)
    if scalar:
        return float(val[0]), float(der[0])
    return val, der


@dataclass(frozen=True)
class PathSample:
    """Values of one Gaussian-process draw on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray | None = None


def sample_limit_process(kernel: Kernel, grid, seed: int, index: int = 0) -> PathSample:
    """One multivariate-normal draw of ``kernel`` restricted to ``grid``.

    The Gram matrix is factorized symmetrically (Cholesky) with a diagonal
    jitter ladder 0 -> 1e-12 -> 1e-10 -> 1e-8; exhausting the ladder raises
    DegeneracyError.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise UsageError("grid must be a nonempty 1-D array")
    if g.size > MAX_GRID:
        raise UsageError(f"grid larger than {MAX_GRID}; window the request")
    if g.size > 1 and not np.all(np.diff(g) > 0.0):
        raise UsageError("grid must be strictly increasing")
    gram = kernel.gram(g)
    chol = None
    for jit in _JITTERS:
        try:
            chol = np.linalg.cholesky(gram + jit * np.eye(g.size))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise DegeneracyError("Gram matrix not factorizable within the jitter ladder")
    z = standard_normals(seed, index, PURPOSE_GRID, g.size)
    return PathSample(grid=g, values=chol @ z)
