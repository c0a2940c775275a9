"""Covariance kernels of random cosine polynomials and their large-degree limits.

Everything lives on the rescaled time axis [0, K*pi], where the degree-K
ensembles oscillate on an O(1) scale.  Two scalar building blocks drive all
kernels:

* ``c_k(K, tau)`` -- the lag covariance (1/K) * sum_{n=1..K} cos(n*tau/K) of
  the stationary (cosine+sine) ensemble, evaluated through the Dirichlet-kernel
  closed form with a direct-sum fallback at resonances,
* ``sinc(x) = sin(x)/x`` -- its pointwise limit as K grows.

Kernel flavours:

=====================  =========================================
cosine_ensemble(K)     r(s,t) = (c_k(t-s) + c_k(t+s)) / 2
stationary_finite(K)   r(s,t) = c_k(t-s)
stationary_sinc        r(s,t) = sinc(t-s)
limit_nonstationary    r(s,t) = (sinc(t-s) + sinc(t+s)) / 2
=====================  =========================================

``standardized`` wraps any kernel into its unit-variance version and exposes
the standard deviation of the standardized derivative, which is the Rice
intensity of the zero set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, UsageError

# Switch to Taylor series below this argument to avoid 0/0 in sinc and its
# derivatives; 6th-order truncation keeps ~1e-12 accuracy at the boundary.
_SINC_TAYLOR_CUT = 1e-3

# |sin(tau/(2K))| below this triggers the O(K) direct sum instead of the
# Dirichlet closed form.
_DIRICHLET_CUT = 1e-8

# Points-times-degree workspace cap for the term-wise derivative sums.
_CHUNK_BUDGET = 4_000_000


def _as_array(x):
    a = np.asarray(x, dtype=float)
    return a, (a.ndim == 0)


def _scalarize(a, scalar):
    return float(a) if scalar else a


def sinc(x):
    """sin(x)/x with the removable singularity handled by series expansion."""
    a, scalar = _as_array(x)
    a = np.atleast_1d(a)
    small = np.abs(a) < _SINC_TAYLOR_CUT
    out = np.empty_like(a)
    xl = a[~small]
    out[~small] = np.sin(xl) / xl
    xs = a[small]
    x2 = xs * xs
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    return _scalarize(out[0] if scalar else out, scalar)


def sinc_derivs(x):
    """Return (sinc, sinc', sinc'') evaluated elementwise.

    sinc'(x)  = (x cos x - sin x) / x^2
    sinc''(x) = ((2 - x^2) sin x - 2x cos x) / x^3
    """
    a, scalar = _as_array(x)
    a = np.atleast_1d(a)
    small = np.abs(a) < _SINC_TAYLOR_CUT
    s0 = np.empty_like(a)
    s1 = np.empty_like(a)
    s2 = np.empty_like(a)

    xl = a[~small]
    sx, cx = np.sin(xl), np.cos(xl)
    s0[~small] = sx / xl
    s1[~small] = (xl * cx - sx) / (xl * xl)
    s2[~small] = ((2.0 - xl * xl) * sx - 2.0 * xl * cx) / (xl ** 3)

    xs = a[small]
    x2 = xs * xs
    s0[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    s1[small] = xs * (-1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0)
    s2[small] = -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0

    if scalar:
        return float(s0[0]), float(s1[0]), float(s2[0])
    return s0, s1, s2


def _c_k_direct(K, tau):
    """O(K) reference sum (1/K) sum cos(n tau / K); used near resonances."""
    n = np.arange(1, K + 1, dtype=float) / K
    return np.cos(np.multiply.outer(tau, n)).mean(axis=-1)


def c_k(K, tau):
    """Stationary-ensemble covariance (1/K) * sum_{n=1..K} cos(n*tau/K).

    Uses the Dirichlet-kernel identity
        sum_{n<=K} cos(n x) = sin(Kx/2) cos((K+1)x/2) / sin(x/2)
    with x = tau/K, and falls back to the direct sum where sin(x/2) vanishes.
    """
    if K < 1:
        raise UsageError(f"degree K must be >= 1, got {K}")
    a, scalar = _as_array(tau)
    a = np.atleast_1d(a)
    x = a / K
    half = 0.5 * x
    s2 = np.sin(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(K * half) * np.cos((K + 1) * half) / (K * s2)
    bad = np.abs(s2) < _DIRICHLET_CUT
    if np.any(bad):
        val[bad] = _c_k_direct(K, a[bad])
    return _scalarize(val[0] if scalar else val, scalar)


def c_k_derivs(K, tau):
    """Return (c, c', c'') of ``c_k`` at lag ``tau``, term-wise and exact.

    c'(tau)  = -(1/K) sum (n/K)   sin(n tau / K)
    c''(tau) = -(1/K) sum (n/K)^2 cos(n tau / K)

    The sums are evaluated directly (chunked over evaluation points), so the
    derivatives are consistent with ``c_k`` to rounding error.
    """
    if K < 1:
        raise UsageError(f"degree K must be >= 1, got {K}")
    a, scalar = _as_array(tau)
    flat = np.atleast_1d(a).ravel()
    n = np.arange(1, K + 1, dtype=float) / K
    n2 = n * n
    c = np.empty_like(flat)
    c1 = np.empty_like(flat)
    c2 = np.empty_like(flat)
    step = max(1, _CHUNK_BUDGET // K)
    for lo in range(0, flat.size, step):
        sl = slice(lo, min(lo + step, flat.size))
        ang = np.multiply.outer(flat[sl], n)
        cs = np.cos(ang)
        sn = np.sin(ang)
        c[sl] = cs.mean(axis=-1)
        c1[sl] = -(sn @ n) / K
        c2[sl] = -(cs @ n2) / K
    shape = np.atleast_1d(a).shape
    if scalar:
        return float(c[0]), float(c1[0]), float(c2[0])
    return c.reshape(shape), c1.reshape(shape), c2.reshape(shape)


def c_k_dd0(K):
    """c''_K(0) = -(K+1)(2K+1) / (6 K^2); tends to -1/3."""
    return -(K + 1.0) * (2.0 * K + 1.0) / (6.0 * K * K)


class Kernel:
    """Covariance surface with first and second partial derivatives.

    Subclasses provide r, r_s, r_t, r_ss, r_st, r_tt, all vectorized over
    (s, t) arrays on the rescaled axis.  Instances are immutable and all
    evaluations are pure.
    """

    kind = "abstract"

    def r(self, s, t):
        raise NotImplementedError

    def r_s(self, s, t):
        raise NotImplementedError

    def r_t(self, s, t):
        raise NotImplementedError

    def r_ss(self, s, t):
        raise NotImplementedError

    def r_st(self, s, t):
        raise NotImplementedError

    def r_tt(self, s, t):
        raise NotImplementedError

    def std(self, t):
        """Pointwise standard deviation sqrt(r(t, t))."""
        t = np.asarray(t, dtype=float)
        return np.sqrt(np.maximum(self.r(t, t), 0.0))

    def gram(self, grid):
        """Covariance matrix of the process sampled on ``grid``."""
        g = np.asarray(grid, dtype=float)
        return self.r(g[:, None], g[None, :])


@dataclass(frozen=True)
class CosineKernel(Kernel):
    """Covariance of the rescaled pure-cosine ensemble: (c(t-s) + c(t+s))/2."""

    K: int
    kind = "cosine_ensemble"

    def _parts(self, s, t):
        ct, c1t, c2t = c_k_derivs(self.K, np.asarray(t, float) - s)
        cs, c1s, c2s = c_k_derivs(self.K, np.asarray(t, float) + s)
        return (ct, c1t, c2t), (cs, c1s, c2s)

    def r(self, s, t):
        return 0.5 * (c_k(self.K, np.asarray(t, float) - s) + c_k(self.K, np.asarray(t, float) + s))

    def r_s(self, s, t):
        (_, c1t, _), (_, c1s, _) = self._parts(s, t)
        return 0.5 * (c1s - c1t)

    def r_t(self, s, t):
        (_, c1t, _), (_, c1s, _) = self._parts(s, t)
        return 0.5 * (c1t + c1s)

    def r_ss(self, s, t):
        (_, _, c2t), (_, _, c2s) = self._parts(s, t)
        return 0.5 * (c2t + c2s)

    def r_st(self, s, t):
        (_, _, c2t), (_, _, c2s) = self._parts(s, t)
        return 0.5 * (c2s - c2t)

    r_tt = r_ss


@dataclass(frozen=True)
class StationaryFiniteKernel(Kernel):
    """Covariance c(t - s) of the rescaled cosine+sine ensemble."""

    K: int
    kind = "stationary_finite"

    def r(self, s, t):
        return c_k(self.K, np.asarray(t, float) - s)

    def r_s(self, s, t):
        _, c1, _ = c_k_derivs(self.K, np.asarray(t, float) - s)
        return -c1

    def r_t(self, s, t):
        _, c1, _ = c_k_derivs(self.K, np.asarray(t, float) - s)
        return c1

    def r_ss(self, s, t):
        _, _, c2 = c_k_derivs(self.K, np.asarray(t, float) - s)
        return c2

    def r_st(self, s, t):
        _, _, c2 = c_k_derivs(self.K, np.asarray(t, float) - s)
        return -c2

    r_tt = r_ss


@dataclass(frozen=True)
class SincKernel(Kernel):
    """Stationary limit covariance sinc(t - s)."""

    kind = "stationary_sinc"

    def r(self, s, t):
        return sinc(np.asarray(t, float) - s)

    def r_s(self, s, t):
        _, s1, _ = sinc_derivs(np.asarray(t, float) - s)
        return -s1

    def r_t(self, s, t):
        _, s1, _ = sinc_derivs(np.asarray(t, float) - s)
        return s1

    def r_ss(self, s, t):
        _, _, s2 = sinc_derivs(np.asarray(t, float) - s)
        return s2

    def r_st(self, s, t):
        _, _, s2 = sinc_derivs(np.asarray(t, float) - s)
        return -s2

    r_tt = r_ss


@dataclass(frozen=True)
class LimitKernel(Kernel):
    """Nonstationary limit covariance (sinc(t-s) + sinc(t+s)) / 2."""

    kind = "limit_nonstationary"

    def r(self, s, t):
        t = np.asarray(t, float)
        return 0.5 * (sinc(t - s) + sinc(t + s))

    def r_s(self, s, t):
        t = np.asarray(t, float)
        _, d1, _ = sinc_derivs(t - s)
        _, e1, _ = sinc_derivs(t + s)
        return 0.5 * (e1 - d1)

    def r_t(self, s, t):
        t = np.asarray(t, float)
        _, d1, _ = sinc_derivs(t - s)
        _, e1, _ = sinc_derivs(t + s)
        return 0.5 * (d1 + e1)

    def r_ss(self, s, t):
        t = np.asarray(t, float)
        _, _, d2 = sinc_derivs(t - s)
        _, _, e2 = sinc_derivs(t + s)
        return 0.5 * (d2 + e2)

    def r_st(self, s, t):
        t = np.asarray(t, float)
        _, _, d2 = sinc_derivs(t - s)
        _, _, e2 = sinc_derivs(t + s)
        return 0.5 * (e2 - d2)

    r_tt = r_ss


def limit_kernel(s, t):
    """Limit covariance (sinc(t-s) + sinc(t+s)) / 2 as a plain function."""
    return LimitKernel().r(np.asarray(s, float), np.asarray(t, float))


class StandardizedKernel:
    """Unit-variance normalization of a base kernel.

    Exposes the correlation surface rbar(s,t) = r(s,t)/(V(s)V(t)) together
    with its mixed partials and ``v(s)``, the standard deviation of the
    standardized process's derivative.  Evaluation raises DegeneracyError
    wherever the base standard deviation falls below ``tol``.
    """

    def __init__(self, base: Kernel, tol: float = 1e-7):
        self.base = base
        self.tol = float(tol)

    def _v_and_slope(self, t):
        V = self.base.std(t)
        if np.any(V <= self.tol):
            raise DegeneracyError(
                f"base kernel variance below {self.tol ** 2:g} inside the domain"
            )
        # d/dt sqrt(r(t,t)) via the diagonal derivative of r
        Vp = (self.base.r_s(t, t) + self.base.r_t(t, t)) / (2.0 * V)
        return V, Vp

    def rbar(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        Vs, _ = self._v_and_slope(s)
        Vt, _ = self._v_and_slope(t)
        return self.base.r(s, t) / (Vs * Vt)

    def rbar_s(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        Vs, Vps = self._v_and_slope(s)
        Vt, _ = self._v_and_slope(t)
        return (self.base.r_s(s, t) - self.base.r(s, t) * Vps / Vs) / (Vs * Vt)

    def rbar_t(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        Vs, _ = self._v_and_slope(s)
        Vt, Vpt = self._v_and_slope(t)
        return (self.base.r_t(s, t) - self.base.r(s, t) * Vpt / Vt) / (Vs * Vt)

    def rbar_st(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        Vs, Vps = self._v_and_slope(s)
        Vt, Vpt = self._v_and_slope(t)
        r = self.base.r(s, t)
        num = (
            self.base.r_st(s, t)
            - self.base.r_t(s, t) * Vps / Vs
            - self.base.r_s(s, t) * Vpt / Vt
            + r * Vps * Vpt / (Vs * Vt)
        )
        return num / (Vs * Vt)

    def v(self, s):
        """Standard deviation of the standardized derivative at s."""
        s = np.asarray(s, float)
        return np.sqrt(np.maximum(self.rbar_st(s, s), 0.0))


def standardized(kernel: Kernel, tol: float = 1e-7) -> StandardizedKernel:
    """Wrap ``kernel`` into its unit-variance standardized form."""
    return StandardizedKernel(kernel, tol=tol)


def cosine_deriv_sd(K, s):
    """Direct formula for the standardized-derivative sd of the cosine kernel.

    v(s)^2 = [c''(2s) - c''(0) - c'(2s)^2 / (1 + c(2s))] / (1 + c(2s)),
    assembled straight from the lag covariance and its derivatives.  Serves as
    an independent cross-check of ``StandardizedKernel.v``.
    """
    s = np.asarray(s, dtype=float)
    c, c1, c2 = c_k_derivs(K, 2.0 * s)
    denom = 1.0 + c
    v2 = (c2 - c_k_dd0(K) - c1 * c1 / denom) / denom
    return np.sqrt(np.maximum(v2, 0.0))


@dataclass(frozen=True)
class BoundsReport:
    """Outcome of the lag-covariance inequality checks on a grid."""

    K: int
    checked: int
    passed: bool
    violation: tuple | None  # (tau, which, value, bound) of the first failure


def kernel_bounds_check(K, tau_grid) -> BoundsReport:
    """Check |c(tau)| <= pi/tau and |c'(tau)| <= pi/tau + pi^2/(2 tau^2).

    ``tau_grid`` must lie in (0, K*pi].  Returns the first violation, if any;
    comparisons carry no slack, the inequalities hold exactly.
    """
    tau = np.asarray(tau_grid, dtype=float).ravel()
    if tau.size == 0:
        raise UsageError("empty tau grid")
    if np.any(tau <= 0.0) or np.any(tau > K * np.pi + 1e-12):
        raise UsageError("tau grid must lie in (0, K*pi]")
    c, c1, _ = c_k_derivs(K, tau)
    b0 = np.pi / tau
    b1 = np.pi / tau + np.pi ** 2 / (2.0 * tau * tau)
    bad0 = np.abs(c) > b0
    bad1 = np.abs(c1) > b1
    if np.any(bad0):
        i = int(np.argmax(bad0))
        return BoundsReport(K, tau.size, False, (float(tau[i]), "value", float(abs(c[i])), float(b0[i])))
    if np.any(bad1):
        i = int(np.argmax(bad1))
        return BoundsReport(K, tau.size, False, (float(tau[i]), "derivative", float(abs(c1[i])), float(b1[i])))
    return BoundsReport(K, tau.size, True, None)
