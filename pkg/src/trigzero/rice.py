"""Rice moment integrals for the zero count of the cosine ensemble.

First moment: for the unit-variance standardized process the zero-count mean
over [lo, hi] on the rescaled axis is

    E N = (1/pi) * integral v(t) dt,

where v(t) is the standard deviation of the standardized derivative,
assembled directly from the lag covariance:

    v(t)^2 = [c''(2t) - c''(0) - c'(2t)^2/(1+c(2t))] / (1 + c(2t)).

Second factorial moment: E[N(N-1)] over a window is the double integral of

    E[|D_s| |D_t| given values vanish at s and t] * p_{s,t}(0, 0),

with the conditioned pair handled by explicit 2x2 Gaussian regression and the
conditional absolute moment in closed form,

    E|UV| = (2/pi) sigma_U sigma_V (sqrt(1-rho^2) + rho * arcsin rho).

The integrand has a removable singularity on the diagonal; a thin band
|t - s| < delta is filled in by quadratic extrapolation from nearby lags.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .covariance import c_k_dd0, c_k_derivs
from .errors import NumericError, UsageError

_PANEL = 0.5 * np.pi
_GL_CACHE: dict = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class RiceResult:
    """One moment integral with its quadrature error estimate."""

    value: float
    interval: tuple
    quadrature_error_estimate: float
    K: int


def window_bounds(K: int, alpha: float) -> tuple:
    """Window [ (K pi)^alpha, K pi - (K pi)^alpha ] on the rescaled axis."""
    if not (0.0 < alpha < 0.5):
        raise UsageError("window exponent must lie in (0, 1/2)")
    edge = (K * np.pi) ** alpha
    hi = K * np.pi - edge
    if hi <= edge:
        raise UsageError("window is empty at this K and alpha")
    return (edge, hi)


def wilkins_mean(K: int) -> float:
    """Two-term asymptotic zero-count mean on [0, 2*pi]: ((2K+1) + 0.23)/sqrt(3)."""
    if K < 1:
        raise UsageError("K must be >= 1")
    return (2.0 * K + 1.0 + 0.23) / math.sqrt(3.0)


def zero_intensity(K: int, t):
    """Rice intensity v(t)/pi of the zero set on the rescaled axis."""
    t = np.asarray(t, dtype=float)
    c, c1, c2 = c_k_derivs(K, 2.0 * t)
    denom = 1.0 + c
    v2 = (c2 - c_k_dd0(K) - c1 * c1 / denom) / denom
    return np.sqrt(np.maximum(v2, 0.0)) / np.pi


def _adaptive_gl(f, lo, hi, rel_tol=1e-8, init_len=_PANEL, max_panels=20000):
    """Adaptive Gauss-Legendre with an embedded 16-vs-8-node error estimate."""
    x16, w16 = _gl(16)
    x8, w8 = _gl(8)

    def panel(a_, b_):
        half = 0.5 * (b_ - a_)
        mid = 0.5 * (a_ + b_)
        nodes = np.concatenate((mid + half * x16, mid + half * x8))
        y = f(nodes)
        v16 = half * float(w16 @ y[:16])
        v8 = half * float(w8 @ y[16:])
        return v16, abs(v16 - v8)

    n0 = max(int(np.ceil((hi - lo) / init_len)), 1)
    edges = np.linspace(lo, hi, n0 + 1)
    heap = []
    total = 0.0
    err = 0.0
    for i in range(n0):
        v, e = panel(edges[i], edges[i + 1])
        total += v
        err += e
        heapq.heappush(heap, (-e, i, edges[i], edges[i + 1], v))
    counter = n0
    while err > rel_tol * max(abs(total), 1e-300) and len(heap) < max_panels:
        negE, _, a_, b_, v = heapq.heappop(heap)
        if -negE <= 0.0:
            heapq.heappush(heap, (negE, counter, a_, b_, v))
            break
        mid = 0.5 * (a_ + b_)
        v1, e1 = panel(a_, mid)
        v2, e2 = panel(mid, b_)
        total += v1 + v2 - v
        err += e1 + e2 + negE  # negE = -old error
        counter += 1
        heapq.heappush(heap, (-e1, counter, a_, mid, v1))
        counter += 1
        heapq.heappush(heap, (-e2, counter, mid, b_, v2))
    if err > 1e-4 * max(abs(total), 1.0):
        raise NumericError(f"quadrature stalled: estimate {err:g} on value {total:g}")
    return total, err


def _count_cosine_roots(lo, hi):
    # zeros of cos on [lo, hi): pi/2 + m*pi
    first = math.ceil((lo - 0.5 * math.pi) / math.pi)
    last = math.floor((hi - 1e-15 - 0.5 * math.pi) / math.pi)
    return max(last - first + 1, 0)


def rice_mean(K: int, interval=None, alpha: float | None = None, rel_tol: float = 1e-8) -> RiceResult:
    """Expected zero count over an interval of the rescaled axis [0, K*pi].

    ``interval=None`` means the full axis, or the alpha-window when ``alpha``
    is given.  K = 1 is degenerate (the path is a deterministic cosine shape
    with a random amplitude), so its zero count is the exact root count of the
    cosine factor rather than a Rice integral.
    """
    if K < 1:
        raise UsageError("K must be >= 1")
    if interval is None:
        interval = window_bounds(K, alpha) if alpha is not None else (0.0, K * np.pi)
    lo, hi = float(interval[0]), float(interval[1])
    if not (0.0 <= lo < hi <= K * np.pi + 1e-9):
        raise UsageError("interval must sit inside [0, K*pi]")
    if K == 1:
        return RiceResult(float(_count_cosine_roots(lo, hi)), (lo, hi), 0.0, K)
    val, err = _adaptive_gl(lambda t: zero_intensity(K, t), lo, hi, rel_tol=rel_tol)
    return RiceResult(val, (lo, hi), err, K)


def conditional_abs_moment(sigma_u, sigma_v, rho):
    """E|UV| for a centered bivariate Gaussian with the given sds and correlation."""
    rho = np.clip(np.asarray(rho, dtype=float), -1.0, 1.0)
    return (
        (2.0 / np.pi)
        * np.asarray(sigma_u, float)
        * np.asarray(sigma_v, float)
        * (np.sqrt(np.maximum(1.0 - rho * rho, 0.0)) + rho * np.arcsin(rho))
    )


_MIN_DET = 1e-12


def _pair_intensity(K, s, t):
    """Second-moment Rice integrand at (s, t), vectorized.

    Builds the standardized correlation surface and its needed partials from
    four lag evaluations, conditions the derivative pair on vanishing values
    through explicit 2x2 solves, and multiplies the conditional absolute
    moment by the joint density at (0, 0).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    ct, c1t, c2t = c_k_derivs(K, t - s)
    cs_, c1s_, c2s_ = c_k_derivs(K, t + s)
    cds, c1ds, c2ds = c_k_derivs(K, 2.0 * s)
    cdt, c1dt, c2dt = c_k_derivs(K, 2.0 * t)
    cdd0 = c_k_dd0(K)

    r = 0.5 * (ct + cs_)
    r_s = 0.5 * (c1s_ - c1t)
    r_t = 0.5 * (c1t + c1s_)
    r_st = 0.5 * (c2s_ - c2t)

    ds = 1.0 + cds
    dt_ = 1.0 + cdt
    Vs = np.sqrt(0.5 * ds)
    Vt = np.sqrt(0.5 * dt_)
    Vps = c1ds / (2.0 * Vs)
    Vpt = c1dt / (2.0 * Vt)

    denom = Vs * Vt
    rho = r / denom
    g_s = (r_s - r * Vps / Vs) / denom
    g_t = (r_t - r * Vpt / Vt) / denom
    r11 = (r_st - r_t * Vps / Vs - r_s * Vpt / Vt + r * Vps * Vpt / denom) / denom

    vs2 = (c2ds - cdd0 - c1ds * c1ds / ds) / ds
    vt2 = (c2dt - cdd0 - c1dt * c1dt / dt_) / dt_

    det = np.maximum(1.0 - rho * rho, _MIN_DET)
    sU2 = np.maximum(vs2 - g_s * g_s / det, 0.0)
    sV2 = np.maximum(vt2 - g_t * g_t / det, 0.0)
    c12 = r11 + rho * g_s * g_t / det

    prod = sU2 * sV2
    root = np.sqrt(np.maximum(prod - c12 * c12, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_c = np.clip(c12 / np.sqrt(np.where(prod > 0.0, prod, 1.0)), -1.0, 1.0)
    euv = (2.0 / np.pi) * (root + np.where(prod > 0.0, c12 * np.arcsin(rho_c), 0.0))
    p00 = 1.0 / (2.0 * np.pi * np.sqrt(det))
    return euv * p00


def _inner_s_nodes(w0, w1_minus_u, n_nodes):
    """GL nodes and weights tiling [w0, w1_minus_u] in half-period panels."""
    x, w = _gl(n_nodes)
    length = w1_minus_u - w0
    n_panels = max(int(np.ceil(length / _PANEL)), 1)
    edges = np.linspace(w0, w1_minus_u, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _offband_integral(K, w0, w1, delta, n_nodes):
    """2 * int_{u=delta}^{L} int_{s=w0}^{w1-u} F(s, s+u) ds du."""
    L = w1 - w0
    xg, wg = _gl(n_nodes)
    n_u_panels = max(int(np.ceil((L - delta) / _PANEL)), 1)
    u_edges = np.linspace(delta, L, n_u_panels + 1)
    total = 0.0
    for p in range(n_u_panels):
        ua, ub = u_edges[p], u_edges[p + 1]
        half_u = 0.5 * (ub - ua)
        u_nodes = 0.5 * (ua + ub) + half_u * xg
        u_weights = half_u * wg
        s_all = []
        t_all = []
        w_all = []
        for u, wu in zip(u_nodes, u_weights):
            s_nodes, s_weights = _inner_s_nodes(w0, w1 - u, n_nodes)
            s_all.append(s_nodes)
            t_all.append(s_nodes + u)
            w_all.append(wu * s_weights)
        s_all = np.concatenate(s_all)
        t_all = np.concatenate(t_all)
        w_all = np.concatenate(w_all)
        total += float(w_all @ _pair_intensity(K, s_all, t_all))
    return 2.0 * total


def _band_integral(K, w0, w1, delta, n_nodes):
    """Diagonal band |t-s| < delta via quadratic extrapolation to the diagonal."""
    s_nodes, s_weights = _inner_s_nodes(w0, w1 - 3.0 * delta, n_nodes)
    f1 = _pair_intensity(K, s_nodes, s_nodes + delta)
    f2 = _pair_intensity(K, s_nodes, s_nodes + 2.0 * delta)
    f3 = _pair_intensity(K, s_nodes, s_nodes + 3.0 * delta)
    f0 = 3.0 * f1 - 3.0 * f2 + f3
    line0 = float(s_weights @ f0)
    line1 = float(s_weights @ f1)
    return 2.0 * delta * 0.5 * (line0 + line1)


def rice_second_moment(
    K: int,
    alpha: float = 0.25,
    interval=None,
    diag_band: float = 1e-3,
    nodes: int = 16,
) -> RiceResult:
    """Second factorial moment E[N(N-1)] of the zero count over a window.

    The window defaults to the alpha-trimmed axis; explicit intervals must
    stay strictly inside (0, K*pi), where the standardized derivative is
    nondegenerate.
    """
    if K < 2:
        raise UsageError("second moment needs K >= 2")
    if interval is None:
        interval = window_bounds(K, alpha)
    w0, w1 = float(interval[0]), float(interval[1])
    if not (0.0 < w0 < w1 < K * np.pi):
        raise UsageError("interval must sit strictly inside (0, K*pi)")
    if w1 - w0 <= 10.0 * diag_band:
        raise UsageError("interval is shorter than the diagonal band treatment")
    off16 = _offband_integral(K, w0, w1, diag_band, nodes)
    off8 = _offband_integral(K, w0, w1, diag_band, max(nodes // 2, 4))
    band = _band_integral(K, w0, w1, diag_band, nodes)
    err = abs(off16 - off8) + 0.1 * abs(band)
    value = off16 + band
    if not np.isfinite(value):
        raise NumericError("second-moment integrand produced non-finite values")
    return RiceResult(value, (w0, w1), err, K)


@dataclass(frozen=True)
class RiceVariance:
    """Variance of the windowed zero count assembled from Rice moments."""

    mean: RiceResult
    second_factorial: RiceResult
    variance: float


def rice_variance(K: int, alpha: float = 0.25, nodes: int = 16) -> RiceVariance:
    """Var N = E[N(N-1)] + E[N] - (E[N])^2 over the alpha-window."""
    window = window_bounds(K, alpha)
    m1 = rice_mean(K, interval=window)
    m2 = rice_second_moment(K, alpha=alpha, nodes=nodes)
    var = m2.value + m1.value - m1.value ** 2
    return RiceVariance(mean=m1, second_factorial=m2, variance=var)
