"""Zero counting for polynomial replicates: grid scan and eigenvalue oracle.

The scan method samples the path on a uniform grid fine relative to the 2K
root bound, brackets sign changes, and refines each bracket by bisection.
Cells whose endpoint values share a sign but dip toward zero are re-examined
at 4x density; a persistent sign-preserving near-zero is classified through
the analytic derivative (locating the interior extremum exactly) and, if the
extremum value itself is indistinguishable from zero, reported as a
TangencyWarning and counted as zero crossings.

The eigenvalue oracle rewrites the polynomial in z = exp(i t), lifts it to an
ordinary degree-2K polynomial, and reads zeros off the unit-circle roots of
its companion matrix.  It is exact up to eigenvalue accuracy and serves as
the cross-validation reference for the scan method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .sampling import CoefficientVector

_EIGEN_MAX_K = 256
_CIRCLE_TOL = 1e-8
_DEDUPE_TOL = 1e-9
_BISECT_WIDTH = 1e-12
# fraction of the discrete curvature scale below which a parabola extremum
# estimate counts as a possible hidden root pair
_SUSPECT_FRACTION = 0.25
_TANGENCY_REL_TOL = 1e-10

_EVAL_CHUNK_BUDGET = 4_000_000


@dataclass
class ZeroCountResult:
    """Zero count (and optionally located roots) on an interval."""

    count: int
    roots: np.ndarray | None
    method: str
    interval: tuple
    warnings: list = field(default_factory=list)  # unresolved tangency brackets


def _freqs(K: int, rescaled: bool) -> np.ndarray:
    n = np.arange(1, K + 1, dtype=float)
    return n / K if rescaled else n


def _grid_cells(K, lo, hi, oversample, rescaled):
    period = 2.0 * np.pi * (K if rescaled else 1.0)
    cells = int(np.ceil(oversample * 2.0 * K * (hi - lo) / period))
    return max(cells, 16)


def _eval_rows(a, b, freqs, pts):
    """Values of each replicate row at ``pts``; shape (B, len(pts))."""
    B = a.shape[0]
    P = pts.size
    vals = np.empty((B, P))
    step = max(1, _EVAL_CHUNK_BUDGET // max(freqs.size, 1))
    for s in range(0, P, step):
        sl = slice(s, min(s + step, P))
        ang = np.multiply.outer(pts[sl], freqs)
        block = np.cos(ang) @ a.T
        if b is not None:
            block += np.sin(ang) @ b.T
        vals[:, sl] = block.T
    return vals


def _eval_one(a, b, freqs, pts):
    ang = np.multiply.outer(np.atleast_1d(pts), freqs)
    v = np.cos(ang) @ a
    if b is not None:
        v += np.sin(ang) @ b
    return v


def _eval_deriv_one(a, b, freqs, pts):
    ang = np.multiply.outer(np.atleast_1d(pts), freqs)
    d = -(np.sin(ang) * freqs) @ a
    if b is not None:
        d += (np.cos(ang) * freqs) @ b
    return d


def _bisect_deriv_root(a, b, freqs, lo, hi, d_lo_sign):
    # derivative changes sign across [lo, hi]; locate the extremum
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hi - lo < _BISECT_WIDTH:
            break
        dm = float(_eval_deriv_one(a, b, freqs, mid)[0])
        if dm == 0.0:
            break
        if (dm > 0) == d_lo_sign:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisect_many(a, b, freqs, lo, hi, width=_BISECT_WIDTH):
    """Vectorized bisection of value brackets [lo_i, hi_i] for one replicate."""
    lo = lo.copy()
    hi = hi.copy()
    f_lo_pos = _eval_one(a, b, freqs, lo) > 0
    for _ in range(64):
        if np.all(hi - lo < width):
            break
        mid = 0.5 * (lo + hi)
        pos = _eval_one(a, b, freqs, mid) > 0
        go_right = pos == f_lo_pos
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def _suspicious_triples(vals, sgn):
    """Indices i of interior grid points hiding a possible root pair.

    A triple (i-1, i, i+1) of same-sign values with a discrete |v| minimum at
    i is fitted with a parabola; the fit's extremum value crossing zero, or
    landing within a quarter of the discrete curvature scale of it, flags the
    neighborhood for refinement.
    """
    v0, v1, v2 = vals[:-2], vals[1:-1], vals[2:]
    same = (sgn[:-2] == sgn[1:-1]) & (sgn[1:-1] == sgn[2:])
    a1 = np.abs(v1)
    local_min = same & (a1 <= np.abs(v0)) & (a1 <= np.abs(v2))
    d1 = 0.5 * (v2 - v0)
    d2 = v2 - 2.0 * v1 + v0
    with np.errstate(divide="ignore", invalid="ignore"):
        est = v1 - d1 * d1 / (2.0 * d2)
    scale = np.max(np.abs(vals)) if vals.size else 1.0
    margin = _SUSPECT_FRACTION * np.abs(d2) + 1e-13 * scale
    ok = (np.abs(d2) > 0) & (np.abs(d1) <= 1.5 * np.abs(d2))
    hit = local_min & ok & ((np.sign(est) != np.sign(v1)) | (np.abs(est) <= margin))
    return np.nonzero(hit)[0] + 1


def _merge_regions(idx, n_pts):
    """Merge suspicious point indices into disjoint [p0, p1] point ranges."""
    regions = []
    for i in idx:
        p0, p1 = max(i - 1, 0), min(i + 1, n_pts - 1)
        if regions and p0 <= regions[-1][1]:
            regions[-1][1] = max(regions[-1][1], p1)
        else:
            regions.append([p0, p1])
    return regions


def _refine_region(a, b, freqs, t0, t1, n_cells, scale):
    """Re-scan [t0, t1] at 4x density; classify sign-preserving extrema.

    Returns (extra bracket list, tangency bracket list).
    """
    m = 4 * n_cells
    pts = np.linspace(t0, t1, m + 1)
    v = _eval_one(a, b, freqs, pts)
    d = _eval_deriv_one(a, b, freqs, pts)
    sg = v > 0
    brackets = []
    tangencies = []
    for j in range(m):
        if sg[j] != sg[j + 1]:
            brackets.append((pts[j], pts[j + 1]))
            continue
        if (d[j] > 0) == (d[j + 1] > 0):
            continue
        # interior extremum without a sign change: settle it exactly
        tstar = _bisect_deriv_root(a, b, freqs, pts[j], pts[j + 1], d[j] > 0)
        vstar = float(_eval_one(a, b, freqs, tstar)[0])
        if abs(vstar) <= _TANGENCY_REL_TOL * scale:
            tangencies.append((pts[j], pts[j + 1]))
        elif (vstar > 0) != sg[j]:
            brackets.append((pts[j], tstar))
            brackets.append((tstar, pts[j + 1]))
    return brackets, tangencies


def _scan_batch(a, b, K, lo, hi, oversample, rescaled, locate):
    """Scan all rows of (a, b); returns counts, warning lists, root lists."""
    if hi <= lo:
        raise UsageError("empty interval")
    freqs = _freqs(K, rescaled)
    cells = _grid_cells(K, lo, hi, oversample, rescaled)
    pts = np.linspace(lo, hi, cells + 1)
    vals = _eval_rows(a, b, freqs, pts)
    B = a.shape[0]
    counts = np.zeros(B, dtype=np.int64)
    warn_lists = [[] for _ in range(B)]
    root_lists = [None] * B

    sgn_all = vals > 0
    flips_all = sgn_all[:, :-1] != sgn_all[:, 1:]
    for r in range(B):
        v = vals[r]
        sgn = sgn_all[r]
        flip_idx = np.nonzero(flips_all[r])[0]
        brackets = [(pts[i], pts[i + 1]) for i in flip_idx]
        scale = float(np.max(np.abs(v)))
        suspects = _suspicious_triples(v, sgn)
        if suspects.size:
            ar = a[r]
            br = b[r] if b is not None else None
            for p0, p1 in _merge_regions(suspects.tolist(), pts.size):
                extra, tang = _refine_region(
                    ar, br, freqs, pts[p0], pts[p1], p1 - p0, scale
                )
                brackets.extend(extra)
                warn_lists[r].extend(tang)
        counts[r] = len(brackets)
        if locate and brackets:
            ar = a[r]
            br = b[r] if b is not None else None
            blo = np.array([x[0] for x in brackets])
            bhi = np.array([x[1] for x in brackets])
            roots = np.sort(_bisect_many(ar, br, freqs, blo, bhi))
            if roots.size > 1:
                keep = np.concatenate(([True], np.diff(roots) > _DEDUPE_TOL))
                roots = roots[keep]
            roots = roots[(roots >= lo) & (roots < hi)]
            root_lists[r] = roots
            counts[r] = roots.size
        elif locate:
            root_lists[r] = np.empty(0)
    return counts, warn_lists, root_lists


def count_zeros_scan(
    coeffs: CoefficientVector,
    interval,
    oversample: int = 16,
    rescaled: bool = False,
    locate_roots: bool = True,
) -> ZeroCountResult:
    """Count (and locate) zeros on [lo, hi) by grid scan plus bisection."""
    if oversample < 8:
        raise UsageError("oversample must be >= 8")
    lo, hi = float(interval[0]), float(interval[1])
    a = coeffs.a[None, :]
    b = coeffs.b[None, :] if coeffs.b is not None else None
    counts, warns, roots = _scan_batch(
        a, b, coeffs.K, lo, hi, oversample, rescaled, locate_roots
    )
    return ZeroCountResult(
        count=int(counts[0]),
        roots=roots[0],
        method="scan_bisect",
        interval=(lo, hi),
        warnings=warns[0],
    )


def scan_count_batch(a, b, K, interval, oversample=16, rescaled=False):
    """Counts and tangency-warning counts for a batch of replicates."""
    lo, hi = float(interval[0]), float(interval[1])
    counts, warns, _ = _scan_batch(a, b, K, lo, hi, oversample, rescaled, False)
    return counts, np.array([len(w) for w in warns], dtype=np.int64)


def count_zeros_eigen(coeffs: CoefficientVector, interval, rescaled: bool = False) -> ZeroCountResult:
    """Exact zero count via companion-matrix eigenvalues on the unit circle.

    Lifts sum a_n cos(nt) (+ b_n sin(nt)) to the degree-2K polynomial
    z^K * sum_n [(a_n - i b_n)/2 z^n + (a_n + i b_n)/2 z^{-n}] and keeps
    eigen-roots within 1e-8 of |z| = 1 whose angle falls in the interval.
    """
    K = coeffs.K
    if K > _EIGEN_MAX_K:
        raise UsageError(f"eigen oracle limited to K <= {_EIGEN_MAX_K}")
    lo, hi = float(interval[0]), float(interval[1])
    period = 2.0 * np.pi * (K if rescaled else 1.0)
    if not (0.0 <= lo < hi <= period + 1e-9):
        raise UsageError("interval must sit inside one period starting at 0")

    c = np.zeros(2 * K + 1, dtype=complex)
    bvec = coeffs.b if coeffs.b is not None else np.zeros(K)
    for n in range(1, K + 1):
        c[K + n] += 0.5 * (coeffs.a[n - 1] - 1j * bvec[n - 1])
        c[K - n] += 0.5 * (coeffs.a[n - 1] + 1j * bvec[n - 1])
    p = c[::-1]  # highest degree first
    nz = np.nonzero(np.abs(p) > 0.0)[0]
    if nz.size == 0:
        raise UsageError("zero polynomial has no isolated roots")
    z = np.roots(p[nz[0]:])
    z = z[np.abs(np.abs(z) - 1.0) < _CIRCLE_TOL]
    t = np.mod(np.angle(z), 2.0 * np.pi)
    t = np.sort(t)
    if t.size > 1:
        keep = np.concatenate(([True], np.diff(t) > _DEDUPE_TOL))
        t = t[keep]
    if rescaled:
        t = t * K
    t = t[(t >= lo) & (t < hi)]
    return ZeroCountResult(
        count=int(t.size),
        roots=t,
        method="eigen_oracle",
        interval=(lo, hi),
        warnings=[],
    )


def oracle_agreement(K_list, reps, seed, interval=(0.0, np.pi), oversample=16):
    """Cross-validate scan counts and root locations against the eigen oracle.

    Returns a report dict with any count mismatches and the worst root-location
    gap seen across all replicates.
    """
    from .sampling import draw_coefficients

    mismatches = []
    worst_gap = 0.0
    runs = 0
    for K in K_list:
        for idx in range(reps):
            cv = draw_coefficients(K, "cosine", seed, idx)
            scan = count_zeros_scan(cv, interval, oversample=oversample)
            eig = count_zeros_eigen(cv, interval)
            runs += 1
            if scan.count != eig.count:
                mismatches.append(
                    {"K": K, "index": idx, "scan": scan.count, "eigen": eig.count}
                )
                continue
            if scan.count:
                gap = float(np.max(np.abs(scan.roots - eig.roots)))
                worst_gap = max(worst_gap, gap)
    return {
        "runs": runs,
        "mismatches": mismatches,
        "max_root_gap": worst_gap,
        "passed": not mismatches,
    }
