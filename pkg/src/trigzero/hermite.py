"""Probabilists' Hermite polynomials and Hermite-expansion machinery.

The polynomials follow the probabilists' convention

    H_0 = 1,  H_1 = x,  H_{q+1}(x) = x H_q(x) - q H_{q-1}(x),

orthogonal for the standard Gaussian weight with ||H_q||^2 = q!.

Two coefficient tables are built here:

* ``a_{2l}``, the Hermite coefficients of |x|:
      a_{2l} = sqrt(2/pi) * (-1)^{l+1} / (2^l l! (2l-1)),
* ``b_k``, the (unnormalized) limits of the Hermite coefficients of a
  Gaussian bump shrinking to a point mass at 0:
      b_k = (-1)^{k/2} (k-1)!!   for even k,  0 for odd k,
  with the empty double factorial (-1)!! = 1 so that b_0 = 1.

``mehler_product_expectation`` evaluates expectations of four-fold Hermite
products of jointly Gaussian variables by the pairing-diagram sum; it is the
workhorse behind the chaos variance constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

_DEFAULT_MAX_ORDER = 60
_TWO_PI = 2.0 * math.pi


class HermiteBasis:
    """Evaluator for H_0 .. H_{max_order} by the three-term recurrence.

    The recurrence is run in floating point rather than through stored
    monomial coefficients, which avoids catastrophic cancellation at
    moderately high order.
    """

    def __init__(self, max_order: int = _DEFAULT_MAX_ORDER):
        if max_order < 0:
            raise UsageError("max_order must be >= 0")
        self.max_order = int(max_order)
        # float factorials up to 2*max_order, used by expansion consumers
        self.factorial = np.cumprod(
            np.concatenate(([1.0], np.arange(1, 2 * self.max_order + 1, dtype=float)))
        )

    def eval(self, q: int, x):
        """Value of H_q at x (scalar or array)."""
        if q < 0 or q > self.max_order:
            raise UsageError(f"order {q} outside [0, {self.max_order}]")
        x = np.asarray(x, dtype=float)
        h_prev = np.ones_like(x)
        if q == 0:
            return float(h_prev) if x.ndim == 0 else h_prev
        h_cur = x.copy()
        for k in range(1, q):
            h_prev, h_cur = h_cur, x * h_cur - k * h_prev
        return float(h_cur) if x.ndim == 0 else h_cur

    def eval_all(self, q: int, x):
        """Stack of H_0(x) .. H_q(x), shape (q+1,) + x.shape."""
        if q < 0 or q > self.max_order:
            raise UsageError(f"order {q} outside [0, {self.max_order}]")
        x = np.asarray(x, dtype=float)
        out = np.empty((q + 1,) + x.shape)
        out[0] = 1.0
        if q >= 1:
            out[1] = x
        for k in range(1, q):
            out[k + 1] = x * out[k] - k * out[k - 1]
        return out


_default_basis = HermiteBasis()


def hermite_eval(q: int, x):
    """H_q(x) through the package-default basis (orders up to 60)."""
    return _default_basis.eval(q, x)


def _double_factorial_odd(m: int) -> float:
    # (2j-1)!! style product over odd factors up to m (m odd); (-1)!! := 1
    out = 1.0
    for j in range(1, m + 1, 2):
        out *= j
    return out


def abs_coeff(ell: int) -> float:
    """Hermite coefficient a_{2l} of |x|."""
    if ell < 0:
        raise UsageError("index must be >= 0")
    return (
        math.sqrt(2.0 / math.pi)
        * (-1.0) ** (ell + 1)
        / (2.0 ** ell * math.factorial(ell) * (2.0 * ell - 1.0))
    )


def dirac_coeff(k: int) -> float:
    """Table value b_k: (-1)^{k/2} (k-1)!! for even k, zero for odd k."""
    if k < 0:
        raise UsageError("index must be >= 0")
    if k % 2 == 1:
        return 0.0
    return (-1.0) ** (k // 2) * _double_factorial_odd(k - 1)


def dirac_coeff_normalized(k: int) -> float:
    """Hermite coefficient of the point-mass limit: b_k / (k! sqrt(2 pi)).

    This is lim_{eta->0} (1/k!) integral phi_eta(x) H_k(x) phi(x) dx
    = H_k(0) phi(0) / k!, the weight that makes

        sum_k coeff_k * H_k(x)

    act as a Dirac factor at 0 inside Gaussian expectations.  It is the
    normalization under which the order-0 term reproduces the zero-count
    mean, and the one used by the variance-constant assembly.
    """
    return dirac_coeff(k) / (math.factorial(k) * math.sqrt(_TWO_PI))


@dataclass(frozen=True)
class ChaosCoefficients:
    """Coefficient tables for expansions up to order ``q_max``.

    a        : {2l: a_{2l}}         coefficients of |x|
    b        : {k: b_k}             point-mass table (unnormalized)
    fq_grid  : {q: [(l, b_{q-2l} * a_{2l})]}, one row per order q,
               each row holding exactly floor(q/2)+1 entries
    """

    q_max: int
    a: dict
    b: dict
    fq_grid: dict


def chaos_coefficients(q_max: int) -> ChaosCoefficients:
    """Build the (a, b) tables and the per-order coefficient grid."""
    if q_max < 0:
        raise UsageError("q_max must be >= 0")
    a = {2 * ell: abs_coeff(ell) for ell in range(q_max // 2 + 1)}
    b = {k: dirac_coeff(k) for k in range(q_max + 1)}
    grid = {}
    for q in range(q_max + 1):
        grid[q] = [(ell, b[q - 2 * ell] * a[2 * ell]) for ell in range(q // 2 + 1)]
    return ChaosCoefficients(q_max=q_max, a=a, b=b, fq_grid=grid)


def f_q_eval(coeffs: ChaosCoefficients, q: int, x, y):
    """Evaluate sum_l b_{q-2l} a_{2l} H_{q-2l}(x) H_{2l}(y)."""
    if q < 0 or q > coeffs.q_max:
        raise UsageError(f"order {q} outside [0, {coeffs.q_max}]")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    basis = HermiteBasis(max(q, 1))
    hx = basis.eval_all(q, x)
    hy = basis.eval_all(q, y)
    out = np.zeros(np.broadcast(x, y).shape)
    for ell, coef in coeffs.fq_grid[q]:
        if coef == 0.0:
            continue
        out = out + coef * hx[q - 2 * ell] * hy[2 * ell]
    if out.ndim == 0 or (x.ndim == 0 and y.ndim == 0):
        return float(out)
    return out


def _mehler_terms(orders):
    """Pairing multiplicities and integer weights for the diagram sum.

    For orders (n1, n2, n3, n4) of H_{n1}(Z1) H_{n2}(W1) H_{n3}(Z2) H_{n4}(W2)
    with Z1 _|_ W1 and Z2 _|_ W2, every nonzero pairing assigns m1 edges
    Z1-Z2, m2 edges Z1-W2, m3 edges W1-Z2, m4 edges W1-W2 subject to
    m1+m2 = n1, m3+m4 = n2, m1+m3 = n3, m2+m4 = n4.  The system has rank 3,
    so m1 alone enumerates all solutions (at most min(n1, n3)+1 of them).
    """
    n1, n2, n3, n4 = orders
    if n1 + n2 != n3 + n4:
        return []
    terms = []
    for m1 in range(max(0, n3 - n2), min(n1, n3) + 1):
        m2 = n1 - m1
        m3 = n3 - m1
        m4 = n2 - m3
        if m4 < 0:
            continue
        w = (
            math.factorial(n1) * math.factorial(n2) * math.factorial(n3) * math.factorial(n4)
        ) // (
            math.factorial(m1) * math.factorial(m2) * math.factorial(m3) * math.factorial(m4)
        )
        terms.append((m1, m2, m3, m4, float(w)))
    return terms


def correlation_gram(correlations):
    """4x4 correlation matrix of (Z1, W1, Z2, W2) for the given cross terms."""
    rzz, rzw, rwz, rww = (float(c) for c in correlations)
    return np.array(
        [
            [1.0, 0.0, rzz, rzw],
            [0.0, 1.0, rwz, rww],
            [rzz, rwz, 1.0, 0.0],
            [rzw, rww, 0.0, 1.0],
        ]
    )


def mehler_product_expectation(orders, correlations) -> float:
    """E[H_{n1}(Z1) H_{n2}(W1) H_{n3}(Z2) H_{n4}(W2)] via the diagram sum.

    ``orders`` are four nonnegative integers; ``correlations`` are the four
    cross-correlations (rho_zz, rho_zw, rho_wz, rho_ww) between the pairs,
    each pair being internally uncorrelated standard Gaussian.  The joint
    correlation matrix must be positive semidefinite; returns 0 whenever no
    pairing solves the multiplicity system.
    """
    orders = tuple(int(n) for n in orders)
    if len(orders) != 4 or any(n < 0 for n in orders):
        raise UsageError("orders must be four nonnegative integers")
    if len(correlations) != 4:
        raise UsageError("need four cross-correlations")
    if any(abs(c) > 1.0 + 1e-12 for c in correlations):
        raise UsageError("correlations must lie in [-1, 1]")
    gram = correlation_gram(correlations)
    if np.linalg.eigvalsh(gram)[0] < -1e-9:
        raise UsageError("correlation matrix is not positive semidefinite")
    rzz, rzw, rwz, rww = (float(c) for c in correlations)
    total = 0.0
    for m1, m2, m3, m4, w in _mehler_terms(orders):
        total += w * rzz ** m1 * rzw ** m2 * rwz ** m3 * rww ** m4
    return total


def mehler_product_grid(orders, rzz, rzw, rwz, rww):
    """Vectorized diagram sum over correlation arrays (no validity checks).

    Intended for integrands where the correlations come from an actual
    Gaussian process, making the Gram condition automatic.
    """
    out = np.zeros(np.broadcast(rzz, rzw, rwz, rww).shape)
    for m1, m2, m3, m4, w in _mehler_terms(orders):
        out = out + w * rzz ** m1 * rzw ** m2 * rwz ** m3 * rww ** m4
    return out
