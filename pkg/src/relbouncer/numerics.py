"""Shared numerical kernels: quadrature, finite differences, 1-D root and
minimum search, and a self-contained Airy function used as a test oracle."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConvergenceError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for :func:`adaptive_quad` and the indefinite integrals built on it.

    ``v_ref`` is only consulted by callers that turn a definite integral into
    an antiderivative; ``adaptive_quad`` itself ignores it.
    """

    order: int = 15
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_subdivisions: int = 2000
    v_ref: float | None = None

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    n_panels: int


@dataclass(frozen=True)
class RootResult:
    location: float
    half_width: float
    iterations: int
    converged: bool


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(edges, order: int = 15) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule over the given panel edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _panel(f, a, b, x, w):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    coarse = half * np.dot(w, f(mid + half * x))
    q = 0.5 * half
    left = q * np.dot(w, f(mid - q + q * x))
    right = q * np.dot(w, f(mid + q + q * x))
    fine = left + right
    return fine, abs(fine - coarse)


def adaptive_quad(integrand: Callable, a: float, b: float,
                  spec: QuadratureSpec | None = None) -> QuadResult:
    """Globally adaptive Gauss-Legendre quadrature of ``integrand`` over [a, b].

    The integrand must accept a numpy array of abscissae. Each panel is
    estimated with the rule on the whole panel and on its two halves; the
    halved value is kept and the difference is the (pessimistic) error.
    Complex-valued integrands are supported.

    Raises ConvergenceError when ``spec.max_subdivisions`` panels are in use
    and the error target is still not met.
    """
    spec = spec or QuadratureSpec()
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    x, w = gauss_legendre(spec.order)

    value, err = _panel(integrand, a, b, x, w)
    heap = [(-err, 0, a, b, value)]
    total, total_err = value, err
    counter = 1
    while True:
        target = max(spec.abs_tol, spec.rel_tol * abs(total))
        if total_err <= target:
            break
        if len(heap) >= spec.max_subdivisions:
            raise ConvergenceError(
                f"adaptive_quad: error {total_err:.3e} > target {target:.3e} "
                f"after {len(heap)} panels on [{a}, {b}]")
        neg_err, _, pa, pb, pval = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        if pm <= pa or pm >= pb:
            raise ConvergenceError(f"adaptive_quad: panel [{pa}, {pb}] cannot be split further")
        total -= pval
        total_err += neg_err
        for lo, hi in ((pa, pm), (pm, pb)):
            val, e = _panel(integrand, lo, hi, x, w)
            total += val
            total_err += e
            heapq.heappush(heap, (-e, counter, lo, hi, val))
            counter += 1
        # running sums drift; recompute once in a while
        if counter % 256 == 0:
            total = sum(item[4] for item in heap)
            total_err = sum(-item[0] for item in heap)
    return QuadResult(sign * total, total_err, len(heap))


def fd_step(x: float) -> float:
    """Centered-difference step h = max(|x|, 1) * eps**(1/3)."""
    return max(abs(x), 1.0) * EPS ** (1.0 / 3.0)


def central_difference(f: Callable[[float], float], x: float, h: float | None = None) -> float:
    h = fd_step(x) if h is None else h
    return (f(x + h) - f(x - h)) / (2.0 * h)


def bisect(f: Callable[[float], float], a: float, b: float, tol: float,
           max_iter: int = 200) -> RootResult:
    """Bisection on a sign-changing bracket [a, b].

    Stops once the bracket half-width is at most ``tol``; the returned
    location is the bracket midpoint.
    """
    if not a < b:
        raise ValueError(f"invalid bracket [{a}, {b}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    fa, fb = f(a), f(b)
    if fa == 0:
        return RootResult(a, 0.0, 0, True)
    if fb == 0:
        return RootResult(b, 0.0, 0, True)
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    it = 0
    while 0.5 * (b - a) > tol and it < max_iter:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = f(m)
        it += 1
        if fm == 0:
            return RootResult(m, 0.0, it, True)
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    hw = 0.5 * (b - a)
    return RootResult(0.5 * (a + b), hw, it, hw <= tol or hw <= EPS * max(abs(a), abs(b)))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f: Callable[[float], float], a: float, b: float, tol: float,
               max_iter: int = 300) -> RootResult:
    """Golden-section search for the minimum of a unimodal function on [a, b]."""
    if not a < b:
        raise ValueError(f"invalid bracket [{a}, {b}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while 0.5 * (b - a) > tol and it < max_iter:
        it += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        if not (a < c < d < b):
            break
    hw = 0.5 * (b - a)
    return RootResult(0.5 * (a + b), hw, it, hw <= tol or hw <= 4 * EPS * max(abs(a), abs(b)))


# --- Airy function -------------------------------------------------------
#
# Ai is continued along the real axis by re-expanding the Taylor series of
# y'' = x y about successive centres. On x < 0 the solutions oscillate, so
# the continuation is stable and keeps ~1e-14 absolute accuracy.

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
_AIRY_STEP = 0.5


def _airy_taylor(x0: float, y0: float, yp0: float, h: float) -> tuple[float, float]:
    """Advance (y, y') of y'' = x y from x0 to x0 + h by its Taylor series."""
    a_prev, a0, a1 = 0.0, y0, yp0   # a_{k-1}, a_k, a_{k+1} for k = 0
    y = a0 + a1 * h
    yp = a1
    hk = h          # h**(k+1)
    k = 0
    scale = abs(y0) + abs(yp0) + 1e-300
    while True:
        a2 = (x0 * a0 + a_prev) / ((k + 2) * (k + 1))
        hk1 = hk * h
        y += a2 * hk1
        yp += (k + 2) * a2 * hk
        if k > 4 and abs(a2 * hk1) + abs(a1 * hk) < 1e-18 * scale:
            break
        a_prev, a0, a1 = a0, a1, a2
        hk = hk1
        k += 1
        if k > 400:
            break
    return y, yp


def airy_ai(x: float, with_derivative: bool = False):
    """Airy function Ai(x) for moderate |x| (intended range: -20 <= x <= 5)."""
    x = float(x)
    n = max(1, int(math.ceil(abs(x) / _AIRY_STEP)))
    h = x / n
    y, yp, xc = AI0, AIP0, 0.0
    for _ in range(n):
        y, yp = _airy_taylor(xc, y, yp, h)
        xc += h
    return (y, yp) if with_derivative else y


def airy_zeros(n_max: int) -> np.ndarray:
    """First ``n_max`` zeros of Ai on the negative axis, as positive magnitudes.

    Marches the Taylor continuation towards -inf on a fine lattice, brackets
    sign changes and refines each by bisection.
    """
    if not 1 <= n_max <= 10:
        raise ValueError("airy_zeros supports 1 <= n_max <= 10")
    step = 0.05
    zeros = []
    x, y, yp = 0.0, AI0, AIP0
    while len(zeros) < n_max:
        y_new, yp_new = _airy_taylor(x, y, yp, -step)
        if y_new == 0.0 or np.sign(y_new) != np.sign(y):
            x_left, y_left, yp_left = x, y, yp

            def g(t, x_left=x_left, y_left=y_left, yp_left=yp_left):
                return _airy_taylor(x_left, y_left, yp_left, -t)[0]

            r = bisect(g, 0.0, step, tol=1e-15)
            zeros.append(-(x_left - r.location))
        x, y, yp = x - step, y_new, yp_new
    return np.array(zeros)
