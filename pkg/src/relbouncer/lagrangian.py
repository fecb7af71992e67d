"""Lagrangians and generalized momenta obtained from the constants of motion.

A Lagrangian follows from a constant of motion K through L = v * int K dv / v^2,
which fixes L up to a term c1 * v and gives v dL/dv - L = K. The closed
forms come in two modes:

``"literal"``   the reference formulas verbatim, slips included;
``"corrected"`` the same formulas repaired so that C = dB/dv and
                v C - B = A hold identically.

The repairs, per function:

* C (beta c < 1): prefactor m beta c^3 on g1 (literal m beta^3).
* B, C (beta c > 1): prefactor m beta c^3 / (b^2 c^2 - 1)^(3/2) (literal
  (1 - b^2 c^2)^(3/2), which is imaginary there), and the corrected psi.
* f2: numerator -1 - v/c + 2 v^2/c^2 + ... (literal v^2/c^2); g21 rebuilt
  as the matching derivative, (-4 + 3v/c + 3v^2/c^2 - 2v^3/c^3)(1 + s).
* First-order L, p: L = -m c^2/gamma - m beta c^3 arcsin(v/c) - f x,
  p = m gamma v - m beta c^2 gamma.
* Nonrelativistic L, p: L = (m/b^2)(1 + b v) log(1 + b v) - f x,
  p = (m/b)(log(1 + b v) + 1).

B and C are defined for 0 < v < c only.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import (
    A_of_v,
    ModelParams,
    Regime,
    _out,
    guarded_arcsin,
    psi_fn,
    regime,
)
from .errors import DomainError
from .numerics import QuadratureSpec, adaptive_quad, central_difference

LITERAL = "literal"
CORRECTED = "corrected"
MODES = (LITERAL, CORRECTED)

DEFAULT_QUAD = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-14)


def _mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def _positive_velocity(v, params: ModelParams):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or np.any(v >= params.c):
        raise DomainError("Lagrangian functions need 0 < v < c")
    return v


def _log_ratio(v, c):
    # log((1 + s) / (v/c)), s = sqrt(1 - v^2/c^2)
    s = np.sqrt(1.0 - (v / c) ** 2)
    return np.log((1.0 + s) / (v / c))


def _kobussen_integral(integrand: Callable, v: float, v_ref: float, spec: QuadratureSpec) -> float:
    # v * int_{v_ref}^{v} integrand(w) / w^2 dw
    return v * adaptive_quad(lambda w: integrand(w) / (w * w), v_ref, v, spec).value


def _vectorize(fn, v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return fn(float(v))
    return np.array([fn(float(q)) for q in v.ravel()]).reshape(v.shape)


def _sub_arcsin(w, params: ModelParams):
    return guarded_arcsin((params.beta_c + w / params.c) / (1.0 + params.beta * w))


def _super_log(w, params: ModelParams, mode: str):
    psi = psi_fn(w, params, literal=(mode == LITERAL))
    return np.log(psi / (1.0 + params.beta * w))


def f1(v, params: ModelParams, spec: QuadratureSpec | None = None):
    """v * int arcsin((b c + w/c)/(1 + b w)) / w^2 dw, lower limit v_ref (default c/2)."""
    spec = spec or DEFAULT_QUAD
    v = _positive_velocity(v, params)
    if params.beta_c > 1.0:
        raise DomainError("f1 is defined for beta c <= 1")
    v_ref = spec.v_ref if spec.v_ref is not None else 0.5 * params.c
    return _vectorize(lambda q: _kobussen_integral(lambda w: _sub_arcsin(w, params), q, v_ref, spec), v)


def f2(v, params: ModelParams, mode: str = CORRECTED):
    v = _positive_velocity(v, params)
    xi = v / params.c
    s = np.sqrt(1.0 - xi * xi)
    quad = 2.0 * xi * xi if _mode(mode) == CORRECTED else xi * xi
    lg = _log_ratio(v, params.c) + math.log(2.0)
    return _out((-1.0 - xi + quad + 3.0 * xi * s * lg) / s)


def f3(v, params: ModelParams, spec: QuadratureSpec | None = None, mode: str = CORRECTED):
    """v * int log(psi(w)/(1 + b w)) / w^2 dw, lower limit v_ref (default c/2)."""
    spec = spec or DEFAULT_QUAD
    v = _positive_velocity(v, params)
    if params.beta_c <= 1.0:
        raise DomainError("f3 is defined for beta c > 1")
    _mode(mode)
    v_ref = spec.v_ref if spec.v_ref is not None else 0.5 * params.c
    return _vectorize(lambda q: _kobussen_integral(lambda w: _super_log(w, params, mode), q, v_ref, spec), v)


def g1(v, params: ModelParams, spec: QuadratureSpec | None = None):
    v = _positive_velocity(v, params)
    return _out((np.asarray(f1(v, params, spec)) + _sub_arcsin(v, params)) / v)


def g2(v, params: ModelParams, mode: str = CORRECTED):
    v = _positive_velocity(v, params)
    xi = v / params.c
    s = np.sqrt(1.0 - xi * xi)
    lg = _log_ratio(v, params.c) + math.log(2.0)
    if _mode(mode) == CORRECTED:
        g21 = (-4.0 + 3.0 * xi + 3.0 * xi ** 2 - 2.0 * xi ** 3) * (1.0 + s)
    else:
        g21 = (-4.0 - xi - 3.0 * xi ** 2 + xi ** 3) * (1.0 + s)
    g22 = 3.0 * (1.0 - xi * xi) * (1.0 - xi * xi + s) * lg
    return _out((g21 + g22) / ((1.0 - xi * xi) ** 1.5 * (1.0 + s)))


def g3(v, params: ModelParams, spec: QuadratureSpec | None = None, mode: str = CORRECTED):
    v = _positive_velocity(v, params)
    return _out((np.asarray(f3(v, params, spec, mode)) + _super_log(v, params, mode)) / v)


def _noncritical_coefficient(params: ModelParams, mode: str, for_momentum: bool) -> float:
    m, b, c = params.m, params.beta, params.c
    bc = params.beta_c
    num = m * b ** 3 if (for_momentum and mode == LITERAL) else m * b * c ** 3
    if bc < 1.0:
        return num / (1.0 - bc * bc) ** 1.5
    if mode == LITERAL:
        raise DomainError("literal beta c > 1 prefactor (1 - b^2 c^2)^(3/2) is not real")
    return num / (bc * bc - 1.0) ** 1.5


def B_of_v(v, params: ModelParams, mode: str = CORRECTED, spec: QuadratureSpec | None = None):
    """Velocity part of the Lagrangian L = B(v) - f x."""
    _mode(mode)
    v = _positive_velocity(v, params)
    m, b, c = params.m, params.beta, params.c
    s = np.sqrt(1.0 - (v / c) ** 2)
    reg = regime(params)
    if reg is Regime.CRITICAL:
        lg = _log_ratio(v, c) + math.log(2.0)
        return _out(-m * c * v * lg + m * c * c * np.asarray(f2(v, params, mode)) / 3.0)
    bc = params.beta_c
    head = m * c * c / (1.0 - bc * bc) * (-s + b * v * _log_ratio(v, c))
    if b == 0.0:
        return _out(head)
    k = _noncritical_coefficient(params, mode, for_momentum=False)
    tail = f1(v, params, spec) if reg is Regime.SUB else f3(v, params, spec, mode)
    return _out(head + k * np.asarray(tail))


def C_of_v(v, params: ModelParams, mode: str = CORRECTED, spec: QuadratureSpec | None = None):
    """Generalized momentum p = dL/dv."""
    _mode(mode)
    v = _positive_velocity(v, params)
    m, b, c = params.m, params.beta, params.c
    s = np.sqrt(1.0 - (v / c) ** 2)
    reg = regime(params)
    if reg is Regime.CRITICAL:
        lg = _log_ratio(v, c) + math.log(2.0)
        return _out(-m * c * (lg - 1.0 / s) + m * c * np.asarray(g2(v, params, mode)) / 3.0)
    bc = params.beta_c
    head = m * c * c / (1.0 - bc * bc) * ((v - b * c * c) / (c * c * s) + b * _log_ratio(v, c))
    if b == 0.0:
        return _out(head)
    k = _noncritical_coefficient(params, mode, for_momentum=True)
    tail = g1(v, params, spec) if reg is Regime.SUB else g3(v, params, spec, mode)
    return _out(head + k * np.asarray(tail))


def L_first_order(x, v, params: ModelParams, mode: str = CORRECTED):
    v = _positive_velocity(v, params)
    m, b, c = params.m, params.beta, params.c
    g = 1.0 / np.sqrt(1.0 - (v / c) ** 2)
    fx = params.f * np.asarray(x, dtype=float)
    if _mode(mode) == CORRECTED:
        return _out(-m * c * c / g - m * b * c ** 3 * np.arcsin(v / c) - fx)
    br = v / (2 * c) * np.log((g - 1.0) / (g + 1.0)) + np.arcsin(v / c) / g + v / c * np.log(v / c)
    return _out(-m * c * c / g - m * b * c ** 3 * br - fx)


def p_first_order(v, params: ModelParams, mode: str = CORRECTED):
    v = _positive_velocity(v, params)
    m, b, c = params.m, params.beta, params.c
    g = 1.0 / np.sqrt(1.0 - (v / c) ** 2)
    if _mode(mode) == CORRECTED:
        return _out(g * m * v - m * b * c * c * g)
    br = -2.5 + v * g / c * np.arcsin(v / c) - 1.5 * np.log(v / c)
    return _out(g * m * v + b * m * c * c * br)


def _nonrel_arg(v, params: ModelParams):
    if params.beta <= 0.0:
        raise DomainError("nonrelativistic Lagrangian needs beta > 0")
    u = params.beta * np.asarray(v, dtype=float)
    if np.any(u <= -1.0):
        raise DomainError("nonrelativistic Lagrangian needs beta*v > -1")
    return u


def L_nonrel(x, v, params: ModelParams, mode: str = CORRECTED):
    """``literal`` omits the -f x term and uses (b v - 1); ``corrected`` restores both."""
    u = _nonrel_arg(v, params)
    pref = params.m / params.beta ** 2
    if _mode(mode) == LITERAL:
        return _out(pref * (u - 1.0) * np.log1p(u))
    return _out(pref * (1.0 + u) * np.log1p(u) - params.f * np.asarray(x, dtype=float))


def p_nonrel(v, params: ModelParams, mode: str = CORRECTED):
    u = _nonrel_arg(v, params)
    pref = params.m / params.beta
    if _mode(mode) == LITERAL:
        return _out(pref * (np.log1p(u) - (1.0 - u) / (1.0 + u)))
    return _out(pref * (np.log1p(u) + 1.0))


def lagrangian_from_K(K_eval: Callable[[float, float], float], v: float, x: float,
                      spec: QuadratureSpec) -> float:
    """L(x, v) = v * int_{v_ref}^{v} K(x, w) / w^2 dw; ``spec.v_ref`` must be set.

    The result matches any closed form only up to c1 * v.
    """
    if spec.v_ref is None:
        raise ValueError("lagrangian_from_K needs spec.v_ref")
    if v == 0 or spec.v_ref == 0 or np.sign(v) != np.sign(spec.v_ref):
        raise DomainError("v and v_ref must be nonzero and share a sign")
    return _kobussen_integral(lambda w: np.array([K_eval(x, wi) for wi in np.atleast_1d(w)]),
                              v, spec.v_ref, spec)


def legendre_value(v, params: ModelParams, mode: str = CORRECTED, spec: QuadratureSpec | None = None):
    """v C(v) - B(v) - A(v); constant in v when the triple is consistent."""
    v = _positive_velocity(v, params)
    return _out(v * np.asarray(C_of_v(v, params, mode, spec)) - np.asarray(B_of_v(v, params, mode, spec))
                - np.asarray(A_of_v(v, params)))


def legendre_residual(v: float, params: ModelParams, mode: str = CORRECTED,
                      spec: QuadratureSpec | None = None) -> float:
    """Centered-difference d/dv of :func:`legendre_value`."""
    return central_difference(lambda q: legendre_value(q, params, mode, spec), float(v))


def dB_dv(v: float, params: ModelParams, mode: str = CORRECTED, spec: QuadratureSpec | None = None) -> float:
    return central_difference(lambda q: B_of_v(q, params, mode, spec), float(v))


def momentum_monotonicity(p_func: Callable, v_grid) -> dict:
    """Sign structure of dp/dv on a grid; p(v) is invertible only where it is strictly monotone."""
    v = np.asarray(v_grid, dtype=float)
    p = np.asarray([p_func(q) for q in v])
    dp = np.diff(p)
    signs = np.sign(dp)
    changes = int(np.count_nonzero(signs[1:] * signs[:-1] < 0))
    return {
        "strictly_increasing": bool(np.all(dp > 0)),
        "strictly_decreasing": bool(np.all(dp < 0)),
        "sign_changes": changes,
        "p_min": float(p.min()),
        "p_max": float(p.max()),
    }

