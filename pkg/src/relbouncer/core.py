"""Equations of motion and constants of motion for a relativistic particle
under a constant force f and a linear drag, dv/dt = -(f/m)(1+beta v)(1-v^2/c^2)^(3/2).

Every function takes velocities as floats or numpy arrays; array inputs are
evaluated elementwise.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, SingularityError
from .numerics import QuadratureSpec, adaptive_quad

ARCSIN_GUARD = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters plus the two dimensionless tolerances every formula shares.

    ``beta`` is the drag coefficient divided by the force (units 1/velocity),
    so ``beta * c`` selects the closed-form branch.
    """

    m: float
    f: float
    beta: float
    c: float
    hbar: float
    eps_c: float = 1e-9
    tol_regime: float = 1e-12

    def __post_init__(self):
        for name in ("m", "f", "c", "hbar"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be >= 0, got {self.beta!r}")
        if not 0 < self.eps_c <= 1e-3:
            raise ValueError(f"eps_c must lie in (0, 1e-3], got {self.eps_c!r}")
        if not 0 < self.tol_regime <= 1e-6:
            raise ValueError(f"tol_regime must lie in (0, 1e-6], got {self.tol_regime!r}")

    @classmethod
    def natural(cls, f: float = 1.0, beta: float = 0.0, **kw) -> "ModelParams":
        """m = c = hbar = 1."""
        return cls(m=1.0, f=f, beta=beta, c=1.0, hbar=1.0, **kw)

    def with_beta(self, beta: float) -> "ModelParams":
        return replace(self, beta=beta)

    @property
    def beta_c(self) -> float:
        return self.beta * self.c

    @property
    def v_max(self) -> float:
        """Largest speed allowed after clamping."""
        return self.c * (1.0 - self.eps_c)

    @property
    def rest_energy(self) -> float:
        return self.m * self.c ** 2


class Regime(enum.Enum):
    SUB = "sub"
    CRITICAL = "critical"
    SUPER = "super"


@dataclass(frozen=True)
class PhaseState:
    x: float
    v: float


def regime(params: ModelParams) -> Regime:
    bc = params.beta_c
    if abs(bc - 1.0) <= params.tol_regime:
        return Regime.CRITICAL
    return Regime.SUB if bc < 1.0 else Regime.SUPER


def _out(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def check_velocity(v, params: ModelParams, clamp: bool = False):
    """Return ``v`` as an array, clamped to |v| <= c(1-eps_c) if requested.

    Without ``clamp`` any |v| >= c raises DomainError.
    """
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)):
        raise DomainError("velocity is not finite")
    if clamp:
        return np.clip(v, -params.v_max, params.v_max)
    if np.any(np.abs(v) >= params.c):
        raise DomainError(f"|v| >= c (c={params.c}): max |v| = {np.max(np.abs(v))}")
    return v


def _sqrt1m(v, c):
    return np.sqrt(1.0 - (v / c) ** 2)


def guarded_arcsin(u):
    """arcsin with arguments overshooting [-1, 1] by <= 1e-12 pulled back onto it."""
    u = np.asarray(u, dtype=float)
    over = np.abs(u) - 1.0
    if np.any(over > ARCSIN_GUARD):
        raise DomainError(f"arcsin argument outside [-1, 1]: {u[over > ARCSIN_GUARD]}")
    return np.arcsin(np.clip(u, -1.0, 1.0))


def gamma(v, params: ModelParams, clamp: bool = False):
    v = check_velocity(v, params, clamp)
    return _out(1.0 / _sqrt1m(v, params.c))


def acceleration(v, params: ModelParams, clamp: bool = False):
    """Right-hand side dv/dt of the equations of motion."""
    v = check_velocity(v, params, clamp)
    p = params
    return _out(-(p.f / p.m) * (1.0 + p.beta * v) * (1.0 - (v / p.c) ** 2) ** 1.5)


def integrand_A(v, params: ModelParams):
    """m v / ((1 + beta v)(1 - v^2/c^2)^(3/2)), the derivative of A(v)."""
    v = np.asarray(v, dtype=float)
    p = params
    return _out(p.m * v / ((1.0 + p.beta * v) * (1.0 - (v / p.c) ** 2) ** 1.5))


def phi_fn(v, params: ModelParams, clamp: bool = False):
    v = check_velocity(v, params, clamp)
    return _out(_sqrt1m(v, params.c) * (1.0 - params.beta_c ** 2))


def psi_fn(v, params: ModelParams, clamp: bool = False, literal: bool = False):
    """Argument function of the logarithm in the beta c > 1 branch.

    The default is 2(b^2 c^2 + b v + b c sqrt(1-v^2/c^2) sqrt(b^2 c^2 - 1)),
    whose log differentiates to the A(v) integrand. ``literal=True`` drops the
    ``b c`` factor on the last term; that variant does not satisfy the
    derivative identity and is kept only for comparison.
    """
    v = check_velocity(v, params, clamp)
    bc = params.beta_c
    if bc <= 1.0:
        raise DomainError(f"psi_fn needs beta*c > 1, got {bc}")
    root = math.sqrt(bc * bc - 1.0)
    last = _sqrt1m(v, params.c) * root
    if not literal:
        last = bc * last
    return _out(2.0 * (bc * bc + params.beta * v + last))


def A_of_v(v, params: ModelParams, clamp: bool = False):
    """Closed-form velocity part of the constant of motion, branch chosen by beta c."""
    v = check_velocity(v, params, clamp)
    p = params
    m, c, b = p.m, p.c, p.beta
    s = _sqrt1m(v, c)
    reg = regime(p)
    if reg is Regime.CRITICAL:
        xi = v / c
        if np.any(1.0 + xi <= p.eps_c):
            raise SingularityError("critical branch evaluated within eps_c of v = -c")
        return _out(m * c * v / s + m * c * c * (1.0 - 2.0 * xi - 2.0 * xi * xi) / (3.0 * (1.0 + xi) * s))
    bc = p.beta_c
    first = (1.0 - b * v) * m * c * c / (s * (1.0 - bc * bc))
    if reg is Regime.SUB:
        if b == 0.0:
            return _out(first)
        u = (bc + v / c) / (1.0 + b * v)
        return _out(first + m * b * c ** 3 / (1.0 - bc * bc) ** 1.5 * guarded_arcsin(u))
    lin = 1.0 + b * v
    if np.any(np.abs(lin) <= p.eps_c):
        raise SingularityError("super branch evaluated within eps_c of the terminal velocity v = -1/beta")
    psi = psi_fn(v, p)
    return _out(first + m * b * c ** 3 / (bc * bc - 1.0) ** 1.5 * np.log(np.abs(psi / lin)))


def K_exact(x, v, params: ModelParams, clamp: bool = False, rest_offset: bool = False):
    """A(v) + f x. ``rest_offset`` subtracts m c^2."""
    k = np.asarray(A_of_v(v, params, clamp)) + params.f * np.asarray(x, dtype=float)
    if rest_offset:
        k = k - params.rest_energy
    return _out(k)


def K_first_order(x, v, params: ModelParams, clamp: bool = False):
    """Constant of motion truncated at first order in beta."""
    v = check_velocity(v, params, clamp)
    p = params
    g = 1.0 / _sqrt1m(v, p.c)
    br = g * v / p.c - np.arcsin(v / p.c)
    return _out(g * p.m * p.c ** 2 - p.m * p.beta * p.c ** 3 * br + p.f * np.asarray(x, dtype=float))


def _series_inner(n: int, v: float, params: ModelParams, spec: QuadratureSpec) -> float:
    # int_0^v w^(n-1) (1-w^2/c^2)^(-3/2) dw
    c = params.c
    return adaptive_quad(lambda w: w ** (n - 1) / (1.0 - (w / c) ** 2) ** 1.5, 0.0, v, spec).value


def series_term(n: int, v: float, params: ModelParams, spec: QuadratureSpec | None = None) -> float:
    """n-th (n >= 2) term of the beta expansion of A(v), including its beta**n factor."""
    if n < 2:
        raise ValueError("series terms start at n = 2")
    spec = spec or QuadratureSpec()
    p = params
    c2 = p.c ** 2
    s = math.sqrt(1.0 - (v / p.c) ** 2)
    br = -c2 * v ** n / ((n - 1) * s) + n * c2 / (n - 1) * _series_inner(n, v, p, spec)
    return p.m * (-p.beta) ** n * br


def K_series(x: float, v: float, params: ModelParams, n_terms: int,
             spec: QuadratureSpec | None = None, clamp: bool = False) -> float:
    """First-order constant plus ``n_terms`` higher terms of the beta expansion.

    The inner integrals run from v = 0, so the series carries the constant
    m c^2 at rest rather than the closed form's beta-dependent A(0).
    Warns when beta |v| >= 1, where the expansion diverges.
    """
    if n_terms < 0:
        raise ValueError("n_terms must be >= 0")
    v = float(check_velocity(v, params, clamp))
    if params.beta * abs(v) >= 1.0:
        warnings.warn(f"beta*|v| = {params.beta * abs(v):.3g} >= 1: series diverges", RuntimeWarning)
    total = K_first_order(x, v, params)
    if params.beta == 0.0:
        return total
    for n in range(2, n_terms + 2):
        total += series_term(n, v, params, spec)
    return total


def _x_minus_log1p(u):
    # u - log(1+u) without cancellation for small |u|
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    us = np.where(small, u, 0.0)
    series = us ** 2 / 2 - us ** 3 / 3 + us ** 4 / 4 - us ** 5 / 5 + us ** 6 / 6
    ub = np.where(small, 0.0, u)
    return np.where(small, series, ub - np.log1p(ub))


def K_nonrel(x, v, params: ModelParams):
    """Nonrelativistic constant (m/b^2)(b v - log(1 + b v)) + f x.

    beta = 0 returns the limit m v^2/2 + f x.
    """
    v = np.asarray(v, dtype=float)
    p = params
    fx = p.f * np.asarray(x, dtype=float)
    if p.beta == 0.0:
        return _out(0.5 * p.m * v * v + fx)
    u = p.beta * v
    if np.any(u <= -1.0):
        raise DomainError("K_nonrel needs beta*v > -1")
    return _out(p.m / p.beta ** 2 * _x_minus_log1p(u) + fx)
