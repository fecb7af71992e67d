"""Velocity-representation quantization of the first-order constant of motion.

The continuum eigenfunctions are pure phases on [-v0, v0],

    phi_E(v) = exp(i Theta(v, E)) / sqrt(2 v0),
    Theta = (m^2 c^3 / hbar f) [asin(v/c) - 2 b c s - b v asin(v/c) - E v / (m c^3)],

with s = sqrt(1 - v^2/c^2). A hard wall at x = 0 requires
F(E) = (2 pi)^(-1/2) int phi_E(v) dv = 0, which selects the bouncer spectrum.
For beta = 0 the phase is odd in v and F is real; for beta > 0 F is complex
and eigenvalues are taken as local minima of |F| below a residual threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import ModelParams, guarded_arcsin
from .errors import ConvergenceError, DomainError, GridMismatchError
from .numerics import bisect, composite_gauss_legendre, golden_min

OVERSAMPLE = 8
SCAN_POINTS_PER_SCALE = 400
DEFAULT_V0_FRACTION = 0.999
SENSITIVITY_V0_FRACTION = 0.99


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform symmetric grid on [-v0, v0]; Simpson weights for odd n_points."""

    v0: float
    n_points: int

    def __post_init__(self):
        if not self.v0 > 0:
            raise ValueError("v0 must be positive")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")

    @classmethod
    def default(cls, params: ModelParams, n_points: int = 2001) -> "VelocityGrid":
        return cls(DEFAULT_V0_FRACTION * params.c, n_points)

    @cached_property
    def nodes(self) -> np.ndarray:
        v = np.linspace(-self.v0, self.v0, self.n_points)
        half = self.n_points // 2
        v[self.n_points - half:] = -v[:half][::-1]   # exact symmetry
        if self.n_points % 2:
            v[half] = 0.0
        return v

    @property
    def spacing(self) -> float:
        return 2.0 * self.v0 / (self.n_points - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        h = self.spacing
        n = self.n_points
        w = np.full(n, h)
        if n % 2 == 1 and n >= 3:
            w[1:-1:2] = 4.0 * h / 3.0
            w[2:-1:2] = 2.0 * h / 3.0
            w[0] = w[-1] = h / 3.0
        else:
            w[0] = w[-1] = h / 2.0
        return w

    def check(self, params: ModelParams) -> None:
        if self.v0 > params.v_max:
            raise DomainError(f"v0={self.v0} exceeds c(1-eps_c)={params.v_max}")

    def integrate(self, samples) -> complex:
        return complex(np.dot(self.weights, samples))


@dataclass
class EigenSolution:
    n: int
    E: float
    residual: float
    phase_samples: np.ndarray
    grid: VelocityGrid
    F: complex = 0j
    v0_sensitivity: float | None = None

    def to_dict(self) -> dict:
        out = {"n": self.n, "E": self.E, "residual": self.residual,
               "F_re": self.F.real, "F_im": self.F.imag}
        if self.v0_sensitivity is not None:
            out["v0_sensitivity"] = self.v0_sensitivity
        return out


@dataclass
class WavePacket:
    grid: VelocityGrid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise GridMismatchError("amplitudes do not match the grid")

    def norm(self) -> float:
        return float(np.dot(self.grid.weights, np.abs(self.amplitudes) ** 2))

    def normalized(self) -> "WavePacket":
        return WavePacket(self.grid, self.amplitudes / math.sqrt(self.norm()), self.time)


def phase_scale(params: ModelParams) -> float:
    """m^2 c^3 / (hbar f)."""
    return params.m ** 2 * params.c ** 3 / (params.hbar * params.f)


def airy_energy_scale(params: ModelParams) -> float:
    """(hbar^2 f^2 / 2m)^(1/3), the level spacing scale of the nonrelativistic bouncer."""
    return (params.hbar ** 2 * params.f ** 2 / (2.0 * params.m)) ** (1.0 / 3.0)


def theta(v, E, params: ModelParams):
    v = np.asarray(v, dtype=float)
    c, b = params.c, params.beta
    xi = v / c
    if np.any(np.abs(xi) > 1.0):
        raise DomainError("theta needs |v| <= c")
    a = guarded_arcsin(xi)
    s = np.sqrt(np.clip(1.0 - xi * xi, 0.0, None))
    out = phase_scale(params) * (a - 2.0 * b * c * s - b * v * a - E * v / (params.m * c ** 3))
    return float(out) if out.ndim == 0 else out


def theta_prime(v, E, params: ModelParams):
    """d theta / dv."""
    v = np.asarray(v, dtype=float)
    c, b = params.c, params.beta
    xi = v / c
    s = np.sqrt(1.0 - xi * xi)
    return phase_scale(params) * ((1.0 + b * v) / (c * s) - b * guarded_arcsin(xi) - E / (params.m * c ** 3))


def phi_E(v, E, v0: float, params: ModelParams):
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) > v0 * (1 + 1e-15)):
        raise DomainError("phi_E evaluated outside [-v0, v0]")
    out = np.exp(1j * np.asarray(theta(v, E, params))) / math.sqrt(2.0 * v0)
    return complex(out) if out.ndim == 0 else out


def continuum_overlap(E1: float, E2: float, v0: float, params: ModelParams) -> float:
    """<phi_E1|phi_E2> on [-v0, v0]: sin(k v0)/(k v0), k = m (E2 - E1)/(hbar f), for every beta."""
    k = params.m * (E2 - E1) / (params.hbar * params.f)
    return float(np.sinc(k * v0 / math.pi))


# --- oscillatory quadrature ---------------------------------------------


@dataclass(frozen=True)
class PhaseRule:
    """Composite Gauss-Legendre rule whose panels each carry at most
    2 pi / oversample of phase for every E in [e_lo, e_hi]."""

    nodes: np.ndarray
    weights: np.ndarray
    v0: float
    e_lo: float
    e_hi: float

    @property
    def n_panels(self) -> int:
        return len(self.nodes) // 15


def phase_rule(v0: float, params: ModelParams, e_lo: float, e_hi: float,
               oversample: int = OVERSAMPLE, n_sample: int = 8193) -> PhaseRule:
    """Panel edges equidistribute a bound on |d theta/dv| over the E range.

    Since theta is linear in E, max(|theta'(v, e_lo)|, |theta'(v, e_hi)|)
    bounds |theta'(v, E)| on the whole range. The bound is symmetrized so the
    rule is mirror-symmetric and odd phases integrate to a real number.
    """
    if v0 > params.v_max:
        raise DomainError(f"v0={v0} exceeds c(1-eps_c)={params.v_max}")
    s = np.linspace(0.0, 1.0, n_sample)
    w = v0 * (1.0 - (1.0 - s) ** 2)          # clustered towards v0
    rho = np.zeros_like(w)
    for e in (e_lo, e_hi):
        for sign in (1.0, -1.0):
            rho = np.maximum(rho, np.abs(theta_prime(sign * w, e, params)))
    rho = rho + 1e-3 * rho.max() + 1.0 / v0
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(w))))
    n_half = max(2, int(math.ceil(cum[-1] * oversample / (2.0 * math.pi))))
    half_edges = np.interp(np.linspace(0.0, cum[-1], n_half + 1), cum, w)
    half_edges[0], half_edges[-1] = 0.0, v0
    edges = np.concatenate((-half_edges[::-1], half_edges[1:]))
    nodes, weights = composite_gauss_legendre(edges, 15)
    return PhaseRule(nodes, weights, v0, min(e_lo, e_hi), max(e_lo, e_hi))


def residual_curve(energies, v0: float, params: ModelParams, rule: PhaseRule | None = None,
                   chunk: int = 64) -> np.ndarray:
    """F(E) for an array of energies, sharing one phase rule."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if rule is None:
        rule = phase_rule(v0, params, float(energies.min()), float(energies.max()))
    elif energies.min() < rule.e_lo - 1e-12 * abs(rule.e_lo) or energies.max() > rule.e_hi + 1e-12 * abs(rule.e_hi):
        raise ValueError("energies outside the range the phase rule was built for")
    e_ref = 0.5 * (rule.e_lo + rule.e_hi)
    base = np.asarray(theta(rule.nodes, e_ref, params))
    slope = params.m / (params.hbar * params.f) * rule.nodes
    pref = 1.0 / math.sqrt(2.0 * math.pi * 2.0 * v0)
    out = np.empty(len(energies), dtype=complex)
    for i in range(0, len(energies), chunk):
        de = energies[i:i + chunk] - e_ref
        ph = base[None, :] - de[:, None] * slope[None, :]
        out[i:i + chunk] = pref * (np.exp(1j * ph) @ rule.weights)
    return out


def quantization_residual(E: float, grid: VelocityGrid, params: ModelParams,
                          rule: PhaseRule | None = None) -> complex:
    """F(E) = (2 pi)^(-1/2) int_{-v0}^{v0} phi_E(v) dv, i.e. psi(x = 0)."""
    grid.check(params)
    return complex(residual_curve([E], grid.v0, params, rule)[0])


def default_scan_points(E_min: float, E_max: float, params: ModelParams) -> int:
    """400 scan points per unit of (hbar^2 f^2 / 2m)^(1/3)."""
    return max(2, int(math.ceil((E_max - E_min) / airy_energy_scale(params) * SCAN_POINTS_PER_SCALE)) + 1)


def residual_threshold(v0: float) -> float:
    return 1e-3 * math.sqrt(2.0 * v0)


@dataclass
class RefinementFailure:
    bracket: tuple[float, float]
    message: str

    def to_dict(self) -> dict:
        return {"bracket": list(self.bracket), "error": self.message}


def _refine(E_lo, E_hi, rule, v0, params, tol_E, use_real):
    def F(e):
        return residual_curve([e], v0, params, rule)[0]

    if use_real:
        r = bisect(lambda e: F(e).real, E_lo, E_hi, tol_E)
    else:
        r = golden_min(lambda e: abs(F(e)), E_lo, E_hi, tol_E)
    if not r.converged:
        raise ConvergenceError(f"refinement on [{E_lo}, {E_hi}] stopped at half-width {r.half_width}")
    return r.location, F(r.location)


def find_spectrum(E_min: float, E_max: float, n_scan: int, grid: VelocityGrid, params: ModelParams,
                  tol_E: float | None = None, oversample: int = OVERSAMPLE,
                  threshold: float | None = None, sensitivity: bool = False,
                  failures: list | None = None) -> list[EigenSolution]:
    """Bouncer eigenvalues in [E_min, E_max], sorted by energy.

    beta = 0: sign changes of Re F on the scan, refined by bisection.
    beta > 0: local minima of |F| on the scan, refined by golden section and
    kept when |F| <= ``threshold`` (default 1e-3 sqrt(2 v0)).

    Refinement failures raise ConvergenceError unless a ``failures`` list is
    given, in which case they are appended there and skipped.
    """
    return scan_spectrum(E_min, E_max, n_scan, grid, params, tol_E, oversample, threshold,
                         sensitivity, failures)[0]


def scan_spectrum(E_min: float, E_max: float, n_scan: int, grid: VelocityGrid, params: ModelParams,
                  tol_E: float | None = None, oversample: int = OVERSAMPLE,
                  threshold: float | None = None, sensitivity: bool = False,
                  failures: list | None = None) -> tuple[list[EigenSolution], np.ndarray, np.ndarray]:
    """:func:`find_spectrum` that also returns the scan energies and F on them."""
    if not E_min < E_max:
        raise ValueError("need E_min < E_max")
    if n_scan < 2:
        raise ValueError("n_scan must be >= 2")
    grid.check(params)
    sols, energies, F = _solve(E_min, E_max, n_scan, grid, params, tol_E, oversample, threshold, failures)
    if sensitivity and sols:
        alt_v0 = SENSITIVITY_V0_FRACTION * params.c
        if abs(alt_v0 - grid.v0) > 1e-12 * params.c:
            alt, _, _ = _solve(E_min, E_max, n_scan, VelocityGrid(alt_v0, grid.n_points), params,
                               tol_E, oversample, threshold, [])
            for s, a in zip(sols, alt):
                s.v0_sensitivity = (s.E - a.E) / (grid.v0 - alt_v0)
    return sols, energies, F


def _solve(E_min, E_max, n_scan, grid, params, tol_E, oversample, threshold, failures):
    v0 = grid.v0
    rule = phase_rule(v0, params, E_min, E_max, oversample)
    energies = np.linspace(E_min, E_max, n_scan)
    F = residual_curve(energies, v0, params, rule)
    tol_E = tol_E if tol_E is not None else 1e-12 * max(1.0, abs(E_min), abs(E_max))
    use_real = params.beta == 0.0
    brackets = []
    if use_real:
        R = F.real
        for i in range(n_scan - 1):
            if R[i] == 0.0:
                brackets.append((energies[i], energies[i]))
            elif R[i] * R[i + 1] < 0:
                brackets.append((energies[i], energies[i + 1]))
    else:
        A = np.abs(F)
        for i in range(1, n_scan - 1):
            if A[i] < A[i - 1] and A[i] <= A[i + 1]:
                brackets.append((energies[i - 1], energies[i + 1]))
    threshold = residual_threshold(v0) if threshold is None else threshold
    out = []
    for lo, hi in brackets:
        try:
            if lo == hi:
                E, f = lo, residual_curve([lo], v0, params, rule)[0]
            else:
                E, f = _refine(lo, hi, rule, v0, params, tol_E, use_real)
        except ConvergenceError as exc:
            if failures is None:
                raise
            failures.append(RefinementFailure((float(lo), float(hi)), str(exc)))
            continue
        if not use_real and abs(f) > threshold:
            continue
        out.append(EigenSolution(len(out) + 1, float(E), float(abs(f)),
                                 phi_E(grid.nodes, E, v0, params), grid, complex(f)))
    return out, energies, F


# --- packets, projection, evolution -------------------------------------


def gaussian_packet(grid: VelocityGrid, center: float, width: float, kick: float = 0.0) -> WavePacket:
    """Normalized Gaussian in v with |phi|^2 standard deviation ``width``; ``kick`` adds phase exp(i kick v)."""
    v = grid.nodes
    amp = np.exp(-((v - center) ** 2) / (4.0 * width ** 2) + 1j * kick * v)
    return WavePacket(grid, amp).normalized()


def _same_grid(a: VelocityGrid, b: VelocityGrid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def superpose(basis: Sequence[EigenSolution], weights, normalize: bool = True) -> WavePacket:
    weights = np.asarray(weights, dtype=complex)
    if len(weights) != len(basis) or not basis:
        raise ValueError("need one weight per basis function")
    grid = basis[0].grid
    amp = np.zeros(grid.n_points, dtype=complex)
    for w, b in zip(weights, basis):
        _same_grid(grid, b.grid)
        amp += w * b.phase_samples
    pkt = WavePacket(grid, amp)
    return pkt.normalized() if normalize else pkt


def project(initial: WavePacket, basis: Sequence[EigenSolution]) -> np.ndarray:
    """A_n = int phi_n^*(v) Phi(v, 0) dv on the packet's grid."""
    for b in basis:
        _same_grid(initial.grid, b.grid)
    w = initial.grid.weights
    return np.array([np.dot(w, np.conj(b.phase_samples) * initial.amplitudes) for b in basis], dtype=complex)


def evolve(packet: WavePacket, coefficients, basis: Sequence[EigenSolution], t: float,
           params: ModelParams) -> WavePacket:
    """Phi(v, t) = sum_n A_n phi_n(v) exp(-i E_n t / hbar)."""
    coefficients = np.asarray(coefficients, dtype=complex)
    if len(coefficients) != len(basis):
        raise ValueError("coefficients and basis differ in length")
    amp = np.zeros(packet.grid.n_points, dtype=complex)
    for a, b in zip(coefficients, basis):
        _same_grid(packet.grid, b.grid)
        amp += a * np.exp(-1j * b.E * t / params.hbar) * b.phase_samples
    return WavePacket(packet.grid, amp, t)


def gram_matrix(basis: Sequence[EigenSolution]) -> np.ndarray:
    """<phi_n|phi_m> by grid quadrature."""
    if not basis:
        return np.zeros((0, 0), dtype=complex)
    w = basis[0].grid.weights
    P = np.array([b.phase_samples for b in basis])
    return (np.conj(P) * w) @ P.T


# --- position representation -------------------------------------------


def _trapezoid_weights(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return np.zeros_like(x)
    d = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def to_position(phi_samples, grid: VelocityGrid, x_grid, params: ModelParams, chunk: int = 256) -> np.ndarray:
    """psi(x) = (2 pi)^(-1/2) int exp(-i m v x / hbar) phi(v) dv."""
    phi = np.asarray(phi_samples, dtype=complex)
    if phi.shape != (grid.n_points,):
        raise GridMismatchError("samples do not match the grid")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    k = params.m / params.hbar
    wphi = grid.weights * phi
    out = np.empty(len(x), dtype=complex)
    for i in range(0, len(x), chunk):
        out[i:i + chunk] = np.exp(-1j * k * np.outer(x[i:i + chunk], grid.nodes)) @ wphi
    return out / math.sqrt(2.0 * math.pi)


def to_velocity(psi_samples, x_grid, v_nodes, params: ModelParams, chunk: int = 256) -> np.ndarray:
    """phi(v) = (2 pi)^(-1/2) int exp(+i m v x / hbar) psi(x) dx, trapezoid rule on ``x_grid``.

    With these kernels to_velocity(to_position(phi)) returns (hbar/m) phi.
    """
    psi = np.asarray(psi_samples, dtype=complex)
    x = np.asarray(x_grid, dtype=float)
    if psi.shape != x.shape:
        raise ValueError("psi samples and x grid differ in shape")
    v = np.atleast_1d(np.asarray(v_nodes, dtype=float))
    k = params.m / params.hbar
    wpsi = _trapezoid_weights(x) * psi
    out = np.empty(len(v), dtype=complex)
    for i in range(0, len(v), chunk):
        out[i:i + chunk] = np.exp(1j * k * np.outer(v[i:i + chunk], x)) @ wpsi
    return out / math.sqrt(2.0 * math.pi)


def eigenfunction_position(E: float, x_grid, v0: float, params: ModelParams) -> np.ndarray:
    """to_position of phi_E evaluated exactly: the kernel only shifts the energy, psi_E(x) = F(E + f x)."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    return residual_curve(E + params.f * x, v0, params)


@dataclass
class WallDiagnostic:
    weight_negative_x: float
    weight_positive_x: float
    psi_at_zero: complex

    @property
    def fraction_negative_x(self) -> float:
        total = self.weight_negative_x + self.weight_positive_x
        return self.weight_negative_x / total if total else 0.0

    def to_dict(self) -> dict:
        return {"weight_negative_x": self.weight_negative_x,
                "weight_positive_x": self.weight_positive_x,
                "fraction_negative_x": self.fraction_negative_x,
                "abs_psi_at_zero": abs(self.psi_at_zero)}


def wall_diagnostic(solution: EigenSolution, x_grid, params: ModelParams) -> WallDiagnostic:
    """Weight of |psi_n|^2 on either side of the wall over ``x_grid``; the hard wall forbids x < 0
    but the spectrum condition only enforces psi(0) = 0."""
    x = np.asarray(x_grid, dtype=float)
    dens = np.abs(eigenfunction_position(solution.E, x, solution.grid.v0, params)) ** 2
    w = _trapezoid_weights(x)
    neg = float(np.dot(w[x < 0], dens[x < 0])) + 0.5 * float(np.dot(w[x == 0], dens[x == 0]))
    pos = float(np.dot(w, dens)) - neg
    return WallDiagnostic(neg, pos, complex(eigenfunction_position(solution.E, [0.0], solution.grid.v0, params)[0]))
