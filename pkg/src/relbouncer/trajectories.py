"""RK4 integration of the equations of motion with a constant-of-motion audit."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import K_exact, ModelParams, PhaseState, acceleration
from .errors import ConvergenceError, LightConeError, SingularityError
from .numerics import bisect

JUMP_FACTOR = 1e3


@dataclass(frozen=True)
class IntegratorConfig:
    dt_init: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_max: float = 10.0
    conservation_tol: float = 1e-6
    max_steps: int = 1_000_000
    clamp: bool = True

    def __post_init__(self):
        if self.dt_init <= 0 or self.abs_tol <= 0 or self.conservation_tol <= 0:
            raise ValueError("dt_init, abs_tol and conservation_tol must be positive")
        if self.rel_tol < 1e-12:
            raise ValueError("rel_tol must be >= 1e-12")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    k_values: np.ndarray
    jump_marks: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> Iterator[tuple[float, PhaseState]]:
        for t, x, v in zip(self.t, self.x, self.v):
            yield float(t), PhaseState(float(x), float(v))


@dataclass(frozen=True)
class SegmentDrift:
    start: int
    stop: int          # inclusive
    k_start: float
    max_rel_drift: float
    n_singular: int = 0     # samples where K could not be evaluated


@dataclass(frozen=True)
class ConservationReport:
    segments: list[SegmentDrift]
    jump_marks: list[int]

    @property
    def max_drift(self) -> float:
        return max((s.max_rel_drift for s in self.segments), default=0.0)

    def to_dict(self) -> dict:
        return {
            "max_rel_drift": self.max_drift,
            "n_segments": len(self.segments),
            "jump_marks": list(self.jump_marks),
            "segments": [
                {"start": s.start, "stop": s.stop, "k_start": s.k_start,
                 "max_rel_drift": s.max_rel_drift, "n_singular": s.n_singular}
                for s in self.segments
            ],
        }


def _limit_velocity(v: float, params: ModelParams, clamp: bool) -> float:
    if clamp:
        return min(max(v, -params.v_max), params.v_max)
    if not np.isfinite(v) or abs(v) >= params.c:
        raise LightConeError(f"velocity {v} breached the light cone (c={params.c})")
    return v


def _velocity_scale(v: float, params: ModelParams) -> float:
    # distance-like scale to the nearest fixed point of dv/dt: the light cone,
    # or the terminal velocity -1/beta
    scale = params.c * (1.0 - (v / params.c) ** 2)
    if params.beta > 0:
        scale = min(scale, abs(1.0 + params.beta * v) / params.beta)
    return scale


def step(state: PhaseState, dt: float, params: ModelParams, clamp: bool = True) -> PhaseState:
    """One classical RK4 step of (dx/dt, dv/dt) = (v, a(v))."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def rhs(v):
        v = _limit_velocity(v, params, clamp)
        return v, acceleration(v, params)

    x, v = state.x, _limit_velocity(state.v, params, clamp)
    k1x, k1v = rhs(v)
    k2x, k2v = rhs(v + 0.5 * dt * k1v)
    k3x, k3v = rhs(v + 0.5 * dt * k2v)
    k4x, k4v = rhs(v + dt * k3v)
    x_new = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return PhaseState(x_new, _limit_velocity(v_new, params, clamp))


def _k(state: PhaseState, params: ModelParams) -> float:
    return float(k_along(np.array([state.x]), np.array([state.v]), params)[0])


def k_along(x, v, params: ModelParams) -> np.ndarray:
    """K_exact at each sample; NaN where the closed form is singular (terminal velocity)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    try:
        return np.asarray(K_exact(x, v, params, clamp=True), dtype=float).reshape(-1)
    except SingularityError:
        out = np.full(len(x), np.nan)
        for i, (xi, vi) in enumerate(zip(x, v)):
            try:
                out[i] = K_exact(xi, vi, params, clamp=True)
            except SingularityError:
                pass
        return out


def detect_jumps(k_values, conservation_tol: float) -> list[int]:
    """Indices i where |K[i] - K[i-1]| > 1e3 * conservation_tol * |K[i-1]|."""
    k = np.asarray(k_values, dtype=float)
    if len(k) < 2:
        return []
    dk = np.abs(np.diff(k))
    scale = np.maximum(np.abs(k[:-1]), np.finfo(float).tiny)
    return [int(i) + 1 for i in np.nonzero(dk > JUMP_FACTOR * conservation_tol * scale)[0]]


def integrate(initial: PhaseState, config: IntegratorConfig, params: ModelParams) -> Trajectory:
    """Adaptive RK4 (step doubling) from t = 0 to ``config.t_max``.

    A step is accepted when the two-half-step result differs from the full
    step by at most 15 tol in each component; otherwise the step is halved
    and retried. tol is abs_tol + rel_tol |x| for x and abs_tol + rel_tol s(v)
    for v, where s(v) = c (1 - v^2/c^2) (a relative tolerance on rapidity,
    since K grows like gamma^3 per unit of velocity error near the light
    cone), capped by the distance |1 + beta v|/beta to the terminal velocity.
    """
    state = PhaseState(float(initial.x), _limit_velocity(float(initial.v), params, config.clamp))
    ts, xs, vs = [0.0], [state.x], [state.v]
    t, dt = 0.0, config.dt_init
    n_steps = 0
    while t < config.t_max:
        if n_steps >= config.max_steps:
            raise ConvergenceError(f"integrate: max_steps={config.max_steps} exhausted at t={t}")
        n_steps += 1
        h = min(dt, config.t_max - t)
        full = step(state, h, params, config.clamp)
        half = step(step(state, 0.5 * h, params, config.clamp), 0.5 * h, params, config.clamp)
        tol_x = config.abs_tol + config.rel_tol * max(abs(state.x), abs(half.x))
        v_scale = min(_velocity_scale(state.v, params), _velocity_scale(half.v, params))
        tol_v = config.abs_tol + config.rel_tol * v_scale
        err = max(abs(half.x - full.x) / (15.0 * tol_x), abs(half.v - full.v) / (15.0 * tol_v))
        if err <= 1.0:
            t = t + h if h < config.t_max - t else config.t_max
            state = half
            ts.append(t)
            xs.append(state.x)
            vs.append(state.v)
            grow = 2.0 if err == 0 else min(2.0, 0.9 * err ** -0.2)
            dt = h * max(grow, 1.0) if h == dt else dt
        else:
            dt = 0.5 * h
            if t + dt == t:
                raise ConvergenceError(f"integrate: step size underflow at t={t}")
    t_arr, x_arr, v_arr = np.array(ts), np.array(xs), np.array(vs)
    k_arr = k_along(x_arr, v_arr, params)
    return Trajectory(t_arr, x_arr, v_arr, k_arr, detect_jumps(k_arr, config.conservation_tol))


def integrate_fixed(initial: PhaseState, dt: float, n_steps: int, params: ModelParams,
                    clamp: bool = False) -> PhaseState:
    """``n_steps`` fixed RK4 steps; used for convergence-order measurements."""
    state = initial
    for _ in range(n_steps):
        state = step(state, dt, params, clamp)
    return state


def conservation_report(traj: Trajectory) -> ConservationReport:
    """Largest relative drift of K from its segment-initial value, per jump-free segment.

    Samples where K is NaN (at the terminal velocity of the beta c > 1 branch)
    are skipped and counted.
    """
    k = np.asarray(traj.k_values, dtype=float)
    if len(k) == 0:
        raise ValueError("empty trajectory")
    bounds = [0] + sorted(traj.jump_marks) + [len(k)]
    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue
        seg = k[lo:hi]
        finite = np.isfinite(seg)
        if not finite.any():
            segments.append(SegmentDrift(lo, hi - 1, float("nan"), 0.0, int(hi - lo)))
            continue
        k0 = seg[finite][0]
        scale = abs(k0) if k0 != 0 else 1.0
        drift = float(np.max(np.abs(seg[finite] - k0)) / scale)
        segments.append(SegmentDrift(lo, hi - 1, float(k0), drift, int((~finite).sum())))
    return ConservationReport(segments, list(traj.jump_marks))


@dataclass(frozen=True)
class Crossing:
    t: float
    x: float
    k: float


def zero_velocity_crossings(traj: Trajectory, params: ModelParams, tol: float = 1e-13) -> list[Crossing]:
    """Times where v changes sign, found by bisecting the RK4 step length from the sample before."""
    out = []
    for i in range(len(traj) - 1):
        v0, v1 = traj.v[i], traj.v[i + 1]
        if v0 == 0.0:
            out.append(Crossing(float(traj.t[i]), float(traj.x[i]), float(traj.k_values[i])))
            continue
        if np.sign(v0) == np.sign(v1) or v1 == 0.0:
            continue
        start = PhaseState(float(traj.x[i]), float(v0))
        h = float(traj.t[i + 1] - traj.t[i])
        r = bisect(lambda tau: step(start, tau, params).v if tau > 0 else v0, 0.0, h, tol=tol * max(h, 1.0))
        s = step(start, r.location, params) if r.location > 0 else start
        out.append(Crossing(float(traj.t[i] + r.location), s.x, float(_k(s, params))))
    if len(traj) and traj.v[-1] == 0.0:
        out.append(Crossing(float(traj.t[-1]), float(traj.x[-1]), float(traj.k_values[-1])))
    return out
