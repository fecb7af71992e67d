import math

import numpy as np
import pytest

from relbouncer.core import K_exact, ModelParams, PhaseState
from relbouncer.errors import ConvergenceError, LightConeError
from relbouncer.trajectories import (
    IntegratorConfig,
    Trajectory,
    conservation_report,
    detect_jumps,
    integrate,
    integrate_fixed,
    step,
    zero_velocity_crossings,
)


def nat(beta=0.0, **kw):
    return ModelParams.natural(beta=beta, **kw)


def test_step_from_rest():
    dt = 1e-4
    s = step(PhaseState(0.0, 0.0), dt, nat(0.3))
    assert s.v == pytest.approx(-dt, rel=1e-4)
    assert s.x == pytest.approx(-0.5 * dt * dt, rel=1e-4)


def test_step_force_free():
    p = nat(0.0, f=1e-15)
    s = step(PhaseState(1.0, 0.4), 0.01, p)
    assert s.x == pytest.approx(1.0 + 0.004, abs=1e-12)
    assert abs(s.v - 0.4) < 1e-12


def test_step_rejects_bad_dt_and_light_cone():
    with pytest.raises(ValueError):
        step(PhaseState(0, 0), 0.0, nat())
    with pytest.raises(LightConeError):
        step(PhaseState(0, -0.9), 10.0, nat(), clamp=False)
    s = step(PhaseState(0, -0.9), 10.0, nat(), clamp=True)
    assert abs(s.v) < 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=1e-13)
    with pytest.raises(ValueError):
        IntegratorConfig(dt_init=0.0)


def test_hyperbolic_motion_oracle():
    # beta = 0 from rest: momentum -f t, so v = -t/sqrt(1+t^2), x = 1 - sqrt(1+t^2)
    p = nat()
    traj = integrate(PhaseState(0.0, 0.0), IntegratorConfig(t_max=5.0), p)
    t = traj.t
    np.testing.assert_allclose(traj.v, -t / np.sqrt(1 + t * t), atol=1e-8)
    np.testing.assert_allclose(traj.x, 1 - np.sqrt(1 + t * t), atol=1e-8)
    assert np.all(np.diff(traj.v) < 0)
    assert conservation_report(traj).max_drift < 1e-6
    assert np.all(np.diff(t) > 0)


def test_zero_length_run():
    traj = integrate(PhaseState(0.0, 0.3), IntegratorConfig(t_max=0.0), nat(0.3))
    assert len(traj) == 1 and traj.jump_marks == []
    rep = conservation_report(traj)
    assert rep.max_drift == 0.0 and len(rep.segments) == 1


def test_sub_regime_long_run():
    p = nat(0.3)
    traj = integrate(PhaseState(0.0, 0.5), IntegratorConfig(t_max=20.0), p)
    assert traj.jump_marks == []
    assert np.all(np.abs(traj.v) < 1.0)
    cross = zero_velocity_crossings(traj, p)
    assert len(cross) == 1
    after = traj.t > cross[0].t
    assert np.all(np.diff(traj.x[after]) < 0)
    # K at the turnaround is the same K as at the start
    assert cross[0].k == pytest.approx(traj.k_values[0], rel=1e-8)
    # turnaround height from conservation: A(0) + f x = A(0.5)
    x_turn = K_exact(0.0, 0.5, p) - K_exact(0.0, 0.0, p)
    assert cross[0].x == pytest.approx(x_turn, abs=1e-8)


def test_k_at_turnarounds_non_increasing():
    p = nat(0.3)
    traj = integrate(PhaseState(0.0, 0.9), IntegratorConfig(t_max=30.0), p)
    ks = [abs(c.k) for c in zero_velocity_crossings(traj, p)]
    assert all(b <= a * (1 + 1e-8) for a, b in zip(ks, ks[1:]))


def test_rk4_self_convergence_order():
    p = nat(0.3)
    start = PhaseState(0.0, 0.5)
    t_end = 4.0
    ref = integrate_fixed(start, t_end / 4000, 4000, p)
    errs = []
    ns = (100, 200, 400)
    for n in ns:
        s = integrate_fixed(start, t_end / n, n, p)
        errs.append(math.hypot(s.x - ref.x, s.v - ref.v))
    slopes = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    for s in slopes:
        assert s == pytest.approx(4.0, abs=0.2)


def test_injected_jump():
    k = np.array([2.0, 2.0, 2.0 + 1e-9, 7.0, 7.0])
    assert detect_jumps(k, 1e-6) == [3]
    traj = Trajectory(np.arange(5.0), np.zeros(5), np.zeros(5), k, detect_jumps(k, 1e-6))
    rep = conservation_report(traj)
    assert len(rep.segments) == 2
    assert rep.segments[0].max_rel_drift == pytest.approx(5e-10)
    assert rep.to_dict()["jump_marks"] == [3]


def test_step_budget():
    with pytest.raises(ConvergenceError):
        integrate(PhaseState(0, 0.5), IntegratorConfig(t_max=5.0, max_steps=3), nat(0.3))


def test_super_regime_terminal_velocity():
    # beta c = 2: the particle settles at v = -1/beta, where the closed form is singular
    p = nat(2.0)
    traj = integrate(PhaseState(0.0, 0.5), IntegratorConfig(t_max=5.0), p)
    assert traj.v[-1] == pytest.approx(-0.5, abs=1e-3)
    rep = conservation_report(traj)
    assert rep.max_drift < 1e-6
