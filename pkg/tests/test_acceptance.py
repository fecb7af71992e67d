"""Acceptance criteria, one test per criterion.

Each test prints one ``CRITERION n: PASS|FAIL`` line (also collected into the
pytest terminal summary) before asserting. Running this file as a script
prints the same lines without pytest.
"""

import math

import numpy as np

from relbouncer import lagrangian as lag
from relbouncer.core import A_of_v, K_exact, K_first_order, K_nonrel, ModelParams, PhaseState, gamma, integrand_A
from relbouncer.numerics import QuadratureSpec, adaptive_quad, airy_zeros, central_difference
from relbouncer.quantum import (
    VelocityGrid,
    airy_energy_scale,
    default_scan_points,
    evolve,
    find_spectrum,
    gaussian_packet,
    phi_E,
    project,
    superpose,
    to_position,
    to_velocity,
)
from relbouncer.trajectories import IntegratorConfig, conservation_report, integrate, integrate_fixed

RESULTS: dict[int, str] = {}

SUB = ModelParams.natural(f=1.0, beta=0.3)
START = PhaseState(0.0, 0.5)
AIRY = ModelParams.natural(f=1e-3)
V0 = 0.999


def report(n: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'} {detail}"
    RESULTS[n] = line
    print(line)
    assert passed, line


_spectra: dict[float, list] = {}


def airy_spectrum(beta: float):
    if beta not in _spectra:
        p = AIRY.with_beta(beta)
        scale = airy_energy_scale(p)
        e_max = 1 + 6.5 * scale
        _spectra[beta] = find_spectrum(1.0, e_max, default_scan_points(1.0, e_max, p), VelocityGrid(V0, 2001), p)
    return _spectra[beta]


def test_criterion_01_conservation():
    traj = integrate(START, IntegratorConfig(rel_tol=1e-9, t_max=20.0), SUB)
    rep = conservation_report(traj)
    report(1, rep.max_drift <= 1e-6,
           f"max drift {rep.max_drift:.3e} <= 1e-6 over {len(rep.segments)} segment(s), {len(traj)} samples")


def test_criterion_02_branch_derivative():
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        p = ModelParams.natural(beta=beta)
        for v in np.linspace(-0.9, 0.9, 20):
            fd = central_difference(lambda q: A_of_v(q, p), float(v))
            ref = integrand_A(v, p)
            worst = max(worst, abs(fd - ref) / max(abs(ref), 1e-300))
    report(2, worst <= 1e-6, f"worst relative dA/dv mismatch {worst:.3e} <= 1e-6 (3 regimes x 20 points)")


def test_criterion_03_beta_limit():
    xs = (0.0, 1.0)
    vs = np.linspace(-0.9, 0.9, 19)
    betas = np.array([1e-2, 1e-3, 1e-4])
    sups = []
    for beta in betas:
        p = ModelParams.natural(beta=beta)
        sups.append(max(abs(K_exact(x, v, p) - (gamma(v, p) + x)) for x in xs for v in vs))
    slope = np.polyfit(np.log(betas), np.log(sups), 1)[0]
    report(3, abs(slope - 1.0) <= 0.1, f"log-log slope {slope:.4f} (target 1.0 +- 0.1)")


def test_criterion_04_first_order():
    ratios = []
    for v in (-0.5, 0.3, 0.5, 0.8):
        gaps = [abs(K_exact(0.2, v, ModelParams.natural(beta=b)) - K_first_order(0.2, v, ModelParams.natural(beta=b)))
                for b in (1e-2, 5e-3)]
        ratios.append(gaps[0] / gaps[1])
    ok = all(abs(r - 4.0) <= 0.4 for r in ratios)
    report(4, ok, "gap ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " (target 4 +- 10%)")


def test_criterion_05_nonrel():
    worst = 0.0
    for beta in (1e-2, 1e-1, 1.0):
        p = ModelParams.natural(f=1.5, beta=beta)
        for v in np.linspace(-1e-2, 1e-2, 21) / beta:
            if v == 0:
                continue
            for x in (0.0, 0.7):
                err = abs(K_nonrel(x, v, p) - (0.5 * v * v + p.f * x))
                worst = max(worst, err / (abs(v) ** 3 * beta))
    report(5, worst <= 1.0, f"max |error| / (m |v|^3 beta) = {worst:.4f} <= 1")


def test_criterion_06_lagrangian_consistency():
    worst_c, worst_leg = 0.0, 0.0
    for beta in (0.5, 1.0, 2.0):
        p = ModelParams.natural(beta=beta)
        for v in (0.2, 0.5, 0.8):
            c_val = lag.C_of_v(v, p)
            worst_c = max(worst_c, abs(c_val - lag.dB_dv(v, p)) / abs(c_val))
            worst_leg = max(worst_leg, abs(lag.legendre_residual(v, p)))
    p = ModelParams.natural(beta=0.5)
    for v in (0.2, 0.5, 0.8):
        leg = lambda q: q * lag.p_nonrel(q, p) - lag.L_nonrel(0.3, q, p) - K_nonrel(0.3, q, p)
        worst_leg = max(worst_leg, abs(central_difference(leg, v)))
        pv = lag.p_nonrel(v, p)
        worst_c = max(worst_c, abs(pv - central_difference(lambda q: lag.L_nonrel(0.3, q, p), v)) / abs(pv))
    ok = worst_c <= 1e-5 and worst_leg <= 1e-5
    report(6, ok, f"C vs dB/dv rel {worst_c:.2e}, Legendre residual {worst_leg:.2e} (both <= 1e-5)")


def test_criterion_07_normalization():
    worst = 0.0
    for beta in (0.0, 1e-3, 0.5):
        p = ModelParams.natural(f=1e-2, beta=beta)
        for E in (1.0, 1.05, 1.3):
            val = adaptive_quad(lambda v: np.abs(phi_E(v, E, V0, p)) ** 2, -V0, V0, QuadratureSpec()).value
            worst = max(worst, abs(val - 1.0))
            g = VelocityGrid(V0, 2001)
            worst = max(worst, abs(g.integrate(np.abs(phi_E(g.nodes, E, V0, p)) ** 2).real - 1.0))
    report(7, worst <= 1e-10, f"max |norm - 1| = {worst:.2e} <= 1e-10")


def test_criterion_08_airy_limit():
    sols = airy_spectrum(0.0)
    scale = (AIRY.f ** 2 / 2) ** (1 / 3)
    a = airy_zeros(3)
    errs = [abs((s.E - 1) / scale - an) / an for s, an in zip(sols, a)]
    ok = len(sols) >= 3 and all(e <= 1e-2 for e in errs)
    report(8, ok, "relative deviations " + ", ".join(f"{e:.4%}" for e in errs) + " (each <= 1%)")


def test_criterion_09_drag_continuity():
    base, drag = airy_spectrum(0.0), airy_spectrum(1e-3)
    p = AIRY.with_beta(1e-3)
    bound = 5 * (p.f ** 2 / 2) ** (1 / 3) * p.beta * p.c
    shifts = [abs(s.E - s0.E) for s0, s in zip(base, drag)]
    ok = len(drag) == len(base) == 3 and all(d <= bound for d in shifts)
    report(9, ok, "shifts " + ", ".join(f"{d:.2e}" for d in shifts) + f" <= {bound:.2e}; residuals "
           + ", ".join(f"{s.residual:.2e}" for s in drag))


def test_criterion_10_unitarity():
    sols = airy_spectrum(0.0)
    packet = superpose(sols, [1.0, 1.0, 1.0])
    A = project(packet, sols)
    E = np.array([s.E for s in sols])
    times = np.linspace(0.0, 2000.0, 100)
    sums = [np.sum(np.abs(A * np.exp(-1j * E * t / AIRY.hbar)) ** 2) for t in times]
    norms = [evolve(packet, A, sols, t, AIRY).norm() for t in times]
    coeff_var = max(sums) - min(sums)
    norm_var = max(abs(n - norms[0]) for n in norms)
    ok = coeff_var <= 1e-14 * sums[0] and norm_var <= 1e-8
    report(10, ok, f"sum|A_n|^2 variation {coeff_var:.1e}; discrete norm variation {norm_var:.3e} (<= 1e-8)")


def test_criterion_11_round_trip():
    g = VelocityGrid(V0, 2001)
    worst = 0.0
    for center, width in ((0.0, 0.1), (0.3, 0.08), (-0.4, 0.06)):
        pkt = gaussian_packet(g, center, width, kick=4.0)
        support = np.abs(g.nodes) <= 0.8 * V0
        inside = g.integrate(np.where(support, np.abs(pkt.amplitudes) ** 2, 0.0)).real
        assert inside >= 0.999
        x = np.linspace(-150.0, 150.0, 12001)
        back = to_velocity(to_position(pkt.amplitudes, g, x, AIRY), x, g.nodes, AIRY)
        worst = max(worst, float(np.max(np.abs(back - pkt.amplitudes))))
    report(11, worst <= 1e-6, f"max |round trip - input| = {worst:.2e} <= 1e-6")


def test_criterion_12_rk4_order():
    t_end = 20.0
    ref = integrate_fixed(START, t_end / 12800, 12800, SUB)
    ns = (400, 800, 1600)
    errs = []
    for n in ns:
        s = integrate_fixed(START, t_end / n, n, SUB)
        errs.append(math.hypot(s.x - ref.x, s.v - ref.v))
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    report(12, abs(slope - 4.0) <= 0.2, f"self-convergence slope {slope:.3f} (target 4.0 +- 0.2)")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
