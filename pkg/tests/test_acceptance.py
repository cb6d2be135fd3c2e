"""Acceptance criteria, one test each; every test logs a single PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lpmhd.estimates import (
    Ensemble,
    commutator_new_ratio,
    gronwall_bound,
    heat_band_time_norms,
    verify_bernstein,
    verify_commutator_new,
    verify_heat_smoothing,
)
from lpmhd.besov import chemin_lerner_norm
from lpmhd.grid import Grid, SpectralField, VectorField, random_divfree_field, random_field
from lpmhd.littlewood_paley import bony_decomposition, default_partition
from lpmhd.solver import (
    SolverConfig,
    apriori_monitor,
    cauchy_study,
    energy_identity_residual,
    perturbation_study,
    simulate,
)

from conftest import mode_coeffs


def _record(log, number, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.1f} s, limit {limit:g} s)"
    log.append(line)
    print(line)
    return ok


def test_partition_exactness(acceptance_log):
    t0 = time.perf_counter()
    g = Grid(2, 256)
    default_partition.cache_clear()
    p = default_partition(g)
    inhom = p.chi + p.phi[[i for i, j in enumerate(p.bands) if j >= 0]].sum(axis=0)
    err = max(np.max(np.abs(inhom - 1)), np.max(np.abs(p.zero_mode + p.phi.sum(axis=0) - 1)))
    ok = _record(acceptance_log, 1, err <= 1e-14, f"max |chi + sum phi_j - 1| = {err:.2e}",
                 time.perf_counter() - t0, 1)
    assert ok


def test_bernstein(acceptance_log):
    t0 = time.perf_counter()
    rep = verify_bernstein(Ensemble(100, (64, 128, 256)))
    per_n = {N: [c["ratio"] for c in rep.cases if c["N"] == N] for N in (64, 128, 256)}
    # the same annulus bounds must hold at every resolution
    bounds_hold = {N: 0.75 <= min(v) and max(v) <= 8 / 3 for N, v in per_n.items()}
    ranges = "; ".join(f"N={N}: [{min(v):.4f}, {max(v):.4f}]" for N, v in per_n.items())
    ok = _record(acceptance_log, 2, all(bounds_hold.values()) and all(len(v) == 100 for v in per_n.values()),
                 f"ratios {ranges}",
                 time.perf_counter() - t0, 30)
    assert ok


def test_bony_reconstruction(acceptance_log):
    t0 = time.perf_counter()
    g = Grid(2, 128)
    worst = 0.0
    for seed in range(50):
        u = random_field(g, 1.0, 2 * seed, kmax=31)
        v = random_field(g, 1.0, 2 * seed + 1, kmax=31)
        tu, tv, r = bony_decomposition(u, v)
        uv = g.forward(g.inverse(u.coeffs) * g.inverse(v.coeffs))
        worst = max(worst, np.linalg.norm(uv - tu.coeffs - tv.coeffs - r.coeffs) / np.linalg.norm(uv))
    ok = _record(acceptance_log, 3, worst <= 1e-10, f"max relative error {worst:.2e} over 50 pairs",
                 time.perf_counter() - t0, 60)
    assert ok


def test_commutator_new(acceptance_log):
    t0 = time.perf_counter()
    rep = verify_commutator_new(1.5, 2, 2, Ensemble(100, (64, 128, 256)))
    g = Grid(2, 128)
    lhs_const = 0.0
    for seed in range(10):
        c = np.zeros((2,) + g.shape, dtype=complex)
        c[:, 0, 0] = np.random.default_rng(seed).normal(size=2)
        u = VectorField(g, c, div_free=True)
        v = random_divfree_field(g, 2.5, seed, kmax=31)
        lhs_const = max(lhs_const, commutator_new_ratio(u, v, 1.5)[1]["lhs"])
    good = rep.passed and math.isfinite(rep.constant) and rep.slope <= 0.1 and lhs_const <= 1e-12
    ok = _record(acceptance_log, 4, good,
                 f"C_meas = {rep.constant:.4g}, slope = {rep.slope:.4f}, constant-u LHS = {lhs_const:.1e}",
                 time.perf_counter() - t0, 300)
    assert ok


def test_heat_smoothing(acceptance_log):
    t0 = time.perf_counter()
    rep = verify_heat_smoothing(1.0, 1.0, 0.5, Ensemble(100, (64, 128)))
    # single modes at |k| = 2^j: band norm 2^{js} |a| ((1 - e^{-rho nu k^2 T}) / (rho nu k^2))^{1/rho}
    worst = 0.0
    nu, T, s = 1.0, 1.0, 0.5
    for N in (64, 128):
        g = Grid(2, N)
        for m, rho in [((1, 0), 1.0), ((0, 2), 1.0), ((4, 0), 2.0), ((0, 8), math.inf), ((16, 0), 1.0)]:
            a = 0.4 + 0.3j
            f0 = SpectralField(g, mode_coeffs(g, m, a))
            k2 = float(m[0] ** 2 + m[1] ** 2)
            j = round(math.log2(math.sqrt(k2)))
            amp = math.sqrt(2) * abs(a)
            if math.isinf(rho):
                expect = amp
            else:
                lam = rho * nu * k2
                expect = amp * ((1 - math.exp(-lam * T)) / lam) ** (1 / rho)
            got = chemin_lerner_norm(heat_band_time_norms(f0, None, nu, T), rho, s, 2.0)
            worst = max(worst, abs(got - 2 ** (j * s) * expect) / (2 ** (j * s) * expect))
    good = rep.passed and rep.slope <= 0.1 and worst <= 1e-12
    ok = _record(acceptance_log, 5, good,
                 f"constant {rep.constant:.4g}, slope {rep.slope:.4f}, single-mode error {worst:.1e}",
                 time.perf_counter() - t0, 120)
    assert ok


@pytest.mark.slow
def test_energy_identity(acceptance_log):
    t0 = time.perf_counter()
    cfg = SolverConfig(N=128, nu=0.1, T_end=1.0, initial="orszag_tang")
    fine = np.max(energy_identity_residual(simulate(cfg.replace(dt=1e-3))))
    res = {dt: np.max(energy_identity_residual(simulate(cfg.replace(dt=dt)))) for dt in (1e-2, 5e-3, 2.5e-3)}
    orders = [math.log2(res[1e-2] / res[5e-3]), math.log2(res[5e-3] / res[2.5e-3])]
    good = fine <= 1e-8 and min(orders) >= 3.5
    ok = _record(acceptance_log, 6, good,
                 f"residual {fine:.2e} at dt=1e-3, halving orders {orders[0]:.2f}, {orders[1]:.2f}",
                 time.perf_counter() - t0, 300)
    assert ok


@pytest.mark.slow
def test_cauchy_in_n(acceptance_log):
    t0 = time.perf_counter()
    tab = cauchy_study(SolverConfig(N=256, dt=5e-3, T_end=0.5, initial="orszag_tang"), [8, 16, 32])
    D = [tab.D[n] for n in (8, 16, 32)]
    good = D[0] > D[1] > D[2] and tab.rate is not None and tab.rate > 1 and not tab.flags
    ok = _record(acceptance_log, 7, good,
                 "D = " + ", ".join(f"{d:.2e}" for d in D) + f", rate {tab.rate:.2f}",
                 time.perf_counter() - t0, 600)
    assert ok


@pytest.mark.slow
def test_apriori_monitor(acceptance_log):
    t0 = time.perf_counter()
    cfg = SolverConfig(N=128, dt=2.5e-3, T_end=0.5, s=2.0, initial="random", data_kmax=8)
    reps = {n: apriori_monitor(simulate(cfg.replace(n=n))) for n in (16, 32)}
    a, b = reps[16].total, reps[32].total
    rel = abs(a - b) / max(a, b)
    boot = all(r.bootstrap_holds for r in reps.values())
    ok = _record(acceptance_log, 8, rel <= 0.05 and boot,
                 f"sums {a:.6g} (n=16), {b:.6g} (n=32), relative difference {rel:.1e}, bootstrap {boot}",
                 time.perf_counter() - t0, 600)
    assert ok


def test_gronwall(acceptance_log):
    t0 = time.perf_counter()
    t = np.linspace(0.0, 2.0, 2001)
    res = gronwall_bound(1.0, 1.0, 0.0, 2.0, t)
    below = t < 1.0
    err = np.max(np.abs(res.bound[below] * (1 - t[below]) - 1))
    tt = np.linspace(0.0, 0.5, 501)
    ode = solve_ivp(lambda _, x: x**2, (0.0, 0.5), [1.0], method="DOP853", t_eval=tt, rtol=1e-12, atol=1e-14)
    bound = gronwall_bound(1.0, 1.0, 0.0, 2.0, tt).bound
    dominated = bool(np.all(ode.y[0] <= bound * (1 + 1e-10)))
    good = err <= 1e-15 and res.blowup_time == pytest.approx(1.0, abs=1e-15) and dominated
    ok = _record(acceptance_log, 9, good,
                 f"max |bound (1 - t) - 1| = {err:.1e}, blow-up time {res.blowup_time}, ODE below bound {dominated}",
                 time.perf_counter() - t0, 1)
    assert ok


@pytest.mark.slow
def test_perturbation(acceptance_log):
    t0 = time.perf_counter()
    cfg = SolverConfig(N=64, dt=5e-3, T_end=0.5, initial="orszag_tang")
    same = perturbation_study(cfg, 0.0)
    amp = [perturbation_study(cfg, d).amplification for d in (1e-6, 1e-5, 1e-4)]
    good = same.identical and max(amp) <= 3 * min(amp)
    ok = _record(acceptance_log, 10, good,
                 "amplification " + ", ".join(f"{a:.4f}" for a in amp) + f", delta=0 bitwise {same.identical}",
                 time.perf_counter() - t0, 300)
    assert ok
