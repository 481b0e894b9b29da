"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly as a script.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from lcfshape.config import load_config
from lcfshape.diagnostics import random_admissible_thetas, run_suite
from lcfshape.elasticity import LoadData, solve_elasticity, stress
from lcfshape.fields import ScalarField, VectorField
from lcfshape.geometry import BaselineDesign, DeformationMap, build_baseline, volume
from lcfshape.material import cmb_invert, cmb_strain, neuber_convert, ramberg_osgood
from lcfshape.optimize import evaluate_design, optimize_shape
from lcfshape.reliability import (
    dominance_compare,
    failure_cdf,
    hazard_rate,
    ks_distance,
    mean_life,
    report_from_life,
    sample_first_failures,
)
from lcfshape.thermal import RobinData, solve_heat

from conftest import HOT_SIDE, make_problem, steel
from oracles import convergence_orders, l2_h1_errors, manufactured_thermoelastic, shoelace_area
from test_material import bisect, hard_params

DEMO = Path(__file__).resolve().parent.parent / "configs" / "demo.yaml"
AMBIENTS = (HOT_SIDE, "400 + 100*sin(3*y)*cos(2*x)", "500 - 150*exp(-((x - 0.5)**2 + y**2))")

RESULTS = {}


def verdict(n, title, checks):
    """Record and print one line; ``checks`` holds ``(label, measured, bound, ok)``."""
    ok = all(c[3] for c in checks)
    detail = "; ".join(f"{label} = {measured} (need {bound})" for label, measured, bound, _ in checks)
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} | {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def g(v):
    return f"{v:.3g}"


@pytest.fixture(scope="module")
def design():
    return BaselineDesign(1.0, (0.0, 0.0), 0.3, 1.5)


@pytest.fixture(scope="module")
def suite_rows(design):
    problem = make_problem(design, build_baseline(design, 0.08), steel())
    thetas = random_admissible_thetas(problem, 50, 0.02, seed=2024)
    return run_suite(problem, thetas, AMBIENTS)


def test_criterion_01_thermal_manufactured(design):
    k, eta = 40.0, 100.0

    def ambient(pts, normals):
        r = np.linalg.norm(pts, axis=-1)
        nx = np.where(r > 0.65, 1.0, -1.0) * pts[..., 0] / r
        return pts[..., 0] + k / eta * nx

    hs, errs = [], []
    for res in (0.2, 0.1, 0.05):
        m = build_baseline(design, res)
        T = solve_heat(m, RobinData(eta, ambient, k))
        hs.append(m.cell_diameters.max())
        errs.append(float(np.max(np.abs(T.values - m.nodes[:, 0]))))
    orders = convergence_orders(hs, errs)
    m = build_baseline(design, 0.1)
    const = float(np.max(np.abs(solve_heat(m, RobinData(eta, 700.0, k)).values - 700.0)) / 700.0)
    verdict(1, "thermal manufactured T = x", [
        ("min L-inf order", g(orders.min()), ">= 1.8", orders.min() >= 1.8),
        ("constant T_e rel error", g(const), "<= 1e-10", const <= 1e-10),
    ])


def test_criterion_02_maximum_principle(suite_rows):
    n_pass = sum(r.mp_pass for r in suite_rows)
    worst = max(r.mp_slack / (r.Te_max - r.Te_min) for r in suite_rows)
    shapes = len({r.shape for r in suite_rows})
    verdict(2, "maximum principle, 50 shapes x 3 ambients", [
        ("shapes x ambients", f"{shapes} x {len(AMBIENTS)}", "50 x 3", shapes == 50 and len(suite_rows) == 150),
        ("pass rate", f"{n_pass}/{len(suite_rows)}", "100%", n_pass == len(suite_rows)),
        ("max slack / T_e range", g(worst), "<= 1e-3", worst <= 1e-3),
    ])


def test_criterion_03_elasticity(design):
    p = steel()
    mesh = build_baseline(design, 0.1)
    T0 = ScalarField(mesh, np.full(mesh.n_nodes, p.T0))
    zero = solve_elasticity(mesh, LoadData.zero(), T0, p).max_norm()

    u_ex, grad_ex, T_ex, f, gt = manufactured_thermoelastic(p, design.hole_radius)
    hs, e0 = [], []
    for res in (0.2, 0.1, 0.05):
        m = build_baseline(design, res)
        uh = solve_elasticity(m, LoadData(f, gt), ScalarField(m, T_ex(m.nodes)), p, dirichlet_values=u_ex)
        hs.append(m.cell_diameters.max())
        e0.append(l2_h1_errors(m, uh.values, u_ex, grad_ex)[0])
    order = convergence_orders(hs, e0).min()

    W = 1e-3 * np.array([[0.0, -1.0], [1.0, 0.0]])
    rot = float(np.max(np.abs(stress(mesh, VectorField(mesh, mesh.nodes @ W.T), T0, p).tensors)))

    rng = np.random.default_rng(7)
    A, c = rng.normal(scale=1e-3, size=(2, 2)), rng.normal(scale=1e-3, size=2)
    S = p.lam * np.trace(A) * np.eye(2) + p.mu * (A + A.T)
    u = solve_elasticity(mesh, LoadData(("0", "0"), lambda x, n: n @ S.T), T0, p,
                         dirichlet_values=lambda x: x @ A.T + c, solver="dense")
    ref = mesh.nodes @ A.T + c
    patch = float(np.max(np.abs(u.values - ref)) / np.max(np.abs(ref)))
    verdict(3, "elasticity", [
        ("zero-load max|u|", g(zero), "<= 1e-10", zero <= 1e-10),
        ("min L2 order", g(order), ">= 1.8", order >= 1.8),
        ("rigid-rotation max|sigma|", g(rot), "<= 1e-12", rot <= 1e-12),
        ("patch rel error", g(patch), "<= 1e-9", patch <= 1e-9),
    ])


def test_criterion_04_lcf_chain():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        p = steel(sigma_f=rng.uniform(500, 1500), eps_f=rng.uniform(0.1, 1.0),
                  b_exp=rng.uniform(-0.15, -0.05), c_exp=rng.uniform(-0.8, -0.4))
        N = 10 ** rng.uniform(1, 7)
        worst = max(worst, abs(cmb_invert(cmb_strain(N, p), p) / N - 1))
    hp = hard_params()
    neuber = 0.0
    for sa in (50.0, 200.0, 500.0, 1500.0, 4000.0):
        ref = bisect(lambda s: s * s / hp.E + s * (s / hp.K_hard) ** (1 / hp.n_hard) - sa * sa / hp.E, 0.0, sa)
        neuber = max(neuber, abs(neuber_convert(sa, hp) / ref - 1))
    kp = abs(ramberg_osgood(hp.K_hard, hp) - (hp.K_hard / hp.E + 1))
    verdict(4, "LCF chain", [
        ("CMB round trip max rel error (1000 draws)", g(worst), "<= 1e-8", worst <= 1e-8),
        ("Neuber vs bisection max rel error", g(neuber), "<= 1e-8", neuber <= 1e-8),
        ("Ramberg-Osgood K-point error", g(kp), "<= 1e-12", kp <= 1e-12),
    ])


def test_criterion_05_weibull():
    cdf_err = hz_err = mean_err = 0.0
    for N, m in ((1234.0, 1.0), (800.0, 2.0), (1200.0, 3.7), (5e4, 1.5)):
        rep = report_from_life(np.zeros((1, 2)), [1.0], N, m)
        cdf_err = max(cdf_err, abs(failure_cdf(N, rep) - (1 - math.exp(-1))))
        for t in np.linspace(0.05, 1.5, 8) * N:
            h = 1e-4 * t
            fd = (math.log1p(-failure_cdf(t - h, rep)) - math.log1p(-failure_cdf(t + h, rep))) / (2 * h)
            hz_err = max(hz_err, abs(hazard_rate(t, rep) / fd - 1))
        surv = lambda s: 1.0 - failure_cdf(N * s, rep)
        ref = N * (quad(surv, 0, 1, epsabs=0, epsrel=1e-12)[0] + quad(surv, 1, math.inf, epsabs=0, epsrel=1e-12)[0])
        mean_err = max(mean_err, abs(mean_life(rep) / ref - 1))
    verdict(5, "Weibull identities", [
        ("|F(N) - (1 - 1/e)|", g(cdf_err), "<= 1e-12", cdf_err <= 1e-12),
        ("hazard vs central difference rel", g(hz_err), "<= 1e-6", hz_err <= 1e-6),
        ("mean life vs quadrature rel", g(mean_err), "<= 1e-6", mean_err <= 1e-6),
    ])


def test_criterion_06_point_process(design):
    problem = make_problem(design, build_baseline(design, 0.08), steel())
    rep = evaluate_design(np.zeros(problem.n_coeffs), problem).report
    t_max = rep.N_scale
    n = 10_000
    taus, counts = sample_first_failures(rep, t_max, n, seed=2024)
    lam = t_max**rep.m * rep.J
    z = abs(counts.mean() - lam) / math.sqrt(lam / n)
    ks = ks_distance(taus, rep, t_max)
    verdict(6, "Poisson sampler, 1e4 replications", [
        ("count mean deviation in SE", g(z), "<= 3", z <= 3),
        ("KS distance", g(ks), "< 0.02", ks < 0.02),
    ])


def _order(a, b):
    return "first" if a < b else "second" if a > b else "equal"


def test_criterion_07_dominance():
    rng = np.random.default_rng(3)
    disagreements = 0
    for _ in range(100):
        m = rng.uniform(1.0, 4.0)
        reps = []
        for _ in range(2):
            k = rng.integers(5, 40)
            reps.append(report_from_life(np.zeros((k, 2)), rng.uniform(0.01, 1.0, k), 10 ** rng.uniform(2, 5, k), m))
        lo = min(r.N_scale for r in reps)
        times = np.geomspace(0.05 * lo, 2.0 * lo, 20)
        v = dominance_compare(reps[0], reps[1], times)
        by_J = _order(reps[0].J, reps[1].J)
        if not (by_J == v.scale == v.first_order == v.hazard) or by_J == "equal":
            disagreements += 1
    verdict(7, "dominance orderings J / N / CDF / hazard, 100 pairs", [
        ("disagreements", disagreements, "0", disagreements == 0),
    ])


def test_criterion_08_volume(design):
    mesh = build_baseline(design, 0.08)
    template = DeformationMap.fourier(design, K=1e4)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(20):
        phi = template.with_coeffs(rng.uniform(-0.03, 0.03, len(template.basis)))
        worst = max(worst, abs(volume(phi, mesh) / shoelace_area(mesh, phi) - 1))
    ident = abs(volume(template, mesh) - shoelace_area(mesh, lambda x: x, subdivisions=1))
    verdict(8, "volume quadrature vs shoelace", [
        ("max rel error (20 deformations)", g(worst), "<= 1e-6", worst <= 1e-6),
        ("identity |V - shoelace|", g(ident), "== 0", ident == 0.0),
    ])


def test_criterion_09_optimization_demo():
    cfg = load_config(DEMO)
    t0 = time.perf_counter()
    trace = optimize_shape(cfg.optimizer, cfg.problem())
    wall = time.perf_counter() - t0
    again = optimize_shape(cfg.optimizer, cfg.problem())
    ratio = trace.best_J / trace.baseline_J
    dv = trace.best.volume_deviation
    same = again.to_dict() == trace.to_dict()
    verdict(9, "end-to-end optimization demo", [
        ("J* / J_baseline", g(ratio), "<= 0.95", ratio <= 0.95),
        ("|dV|/V", g(dv), "<= 1e-3", dv <= 1e-3),
        ("rerun identical", same, "True", same),
        ("wall time s", f"{wall:.1f}", "<= 300", wall <= 300),
    ])


def test_criterion_10_uniform_bounds(suite_rows):
    # asserted literally: no tolerance on max|T| <= max|T_e| over the exterior container
    bound_ok = sum(max(abs(r.T_min), abs(r.T_max)) <= r.Te_ext_absmax for r in suite_rows)
    finite = all(r.estimates_finite for r in suite_rows)
    print("shape ambient holder_T holder_u")
    for r in suite_rows:
        print(f"{r.shape:>5} {r.ambient:>7} {r.holder_T:.6g} {r.holder_u:.6g}")
    hT = max(r.holder_T for r in suite_rows)
    hu = max(r.holder_u for r in suite_rows)
    verdict(10, "uniform bounds over the 50-shape suite", [
        ("max|T| <= max|T_e|", f"{bound_ok}/{len(suite_rows)}", "all", bound_ok == len(suite_rows)),
        ("Hoelder estimates finite", finite, "True", finite),
        ("largest [grad T]_0.5 / [grad u]_0.5", f"{g(hT)} / {g(hu)}", "finite", math.isfinite(hT + hu)),
    ])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
