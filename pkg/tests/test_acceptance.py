"""End-to-end acceptance checks, one test per headline result.

Each test prints (and records for the terminal summary) a single PASS/FAIL
line with the measured numbers next to the thresholds.  Runtime budgets are
part of the verdicts; the multi-minute dissipative scans carry the ``slow``
marker so `-m "not slow"` keeps the quick loop quick.
"""

import math
import time

import conftest
import numpy as np
import pytest

from zenosim.bathsim import (
    NoiseSynthSpec,
    analytic_correlation,
    ensemble_average,
    equivalent_dephasing_profile,
    estimate_correlation,
    make_shape,
)
from zenosim.criticality import (
    DissipationSpec,
    RabiNormalPhase,
    build_ladder,
    check_ladder,
    dissipative_qfi_scan,
    ladder_gap,
    normal_phase_frame,
    normal_phase_hamiltonian,
    qfi_numeric,
    rabi_qfi_closed_form,
    thermal_scan,
)
from zenosim.lindblad import (
    Dissipator,
    MasterEqProblem,
    StepperConfig,
    dephasing_analytic,
    integrate,
)
from zenosim.operators import (
    basis_ket,
    ket_to_dm,
    matrix_exp_apply,
    number_op,
    pauli,
    plus_state,
    quadrature_x,
)
from zenosim.ramsey import Custom, Markov, Noiseless, Zeno, lindblad_rate_profile, scaling_scan

pytestmark = pytest.mark.acceptance

_N_LIST = [2**k for k in range(1, 11)]  # 2 … 1024


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    conftest.record_acceptance_line(line)
    assert ok, line


def test_criterion_01_zeno_scaling():
    t0 = time.perf_counter()
    closed = scaling_scan(Zeno(C=1.0), _N_LIST, T=100.0)
    # same line function through the Custom family exercises the
    # golden-section optimizer instead of the closed-form stationary points
    numeric = scaling_scan(Custom(lambda t: 0.5 * t * t), _N_LIST, T=100.0)
    wall = time.perf_counter() - t0
    ok = abs(closed.slope - 0.25) <= 1e-6 and abs(numeric.slope - 0.25) <= 1e-4 and wall < 1.0
    _report(
        1,
        "zeno scaling r = n^(1/4)",
        ok,
        f"closed b={closed.slope:.10f}, golden-section b={numeric.slope:.10f} "
        f"(target 0.25 +/- 1e-6 / 1e-4), wall={wall:.2f}s",
    )


def test_criterion_02_markov_null_result():
    t0 = time.perf_counter()
    curve = scaling_scan(Markov(C=1.0), _N_LIST, T=1000.0)
    dev_r = max(abs(r.ratio - 1.0) for r in curve.rows)
    dev_t = max(abs(r.t_opt_ghz / r.t_opt_product - 1.0 / r.n) for r in curve.rows)
    wall = time.perf_counter() - t0
    ok = dev_r <= 1e-9 and dev_t <= 1e-9 and wall < 1.0
    _report(
        2,
        "markov null result r = 1, t*_ghz = t*_prod / n",
        ok,
        f"max |r-1|={dev_r:.1e}, max |t*_ghz/t*_prod - 1/n|={dev_t:.1e}, wall={wall:.2f}s",
    )


def test_criterion_03_noiseless_heisenberg_gap():
    t0 = time.perf_counter()
    curve = scaling_scan(Noiseless(), _N_LIST, T=100.0, t_fixed=1.0)
    dev = max(abs(r.ratio / math.sqrt(r.n) - 1.0) for r in curve.rows)
    wall = time.perf_counter() - t0
    ok = dev <= 1e-9 and wall < 1.0
    _report(
        3,
        "noiseless r = sqrt(n) at fixed t",
        ok,
        f"max |r/sqrt(n) - 1|={dev:.1e}, wall={wall:.2f}s",
    )


def test_criterion_04_lindblad_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        psi0 = plus_state(n)
        rho0 = ket_to_dm(psi0)
        grid = np.linspace(0.0, 1.5, 4)
        for family in (Markov(C=1.0), Zeno(C=1.0)):
            prof = lindblad_rate_profile(family)
            diss = tuple(Dissipator(pauli("z", i, n), prof) for i in range(n))
            out = integrate(MasterEqProblem(None, diss, psi0, grid), StepperConfig())
            for t, rho in out:
                ref = dephasing_analytic(n, prof, rho0, t)
                worst = max(worst, float(np.max(np.abs(rho - ref))))
    # short-time decay law: -ln|coherence| should grow as t^2
    ts = np.linspace(0.05, 0.4, 8)
    prof = lindblad_rate_profile(Zeno(C=1.0))
    out = integrate(
        MasterEqProblem(
            None,
            (Dissipator(pauli("z", 0, 1), prof),),
            plus_state(1),
            np.concatenate(([0.0], ts)),
        ),
        StepperConfig(),
    )
    cohs = np.array([abs(rho[0, 1]) for _, rho in out[1:]])
    exponent = float(np.polyfit(np.log(ts), np.log(-np.log(cohs / 0.5)), 1)[0])
    wall = time.perf_counter() - t0
    ok = worst < 1e-7 and abs(exponent - 2.0) <= 0.1 and wall < 10.0
    _report(
        4,
        "integrator matches dephasing oracle, t^2 short-time law",
        ok,
        f"max entrywise dev={worst:.1e} (n=1..3, markov+zeno), "
        f"short-time exponent={exponent:.4f}, wall={wall:.1f}s",
    )


def test_criterion_05_ladder_condition():
    t0 = time.perf_counter()
    worst = max(
        check_ladder(normal_phase_frame(RabiNormalPhase(omega=1.0, g=g, n_fock=80)))
        for g in (0.2, 0.5, 0.8)
    )
    x2 = quadrature_x(40) @ quadrature_x(40)
    h0 = number_op(40) + 0.05 * (x2 @ x2)
    h1 = -0.25 * x2
    quartic = check_ladder(build_ladder(h0, h1, 0.25, ladder_gap(h0 + 0.25 * h1)))
    wall = time.perf_counter() - t0
    ok = worst < 1e-8 and quartic > 0.1 and wall < 10.0
    _report(
        5,
        "ladder closure and quartic breakdown",
        ok,
        f"max closure residual={worst:.1e} (g=0.2/0.5/0.8, N_F=80), "
        f"quartic residual={quartic:.3f}, wall={wall:.1f}s",
    )


def test_criterion_06_criticality_divergence():
    t0 = time.perf_counter()
    gs = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
    at_pi = [
        rabi_qfi_closed_form(
            RabiNormalPhase(omega=1.0, g=g, n_fock=30),
            math.pi / (2.0 * math.sqrt(1.0 - g * g)),
        )
        for g in gs
    ]
    monotone = all(b > a for a, b in zip(at_pi, at_pi[1:]))
    growth = at_pi[-1] / at_pi[0]
    worst_dev = 0.0
    for g in (0.5, 0.8, 0.95):
        dg = 2.0 * math.sqrt(1.0 - g * g)
        t_end = 5.5 * math.pi / dg
        ts = np.linspace(t_end / 56, t_end, 56)
        model = RabiNormalPhase(omega=1.0, g=g, n_fock=120)
        closed_curve = rabi_qfi_closed_form(model, ts)
        h = 1e-4 * (1.0 - g)
        numeric_curve = []
        for t in ts:

            def rho_of_g(gg, t=t):
                return matrix_exp_apply(
                    normal_phase_hamiltonian(1.0, gg, 120), t, basis_ket(121, 0)
                )

            # the Richardson consistency check is exercised per-scan elsewhere;
            # 168 grid points of it here would dominate the runtime budget
            numeric_curve.append(qfi_numeric(rho_of_g, g, h, step_check=False))
        k_closed = int(np.argmax(closed_curve))
        k_num = int(np.argmax(np.asarray(numeric_curve)))
        worst_dev = max(worst_dev, abs(ts[k_num] - ts[k_closed]) / ts[k_closed])
    wall = time.perf_counter() - t0
    ok = monotone and growth >= 1e3 and worst_dev <= 0.05 and wall < 120.0
    _report(
        6,
        "closed-form divergence, numeric argmax tracking",
        ok,
        f"monotone={monotone}, growth x{growth:.2e} at x=pi, "
        f"worst argmax dev={worst_dev:.2%} (g=0.5/0.8/0.95, N_F=120), wall={wall:.0f}s",
    )


@pytest.mark.slow
def test_criterion_07_single_photon_loss_scan():
    t0 = time.perf_counter()
    period_scan = dissipative_qfi_scan(
        RabiNormalPhase(omega=1.0, g=0.5, n_fock=80),
        DissipationSpec(kappa1=0.05),
        [0.5, 0.6, 0.7, 0.8, 0.85, 0.9],
        np.arange(0.0, 80.0 + 1e-9, 0.1),
        workers=1,
    )
    period_dev = float(
        np.max(np.abs(period_scan.periods / period_scan.periods_expected - 1.0))
    )
    fits = [
        dissipative_qfi_scan(
            RabiNormalPhase(omega=1.0, g=0.9, n_fock=80),
            DissipationSpec(kappa1=k1),
            [0.97, 0.975, 0.98, 0.985, 0.99, 0.995],
            np.arange(0.0, 40.0 + 1e-9, 0.25),
            workers=1,
        )
        for k1 in (0.45, 0.5)
    ]
    wall = time.perf_counter() - t0
    ok = (
        np.isfinite(period_dev)
        and period_dev < 0.02
        and all(-1.4 <= s.fit_exponent <= -1.0 for s in fits)
        and all(s.fit_residual < 0.1 for s in fits)
        and wall < 900.0
    )
    _report(
        7,
        "single-photon loss: period and F_max power law",
        ok,
        f"max period dev={period_dev:.2%} (kappa1=0.05), "
        f"b={fits[0].fit_exponent:.3f}/{fits[1].fit_exponent:.3f} "
        f"resid={fits[0].fit_residual:.3f}/{fits[1].fit_residual:.3f} "
        f"(kappa1=0.45/0.50), wall={wall:.0f}s",
    )


@pytest.mark.slow
def test_criterion_08_thermal_scan():
    t0 = time.perf_counter()
    # dt fixed below the default so the doubled-cutoff audit at N_F=100
    # stays both stable and affordable inside the budget
    scan = thermal_scan(
        RabiNormalPhase(omega=1.0, g=0.8, n_fock=50),
        kappa1=0.01,
        nbar_list=[1.0, 2.0, 4.0],
        t_grid=np.arange(0.0, 80.0 + 1e-9, 0.25),
        dt=0.02,
        workers=1,
    )
    decreasing = bool(np.all(np.diff(scan.f_max) < 0))
    wall = time.perf_counter() - t0
    ok = decreasing and -1.2 <= scan.fit_nbar_exponent <= -0.8 and wall < 900.0
    _report(
        8,
        "thermal occupation: F_max ~ nbar^-1",
        ok,
        f"F_max={[round(float(v), 1) for v in scan.f_max]} (nbar=1/2/4), "
        f"b={scan.fit_nbar_exponent:.3f}, audit shift={scan.audit_shift:.1e}, "
        f"wall={wall:.0f}s",
    )


@pytest.mark.slow
def test_criterion_09_two_photon_loss_scan():
    t0 = time.perf_counter()
    # Two-photon loss should invert the single-photon trend: precision
    # degrading as the gap closes, i.e. a positive fitted exponent.  With a
    # vacuum probe the early-time QFI growth is gap-independent and the a^2
    # channel caps the occupancy, so the measured peak keeps rising toward
    # criticality instead: every probed regime (kappa2 0.01-0.25, couplings
    # up to 0.998, windows 30-100) gives a negative exponent that approaches
    # zero from below.  The positive-slope requirement is asserted anyway
    # and currently fails.
    scan = dissipative_qfi_scan(
        RabiNormalPhase(omega=1.0, g=0.9, n_fock=60),
        DissipationSpec(kappa1=0.0, nbar=0.0, kappa2=0.01),
        [0.99, 0.993, 0.996, 0.998],
        np.arange(0.0, 30.0 + 1e-9, 0.25),
        workers=1,
    )
    wall = time.perf_counter() - t0
    ok = scan.fit_exponent > 0.0 and wall < 900.0
    _report(
        9,
        "two-photon loss: F_max degrades toward criticality",
        ok,
        f"b={scan.fit_exponent:+.4f} (positive required), "
        f"F_max={[round(float(v), 1) for v in scan.f_max]} for g={list(scan.couplings)}, "
        f"audit shift={scan.audit_shift:.1e}, wall={wall:.0f}s",
    )


def test_criterion_10_bath_statistics():
    t0 = time.perf_counter()
    spec = NoiseSynthSpec(alpha=0.2, f_shape=make_shape("flat", 1.0), omega0=1.0, nc=8)
    tau = np.linspace(0.0, 10.0, 101)
    s_ref = analytic_correlation(spec, tau)
    s_hat, stderr = estimate_correlation(spec, 1000, tau, seed=20240817)
    within = int(np.sum(np.abs(s_hat - s_ref) <= 3.0 * stderr))
    coverage_ok = within >= math.ceil(0.99 * tau.size)

    ms = [250, 500, 1000, 2000, 4000]
    errs = [float(np.mean(estimate_correlation(spec, m, tau, seed=5)[1])) for m in ms]
    mc_slope = float(np.polyfit(np.log(ms), np.log(errs), 1)[0])

    spec_d = NoiseSynthSpec(alpha=0.1, f_shape=make_shape("flat", 1.0), omega0=1.0, nc=2)
    t_grid = np.linspace(0.0, 6.0, 61)
    ens = ensemble_average(None, spec_d, plus_state(1), t_grid, 2000, master_seed=42)
    prof = equivalent_dephasing_profile(spec_d)
    rho0 = ket_to_dm(plus_state(1))
    oracle = np.array([abs(dephasing_analytic(1, prof, rho0, t)[0, 1]) for t in t_grid])
    coh = np.abs(ens.rho_bar[:, 0, 1])
    sigma_ratio = float(np.max(np.abs(coh - oracle) / (3.0 * ens.stderr[:, 0, 1] + 1e-4)))

    reruns = [
        ensemble_average(None, spec_d, plus_state(1), t_grid, 128, master_seed=9, workers=w)
        for w in (1, 4, 8)
    ]
    identical = all(
        np.array_equal(reruns[0].rho_bar, r.rho_bar)
        and np.array_equal(reruns[0].stderr, r.stderr)
        for r in reruns[1:]
    )
    wall = time.perf_counter() - t0
    ok = (
        coverage_ok
        and abs(mc_slope + 0.5) <= 0.1
        and sigma_ratio <= 1.0
        and identical
        and wall < 300.0
    )
    _report(
        10,
        "bath statistics: correlation, MC error, ensemble, determinism",
        ok,
        f"coverage={within}/{tau.size} at M=1000, MC slope={mc_slope:+.3f}, "
        f"ensemble dev={sigma_ratio:.2f} of 3-sigma budget at M=2000, "
        f"workers 1/4/8 identical={identical}, wall={wall:.0f}s",
    )
