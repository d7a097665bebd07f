"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from lrcone import bounds as B
from lrcone import cli
from lrcone.dynamics import EvolutionContext, evolve, leakage_curve, site_commutator
from lrcone.harness import SweepConfig, fit_front, fit_tail, run_verification, synthetic_front_curve
from lrcone.lattice import PowerLawHamiltonian, site_operator
from lrcone.pauli import op_norm

from conftest import ising_pair, record_acceptance

ENSEMBLES = ("ising_zz", "xy", "random_two_body")


def verdict(k, ok, detail, elapsed):
    record_acceptance(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail} ({elapsed:.2f} s)")


def chain(n, **extra):
    return {"lattice": {"d": 1, "extents": [n], "metric": "euclidean"}, "center": 0, "operator": "X", **extra}


def test_criterion_1_closed_form_dynamics():
    start = time.perf_counter()
    ts = np.linspace(0, math.pi, 401)
    worst_leak = worst_comm = 0.0
    for J in (1.0, 0.37):
        h = PowerLawHamiltonian.from_dict(ising_pair(J))
        ctx = EvolutionContext.from_hamiltonian(h)
        O = site_operator("X", 0, 2)
        curve = leakage_curve(ctx, O, 0, [1.0], ts)
        for b, t in enumerate(ts):
            ref = abs(math.sin(2 * J * t))
            Ot = evolve(ctx, O, t)
            comm = max(op_norm(site_commutator(Ot, letter, 1, 2)) for letter in "XYZ")
            worst_leak = max(worst_leak, abs(curve.values[0, b] - ref))
            worst_comm = max(worst_comm, abs(comm - 2 * ref))
    elapsed = time.perf_counter() - start
    ok = worst_leak < 1e-12 and worst_comm < 1e-12 and elapsed < 1.0
    verdict(1, ok, f"closed-form leakage err {worst_leak:.1e}, commutator err {worst_comm:.1e}", elapsed)
    assert worst_leak < 1e-12 and worst_comm < 1e-12
    assert elapsed < 1.0


@pytest.mark.slow
def test_criterion_2_sandwich_upper_arm():
    start = time.perf_counter()
    worst, n_rows = -math.inf, 0
    for n in (4, 6, 8):
        cfg = SweepConfig.from_dict(chain(
            n, alphas=[2.1, 2.5, 2.9], ensemble="random_two_body", seeds=[0, 1, 2, 3, 4],
            r_grid=list(range(1, n)), t_grid=[float(x) for x in np.linspace(0.1, 2.0, 20)],
            tol=1e-9, checks=["sandwich"], name=f"sandwich{n}",
        ))
        sec = run_verification(cfg).sections[0]
        (check,) = sec.checks
        worst = max(worst, check.measured)
        n_rows += len(sec.rows)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 600
    verdict(2, ok, f"max(sup comm - 2 leakage) = {worst:.2e} over {n_rows} (r,t) points", elapsed)
    assert worst <= 1e-9
    assert elapsed < 600


def test_criterion_3_fixpoint():
    start = time.perf_counter()
    worst_formula = worst_eta0 = 0.0
    for alpha in (2.1, 2.3, 2.5, 2.7, 2.9):
        for eta in (0.1, 0.01, 1e-4):
            tr = B.fixpoint_gamma(alpha, 1, eta, tol=1e-12)
            assert tr.converged
            worst_formula = max(worst_formula, abs(tr.limit - (alpha - 1 - eta * (alpha - 2) * (alpha - 1)) / (alpha - 2)))
            if eta == 1e-4:
                worst_eta0 = max(worst_eta0, abs(tr.limit - (alpha - 1) / (alpha - 2)))
    elapsed = time.perf_counter() - start
    ok = worst_formula < 1e-8 and worst_eta0 < 5e-4 and elapsed < 1.0
    verdict(3, ok, f"limit vs closed form {worst_formula:.1e}, eta=1e-4 vs (a-d)/(a-2d) {worst_eta0:.1e}", elapsed)
    assert worst_formula < 1e-8 and worst_eta0 < 5e-4
    assert elapsed < 1.0


def test_criterion_4_recursion_identity():
    start = time.perf_counter()
    worst = 0.0
    r_star, tau = 40.0, 1.7
    for d in (1, 2):
        xi, lam = B.xi_constant(d), B.lambda_constant(0.5, d)
        for frac in (0.1, 0.3, 0.5, 0.7, 0.9):
            alpha = 2 * d + frac
            L = B.choose_L(r_star, xi, alpha, d)
            for n in range(1, 7):
                trace = B.run_recursion(tau, L, n, xi, B.DEFAULT_NU, lam, alpha, d, r_star)
                closed = B.vn_closed_form(trace.velocities[0], L, n, xi, B.DEFAULT_NU, lam, d, r_star)
                worst = max(worst, abs(trace.v_n - closed) / abs(closed))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 1.0
    verdict(4, ok, f"max relative gap recursion vs closed form {worst:.1e}", elapsed)
    assert worst < 1e-12
    assert elapsed < 1.0


def test_criterion_5_composition_bookkeeping():
    start = time.perf_counter()
    mismatches = []
    for d in (1, 2, 3):
        for c0, xi0 in ((1, 0), (3, 2), (F(7, 3), F(5, 4))):
            half = B.ExpBoundParams(c0, xi0, F(3, 2), 2, dt=1)
            combined = B.combine_bounds(half, half, d)
            extended = B.extend_time(B.ExpBoundParams(c0, xi0, 3, 2, dt=1), d, 1, 10.0).params
            want = (2 ** (d + 5) * F(c0) ** 2, 2 * F(xi0) + d + 1)
            for got in ((combined.c, combined.xi_poly), (extended.c, extended.xi_poly)):
                if tuple(F(x) for x in got) != want:
                    mismatches.append((d, c0, xi0, got, want))
    elapsed = time.perf_counter() - start
    verdict(5, not mismatches, f"{len(mismatches)} exact mismatches over d in 1..3", elapsed)
    assert not mismatches


def test_criterion_6_exponent_table():
    start = time.perf_counter()
    cmp = B.compare_bounds(2.5, 1)
    table = {k: tuple(row[c] for c in ("gamma", "beta", "gamma_prime", "beta_prime")) for k, row in cmp.rows.items()}
    expected = {
        "B1": (F(3), F(3, 2), F(4), F(3, 2)),
        "B2": (F(25, 2), F(3, 2), F(27, 2), F(3, 2)),
        "B3": (F(3, 2), F(1, 2), F(3, 2), F(1, 2)),
    }
    d12, d13 = cmp.differences["B1-B2"], cmp.differences["B1-B3"]
    ok = (
        table == expected
        and all(isinstance(x, F) for row in table.values() for x in row)
        and d12["direct"] == d12["formula"] == F(-19, 3)
        and d13["discrepancy"] and d13["direct"] == F(-1, 3) and d13["formula"] == F(-13, 3)
    )
    elapsed = time.perf_counter() - start
    verdict(6, ok, f"B1-B2 {d12['direct']} both routes; B1-B3 {d13['direct']} vs {d13['formula']} flagged", elapsed)
    assert ok


@pytest.mark.slow
def test_criterion_7_dominance():
    start = time.perf_counter()
    summary, all_ok = [], True
    for ensemble in ENSEMBLES:
        cfg = SweepConfig.from_dict(chain(
            8, alphas=[2.5], ensemble=ensemble, seeds=[0, 1, 2], epsilon=0.1,
            r_grid=list(range(1, 8)), t_grid=[float(x) for x in np.linspace(0.05, 2.2, 44)],
            cap=1e3, stability=0.5, checks=["dominance"], name=f"dominance-{ensemble}",
        ))
        sec = run_verification(cfg).sections[0]
        all_ok &= sec.passed
        c, cr = sec.records["C_fit"], sec.records["C_fit_refined"]
        summary.append(f"{ensemble} C_fit={c:.3g} refined={cr:.3g}")
    elapsed = time.perf_counter() - start
    ok = all_ok and elapsed < 600
    verdict(7, ok, "; ".join(summary), elapsed)
    assert all_ok
    assert elapsed < 600


def test_criterion_8_truncation_and_correlator():
    start = time.perf_counter()
    rise = end = chain_gap = -math.inf
    all_ok = True
    for ensemble in ENSEMBLES:
        cfg = SweepConfig.from_dict(chain(
            6, alphas=[2.1, 2.5, 2.9], ensemble=ensemble, seeds=[0, 1, 2, 3, 4],
            r_grid=[1, 2, 3, 4, 5], truncation_times=[0.5, 1.0], correlator_times=[0.5, 1.0],
            tol=1e-9, checks=["truncation", "correlator"], name=f"trunc-{ensemble}",
        ))
        for sec in run_verification(cfg).sections:
            all_ok &= sec.passed
            for c in sec.checks:
                if c.name == "monotone_in_r":
                    rise = max(rise, c.measured)
                elif c.name == "zero_at_diameter":
                    end = max(end, c.measured)
                else:
                    chain_gap = max(chain_gap, c.measured)
    elapsed = time.perf_counter() - start
    ok = all_ok and elapsed < 300
    verdict(8, ok, f"max rise {rise:.1e}, value at r* {end:.1e}, max(|C| - chain bound) {chain_gap:.2e}", elapsed)
    assert all_ok
    assert elapsed < 300


def test_criterion_9_synthetic_recovery():
    start = time.perf_counter()
    rs = np.arange(1, 33, dtype=float)
    ts = np.logspace(-3, 2, 400)
    errs = [abs(fit_front(synthetic_front_curve(rs, ts, p), 0.1).slope - p) for p in (0.5, 1.0)]
    alpha, d = 2.5, 1
    tail = [B.theorem_envelope(r, 1.0, alpha, d, 0.1, C1=1e-300, C2=1.0).tail_term for r in rs]
    errs.append(abs(fit_tail(rs, tail)[0] + (alpha - d)))
    elapsed = time.perf_counter() - start
    ok = max(errs) < 1e-6 and elapsed < 1.0
    verdict(9, ok, f"front p=0.5/1.0 errors {errs[0]:.1e}/{errs[1]:.1e}, tail error {errs[2]:.1e}", elapsed)
    assert max(errs) < 1e-6
    assert elapsed < 1.0


def test_criterion_10_determinism(tmp_path, monkeypatch, capsys):
    start = time.perf_counter()
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    dirs = []
    for k, jobs in enumerate(("1", "4", "1")):
        out = tmp_path / f"run{k}"
        assert cli.main(["verify", "--jobs", jobs, "--out", str(out)]) == 0
        (run_dir,) = out.iterdir()
        dirs.append(run_dir)
    capsys.readouterr()
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    same = bool(names) and all(
        sorted(p.name for p in d.glob("*.csv")) == names
        and all((d / name).read_bytes() == (dirs[0] / name).read_bytes() for name in names)
        for d in dirs[1:]
    )
    elapsed = time.perf_counter() - start
    verdict(10, same, f"{len(names)} CSVs byte-identical across --jobs 1/4/1", elapsed)
    assert same
