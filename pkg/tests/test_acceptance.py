"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

import json
import time

import numpy as np
import pytest
from scipy.stats import linregress

from haar_sm import (
    AssumptionError,
    CellField,
    CornerField,
    ConfigError,
    ExperimentConfig,
    FBmSheet,
    HaarIndexD,
    LebesgueOracle,
    SmoothnessSpec,
    StableSheet,
    WienerSheet,
    a3_diagnostic,
    besov_norm,
    coeff_bound,
    differentiate_param,
    haar_forward,
    haar_inverse,
    integrate,
    integrate_param,
    integrate_upper,
    riemann_stieltjes_sum,
    run,
    simulate,
)
from haar_sm.haar import haar_basis, haar_forward_array, index_levels, partial_sum_grid, uniform_error_bound
from haar_sm.integrands import exp_family, polynomial, product_linear, product_sine, step_function
from haar_sm.harness import EXPERIMENTS

import oracles

RESULTS = []


def report(n, ok, detail):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


# --- 1. Haar algebra ----------------------------------------------------------


def _gram_error_brute(d, k):
    B = oracles.tensor_basis_matrix(d, k)
    G = B.T @ B / 2 ** (d * k)
    return float(np.abs(G - np.eye(G.shape[0])).max())


def _gram_error_d3(k):
    # inner products of every tensor basis field with the whole basis, one
    # slab (fixed first two indices) at a time
    n = 1 << k
    mids = (np.arange(n) + 0.5) / n
    B = haar_basis(mids, k)
    worst = 0.0
    for a in range(n):
        for b in range(n):
            fields = np.einsum("i,j,kc->cijk", B[:, a], B[:, b], B)
            G = haar_forward_array(fields, 3, k)
            G[np.arange(n), a, b, np.arange(n)] -= 1.0
            worst = max(worst, float(np.abs(G).max()))
    return worst


def test_criterion_1_haar_algebra():
    t0 = time.perf_counter()
    errors = {}
    for d, kmax in ((1, 5), (2, 5), (3, 3)):
        for k in range(kmax + 1):
            errors[f"gram d{d} k{k}"] = _gram_error_brute(d, k)
    for k in (4, 5):
        errors[f"gram d3 k{k}"] = _gram_error_d3(k)
    rng = np.random.default_rng(1)
    for d in (1, 2, 3):
        for K in range(6):
            field = CellField(d, K, rng.normal(size=(1 << K,) * d))
            c = haar_forward(field, K)
            errors[f"parseval d{d} K{K}"] = abs(c.sum_of_squares() - field.l2_norm_squared()) / field.l2_norm_squared()
            errors[f"roundtrip d{d} K{K}"] = float(np.abs(haar_inverse(c, K).values - field.values).max())
    elapsed = time.perf_counter() - t0
    worst_name = max(errors, key=errors.get)
    ok = errors[worst_name] <= 1e-12 and elapsed < 30
    report(1, ok, f"max error {errors[worst_name]:.2e} ({worst_name}) over {len(errors)} checks, {elapsed:.1f} s")


# --- 2. uniform error bound ---------------------------------------------------


def test_criterion_2_uniform_error_bound():
    probe = np.linspace(0.0, 1.0, 1025)
    exact = np.multiply.outer(np.sin(np.pi * probe), np.sin(np.pi * probe))
    lip = np.pi * np.sqrt(2)
    violations, margins = [], []
    for k in range(9):
        c = haar_forward(product_sine(2).cell_field(k), k)
        err = float(np.abs(partial_sum_grid(c, [probe, probe]) - exact).max())
        bound = uniform_error_bound(lambda r: lip * r, k, 2)
        margins.append(err / bound)
        if err > bound:
            violations.append(k)
    report(2, not violations, f"{len(violations)} violations for k = 0..8; max error/bound {max(margins):.3f}")


# --- 3. coefficient decay -----------------------------------------------------


def test_criterion_3_coefficient_decay():
    k = 6
    c = haar_forward(product_sine(2).cell_field(k), k).coefficients
    spec = SmoothnessSpec(1, 1.0, np.pi**2)
    exceed = 0
    for pos in np.ndindex(c.shape):
        if abs(c[pos]) > coeff_bound(spec, HaarIndexD(tuple(p + 1 for p in pos))) * (1 + 1e-12):
            exceed += 1
    # envelope of |c_n| against the summed active levels
    lev = index_levels(k)
    active_j = np.where(lev > 0, lev - 1, 0)
    total = np.add.outer(active_j, active_j)
    t_vals, env = [], []
    for t in range(1, total.max() + 1):
        mag = np.abs(c[total == t])
        mag = mag[mag > 1e-14]
        if mag.size:
            t_vals.append(t)
            env.append(np.log2(mag.max()))
    slope = linregress(t_vals, env).slope
    report(3, exceed == 0 and slope <= -1.4, f"{exceed} bound violations over N_6; envelope slope {slope:.4f}")


# --- 4. Itô isometry -----------------------------------------------------------


def test_criterion_4_ito_isometry(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(
        {"experiment": "integrate", "kind": "wiener", "d": 2, "K": 6, "k": 6, "integrand": "product-linear", "count": 10_000, "out": str(tmp_path)}
    )
    res = run(cfg, write=False)
    var = res.aggregates["value"]["var"]
    elapsed = time.perf_counter() - t0
    rel = abs(var * 9 - 1)
    report(4, rel < 0.05 and elapsed < 300, f"variance {var:.5f} vs 1/9 (relative error {rel:.4f}), {elapsed:.1f} s")


# --- 5. oracle equivalence ------------------------------------------------------


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(2024)
    poly_err = 0.0
    for trial in range(20):
        d = 1 + trial % 3
        deg = int(rng.integers(1, 5))
        coef = rng.normal(size=(deg + 1,) * d)
        exact = sum(coef[e] * np.prod([1 / (p + 1) for p in e]) for e in np.ndindex(coef.shape))
        K = 6 if d < 3 else 4
        got = integrate(polynomial(coef), simulate(LebesgueOracle(d), K, 0), K).value
        poly_err = max(poly_err, abs(got - exact))
    kinds = [LebesgueOracle(2), WienerSheet(2), FBmSheet((0.6, 0.8)), StableSheet(2, 1.5), StableSheet(2, 0.7), WienerSheet(3), StableSheet(1, 1.2)]
    step_err = 0.0
    for kind in kinds:
        d = kind.d
        K = 5 if d < 3 else 3
        for m in range(K + 1):
            vals = rng.normal(size=(1 << m,) * d)
            sm = simulate(kind, K, 100 + m)
            direct = riemann_stieltjes_sum(vals, sm)
            scale = max(1.0, float(np.abs(sm.cell_increments()).sum() * np.abs(vals).max()))
            for k in range(m, K + 1):
                step_err = max(step_err, abs(integrate(step_function(vals), sm, k).value - direct) / scale)
    ok = poly_err <= 1e-10 and step_err <= 1e-12
    report(5, ok, f"polynomial max error {poly_err:.2e}; step-function max scaled error {step_err:.2e} on {len(kinds)} kinds")


# --- 6. differentiation -----------------------------------------------------------


def test_criterion_6_differentiation():
    fam = exp_family(2)
    z0, k = 1.0, 6
    ratios = []
    for seed in range(20):
        sm = simulate(WienerSheet(2), k, seed, domain=6)
        exact = differentiate_param(fam, sm, k, z0)
        base = integrate(fam.at(z0), sm, k).value

        def err(h):
            return abs((integrate(fam.at(z0 + h), sm, k).value - base) / h - exact)

        ratios.append(err(1e-2) / err(5e-3))
    ratios = np.array(ratios)
    ok = bool(np.all((ratios >= 1.5) & (ratios <= 2.5)))
    report(6, ok, f"error ratios under step halving in [{ratios.min():.4f}, {ratios.max():.4f}] over 20 seeds")


# --- 7. uniform convergence surrogate -------------------------------------------


def _mean_ratio(tails):
    mean = np.asarray(tails).mean(axis=0)
    # tails[:, m-1] is level m; ratios for levels 2..6
    return float(np.mean(mean[1:] / mean[:-1]))


def test_criterion_7_tail_ratios():
    fam = exp_family(2)
    eta, xi = [], []
    for seed in range(100):
        sm = simulate(WienerSheet(2), 6, seed, domain=7)
        eta.append(integrate_param(fam, sm, 6).sup_tails)
        xi.append(integrate_upper(product_linear(2), sm, 6).sup_tails)
    r_eta, r_xi = _mean_ratio(eta), _mean_ratio(xi)
    report(7, r_eta < 0.75 and r_xi < 0.75, f"mean tail ratio {r_eta:.4f} (parameter path), {r_xi:.4f} (upper-limit path)")


# --- 8. Besov direction ---------------------------------------------------------


def test_criterion_8_besov_direction(tmp_path):
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "besov",
            "kind": "wiener",
            "d": 2,
            "K": 7,
            "k": 6,
            "p": 2.0,
            "alpha_besov": [0.4, 0.6],
            "besov_levels": [6, 7],
            "count": 100,
            "out": str(tmp_path),
        }
    )
    rows = run(cfg, write=False).rows
    total = {(r[0], r[2], r[6]): r[5] for r in rows}
    wins = sum(total[(s, 0.6, 7)] / total[(s, 0.6, 6)] > total[(s, 0.4, 7)] / total[(s, 0.4, 6)] for s in range(100))

    f = CornerField.from_function(lambda x: (x >= 0.5).astype(float), 1, 10)
    alpha, p = 0.4, 2.0
    s = 1 - alpha * p
    closed = np.sqrt(0.5) + ((0.5**s) / s + 0.5 * (0.5 ** (-alpha * p) - 1) / (alpha * p)) ** (1 / p)
    got = besov_norm(f, p, alpha).total_extrapolated
    rel = abs(got / closed - 1)
    report(8, wins >= 80 and rel <= 0.02, f"{wins}/100 seeds grow faster at alpha 0.6; indicator oracle relative error {rel:.4f}")


# --- 9. A3 diagnostic -------------------------------------------------------------


def test_criterion_9_a3_diagnostic(tmp_path):
    ratios = []
    for seed in range(100):
        diag = a3_diagnostic(simulate(WienerSheet(2), 8, seed, domain=9))
        ratios.append(diag.ratios)
    mean = np.nanmean(np.array(ratios), axis=0)
    # mean[i] is s_(k+1) / s_k with k = i + 1
    levels = np.arange(1, len(mean) + 1)
    late = mean[levels >= 4]
    refusals = 0
    for sm in (simulate(WienerSheet(1), 6, 0), simulate(StableSheet(2, 1.5), 5, 0), simulate(StableSheet(3, 0.9), 3, 0)):
        try:
            a3_diagnostic(sm)
        except AssumptionError:
            refusals += 1
    for exp in ("besov", "upper-limit"):
        try:
            ExperimentConfig.from_dict({"experiment": exp, "kind": "stable", "out": str(tmp_path)})
        except ConfigError:
            refusals += 1
    ok = bool(np.all(late < 0.9)) and refusals == 5
    report(9, ok, f"mean ratios for k >= 4: {np.round(late, 4).tolist()}; {refusals}/5 refusals")


# --- 10. reproducibility --------------------------------------------------------


@pytest.mark.parametrize("kind", ["wiener", "fbm", "stable"])
def test_criterion_10_reproducibility(tmp_path, kind):
    mismatched = []
    for exp in EXPERIMENTS:
        if kind == "stable" and exp in ("besov", "upper-limit"):
            continue
        first = ExperimentConfig.from_dict({"experiment": exp, "kind": kind, "K": 4, "count": 8, "seed0": 11, "out": str(tmp_path / exp / "a")})
        run(first, threads=1)
        echo = json.loads((tmp_path / exp / "a" / "report.json").read_text())["config"]
        echo["out"] = str(tmp_path / exp / "b")
        run(ExperimentConfig.from_dict(echo), threads=4)
        a, b = tmp_path / exp / "a", tmp_path / exp / "b"
        names = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".hsm"))
        if names != sorted(p.name for p in b.iterdir() if p.suffix in (".csv", ".hsm")):
            mismatched.append(exp)
            continue
        if any((a / nm).read_bytes() != (b / nm).read_bytes() for nm in names):
            mismatched.append(exp)
    report(10, not mismatched, f"{kind}: threads 1 vs 4 reruns from the config echo, mismatches {mismatched or 'none'}")
