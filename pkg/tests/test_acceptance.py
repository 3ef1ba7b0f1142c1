"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line; the lines are also
collected and repeated in the pytest terminal summary. Run standalone with
``python tests/test_acceptance.py`` for just the nine lines.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from geoexpand import (
    BinnedVariogram,
    KernelParams,
    SampleSet,
    VariogramModel,
    expansion_gradient,
    expansion_objective,
    fit_variogram,
    gp_predict,
    log_marginal_likelihood,
    morans_i,
)
from geoexpand.cli import main
from geoexpand.expansion import point_biserial
from geoexpand.regression import equivalence_sweep

pytestmark = pytest.mark.acceptance

RESULTS = []


def report(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def rel_close(a, b, rtol=1e-5):
    a, b = np.asarray(a), np.asarray(b)
    return np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(b), 1e-7 * np.abs(b).max()))


def test_1_equivalence():
    t0 = time.perf_counter()
    worst = max(r.max_diff for r in equivalence_sweep(trials=100, n_max=20, m_max=5, seed=42))
    dt = time.perf_counter() - t0
    assert report(1, "weight/function-space equivalence", worst <= 1e-8 and dt < 5.0,
                  f"max discrepancy {worst:.2e} (<= 1e-8), {dt:.2f} s (< 5 s)")


def test_2_kriging_exactness():
    t0 = time.perf_counter()
    err, sd = 0.0, 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 30))
        x = rng.uniform(0, 10, size=(n, 2))
        z = rng.normal(size=n)
        params = KernelParams(rng.uniform(0.5, 2.0), rng.uniform(0.5, 3.0), 0.0)
        pred = gp_predict(x, z, x, params, "constant")
        err = max(err, float(np.max(np.abs(pred.mean - z))))
        sd = max(sd, float(pred.sd.max()))
    dt = time.perf_counter() - t0
    ok = err <= 1e-6 and sd <= 1e-3 and dt < 1.0
    assert report(2, "kriging exactness", ok,
                  f"max error {err:.2e} (<= 1e-6), max sd {sd:.2e} (<= 1e-3), {dt:.2f} s (< 1 s)")


def test_3_variogram_recovery():
    truth = VariogramModel("gaussian", 2.0, 5.0)
    centers = np.arange(15) + 0.5
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        gamma = truth(centers) + rng.normal(0.0, 0.01 * truth.sill, size=centers.size)
        fit = fit_variogram(BinnedVariogram(centers, gamma, np.full(15, 10), 15.0))
        worst = max(worst, abs(fit.model.sill / 2.0 - 1), abs(fit.model.range / 5.0 - 1))
    dt = time.perf_counter() - t0
    assert report(3, "variogram recovery", worst <= 0.05 and dt < 5.0,
                  f"worst relative error {worst:.2%} (<= 5%), {dt:.2f} s (< 5 s)")


def test_4_expansion_improvement(regime_run):
    from conftest import FIXTURE_SEED, two_regime_fixture
    from geoexpand import ExpansionConfig, learn_expansion, stationarity_report

    sample, *_ = two_regime_fixture()
    t0 = time.perf_counter()
    exp = learn_expansion(sample, ExpansionConfig(seed=FIXTURE_SEED))
    rep = stationarity_report(sample, exp)
    dt = time.perf_counter() - t0
    trace = np.array([f for _, f in exp.trace])
    monotone = bool(np.all(np.diff(trace) <= 0))
    ok = rep.improvement_ratio <= 0.5 and monotone and dt < 60.0
    assert report(4, "dimension-expansion improvement", ok,
                  f"ratio {rep.improvement_ratio:.3f} (<= 0.5), trace non-increasing={monotone}, "
                  f"{dt:.1f} s (< 60 s)")


def test_5_latent_interpretability(regime_run):
    _, labels, _, exp, _ = regime_run
    r = point_biserial(exp.z_prime[:, 0], labels)
    assert report(5, "latent interpretability", abs(r) >= 0.8, f"|point-biserial| {abs(r):.3f} (>= 0.8)")


def test_6_psd_witness(regime_run, stationary_run):
    eigs = {"two-regime": regime_run[4].min_eigenvalue, "stationary": stationary_run[2].min_eigenvalue}
    ok = all(e >= -1e-10 for e in eigs.values())
    detail = ", ".join(f"{k} min eigenvalue {v:.2e}" for k, v in eigs.items())
    assert report(6, "PSD witness", ok, detail + " (>= -1e-10)")


def _fd(f, x, h):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_7_gradients():
    ok_exp = ok_lml = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        s = SampleSet(rng.uniform(0, 3, size=(10, 2)), rng.normal(size=10))
        zp = rng.normal(size=(10, 1))
        phi = VariogramModel("gaussian", rng.uniform(0.5, 2), rng.uniform(1, 4))
        lam = rng.uniform(0, 0.5)
        g, _ = expansion_gradient(zp, phi, s, lam)
        ok_exp &= rel_close(g, _fd(lambda z: expansion_objective(z, phi, s, lam), zp, 1e-6))

        x, z = rng.uniform(0, 5, size=(12, 2)), rng.normal(size=12)
        theta = np.log([rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.05, 0.5)])
        _, g = log_marginal_likelihood(x, z, KernelParams(*np.exp(theta)), return_grad=True)
        f = lambda t: log_marginal_likelihood(x, z, KernelParams(*np.exp(t)))
        ok_lml &= rel_close(g, _fd(f, theta, 1e-5))
    assert report(7, "gradient correctness", bool(ok_exp and ok_lml),
                  f"expansion {'ok' if ok_exp else 'mismatch'}, log-marginal {'ok' if ok_lml else 'mismatch'} "
                  "(10 configurations each, 1e-5 relative)")


def test_8_morans_i():
    x = np.column_stack([np.arange(10.0), np.zeros(10)])
    i_grad = morans_i(SampleSet(x, x[:, 0]))
    i_check = morans_i(SampleSet([[0, 0], [1, 0], [0, 1], [1, 1]], [1.0, -1.0, -1.0, 1.0]))
    rng = np.random.default_rng(8)
    pts, z = rng.uniform(0, 10, size=(15, 2)), rng.normal(size=15)
    null = np.array([morans_i(SampleSet(pts, rng.permutation(z))) for _ in range(1000)])
    se = null.std(ddof=1) / np.sqrt(null.size)
    dev = abs(null.mean() + 1 / 14) / se
    ok = i_grad > 0 and i_check < 0 and dev <= 3
    assert report(8, "Moran's I sanity", ok,
                  f"gradient I={i_grad:.3f} (> 0), checkerboard I={i_check:.3f} (< 0), "
                  f"null mean off by {dev:.2f} SE (<= 3)")


def test_9_determinism(tmp_path):
    codes = [main(["repro-paper", "--out", str(tmp_path / run)]) for run in ("a", "b")]
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    ok = codes == [0, 0] and len(files) > 0 and same
    assert report(9, "repro-paper determinism", ok,
                  f"{len(files)} CSV files byte-identical={same}, exit codes {codes}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
