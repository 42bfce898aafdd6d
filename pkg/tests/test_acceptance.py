"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

Every test records a PASS/FAIL line; the terminal summary lists one line
per criterion. Nothing here is loosened to make a criterion pass.
"""

import time

import numpy as np
import pytest

from conftest import record, scene_at_snr
from mimo_pcrb.array import ArrayConfig, SceneConfig, steering_tx
from mimo_pcrb.config import ExperimentConfig
from mimo_pcrb.fim import (
    compute_moments,
    crb_average,
    fim_observation,
    moment_inequality_gap,
    pcrb_exact,
    pcrb_upper,
)
from mimo_pcrb.optimizer import optimal_design, optimal_pcrb_upper_value, random_feasible_covariance
from mimo_pcrb.prior import GaussianMixturePrior, QuadratureSpec, prior_fisher, rho_integral
from mimo_pcrb.properties import random_mixture
from mimo_pcrb.sim import jackknife_se, monte_carlo_trials
from oracles import jacobian_fim, waveform_for

SLACK = 1e-9
DEFAULT = ExperimentConfig()
SWEEP = DEFAULT.snr_db
TOP_SNR = max(SWEEP)
ORDER = ("proposed", "peak-angle", "heuristic")


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def finish(crit, part, ok, detail, clock, budget):
    fast = clock.elapsed < budget
    record(crit, part, ok and fast, f"{detail}, {clock.elapsed:.1f}s of {budget}s")
    assert ok, detail
    assert fast, f"runtime {clock.elapsed:.1f}s over the {budget}s budget"


def _rel_shortfall(lhs, rhs):
    # how far lhs >= rhs is broken, relative to rhs
    return 0.0 if np.isinf(lhs) else max(0.0, (rhs - lhs) / abs(rhs))


def test_c1_bound_chain(prior, moments, fp11, scene, run, cfg):
    rng = np.random.default_rng(101)
    worst, fails = 0.0, 0
    with Clock() as clk:
        for _ in range(200):
            r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
            exact = pcrb_exact(fim_observation(moments, r, scene, run, fp11))
            upper = pcrb_upper(moments, r, scene, run, fp11)
            avg = crb_average(prior, r, scene, run, cfg)
            v = max(_rel_shortfall(upper, exact), _rel_shortfall(avg, upper))
            worst = max(worst, v)
            fails += v > SLACK
    finish(1, "bound chain", fails == 0, f"200 designs, {fails} violations, worst {worst:.2e}", clk, 30)


def test_c2_moment_inequality(moments, run, cfg):
    rng = np.random.default_rng(102)
    worst, fails = 0.0, 0
    with Clock() as clk:
        for _ in range(10_000):
            r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
            gap = moment_inequality_gap(moments, r)
            scale = np.real(np.sum(moments.a2 * r.T)) * np.real(np.sum(moments.a4 * r.T))
            v = max(0.0, -gap / scale)
            worst = max(worst, v)
            fails += v > SLACK
        # equality case: point prior, beam steered at its location
        t = 0.82
        point = compute_moments(GaussianMixturePrior((1.0,), (t,), (1e-10,)), cfg)
        a = steering_tx(t, cfg)
        r = run.power_w / cfg.n_tx * np.outer(a, a.conj())
        scale = np.real(np.trace(point.a2 @ r)) * np.real(np.trace(point.a4 @ r))
        eq_gap = moment_inequality_gap(point, r)
        # ad^H R ad vanishes too here, so compare with the unsteered scale
        ref = np.real(np.trace(point.a2)) * np.real(np.trace(point.a4)) * run.power_w**2
        eq_ok = abs(eq_gap) <= 1e-6 * ref
    finish(2, "gap >= 0", fails == 0, f"1e4 covariances, worst {worst:.2e}", clk, 30)
    record(2, "point-prior equality", eq_ok, f"gap {eq_gap:.2e} (reference scale {ref:.2e}, tr(A2R)tr(A4R) {scale:.2e})")
    assert eq_ok


def test_c3_rank_one_optimality(moments, scene, run, fp11, cfg):
    rng = np.random.default_rng(103)
    d = optimal_design(moments, run)
    best = np.real(np.sum(moments.a1 * d.covariance.T))
    lam1 = np.linalg.eigvalsh(moments.a1)[-1]
    worst, fails = 0.0, 0
    with Clock() as clk:
        for _ in range(10_000):
            r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
            v = max(0.0, (np.real(np.sum(moments.a1 * r.T)) - best) / (run.power_w * lam1))
            worst = max(worst, v)
            fails += v > SLACK
        eig_err = abs(best - run.power_w * lam1) / (run.power_w * lam1)
        closed = optimal_pcrb_upper_value(moments, scene, run, fp11)
        direct = pcrb_upper(moments, d.covariance, scene, run, fp11)
        val_err = abs(closed - direct) / direct
    ok = fails == 0 and eig_err <= 1e-9 and val_err <= 1e-10
    finish(3, "optimality", ok,
           f"{fails} of 1e4 beat R*, tr(A1R*) vs P*lambda1 {eig_err:.1e}, closed-form value {val_err:.1e}", clk, 60)


def test_c4_upper_bound_tightness(moments, designs, run, fp11):
    r = designs["proposed"].covariance
    ratios = {}
    with Clock() as clk:
        for s in SWEEP:
            sc = scene_at_snr(s, run)
            ratios[s] = pcrb_upper(moments, r, sc, run, fp11) / pcrb_exact(fim_observation(moments, r, sc, run, fp11))
    bad = {s: round(v, 4) for s, v in ratios.items() if v > 1.1}
    detail = f"max ratio {max(ratios.values()):.4f} over {len(SWEEP)} points; above 1.1 at {bad}"
    finish(4, "upper/exact <= 1.1", not bad, detail, clk, 10)


def test_c5_orderings(moments, designs, run, fp11, cfg):
    with Clock() as clk:
        losers = []
        for s in SWEEP:
            sc = scene_at_snr(s, run)
            p = {d: pcrb_exact(fim_observation(moments, designs[d].covariance, sc, run, fp11)) for d in ORDER}
            if not (p["proposed"] < p["peak-angle"] and p["proposed"] < p["heuristic"]):
                losers.append(s)
        gain = DEFAULT.path_gain
        means = DEFAULT.prior.means
        a = steering_tx(np.array(means), cfg)
        pat = {
            d: 10 * np.log10(gain * np.real(np.einsum("ni,ij,nj->n", a.conj(), designs[d].covariance, a))) + 30
            for d in ORDER
        }
        vs_heur = int(np.sum(pat["proposed"] >= pat["heuristic"]))
        vs_peak = int(np.sum(pat["proposed"] >= pat["peak-angle"]))
    pcrb_ok = not losers
    pattern_ok = vs_heur == 5 and vs_peak >= 3
    record(5, "PCRB ordering", pcrb_ok, f"proposed not lowest at {losers}")
    finish(5, "pattern ordering", pattern_ok,
           f">= heuristic at {vs_heur}/5 means, >= peak-angle at {vs_peak}/5", clk, 10)
    assert pcrb_ok


def test_c6_prior_decomposition(prior):
    rng = np.random.default_rng(106)
    priors = [prior] + [random_mixture(rng) for _ in range(200)]
    worst, fails = 0.0, 0
    with Clock() as clk:
        for pr in priors:
            total = pr.information_sum
            v = abs(prior_fisher(pr).value + rho_integral(pr) - total) / total
            worst = max(worst, v)
            fails += v > 1e-6
        single = GaussianMixturePrior((1.0,), (1.5,), (2e-3,))
        rho1 = rho_integral(single)
        res1 = prior_fisher(single)
    k1_ok = abs(rho1) <= 1e-6 * single.information_sum and abs(res1.rho) <= 1e-6 * single.information_sum
    finish(6, "value + rho = sum p/sigma^2", fails == 0, f"{len(priors)} priors, worst {worst:.2e}", clk, 60)
    record(6, "K=1 rho = 0", k1_ok, f"rho {rho1:.2e}, reported {res1.rho:.2e}")
    assert k1_ok


def test_c7_schur_vs_inversion(prior, moments, fp11, run, cfg):
    rng = np.random.default_rng(107)
    worst, fails = 0.0, 0
    with Clock() as clk:
        for _ in range(500):
            r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
            snr_db = rng.uniform(-20, 40)
            sc = scene_at_snr(snr_db, run, phase=rng.uniform(0, 2 * np.pi))
            blocks = fim_observation(moments, r, sc, run, fp11 * rng.uniform(0.0, 1.0))
            direct = np.linalg.inv(blocks.matrix())[0, 0]
            v = abs(pcrb_exact(blocks) - direct) / direct
            worst = max(worst, v)
            fails += v > 1e-10
        # the assembled matrix itself, against the echo-mean Jacobian oracle
        jac_worst = 0.0
        for _ in range(3):
            r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
            x = waveform_for(r, run.num_samples, rng)
            sc = scene_at_snr(rng.uniform(-10, 30), run, phase=rng.uniform(0, 2 * np.pi))
            f_ref = jacobian_fim(prior, cfg.n_tx, cfg.n_rx, x, sc.reflection_gain, sc.noise_power_w, fp11)
            ref = np.linalg.inv(f_ref)[0, 0]
            got = pcrb_exact(fim_observation(moments, r, sc, run, fp11))
            jac_worst = max(jac_worst, abs(got - ref) / ref)
    ok = fails == 0 and jac_worst <= 1e-9
    finish(7, "Schur = [F^-1]_11", ok, f"500 inputs worst {worst:.1e}; Jacobian-oracle FIM worst {jac_worst:.1e}", clk, 10)


@pytest.fixture(scope="module")
def mse_results(prior, designs, moments, fp11, run, cfg):
    sc = scene_at_snr(TOP_SNR, run)
    out = {}
    t0 = time.perf_counter()
    for d in ORDER:
        theta, hat = monte_carlo_trials(designs[d], prior, sc, cfg, run, 1000, seed=DEFAULT.seed)
        err = (hat - theta) ** 2
        out[d] = dict(
            mse=float(err.mean()),
            se=jackknife_se(err),
            pcrb=pcrb_exact(fim_observation(moments, designs[d].covariance, sc, run, fp11)),
        )
    return out, time.perf_counter() - t0


def test_c8_mse_respects_bound(mse_results):
    res, elapsed = mse_results
    ok = all(r["mse"] >= r["pcrb"] - 3 * r["se"] for r in res.values())
    detail = ", ".join(f"{d} mse {r['mse']:.3e}+-{r['se']:.1e} vs pcrb {r['pcrb']:.3e}" for d, r in res.items())
    fast = elapsed < 600
    record(8, "MSE >= PCRB - 3 SE", ok and fast, f"{detail}, {elapsed:.0f}s of 600s")
    assert ok and fast


def test_c8_mse_ordering(mse_results):
    res, _ = mse_results
    by_pcrb = sorted(res, key=lambda d: res[d]["pcrb"])
    by_mse = sorted(res, key=lambda d: res[d]["mse"])
    ok = by_pcrb == by_mse
    record(8, "MSE order = PCRB order", ok, f"PCRB order {by_pcrb}, MSE order {by_mse}")
    assert ok


def test_c9_quadrature_convergence(prior, cfg):
    with Clock() as clk:
        coarse = compute_moments(prior, cfg, QuadratureSpec(gh_nodes=60, gh_check_nodes=90))
        fine = compute_moments(prior, cfg, QuadratureSpec(gh_nodes=90, gh_check_nodes=120))
        moment_err = max(
            np.linalg.norm(getattr(coarse, k) - getattr(fine, k)) / np.linalg.norm(getattr(fine, k))
            for k in ("a1", "a2", "a3", "a4")
        )
        base = prior_fisher(prior, QuadratureSpec(simpson_divisor=20)).value
        halved = prior_fisher(prior, QuadratureSpec(simpson_divisor=40)).value
        fisher_err = abs(base - halved) / halved
    ok = moment_err < 1e-8 and fisher_err <= 1e-4
    finish(9, "self-convergence", ok, f"moments 60 vs 90 nodes {moment_err:.1e}, prior Fisher halving {fisher_err:.1e}", clk, 10)
