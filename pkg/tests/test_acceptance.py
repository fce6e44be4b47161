"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import subprocess
import sys
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from repchain import analytic
from repchain.channels import BellDiagonalState, Channel, apply, compose
from repchain.config import ExperimentConfig
from repchain.experiments import chain_for, is_unimodal, run_distance_optimization, run_hardware_heatmap, run_lambda_sweep
from repchain.model import Policy, ServiceMode, homogeneous_chain, service_rate
from repchain.oracle import bell_weights_of, dense_from_bell, oracle_dense_bsm
from repchain.validation import LOADS, QUEUE_SIZES, check_one_shot, check_queue, requests_for_load

from .conftest import bell_pipeline, random_instance
from .test_analytic import GRID, _evaluators


@pytest.fixture
def report(capsys):
    @contextmanager
    def run(name):
        info = {}
        t0 = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            with capsys.disabled():
                print(f"\n[acceptance] FAIL {name}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            raise
        detail = " ".join(f"{k}={v}" for k, v in info.items())
        with capsys.disabled():
            print(f"\n[acceptance] PASS {name} ({time.perf_counter() - t0:.1f}s) {detail}")

    return run


def test_bell_pipeline_equals_dense_oracle(report):
    with report("bell-pipeline-vs-dense-oracle") as info:
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(100):
            pairs, alphas, order = random_instance(rng)
            dense = oracle_dense_bsm([dense_from_bell(p) for p in pairs], alphas, order)
            worst = max(worst, float(np.abs(bell_pipeline(pairs, alphas, order).weights - bell_weights_of(dense)).max()))
        elapsed = time.perf_counter() - t0
        info.update(instances=100, max_abs_err=f"{worst:.2e}")
        assert worst <= 1e-12
        assert elapsed < 10


def test_channel_algebra_laws(report):
    with report("channel-algebra-laws") as info:
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(10_000):
            w = rng.dirichlet(np.ones(4))
            s = BellDiagonalState(w)
            t1, t2 = rng.exponential(1.0, 2)
            a1, a2 = rng.uniform(0, 1, 2)
            checks = [
                (Channel.dephasing(t1), Channel.dephasing(t2)),
                (Channel.depolarizing(t1), Channel.depolarizing(t2)),
                (Channel.discrete_depolarizing(a1), Channel.discrete_depolarizing(a2)),
                (Channel.discrete_depolarizing(a1), Channel.depolarizing(t2)),
            ]
            for a, b in checks:
                c = compose(a, b)
                worst = max(worst, float(np.abs(apply(c, s).weights - apply(a, apply(b, s)).weights).max()))
            assert compose(*checks[0]).param == t1 + t2
            assert compose(*checks[2]).param == a1 * a2
            assert compose(*checks[3]).param == a1 * math.exp(-t2)
        info.update(cases=10_000, max_abs_err=f"{worst:.2e}")
        assert worst <= 1e-14


@pytest.mark.parametrize("n", [2, 3, 5])
def test_one_shot_closed_form_vs_monte_carlo(report, n):
    with report(f"one-shot-vs-monte-carlo n={n}") as info:
        t0 = time.perf_counter()
        check = check_one_shot(n, 1_000_000, seed=n)
        elapsed = time.perf_counter() - t0
        v = check.values
        info.update(analytic=f"{v['analytic']:.6f}", sim=f"{v['sim']:.6f}", z=f"{v['z']:.2f}", rel_err=f"{v['rel_err']:.2e}")
        assert v["z"] <= 3 and v["rel_err"] <= 0.005
        assert elapsed < 60


@pytest.mark.parametrize("load", LOADS)
@pytest.mark.parametrize("n", QUEUE_SIZES)
def test_queue_model_oqf(report, n, load):
    with report(f"queue-oqf n={n} load={load}") as info:
        requests = requests_for_load(load)
        assert requests >= 100_000
        tau_check, sojourn_check = check_queue(n, load, Policy.OQF, requests, seed=11 * n + int(10 * load))
        info.update(z=f"{tau_check.values['z']:.2f}",
                    max_sojourn_err=f"{max(abs(e) for e in sojourn_check.values['rel_err']):.4f}")
        assert tau_check.passed, tau_check.line()
        assert sojourn_check.passed, sojourn_check.line()


def test_queue_model_yqf_findings(report):
    with report("queue-yqf-findings") as info:
        lines = []
        for load in LOADS:
            for n in QUEUE_SIZES:
                (c,) = check_queue(n, load, Policy.YQF, requests_for_load(load), seed=11 * n + int(10 * load))
                assert math.isfinite(c.values["z"]) and math.isfinite(c.values["rel_dev"])
                lines.append(c.line())
        deviations = [l for l in lines if l.startswith("DEVIATION")]
        info.update(points=len(lines), beyond_3sigma=len(deviations))
        print("\n".join(["", "YQF findings:"] + lines))


def test_lst_sanity(report):
    with report("lst-sanity") as info:
        count = 0
        for ev in _evaluators():
            v = np.array([ev(x) for x in GRID])
            assert abs(v[0] - 1) <= 1e-10
            assert np.all(np.diff(v) <= 1e-10)
            logv = np.log(v)
            assert np.all(logv[:-2] + logv[2:] - 2 * logv[1:-1] >= -1e-10)
            count += 1
        info.update(evaluators=count, grid_points=GRID.size)


def test_skr_threshold(report):
    with report("skr-threshold") as info:
        f = analytic.skr_threshold_fidelity()
        info.update(f_star=f"{f:.7f}")
        assert 0.834 < f < 0.836 < 0.84
        assert analytic.secret_key_rate(1.0, f + 1e-6) > 0
        assert analytic.secret_key_rate(1.0, f - 1e-6) == 0


def test_lambda_sweep_shape(report):
    with report("lambda-sweep-shape") as info:
        t0 = time.perf_counter()
        cfg = ExperimentConfig()
        res = run_lambda_sweep(cfg)
        elapsed = time.perf_counter() - t0
        unimodal = []
        for n in cfg.n_links:
            mu = min(service_rate(l, ServiceMode.UPPER_BOUND) for l in chain_for(cfg, n).links)
            yqf = res.where(n_links=n, policy="yqf")
            oqf = res.where(n_links=n, policy="oqf")
            fy = [r["fidelity_analytic"] for r in yqf]
            assert all(b < a for a, b in zip(fy, fy[1:]))
            stable = [r["fidelity_analytic"] for r in oqf if r["lambda"] < mu]
            assert all(b < a for a, b in zip(stable, stable[1:]))
            floor = {r["fidelity_analytic"] for r in oqf if r["lambda"] >= mu}
            assert len(floor) <= 1 and all(f < min(stable) for f in floor)
            for y, o in zip(yqf, oqf):
                assert y["lambda"] == o["lambda"]
                assert y["fidelity_analytic"] >= o["fidelity_analytic"]
                if o["lambda"] >= mu:
                    assert o["skr_analytic"] == 0
            if is_unimodal([r["skr_analytic"] for r in yqf]):
                unimodal.append(n)
        info.update(unimodal_n=unimodal)
        assert unimodal
        assert elapsed < 30


def test_optimization_shape(report):
    with report("distance-and-heatmap-shape") as info:
        cfg = ExperimentConfig()
        dist = run_distance_optimization(cfg)
        best = {}
        for lam in cfg.search_lambdas:
            rows = dist.where(policy="yqf", **{"lambda": lam})
            ns = [r["best_n"] for r in rows if r["best_n"] is not None]
            assert ns and all(b >= a for a, b in zip(ns, ns[1:]))
            best[lam] = {r["distance_km"]: r["best_n"] for r in rows}
        lo, hi = min(cfg.search_lambdas), max(cfg.search_lambdas)
        for d, n_lo in best[lo].items():
            if n_lo is not None and best[hi][d] is not None:
                assert best[hi][d] >= n_lo
        heat = run_hardware_heatmap(replace(cfg, search_lambdas=(2000.0,)))
        grid = np.array([r["best_skr"] for r in heat.where()]).reshape(
            len(cfg.heatmap_coherence_s), len(cfg.heatmap_alpha)
        )
        assert np.all(np.diff(grid, axis=0) >= 0)
        assert np.all(np.diff(grid, axis=1) >= 0)
        info.update(distances=len(cfg.distances_km), heatmap_cells=grid.size)


def test_validate_quick_deterministic(report, tmp_path):
    with report("validate-quick-determinism") as info:
        outs = []
        for i in range(2):
            path = tmp_path / f"v{i}.json"
            proc = subprocess.run(
                [sys.executable, "-m", "repchain", "validate", "--quick", "--seed", "0",
                 "--output", str(path), "--json"],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stdout + proc.stderr
            outs.append((proc.stdout, path.read_bytes()))
        assert outs[0] == outs[1]
        info.update(stdout_bytes=len(outs[0][0]), json_bytes=len(outs[0][1]))
