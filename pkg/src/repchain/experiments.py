"""Sweeps over homogeneous chains: request rate, distance and hardware quality.

Results are :class:`SweepResult` tables with a fixed CSV layout: a header
row, one row per grid point, floats written with 9 significant digits and
empty cells for values that do not apply.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import analytic
from .config import Engine, ExperimentConfig
from .model import ChainSpec, Policy, homogeneous_chain
from .simulator import (
    InsufficientSamplesError,
    ServiceModel,
    SimConfig,
    estimate_skr,
    simulate_one_shot,
    simulate_stream,
)

INT_COLUMNS = {"n_links", "best_n", "samples", "displaced"}
STR_COLUMNS = {"policy"}

LAMBDA_COLUMNS = (
    "n_links",
    "policy",
    "lambda",
    "fidelity_analytic",
    "fidelity_sim",
    "ci_low",
    "ci_high",
    "skr_analytic",
    "skr_sim",
)
ONE_SHOT_COLUMNS = ("n_links", "fidelity_analytic", "fidelity_sim", "stderr", "ci_low", "ci_high", "samples")
STREAM_COLUMNS = (
    "n_links",
    "policy",
    "lambda",
    "fidelity_analytic",
    "fidelity_sim",
    "stderr",
    "ci_low",
    "ci_high",
    "throughput",
    "samples",
    "displaced",
)
DISTANCE_COLUMNS = ("policy", "lambda", "distance_km", "best_n", "best_skr", "fidelity_at_best")
HEATMAP_COLUMNS = (
    "policy",
    "lambda",
    "coherence_time_s",
    "alpha",
    "best_n",
    "best_skr",
    "fidelity_at_best",
)


def _quantize(column: str, value):
    if value is None:
        return None
    if column in STR_COLUMNS:
        return str(value.value if hasattr(value, "value") else value)
    if column in INT_COLUMNS:
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.9g}")


@dataclass
class SweepResult:
    kind: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = [self._normalize(r) for r in self.rows]

    def _normalize(self, row) -> tuple:
        if isinstance(row, dict):
            row = tuple(row.get(c) for c in self.columns)
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")
        return tuple(_quantize(c, v) for c, v in zip(self.columns, row))

    def append(self, row) -> None:
        self.rows.append(self._normalize(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in match.items()):
                out.append(d)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow(["" if v is None else (f"{v:.9g}" if isinstance(v, float) else v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "") -> "SweepResult":
        reader = csv.reader(io.StringIO(text))
        columns = tuple(next(reader))
        rows = []
        for cells in reader:
            row = []
            for c, cell in zip(columns, cells):
                if cell == "":
                    row.append(None)
                elif c in STR_COLUMNS:
                    row.append(cell)
                elif c in INT_COLUMNS:
                    row.append(int(cell))
                else:
                    row.append(float(cell))
            rows.append(tuple(row))
        return cls(kind, columns, rows)

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [dict(zip(self.columns, r)) for r in self.rows],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def chain_for(cfg: ExperimentConfig, n_links: int, *, total_length: float | None = None,
              coherence_time: float | None = None, alpha: float | None = None,
              policy: Policy = Policy.YQF) -> ChainSpec:
    return homogeneous_chain(
        n_links,
        cfg.total_length_km if total_length is None else total_length,
        coherence_time=cfg.coherence_time_s if coherence_time is None else coherence_time,
        alpha=cfg.alpha if alpha is None else alpha,
        werner_w=cfg.werner_w,
        beta=cfg.beta_s,
        efficiency=cfg.efficiency,
        attenuation_length=cfg.attenuation_km,
        kappa_s=cfg.kappa_s,
        light_speed=cfg.light_speed_km_s,
        placement=cfg.placement,
        noise=cfg.noise,
        policy=policy,
    )


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)[0])


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    """Map preserving input order, optionally over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _one_shot_point(args) -> dict:
    cfg, index, n = args
    chain = chain_for(cfg, n)
    rep = simulate_one_shot(
        chain, SimConfig(trials=cfg.trials, seed=_point_seed(cfg.seed, index),
                         service_model=ServiceModel.GEOMETRIC)
    )
    return {"n_links": n, "fidelity_analytic": analytic.average_fidelity(chain),
            "fidelity_sim": rep.mean_fidelity, "stderr": rep.stderr, "ci_low": rep.ci_low,
            "ci_high": rep.ci_high, "samples": rep.n_samples}


def run_one_shot(cfg: ExperimentConfig) -> SweepResult:
    """Single request through an idle chain, closed form next to Monte Carlo.

    Link generation is always sampled as the exact geometric process here.
    """
    points = [(cfg, i, n) for i, n in enumerate(sorted(cfg.n_links))]
    return SweepResult("one_shot", ONE_SHOT_COLUMNS, _map(_one_shot_point, points, cfg.workers))


def _stream_point(args) -> dict:
    cfg, index, n, policy, lam = args
    chain = chain_for(cfg, n, policy=policy)
    row = {"n_links": n, "policy": policy, "lambda": lam,
           "fidelity_analytic": analytic.average_fidelity(chain, lam, cfg.service_mode)}
    sim = SimConfig(requests=cfg.requests, warmup=cfg.warmup, seed=_point_seed(cfg.seed, index),
                    service_model=cfg.sim_service)
    rep = simulate_stream(chain, lam, sim)
    row.update(fidelity_sim=rep.mean_fidelity, stderr=rep.stderr, ci_low=rep.ci_low,
               ci_high=rep.ci_high, throughput=rep.throughput, samples=rep.n_samples,
               displaced=rep.displaced)
    return row


def run_stream(cfg: ExperimentConfig) -> SweepResult:
    """Simulated request streams with full per-point statistics."""
    points = []
    for n in sorted(cfg.n_links):
        for lam in cfg.lambdas:
            for policy in sorted(cfg.policies, key=lambda p: p.value):
                points.append((cfg, len(points), n, policy, lam))
    return SweepResult("stream", STREAM_COLUMNS, _map(_stream_point, points, cfg.workers))


def _lambda_point(args) -> dict:
    cfg, index, n, policy, lam = args
    chain = chain_for(cfg, n, policy=policy)
    row = {"n_links": n, "policy": policy, "lambda": lam}
    if cfg.engine in (Engine.ANALYTIC, Engine.BOTH):
        f = analytic.average_fidelity(chain, lam, cfg.service_mode)
        row["fidelity_analytic"] = f
        row["skr_analytic"] = analytic.secret_key_rate(lam, f)
    if cfg.engine in (Engine.SIMULATE, Engine.BOTH):
        sim = SimConfig(
            requests=cfg.requests,
            warmup=cfg.warmup,
            seed=_point_seed(cfg.seed, index),
            service_model=cfg.sim_service,
        )
        try:
            rep = simulate_stream(chain, lam, sim)
        except InsufficientSamplesError:
            rep = None
        if rep is not None:
            row.update(
                fidelity_sim=rep.mean_fidelity,
                ci_low=rep.ci_low,
                ci_high=rep.ci_high,
                skr_sim=estimate_skr(rep, lam),
            )
    return row


def run_lambda_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Fidelity and key rate against request rate for every chain size and policy."""
    points = []
    for n in sorted(cfg.n_links):
        for lam in cfg.lambdas:
            for policy in sorted(cfg.policies, key=lambda p: p.value):
                points.append((cfg, len(points), n, policy, lam))
    return SweepResult("lambda_sweep", LAMBDA_COLUMNS, _map(_lambda_point, points, cfg.workers))


def optimize_repeaters(
    cfg: ExperimentConfig,
    lam: float,
    policy: Policy,
    *,
    total_length: float | None = None,
    coherence_time: float | None = None,
    alpha: float | None = None,
) -> tuple[int | None, float, float | None]:
    """Link count in ``[n_min, n_max]`` maximising the analytic key rate.

    Ties go to the smaller count. Returns ``(None, 0.0, None)`` when no count
    gives a positive rate.
    """
    best_n, best_skr, best_f = None, 0.0, None
    for n in range(cfg.n_min, cfg.n_max + 1):
        chain = chain_for(cfg, n, total_length=total_length, coherence_time=coherence_time,
                          alpha=alpha, policy=policy)
        f = analytic.average_fidelity(chain, lam, cfg.service_mode)
        skr = analytic.secret_key_rate(lam, f)
        if skr > best_skr:
            best_n, best_skr, best_f = n, skr, f
    return best_n, best_skr, best_f


def _distance_point(args) -> dict:
    cfg, policy, lam, d = args
    n, skr, f = optimize_repeaters(cfg, lam, policy, total_length=d)
    return {"policy": policy, "lambda": lam, "distance_km": d, "best_n": n,
            "best_skr": skr, "fidelity_at_best": f}


def run_distance_optimization(cfg: ExperimentConfig) -> SweepResult:
    points = [
        (cfg, policy, lam, d)
        for policy in sorted(cfg.search_policies, key=lambda p: p.value)
        for lam in cfg.search_lambdas
        for d in cfg.distances_km
    ]
    return SweepResult("distance", DISTANCE_COLUMNS, _map(_distance_point, points, cfg.workers))


def _heatmap_point(args) -> dict:
    cfg, policy, lam, t_star, a_star = args
    n, skr, f = optimize_repeaters(cfg, lam, policy, coherence_time=t_star, alpha=a_star)
    return {"policy": policy, "lambda": lam, "coherence_time_s": t_star, "alpha": a_star,
            "best_n": n, "best_skr": skr, "fidelity_at_best": f}


def run_hardware_heatmap(cfg: ExperimentConfig) -> SweepResult:
    """Best key rate over repeater counts on a coherence-time x gate-quality grid.

    Rows are row-major: coherence time outer, gate parameter inner.
    """
    points = [
        (cfg, policy, lam, t, a)
        for policy in sorted(cfg.search_policies, key=lambda p: p.value)
        for lam in cfg.search_lambdas
        for t in cfg.heatmap_coherence_s
        for a in cfg.heatmap_alpha
    ]
    return SweepResult("heatmap", HEATMAP_COLUMNS, _map(_heatmap_point, points, cfg.workers))


def is_unimodal(values: Iterable[float], tol: float = 0.0) -> bool:
    """True when the sequence rises (weakly) to a peak and then falls (weakly), with both parts present."""
    v = list(values)
    if len(v) < 3:
        return False
    peak = int(np.argmax(v))
    if peak == 0 or peak == len(v) - 1:
        return False
    rising = all(b >= a - tol for a, b in zip(v[: peak + 1], v[1 : peak + 1]))
    falling = all(b <= a + tol for a, b in zip(v[peak:], v[peak + 1 :]))
    return rising and falling and v[peak] > v[0] and v[peak] > v[-1]

