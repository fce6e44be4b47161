"""Monte Carlo simulation of sequential entanglement distribution.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``. A
one-shot run is split into fixed-size batches and batch ``b`` draws from
``SeedSequence(seed, spawn_key=(0, b))``; a stream run gives the arrival
process key ``(1, 0)`` and the link of queue ``j`` key ``(2, j)``. Results are
therefore a pure function of ``(chain, config)``.

The tandem network is feed-forward, so the stream simulator runs the queues
one after another: the departures of queue ``j``, shifted by the link delay,
are the arrivals of queue ``j + 1``. Each queue is an event loop over its own
arrivals and generation completions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from ._kernels import serve_queue
from .channels import final_fidelity
from .model import (
    ChainSpec,
    LinkSpec,
    Policy,
    ServiceMode,
    chi as chain_chi,
    effective_rates,
    mu_mean_match,
    service_rate,
)
from .stats import Moments, batch_means_stderr, normal_ci

BATCH = 1 << 16


class InsufficientSamplesError(RuntimeError):
    pass


class ServiceModel(str, enum.Enum):
    GEOMETRIC = "geometric"
    EXP_UPPER_BOUND = "exp_upper_bound"
    EXP_MEAN_MATCH = "exp_mean_match"

    @property
    def mode(self) -> ServiceMode | None:
        return {
            ServiceModel.EXP_UPPER_BOUND: ServiceMode.UPPER_BOUND,
            ServiceModel.EXP_MEAN_MATCH: ServiceMode.MEAN_MATCH,
        }.get(self)


@dataclass(frozen=True)
class SimConfig:
    """Knobs for both simulation regimes.

    ``requests`` is the number of post-warmup requests a stream run targets;
    ``horizon`` (seconds), when given, replaces it with a fixed arrival window.
    ``drain`` lets queues keep serving for ``drain * horizon`` after the last
    arrival.
    """

    trials: int = 100_000
    requests: int = 100_000
    horizon: float | None = None
    warmup: float = 0.2
    seed: int = 0
    service_model: ServiceModel = ServiceModel.EXP_UPPER_BOUND
    policy: Policy | None = None
    n_batches: int = 50
    drain: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "service_model", ServiceModel(self.service_model))
        if self.policy is not None:
            object.__setattr__(self, "policy", Policy(self.policy))
        if self.trials < 1 or self.requests < 1:
            raise ValueError("trials and requests must be >= 1")
        if not 0.0 <= self.warmup < 1.0:
            raise ValueError("warmup must lie in [0, 1)")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.n_batches < 2:
            raise ValueError("n_batches must be >= 2")
        if self.drain < 0:
            raise ValueError("drain must be >= 0")


@dataclass
class QueueStats:
    index: int
    service_rate: float
    arrivals: int
    served: int
    mean_sojourn: float
    arrival_rate: float
    mean_in_system: float
    interdeparture_mean: float
    interdeparture_var: float


@dataclass
class FidelityReport:
    regime: str
    n_samples: int
    mean_fidelity: float
    stderr: float
    ci_low: float
    ci_high: float
    mean_exp_tau: float
    stderr_exp_tau: float
    lam: float | None = None
    throughput: float | None = None
    stable: bool = True
    displaced: int = 0
    service_rates: tuple[float, ...] = ()
    queues: list[QueueStats] = field(default_factory=list)
    analytic_fidelity: float | None = None

    @property
    def bottleneck(self) -> float:
        return min(self.service_rates) if self.service_rates else math.inf


@dataclass
class Request:
    id: int
    arrival_time: float
    sojourns: tuple[float, ...]
    tau: float
    completion_time: float
    fidelity: float


def _service_rate(link: LinkSpec, model: ServiceModel) -> float:
    if model is ServiceModel.GEOMETRIC:
        return mu_mean_match(link)
    return service_rate(link, model.mode)


def _random_part(link: LinkSpec, model: ServiceModel, rng: np.random.Generator, size):
    if model is ServiceModel.GEOMETRIC:
        return link.beta * rng.geometric(link.p, size)
    return rng.exponential(1.0 / service_rate(link, model.mode), size)


def sample_lleg_time(link: LinkSpec, model: ServiceModel, rng: np.random.Generator, size=None):
    """Link generation time: ``kappa`` plus ``beta * Geometric(p)`` or an exponential fit."""
    return link.kappa + _random_part(link, ServiceModel(model), rng, size)


def simulate_one_shot(chain: ChainSpec, cfg: SimConfig) -> FidelityReport:
    """Serve a single request through an idle chain, ``cfg.trials`` times."""
    rates = effective_rates(chain)
    c = chain_chi(chain)
    d = analytic.delta(chain)
    fid = Moments()
    decay = Moments()
    for b, start in enumerate(range(0, cfg.trials, BATCH)):
        m = min(BATCH, cfg.trials - start)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0, b)))
        tau = np.zeros(m)
        for link, g in zip(chain.links[1:], rates.gamma_prime):
            tau += g * sample_lleg_time(link, cfg.service_model, rng, m)
        fid = fid.merge(Moments.of(final_fidelity(c, d, tau, chain.noise)))
        decay = decay.merge(Moments.of(np.exp(-tau)))
    lo, hi = normal_ci(fid.mean, fid.stderr)
    return FidelityReport(
        regime="one_shot",
        n_samples=fid.count,
        mean_fidelity=fid.mean,
        stderr=fid.stderr,
        ci_low=lo,
        ci_high=hi,
        mean_exp_tau=decay.mean,
        stderr_exp_tau=decay.stderr,
    )


@dataclass
class StreamTrace:
    """Per-request arrays from a stream run, indexed by arrival order at ``v_0``."""

    arrive: np.ndarray  # (n_queues, N) arrival time at each queue
    depart: np.ndarray  # (n_queues, N) departure time, inf when never served
    tau: np.ndarray
    fidelity: np.ndarray
    first_measured: int
    window: tuple[float, float]

    def request(self, i: int) -> Request:
        sojourns = tuple(float(x) for x in self.depart[:, i] - self.arrive[:, i])
        return Request(
            id=i,
            arrival_time=float(self.arrive[0, i]),
            sojourns=sojourns,
            tau=float(self.tau[i]),
            completion_time=float(self.depart[-1, i]),
            fidelity=float(self.fidelity[i]),
        )


def run_stream(chain: ChainSpec, lam: float, cfg: SimConfig) -> StreamTrace:
    """Push Poisson(``lam``) requests through the tandem queues and record every request."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    lifo = Policy(cfg.policy or chain.policy) is Policy.YQF
    n = chain.n
    arr_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1, 0)))
    if cfg.horizon is None:
        total = math.ceil(cfg.requests / (1.0 - cfg.warmup))
        arrivals = np.cumsum(arr_rng.exponential(1.0 / lam, total))
        horizon = float(arrivals[-1])
    else:
        horizon = cfg.horizon
        # given the count, Poisson arrival epochs are uniform order statistics
        arrivals = np.sort(arr_rng.uniform(0.0, horizon, arr_rng.poisson(lam * horizon)))
        if arrivals.size == 0:
            raise InsufficientSamplesError("insufficient samples: no arrivals within horizon")
    total = arrivals.size
    t_end = horizon * (1.0 + cfg.drain)

    arrive = np.full((n, total), np.inf)
    depart = np.full((n, total), np.inf)
    arrive[0] = arrivals
    for j, link in enumerate(chain.links):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2, j)))
        present = np.flatnonzero(np.isfinite(arrive[j]))
        order = present[np.argsort(arrive[j, present], kind="stable")]
        services = _random_part(link, cfg.service_model, rng, order.size + 1)
        dep, _ = serve_queue(arrive[j, order], services, lifo, t_end)
        depart[j, order] = dep
        if j + 1 < n:
            arrive[j + 1] = depart[j] + max(link.kappa, 0.0)

    rates = effective_rates(chain)
    tau = np.zeros(total)
    # unserved requests carry inf - inf = nan; they are excluded downstream
    with np.errstate(invalid="ignore"):
        for j in range(1, n):
            tau += rates.gamma_prime[j - 1] * (depart[j] - arrive[j] + chain.links[j].kappa)
        fid = final_fidelity(chain_chi(chain), analytic.delta(chain), tau, chain.noise)
    if cfg.horizon is None:
        first = total - cfg.requests
    else:
        first = int(np.searchsorted(arrivals, cfg.warmup * horizon))
    window_start = float(arrivals[first]) if first < total else horizon
    return StreamTrace(arrive, depart, tau, fid, first, (window_start, horizon))


def _queue_stats(j: int, mu: float, arrive, depart, t0: float, t1: float) -> QueueStats:
    span = t1 - t0
    in_window = (arrive >= t0) & (arrive < t1)
    served = in_window & np.isfinite(depart)
    sojourn = depart[served] - arrive[served]
    live = np.isfinite(arrive)
    overlap = np.minimum(depart[live], t1) - np.maximum(arrive[live], t0)
    area = float(np.clip(overlap, 0.0, None).sum())
    leaving = np.sort(depart[np.isfinite(depart)])
    leaving = leaving[(leaving >= t0) & (leaving < t1)]
    gaps = np.diff(leaving)
    return QueueStats(
        index=j,
        service_rate=mu,
        arrivals=int(in_window.sum()),
        served=int(served.sum()),
        mean_sojourn=float(sojourn.mean()) if sojourn.size else math.nan,
        arrival_rate=float(in_window.sum()) / span,
        mean_in_system=area / span,
        interdeparture_mean=float(gaps.mean()) if gaps.size else math.nan,
        interdeparture_var=float(gaps.var(ddof=1)) if gaps.size > 1 else math.nan,
    )


def simulate_stream(chain: ChainSpec, lam: float, cfg: SimConfig) -> FidelityReport:
    """Poisson request stream through the chain's tandem queues.

    Only requests arriving after the warmup and completed before the run ends
    enter the fidelity estimate; the rest are counted as ``displaced``.
    Standard errors use batch means over arrival order.
    """
    trace = run_stream(chain, lam, cfg)
    first = trace.first_measured
    done = np.isfinite(trace.depart[-1, first:])
    fid = trace.fidelity[first:][done]
    decay = np.exp(-trace.tau[first:][done])
    if fid.size < 2 * cfg.n_batches:
        raise InsufficientSamplesError(
            f"insufficient samples: {fid.size} completed requests after warmup"
        )
    mus = tuple(_service_rate(link, cfg.service_model) for link in chain.links)
    t0, t1 = trace.window
    queues = [
        _queue_stats(j, mus[j], trace.arrive[j], trace.depart[j], t0, t1) for j in range(chain.n)
    ]
    se = batch_means_stderr(fid, cfg.n_batches)
    mean = float(fid.mean())
    lo, hi = normal_ci(mean, se)
    return FidelityReport(
        regime="stream",
        n_samples=int(fid.size),
        mean_fidelity=mean,
        stderr=se,
        ci_low=lo,
        ci_high=hi,
        mean_exp_tau=float(decay.mean()),
        stderr_exp_tau=batch_means_stderr(decay, cfg.n_batches),
        lam=lam,
        throughput=float(np.count_nonzero(done)) / (t1 - t0) if t1 > t0 else math.nan,
        stable=lam < min(mus),
        displaced=int(done.size - np.count_nonzero(done)),
        service_rates=mus,
        queues=queues,
    )


def estimate_skr(report: FidelityReport, lam: float) -> float:
    """Key rate from a simulated mean fidelity.

    Beyond stability a stream cannot deliver more than its bottleneck rate, so
    the rate factor is ``min(lam, bottleneck)``.
    """
    rate = lam
    if report.regime == "stream" and not report.stable:
        rate = min(lam, report.bottleneck)
    return analytic.secret_key_rate(rate, min(max(report.mean_fidelity, 0.0), 1.0))
