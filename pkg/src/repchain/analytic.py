"""Closed-form decoherence-time transforms, expected fidelity and key rate.

All transforms are Laplace-Stieltjes transforms ``x -> E[exp(-x T)]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

from .model import (
    ChainSpec,
    EffectiveRates,
    LinkSpec,
    Noise,
    Policy,
    ServiceMode,
    chi as chain_chi,
    classical_delay,
    effective_rates,
    service_rate,
)

# exp(-700) is ~1e-304; beyond that the geometric factor is reported as 0
_UNDERFLOW = 700.0


class UnstableQueueError(ValueError):
    """Arrival rate at or above a queue's service rate under OQF."""


class Regime(str, enum.Enum):
    ONE_SHOT = "one_shot"
    QUEUE_OQF = "queue_oqf"
    QUEUE_YQF = "queue_yqf"


@dataclass(frozen=True)
class LstEvaluator:
    func: Callable[[float], float]
    regime: Regime
    params: dict = field(default_factory=dict)

    def __call__(self, x: float) -> float:
        if x < 0:
            raise ValueError("transform argument must be >= 0")
        return self.func(x)


@dataclass(frozen=True)
class QueueParams:
    lam: float
    mu: tuple[float, ...]
    mode: ServiceMode = ServiceMode.UPPER_BOUND

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if any(not m > 0 for m in self.mu):
            raise ValueError("service rates must be > 0")


def queue_params(chain: ChainSpec, lam: float, mode: ServiceMode = ServiceMode.UPPER_BOUND) -> QueueParams:
    """Service rates for every link of ``chain`` under the chosen exponential fit."""
    return QueueParams(lam, tuple(service_rate(link, mode) for link in chain.links), ServiceMode(mode))


def _geometric_factor(p: float, y: float) -> float:
    """``p e^{-y} / (1 - (1 - p) e^{-y})`` for ``y >= 0``."""
    if y > _UNDERFLOW:
        return 0.0
    # 1 - (1-p)e^{-y} == p - (1-p) expm1(-y), exact near y = 0
    return p * math.exp(-y) / (p - (1 - p) * math.expm1(-y))


def lst_link_oneshot(link: LinkSpec, x: float) -> float:
    """Transform of the link generation time ``kappa + beta * Geometric(p)``."""
    if x < 0:
        raise ValueError("x must be >= 0")
    return math.exp(-link.kappa * x) * _geometric_factor(link.p, link.beta * x)


def lst_tau_oneshot(chain: ChainSpec, rates: EffectiveRates, x: float) -> float:
    """One-shot transform of ``tau``; link 0 is excluded since nothing is stored yet."""
    if x < 0:
        raise ValueError("x must be >= 0")
    shift = 0.0
    value = 1.0
    for link, g in zip(chain.links[1:], rates.gamma_prime):
        shift += g * link.kappa
        value *= _geometric_factor(link.p, x * g * link.beta)
    return math.exp(-x * shift) * value


def lst_sojourn_oqf(lam: float, mu: float, kappa: float, x: float) -> float:
    """FIFO M/M/1 sojourn time plus a fixed delay ``kappa``."""
    if lam >= mu:
        raise UnstableQueueError(f"unstable queue: lambda={lam} >= mu={mu}")
    if x < 0:
        raise ValueError("x must be >= 0")
    return math.exp(-kappa * x) * (mu - lam) / (mu - lam + x)


def lst_busy_period(lam: float, mu: float, x: float) -> float:
    """M/M/1 busy-period transform; defective (mass ``mu/lam`` at x=0) when ``lam > mu``.

    Evaluated as ``2 mu / (mu + lam + x + sqrt(...))``, the rationalised form of
    ``(mu + lam + x - sqrt(...)) / (2 lam)``, which avoids cancellation.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if not (lam > 0 and mu > 0):
        raise ValueError("lambda and mu must be > 0")
    root = math.sqrt(x * x + 2 * x * (lam + mu) + (lam - mu) ** 2)
    return 2 * mu / (mu + lam + x + root)


def lst_tau_queue(
    chain: ChainSpec,
    q: QueueParams,
    rates: EffectiveRates,
    x: float,
    policy: Policy | None = None,
) -> float:
    """Transform of ``tau`` for Poisson requests through tandem M/M/1 queues."""
    if x < 0:
        raise ValueError("x must be >= 0")
    policy = Policy(policy or chain.policy)
    value = 1.0
    for j in range(1, chain.n):
        g = rates.gamma_prime[j - 1]
        mu = q.mu[j]
        kappa = chain.links[j].kappa
        if policy is Policy.OQF:
            factor = lst_sojourn_oqf(q.lam, mu, 0.0, x * g)
        else:
            factor = lst_busy_period(q.lam, mu, x * g)
        value *= math.exp(-kappa * g * x) * factor
    return value


def tau_lst(
    chain: ChainSpec,
    lam: float | None = None,
    mode: ServiceMode = ServiceMode.UPPER_BOUND,
    policy: Policy | None = None,
) -> LstEvaluator:
    """Evaluator for ``E[exp(-x tau)]``: one-shot when ``lam`` is None, queueing otherwise."""
    rates = effective_rates(chain)
    if lam is None:
        return LstEvaluator(
            lambda x: lst_tau_oneshot(chain, rates, x),
            Regime.ONE_SHOT,
            {"gamma_prime": rates.gamma_prime},
        )
    q = queue_params(chain, lam, mode)
    policy = Policy(policy or chain.policy)
    regime = Regime.QUEUE_OQF if policy is Policy.OQF else Regime.QUEUE_YQF
    return LstEvaluator(
        lambda x: lst_tau_queue(chain, q, rates, x, policy),
        regime,
        {"lambda": lam, "mu": q.mu, "mode": q.mode, "gamma_prime": rates.gamma_prime},
    )


def delta(chain: ChainSpec) -> float:
    """Decoherence exponent accrued while the end nodes wait for the last swap result."""
    return effective_rates(chain).gamma_prime_end * classical_delay(chain)


def expected_fidelity(chain: ChainSpec, l_tau_at_1: float) -> float:
    if not 0.0 <= l_tau_at_1 <= 1.0 + 1e-12:
        raise ValueError(f"transform value must lie in [0, 1], got {l_tau_at_1}")
    c = chain_chi(chain)
    decay = math.exp(-delta(chain)) * l_tau_at_1
    if chain.noise is Noise.DEPHASING:
        return c * (1 + decay) / 2 + (1 - c) / 4
    return (1 + 3 * c * decay) / 4


def average_fidelity(
    chain: ChainSpec,
    lam: float | None = None,
    mode: ServiceMode = ServiceMode.UPPER_BOUND,
    policy: Policy | None = None,
) -> float:
    """Mean end-to-end fidelity; an unstable OQF chain gets the fully decohered floor."""
    try:
        value = tau_lst(chain, lam, mode, policy)(1.0)
    except UnstableQueueError:
        value = 0.0
    return expected_fidelity(chain, value)


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def _key_fraction(f: float) -> float:
    return 1 - 2 * binary_entropy(2 * (1 - f) / 3)


def secret_key_rate(lam: float, f: float) -> float:
    """BB84 key rate on Werner states with mean fidelity ``f``, floored at zero."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not 0.0 <= f <= 1.0 + 1e-12:
        raise ValueError(f"fidelity must lie in [0, 1], got {f}")
    return max(0.0, lam * _key_fraction(min(f, 1.0)))


def skr_threshold_fidelity(tol: float = 1e-9) -> float:
    """Smallest fidelity giving a positive key rate, by bisection on [0.75, 1]."""
    lo, hi = 0.75, 1.0  # key fraction < 0 at lo, > 0 at hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _key_fraction(mid) > 0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2
