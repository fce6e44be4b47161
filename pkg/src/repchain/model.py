"""Repeater-chain data model and the deterministic quantities derived from it.

Units are seconds, kilometres and rates in 1/s throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

LIGHT_SPEED_FIBER = 2.0e5  # km/s


class SourcePlacement(str, enum.Enum):
    AT_NODE = "at_node"
    SOURCE_MIDDLE = "source_middle"
    MEET_MIDDLE = "meet_middle"


class Noise(str, enum.Enum):
    DEPHASING = "dephasing"
    DEPOLARIZING = "depolarizing"


class Policy(str, enum.Enum):
    OQF = "oqf"  # oldest qubit first, FIFO
    YQF = "yqf"  # youngest qubit first, LIFO


class ServiceMode(str, enum.Enum):
    UPPER_BOUND = "upper_bound"
    MEAN_MATCH = "mean_match"


class DegenerateServiceError(ValueError):
    """Raised when an exponential service model cannot represent the link."""


@dataclass(frozen=True)
class NodeSpec:
    gamma: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class LinkSpec:
    length: float
    p: float
    beta: float
    kappa_s: float = 0.0
    kappa_p: float = 0.0
    kappa_h: float = 0.0
    werner_w: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        for name in ("kappa_s", "kappa_p", "kappa_h"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.werner_w <= 1.0:
            raise ValueError(f"werner_w must lie in [0, 1], got {self.werner_w}")

    @property
    def kappa(self) -> float:
        """Deterministic part of the generation time once ``beta * X`` is isolated."""
        return self.kappa_s + self.kappa_p + self.kappa_h - self.beta


@dataclass(frozen=True)
class ChainSpec:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    light_speed: float = LIGHT_SPEED_FIBER
    placement: SourcePlacement = SourcePlacement.AT_NODE
    noise: Noise = Noise.DEPOLARIZING
    policy: Policy = Policy.YQF

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.links) < 1:
            raise ValueError("a chain needs at least one link")
        if len(self.nodes) != len(self.links) + 1:
            raise ValueError(
                f"expected {len(self.links) + 1} nodes for {len(self.links)} links, "
                f"got {len(self.nodes)}"
            )
        if not self.light_speed > 0:
            raise ValueError(f"light_speed must be > 0, got {self.light_speed}")
        object.__setattr__(self, "placement", SourcePlacement(self.placement))
        object.__setattr__(self, "noise", Noise(self.noise))
        object.__setattr__(self, "policy", Policy(self.policy))

    @property
    def n(self) -> int:
        """Number of links."""
        return len(self.links)

    def with_(self, **changes) -> "ChainSpec":
        return replace(self, **changes)


def derive_kappas(link: LinkSpec, placement: SourcePlacement, c: float = LIGHT_SPEED_FIBER) -> LinkSpec:
    """Return ``link`` with propagation and heralding delays set by the source placement."""
    if c <= 0:
        raise ValueError("light speed must be positive")
    one_way = link.length / c
    placement = SourcePlacement(placement)
    if placement is SourcePlacement.AT_NODE:
        kp, kh = one_way, one_way
    elif placement is SourcePlacement.SOURCE_MIDDLE:
        kp, kh = one_way / 2, one_way
    else:
        kp, kh = one_way / 2, one_way / 2
    return replace(link, kappa_p=kp, kappa_h=kh)


def chi(chain: ChainSpec) -> float:
    """Combined depolarizing parameter of all swaps and link-level Werner states."""
    value = 1.0
    for node in chain.nodes[1:-1]:
        value *= node.alpha
    for link in chain.links:
        value *= link.werner_w
    return value


def classical_delay(chain: ChainSpec) -> float:
    c = chain.light_speed
    lengths = [link.length for link in chain.links]
    if len(lengths) == 1:
        return lengths[0] / c
    return max(lengths[-1] / c, sum(lengths[:-1]) / c)


def lleg_success_probability(length: float, efficiency: float = 0.7, attenuation_length: float = 22.0) -> float:
    """Per-attempt heralding probability ``efficiency**2 * exp(-length / attenuation_length)``."""
    if length < 0:
        raise ValueError("length must be >= 0")
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    if attenuation_length <= 0:
        raise ValueError("attenuation_length must be > 0")
    return efficiency**2 * math.exp(-length / attenuation_length)


def mu_upper_bound(link: LinkSpec) -> float:
    """Exponential rate whose CDF matches the geometric attempt CDF at every slot boundary."""
    if link.p >= 1.0:
        raise DegenerateServiceError("deterministic service; exponential model degenerate")
    return -math.log1p(-link.p) / link.beta


def mu_mean_match(link: LinkSpec) -> float:
    return link.p / link.beta


def service_rate(link: LinkSpec, mode: ServiceMode) -> float:
    if ServiceMode(mode) is ServiceMode.UPPER_BOUND:
        return mu_upper_bound(link)
    return mu_mean_match(link)


@dataclass(frozen=True)
class EffectiveRates:
    """Pair decoherence rates seen from the end node ``v_0``.

    ``gamma_prime[j - 1]`` belongs to the pair ``(v_0, v_j)`` for ``j = 1..n-1``;
    ``gamma_prime_end`` applies while the end nodes wait for the last swap outcome.
    """

    gamma_prime: tuple[float, ...] = field(default_factory=tuple)
    gamma_prime_end: float = 0.0


def effective_rates(chain: ChainSpec) -> EffectiveRates:
    g0 = chain.nodes[0].gamma
    inner = tuple(g0 + node.gamma for node in chain.nodes[1:-1])
    return EffectiveRates(inner, g0 + chain.nodes[-1].gamma)


def homogeneous_chain(
    n_links: int,
    total_length: float,
    *,
    coherence_time: float = 1.0,
    alpha: float = 0.996,
    werner_w: float = 0.995,
    beta: float = 1e-5,
    efficiency: float = 0.7,
    attenuation_length: float = 22.0,
    kappa_s: float = 0.0,
    light_speed: float = LIGHT_SPEED_FIBER,
    placement: SourcePlacement = SourcePlacement.AT_NODE,
    noise: Noise = Noise.DEPOLARIZING,
    policy: Policy = Policy.YQF,
) -> ChainSpec:
    """Equidistant chain where every node and link shares the same hardware.

    ``coherence_time`` is converted to a decoherence rate ``1 / coherence_time``;
    ``math.inf`` gives noiseless memories.
    """
    if n_links < 1:
        raise ValueError("n_links must be >= 1")
    if not coherence_time > 0:
        raise ValueError("coherence_time must be > 0")
    length = total_length / n_links
    p = lleg_success_probability(length, efficiency, attenuation_length)
    link = derive_kappas(
        LinkSpec(length=length, p=p, beta=beta, kappa_s=kappa_s, werner_w=werner_w),
        placement,
        light_speed,
    )
    node = NodeSpec(gamma=1.0 / coherence_time, alpha=alpha)
    return ChainSpec(
        nodes=(node,) * (n_links + 1),
        links=(link,) * n_links,
        light_speed=light_speed,
        placement=placement,
        noise=noise,
        policy=policy,
    )

