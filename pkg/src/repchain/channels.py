"""Pauli channels acting on Bell-diagonal two-qubit states.

A Bell-diagonal state is stored as its weight vector in the order
``(phi+, phi-, psi+, psi-)``. Applying the single-qubit Pauli ``I, Z, X, Y`` to
one half of ``phi+`` yields exactly these four states, so the weight vector
doubles as the probability vector of the Pauli error carried by the pair. With
the 2-bit labels ``I=00, Z=01, X=10, Y=11`` the Pauli group modulo phases is the
Klein four-group and error composition is XOR on labels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Noise

ATOL = 1e-12

PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS = range(4)
BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")

_XOR = np.bitwise_xor.outer(np.arange(4), np.arange(4))


class HeterogeneousCompositionError(ValueError):
    pass


class BellDiagonalState:
    """Probability vector over the four Bell states."""

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64).reshape(-1)
        if w.shape != (4,):
            raise ValueError(f"expected 4 Bell weights, got shape {w.shape}")
        if np.any(w < -ATOL) or np.any(w > 1 + ATOL):
            raise ValueError(f"Bell weights must lie in [0, 1]: {w}")
        if abs(w.sum() - 1.0) > ATOL:
            raise ValueError(f"Bell weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        self._w = w

    @classmethod
    def phi_plus(cls) -> "BellDiagonalState":
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def maximally_mixed(cls) -> "BellDiagonalState":
        return cls((0.25, 0.25, 0.25, 0.25))

    @classmethod
    def werner(cls, w: float) -> "BellDiagonalState":
        """``w * phi+ + (1 - w) * I/4``."""
        if not 0.0 <= w <= 1.0:
            raise ValueError("Werner parameter must lie in [0, 1]")
        rest = (1.0 - w) / 4
        return cls((w + rest, rest, rest, rest))

    @property
    def weights(self) -> np.ndarray:
        return self._w

    def allclose(self, other: "BellDiagonalState", atol: float = ATOL) -> bool:
        return bool(np.allclose(self._w, other._w, rtol=0.0, atol=atol))

    def __repr__(self):
        inner = ", ".join(f"{x:.6g}" for x in self._w)
        return f"BellDiagonalState([{inner}])"


class ChannelKind(str, enum.Enum):
    TIME_DEPHASING = "time_dephasing"
    TIME_DEPOLARIZING = "time_depolarizing"
    DISCRETE_DEPOLARIZING = "discrete_depolarizing"


@dataclass(frozen=True)
class Channel:
    """Single-qubit Pauli channel.

    ``param`` is the dimensionless exponent ``tau = Gamma * t`` for the two
    time-parametrised kinds and the contraction ``alpha`` for the discrete one.
    """

    kind: ChannelKind
    param: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.kind is ChannelKind.DISCRETE_DEPOLARIZING:
            if not 0.0 <= self.param <= 1.0:
                raise ValueError(f"alpha must lie in [0, 1], got {self.param}")
        elif not self.param >= 0:
            raise ValueError(f"tau must be >= 0, got {self.param}")

    @classmethod
    def dephasing(cls, tau: float) -> "Channel":
        return cls(ChannelKind.TIME_DEPHASING, tau)

    @classmethod
    def depolarizing(cls, tau: float) -> "Channel":
        return cls(ChannelKind.TIME_DEPOLARIZING, tau)

    @classmethod
    def discrete_depolarizing(cls, alpha: float) -> "Channel":
        return cls(ChannelKind.DISCRETE_DEPOLARIZING, alpha)

    @property
    def contraction(self) -> float:
        """Bloch-sphere shrink factor: ``exp(-tau)`` or ``alpha``."""
        if self.kind is ChannelKind.DISCRETE_DEPOLARIZING:
            return self.param
        return math.exp(-self.param)

    def pauli_probabilities(self) -> np.ndarray:
        """Probabilities of ``(I, Z, X, Y)``."""
        c = self.contraction
        if self.kind is ChannelKind.TIME_DEPHASING:
            return np.array([(1 + c) / 2, (1 - c) / 2, 0.0, 0.0])
        rest = (1 - c) / 4
        return np.array([(1 + 3 * c) / 4, rest, rest, rest])


def _is_depolarizing(ch: Channel) -> bool:
    return ch.kind is not ChannelKind.TIME_DEPHASING


def compose(a: Channel, b: Channel) -> Channel:
    """Channel equal to applying ``b`` and then ``a``.

    Same-kind time channels add their exponents, discrete depolarizing channels
    multiply their parameters, and a discrete/time depolarizing mix collapses
    to a discrete channel with parameter ``alpha * exp(-tau)``.
    """
    if a.kind is b.kind:
        if a.kind is ChannelKind.DISCRETE_DEPOLARIZING:
            return Channel.discrete_depolarizing(a.param * b.param)
        return Channel(a.kind, a.param + b.param)
    if _is_depolarizing(a) and _is_depolarizing(b):
        return Channel.discrete_depolarizing(a.contraction * b.contraction)
    raise HeterogeneousCompositionError(
        "heterogeneous composition not closed; use apply"
    )


def pauli_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distribution of the product of two independent Pauli errors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a[_XOR] @ b


def apply(ch: Channel, s: BellDiagonalState) -> BellDiagonalState:
    return BellDiagonalState(pauli_convolve(s.weights, ch.pauli_probabilities()))


def noisy_bsm(a: BellDiagonalState, b: BellDiagonalState, alpha: float = 1.0) -> BellDiagonalState:
    """State left on the outer qubits after a corrected swap of ``a`` and ``b``.

    The swap node's imperfect measurement is a discrete depolarizing channel
    with parameter ``alpha`` on the resulting pair.
    """
    merged = BellDiagonalState(pauli_convolve(a.weights, b.weights))
    return apply(Channel.discrete_depolarizing(alpha), merged)


def fidelity(s: BellDiagonalState) -> float:
    return float(s.weights[PHI_PLUS])


def final_state(chi: float, delta: float, tau: float, noise: Noise) -> BellDiagonalState:
    """End-to-end state after decoherence ``delta + tau`` and depolarizing ``chi``."""
    if not 0.0 <= chi <= 1.0:
        raise ValueError("chi must lie in [0, 1]")
    if delta < 0 or tau < 0:
        raise ValueError("delta and tau must be >= 0")
    decay = math.exp(-(delta + tau))
    mixed = (1 - chi) / 4
    if Noise(noise) is Noise.DEPHASING:
        return BellDiagonalState(
            (
                chi * (1 + decay) / 2 + mixed,
                chi * (1 - decay) / 2 + mixed,
                mixed,
                mixed,
            )
        )
    return BellDiagonalState.werner(chi * decay)


def final_fidelity(chi, delta, tau, noise: Noise):
    """Fidelity of :func:`final_state`, vectorised over ``tau``."""
    decay = np.exp(-(np.asarray(delta) + np.asarray(tau, dtype=np.float64)))
    if Noise(noise) is Noise.DEPHASING:
        return chi * (1 + decay) / 2 + (1 - chi) / 4
    return (1 + 3 * chi * decay) / 4
