"""Brute-force density-matrix model of sequential entanglement swapping.

Everything here works on explicit matrices: Bell measurements are projections
on the joint state, corrections are picked by running the ideal protocol, and
channels are applied from their operator definitions. It shares no code path
with :mod:`repchain.channels` and is used to check that module.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channels import BellDiagonalState, Channel, ChannelKind

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, Z, X, Y)

_S = 1 / math.sqrt(2)
BELL_KETS = (
    np.array([_S, 0, 0, _S], dtype=complex),
    np.array([_S, 0, 0, -_S], dtype=complex),
    np.array([0, _S, _S, 0], dtype=complex),
    np.array([0, _S, -_S, 0], dtype=complex),
)

MAX_PAIRS = 4


class InvalidDensityMatrix(ValueError):
    pass


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12, psd_tol: float = 1e-10) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityMatrix("invalid density matrix: not square")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise InvalidDensityMatrix("invalid density matrix: not Hermitian")
    if abs(np.trace(rho) - 1) > herm_tol:
        raise InvalidDensityMatrix("invalid density matrix: trace != 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -psd_tol:
        raise InvalidDensityMatrix("invalid density matrix: not positive semidefinite")


def bell_projector(k: int) -> np.ndarray:
    return np.outer(BELL_KETS[k], BELL_KETS[k].conj())


def dense_from_bell(state: BellDiagonalState) -> np.ndarray:
    return sum(w * bell_projector(k) for k, w in enumerate(state.weights))


def bell_weights_of(rho: np.ndarray) -> np.ndarray:
    return np.array([np.real(BELL_KETS[k].conj() @ rho @ BELL_KETS[k]) for k in range(4)])


def _embed(op: np.ndarray, q: int, m: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**q), op), np.eye(2 ** (m - q - 1)))


def _partial_trace_replace(rho: np.ndarray, q: int, m: int) -> np.ndarray:
    """``Tr_q(rho)`` with the maximally mixed qubit put back at position ``q``."""
    t = rho.reshape((2,) * (2 * m))
    reduced = np.trace(t, axis1=q, axis2=q + m)
    out = np.multiply.outer(reduced, I2 / 2)
    # reduced axes: m-1 kets then m-1 bras; new axes appended at the end
    ket_axes = list(range(m - 1))
    bra_axes = list(range(m - 1, 2 * (m - 1)))
    ket_axes.insert(q, 2 * (m - 1))
    bra_axes.insert(q, 2 * (m - 1) + 1)
    return out.transpose(ket_axes + bra_axes).reshape(2**m, 2**m)


def dense_channel_on_qubit(rho: np.ndarray, ch: Channel, q: int, m: int) -> np.ndarray:
    """Apply ``ch`` to qubit ``q`` of an ``m``-qubit density matrix."""
    c = ch.contraction
    if ch.kind is ChannelKind.TIME_DEPHASING:
        zq = _embed(Z, q, m)
        return (1 + c) / 2 * rho + (1 - c) / 2 * zq @ rho @ zq.conj().T
    return c * rho + (1 - c) * _partial_trace_replace(rho, q, m)


def dense_pauli_channel(rho: np.ndarray, probs: Sequence[float], q: int, m: int) -> np.ndarray:
    """General Pauli channel ``sum_k probs[k] P_k rho P_k`` with ``P = (I, Z, X, Y)``."""
    out = np.zeros_like(rho, dtype=complex)
    for pk, pauli in zip(probs, PAULIS):
        if pk:
            op = _embed(pauli, q, m)
            out += pk * op @ rho @ op.conj().T
    return out


def _project_pair(rho: np.ndarray, qa: int, qb: int, m: int, ket: np.ndarray) -> np.ndarray:
    """Unnormalised ``<ket|_{ab} rho |ket>_{ab}`` on the remaining qubits, order kept."""
    t = rho.reshape((2,) * (2 * m))
    rest = [q for q in range(m) if q not in (qa, qb)]
    perm = [qa, qb] + rest + [m + qa, m + qb] + [m + q for q in rest]
    d = 2 ** (m - 2)
    t = t.transpose(perm).reshape(4, d, 4, d)
    return np.einsum("i,iajb,j->ab", ket.conj(), t, ket)


@lru_cache(maxsize=None)
def correction_table() -> tuple[int, ...]:
    """Pauli index to apply on the far qubit for each Bell outcome.

    Found by swapping two ideal ``phi+`` pairs and picking, per outcome, the
    Pauli that restores ``phi+`` on the outer qubits.
    """
    phi = bell_projector(0)
    rho = np.kron(phi, phi)
    table = []
    for k in range(4):
        cond = _project_pair(rho, 1, 2, 4, BELL_KETS[k])
        cond = cond / np.trace(cond)
        for idx, pauli in enumerate(PAULIS):
            op = np.kron(I2, pauli)
            fixed = op @ cond @ op.conj().T
            if abs(np.real(BELL_KETS[0].conj() @ fixed @ BELL_KETS[0]) - 1) < 1e-12:
                table.append(idx)
                break
        else:  # pragma: no cover
            raise RuntimeError(f"no Pauli correction restores phi+ for outcome {k}")
    return tuple(table)


def oracle_dense_bsm(
    pairs: Sequence[np.ndarray],
    alphas: Sequence[float],
    order: Sequence[int] | None = None,
) -> np.ndarray:
    """Swap a line of two-qubit states into one end-to-end pair, brute force.

    ``pairs[i]`` lives on qubits ``(2i, 2i+1)``. Swap ``m`` measures qubits
    ``2m+1`` and ``2m+2`` in the Bell basis, applies the outcome's Pauli
    correction to the right end of the merged segment, averages over outcomes
    and then depolarizes that qubit with ``alphas[m]``. ``order`` is the
    sequence in which swaps are executed (default left to right).
    """
    k = len(pairs)
    if k < 2 or k > MAX_PAIRS:
        raise ValueError(f"between 2 and {MAX_PAIRS} pairs supported, got {k}")
    if len(alphas) != k - 1:
        raise ValueError("need one alpha per swap")
    order = list(range(k - 1)) if order is None else list(order)
    if sorted(order) != list(range(k - 1)):
        raise ValueError(f"order must be a permutation of 0..{k - 2}")
    for rho in pairs:
        rho = np.asarray(rho)
        if rho.shape != (4, 4):
            raise InvalidDensityMatrix("invalid density matrix: pairs must be 4x4")
        check_density_matrix(rho)

    rho = np.asarray(pairs[0], dtype=complex)
    for p in pairs[1:]:
        rho = np.kron(rho, np.asarray(p, dtype=complex))
    qubits = list(range(2 * k))
    segment_right = list(range(k))  # pair index -> rightmost pair of its segment
    table = correction_table()

    for node in order:
        a, b = 2 * node + 1, 2 * node + 2
        right = segment_right[node + 1]
        target = 2 * right + 1
        m = len(qubits)
        qa, qb = qubits.index(a), qubits.index(b)
        remaining = [q for q in qubits if q not in (a, b)]
        pos = remaining.index(target)
        out = np.zeros((2 ** (m - 2),) * 2, dtype=complex)
        for outcome in range(4):
            cond = _project_pair(rho, qa, qb, m, BELL_KETS[outcome])
            fix = _embed(PAULIS[table[outcome]], pos, m - 2)
            out += fix @ cond @ fix.conj().T
        qubits = remaining
        rho = dense_channel_on_qubit(out, Channel.discrete_depolarizing(alphas[node]), pos, m - 2)
        for i in range(k):
            if segment_right[i] == node:
                segment_right[i] = right
    return rho
