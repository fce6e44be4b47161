import numpy as np
import pytest

from repchain.channels import BellDiagonalState, Channel, apply, noisy_bsm


def random_bell_state(rng: np.random.Generator) -> BellDiagonalState:
    """Werner pair pushed through a random dephasing and depolarizing memory."""
    s = BellDiagonalState.werner(rng.uniform(0.5, 1.0))
    s = apply(Channel.dephasing(rng.exponential(0.5)), s)
    return apply(Channel.depolarizing(rng.exponential(0.5)), s)


def random_instance(rng: np.random.Generator):
    k = int(rng.integers(2, 5))
    pairs = [random_bell_state(rng) for _ in range(k)]
    alphas = rng.uniform(0.8, 1.0, k - 1)
    order = rng.permutation(k - 1)
    return pairs, alphas, order


def bell_pipeline(pairs, alphas, order) -> BellDiagonalState:
    """Merge segments with noisy_bsm in the given swap order."""
    segments = {i: (i, s) for i, s in enumerate(pairs)}  # left pair -> (right pair, state)
    for m in order:
        left = max(i for i in segments if i <= m)
        right_end, left_state = segments.pop(left)
        r_end, right_state = segments.pop(m + 1)
        assert right_end == m
        segments[left] = (r_end, noisy_bsm(left_state, right_state, alphas[m]))
    (state,) = [s for _, s in segments.values()]
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
