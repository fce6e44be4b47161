import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, special

from repchain import analytic
from repchain.analytic import (
    Regime,
    UnstableQueueError,
    _geometric_factor,
    average_fidelity,
    binary_entropy,
    lst_busy_period,
    lst_link_oneshot,
    lst_sojourn_oqf,
    secret_key_rate,
    skr_threshold_fidelity,
    tau_lst,
)
from repchain.model import (
    ChainSpec,
    LinkSpec,
    NodeSpec,
    Noise,
    Policy,
    ServiceMode,
    chi,
    homogeneous_chain,
)

GRID = np.linspace(0.0, 10.0, 50)


def busy_period_lst_quad(lam, mu, x):
    """Integrate exp(-x t) against the M/M/1 busy-period density."""
    r = 2 * math.sqrt(lam * mu)

    def density(t):
        # I_1(r t) exp(-(lam+mu) t) = ive(1, r t) exp((r - lam - mu) t)
        return math.sqrt(mu / lam) / t * special.ive(1, r * t) * math.exp((r - lam - mu - x) * t)

    scale = 1.0 / (lam + mu)
    total = 0.0
    edges = [0.0, scale, 10 * scale, 100 * scale, 1e3 * scale, 1e4 * scale, np.inf]
    for a, b in zip(edges, edges[1:]):
        total += integrate.quad(density, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
    return total


@pytest.mark.parametrize("p,y", [(0.3, 0.0), (0.3, 0.1), (0.05, 2.0), (0.9, 0.5), (1.0, 0.7), (1e-4, 1e-6)])
def test_geometric_factor_matches_series(p, y):
    k = np.arange(1, 2_000_000, dtype=np.float64)
    series = float(np.sum(p * (1 - p) ** (k - 1) * np.exp(-y * k)))
    assert _geometric_factor(p, y) == pytest.approx(series, rel=1e-10)


def test_geometric_factor_underflow_is_zero():
    assert _geometric_factor(0.5, 800.0) == 0.0


def test_link_lst_monte_carlo():
    link = LinkSpec(length=50, p=0.05, beta=1e-2, kappa_s=0.02)
    rng = np.random.default_rng(1)
    t = link.kappa + link.beta * rng.geometric(link.p, 400_000)
    mc = np.exp(-3.0 * t)
    assert lst_link_oneshot(link, 3.0) == pytest.approx(mc.mean(), abs=4 * mc.std() / math.sqrt(mc.size))


def test_oneshot_tau_lst_monte_carlo():
    chain = homogeneous_chain(4, 200, coherence_time=0.05)
    g = 2 / 0.05
    rng = np.random.default_rng(2)
    tau = np.zeros(300_000)
    for link in chain.links[1:]:
        tau += g * (link.kappa + link.beta * rng.geometric(link.p, tau.size))
    mc = np.exp(-tau)
    assert tau_lst(chain)(1.0) == pytest.approx(mc.mean(), abs=4 * mc.std() / math.sqrt(mc.size))


@pytest.mark.parametrize("lam,mu,x", [(1.0, 2.0, 0.5), (1.0, 2.0, 3.0), (2.0, 2.5, 0.1), (0.3, 5.0, 1.0), (4.0, 1.0, 0.7)])
def test_busy_period_matches_bessel_density(lam, mu, x):
    assert lst_busy_period(lam, mu, x) == pytest.approx(busy_period_lst_quad(lam, mu, x), rel=1e-7)


def test_busy_period_defective_mass():
    assert lst_busy_period(4.0, 1.0, 0.0) == pytest.approx(0.25, rel=1e-14)
    assert lst_busy_period(1.0, 4.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert busy_period_lst_quad(4.0, 1.0, 0.0) == pytest.approx(0.25, rel=1e-6)


def test_busy_period_simulation():
    # a busy period is a random walk of the number in system started at 1
    lam, mu, x = 1.0, 1.6, 0.8
    rng = np.random.default_rng(3)
    vals = np.empty(40_000)
    for i in range(vals.size):
        n, t = 1, 0.0
        while n:
            t += rng.exponential(1 / (lam + mu))
            n += 1 if rng.random() < lam / (lam + mu) else -1
        vals[i] = math.exp(-x * t)
    assert lst_busy_period(lam, mu, x) == pytest.approx(vals.mean(), abs=4 * vals.std() / math.sqrt(vals.size))


def test_busy_period_stable_near_zero():
    # naive (mu+lam+x-sqrt)/(2 lam) cancels badly at tiny lam
    assert lst_busy_period(1e-12, 1.0, 1e-3) == pytest.approx(1 / 1.001, rel=1e-12)


def test_oqf_sojourn_lst():
    assert lst_sojourn_oqf(1.0, 3.0, 0.0, 2.0) == pytest.approx(0.5)
    assert lst_sojourn_oqf(1.0, 3.0, 0.5, 2.0) == pytest.approx(0.5 * math.exp(-1.0))
    with pytest.raises(UnstableQueueError):
        lst_sojourn_oqf(3.0, 3.0, 0.0, 1.0)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0, 50))
@settings(max_examples=300)
def test_busy_period_dominates_fifo_sojourn(lam, mu, x):
    if lam >= mu * (1 - 1e-6):
        return
    assert lst_busy_period(lam, mu, x) >= lst_sojourn_oqf(lam, mu, 0.0, x) * (1 - 1e-12)


def _evaluators():
    chain = homogeneous_chain(5, 300, coherence_time=0.1)
    yield tau_lst(chain)
    for lam in (200.0, 1000.0):
        for pol in Policy:
            yield tau_lst(chain, lam, policy=pol)
    het = ChainSpec(
        nodes=tuple(NodeSpec(gamma=g, alpha=0.99) for g in (0.5, 2.0, 1.0, 3.0)),
        links=tuple(LinkSpec(length=l, p=p, beta=1e-4) for l, p in ((10, 0.3), (20, 0.1), (5, 0.6))),
    )
    yield tau_lst(het)
    yield tau_lst(het, 50.0, ServiceMode.MEAN_MATCH, Policy.OQF)
    yield tau_lst(het, 50.0, ServiceMode.MEAN_MATCH, Policy.YQF)


@pytest.mark.parametrize("ev", list(_evaluators()), ids=lambda e: e.regime.value)
def test_lst_sanity(ev):
    v = np.array([ev(x) for x in GRID])
    assert abs(v[0] - 1.0) <= 1e-10
    assert np.all(np.diff(v) < 1e-10)
    logv = np.log(v)
    assert np.all(logv[:-2] + logv[2:] - 2 * logv[1:-1] >= -1e-10)


def test_regimes():
    chain = homogeneous_chain(3, 100)
    assert tau_lst(chain).regime is Regime.ONE_SHOT
    assert tau_lst(chain, 10.0, policy=Policy.OQF).regime is Regime.QUEUE_OQF
    assert tau_lst(chain, 10.0, policy=Policy.YQF).regime is Regime.QUEUE_YQF
    with pytest.raises(ValueError):
        tau_lst(chain)(-1.0)


def test_single_link_has_no_memory_decay():
    chain = homogeneous_chain(1, 50)
    assert tau_lst(chain)(1.0) == 1.0
    f = average_fidelity(chain)
    assert f == pytest.approx((1 + 3 * 0.995 * math.exp(-2 * 50 / 2e5)) / 4, rel=1e-14)


def test_average_fidelity_formula():
    chain = homogeneous_chain(4, 400)
    c = chi(chain)
    d = 2.0 * 300 / 2e5
    lt = tau_lst(chain)(1.0)
    assert average_fidelity(chain) == pytest.approx((1 + 3 * c * math.exp(-d) * lt) / 4, rel=1e-14)
    deph = chain.with_(noise=Noise.DEPHASING)
    assert average_fidelity(deph) == pytest.approx(c * (1 + math.exp(-d) * lt) / 2 + (1 - c) / 4, rel=1e-14)


def test_unstable_oqf_floor():
    chain = homogeneous_chain(8, 500, alpha=1.0, werner_w=1.0, policy=Policy.OQF)
    assert average_fidelity(chain, 1e6) == pytest.approx(0.25)
    assert average_fidelity(chain.with_(noise=Noise.DEPHASING), 1e6) == pytest.approx(0.5)
    mu = analytic.queue_params(chain, 1.0).mu[0]
    assert average_fidelity(chain, 1.2 * mu) == pytest.approx(0.25)
    assert average_fidelity(chain.with_(policy=Policy.YQF), 1.2 * mu) > 0.3


def test_threshold_matches_root_finder():
    root = optimize.brentq(lambda f: analytic._key_fraction(f), 0.76, 0.99, xtol=1e-14)
    f_star = skr_threshold_fidelity()
    assert f_star == pytest.approx(root, abs=1e-9)
    assert 0.834 < f_star < 0.836
    assert secret_key_rate(1000, f_star + 1e-6) > 0
    assert secret_key_rate(1000, f_star - 1e-6) == 0


def test_key_rate_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert secret_key_rate(100, 1.0) == 100.0
    assert secret_key_rate(100, 0.9) == pytest.approx(100 * (1 - 2 * binary_entropy(0.2 / 3)))
    with pytest.raises(ValueError):
        secret_key_rate(-1, 0.9)
