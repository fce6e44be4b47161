"""Analytic-versus-simulation cross-check matrix behind ``repchain validate``."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from . import analytic
from .model import ChainSpec, LinkSpec, NodeSpec, Policy, homogeneous_chain
from .simulator import ServiceModel, SimConfig, simulate_one_shot, simulate_stream

ONE_SHOT_SIZES = (2, 3, 5)
QUEUE_SIZES = (2, 3, 5)
LOADS = (0.2, 0.5, 0.8)
QUEUE_LAMBDA = 1000.0
QUEUE_BETA = 1e-5
QUEUE_KAPPA_S = 2e-4
MIN_REQUESTS = 100_000
SOJOURN_RTOL = 0.02
SIGMA = 3.0


@dataclass
class Check:
    group: str
    name: str
    passed: bool
    enforced: bool
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL" if self.enforced else "DEVIATION")
        detail = " ".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"{status:9s} {self.group:9s} {self.name:24s} {detail}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.enforced)

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        enforced = [c for c in self.checks if c.enforced]
        findings = [c for c in self.checks if not c.enforced and not c.passed]
        lines.append(
            f"summary: {sum(c.passed for c in enforced)}/{len(enforced)} enforced checks passed; "
            f"{len(findings)} YQF deviation(s) beyond {SIGMA:g} sigma"
        )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "checks": [asdict(c) for c in self.checks]}, indent=2) + "\n"


def queue_test_chain(n: int, load: float, policy: Policy, lam: float = QUEUE_LAMBDA) -> ChainSpec:
    """Chain whose upper-bound service rate is ``lam / load`` on every link.

    Memory rates are set so each queue contributes a factor of about 1/2 to
    ``E[exp(-tau)]`` under FIFO.
    """
    mu = lam / load
    p = -math.expm1(-mu * QUEUE_BETA)
    link = LinkSpec(length=1.0, p=p, beta=QUEUE_BETA, kappa_s=QUEUE_KAPPA_S)
    node = NodeSpec(gamma=(mu - lam) / 2, alpha=1.0)
    return ChainSpec(nodes=(node,) * (n + 1), links=(link,) * n, policy=policy)


def requests_for_load(load: float, rtol: float = SOJOURN_RTOL, z: float = 3.5) -> int:
    """Served requests needed so a mean-sojourn estimate has ``z`` standard deviations inside ``rtol``.

    Uses the M/M/1 asymptotic relative variance ``2(1+r)/(r(1-r)^2)`` per unit of
    ``1/mu`` time; never below ``MIN_REQUESTS``.
    """
    rel_var_rate = 2 * (1 + load) / (load * (1 - load) ** 2)
    time_needed = rel_var_rate * (z / rtol) ** 2
    return max(MIN_REQUESTS, math.ceil(load * time_needed))


def check_one_shot(n: int, trials: int, seed: int) -> Check:
    chain = homogeneous_chain(n, 500.0)
    exact = analytic.average_fidelity(chain)
    rep = simulate_one_shot(chain, SimConfig(trials=trials, seed=seed, service_model=ServiceModel.GEOMETRIC))
    diff = rep.mean_fidelity - exact
    rel = abs(diff) / exact
    z = abs(diff) / rep.stderr if rep.stderr > 0 else (0.0 if diff == 0 else math.inf)
    return Check(
        "one-shot",
        f"n={n}",
        passed=z <= SIGMA and rel <= 0.005,
        enforced=True,
        values={"analytic": exact, "sim": rep.mean_fidelity, "se": rep.stderr, "z": z, "rel_err": rel},
    )


def check_queue(n: int, load: float, policy: Policy, requests: int, seed: int) -> list[Check]:
    chain = queue_test_chain(n, load, policy)
    lam = QUEUE_LAMBDA
    exact = analytic.tau_lst(chain, lam)(1.0)
    rep = simulate_stream(chain, lam, SimConfig(requests=requests, seed=seed))
    z = (rep.mean_exp_tau - exact) / rep.stderr_exp_tau
    rel_dev = rep.mean_exp_tau / exact - 1
    mu = rep.service_rates[0]
    target = 1.0 / (mu - lam)
    sojourn_err = [q.mean_sojourn / target - 1 for q in rep.queues]
    label = f"n={n} load={load:g}"
    enforced = policy is Policy.OQF
    checks = [
        Check(
            policy.value,
            label + " E[e^-tau]",
            passed=abs(z) <= SIGMA,
            enforced=enforced,
            values={"analytic": exact, "sim": rep.mean_exp_tau, "se": rep.stderr_exp_tau, "z": z,
                    "rel_dev": rel_dev, "requests": rep.n_samples},
        )
    ]
    if enforced:
        checks.append(
            Check(
                policy.value,
                label + " sojourn",
                passed=max(abs(e) for e in sojourn_err) <= SOJOURN_RTOL,
                enforced=True,
                values={"target": target, "rel_err": [float(e) for e in sojourn_err]},
            )
        )
    return checks


def run_validation(quick: bool = False, seed: int = 0) -> ValidationReport:
    """Run the full matrix.

    ``quick`` cuts one-shot trials from 10^6 to 10^5. Queue runs keep their
    load-dependent size in both modes so the sojourn tolerance stays meaningful.
    """
    report = ValidationReport()
    trials = 100_000 if quick else 1_000_000
    for i, n in enumerate(ONE_SHOT_SIZES):
        report.checks.append(check_one_shot(n, trials, seed + i))
    for policy in (Policy.OQF, Policy.YQF):
        for i, load in enumerate(LOADS):
            for k, n in enumerate(QUEUE_SIZES):
                report.checks.extend(
                    check_queue(n, load, policy, requests_for_load(load), seed + 100 + 10 * i + k)
                )
    return report
