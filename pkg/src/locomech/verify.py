"""Named invariant suites runnable against any scenario.

Each suite turns one conservation or consistency property into a few
numeric checks: a measured value, the threshold it must stay under, and
the resulting verdict.  Suites reuse the scenario's model, gait, and
integrator settings so a failing row points at a concrete configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrator import integrate_gait, net_displacement
from .liegroup import compose, inverse, log
from .shapespace import reparameterize, reversed_gait


@dataclass(frozen=True)
class VerifyCheck:
    suite: str
    check: str
    value: float
    threshold: float
    passed: bool


def _check(suite: str, check: str, value: float, threshold: float) -> VerifyCheck:
    value = float(value)
    threshold = float(threshold)
    return VerifyCheck(suite, check, value, threshold, bool(value <= threshold))


def _integrate(scenario, gait=None, cycles=None):
    return integrate_gait(
        scenario.provider,
        scenario.gait if gait is None else gait,
        cycles=scenario.cycles if cycles is None else cycles,
        step=scenario.step,
        event_tol=scenario.event_tol,
    )


def _suite_loop_closure(scenario):
    traj = _integrate(scenario, cycles=1)
    return [_check("loop_closure", "log_final_pose", log(traj.poses[-1]).norm(), 1e-8)]


def _suite_single_piece(scenario):
    traj = _integrate(scenario, cycles=1)
    return [
        _check("single_piece", "net_displacement", net_displacement(traj).norm(), 1e-8),
        _check("single_piece", "event_count", float(len(traj.events)), 0.0),
    ]


def _suite_reversal(scenario):
    forward = _integrate(scenario, cycles=1).poses[-1]
    backward = _integrate(scenario, gait=reversed_gait(scenario.gait), cycles=1).poses[-1]
    return [
        _check("reversal", "log_roundtrip_pose", log(compose(forward, backward)).norm(), 1e-8)
    ]


def _suite_pacing(scenario):
    period = scenario.gait.period

    def warp(t):
        u = t / period
        return period * (3.0 * u * u - 2.0 * u**3)

    base = net_displacement(_integrate(scenario, cycles=1))
    warped_gait = reparameterize(scenario.gait, warp, samples=4096)
    warped = net_displacement(_integrate(scenario, gait=warped_gait, cycles=1))
    return [_check("pacing", "retimed_displacement_gap", (base - warped).norm(), 1e-7)]


def _suite_continuity(scenario):
    traj = _integrate(scenario)
    worst = 0.0
    for a, b in zip(traj.poses[:-1], traj.poses[1:]):
        worst = max(worst, log(compose(inverse(a), b)).norm())
    bound = traj.meta["max_twist_norm"] * traj.meta["step"] * (1.0 + 1e-9)
    return [_check("continuity", "max_pose_increment", worst, bound)]


def _suite_residual(scenario):
    builder = scenario.constraint_builder
    if builder is None:
        raise ValueError("residual suite needs a constraint-based model")
    params = scenario.verify or {}
    count = int(params.get("shapes", 100))
    box = float(params.get("box", 1.2))
    rng = np.random.default_rng(scenario.seed)
    worst = 0.0
    for _ in range(count):
        r = rng.uniform(-box, box, scenario.dim)
        system = builder(r)
        a = scenario.provider.connection_at(r)
        worst = max(worst, np.abs(system.m @ a + system.n).max())
    return [_check("residual", "constraint_balance", worst, 1e-10)]


_SUITES = {
    "loop_closure": _suite_loop_closure,
    "single_piece": _suite_single_piece,
    "reversal": _suite_reversal,
    "pacing": _suite_pacing,
    "continuity": _suite_continuity,
    "residual": _suite_residual,
}


def run_verify(scenario) -> list[VerifyCheck]:
    """Run the scenario's selected suites and collect all check rows."""
    if scenario.verify is None:
        raise ValueError("scenario has no verify block")
    rows: list[VerifyCheck] = []
    for name in scenario.verify["suites"]:
        rows.extend(_SUITES[name](scenario))
    return rows
