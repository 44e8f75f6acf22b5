"""Certified upper bounds on the expected simultaneous renewal time.

The headline bound combines the expected first hitting times of the two
chains, the envelope head and mass, and the regularity constant:

    m1 + m2 + (n0 * G0 + m) * (1 + gamma) / gamma.

For the nearest-neighbour family two closed-form specializations exist,
one driven by second-moment constants of the dominating walk (the legacy
route) and one by first moments only; this module computes both, checks
the algebraic identity tying them together, and assembles the full
pipeline report for a birth-death pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exact
from .domination import (
    DominatingSequence,
    RegularityCertificate,
    domination_valid_for,
    regularity_from_floor,
    return_floor,
    walk_dominating_sequence,
)
from .kernel import BirthDeathSpec, birth_death_schedule
from .simulate import JointRenewalEstimate, SimulationPlan, estimate_joint_renewal

GOLDEN_GAMMA = (math.sqrt(5.0) - 1.0) / 2.0


def expectation_bound(
    m1: float, m2: float, n0: int, head: float, mass: float, gamma: float
) -> float:
    """m1 + m2 + (n0 * head + mass) * (1 + gamma) / gamma."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    for name, value in (("m1", m1), ("m2", m2), ("n0", n0), ("head", head), ("mass", mass)):
        if value < 0:
            raise ValueError(f"{name} must be nonnegative")
    return m1 + m2 + (n0 * head + mass) * (1.0 + gamma) / gamma


def trial_tail_bound(gamma: float, n: int) -> float:
    """(1 - gamma)^n: certified tail of the number of landing trials."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return (1.0 - gamma) ** n


@dataclass(frozen=True, eq=False)
class TrialStats:
    """Estimated table P{trial sums hit j at trial k, scan still running}.

    ``table[k, j]`` estimates the probability that the k-th partial sum of
    the trial gaps equals j while the first success has not occurred
    before trial k.  Built from traces where both chains start inside the
    target set.
    """

    table: np.ndarray
    n_traces: int

    @property
    def by_sum(self) -> np.ndarray:
        """Column sums: the per-j renewal mass entering the tail envelope."""
        return self.table.sum(axis=0)


def trial_statistics(traces, max_sum: int, max_trials: int | None = None) -> TrialStats:
    """Accumulate the trial-sum table from both-started-in-target traces."""
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    for trace in traces:
        if trace.first_hit(1) != 0 or trace.first_hit(2) != 0:
            raise ValueError("trial statistics require both chains to start in the target set")
    if max_trials is None:
        max_trials = max(
            (t.trials.first_success for t in traces if t.trials.first_success is not None),
            default=0,
        )
    table = np.zeros((max_trials + 1, max_sum + 1))
    for trace in traces:
        trials = trace.trials
        stop = trials.first_success
        upto = len(trials.sums) - 1 if stop is None else stop
        for k in range(min(upto, max_trials) + 1):
            j = trials.sums[k]
            if j <= max_sum:
                table[k, j] += 1.0
    return TrialStats(table=table / len(traces), n_traces=len(traces))


def meeting_tail_envelope(
    envelope: DominatingSequence, n0: int, stats: TrialStats, length: int
) -> np.ndarray:
    """Computable dominating sequence for the trial-sum tail.

    Entry n is ``sum_j envelope[n - j - n0] * sum_{k<=j} table[k, j]``
    with negative envelope indices resolving to the head value.
    """
    if length >= envelope.length + n0:
        raise ValueError("envelope too short for the requested length")
    mass = stats.by_sum
    out = np.zeros(length + 1)
    for n in range(length + 1):
        total = 0.0
        for j in range(0, min(n, len(mass) - 1) + 1):
            total += envelope.at(n - j - n0) * mass[j]
        out[n] = total
    return out


def walk_moment1(p: float) -> float:
    """First-moment constant of the dominating walk: 2/(2p-1) + 1."""
    if not 0.5 < p < 1.0:
        raise ValueError(f"walk parameter p must lie in (0.5, 1), got {p}")
    return 2.0 / (2.0 * p - 1.0) + 1.0


def walk_moment2(p: float) -> float:
    """Second-moment constant of the dominating walk, exactly as printed.

    The middle term 8(1-p)/(1-4p) is negative on the valid p range; the
    constant is reproduced verbatim because the comparison identity
    depends on it.
    """
    if not 0.5 < p < 1.0:
        raise ValueError(f"walk parameter p must lie in (0.5, 1), got {p}")
    return (2.0 * p - 1.0) ** -1 * (2.0 + 8.0 * (1.0 - p) / (1.0 - 4.0 * p)) + 2.0 / (
        2.0 * p - 1.0
    ) + 1.0


def bound_via_second_moment(p: float, gamma: float) -> tuple[float, float, float]:
    """Legacy bound moment2/gamma + moment1/gamma^2; returns (bound, m1, m2)."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    m1 = walk_moment1(p)
    m2 = walk_moment2(p)
    return m2 / gamma + m1 / gamma**2, m1, m2


def bound_via_first_moment(p: float, gamma: float) -> float:
    """First-moment bound moment1 * (1 + gamma) / gamma."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    return walk_moment1(p) * (1.0 + gamma) / gamma


@dataclass(frozen=True)
class BoundComparison:
    """Both closed-form bounds plus the identity tying them together."""

    p: float
    gamma: float
    second_moment_bound: float
    first_moment_bound: float
    walk_moment1: float
    walk_moment2: float
    identity_residual: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "gamma": self.gamma,
            "second_moment_bound": self.second_moment_bound,
            "first_moment_bound": self.first_moment_bound,
            "walk_moment1": self.walk_moment1,
            "walk_moment2": self.walk_moment2,
            "identity_residual": self.identity_residual,
            "verdict": self.verdict,
        }


def compare_bounds(p: float, gamma: float) -> BoundComparison:
    """Evaluate both bounds and the identity
    first = (second - moment2/gamma) * (1 + gamma) * gamma.

    The verdict that the first-moment bound is tighter is only issued when
    gamma * (1 + gamma) < 1, i.e. gamma below (sqrt(5) - 1) / 2.
    """
    e1, m1, m2 = bound_via_second_moment(p, gamma)
    e2 = bound_via_first_moment(p, gamma)
    residual = abs(e2 - (e1 - m2 / gamma) * (1.0 + gamma) * gamma)
    verdict = "first_moment_tighter" if gamma * (1.0 + gamma) < 1.0 else "withheld"
    return BoundComparison(
        p=p,
        gamma=gamma,
        second_moment_bound=e1,
        first_moment_bound=e2,
        walk_moment1=m1,
        walk_moment2=m2,
        identity_residual=residual,
        verdict=verdict,
    )


@dataclass(frozen=True, eq=False)
class BoundReport:
    """All inputs and outputs of the full bound pipeline."""

    p: float
    gamma: float
    n0: int
    floor: float
    mean_hit1: exact.ExpectationBracket
    mean_hit2: exact.ExpectationBracket
    envelope_head: float
    envelope_mass: float
    bound: float
    comparison: BoundComparison
    mc: JointRenewalEstimate
    tail_envelope: np.ndarray | None
    bound_holds: bool
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        def q(value, provenance, se=None):
            out = {"value": value, "provenance": provenance}
            if se is not None:
                out["se"] = se
            return out

        return {
            "p": q(self.p, "analytic"),
            "gamma": q(self.gamma, "analytic"),
            "n0": q(self.n0, "analytic"),
            "floor": q(self.floor, "analytic"),
            "mean_hit1": {
                "low": self.mean_hit1.low,
                "high": self.mean_hit1.high,
                "provenance": "exact",
            },
            "mean_hit2": {
                "low": self.mean_hit2.low,
                "high": self.mean_hit2.high,
                "provenance": "exact",
            },
            "envelope_head": q(self.envelope_head, "analytic"),
            "envelope_mass": q(self.envelope_mass, "analytic"),
            "bound": q(self.bound, "analytic"),
            "second_moment_bound": q(self.comparison.second_moment_bound, "analytic"),
            "first_moment_bound": q(self.comparison.first_moment_bound, "analytic"),
            "walk_moment1": q(self.comparison.walk_moment1, "analytic"),
            "walk_moment2": q(self.comparison.walk_moment2, "analytic"),
            "identity_residual": q(self.comparison.identity_residual, "analytic"),
            "verdict": self.comparison.verdict,
            "mc_mean": q(self.mc.mean, "mc", self.mc.se),
            "mc_censoring_rate": q(self.mc.censoring_rate, "mc"),
            "tail_envelope": None
            if self.tail_envelope is None
            else [float(v) for v in self.tail_envelope],
            "bound_holds": self.bound_holds,
            "warnings": list(self.warnings),
        }


def full_report(
    spec1: BirthDeathSpec,
    spec2: BirthDeathSpec,
    initial1,
    initial2,
    *,
    p: float,
    series_len: int = 2000,
    horizon: int = 2000,
    n_paths: int = 20_000,
    master_seed: int = 0,
    mu_hat: float | None = None,
    workers: int = 1,
    tail_len: int = 200,
    exact_horizon: int | None = None,
) -> BoundReport:
    """Run the whole pipeline on a birth-death pair.

    Rejects the plan before any simulation when the walk parameter does
    not dominate the chains' per-step products.  The mean-bound exponent
    defaults to the walk's first-moment constant and can be overridden
    with ``mu_hat``.
    """
    sup_product = max(spec1.sup_alpha_product(), spec2.sup_alpha_product())
    if not domination_valid_for(p, sup_product):
        raise ValueError(
            f"walk parameter p={p} gives p(1-p)={p * (1 - p):.6g} below the chains' "
            f"sup alpha(1-alpha)={sup_product:.6g}; the envelope does not apply"
        )

    schedule1 = birth_death_schedule(spec1)
    schedule2 = birth_death_schedule(spec2)
    floor = return_floor(spec1.min_alpha_at_zero(), spec2.min_alpha_at_zero())
    certificate = regularity_from_floor(floor, mu_hat if mu_hat is not None else walk_moment1(p))
    envelope = walk_dominating_sequence(p, series_len)

    exact_h = exact_horizon if exact_horizon is not None else max(horizon, 2000)
    hit1 = exact.hitting_time_distribution(
        schedule1, initial1, horizon=exact_h, tail_gamma=certificate.gamma
    )
    hit2 = exact.hitting_time_distribution(
        schedule2, initial2, horizon=exact_h, tail_gamma=certificate.gamma
    )

    plan = SimulationPlan(
        schedule1=schedule1,
        schedule2=schedule2,
        initial1=initial1,
        initial2=initial2,
        horizon=horizon,
        n_paths=n_paths,
        master_seed=master_seed,
    )
    starts_in_target = _starts_in_target(plan)
    mc = estimate_joint_renewal(
        plan, workers=workers, keep_traces=starts_in_target, tail_len=tail_len, n0=certificate.n0
    )

    warnings: list[str] = []
    if mc.censoring_rate > 0:
        warnings.append(
            f"{mc.censored} of {mc.n_paths} paths were censored at the horizon; "
            "the Monte Carlo mean is a lower bound"
        )
    for label, schedule, spec, initial in (
        ("chain1", schedule1, spec1, initial1),
        ("chain2", schedule2, spec2, initial2),
    ):
        cap_mass = 1.0 - exact.hitting_time_distribution(
            schedule, initial, targets=(spec.cap,), horizon=horizon
        ).table.residual
        if cap_mass > 1e-9:
            warnings.append(
                f"truncation: {label} touches the cap state within the horizon "
                f"with probability {cap_mass:.3g}; consider a larger cap"
            )

    tail_env = None
    if starts_in_target and mc.traces:
        stats = trial_statistics(mc.traces, max_sum=tail_len)
        tail_env = meeting_tail_envelope(envelope, certificate.n0, stats, tail_len)

    bound = expectation_bound(
        hit1.expectation.high,
        hit2.expectation.high,
        certificate.n0,
        envelope.head,
        envelope.total_mass,
        certificate.gamma,
    )
    comparison = compare_bounds(p, certificate.gamma)
    bound_holds = mc.mean - 3.0 * mc.se <= bound

    return BoundReport(
        p=p,
        gamma=certificate.gamma,
        n0=certificate.n0,
        floor=floor,
        mean_hit1=hit1.expectation,
        mean_hit2=hit2.expectation,
        envelope_head=envelope.head,
        envelope_mass=envelope.total_mass,
        bound=bound,
        comparison=comparison,
        mc=mc,
        tail_envelope=tail_env,
        bound_holds=bound_holds,
        warnings=tuple(warnings),
    )


def _starts_in_target(plan: SimulationPlan) -> bool:
    targets = sorted(plan.targets)
    in1 = float(np.asarray(plan.initial1)[targets].sum())
    in2 = float(np.asarray(plan.initial2)[targets].sum())
    return abs(in1 - 1.0) < 1e-12 and abs(in2 - 1.0) < 1e-12
