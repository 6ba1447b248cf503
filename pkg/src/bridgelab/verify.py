"""Statistical verification suites: every closed-form claim gets an oracle.

Each check compares a measured quantity against a bound (pass iff
measured <= bound). Bounds come from the analytic sampling distribution of
the estimator (3-sigma Monte-Carlo bands, stated relative tolerances, or
exact-zero requirements) and can be overridden by name. Given a seed and a
draw count, every suite is fully deterministic, so reports are byte-stable.

Suites: bridge (marginal/conditional moments and target identities),
objectives (normalization law and loss-contribution profiles), sampler
(endpoint exactness and variance laws), schedules (grid contract).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from . import sampler as sampler_mod
from .bridge import (
    EndpointPair,
    conditional_variance,
    interpolate,
    marginal_variance,
    sample_joint,
    sample_state,
    velocity_target,
)
from .numerics import RngStream, gaussian, squared_norm, uniform
from .objectives import (
    ObjectiveKind,
    alpha_factor,
    default_profile_grid,
    expected_target_sqnorm,
    target_profile,
)
from .sampler import endpoint_statistics, oracle_field, plan_steps
from .schedules import shifted, uniform as uniform_schedule

SUITES = ("bridge", "objectives", "sampler", "schedules", "all")

# Fixed desk-scale endpoint pair shared by the statistical suites.
_X0 = np.array([0.3, -1.2])
_X1 = np.array([1.7, 0.4])


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    measured: float
    bound: float
    passed: bool


def _check(suite: str, name: str, measured: float, bound: float, overrides) -> CheckResult:
    bound = float(overrides.get(name, bound)) if overrides else float(bound)
    measured = float(measured)
    return CheckResult(suite=suite, name=name, measured=measured, bound=bound, passed=measured <= bound)


# ---------------------------------------------------------------------------
# bridge suite
# ---------------------------------------------------------------------------


def bridge_suite(seed: int, mc: int = 100_000, overrides: dict | None = None) -> list[CheckResult]:
    rng = RngStream(seed=seed).split(1)
    pair = EndpointPair(_X0, _X1)
    d = pair.dimension
    checks: list[CheckResult] = []
    # The fixed relative tolerances are calibrated for 1e5 draws; never run
    # the variance laws with less, whatever --mc asks for.
    mc = max(mc, 100_000)

    # Mean deviations are reported in estimator sigmas with a family-wise
    # bound of 4.5 (18 coordinate comparisons; a literal 3-sigma gate flags
    # ~5% of correct runs). Variance bounds are the stated 3% relative, which
    # is ~6.7 sigma at 1e5 draws.
    for ti, t in enumerate((0.1, 0.5, 0.9)):
        for si, s in enumerate((0.5, 1.0, 2.0)):
            eps = gaussian(rng.split(10 * ti + si), (mc, d))
            states = interpolate(pair, t) + s * math.sqrt(t * (1.0 - t)) * eps
            emp_mean = states.mean(axis=0)
            emp_var = states.var(axis=0, ddof=1)
            sigma_mean = s * math.sqrt(t * (1.0 - t) / mc)
            checks.append(
                _check(
                    "bridge",
                    f"marginal_mean_sigma_t{t}_s{s}",
                    np.max(np.abs(emp_mean - interpolate(pair, t))) / sigma_mean,
                    4.5,
                    overrides,
                )
            )
            true_var = marginal_variance(t, s)
            checks.append(
                _check(
                    "bridge",
                    f"marginal_var_t{t}_s{s}",
                    np.max(np.abs(emp_var / true_var - 1.0)),
                    0.03,
                    overrides,
                )
            )

    for i, (t1, t2) in enumerate(((0.25, 0.5), (0.5, 0.75), (0.1, 0.9))):
        s = 1.0
        states1, states2 = sample_joint(pair, t1, t2, s, rng.split(100 + i), mc)
        pull = (t2 - t1) / (1.0 - t1)
        residual = states2 - (states1 + pull * (pair.x1.ravel() - states1))
        emp_cond_var = residual.var(axis=0, ddof=1)
        true_cond = conditional_variance(t1, t2, s)
        checks.append(
            _check(
                "bridge",
                f"conditional_var_{t1}_{t2}",
                np.max(np.abs(emp_cond_var / true_cond - 1.0)),
                0.03,
                overrides,
            )
        )

    # Deterministic identities on a sweep of random samples.
    ident_rng = rng.split(200)
    worst_identity = 0.0
    worst_expansion = 0.0
    for i in range(200):
        t = float(uniform(ident_rng, ())) * 0.99
        s = float(uniform(ident_rng, ())) * 3.0
        eps = gaussian(ident_rng, pair.x0.shape)
        sample = sample_state(pair, t, eps, s)
        u = velocity_target(pair, sample)
        dsp = pair.x1 - sample.state
        scale = max(1.0, float(np.max(np.abs(dsp))))
        worst_identity = max(worst_identity, float(np.max(np.abs(dsp - (1.0 - t) * u))) / scale)
        expansion = (pair.x1 - pair.x0) - s * math.sqrt(t / (1.0 - t)) * eps
        worst_expansion = max(worst_expansion, float(np.max(np.abs(u - expansion))))
    checks.append(_check("bridge", "target_identity_rel", worst_identity, 1e-15, overrides))
    checks.append(_check("bridge", "expansion_identity_abs", worst_expansion, 1e-12, overrides))

    pinning = max(
        marginal_variance(0.0, 1.0),
        marginal_variance(1.0, 1.0),
        float(np.max(np.abs(interpolate(pair, 0.0) - pair.x0))),
        float(np.max(np.abs(interpolate(pair, 1.0) - pair.x1))),
    )
    checks.append(_check("bridge", "endpoint_pinning", pinning, 0.0, overrides))

    # Normal-source sanity: chi-square goodness of fit over quantile bins.
    gof_draws = 100_000
    draws = gaussian(rng.split(300), (gof_draws,))
    bins = scipy_stats.norm.ppf(np.linspace(0.0, 1.0, 21))
    observed, _ = np.histogram(draws, bins=bins)
    expected = gof_draws / 20.0
    chi2_stat = float(np.sum((observed - expected) ** 2 / expected))
    chi2_crit = float(scipy_stats.chi2.ppf(0.999, df=19))
    checks.append(_check("bridge", "gaussian_chi2_gof", chi2_stat, chi2_crit, overrides))

    return checks


# ---------------------------------------------------------------------------
# objectives suite
# ---------------------------------------------------------------------------


def objectives_suite(
    seed: int, mc: int = 100_000, overrides: dict | None = None
) -> list[CheckResult]:
    rng = RngStream(seed=seed).split(2)
    pair = EndpointPair(_X0, _X1)
    d = pair.dimension
    dist_sq = squared_norm(pair.x1 - pair.x0)
    s = 1.0
    draws = max(mc // 10, 1000)
    checks: list[CheckResult] = []

    # Worst per-point deviation in estimator sigmas. The bound of 4.5 sigma
    # keeps the family-wise false-alarm rate ~1e-4 over the 21-point grid
    # (a literal per-point 3-sigma gate would flag ~5% of correct runs).
    grid = np.concatenate([np.arange(0.05, 0.951, 0.05), [0.995]])
    ratio_draws = max(mc // 4, 25_000)
    worst_z = 0.0
    worst_ratio = 0.0
    for i, t in enumerate(grid):
        t = float(t)
        eps = gaussian(rng.split(10 + i), (ratio_draws, d))
        u = (pair.x1 - pair.x0) - s * math.sqrt(t / (1.0 - t)) * eps
        u_sqnorms = np.sum(u * u, axis=1)
        alpha_sq = alpha_factor(pair, t, s).alpha_squared
        stab_sqnorms = u_sqnorms / alpha_sq
        se = float(np.std(stab_sqnorms, ddof=1)) / math.sqrt(ratio_draws)
        worst_z = max(worst_z, abs(float(np.mean(stab_sqnorms)) - dist_sq) / se)
        ratio = float(np.mean(u_sqnorms)) / dist_sq
        worst_ratio = max(worst_ratio, abs(ratio / alpha_sq - 1.0))
    checks.append(_check("objectives", "alpha_law_stabilized_worst_sigma", worst_z, 4.5, overrides))
    checks.append(_check("objectives", "alpha_law_velocity_ratio", worst_ratio, 0.03, overrides))

    # Loss-contribution profiles against their closed-form landmarks (unit
    # distance in one dimension, unit noise scale).
    unit_pair = EndpointPair(np.array([0.0]), np.array([1.0]))
    grid_i = default_profile_grid(1000)
    prof_v = target_profile(ObjectiveKind.VELOCITY, unit_pair, 1.0, grid_i)
    idx09 = int(np.argmin(np.abs(grid_i - 0.9)))
    checks.append(
        _check(
            "objectives",
            "profile_velocity_c09",
            abs(prof_v[idx09].c_value - 1.0 / 3.0),
            0.02,
            overrides,
        )
    )
    prof_d = target_profile(ObjectiveKind.DISPLACEMENT, unit_pair, 1.0, grid_i)
    idx05 = int(np.argmin(np.abs(grid_i - 0.5)))
    checks.append(
        _check(
            "objectives",
            "profile_displacement_c05",
            abs(prof_d[idx05].c_value - 0.751),
            0.02,
            overrides,
        )
    )
    prof_s = target_profile(ObjectiveKind.STABILIZED_VELOCITY, unit_pair, 1.0, grid_i)
    stab_dev = max(abs(p.c_value - p.t / 0.999) for p in prof_s)
    checks.append(_check("objectives", "profile_stabilized_linear", stab_dev, 0.01, overrides))

    # Monte-Carlo estimates agree with the closed forms for every objective
    # kind; same family-wise sigma bound, 30 comparisons.
    mc_grid = np.linspace(0.05, 0.95, 10)
    worst_mc_z = 0.0
    for ki, kind in enumerate(ObjectiveKind):
        for i, t in enumerate(mc_grid):
            t = float(t)
            eps = gaussian(rng.split(400 + 20 * ki + i), (draws, d))
            spread = s * math.sqrt(t * (1.0 - t))
            states = interpolate(pair, t) + spread * eps
            if kind is ObjectiveKind.DISPLACEMENT:
                targets = pair.x1 - states
            else:
                targets = (pair.x1 - states) / (1.0 - t)
            sqnorms = np.sum(targets * targets, axis=1)
            if kind is ObjectiveKind.STABILIZED_VELOCITY:
                sqnorms = sqnorms / alpha_factor(pair, t, s).alpha_squared
            closed = expected_target_sqnorm(kind, pair, s, t)
            se = float(np.std(sqnorms, ddof=1)) / math.sqrt(draws)
            worst_mc_z = max(worst_mc_z, abs(float(np.mean(sqnorms)) - closed) / se)
    checks.append(
        _check("objectives", "profile_mc_vs_closed_form_worst_sigma", worst_mc_z, 4.5, overrides)
    )

    # The library's own Monte-Carlo profile path reproduces the constant
    # stabilized magnitude within 2 percent. The draw count is floored so the
    # fixed bound stays a >4-sigma event at the noisiest grid point.
    prof_mc = target_profile(
        ObjectiveKind.STABILIZED_VELOCITY,
        pair,
        s,
        mc_grid,
        mc_samples=max(mc // 2, 50_000),
        rng=rng.split(500),
    )
    worst_stab_mc = max(abs(p.s_value / dist_sq - 1.0) for p in prof_mc)
    checks.append(_check("objectives", "profile_mc_stabilized_flat", worst_stab_mc, 0.02, overrides))

    # alpha monotonicity in t and in s (closed form, fine grids).
    t_grid = np.linspace(0.0, 0.99, 200)
    alphas_t = np.array([alpha_factor(pair, float(t), 1.5).alpha_squared for t in t_grid])
    s_grid = np.linspace(0.0, 4.0, 200)
    alphas_s = np.array([alpha_factor(pair, 0.7, float(v)).alpha_squared for v in s_grid])
    mono_violations = float(np.sum(np.diff(alphas_t) < 0) + np.sum(np.diff(alphas_s) < 0))
    checks.append(_check("objectives", "alpha_monotonic", mono_violations, 0.0, overrides))
    checks.append(
        _check(
            "objectives",
            "alpha_floor_at_one",
            float(1.0 - min(np.min(alphas_t), np.min(alphas_s))),
            0.0,
            overrides,
        )
    )

    return checks


# ---------------------------------------------------------------------------
# sampler suite
# ---------------------------------------------------------------------------


def sampler_suite(seed: int, mc: int = 100_000, overrides: dict | None = None) -> list[CheckResult]:
    rng = RngStream(seed=seed).split(3)
    pair = EndpointPair(_X0, _X1)
    checks: list[CheckResult] = []
    mc = max(mc, 100_000)  # fixed tolerances are calibrated for 1e5 draws
    schedules_grid = [(n, g) for n in (1, 2, 4, 16, 64) for g in (1.0, 5.0)]

    worst_mse = 0.0
    for n, g in schedules_grid:
        for s in (0.0, 1.0, 2.0):
            st = endpoint_statistics(
                "corrected", oracle_field(pair.x1), pair, shifted(n, g), s, 8, rng.split(1)
            )
            worst_mse = max(worst_mse, st.mse)
    checks.append(_check("sampler", "oracle_corrected_mse", worst_mse, 1e-20, overrides))

    # 5% bound verified at 2e4 runs so it sits at ~5 estimator sigmas even
    # across the 20-combination grid.
    runs = 20_000
    worst_var = 0.0
    for n, g in schedules_grid:
        for s in (1.0, 2.0):
            sch = shifted(n, g)
            st = endpoint_statistics(
                "standard", oracle_field(pair.x1), pair, sch, s, runs, rng.split(2)
            )
            expected = s * s * float(sch.points[-1] - sch.points[-2])
            worst_var = max(worst_var, abs(st.variance / expected - 1.0))
    checks.append(_check("sampler", "standard_endpoint_variance", worst_var, 0.05, overrides))

    st0 = endpoint_statistics(
        "standard", oracle_field(pair.x1), pair, uniform_schedule(8), 0.0, 16, rng.split(3)
    )
    checks.append(_check("sampler", "standard_s0_exact", st0.mse, 1e-20, overrides))

    # Final corrected step is exactly noiseless for every schedule.
    worst_eta = max(
        abs(plan_steps(shifted(n, g), "corrected", 2.0)[-1].eta) for n, g in schedules_grid
    )
    checks.append(_check("sampler", "final_step_noiseless", worst_eta, 0.0, overrides))

    # Driftless accumulation: with a zero field the endpoint variance equals
    # the sum of squared per-step amplitudes (direct check of the
    # variance-corrected noise schedule).
    sch = uniform_schedule(16)
    zero_field = lambda x, t: np.zeros_like(x)
    origin_pair = EndpointPair(np.zeros(1), np.zeros(1))
    st = endpoint_statistics("corrected", zero_field, origin_pair, sch, 1.0, mc, rng.split(4))
    predicted = sum(p.eta**2 for p in plan_steps(sch, "corrected", 1.0))
    checks.append(
        _check(
            "sampler",
            "driftless_amplitude_accumulation",
            abs(st.variance / predicted - 1.0),
            0.03,
            overrides,
        )
    )

    # Marginal tracking: with the conditional drift toward a zero target the
    # corrected sampler's state variance reproduces the bridge marginal
    # s^2 t (1-t) at every grid time (telescoping conditional variances).
    s = 1.0
    states = np.zeros((mc, 1))
    track_rng = rng.split(5)
    worst_track = 0.0
    for planned in plan_steps(uniform_schedule(8), "corrected", s):
        drift = -states / (1.0 - planned.t_start)
        states = states + planned.dt * drift + planned.eta * gaussian(track_rng, states.shape)
        expected = marginal_variance(planned.t_end, s)
        if expected > 0.0:
            worst_track = max(worst_track, abs(float(np.var(states, ddof=1)) / expected - 1.0))
    final_var = float(np.var(states, ddof=1))
    checks.append(_check("sampler", "bridge_marginal_tracking", worst_track, 0.03, overrides))
    checks.append(_check("sampler", "bridge_marginal_endpoint_pinned", final_var, 0.0, overrides))

    # Determinism: identical (seed, schedule, field) gives identical trajectories.
    traj_a = sampler_mod.sample(
        "corrected", pair.x0, oracle_field(pair.x1), shifted(8, 5.0), 1.0, RngStream(seed=seed, stream=77)
    )
    traj_b = sampler_mod.sample(
        "corrected", pair.x0, oracle_field(pair.x1), shifted(8, 5.0), 1.0, RngStream(seed=seed, stream=77)
    )
    det = max(float(np.max(np.abs(a - b))) for a, b in zip(traj_a, traj_b))
    checks.append(_check("sampler", "trajectory_determinism", det, 0.0, overrides))

    return checks


# ---------------------------------------------------------------------------
# schedules suite
# ---------------------------------------------------------------------------


def schedules_suite(seed: int, mc: int = 0, overrides: dict | None = None) -> list[CheckResult]:
    del seed, mc  # deterministic contract checks
    checks: list[CheckResult] = []
    n_values = (1, 2, 3, 7, 64, 1000, 10_000)
    gamma_values = (1.0, 1.5, 2.0, 5.0, 100.0)

    boundary = 0.0
    monotonic_violations = 0.0
    growth_violations = 0.0
    densify_violations = 0.0
    bitwise_mismatch = 0.0
    for n in n_values:
        for g in gamma_values:
            sch = shifted(n, g)
            boundary = max(boundary, abs(sch.points[0]), abs(sch.points[-1] - 1.0))
            diffs = np.diff(sch.points)
            monotonic_violations += float(np.sum(diffs <= 0.0))
            if g > 1.0:
                growth_violations += float(np.sum(np.diff(diffs) < 0.0))
                if n >= 2 and not sch.points[1] < 1.0 / n:
                    densify_violations += 1.0
        bitwise_mismatch += float(
            np.sum(shifted(n, 1.0).points != uniform_schedule(n).points)
        )

    checks.append(_check("schedules", "boundary_exactness", boundary, 0.0, overrides))
    checks.append(_check("schedules", "strict_monotonicity", monotonic_violations, 0.0, overrides))
    checks.append(_check("schedules", "step_growth_gamma_gt1", growth_violations, 0.0, overrides))
    checks.append(_check("schedules", "early_densification", densify_violations, 0.0, overrides))
    checks.append(_check("schedules", "gamma1_bitwise_uniform", bitwise_mismatch, 0.0, overrides))
    return checks


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_SUITE_FUNCS = {
    "bridge": bridge_suite,
    "objectives": objectives_suite,
    "sampler": sampler_suite,
    "schedules": schedules_suite,
}


def run_suite(
    suite: str, seed: int = 0, mc: int = 100_000, overrides: dict | None = None
) -> dict:
    """Run one named suite (or 'all'); returns a deterministic report dict."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    names = [s for s in ("bridge", "objectives", "sampler", "schedules") if suite in ("all", s)]
    checks: list[CheckResult] = []
    for name in names:
        checks.extend(_SUITE_FUNCS[name](seed=seed, mc=mc, overrides=overrides))
    return {
        "suite": suite,
        "seed": seed,
        "mc": mc,
        "checks": [
            {
                "suite": c.suite,
                "name": c.name,
                "measured": c.measured,
                "bound": c.bound,
                "passed": c.passed,
            }
            for c in checks
        ],
        "failed": [c.name for c in checks if not c.passed],
        "passed": all(c.passed for c in checks),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
