"""Executable checks for the flow's invariants and algebraic identities.

Each check name maps to one claim; reports carry measured values and
thresholds so CI logs stay auditable. A failing check is a report entry,
never an exception.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationFailure
from .flow import IntegratorConfig, integrate
from .jacobi import (
    as_offdiag,
    commutator,
    embed,
    equilibrium_residual,
    lyapunov_f,
    lyapunov_f_traceform,
    map_K,
    map_N,
    rhs_componentwise,
    rhs_matrix,
)
from .spectral import (
    Spectrum,
    batch_eigenvalues_zero_diag,
    make_spectrum,
    predict_limit,
    enumerate_equilibria,
)

__all__ = [
    "Check",
    "VerificationReport",
    "Tolerances",
    "verify_run",
    "verify_identities",
    "verify_equilibrium_counts",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    threshold: float


@dataclass
class VerificationReport:
    checks: list
    meta: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "checks": [
                {
                    "name": c.name,
                    "passed": bool(c.passed),
                    "measured": float(c.measured),
                    "threshold": float(c.threshold),
                }
                for c in self.checks
            ],
            "overall": bool(self.overall),
            "meta": {k: _plain(v) for k, v in self.meta.items()},
        }


def _plain(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


@dataclass(frozen=True)
class Tolerances:
    """Scale-aware verification thresholds, each used as coeff * (1 + scale)."""

    spec_drift: float = 1e-7  # scale: ||a0||_2
    norm_drift: float = 1e-8  # scale: ||a0||_2
    lyapunov_slack: float = 1e-9  # scale: max |f| along the run
    final_residual: float = 1e-6  # scale: ||a0||^2
    limit_match: float = 1e-6  # scale: ||a0||_2
    zero_slots: float = 1e-6  # scale: ||a0||_2
    sorted_margin: float = 1e-8  # scale: ||a0||^2, on squared entries


def trajectory_checks(traj, a0: np.ndarray, tol: Tolerances) -> list:
    """Invariant checks shared by verify_run and the acceptance suite."""
    scale = float(np.linalg.norm(a0))
    checks = []

    drift = float(traj.spec_drift.max())
    checks.append(Check("spectral_drift", drift <= tol.spec_drift * (1 + scale),
                        drift, tol.spec_drift * (1 + scale)))

    norms = np.sqrt(np.sum(traj.states**2, axis=1))
    norm_dev = float(np.abs(norms - scale).max())
    checks.append(Check("frobenius_conservation",
                        norm_dev <= tol.norm_drift * (1 + scale),
                        norm_dev, tol.norm_drift * (1 + scale)))

    f_scale = float(np.abs(traj.f_values).max(initial=0.0))
    dips = -np.diff(traj.f_values)
    worst_dip = max(0.0, float(dips.max(initial=0.0)))
    slack = tol.lyapunov_slack * (1 + f_scale)
    checks.append(Check("lyapunov_monotone", worst_dip <= slack, worst_dip, slack))

    # a decaying component may underflow to exactly 0.0 (its limit); only a
    # strictly opposite sign is a genuine orthant crossing
    flips = int(np.sum(np.sign(traj.states) * np.sign(a0)[None, :] < 0.0))
    checks.append(Check("sign_preservation", flips == 0, float(flips), 0.0))

    return checks


def verify_run(a0, cfg: IntegratorConfig | None = None,
               tol: Tolerances | None = None, *, strict: bool = True,
               seed=None) -> VerificationReport:
    """Integrate a0 and check every trajectory-level claim.

    With strict=False, validation is relaxed and the limit-prediction checks
    are skipped (their hypotheses need nonzero entries and distinct
    magnitudes). A stationary input yields a short report with the
    prediction checks skipped.
    """
    a0 = as_offdiag(a0)
    tol = tol or Tolerances()
    cfg = cfg or IntegratorConfig()
    scale = float(np.linalg.norm(a0))
    sq = float(np.sum(a0 * a0))

    traj = integrate(a0, cfg, validate=strict)
    meta = {
        "status": traj.status,
        "n": a0.size + 1,
        "seed": seed,
        "strict": strict,
        "input_offdiag": a0,
        "final_offdiag": traj.final_state,
        "config": _config_dict(traj.config),
    }

    if traj.status == "stationary_input":
        resid = float(traj.k_norms[0])
        meta["prediction"] = "skipped (stationary input)"
        return VerificationReport(
            checks=[Check("stationary_residual", resid <= traj.eq_eps,
                          resid, traj.eq_eps)],
            meta=meta,
        )

    checks = trajectory_checks(traj, a0, tol)

    final_resid = float(traj.k_norms[-1])
    checks.append(Check("equilibrium_reached",
                        final_resid <= tol.final_residual * (1 + sq),
                        final_resid, tol.final_residual * (1 + sq)))

    final = traj.final_state
    spec = make_spectrum(batch_eigenvalues_zero_diag(a0[None, :],
                                                     1e-12 * (1 + scale))[0])
    meta["spectrum"] = spec.values
    if strict:
        predicted = predict_limit(a0, spec)
        meta["predicted_limit"] = predicted

        dev = float(np.abs(final - predicted).max())
        checks.append(Check("limit_match", dev <= tol.limit_match * (1 + scale),
                            dev, tol.limit_match * (1 + scale)))

        n = a0.size + 1
        zero_slots = np.arange(1, n - 1, 2) if n % 2 == 0 else np.arange(0, n - 1, 2)
        live_slots = np.arange(0, n - 1, 2) if n % 2 == 0 else np.arange(1, n - 1, 2)

        zdev = float(np.abs(final[zero_slots]).max()) if zero_slots.size else 0.0
        checks.append(Check("limit_zero_slots", zdev <= tol.zero_slots * (1 + scale),
                            zdev, tol.zero_slots * (1 + scale)))

        sq_live = final[live_slots] ** 2
        min_gap = float(np.diff(sq_live).min()) if sq_live.size > 1 else math.inf
        margin = tol.sorted_margin * (1 + sq)
        checks.append(Check("sorted_magnitudes_min_gap", min_gap > margin,
                            min_gap, margin))
    else:
        meta["prediction"] = "skipped (strict=False)"

    return VerificationReport(checks=checks, meta=meta)


def _config_dict(cfg: IntegratorConfig) -> dict:
    return {
        "method": cfg.method,
        "dt": cfg.dt,
        "abs_tol": cfg.abs_tol,
        "rel_tol": cfg.rel_tol,
        "t_max": cfg.t_max,
        "eq_eps": cfg.eq_eps,
        "record_stride": cfg.record_stride,
        "max_rows": cfg.max_rows,
        "dt_min": cfg.dt_min,
    }


def _sym(rng, n, lim=5.0):
    A = rng.uniform(-lim, lim, (n, n))
    return 0.5 * (A + A.T)


def verify_identities(n: int, trials: int = 100, seed: int = 0) -> VerificationReport:
    """Random-input checks of the algebraic identities behind the flow.

    All deviations are normalized by (1 + scale) with the scale matching the
    identity's degree in the inputs, and the worst trial is reported.
    """
    if n < 1 or trials < 1:
        raise ValidationFailure("need n >= 1 and trials >= 1")
    rng = np.random.default_rng(seed)

    w_prop3 = w_rhs = w_tracechar = w_twoform = w_swap = 0.0
    for _ in range(trials):
        a = rng.uniform(-20.0, 20.0, max(n - 1, 0))
        H = embed(a)
        h_norm = float(np.linalg.norm(H))

        dev = float(np.linalg.norm(map_K(a) - commutator(H, map_N(H))))
        w_prop3 = max(w_prop3, dev / (1 + h_norm**2))

        dev = float(np.linalg.norm(rhs_matrix(H) - embed(rhs_componentwise(a))))
        w_rhs = max(w_rhs, dev / (1 + h_norm**3))

        A = _sym(rng, n)
        B = _sym(rng, n)
        C = commutator(A, B)
        c_sq = float(np.sum(C * C))
        dev = abs(c_sq - float(np.trace(B @ commutator(A, C))))
        w_tracechar = max(w_tracechar, dev / (1 + c_sq))

        S = _sym(rng, n, lim=20.0)
        NS = map_N(S)
        dev = abs(lyapunov_f(S) - lyapunov_f_traceform(S))
        w_twoform = max(w_twoform, dev / (1 + float(np.sum(S * S)) + float(np.sum(NS * NS))))

        dev = abs(float(np.trace(map_N(A) @ B)) - float(np.trace(map_N(B) @ A)))
        w_swap = max(w_swap, dev / (1 + n * float(np.linalg.norm(A)) * float(np.linalg.norm(B))))

    checks = [
        Check("commutator_matches_quadratic_map", w_prop3 <= 1e-10, w_prop3, 1e-10),
        Check("rhs_dense_vs_componentwise", w_rhs <= 1e-10, w_rhs, 1e-10),
        Check("nested_bracket_trace_identity", w_tracechar <= 1e-9, w_tracechar, 1e-9),
        Check("lyapunov_two_forms_agree", w_twoform <= 1e-12, w_twoform, 1e-12),
        Check("trace_swap_under_n", w_swap <= 1e-10, w_swap, 1e-10),
    ]
    return VerificationReport(checks=checks, meta={"n": n, "trials": trials, "seed": seed})


def brute_force_equilibria(spec: Spectrum, atol: float | None = None) -> list:
    """All signed placements of the magnitudes that are equilibria with the
    given spectrum, found by exhaustive filtering (test oracle)."""
    mags = spec.positive_magnitudes
    n = spec.n
    m = mags.size
    if atol is None:
        atol = 1e-9 * (1 + float(np.abs(spec.values).max(initial=0.0)))
    found = []
    for slots in itertools.permutations(range(n - 1), m):
        for signs in itertools.product((1.0, -1.0), repeat=m):
            a = np.zeros(n - 1)
            for v, s, p in zip(mags, signs, slots):
                a[p] = v * s
            if equilibrium_residual(a) != 0.0:
                continue
            eigs = batch_eigenvalues_zero_diag(a[None, :], 1e-12 * (1 + mags.max()))[0]
            if np.abs(eigs - spec.values).max() <= atol:
                found.append(a)
    return found


def _point_key(a: np.ndarray) -> tuple:
    return tuple(np.round(a, 9))


def verify_equilibrium_counts(n: int) -> VerificationReport:
    """Check the equilibrium count formulas and (n <= 6) the full enumeration."""
    if not 2 <= n <= 8:
        raise ValidationFailure("equilibrium counting supports 2 <= n <= 8")
    m = n // 2
    mags = np.arange(1.0, m + 1.0)
    values = np.concatenate([-mags[::-1], np.zeros(1 if n % 2 else 0), mags])
    spec = make_spectrum(values)

    expected = math.factorial(m) if n % 2 == 0 else (m + 1) * math.factorial(m)
    eqset = enumerate_equilibria(spec, include_signs=True)
    plain = enumerate_equilibria(spec, include_signs=False)

    checks = [
        Check("count_formula", eqset.count_formula == expected,
              float(eqset.count_formula), float(expected)),
        Check("count_plain_points", len(plain.points) == expected,
              float(len(plain.points)), float(expected)),
        Check("count_signed_points",
              len(eqset.points) == eqset.count_with_signs,
              float(len(eqset.points)), float(eqset.count_with_signs)),
    ]
    meta = {"n": n, "count_formula": eqset.count_formula,
            "count_with_signs": eqset.count_with_signs}

    if n <= 6:
        brute = brute_force_equilibria(spec)
        got = {_point_key(p) for p in eqset.points}
        want = {_point_key(p) for p in brute}
        sym_diff = len(got ^ want)
        checks.append(Check("signed_enumeration_matches_brute_force",
                            sym_diff == 0, float(sym_diff), 0.0))
    return VerificationReport(checks=checks, meta=meta)
