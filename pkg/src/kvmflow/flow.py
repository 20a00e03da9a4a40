"""Time integration of the sorting flow.

The state vector is the off-diagonal of the zero-diagonal Jacobi matrix, so
the tridiagonal structure and zero diagonal are preserved exactly; the dense
symmetric integrator exists for cross-validation and for experiments on full
symmetric matrices, where only isospectrality and Lyapunov monotonicity are
guaranteed.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import StepUnderflow, ValidationFailure
from .jacobi import (
    as_offdiag,
    commutator,
    equilibrium_residual,
    lyapunov_f_offdiag,
    map_N,
    residual_norms,
    rhs_componentwise,
    rhs_matrix,
    validate_initial_state,
)
from .spectral import batch_eigenvalues_zero_diag, default_gap_tol

__all__ = [
    "IntegratorConfig",
    "FlowTrajectory",
    "DenseTrajectory",
    "integrate",
    "integrate_dense",
    "detect_convergence",
]

_METHOD_ALIASES = {
    "rk45": "rk45",
    "adaptive_rk45": "rk45",
    "rk4": "rk4",
    "fixed_rk4": "rk4",
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    dt is the fixed step for rk4 and the initial trial step for rk45
    (None picks one from the initial slope). eq_eps is the equilibrium
    residual that stops the run early (None -> 1e-10 * (1 + ||a0||^2)).
    """

    method: str = "rk45"
    dt: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    t_max: float = 10.0
    eq_eps: float | None = None
    record_stride: int = 1
    max_rows: int = 10_000
    dt_min: float | None = None

    def validated(self) -> "IntegratorConfig":
        method = _METHOD_ALIASES.get(self.method)
        if method is None:
            raise ValidationFailure(
                f"unknown method {self.method!r}; expected rk45 or rk4"
            )
        if self.t_max <= 0:
            raise ValidationFailure("t_max must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValidationFailure("dt must be positive")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValidationFailure("abs_tol and rel_tol must be positive")
        if self.eq_eps is not None and self.eq_eps < 0:
            raise ValidationFailure("eq_eps must be nonnegative")
        if self.record_stride < 1:
            raise ValidationFailure("record_stride must be at least 1")
        if self.max_rows < 2:
            raise ValidationFailure("max_rows must be at least 2")
        return replace(self, method=method)


_STATUS_NAMES = {
    kernels.STATUS_CONVERGED: "converged",
    kernels.STATUS_HORIZON: "horizon_reached",
}


@dataclass(frozen=True)
class FlowTrajectory:
    """Sampled off-diagonal states with per-sample diagnostics."""

    times: np.ndarray  # strictly increasing, starts at 0
    states: np.ndarray  # (m, n-1)
    f_values: np.ndarray  # Lyapunov value per sample
    k_norms: np.ndarray  # equilibrium residual per sample
    spec_drift: np.ndarray  # max eigenvalue deviation from the t=0 spectrum
    status: str  # converged | horizon_reached | stationary_input
    config: IntegratorConfig
    eq_eps: float  # resolved stopping threshold

    @property
    def n(self) -> int:
        return self.states.shape[1] + 1

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class DenseTrajectory:
    """Sampled dense symmetric states (experimental mode)."""

    times: np.ndarray
    states: np.ndarray  # (m, n, n)
    f_values: np.ndarray
    k_norms: np.ndarray
    spec_drift: np.ndarray
    status: str
    config: IntegratorConfig
    eq_eps: float
    final_blocks: list = field(default_factory=list)  # contiguous block sizes

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _default_eq_eps(sq_norm: float) -> float:
    # the residual scales quadratically in the entries
    return 1e-10 * (1.0 + sq_norm)


def _initial_step(cfg: IntegratorConfig, slope_inf: float, state_inf: float) -> float:
    if cfg.dt is not None:
        return cfg.dt
    if cfg.method == "rk4":
        return 1e-3
    h0 = 0.1 * (1.0 + state_inf) / (1.0 + slope_inf)
    return min(h0, 1e-3 * cfg.t_max)


def _eig_tol(scale: float) -> float:
    return 1e-12 * (1.0 + scale)


def integrate(a0, cfg: IntegratorConfig | None = None, *,
              validate: bool = True) -> FlowTrajectory:
    """Integrate the flow from a0 until equilibrium or the horizon.

    With validate=True (the default) the initial condition must have nonzero
    entries and pairwise-distinct eigenvalues. An initial condition that is
    already an equilibrium (residual <= eq_eps) yields a single-row
    stationary_input trajectory without integrating.
    """
    cfg = (cfg or IntegratorConfig()).validated()
    a0 = as_offdiag(a0)

    eq_eps = cfg.eq_eps if cfg.eq_eps is not None else _default_eq_eps(float(np.sum(a0 * a0)))

    # equilibria short-circuit before validation: they do not move, and they
    # typically carry the zero entries validation rejects
    if equilibrium_residual(a0) <= eq_eps:
        return FlowTrajectory(
            times=np.zeros(1),
            states=a0[None, :].copy(),
            f_values=lyapunov_f_offdiag(a0[None, :]),
            k_norms=residual_norms(a0[None, :]),
            spec_drift=np.zeros(1),
            status="stationary_input",
            config=cfg,
            eq_eps=eq_eps,
        )

    scale = float(np.sqrt(2.0 * np.sum(a0 * a0)))
    ref_eigs = batch_eigenvalues_zero_diag(a0[None, :], _eig_tol(scale))[0]

    if validate:
        validate_initial_state(a0)
        gaps = np.diff(ref_eigs)
        if gaps.size and gaps.min() < default_gap_tol(scale):
            raise ValidationFailure(
                f"eigenvalue gap {gaps.min():.3e} below "
                f"{default_gap_tol(scale):.3e}: not a Jacobi matrix"
            )

    slope = rhs_componentwise(a0)
    h0 = _initial_step(cfg, float(np.abs(slope).max(initial=0.0)),
                       float(np.abs(a0).max(initial=0.0)))
    dt_min = cfg.dt_min if cfg.dt_min is not None else 1e-14 * cfg.t_max

    times, states, count, status, _, _ = kernels.integrate_offdiag_kernel(
        a0,
        cfg.t_max,
        h0,
        cfg.method == "rk4",
        cfg.abs_tol,
        cfg.rel_tol,
        eq_eps,
        dt_min,
        cfg.record_stride,
        cfg.max_rows,
    )
    if status == kernels.STATUS_UNDERFLOW:
        raise StepUnderflow(
            f"adaptive step fell below dt_min={dt_min:.3e}; "
            "loosen tolerances or raise dt_min"
        )

    times = times[:count].copy()
    states = states[:count].copy()
    eigs = batch_eigenvalues_zero_diag(states, _eig_tol(scale))
    drift = np.abs(eigs - ref_eigs[None, :]).max(axis=1)
    drift[0] = 0.0

    return FlowTrajectory(
        times=times,
        states=states,
        f_values=lyapunov_f_offdiag(states),
        k_norms=residual_norms(states),
        spec_drift=drift,
        status=_STATUS_NAMES[status],
        config=cfg,
        eq_eps=eq_eps,
    )


def block_structure(H: np.ndarray, threshold: float) -> list:
    """Contiguous diagonal block sizes of H after thresholding couplings."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    sizes = []
    start = 0
    for i in range(n - 1):
        if np.abs(H[: i + 1, i + 1 :]).max() <= threshold:
            sizes.append(i + 1 - start)
            start = i + 1
    sizes.append(n - start)
    return sizes


def integrate_dense(H0, cfg: IntegratorConfig | None = None) -> DenseTrajectory:
    """Integrate the dense double-bracket flow on a full symmetric matrix.

    Experimental: for general symmetric initial conditions only isospectrality
    and Lyapunov monotonicity are guaranteed; the block-diagonal limit is
    reported via final_blocks, not asserted.
    """
    cfg = (cfg or IntegratorConfig()).validated()
    H0 = np.asarray(H0, dtype=np.float64)
    if H0.ndim != 2 or H0.shape[0] != H0.shape[1]:
        raise ValidationFailure(f"expected a square matrix, got shape {H0.shape}")
    if not np.all(np.isfinite(H0)):
        raise ValidationFailure("matrix entries must be finite")
    sym_defect = float(np.abs(H0 - H0.T).max())
    if sym_defect > 1e-12 * (1.0 + float(np.abs(H0).max())):
        raise ValidationFailure(f"matrix is not symmetric (defect {sym_defect:.3e})")
    H0 = 0.5 * (H0 + H0.T)
    n = H0.shape[0]

    sq_norm = float(np.sum(H0 * H0))
    eq_eps = cfg.eq_eps if cfg.eq_eps is not None else _default_eq_eps(0.5 * sq_norm)
    ref_eigs = np.linalg.eigvalsh(H0)
    k0 = float(np.linalg.norm(commutator(H0, map_N(H0))))

    if k0 <= eq_eps:
        traj_states = H0[None, :, :].copy()
        return DenseTrajectory(
            times=np.zeros(1),
            states=traj_states,
            f_values=_dense_f(traj_states),
            k_norms=np.array([k0]),
            spec_drift=np.zeros(1),
            status="stationary_input",
            config=cfg,
            eq_eps=eq_eps,
            final_blocks=block_structure(H0, 1e-6 * (1.0 + float(np.abs(H0).max()))),
        )

    slope = rhs_matrix(H0)
    h0 = _initial_step(cfg, float(np.abs(slope).max()), float(np.abs(H0).max()))
    dt_min = cfg.dt_min if cfg.dt_min is not None else 1e-14 * cfg.t_max

    times, states, count, status, _, _ = kernels.integrate_dense_kernel(
        H0,
        cfg.t_max,
        h0,
        cfg.method == "rk4",
        cfg.abs_tol,
        cfg.rel_tol,
        eq_eps,
        dt_min,
        cfg.record_stride,
        cfg.max_rows,
    )
    if status == kernels.STATUS_UNDERFLOW:
        raise StepUnderflow(
            f"adaptive step fell below dt_min={dt_min:.3e}; "
            "loosen tolerances or raise dt_min"
        )

    times = times[:count].copy()
    states = states[:count].copy()
    eigs = np.linalg.eigvalsh(states)
    drift = np.abs(eigs - ref_eigs[None, :]).max(axis=1)
    drift[0] = 0.0

    k_norms = np.empty(count)
    for i in range(count):
        k_norms[i] = float(np.linalg.norm(commutator(states[i], map_N(states[i]))))

    return DenseTrajectory(
        times=times,
        states=states,
        f_values=_dense_f(states),
        k_norms=k_norms,
        spec_drift=drift,
        status=_STATUS_NAMES[status],
        config=cfg,
        eq_eps=eq_eps,
        final_blocks=block_structure(
            states[-1], 1e-6 * (1.0 + float(np.abs(H0).max()))
        ),
    )


def _dense_f(states: np.ndarray) -> np.ndarray:
    """Lyapunov values for a batch of dense symmetric states (m, n, n)."""
    m, n, _ = states.shape
    coeff = np.arange(n - 1, dtype=np.float64) - 1.0
    sd = np.diagonal(states, offset=1, axis1=1, axis2=2)
    nsq = 2.0 * np.sum((coeff * sd) ** 2, axis=1)
    hn_cross = 2.0 * np.sum(coeff * sd * sd, axis=1)  # tr(N(H) H)
    hsq = np.sum(states * states, axis=(1, 2))
    return -0.25 * (hsq - 2.0 * hn_cross + nsq) + 0.25 * nsq


def detect_convergence(traj, eq_eps: float, window: int = 1) -> bool:
    """True iff the last ``window`` samples all have k_norm <= eq_eps."""
    if window < 1:
        raise ValueError("window must be at least 1")
    k = np.asarray(traj.k_norms)
    if k.size < window:
        return False
    return bool(np.all(k[-window:] <= eq_eps))
