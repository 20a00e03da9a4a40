"""Tridiagonal eigensolver, spectrum classification, limit prediction, equilibria.

The eigensolver is Sturm-sequence bisection with Gershgorin bracketing. It
never touches the flow, so it serves as an independent oracle for everything
the integrator produces.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DegenerateMagnitudes,
    DegenerateSpectrum,
    DimensionMismatch,
    EquilibriumInput,
    NonConvergence,
    PairingViolation,
    ZeroEntry,
)
from .jacobi import as_offdiag, equilibrium_residual

__all__ = [
    "Spectrum",
    "EquilibriumSet",
    "eigenvalues_tridiagonal",
    "spectrum_zero_diag",
    "make_spectrum",
    "pairing_defect",
    "predict_limit",
    "enumerate_equilibria",
    "quadrature_nodes",
    "default_pair_tol",
    "default_gap_tol",
]

_MAX_BISECT = 128


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues with (+/-)-pairing metadata."""

    values: np.ndarray  # ascending
    gap_min: float  # smallest consecutive gap (inf for n <= 1)
    paired: bool  # values form {+/- lambda} pairs (plus one 0 for odd n)
    pair_tol: float  # tolerance used for the pairing decision

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def positive_magnitudes(self) -> np.ndarray:
        """The floor(n/2) positive magnitudes, ascending. Meaningful when paired."""
        return self.values[self.values.size - self.values.size // 2 :]


@dataclass(frozen=True)
class EquilibriumSet:
    """Flow equilibria sharing a given spectrum."""

    points: list  # list of off-diagonal vectors
    count_formula: int  # permutation count (even: (n/2)!, odd: ((n+1)/2)((n-1)/2)!)
    count_with_signs: int  # full count including sign patterns


def default_pair_tol(scale: float) -> float:
    return 1e-9 * (1.0 + scale)


def default_gap_tol(scale: float) -> float:
    return 1e-8 * (1.0 + scale)


def pairing_defect(values: np.ndarray) -> float:
    """Deviation of a sorted spectrum from exact {+/- lambda} (+0) symmetry."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n == 0:
        return 0.0
    half = n // 2
    defect = float(np.abs(v[:half] + v[::-1][:half]).max()) if half else 0.0
    if n % 2 == 1:
        defect = max(defect, abs(float(v[half])))
    return defect


def _sturm_eigenvalues(diag: np.ndarray, offdiag: np.ndarray, tol: float) -> np.ndarray:
    eigs, ok = kernels.sturm_batch(diag, offdiag[None, :], tol, _MAX_BISECT)
    if not ok:
        raise NonConvergence(
            "bisection bracket failed to shrink; Gershgorin bounds are broken"
        )
    return eigs[0]


def batch_eigenvalues_zero_diag(states: np.ndarray, tol: float) -> np.ndarray:
    """Eigenvalues for a batch of off-diagonal rows (m, n-1) -> (m, n)."""
    states = np.ascontiguousarray(np.atleast_2d(states), dtype=np.float64)
    n = states.shape[1] + 1
    eigs, ok = kernels.sturm_batch(np.zeros(n), states, tol, _MAX_BISECT)
    if not ok:
        raise NonConvergence(
            "bisection bracket failed to shrink; Gershgorin bounds are broken"
        )
    return eigs


def eigenvalues_tridiagonal(diag, offdiag, tol: float | None = None) -> Spectrum:
    """All eigenvalues of the symmetric tridiagonal matrix (diag, offdiag).

    Sturm-sequence bisection, each eigenvalue within ``tol`` of exact
    (default ``1e-12 * (1 + ||T||_F)``).
    """
    d = np.asarray(diag, dtype=np.float64).reshape(-1)
    e = np.asarray(offdiag, dtype=np.float64).reshape(-1)
    if e.size != max(d.size - 1, 0):
        raise DimensionMismatch(
            f"offdiag length {e.size} does not match diag length {d.size}"
        )
    if d.size == 0:
        raise DimensionMismatch("matrix dimension must be at least 1")
    scale = float(np.sqrt(np.sum(d * d) + 2.0 * np.sum(e * e)))
    if tol is None:
        tol = 1e-12 * (1.0 + scale)
    values = _sturm_eigenvalues(d, e, tol)
    return make_spectrum(values, pair_tol=default_pair_tol(scale))


def make_spectrum(values, pair_tol: float | None = None) -> Spectrum:
    """Build a Spectrum from raw eigenvalues, measuring gap_min and pairing."""
    v = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if pair_tol is None:
        pair_tol = default_pair_tol(float(np.abs(v).max()) if v.size else 0.0)
    gap_min = float(np.diff(v).min()) if v.size > 1 else math.inf
    paired = pairing_defect(v) <= pair_tol
    return Spectrum(values=v, gap_min=gap_min, paired=paired, pair_tol=pair_tol)


def spectrum_zero_diag(a, tol: float | None = None,
                       gap_tol: float | None = None) -> Spectrum:
    """Spectrum of the zero-diagonal Jacobi matrix encoded by ``a``.

    The (+/-)-pairing is structural for zero-diagonal matrices, so a pairing
    defect beyond pair_tol raises PairingViolation (eigensolver fault).
    DegenerateSpectrum flags eigenvalue gaps below gap_tol: the input is not
    a Jacobi matrix, which requires distinct eigenvalues.
    """
    a = as_offdiag(a)
    n = a.size + 1
    scale = float(np.sqrt(2.0 * np.sum(a * a)))
    spec = eigenvalues_tridiagonal(np.zeros(n), a, tol=tol)
    if not spec.paired:
        raise PairingViolation(
            f"pairing defect {pairing_defect(spec.values):.3e} exceeds "
            f"pair_tol {spec.pair_tol:.3e} for a zero-diagonal input"
        )
    if gap_tol is None:
        gap_tol = default_gap_tol(scale)
    if spec.gap_min < gap_tol:
        raise DegenerateSpectrum(
            f"smallest eigenvalue gap {spec.gap_min:.3e} is below "
            f"gap_tol {gap_tol:.3e}; eigenvalues must be pairwise distinct"
        )
    return spec


def _distinct_magnitudes(spec: Spectrum, gap_tol: float) -> np.ndarray:
    mags = spec.positive_magnitudes
    if mags.size and mags[0] <= gap_tol:
        raise DegenerateMagnitudes(
            f"smallest magnitude {mags[0]:.3e} is not separated from zero"
        )
    if mags.size > 1 and np.diff(mags).min() <= gap_tol:
        raise DegenerateMagnitudes(
            f"magnitude gap {np.diff(mags).min():.3e} is below gap_tol {gap_tol:.3e}"
        )
    return mags


def predict_limit(a0, spec: Spectrum, gap_tol: float | None = None) -> np.ndarray:
    """Asymptotic state of the flow from a0, built from spectrum magnitudes.

    For even n the odd-indexed slots (1-based 1, 3, ...) carry the magnitudes
    ascending, each with the sign of the matching entry of a0; the remaining
    slots are zero. For odd n the pattern shifts right by one and the leading
    slot is zero. Requires a nonzero, non-equilibrium a0 and strictly
    separated magnitudes.
    """
    a0 = as_offdiag(a0)
    n = a0.size + 1
    if spec.n != n:
        raise DimensionMismatch(f"spectrum has {spec.n} values, state implies {n}")
    if equilibrium_residual(a0) == 0.0:
        raise EquilibriumInput("input is already an equilibrium; it does not move")
    if a0.size and np.any(a0 == 0.0):
        idx = int(np.flatnonzero(a0 == 0.0)[0]) + 1
        raise ZeroEntry(f"a_{idx} is zero; the limit sign sgn(a_{idx}) is undefined")
    if not spec.paired:
        raise PairingViolation("spectrum is not (+/-)-paired")
    if gap_tol is None:
        gap_tol = default_gap_tol(float(np.sqrt(2.0 * np.sum(a0 * a0))))
    mags = _distinct_magnitudes(spec, gap_tol)

    out = np.zeros(n - 1)
    slots = np.arange(0, n - 1, 2) if n % 2 == 0 else np.arange(1, n - 1, 2)
    out[slots] = np.sign(a0[slots]) * mags
    return out


def enumerate_equilibria(spec: Spectrum, include_signs: bool = True,
                         gap_tol: float | None = None) -> EquilibriumSet:
    """All flow equilibria with the given paired spectrum.

    Equilibria have no two consecutive nonzero entries. For even n that means
    magnitudes permuted over the odd-indexed slots; for odd n there is
    additionally a free placement of the single 1x1 zero block among the
    (n+1)/2 block positions. count_formula counts permutations (and zero-block
    placements); count_with_signs also counts the 2^(n//2) sign patterns.
    """
    if not spec.paired:
        raise PairingViolation("spectrum is not (+/-)-paired")
    if gap_tol is None:
        gap_tol = default_gap_tol(float(np.abs(spec.values).max()) if spec.n else 0.0)
    mags = _distinct_magnitudes(spec, gap_tol)
    n = spec.n
    m = mags.size

    def build(blocks):
        a = np.zeros(n - 1)
        pos = 0
        for v in blocks:
            if v is None:
                pos += 1
            else:
                a[pos] = v
                pos += 2
        return a

    arrangements = []
    if n % 2 == 0:
        for perm in itertools.permutations(mags):
            arrangements.append(list(perm))
        count_formula = math.factorial(m)
    else:
        for zero_pos in range(m + 1):
            for perm in itertools.permutations(mags):
                blocks = list(perm)
                blocks.insert(zero_pos, None)
                arrangements.append(blocks)
        count_formula = (m + 1) * math.factorial(m)

    points = []
    if include_signs:
        for blocks in arrangements:
            for signs in itertools.product((1.0, -1.0), repeat=m):
                it = iter(signs)
                signed = [v if v is None else v * next(it) for v in blocks]
                points.append(build(signed))
    else:
        points = [build(blocks) for blocks in arrangements]

    return EquilibriumSet(
        points=points,
        count_formula=count_formula,
        count_with_signs=count_formula * 2**m,
    )


def quadrature_nodes(a, method: str = "direct", tol: float = 1e-8,
                     cfg=None) -> np.ndarray:
    """Nodes of the n-point quadrature rule attached to recurrence coefficients a.

    The nodes are the eigenvalues of the zero-diagonal Jacobi matrix built
    from a. method="direct" computes them with the Sturm eigensolver;
    method="flow" integrates the sorting flow and reads them off the limit
    as {+/- |entries|} (plus 0 for odd n). The two agree within tol.
    """
    a = as_offdiag(a)
    n = a.size + 1
    if method == "direct":
        scale = float(np.sqrt(2.0 * np.sum(a * a)))
        eig_tol = min(tol / 8.0, 1e-10 * (1.0 + scale))
        return eigenvalues_tridiagonal(np.zeros(n), a, tol=eig_tol).values
    if method == "flow":
        from .flow import IntegratorConfig, integrate

        if cfg is None:
            cfg = IntegratorConfig(t_max=100.0)
        traj = integrate(a, cfg)
        final = traj.states[-1]
        slots = np.arange(0, n - 1, 2) if n % 2 == 0 else np.arange(1, n - 1, 2)
        mags = np.sort(np.abs(final[slots]))
        parts = [-mags[::-1], mags]
        if n % 2 == 1:
            parts.insert(1, np.zeros(1))
        return np.concatenate(parts)
    raise ValueError(f"unknown method {method!r}; expected 'direct' or 'flow'")
