"""Thermal-equilibrium sensitivity: QFI of fully thermalized probes, the
optimal-spectrum solver, and the analytic certificate that the optimum is a
true maximum of the energy variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import SymmetricMatrix, central_diff, eigenvalues_symmetric, find_root
from .spectra import (
    EffectiveTwoLevelSpectrum,
    Spectrum,
    energy_variance,
    mean_energy,
    thermalize,
)


class DimensionTooSmall(ValueError):
    """Certificate machinery needs at least a two-level probe."""


@dataclass(frozen=True)
class QfiValue:
    """Quantum Fisher information of a probe state w.r.t. temperature.

    value carries units of 1/temperature^2; the lower bound on any unbiased
    estimator's standard deviation over nu interrogations is 1/sqrt(nu*value).
    """

    value: float
    temperature: float
    probe: str

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError(f"QFI must be nonnegative, got {self.value}")


@dataclass(frozen=True)
class OptimalGapResult:
    """Solution of the optimal-gap condition e^x = ((n-n0)/n0)(x+2)/(x-2)."""

    x_star: float
    gap: float
    n: int
    n0: int
    qfi_at_optimum: float
    residual: float


@dataclass(frozen=True)
class HessianCertificate:
    """Variance Hessian at the optimal spectrum plus its analytic spectrum.

    Negative semidefiniteness with a single zero mode (the uniform energy
    shift) certifies the stationary spectrum as a maximum.
    """

    dimension: int
    temperature: float
    x_star: float
    block_entries: tuple  # (a, b, c, d): ground diag, excited diag, ground-excited, excited-excited
    hessian: SymmetricMatrix
    eigenvalues: tuple
    analytic_eigenvalues: tuple
    eigenvalue_error: float
    zero_mode_residual: float

    @property
    def certifies_maximum(self):
        evs = np.array(self.eigenvalues)
        tol = 1e-8 * max(1.0, float(np.abs(evs).max()))
        return bool(evs.max() <= tol and np.sum(np.abs(evs) <= tol) == 1)


def qfi_thermal(ensemble):
    """Equilibrium QFI, variance over T^4 (equivalently heat capacity over T^2)."""
    t = ensemble.temperature
    return QfiValue(value=energy_variance(ensemble) / t**4, temperature=t, probe="thermal-spectrum")


def qfi_effective_two_level(x, n, gap):
    """Closed-form QFI of an n-level probe with a single ground level and an
    (n-1)-fold degenerate excited level at ``gap``, evaluated at x = gap/T.

    Written with decaying exponentials so large x cannot overflow.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    emx = math.exp(-x)
    return x**4 * emx * (n - 1) / (gap**2 * ((n - 1) * emx + 1.0) ** 2)


def thermal_population_family(spectrum):
    """Map a temperature to the Gibbs populations of ``spectrum``."""

    def family(temperature):
        return thermalize(spectrum, temperature).population_array()

    return family


def _qubit_fidelity(r1, r2):
    # Uhlmann fidelity of two qubits from their Bloch vectors.
    p1 = max(0.0, 1.0 - float(np.dot(r1, r1)))
    p2 = max(0.0, 1.0 - float(np.dot(r2, r2)))
    return 0.5 * (1.0 + float(np.dot(r1, r2)) + math.sqrt(p1 * p2))


def qfi_bures_oracle(probe, temperature, step=None):
    """QFI from the curvature of the Uhlmann fidelity across the family.

    ``probe`` is either a Spectrum (its thermal family is used) or a callable
    mapping temperature to a state: a population vector, a QubitState, or a
    CovarianceMatrix. The curvature -2 d^2F/d delta^2 at delta = 0 is taken by
    Richardson central differences with step ``step`` (default 1e-4 * T).

    For commuting families the fidelity is the squared Bhattacharyya overlap;
    its deficit from 1 is accumulated at the sqrt-population level, which
    avoids the roundoff floor of differencing fidelities that all equal
    1 - O(delta^2).
    """
    if isinstance(probe, Spectrum):
        family = thermal_population_family(probe)
    elif callable(probe):
        family = probe
    else:
        raise TypeError(f"probe must be a Spectrum or a temperature -> state callable, got {type(probe)}")
    h = step if step is not None else 1e-4 * temperature
    state0 = family(temperature)

    from .gaussian import CovarianceMatrix, fidelity_gaussian  # deferred: gaussian imports QfiValue
    from .dynamics import QubitState

    if isinstance(state0, QubitState):
        r0 = np.array(state0.bloch)

        def fid(delta):
            return _qubit_fidelity(r0, np.array(family(temperature + delta).bloch))

        value = -2.0 * central_diff(fid, 0.0, h, order=2)
        label = "bures-oracle-qubit"
    elif isinstance(state0, CovarianceMatrix):
        def fid(delta):
            return fidelity_gaussian(family(temperature), family(temperature + delta))

        value = -2.0 * central_diff(fid, 0.0, h, order=2)
        label = "bures-oracle-gaussian"
    else:
        sqrt0 = np.sqrt(np.asarray(state0, dtype=float))

        def hellinger(delta):
            diff = sqrt0 - np.sqrt(np.asarray(family(temperature + delta), dtype=float))
            return 0.5 * float(np.dot(diff, diff))

        # F = (1 - D)^2 with D(0) = D'(0) = 0, hence -2 F''(0) = 4 D''(0)
        value = 4.0 * central_diff(hellinger, 0.0, h, order=2)
        label = "bures-oracle-populations"
    return QfiValue(value=max(float(value), 0.0), temperature=temperature, probe=label)


def stationarity_residual(spectrum, temperature):
    """Pairwise stationarity conditions of the energy variance.

    For every level pair i < j returns (e_i - e_j)(e_i + e_j - 2(<H> + T));
    all entries vanish exactly at spectra that are stationary points of the
    variance, i.e. effective two-level configurations at the critical gap.
    """
    ens = thermalize(spectrum, temperature)
    mu = mean_energy(ens)
    eps = spectrum.energies
    out = []
    for i in range(len(eps)):
        for j in range(i + 1, len(eps)):
            out.append((eps[i] - eps[j]) * (eps[i] + eps[j] - 2.0 * (mu + temperature)))
    return out


def optimal_gap(n, n0, temperature, tol=1e-12):
    """Solve for the variance-maximizing gap of an (n, n0) two-level probe.

    The root of e^x = ((n-n0)/n0)(x+2)/(x-2) is bracketed in
    (2, 2 + ln(4(n-n0)/n0) + 10) and solved on the rescaled form
    (x-2) - r (x+2) e^{-x}, which stays well conditioned; two Newton polish
    steps push the residual of the original form below 1e-10.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 1 <= n0 <= n - 1:
        raise ValueError(f"ground degeneracy n0={n0} must lie in [1, {n - 1}]")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    r = (n - n0) / n0

    def f(x):
        return (x - 2.0) - r * (x + 2.0) * math.exp(-x)

    lo = 2.0 + 1e-9
    hi = 2.0 + math.log(4.0 * r) + 10.0
    x = find_root(f, lo, hi, tol=tol).root
    for _ in range(2):
        slope = 1.0 + r * (x + 1.0) * math.exp(-x)
        x -= f(x) / slope
    residual = math.exp(x) - r * (x + 2.0) / (x - 2.0)
    if abs(residual) > 1e-10:
        raise RuntimeError(f"gap equation residual {residual:g} exceeds 1e-10 for n={n}, n0={n0}")
    gap = temperature * x
    ens = thermalize(EffectiveTwoLevelSpectrum(gap=gap, n=n, n0=n0).expand(), temperature)
    qfi = energy_variance(ens) / temperature**4
    return OptimalGapResult(x_star=x, gap=gap, n=n, n0=n0, qfi_at_optimum=qfi, residual=residual)


def _variance_hessian_diag(eps_i, t, z, h1, h2):
    pref = (math.exp(-eps_i / t) / (z * t)) ** 2
    return pref * (
        2.0 * (h2 - 3.0 * h1 * h1 - 4.0 * t * h1 - t * t)
        + 8.0 * (t + h1) * eps_i
        - 4.0 * eps_i * eps_i
        + z * math.exp(eps_i / t) * (
            2.0 * t * t + 2.0 * h1 * (2.0 * t + h1) - h2
            - 2.0 * (2.0 * t + h1) * eps_i + eps_i * eps_i
        )
    )


def _variance_hessian_offdiag(eps_i, eps_j, t, z, h1, h2):
    pref = math.exp(-(eps_i + eps_j) / t) / (t * t * z * z)
    s = eps_i + eps_j
    return pref * (4.0 * h1 * (s - 2.0 * t) + s * (4.0 * t - s) + 2.0 * h2 - 6.0 * h1 * h1 - 2.0 * t * t)


def hessian_shift_eigenvalue(n, x):
    """Eigenvalue on excited-sector differences, (n-2)-fold degenerate."""
    return -(x - 2.0) / (2.0 * (n - 1))


def hessian_pair_eigenvalue(n, x):
    """Nonzero eigenvalue of the ground/excited 2x2 sector.

    The factor n is forced by the zero row sums of the block matrix: the
    sector trace is a - c and c = -a/(n-1), so the eigenvalue picks up
    n/(n-1) relative to the bare diagonal entry.
    """
    return -n * (x * x - 4.0) / (8.0 * (n - 1))


def hessian_certificate(n, temperature=1.0):
    """Assemble and diagonalize the variance Hessian at the n0=1 optimum.

    The matrix is built from the closed-form second derivatives evaluated with
    the stationary-state substitutions Z = 2x/(2+x), <H> = T(x-2)/2 and
    <H^2> = T^2 x(x-2)/2, then checked against the analytic eigenvalue list
    {shift eigenvalue (n-2 times), pair eigenvalue, 0}.
    """
    if n < 2:
        raise DimensionTooSmall(f"certificate needs n >= 2, got {n}")
    res = optimal_gap(n, 1, temperature)
    x = res.x_star
    t = float(temperature)
    z = 2.0 * x / (2.0 + x)
    h1 = t * (x - 2.0) / 2.0
    h2 = t * t * x * (x - 2.0) / 2.0
    gap = res.gap
    a = _variance_hessian_diag(0.0, t, z, h1, h2)
    b = _variance_hessian_diag(gap, t, z, h1, h2)
    c = _variance_hessian_offdiag(0.0, gap, t, z, h1, h2)
    d = _variance_hessian_offdiag(gap, gap, t, z, h1, h2)
    dense = np.full((n, n), d)
    dense[0, 0] = a
    dense[0, 1:] = c
    dense[1:, 0] = c
    np.fill_diagonal(dense[1:, 1:], b)
    hessian = SymmetricMatrix.from_dense(dense)
    numeric = eigenvalues_symmetric(hessian)
    analytic = np.sort(np.array(
        [hessian_pair_eigenvalue(n, x), 0.0] + [hessian_shift_eigenvalue(n, x)] * (n - 2)
    ))
    return HessianCertificate(
        dimension=n,
        temperature=t,
        x_star=x,
        block_entries=(a, b, c, d),
        hessian=hessian,
        eigenvalues=tuple(float(v) for v in numeric),
        analytic_eigenvalues=tuple(float(v) for v in analytic),
        eigenvalue_error=float(np.abs(numeric - analytic).max()),
        zero_mode_residual=float(np.abs(dense.sum(axis=1)).max()),
    )


def qfi_equilibrium_scan(n_list, x_grid, gap=1.0, include_harmonic=True):
    """Equilibrium QFI curves versus temperature at fixed probe gap.

    Returns one row per (probe, grid point) as dicts with keys
    N, T, qfi, qfi_normalized. The normalized column divides each curve by its
    peak over the grid. The harmonic-oscillator curve is appended with
    N = "ho" when requested.
    """
    n_list = list(n_list)
    if not n_list and not include_harmonic:
        raise ValueError("need at least one probe series")
    x_grid = np.asarray(list(x_grid), dtype=float)
    if x_grid.size == 0 or np.any(x_grid <= 0.0):
        raise ValueError("x_grid must be nonempty and strictly positive")
    rows = []
    for n in n_list:
        values = np.array([qfi_effective_two_level(x, n, gap) for x in x_grid])
        peak = float(values.max())
        for x, v in zip(x_grid, values):
            rows.append({"N": n, "T": float(gap / x), "qfi": float(v), "qfi_normalized": float(v) / peak})
    if include_harmonic:
        from .gaussian import qfi_harmonic_equilibrium  # deferred: gaussian imports QfiValue

        values = np.array([qfi_harmonic_equilibrium(gap, gap / x).value for x in x_grid])
        peak = float(values.max())
        for x, v in zip(x_grid, values):
            rows.append({"N": "ho", "T": float(gap / x), "qfi": float(v), "qfi_normalized": float(v) / peak})
    return rows


def full_width_half_max(xs, ys):
    """Width of the region where ``ys`` exceeds half its maximum.

    Crossing points are located by linear interpolation; raises if either
    flank never drops below half maximum inside the grid.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    half = ys.max() / 2.0
    i = int(np.argmax(ys))
    left = np.nonzero(ys[:i] < half)[0]
    right = np.nonzero(ys[i:] < half)[0]
    if left.size == 0 or right.size == 0:
        raise ValueError("half maximum is not bracketed inside the grid")
    l = left[-1]
    r = i + right[0]
    x_lo = xs[l] + (half - ys[l]) * (xs[l + 1] - xs[l]) / (ys[l + 1] - ys[l])
    x_hi = xs[r - 1] + (half - ys[r - 1]) * (xs[r] - xs[r - 1]) / (ys[r] - ys[r - 1])
    return x_hi - x_lo
