"""Single-mode Gaussian probes: covariance matrices in the vacuum = identity
convention, Uhlmann fidelity from determinant invariants, the closed-form
equilibrium QFI of a harmonic probe, and dissipative phase-space evolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import NegativeTime
from .equilibrium import QfiValue
from .numerics import central_diff


class UnphysicalCovariance(ValueError):
    """Covariance matrix violates the uncertainty bound det >= 1."""


@dataclass(frozen=True)
class CovarianceMatrix:
    """2x2 second-moment matrix of a single mode, vacuum normalized to identity."""

    xx: float
    xp: float
    pp: float

    def __post_init__(self):
        vals = (self.xx, self.xp, self.pp)
        if not all(math.isfinite(v) for v in vals):
            raise UnphysicalCovariance(f"entries must be finite, got {vals}")
        if self.xx <= 0.0 or self.pp <= 0.0 or self.determinant < 1.0 - 1e-10:
            raise UnphysicalCovariance(
                f"matrix [[{self.xx}, {self.xp}], [{self.xp}, {self.pp}]] is below the vacuum limit"
            )

    @property
    def determinant(self):
        return self.xx * self.pp - self.xp * self.xp

    @property
    def is_isotropic(self):
        return self.xp == 0.0 and abs(self.xx - self.pp) <= 1e-14 * abs(self.xx)

    def matrix(self):
        return np.array([[self.xx, self.xp], [self.xp, self.pp]])

    @classmethod
    def from_matrix(cls, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2) or abs(a[0, 1] - a[1, 0]) > 1e-12 * max(1.0, abs(a[0, 1])):
            raise ValueError(f"need a symmetric 2x2 matrix, got {a!r}")
        return cls(xx=float(a[0, 0]), xp=float(a[0, 1]), pp=float(a[1, 1]))

    def to_json(self):
        return json.dumps([[self.xx, self.xp], [self.xp, self.pp]])

    @classmethod
    def from_json(cls, text):
        return cls.from_matrix(json.loads(text))


@dataclass(frozen=True)
class GaussianProbe:
    """Undisplaced single-mode probe: covariance plus the mode frequency.

    First moments are fixed at zero, so the covariance is a complete
    description of the state.
    """

    covariance: CovarianceMatrix
    frequency: float

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")


def vacuum_covariance():
    return CovarianceMatrix(1.0, 0.0, 1.0)


def thermal_covariance(gap, temperature):
    """coth(gap / 2T) times the identity."""
    if gap <= 0 or temperature <= 0:
        raise ValueError("gap and temperature must be positive")
    c = 1.0 / math.tanh(gap / (2.0 * temperature))
    return CovarianceMatrix(c, 0.0, c)


def squeezed_covariance(squeeze):
    """diag(s, 1/s), a pure quadrature-squeezed state."""
    if squeeze <= 0:
        raise ValueError(f"squeeze must be positive, got {squeeze}")
    return CovarianceMatrix(squeeze, 0.0, 1.0 / squeeze)


def thermal_covariance_family(gap):
    """Map a temperature to the thermal covariance at fixed mode frequency."""

    def family(temperature):
        return thermal_covariance(gap, temperature)

    return family


def fidelity_gaussian(sigma1, sigma2):
    """Uhlmann fidelity of two undisplaced single-mode Gaussian states.

    With Delta = det(sigma1 + sigma2) and Lambda = (det sigma1 - 1)(det sigma2 - 1):

        F = 2 / (sqrt(Delta + Lambda) - sqrt(Lambda))

    evaluated in the rationalized form 2 (sqrt(Delta + Lambda) + sqrt(Lambda))
    / Delta, which avoids the subtraction. Lambda is clamped at zero to absorb
    roundoff from near-pure inputs, and the result is capped at 1.
    """
    m1, m2 = sigma1.matrix(), sigma2.matrix()
    delta = float(np.linalg.det(m1 + m2))
    lam = (sigma1.determinant - 1.0) * (sigma2.determinant - 1.0)
    lam = max(lam, 0.0)
    value = 2.0 * (math.sqrt(delta + lam) + math.sqrt(lam)) / delta
    return min(value, 1.0)


def qfi_harmonic_equilibrium(gap, temperature):
    """Equilibrium QFI of a thermalized harmonic probe.

    Literal closed form gap^2 / (4 T^4) * csch^2(gap / 2T).
    """
    if gap <= 0 or temperature <= 0:
        raise ValueError("gap and temperature must be positive")
    half = gap / (2.0 * temperature)
    if half > 700.0:  # csch underflows; the sensitivity is zero to double precision
        value = 0.0
    else:
        value = gap**2 / (4.0 * temperature**4) / math.sinh(half) ** 2
    return QfiValue(value=value, temperature=temperature, probe="harmonic-equilibrium")


def evolve_covariance(sigma0, model, t):
    """Relax a covariance matrix toward the thermal one for time ``t``.

    The second moments interpolate exponentially at the net phase-space
    damping rate (downward minus upward rate), which for this coupling is
    coupling * gap^3.
    """
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    f = math.exp(-model.phase_space_damping * t)
    c = 1.0 / math.tanh(model.ratio / 2.0)
    return CovarianceMatrix(
        xx=f * sigma0.xx + (1.0 - f) * c,
        xp=f * sigma0.xp,
        pp=f * sigma0.pp + (1.0 - f) * c,
    )


def _thermal_weight(c):
    # Boltzmann factor of the occupation distribution for an isotropic matrix c*I
    return (c - 1.0) / (c + 1.0)


def _isotropic_fidelity_deficit(c1, c2):
    """1 - F for isotropic covariances c1*I, c2*I, accumulated without
    cancellation: (sqrt(w1) - sqrt(w2))^2 / (1 - sqrt(w1 w2))^2 in terms of
    the thermal weights w_i."""
    s1 = math.sqrt(_thermal_weight(c1))
    s2 = math.sqrt(_thermal_weight(c2))
    return (s1 - s2) ** 2 / (1.0 - s1 * s2) ** 2


def qfi_harmonic_transient(sigma0, model, dt, freeze_rate=True, step=None):
    """QFI of a Gaussian probe after thermal contact of length ``dt``.

    The fidelity curvature across the temperature family is differenced with
    step ``step`` (default 1e-4 * T). ``freeze_rate`` pins the damping rate at
    the working temperature; because the net damping carries no temperature
    dependence for this coupling, the frozen and full variants coincide and
    the flag only selects which code path evaluates the rate.

    Isotropic preparations (ground, thermal) use a cancellation-free deficit
    form of the fidelity; anisotropic ones difference fidelity_gaussian
    directly.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t0 = model.temperature
    h = step if step is not None else 1e-4 * t0
    frozen_rate = model.phase_space_damping

    if sigma0.is_isotropic:
        s0 = sigma0.xx

        def scale_at(temp):
            m = model.at_temperature(temp)
            rate = frozen_rate if freeze_rate else m.phase_space_damping
            f = math.exp(-rate * dt)
            return f * s0 + (1.0 - f) / math.tanh(m.ratio / 2.0)

        base = scale_at(t0)

        def deficit(delta):
            return _isotropic_fidelity_deficit(base, scale_at(t0 + delta))

        # F = 1 - deficit with deficit(0) = deficit'(0) = 0, so QFI = 2 deficit''(0)
        value = 2.0 * central_diff(deficit, 0.0, h, order=2)
    else:
        def cov_at(temp):
            m = model.at_temperature(temp)
            rate = frozen_rate if freeze_rate else m.phase_space_damping
            f = math.exp(-rate * dt)
            c = 1.0 / math.tanh(m.ratio / 2.0)
            return CovarianceMatrix(
                xx=f * sigma0.xx + (1.0 - f) * c,
                xp=f * sigma0.xp,
                pp=f * sigma0.pp + (1.0 - f) * c,
            )

        base = cov_at(t0)

        def fid(delta):
            return fidelity_gaussian(base, cov_at(t0 + delta))

        value = -2.0 * central_diff(fid, 0.0, h, order=2)
    return QfiValue(value=max(float(value), 0.0), temperature=t0, probe="harmonic-transient")
