"""Dissipative probe dynamics for partly thermalized thermometry: relaxation
toward the Gibbs state under a thermal generator, transient QFI, the
sensitivity-per-time figure of merit, and its short-interrogation limit.

Level convention for qubits: the Hamiltonian is (gap/2) sigma_z with the
excited state along +z, so the ground preparation is bloch = (0, 0, -1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import QfiValue
from .numerics import central_diff, find_root
from .spectra import EffectiveTwoLevelSpectrum


class NegativeTime(ValueError):
    """Evolution times must be nonnegative."""


class SingularState(ArithmeticError):
    """Bloch-vector QFI is ill conditioned at this pure state."""


@dataclass(frozen=True)
class DissipationModel:
    """Probe-sample contact: gap, sample temperature and flat-coupling strength.

    The coupling enters through a frequency-independent spectral density, so
    the downward rate is coupling * gap^3 / (1 - e^{-gap/T}) and the upward
    rate carries the extra detailed-balance factor e^{-gap/T}.
    """

    gap: float
    temperature: float
    coupling: float

    def __post_init__(self):
        for name in ("gap", "temperature", "coupling"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def ratio(self):
        return self.gap / self.temperature

    @property
    def decay_rate(self):
        return self.coupling * self.gap**3 / -math.expm1(-self.ratio)

    @property
    def excitation_rate(self):
        return self.decay_rate * math.exp(-self.ratio)

    @property
    def relaxation_time(self):
        """1 / (coupling * gap^3 * coth(ratio/2)), the qubit population timescale."""
        return math.tanh(self.ratio / 2.0) / (self.coupling * self.gap**3)

    @property
    def phase_space_damping(self):
        """Net damping of second moments, decay_rate - excitation_rate.

        The detailed-balance factors cancel, leaving coupling * gap^3 with no
        temperature dependence.
        """
        return self.coupling * self.gap**3

    def at_temperature(self, temperature):
        """Same probe and coupling in contact with a sample at ``temperature``."""
        return DissipationModel(gap=self.gap, temperature=temperature, coupling=self.coupling)

    def to_json(self):
        return json.dumps({"gap": self.gap, "temperature": self.temperature, "gamma": self.coupling})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(gap=d["gap"], temperature=d["temperature"], coupling=d["gamma"])


@dataclass(frozen=True)
class QubitState:
    """Two-level state as a Bloch vector (r_x, r_y, r_z)."""

    bloch: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in self.bloch)
        object.__setattr__(self, "bloch", r)
        if len(r) != 3 or not all(math.isfinite(v) for v in r):
            raise ValueError(f"bloch must be three finite components, got {self.bloch}")
        if math.sqrt(sum(v * v for v in r)) > 1.0 + 1e-12:
            raise ValueError(f"bloch norm exceeds 1: {r}")

    @property
    def excited_population(self):
        return 0.5 * (1.0 + self.bloch[2])

    def as_array(self):
        return np.array(self.bloch)


@dataclass(frozen=True)
class DiagonalState:
    """Populations over the levels of an effective two-level ladder.

    Index 0 is the ground level; the remaining entries sit at the shared gap.
    """

    populations: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.populations)
        object.__setattr__(self, "populations", p)
        if len(p) < 2:
            raise ValueError(f"need at least 2 levels, got {len(p)}")
        if min(p) < -1e-12:
            raise ValueError(f"negative population: {min(p)}")
        if abs(sum(p) - 1.0) > 1e-12:
            raise ValueError(f"populations sum to {sum(p)}, expected 1")

    @property
    def size(self):
        return len(self.populations)

    def as_array(self):
        return np.array(self.populations)


@dataclass(frozen=True)
class ProtocolConfig:
    """Sequential estimation protocol: total time budget, one interrogation
    duration, and the probe preparation used at the start of each round."""

    total_time: float
    interrogation_time: float
    preparation: str = "ground"

    def __post_init__(self):
        if self.interrogation_time <= 0:
            raise ValueError(f"interrogation_time must be positive, got {self.interrogation_time}")
        if self.total_time < self.interrogation_time:
            raise ValueError("total_time must allow at least one interrogation")
        parse_preparation_token(self.preparation)  # validates the token

    @property
    def interrogations(self):
        return self.total_time / self.interrogation_time


@dataclass(frozen=True)
class ProtocolOptimum:
    """Result of maximizing QFI per unit interrogation time over a grid."""

    interrogation_time: float
    rate: float
    short_time_supremum: bool
    short_time_limit: float | None


def ground_qubit():
    return QubitState((0.0, 0.0, -1.0))


def plus_qubit():
    """Maximally coherent preparation, equal populations with full coherence."""
    return QubitState((1.0, 0.0, 0.0))


def gibbs_qubit(ratio):
    return QubitState((0.0, 0.0, -math.tanh(ratio / 2.0)))


def ground_diagonal(n):
    return DiagonalState((1.0,) + (0.0,) * (n - 1))


def gibbs_diagonal(n, ratio):
    """Gibbs populations of an n-level ladder with (n-1)-fold degenerate gap."""
    w = math.exp(-ratio)
    z = 1.0 + (n - 1) * w
    return DiagonalState((1.0 / z,) + (w / z,) * (n - 1))


def rate_matrix(n, model):
    """Population generator L with dp/dt = L p for the n-level ladder.

    Each excited level exchanges population with the ground level only, all at
    the same transition frequency. The Gibbs vector is a null vector of L.
    """
    down = model.decay_rate
    up = model.excitation_rate
    gen = np.zeros((n, n))
    gen[0, 0] = -(n - 1) * up
    gen[0, 1:] = down
    gen[1:, 0] = up
    np.fill_diagonal(gen[1:, 1:], -down)
    return gen


def evolve_qubit(state, model, t):
    """Relax a qubit toward the Gibbs state for time ``t``.

    Populations relax at rate decay_rate * (1 + e^{-ratio}); coherences decay
    at half that rate and precess at the gap frequency (the free evolution is
    undone nowhere, i.e. the returned state lives in the lab frame).
    """
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    x = model.ratio
    tau = model.relaxation_time
    rx, ry, rz = state.bloch
    rz_eq = -math.tanh(x / 2.0)
    rz_t = rz_eq + (rz - rz_eq) * math.exp(-t / tau)
    envelope = math.exp(-t / (2.0 * tau))
    phase = model.gap * t
    c, s = math.cos(phase), math.sin(phase)
    rx_t = envelope * (rx * c - ry * s)
    ry_t = envelope * (rx * s + ry * c)
    return QubitState((rx_t, ry_t, rz_t))


def evolve_nlevel(state, spectrum, model, t):
    """Relax diagonal populations of an effective two-level ladder.

    The total excited population approaches its Gibbs value at rate
    decay_rate * (1 + (n-1) e^{-ratio}); imbalances between excited levels
    decay at the bare decay_rate, so symmetric preparations stay symmetric.
    """
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    if spectrum.n0 != 1:
        raise ValueError(f"ladder dynamics assume a single ground level, got n0={spectrum.n0}")
    if spectrum.n != state.size:
        raise ValueError(f"state has {state.size} levels but spectrum has {spectrum.n}")
    if abs(spectrum.gap - model.gap) > 1e-9 * model.gap:
        raise ValueError(f"spectrum gap {spectrum.gap} does not match model gap {model.gap}")
    n = state.size
    x = model.ratio
    down = model.decay_rate
    w = math.exp(-x)
    total_rate = down * (1.0 + (n - 1) * w)
    excited_eq = (n - 1) * w / (1.0 + (n - 1) * w)
    p = state.populations
    excited0 = 1.0 - p[0]
    excited_t = excited_eq + (excited0 - excited_eq) * math.exp(-total_rate * t)
    fade = math.exp(-down * t)
    share0 = excited0 / (n - 1)
    out = [1.0 - excited_t]
    for i in range(1, n):
        out.append(excited_t / (n - 1) + (p[i] - share0) * fade)
    return DiagonalState(tuple(out))


def qfi_transient(prep, model, dt, step=None):
    """QFI of the probe state after one thermal-contact stage of length ``dt``.

    The preparation and the coupling are held fixed while the sample
    temperature is varied, so the derivative includes the temperature
    dependence of the relaxation rates as well as of the Gibbs target. The
    derivative is a Richardson central difference with step 1e-4 * T unless
    overridden.

    Diagonal preparations use the classical Fisher information of the
    populations; qubit preparations with coherence use the Bloch-vector form
    |dr|^2 + (r . dr)^2 / (1 - |r|^2).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t0 = model.temperature
    h = step if step is not None else 1e-4 * t0
    if isinstance(prep, DiagonalState):
        ladder = EffectiveTwoLevelSpectrum(gap=model.gap, n=prep.size, n0=1)

        def populations_at(temp):
            return evolve_nlevel(prep, ladder, model.at_temperature(temp), dt).as_array()

        p = populations_at(t0)
        dp = central_diff(populations_at, t0, h, order=1)
        value = float(np.sum(dp * dp / p))
        label = "transient-ladder"
    elif isinstance(prep, QubitState):
        def bloch_at(temp):
            return evolve_qubit(prep, model.at_temperature(temp), dt).as_array()

        r = bloch_at(t0)
        dr = central_diff(bloch_at, t0, h, order=1)
        flat = float(np.dot(dr, dr))
        radial = float(np.dot(r, dr))
        gap_to_surface = 1.0 - float(np.dot(r, r))
        if gap_to_surface <= 0.0:
            # outside the ball by roundoff: the radial correction is undefined
            raise SingularState(
                f"|r|^2 - 1 = {-gap_to_surface:g} >= 0; the radial correction term diverges"
            )
        if gap_to_surface < 1e-13 and radial * radial > 1e-6 * gap_to_surface * max(flat, 1e-300):
            raise SingularState(
                f"|r|^2 = 1 - ({gap_to_surface:g}) with r . dr = {radial:g}; "
                "the radial correction is ill conditioned"
            )
        value = flat + radial * radial / gap_to_surface
        label = "transient-qubit"
    else:
        raise TypeError(f"prep must be a DiagonalState or QubitState, got {type(prep)}")
    return QfiValue(value=max(value, 0.0), temperature=t0, probe=label)


def qfi_transient_closed_form_qubit(ratio, dt, tau, temperature):
    """Closed-form transient QFI of a ground-prepared qubit.

    With u = dt/tau and x = ratio:

        F(dt) = x^2 [e^x (e^u - 1) + u (1 + e^x) csch x]^2
                / [(1 + e^x)^2 (e^u - 1) (1 + e^x e^u) T^2]

    The csch x factor is the logarithmic temperature derivative of the
    relaxation rate; expm1 keeps the u << 1 regime exact.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = ratio
    u = dt / tau
    em1 = math.expm1(u)
    ex = math.exp(x)
    bracket = ex * em1 + u * (1.0 + ex) / math.sinh(x)
    value = x * x * bracket * bracket / (
        (1.0 + ex) ** 2 * em1 * (1.0 + ex * math.exp(u)) * temperature**2
    )
    return QfiValue(value=value, temperature=temperature, probe="transient-qubit-closed-form")


def ultimate_rate(n, ratio, coupling, temperature):
    """Short-interrogation limit of QFI per unit time for ground preparations.

    Equals coupling * T * (n-1) * x^5 e^{2x} / (e^x - 1)^3, written with
    decaying exponentials so large ratios cannot overflow. Linear in (n-1)
    and in the coupling.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    emx = math.exp(-ratio)
    return coupling * temperature * (n - 1) * ratio**5 * emx / (-math.expm1(-ratio)) ** 3


def optimal_interrogation_ratio(tol=1e-12):
    """Gap-to-temperature ratio maximizing the short-interrogation rate.

    Solves e^x (5 - x) = 5 + 2x on [0.1, 4.999]; the bracket excludes the
    spurious root at x = 0. The optimum is independent of the probe dimension
    because the dimension only scales the rate.
    """
    return find_root(lambda x: math.exp(x) * (5.0 - x) - (5.0 + 2.0 * x), 0.1, 4.999, tol=tol).root


def _is_ground(prep):
    if isinstance(prep, DiagonalState):
        return prep.populations[0] == 1.0
    if isinstance(prep, QubitState):
        return prep.bloch == (0.0, 0.0, -1.0)
    return False


def optimize_protocol(model, prep, dt_grid):
    """Maximize QFI per unit interrogation time over a grid of durations.

    Interior maxima are refined by golden-section search between the
    neighbors of the best grid point. When the maximum sits on the smallest
    grid point the true optimum is the dt -> 0 supremum, which is flagged and,
    for ground preparations, reported via the closed-form limit.
    """
    dts = [float(v) for v in dt_grid]
    if not dts or any(b <= a for a, b in zip(dts, dts[1:])) or dts[0] <= 0:
        raise ValueError("dt_grid must be positive and strictly ascending")

    def rate(dt):
        return qfi_transient(prep, model, dt).value / dt

    rates = [rate(dt) for dt in dts]
    best = int(np.argmax(rates))
    if best == 0:
        limit = None
        if _is_ground(prep):
            n = prep.size if isinstance(prep, DiagonalState) else 2
            limit = ultimate_rate(n, model.ratio, model.coupling, model.temperature)
        return ProtocolOptimum(
            interrogation_time=dts[0], rate=rates[0],
            short_time_supremum=True, short_time_limit=limit,
        )
    if best == len(dts) - 1:
        return ProtocolOptimum(
            interrogation_time=dts[-1], rate=rates[-1],
            short_time_supremum=False, short_time_limit=None,
        )
    lo, hi = dts[best - 1], dts[best + 1]
    inv_golden = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_golden * (b - a)
    d = a + inv_golden * (b - a)
    fc, fd = rate(c), rate(d)
    while b - a > 1e-10 * (1.0 + b):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_golden * (b - a)
            fc = rate(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_golden * (b - a)
            fd = rate(d)
    dt_star = 0.5 * (a + b)
    return ProtocolOptimum(
        interrogation_time=dt_star, rate=rate(dt_star),
        short_time_supremum=False, short_time_limit=None,
    )


def parse_preparation_token(token):
    """Validate a preparation token: ground, plus, harmonic, or thermal:<T>."""
    if token in ("ground", "plus", "harmonic"):
        return token, None
    if token.startswith("thermal:"):
        t_prep = float(token.split(":", 1)[1])
        if t_prep <= 0:
            raise ValueError(f"preparation temperature must be positive, got {t_prep}")
        return "thermal", t_prep
    raise ValueError(f"unknown preparation {token!r}; use ground, plus, harmonic or thermal:<T>")


def log_interrogation_grid(model, points=200, lo=1e-3, hi=20.0):
    """Logarithmic interrogation-time grid spanning [lo, hi] relaxation times."""
    tau = model.relaxation_time
    return np.geomspace(lo * tau, hi * tau, points)


def transient_scan(preps, n_list, model, dt_grid):
    """QFI-per-time curves for a set of preparations and probe dimensions.

    ``preps`` holds tokens: "ground" (one curve per n in ``n_list``), "plus",
    "harmonic", or "thermal:<T>" (two-level thermal preparation at temperature
    T). Returns row dicts with keys prep, N, dt, fisher_rate.
    """
    rows = []
    dts = [float(v) for v in dt_grid]
    for token in preps:
        kind, t_prep = parse_preparation_token(token)
        if kind == "ground":
            for n in n_list:
                prep = ground_diagonal(n)
                for dt in dts:
                    rows.append({"prep": "ground", "N": n, "dt": dt,
                                 "fisher_rate": qfi_transient(prep, model, dt).value / dt})
        elif kind == "thermal":
            prep = gibbs_diagonal(2, model.gap / t_prep)
            label = f"thermal-{t_prep:g}"
            for dt in dts:
                rows.append({"prep": label, "N": 2, "dt": dt,
                             "fisher_rate": qfi_transient(prep, model, dt).value / dt})
        elif kind == "plus":
            prep = plus_qubit()
            for dt in dts:
                rows.append({"prep": "plus", "N": 2, "dt": dt,
                             "fisher_rate": qfi_transient(prep, model, dt).value / dt})
        else:  # harmonic
            from .gaussian import qfi_harmonic_transient, vacuum_covariance  # deferred import

            prep_cov = vacuum_covariance()
            for dt in dts:
                rows.append({"prep": "harmonic", "N": "ho", "dt": dt,
                             "fisher_rate": qfi_harmonic_transient(prep_cov, model, dt).value / dt})
    return rows
