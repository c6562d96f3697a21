"""Shared numerical kernels: bracketed root finding, a symmetric eigensolver for
small dense matrices, a fixed-step RK4 integrator, and Richardson-refined
central differences.

Everything here is deterministic: identical inputs produce bit-identical
outputs, so results can be frozen in regression tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_EIGEN_DIMENSION = 64


class NoSignChange(ValueError):
    """The endpoints handed to find_root do not straddle a root."""


class NoConvergence(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""


class NonFiniteState(FloatingPointError):
    """An ODE state component left the finite floating-point range."""


class StepTooSmall(ValueError):
    """Finite-difference step is below the roundoff floor for this abscissa."""


@dataclass(frozen=True)
class BracketedRoot:
    """A root together with the final bracket that isolates it."""

    lo: float
    hi: float
    root: float
    residual: float


def find_root(f, lo, hi, tol, max_iter=200):
    """Find a root of ``f`` in ``[lo, hi]`` by Brent's method.

    Bisection guarantees progress; inverse-quadratic/secant steps accelerate
    convergence on smooth stretches. Succeeds only once both the bracket width
    and ``|f(root)|`` are within ``tol``.

    Raises:
        NoSignChange: if ``f(lo) * f(hi) >= 0``.
        NoConvergence: if the tolerance is not met within ``max_iter`` steps.
    """
    if not tol > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa * fb >= 0.0:
        raise NoSignChange(f"f({a:g})={fa:g} and f({b:g})={fb:g} do not bracket a root")
    c, fc = a, fa
    d = e = b - a
    converged = False
    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        # b is the best estimate, [b, c] brackets the root. The step floor is
        # purely machine precision so steep residuals can still be polished.
        tol1 = 2.0 * np.finfo(float).eps * abs(b)
        xm = 0.5 * (c - b)
        if abs(c - b) <= tol and abs(fb) <= tol:
            converged = True
            break
        if fb == 0.0:
            converged = True
            break
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += math.copysign(tol1, xm)
        fb = float(f(b))
    if not converged:
        raise NoConvergence(
            f"no root to tolerance {tol:g} within {max_iter} iterations "
            f"(bracket width {abs(c - b):g}, residual {fb:g})"
        )
    lo_out = math.nextafter(min(b, c), -math.inf)
    hi_out = math.nextafter(max(b, c), math.inf)
    return BracketedRoot(lo=lo_out, hi=hi_out, root=b, residual=fb)


@dataclass(frozen=True)
class SymmetricMatrix:
    """Real symmetric matrix with the upper triangle stored once.

    Symmetry holds by construction, so entry(i, j) == entry(j, i) exactly.
    """

    dimension: int
    upper: tuple  # row-major upper triangle, including the diagonal

    def __post_init__(self):
        n = self.dimension
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        expected = n * (n + 1) // 2
        if len(self.upper) != expected:
            raise ValueError(f"expected {expected} stored entries for dimension {n}, got {len(self.upper)}")

    @classmethod
    def from_dense(cls, a):
        """Build from a square array, reading only the upper triangle."""
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"need a square matrix, got shape {a.shape}")
        n = a.shape[0]
        upper = tuple(float(a[i, j]) for i in range(n) for j in range(i, n))
        return cls(dimension=n, upper=upper)

    def entry(self, i, j):
        if i > j:
            i, j = j, i
        n = self.dimension
        return self.upper[i * n - i * (i - 1) // 2 + (j - i)]

    def to_dense(self):
        n = self.dimension
        a = np.empty((n, n))
        k = 0
        for i in range(n):
            for j in range(i, n):
                a[i, j] = self.upper[k]
                a[j, i] = self.upper[k]
                k += 1
        return a


def eigenvalues_symmetric(m, max_sweeps=64):
    """Ascending eigenvalues of a SymmetricMatrix via cyclic Jacobi rotations.

    Intended for the small dense matrices this package produces; dimensions
    above MAX_EIGEN_DIMENSION are rejected.
    """
    if m.dimension > MAX_EIGEN_DIMENSION:
        raise ValueError(f"dimension {m.dimension} exceeds the dense-solver cap {MAX_EIGEN_DIMENSION}")
    a = m.to_dense()
    n = m.dimension
    if n == 1:
        return np.array([a[0, 0]])
    frob = float(np.linalg.norm(a))
    stop = 1e-15 * max(frob, 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, frob * frob - float(np.sum(np.diag(a) ** 2))))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= stop / n:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                cph = 1.0 / math.sqrt(t * t + 1.0)
                sph = t * cph
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = cph * rp - sph * rq
                a[q, :] = sph * rp + cph * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cph * cp - sph * cq
                a[:, q] = sph * cp + cph * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
        frob = float(np.linalg.norm(a))
    return np.sort(np.diag(a))


def integrate_ode(rhs, y0, t_end, dt):
    """Integrate ``y' = rhs(y)`` from 0 to ``t_end`` with classic fixed-step RK4.

    The step is ``t_end / ceil(t_end / dt)`` so the endpoint is hit exactly.
    Accepts scalar or array states and returns the same kind.

    Raises:
        NonFiniteState: if any state component becomes non-finite.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < 0.0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    scalar = np.ndim(y0) == 0
    y = np.array(y0, dtype=float, copy=True, ndmin=1)
    if t_end > 0.0:
        nsteps = max(1, math.ceil(t_end / dt))
        h = t_end / nsteps
        # overflow is detected via the isfinite check, not numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(nsteps):
                k1 = np.asarray(rhs(y))
                k2 = np.asarray(rhs(y + 0.5 * h * k1))
                k3 = np.asarray(rhs(y + 0.5 * h * k2))
                k4 = np.asarray(rhs(y + h * k3))
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(y)):
                    raise NonFiniteState(f"state became non-finite during integration to t={t_end}")
    return float(y[0]) if scalar else y


def central_diff(f, x, h, order=1):
    """Richardson-refined central difference of ``f`` at ``x``.

    order=1 gives f'(x), order=2 gives f''(x); both are O(h^4) accurate after
    one refinement and require f at x +/- h and x +/- h/2. Works for scalar-
    or array-valued f.

    Raises:
        StepTooSmall: when h is under 1e3 machine epsilons relative to |x|.
    """
    if h <= 0.0:
        raise StepTooSmall(f"step must be positive, got {h}")
    if h < 1e3 * np.finfo(float).eps * abs(x):
        raise StepTooSmall(f"step {h:g} is below the roundoff floor at x={x:g}")
    if order == 1:
        def estimate(s):
            return (f(x + s) - f(x - s)) / (2.0 * s)
    elif order == 2:
        f0 = f(x)

        def estimate(s):
            return (f(x + s) - 2.0 * f0 + f(x - s)) / (s * s)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return (4.0 * estimate(h / 2.0) - estimate(h)) / 3.0
