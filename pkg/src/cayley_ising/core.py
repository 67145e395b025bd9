"""Circle-map dynamics of the tree renormalization.

The degree-k Blaschke-type map w -> z((w+t)/(1+wt))^k preserves the unit
circle; everything downstream (zero enumeration, empirical measures,
Lyapunov exponents) is driven by its angular lift, its derivative, its
fixed points, and the tangency locus where a circle fixed point becomes
multiple.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi

# |w|-1 band inside which a fixed point is classified as "on the circle"
CIRCLE_BAND = 1e-8


class NoGapError(ValueError):
    """Raised when the zero-free arc is requested below the critical temperature."""


class ExpansionUnavailableError(ValueError):
    """Raised when an expansion certificate is requested on or above the gap-edge curve."""


def _validate_t(t: float) -> None:
    if not (0.0 <= t < 1.0):
        raise ValueError(f"temperature variable t must lie in [0, 1), got {t}")


@dataclass(frozen=True)
class ModelParams:
    """Branching number k, temperature variable t in [0,1), field angle phi in (-pi, pi]."""

    k: int
    t: float
    phi: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"branching number k must be an integer >= 2, got {self.k}")
        _validate_t(self.t)
        if not (-math.pi < self.phi <= math.pi):
            raise ValueError(f"field angle phi must lie in (-pi, pi], got {self.phi}")

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.phi)

    @property
    def temperature(self) -> float:
        """T = -2/ln t with the coupling J fixed to 1 (zero in the t=0 limit)."""
        if self.t == 0.0:
            return 0.0
        return -2.0 / math.log(self.t)


def lift_eval(theta, p: ModelParams):
    """Angular lift k*theta - 2k*arctan(t sin(theta)/(1+t cos(theta))) + phi.

    Accepts scalar or ndarray theta.  The denominator 1 + t cos(theta) is
    bounded below by 1-t > 0, so the lift is smooth on all of R and
    satisfies lift(theta + 2pi) = lift(theta) + 2pi k.
    """
    return _lift(theta, p.phi, p.t, p.k)


def _lift(theta, phi, t, k):
    return k * theta - 2.0 * k * np.arctan2(t * np.sin(theta), 1.0 + t * np.cos(theta)) + phi


def lift_derivative(theta, p: ModelParams):
    """d(lift)/d(theta) = k(1-t^2)/(1+2t cos(theta)+t^2) > 0."""
    return _lift_derivative(theta, p.t, p.k)


def _lift_derivative(theta, t, k):
    return k * (1.0 - t * t) / (1.0 + 2.0 * t * np.cos(theta) + t * t)


@dataclass(frozen=True)
class LiftOrbit:
    final: float
    log_deriv_sum: float


def lift_orbit(n: int, p: ModelParams, theta0: float) -> LiftOrbit:
    """Iterate the lift n times from theta0, accumulating sum(log lift')."""
    if n < 0:
        raise ValueError("iterate count must be >= 0")
    theta = float(theta0)
    logsum = 0.0
    for _ in range(n):
        logsum += math.log(_lift_derivative(theta, p.t, p.k))
        theta = float(_lift(theta, p.phi, p.t, p.k))
    return LiftOrbit(theta, logsum)


# ---------------------------------------------------------------------------
# fixed points of w -> z((w+t)/(1+wt))^k


@dataclass(frozen=True)
class FixedPoint:
    value: complex
    location: str  # "disk" | "circle" | "exterior"
    multiplier: complex


@dataclass(frozen=True)
class FixedPointSet:
    params: ModelParams
    roots: tuple[FixedPoint, ...]
    degree_dropped: bool = False  # t=0: the exterior fixed point escapes to infinity

    def disk_root(self):
        """The unique attracting fixed point inside the unit disk, or None."""
        inside = [r for r in self.roots if r.location == "disk"]
        return inside[0] if inside else None

    def circle_roots(self):
        return tuple(r for r in self.roots if r.location == "circle")


def _fixed_point_poly(z: complex, t: float, k: int) -> np.ndarray:
    """Ascending coefficients of P(w) = z(w+t)^k - w(1+wt)^k."""
    c = np.zeros(k + 2, dtype=complex)
    for j in range(k + 1):
        c[j] += z * math.comb(k, j) * t ** (k - j)
        c[j + 1] -= math.comb(k, j) * t**j
    return c


def map_derivative(w: complex, p: ModelParams) -> complex:
    """Complex derivative z*k*(w+t)^(k-1)*(1-t^2)/(1+wt)^(k+1)."""
    k, t = p.k, p.t
    return p.z * k * (w + t) ** (k - 1) * (1.0 - t * t) / (1.0 + w * t) ** (k + 1)


def fixed_points(p: ModelParams) -> FixedPointSet:
    """All fixed points of the map, companion-matrix roots polished by Newton.

    At t=0 the polynomial degree drops from k+1 to k (the exterior fixed
    point is at infinity); the returned set is flagged accordingly.
    """
    z, t, k = p.z, p.t, p.k
    coeffs = _fixed_point_poly(z, t, k)
    dropped = coeffs[-1] == 0
    trimmed = coeffs[: k + 1] if dropped else coeffs
    roots = np.roots(trimmed[::-1])

    dcoeffs = trimmed[1:] * np.arange(1, len(trimmed))
    for _ in range(4):  # Newton polish; companion eigenvalues are close already
        pv = np.polyval(trimmed[::-1], roots)
        dv = np.polyval(dcoeffs[::-1], roots)
        safe = np.abs(dv) > 1e-30
        roots = np.where(safe, roots - pv / np.where(safe, dv, 1.0), roots)

    pts = []
    for w in sorted(roots, key=lambda r: (abs(r), math.atan2(r.imag, r.real))):
        w = complex(w)
        r = abs(w)
        if abs(r - 1.0) < CIRCLE_BAND:
            loc = "circle"
        elif r < 1.0:
            loc = "disk"
        else:
            loc = "exterior"
        pts.append(FixedPoint(w, loc, complex(map_derivative(w, p))))
    return FixedPointSet(p, tuple(pts), degree_dropped=bool(dropped))


def critical_temperature(k: int) -> float:
    """t_c = (k-1)/(k+1)."""
    if int(k) != k or k < 2:
        raise ValueError(f"branching number k must be an integer >= 2, got {k}")
    return (k - 1) / (k + 1)


# ---------------------------------------------------------------------------
# tangency locus and the gap-edge curve


@dataclass(frozen=True)
class TangencyData:
    """Circle point where the map becomes tangent to the diagonal, and the
    field angle phi_e at which that happens (the edge of the zero-free arc)."""

    point: complex
    angle: float
    phi_e: float


def tangency(t: float, k: int) -> TangencyData:
    """Solve the multiple-fixed-point condition for t in (t_c, 1).

    The condition k*w*(1-t^2)/((w+t)(1+wt)) = 1 reduces to the quadratic
    t w^2 + ((k+1)t^2 - (k-1)) w + t = 0, whose discriminant is negative
    exactly on (t_c, 1), giving a reciprocal-conjugate pair on the circle.
    """
    tc = critical_temperature(k)
    if not (tc < t < 1.0):
        raise ValueError(f"tangency requires t in (t_c, 1) = ({tc}, 1), got {t}")
    a = (k + 1) * t * t - (k - 1)
    disc = a * a - 4.0 * t * t
    if disc >= 0.0:
        raise RuntimeError(f"discriminant {disc} not negative at t={t}: internal inconsistency")
    w = complex(-a, math.sqrt(-disc)) / (2.0 * t)
    theta = math.atan2(w.imag, w.real)
    raw = theta - k * theta + 2.0 * k * math.atan2(t * math.sin(theta), 1.0 + t * math.cos(theta))
    return TangencyData(w, theta, abs(math.remainder(raw, TAU)))


def phi_e(t: float, k: int) -> float:
    """Half-width of the zero-free arc around phi=0; 0 at t_c, pi at t=1."""
    tc = critical_temperature(k)
    if t < tc:
        raise NoGapError(f"t={t} < t_c={tc}: the support is the full circle, no gap exists")
    if t > 1.0:
        raise ValueError(f"t must lie in [t_c, 1], got {t}")
    if t == tc:
        return 0.0
    if t == 1.0:
        return math.pi
    return tangency(t, k).phi_e


def interior_support(phi: float, t: float, k: int) -> bool:
    """True when e^{i phi} lies in the interior of the zero support (the map
    is then expanding on the circle and has a fixed point in the disk)."""
    _validate_t(t)
    if t < critical_temperature(k):
        return True
    return abs(math.remainder(phi, TAU)) > phi_e(t, k)


# ---------------------------------------------------------------------------
# expansion certificate


@dataclass(frozen=True)
class ExpansionCertificate:
    c: float
    lam: float
    n_probe: int
    grid_size: int


def expansion_certificate(
    p: ModelParams, n_probe: int = 12, grid_size: int = 4096, margin: float = 1e-6
) -> ExpansionCertificate:
    """Fit (c, lambda) with lambda > 1 so that every sampled orbit satisfies
    prod lift'(theta_j) >= c * lambda^m for 1 <= m <= n_probe.

    Above the critical temperature single steps can contract (min lift' < 1),
    so lambda is taken from the tail growth rate of the worst-case products
    and c absorbs the early dips (c <= 1 there; c = 1 when the one-step
    minimum already expands).  Refuses parameters on or above the gap-edge
    curve, where expansion fails.
    """
    if n_probe < 2:
        raise ValueError("n_probe must be at least 2")
    if not interior_support(p.phi, p.t, p.k):
        raise ExpansionUnavailableError(
            f"(phi={p.phi}, t={p.t}) is not strictly below the gap-edge curve; "
            "expansion is not guaranteed there"
        )
    theta = np.linspace(-math.pi, math.pi, grid_size, endpoint=False)
    logprod = np.zeros_like(theta)
    mins = np.empty(n_probe)
    for m in range(1, n_probe + 1):
        logprod += np.log(_lift_derivative(theta, p.t, p.k))
        theta = _lift(theta, p.phi, p.t, p.k)
        mins[m - 1] = logprod.min()
    m1 = max(n_probe // 2, 1)
    log_lam = (mins[n_probe - 1] - mins[m1 - 1]) / (n_probe - m1)
    lam = math.exp(log_lam)
    if lam <= 1.0 + margin:
        raise ExpansionUnavailableError(
            f"fitted expansion rate {lam} is not above 1 + {margin}; certificate rejected"
        )
    log_c = min(mins[m - 1] - m * log_lam for m in range(1, n_probe + 1))
    return ExpansionCertificate(math.exp(log_c), lam, n_probe, grid_size)
