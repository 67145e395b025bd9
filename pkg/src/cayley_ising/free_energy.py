"""Free energy, magnetization, and the radial critical exponent.

Two routes to the per-site free energy are kept deliberately independent:
the electrostatic form (logarithmic potential of the zero measure plus
explicit log|z| and log t terms) and the conditional-pair recursion in
log-magnitude form.  The radial critical exponent is extracted from the
singular-part integral transform of the symmetric mass function, whose
log-log slope in the crossing parameter y recovers the exponent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measure import EmpiricalMeasure, symmetric_mass
from .spectra import pointwise_dimension
from .zeros import TreeSpec, enumerate_zeros


class AtomEvaluationError(ValueError):
    """Raised when the free energy is requested exactly at a Lee-Yang zero
    (the logarithmic potential diverges to -inf there)."""


class OnSupportError(ValueError):
    """Raised when the magnetization is requested on the zero support."""


def temperature_of(t: float) -> float:
    """T = -2/ln t with J = 1."""
    if not (0.0 < t < 1.0):
        raise ValueError(f"need t in (0, 1) to define the temperature, got {t}")
    return -2.0 / math.log(t)


@lru_cache(maxsize=16)
def _cached_angles(variant: str, level: int, k: int, t: float):
    zs = enumerate_zeros(TreeSpec(variant, level, k), t)
    return np.exp(1j * zs.angles)


def free_energy_electrostatic(
    z: complex, t: float, k: int, n: int, variant: str = "rooted"
) -> float:
    """-2T * mean(log|z - zeta_i|) + T(log|z| + log t), edge/vertex ratio 1."""
    temp = temperature_of(t)
    if z == 0:
        raise ValueError("z = 0 is a pole of the log|z| term")
    atoms = _cached_angles(variant, n, k, t)
    dist = np.abs(z - atoms)
    if np.min(dist) < 1e-300:
        raise AtomEvaluationError(f"z={z} coincides with a Lee-Yang zero; F = -inf there")
    potential = float(np.mean(np.log(dist)))
    return -2.0 * temp * potential + temp * (math.log(abs(z)) + math.log(t))


def free_energy_recursive(z: complex, t: float, k: int, n: int, variant: str = "rooted") -> float:
    """Per-site free energy from the conditional-pair recursion.

    Tracks log|Z_n^+| and the ratio w = Z^-/Z^+ instead of the partition
    function itself, so nothing overflows at any level.  Matches the
    electrostatic route up to the finite-size T*log(t)/|V| edge-count
    correction (the electrostatic form fixes the edge/vertex ratio to 1).
    """
    temp = temperature_of(t)
    if z == 0:
        raise ValueError("z = 0 is a pole of the field term")
    tree = TreeSpec(variant, n, k)
    steps = [k] * n if variant == "rooted" else [k] * (n - 1) + [k + 1]
    w = complex(z)
    log_zplus = -0.5 * math.log(abs(z))
    for k_step in steps:
        log_zplus = (
            -0.5 * math.log(abs(z))
            - 0.5 * k_step * math.log(t)
            + k_step * (log_zplus + math.log(abs(1.0 + t * w)))
        )
        w = z * ((w + t) / (1.0 + w * t)) ** k_step
    if abs(1.0 + w) < 1e-12:
        raise AtomEvaluationError(
            f"1 + w_n = {1.0 + w:.3e}: z={z} is numerically at a Lee-Yang zero"
        )
    log_partition = log_zplus + math.log(abs(1.0 + w))
    return -2.0 * temp * log_partition / tree.vertex_count


def magnetization(z: complex, t: float, k: int, n: int, variant: str = "rooted") -> complex:
    """M(z) = -4z * mean(1/(z - zeta_i)) + 2; defined off the zero support."""
    if z == 0:
        return complex(2.0)
    atoms = _cached_angles(variant, n, k, t)
    dist = np.abs(z - atoms)
    if np.min(dist) < 1e-9:
        raise OnSupportError(f"z={z} is within 1e-9 of a Lee-Yang zero; M undefined there")
    return complex(-4.0 * z * np.mean(1.0 / (z - atoms)) + 2.0)


def radial_scan(phi: float, t: float, k: int, n: int, radii) -> list[tuple[float, float]]:
    """(r, F(r e^{i phi})) rows for the diagnostic radial regression."""
    return [
        (float(r), free_energy_electrostatic(r * complex(math.cos(phi), math.sin(phi)), t, k, n))
        for r in radii
    ]


# ---------------------------------------------------------------------------
# singular part of the logarithmic potential and the critical exponent


@dataclass(frozen=True)
class SingularFit:
    kappa: float
    r_squared: float
    m_order: int
    ys: tuple[float, ...]
    h_values: tuple[float, ...]
    fitted: tuple[float, ...]
    stable: bool


def order_from_kappa(kappa_hat: float) -> int:
    """Largest integer m with 2m < kappa (so 2m < kappa <= 2m+2)."""
    if kappa_hat <= 0:
        raise ValueError(f"kappa must be positive, got {kappa_hat}")
    return max(math.ceil(kappa_hat / 2.0) - 1, 0)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def singular_part(
    y: float, phi: float, t: float, k: int, m: int, em: EmpiricalMeasure, delta0: float
) -> float:
    """|h_sing(y)| = int_0^delta0 Phi(zeta)/(zeta^{2m+1}(zeta^2+y^2)) y^{2m+2} dzeta,
    with Phi the symmetric mass of [phi-zeta, phi+zeta].

    Composite Gauss-Legendre on log-spaced panels split at the zeta = y
    crossover; all mass queries for one y are evaluated in a single
    vectorized pass.  Below zeta = y*2^-14 the integrand contributes
    O((2^-14)^(kappa-2m)) relatively and is dropped.
    """
    a = y * 2.0**-14
    if a >= delta0:
        raise ValueError(f"y={y} is too large for the cutoff delta0={delta0}")
    # panel edges: two per octave, with an exact break at zeta = y
    n_panels = max(int(math.ceil(2.0 * math.log2(delta0 / a))), 4)
    edges = np.exp(np.linspace(math.log(a), math.log(delta0), n_panels + 1))
    if a < y < delta0:
        edges = np.unique(np.concatenate([edges, [y]]))
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    zetas = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    mass = symmetric_mass(phi, zetas, em)
    integrand = mass * y ** (2 * m + 2) / (zetas ** (2 * m + 1) * (zetas * zetas + y * y))
    return float(np.dot(weights, integrand))


def singular_exponent(
    phi: float,
    t: float,
    k: int,
    n: int = 20,
    delta0: float = 0.5,
    ys=None,
    m: int | None = None,
    kappa_prior: float | None = None,
    variant: str = "rooted",
    r2_threshold: float = 0.98,
) -> SingularFit:
    """Critical exponent from the log-log slope of |h_sing(y)| on a dyadic grid.

    Parameters
    ----------
    n : tree level backing the empirical measure.
    delta0 : outer cutoff of the potential integral.
    ys : crossing distances; defaults to delta0 * 2^-j over the window that
        the level-n resolution supports.
    m, kappa_prior : the subtraction order; if m is omitted it is derived
        from kappa_prior, itself defaulting to the pointwise-dimension
        estimate at the same parameters.
    """
    em = EmpiricalMeasure(TreeSpec(variant, n, k), t)
    if m is None:
        if kappa_prior is None:
            kappa_prior = pointwise_dimension(phi, t, k, level=n, coarsest=delta0 / 4.0).value
        m = order_from_kappa(kappa_prior)
    if ys is None:
        # resolution-aware default: y must stay above the scale holding ~50
        # zeros (the mass function is unresolved below it) and well under
        # delta0, where the finite-cutoff correction (y/delta0)^(2m+2-kappa)
        # pollutes the slope
        probe = delta0 * 2.0 ** -np.arange(1.0, 16.0, 0.25)
        resolved = symmetric_mass(phi, probe, em) * em.total >= 50
        zeta50 = float(probe[resolved][-1]) if resolved.any() else math.inf
        y_fine = max(2.0 * zeta50, delta0 * 2.0**-10)
        y_coarse = delta0 / 64.0
        if y_fine * 2.0 > y_coarse:
            raise ValueError(
                f"level {n} resolves the mass function only down to ~{zeta50:.3g}, "
                f"leaving no usable y window below delta0/64 = {y_coarse:.3g}; "
                "raise the level, enlarge delta0, or pass an explicit y grid"
            )
        n_points = int(math.floor(2.0 * math.log2(y_coarse / y_fine))) + 1
        ys = y_coarse * 0.5 ** (0.5 * np.arange(n_points))
    ys = np.asarray(sorted(np.asarray(ys, dtype=float)), dtype=float)
    h_vals = np.array([singular_part(float(y), phi, t, k, m, em, delta0) for y in ys])
    if np.any(h_vals <= 0.0):
        raise ValueError("singular part vanished on the y grid; enlarge delta0 or the level")
    x = np.log(ys)
    yv = np.log(h_vals)
    slope, intercept = np.polyfit(x, yv, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((yv - fitted) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    stable = bool(r2 >= r2_threshold)
    if not stable:
        warnings.warn(f"singular-exponent fit unstable: R^2 = {r2:.4f} < {r2_threshold}", stacklevel=2)
    return SingularFit(
        float(slope), r2, int(m), tuple(map(float, ys)), tuple(map(float, h_vals)),
        tuple(map(float, np.exp(fitted))), stable,
    )


@dataclass(frozen=True)
class FreeEnergyReport:
    """Both free-energy routes, the magnetization, and (optionally) the
    radial critical-exponent fit at one evaluation point."""

    z: complex
    t: float
    k: int
    level: int
    f_electrostatic: float
    f_recursive: float
    magnetization: complex
    kappa_fit: SingularFit | None = None

    @property
    def m_order(self) -> int | None:
        return self.kappa_fit.m_order if self.kappa_fit is not None else None

    def to_dict(self) -> dict:
        doc = {
            "schema_version": 1,
            "z_re": self.z.real,
            "z_im": self.z.imag,
            "t": self.t,
            "k": self.k,
            "level": self.level,
            "f_electrostatic": self.f_electrostatic,
            "f_recursive": self.f_recursive,
            "magnetization_re": self.magnetization.real,
            "magnetization_im": self.magnetization.imag,
        }
        if self.kappa_fit is not None:
            doc["kappa_fit"] = {
                "kappa": self.kappa_fit.kappa,
                "r_squared": self.kappa_fit.r_squared,
                "m_order": self.kappa_fit.m_order,
                "stable": self.kappa_fit.stable,
            }
        return doc


def free_energy_report(
    z: complex,
    t: float,
    k: int,
    n: int,
    variant: str = "rooted",
    with_kappa: bool = False,
    delta0: float = 0.5,
) -> FreeEnergyReport:
    """Evaluate both free-energy routes and the magnetization at z.

    With with_kappa=True the singular-exponent fit is run at phi = Arg z
    (which must then lie in the zero support).
    """
    fit = None
    if with_kappa:
        fit = singular_exponent(math.atan2(z.imag, z.real), t, k, n=n, delta0=delta0, variant=variant)
    return FreeEnergyReport(
        z=complex(z),
        t=t,
        k=k,
        level=n,
        f_electrostatic=free_energy_electrostatic(z, t, k, n, variant),
        f_recursive=free_energy_recursive(z, t, k, n, variant),
        magnetization=magnetization(z, t, k, n, variant),
        kappa_fit=fit,
    )


def write_singular_csv(path, fit: SingularFit) -> None:
    with open(path, "w") as fh:
        fh.write("y,h_sing,fit\n")
        for y, h, f in zip(fit.ys, fit.h_values, fit.fitted):
            fh.write(f"{y:.17g},{h:.17g},{f:.17g}\n")


def write_radial_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("r,free_energy\n")
        for r, f in rows:
            fh.write(f"{r:.17g},{f:.17g}\n")
