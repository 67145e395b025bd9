import math

import numpy as np
import pytest

from cayley_ising.free_energy import (
    AtomEvaluationError,
    OnSupportError,
    free_energy_electrostatic,
    free_energy_recursive,
    free_energy_report,
    magnetization,
    order_from_kappa,
    radial_scan,
    singular_exponent,
    singular_part,
    temperature_of,
)
from cayley_ising.measure import EmpiricalMeasure, interval_mass
from cayley_ising.zeros import TreeSpec, enumerate_zeros


def test_temperature_convention():
    assert temperature_of(math.exp(-2.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        temperature_of(0.0)
    with pytest.raises(ValueError):
        temperature_of(1.0)


def test_cross_method_agreement():
    rng = np.random.default_rng(12)
    for t in (0.2, 0.5):
        for _ in range(10):
            radius = float(rng.uniform(0.1, 10.0))
            if abs(radius - 1.0) < 0.05:
                radius += 0.1
            z = radius * np.exp(1j * rng.uniform(-math.pi, math.pi))
            fe = free_energy_electrostatic(complex(z), t, 2, 12)
            fr = free_energy_recursive(complex(z), t, 2, 12)
            assert abs(fe - fr) <= 1e-3 * (1.0 + abs(fe))


def test_recursive_real_and_analytic_on_positive_axis():
    # above t_c the free energy is real-analytic across |z|=1 on (0, inf)
    values = [free_energy_recursive(r, 0.5, 2, 14) for r in np.linspace(0.6, 1.6, 21)]
    assert all(math.isfinite(v) for v in values)
    second = np.diff(values, 2)
    assert np.max(np.abs(second)) < 0.05  # smooth through z = 1


def test_conjugate_symmetry():
    fe_up = free_energy_electrostatic(2.0 + 1.0j, 0.2, 2, 10)
    fe_dn = free_energy_electrostatic(2.0 - 1.0j, 0.2, 2, 10)
    # equal up to summation order of the mirrored atom list
    assert fe_up == pytest.approx(fe_dn, rel=1e-14)


def test_atom_guard():
    zs = enumerate_zeros(TreeSpec("rooted", 6, 2), 0.5)
    atom = np.exp(1j * zs.angles[3])
    with pytest.raises(AtomEvaluationError):
        free_energy_recursive(complex(atom), 0.5, 2, 6)


def test_magnetization_limits_and_symmetry():
    assert magnetization(0.0, 0.5, 2, 8) == 2.0
    assert abs(magnetization(1e-9, 0.5, 2, 8) - 2.0) <= 1e-6
    assert abs(magnetization(1e9, 0.5, 2, 8) + 2.0) <= 1e-6
    # real z in the zero-free arc: conjugate pairs cancel, M is real
    m = magnetization(complex(np.exp(0.05j)) * 0 + 1.0, 0.5, 2, 8)  # z=1 in the gap
    assert abs(m.imag) <= 1e-12
    with pytest.raises(OnSupportError):
        magnetization(complex(np.exp(1j * enumerate_zeros(TreeSpec("rooted", 8, 2), 0.5).angles[0])), 0.5, 2, 8)


def test_radial_scan_rows():
    rows = radial_scan(0.0, 0.5, 2, 10, [0.5, 2.0])
    assert len(rows) == 2 and all(math.isfinite(f) for _, f in rows)


def test_free_energy_report_bundle():
    rep = free_energy_report(2.0 + 0.5j, 0.5, 2, 12)
    assert abs(rep.f_electrostatic - rep.f_recursive) <= 1e-3 * (1 + abs(rep.f_electrostatic))
    assert rep.m_order is None
    doc = rep.to_dict()
    assert doc["level"] == 12 and doc["k"] == 2
    # near t=0 the measure is near-uniform, so the fitted exponent is near 1
    rep2 = free_energy_report(
        complex(math.cos(0.9), math.sin(0.9)) * 1.05, 0.01, 2, 18, with_kappa=True
    )
    assert rep2.kappa_fit is not None
    assert rep2.kappa_fit.kappa == pytest.approx(1.0, abs=0.03)
    assert rep2.m_order == 0


def test_order_from_kappa():
    assert order_from_kappa(1.0) == 0
    assert order_from_kappa(2.0) == 0
    assert order_from_kappa(2.409) == 1
    assert order_from_kappa(4.0) == 1
    assert order_from_kappa(4.1) == 2
    with pytest.raises(ValueError):
        order_from_kappa(0.0)


def test_singular_part_matches_lebesgue_closed_form():
    # at t=0 the measure is uniform, Phi(z) ~ z/pi, and for m=0 the integral
    # is (y/pi) arctan(delta0/y) exactly
    em = EmpiricalMeasure(TreeSpec("rooted", 18, 2), 0.0)
    delta0 = 0.5
    for y in (0.01, 0.05, 0.2):
        got = singular_part(y, 0.9, 0.0, 2, 0, em, delta0)
        expected = (y / math.pi) * math.atan(delta0 / y)
        # the staircase of ~5e5 atoms deviates from the continuum at ~1/(N Phi)
        assert got == pytest.approx(expected, rel=1e-3)


def test_singular_exponent_lebesgue_slope():
    fit = singular_exponent(
        0.9, 0.0, 2, n=18, kappa_prior=1.0, delta0=0.5,
        ys=0.5 * 2.0 ** -np.arange(7.0, 10.5, 0.5),
    )
    assert fit.kappa == pytest.approx(1.0, abs=0.02)
    assert fit.r_squared >= 0.98
    assert fit.m_order == 0
    assert fit.stable


def test_singular_exponent_resolution_guard():
    with pytest.raises(ValueError):
        singular_exponent(0.0, 0.2, 2, n=14, kappa_prior=2.2, delta0=0.5)


def test_regular_part_is_even_polynomial():
    # h(y) - h_sing(y) = sum_{j<=m} (-1)^j a_j y^{2j} with
    # a_j = int Phi(z) z^{-2j-1} dz: the subtraction removes exactly the
    # non-polynomial piece, for any cutoff delta0
    phi, t, k, n, m = 0.0, 0.2, 2, 16, 1
    em = EmpiricalMeasure(TreeSpec("rooted", n, k), t)

    def moment(j, delta0):
        edges = np.exp(np.linspace(math.log(1e-6), math.log(delta0), 400))
        mids = 0.5 * (edges[1:] + edges[:-1])
        widths = np.diff(edges)
        from cayley_ising.measure import symmetric_mass

        mass = symmetric_mass(phi, mids, em)
        return float(np.sum(mass * mids ** (-2 * j - 1) * widths))

    for delta0 in (0.8, 1.0):
        a0 = moment(0, delta0)
        a1 = moment(1, delta0)
        for y in (0.05, 0.1, 0.2):
            h_full = singular_part(y, phi, t, k, -1, em, delta0)  # m=-1 gives the raw kernel
            h_sing = singular_part(y, phi, t, k, m, em, delta0)
            h_reg = h_full - h_sing
            poly = a0 - a1 * y * y
            # three independent staircase quadratures stack to ~1% here; a
            # wrong subtraction order or sign would be off by 10x or more
            assert h_reg == pytest.approx(poly, rel=2e-2)


def test_integration_by_parts_identity():
    # int f dmu over (0, delta0] = f(delta0) Phi(delta0) - int f' Phi dz, with
    # Phi(z) = mu((0, z]); both sides computed from the same atom list but
    # through different algebra
    t = 0.35
    tree = TreeSpec("rooted", 8, 2)
    zs = enumerate_zeros(tree, t)
    em = EmpiricalMeasure(tree, t)
    n_atoms = tree.vertex_count
    delta0 = 1.2
    y = 0.3

    def f(x):
        return math.log(x * x + y * y)

    atoms = zs.angles[(zs.angles > 0) & (zs.angles <= delta0)]
    lhs = sum(f(a) for a in atoms) / n_atoms

    phi_at = lambda x: interval_mass(0.0, x, em)
    # exact integral of f' * staircase: sum of Phi over constancy intervals
    cuts = np.concatenate([[0.0], atoms, [delta0]])
    rhs = f(delta0) * phi_at(delta0)
    for a, b in zip(cuts[:-1], cuts[1:]):
        rhs -= phi_at(0.5 * (a + b)) * (f(b) - f(a))
    assert lhs == pytest.approx(rhs, abs=1e-12)
