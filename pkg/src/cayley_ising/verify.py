"""Self-contained verification battery behind the `verify` CLI subcommand.

Every check is deterministic given the seed; the report is canonical JSON
(sorted keys, full-precision floats) so byte-identical reruns certify
reproducibility.  Quick mode shrinks orbit lengths and tree levels but
never loosens a tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import core, free_energy, measure, partition, spectra, zeros

LOG2 = math.log(2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: dict

    def to_dict(self):
        return {"passed": bool(self.passed), "observed": self.observed}


def _r(x) -> float:
    return float(x)


def check_lift_structure(rng, quick: bool) -> list[CheckResult]:
    cases = 300 if quick else 1000
    thetas = rng.uniform(-10.0, 10.0, cases)
    phis = rng.uniform(-math.pi, math.pi, cases)
    ts = rng.uniform(0.0, 0.95, cases)
    ks = rng.integers(2, 6, cases)
    worst_period = 0.0
    worst_fd = 0.0
    for th, ph, t, k in zip(thetas, phis, ts, ks):
        p = core.ModelParams(int(k), float(t), float(ph))
        gap = core.lift_eval(th + 2.0 * math.pi, p) - core.lift_eval(th, p) - 2.0 * math.pi * k
        worst_period = max(worst_period, abs(float(gap)))
        h = 1e-5
        fd = (core.lift_eval(th + h, p) - core.lift_eval(th - h, p)) / (2.0 * h)
        worst_fd = max(worst_fd, abs(float(fd - core.lift_derivative(th, p))))
    results = [
        CheckResult("lift_periodicity", worst_period <= 1e-12, {"worst": _r(worst_period), "bound": 1e-12}),
        CheckResult("lift_derivative_fd", worst_fd <= 1e-6, {"worst": _r(worst_fd), "bound": 1e-6}),
    ]

    # monotone dependence of the composed lift on phi, and the degree identity
    tree = zeros.TreeSpec("rooted", 5, 2)
    phis = np.sort(rng.uniform(-math.pi, math.pi, 64))
    _, _, deriv = zeros.iterated_lift(phis, tree, 0.6, derivative=True)
    min_deriv = float(np.min(deriv))
    psi1, w1 = zeros.iterated_lift(phis, tree, 0.6)
    psi2, w2 = zeros.iterated_lift(phis + 2.0 * math.pi, tree, 0.6)
    degree_gap = (psi2 - psi1) + 2.0 * math.pi * (w2 - w1) - 2.0 * math.pi * tree.vertex_count
    worst_degree = float(np.max(np.abs(degree_gap))) / (2.0 * math.pi * tree.vertex_count)
    results.append(CheckResult("lift_monotone_in_phi", min_deriv >= 1.0, {"min_dG_dphi": _r(min_deriv)}))
    results.append(
        CheckResult("lift_degree_identity", worst_degree <= 1e-9, {"worst_rel": _r(worst_degree), "bound": 1e-9})
    )
    return results


def check_fixed_points(rng, quick: bool) -> list[CheckResult]:
    cases = 40 if quick else 150
    worst_pair = 0.0
    multiplier_ok = True
    for _ in range(cases):
        k = int(rng.integers(2, 5))
        t = float(rng.uniform(0.02, 0.95))
        phi = float(rng.uniform(-math.pi, math.pi))
        if not core.interior_support(phi, t, k):
            continue
        fps = core.fixed_points(core.ModelParams(k, t, phi))
        off = [r for r in fps.roots if r.location != "circle"]
        for r in off:
            mirror = min(abs(r.value - 1.0 / np.conj(o.value)) for o in off)
            worst_pair = max(worst_pair, float(mirror))
        disk = fps.disk_root()
        if disk is not None and abs(disk.multiplier) >= 1.0:
            multiplier_ok = False
    return [
        CheckResult("fixed_point_reflection", worst_pair <= 1e-7, {"worst": _r(worst_pair), "bound": 1e-7}),
        CheckResult("disk_fixed_point_attracting", multiplier_ok, {}),
    ]


def check_tangency(quick: bool) -> list[CheckResult]:
    k = 2
    tc = core.critical_temperature(k)
    ts = np.linspace(tc + 1e-4, 0.999, 40 if quick else 200)
    worst_res = 0.0
    values = []
    for t in ts:
        td = core.tangency(float(t), k)
        w = td.point
        res = abs(k * w * (1.0 - t * t) / ((w + t) * (1.0 + w * t)) - 1.0)
        worst_res = max(worst_res, float(res))
        values.append(td.phi_e)
    values = np.array(values)
    monotone = bool(np.all(np.diff(values) > 0))
    anchors = (
        abs(core.phi_e(0.5, 2) - 0.3073950510845034) < 1e-12
        and abs(core.phi_e(tc, 2)) == 0.0
        and core.phi_e(1.0, 2) == math.pi
    )
    return [
        CheckResult("tangency_residual", worst_res <= 1e-10, {"worst": _r(worst_res), "bound": 1e-10}),
        CheckResult("phi_e_monotone", monotone, {"t_range": [_r(ts[0]), _r(ts[-1])]}),
        CheckResult("phi_e_anchors", anchors, {"phi_e_half": _r(core.phi_e(0.5, 2))}),
    ]


def check_counting(quick: bool) -> CheckResult:
    ok = True
    for k in (2, 3):
        for n in range(0, 5 if quick else 7):
            tree = zeros.TreeSpec("rooted", n, k)
            if zeros.zero_count(tree) != (k ** (n + 1) - 1) // (k - 1):
                ok = False
            if n >= 1:
                ftree = zeros.TreeSpec("full", n, k)
                expected = 1 + (k + 1) * ((k**n - 1) // (k - 1))
                if zeros.zero_count(ftree) != expected:
                    ok = False
                zs = zeros.enumerate_zeros(ftree, 0.3) if n <= 4 else None
                if zs is not None and len(zs) != expected:
                    ok = False
    return CheckResult("zero_counts", ok, {})


def check_oracle_equivalence(quick: bool) -> CheckResult:
    worst = 0.0
    levels = (1, 2) if quick else (1, 2, 3)
    for variant in ("rooted", "full"):
        for n in levels:
            for tf in (Fraction(1, 5), Fraction(1, 2)):
                tree = zeros.TreeSpec(variant, n, 2)
                poly = partition.partition_poly_recursive(tree, tf)
                pairs = partition.poly_roots_on_circle(poly)
                zz = zeros.enumerate_zeros(tree, float(tf))
                diff = np.max(np.abs(np.array([a for a, _ in pairs]) - zz.angles))
                worst = max(worst, float(diff))
    return CheckResult("oracle_equivalence", worst <= 1e-8, {"worst": _r(worst), "bound": 1e-8})


def _small_trees():
    trees = []
    for k in range(2, 22):
        for variant in ("rooted", "full"):
            n = 0 if variant == "rooted" else 1
            while True:
                try:
                    tree = zeros.TreeSpec(variant, n, k)
                except ValueError:
                    break
                if tree.vertex_count > 22:
                    break
                trees.append(tree)
                n += 1
    return trees


def check_recursion_vs_bruteforce(quick: bool) -> CheckResult:
    trees = _small_trees()
    if quick:
        trees = [tr for tr in trees if tr.vertex_count <= 16]
    ok = True
    checked = 0
    palindromic = True
    for tree in trees:
        rec = partition.partition_poly_recursive(tree, Fraction(1, 5))
        bf = partition.partition_poly_bruteforce(tree, Fraction(1, 5))
        if rec.coeffs != bf.coeffs:
            ok = False
        if rec.coeffs != rec.coeffs[::-1] or any(c <= 0 for c in rec.coeffs):
            palindromic = False
        checked += 1
    return CheckResult(
        "recursion_vs_bruteforce",
        ok and palindromic,
        {"trees_checked": checked, "palindromic_and_positive": palindromic},
    )


def check_zero_sets(rng, quick: bool) -> list[CheckResult]:
    n = 8 if quick else 10
    tree = zeros.TreeSpec("rooted", n, 2)
    t = 0.45
    zs = zeros.enumerate_zeros(tree, t)
    za = np.exp(1j * zs.angles)
    chord = np.abs(np.conj(za)[:, None] - za[None, :])
    sym = float(max(chord.min(axis=0).max(), chord.min(axis=1).max()))
    has_pi = bool(abs(zs.angles[-1] - math.pi) < 1e-12)

    em = measure.EmpiricalMeasure(tree, t)
    probes = rng.uniform(-math.pi, math.pi, 200 if quick else 1000)
    counts = em.counts(probes)
    stair = np.searchsorted(zs.angles, probes, side="right")
    exact = bool(np.all(counts == stair))

    # additivity is exact at the integer-count level; the /N division is the
    # only floating step, so the fsum of masses is within one ulp of 1
    edges = np.concatenate([[-math.pi], np.sort(rng.uniform(-math.pi, math.pi, 64)), [math.pi]])
    count_parts = np.diff(em.counts(edges))
    additive = bool(count_parts.sum() == em.total)
    return [
        CheckResult("zero_set_symmetry", sym <= 1e-10, {"worst": _r(sym), "bound": 1e-10}),
        CheckResult("zero_at_pi_odd_count", has_pi, {}),
        CheckResult("cdf_exact_counts", exact, {"probes": len(probes)}),
        CheckResult("interval_mass_additive", additive, {}),
    ]


def check_gap_and_density(quick: bool) -> list[CheckResult]:
    k = 2
    ok_gap = True
    worst_margin = math.inf
    for t in (0.4, 0.9):
        edge = core.phi_e(t, k)
        for variant in ("rooted", "full"):
            zs = zeros.enumerate_zeros(zeros.TreeSpec(variant, 8 if quick else 10, k), t)
            margin = zeros.min_positive_zero(zs) - (edge - 1e-6)
            worst_margin = min(worst_margin, float(margin))
            if margin < 0:
                ok_gap = False
    levels = (4, 6, 8) if quick else (6, 10, 14)
    gaps = [
        measure.max_gap(measure.EmpiricalMeasure(zeros.TreeSpec("rooted", n, k), 0.2))
        for n in levels
    ]
    decreasing = bool(gaps[2] < gaps[1] < gaps[0])
    return [
        CheckResult("zero_free_arc", ok_gap, {"worst_margin": _r(worst_margin)}),
        CheckResult("density_gap_decreases", decreasing, {"gaps": [_r(g) for g in gaps]}),
    ]


def check_rooted_full(quick: bool) -> CheckResult:
    n = 8 if quick else 12
    worst = 0.0
    for t in (0.2, 0.5):
        worst = max(worst, measure.cdf_distance_rooted_full(2, n, t, grid=2000 if quick else 10_000))
    return CheckResult("rooted_full_cdf_distance", worst <= 0.01, {"worst": _r(worst), "bound": 0.01})


def check_spectra(seed: int, quick: bool) -> list[CheckResult]:
    steps = 100_000 if quick else 1_000_000
    seeds = 16 if quick else 32
    params = [(0.2, 0.0), (0.5, math.pi), (1e-4, 1.0)]
    phis = [ph for _, ph in params]
    ts = [t for t, _ in params]
    means, errs = spectra.birkhoff_exponents(phis, ts, 2, n_steps=steps, n_seeds=seeds, seed=seed)
    out = []
    worst = 0.0
    for (t, ph), mean, err in zip(params, means, errs):
        closed = spectra.lyapunov_acim_closed(core.ModelParams(2, t, ph))
        excess = abs(mean - closed) - (2e-3 + 3.0 * err)
        worst = max(worst, float(excess))
    out.append(CheckResult("lyapunov_closed_vs_birkhoff", worst <= 0.0, {"worst_excess": _r(worst)}))
    out.append(
        CheckResult(
            "lyapunov_t0_limit",
            abs(means[2] - LOG2) <= 1e-3,
            {"observed": _r(means[2]), "target": _r(LOG2)},
        )
    )

    depth = 12 if quick else 16
    ordering = True
    margins = []
    for (t, ph), mean, err in zip(params[:2], means[:2], errs[:2]):
        mme = spectra.lyapunov_mme(core.ModelParams(2, t, ph), depth=depth)
        low = (LOG2 - mean) / err if err > 0 else math.inf
        high = (mme.value - LOG2) / mme.stderr if mme.stderr > 0 else math.inf
        margins.append([_r(low), _r(high)])
        if not (mean + 5.0 * err < LOG2 < mme.value - 5.0 * mme.stderr):
            ordering = False
    out.append(CheckResult("lyapunov_ordering_5sigma", ordering, {"sigma_margins": margins}))

    fit = spectra.pointwise_dimension(0.0, 0.2, 2, level=20, coarsest=0.098, octaves=3)
    target = LOG2 / math.log(4.0 / 3.0)
    rel = abs(fit.value - target) / target
    out.append(
        CheckResult(
            "pointwise_dimension_phi0",
            rel <= 0.10,
            {"observed": _r(fit.value), "target": _r(target), "rel_err": _r(rel)},
        )
    )
    return out


def check_free_energy(rng, quick: bool) -> list[CheckResult]:
    n = 12 if quick else 16
    worst = 0.0
    for t in (0.2, 0.5):
        for _ in range(5 if quick else 20):
            while True:
                radius = float(rng.uniform(0.1, 10.0))
                if abs(radius - 1.0) >= 0.05:
                    break
            angle = float(rng.uniform(-math.pi, math.pi))
            z = radius * complex(math.cos(angle), math.sin(angle))
            fe = free_energy.free_energy_electrostatic(z, t, 2, n)
            fr = free_energy.free_energy_recursive(z, t, 2, n)
            worst = max(worst, abs(fe - fr) / (1.0 + abs(fe)))
    results = [
        CheckResult("free_energy_cross_method", worst <= 1e-3, {"worst_rel": _r(worst), "bound": 1e-3})
    ]
    m_low = free_energy.magnetization(1e-9, 0.5, 2, 10)
    m_high = free_energy.magnetization(1e9, 0.5, 2, 10)
    results.append(
        CheckResult(
            "magnetization_limits",
            abs(m_low - 2.0) <= 1e-6 and abs(m_high + 2.0) <= 1e-6,
            {"at_zero": _r(abs(m_low - 2.0)), "at_infinity": _r(abs(m_high + 2.0))},
        )
    )

    # level 20 in quick mode too: the CDF-backed quadrature costs well under
    # a second and coarser levels sit right on the 2% Lebesgue tolerance
    fit0 = free_energy.singular_exponent(
        0.9, 0.0, 2, n=20, kappa_prior=1.0, delta0=0.5,
        ys=0.5 * 2.0 ** -np.arange(7.0, 10.5, 0.5),
    )
    fit1 = free_energy.singular_exponent(
        0.0, 0.2, 2, n=20, kappa_prior=2.2, delta0=1.2,
        ys=1.2 * 2.0 ** -np.arange(3.3, 5.8, 0.4),
    )
    target = LOG2 / math.log(4.0 / 3.0)
    results.append(
        CheckResult(
            "singular_exponent_lebesgue",
            abs(fit0.kappa - 1.0) <= 0.02 and fit0.r_squared >= 0.98,
            {"kappa": _r(fit0.kappa), "r2": _r(fit0.r_squared)},
        )
    )
    results.append(
        CheckResult(
            "singular_exponent_phi0",
            abs(fit1.kappa - target) / target <= 0.15 and fit1.r_squared >= 0.98,
            {"kappa": _r(fit1.kappa), "target": _r(target), "r2": _r(fit1.r_squared)},
        )
    )
    return results


def run_verification(seed: int = 0, quick: bool = False) -> dict:
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []
    checks += check_lift_structure(rng, quick)
    checks += check_fixed_points(rng, quick)
    checks += check_tangency(quick)
    checks.append(check_counting(quick))
    checks.append(check_oracle_equivalence(quick))
    checks.append(check_recursion_vs_bruteforce(quick))
    checks += check_zero_sets(rng, quick)
    checks += check_gap_and_density(quick)
    checks.append(check_rooted_full(quick))
    checks += check_spectra(seed, quick)
    checks += check_free_energy(rng, quick)
    return {
        "schema_version": 1,
        "quick": bool(quick),
        "seed": int(seed),
        "checks": {c.name: c.to_dict() for c in checks},
        "all_passed": bool(all(c.passed for c in checks)),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"
