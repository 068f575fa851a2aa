"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Each criterion is a function returning ``(body, passed, detail)``; the body
holds every number the verdict rests on, so the determinism criterion can
rerun them and compare canonical bytes.
"""

import logging
import time

import numpy as np
import pytest

from conftest import record_acceptance
from rank_one_lab.anderson import AndersonConfig, LatticeBox, PotentialDistribution, TestVector, cyclicity_mc
from rank_one_lab.cli import extract_body, main
from rank_one_lab.clark import (
    FiniteBlaschke,
    TrigPolynomial,
    clark_measure,
    herglotz_residual,
    model_perturbation_matrix,
    spectral_average,
)
from rank_one_lab.hermitian import (
    hermite_angle_check,
    hermitian_from_roots,
    level_set_theorem_check,
    pw_euler_decompose,
    pw_level_progression_check,
    random_paley_wiener,
    random_self_reciprocal,
    remark_roots,
    sample_entire,
)
from rank_one_lab.measures import cauchy_transform, privalov_jump
from rank_one_lab.operators import circle_arg, decompose, random_hermitian, random_unit_vector
from rank_one_lab.serialize import dumps_body
from rank_one_lab.spectral import (
    NOT_CYCLIC,
    RankOneFamily,
    ad_disjointness,
    aronszajn_krein_residual,
    cyclicity_sweep,
    is_cyclic,
    ratio_alpha_deviation,
    spectral_measure,
    uniform_grid,
    unit_circle_grid,
)

SEED = 20240611
GAMMAS = unit_circle_grid(64, offset=0.37)


def rng_for(criterion: int, case: int = 0) -> np.random.Generator:
    return np.random.default_rng([SEED, criterion, case])


def off_axis(rng, n, y_min):
    return rng.uniform(-4, 4, n) + 1j * rng.choice([-1, 1], n) * rng.uniform(y_min, 3, n)


def c1_resolvent():
    errors = []
    for case in range(50):
        rng = rng_for(1, case)
        dim = 1 + case % 12
        a = random_hermitian(dim, rng)
        phi = random_unit_vector(dim, rng)
        mu = spectral_measure(a, phi)
        z = off_axis(rng, 100, 0.1)
        k = cauchy_transform(mu, z)
        ref = np.array([a.resolvent_pairing(phi, phi, zk) for zk in z])
        errors.append(float(np.abs(k - ref).max()))
    worst = max(errors)
    return {"errors": errors}, worst < 1e-9, f"max |K_mu - <(A-z)^-1 phi, phi>| = {worst:.2e} over 50x100 (tol 1e-9)"


def c2_aronszajn_krein():
    residuals, devs, skipped = [], [], 0
    for case in range(20):
        rng = rng_for(2, case)
        dim = 2 + case % 11
        a = random_hermitian(dim, rng)
        phi, f = random_unit_vector(dim, rng), random_unit_vector(dim, rng)
        alpha, beta = rng.uniform(-3, 3, 2)
        z = off_axis(rng, 50, 0.1)
        res = aronszajn_krein_residual(a, phi, f, alpha, beta, z, guard=1e-6)
        residuals.append(res.residual)
        skipped += len(res.skipped)
        devs.append(ratio_alpha_deviation(a, phi, f, np.linspace(-5, 5, 20), z))
    ok = max(residuals) < 1e-9 and max(devs) < 1e-9
    detail = (f"max AK residual = {max(residuals):.2e}, max ratio alpha-deviation = {max(devs):.2e} "
              f"(tol 1e-9, {skipped} guarded points)")
    return {"residuals": residuals, "alpha_deviation": devs, "skipped": skipped}, ok, detail


def c3_aronszajn_donoghue():
    distances = []
    for case in range(50):
        rng = rng_for(3, case)
        dim = 1 + case % 12
        a = random_hermitian(dim, rng)
        phi = random_unit_vector(dim, rng)
        alpha = rng.uniform(-3, 3)
        beta = alpha + (1e-3 if case % 5 == 0 else rng.choice([-1, 1]) * rng.uniform(1e-3, 3))
        distances.append(ad_disjointness(a, phi, alpha, beta))
    worst = min(distances)
    return {"distances": distances}, worst > 1e-9, f"min cross-eigenvalue distance = {worst:.2e} over 50 cases (> 1e-9)"


def c4_cyclicity_sweep():
    rng = rng_for(4)
    a = random_hermitian(8, rng)
    phi = random_unit_vector(8, rng)
    u0 = decompose(a).eigenvectors[:, 0]
    f = random_unit_vector(8, rng)
    f = f - np.vdot(u0, f) * u0
    f /= np.linalg.norm(f)
    grid = uniform_grid(-10, 10, 10_000)
    fam = RankOneFamily(a, phi, grid)
    rep_f = cyclicity_sweep(fam, f)
    rep_phi = cyclicity_sweep(fam, phi)
    base_verdict = is_cyclic(a, f).verdict
    ok = rep_f.noncyclic_count + rep_f.degenerate_count <= 8 and rep_phi.cyclic_count == len(grid)
    ok = ok and base_verdict == NOT_CYCLIC
    body = {"f_summary": rep_f.summary(), "phi_summary": rep_phi.summary(),
            "f_exceptional": rep_f.exceptional_parameters(), "base_verdict": base_verdict,
            "f_min_coupling": min(e.min_coupling for e in rep_f.entries)}
    detail = (f"f orthogonal to one eigenvector: {len(grid) - rep_f.cyclic_count} failures (<= 8), "
              f"f = phi: {len(grid) - rep_phi.cyclic_count} failures, alpha = 0 verdict {base_verdict}")
    return body, ok, detail


def c5_clark_measures():
    loc_err = w_err = 0.0
    for n in range(1, 13):
        theta = FiniteBlaschke.power(n)
        for g in GAMMAS:
            sigma = clark_measure(theta, g)
            roots = np.exp(1j * (np.angle(g) + 2 * np.pi * np.arange(n)) / n)
            roots = roots[np.argsort(circle_arg(roots), kind="stable")]
            loc_err = max(loc_err, float(np.abs(sigma.locations - roots).max()))
            w_err = max(w_err, float(np.abs(sigma.weights - 1 / n).max()))
    herg, mass = [], []
    for case in range(30):
        rng = rng_for(5, case)
        degree = 1 + case % 6
        r = np.sqrt(rng.uniform(0, 0.95, degree - 1))
        theta = FiniteBlaschke(np.concatenate([[0], r * np.exp(2j * np.pi * rng.random(degree - 1))]),
                               np.exp(2j * np.pi * rng.random()))
        g = np.exp(2j * np.pi * rng.random())
        sigma = clark_measure(theta, g)
        herg.append(herglotz_residual(theta, g, sigma))
        mass.append(abs(sigma.total_mass - 1))
    ok = loc_err < 1e-12 and w_err < 1e-12 and max(herg) < 1e-8 and max(mass) < 1e-8
    detail = (f"z^n: atom error {loc_err:.1e}, weight error {w_err:.1e} (tol 1e-12); "
              f"Blaschke deg <= 6: Herglotz residual {max(herg):.1e} (< 1e-8), mass error {max(mass):.1e}")
    return {"atom_error": loc_err, "weight_error": w_err, "herglotz": herg, "mass": mass}, ok, detail


def c6_model_consistency():
    worst = 0.0
    for n in range(1, 13):
        for g in GAMMAS:
            lam = decompose(model_perturbation_matrix(n, g)).eigenvalues
            worst = max(worst, float(np.abs(lam - clark_measure(FiniteBlaschke.power(n), g).locations).max()))
    return {"max_error": worst}, worst < 1e-10, f"max |eig(model) - Clark atom| = {worst:.1e} (tol 1e-10)"


def c7_spectral_averaging():
    errors = []
    for case, degree in enumerate(range(12)):
        rng = rng_for(7, case)
        coeffs = {k: complex(rng.standard_normal(), rng.standard_normal()) for k in range(-degree, degree + 1)}
        f = TrigPolynomial(coeffs)
        for n in (1, 2, 3, 5, 8):
            leb, avg = spectral_average(FiniteBlaschke.power(n), f, 16)
            errors.append(abs(leb - avg))
    worst = max(errors)
    return {"errors": errors}, worst < 1e-10, f"max |int f dm - avg int f dsigma| = {worst:.1e}, degree < 12 (tol 1e-10)"


def c8_level_sets():
    worst, roots_seen, failures = 0.0, 0, 0
    for case in range(100):
        rng = rng_for(8, case)
        n = 2 + case % 15
        p = random_self_reciprocal(n, rng)
        if case % 2 == 0:
            c = p(np.exp(2j * np.pi * rng.random()))
        else:
            c = complex(rng.standard_normal(), rng.standard_normal()) * np.abs(p.coefficients).max()
        rep = level_set_theorem_check(p, c)
        roots_seen += len(rep.roots)
        failures += not rep.holds
        if rep.deviations:
            worst = max(worst, max(rep.deviations))
    n = 8
    q = hermitian_from_roots(n, remark_roots(n, rng_for(8, 1000)))
    zero = level_set_theorem_check(q, 0)
    code = main(["level-sets", "--c", "0", "--n", str(n), "--seed", "3", "--output", "/dev/null"])
    ok = failures == 0 and worst < 1e-8 and roots_seen > 0 and not zero.holds and code == 2
    body = {"max_deviation": worst, "roots": roots_seen, "failures": failures,
            "zero_level_holds": zero.holds, "zero_level_charged": len(zero.charged_parameters), "cli_exit": code}
    detail = (f"max |z^n - exp(2i arg c)| = {worst:.1e} over {roots_seen} roots (tol 1e-8); "
              f"c = 0 construction fails containment with {len(zero.charged_parameters)} charged parameters, CLI exit {code}")
    return body, ok, detail


def c9_hermite_angle():
    dev = integral = 0.0
    skipped = 0
    elements = []
    for case in range(6):
        rng = rng_for(9, case)
        n = 3 + 2 * case
        elements.append(hermitian_from_roots(n, remark_roots(n, rng)))
        elements.append(random_self_reciprocal(n, rng))
    for p in elements:
        for g in unit_circle_grid(32, offset=0.21):
            rep = hermite_angle_check(p, g)
            dev = max(dev, rep.max_deviation)
            integral = max(integral, rep.integral_magnitude)
            skipped += rep.skipped_zeros
    ok = dev < 1e-8 and integral < 1e-10
    return ({"max_deviation": dev, "max_integral": integral, "skipped": skipped}, ok,
            f"max angle deviation = {dev:.1e} (tol 1e-8), max |int p dsigma| = {integral:.1e} (tol 1e-10), 32 gammas")


def c10_paley_wiener():
    recon, dist, alt, crossings, unresolved = 0.0, 0.0, 0.0, 0, 0
    for case in range(20):
        rng = rng_for(10, case)
        a = float(rng.uniform(0.5, 3.0))
        f = random_paley_wiener(a, rng)
        big = sample_entire(lambda x: np.exp(1j * a * x) * f(x), a, -15, 15)
        g1, g2 = pw_euler_decompose(big)
        recon = max(recon, float(np.abs(g1.values + 1j * g2.values - big.values).max() / np.abs(big.values).max()))
        for g in (g1, g2):
            c = g(np.array([rng.uniform(-10, 10)]))[0]
            rep = pw_level_progression_check(g, c)
            crossings += len(rep.crossings)
            unresolved += len(rep.unresolved)
            dist = max(dist, rep.max_distance)
            alt = max(alt, rep.alt_max_distance)
    logging.getLogger("rank_one_lab.hermitian").info(
        "variant progression {2 arg c + 2 pi k/a} misses crossings by up to %.3g", alt)
    ok = recon < 1e-14 and dist < 1e-6 and crossings > 0
    body = {"reconstruction": recon, "max_distance": dist, "alt_max_distance": alt,
            "crossings": crossings, "unresolved": unresolved}
    detail = (f"relative reconstruction error {recon:.1e}; {crossings} crossings within {dist:.1e} of "
              f"arg(c)/a + pi k/a (tol 1e-6); variant progression off by up to {alt:.2f}")
    return body, ok, detail


def c11_anderson():
    box = LatticeBox((30,))
    dist = PotentialDistribution.uniform(0, 1)
    delta = cyclicity_mc(AndersonConfig(box, dist, 200, SEED))
    rand = cyclicity_mc(AndersonConfig(box, dist, 200, SEED, TestVector("random")))
    t = np.linspace(-0.5, 1.5, 401)
    density = ((t >= 0) & (t <= 1)).astype(float)
    jumps = [privalov_jump(t, density, x).error for x in (0.25, 0.5, 0.75)]
    ok = delta.cyclic_count == 200 and rand.cyclic_count >= 198 and max(jumps) < 1e-3
    ok = ok and delta.absolutely_continuous
    body = {"delta": delta.summary(), "random": rand.summary(), "random_failures": list(rand.failures),
            "privalov_errors": jumps}
    detail = (f"delta_1 cyclic {delta.cyclic_count}/200, random f cyclic {rand.cyclic_count}/200 (>= 198), "
              f"Privalov density error {max(jumps):.1e} (tol 1e-3)")
    return body, ok, detail


CRITERIA = [
    (1, "resolvent identity", c1_resolvent, 5),
    (2, "Aronszajn-Krein", c2_aronszajn_krein, 5),
    (3, "finite Aronszajn-Donoghue", c3_aronszajn_donoghue, 5),
    (4, "cyclicity sweep", c4_cyclicity_sweep, 30),
    (5, "Clark measures", c5_clark_measures, 10),
    (6, "model consistency", c6_model_consistency, 5),
    (7, "spectral averaging", c7_spectral_averaging, 5),
    (8, "level-set theorem", c8_level_sets, 10),
    (9, "Hermitian angle", c9_hermite_angle, 5),
    (10, "Paley-Wiener Euler decomposition", c10_paley_wiener, 10),
    (11, "Anderson MC and Privalov jump", c11_anderson, 60),
]

_BODIES = {}


@pytest.mark.parametrize("num, title, fn, budget", CRITERIA, ids=[f"C{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn, budget):
    t0 = time.perf_counter()
    body, ok, detail = fn()
    elapsed = time.perf_counter() - t0
    _BODIES[num] = dumps_body(body)
    passed = ok and elapsed < budget
    record_acceptance(f"{'PASS' if passed else 'FAIL'} C{num} {title}: {detail}; {elapsed:.2f}s (budget {budget}s)")
    assert ok, detail
    assert elapsed < budget, f"took {elapsed:.1f}s"


CLI_RUNS = [
    ["sweep-alpha", "--dim", "8", "--seed", "7", "--grid", "2000", "--format", "csv"],
    ["clark", "--theta", "random", "--n", "6", "--seed", "4", "--gamma", "i"],
    ["level-sets", "--c", "0", "--n", "8", "--seed", "3"],
    ["pw-euler", "--seed", "11"],
    ["anderson-mc", "--samples", "50", "--seed", "5", "--vector", "random", "--workers", "4"],
    ["affine-sweep", "--grid", "200", "--direction", "site:0", "--format", "csv"],
]


def _cli_body(argv, capsys):
    main(argv)
    out = capsys.readouterr().out
    return extract_body(out)


def test_c12_determinism(capsys):
    t0 = time.perf_counter()
    mismatched = []
    for num, _title, fn, _budget in CRITERIA:
        first = _BODIES.get(num)
        if first is None:
            first = dumps_body(fn()[0])
        if dumps_body(fn()[0]) != first:
            mismatched.append(f"C{num}")
    for argv in CLI_RUNS:
        if _cli_body(argv, capsys) != _cli_body(argv, capsys):
            mismatched.append(argv[0])
    elapsed = time.perf_counter() - t0
    ok = not mismatched
    detail = ("criteria 1-11 and 6 CLI runs byte-identical on rerun" if ok
              else f"differing bodies: {', '.join(mismatched)}")
    record_acceptance(f"{'PASS' if ok else 'FAIL'} C12 determinism: {detail}; {elapsed:.2f}s")
    assert ok, detail
