"""The ten acceptance criteria, one test each.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines as
they happen; they are also repeated in the terminal summary.
"""

import itertools
import time

import numpy as np

from cmgkit import catalog, cli, geometry, germs, index, probes
from cmgkit.geometry import Plane2
from cmgkit.probes import Region
from cmgkit.selftest import curved_catalog, model_hessian_error, random_point, random_polynomial_germ

MODELS = ("euclidean", "sphere", "hyperbolic")


def test_1_model_germ_hessians(accept):
    t0 = time.perf_counter()
    worst = 0.0
    for model, n, c in itertools.product(MODELS, (2, 3, 4), (0.5, 1.0, 2.0)):
        m, f = germs.model_germ(model, n, c)
        assert len(germs.neighborhood_points(m, f.base)) == 192
        worst = max(worst, model_hessian_error(model, n, c))
    dt = time.perf_counter() - t0
    accept(1, "model-germ Hessian identities", worst <= 1e-9 and dt < 10,
           f"max={worst:.2g} <= 1e-09, runtime < 10 s", dt)


def test_2_ricci_identity(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    mets = curved_catalog()
    worst = 0.0
    for k in range(100):
        m = mets[k % len(mets)]
        f = random_polynomial_germ(m.dim, rng)
        q = random_point(m, rng)
        Z, X = rng.normal(size=(2, m.dim))
        worst = max(worst, geometry.ricci_identity_residual(m, f, q, Z, X))
    dt = time.perf_counter() - t0
    accept(2, "Ricci identity on 100 tuples", worst <= 1e-8 and dt < 30,
           f"max={worst:.2g} <= 1e-08, runtime < 30 s", dt)


def test_3_curvature_from_germs(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    mets = curved_catalog()
    longo = 0.0
    for k in range(50):
        m = mets[k % len(mets)]
        f = random_polynomial_germ(m.dim, rng)
        q, z = random_point(m, rng), rng.normal(size=m.dim)
        K = geometry.sectional(m, Plane2.from_vectors(m, q, geometry.gradient(m, f, q), z))
        longo = max(longo, abs(germs.longo_curvature(m, f, q, z) - K))

    cmgs = [germs.model_germ(model, n, c) for model, n, c in
            itertools.product(MODELS, (3, 4), (0.5, 2.0))]
    assert all(germs.verify_cmg(m, f).is_cmg for m, f in cmgs)
    via, spread = 0.0, 0.0
    for k in range(50):
        m, f = cmgs[k % len(cmgs)]
        q = random_point(m, rng)
        grad = geometry.gradient(m, f, q)
        vals = []
        for z in rng.normal(size=(4, m.dim)):
            vals.append(germs.curvature_via_germ(m, f, q, z))
            via = max(via, abs(vals[-1] - geometry.sectional(m, Plane2.from_vectors(m, q, grad, z))))
        spread = max(spread, max(vals) - min(vals))
    ok = longo <= 1e-7 and via <= 1e-7 and spread <= 1e-9
    accept(3, "curvature from third derivatives / from grad h", ok,
           f"longo={longo:.2g} via={via:.2g} <= 1e-07, z-spread={spread:.2g} <= 1e-09",
           time.perf_counter() - t0)


def test_4_pointwise_isotropy(accept):
    t0 = time.perf_counter()
    worst = 0.0
    for model, n, c in itertools.product(MODELS, (3, 4), (0.5, 1.0, 2.0)):
        m, f = germs.model_germ(model, n, c)
        assert germs.verify_cmg(m, f).is_cmg
        worst = max(worst, probes.osc_k(m, f.base).osc)
    rep = probes.osc_k(catalog.product(catalog.sphere(2), catalog.sphere(2)), [0.1, 0.2, 0.1, 0.3])
    ok = worst <= 1e-6 and abs(rep.osc - 1) <= 1e-6
    accept(4, "osc at CMG bases; S2xS2 control", ok,
           f"max osc={worst:.2g} <= 1e-06, control osc={rep.osc:.12g} (1 +- 1e-06)", time.perf_counter() - t0)


def test_5_surface_critical_point(accept):
    t0 = time.perf_counter()
    m, f = germs.revolution_germ(catalog.profile("cubic", 1.0))
    at_p = geometry.norm(geometry.metric(m, f.base), probes.curvature_gradient(m, f.base))
    err = 0.0
    for r in (0.1, 0.3):
        q = np.array([0.6 * r, 0.8 * r])
        val = geometry.norm(geometry.metric(m, q), probes.curvature_gradient(m, q))
        err = max(err, abs(val - 12 * r / (1 + r * r) ** 2))
    accept(5, "surface phi = r + r^3: grad K", at_p <= 1e-6 and err <= 1e-5,
           f"|grad K(p)|={at_p:.2g} <= 1e-06, |grad K(q)| error={err:.2g} <= 1e-05", time.perf_counter() - t0)


def test_6_index_table(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    table = {}
    mismatches = 0
    for n in (2, 3):
        metrics = [catalog.euclidean(n)] + [
            catalog.conformal_perturbation(catalog.euclidean(n), 1.0, catalog.random_conformal_factor(n, rng))
            for _ in range(5)
        ]
        for k in range(n + 1):
            vals = [index.index_of_gradient(m, germs.morse_germ(n, k)).index for m in metrics]
            table[n, k] = vals[0]
            mismatches += sum(type(v) is not int or v != (-1) ** k for v in vals)
    accept(6, "index table (-1)^k, 5 conformal rescalings", mismatches == 0,
           f"table={table}, mismatches={mismatches}", time.perf_counter() - t0)


def test_7_direction_attainment(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    cases = [(catalog.euclidean(2), germs.quadratic_germ([1, -1]))]
    cases += [germs.model_germ(model, n) for model in MODELS for n in (2, 3)]
    worst = 0.0
    for m, f in cases:
        V = rng.normal(size=(100, m.dim))
        for r in (0.1, 0.01, 0.001):
            _, angles = index.attain_directions(m, f, V, r, tol_angle=1e-3)
            worst = max(worst, float(angles.max()))
    accept(7, "direction attainment, 100 directions x 3 radii", worst <= 1e-3,
           f"max angle={worst:.2g} <= 1e-03", time.perf_counter() - t0)


def test_8_schur_scan(accept):
    t0 = time.perf_counter()
    region = Region((0.0, 0.0, 0.0), 0.5)
    const_err = 0.0
    for m, nominal in ((catalog.euclidean(3), 0.0), (catalog.sphere(3), 1.0), (catalog.hyperbolic(3), -1.0)):
        v = probes.schur_scan(m, region)
        const_err = max(const_err, abs(v.value - nominal) if v.constant else np.inf)
    witnesses = []
    for m in (catalog.product(catalog.sphere(2), catalog.euclidean(1)),
              catalog.conformal_perturbation(catalog.sphere(3), 0.1)):
        v = probes.schur_scan(m, region)
        witnesses.append((not v.constant) and probes.check_witness(m, v.witness))
    accept(8, "Schur scan: models constant, S2xR / perturbed sphere not", const_err <= 1e-6 and all(witnesses),
           f"|c - nominal|={const_err:.2g} <= 1e-06, verified witnesses={witnesses}", time.perf_counter() - t0)


def test_9_quasiconformal_sweep(accept):
    t0 = time.perf_counter()
    base, f = germs.model_germ("sphere", 3, 1.0)
    rows = probes.quasiconformal_sweep(lambda e: (catalog.conformal_perturbation(base, e), f),
                                       [0.0, 0.01, 0.05, 0.1, 0.2])
    r0 = rows[0]
    ok = r0.kappa_proxy - 1 <= 1e-7 and r0.osc <= 1e-6 and all(r.defect_sup > 0 for r in rows[1:])
    accept(9, "kappa sweep endpoint", ok,
           f"kappa-1={r0.kappa_proxy - 1:.2g} <= 1e-07, osc={r0.osc:.2g} <= 1e-06, "
           f"min defect eps>0={min(r.defect_sup for r in rows[1:]):.2g} > 0", time.perf_counter() - t0)


def test_10_selftest_runtime_and_reproducibility(accept, tmp_path):
    times = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        code = cli.main(["selftest", "--workers", "1", "--out-dir", str(tmp_path / name)])
        times.append(time.perf_counter() - t0)
        assert code == 0
    same = (tmp_path / "a" / "selftest.json").read_bytes() == (tmp_path / "b" / "selftest.json").read_bytes()
    accept(10, "selftest under 2 minutes, byte-reproducible", max(times) < 120 and same,
           f"runtimes={[round(t, 1) for t in times]} s < 120 s, identical reports={same}", sum(times))
