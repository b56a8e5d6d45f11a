"""Invariant suite behind ``cmgkit selftest``.

Each check names the statement it exercises and the tolerance it was judged
against.  ``tol_scale`` multiplies every tolerance (0 makes every check with a
non-zero residual fail).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import catalog, geometry, germs, index, probes
from .geometry import Plane2

STATEMENTS = {
    "third-derivative-identity": "antisymmetrised third covariant derivative equals R(Z,X) grad f",
    "curvature-tensor-symmetries": "Riemann tensor symmetries and first Bianchi identity",
    "model-germ-hessians": "model germs satisfy Hess f = 2g, -c f g, c f g",
    "cmg-definition": "critical point, non-degenerate Hessian, Hess f = h g with h(p) != 0",
    "index-formula": "index of grad f at a Morse point is (-1)^k, for any metric",
    "direction-density": "directions of grad f near a Morse point fill the unit sphere",
    "oscillation": "max - min of sectional curvature over 2-planes",
    "curvature-from-germ": "sectional curvature from third derivatives and from grad h",
    "critical-curvature-2d": "surface: the base of a conformal Morse germ is critical for K",
    "pointwise-constancy": "n >= 3: all 2-planes at the base of a conformal Morse germ have equal K",
    "global-constancy": "isotropic curvature everywhere means constant curvature",
    "quasiconformal-endpoint": "oscillation vanishes when the germ is exactly conformal",
}


@dataclass
class Check:
    statement: str
    name: str
    value: float
    tolerance: float
    passed: bool
    relation: str = "<="


def random_polynomial_germ(n: int, rng: np.random.Generator, degree: int = 4, scale: float = 0.5):
    """Dense random polynomial of the given degree in chart coordinates."""
    terms = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            terms.append((combo, rng.normal() * scale))

    def f(x):
        out = 0.0
        for combo, coef in terms:
            t = coef
            for i in combo:
                t = t * x[i]
            out = out + t
        return out

    return germs.GermSpec(np.zeros(n), f, f"poly{degree}")


def curved_catalog(rng: np.random.Generator | None = None) -> list:
    rng = rng or np.random.default_rng(7)
    u = catalog.random_conformal_factor(3, rng, amplitude=0.3)
    return [
        catalog.sphere(3, 1.0),
        catalog.hyperbolic(3, 0.5),
        catalog.revolution(catalog.profile("cubic", 1.0)),
        catalog.revolution(catalog.profile("sin")),
        catalog.product(catalog.sphere(2), catalog.sphere(2)),
        catalog.conformal_perturbation(catalog.sphere(3), 0.1),
        catalog.conformal_perturbation(catalog.euclidean(3), 1.0, u),
    ]


def random_point(m, rng, radius: float = 0.3) -> np.ndarray:
    return rng.uniform(-radius, radius, size=m.dim) * m.scale


def _check(statement, name, value, tol, tol_scale) -> Check:
    t = tol * tol_scale
    return Check(statement, name, float(value), float(t), bool(value <= t))


def check_ricci(tol_scale, rng, cases=100):
    mets = curved_catalog()
    worst = 0.0
    for k in range(cases):
        m = mets[k % len(mets)]
        f = random_polynomial_germ(m.dim, rng)
        q = random_point(m, rng)
        Z, X = rng.normal(size=m.dim), rng.normal(size=m.dim)
        worst = max(worst, geometry.ricci_identity_residual(m, f, q, Z, X))
    yield _check("third-derivative-identity", f"max residual over {cases} tuples", worst, 1e-8, tol_scale)


def check_symmetries(tol_scale, rng, per_metric=10):
    worst = 0.0
    for m in curved_catalog():
        for _ in range(per_metric):
            R = geometry.riemann(m, random_point(m, rng))
            s = max(np.max(np.abs(R)), 1.0)
            res = max(
                np.max(np.abs(R + R.transpose(1, 0, 2, 3))),
                np.max(np.abs(R + R.transpose(0, 1, 3, 2))),
                np.max(np.abs(R - R.transpose(2, 3, 0, 1))),
                np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3))),
            )
            worst = max(worst, res / s)
    yield _check("curvature-tensor-symmetries", "max relative violation", worst, 1e-10, tol_scale)


def model_hessian_error(model: str, n: int, c: float) -> float:
    """Max over the 192-point neighbourhood of the g-norm of Hess f - h_model g."""
    m, f = germs.model_germ(model, n, c)
    pts = germs.neighborhood_points(m, f.base)
    g, H = germs._hessian_values(m, f, pts)
    fv = np.asarray(f.f([pts[:, i] for i in range(n)]), dtype=float)
    h = {"euclidean": 2.0 + 0 * fv, "sphere": -c * fv, "hyperbolic": c * fv}[model]
    Linv = np.linalg.inv(np.linalg.cholesky(g))
    S = Linv @ (H - h[:, None, None] * g) @ np.swapaxes(Linv, -1, -2)
    return float(np.max(np.abs(np.linalg.eigvalsh((S + np.swapaxes(S, -1, -2)) / 2))))


def check_model_germs(tol_scale):
    worst = 0.0
    for model, n, c in itertools.product(("euclidean", "sphere", "hyperbolic"), (2, 3, 4), (0.5, 1.0, 2.0)):
        worst = max(worst, model_hessian_error(model, n, c))
    yield _check("model-germ-hessians", "max |Hess f - h g| over 192 samples", worst, 1e-9, tol_scale)


def check_cmg_definition(tol_scale):
    tols = germs.Tolerances(*(t * tol_scale for t in (1e-10, 1e-8, 1e-7, 1e-8, 1e-6)))
    m, f = germs.model_germ("sphere", 3, 1.0)
    v = germs.verify_cmg(m, f, tols=tols)
    ok = v.is_cmg and abs(v.h_at_p + 1) <= 1e-12 and v.morse_index == 3
    yield Check("cmg-definition", "sphere(1) model germ is a CMG with h(p) = -1, k = n",
                v.defect_sup, tols.conf, bool(ok))
    vn = germs.verify_cmg(m, -f, tols=tols)
    ok = vn.is_cmg == v.is_cmg and vn.morse_index == 0 and abs(vn.h_at_p - 1) <= 1e-12
    yield Check("cmg-definition", "negated germ: same verdict, k -> n - k, h -> -h", vn.defect_sup, tols.conf, bool(ok))
    s = germs.verify_cmg(catalog.euclidean(2), germs.quadratic_germ([1, -1]), tols=tols)
    yield Check("cmg-definition", "flat saddle is not a CMG (k = 1)", s.defect_sup, tols.conf,
                bool(not s.is_cmg and s.morse_index == 1), ">")
    mr, fr = germs.revolution_germ(catalog.profile("cubic", 1.0))
    r = germs.verify_cmg(mr, fr, tols=tols)
    yield Check("cmg-definition", "revolution phi=r+r^3 germ is a CMG with h(p) = 1", r.defect_sup, tols.conf,
                bool(r.is_cmg and abs(r.h_at_p - 1) <= 1e-12))


def check_index(tol_scale, rng):
    bad = 0
    for n in (2, 3):
        for k in range(n + 1):
            res = index.index_of_gradient(catalog.euclidean(n), germs.morse_germ(n, k))
            bad += res.index != (-1) ** k or res.jacobian_index != res.index
    for _ in range(5):
        u = catalog.random_conformal_factor(2, rng)
        m = catalog.conformal_perturbation(catalog.euclidean(2), 1.0, u)
        bad += index.index_of_gradient(m, germs.quadratic_germ([1, -1])).index != -1
    yield Check("index-formula", "mismatches in the (-1)^k table and under conformal rescaling",
                float(bad), 0.0, bad == 0, "==")


def check_directions(tol_scale, rng, count=100):
    V = rng.normal(size=(count, 2))
    cases = [(catalog.euclidean(2), germs.quadratic_germ([1, -1]))] + [
        germs.model_germ(model, 2) for model in ("euclidean", "sphere", "hyperbolic")
    ]
    worst = 0.0
    for m, f in cases:
        for r in (0.1, 0.01, 0.001):
            _, a = index.attain_directions(m, f, V, r)
            worst = max(worst, float(a.max()))
    yield _check("direction-density", "max angle over 100 directions x 4 germs x 3 radii", worst, 1e-3, tol_scale)


def check_oscillation(tol_scale):
    m = catalog.product(catalog.sphere(2), catalog.sphere(2))
    rep = probes.osc_k(m, [0.1, 0.2, 0.1, 0.3])
    yield _check("oscillation", "S2xS2: |osc - 1|", abs(rep.osc - 1.0), 1e-6, tol_scale)
    yield _check("oscillation", "S2xS2: |k_min|", abs(rep.k_min), 1e-6, tol_scale)
    rep = probes.osc_k(catalog.sphere(3, 2.0), [0.2, -0.1, 0.3])
    yield _check("oscillation", "S3(2): osc", rep.osc, 1e-9, tol_scale)


def check_curvature_from_germ(tol_scale, rng, cases=50):
    mets = [m for m in curved_catalog() if m.dim >= 2]
    worst = 0.0
    for k in range(cases):
        m = mets[k % len(mets)]
        f = random_polynomial_germ(m.dim, rng)
        q = random_point(m, rng)
        z = rng.normal(size=m.dim)
        K1 = germs.longo_curvature(m, f, q, z)
        grad = geometry.gradient(m, f, q)
        K2 = geometry.sectional(m, Plane2.from_vectors(m, q, grad, z))
        worst = max(worst, abs(K1 - K2))
    yield _check("curvature-from-germ", "|third-derivative formula - sectional|, arbitrary germs", worst, 1e-7, tol_scale)

    models = [("sphere", 3, 1.0), ("sphere", 4, 2.0), ("hyperbolic", 3, 0.5), ("hyperbolic", 4, 1.0), ("euclidean", 3, 1.0)]
    worst, spread = 0.0, 0.0
    for k in range(cases):
        model, n, c = models[k % len(models)]
        m, f = germs.model_germ(model, n, c)
        q = random_point(m, rng)
        grad = geometry.gradient(m, f, q)
        vals = []
        for _ in range(5):
            z = rng.normal(size=n)
            vals.append(germs.curvature_via_germ(m, f, q, z))
            K2 = geometry.sectional(m, Plane2.from_vectors(m, q, grad, z))
            worst = max(worst, abs(vals[-1] - K2))
        spread = max(spread, max(vals) - min(vals))
    yield _check("curvature-from-germ", "|conformal formula - sectional|, model germs", worst, 1e-7, tol_scale)
    yield _check("curvature-from-germ", "z-spread of conformal formula", spread, 1e-9, tol_scale)


def check_critical_2d(tol_scale):
    m, f = germs.revolution_germ(catalog.profile("cubic", 1.0))
    g0 = geometry.metric(m, f.base)
    yield _check("critical-curvature-2d", "|grad K(p)| on phi = r + r^3",
                 geometry.norm(g0, probes.curvature_gradient(m, f.base)), 1e-6, tol_scale)
    worst = 0.0
    for r in (0.1, 0.3):
        q = np.array([0.6 * r, 0.8 * r])
        val = geometry.norm(geometry.metric(m, q), probes.curvature_gradient(m, q))
        worst = max(worst, abs(val - 12 * r / (1 + r * r) ** 2))
    yield _check("critical-curvature-2d", "| |grad K(q)| - 12r/(1+r^2)^2 |, r = 0.1, 0.3", worst, 1e-5, tol_scale)
    r1, r2 = probes.two_dim_identities(m, f, np.array([0.18, 0.24]))
    yield _check("critical-curvature-2d", "grad h = -K grad f and grad K || grad f residuals", max(r1, r2), 1e-7, tol_scale)


def check_pointwise(tol_scale):
    worst = 0.0
    for model, n, c in itertools.product(("euclidean", "sphere", "hyperbolic"), (3, 4), (0.5, 1.0, 2.0)):
        m, f = germs.model_germ(model, n, c)
        worst = max(worst, probes.osc_k(m, f.base).osc)
    yield _check("pointwise-constancy", "max osc at CMG bases, n = 3, 4", worst, 1e-6, tol_scale)


def check_global(tol_scale, workers=1):
    region = probes.Region((0.0, 0.0, 0.0), 0.5)
    worst = 0.0
    for m, nominal in ((catalog.euclidean(3), 0.0), (catalog.sphere(3, 1.0), 1.0), (catalog.hyperbolic(3, 1.0), -1.0)):
        v = probes.schur_scan(m, region, tol=max(1e-6 * tol_scale, 1e-300), workers=workers)
        worst = max(worst, abs(v.value - nominal) if v.constant else np.inf)
    yield _check("global-constancy", "|c - nominal| on model spaces", worst, 1e-6, tol_scale)
    for m in (catalog.product(catalog.sphere(2), catalog.euclidean(1)),
              catalog.conformal_perturbation(catalog.sphere(3), 0.1)):
        v = probes.schur_scan(m, region, workers=workers)
        ok = (not v.constant) and v.witness is not None and probes.check_witness(m, v.witness)
        yield Check("global-constancy", f"{m.name}: nonconstant with verified witness",
                    float(v.max_osc), 1e-6, bool(ok), ">")


def check_sweep(tol_scale, workers=1):
    base, f = germs.model_germ("sphere", 3, 1.0)
    rows = probes.quasiconformal_sweep(
        lambda e: (catalog.conformal_perturbation(base, e), f), [0.0, 0.05, 0.1, 0.2], workers=workers
    )
    yield _check("quasiconformal-endpoint", "eps = 0: kappa_proxy - 1", rows[0].kappa_proxy - 1, 1e-7, tol_scale)
    yield _check("quasiconformal-endpoint", "eps = 0: osc", rows[0].osc, 1e-6, tol_scale)
    yield Check("quasiconformal-endpoint", "eps > 0: min defect (must be positive)",
                min(r.defect_sup for r in rows[1:]), 0.0, all(r.defect_sup > 0 for r in rows[1:]), ">")


def _collect(statement: str, group) -> list[Check]:
    """Run a check group; an exception becomes a failed check instead of aborting the suite."""
    out = []
    try:
        for c in group:
            out.append(c)
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        out.append(Check(statement, f"raised {type(exc).__name__}: {exc}", float("nan"), 0.0, False))
    return out


def run_selftest(tol_scale: float = 1.0, workers: int = 1, seed: int = 20240) -> list[Check]:
    rng = np.random.default_rng(seed)
    groups = [
        ("third-derivative-identity", lambda: check_ricci(tol_scale, rng)),
        ("curvature-tensor-symmetries", lambda: check_symmetries(tol_scale, rng)),
        ("model-germ-hessians", lambda: check_model_germs(tol_scale)),
        ("cmg-definition", lambda: check_cmg_definition(tol_scale)),
        ("index-formula", lambda: check_index(tol_scale, rng)),
        ("direction-density", lambda: check_directions(tol_scale, rng)),
        ("oscillation", lambda: check_oscillation(tol_scale)),
        ("curvature-from-germ", lambda: check_curvature_from_germ(tol_scale, rng)),
        ("critical-curvature-2d", lambda: check_critical_2d(tol_scale)),
        ("pointwise-constancy", lambda: check_pointwise(tol_scale)),
        ("global-constancy", lambda: check_global(tol_scale, workers)),
        ("quasiconformal-endpoint", lambda: check_sweep(tol_scale, workers)),
    ]
    return [c for statement, group in groups for c in _collect(statement, group())]
