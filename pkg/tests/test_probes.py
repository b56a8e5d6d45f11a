import numpy as np
import pytest

from cmgkit import catalog, geometry, germs, probes, sampling
from cmgkit.probes import Region


def s2xs2():
    return catalog.product(catalog.sphere(2), catalog.sphere(2))


def test_osc_model_space():
    rep = probes.osc_k(catalog.sphere(3, 2.0), [0.1, 0.3, -0.2])
    assert rep.k_max == pytest.approx(2.0, abs=1e-9)
    assert rep.k_min == pytest.approx(2.0, abs=1e-9)
    assert rep.osc <= 1e-9
    assert rep.refined


def test_osc_product_control():
    m = s2xs2()
    rep = probes.osc_k(m, [0.1, 0.2, 0.1, 0.3])
    assert rep.osc == pytest.approx(1.0, abs=1e-6)
    assert rep.k_max == pytest.approx(1.0, abs=1e-6)
    assert rep.k_min == pytest.approx(0.0, abs=1e-6)
    assert probes.check_witness(m, rep)
    assert rep.osc == rep.k_max - rep.k_min


def test_osc_surface_is_zero():
    m = catalog.sphere(2, 3.0)
    rep = probes.osc_k(m, [0.1, 0.2])
    assert rep.osc == 0.0
    assert rep.k_max == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_osc_perturbed_sphere_positive(eps):
    m = catalog.conformal_perturbation(catalog.sphere(3), eps)
    rep = probes.osc_k(m, np.zeros(3))
    assert rep.osc > 0
    assert probes.check_witness(m, rep)


def test_refinement_never_loses_to_sampling():
    m = catalog.conformal_perturbation(catalog.sphere(4), 0.3, "gauss")
    p = np.array([0.1, -0.2, 0.0, 0.15])
    budget = 2000
    rep = probes.osc_k(m, p, budget=budget, starts=8)
    R, g = geometry.riemann(m, p), geometry.metric(m, p)
    E = geometry.orthonormal_frame(g)
    pairs = sampling.orthonormal_pairs(4, budget)
    K = [geometry.sectional_from_tensor(R, E @ u, E @ w) for u, w in pairs]
    assert rep.k_max >= max(K) - 1e-12
    assert rep.k_min <= min(K) + 1e-12
    assert rep.refined


def test_osc_deterministic():
    m = catalog.conformal_perturbation(catalog.sphere(4), 0.2, "gauss")
    a = probes.osc_k(m, [0.1, 0.0, 0.2, 0.1])
    b = probes.osc_k(m, [0.1, 0.0, 0.2, 0.1])
    assert (a.k_max, a.k_min) == (b.k_max, b.k_min)


# -- surfaces -----------------------------------------------------------------


def test_revolution_curvature_and_gradient():
    prof = catalog.profile("cubic", 1.0)
    m, f = germs.revolution_germ(prof)
    assert np.abs(probes.curvature_gradient(m, f.base)).max() <= 1e-6
    for r in (0.1, 0.3):
        q = np.array([0.6 * r, 0.8 * r])
        assert probes.gaussian_curvature(m, q) == pytest.approx(-6 / (1 + r * r), rel=1e-10)
        grad = probes.curvature_gradient(m, q)
        assert geometry.norm(geometry.metric(m, q), grad) == pytest.approx(12 * r / (1 + r * r) ** 2, abs=1e-5)


@pytest.mark.parametrize("name", ["sin", "sinh", "cubic"])
def test_two_dim_identities(name):
    m, f = germs.revolution_germ(catalog.parse_profile(name))
    r1, r2 = probes.two_dim_identities(m, f, [0.25, -0.1])
    assert r1 <= 1e-8 and r2 <= 1e-8


def test_surface_only_probes_reject_higher_dimension():
    with pytest.raises(ValueError):
        probes.curvature_gradient(catalog.sphere(3), np.zeros(3))


# -- Schur scan ---------------------------------------------------------------


@pytest.mark.parametrize("m, nominal", [(catalog.euclidean(3), 0.0), (catalog.sphere(3, 2.0), 2.0),
                                        (catalog.hyperbolic(3, 1.0), -1.0)])
def test_schur_constant(m, nominal):
    v = probes.schur_scan(m, Region((0.0, 0.0, 0.0), 0.3, samples=40))
    assert v.constant
    assert v.value == pytest.approx(nominal, abs=1e-6)
    assert len(v.reports) == v.samples == 40


@pytest.mark.parametrize("m, reason", [
    (catalog.product(catalog.sphere(2), catalog.euclidean(1)), "anisotropic point"),
    (catalog.conformal_perturbation(catalog.sphere(3), 0.1), "anisotropic point"),
])
def test_schur_nonconstant_with_witness(m, reason):
    v = probes.schur_scan(m, Region((0.0, 0.0, 0.0), 0.3, samples=40))
    assert not v.constant
    assert v.reason == reason
    assert probes.check_witness(m, v.witness)
    assert v.witness.osc > 1e-6


def test_schur_perturbed_hyperbolic():
    # for n >= 3 a pointwise-isotropic metric has constant curvature, so a genuine metric
    # should fail through anisotropy, never through "isotropic value varies"
    m = catalog.conformal_perturbation(catalog.hyperbolic(3), 0.2, "gauss")
    v = probes.schur_scan(m, Region((0.0, 0.0, 0.0), 0.3, samples=20))
    assert v.reason == "anisotropic point"


def test_schur_threads_match_serial():
    m = catalog.conformal_perturbation(catalog.sphere(3), 0.1)
    region = Region((0.0, 0.0, 0.0), 0.3, samples=12)
    a = probes.schur_scan(m, region, workers=1)
    b = probes.schur_scan(m, region, workers=3)
    assert (a.max_osc, a.spread, a.reason) == (b.max_osc, b.spread, b.reason)


def test_schur_needs_dimension_three():
    with pytest.raises(ValueError):
        probes.schur_scan(catalog.sphere(2), Region((0.0, 0.0), 0.3))


# -- quasiconformal sweep -----------------------------------------------------


def sphere_family(bump="saddle"):
    base, f = germs.model_germ("sphere", 3, 1.0)
    return lambda e: (catalog.conformal_perturbation(base, e, bump), f)


@pytest.mark.parametrize("bump", ["saddle", "gauss"])
def test_sweep_endpoint_and_positive_defect(bump):
    rows = probes.quasiconformal_sweep(sphere_family(bump), [0.0, 0.05, 0.1], budget=4000, starts=8)
    assert [r.param for r in rows] == [0.0, 0.05, 0.1]
    assert rows[0].kappa_proxy - 1 <= 1e-7
    assert rows[0].osc <= 1e-6
    assert all(r.defect_sup > 0 for r in rows[1:])
    assert rows[1].defect_sup < rows[2].defect_sup
    assert all(r.kappa_proxy == 1 + r.defect_sup for r in rows)


def test_sweep_rejects_non_conformal_baseline():
    family = lambda e: (catalog.euclidean(2), germs.quadratic_germ([1, -1]))  # noqa: E731
    with pytest.raises(ValueError):
        probes.quasiconformal_sweep(family, [0.0, 0.1])
