"""Pointwise and regional curvature probes.

* :func:`osc_k` - max minus min of the sectional curvature over all 2-planes at a point
* :func:`curvature_gradient` - gradient of the Gaussian curvature of a surface
* :func:`two_dim_identities` - residuals of ``grad h = -K grad f`` and ``grad K || grad f``
* :func:`schur_scan` - is the curvature pointwise isotropic and the same everywhere on a region?
* :func:`quasiconformal_sweep` - conformal defect of a germ against the oscillation at its base
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Local, MetricChart, Plane2, norm, orthonormal_frame, sectional
from .germs import GradientFloorError, Neighborhood, Tolerances, defect_over, factor_gradient, \
    neighborhood_points, verify_cmg
from .sampling import ball_points, orthonormal_pairs

KAPPA_DEFINITION = (
    "kappa_proxy = 1 + max over the sampled neighbourhood of the g-operator norm of "
    "g^-1 Hess f - h I, with h = trace_g(Hess f)/n"
)


@dataclass
class CurvatureReport:
    point: np.ndarray
    k_max: float
    k_min: float
    osc: float
    argmax_plane: Plane2
    argmin_plane: Plane2
    samples: int
    refined: bool


def _frame_tensor(R: np.ndarray, E: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,ai,bj,ck,dl->ijkl", R, E, E, E, E, optimize=True)


def _k_values(Rh, U, W):
    RW = np.einsum("ijkl,sj,sk->sil", Rh, W, W)
    return np.einsum("sil,si,sl->s", RW, U, U)


def _k_grads(Rh, U, W):
    gu = np.einsum("ajkl,sj,sk,sl->sa", Rh, W, W, U) + np.einsum("ijka,si,sj,sk->sa", Rh, U, W, W)
    gw = np.einsum("ibkl,si,sk,sl->sb", Rh, U, W, U) + np.einsum("ijbl,si,sj,sl->sb", Rh, U, W, U)
    return gu, gw


def _orthonormalize(U, W):
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    W = W - np.sum(U * W, axis=1, keepdims=True) * U
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    return U, W


def _climb(Rh, U, W, sign: float, min_step: float = 1e-10, max_iter: int = 5000):
    """Projected ascent of sign*K over orthonormal pairs, all seeds at once.

    Returns (U, W, K, converged): a seed converges when its step falls below
    ``min_step`` or its projected gradient vanishes.
    """
    K = sign * _k_values(Rh, U, W)
    scale = max(np.max(np.abs(Rh)), 1e-300)
    t = np.full(len(U), 0.25 / scale)
    active = np.ones(len(U), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        a = np.flatnonzero(active)
        u, w = U[a], W[a]
        gu, gw = _k_grads(Rh, u, w)
        gu, gw = sign * gu, sign * gw
        # drop components inside the plane: they do not move it on the Grassmannian
        gu -= np.sum(gu * u, 1, keepdims=True) * u + np.sum(gu * w, 1, keepdims=True) * w
        gw -= np.sum(gw * u, 1, keepdims=True) * u + np.sum(gw * w, 1, keepdims=True) * w
        gnorm = np.sqrt(np.sum(gu**2, 1) + np.sum(gw**2, 1))
        flat = gnorm <= 1e-14 * scale
        nu, nw = _orthonormalize(u + t[a, None] * gu, w + t[a, None] * gw)
        k_new = sign * _k_values(Rh, nu, nw)
        better = (k_new > K[a]) & ~flat
        idx = a[better]
        U[idx], W[idx], K[idx] = nu[better], nw[better], k_new[better]
        t[idx] *= 1.5
        t[a[~better]] *= 0.5
        active[a[flat]] = False
        active[a[t[a] < min_step / scale]] = False
    return U, W, sign * K, ~active


def osc_k(m: MetricChart, p, budget: int = 20000, starts: int = 32, pool=None) -> CurvatureReport:
    """Extremes of K(p, sigma) over the Grassmannian of 2-planes at p.

    Low-discrepancy sampling of orthonormal pairs, then multistart projected
    ascent (and descent) from the best ``starts`` samples.
    """
    p = np.asarray(p, dtype=float)
    loc = Local(m, p, 2)
    g = loc.g0
    R = loc.riemann.coeffs[..., 0]
    E = orthonormal_frame(g)
    n = m.dim
    if n == 2:
        plane = Plane2.from_vectors(m, p, E[:, 0], E[:, 1], g=g)
        k = float(np.einsum("ijkl,i,j,k,l->", R, plane.u, plane.w, plane.w, plane.u))
        return CurvatureReport(p, k, k, 0.0, plane, plane, 1, True)

    Rh = _frame_tensor(R, E)
    pairs = orthonormal_pairs(n, budget)
    U, W = pairs[:, 0].copy(), pairs[:, 1].copy()
    Ks = _k_values(Rh, U, W)
    order = np.argsort(Ks, kind="stable")
    hi = order[::-1][:starts]
    lo = order[:starts]

    Umax, Wmax, Kmax, ok_max = _climb(Rh, U[hi].copy(), W[hi].copy(), +1.0)
    Umin, Wmin, Kmin, ok_min = _climb(Rh, U[lo].copy(), W[lo].copy(), -1.0)
    i_max = int(np.argmax(Kmax))
    i_min = int(np.argmin(Kmin))
    k_max, k_min = float(Kmax[i_max]), float(Kmin[i_min])
    argmax = Plane2(p, E @ Umax[i_max], E @ Wmax[i_max])
    argmin = Plane2(p, E @ Umin[i_min], E @ Wmin[i_min])
    return CurvatureReport(
        point=p,
        k_max=k_max,
        k_min=k_min,
        osc=max(k_max - k_min, 0.0),
        argmax_plane=argmax,
        argmin_plane=argmin,
        samples=budget,
        refined=bool(ok_max.all() and ok_min.all()),
    )


def gaussian_curvature(m: MetricChart, q) -> float:
    if m.dim != 2:
        raise ValueError("Gaussian curvature needs a 2-dimensional chart")
    loc = Local(m, q, 2)
    R = loc.riemann.coeffs[..., 0]
    g = loc.g0
    return float(R[0, 1, 1, 0] / np.linalg.det(g))


def curvature_gradient(m: MetricChart, p) -> np.ndarray:
    """Riemannian gradient of the Gaussian curvature field, from third-order metric jets."""
    if m.dim != 2:
        raise ValueError("curvature_gradient is defined for surfaces (n = 2)")
    loc = Local(m, p, 3)
    g = loc.g
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]
    K = loc.riemann[0, 1, 1, 0] / det
    return loc.ginv0 @ K.grad().coeffs[..., 0]


def two_dim_identities(m: MetricChart, f, q, floor: float = Tolerances.floor) -> tuple[float, float]:
    """``(|grad h + K grad f|, |grad K - <grad K, u> u|)`` with ``u = grad f/|grad f|``."""
    if m.dim != 2:
        raise ValueError("two_dim_identities needs n = 2")
    _, grad_h, grad_f, loc = factor_gradient(m, f, q)
    g = loc.g0
    gn = norm(g, grad_f)
    if gn < floor:
        raise GradientFloorError(f"|grad f| = {gn:.3g} below floor {floor:g}")
    K = float(loc.riemann.coeffs[0, 1, 1, 0, 0] / np.linalg.det(g))
    grad_K = curvature_gradient(m, q)
    u = grad_f / gn
    r1 = norm(g, grad_h + K * grad_f)
    r2 = norm(g, grad_K - (u @ g @ grad_K) * u)
    return r1, r2


# -- regional scans ---------------------------------------------------------


@dataclass(frozen=True)
class Region:
    center: tuple
    radius: float
    samples: int = 200


@dataclass
class SchurVerdict:
    constant: bool
    value: Optional[float]  # the constant curvature when constant
    witness: Optional[CurvatureReport]  # first offending point otherwise
    reason: str
    max_osc: float
    spread: float  # max - min of k_max over the region
    samples: int
    skipped: int
    reports: list = field(default_factory=list, repr=False)  # one per valid sample, in sample order


def _map(fn, items, workers: int):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def schur_scan(m: MetricChart, region: Region, tol: float = 1e-6, budget: int = 4000,
               starts: int = 8, workers: int = 1) -> SchurVerdict:
    """Constancy of sectional curvature over a chart ball.

    Checks pointwise isotropy (``osc_k <= tol``) at every sample, then that
    the isotropic value agrees across samples.
    """
    if m.dim < 3:
        raise ValueError("schur_scan needs n >= 3")
    pts = ball_points(region.center, region.radius, region.samples)
    ok = m.valid(pts)
    pts = pts[ok]
    reports = _map(lambda q: osc_k(m, q, budget=budget, starts=starts), pts, workers)
    oscs = np.array([r.osc for r in reports])
    kmax = np.array([r.k_max for r in reports])
    spread = float(kmax.max() - kmax.min())
    common = dict(max_osc=float(oscs.max()), spread=spread, samples=len(pts), skipped=int((~ok).sum()),
                  reports=reports)
    bad = np.flatnonzero(oscs > tol)
    if len(bad):
        return SchurVerdict(False, None, reports[bad[0]], "anisotropic point", **common)
    off = np.flatnonzero(np.abs(kmax - kmax[0]) > tol)
    if len(off):
        return SchurVerdict(False, None, reports[off[0]], "isotropic value varies", **common)
    return SchurVerdict(True, float(kmax.mean()), None, "constant", **common)


@dataclass
class QcRow:
    param: float
    kappa_proxy: float
    k_max: float
    k_min: float
    osc: float
    refined: bool
    defect_sup: float


def quasiconformal_sweep(
    family: Callable[[float], tuple],
    eps_grid: Sequence[float],
    p=None,
    sampling: Neighborhood = Neighborhood(),
    budget: int = 20000,
    starts: int = 32,
    workers: int = 1,
) -> list[QcRow]:
    """Tabulate (eps, kappa_proxy, Osc K_p) along a family ``eps -> (metric, germ)``.

    The member at eps = 0 must be a conformal Morse germ.
    """
    m0, f0 = family(0.0)
    verdict = verify_cmg(m0, f0, sampling)
    if not verdict.is_cmg:
        raise ValueError("baseline family member is not a conformal Morse germ")

    def row(eps):
        m, f = family(eps)
        base = np.asarray(f.base if p is None else p, dtype=float)
        defects, _ = defect_over(m, f, neighborhood_points(m, base, sampling))
        sup = float(np.max(defects))
        rep = osc_k(m, base, budget=budget, starts=starts)
        return QcRow(float(eps), 1.0 + sup, rep.k_max, rep.k_min, rep.osc, rep.refined, sup)

    return _map(row, list(eps_grid), workers)


def check_witness(m: MetricChart, report: CurvatureReport, tol: float = 1e-10) -> bool:
    """Re-evaluate the witness planes with :func:`sectional`."""
    return (
        abs(sectional(m, report.argmax_plane) - report.k_max) <= tol * max(1.0, abs(report.k_max))
        and abs(sectional(m, report.argmin_plane) - report.k_min) <= tol * max(1.0, abs(report.k_min))
    )
