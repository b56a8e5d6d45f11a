"""Conformal Morse germs: model germs, the conformal-Hessian test and the
curvature-from-germ formulas.

A germ ``f`` based at ``p`` is a conformal Morse germ when ``grad f(p) = 0``,
``nabla^2 f(p)`` is non-degenerate and ``nabla^2 f = h g`` near ``p``.
``h`` is always taken as ``trace_g(nabla^2 f) / n``, the only candidate
factor; the *conformal defect* is the g-operator norm of
``nabla^2 f - h g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog, jets
from .geometry import (
    ChartDomainError,
    DegeneratePlaneError,
    Local,
    MetricChart,
    inner,
    norm,
    _third,
)
from .sampling import shell_points


class GradientFloorError(ValueError):
    """The gradient is too small to normalise: the point is too close to the base."""


@dataclass(frozen=True)
class GermSpec:
    base: np.ndarray
    f: Callable
    label: str = "f"

    def __neg__(self) -> "GermSpec":
        f = self.f
        return GermSpec(self.base, lambda x: -f(x), f"-{self.label}")

    def __call__(self, x):
        return self.f(x)


@dataclass(frozen=True)
class Tolerances:
    grad: float = 1e-10  # multiplied by the germ scale
    nondeg: float = 1e-8
    conf: float = 1e-7
    h: float = 1e-8
    floor: float = 1e-6


@dataclass(frozen=True)
class Neighborhood:
    radii: tuple = (0.05, 0.1, 0.2)  # multiples of the chart scale
    per_shell: int = 64


@dataclass
class CmgVerdict:
    grad_norm_at_p: float
    hessian_min_abs_eigenvalue: float
    h_at_p: float
    defect_sup: float
    morse_index: int
    is_cmg: bool
    samples: int = 0
    skipped: int = 0
    reliable: bool = True
    tolerances: Tolerances = field(default_factory=Tolerances)


def model_germ(model: str, n: int, c: float = 1.0) -> tuple[MetricChart, GermSpec]:
    """Model-space metric chart and its radial germ at the origin.

    * euclidean: ``f = |x|^2``; ``nabla^2 f = 2 g``
    * sphere(c): ``f = cos(sqrt(c) d) = (1 - c|x|^2)/(1 + c|x|^2)``; ``nabla^2 f = -c f g``
    * hyperbolic(c): ``f = cosh(sqrt(c) d) = (1 + c|x|^2)/(1 - c|x|^2)``; ``nabla^2 f = c f g``
    """
    if n < 2:
        raise ValueError("model germs need n >= 2")
    base = np.zeros(n)
    if model == "euclidean":
        return catalog.euclidean(n), GermSpec(base, jets.norm_sq, "|x|^2")
    if model == "sphere":
        m = catalog.sphere(n, c)

        def f(x):
            s = c * jets.norm_sq(x)
            return (1.0 - s) / (1.0 + s)

        return m, GermSpec(base, f, f"cos(sqrt({c:g}) d)")
    if model == "hyperbolic":
        m = catalog.hyperbolic(n, c)

        def f(x):
            s = c * jets.norm_sq(x)
            return (1.0 + s) / (1.0 - s)

        return m, GermSpec(base, f, f"cosh(sqrt({c:g}) d)")
    raise ValueError(f"unknown model {model!r}")


def revolution_germ(prof: catalog.Profile) -> tuple[MetricChart, GermSpec]:
    """Radial germ ``f = F(r)`` with ``F' = phi``; its Hessian is ``phi'(r) g``."""
    series = prof.primitive_series()
    return catalog.revolution(prof), GermSpec(
        np.zeros(2), lambda x: jets.polyval(series, jets.norm_sq(x)), f"int {prof.name}"
    )


def quadratic_germ(signs, base=None) -> GermSpec:
    """``sum_i signs[i] * (x_i - p_i)^2``."""
    signs = [float(s) for s in signs]
    base = np.zeros(len(signs)) if base is None else np.asarray(base, dtype=float)

    def f(x):
        out = 0.0
        for s, xi, pi in zip(signs, x, base):
            d = xi - pi
            out = out + s * d * d
        return out

    return GermSpec(base, f, "quadratic" + "".join("+" if s > 0 else "-" for s in signs))


def morse_germ(n: int, k: int) -> GermSpec:
    """Flat Morse normal form with ``k`` negative squares."""
    if not 0 <= k <= n:
        raise ValueError("morse index out of range")
    return quadratic_germ([-1.0] * k + [1.0] * (n - k))


# -- pointwise quantities -------------------------------------------------


def _factor_and_defect(g: np.ndarray, H: np.ndarray):
    """Batched over leading axes: ``h = tr(g^-1 H)/n`` and the operator-norm defect."""
    n = g.shape[-1]
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    S = Linv @ H @ np.swapaxes(Linv, -1, -2)
    S = (S + np.swapaxes(S, -1, -2)) / 2
    h = np.trace(S, axis1=-2, axis2=-1) / n
    eig = np.linalg.eigvalsh(S - h[..., None, None] * np.eye(n))
    return h, np.max(np.abs(eig), axis=-1)


def _hessian_values(m: MetricChart, f, q):
    loc = Local(m, q, 2)
    _, _, H = loc.hessian(f)
    g = np.moveaxis(loc.g0, (0, 1), (-2, -1))
    return g, np.moveaxis(H.coeffs[..., 0], (0, 1), (-2, -1))


def conformal_factor(m: MetricChart, f, q) -> float:
    g, H = _hessian_values(m, f, q)
    h, _ = _factor_and_defect(g, H)
    return float(h) if np.ndim(h) == 0 else h


def conformal_defect(m: MetricChart, f, q) -> float:
    """``|| g^-1 nabla^2 f - h I ||`` in the g-operator norm."""
    g, H = _hessian_values(m, f, q)
    _, d = _factor_and_defect(g, H)
    return float(d) if np.ndim(d) == 0 else d


def neighborhood_points(m: MetricChart, base, sampling: Neighborhood = Neighborhood()) -> np.ndarray:
    radii = [r * m.scale for r in sampling.radii]
    return shell_points(base, radii, sampling.per_shell)


def defect_over(m: MetricChart, f, points: np.ndarray):
    """Defects at the valid points of ``points``; returns (defects, n_skipped)."""
    ok = m.valid(points)
    pts = points[ok]
    if len(pts) == 0:
        return np.zeros(0), int(len(points))
    try:
        g, H = _hessian_values(m, f, pts)
    except ChartDomainError:
        vals = []
        skipped = int((~ok).sum())
        for q in pts:
            try:
                vals.append(conformal_defect(m, f, q))
            except ChartDomainError:
                skipped += 1
        return np.array(vals), skipped
    _, d = _factor_and_defect(g, H)
    return d, int((~ok).sum())


def germ_scale(f_value: float, hess_eigs: np.ndarray) -> float:
    return max(1.0, abs(f_value), float(np.max(np.abs(hess_eigs))))


def verify_cmg(
    m: MetricChart,
    f: GermSpec,
    sampling: Neighborhood = Neighborhood(),
    tols: Tolerances = Tolerances(),
) -> CmgVerdict:
    p = np.asarray(f.base, dtype=float)
    loc = Local(m, p, 2)
    F, dF, H = loc.hessian(f)
    g0 = loc.g0
    grad = loc.ginv0 @ dF.coeffs[..., 0]
    grad_norm = norm(g0, grad)
    Linv = np.linalg.inv(np.linalg.cholesky(g0))
    S = Linv @ H.coeffs[..., 0] @ Linv.T
    eigs = np.linalg.eigvalsh((S + S.T) / 2)
    h_p = float(np.mean(eigs))
    pts = neighborhood_points(m, p, sampling)
    defects, skipped = defect_over(m, f, pts)
    sup = float(np.max(defects)) if len(defects) else math.inf
    scale = germ_scale(F.value, eigs)
    min_abs = float(np.min(np.abs(eigs)))
    is_cmg = (
        grad_norm <= tols.grad * scale
        and min_abs >= tols.nondeg
        and sup <= tols.conf
        and abs(h_p) >= tols.h
    )
    return CmgVerdict(
        grad_norm_at_p=grad_norm,
        hessian_min_abs_eigenvalue=min_abs,
        h_at_p=h_p,
        defect_sup=sup,
        morse_index=int(np.sum(eigs < 0)),
        is_cmg=bool(is_cmg),
        samples=len(pts),
        skipped=skipped,
        reliable=skipped <= 0.1 * len(pts),
        tolerances=tols,
    )


# -- curvature from a germ ------------------------------------------------


def _unit_normal_direction(g, grad, z):
    z = np.asarray(z, dtype=float)
    gg = inner(g, grad, grad)
    z = z - inner(g, grad, z) / gg * grad
    nz = norm(g, z)
    if nz < 1e-12:
        raise DegeneratePlaneError("z is parallel to the gradient")
    return z / nz


def _grad_checked(loc: Local, dF, floor: float):
    grad = loc.ginv0 @ dF.coeffs[..., 0]
    gn = norm(loc.g0, grad)
    if gn < floor:
        raise GradientFloorError(f"|grad f| = {gn:.3g} below floor {floor:g}")
    return grad, gn


def factor_gradient(m: MetricChart, f, q):
    """``(h, grad h, grad f, F)`` at q, with ``h = tr_g(nabla^2 f)/n`` differentiated as a jet."""
    loc = Local(m, q, 3)
    F, dF, H = loc.hessian(f)
    h = jets.contract("ij,ij->", loc.ginv, H) * (1.0 / m.dim)
    dh = h.grad().coeffs[..., 0]
    return h.value, loc.ginv0 @ dh, loc.ginv0 @ dF.coeffs[..., 0], loc


def curvature_via_germ(m: MetricChart, f, q, z, floor: float = Tolerances.floor) -> float:
    """``-<grad f, grad h> / |grad f|^2`` at q, assembled along the admissible direction z.

    Uses ``nabla^3 f(z, grad f) = z(h) grad f`` and ``nabla^3 f(grad f, z) = grad f(h) z``,
    which hold when ``nabla^2 f = h g``.
    """
    _, grad_h, grad_f, loc = factor_gradient(m, f, q)
    g = loc.g0
    gn = norm(g, grad_f)
    if gn < floor:
        raise GradientFloorError(f"|grad f| = {gn:.3g} below floor {floor:g}")
    z = _unit_normal_direction(g, grad_f, z)
    z_h = inner(g, grad_h, z)
    gradf_h = inner(g, grad_h, grad_f)
    return (z_h * inner(g, grad_f, z) - gradf_h * inner(g, z, z)) / gn**2


def longo_curvature(m: MetricChart, f, q, z, floor: float = Tolerances.floor) -> float:
    """``<nabla^3 f(z, grad f) - nabla^3 f(grad f, z), z> / |grad f|^2``; valid for any germ."""
    loc = Local(m, q, 3)
    T = _third(loc, f)
    dF = loc.scalar(f).grad()
    grad, gn = _grad_checked(loc, dF, floor)
    g = loc.g0
    z = _unit_normal_direction(g, grad, z)
    lowered = np.einsum("kji,k,j->i", T, z, grad) - np.einsum("kji,k,j->i", T, grad, z)
    return float(lowered @ z) / gn**2
