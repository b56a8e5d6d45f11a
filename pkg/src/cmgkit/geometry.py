"""Tensor calculus on a coordinate chart, evaluated pointwise from jets.

Index conventions (all arrays carry tensor axes first):

* ``christoffel[k, i, j] = Gamma^k_{ij}``
* ``riemann[i, j, k, l] = <R(d_i, d_j) d_k, d_l>`` with
  ``R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]``,
  so the sectional curvature of an orthonormal pair is ``R(u, w, w, u)``.
* ``hessian[i, j] = d_i d_j f - Gamma^k_{ij} d_k f``

Points may be a single chart point of shape ``(n,)`` or, for the batched
helpers, an array ``(B, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .jets import Jet, JetDomainError, contract, inv, n_coeffs, stack, variables


class ChartDomainError(ValueError):
    """A point is outside the valid domain of a chart (or the metric degenerates there)."""


class DegeneratePlaneError(ValueError):
    pass


@dataclass(frozen=True)
class MetricChart:
    """Riemannian metric on a coordinate chart.

    ``components`` maps a sequence of ``dim`` coordinates (floats, arrays or
    jets) to an ``dim x dim`` nested sequence / array / jet of components.
    ``domain_guard`` takes a point array ``(..., dim)`` and returns a boolean
    mask of valid points.
    """

    dim: int
    name: str
    components: Callable[[Sequence[Any]], Any]
    domain_guard: Optional[Callable[[np.ndarray], Any]] = None
    scale: float = 1.0

    def valid(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        ok = np.all(np.isfinite(q), axis=-1)
        if self.domain_guard is not None:
            ok = ok & np.asarray(self.domain_guard(q), dtype=bool)
        return ok

    def check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected points of dimension {self.dim}, got {q.shape}")
        if not np.all(self.valid(q)):
            raise ChartDomainError(f"{self.name}: point outside chart domain")
        return q


def _as_tensor(obj, n_vars: int, order: int, batch: tuple) -> Jet:
    """Turn a nested structure of jets/numbers into a jet of shape (..., *batch)."""
    if isinstance(obj, Jet):
        N = n_coeffs(n_vars, order)
        c = obj.coeffs[..., :N]
        want = obj.shape if obj.shape[len(obj.shape) - len(batch):] == batch else obj.shape + batch
        return Jet._wrap(np.broadcast_to(c, want + (N,)), n_vars, min(order, obj.order))
    if isinstance(obj, (list, tuple)):
        return stack([_as_tensor(o, n_vars, order, batch) for o in obj])
    arr = np.asarray(obj, dtype=float)
    if arr.ndim >= 1 and arr.dtype != object:
        c = np.zeros(arr.shape + batch + (n_coeffs(n_vars, order),))
        c[..., 0] = arr.reshape(arr.shape + (1,) * len(batch))
        return Jet._wrap(c, n_vars, order)
    return Jet.constant(np.broadcast_to(arr, batch), n_vars, order)


def _fn(f):
    return getattr(f, "f", f)


class Local:
    """Jets of the metric and its connection at one point (or a batch of points).

    ``order`` is the order to which coordinates are lifted; Christoffel
    symbols carry ``order - 1`` and the Riemann tensor ``order - 2``.
    """

    def __init__(self, m: MetricChart, q, order: int):
        q = m.check(q)
        self.m = m
        self.q = q
        self.order = order
        self.batch = q.shape[:-1]
        self.x = variables(q, order)
        g = _as_tensor(m.components(self.x), m.dim, order, self.batch)
        if g.shape[:2] != (m.dim, m.dim):
            raise ValueError(f"{m.name}: metric components have shape {g.shape[:2]}")
        self.g = (g + g.transpose(1, 0)) * 0.5
        g0 = np.moveaxis(self.g.coeffs[..., 0], (0, 1), (-2, -1))
        if np.any(np.linalg.eigvalsh(g0)[..., 0] <= 0):
            raise ChartDomainError(f"{m.name}: metric not positive definite")
        try:
            self.ginv = inv(self.g)
        except JetDomainError as exc:
            raise ChartDomainError(f"{m.name}: {exc}") from exc

    @property
    def g0(self) -> np.ndarray:
        return self.g.coeffs[..., 0]

    @property
    def ginv0(self) -> np.ndarray:
        return self.ginv.coeffs[..., 0]

    @cached_property
    def gamma(self) -> Jet:
        dg = self.g.grad()
        bracket = dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg
        return christoffel_from_bracket(self.ginv, bracket)

    @cached_property
    def riemann_up(self) -> Jet:
        """``R^a_{bcd}`` with ``R(d_c, d_d) d_b = R^a_{bcd} d_a``."""
        gam = self.gamma
        dgam = gam.grad()
        t1 = dgam.transpose(1, 3, 0, 2)
        quad = contract("ace...,edb...->abcd...", gam, gam)
        return t1 - t1.transpose(0, 1, 3, 2) + quad - quad.transpose(0, 1, 3, 2)

    @cached_property
    def riemann(self) -> Jet:
        return contract("la...,akij...->ijkl...", self.g, self.riemann_up)

    def scalar(self, f) -> Jet:
        out = _fn(f)(self.x)
        return _as_tensor(out, self.m.dim, self.order, self.batch)

    def hessian(self, f):
        """``(F, dF, H)``: the jet of f, its differential and its covariant Hessian."""
        F = self.scalar(f)
        dF = F.grad()
        H = dF.grad() - contract("kij...,k...->ij...", self.gamma, dF)
        return F, dF, H


def christoffel_from_bracket(ginv, bracket):
    """``Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``; bracket indexed [l, i, j]."""
    return contract("kl...,lij...->kij...", ginv, bracket) * 0.5


def metric(m: MetricChart, q) -> np.ndarray:
    return Local(m, q, 0).g0


def christoffel(m: MetricChart, q) -> np.ndarray:
    return Local(m, q, 1).gamma.coeffs[..., 0]


def riemann(m: MetricChart, q) -> np.ndarray:
    return Local(m, q, 2).riemann.coeffs[..., 0]


def inner(g: np.ndarray, u, w) -> float:
    return float(np.asarray(u) @ g @ np.asarray(w))


def norm(g: np.ndarray, u) -> float:
    return float(np.sqrt(max(inner(g, u, u), 0.0)))


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal basis: ``E.T @ g @ E = I``."""
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


@dataclass(frozen=True)
class Plane2:
    """A tangent 2-plane at ``base`` given by a g-orthonormal pair (u, w)."""

    base: np.ndarray
    u: np.ndarray
    w: np.ndarray

    @classmethod
    def from_vectors(cls, m: MetricChart, base, u, w, g: Optional[np.ndarray] = None) -> "Plane2":
        base = np.asarray(base, dtype=float)
        if g is None:
            g = metric(m, base)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        nu = norm(g, u)
        if nu < 1e-14:
            raise DegeneratePlaneError("first spanning vector vanishes")
        u = u / nu
        w = w - inner(g, u, w) * u
        w = w - inner(g, u, w) * u
        nw = norm(g, w)
        if nw < 1e-10 * max(1.0, norm(g, np.asarray(w))):
            raise DegeneratePlaneError("spanning vectors are linearly dependent")
        return cls(base, u, w / nw)


def sectional_from_tensor(R: np.ndarray, u, w) -> float:
    return float(np.einsum("ijkl,i,j,k,l->", R, u, w, w, u))


def sectional(m: MetricChart, plane: Plane2) -> float:
    """K(p, sigma) for the plane sigma at its base point."""
    return sectional_from_tensor(riemann(m, plane.base), plane.u, plane.w)


def gradient(m: MetricChart, f, q) -> np.ndarray:
    """Riemannian gradient ``g^{ij} d_j f``; batched points give shape ``(B, n)``."""
    loc = Local(m, q, 1)
    dF = loc.scalar(f).grad()
    v = np.einsum("ij...,j...->i...", loc.ginv0, dF.coeffs[..., 0])
    return np.moveaxis(v, 0, -1)


def covariant_hessian(m: MetricChart, f, q) -> np.ndarray:
    _, _, H = Local(m, q, 2).hessian(f)
    return H.coeffs[..., 0]


def third_covariant_tensor(m: MetricChart, f, q) -> np.ndarray:
    """``T[k, i, j] = (nabla_k nabla^2 f)_{ij}``."""
    loc = Local(m, q, 3)
    return _third(loc, f)


def _third(loc: Local, f) -> np.ndarray:
    _, _, H = loc.hessian(f)
    dH = H.grad().coeffs[..., 0]
    gam = loc.gamma.coeffs[..., 0]
    H0 = H.coeffs[..., 0]
    return (
        dH
        - np.einsum("lki...,lj...->kij...", gam, H0)
        - np.einsum("lkj...,il...->kij...", gam, H0)
    )


def third_covariant(m: MetricChart, f, q, Z, X) -> np.ndarray:
    """The vector ``(nabla_Z (nabla^2 f))(X)``."""
    loc = Local(m, q, 3)
    T = _third(loc, f)
    return loc.ginv0 @ np.einsum("kji,k,j->i", T, Z, X)


def ricci_identity_residual(m: MetricChart, f, q, Z, X) -> float:
    """``|nabla^3 f(Z,X) - nabla^3 f(X,Z) - R(Z,X) grad f|_g``.

    The left side comes from differentiating the Hessian; the right side from
    the Riemann tensor.  Vanishes for every smooth f.
    """
    loc = Local(m, q, 3)
    T = _third(loc, f)
    ginv = loc.ginv0
    Z = np.asarray(Z, dtype=float)
    X = np.asarray(X, dtype=float)
    lhs = ginv @ (np.einsum("kji,k,j->i", T, Z, X) - np.einsum("kji,k,j->i", T, X, Z))
    grad_f = ginv @ loc.scalar(f).grad().coeffs[..., 0]
    R = loc.riemann.coeffs[..., 0]
    rhs = ginv @ np.einsum("ijkl,i,j,k->l", R, Z, X, grad_f)
    return norm(loc.g0, lhs - rhs)
