"""Poincare-Hopf index of an isolated zero, and direction attainment of a
gradient near a Morse critical point.

Vector fields are callables on a coordinate sequence returning a sequence of
``n`` components; they must work on plain arrays (for sphere sampling) and on
jets (for the Jacobian at the zero).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets
from .geometry import Local, MetricChart, _as_tensor, gradient, metric
from .sampling import sphere_directions

WINDING_SAMPLES = 4096
ICOSPHERE_LEVEL = 4
MAX_REFINEMENTS = 3


class IndexInconclusive(RuntimeError):
    """The sampling sphere is too close to a zero, or resolution could not be reached."""


@dataclass
class IndexResult:
    index: int
    method: str  # winding_2d | simplicial_3d | jacobian_sign
    radius: float
    samples: int
    min_norm: float = math.nan
    jacobian_index: Optional[int] = None  # sign(det D field) when the zero is nondegenerate


# -- sphere-map degree ------------------------------------------------------


def _winding(values_fn, p, eps, floor):
    n_samples = WINDING_SAMPLES
    for _ in range(MAX_REFINEMENTS + 1):
        t = 2 * np.pi * np.arange(n_samples) / n_samples
        pts = p + eps * np.stack([np.cos(t), np.sin(t)], axis=1)
        v = values_fn(pts)
        mags = np.linalg.norm(v, axis=1)
        if mags.min() < floor:
            raise IndexInconclusive(f"field nearly vanishes on the circle (|v| = {mags.min():.3g})")
        ang = np.arctan2(v[:, 1], v[:, 0])
        steps = np.diff(np.append(ang, ang[0]))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        if np.max(np.abs(steps)) < np.pi / 2:
            total = steps.sum() / (2 * np.pi)
            return int(round(total)), n_samples, float(mags.min())
        n_samples *= 2
    raise IndexInconclusive("angle increments stay >= pi/2 after refinement")


@functools.lru_cache(maxsize=None)
def icosphere(level: int):
    """Unit-sphere triangulation with outward-oriented faces."""
    t = (1 + math.sqrt(5)) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}
        new_faces = []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                v = verts[a] + verts[b]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    V = np.array(verts)
    F = np.array(faces)
    det = np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]]))
    F[det < 0] = F[det < 0][:, [0, 2, 1]]
    return V, F


def _solid_angles(A, B, C):
    num = np.einsum("ij,ij->i", A, np.cross(B, C))
    den = 1 + np.einsum("ij,ij->i", A, B) + np.einsum("ij,ij->i", B, C) + np.einsum("ij,ij->i", C, A)
    return 2 * np.arctan2(num, den)


def _simplicial(values_fn, p, eps, floor):
    for level in range(ICOSPHERE_LEVEL, ICOSPHERE_LEVEL + MAX_REFINEMENTS + 1):
        V, F = icosphere(level)
        v = values_fn(p + eps * V)
        mags = np.linalg.norm(v, axis=1)
        if mags.min() < floor:
            raise IndexInconclusive(f"field nearly vanishes on the sphere (|v| = {mags.min():.3g})")
        u = v / mags[:, None]
        A, B, C = u[F[:, 0]], u[F[:, 1]], u[F[:, 2]]
        edge_cos = np.minimum.reduce([
            np.einsum("ij,ij->i", A, B), np.einsum("ij,ij->i", B, C), np.einsum("ij,ij->i", C, A)
        ])
        if edge_cos.min() > 0:  # every image edge shorter than pi/2
            total = _solid_angles(A, B, C).sum() / (4 * np.pi)
            return int(round(total)), len(V), float(mags.min())
    raise IndexInconclusive("image triangles stay too large after refinement")


def _jacobian_sign(jac: np.ndarray, rel_tol: float = 1e-10) -> Optional[int]:
    det = np.linalg.det(jac)
    scale = max(np.max(np.abs(jac)), 1e-300) ** jac.shape[0]
    if abs(det) <= rel_tol * scale:
        return None
    return int(np.sign(det))


def _index(values_fn, jac, p, eps, method, floor):
    n = p.size
    jidx = _jacobian_sign(jac) if jac is not None else None
    if method == "auto":
        method = {2: "winding_2d", 3: "simplicial_3d"}.get(n, "jacobian_sign")
    if method == "jacobian_sign":
        if jidx is None:
            raise IndexInconclusive("degenerate zero: jacobian_sign does not apply")
        return IndexResult(jidx, method, eps, 0, jacobian_index=jidx)
    if method == "winding_2d":
        if n != 2:
            raise ValueError("winding_2d needs n = 2")
        idx, samples, mn = _winding(values_fn, p, eps, floor)
    elif method == "simplicial_3d":
        if n != 3:
            raise ValueError("simplicial_3d needs n = 3")
        idx, samples, mn = _simplicial(values_fn, p, eps, floor)
    else:
        raise ValueError(f"unknown method {method!r}")
    return IndexResult(idx, method, eps, samples, mn, jidx)


def _values_from_field(field_fn: Callable, n: int):
    def values(pts):
        comps = field_fn([pts[:, i] for i in range(n)])
        return np.stack(np.broadcast_arrays(*[np.asarray(c, float) for c in comps]), axis=-1)

    return values


def field_jacobian(field_fn: Callable, p) -> np.ndarray:
    """``J[i, k] = d field_i / d x_k`` at p, exact via first-order jets."""
    p = np.asarray(p, dtype=float)
    x = jets.variables(p, 1)
    comps = _as_tensor(list(field_fn(x)), p.size, 1, ())
    return comps.grad().coeffs[..., 0].T


def ph_index(field_fn: Callable, p, eps: float, method: str = "auto", floor: float = 1e-12) -> IndexResult:
    """Degree of ``y -> field(y)/|field(y)|`` on the sphere of radius eps about p."""
    p = np.asarray(p, dtype=float)
    try:
        jac = field_jacobian(field_fn, p)
    except (jets.JetDomainError, ValueError):
        jac = None
    return _index(_values_from_field(field_fn, p.size), jac, p, eps, method, floor)


def gradient_jacobian(m: MetricChart, f, p) -> np.ndarray:
    """Jacobian of the coordinate field ``g^{ij} d_j f`` at p."""
    loc = Local(m, p, 2)
    dF = loc.scalar(f).grad()
    V = jets.contract("ij,j->i", loc.ginv, dF)
    return V.grad().coeffs[..., 0].T


def index_of_gradient(m: MetricChart, f, eps: Optional[float] = None, method: str = "auto",
                      floor: float = 1e-12) -> IndexResult:
    p = np.asarray(f.base, dtype=float)
    eps = 0.1 * m.scale if eps is None else eps
    jac = gradient_jacobian(m, f, p)
    return _index(lambda pts: gradient(m, f, pts), jac, p, eps, method, floor)


# -- direction attainment ---------------------------------------------------


@dataclass
class Attainment:
    """Best points found on each chart sphere; ``angles[k]`` belongs to ``points[k]``."""

    radii: list
    points: list
    angles: list
    tol_angle: float
    success: bool = field(init=False)

    def __post_init__(self):
        self.success = bool(np.all(np.asarray(self.angles) <= self.tol_angle))


def _g_angles(gp: np.ndarray, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """g-angle between vectors along the last axis (broadcasting)."""
    na = np.sqrt(np.einsum("...i,ij,...j->...", a, gp, a))
    nv = np.sqrt(np.einsum("...i,ij,...j->...", v, gp, v))
    a = a / na[..., None]
    v = v / nv[..., None]
    d, s = a - v, a + v
    nd = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", d, gp, d), 0))
    ns = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", s, gp, s), 0))
    return 2 * np.arctan2(nd, ns)


def _tangent_bases(d: np.ndarray) -> np.ndarray:
    """For unit rows d (K, n): orthonormal bases of their complements, (K, n-1, n)."""
    K, n = d.shape
    M = np.concatenate([d[:, :, None], np.broadcast_to(np.eye(n), (K, n, n))], axis=2)
    Q, _ = np.linalg.qr(M)
    return np.swapaxes(Q[:, :, 1:], 1, 2)


def attain_directions(m: MetricChart, f, V: np.ndarray, radius: float, tol_angle: float = 1e-3,
                      dense: int = 4096, grid: int = 9, max_iter: int = 40):
    """Batched core of :func:`direction_attainment` for directions V (K, n) at one radius."""
    p = np.asarray(f.base, dtype=float)
    n = p.size
    V = np.atleast_2d(np.asarray(V, dtype=float))
    K = len(V)
    gp = metric(m, p)

    D = sphere_directions(n, dense)
    A = gradient(m, f, p + radius * D)
    ang = _g_angles(gp, A[None, :, :], V[:, None, :])
    best = np.argmin(ang, axis=1)
    d = D[best]
    a_best = ang[np.arange(K), best]

    # seed from the linearisation grad f(p + y) ~ J y
    J = gradient_jacobian(m, f, p)
    lin = np.linalg.solve(J, V.T).T
    lin /= np.linalg.norm(lin, axis=1, keepdims=True)
    a_lin = _g_angles(gp, gradient(m, f, p + radius * lin), V)
    take = a_lin < a_best
    d[take] = lin[take]
    a_best[take] = a_lin[take]

    axes = [np.linspace(-1, 1, grid)] * (n - 1)
    T = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1)
    step = 4.0 * (4 * np.pi / dense) ** (1.0 / max(n - 1, 1))
    for _ in range(max_iter):
        if np.all(a_best <= tol_angle * 1e-2) or step < 1e-14:
            break
        B = _tangent_bases(d)
        cand = d[:, None, :] + step * np.einsum("gt,ktn->kgn", T, B)
        cand /= np.linalg.norm(cand, axis=2, keepdims=True)
        G = gradient(m, f, (p + radius * cand).reshape(-1, n)).reshape(K, len(T), n)
        ang = _g_angles(gp, G, V[:, None, :])
        j = np.argmin(ang, axis=1)
        a_new = ang[np.arange(K), j]
        improve = a_new < a_best
        d[improve] = cand[np.arange(K), j][improve]
        a_best[improve] = a_new[improve]
        step *= 0.3
    return p + radius * d, a_best


def direction_attainment(m: MetricChart, f, v, radii: Sequence[float], tol_angle: float = 1e-3) -> Attainment:
    """Points q on shrinking chart spheres about the base where grad f(q) points along v.

    Directions at q are compared with v through raw coordinate components,
    measured with the metric at the base point.
    """
    points, angles = [], []
    for r in radii:
        q, a = attain_directions(m, f, np.asarray(v, dtype=float)[None, :], r, tol_angle)
        points.append(q[0])
        angles.append(float(a[0]))
    return Attainment(list(radii), points, angles, tol_angle)
