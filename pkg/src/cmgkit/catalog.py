"""Chart metrics used as test spaces: model spaces, surfaces of revolution,
products and conformal perturbations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .geometry import MetricChart

SERIES_TERMS = 24


def conformal_matrix(lam, n: int) -> list:
    """``lam * identity`` as a nested list (``lam`` may be a jet)."""
    return [[lam if i == j else 0.0 for j in range(n)] for i in range(n)]


def euclidean(n: int, scale: float = 1.0) -> MetricChart:
    return MetricChart(n, f"euclidean{n}", lambda x: np.eye(n), scale=scale)


def sphere(n: int, c: float = 1.0) -> MetricChart:
    """Stereographic chart of S^n(c): ``g = 4 delta / (1 + c|x|^2)^2``."""
    if c <= 0:
        raise ValueError("sphere curvature must be positive")

    def components(x):
        lam = 4.0 / (1.0 + c * jets.norm_sq(x)) ** 2
        return conformal_matrix(lam, n)

    return MetricChart(n, f"sphere{n}(c={c:g})", components, scale=1.0 / math.sqrt(c))


def hyperbolic(n: int, c: float = 1.0) -> MetricChart:
    """Poincare ball chart of H^n(-c): ``g = 4 delta / (1 - c|x|^2)^2`` on ``c|x|^2 < 1``."""
    if c <= 0:
        raise ValueError("hyperbolic curvature parameter must be positive")

    def components(x):
        lam = 4.0 / (1.0 - c * jets.norm_sq(x)) ** 2
        return conformal_matrix(lam, n)

    def guard(q):
        return c * np.sum(np.asarray(q) ** 2, axis=-1) < 1.0

    return MetricChart(n, f"hyperbolic{n}(c={c:g})", components, guard, scale=1.0 / math.sqrt(c))


# -- surfaces of revolution -----------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Odd analytic warping profile ``phi(r) = sum a_k r^(2k+1)`` with ``a_0 = 1``."""

    name: str
    odd_coeffs: tuple
    radius: float  # chart radius on which phi > 0 and the series is accurate

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return sum(a * r ** (2 * k + 1) for k, a in enumerate(self.odd_coeffs))

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        return sum(a * (2 * k + 1) * r ** (2 * k) for k, a in enumerate(self.odd_coeffs))

    def ddphi(self, r):
        r = np.asarray(r, dtype=float)
        return sum(a * (2 * k + 1) * (2 * k) * r ** (2 * k - 1) for k, a in enumerate(self.odd_coeffs) if k)

    def gaussian_curvature(self, r):
        return -self.ddphi(r) / self.phi(r)

    def ratio_sq_series(self) -> np.ndarray:
        """Power series in ``s = r^2`` of ``(phi(r) / r)^2``."""
        a = np.array(self.odd_coeffs, dtype=float)
        return np.convolve(a, a)[: max(len(a), SERIES_TERMS)]

    def primitive_series(self) -> np.ndarray:
        """Power series in ``s`` of ``F`` with ``F' = phi``, ``F(0) = 0``."""
        a = np.array(self.odd_coeffs, dtype=float)
        return np.concatenate([[0.0], a / (2 * np.arange(len(a)) + 2)])


def profile(name: str, a: float = 1.0) -> Profile:
    k = np.arange(SERIES_TERMS)
    fact = np.array([math.factorial(2 * i + 1) for i in k], dtype=float)
    if name == "sin":
        return Profile("sin", tuple((-1.0) ** k / fact), radius=2.5)
    if name == "sinh":
        return Profile("sinh", tuple(1.0 / fact), radius=2.5)
    if name == "id":
        return Profile("id", (1.0,), radius=10.0)
    if name == "cubic":
        radius = 10.0 if a >= 0 else 0.9 / math.sqrt(-a)
        return Profile(f"cubic({a:g})", (1.0, float(a)), radius=radius)
    raise ValueError(f"unknown profile {name!r}")


def revolution(prof: Profile) -> MetricChart:
    """``dr^2 + phi(r)^2 dtheta^2`` written in Cartesian coordinates about the pole.

    With ``psi = (phi/r)^2``: ``g_ij = psi delta_ij + (1 - psi)/r^2 x_i x_j``,
    both coefficients being power series in ``s = r^2``.
    """
    psi = prof.ratio_sq_series()
    off = -psi[1:]  # (1 - psi)/s, since psi_0 = 1

    def components(x):
        s = jets.norm_sq(x)
        p = jets.polyval(psi, s)
        q = jets.polyval(off, s)
        return [[(p if i == j else 0.0) + q * x[i] * x[j] for j in range(2)] for i in range(2)]

    def guard(q):
        return np.sum(np.asarray(q) ** 2, axis=-1) < prof.radius**2

    return MetricChart(2, f"revolution({prof.name})", components, guard)


# -- products and perturbations -------------------------------------------


def product(a: MetricChart, b: MetricChart) -> MetricChart:
    """Riemannian product; coordinates are those of ``a`` followed by ``b``."""
    n = a.dim + b.dim

    def components(x):
        ga = a.components(x[: a.dim])
        gb = b.components(x[a.dim:])
        out = [[0.0] * n for _ in range(n)]
        for i in range(a.dim):
            for j in range(a.dim):
                out[i][j] = ga[i][j]
        for i in range(b.dim):
            for j in range(b.dim):
                out[a.dim + i][a.dim + j] = gb[i][j]
        return out

    def guard(q):
        q = np.asarray(q)
        return a.valid(q[..., : a.dim]) & b.valid(q[..., a.dim:])

    return MetricChart(n, f"{a.name}x{b.name}", components, guard, scale=min(a.scale, b.scale))


def _nested(m: MetricChart, x):
    g = m.components(x)
    if isinstance(g, np.ndarray):
        return g.tolist()
    return g


def saddle_bump(x):
    """``(x0^2 - x1^2) exp(-|x|^2)``: vanishes to second order at 0 with anisotropic Hessian."""
    return (x[0] * x[0] - x[1] * x[1]) * jets.exp(-jets.norm_sq(x))


def gauss_bump(x):
    """Off-centre Gaussian ``exp(-|x - a|^2)``, ``a = (0.3, 0.1, 0, ...)``."""
    shift = [0.3, 0.1] + [0.0] * (len(x) - 2)
    return jets.exp(-jets.norm_sq([xi - a for xi, a in zip(x, shift)]))


BUMPS: dict = {"saddle": saddle_bump, "gauss": gauss_bump}


def conformal_perturbation(base: MetricChart, eps: float, bump: Callable | str = "saddle") -> MetricChart:
    """``exp(2 eps u) * g_base``."""
    u = BUMPS[bump] if isinstance(bump, str) else bump
    label = bump if isinstance(bump, str) else getattr(bump, "__name__", "u")
    n = base.dim

    def components(x):
        g = _nested(base, x)
        w = jets.exp(2.0 * eps * u(x))
        return [[w * g[i][j] for j in range(n)] for i in range(n)]

    return MetricChart(n, f"{base.name}*exp(2*{eps:g}*{label})", components, base.domain_guard, base.scale)


def random_conformal_factor(n: int, rng: np.random.Generator, amplitude: float = 0.5):
    """A smooth random ``u`` built from a quadratic form plus a few sinusoids."""
    A = rng.normal(size=(n, n)) * amplitude
    A = (A + A.T) / 2
    b = rng.normal(size=n) * amplitude
    freqs = rng.normal(size=(3, n))
    amps = rng.normal(size=3) * amplitude * 0.3

    def u(x):
        out = 0.0
        for i in range(n):
            out = out + b[i] * x[i]
            for j in range(n):
                out = out + A[i, j] * x[i] * x[j]
        for k in range(3):
            arg = 0.0
            for i in range(n):
                arg = arg + freqs[k, i] * x[i]
            out = out + amps[k] * jets.sin(arg)
        return out

    return u


def stereographic_distance(c: float, r):
    """Geodesic distance from the chart origin in the stereographic sphere chart."""
    return 2.0 / math.sqrt(c) * np.arctan(math.sqrt(c) * np.asarray(r))


def ball_distance(c: float, r):
    return 2.0 / math.sqrt(c) * np.arctanh(math.sqrt(c) * np.asarray(r))


def parse_profile(text: str) -> Profile:
    text = text.strip()
    if text.startswith("cubic"):
        inner = text[len("cubic"):].strip("()") or "1"
        return profile("cubic", float(inner))
    return profile(text)
