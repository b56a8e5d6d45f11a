"""Truncated multivariate Taylor arithmetic (jets) up to total order 3.

A :class:`Jet` stores the Taylor coefficients ``c_alpha = d^alpha F / alpha!``
of a (possibly tensor- or batch-valued) function at an expansion point.
Coefficients live in the last axis of ``Jet.coeffs``, ordered by total
degree, so the coefficients of an order-``k`` jet are a prefix of the
coefficients of the same function lifted to a higher order.  All leading
axes are "shape" axes and broadcast like numpy arrays.

Elementary functions accept jets as well as plain floats/arrays, so the same
user callable (a metric component, a germ, a vector field) can be evaluated
on raw coordinates or on jets.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Iterable, Sequence

import numpy as np

MAX_ORDER = 3
MAX_VARS = 8


class JetDomainError(ValueError):
    """An operation was evaluated at a singular point of its domain."""


class _Space:
    """Multi-index bookkeeping for a fixed (n_vars, order)."""

    def __init__(self, n: int, order: int):
        self.n = n
        self.order = order
        alphas = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(n), d):
                a = [0] * n
                for i in combo:
                    a[i] += 1
                alphas.append(tuple(a))
        self.alphas = alphas
        self.index = {a: k for k, a in enumerate(alphas)}
        self.size = len(alphas)
        self.degree = np.array([sum(a) for a in alphas])
        self.factorial = np.array(
            [math.prod(math.factorial(ai) for ai in a) for a in alphas], dtype=float
        )

        I, J, K = [], [], []
        for i, a in enumerate(alphas):
            for j, b in enumerate(alphas):
                if sum(a) + sum(b) > order:
                    continue
                I.append(i)
                J.append(j)
                K.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.mul_i = np.array(I)
        self.mul_j = np.array(J)
        scatter = np.zeros((len(K), self.size))
        scatter[np.arange(len(K)), K] = 1.0
        self.scatter = scatter

        if order > 0:
            lower = _space(n, order - 1)
            src = np.empty((n, lower.size), dtype=int)
            fac = np.empty((n, lower.size))
            for v in range(n):
                for k, g in enumerate(lower.alphas):
                    up = list(g)
                    up[v] += 1
                    src[v, k] = self.index[tuple(up)]
                    fac[v, k] = g[v] + 1
            self.d_src = src
            self.d_fac = fac


@functools.lru_cache(maxsize=None)
def _space(n: int, order: int) -> _Space:
    return _Space(n, order)


def n_coeffs(n: int, order: int) -> int:
    return math.comb(n + order, order)


def _mul(a: np.ndarray, b: np.ndarray, sp: _Space) -> np.ndarray:
    return (a[..., sp.mul_i] * b[..., sp.mul_j]) @ sp.scatter


class Jet:
    """Truncated Taylor polynomial in ``n_vars`` variables of total order ``order``.

    ``coeffs`` has shape ``(*shape, N)`` with ``N = C(n_vars + order, order)``.
    A jet with empty ``shape`` is the scalar case.
    """

    __slots__ = ("coeffs", "n_vars", "order")
    __array_ufunc__ = None

    def __init__(self, coeffs, n_vars: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
        if not 1 <= n_vars <= MAX_VARS:
            raise ValueError(f"n_vars must be in [1, {MAX_VARS}], got {n_vars}")
        if coeffs.ndim == 0 or coeffs.shape[-1] != n_coeffs(n_vars, order):
            raise ValueError("coefficient axis does not match (n_vars, order)")
        self.coeffs = coeffs
        self.n_vars = n_vars
        self.order = order

    @classmethod
    def _wrap(cls, coeffs: np.ndarray, n: int, order: int) -> "Jet":
        j = object.__new__(cls)
        j.coeffs = coeffs
        j.n_vars = n
        j.order = order
        return j

    @classmethod
    def constant(cls, value, n_vars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (n_coeffs(n_vars, order),))
        c[..., 0] = value
        return cls._wrap(c, n_vars, order)

    # -- structure -------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        v = self.coeffs[..., 0]
        return v if v.ndim else float(v)

    @property
    def space(self) -> _Space:
        return _space(self.n_vars, self.order)

    def __repr__(self) -> str:
        return f"Jet(n_vars={self.n_vars}, order={self.order}, shape={self.shape})"

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet._wrap(self.coeffs[key + (slice(None),)], self.n_vars, self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet._wrap(self.coeffs[..., : n_coeffs(self.n_vars, order)], self.n_vars, order)

    def transpose(self, *axes: int) -> "Jet":
        """Permute the leading ``len(axes)`` shape axes."""
        k = len(axes)
        perm = list(axes) + list(range(k, self.coeffs.ndim))
        return Jet._wrap(self.coeffs.transpose(perm), self.n_vars, self.order)

    def sum(self, axis: int = 0) -> "Jet":
        if axis < 0:
            axis += self.ndim
        return Jet._wrap(self.coeffs.sum(axis=axis), self.n_vars, self.order)

    def reshape(self, *shape) -> "Jet":
        return Jet._wrap(self.coeffs.reshape(*shape, self.coeffs.shape[-1]), self.n_vars, self.order)

    def as_dict(self, tol: float = 0.0) -> dict:
        """Scalar jets only: ``{multi-index: coefficient}`` for coefficients above ``tol``."""
        if self.shape:
            raise ValueError("as_dict is defined for scalar jets")
        return {
            a: float(c) for a, c in zip(self.space.alphas, self.coeffs) if abs(c) > tol
        }

    # -- differentiation -------------------------------------------------

    def derivative(self, alpha: Sequence[int]):
        """Mixed partial ``d^alpha`` at the expansion point."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n_vars or min(alpha) < 0:
            raise ValueError(f"multi-index {alpha} does not fit {self.n_vars} variables")
        if sum(alpha) > self.order:
            raise ValueError(f"|alpha|={sum(alpha)} exceeds jet order {self.order}")
        k = self.space.index[alpha]
        out = self.coeffs[..., k] * self.space.factorial[k]
        return out if out.ndim else float(out)

    def grad(self) -> "Jet":
        """Jet of the gradient, one order lower; the new axis 0 is the variable index."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        sp = self.space
        c = self.coeffs[..., sp.d_src] * sp.d_fac
        return Jet._wrap(np.moveaxis(c, -2, 0), self.n_vars, self.order - 1)

    # -- arithmetic ------------------------------------------------------

    def _other(self, other):
        if isinstance(other, Jet):
            if other.n_vars != self.n_vars:
                raise ValueError("jets over different variable counts")
            return other
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            c = self.coeffs.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coeffs, np.broadcast_shapes(self.shape, np.shape(other)) + self.coeffs.shape[-1:]
            ).copy()
            c[..., 0] += other
            return Jet._wrap(c, self.n_vars, self.order)
        order = min(self.order, o.order)
        N = n_coeffs(self.n_vars, order)
        return Jet._wrap(self.coeffs[..., :N] + o.coeffs[..., :N], self.n_vars, order)

    __radd__ = __add__

    def __neg__(self):
        return Jet._wrap(-self.coeffs, self.n_vars, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            other = np.asarray(other, dtype=float)
            return Jet._wrap(self.coeffs * other[..., None], self.n_vars, self.order)
        order = min(self.order, o.order)
        N = n_coeffs(self.n_vars, order)
        sp = _space(self.n_vars, order)
        return Jet._wrap(_mul(self.coeffs[..., :N], o.coeffs[..., :N], sp), self.n_vars, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise JetDomainError("division by zero")
            return Jet._wrap(self.coeffs / other[..., None], self.n_vars, self.order)
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones(self.shape), self.n_vars, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base if p > 1 else base
                p >>= 1
            return out
        return power(self, p)


TaylorScalar = Jet


# -- construction helpers ------------------------------------------------


def variables(point, order: int) -> list[Jet]:
    """Coordinate jets at ``point``; a point array ``(..., n)`` yields batched jets."""
    point = np.asarray(point, dtype=float)
    n = point.shape[-1]
    N = n_coeffs(n, order)
    out = []
    for i in range(n):
        c = np.zeros(point.shape[:-1] + (N,))
        c[..., 0] = point[..., i]
        if order > 0:
            c[..., 1 + i] = 1.0
        out.append(Jet._wrap(c, n, order))
    return out


def lift(point, var_index: int, order: int) -> Jet:
    """Jet of the coordinate function ``x[var_index]`` at ``point``."""
    point = np.asarray(point, dtype=float)
    n = point.shape[-1]
    if not 0 <= var_index < n:
        raise IndexError(f"var_index {var_index} out of range for {n} variables")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}]")
    return variables(point, order)[var_index]


def stack(items: Sequence, axis: int = 0) -> Jet:
    """Stack jets (and plain numbers, treated as constants) along a new axis."""
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        raise ValueError("stack needs at least one jet")
    n = jets[0].n_vars
    order = min(j.order for j in jets)
    N = n_coeffs(n, order)
    shape = np.broadcast_shapes(*(j.shape if isinstance(j, Jet) else np.shape(j) for j in items))
    arrs = []
    for x in items:
        if isinstance(x, Jet):
            c = x.coeffs[..., :N]
        else:
            c = np.zeros(np.shape(x) + (N,))
            c[..., 0] = x
        arrs.append(np.broadcast_to(c, shape + (N,)))
    return Jet._wrap(np.stack(arrs, axis=axis), n, order)


def array(nested) -> Jet:
    """Recursively stack a nested list of jets/numbers into one jet."""
    if isinstance(nested, Jet):
        return nested
    if isinstance(nested, (list, tuple)) and nested and isinstance(nested[0], (list, tuple)):
        return stack([array(row) for row in nested])
    return stack(list(nested))


def as_jet(x, like: Jet) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, like.n_vars, like.order)


def contract(subscripts: str, a, b) -> Jet:
    """Einsum over the shape axes of two operands with jet multiplication.

    Either operand may be a plain array (a constant).  Subscripts refer to
    shape axes only, e.g. ``"ij...,j...->i..."``.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if ja and jb:
        if a.n_vars != b.n_vars:
            raise ValueError("jets over different variable counts")
        order = min(a.order, b.order)
        sp = _space(a.n_vars, order)
        N = sp.size
        prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.coeffs[..., :N][..., sp.mul_i],
                         b.coeffs[..., :N][..., sp.mul_j])
        return Jet._wrap(prod @ sp.scatter, a.n_vars, order)
    if ja:
        c = np.einsum(f"{sa}Z,{sb}->{out}Z", a.coeffs, np.asarray(b, dtype=float))
        return Jet._wrap(c, a.n_vars, a.order)
    if jb:
        c = np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a, dtype=float), b.coeffs)
        return Jet._wrap(c, b.n_vars, b.order)
    raise TypeError("contract needs at least one jet operand")


def inv(m: Jet, cond_max: float = 1e12) -> Jet:
    """Inverse of a jet-valued matrix; axes 0 and 1 are the matrix axes."""
    n = m.shape[0]
    m0 = np.moveaxis(m.coeffs[..., 0], (0, 1), (-2, -1))
    cond = np.linalg.cond(m0)
    if not np.all(np.isfinite(cond)) or np.any(cond > cond_max):
        raise JetDomainError(f"matrix is singular (condition number {np.max(cond):.3g})")
    a0 = np.moveaxis(np.linalg.inv(m0), (-2, -1), (0, 1))
    base = Jet.constant(a0, m.n_vars, m.order)
    if m.order == 0:
        return base
    nil = m.coeffs.copy()
    nil[..., 0] = 0.0
    e = contract("ij...,jk...->ik...", a0, Jet._wrap(nil, m.n_vars, m.order))
    out = base
    term = base
    for _ in range(m.order):
        term = -contract("ij...,jk...->ik...", e, term)
        out = out + term
    return out


def polyval(coefficients: Sequence[float], x):
    """Horner evaluation of ``sum c_k x^k``; works on jets and arrays."""
    out = 0.0
    for c in reversed(list(coefficients)):
        out = out * x + c
    return out


# -- elementary functions ------------------------------------------------

def _compose(a: Jet, derivs: list) -> Jet:
    """Jet of ``F(a)`` given ``F^(k)(a0)`` for k = 0..order."""
    sp = a.space
    delta = a.coeffs.copy()
    delta[..., 0] = 0.0
    out = np.zeros_like(a.coeffs)
    out[..., 0] = derivs[0]
    power = delta
    for k in range(1, a.order + 1):
        out += power * (derivs[k] / math.factorial(k))[..., None]
        if k < a.order:
            power = _mul(power, delta, sp)
    return Jet._wrap(out, a.n_vars, a.order)


def _d_sin(x):
    s, c = np.sin(x), np.cos(x)
    return [s, c, -s, -c]


def _d_cos(x):
    s, c = np.sin(x), np.cos(x)
    return [c, -s, -c, s]


def _d_sinh(x):
    s, c = np.sinh(x), np.cosh(x)
    return [s, c, s, c]


def _d_cosh(x):
    s, c = np.sinh(x), np.cosh(x)
    return [c, s, c, s]


def _d_exp(x):
    e = np.exp(x)
    return [e, e, e, e]


def _d_log(x):
    if np.any(x <= 0):
        raise JetDomainError("log of a non-positive value")
    return [np.log(x), 1 / x, -1 / x**2, 2 / x**3]


def _d_atan(x):
    q = 1 + x * x
    return [np.arctan(x), 1 / q, -2 * x / q**2, (6 * x * x - 2) / q**3]


def _d_artanh(x):
    if np.any(np.abs(x) >= 1):
        raise JetDomainError("artanh outside (-1, 1)")
    q = 1 - x * x
    return [np.arctanh(x), 1 / q, 2 * x / q**2, (2 + 6 * x * x) / q**3]


def _d_pow(x, p):
    if not float(p).is_integer() and np.any(x <= 0):
        raise JetDomainError("non-integer power of a non-positive value")
    if p < 0 and np.any(x == 0):
        raise JetDomainError("negative power of zero")
    return [x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2), p * (p - 1) * (p - 2) * x ** (p - 3)]


def _d_recip(x):
    if np.any(x == 0):
        raise JetDomainError("division by a jet with zero constant term")
    return [1 / x, -1 / x**2, 2 / x**3, -6 / x**4]


_ELEMENTARY = {
    "sin": (_d_sin, np.sin),
    "cos": (_d_cos, np.cos),
    "sinh": (_d_sinh, np.sinh),
    "cosh": (_d_cosh, np.cosh),
    "exp": (_d_exp, np.exp),
    "log": (_d_log, np.log),
    "atan": (_d_atan, np.arctan),
    "artanh": (_d_artanh, np.arctanh),
}


def jet_elem(a, fn: str, *args):
    """Apply elementary function ``fn`` (``pow`` takes the exponent as extra arg)."""
    if fn == "pow":
        (p,) = args
        if isinstance(a, Jet) and float(p).is_integer() and p >= 0:
            return a ** int(p)
        if isinstance(a, Jet):
            return _compose(a, _d_pow(np.asarray(a.coeffs[..., 0]), float(p)))
        return np.power(a, p)
    if fn == "sqrt":
        if isinstance(a, Jet):
            if np.any(a.coeffs[..., 0] <= 0):
                raise JetDomainError("sqrt of a non-positive value")
            return _compose(a, _d_pow(np.asarray(a.coeffs[..., 0]), 0.5))
        return np.sqrt(a)
    try:
        derivs, plain = _ELEMENTARY[fn]
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None
    if isinstance(a, Jet):
        return _compose(a, derivs(np.asarray(a.coeffs[..., 0])))
    return plain(a)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    ops = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}
    try:
        return ops[op](b)
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None


def reciprocal(a):
    if isinstance(a, Jet):
        return _compose(a, _d_recip(np.asarray(a.coeffs[..., 0])))
    return 1.0 / a


def power(a, p):
    return jet_elem(a, "pow", p)


def extract_derivative(a: Jet, alpha: Sequence[int]):
    return a.derivative(alpha)


def sin(a):
    return jet_elem(a, "sin")


def cos(a):
    return jet_elem(a, "cos")


def sinh(a):
    return jet_elem(a, "sinh")


def cosh(a):
    return jet_elem(a, "cosh")


def exp(a):
    return jet_elem(a, "exp")


def log(a):
    return jet_elem(a, "log")


def sqrt(a):
    return jet_elem(a, "sqrt")


def atan(a):
    return jet_elem(a, "atan")


def artanh(a):
    return jet_elem(a, "artanh")


def norm_sq(x: Iterable) -> object:
    """``sum x_i^2`` over a coordinate sequence (jets or arrays)."""
    out = 0.0
    for xi in x:
        out = out + xi * xi
    return out
