"""Batched second-order jet arithmetic.

A :class:`JetBatch` bundles a scalar field's value and its first and second
partial derivatives with respect to the two spatial coordinates, evaluated
at a batch of points.  All six channels (``v, dx, dy, dxx, dxy, dyy``) are
numpy arrays of a common shape.  The mixed derivative is carried because the
product/chain rules below need it, even when a caller only consumes the
Laplacian entries.

The algebra is closed under ``+ - * /``, smooth powers and generic smooth
composition, which is everything the distance-field and trial-solution
machinery requires.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

CHANNELS = ("v", "dx", "dy", "dxx", "dxy", "dyy")


class Jet2(NamedTuple):
    """Public single-point jet: value, gradient and pure second derivatives."""

    v: float
    dx: float
    dy: float
    dxx: float
    dyy: float


class JetBatch:
    """Value + first/second derivatives of a scalar field on a point batch."""

    __slots__ = CHANNELS

    def __init__(self, v, dx, dy, dxx, dxy, dyy):
        self.v = np.asarray(v, dtype=float)
        self.dx = np.asarray(dx, dtype=float)
        self.dy = np.asarray(dy, dtype=float)
        self.dxx = np.asarray(dxx, dtype=float)
        self.dxy = np.asarray(dxy, dtype=float)
        self.dyy = np.asarray(dyy, dtype=float)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(c, shape) -> "JetBatch":
        z = np.zeros(shape)
        return JetBatch(np.full(shape, float(c)), z, z.copy(), z.copy(), z.copy(), z.copy())

    @staticmethod
    def coords(x, y) -> "tuple[JetBatch, JetBatch]":
        """Jets of the coordinate functions themselves."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            x, y = np.broadcast_arrays(x, y)
            x = x.astype(float)
            y = y.astype(float)
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        jx = JetBatch(x.copy(), one, zero, zero.copy(), zero.copy(), zero.copy())
        jy = JetBatch(y.copy(), zero.copy(), one.copy(), zero.copy(), zero.copy(), zero.copy())
        return jx, jy

    @property
    def shape(self):
        return self.v.shape

    def laplacian(self) -> np.ndarray:
        return self.dxx + self.dyy

    def to_jet2(self) -> Jet2:
        """Collapse a single-point batch to the public 5-entry jet."""
        return Jet2(float(self.v), float(self.dx), float(self.dy),
                    float(self.dxx), float(self.dyy))

    def isfinite(self) -> np.ndarray:
        ok = np.isfinite(self.v)
        for name in CHANNELS[1:]:
            ok = ok & np.isfinite(getattr(self, name))
        return ok

    # -- linear operations --------------------------------------------------

    def __neg__(self) -> "JetBatch":
        return JetBatch(*(-getattr(self, c) for c in CHANNELS))

    def __add__(self, other) -> "JetBatch":
        if isinstance(other, JetBatch):
            return JetBatch(*(getattr(self, c) + getattr(other, c) for c in CHANNELS))
        return JetBatch(self.v + other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    __radd__ = __add__

    def __sub__(self, other) -> "JetBatch":
        return self + (-other if isinstance(other, JetBatch) else -np.asarray(other, dtype=float))

    def __rsub__(self, other) -> "JetBatch":
        return (-self) + other

    def __mul__(self, other) -> "JetBatch":
        if not isinstance(other, JetBatch):
            c = np.asarray(other, dtype=float)
            return JetBatch(*(getattr(self, ch) * c for ch in CHANNELS))
        a, b = self, other
        return JetBatch(
            a.v * b.v,
            a.dx * b.v + a.v * b.dx,
            a.dy * b.v + a.v * b.dy,
            a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
            a.dxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.dxy,
            a.dyy * b.v + 2.0 * a.dy * b.dy + a.v * b.dyy,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "JetBatch":
        if not isinstance(other, JetBatch):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "JetBatch":
        return self.reciprocal() * other

    # -- smooth composition --------------------------------------------------

    def compose(self, f: Callable, f1: Callable, f2: Callable) -> "JetBatch":
        """Jet of ``f(self)`` given ``f`` and its first two derivatives."""
        z = self.v
        g0, g1, g2 = f(z), f1(z), f2(z)
        return JetBatch(
            g0,
            g1 * self.dx,
            g1 * self.dy,
            g2 * self.dx * self.dx + g1 * self.dxx,
            g2 * self.dx * self.dy + g1 * self.dxy,
            g2 * self.dy * self.dy + g1 * self.dyy,
        )

    def reciprocal(self) -> "JetBatch":
        return self.compose(lambda z: 1.0 / z,
                            lambda z: -1.0 / (z * z),
                            lambda z: 2.0 / (z * z * z))

    def sqrt(self) -> "JetBatch":
        return self.compose(np.sqrt,
                            lambda z: 0.5 / np.sqrt(z),
                            lambda z: -0.25 / (z * np.sqrt(z)))

    def powi(self, n: int) -> "JetBatch":
        """Integer power, smooth everywhere for n >= 0."""
        n = int(n)
        if n == 0:
            return JetBatch.constant(1.0, self.shape)
        if n == 1:
            return self
        return self.compose(lambda z: z ** n,
                            lambda z: n * z ** (n - 1),
                            lambda z: n * (n - 1) * z ** (n - 2))

    def pow_real(self, p: float) -> "JetBatch":
        """Real power; only valid on strictly positive values."""
        p = float(p)
        return self.compose(lambda z: z ** p,
                            lambda z: p * z ** (p - 1.0),
                            lambda z: p * (p - 1.0) * z ** (p - 2.0))


def where_jet(mask, a: JetBatch, b: JetBatch) -> JetBatch:
    """Channel-wise ``np.where`` over two jets of identical shape."""
    return JetBatch(*(np.where(mask, getattr(a, c), getattr(b, c)) for c in CHANNELS))


def jet_sum(jets) -> JetBatch:
    """Sum an iterable of jets."""
    jets = list(jets)
    out = jets[0]
    for j in jets[1:]:
        out = out + j
    return out


def jet_product(jets) -> JetBatch:
    """Product of an iterable of jets (sequential product rule)."""
    jets = list(jets)
    out = jets[0]
    for j in jets[1:]:
        out = out * j
    return out
