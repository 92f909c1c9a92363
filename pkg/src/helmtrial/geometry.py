"""Implicit distance fields for boundary primitives and their composition.

Every boundary piece is described by an approximate distance function (ADF):
a scalar field that vanishes exactly on the piece and is positive on the
domain side of it.  Line segments are built from a signed line distance and
a trimming disk; circles and ellipses have closed-form normalized fields.
Pieces combine through R-function conjunction/disjunction or through the
reciprocal-sum equivalent field used by the trial solution.

Two evaluation paths exist on every expression:

* ``value`` is total: it never raises, and floors singular spots so that
  boundary points return exactly zero.
* ``jet`` returns value + first + second derivatives and refuses the
  corner-guard region (within :data:`EPS_FLOOR` of a segment endpoint or a
  vanishing composition denominator) instead of producing garbage there.

On a boundary segment itself the jet is the one-sided limit taken from the
left of the directed segment, which is the domain side when pieces are
oriented counterclockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .jets import Jet2, JetBatch, jet_sum, where_jet

EPS_FLOOR = 1e-12
"""Floor applied to distances inside Shepard denominators and the
equivalent-field combination; also the corner-guard radius for jets."""

_CORNER_GUARD_SQ = EPS_FLOOR ** 2
_ON_SEGMENT_TOL = 1e-60  # squared-distance threshold for the one-sided branch


class NonDifferentiablePointError(ValueError):
    """Raised when a jet is requested inside a corner-guard region."""


class Point2(NamedTuple):
    x: float
    y: float


def _check_point(p: Point2) -> Point2:
    p = Point2(float(p[0]), float(p[1]))
    if not (math.isfinite(p.x) and math.isfinite(p.y)):
        raise ValueError(f"non-finite point {p}")
    return p


@dataclass(frozen=True)
class Segment:
    """Directed line segment; the domain side is to its left."""

    p1: Point2
    p2: Point2

    def __post_init__(self):
        object.__setattr__(self, "p1", _check_point(self.p1))
        object.__setattr__(self, "p2", _check_point(self.p2))
        if self.length == 0.0:
            raise ValueError("degenerate segment: endpoints coincide")

    @property
    def length(self) -> float:
        return math.hypot(self.p2.x - self.p1.x, self.p2.y - self.p1.y)

    @property
    def center(self) -> Point2:
        return Point2(0.5 * (self.p1.x + self.p2.x), 0.5 * (self.p1.y + self.p2.y))


def _xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        x, y = np.broadcast_arrays(x, y)
    return x, y


def _ret(a: np.ndarray):
    """Return python floats for scalar inputs, arrays otherwise."""
    a = np.asarray(a)
    return float(a[()]) if a.ndim == 0 else a


# ---------------------------------------------------------------------------
# Primitive fields (value path)
# ---------------------------------------------------------------------------

def signed_distance(x, y, seg: Segment):
    """Signed distance to the infinite line through ``seg``.

    Negative on the left of the directed segment, zero on the line.
    """
    x, y = _xy(x, y)
    (x1, y1), (x2, y2) = seg.p1, seg.p2
    h = ((x - x1) * (y2 - y1) - (y - y1) * (x2 - x1)) / seg.length
    return _ret(h)


def trimming(x, y, seg: Segment):
    """Trimming disk of radius L/2 centered on the segment midpoint.

    Positive strictly inside the disk, zero on it, negative outside; it
    truncates the line distance to the segment extent.
    """
    x, y = _xy(x, y)
    L = seg.length
    xc, yc = seg.center
    t = ((0.5 * L) ** 2 - ((x - xc) ** 2 + (y - yc) ** 2)) / L
    return _ret(t)


def segment_adf(x, y, seg: Segment):
    """Distance-like field of a closed segment: zero exactly on it, > 0 off it."""
    x, y = _xy(x, y)
    h = np.asarray(signed_distance(x, y, seg))
    t = np.asarray(trimming(x, y, seg))
    h4 = h ** 4
    w = np.sqrt(t * t + h4)
    # (w - t)/2 cancels badly for t > 0; use the conjugate form there.
    denom = w + t
    with np.errstate(divide="ignore", invalid="ignore"):
        q_pos = np.where(denom > 0.0, h4 / (2.0 * np.where(denom > 0.0, denom, 1.0)), 0.0)
    q = np.where(t > 0.0, q_pos, 0.5 * (w - t))
    return _ret(np.sqrt(h * h + q * q))


def circle_adf(x, y, center: Point2, radius: float):
    """Normalized circle field: R/2 at the center, zero on the circle,
    negative outside."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    x, y = _xy(x, y)
    cx, cy = _check_point(center)
    r2 = (x - cx) ** 2 + (y - cy) ** 2
    return _ret((radius * radius - r2) / (2.0 * radius))


def ellipse_adf(x, y, a: float, b: float):
    """Normalized ellipse field (origin-centered, axis-aligned)."""
    if not (a > b > 0.0):
        raise ValueError("semi-axes must satisfy a > b > 0")
    x, y = _xy(x, y)
    return _ret(0.5 * (1.0 - (x * x / (a * a) + y * y / (b * b))))


# ---------------------------------------------------------------------------
# R-function combinations
# ---------------------------------------------------------------------------

def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not -1.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (-1, 1), got {beta}")
    return beta


def _r_radical(w1, w2, beta):
    return np.sqrt(w1 * w1 + w2 * w2 - 2.0 * beta * w1 * w2)


def r_conjunction(w1, w2, beta: float = 0.0):
    """R-conjunction of two fields (radical added)."""
    beta = _check_beta(beta)
    w1, w2 = _xy(w1, w2)
    return _ret((w1 + w2 + _r_radical(w1, w2, beta)) / (1.0 + beta))


def r_disjunction(w1, w2, beta: float = 0.0):
    """R-disjunction of two fields (radical subtracted)."""
    beta = _check_beta(beta)
    w1, w2 = _xy(w1, w2)
    return _ret((w1 + w2 - _r_radical(w1, w2, beta)) / (1.0 + beta))


def r_smooth(op: str, w1, w2, beta: float = 0.0, s: int = 0):
    """R-composition with the smoothness factor ``(w1^2 + w2^2)^(s/2)``."""
    if op not in ("conj", "disj"):
        raise ValueError("op must be 'conj' or 'disj'")
    s = int(s)
    if s < 0:
        raise ValueError("s must be a nonnegative integer")
    base = r_conjunction(w1, w2, beta) if op == "conj" else r_disjunction(w1, w2, beta)
    if s == 0:
        return base
    w1, w2 = _xy(w1, w2)
    return _ret(np.asarray(base) * (w1 * w1 + w2 * w2) ** (0.5 * s))


def max_min_boolean(w1, w2):
    """Exact (max, min) written through the absolute-value R-functions."""
    w1, w2 = _xy(w1, w2)
    d = np.abs(w1 - w2)
    return _ret(0.5 * (w1 + w2 + d)), _ret(0.5 * (w1 + w2 - d))


def equivalent_adf(phi_values: Sequence, s: int = 1, eps_floor: float = EPS_FLOOR):
    """Combine per-piece distances into one boundary-vanishing field.

    Reciprocal-power sum: ``(sum phi_i^-s)^(-1/s)``.  Returns exactly zero
    wherever any input is at or below ``eps_floor``, which realizes the
    boundary-vanishing requirement without dividing by zero.
    """
    s = int(s)
    if s < 1:
        raise ValueError("s must be a positive integer")
    phis = np.stack([np.asarray(p, dtype=float) for p in np.broadcast_arrays(*phi_values)])
    floored = (phis <= eps_floor).any(axis=0)
    safe = np.where(floored, 1.0, phis)
    out = np.sum(safe ** (-float(s)), axis=0) ** (-1.0 / s)
    return _ret(np.where(floored, 0.0, out))


# ---------------------------------------------------------------------------
# Composable expressions with jets
# ---------------------------------------------------------------------------

class AdfExpr:
    """Base class for composable distance-field expressions."""

    def value(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def jet(self, x, y) -> JetBatch:
        raise NotImplementedError

    def corner_points(self) -> "tuple[Point2, ...]":
        """Endpoints of all segments in the expression tree."""
        return ()


@dataclass(frozen=True)
class SegmentAdf(AdfExpr):
    segment: Segment

    def value(self, x, y):
        return np.asarray(segment_adf(x, y, self.segment))

    def jet(self, x, y):
        x, y = _xy(x, y)
        seg = self.segment
        (x1, y1), (x2, y2) = seg.p1, seg.p2
        L = seg.length
        xc, yc = seg.center
        zeros = np.zeros_like(x)

        hx = (y2 - y1) / L
        hy = -(x2 - x1) / L
        h = JetBatch(((x - x1) * (y2 - y1) - (y - y1) * (x2 - x1)) / L,
                     np.full_like(x, hx), np.full_like(x, hy),
                     zeros, zeros, zeros)
        t = JetBatch(((0.5 * L) ** 2 - ((x - xc) ** 2 + (y - yc) ** 2)) / L,
                     -2.0 * (x - xc) / L, -2.0 * (y - yc) / L,
                     np.full_like(x, -2.0 / L), zeros, np.full_like(x, -2.0 / L))

        h2 = h * h
        u = t * t + h2 * h2
        if np.any(u.v < _CORNER_GUARD_SQ):
            raise NonDifferentiablePointError(
                "non-differentiable point: segment endpoint within guard radius")
        q = (u.sqrt() - t) * 0.5
        dist2 = h2 + q * q

        on_segment = dist2.v < _ON_SEGMENT_TOL
        if np.any(on_segment):
            # One-sided limit from the left (domain) side: |grad| = 1 along
            # -grad h, curvature zero along a straight piece.
            safe = where_jet(on_segment, JetBatch.constant(1.0, x.shape), dist2)
            phi = safe.sqrt()
            onesided = JetBatch(zeros, -h.dx, -h.dy, zeros, zeros, zeros)
            return where_jet(on_segment, onesided, phi)
        return dist2.sqrt()

    def corner_points(self):
        return (self.segment.p1, self.segment.p2)


@dataclass(frozen=True)
class CircleAdf(AdfExpr):
    center: Point2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _check_point(self.center))
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    def value(self, x, y):
        return np.asarray(circle_adf(x, y, self.center, self.radius))

    def jet(self, x, y):
        x, y = _xy(x, y)
        cx, cy = self.center
        R = self.radius
        return JetBatch(
            (R * R - ((x - cx) ** 2 + (y - cy) ** 2)) / (2.0 * R),
            -(x - cx) / R, -(y - cy) / R,
            np.full_like(x, -1.0 / R), np.zeros_like(x), np.full_like(x, -1.0 / R),
        )


@dataclass(frozen=True)
class EllipseAdf(AdfExpr):
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > self.b > 0.0):
            raise ValueError("semi-axes must satisfy a > b > 0")

    def value(self, x, y):
        return np.asarray(ellipse_adf(x, y, self.a, self.b))

    def jet(self, x, y):
        x, y = _xy(x, y)
        a2 = self.a * self.a
        b2 = self.b * self.b
        return JetBatch(
            0.5 * (1.0 - (x * x / a2 + y * y / b2)),
            -x / a2, -y / b2,
            np.full_like(x, -1.0 / a2), np.zeros_like(x), np.full_like(x, -1.0 / b2),
        )


def _r_combine_jet(lhs: JetBatch, rhs: JetBatch, beta: float, s: int, sign: float) -> JetBatch:
    rad = lhs * lhs + rhs * rhs - (2.0 * beta) * (lhs * rhs)
    if np.any(rad.v < _CORNER_GUARD_SQ):
        raise NonDifferentiablePointError(
            "non-differentiable point: R-composition radical vanishes")
    out = (lhs + rhs + sign * rad.sqrt()) * (1.0 / (1.0 + beta))
    if s:
        m2 = lhs * lhs + rhs * rhs
        if s % 2 == 0:
            out = out * m2.powi(s // 2)
        else:
            if np.any(m2.v < _CORNER_GUARD_SQ):
                raise NonDifferentiablePointError(
                    "non-differentiable point: smoothness factor vanishes")
            out = out * m2.pow_real(0.5 * s)
    return out


@dataclass(frozen=True)
class RConj(AdfExpr):
    lhs: AdfExpr
    rhs: AdfExpr
    beta: float = 0.0
    s: int = 0

    def __post_init__(self):
        _check_beta(self.beta)
        if int(self.s) < 0:
            raise ValueError("s must be a nonnegative integer")

    def value(self, x, y):
        return np.asarray(r_smooth("conj", self.lhs.value(x, y), self.rhs.value(x, y),
                                   self.beta, self.s))

    def jet(self, x, y):
        return _r_combine_jet(self.lhs.jet(x, y), self.rhs.jet(x, y),
                              self.beta, int(self.s), +1.0)

    def corner_points(self):
        return self.lhs.corner_points() + self.rhs.corner_points()


@dataclass(frozen=True)
class RDisj(AdfExpr):
    lhs: AdfExpr
    rhs: AdfExpr
    beta: float = 0.0
    s: int = 0

    def __post_init__(self):
        _check_beta(self.beta)
        if int(self.s) < 0:
            raise ValueError("s must be a nonnegative integer")

    def value(self, x, y):
        return np.asarray(r_smooth("disj", self.lhs.value(x, y), self.rhs.value(x, y),
                                   self.beta, self.s))

    def jet(self, x, y):
        return _r_combine_jet(self.lhs.jet(x, y), self.rhs.jet(x, y),
                              self.beta, int(self.s), -1.0)

    def corner_points(self):
        return self.lhs.corner_points() + self.rhs.corner_points()


@dataclass(frozen=True)
class EquivalentAdf(AdfExpr):
    """Reciprocal-power combination of child fields (boundary-vanishing)."""

    children: tuple
    s: int = 1
    eps_floor: float = EPS_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("EquivalentAdf needs at least one child")
        if int(self.s) < 1:
            raise ValueError("s must be a positive integer")

    def value(self, x, y):
        vals = [c.value(x, y) for c in self.children]
        return np.asarray(equivalent_adf(vals, s=self.s, eps_floor=self.eps_floor))

    def jet(self, x, y):
        # Quotient form: phi_e = (prod phi_j) / (sum_i prod_{j != i} phi_j^s)^(1/s).
        # Unlike the reciprocal sum it stays finite when a single child
        # vanishes, so boundary points get their true one-sided jet.
        jets = [c.jet(x, y) for c in self.children]
        s = int(self.s)
        numer = jets[0]
        for j in jets[1:]:
            numer = numer * j
        loo = _leave_one_out_products(jets)
        denom_s = jet_sum(r.powi(s) for r in loo)
        denom = denom_s if s == 1 else denom_s.pow_real(1.0 / s)
        if np.any(denom.v <= self.eps_floor ** s):
            raise NonDifferentiablePointError(
                "non-differentiable point: more than one piece vanishes (corner)")
        return numer / denom

    def corner_points(self):
        pts: tuple = ()
        for c in self.children:
            pts = pts + c.corner_points()
        return pts


def _leave_one_out_products(jets: "list[JetBatch]") -> "list[JetBatch]":
    """Products over all jets but one, via prefix/suffix accumulation."""
    n = len(jets)
    shape = jets[0].shape
    if n == 1:
        return [JetBatch.constant(1.0, shape)]
    prefix = [JetBatch.constant(1.0, shape)]
    for j in jets[:-1]:
        prefix.append(prefix[-1] * j)
    suffix = [JetBatch.constant(1.0, shape)]
    for j in reversed(jets[1:]):
        suffix.append(suffix[-1] * j)
    suffix.reverse()
    return [prefix[i] * suffix[i] for i in range(n)]


# ---------------------------------------------------------------------------
# Public jet evaluation
# ---------------------------------------------------------------------------

def guard_corners(expr: AdfExpr, x, y, radius: float = EPS_FLOOR) -> None:
    """Raise if any evaluation point sits within ``radius`` of a corner."""
    corners = expr.corner_points()
    if not corners:
        return
    x, y = _xy(x, y)
    for cx, cy in corners:
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        if np.any(d2 < radius * radius):
            raise NonDifferentiablePointError(
                f"non-differentiable point: within {radius:g} of corner ({cx:g}, {cy:g})")


def eval_jet_batch(expr: AdfExpr, x, y) -> JetBatch:
    """Jet of an expression on a batch of points (corner-guarded)."""
    guard_corners(expr, x, y)
    return expr.jet(x, y)


def eval_jet(expr: AdfExpr, p) -> Jet2:
    """Jet of an expression at a single point."""
    x, y = float(p[0]), float(p[1])
    return eval_jet_batch(expr, np.asarray(x), np.asarray(y)).to_jet2()
