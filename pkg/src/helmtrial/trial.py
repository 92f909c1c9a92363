"""Hard-constraint trial solution built from distance fields.

The trial field is ``psi_t = sum_i W_i(x) psi_i + phi_e(x) * net(x)``: the
first part interpolates the prescribed boundary constants through weights
that are one on their own piece and zero on the others, and the second part
multiplies the network by a field vanishing on every boundary, so the
boundary data holds for any network parameters.

Multi-piece boundaries (the rectangle) use inverse-distance weights in
Rvachev's product form; single-piece boundaries (circle, ellipse) use the
complement weight ``W = 1 - phi_e``.

The scalar evaluation path never raises: distances are floored so corners
return finite values.  The jet path refuses the corner-guard region instead
of returning meaningless derivatives there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import geometry as geo
from .domains import Circle, Ellipse, Rect, Shape
from .jets import Jet2, JetBatch, jet_sum
from .network import MlpParams, forward, forward_jet_batch

WEIGHT_RULES = ("shepard", "complement")


@dataclass(frozen=True)
class BoundaryPiece:
    """One boundary piece: its distance field and its constant datum."""

    adf: geo.AdfExpr
    value: float


@dataclass(frozen=True)
class TrialForm:
    """Boundary pieces plus the equivalent (boundary-vanishing) field."""

    pieces: tuple
    equivalent: geo.AdfExpr
    s: int = 1
    eps_floor: float = geo.EPS_FLOOR
    weight_rule: str = "shepard"

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ValueError("trial form needs at least one boundary piece")
        if self.weight_rule not in WEIGHT_RULES:
            raise ValueError(f"weight_rule must be one of {WEIGHT_RULES}")
        if self.weight_rule == "complement" and len(self.pieces) != 1:
            raise ValueError("complement weights require a single piece")

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    def corner_points(self):
        """Points where adjacent pieces meet (deduplicated)."""
        seen = []
        for piece in self.pieces:
            for p in piece.adf.corner_points():
                if not any(abs(p[0] - q[0]) < 1e-15 and abs(p[1] - q[1]) < 1e-15
                           for q in seen):
                    seen.append(p)
        return tuple(seen)


# ---------------------------------------------------------------------------
# Form construction per domain shape
# ---------------------------------------------------------------------------

def rectangle_form(rect: Rect, s: int = 1, eps_floor: float = geo.EPS_FLOOR) -> TrialForm:
    """Four-segment form, sides counterclockwise from the right side."""
    corners = rect.corners
    pieces = []
    for i in range(4):
        seg = geo.Segment(geo.Point2(*corners[i]), geo.Point2(*corners[(i + 1) % 4]))
        pieces.append(BoundaryPiece(geo.SegmentAdf(seg), rect.psi_sides[i]))
    equivalent = geo.EquivalentAdf(tuple(p.adf for p in pieces), s=s, eps_floor=eps_floor)
    return TrialForm(tuple(pieces), equivalent, s=s, eps_floor=eps_floor,
                     weight_rule="shepard")


def circle_form(circle: Circle) -> TrialForm:
    adf = geo.CircleAdf(geo.Point2(0.0, 0.0), circle.radius)
    return TrialForm((BoundaryPiece(adf, circle.psi_boundary),), adf,
                     weight_rule="complement")


def ellipse_form(ellipse: Ellipse) -> TrialForm:
    adf = geo.EllipseAdf(ellipse.a, ellipse.b)
    return TrialForm((BoundaryPiece(adf, ellipse.psi_boundary),), adf,
                     weight_rule="complement")


def form_for_shape(shape: Shape, s: int = 1, eps_floor: float = geo.EPS_FLOOR) -> TrialForm:
    if isinstance(shape, Rect):
        return rectangle_form(shape, s=s, eps_floor=eps_floor)
    if isinstance(shape, Circle):
        return circle_form(shape)
    if isinstance(shape, Ellipse):
        return ellipse_form(shape)
    raise TypeError(f"unknown shape {type(shape).__name__}")


def corner_exclusion_radius(rect: Rect, n_boundary: int) -> float:
    """Radius of the corner zone excluded from boundary verification: two
    boundary-point spacings."""
    return 2.0 * rect.perimeter / n_boundary


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def shepard_weights(form: TrialForm, x, y) -> np.ndarray:
    """Inverse-distance weights, shape (M, ...): each is one on its own piece,
    zero on the others, and they sum to one everywhere.

    Distances are floored at ``form.eps_floor`` so corner points return
    finite values (adjacent pieces then share the weight).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phis = np.stack([np.maximum(p.adf.value(x, y), form.eps_floor)
                     for p in form.pieces])
    m = len(form.pieces)
    if m == 1:
        return np.ones_like(phis)
    prods = np.empty_like(phis)
    for i in range(m):
        prods[i] = np.prod(np.delete(phis, i, axis=0), axis=0)
    return prods / prods.sum(axis=0)


def circle_weight(x, y, center=geo.Point2(0.0, 0.0), radius: float = 1.0):
    """Complement weight ``1 - phi_e`` for a circle; unity on the boundary."""
    return 1.0 - np.asarray(geo.circle_adf(x, y, center, radius))


def ellipse_weight(x, y, a: float, b: float):
    """Complement weight ``1 - phi_e`` for an ellipse."""
    return 1.0 - np.asarray(geo.ellipse_adf(x, y, a, b))


def _interp_value(form: TrialForm, x, y) -> np.ndarray:
    """Part I of the trial field: boundary-interpolating combination."""
    if form.weight_rule == "complement":
        piece = form.pieces[0]
        return piece.value * (1.0 - np.asarray(piece.adf.value(x, y)))
    w = shepard_weights(form, x, y)
    psi = np.array([p.value for p in form.pieces])
    return np.tensordot(psi, w, axes=1)


def _interp_jet(form: TrialForm, x, y) -> JetBatch:
    if form.weight_rule == "complement":
        piece = form.pieces[0]
        return (1.0 - piece.adf.jet(x, y)) * piece.value
    jets = [p.adf.jet(x, y) for p in form.pieces]
    loo = geo._leave_one_out_products(jets)
    denom = jet_sum(loo)
    if np.any(denom.v <= form.eps_floor):
        raise geo.NonDifferentiablePointError(
            "non-differentiable point: weight denominator vanishes (corner)")
    numer = jet_sum(r * p.value for r, p in zip(loo, form.pieces))
    return numer / denom


def _equivalent_jet(form: TrialForm, x, y) -> JetBatch:
    return form.equivalent.jet(x, y)


def _guard(form: TrialForm, x, y):
    corners = form.corner_points()
    if not corners:
        return
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = form.eps_floor ** 2
    for cx, cy in corners:
        if np.any((x - cx) ** 2 + (y - cy) ** 2 < r2):
            raise geo.NonDifferentiablePointError(
                f"non-differentiable point: within corner guard at ({cx:g}, {cy:g})")


# ---------------------------------------------------------------------------
# Trial field evaluation
# ---------------------------------------------------------------------------

def trial_eval(form: TrialForm, params: MlpParams, x, y):
    """Trial field values; total (floored) and boundary-exact by construction."""
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    part1 = _interp_value(form, x, y)
    phi_e = np.asarray(form.equivalent.value(x, y))
    if form.weight_rule == "shepard":
        # floored zero on the boundary, matching the weight path
        phis = np.stack([np.asarray(p.adf.value(x, y)) for p in form.pieces])
        phi_e = np.where((phis <= form.eps_floor).any(axis=0), 0.0, phi_e)
    out = part1 + phi_e * np.asarray(forward(params, x, y))
    return float(out[()]) if scalar else out


def trial_jet_batch(form: TrialForm, params: MlpParams, x, y) -> JetBatch:
    """Jet of the trial field on a batch of points (corner-guarded)."""
    _guard(form, x, y)
    net = forward_jet_batch(params, x, y)
    interp = _interp_jet(form, x, y)
    phi_e = _equivalent_jet(form, x, y)
    flat_net = JetBatch(*(np.asarray(c).reshape(np.asarray(x).shape)
                          for c in (net.v, net.dx, net.dy, net.dxx, net.dxy, net.dyy)))
    return interp + phi_e * flat_net


def trial_jet(form: TrialForm, params: MlpParams, p) -> Jet2:
    """Jet of the trial field at a single point."""
    x = np.asarray(float(p[0]))
    y = np.asarray(float(p[1]))
    return trial_jet_batch(form, params, x, y).to_jet2()


@dataclass(frozen=True)
class ResidualCoefficients:
    """Pointwise linearization of the trial-field Helmholtz residual.

    With g = (interp part) and e = (equivalent field), the residual at a
    point is linear in the network jet:

        r = c0 + cv*v + cx*dx + cy*dy + cp*(dxx + dyy)

    where c0 = lap(g) + k^2 g, cv = lap(e) + k^2 e, cx = 2 ex, cy = 2 ey,
    cp = e.  The coefficients depend only on geometry and k, so they are
    computed once per collocation set.
    """

    c0: np.ndarray
    cv: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    cp: np.ndarray

    def residual(self, net_jet: JetBatch) -> np.ndarray:
        return (self.c0 + self.cv * net_jet.v + self.cx * net_jet.dx
                + self.cy * net_jet.dy + self.cp * (net_jet.dxx + net_jet.dyy))

    def cotangent(self, scale: np.ndarray) -> JetBatch:
        """Jet-channel cotangents of ``sum(scale * residual)``."""
        zeros = np.zeros_like(self.c0)
        return JetBatch(scale * self.cv, scale * self.cx, scale * self.cy,
                        scale * self.cp, zeros, scale * self.cp)


def residual_coefficients(form: TrialForm, k: float, x, y) -> ResidualCoefficients:
    """Precompute the geometry-side residual coefficients at points."""
    _guard(form, x, y)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    interp = _interp_jet(form, x, y)
    e = _equivalent_jet(form, x, y)
    k2 = float(k) ** 2
    return ResidualCoefficients(
        c0=interp.laplacian() + k2 * interp.v,
        cv=e.laplacian() + k2 * e.v,
        cx=2.0 * e.dx,
        cy=2.0 * e.dy,
        cp=e.v.copy(),
    )
