"""Domain geometry specs, boundary data, collocation sampling, wavenumbers.

Three built-in geometries: an axis-aligned rectangle with four per-side
constant boundary values (numbered counterclockwise from the right side), a
circle centered at the origin, and an origin-centered axis-aligned ellipse.
Samplers are deterministic per seed and draw area-uniform points by default;
``measure="coord-uniform"`` instead draws uniformly in the native coordinate
parametrization (radial for the circle, elliptical for the ellipse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

MEASURES = ("area-uniform", "coord-uniform")


def wavenumber(f: float, c: float) -> float:
    """k = 2*pi*f/c (rad/m)."""
    if not f > 0.0:
        raise ValueError(f"frequency must be positive, got {f}")
    if not c > 0.0:
        raise ValueError(f"speed of sound must be positive, got {c}")
    return 2.0 * math.pi * f / c


@dataclass(frozen=True)
class Wavenumber:
    """Frequency, sound speed and the derived wavenumber."""

    f: float
    c: float
    k: float = None

    def __post_init__(self):
        object.__setattr__(self, "k", wavenumber(self.f, self.c))


@dataclass(frozen=True)
class Sampling:
    """Collocation sampling configuration."""

    n_interior: int
    n_boundary: int = 0
    seed: int = 0
    measure: str = "area-uniform"

    def __post_init__(self):
        if self.n_interior < 1:
            raise ValueError("n_interior must be positive")
        if self.n_boundary < 0:
            raise ValueError("n_boundary must be nonnegative")
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")


@dataclass(frozen=True)
class Rect:
    """2w x 2h rectangle centered at the origin.

    Boundary values are constants per side, counterclockwise from the right
    side: psi1 right (x=+w), psi2 top, psi3 left, psi4 bottom.  Defaults are
    the canonical antisymmetric case (-1, 0, +1, 0).
    """

    half_width: float = 1.0
    half_height: float = 1.0
    psi_right: float = -1.0
    psi_top: float = 0.0
    psi_left: float = 1.0
    psi_bottom: float = 0.0

    def __post_init__(self):
        if not (self.half_width > 0.0 and self.half_height > 0.0):
            raise ValueError("rectangle half-sizes must be positive")

    @property
    def psi_sides(self):
        return (self.psi_right, self.psi_top, self.psi_left, self.psi_bottom)

    @property
    def corners(self):
        w, h = self.half_width, self.half_height
        return ((w, -h), (w, h), (-w, h), (-w, -h))

    @property
    def perimeter(self) -> float:
        return 4.0 * (self.half_width + self.half_height)

    def contains(self, x, y):
        return (np.abs(x) <= self.half_width) & (np.abs(y) <= self.half_height)

    def bounds(self):
        return (-self.half_width, self.half_width, -self.half_height, self.half_height)


@dataclass(frozen=True)
class Circle:
    """Origin-centered circle with one constant boundary value."""

    radius: float = 1.0
    psi_boundary: float = 1.0

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")

    def contains(self, x, y):
        return np.asarray(x) ** 2 + np.asarray(y) ** 2 <= self.radius ** 2

    def bounds(self):
        r = self.radius
        return (-r, r, -r, r)


@dataclass(frozen=True)
class Ellipse:
    """Origin-centered axis-aligned ellipse with one constant boundary value."""

    a: float = 1.0
    b: float = 0.5
    psi_boundary: float = 1.0

    def __post_init__(self):
        if not self.a > self.b > 0.0:
            raise ValueError("ellipse needs a > b > 0")

    def contains(self, x, y):
        return (np.asarray(x) / self.a) ** 2 + (np.asarray(y) / self.b) ** 2 <= 1.0

    def bounds(self):
        return (-self.a, self.a, -self.b, self.b)


Shape = Union[Rect, Circle, Ellipse]


@dataclass(frozen=True)
class DomainSpec:
    """A geometry plus its collocation sampling configuration."""

    shape: Shape
    sampling: Sampling

    def with_seed(self, seed: int) -> "DomainSpec":
        return replace(self, sampling=replace(self.sampling, seed=seed))


# ---------------------------------------------------------------------------
# Elliptical coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticalCoords:
    """A point (xi, eta) of the confocal system for a given boundary ellipse.

    l is the focal distance sqrt(a^2 - b^2); xi0 = atanh(b/a) is the radial
    coordinate of the boundary; x = l cosh(xi) cos(eta), y = l sinh(xi) sin(eta).
    """

    l: float
    xi: float
    eta: float
    xi0: float

    @staticmethod
    def for_ellipse(a: float, b: float, xi: float, eta: float) -> "EllipticalCoords":
        if not a > b > 0.0:
            raise ValueError("ellipse needs a > b > 0")
        return EllipticalCoords(l=focal_distance(a, b), xi=float(xi),
                                eta=float(eta), xi0=boundary_xi(a, b))

    def to_cartesian(self):
        return elliptical_to_cartesian(self.l, self.xi, self.eta)


def focal_distance(a: float, b: float) -> float:
    return math.sqrt(a * a - b * b)


def boundary_xi(a: float, b: float) -> float:
    return math.atanh(b / a)


def elliptical_to_cartesian(l, xi, eta):
    x = l * np.cosh(xi) * np.cos(eta)
    y = l * np.sinh(xi) * np.sin(eta)
    return x, y


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_rectangle(rect: Rect, sampling: Sampling):
    """Interior + boundary collocation sets for a rectangle.

    Interior points are uniform in the open rectangle.  Boundary points are
    equispaced per side with a half-spacing offset, so exact corners never
    appear; each carries its side's boundary value.

    Returns ``(interior (Nd,2), boundary (Nb,2), psi (Nb,))``.
    """
    if sampling.n_boundary % 4 != 0:
        raise ValueError("rectangle boundary count must be divisible by 4")
    rng = np.random.default_rng(sampling.seed)
    w, h = rect.half_width, rect.half_height

    xi = rng.uniform(-w, w, size=sampling.n_interior)
    yi = rng.uniform(-h, h, size=sampling.n_interior)
    # uniform() can hit the low endpoint exactly; nudge such samples inward
    edge = (np.abs(xi) >= w) | (np.abs(yi) >= h)
    while np.any(edge):
        xi[edge] = rng.uniform(-w, w, size=int(edge.sum()))
        yi[edge] = rng.uniform(-h, h, size=int(edge.sum()))
        edge = (np.abs(xi) >= w) | (np.abs(yi) >= h)
    interior = np.stack([xi, yi], axis=1)

    n_side = sampling.n_boundary // 4
    corners = rect.corners
    pts, psis = [], []
    for i in range(4):
        p1 = np.array(corners[i])
        p2 = np.array(corners[(i + 1) % 4])
        t = (np.arange(n_side) + 0.5) / n_side
        pts.append(p1 + t[:, None] * (p2 - p1))
        psis.append(np.full(n_side, rect.psi_sides[i]))
    boundary = np.concatenate(pts) if pts else np.zeros((0, 2))
    psi = np.concatenate(psis) if psis else np.zeros(0)
    return interior, boundary, psi


def sample_circle(circle: Circle, sampling: Sampling):
    """N collocation points in the closed disk; (N,2) array."""
    rng = np.random.default_rng(sampling.seed)
    n = sampling.n_interior
    u = rng.uniform(0.0, 1.0, size=n)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    if sampling.measure == "area-uniform":
        r = circle.radius * np.sqrt(u)
    else:
        r = circle.radius * u
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def sample_ellipse(ellipse: Ellipse, sampling: Sampling):
    """N collocation points in the closed ellipse; (N,2) array."""
    rng = np.random.default_rng(sampling.seed)
    n = sampling.n_interior
    if sampling.measure == "coord-uniform":
        l = focal_distance(ellipse.a, ellipse.b)
        xi = rng.uniform(0.0, boundary_xi(ellipse.a, ellipse.b), size=n)
        eta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        x, y = elliptical_to_cartesian(l, xi, eta)
        return np.stack([x, y], axis=1)
    # area-uniform via rejection from the bounding box
    out = np.zeros((n, 2))
    have = 0
    while have < n:
        m = max(2 * (n - have), 64)
        x = rng.uniform(-ellipse.a, ellipse.a, size=m)
        y = rng.uniform(-ellipse.b, ellipse.b, size=m)
        keep = ellipse.contains(x, y)
        take = min(int(keep.sum()), n - have)
        out[have:have + take, 0] = x[keep][:take]
        out[have:have + take, 1] = y[keep][:take]
        have += take
    return out


def sample_domain(spec: DomainSpec):
    """Dispatch to the shape's sampler.

    Rectangle: ``(interior, boundary, psi)``; circle/ellipse: ``(points,)``.
    """
    if isinstance(spec.shape, Rect):
        return sample_rectangle(spec.shape, spec.sampling)
    if isinstance(spec.shape, Circle):
        return (sample_circle(spec.shape, spec.sampling),)
    if isinstance(spec.shape, Ellipse):
        return (sample_ellipse(spec.shape, spec.sampling),)
    raise TypeError(f"unknown shape {type(spec.shape).__name__}")
