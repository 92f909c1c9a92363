"""Reference solutions and field-comparison utilities.

Independent of the network pipeline: an eigenfunction series for the
canonical rectangle data, a radially symmetric Bessel closed form for the
circle, and a first-order triangular finite-element solver for all three
shapes (meshed under the one-sixth-wavelength rule).  Fields are exchanged
as structured grids with NaN outside the domain mask.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay

from .domains import Circle, Ellipse, Rect, Shape

MESH_POINTS_PER_WAVELENGTH = 6.0  # rule: max edge <= wavelength / 6


class NearResonantError(ValueError):
    """Wavenumber too close to a Dirichlet eigenvalue for a trustworthy field."""


# ---------------------------------------------------------------------------
# Bessel J0
# ---------------------------------------------------------------------------

_J0_SPLIT = 14.0


def bessel_j0(x):
    """J0 via its power series (small argument) and the Hankel asymptotic
    expansion (large argument); absolute error below 1e-10 over the usage
    range."""
    x = np.abs(np.asarray(x, dtype=float))
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    small = x <= _J0_SPLIT
    if np.any(small):
        xs = x[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for m in range(1, 41):
            term *= -q / (m * m)
            acc += term
        out[small] = acc

    if np.any(~small):
        xl = x[~small]
        p = np.ones_like(xl)
        qq = np.zeros_like(xl)
        t = np.ones_like(xl)
        for m in range(1, 11):
            t = t * (2 * m - 1) ** 2 / (8.0 * m * xl)
            if m % 2 == 1:  # odd terms feed Q
                qq += t if (m % 4 == 1) else -t
            else:  # even terms feed P
                p += t if (m % 4 == 0) else -t
        chi = xl - 0.25 * np.pi
        out[~small] = np.sqrt(2.0 / (np.pi * xl)) * (np.cos(chi) * p + np.sin(chi) * qq)

    return float(out[0]) if scalar else out


def circle_bessel(r, k: float, radius: float, psi_boundary: float = 1.0):
    """Radially symmetric circle field ``psi_R * J0(k r) / J0(k R)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < -1e-12) or np.any(r > radius * (1.0 + 1e-12)):
        raise ValueError("radius samples must lie in [0, R]")
    denom = bessel_j0(k * radius)
    if abs(denom) < 1e-6:
        raise NearResonantError(
            f"near-resonant wavenumber: |J0(kR)| = {abs(denom):.2e} < 1e-6")
    return psi_boundary * bessel_j0(k * r) / denom


# ---------------------------------------------------------------------------
# Rectangle eigenfunction series
# ---------------------------------------------------------------------------

def _rect_resonance_guard(k: float, w: float, h: float, tol: float = 1e-6):
    k2 = k * k
    n_max = int(2.0 * h * math.sqrt(k2 + 1.0) / math.pi) + 1
    m_max = int(2.0 * w * math.sqrt(k2 + 1.0) / math.pi) + 1
    for n in range(1, n_max + 1):
        lam_n = (n * math.pi / (2.0 * h)) ** 2
        for m in range(1, m_max + 1):
            lam = lam_n + (m * math.pi / (2.0 * w)) ** 2
            if abs(k2 - lam) < tol:
                raise NearResonantError(
                    f"near-resonant wavenumber: k^2 = {k2:.8g} within {tol:g} "
                    f"of eigenvalue (n={n}, m={m})")


def rect_series(x, y, k: float, half_width: float = 1.0, half_height: float = 1.0,
                psi_right: float = -1.0, psi_left: float = 1.0,
                n_terms: int = 2000, return_tail: bool = False):
    """Series solution for the canonical rectangle data.

    Boundary values: constants on the x = +/-w sides, zero on the y = +/-h
    sides.  Expansion in the y-eigenfunctions that vanish at y = +/-h; each
    coefficient solves the reduced 1-D problem in x.  Guards against
    wavenumbers within 1e-6 of a Dirichlet eigenvalue.
    """
    w, h = float(half_width), float(half_height)
    _rect_resonance_guard(k, w, h)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y))
    if np.any(np.abs(x) > w * (1 + 1e-12)) or np.any(np.abs(y) > h * (1 + 1e-12)):
        raise ValueError("evaluation points must lie in the closed rectangle")

    u = y + h
    out = np.zeros_like(x, dtype=float)
    k2 = k * k
    for n in range(1, int(n_terms) + 1, 2):  # even-n coefficients vanish
        cn = 4.0 / (n * math.pi)
        rn, ln = psi_right * cn, psi_left * cn
        mu2 = k2 - (n * math.pi / (2.0 * h)) ** 2
        if mu2 > 0.0:
            mu = math.sqrt(mu2)
            cosw, sinw = math.cos(mu * w), math.sin(mu * w)
            if abs(cosw) < 1e-9 and abs(rn + ln) > 0 or \
               abs(sinw) < 1e-9 and abs(rn - ln) > 0:
                raise NearResonantError(
                    f"near-resonant wavenumber: trig denominator vanishes at n={n}")
            a = np.zeros_like(x)
            if rn + ln != 0.0:
                a = a + (rn + ln) / (2.0 * cosw) * np.cos(mu * x)
            if rn - ln != 0.0:
                a = a + (rn - ln) / (2.0 * sinw) * np.sin(mu * x)
        else:
            nu = math.sqrt(-mu2)
            # exponent-safe cosh/sinh ratios (all exponents <= 0)
            em = np.exp(nu * (x - w))
            ep = np.exp(-nu * (x + w))
            e2 = math.exp(-2.0 * nu * w)
            a = ((rn + ln) / 2.0 * (em + ep) / (1.0 + e2)
                 + (rn - ln) / 2.0 * (em - ep) / (1.0 - e2))
        out += a * np.sin(n * math.pi * u / (2.0 * h))

    result = float(out[0]) if scalar else out.reshape(np.shape(out))
    if not return_tail:
        return result

    # Tail estimate: interior terms decay like exp(-nu_n * margin); points on
    # the loaded sides only see the O(1/N) alternating-series envelope.
    n_next = int(n_terms) + 1 if int(n_terms) % 2 == 0 else int(n_terms) + 2
    margin = w - float(np.max(np.abs(x)))
    amp = (abs(psi_right) + abs(psi_left)) * 4.0 / (n_next * math.pi)
    nu_next = math.sqrt(max((n_next * math.pi / (2.0 * h)) ** 2 - k2, 0.0))
    if margin * nu_next > 0.0:
        ratio = math.exp(-math.pi * margin / h)
        tail = amp * math.exp(-nu_next * margin) / max(1.0 - ratio, 1e-3)
    else:
        tail = 2.0 * (abs(psi_right) + abs(psi_left)) / (math.pi * n_next)
    return result, tail


def rect_series_for(rect: Rect, k: float, x, y, n_terms: int = 2000):
    """Series oracle for a :class:`Rect` (requires zero top/bottom data)."""
    if rect.psi_top != 0.0 or rect.psi_bottom != 0.0:
        raise ValueError("series oracle supports zero data on the y = +/-h sides")
    return rect_series(x, y, k, rect.half_width, rect.half_height,
                       rect.psi_right, rect.psi_left, n_terms=n_terms)


# ---------------------------------------------------------------------------
# Meshing
# ---------------------------------------------------------------------------

@dataclass
class Mesh:
    """Conforming triangulation with Dirichlet markers."""

    vertices: np.ndarray      # (Nv, 2)
    triangles: np.ndarray     # (Nt, 3) int
    boundary_idx: np.ndarray  # (Nb,) int
    boundary_psi: np.ndarray  # (Nb,)
    target_edge: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def max_edge(self) -> float:
        tri = self.vertices[self.triangles]
        e = np.concatenate([tri[:, 1] - tri[:, 0],
                            tri[:, 2] - tri[:, 1],
                            tri[:, 0] - tri[:, 2]])
        return float(np.max(np.hypot(e[:, 0], e[:, 1])))

    def save(self, path) -> None:
        """Plain-text mesh: header JSON, vertex lines, triangle lines,
        boundary lines (index + value)."""
        lines = [json.dumps({"n_vertices": self.n_vertices,
                             "n_triangles": self.n_triangles,
                             "n_boundary": int(self.boundary_idx.size),
                             "target_edge": self.target_edge}, sort_keys=True)]
        lines += [f"v {repr(float(px))} {repr(float(py))}" for px, py in self.vertices]
        lines += [f"t {a} {b} {c}" for a, b, c in self.triangles]
        lines += [f"b {i} {repr(float(p))}"
                  for i, p in zip(self.boundary_idx, self.boundary_psi)]
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def load(path) -> "Mesh":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0])
        vs, ts, bi, bp = [], [], [], []
        for line in lines[1:]:
            tag, *rest = line.split()
            if tag == "v":
                vs.append([float(rest[0]), float(rest[1])])
            elif tag == "t":
                ts.append([int(v) for v in rest])
            elif tag == "b":
                bi.append(int(rest[0]))
                bp.append(float(rest[1]))
        return Mesh(np.array(vs), np.array(ts, dtype=int),
                    np.array(bi, dtype=int), np.array(bp),
                    float(header["target_edge"]))


def mesh_rule_edge(f: float, c: float) -> float:
    """Largest admissible element edge: one-sixth of the wavelength."""
    return c / (MESH_POINTS_PER_WAVELENGTH * f)


def mesh_rectangle(rect: Rect, target_edge: float) -> Mesh:
    w, h = rect.half_width, rect.half_height
    nx = max(int(math.ceil(2.0 * w / target_edge)), 2)
    ny = max(int(math.ceil(2.0 * h / target_edge)), 2)
    xs = np.linspace(-w, w, nx + 1)
    ys = np.linspace(-h, h, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c_, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append([a, b, c_])
            tris.append([a, c_, d])
    tris = np.array(tris, dtype=int)

    vx, vy = verts[:, 0], verts[:, 1]
    on_r = np.isclose(vx, w)
    on_l = np.isclose(vx, -w)
    on_t = np.isclose(vy, h)
    on_b = np.isclose(vy, -h)
    boundary = on_r | on_l | on_t | on_b
    idx = np.nonzero(boundary)[0]
    pr, pt, pl, pb = rect.psi_sides
    psi = np.zeros(idx.size)
    for j, i in enumerate(idx):
        sides = []
        if on_r[i]:
            sides.append(pr)
        if on_t[i]:
            sides.append(pt)
        if on_l[i]:
            sides.append(pl)
        if on_b[i]:
            sides.append(pb)
        psi[j] = float(np.mean(sides))  # corners average adjacent sides
    return Mesh(verts, tris, idx, psi, target_edge)


def _boundary_angles(shape, spacing):
    """Parameter angles giving arc-length-equispaced boundary nodes."""
    if isinstance(shape, Circle):
        n = max(int(math.ceil(2.0 * math.pi * shape.radius / spacing)), 12)
        return 2.0 * math.pi * np.arange(n) / n, None
    a, b = shape.a, shape.b
    dense = np.linspace(0.0, 2.0 * math.pi, 8192)
    seg = np.hypot(-a * np.sin(dense), b * np.cos(dense))
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (seg[1:] + seg[:-1]) * np.diff(dense))])
    total = arc[-1]
    n = max(int(math.ceil(total / spacing)), 12)
    targets = total * np.arange(n) / n
    return np.interp(targets, arc, dense), (arc, dense, total)


def _shape_xy(shape, th):
    if isinstance(shape, Circle):
        return shape.radius * np.cos(th), shape.radius * np.sin(th)
    return shape.a * np.cos(th), shape.b * np.sin(th)


def _inward_normal(shape, th):
    if isinstance(shape, Circle):
        return -np.cos(th), -np.sin(th)
    nx = np.cos(th) / shape.a
    ny = np.sin(th) / shape.b
    norm = np.hypot(nx, ny)
    return -nx / norm, -ny / norm


def _boundary_clearance(shape, x, y):
    """Approximate distance from inside points to the boundary curve."""
    if isinstance(shape, Circle):
        return shape.radius - np.hypot(x, y)
    a, b = shape.a, shape.b
    phi = 0.5 * (1.0 - (x / a) ** 2 - (y / b) ** 2)
    grad = np.hypot(x / (a * a), y / (b * b))
    return phi / np.maximum(grad, 1e-9)


def _interior_lattice(shape, target_edge, clearance):
    xmin, xmax, ymin, ymax = shape.bounds()
    dy = target_edge * math.sqrt(3.0) / 2.0
    rows = np.arange(ymin + 0.5 * dy, ymax, dy)
    xs_list, ys_list = [], []
    for r, yv in enumerate(rows):
        off = 0.5 * target_edge if r % 2 else 0.0
        xv = np.arange(xmin + 0.25 * target_edge + off, xmax, target_edge)
        xs_list.append(xv)
        ys_list.append(np.full_like(xv, yv))
    x = np.concatenate(xs_list)
    y = np.concatenate(ys_list)
    keep = _boundary_clearance(shape, x, y) >= clearance
    return x[keep], y[keep]


def mesh_convex(shape, target_edge: float) -> Mesh:
    """Delaunay mesh of a circle/ellipse with boundary nodes on the curve.

    A staggered ring just inside the boundary keeps boundary-adjacent
    triangles well shaped so the largest edge stays near the target.
    """
    th, _ = _boundary_angles(shape, 0.95 * target_edge)
    bx, by = _shape_xy(shape, th)
    n_b = th.size
    # staggered inner ring at ~0.8 edge depth
    th_off = th + (th[1] - th[0]) * 0.5 if n_b > 1 else th
    ox, oy = _shape_xy(shape, th_off)
    nx_, ny_ = _inward_normal(shape, th_off)
    rx = ox + 0.8 * target_edge * nx_
    ry = oy + 0.8 * target_edge * ny_
    ix, iy = _interior_lattice(shape, target_edge, clearance=1.25 * target_edge)
    verts = np.concatenate([np.stack([bx, by], axis=1),
                            np.stack([rx, ry], axis=1),
                            np.stack([ix, iy], axis=1)])
    tris = Delaunay(verts).simplices
    p = verts[tris]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    tris = np.where(area[:, None] < 0, tris[:, [0, 2, 1]], tris)
    tris = tris[np.abs(area) > 1e-12 * target_edge ** 2]
    psi = np.full(n_b, shape.psi_boundary)
    return Mesh(verts, np.asarray(tris, dtype=int), np.arange(n_b), psi, target_edge)


def mesh_shape(shape: Shape, target_edge: float) -> Mesh:
    if isinstance(shape, Rect):
        return mesh_rectangle(shape, target_edge)
    if isinstance(shape, (Circle, Ellipse)):
        return mesh_convex(shape, target_edge)
    raise TypeError(f"unknown shape {type(shape).__name__}")


# ---------------------------------------------------------------------------
# P1 FEM
# ---------------------------------------------------------------------------

@dataclass
class FemResult:
    field: "FieldGrid"
    mesh: Mesh
    vertex_values: np.ndarray
    n_unknowns: int
    condition_estimate: float


def _assemble(mesh: Mesh, k: float):
    p = mesh.vertices[mesh.triangles]
    x1, y1 = p[:, 0, 0], p[:, 0, 1]
    x2, y2 = p[:, 1, 0], p[:, 1, 1]
    x3, y3 = p[:, 2, 0], p[:, 2, 1]
    area = 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    b = np.stack([y2 - y3, y3 - y1, y1 - y2], axis=1) / (2.0 * area[:, None])
    cc = np.stack([x3 - x2, x1 - x3, x2 - x1], axis=1) / (2.0 * area[:, None])

    ke = (b[:, :, None] * b[:, None, :] + cc[:, :, None] * cc[:, None, :]) \
        * area[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (area[:, None, None] / 12.0)
    ae = ke - (k * k) * me

    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    a = sp.coo_matrix((ae.ravel(), (rows, cols)),
                      shape=(mesh.n_vertices, mesh.n_vertices)).tocsr()
    return a


def fem_solve(shape: Shape, f: float, c: float, nx: int = 101, ny: int = 101,
              target_edge: Optional[float] = None,
              edge_divisor: Optional[float] = None,
              condition_limit: float = 1e10) -> FemResult:
    """Galerkin P1 solve of the Dirichlet Helmholtz problem on a grid.

    The mesh honors the one-sixth-wavelength rule; by default it is refined
    ``edge_divisor`` times beyond it (16 for the rectangle, whose corner
    data demands more resolution; 10 otherwise -- tuned to the validation
    tolerances).  A cheap 1-norm condition estimate guards against interior
    resonance.
    """
    from .domains import wavenumber
    k = wavenumber(f, c)
    rule = mesh_rule_edge(f, c)
    if edge_divisor is None:
        edge_divisor = 16.0 if isinstance(shape, Rect) else 10.0
    edge = min(target_edge, rule) if target_edge is not None else rule / edge_divisor
    mesh = mesh_shape(shape, edge)
    if mesh.max_edge() > rule * (1.0 + 1e-9):
        raise ValueError(f"mesh violates the edge rule: {mesh.max_edge():.4g} > {rule:.4g}")

    a = _assemble(mesh, k)
    fixed = np.zeros(mesh.n_vertices, dtype=bool)
    fixed[mesh.boundary_idx] = True
    free = ~fixed
    g = np.zeros(mesh.n_vertices)
    g[mesh.boundary_idx] = mesh.boundary_psi

    a_ff = a[free][:, free].tocsc()
    rhs = -a[free][:, fixed] @ g[fixed]
    lu = spla.splu(a_ff)
    cond = _condition_estimate(a_ff, lu)
    if cond > condition_limit:
        raise NearResonantError(
            f"FEM system near-singular: 1-norm condition estimate {cond:.2e}")
    u = g.copy()
    u[free] = lu.solve(rhs)

    xmin, xmax, ymin, ymax = shape.bounds()
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    interp = LinearNDInterpolator(mesh.vertices, u, fill_value=np.nan)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    values = interp(gx, gy)
    field = FieldGrid(xs, ys, values)
    return FemResult(field=field, mesh=mesh, vertex_values=u,
                     n_unknowns=int(free.sum()), condition_estimate=cond)


def _condition_estimate(a_csc, lu) -> float:
    n = a_csc.shape[0]
    inv = spla.LinearOperator((n, n), matvec=lu.solve,
                              rmatvec=lambda v: lu.solve(v, trans="T"))
    try:
        return float(spla.onenormest(a_csc) * spla.onenormest(inv))
    except Exception:  # estimation failure should not kill the solve
        return float("nan")


# ---------------------------------------------------------------------------
# Field grids and comparison metrics
# ---------------------------------------------------------------------------

@dataclass
class FieldGrid:
    """Structured field samples; NaN marks points outside the domain mask."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (nx, ny)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.xs.size, self.ys.size):
            raise ValueError("values shape must be (nx, ny)")

    @property
    def mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def grids(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def same_grid(self, other: "FieldGrid") -> bool:
        return (self.xs.size == other.xs.size and self.ys.size == other.ys.size
                and np.allclose(self.xs, other.xs) and np.allclose(self.ys, other.ys))

    def write_csv(self, path) -> None:
        """Header comment with the grid layout, then nx rows of ny values
        (row-major in the x index)."""
        header = {"nx": int(self.xs.size), "ny": int(self.ys.size),
                  "xmin": float(self.xs[0]), "xmax": float(self.xs[-1]),
                  "ymin": float(self.ys[0]), "ymax": float(self.ys[-1])}
        lines = [f"# {json.dumps(header, sort_keys=True)}"]
        for row in self.values:
            lines.append(",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def read_csv(path) -> "FieldGrid":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0].lstrip("# "))
        values = np.array([[float(v) for v in line.split(",")]
                           for line in lines[1:] if line])
        xs = np.linspace(header["xmin"], header["xmax"], header["nx"])
        ys = np.linspace(header["ymin"], header["ymax"], header["ny"])
        return FieldGrid(xs, ys, values)

    @staticmethod
    def evaluate(fn: Callable, xs, ys, mask=None) -> "FieldGrid":
        """Evaluate ``fn(x, y)`` on the tensor grid, NaN outside ``mask``."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        if mask is None:
            values = np.asarray(fn(gx.ravel(), gy.ravel()), dtype=float).reshape(gx.shape)
        else:
            mask = np.asarray(mask, dtype=bool)
            values = np.full(gx.shape, np.nan)
            values[mask] = fn(gx[mask], gy[mask])
        return FieldGrid(xs, ys, values)

    def evaluate_like(self, fn: Callable) -> "FieldGrid":
        """Evaluate ``fn`` on this grid under this grid's mask."""
        return FieldGrid.evaluate(fn, self.xs, self.ys, self.mask)


def grid_for_shape(shape: Shape, nx: int = 101, ny: int = 101):
    xmin, xmax, ymin, ymax = shape.bounds()
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny)


def intersect_masks(a: FieldGrid, b: FieldGrid):
    """Copies of two same-grid fields restricted to their common mask."""
    if not a.same_grid(b):
        raise ValueError("fields live on different grids")
    common = a.mask & b.mask
    va = np.where(common, a.values, np.nan)
    vb = np.where(common, b.values, np.nan)
    return FieldGrid(a.xs, a.ys, va), FieldGrid(b.xs, b.ys, vb)


@dataclass(frozen=True)
class Comparison:
    rel_l2: float
    max_abs: float
    error: FieldGrid


def relative_l2(field: FieldGrid, reference: FieldGrid) -> Comparison:
    """||a - b||_2 / ||b||_2 over the (identical) masks, plus the error field."""
    if not field.same_grid(reference):
        raise ValueError("fields live on different grids")
    ma, mb = field.mask, reference.mask
    if not np.array_equal(ma, mb):
        raise ValueError("field masks differ; intersect them first")
    if not np.any(mb):
        raise ValueError("empty (disjoint) masks")
    diff = field.values[ma] - reference.values[ma]
    ref_norm = float(np.linalg.norm(reference.values[ma]))
    if ref_norm == 0.0:
        raise ValueError("reference field has zero norm")
    err_values = np.full(field.values.shape, np.nan)
    err_values[ma] = field.values[ma] - reference.values[ma]
    return Comparison(rel_l2=float(np.linalg.norm(diff)) / ref_norm,
                      max_abs=float(np.max(np.abs(diff))),
                      error=FieldGrid(field.xs, field.ys, err_values))
