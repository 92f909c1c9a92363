"""Loss assembly, dynamic multiplier schedule, L-BFGS, and diagnostics.

Two ways to train the field network:

* ``train_soft`` minimizes ``L_d + lambda * L_b`` on the bare network, with
  the multiplier either fixed or updated from the standard deviations of the
  two loss gradients (the update blends the target ratio
  ``max(std(grad L_d), std(grad L_b)) / std(grad L_b)`` into the running
  value).
* ``train_trial`` minimizes the Helmholtz residual of the hard-constraint
  trial field only; no boundary loss exists by construction.

The optimizer is a two-loop L-BFGS with a strong-Wolfe line search.  When the
multiplier changes by more than 1% the curvature memory is dropped, since the
objective the pairs were collected on no longer exists.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .domains import Circle, DomainSpec, Ellipse, Rect, sample_circle, sample_ellipse, sample_rectangle
from .jets import JetBatch
from .network import (Architecture, MlpParams, forward_jet_with_tape,
                      forward_with_tape, grad_from_jet_tape, grad_from_value_tape)
from .trial import TrialForm, residual_coefficients

log = logging.getLogger(__name__)

_STD_GUARD = 1e-30


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def loss_pde(evaluator: Callable, points: np.ndarray, k: float) -> float:
    """Mean squared Helmholtz residual of a field-with-jet at points."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ValueError("loss_pde needs a non-empty point set")
    jet = evaluator(points[:, 0], points[:, 1])
    r = jet.dxx + jet.dyy + (float(k) ** 2) * jet.v
    return float(np.mean(r * r))


def loss_boundary(values: np.ndarray, psi: np.ndarray) -> float:
    """Pooled mean squared boundary mismatch."""
    values = np.asarray(values, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if values.size == 0:
        raise ValueError("loss_boundary needs a non-empty point set")
    return float(np.mean((values - psi) ** 2))


@dataclass(frozen=True)
class LossBreakdown:
    """One objective snapshot; for the trial method L_b is zero by construction."""

    loss_pde: float
    loss_boundary: float
    lam: float

    @property
    def loss_total(self) -> float:
        return self.loss_pde + self.lam * self.loss_boundary


# ---------------------------------------------------------------------------
# Multiplier schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedLambda:
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError("lambda must be positive")


@dataclass(frozen=True)
class DynamicLambda:
    alpha: float = 1e-3
    lam0: float = 1.0
    update_period: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.lam0 > 0.0:
            raise ValueError("lambda0 must be positive")
        if self.update_period < 1:
            raise ValueError("update_period must be >= 1")


LambdaSchedule = Union[FixedLambda, DynamicLambda]


def lambda_target(grads_d: np.ndarray, grads_b: np.ndarray) -> float:
    """Target ratio max(std_d, std_b)/std_b; >= 1 by construction."""
    grads_d = np.asarray(grads_d, dtype=float)
    grads_b = np.asarray(grads_b, dtype=float)
    if grads_d.size == 0 or grads_b.size == 0:
        raise ValueError("gradient vectors must be non-empty")
    std_b = float(np.std(grads_b))
    if std_b < _STD_GUARD:
        raise FloatingPointError("degenerate boundary gradient (std ~ 0)")
    return max(float(np.std(grads_d)), std_b) / std_b


def lambda_update(lam: float, grads_d: np.ndarray, grads_b: np.ndarray,
                  alpha: float) -> float:
    """Blend the current multiplier toward the gradient-ratio target.

    Holds the multiplier (with a log message) when the boundary gradient is
    degenerate.
    """
    try:
        lam_hat = lambda_target(grads_d, grads_b)
    except FloatingPointError:
        log.warning("lambda update held: boundary gradient std below %g", _STD_GUARD)
        return float(lam)
    return (1.0 - alpha) * float(lam) + alpha * lam_hat


# ---------------------------------------------------------------------------
# Gradient histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientHistogram:
    counts: np.ndarray
    edges: np.ndarray
    mean: float
    std: float
    vmin: float
    vmax: float

    def write_csv(self, path) -> None:
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        lines = ["# bin_center,count",
                 *(f"{repr(float(c))},{int(n)}" for c, n in zip(centers, self.counts))]
        Path(path).write_text("\n".join(lines) + "\n")


def gradient_histogram(grads: np.ndarray, bins: int = 50) -> GradientHistogram:
    """Histogram over uniform bins spanning [min, max], plus basic stats."""
    grads = np.asarray(grads, dtype=float).ravel()
    if grads.size == 0:
        raise ValueError("gradient_histogram needs a non-empty vector")
    vmin, vmax = float(grads.min()), float(grads.max())
    if vmin == vmax:
        edges = np.linspace(vmin - 0.5, vmax + 0.5, bins + 1)
    else:
        edges = np.linspace(vmin, vmax, bins + 1)
    counts, _ = np.histogram(grads, bins=edges)
    return GradientHistogram(counts=counts, edges=edges,
                             mean=float(grads.mean()), std=float(grads.std()),
                             vmin=vmin, vmax=vmax)


def last_hidden_weight_slice(arch: Architecture) -> slice:
    """Flat-vector slice of the last hidden layer's weight matrix."""
    sizes = arch.layer_sizes
    offset = 0
    for i in range(len(sizes) - 3):
        offset += sizes[i + 1] * sizes[i] + sizes[i + 1]
    q = len(sizes) - 3
    return slice(offset, offset + sizes[q + 1] * sizes[q])


def _scoped(grads: np.ndarray, arch: Architecture, scope: str) -> np.ndarray:
    if scope == "all":
        return grads
    if scope == "last-hidden":
        return grads[last_hidden_weight_slice(arch)]
    raise ValueError(f"unknown gradient scope {scope!r}")


# ---------------------------------------------------------------------------
# L-BFGS with strong-Wolfe line search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings; defaults follow the reference setup."""

    max_iters: int = 20000
    grad_tolerance: float = 1e-3
    lbfgs_history: int = 20
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tolerance > 0.0:
            raise ValueError("grad_tolerance must be positive")
        if self.lbfgs_history < 1:
            raise ValueError("lbfgs_history must be >= 1")
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad_norm: float
    n_iters: int
    status: str
    f_history: np.ndarray
    grad_norm_history: np.ndarray


def _two_loop(g, s_list, y_list):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(list(zip(s_list, y_list, _rhos(s_list, y_list)))):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(zip(s_list, y_list, _rhos(s_list, y_list)),
                              reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _rhos(s_list, y_list):
    return [1.0 / (s @ y) for s, y in zip(s_list, y_list)]


def _wolfe_search(fun, x, f0, g0, d, config: TrainConfig, alpha0: float):
    """Strong-Wolfe bracketing + zoom.

    Returns (alpha, x_new, f_new, g_new, synced) where ``synced`` says the
    last call to ``fun`` happened at the accepted point, or None on failure.
    Falls back to the best Armijo point when the curvature condition cannot
    be met within the evaluation budget.
    """
    c1, c2 = config.wolfe_c1, config.wolfe_c2
    dphi0 = float(g0 @ d)
    if dphi0 >= 0.0:
        return None
    budget = [config.max_line_search]

    def phi(a):
        budget[0] -= 1
        f, g = fun(x + a * d)
        return f, g, float(g @ d)

    armijo_fallback = []  # (alpha, f, g) of the best Armijo-satisfying point

    def zoom(lo, f_lo, dlo, hi, f_hi):
        while budget[0] > 0:
            span = hi - lo
            # quadratic interpolation, safeguarded toward the middle
            denom = 2.0 * (f_hi - f_lo - dlo * span)
            a = lo + (-dlo * span * span / denom if denom != 0.0 else 0.5 * span)
            lim_lo, lim_hi = min(lo, hi), max(lo, hi)
            width = lim_hi - lim_lo
            if not (lim_lo + 0.1 * width <= a <= lim_hi - 0.1 * width):
                a = lo + 0.5 * span
            f, g, dphi = phi(a)
            if f > f0 + c1 * a * dphi0 or f >= f_lo:
                hi, f_hi = a, f
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return a, x + a * d, f, g, True
                armijo_fallback[:] = [(a, f, g)]
                if dphi * span >= 0.0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, dlo = a, f, dphi
        if armijo_fallback:
            a, f, g = armijo_fallback[0]
            return a, x + a * d, f, g, False
        return None

    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    a = alpha0
    first = True
    while budget[0] > 0:
        f, g, dphi = phi(a)
        if f > f0 + c1 * a * dphi0 or (not first and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f)
        if abs(dphi) <= -c2 * dphi0:
            return a, x + a * d, f, g, True
        armijo_fallback[:] = [(a, f, g)]
        if dphi >= 0.0:
            return zoom(a, f, dphi, a_prev, f_prev)
        a_prev, f_prev, d_prev = a, f, dphi
        a *= 2.0
        first = False
    if armijo_fallback:
        a, f, g = armijo_fallback[0]
        return a, x + a * d, f, g, False
    return None


def lbfgs_minimize(fun: Callable, x0: np.ndarray, config: TrainConfig,
                   callback: Optional[Callable] = None) -> LbfgsResult:
    """Minimize ``fun(x) -> (f, grad)`` from ``x0``.

    Stops when the gradient max-norm falls below ``config.grad_tolerance``,
    at ``max_iters``, or when the line search stalls.  ``callback(it, x, f, g)``
    runs after each accepted step; it may return ``(new_f, new_g, reset)`` to
    swap in a re-weighted objective value/gradient and optionally drop the
    curvature memory.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    if not np.isfinite(f):
        raise ValueError("objective not finite at the initial point")
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    if gnorm <= config.grad_tolerance:
        return LbfgsResult(x, float(f), gnorm, 0, "converged",
                           np.array([]), np.array([]))

    s_list: list = []
    y_list: list = []
    f_hist: list = []
    g_hist: list = []
    status = "max-iterations"
    it = 0
    for it in range(1, config.max_iters + 1):
        d = -_two_loop(g, s_list, y_list)
        if float(d @ g) >= 0.0:  # lost curvature; restart from steepest descent
            s_list.clear()
            y_list.clear()
            d = -g
        alpha0 = 1.0 if s_list else min(1.0, 1.0 / max(gnorm, 1e-12))
        hit = _wolfe_search(fun, x, f, g, d, config, alpha0)
        if hit is None:
            status = "line-search stalled"
            it -= 1
            break
        _, x_new, f_new, g_new, synced = hit
        if not synced:
            f_new, g_new = fun(x_new)
        s = x_new - x
        yv = g_new - g
        if float(s @ yv) > 1e-10 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            s_list.append(s)
            y_list.append(yv)
            if len(s_list) > config.lbfgs_history:
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        f_hist.append(float(f))
        g_hist.append(gnorm)
        if callback is not None:
            action = callback(it, x, f, g)
            if action is not None:
                new_f, new_g, reset = action
                f, g = float(new_f), np.asarray(new_g, dtype=float)
                gnorm = float(np.max(np.abs(g)))
                if reset:
                    s_list.clear()
                    y_list.clear()
        if gnorm <= config.grad_tolerance:
            status = "converged"
            break
    return LbfgsResult(x, float(f), gnorm, it, status,
                       np.asarray(f_hist), np.asarray(g_hist))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class TrainReport:
    """Per-iteration loss history plus the trained parameters."""

    method: str
    k: float
    iterations: np.ndarray
    loss_pde: np.ndarray
    loss_boundary: np.ndarray
    loss_total: np.ndarray
    lam: np.ndarray
    grad_norm: np.ndarray
    status: str
    wall_time_s: float
    final_params: MlpParams
    lambda_hat: Optional[np.ndarray] = None
    histograms: Optional[dict] = None

    @property
    def n_iters(self) -> int:
        return int(self.iterations.size)

    def write_csv(self, path) -> None:
        """Line-oriented CSV with a JSON-style summary header comment."""
        import json
        summary = {
            "method": self.method,
            "k": self.k,
            "status": self.status,
            "iterations": self.n_iters,
            "final_loss_total": float(self.loss_total[-1]) if self.n_iters else None,
            "wall_time_s": round(self.wall_time_s, 3),
        }
        lines = [f"# {json.dumps(summary, sort_keys=True)}",
                 "iteration,loss_pde,loss_boundary,loss_total,lambda,grad_norm"]
        for row in zip(self.iterations, self.loss_pde, self.loss_boundary,
                       self.loss_total, self.lam, self.grad_norm):
            lines.append(",".join([str(int(row[0]))] +
                                  [repr(float(v)) for v in row[1:]]))
        Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Soft-constraint training
# ---------------------------------------------------------------------------

class _SoftObjective:
    """L_d + lam*L_b on the bare network, with per-evaluation extras cached."""

    def __init__(self, arch, interior, boundary, psi_b, k, lam):
        self.arch = arch
        self.xi, self.yi = interior[:, 0].copy(), interior[:, 1].copy()
        self.xb, self.yb = boundary[:, 0].copy(), boundary[:, 1].copy()
        self.psi_b = np.asarray(psi_b, dtype=float)
        self.k2 = float(k) ** 2
        self.lam = float(lam)
        self.last = None  # (L_d, L_b, g_d, g_b)

    def components(self, theta):
        params = MlpParams.from_flat(self.arch, theta)
        jet, jtape = forward_jet_with_tape(params, self.xi, self.yi)
        r = jet.dxx + jet.dyy + self.k2 * jet.v
        n = r.size
        ld = float(np.mean(r * r))
        scale = (2.0 / n) * r
        zeros = np.zeros_like(r)
        bar = JetBatch(self.k2 * scale, zeros, zeros, scale, zeros, scale)
        g_d = grad_from_jet_tape(params, jtape, bar)

        vals, vtape = forward_with_tape(params, self.xb, self.yb)
        mis = vals - self.psi_b
        lb = float(np.mean(mis * mis))
        g_b = grad_from_value_tape(params, vtape, (2.0 / mis.size) * mis)
        return ld, lb, g_d, g_b

    def __call__(self, theta):
        ld, lb, g_d, g_b = self.components(theta)
        self.last = (ld, lb, g_d, g_b)
        return ld + self.lam * lb, g_d + self.lam * g_b


def train_soft(domain: DomainSpec, params0: MlpParams, k: float,
               schedule: LambdaSchedule, config: TrainConfig,
               lambda_grad_scope: str = "all",
               histogram_scope: str = "last-hidden",
               histogram_bins: int = 50) -> TrainReport:
    """Soft-constraint training on a rectangle domain."""
    if not isinstance(domain.shape, Rect):
        raise ValueError("soft training needs a boundary point set "
                         "(rectangle domain)")
    interior, boundary, psi_b = sample_rectangle(domain.shape, domain.sampling)
    dynamic = isinstance(schedule, DynamicLambda)
    lam0 = schedule.lam0 if dynamic else schedule.lam
    obj = _SoftObjective(params0.arch, interior, boundary, psi_b, k, lam0)

    rows = {"ld": [], "lb": [], "lt": [], "lam": [], "gnorm": [], "lhat": []}

    def callback(it, x, f, g):
        ld, lb, g_d, g_b = obj.last
        rows["ld"].append(ld)
        rows["lb"].append(lb)
        rows["lt"].append(f)
        rows["lam"].append(obj.lam)
        rows["gnorm"].append(float(np.max(np.abs(g))))
        if not dynamic or it % schedule.update_period != 0:
            return None
        old = obj.lam
        new = lambda_update(old, _scoped(g_d, params0.arch, lambda_grad_scope),
                            _scoped(g_b, params0.arch, lambda_grad_scope),
                            schedule.alpha)
        try:
            rows["lhat"].append(lambda_target(
                _scoped(g_d, params0.arch, lambda_grad_scope),
                _scoped(g_b, params0.arch, lambda_grad_scope)))
        except FloatingPointError:
            rows["lhat"].append(float("nan"))
        obj.lam = new
        reset = abs(new - old) > 0.01 * abs(old)
        return ld + new * lb, g_d + new * g_b, reset

    t0 = time.perf_counter()
    result = lbfgs_minimize(obj, params0.to_flat(), config, callback=callback)
    wall = time.perf_counter() - t0
    final = MlpParams.from_flat(params0.arch, result.x)

    ld, lb, g_d, g_b = obj.components(result.x)
    hists = {
        "grad_pde": gradient_histogram(
            _scoped(g_d, params0.arch, histogram_scope), histogram_bins),
        "grad_boundary": gradient_histogram(
            _scoped(g_b, params0.arch, histogram_scope), histogram_bins),
    }
    n = len(rows["ld"])
    return TrainReport(
        method="soft-dynamic" if dynamic else "soft-fixed",
        k=float(k),
        iterations=np.arange(1, n + 1),
        loss_pde=np.asarray(rows["ld"]),
        loss_boundary=np.asarray(rows["lb"]),
        loss_total=np.asarray(rows["lt"]),
        lam=np.asarray(rows["lam"]),
        grad_norm=np.asarray(rows["gnorm"]),
        status=result.status,
        wall_time_s=wall,
        final_params=final,
        lambda_hat=np.asarray(rows["lhat"]) if dynamic else None,
        histograms=hists,
    )


# ---------------------------------------------------------------------------
# Trial-solution training
# ---------------------------------------------------------------------------

class _TrialObjective:
    """Mean squared Helmholtz residual of the trial field.

    The geometry enters only through per-point linear coefficients on the
    network jet, precomputed once.
    """

    def __init__(self, arch, coeffs, x, y):
        self.arch = arch
        self.coeffs = coeffs
        self.x, self.y = x, y
        self.last = None

    def __call__(self, theta):
        params = MlpParams.from_flat(self.arch, theta)
        jet, tape = forward_jet_with_tape(params, self.x, self.y)
        r = self.coeffs.residual(jet)
        f = float(np.mean(r * r))
        bar = self.coeffs.cotangent((2.0 / r.size) * r)
        g = grad_from_jet_tape(params, tape, bar)
        self.last = f
        return f, g


def collocation_points(domain: DomainSpec) -> np.ndarray:
    """All residual collocation points for the trial method.

    For the rectangle this includes the boundary set, which the trial field
    satisfies identically; the residual is still sampled there.
    """
    shape = domain.shape
    if isinstance(shape, Rect):
        interior, boundary, _ = sample_rectangle(shape, domain.sampling)
        return np.concatenate([interior, boundary])
    if isinstance(shape, Circle):
        return sample_circle(shape, domain.sampling)
    if isinstance(shape, Ellipse):
        return sample_ellipse(shape, domain.sampling)
    raise TypeError(f"unknown shape {type(shape).__name__}")


def train_trial(domain: DomainSpec, form: TrialForm, params0: MlpParams,
                k: float, config: TrainConfig) -> TrainReport:
    """Hard-constraint training: minimizes the trial-field residual only."""
    pts = collocation_points(domain)
    coeffs = residual_coefficients(form, k, pts[:, 0], pts[:, 1])
    obj = _TrialObjective(params0.arch, coeffs, pts[:, 0].copy(), pts[:, 1].copy())

    rows = {"lt": [], "gnorm": []}

    def callback(it, x, f, g):
        rows["lt"].append(f)
        rows["gnorm"].append(float(np.max(np.abs(g))))
        return None

    t0 = time.perf_counter()
    result = lbfgs_minimize(obj, params0.to_flat(), config, callback=callback)
    wall = time.perf_counter() - t0
    n = len(rows["lt"])
    zero = np.zeros(n)
    return TrainReport(
        method="trial",
        k=float(k),
        iterations=np.arange(1, n + 1),
        loss_pde=np.asarray(rows["lt"]),
        loss_boundary=zero,
        loss_total=np.asarray(rows["lt"]),
        lam=zero.copy(),
        grad_norm=np.asarray(rows["gnorm"]),
        status=result.status,
        wall_time_s=wall,
        final_params=MlpParams.from_flat(params0.arch, result.x),
    )
