"""Experiment configuration: a human-editable INI file, one file per run.

Sections: ``[domain]`` (shape + boundary data), ``[sampling]``,
``[network]``, ``[training]`` and ``[run]``.  Defaults reproduce the
reference setup: 6x90 sine network, 6400 interior / 320 boundary points (or
10000 for the single-boundary shapes), L-BFGS for 20000 iterations at
gradient tolerance 1e-3, sound speed 340 m/s, frequencies 300/600/750 Hz.

``parse(serialize(config))`` is the identity; numbers are written in
shortest round-trip form.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .domains import Circle, DomainSpec, Ellipse, Rect, Sampling, Shape
from .network import Architecture
from .training import DynamicLambda, FixedLambda, TrainConfig

METHODS = ("soft-fixed", "soft-dynamic", "trial")


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment needs, flags already folded in."""

    shape: Shape = field(default_factory=Rect)
    sampling: Sampling = field(default_factory=lambda: Sampling(6400, 320))
    hidden_layers: int = 6
    neurons: int = 90
    input_scale: float = 1.0
    init_seed: int = 0
    method: str = "trial"
    lam: float = 1.0
    alpha: float = 1e-3
    lambda_update_period: int = 1
    lambda_grad_scope: str = "all"
    trial_s: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    frequencies: tuple = (300.0, 600.0, 750.0)
    speed_of_sound: float = 340.0
    out_dir: str = "runs"
    grid_n: int = 101

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.frequencies:
            raise ValueError("need at least one frequency")
        for f in self.frequencies:
            if not f > 0.0:
                raise ValueError(f"frequency must be positive, got {f}")
        if not self.speed_of_sound > 0.0:
            raise ValueError("speed of sound must be positive")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")

    @property
    def architecture(self) -> Architecture:
        return Architecture((2,) + (self.neurons,) * self.hidden_layers + (1,),
                            input_scale=self.input_scale)

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(self.shape, self.sampling)

    @property
    def schedule(self):
        if self.method == "soft-dynamic":
            return DynamicLambda(alpha=self.alpha, lam0=self.lam,
                                 update_period=self.lambda_update_period)
        return FixedLambda(lam=self.lam)

    def shape_name(self) -> str:
        return type(self.shape).__name__.lower()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    dom = {"shape": cfg.shape_name()}
    if isinstance(cfg.shape, Rect):
        dom.update(half_width=cfg.shape.half_width, half_height=cfg.shape.half_height,
                   psi_right=cfg.shape.psi_right, psi_top=cfg.shape.psi_top,
                   psi_left=cfg.shape.psi_left, psi_bottom=cfg.shape.psi_bottom)
    elif isinstance(cfg.shape, Circle):
        dom.update(radius=cfg.shape.radius, psi_boundary=cfg.shape.psi_boundary)
    else:
        dom.update(a=cfg.shape.a, b=cfg.shape.b, psi_boundary=cfg.shape.psi_boundary)
    cp["domain"] = {k: _fmt(v) for k, v in dom.items()}
    cp["sampling"] = {
        "n_interior": _fmt(cfg.sampling.n_interior),
        "n_boundary": _fmt(cfg.sampling.n_boundary),
        "seed": _fmt(cfg.sampling.seed),
        "measure": cfg.sampling.measure,
    }
    cp["network"] = {
        "hidden_layers": _fmt(cfg.hidden_layers),
        "neurons": _fmt(cfg.neurons),
        "input_scale": _fmt(cfg.input_scale),
        "init_seed": _fmt(cfg.init_seed),
    }
    cp["training"] = {
        "method": cfg.method,
        "lambda": _fmt(cfg.lam),
        "alpha": _fmt(cfg.alpha),
        "lambda_update_period": _fmt(cfg.lambda_update_period),
        "lambda_grad_scope": cfg.lambda_grad_scope,
        "trial_s": _fmt(cfg.trial_s),
        "max_iters": _fmt(cfg.train.max_iters),
        "grad_tolerance": _fmt(cfg.train.grad_tolerance),
        "lbfgs_history": _fmt(cfg.train.lbfgs_history),
        "wolfe_c1": _fmt(cfg.train.wolfe_c1),
        "wolfe_c2": _fmt(cfg.train.wolfe_c2),
        "max_line_search": _fmt(cfg.train.max_line_search),
        "seed": _fmt(cfg.train.seed),
    }
    cp["run"] = {
        "frequencies": ", ".join(_fmt(f) for f in cfg.frequencies),
        "speed_of_sound": _fmt(cfg.speed_of_sound),
        "out_dir": cfg.out_dir,
        "grid_n": _fmt(cfg.grid_n),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)

    def get(section, key, cast, default):
        if section in cp and key in cp[section]:
            return cast(cp[section][key])
        return default

    shape_name = get("domain", "shape", str, "rect")
    if shape_name in ("rect", "rectangle"):
        shape = Rect(
            half_width=get("domain", "half_width", float, 1.0),
            half_height=get("domain", "half_height", float, 1.0),
            psi_right=get("domain", "psi_right", float, -1.0),
            psi_top=get("domain", "psi_top", float, 0.0),
            psi_left=get("domain", "psi_left", float, 1.0),
            psi_bottom=get("domain", "psi_bottom", float, 0.0),
        )
    elif shape_name == "circle":
        shape = Circle(radius=get("domain", "radius", float, 1.0),
                       psi_boundary=get("domain", "psi_boundary", float, 1.0))
    elif shape_name == "ellipse":
        shape = Ellipse(a=get("domain", "a", float, 1.0),
                        b=get("domain", "b", float, 0.5),
                        psi_boundary=get("domain", "psi_boundary", float, 1.0))
    else:
        raise ValueError(f"unknown shape {shape_name!r}")

    default_n = 320 if isinstance(shape, Rect) else 0
    sampling = Sampling(
        n_interior=get("sampling", "n_interior", int,
                       6400 if isinstance(shape, Rect) else 10000),
        n_boundary=get("sampling", "n_boundary", int, default_n),
        seed=get("sampling", "seed", int, 0),
        measure=get("sampling", "measure", str, "area-uniform"),
    )
    train = TrainConfig(
        max_iters=get("training", "max_iters", int, 20000),
        grad_tolerance=get("training", "grad_tolerance", float, 1e-3),
        lbfgs_history=get("training", "lbfgs_history", int, 20),
        wolfe_c1=get("training", "wolfe_c1", float, 1e-4),
        wolfe_c2=get("training", "wolfe_c2", float, 0.9),
        max_line_search=get("training", "max_line_search", int, 25),
        seed=get("training", "seed", int, 0),
    )
    freq_text = get("run", "frequencies", str, "300.0, 600.0, 750.0")
    frequencies = tuple(float(tok) for tok in freq_text.replace(",", " ").split())
    return RunConfig(
        shape=shape,
        sampling=sampling,
        hidden_layers=get("network", "hidden_layers", int, 6),
        neurons=get("network", "neurons", int, 90),
        input_scale=get("network", "input_scale", float, 1.0),
        init_seed=get("network", "init_seed", int, 0),
        method=get("training", "method", str, "trial"),
        lam=get("training", "lambda", float, 1.0),
        alpha=get("training", "alpha", float, 1e-3),
        lambda_update_period=get("training", "lambda_update_period", int, 1),
        lambda_grad_scope=get("training", "lambda_grad_scope", str, "all"),
        trial_s=get("training", "trial_s", int, 1),
        train=train,
        frequencies=frequencies,
        speed_of_sound=get("run", "speed_of_sound", float, 340.0),
        out_dir=get("run", "out_dir", str, "runs"),
        grid_n=get("run", "grid_n", int, 101),
    )


def apply_overrides(cfg: RunConfig, *, method=None, frequencies=None, seed=None,
                    out_dir=None, lam=None, alpha=None, measure=None,
                    lambda_grad_scope=None) -> RunConfig:
    """Fold command-line overrides into a parsed config."""
    if method is not None:
        cfg = replace(cfg, method=method)
    if frequencies is not None:
        cfg = replace(cfg, frequencies=tuple(float(f) for f in frequencies))
    if seed is not None:
        cfg = replace(cfg, sampling=replace(cfg.sampling, seed=int(seed)),
                      init_seed=int(seed))
    if out_dir is not None:
        cfg = replace(cfg, out_dir=str(out_dir))
    if lam is not None:
        cfg = replace(cfg, lam=float(lam))
    if alpha is not None:
        cfg = replace(cfg, alpha=float(alpha))
    if measure is not None:
        cfg = replace(cfg, sampling=replace(cfg.sampling, measure=measure))
    if lambda_grad_scope is not None:
        cfg = replace(cfg, lambda_grad_scope=lambda_grad_scope)
    return cfg
