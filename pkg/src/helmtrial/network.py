"""Feed-forward field network with sine hidden layers and a linear output.

The network maps spatial coordinates (x, y) to a scalar field value.  Besides
plain evaluation it supports:

* second-order jet propagation: value, gradient and Hessian with respect to
  the *inputs*, carried layer by layer (six numbers per neuron), which gives
  exact Laplacians without nested automatic differentiation;
* reverse accumulation over the recorded propagation, yielding gradients of
  any scalar objective built from values/jets with respect to the flat
  parameter vector.

Parameters are stored per layer and exposed as a flat vector with a stable
ordering: for each layer in order, the weight matrix in row-major order
followed by its bias vector.  Checkpoints serialize that vector behind a
self-describing text header (see :func:`save_params`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .jets import Jet2, JetBatch

CHECKPOINT_MAGIC = "helmtrial-params"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    """Layer widths (input 2, hidden..., output 1) and activation choice."""

    layer_sizes: tuple
    activation: str = "sine"
    input_scale: float = 1.0

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise ValueError("need at least one hidden layer")
        if sizes[0] != 2 or sizes[-1] != 1:
            raise ValueError("architecture must map 2 inputs to 1 output")
        if any(n < 1 for n in sizes):
            raise ValueError("layer sizes must be positive")
        if self.activation != "sine":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not self.input_scale > 0.0:
            raise ValueError("input_scale must be positive")

    @property
    def n_hidden(self) -> int:
        return len(self.layer_sizes) - 2

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i + 1] * s[i] + s[i + 1] for i in range(len(s) - 1))

    @staticmethod
    def table1(hidden_layers: int = 6, neurons: int = 90,
               input_scale: float = 1.0) -> "Architecture":
        """Reference architecture: 6 hidden layers x 90 sine neurons."""
        return Architecture((2,) + (neurons,) * hidden_layers + (1,),
                            input_scale=input_scale)


@dataclass(frozen=True)
class MlpParams:
    """Per-layer weights/biases; immutable during evaluation."""

    arch: Architecture
    weights: tuple = field(repr=False)
    biases: tuple = field(repr=False)

    def __post_init__(self):
        sizes = self.arch.layer_sizes
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i}: shapes {w.shape}/{b.shape} do not "
                                 f"match architecture {sizes}")
            w.flags.writeable = False
            b.flags.writeable = False
            ws.append(w)
            bs.append(b)
        if len(ws) != len(sizes) - 1:
            raise ValueError("wrong number of layers")
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_params(self) -> int:
        return self.arch.n_params

    def to_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @staticmethod
    def from_flat(arch: Architecture, flat) -> "MlpParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (arch.n_params,):
            raise ValueError(f"flat vector has length {flat.size}, "
                             f"architecture needs {arch.n_params}")
        sizes = arch.layer_sizes
        ws, bs, k = [], [], 0
        for i in range(len(sizes) - 1):
            nout, nin = sizes[i + 1], sizes[i]
            ws.append(flat[k:k + nout * nin].reshape(nout, nin).copy())
            k += nout * nin
            bs.append(flat[k:k + nout].copy())
            k += nout
        return MlpParams(arch, tuple(ws), tuple(bs))


def init_params(arch: Architecture, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    ws, bs = [], []
    for i in range(len(sizes) - 1):
        nin, nout = sizes[i], sizes[i + 1]
        lim = np.sqrt(6.0 / (nin + nout))
        ws.append(rng.uniform(-lim, lim, size=(nout, nin)))
        bs.append(np.zeros(nout))
    return MlpParams(arch, tuple(ws), tuple(bs))


# ---------------------------------------------------------------------------
# Forward evaluation
# ---------------------------------------------------------------------------

def _points(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        x, y = np.broadcast_arrays(x, y)
    return x.ravel(), y.ravel()


def forward(params: MlpParams, x, y) -> np.ndarray:
    """Field values at points; scalar in, scalar out."""
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    xf, yf = _points(x, y)
    a = np.stack([xf, yf], axis=1) * params.arch.input_scale
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.sin(a @ w.T + b)
    out = (a @ params.weights[-1].T + params.biases[-1]).ravel()
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(x) if np.ndim(x) else np.shape(y))


def forward_with_tape(params: MlpParams, x, y):
    """Values plus the recorded pre-activations (for value-only adjoints)."""
    xf, yf = _points(x, y)
    a = np.stack([xf, yf], axis=1) * params.arch.input_scale
    zs = []
    a0 = a
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = a @ w.T + b
        zs.append(z)
        a = np.sin(z)
    out = (a @ params.weights[-1].T + params.biases[-1]).ravel()
    return out, (a0, zs)


def grad_from_value_tape(params: MlpParams, tape, bar_v) -> np.ndarray:
    """Flat parameter gradient of ``sum(bar_v * value)``."""
    a0, zs = tape
    bar_v = np.asarray(bar_v, dtype=float).reshape(-1, 1)
    acts = [a0] + [np.sin(z) for z in zs]

    gws = [None] * len(params.weights)
    gbs = [None] * len(params.biases)
    gws[-1] = bar_v.T @ acts[-1]
    gbs[-1] = bar_v.sum(axis=0)
    ca = bar_v @ params.weights[-1]
    for q in range(len(zs) - 1, -1, -1):
        bz = np.cos(zs[q]) * ca
        gws[q] = bz.T @ acts[q]
        gbs[q] = bz.sum(axis=0)
        ca = bz @ params.weights[q]
    return _pack(gws, gbs)


def _pack(gws, gbs) -> np.ndarray:
    parts = []
    for w, b in zip(gws, gbs):
        parts.append(np.asarray(w).ravel())
        parts.append(np.asarray(b).ravel())
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Jet propagation (value + first/second input derivatives)
# ---------------------------------------------------------------------------

def _input_channels(params, xf, yf):
    s = params.arch.input_scale
    n = xf.size
    V = np.stack([xf, yf], axis=1) * s
    X = np.tile(np.array([s, 0.0]), (n, 1))
    Y = np.tile(np.array([0.0, s]), (n, 1))
    Z = np.zeros((n, 2))
    return (V, X, Y, Z, Z.copy(), Z.copy())


def _activation_channels(zc):
    z, zx, zy, zxx, zxy, zyy = zc
    s, c = np.sin(z), np.cos(z)
    return (s, c * zx, c * zy,
            -s * zx * zx + c * zxx,
            -s * zx * zy + c * zxy,
            -s * zy * zy + c * zyy)


def forward_jet_with_tape(params: MlpParams, x, y):
    """Jet channels of the field at points, plus the propagation record."""
    xf, yf = _points(x, y)
    chans = _input_channels(params, xf, yf)
    ztapes = []
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        zc = tuple(ch @ w.T for ch in chans)
        zc = (zc[0] + b,) + zc[1:]
        ztapes.append(zc)
        chans = _activation_channels(zc)
    wm, bm = params.weights[-1], params.biases[-1]
    out = tuple((ch @ wm.T).ravel() for ch in chans)
    out = (out[0] + bm[0],) + out[1:]
    jet = JetBatch(*out)
    return jet, (xf, yf, ztapes)


def forward_jet_batch(params: MlpParams, x, y) -> JetBatch:
    jet, _ = forward_jet_with_tape(params, x, y)
    return jet


def forward_jet(params: MlpParams, p) -> Jet2:
    """Second-order jet of the field at a single point."""
    jet, _ = forward_jet_with_tape(params, float(p[0]), float(p[1]))
    return Jet2(float(jet.v[0]), float(jet.dx[0]), float(jet.dy[0]),
                float(jet.dxx[0]), float(jet.dyy[0]))


def grad_from_jet_tape(params: MlpParams, tape, bar: JetBatch) -> np.ndarray:
    """Flat parameter gradient of ``sum over points of <bar, jet>``.

    ``bar`` holds one cotangent per jet channel per point; channels a caller
    does not use are simply zero.
    """
    xf, yf, ztapes = tape
    cols = tuple(np.asarray(getattr(bar, ch), dtype=float).reshape(-1, 1)
                 for ch in ("v", "dx", "dy", "dxx", "dxy", "dyy"))

    gws = [None] * len(params.weights)
    gbs = [None] * len(params.biases)

    # Output linear layer: its input is the last activation channel set.
    acts_last = _activation_channels(ztapes[-1])
    gws[-1] = sum(c.T @ a for c, a in zip(cols, acts_last))
    gbs[-1] = cols[0].sum(axis=0)
    wm = params.weights[-1]
    bars = tuple(c @ wm for c in cols)  # cotangents on activation channels

    for q in range(len(ztapes) - 1, -1, -1):
        z, zx, zy, zxx, zxy, zyy = ztapes[q]
        s, c = np.sin(z), np.cos(z)
        bv, bx, by, bxx, bxy, byy = bars

        bzxx = c * bxx
        bzxy = c * bxy
        bzyy = c * byy
        bzx = c * bx - s * (2.0 * zx * bxx + zy * bxy)
        bzy = c * by - s * (2.0 * zy * byy + zx * bxy)
        bz = (c * bv - s * (zx * bx + zy * by)
              - (c * zx * zx + s * zxx) * bxx
              - (c * zx * zy + s * zxy) * bxy
              - (c * zy * zy + s * zyy) * byy)
        zbars = (bz, bzx, bzy, bzxx, bzxy, bzyy)

        inputs = (_activation_channels(ztapes[q - 1]) if q > 0
                  else _input_channels(params, xf, yf))
        w = params.weights[q]
        gws[q] = sum(zb.T @ inp for zb, inp in zip(zbars, inputs))
        gbs[q] = bz.sum(axis=0)
        bars = tuple(zb @ w for zb in zbars)

    return _pack(gws, gbs)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_params(path, params: MlpParams) -> None:
    """Write a versioned text checkpoint.

    Layout: line 1 ``helmtrial-params v<N>``; line 2 a JSON header with the
    architecture; then one parameter per line in flat order (shortest
    round-trip decimal representation).
    """
    header = {
        "layer_sizes": list(params.arch.layer_sizes),
        "activation": params.arch.activation,
        "input_scale": params.arch.input_scale,
    }
    lines = [f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}",
             json.dumps(header, sort_keys=True)]
    lines.extend(repr(float(v)) for v in params.to_flat())
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> MlpParams:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a parameter checkpoint")
    version = text[0].split("v")[-1]
    if int(version) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(text[1])
    arch = Architecture(tuple(header["layer_sizes"]),
                        activation=header["activation"],
                        input_scale=header["input_scale"])
    flat = np.array([float(v) for v in text[2:2 + arch.n_params]])
    return MlpParams.from_flat(arch, flat)
