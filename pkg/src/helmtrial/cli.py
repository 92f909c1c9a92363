"""Batch command-line front-end.

Subcommands:

* ``solve``    train per the configured method; writes per-frequency run
  directories with the loss report CSV, a parameter checkpoint and the field
  on an evaluation grid.
* ``oracle``   reference fields (series / Bessel / FEM) plus cross-checks.
* ``compare``  metrics between two field CSVs (relative L2, max-abs, error field).
* ``adf``      rasterize distance fields / interpolation weights to CSV.
* ``diagnose`` soft-method gradient histograms and the std ratio.

Every run directory is ``<out>/<method-or-oracle>/<shape>/<freq>Hz``.  The
default output root comes from ``--out``, else the ``HELMTRIAL_OUT_ROOT``
environment variable, else the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import oracle as orc
from . import trial as tr
from .config import RunConfig, apply_overrides, parse, serialize
from .domains import Circle, Ellipse, Rect, wavenumber
from .network import forward, init_params, save_params
from .training import gradient_histogram, train_soft, train_trial

ENV_OUT_ROOT = "HELMTRIAL_OUT_ROOT"


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = parse(Path(args.config).read_text())
    else:
        cfg = RunConfig()
    out_default = os.environ.get(ENV_OUT_ROOT)
    cfg = apply_overrides(
        cfg,
        method=args.method,
        frequencies=args.freq,
        seed=args.seed,
        out_dir=args.out or (out_default if out_default else None),
        lam=getattr(args, "lam", None),
        alpha=getattr(args, "alpha", None),
        measure=getattr(args, "sampling", None),
        lambda_grad_scope=getattr(args, "lambda_grad_scope", None),
    )
    return cfg


def _run_dir(cfg: RunConfig, kind: str, freq: float) -> Path:
    d = Path(cfg.out_dir) / kind / cfg.shape_name() / f"{freq:g}Hz"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _train_one(cfg: RunConfig, freq: float):
    k = wavenumber(freq, cfg.speed_of_sound)
    params0 = init_params(cfg.architecture, cfg.init_seed)
    if cfg.method == "trial":
        form = tr.form_for_shape(cfg.shape, s=cfg.trial_s)
        report = train_trial(cfg.domain, form, params0, k, cfg.train)
        def field(x, y):
            return tr.trial_eval(form, report.final_params, x, y)
    else:
        report = train_soft(cfg.domain, params0, k, cfg.schedule, cfg.train,
                            lambda_grad_scope=cfg.lambda_grad_scope)
        def field(x, y):
            return forward(report.final_params, x, y)
    return k, report, field


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    (Path(cfg.out_dir) / "resolved.ini").write_text(serialize(cfg))
    for freq in cfg.frequencies:
        k, report, field = _train_one(cfg, freq)
        out = _run_dir(cfg, cfg.method, freq)
        report.write_csv(out / "report.csv")
        save_params(out / "params.txt", report.final_params)
        xs, ys = orc.grid_for_shape(cfg.shape, cfg.grid_n, cfg.grid_n)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        mask = cfg.shape.contains(gx, gy)
        grid = orc.FieldGrid.evaluate(field, xs, ys, mask)
        grid.write_csv(out / "field.csv")
        print(f"solve {cfg.method} {cfg.shape_name()} {freq:g} Hz: "
              f"{report.n_iters} iters, status={report.status}, "
              f"final loss={report.loss_total[-1]:.3e} -> {out}")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    for freq in cfg.frequencies:
        k = wavenumber(freq, cfg.speed_of_sound)
        out = _run_dir(cfg, "oracle", freq)
        fem = orc.fem_solve(cfg.shape, freq, cfg.speed_of_sound,
                            cfg.grid_n, cfg.grid_n)
        fem.field.write_csv(out / "fem.csv")

        analytic = None
        if isinstance(cfg.shape, Rect):
            def analytic(x, y):
                return orc.rect_series_for(cfg.shape, k, x, y)
            name = "series.csv"
        elif isinstance(cfg.shape, Circle):
            def analytic(x, y):
                return orc.circle_bessel(np.hypot(x, y), k, cfg.shape.radius,
                                         cfg.shape.psi_boundary)
            name = "bessel.csv"
        info = {
            "frequency_hz": freq,
            "wavenumber": k,
            "mesh_vertices": fem.mesh.n_vertices,
            "mesh_triangles": fem.mesh.n_triangles,
            "mesh_max_edge": fem.mesh.max_edge(),
            "mesh_rule_edge": orc.mesh_rule_edge(freq, cfg.speed_of_sound),
            "condition_estimate": fem.condition_estimate,
        }
        if analytic is not None:
            grid = fem.field.evaluate_like(analytic)
            grid.write_csv(out / name)
            cmp_ = orc.relative_l2(fem.field, grid)
            info["crosscheck_rel_l2"] = cmp_.rel_l2
            info["crosscheck_max_abs"] = cmp_.max_abs
        (out / "oracle.json").write_text(json.dumps(info, indent=2, sort_keys=True))
        print(f"oracle {cfg.shape_name()} {freq:g} Hz -> {out}")
    return 0


def cmd_compare(args) -> int:
    a = orc.FieldGrid.read_csv(args.field_a)
    b = orc.FieldGrid.read_csv(args.field_b)
    a, b = orc.intersect_masks(a, b)
    cmp_ = orc.relative_l2(a, b)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    cmp_.error.write_csv(out / "error.csv")
    metrics = {"rel_l2": cmp_.rel_l2, "max_abs": cmp_.max_abs,
               "field_a": str(args.field_a), "field_b": str(args.field_b)}
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))
    print(f"rel_l2={cmp_.rel_l2:.6g} max_abs={cmp_.max_abs:.6g} -> {out}")
    return 0


def cmd_adf(args) -> int:
    cfg = _load_config(args)
    form = tr.form_for_shape(cfg.shape, s=cfg.trial_s)
    xs, ys = orc.grid_for_shape(cfg.shape, args.grid, args.grid)
    what = args.what
    if what == "phi_e":
        def fn(x, y):
            return np.asarray(form.equivalent.value(x, y))
    elif what.startswith("weight:"):
        i = int(what.split(":", 1)[1]) - 1
        if not 0 <= i < form.n_pieces:
            raise ValueError(f"weight index out of range 1..{form.n_pieces}")
        if form.weight_rule == "complement":
            def fn(x, y):
                return 1.0 - np.asarray(form.pieces[0].adf.value(x, y))
        else:
            def fn(x, y):
                return tr.shepard_weights(form, x, y)[i]
    elif what.startswith("piece:"):
        i = int(what.split(":", 1)[1]) - 1
        if not 0 <= i < form.n_pieces:
            raise ValueError(f"piece index out of range 1..{form.n_pieces}")
        def fn(x, y):
            return np.asarray(form.pieces[i].adf.value(x, y))
    else:
        raise ValueError("--what must be phi_e, weight:<i> or piece:<i>")
    grid = orc.FieldGrid.evaluate(fn, xs, ys)
    out = Path(args.out_file) if args.out_file else Path(f"adf_{what.replace(':', '')}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    grid.write_csv(out)
    print(f"adf {what} ({args.grid}x{args.grid}) -> {out}")
    return 0


def cmd_diagnose(args) -> int:
    cfg = _load_config(args)
    if cfg.method == "trial":
        cfg = apply_overrides(cfg, method="soft-fixed")
    for freq in cfg.frequencies:
        k, report, _ = _train_one(cfg, freq)
        out = _run_dir(cfg, f"diagnose-{cfg.method}", freq)
        report.write_csv(out / "report.csv")
        hp = report.histograms["grad_pde"]
        hb = report.histograms["grad_boundary"]
        hp.write_csv(out / "grad_pde_hist.csv")
        hb.write_csv(out / "grad_boundary_hist.csv")
        summary = {
            "frequency_hz": freq,
            "std_grad_pde": hp.std,
            "std_grad_boundary": hb.std,
            "std_ratio": hp.std / hb.std if hb.std > 0 else float("inf"),
            "range_grad_pde": [hp.vmin, hp.vmax],
            "range_grad_boundary": [hb.vmin, hb.vmax],
            "final_loss_boundary": float(report.loss_boundary[-1]),
        }
        (out / "diagnose.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        print(f"diagnose {freq:g} Hz: std ratio = {summary['std_ratio']:.3g} -> {out}")
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--method", choices=("soft-fixed", "soft-dynamic", "trial"))
    p.add_argument("--freq", type=lambda s: [float(v) for v in s.split(",")],
                   help="comma-separated frequencies in Hz")
    p.add_argument("--seed", type=int, help="sampling and init seed")
    p.add_argument("--out", help="output root directory")
    p.add_argument("--lambda", dest="lam", type=float, help="fixed multiplier value")
    p.add_argument("--alpha", type=float, help="dynamic multiplier blend rate")
    p.add_argument("--sampling", choices=("area-uniform", "coord-uniform"))
    p.add_argument("--lambda-grad-scope", dest="lambda_grad_scope",
                   choices=("all", "last-hidden"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="helmtrial", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="train and export fields")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("oracle", help="reference fields and cross-checks")
    _add_common(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("compare", help="compare two field CSVs")
    p.add_argument("field_a")
    p.add_argument("field_b")
    p.add_argument("--out", help="directory for metrics.json and error.csv")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("adf", help="rasterize distance fields / weights")
    _add_common(p)
    p.add_argument("--what", default="phi_e",
                   help="phi_e, weight:<i> or piece:<i> (1-based)")
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out-file", help="output CSV path")
    p.set_defaults(fn=cmd_adf)

    p = sub.add_parser("diagnose", help="gradient histograms for the soft method")
    _add_common(p)
    p.set_defaults(fn=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
