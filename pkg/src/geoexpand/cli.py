"""Command-line interface.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 variogram fit
did not converge, 5 conditioning failure, 6 equivalence threshold exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .exceptions import (
    ConditioningError,
    EmptyResultError,
    FitError,
    ParseError,
    UndefinedStatisticError,
    ValidationError,
)
from .expansion import ExpansionConfig, interpolate_latent, learn_expansion, stationarity_report
from .regression import KernelParams, equivalence_sweep, gp_predict, optimize_hyperparams
from .svg import Figure, _colour, _limits, variogram_figure
from .synthetic import FieldSpec, random_subsample, sample_stationary_field, sample_two_regime_field
from .variogram import BinnedVariogram, VariogramFit, bin_cloud, empirical_semivariance, fit_variogram

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_FIT, EXIT_CONDITIONING, EXIT_EQUIV = 0, 2, 3, 4, 5, 6

EQUIV_THRESHOLD = 1e-8

# built-in defaults; a RunConfig file and then explicit flags override them
DEFAULTS = {
    "variogram": {"n_bins": 10, "h_max": None},
    "fit": {"n_bins": 10, "h_max": None, "family": "gaussian", "nugget": "off"},
    "krige": {"test": None, "predict_grid": None, "signal_var": 1.0, "length_scale": 1.0,
              "noise": 0.0, "optimize": False, "mean": "constant"},
    "equiv": {"n": 20, "m": 5, "trials": 100, "seed": 42},
    "expand": {"p": 1, "lam": None, "max_iters": 200, "seed": 42, "optimizer": "gradient",
               "n_bins": 10, "grid_n": 40},
    "synth": {"generator": "stationary", "nx": 30, "ny": 30, "spacing": 1.0, "signal_var": 1.0,
              "length_scale": 3.0, "noise": 0.01, "gap": 10.0, "geometry": "half-plane",
              "n_sample": 0, "seed": 42},
    "repro-paper": {"seed": 7, "n_sample": 20},
}
# config-file names that differ from the attribute name
CONFIG_ALIASES = {"lam": "lambda"}

TYPES = {
    "n_bins": int, "h_max": float, "signal_var": float, "length_scale": float, "noise": float,
    "n": int, "m": int, "trials": int, "seed": int, "p": int, "lam": float, "max_iters": int,
    "grid_n": int, "nx": int, "ny": int, "spacing": float, "gap": float, "n_sample": int,
}


def _bool(s):
    if isinstance(s, bool):
        return s
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"cannot parse {s!r} as a boolean")


def _config_key(cmd, name):
    return f"{cmd}.{CONFIG_ALIASES.get(name, name).replace('_', '-')}"


def known_config_keys():
    return [_config_key(cmd, k) for cmd, d in DEFAULTS.items() for k in d]


def resolve(args):
    """Merge explicit flags over config-file values over built-in defaults."""
    cmd = args.command
    config = io.load_run_config(args.config, known_config_keys()) if args.config else {}
    opts = {}
    for name, default in DEFAULTS[cmd].items():
        value = getattr(args, name, None)
        if value is None or (value is False and name == "optimize"):
            key = _config_key(cmd, name)
            if key in config:
                raw = config[key]
                if name == "optimize":
                    value = _bool(raw)
                elif name in TYPES:
                    try:
                        value = TYPES[name](raw)
                    except ValueError:
                        raise ParseError(f"config key {key}: cannot parse {raw!r}") from None
                else:
                    value = raw
            else:
                value = default
        opts[name] = value
    return argparse.Namespace(**opts)


def _out_dir(args):
    if not getattr(args, "out", None):
        raise ValidationError("--out <dir> is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---- subcommands


def _cloud_and_bins(samples, n_bins, h_max):
    cloud = empirical_semivariance(samples)
    h_max = float(cloud.h.max()) if h_max is None else h_max
    return cloud, bin_cloud(cloud, n_bins, h_max)


def cmd_variogram(args, opts):
    out = _out_dir(args)
    samples, _ = io.read_sample_csv(args.input)
    cloud, binned = _cloud_and_bins(samples, opts.n_bins, opts.h_max)
    io.write_table(out / "cloud.csv", ["h", "v", "i", "j"],
                   zip(cloud.h, cloud.v, cloud.i, cloud.j))
    io.write_table(out / "binned.csv", ["h_center", "gamma", "count"],
                   zip(binned.h_center, binned.gamma, binned.count))
    variogram_figure(cloud.h, cloud.v, "Semivariance cloud", binned=binned).save(
        out / "variogram.svg")
    return EXIT_OK


def _read_binned_or_samples(path, opts):
    header, _, _ = io.read_table(path)
    if header == ["h_center", "gamma", "count"]:
        _, data = io.read_numeric_table(path)
        if data.shape[0] == 0:
            raise ValidationError(f"{path} contains no bins")
        # midpoint centres: last + first centre is the binned extent when bin 0 is occupied;
        # h_max only seeds the range starting values
        h_max = opts.h_max if opts.h_max is not None else float(data[:, 0].max() + data[:, 0].min())
        binned = BinnedVariogram(data[:, 0], data[:, 1], data[:, 2].astype(int), h_max)
        return None, binned
    samples, _ = io.read_sample_csv(path)
    return _cloud_and_bins(samples, opts.n_bins, opts.h_max)


def cmd_fit(args, opts):
    out = _out_dir(args)
    cloud, binned = _read_binned_or_samples(args.input, opts)
    fit_nugget = _bool(opts.nugget)
    code = EXIT_OK
    try:
        fit = fit_variogram(binned, opts.family, fit_nugget=fit_nugget)
    except FitError as err:
        fit, code = err.best, EXIT_FIT
    _write_model(out / "model.txt", fit)
    h = binned.h_center if cloud is None else cloud.h
    v = binned.gamma if cloud is None else cloud.v
    variogram_figure(h, v, f"{opts.family} variogram fit", binned=binned,
                     curve=fit.model).save(out / "fit.svg")
    return code


def _write_model(path, fit: VariogramFit):
    m = fit.model
    items = {"family": m.family, "sill": m.sill, "range": m.range, "nugget": m.nugget,
             "loss": fit.loss, "converged": fit.converged}
    if fit.warning:
        items["warning"] = fit.warning
    io.write_keyvalue(path, items)


def _parse_grid(spec):
    """``x0:x1:nx,y0:y1:ny`` -> axis vectors."""
    try:
        axes = []
        for part in spec.split(","):
            lo, hi, k = part.split(":")
            axes.append(np.linspace(float(lo), float(hi), int(k)))
        xs, ys = axes
    except ValueError:
        raise ParseError(f"--predict-grid expects x0:x1:nx,y0:y1:ny, got {spec!r}") from None
    if len(xs) < 1 or len(ys) < 1:
        raise ValidationError("prediction grid is empty")
    return xs, ys


def cmd_krige(args, opts):
    out = _out_dir(args)
    samples, _ = io.read_sample_csv(args.input)
    if (opts.test is None) == (opts.predict_grid is None):
        raise ValidationError("give exactly one of --test and --predict-grid")
    params = KernelParams(opts.signal_var, opts.length_scale, opts.noise)
    if opts.optimize:
        params = optimize_hyperparams(samples.geo, samples.values, params, opts.mean).params
    names = ["lon", "lat", "alt"][: samples.n_geo]
    if opts.test is not None:
        pts, tnames = io.read_points_csv(opts.test)
        if len(tnames) != samples.n_geo:
            raise ValidationError("test points and training samples differ in dimension")
        pred = gp_predict(samples.geo, samples.values, pts, params, opts.mean)
        io.write_table(out / "predictions.csv", names + ["mean", "sd"],
                       np.column_stack([pts, pred.mean, pred.sd]).tolist())
        xlim, ylim = _limits(pts[:, 0]), _limits(pts[:, 1])
        fig = Figure(xlim, ylim, "Kriging prediction", "lon", "lat")
        span = np.ptp(pred.mean) or 1.0
        fig.scatter(pts[:, 0], pts[:, 1], r=6.0,
                    fill_values=[_colour((m - pred.mean.min()) / span) for m in pred.mean])
    else:
        if samples.n_geo != 2:
            raise ValidationError("grid prediction needs 2-D coordinates")
        xs, ys = _parse_grid(opts.predict_grid)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        pred = gp_predict(samples.geo, samples.values, pts, params, opts.mean)
        pre = [f"grid x0={io.fmt(xs[0])} x1={io.fmt(xs[-1])} nx={len(xs)} "
               f"y0={io.fmt(ys[0])} y1={io.fmt(ys[-1])} ny={len(ys)} order=row-major"]
        io.write_table(out / "predictions.csv", names + ["mean", "sd"],
                       np.column_stack([pts, pred.mean, pred.sd]).tolist(), preamble=pre)
        fig = Figure(_limits(xs, 0.02), _limits(ys, 0.02), "Kriging prediction", "lon", "lat")
        fig.heatmap(xs, ys, pred.mean.reshape(len(ys), len(xs)))
        fig.scatter(samples.geo[:, 0], samples.geo[:, 1], "#000", 3.0)
    fig.save(out / "krige.svg")
    return EXIT_OK


def cmd_equiv(args, opts):
    if opts.trials < 1 or opts.n < 1 or opts.m < 1:
        raise ValidationError("trials, n and m must be at least 1")
    reports = equivalence_sweep(opts.trials, opts.n, opts.m, opts.seed)
    mean_diff = max(r.mean_diff for r in reports)
    cov_diff = max(r.cov_diff for r in reports)
    worst = max(mean_diff, cov_diff)
    text = (
        f"trials={opts.trials}\nn_max={opts.n}\nm_max={opts.m}\nseed={opts.seed}\n"
        f"max_mean_discrepancy={io.fmt(mean_diff)}\nmax_cov_discrepancy={io.fmt(cov_diff)}\n"
        f"threshold={io.fmt(EQUIV_THRESHOLD)}\npass={io.fmt(worst <= EQUIV_THRESHOLD)}\n"
    )
    sys.stdout.write(text)
    if getattr(args, "out", None):
        (_out_dir(args) / "equiv.txt").write_text(text, encoding="utf-8", newline="\n")
    return EXIT_OK if worst <= EQUIV_THRESHOLD else EXIT_EQUIV


def run_expand(samples, out, opts):
    config = ExpansionConfig(p=opts.p, lam=opts.lam, max_iters=opts.max_iters,
                             optimizer=opts.optimizer, seed=opts.seed)
    exp = learn_expansion(samples, config)
    rep = stationarity_report(samples, exp)
    io.write_table(out / "zprime.csv", ["i"] + [f"zprime_{k + 1}" for k in range(opts.p)],
                   [[i, *row] for i, row in enumerate(exp.z_prime.tolist())])
    m = exp.phi_hat
    io.write_table(out / "phi.csv", ["family", "sill", "range", "nugget"],
                   [[m.family, m.sill, m.range, m.nugget]])
    io.write_table(out / "trace.csv", ["iteration", "objective"], exp.trace)
    io.write_keyvalue(out / "report.txt", {
        "improvement_ratio": rep.improvement_ratio,
        "residual_geographic": rep.residual_geographic,
        "residual_expanded": rep.residual_expanded,
        "min_eigenvalue": rep.min_eigenvalue,
        "psd": rep.psd,
        "converged": exp.converged,
        "lambda": exp.lam,
        "p": opts.p,
        "objective": exp.objective,
    })
    _, bexp = rep.binned(opts.n_bins)
    variogram_figure(rep.cloud_expanded.h, rep.cloud_expanded.v,
                     "Semivariance vs expanded-space distance", binned=bexp,
                     curve=rep.fit_expanded,
                     xlabel="distance in [coords | latent] (standardised)").save(
        out / "variogram_expanded.svg")
    _latent_map(samples, exp, opts.grid_n).save(out / "latent_map.svg")
    return exp, rep


def _latent_map(samples, exp, grid_n):
    geo = samples.coords
    xs = np.linspace(geo[:, 0].min(), geo[:, 0].max(), grid_n)
    ys = np.linspace(geo[:, 1].min(), geo[:, 1].max(), grid_n)
    gx, gy = np.meshgrid(xs, ys)
    cols = [gx.ravel(), gy.ravel()]
    # extra geographic columns (alt) are held at their sample mean
    for k in range(2, geo.shape[1]):
        cols.append(np.full(gx.size, geo[:, k].mean()))
    surf = interpolate_latent(samples, exp, np.column_stack(cols))[:, 0].reshape(grid_n, grid_n)
    fig = Figure(_limits(xs, 0.02), _limits(ys, 0.02), "Learned latent dimension", "lon", "lat")
    fig.heatmap(xs, ys, surf)
    fig.contours(xs, ys, surf, np.linspace(surf.min(), surf.max(), 9)[1:-1])
    z = exp.z_prime[:, 0]
    span = np.ptp(surf) or 1.0
    fig.scatter(geo[:, 0], geo[:, 1], r=5.0,
                fill_values=[_colour((v - surf.min()) / span) for v in z])
    return fig


def cmd_expand(args, opts):
    out = _out_dir(args)
    samples, _ = io.read_sample_csv(args.input)
    exp, _ = run_expand(samples, out, opts)
    return EXIT_OK


def run_synth(out, opts):
    generator = {"stationary": "stationary-gp"}.get(opts.generator, opts.generator)
    kernel = KernelParams(opts.signal_var, opts.length_scale, opts.noise)
    base = FieldSpec(nx=opts.nx, ny=opts.ny, spacing=opts.spacing, generator=generator,
                     kernel=kernel, geometry=opts.geometry, seed=opts.seed)
    if generator == "two-regime":
        spec = FieldSpec(**{**base.__dict__, "gap": opts.gap * base.within_sd})
        field, labels = sample_two_regime_field(spec)
    else:
        field, labels = sample_stationary_field(base), None
    io.write_sample_csv(out / "field.csv", field)
    if labels is not None:
        io.write_table(out / "field_labels.csv", ["i", "label"], enumerate(labels.tolist()))
    sample = None
    if opts.n_sample:
        sample, idx = random_subsample(field, opts.n_sample, opts.seed)
        io.write_sample_csv(out / "sample.csv", sample)
        if labels is not None:
            io.write_table(out / "sample_labels.csv", ["i", "label"],
                           enumerate(labels[idx].tolist()))
    return field, sample


def cmd_synth(args, opts):
    out = _out_dir(args)
    run_synth(out, opts)
    return EXIT_OK


def cmd_repro_paper(args, opts):
    """synth -> variogram -> fit -> expand on the two-regime 20-point fixture."""
    out = _out_dir(args)
    synth = argparse.Namespace(**{**DEFAULTS["synth"], "generator": "two-regime",
                                  "n_sample": opts.n_sample, "seed": opts.seed})
    (out / "synth").mkdir(exist_ok=True)
    run_synth(out / "synth", synth)
    sample_path = out / "synth" / "sample.csv"
    code = EXIT_OK
    for name, fn in (("variogram", cmd_variogram), ("fit", cmd_fit)):
        sub = argparse.Namespace(input=sample_path, out=out / name)
        code = max(code, fn(sub, argparse.Namespace(**DEFAULTS[name])))
    samples, _ = io.read_sample_csv(sample_path)
    (out / "expand").mkdir(exist_ok=True)
    run_expand(samples, out / "expand",
               argparse.Namespace(**{**DEFAULTS["expand"], "seed": opts.seed}))
    return code


COMMANDS = {
    "variogram": cmd_variogram,
    "fit": cmd_fit,
    "krige": cmd_krige,
    "equiv": cmd_equiv,
    "expand": cmd_expand,
    "synth": cmd_synth,
    "repro-paper": cmd_repro_paper,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="geoexpand", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_, needs_input=True):
        p = sub.add_parser(name, help=help_)
        if needs_input:
            p.add_argument("input", help="sample CSV (lon,lat[,alt],x_*...,z)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="key=value RunConfig file")
        return p

    p = command("variogram", "semivariance cloud, binned variogram and scatter plot")
    p.add_argument("--n-bins", type=int)
    p.add_argument("--h-max", type=float)

    p = command("fit", "fit a variogram model (input: sample CSV or binned.csv)")
    p.add_argument("--family", choices=["gaussian", "exponential"])
    p.add_argument("--nugget", choices=["on", "off"])
    p.add_argument("--n-bins", type=int)
    p.add_argument("--h-max", type=float)

    p = command("krige", "GP / kriging prediction at test points or on a grid")
    p.add_argument("--test", help="CSV of prediction points (lon,lat[,alt])")
    p.add_argument("--predict-grid", help="x0:x1:nx,y0:y1:ny")
    p.add_argument("--signal-var", type=float)
    p.add_argument("--length-scale", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--mean", choices=["zero", "constant"])
    p.add_argument("--optimize", action="store_true", default=None)

    p = command("equiv", "weight-space vs function-space discrepancy sweep", needs_input=False)
    p.add_argument("--n", type=int, help="max training points per instance")
    p.add_argument("--m", type=int, help="max basis dimension")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = command("expand", "learn latent dimensions that make the variogram stationary")
    p.add_argument("--p", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--optimizer", choices=["gradient", "lbfgs", "simplex"])
    p.add_argument("--seed", type=int)
    p.add_argument("--n-bins", type=int)
    p.add_argument("--grid-n", type=int)

    p = command("synth", "synthetic stationary or two-regime field", needs_input=False)
    p.add_argument("--generator", choices=["stationary", "stationary-gp", "two-regime"])
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--spacing", type=float)
    p.add_argument("--signal-var", type=float)
    p.add_argument("--length-scale", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--gap", type=float, help="level gap in within-regime standard deviations")
    p.add_argument("--geometry", choices=["half-plane", "disc"])
    p.add_argument("--n-sample", type=int)
    p.add_argument("--seed", type=int)

    p = command("repro-paper", "synth -> variogram -> fit -> expand on the fixture",
                needs_input=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-sample", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        return COMMANDS[args.command](args, opts)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, EmptyResultError, UndefinedStatisticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except FitError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FIT
    except ConditioningError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONDITIONING


if __name__ == "__main__":
    sys.exit(main())
