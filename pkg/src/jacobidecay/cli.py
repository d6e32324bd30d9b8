"""Experiment runner.

Reads a JSON config {"experiment": ..., "model": ..., "parameters": ...},
dispatches to the library, and writes deterministic CSV tables plus a
JSON run manifest recording every certified constant and tolerance.
Floats are rendered with shortest round-trip notation, '.' decimal
separator, comma delimiter and LF endings, so identical configs produce
byte-identical data files (the manifest's "generated" timestamp is the
one field outside the determinism contract).

Exit codes: 0 success, 1 invalid config, 2 numerical failure,
3 envelope verification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import envelopes as env
from . import barriers as bar
from . import mobility as mob
from . import solutions as sol
from .errors import ConfigError, MissingColumn, NumericalFailure
from .models import (
    BarrierComposite,
    flip_slice,
    spec_from_json,
    spec_to_json,
    truncate,
)
from .tridiag import SpectrumQuery, eigs_in_window, resolvent_column

EXPERIMENTS = ("resolvent", "bounds-check", "example1", "example2", "barriers", "mobility", "eigs")

ENVELOPE_SLACK = env.ENVELOPE_SLACK


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_plot_script(csv_path, columns, style: str):
    """Write a gnuplot-dialect script plotting the named CSV columns.

    The first column provides the abscissa.  Deterministic output for
    identical inputs; raises MissingColumn for unknown names.
    """
    if style not in ("semilogy", "linear"):
        raise ConfigError(f"unknown plot style {style!r}")
    csv_path = Path(csv_path)
    with open(csv_path) as fh:
        header = fh.readline().strip().split(",")
    for name in columns:
        if name not in header:
            raise MissingColumn(name)
    if len(columns) < 2:
        raise ConfigError("plot needs one abscissa and at least one ordinate column")
    xcol = header.index(columns[0]) + 1
    lines = [
        f"# generated plot script for {csv_path.name}",
        "set datafile separator ','",
        "set key outside",
        f"set xlabel '{columns[0]}'",
    ]
    if style == "semilogy":
        lines.append("set logscale y")
    series = []
    for name in columns[1:]:
        ycol = header.index(name) + 1
        series.append(f"'{csv_path.name}' using {xcol}:{ycol} with lines title '{name}'")
    lines.append("plot " + ", \\\n     ".join(series))
    out = csv_path.with_suffix(".gp")
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return out


def _require(params: dict, key: str, kind=None):
    if key not in params:
        raise ConfigError(f"missing parameter {key!r}")
    value = params[key]
    if kind is not None:
        try:
            if kind is int and isinstance(value, float) and value != int(value):
                raise ValueError
            value = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {key!r} must be {kind.__name__}")
    return value


def _model(config: dict):
    if "model" not in config:
        raise ConfigError("missing 'model'")
    try:
        return spec_from_json(config["model"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model: {exc}")


def validate_config(config: dict) -> None:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    exp = config.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    params = config.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("'parameters' must be an object")
    if exp != "mobility":
        _model(config)
    if exp == "resolvent":
        z = _require(params, "z")
        if not (isinstance(z, list) and len(z) == 2):
            raise ConfigError("z must be [re, im]")
        if _require(params, "N", int) < 2:
            raise ConfigError("N must be >= 2")
    elif exp == "bounds-check":
        theorem = _require(params, "theorem")
        if theorem not in ("1a", "1b", "2", "3"):
            raise ConfigError("theorem must be one of 1a, 1b, 2, 3")
        _require(params, "lambdas")
        _require(params, "N", int)
        if theorem in ("1a", "2"):
            window = _require(params, "window")
            if not (isinstance(window, list) and len(window) == 2 and window[0] < window[1]):
                raise ConfigError("window must be [r, s] with r < s")
        else:
            _require(params, "d", float)
        if theorem in ("2", "3"):
            eps = _require(params, "eps", float)
            hi = 0.5 if theorem == "2" else 1.0
            if not 0.0 < eps < hi:
                raise ConfigError(f"eps must be in (0, {hi})")
    elif exp == "example1":
        for key in ("lambda", "N", "fit_window"):
            _require(params, key)
    elif exp == "example2":
        for key in ("lambda", "N", "fit_window"):
            _require(params, key)
    elif exp == "eigs":
        _require(params, "N", int)
        window = _require(params, "window")
        if not (isinstance(window, list) and window[0] < window[1]):
            raise ConfigError("window must be [a, b] with a < b")
    elif exp == "barriers":
        for key in ("eband", "gap", "E", "eta_grid", "N", "K"):
            _require(params, key)
    elif exp == "mobility":
        task = _require(params, "task")
        if task not in ("weyl", "discriminant", "layout"):
            raise ConfigError("mobility task must be weyl, discriminant or layout")
        _model(config)


def _manifest(out_dir: Path, config: dict, constants: dict, tolerances: dict, outputs: list):
    manifest = {
        "experiment": config["experiment"],
        "model": config.get("model"),
        "parameters": config.get("parameters", {}),
        "constants": constants,
        "tolerances": tolerances,
        "outputs": [str(Path(p).name) for p in outputs],
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = out_dir / "manifest.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _run_resolvent(config, out_dir: Path) -> int:
    spec = _model(config)
    params = config["parameters"]
    z = complex(params["z"][0], params["z"][1])
    N = int(params["N"])
    column = resolvent_column(truncate(spec, 1, N), z)
    rows = [
        (n, abs(column.values[n - 1]), column.values[n - 1].real, column.values[n - 1].imag)
        for n in range(1, N + 1)
    ]
    csv = out_dir / "resolvent.csv"
    write_csv(csv, ("n", "abs_u", "re_u", "im_u"), rows)
    outputs = [csv]
    if params.get("plot", False):
        outputs.append(emit_plot_script(csv, ["n", "abs_u"], "semilogy"))
    _manifest(out_dir, config, {"residual": column.residual}, {"residual_factor": 1e-10}, outputs)
    return 0


def _cumulative_inverse_weights(spec, N, power=1.0, start=1):
    idx = np.arange(1, N, dtype=np.int64)
    inv = spec.weights(idx) ** (-power)
    inv[idx < start] = 0.0
    rho = np.zeros(N + 1)
    rho[2:] = np.cumsum(inv)
    rho[1] = 0.0
    return rho  # rho[n] = sum_{k=max(start,1)}^{n-1}


def _run_bounds_check(config, out_dir: Path) -> int:
    spec = _model(config)
    params = config["parameters"]
    theorem = params["theorem"]
    lambdas = [float(x) for x in params["lambdas"]]
    N = int(params["N"])
    skirt = int(params.get("skirt", N // 10))
    scan = int(params.get("scanN", 8192))
    flip = bool(params.get("flip", False))
    slice_ = truncate(spec, 1, N)
    if flip:
        slice_ = flip_slice(slice_)

    constants: dict = {}
    rows = []
    violations = 0
    if theorem in ("1a", "2"):
        window = env.FiniteGap(float(params["window"][0]), float(params["window"][1]))
        rho = _cumulative_inverse_weights(spec, N)
        if theorem == "1a":
            consts = env.certify_for_gap(spec, window, scan)
            constants = consts.as_dict()
            constants["eta"] = env.eta_rate(consts, window.s - window.r, 4.0)
        else:
            eps = float(params["eps"])
            consts = env.certify_for_gap(spec, window, scan)
            pick = env.pick_N_thm2(spec, window, eps, consts)
            constants = consts.as_dict()
            constants.update({"C3": pick.C3, "N_eps": pick.N, "r_at_N": pick.r_at_N})
            rho_from_N = _cumulative_inverse_weights(spec, N, start=pick.N)
        for lam in lambdas:
            column = resolvent_column(slice_, complex(lam))
            envelope = np.empty(N)
            for n in range(1, N + 1):
                if theorem == "1a":
                    envelope[n - 1] = env.envelope_thm1(window, consts, lam, rho[n])
                else:
                    if n <= pick.N:
                        envelope[n - 1] = math.inf
                    else:
                        envelope[n - 1] = env.envelope_thm2(window, lam, eps, rho_from_N[n])
            report = env.verify_envelope(column, envelope, skirt)
            violations += report.violations.size
            bad = set(report.violations.tolist())
            for n in range(1, report.n_checked + 1):
                rows.append((lam, n, abs(column.values[n - 1]), envelope[n - 1], n not in bad))
    elif theorem in ("1b", "3"):
        d = float(params["d"])
        if theorem == "1b":
            consts = env.certify_for_halfline(spec, d, min(lambdas), scan)
            constants = consts.as_dict()
            rho = _cumulative_inverse_weights(spec, N)
        else:
            eps = float(params["eps"])
        for lam in lambdas:
            column = resolvent_column(slice_, complex(lam))
            envelope = np.empty(N)
            if theorem == "1b":
                win = env.BelowBottom(d)
                for n in range(1, N + 1):
                    envelope[n - 1] = env.envelope_thm1(win, consts, lam, rho[n])
            else:
                n_pick = env.pick_N_thm3(spec, d, lam, eps)
                constants[f"N(eps,{lam})"] = n_pick
                sums = _cumulative_inverse_weights(spec, N, power=0.5, start=n_pick)
                for n in range(1, N + 1):
                    envelope[n - 1] = math.inf if n <= n_pick else env.envelope_thm3(d, lam, eps, sums[n])
            report = env.verify_envelope(column, envelope, skirt)
            violations += report.violations.size
            bad = set(report.violations.tolist())
            for n in range(1, report.n_checked + 1):
                rows.append((lam, n, abs(column.values[n - 1]), envelope[n - 1], n not in bad))
    else:
        raise ConfigError(f"unknown theorem {theorem!r}")

    csv = out_dir / "bounds_check.csv"
    write_csv(csv, ("lambda", "n", "abs_resolvent", "envelope", "pass"), rows)
    outputs = [csv]
    if params.get("plot", False):
        outputs.append(emit_plot_script(csv, ["n", "abs_resolvent", "envelope"], "semilogy"))
    _manifest(
        out_dir,
        config,
        constants,
        {"slack": ENVELOPE_SLACK, "skirt": skirt},
        outputs,
    )
    return 3 if violations else 0


def _run_example1(config, out_dir: Path) -> int:
    spec = _model(config)
    if not hasattr(spec, "c1"):
        raise ConfigError("example1 experiment requires a two-periodic shifted model")
    params = config["parameters"]
    lam = float(params["lambda"])
    N = int(params["N"])
    lo, hi = (int(x) for x in params["fit_window"])
    column = resolvent_column(truncate(spec, 1, N), complex(lam))
    even = np.abs(column.values[1::2])  # |u(2m)| for m = 1..
    fit = sol.fit_asymptotics(even, (lo, hi), ("1", "log_n"))
    rows = [(2 * (m + 1), even[m]) for m in range(even.shape[0])]
    csv = out_dir / "example1.csv"
    write_csv(csv, ("n", "abs_u_even"), rows)
    rho = abs(spec.c1 - spec.c2)
    expected = -(1.0 + math.sqrt(rho**2 - lam**2)) / 2.0
    _manifest(
        out_dir,
        config,
        {"slope_log_n": fit.coefficient("log_n"), "expected_slope": expected, "rms": fit.residual},
        {"slope_rel_tol": 0.03},
        [csv],
    )
    return 0


def _run_example2(config, out_dir: Path) -> int:
    spec = _model(config)
    params = config["parameters"]
    lam = float(params["lambda"])
    N = int(params["N"])
    lo, hi = (int(x) for x in params["fit_window"])
    # bounded from above: flip to the bounded-below picture, same |entries|
    column = resolvent_column(flip_slice(truncate(spec, 1, N)), complex(-lam))
    mag = np.abs(column.values)
    fit = sol.fit_asymptotics(mag, (lo, hi), ("1", "log_n", "sqrt_n"))
    csv = out_dir / "example2.csv"
    write_csv(csv, ("n", "abs_u"), [(n, mag[n - 1]) for n in range(1, N + 1)])
    _manifest(
        out_dir,
        config,
        {
            "coef_sqrt_n": fit.coefficient("sqrt_n"),
            "coef_log_n": fit.coefficient("log_n"),
            "expected_sqrt_n": -2.0 * math.sqrt(lam + 1.0),
            "expected_log_n": -0.25,
            "rms": fit.residual,
        },
        {"sqrt_rel_tol": 0.02, "log_rel_tol": 0.25},
        [csv],
    )
    return 0


def _run_eigs(config, out_dir: Path) -> int:
    spec = _model(config)
    params = config["parameters"]
    N = int(params["N"])
    a, b = (float(x) for x in params["window"])
    tol = float(params.get("tol", 1e-12))
    eigs = eigs_in_window(SpectrumQuery(truncate(spec, 1, N), tol), a, b)
    csv = out_dir / "eigs.csv"
    write_csv(csv, ("index", "eigenvalue"), list(enumerate(eigs, start=1)))
    _manifest(out_dir, config, {}, {"bisect_tol": tol}, [csv])
    return 0


def _run_barriers(config, out_dir: Path) -> int:
    spec = _model(config)
    if not isinstance(spec, BarrierComposite):
        raise ConfigError("barriers experiment requires a BarrierComposite model")
    params = config["parameters"]
    # the model is the gap reference J0; the operator under study J may be
    # supplied separately (it must coincide with J0 on the matching regions)
    try:
        spec_j = spec_from_json(params["base_model"]) if "base_model" in params else spec
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid base_model: {exc}")
    layout = spec.layout
    eband = tuple(float(x) for x in params["eband"])
    gap = env.FiniteGap(float(params["gap"][0]), float(params["gap"][1]))
    E = float(params["E"])
    etas = np.asarray([float(x) for x in params["eta_grid"]])
    N = int(params["N"])
    K = int(params["K"])
    gamma = float(params.get("gamma", 0.1))
    k_hi = int(params.get("k_max", len(layout) - 1))
    scan = int(params.get("scanN", 16384))

    consts = env.certify_for_gap(spec, gap, scan)
    caps = bar.barrier_caps(spec_j, layout)
    report = bar.criterion_partial_sum(layout, caps, gamma, k_hi)
    d0 = min(eband[0] - gap.r, gap.s - eband[1])
    gamma1 = float(params.get("gamma1", 0.25 * env.eta_rate(consts, gap.s - gap.r, 8.0) * math.sqrt(
        min(gap.weight_fn(eband[0]), gap.weight_fn(eband[1]))
    )))
    rows = []
    for k in range(1, k_hi + 1):
        ak = bar.ak_bound(gap, consts, layout, k, spec, eband, cap_lambda=float(caps[k - 1]))
        al, _budget = bar.alpha_k(caps, layout, gamma1, k)
        try:
            bk = bar.bk_of_E(
                caps,
                ak.value,
                k,
                E,
                bar.block_slice(spec_j, layout, k - 1),
                bar.block_slice(spec_j, layout, k),
            )
        except NumericalFailure:
            bk = math.inf
        rows.append((k, caps[k - 1], report.terms[k - 1], ak.value, al, bk))
    tail = bar.l2_tail_check(spec_j, E, etas, N, K, layout)
    csv = out_dir / "criterion.csv"
    write_csv(csv, ("k", "Lambda_k", "term_k", "a_k", "alpha_k", "b_k"), rows)
    _manifest(
        out_dir,
        config,
        {
            **consts.as_dict(),
            "d0": d0,
            "eta0": d0 / 8.0,
            "gamma0": bar.ak_bound(gap, consts, layout, 1, spec, eband).gamma0,
            "gamma1": gamma1,
            "criterion_verdict": report.verdict,
            "criterion_partial_sum": report.partial_sum,
            "head_dominant": tail.head_dominant,
            "max_tail_ratio": float(np.max(tail.ratios)),
        },
        {"block_min_dist": 1e-12},
        [csv],
    )
    return 0


def _run_mobility(config, out_dir: Path) -> int:
    spec = _model(config)
    params = config["parameters"]
    task = params["task"]
    outputs = []
    constants: dict = {}
    if task == "weyl":
        lambdas = [float(x) for x in params.get("lambdas", [0.0])]
        i_lo, i_hi = (int(x) for x in params.get("i_range", [2, 15]))
        rows = []
        for lam in lambdas:
            for i in range(i_lo, i_hi + 1):
                ws = mob.default_weyl_spec(spec, i, x0=float(params.get("x0", 0.0)))
                rows.append((lam, i, ws.n_i, ws.delta_i, mob.weyl_quotient(spec, lam, ws)))
        csv = out_dir / "weyl.csv"
        write_csv(csv, ("lambda", "i", "n_i", "delta_i", "quotient"), rows)
        outputs.append(csv)
    elif task == "discriminant":
        lambdas = [float(x) for x in params.get("lambdas", [1.5])]
        n_lo, n_hi, count = (int(x) for x in params.get("n_grid", [100, 100000, 200]))
        ns = np.unique(np.geomspace(n_lo, n_hi, count).astype(np.int64))
        rows = []
        for lam in lambdas:
            disc = sol.discriminant_V(spec, lam, ns)
            rows.extend((lam, int(n), d) for n, d in zip(ns, disc))
        csv = out_dir / "discriminant.csv"
        write_csv(csv, ("lambda", "n", "discr"), rows)
        outputs.append(csv)
    elif task == "layout":
        window = tuple(float(x) for x in params.get("window", [-0.5, 0.5]))
        x0 = float(params.get("x0", spec.T / 2.0))
        eps_phase = float(params["eps_phase"])
        k_max = int(params.get("k_max", 20))
        layout, composite = mob.derive_barrier_layout(spec, window, x0, eps_phase, k_max)
        caps = bar.barrier_caps(spec, layout)
        rows = [
            (k, layout.centers[k - 1], layout.half_lengths[k - 1], caps[k - 1])
            for k in range(1, len(layout) + 1)
        ]
        csv = out_dir / "layout.csv"
        write_csv(csv, ("k", "x_k", "l_k", "Lambda_k"), rows)
        outputs.append(csv)
        constants["composite_model"] = spec_to_json(composite)
    _manifest(out_dir, config, constants, {}, outputs)
    return 0


_HANDLERS = {
    "resolvent": _run_resolvent,
    "bounds-check": _run_bounds_check,
    "example1": _run_example1,
    "example2": _run_example2,
    "eigs": _run_eigs,
    "barriers": _run_barriers,
    "mobility": _run_mobility,
}


def run_config(config: dict, out_dir) -> int:
    validate_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[config["experiment"]](config, out_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jacobidecay", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out-dir", default=".")
    val_p = sub.add_parser("validate", help="validate an experiment config")
    val_p.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "validate":
            validate_config(config)
            return 0
        return run_config(config, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
