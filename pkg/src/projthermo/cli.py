"""Command-line front end.

Settings resolve as: command-line flags, then ``PROJTHERMO_*`` environment
variables, then a ``key = value`` config file given by ``--config``, then
built-in defaults.  Exit codes: 0 success, 1 check failed, 2 usage or
validation error, 3 out-of-regime refusal, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .asymptotics import chi_strong_coupling, m_low_T, weak_coupling_applicable
from .oracle import (
    OracleConfig,
    OutOfRegimeError,
    estimate_density_matrix,
    estimate_U_M,
    estimate_Z,
    trace_energy,
)
from .plot import render_svg
from .residues import CancellationError, PrecisionPolicy
from .spectra import MODELS, ModelParams, build
from .thermo import ModelSpec, sweep, temperature_grid, thermo_point

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_REGIME, EXIT_NUMERIC = 0, 1, 2, 3, 4
ENV_PREFIX = "PROJTHERMO_"
MIN_MU_B = Fraction(1, 10**9)
CSV_COLUMNS = ("t", "Z", "U", "M", "M_per_particle", "chi", "bits_used")

PRESETS = {
    "fig1": dict(model="noninteracting", ns=(1, 2, 3, 4, 5), j="0", plot="M_per_particle"),
    "fig2": dict(model="ising", ns=(1, 2, 3, 4, 5), j="0.2", plot="chi"),
}


YLABELS = {
    "M_per_particle": "M / (N mu)",
    "chi": "chi / (mu/B)",
    "U": "U / (mu B)",
    "M": "M / mu",
    "Z": "Z",
}


def _fraction(text) -> Fraction:
    return Fraction(str(text))


# key -> (parser, default)
SETTINGS = {
    "model": (str, "noninteracting"),
    "n": (int, 1),
    "j": (_fraction, Fraction(0)),
    "mu_b": (_fraction, Fraction(1)),
    "t": (float, 1.0),
    "tmin": (float, 0.01),
    "tmax": (float, 3.0),
    "points": (int, 200),
    "grid": (str, "log"),
    "bits": (int, 256),
    "max_bits": (int, 4096),
    "samples": (int, 10**6),
    "seed": (int, 0),
    "out": (str, None),
    "format": (str, None),
    "svg": (str, None),
    "preset": (str, None),
    "plot": (str, None),
    "workers": (int, 1),
    "check": (str, "all"),
    "strong_j": (_fraction, Fraction(50)),
}


class UsageError(Exception):
    pass


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def resolve(args: argparse.Namespace, keys, environ=None) -> dict:
    """Merge flags, environment, config file and defaults for ``keys``."""
    environ = os.environ if environ is None else environ
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key in keys:
        parse, default = SETTINGS[key]
        flag = getattr(args, key, None)
        env = environ.get(ENV_PREFIX + key.upper())
        for source in (flag, env, file_values.get(key)):
            if source is not None:
                try:
                    out[key] = parse(source)
                except (ValueError, ZeroDivisionError) as exc:
                    raise UsageError(f"invalid value for {key}: {source!r}") from exc
                break
        else:
            out[key] = default
    return out


def _policy(cfg) -> PrecisionPolicy:
    try:
        return PrecisionPolicy(base_bits=cfg["bits"], max_bits=max(cfg["bits"], cfg["max_bits"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _validate_model(cfg):
    if cfg["model"] not in MODELS:
        raise UsageError(f"--model must be one of {', '.join(MODELS)}")
    if cfg["n"] < (0 if cfg["model"] == "single" else 1):
        raise UsageError("--n is out of range for this model")
    if cfg["j"] < 0:
        raise UsageError("--j must be non-negative")


def _clamp_field(cfg, notes):
    if cfg["mu_b"] < MIN_MU_B:
        notes.append(f"mu_b {cfg['mu_b']} clamped to {MIN_MU_B}")
        cfg["mu_b"] = MIN_MU_B


def _meta(cfg, extra=None) -> dict:
    meta = {"tool": "projthermo", "version": __version__, "config": _jsonable(cfg)}
    if extra:
        meta.update(extra)
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_spectrum(args) -> int:
    cfg = resolve(args, ["model", "n", "j", "mu_b", "out"])
    _validate_model(cfg)
    notes = []
    _clamp_field(cfg, notes)
    spec = build(cfg["model"], cfg["n"])
    data = spec.to_dict()
    for lv, d in zip(spec.levels, data["levels"]):
        d["energy"] = str(lv.form.evaluate(cfg["mu_b"], cfg["j"] * cfg["mu_b"]))
    data["meta"] = _meta(cfg, {"notes": notes} if notes else None)
    for note in notes:
        print(f"projthermo: {note}", file=sys.stderr)
    _emit(_dumps(data), cfg["out"])
    return EXIT_OK


def _sweep_rows(points, n_label=None):
    rows = []
    for p in points:
        cells = [repr(p.t)]
        if p.ok:
            cells += [str(p.Z), str(p.U), str(p.M), str(p.M_per_particle), str(p.chi)]
        else:
            cells += ["nan"] * 5
        cells.append(str(p.bits_used))
        if n_label is not None:
            cells.insert(0, str(n_label))
        rows.append(",".join(cells))
    return rows


def _csv(meta, header, rows, errors) -> str:
    lines = [f"# {json.dumps(meta, separators=(',', ':'))}"]
    lines += [f"# error: {e}" for e in errors]
    lines.append(",".join(header))
    lines += rows
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    cfg = resolve(
        args,
        ["preset", "model", "n", "j", "tmin", "tmax", "points", "grid", "bits", "max_bits",
         "out", "format", "svg", "plot", "workers"],
    )
    fmt = cfg["format"] or "csv"
    if fmt not in ("csv", "json", "svg"):
        raise UsageError("--format must be csv, json or svg")
    if cfg["points"] < 1:
        raise UsageError("the temperature grid is empty (--points must be >= 1)")
    if cfg["grid"] not in ("log", "linear"):
        raise UsageError("--grid must be log or linear")
    try:
        grid = temperature_grid(cfg["tmin"], cfg["tmax"], cfg["points"], cfg["grid"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    policy = _policy(cfg)

    if cfg["preset"]:
        if cfg["preset"] not in PRESETS:
            raise UsageError(f"unknown preset {cfg['preset']!r}; choose fig1 or fig2")
        preset = PRESETS[cfg["preset"]]
        cfg.update(model=preset["model"], j=Fraction(preset["j"]))
        ns = preset["ns"]
        plot = cfg["plot"] or preset["plot"]
    else:
        _validate_model(cfg)
        ns = (cfg["n"],)
        plot = cfg["plot"] or "M_per_particle"
    if plot not in CSV_COLUMNS[1:-1]:
        raise UsageError(f"--plot must be one of {', '.join(CSV_COLUMNS[1:-1])}")

    results = {}
    for n in ns:
        results[n] = sweep(ModelSpec(cfg["model"], n), grid, cfg["j"], policy, workers=cfg["workers"])
    errors = [
        f"N={n} t={p.t!r}: {p.error}" for n, pts in results.items() for p in pts if not p.ok
    ]
    bits_used = max(p.bits_used for pts in results.values() for p in pts)
    meta = _meta(cfg, {"bits_used": bits_used, "seed": None})

    multi = cfg["preset"] is not None
    header = (("N",) if multi else ()) + CSV_COLUMNS
    rows = []
    for n, pts in results.items():
        rows += _sweep_rows(pts, n if multi else None)

    svg = None
    if fmt == "svg" or cfg["svg"]:
        series = {
            f"N={n}": (list(grid), [float(getattr(p, plot)) if p.ok else math.nan for p in pts])
            for n, pts in results.items()
        }
        try:
            svg = render_svg(
                series,
                xlabel="k_B T / mu B",
                ylabel=YLABELS[plot],
                title=f"{cfg['model']}, J/muB = {cfg['j']}",
                log_x=cfg["grid"] == "log",
                metadata=json.dumps(meta),
            )
        except ValueError:
            print("projthermo: no finite points to plot", file=sys.stderr)
            return EXIT_NUMERIC

    if fmt == "csv":
        _emit(_csv(meta, header, rows, errors), cfg["out"])
    elif fmt == "json":
        payload = {
            "meta": meta,
            "columns": list(header),
            "rows": [r.split(",") for r in rows],
            "errors": errors,
        }
        _emit(_dumps(payload), cfg["out"])
    else:
        _emit(svg, cfg["out"])
    if cfg["svg"]:
        _emit(svg, cfg["svg"])
    return EXIT_NUMERIC if errors else EXIT_OK


def oracle_report(model, n, t, j, config: OracleConfig, policy: PrecisionPolicy, mu_b=1) -> dict:
    """Run the Monte Carlo oracle and compare with the exact engine."""
    spec = build(model, n)
    params = ModelParams.from_temperature(t, j, mu_b)
    z = estimate_Z(spec, params, config)
    u, m = estimate_U_M(spec, params, config)
    rho = estimate_density_matrix(spec, params, config)
    tr = trace_energy(rho, spec, params)
    exact = thermo_point(spec, t, j, policy)
    ex = {"Z": float(exact.Z), "U": float(exact.U), "M": float(exact.M)}
    est = {
        "Z": {"mean": z.mean, "std_error": z.std_error},
        "U": {"mean": u.mean, "std_error": u.std_error},
        "M": {"mean": m.mean, "std_error": m.std_error},
        "U_trace": {"mean": tr.mean, "std_error": tr.std_error},
    }
    sigma = {
        "Z": z.sigma_distance(ex["Z"]),
        "U": u.sigma_distance(ex["U"]),
        "M": m.sigma_distance(ex["M"]),
        "U_trace": tr.sigma_distance(ex["U"]),
    }
    return {
        "model": model,
        "params": {"N": n, "t": t, "j": str(Fraction(j)), "mu_b": str(Fraction(mu_b))},
        "n_samples": config.samples,
        "seed": config.seed,
        "estimates": est,
        "comparisons": {"exact": ex, "sigma_distance": sigma},
        "density_matrix_trace": rho.trace.real,
        "pass": all(s <= 3 for s in sigma.values()),
    }


def cmd_oracle_check(args) -> int:
    cfg = resolve(args, ["model", "n", "j", "t", "samples", "seed", "bits", "max_bits", "out"])
    _validate_model(cfg)
    if not cfg["t"] > 0:
        raise UsageError("--t must be positive")
    if cfg["samples"] < 2:
        raise UsageError("--samples must be at least 2")
    policy = _policy(cfg)
    config = OracleConfig(samples=cfg["samples"], seed=cfg["seed"])
    try:
        report = oracle_report(cfg["model"], cfg["n"], cfg["t"], cfg["j"], config, policy)
    except OutOfRegimeError as exc:
        refusal = {"status": "refused", "reason": str(exc), "meta": _meta(cfg, {"seed": cfg["seed"]})}
        _emit(_dumps(refusal), cfg["out"])
        return EXIT_REGIME
    report["meta"] = _meta(cfg, {"seed": cfg["seed"], "bits": cfg["bits"]})
    _emit(_dumps(report), cfg["out"])
    return EXIT_OK if report["pass"] else EXIT_FAILED


def low_T_slope(N: int, policy: PrecisionPolicy, tmin=1e-3, tmax=1e-2, points=10) -> float:
    """Least-squares slope dM/dt of the exact magnetisation on a log grid."""
    grid = temperature_grid(tmin, tmax, points)
    spec = build("noninteracting", N)
    ms = [float(thermo_point(spec, t, 0, policy).M) for t in grid]
    return float(np.polyfit(grid, ms, 1)[0])


def strong_coupling_deviation(N, j, policy, tmin=0.2, tmax=5.0, points=20) -> float:
    spec = build("ising", N)
    grid = temperature_grid(tmin, tmax, points)
    dev = [
        abs(float(thermo_point(spec, t, j, policy).chi) / chi_strong_coupling(t) - 1) for t in grid
    ]
    return max(dev)


def weak_coupling_spread(t, policy, ns=(2, 4)) -> dict:
    out = {}
    for label, coupling in (("j0", lambda n: Fraction(0)), ("j_2_over_N", lambda n: Fraction(2, n))):
        vals = [float(thermo_point(build("ising", n), t, coupling(n), policy).M_per_particle) for n in ns]
        out[label] = {"M_per_particle": vals, "spread": max(vals) - min(vals)}
    return out


def cmd_asymptote_check(args) -> int:
    cfg = resolve(args, ["check", "n", "t", "strong_j", "bits", "max_bits", "out"])
    if cfg["check"] not in ("all", "low-t", "strong", "weak"):
        raise UsageError("--check must be all, low-t, strong or weak")
    policy = _policy(cfg)
    report = {}
    if cfg["check"] in ("all", "low-t"):
        n_max = max(cfg["n"], 1) if args.n is not None else 5
        rows = []
        for N in range(1, n_max + 1):
            slope = low_T_slope(N, policy)
            pred = -(2**N - 1)
            rows.append(
                {
                    "N": N,
                    "fitted_slope": slope,
                    "predicted_slope": pred,
                    "rel_dev": abs(slope / pred - 1),
                    "M_at_t_1e-3": float(thermo_point(build("noninteracting", N), 1e-3, 0, policy).M),
                    "m_low_T_at_t_1e-3": m_low_T(N, 1e-3),
                }
            )
        report["low_T"] = rows
    if cfg["check"] in ("all", "strong"):
        report["strong_coupling"] = {
            "N": 4,
            "j": str(cfg["strong_j"]),
            "max_rel_dev": strong_coupling_deviation(4, cfg["strong_j"], policy),
        }
    if cfg["check"] in ("all", "weak"):
        t = cfg["t"] if args.t is not None else 0.5
        spread = weak_coupling_spread(t, policy)
        report["weak_coupling"] = {
            "t": t,
            **spread,
            "suppressed": spread["j_2_over_N"]["spread"] < spread["j0"]["spread"],
            "regime": {str(n): weak_coupling_applicable(n, Fraction(2, n)).applicable for n in (2, 4)},
        }
    report["meta"] = _meta(cfg)
    _emit(_dumps(report), cfg["out"])
    return EXIT_OK


def _add_common(p, *names):
    for name in names:
        flag = "--" + name.replace("_", "-")
        if name == "model":
            p.add_argument(flag, choices=MODELS, default=None)
        else:
            p.add_argument(flag, default=None, dest=name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projthermo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"projthermo {__version__}")
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="print a model spectrum as JSON")
    _add_common(p, "model", "n", "j", "mu_b", "out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="thermodynamics over a temperature grid")
    _add_common(
        p, "model", "n", "j", "tmin", "tmax", "points", "grid", "bits", "max_bits",
        "out", "format", "svg", "plot", "workers",
    )
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="Monte Carlo cross-check of Z, U, M")
    _add_common(p, "model", "n", "j", "t", "samples", "seed", "bits", "max_bits", "out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("asymptote-check", help="compare the exact engine with closed-form limits")
    _add_common(p, "n", "t", "strong_j", "bits", "max_bits", "out")
    p.add_argument("--check", choices=("all", "low-t", "strong", "weak"), default=None)
    p.set_defaults(func=cmd_asymptote_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"projthermo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutOfRegimeError as exc:
        print(f"projthermo: refused: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except CancellationError as exc:
        print(f"projthermo: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
