"""Experiment runner: wires flags/config files to the library and writes artifacts.

Every run produces a versioned JSON summary (echoing the fully resolved
configuration) plus plot-ready tables.  Output is deterministic: no RNG,
fixed-order reductions and 17-significant-digit float formatting, so
repeated runs are byte-identical.

Exit codes: 0 ok, 2 configuration error, 3 a built-in check exceeded its
tolerance, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .classical import (
    appendix_equivalence_check,
    h1h2,
    harmonic_model,
    kappa,
    quantum_coeffs,
    quartic_model,
)
from .floquet import (
    WeylModelParams,
    build_pumping_h,
    build_single_mode_h,
    floquet_operator,
    quasienergies,
    rescaled_floquet_equivalence,
)
from .gauge import gauge_equivalence_check
from .iontrap import IonTrapModel, WavepacketGrid, build_demo_hamiltonian, fidelity_curves
from .rescaling import RescalingFunction, check_boundary

__all__ = ["main"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_IO = 4


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _common_defaults():
    return {"tau": 1.0, "steps": 4000, "out": ".", "format": "csv", "config": None}


DEFAULTS = {
    "iontrap": {
        **_common_defaults(),
        "a": [1.0],
        "n_times": 33,
        "p0": 0.0,
        "sigma_p": 0.05,
        "grid_points": 129,
        "fidelity_mode": "incoherent",
    },
    "gauge-check": {
        **_common_defaults(),
        "a": [2.0],
        "p": [-1.0, 0.0, 1.0],
        "mass": 1.0,
        "c": 1.0,
        "n_check": 9,
        "tol": 1e-6,
    },
    "floquet": {
        **_common_defaults(),
        "a": [2.0],
        # generic mode away from band degeneracies; the pumping window is
        # T0 = 50 drive periods, hence the much larger default step count
        "steps": 150000,
        "J": 0.2,
        "lam": 0.15,
        "V1": 0.5,
        "V2": 0.25,
        "Omega": 2.0 * math.pi,
        "k": 1.1,
        "phi_y": 0.8,
        "phi_z": 0.5,
        "ell": 1,
        "T0": 50.0,
        "r": 0.3,
        "phi_y0": 0.8,
        "phi_z0": 0.5,
        "equivalence": False,
        "scan": None,
        "scan_min": -math.pi,
        "scan_max": math.pi,
        "scan_points": 65,
        "period_steps": 2048,
        "tol": 1e-6,
    },
    "appendix": {
        **_common_defaults(),
        "a": [2.0],
        "mode": "classical",
        "potential": "quartic",
        "x0": 1.0,
        "p0": 0.0,
        "mass": 1.0,
        "n_record": 200,
        "tol": 1e-5,
    },
    "rescale-info": {
        **_common_defaults(),
        "a": [2.0],
        "n_samples": 101,
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirac-rescale",
        description="Time-rescaled shortcuts for two-level Dirac-type dynamics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sp):
        sp.add_argument("--a", action="append", type=float, default=None,
                        help="contraction factor(s); repeat for several runs")
        sp.add_argument("--tau", type=float, default=None, help="original process duration")
        sp.add_argument("--steps", type=int, default=None, help="propagation steps per window")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--config", type=str, default=None, help="JSON config file; flags override")
        sp.add_argument("--format", choices=["csv", "json"], default=None,
                        help="table format (summary is always JSON)")

    sp = sub.add_parser("iontrap", help="fidelity curves of the rescaled ramp")
    add_common(sp)
    sp.add_argument("--n-times", dest="n_times", type=int, default=None)
    sp.add_argument("--p0", type=float, default=None, help="packet center momentum")
    sp.add_argument("--sigma-p", dest="sigma_p", type=float, default=None, help="packet width")
    sp.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    sp.add_argument("--fidelity-mode", dest="fidelity_mode",
                    choices=["incoherent", "coherent"], default=None)

    sp = sub.add_parser("gauge-check", help="frame-equivalence deviation report")
    add_common(sp)
    sp.add_argument("--p", action="append", type=float, default=None,
                    help="momentum mode(s); repeat for several")
    sp.add_argument("--mass", type=float, default=None)
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--n-check", dest="n_check", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("floquet", help="quasienergy scans and the contracted-cycle identity")
    add_common(sp)
    for name in ("J", "lam", "V1", "V2", "Omega", "k", "phi-y", "phi-z",
                 "T0", "r", "phi-y0", "phi-z0"):
        sp.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float, default=None)
    sp.add_argument("--ell", type=int, default=None)
    sp.add_argument("--equivalence", action="store_const", const=True, default=None,
                    help="also compare the contracted pumping cycle to the original")
    sp.add_argument("--scan", choices=["k", "phi_y", "phi_z"], default=None,
                    help="write a quasienergy scan along this axis")
    sp.add_argument("--scan-min", dest="scan_min", type=float, default=None)
    sp.add_argument("--scan-max", dest="scan_max", type=float, default=None)
    sp.add_argument("--scan-points", dest="scan_points", type=int, default=None)
    sp.add_argument("--period-steps", dest="period_steps", type=int, default=None,
                    help="steps per drive period in scans")
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("appendix", help="canonical-transformation checks")
    add_common(sp)
    sp.add_argument("--mode", choices=["classical", "coeffs"], default=None)
    sp.add_argument("--potential", choices=["harmonic", "quartic"], default=None)
    sp.add_argument("--x0", type=float, default=None)
    sp.add_argument("--p0", type=float, default=None)
    sp.add_argument("--mass", type=float, default=None)
    sp.add_argument("--n-record", dest="n_record", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("rescale-info", help="rescaling samples and boundary report")
    add_common(sp)
    sp.add_argument("--n-samples", dest="n_samples", type=int, default=None)

    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    sub = args.subcommand
    defaults = DEFAULTS[sub]
    file_values = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(file_values) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config keys for {sub}: {', '.join(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        if key == "config":
            resolved[key] = args.config
            continue
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in file_values:
            resolved[key] = file_values[key]
        else:
            resolved[key] = default
    _validate(sub, resolved)
    return resolved


def _validate(sub: str, cfg: dict) -> None:
    if not isinstance(cfg["a"], list):
        cfg["a"] = [cfg["a"]]
    cfg["a"] = [float(v) for v in cfg["a"]]
    for v in cfg["a"]:
        if v < 1.0:
            raise ConfigError(f"a: contraction factor must be >= 1, got {v}")
    if not cfg["tau"] > 0:
        raise ConfigError(f"tau: must be positive, got {cfg['tau']}")
    if cfg["steps"] < 1:
        raise ConfigError(f"steps: must be >= 1, got {cfg['steps']}")
    if sub == "iontrap":
        if cfg["n_times"] < 2:
            raise ConfigError("n_times: need at least 2 sample times")
        if cfg["grid_points"] < 3:
            raise ConfigError("grid_points: need at least 3 momentum samples")
        if not cfg["sigma_p"] > 0:
            raise ConfigError("sigma_p: must be positive")
    if sub == "gauge-check":
        if not isinstance(cfg["p"], list):
            cfg["p"] = [cfg["p"]]
        cfg["p"] = [float(v) for v in cfg["p"]]
        if cfg["n_check"] < 2:
            raise ConfigError("n_check: need at least 2 sample times")
    if sub == "floquet":
        cfg["equivalence"] = bool(cfg["equivalence"])
        if cfg["scan"] is None and not cfg["equivalence"]:
            cfg["scan"] = "phi_z"
        if cfg["scan_points"] < 2:
            raise ConfigError("scan_points: need at least 2")
        if cfg["period_steps"] < 1:
            raise ConfigError("period_steps: must be >= 1")
    if sub == "appendix" and cfg["n_record"] < 1:
        raise ConfigError("n_record: must be >= 1")
    if sub == "rescale-info" and cfg["n_samples"] < 2:
        raise ConfigError("n_samples: need at least 2")


class _ArtifactWriter:
    """Stages files in temp space and publishes them together at the end."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.staged = []  # (tmp_path, final_path)

    def stage(self, name: str, text: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        final = os.path.join(self.out_dir, name)
        self.staged.append((tmp, final))
        return final

    def publish(self):
        for tmp, final in self.staged:
            os.replace(tmp, final)
        self.staged = []

    def discard(self):
        for tmp, _ in self.staged:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        self.staged = []


def _table_text(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def _summary_text(sub: str, cfg: dict, results: dict, checks: dict) -> str:
    passed = all(c["passed"] for c in checks.values()) if checks else True
    doc = {
        "schema": SCHEMA_VERSION,
        "subcommand": sub,
        "config": cfg,
        "results": results,
        "checks": checks,
        "passed": passed,
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n"


def _run_iontrap(cfg: dict, writer: _ArtifactWriter) -> dict:
    model = IonTrapModel(tau=cfg["tau"])
    grid = WavepacketGrid.gaussian(p0=cfg["p0"], sigma_p=cfg["sigma_p"],
                                   n_points=cfg["grid_points"])
    rows = []
    terminal = {}
    for a in cfg["a"]:
        rf = RescalingFunction(a=a, tau=cfg["tau"])
        curves = fidelity_curves(model, rf, grid, n_times=cfg["n_times"],
                                 n_steps=cfg["steps"], mode=cfg["fidelity_mode"])
        for t, fi, ff in zip(curves.t, curves.f_initial, curves.f_final):
            rows.append([a, t, fi, ff])
        terminal[_fmt(a)] = {"t": float(curves.t[-1]), "F_i": float(curves.f_initial[-1]),
                             "F_f": float(curves.f_final[-1])}
    ext = "json" if cfg["format"] == "json" else "csv"
    writer.stage(f"fidelity.{ext}", _table_text(["a", "t", "F_i", "F_f"], rows, cfg["format"]))
    return {"results": {"terminal": terminal}, "checks": {}}


def _run_gauge_check(cfg: dict, writer: _ArtifactWriter) -> dict:
    model = IonTrapModel(tau=cfg["tau"])
    rows = []
    deviations = {}
    worst = 0.0
    for a in cfg["a"]:
        rf = RescalingFunction(a=a, tau=cfg["tau"])
        res = gauge_equivalence_check(
            lambda p: build_demo_hamiltonian(model, p), rf, cfg["p"],
            n_steps=cfg["steps"], n_check=cfg["n_check"],
            m=cfg["mass"], c=cfg["c"], tol=None,
        )
        for i, p in enumerate(res.momenta):
            for j, t in enumerate(res.sample_times):
                rows.append([a, p, t, res.deviations[i, j]])
        deviations[_fmt(a)] = res.max_deviation
        worst = max(worst, res.max_deviation)
    ext = "json" if cfg["format"] == "json" else "csv"
    writer.stage(f"gauge_deviations.{ext}",
                 _table_text(["a", "p", "t", "deviation"], rows, cfg["format"]))
    checks = {"frame_equivalence": {"value": worst, "tol": cfg["tol"],
                                    "passed": worst <= cfg["tol"]}}
    return {"results": {"max_deviation": deviations}, "checks": checks}


def _run_floquet(cfg: dict, writer: _ArtifactWriter) -> dict:
    params = WeylModelParams(
        J=cfg["J"], lam=cfg["lam"], V1=cfg["V1"], V2=cfg["V2"], Omega=cfg["Omega"],
        k=cfg["k"], phi_y=cfg["phi_y"], phi_z=cfg["phi_z"], ell=cfg["ell"],
        T0=cfg["T0"], r=cfg["r"], phi_y0=cfg["phi_y0"], phi_z0=cfg["phi_z0"],
    )
    results: dict = {}
    checks: dict = {}
    if cfg["scan"] is not None:
        rows = []
        values = np.linspace(cfg["scan_min"], cfg["scan_max"], cfg["scan_points"])
        for v in values:
            fields = {"k": params.k, "phi_y": params.phi_y, "phi_z": params.phi_z}
            fields[cfg["scan"]] = float(v)
            p_scan = WeylModelParams(
                J=params.J, lam=params.lam, V1=params.V1, V2=params.V2,
                Omega=params.Omega, ell=params.ell, T0=params.T0, r=params.r,
                phi_y0=params.phi_y0, phi_z0=params.phi_z0, **fields,
            )
            u = floquet_operator(build_single_mode_h(p_scan), p_scan.T, cfg["period_steps"])
            e1, e2 = quasienergies(u, p_scan.T)
            rows.append([fields["k"], fields["phi_y"], fields["phi_z"], e1, e2])
        ext = "json" if cfg["format"] == "json" else "csv"
        writer.stage(f"quasienergies.{ext}",
                     _table_text(["k", "phi_y", "phi_z", "E1", "E2"], rows, cfg["format"]))
        results["scan"] = {"axis": cfg["scan"], "points": int(cfg["scan_points"])}
    if cfg["equivalence"]:
        deviations = {}
        worst = 0.0
        h = build_pumping_h(params)
        for a in cfg["a"]:
            rf = RescalingFunction(a=a, tau=params.T0)
            dev = rescaled_floquet_equivalence(h, rf, cfg["steps"], tol=None)
            deviations[_fmt(a)] = dev
            worst = max(worst, dev)
        results["equivalence"] = deviations
        checks["floquet_equivalence"] = {"value": worst, "tol": cfg["tol"],
                                         "passed": worst <= cfg["tol"]}
    return {"results": results, "checks": checks}


def _run_appendix(cfg: dict, writer: _ArtifactWriter) -> dict:
    results: dict = {}
    checks: dict = {}
    ext = "json" if cfg["format"] == "json" else "csv"
    if cfg["mode"] == "classical":
        factory = harmonic_model if cfg["potential"] == "harmonic" else quartic_model
        model = factory(tau=cfg["tau"], m=cfg["mass"])
        worst = {}
        for a in cfg["a"]:
            rf = RescalingFunction(a=a, tau=cfg["tau"])
            res = appendix_equivalence_check(model, rf, state0=(cfg["x0"], cfg["p0"]),
                                             n_steps=cfg["steps"], tol=None)
            stride = max(1, len(res.times) // cfg["n_record"])
            rows = []
            for j in range(0, len(res.times), stride):
                dev = float(np.max(np.abs(res.mapped[j] - res.transformed[j])))
                rows.append([res.times[j], res.original[j, 0], res.original[j, 1],
                             res.transformed[j, 0], res.transformed[j, 1], dev])
            writer.stage(f"trajectory_a{_fmt(a)}.{ext}",
                         _table_text(["t", "x", "p", "xbar", "pbar", "deviation"],
                                     rows, cfg["format"]))
            worst[_fmt(a)] = res.max_deviation
        value = max(worst.values())
        results["max_deviation"] = worst
        checks["trajectory_equivalence"] = {"value": value, "tol": cfg["tol"],
                                            "passed": value <= cfg["tol"]}
    else:
        rows = []
        for a in cfg["a"]:
            rf = RescalingFunction(a=a, tau=cfg["tau"])
            for t in np.linspace(0.0, rf.horizon, cfg["n_record"]):
                h1, h2 = h1h2(rf, t, cfg["mass"])
                alpha, beta, kq = quantum_coeffs(rf, t)
                rows.append([a, t, h1, h2, kappa(rf, t, cfg["mass"]), alpha, beta, kq])
        writer.stage(f"coefficients.{ext}",
                     _table_text(["a", "t", "h1", "h2", "kappa", "alpha", "beta", "kappa_q"],
                                 rows, cfg["format"]))
        results["coefficients"] = {"rows": len(rows)}
    return {"results": results, "checks": checks}


def _run_rescale_info(cfg: dict, writer: _ArtifactWriter) -> dict:
    results: dict = {}
    checks: dict = {}
    rows = []
    for a in cfg["a"]:
        rf = RescalingFunction(a=a, tau=cfg["tau"])
        report = check_boundary(rf)
        ts = np.linspace(0.0, rf.horizon, cfg["n_samples"])
        for t in ts:
            rows.append([a, t, rf.f(t), rf.df(t), rf.d2f(t), rf.d3f(t)])
        results[_fmt(a)] = {
            "horizon": rf.horizon,
            "df_max": float(2.0 * a - 1.0),
            "residuals": report.residuals,
        }
        checks[f"boundary_a={_fmt(a)}"] = {
            "value": max(report.residuals.values()),
            "tol": report.tol,
            "passed": report.passed,
        }
    ext = "json" if cfg["format"] == "json" else "csv"
    writer.stage(f"rescaling.{ext}",
                 _table_text(["a", "t", "f", "df", "d2f", "d3f"], rows, cfg["format"]))
    return {"results": results, "checks": checks}


_RUNNERS = {
    "iontrap": _run_iontrap,
    "gauge-check": _run_gauge_check,
    "floquet": _run_floquet,
    "appendix": _run_appendix,
    "rescale-info": _run_rescale_info,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    writer = _ArtifactWriter(cfg["out"])
    try:
        try:
            outcome = _RUNNERS[args.subcommand](cfg, writer)
        except (ConfigError, ValueError) as exc:
            writer.discard()
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except RuntimeError as exc:
            # drifted/diverged computation: report as a failed check
            writer.discard()
            print(f"check failed: {exc}", file=sys.stderr)
            return EXIT_TOLERANCE
        writer.stage("summary.json",
                     _summary_text(args.subcommand, cfg, outcome["results"], outcome["checks"]))
        writer.publish()
    except OSError as exc:
        writer.discard()
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = [name for name, c in outcome["checks"].items() if not c["passed"]]
    if failed:
        print(f"tolerance exceeded: {', '.join(sorted(failed))}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
