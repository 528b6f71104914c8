"""Command line front end: ``isoloewner run <config>`` and ``isoloewner plot <csv>``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure or a failed
check. Reports are written as ``<experiment>-<seed>.csv`` and ``.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np

from .confluence import DEFAULT_LADDER, ConfluenceSpec, confluence_rate
from .errors import (
    InvalidConfig,
    IsoLoewnerError,
    NumericalError,
    UnknownColumn,
    ValidationError,
)
from .isomonodromy import LaxFamily, family_from_dict
from .loewner import DrivingKind, DrivingSpec, fmt_float, run_trajectory, sample_driving_batch, trajectory_csv
from .martingale import MCConfig, covariance_factor_parts, mc_expectation, run_engine
from .verify import (
    bpz_ladder,
    cross_module_suite,
    expected_rank,
    hormander_determinant,
    hormander_matrix,
    hormander_rank,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

EXPERIMENTS = ("TRAJECTORY", "LEDGER", "MC", "MC_RHO", "CONFLUENCE", "BPZ", "HORMANDER", "SUITE")

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MAT = {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _PAIR}}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "paths": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "family": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "poles": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["lambda", "A0", "A1"],
                        "properties": {"lambda": _PAIR, "A0": _MAT, "A1": _MAT},
                    },
                },
                "regular_at_infinity": {"type": "boolean"},
            },
        },
        "driving": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "dt", "T"],
            "properties": {
                "kind": {"enum": [k.value for k in DrivingKind]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "kappa": {"type": "number", "minimum": 0},
                "rho": {"type": "number"},
                "xi0": {"type": "number"},
                "samples": {"type": "array", "items": {"type": "number"}},
            },
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "substeps": {"type": "integer", "minimum": 1},
                "pole": {"type": "integer", "minimum": 0},
                "k": {"type": "integer", "minimum": 1},
                "s": _PAIR,
                "probes": {"type": "array", "items": _PAIR, "minItems": 1},
                "eps_ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
                "z0": _PAIR,
                "z_base": _PAIR,
                "xi": {"type": "number"},
                "z": {"type": "number"},
                "ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
                "steps": {"type": "integer", "minimum": 2},
            },
        },
    },
}

DEFAULT_DRIVING = {"kind": "BROWNIAN", "dt": 1e-3, "T": 0.3}
DEFAULT_TOLERANCES = {
    "ledger": 1e-6,
    "slope_min": 0.9,
    "slope_max": 1.1,
    "bpz_order": 1.8,
    "ode": 1e-10,
    "hormander_ratio": 1e-12,
}


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: Any) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise InvalidConfig(f"config invalid at {where}: {err.message}")


def apply_overrides(cfg: dict, *, seed=None, dt=None, paths=None, out=None) -> dict:
    cfg = json.loads(json.dumps(cfg))
    cfg.setdefault("seed", 0)
    cfg.setdefault("driving", dict(DEFAULT_DRIVING))
    cfg.setdefault("family", {"poles": []})
    cfg.setdefault("tolerances", {})
    cfg.setdefault("params", {})
    cfg.setdefault("output_dir", ".")
    if seed is not None:
        cfg["seed"] = seed
    if dt is not None:
        cfg["driving"]["dt"] = dt
    if paths is not None:
        cfg["paths"] = paths
    if out is not None:
        cfg["output_dir"] = out
    validate_config(cfg)
    return cfg


def driving_spec(cfg: dict) -> DrivingSpec:
    d = cfg["driving"]
    return DrivingSpec(
        kind=DrivingKind(d["kind"]),
        dt=float(d["dt"]),
        T=float(d["T"]),
        seed=int(cfg["seed"]),
        kappa=float(d.get("kappa", 4.0)),
        rho=float(d.get("rho", -2.0)),
        xi0=d.get("xi0"),
        samples=None if "samples" not in d else tuple(d["samples"]),
    )


def _tol(cfg: dict, name: str) -> float:
    return float(cfg["tolerances"].get(name, DEFAULT_TOLERANCES[name]))


def _cx(pair) -> complex:
    return complex(pair[0], pair[1])


def _pair(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt_float(v) for v in row) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# experiments: each returns (csv text, report dict, passed)


def _family(cfg: dict) -> LaxFamily:
    return family_from_dict(cfg["family"])


def exp_trajectory(cfg: dict):
    fam = _family(cfg)
    spec = driving_spec(cfg)
    states = run_trajectory(spec, fam.lam, fam.s)
    last = states[-1]
    report = {
        "steps": len(states) - 1,
        "t_final": last.t,
        "stopped": last.stopped,
        "stop_reason": last.stop_reason,
        "S_final": [_pair(v) for v in last.S],
        "gprime_final": [_pair(v) for v in last.gprime],
    }
    return trajectory_csv(states), report, True


def exp_ledger(cfg: dict):
    fam = _family(cfg)
    spec = driving_spec(cfg)
    xi0 = spec.xi0 if spec.kind is DrivingKind.SLE_KAPPA_RHO else None
    from .loewner import initial_state

    guard = initial_state(fam.lam, fam.s, xi0=xi0).guard
    drive = sample_driving_batch(spec, 1)
    run = run_engine(fam, drive, spec.kappa, guard=guard, xi0=xi0, record=True,
                     substeps=int(cfg["params"].get("substeps", 1)))
    rows = []
    for t, Z, _Xi, _y, diag, active in run.history:
        if not active[0]:
            break
        rows.append([t, Z[0], diag.trA2[0].real, diag.trA2[0].imag, diag.rateF[0].real, diag.rateF[0].imag,
                     diag.rateTau[0].real, diag.rateTau[0].imag, diag.ledger[0].real, diag.ledger[0].imag,
                     diag.ledger_relative[0]])
    header = ["t", "Z", "trA2_re", "trA2_im", "rateF_re", "rateF_im", "rateTau_re", "rateTau_im",
              "residual_re", "residual_im", "residual_rel"]
    y = run.final.y
    closed = covariance_factor_parts(-2.0 * y["kint"], y["pre"], y["schw"], run.final.alpha, run.final.s0)
    tol = _tol(cfg, "ledger")
    report = {
        "kappa": spec.kappa,
        "ledger_max_residual": run.ledger_max_relative,
        "ledger_max_abs": run.ledger_max_abs,
        "traceless_defect_max": run.traceless_defect_max,
        "alpha_max_drift": run.alpha_max_drift,
        "covariance_two_ways": float(np.max(np.abs(np.exp(y["logF"] - closed) - 1.0))),
        "stop_reason": run.final.reason[0],
        "tolerance": tol,
    }
    return _csv(header, rows), report, run.ledger_max_relative <= tol


def _exp_mc(cfg: dict, kind: DrivingKind):
    fam = _family(cfg)
    spec = driving_spec(cfg)
    if spec.kind is not kind:
        raise InvalidConfig(f"{cfg['experiment']} needs {kind.value} driving")
    res = mc_expectation(MCConfig(fam, spec, int(cfg.get("paths", 1000))))
    report = res.to_json()
    names = ("11", "12", "21", "22")
    rows = [[k, res.mean.reshape(-1)[i].real, res.mean.reshape(-1)[i].imag, float(res.stderr.reshape(-1)[i])]
            for i, k in enumerate(names)]
    rows.append(["trace", res.trace_mean.real, res.trace_mean.imag, res.trace_stderr])
    return _csv(["entry", "mean_re", "mean_im", "stderr"], rows), report, res.passed


def exp_mc(cfg: dict):
    return _exp_mc(cfg, DrivingKind.BROWNIAN)


def exp_mc_rho(cfg: dict):
    return _exp_mc(cfg, DrivingKind.SLE_KAPPA_RHO)


def exp_confluence(cfg: dict):
    fam = _family(cfg)
    p = cfg["params"]
    i = int(p.get("pole", 0))
    if i >= fam.n:
        raise InvalidConfig("confluence needs a pole at the requested index")
    s = _cx(p["s"]) if "s" in p else complex(fam.s[i])
    spec = ConfluenceSpec(fam.A0[i], fam.A1[i], s, 1e-2, complex(fam.lam[i]), int(p.get("k", 1)))
    probes = [_cx(z) for z in p.get("probes", [[1, 0], [1, 1], [-2, 0]])]
    probes = [fam.lam[i] + z for z in probes]
    rate = confluence_rate(spec, probes, p.get("eps_ladder", list(DEFAULT_LADDER)))
    lo, hi = _tol(cfg, "slope_min"), _tol(cfg, "slope_max")
    report = {"slope": rate.slope, "slope_range": [lo, hi], "eps": list(rate.eps), "mismatch": list(rate.mismatch)}
    return rate.to_csv(), report, lo <= rate.slope <= hi


def exp_bpz(cfg: dict):
    fam = _family(cfg)
    p = cfg["params"]
    z0 = _cx(p.get("z0", [3.0, 0.0]))
    z_base = _cx(p.get("z_base", [3.5, 0.0]))
    ladder = p.get("ladder", [1e-2, 5e-3, 2.5e-3])
    rep = bpz_ladder(fam, z0, ladder, z_base=z_base, xi=p.get("xi"), steps=int(p.get("steps", 400)))
    tol_ode = _tol(cfg, "ode")
    terminal_bound = 100.0 * tol_ode / ladder[-1] ** 2
    order_min = _tol(cfg, "bpz_order")
    ok = rep.fitted_order >= order_min and abs(rep.residual[-1]) <= terminal_bound
    report = {
        "fitted_order": rep.fitted_order,
        "order_min": order_min,
        "terminal_residual": abs(rep.residual[-1]),
        "terminal_bound": terminal_bound,
    }
    return rep.to_csv(), report, ok


def exp_hormander(cfg: dict):
    fam = _family(cfg)
    p = cfg["params"]
    z, xi = float(p.get("z", 0.0)), float(p.get("xi", 1.0))
    m = hormander_matrix(z, xi, fam.lam, fam.s)
    det = hormander_determinant(z, xi, fam.lam, fam.s)
    rank = hormander_rank(z, xi, fam.lam, fam.s)
    want = expected_rank(fam.lam)
    ratio = abs(det) / m.scale
    generic = bool(np.all(fam.lam.imag != 0))
    ok = rank == want and (not generic or ratio > _tol(cfg, "hormander_ratio"))
    report = {"det": _pair(det), "scale": m.scale, "ratio": ratio, "rank": rank, "expected_rank": want,
              "dim": m.dim}
    rows = [[k + 1] + [v for e in m.entries[k] for v in (e.real, e.imag)] for k in range(m.dim)]
    header = ["row"] + [f"c{j}_{part}" for j in range(m.dim) for part in ("re", "im")]
    return _csv(header, rows), report, ok


def exp_suite(cfg: dict):
    spec = driving_spec(cfg)
    rep = cross_module_suite(cfg["family"], spec, {k: v for k, v in cfg["tolerances"].items()})
    rows = [[c.name, "pass" if c.passed else "fail", c.deviation, c.tolerance] for c in rep.checks]
    return _csv(["name", "status", "deviation", "tolerance"], rows), rep.to_json(), rep.passed


RUNNERS: dict[str, Callable[[dict], tuple]] = {
    "TRAJECTORY": exp_trajectory,
    "LEDGER": exp_ledger,
    "MC": exp_mc,
    "MC_RHO": exp_mc_rho,
    "CONFLUENCE": exp_confluence,
    "BPZ": exp_bpz,
    "HORMANDER": exp_hormander,
    "SUITE": exp_suite,
}


def run(cfg: dict) -> tuple[int, Path, Path]:
    """Run one validated config; returns (exit code, csv path, json path)."""
    exp = cfg["experiment"]
    csv_text, report, passed = RUNNERS[exp](cfg)
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{exp.lower()}-{cfg['seed']}"
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    echo = {k: v for k, v in cfg.items() if k != "output_dir"}
    doc = {"experiment": exp, "seed": cfg["seed"], "config": echo, "passed": passed, "report": report}
    csv_path.write_text(csv_text)
    json_path.write_text(json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n")
    return (EXIT_OK if passed else EXIT_NUMERICAL), csv_path, json_path


# ---------------------------------------------------------------------------
# plots


PLOT_KINDS = ("trajectory", "ledger", "slope", "residual")


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise UnknownColumn(f"{path} has no data rows")
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in body])
        except ValueError:
            continue
    return cols


def _need(cols: dict, *names: str) -> None:
    missing = [n for n in names if n not in cols]
    if missing:
        raise UnknownColumn(f"CSV lacks column(s) {', '.join(missing)}")


def plot(csv_path: str | Path, kind: str, out: str | Path | None = None) -> Path:
    """Render a CSV report to a deterministic SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if kind not in PLOT_KINDS:
        raise InvalidConfig(f"unknown plot kind {kind!r}")
    csv_path = Path(csv_path)
    try:
        cols = _read_csv(csv_path)
    except OSError as exc:
        raise InvalidConfig(f"cannot read {csv_path}: {exc.strerror}") from exc
    matplotlib.rcParams["svg.hashsalt"] = "isoloewner"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if kind == "trajectory":
        _need(cols, "t")
        traces = [c for c in cols if c != "t"]
        if not traces:
            raise UnknownColumn("trajectory CSV has no quantity columns")
        for name in traces:
            ax.plot(cols["t"], cols[name], label=name, linewidth=0.8)
        ax.set_xlabel("t")
        ax.legend(fontsize=6, ncol=2)
    elif kind == "ledger":
        _need(cols, "t", "residual_re", "residual_im")
        mag = np.hypot(cols["residual_re"], cols["residual_im"])
        ax.semilogy(cols["t"], np.maximum(mag, 1e-300))
        ax.set_xlabel("t")
        ax.set_ylabel("|residual|")
    elif kind == "slope":
        _need(cols, "eps", "mismatch")
        ax.loglog(cols["eps"], cols["mismatch"], "o-")
        ax.set_xlabel("eps")
        ax.set_ylabel("mismatch")
    else:
        _need(cols, "h", "residual_re", "residual_im")
        ax.loglog(cols["h"], np.hypot(cols["residual_re"], cols["residual_im"]), "o-")
        ax.set_xlabel("h")
        ax.set_ylabel("|residual|")
    out_path = Path(out) if out is not None else csv_path.with_suffix(".svg")
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


# ---------------------------------------------------------------------------
# entry point


def bundled_config(name: str) -> str:
    try:
        return resources.files("isoloewner").joinpath("configs", f"{name}.json").read_text()
    except (FileNotFoundError, OSError) as exc:
        raise InvalidConfig(f"no bundled config named {name!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoloewner", description="Irregular Loewner observables toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--paths", type=int)
    p_run.add_argument("--out")
    p_plot = sub.add_parser("plot", help="render a CSV report to SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p_plot.add_argument("--out")
    p_ex = sub.add_parser("example", help="print a bundled config")
    p_ex.add_argument("name")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if args.command == "example":
            sys.stdout.write(bundled_config(args.name))
            return EXIT_OK
        if args.command == "plot":
            path = plot(args.csv, args.kind, args.out)
            print(path)
            return EXIT_OK
        cfg = apply_overrides(load_config(args.config), seed=args.seed, dt=args.dt, paths=args.paths, out=args.out)
        code, csv_path, json_path = run(cfg)
        print(csv_path)
        print(json_path)
        if code != EXIT_OK:
            print(f"error: {cfg['experiment']} check failed, see {json_path}", file=sys.stderr)
        return code
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IsoLoewnerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
