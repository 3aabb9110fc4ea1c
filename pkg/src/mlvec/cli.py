"""Command-line front end.

Every subcommand resolves its settings as built-in defaults, then an INI
file (``--config``), then explicit flags, validates them before computing,
and writes one result file: JSON for single results, RFC-4180 CSV for
scans.  The resolved configuration is embedded in every JSON output (and in
a ``.meta.json`` sidecar next to a scan CSV).  A plain-text log records
versions, seeds and tolerances.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import platform
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy

from . import __version__
from .errors import CapExceeded, MLVEError, OrderTooHigh, UnbalancedMonomial
from .forests import (Constant, CosLinear, ExpLinear, ProductLinear, WScheme, bkar_exactness_check,
                      enumerate_forests, spanning_trees)
from .grassmann import brute_force_oracle, chi, chibar, grassmann_gaussian
from .lve import DEFAULT_ATOL, DEFAULT_RTOL, K_MAX, N_MAX_CAP, cumulant_lve, reexpand_in_g
from .model import DEFAULT_RHO, CouplingPoint, ExternalMomenta, SliceConfig, check_resolvent_bound
from .oracle import cumulant_oracle, mc_cross_check
from .scan import COLUMNS, angle_grid_with_boundary, cardioid_scan, parse_grid
from .series import MAX_ORDER, borel_pade_sum, wick_coefficients

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
BKAR_TOL = 1e-8
FOREST_COUNTS = {1: 1, 2: 2, 3: 7, 4: 38}

log = logging.getLogger("mlvec")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


# --- value parsing ---------------------------------------------------------------

def _bool(s: str | bool) -> bool:
    if isinstance(s, bool):
        return s
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s: str) -> list[int]:
    return [int(x) for x in s.replace(" ", "").split(",") if x]


def _pair(s: str) -> tuple[float, float]:
    parts = [float(x) for x in s.replace(" ", "").split(",")]
    if len(parts) == 1:
        return parts[0], 0.0
    if len(parts) != 2:
        raise ValueError(f"expected one or two numbers, got {s!r}")
    return parts[0], parts[1]


def _opt(conv: Callable) -> Callable:
    def f(s):
        if s is None or (isinstance(s, str) and s.strip().lower() in ("", "none")):
            return None
        return conv(s)
    return f


CONVERTERS: dict[str, Callable] = {
    "M": int, "jmax": int, "jmin": int, "rho": float,
    "k": _opt(int), "p": _opt(_int_list),
    "g": _opt(_pair), "g_polar": _opt(_pair),
    "n_max": int, "order": int, "samples": int, "seed": int, "rtol": float, "atol": float,
    "threads": _opt(int), "rho_grid": str, "angle_grid": str, "boundary": _bool,
    "plot": _bool, "oracle": _bool, "mc": _bool, "compare": _bool, "reexpand": _bool,
    "n": int, "function": str, "instances": int, "max_pairs": int, "points": int,
    "w_order": int, "out": _opt(str), "log": _opt(str),
}

COMMON_DEFAULTS: dict[str, Any] = {
    "M": 2, "jmax": 2, "jmin": 1, "rho": DEFAULT_RHO, "seed": 0, "threads": None,
    "out": None, "log": None,
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "oracle": {"k": None, "p": None, "g": (0.0, 0.0), "g_polar": None, "mc": False,
               "samples": 400_000},
    "lve": {"k": None, "p": None, "g": (0.02, 0.0), "g_polar": None, "n_max": 4,
            "rtol": DEFAULT_RTOL, "atol": DEFAULT_ATOL, "compare": False},
    "series": {"k": None, "p": None, "g": None, "g_polar": None, "order": 4,
               "reexpand": False, "n_max": 4},
    "scan": {"k": None, "p": None, "n_max": 3, "rho_grid": "0.1:0.3:1.0",
             "angle_grid": "-1.5:0.5:1.5", "boundary": False, "oracle": True, "plot": False,
             "rtol": DEFAULT_RTOL, "atol": DEFAULT_ATOL},
    "bkar-check": {"n": 3, "function": "all", "w_order": 8},
    "resolvent-bound": {"g": None, "g_polar": None, "samples": 100_000, "points": 10},
    "grassmann-check": {"instances": 500, "max_pairs": 4},
}

SECTIONS = {
    "model": ("M", "jmax", "jmin", "g", "g_polar", "rho"),
    "observable": ("k", "p"),
}


# --- configuration ---------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    values: dict[str, Any]
    sources: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def slice_config(self) -> SliceConfig:
        return SliceConfig(self["M"], self["jmax"], self["jmin"])

    @property
    def momenta(self) -> ExternalMomenta:
        return ExternalMomenta(self["p"])

    def coupling(self) -> CouplingPoint:
        if self.values.get("g_polar") is not None:
            modulus, angle = self["g_polar"]
            return CouplingPoint.from_polar(modulus, angle, self["rho"])
        re, im = self["g"]
        return CouplingPoint.from_g(complex(re, im), self["rho"], allow_boundary=True)

    def as_dict(self) -> dict:
        """Grouped, JSON-ready view of the resolved configuration.

        Output locations are left out so that results do not depend on where
        they are written; the log records them.
        """
        out: dict[str, dict] = {"model": {}, "observable": {}, "engine": {}}
        for key in sorted(self.values):
            if key in ("out", "log"):
                continue
            v = self.values[key]
            if isinstance(v, tuple):
                v = list(v)
            section = next((s for s, ks in SECTIONS.items() if key in ks), "engine")
            out[section][key] = v
        return {"command": self.command, **out}


def read_config_file(path: str) -> dict[str, str]:
    """Flatten every section of an INI file into ``key -> raw string``."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path!r}")
    flat: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key.replace("-", "_")] = value
    return flat


def resolve_config(command: str, flags: dict[str, Any],
                   config_file: str | None = None) -> RunConfig:
    """Defaults, then the config file, then flags; every value converted and checked."""
    values = dict(COMMON_DEFAULTS)
    values.update(COMMAND_DEFAULTS[command])
    sources = {k: "default" for k in values}
    raw: dict[str, tuple[Any, str]] = {}
    if config_file:
        for key, v in read_config_file(config_file).items():
            if key not in values:
                raise ConfigError(f"unknown key {key!r} in {config_file} for {command!r}")
            raw[key] = (v, "config")
    for key, v in flags.items():
        raw[key] = (v, "flag")
    for key, (v, src) in raw.items():
        try:
            values[key] = CONVERTERS[key](v) if isinstance(v, str) else v
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {v!r} ({exc})") from None
        sources[key] = src
    cfg = RunConfig(command, values, sources)
    validate(cfg)
    return cfg


def _resolve_observable(values: dict) -> None:
    k, p = values.get("k"), values.get("p")
    if p is None:
        k = 1 if k is None else k
        p = [1] * k
    elif k is None:
        k = len(p)
    elif len(p) == 1 and k > 1:
        p = p * k
    if k < 0:
        raise ConfigError("k must be >= 0")
    if len(p) != k:
        raise ConfigError(f"--k {k} but {len(p)} momenta given")
    values["k"], values["p"] = k, list(p)


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    cmd = cfg.command
    if v["threads"] is not None and v["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if v["rho"] <= 0:
        raise ConfigError("rho must be positive")
    if cmd in ("oracle", "lve", "series", "scan", "resolvent-bound"):
        try:
            sc = cfg.slice_config
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if sc.N > 64:
            raise ConfigError(f"N = {sc.N} is beyond the supported desk scale (N <= 64)")
    if "k" in v:
        _resolve_observable(v)
        try:
            cfg.momenta.validate(cfg.slice_config, K_MAX)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if v.get("g") is not None and v.get("g_polar") is not None:
        raise ConfigError("give either --g or --g-polar, not both")
    if v.get("g_polar") is not None:
        modulus, angle = v["g_polar"]
        if modulus < 0 or not -math.pi / 2 <= angle <= math.pi / 2:
            raise ConfigError("--g-polar needs modulus >= 0 and angle in [-pi/2, pi/2]")
    if cmd == "oracle" and v["mc"]:
        cp = cfg.coupling()
        if cp.g.imag != 0 or cp.g.real < 0:
            raise ConfigError("--mc needs real g >= 0")
    if cmd in ("lve", "scan", "series") and not 1 <= v["n_max"] <= N_MAX_CAP:
        raise ConfigError(f"n_max must lie in 1..{N_MAX_CAP}")
    if cmd == "series" and not 0 <= v["order"] <= MAX_ORDER:
        raise ConfigError(f"order must lie in 0..{MAX_ORDER}")
    if cmd == "series" and v["reexpand"] and v["order"] > 3:
        raise ConfigError("--reexpand supports order <= 3")
    if cmd == "scan":
        for key in ("rho_grid", "angle_grid"):
            try:
                grid = parse_grid(v[key])
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if not grid:
                raise ConfigError(f"{key} is empty")
        if min(parse_grid(v["rho_grid"])) < 0:
            raise ConfigError("moduli must be >= 0")
        if any(abs(a) > math.pi / 2 + 1e-12 for a in parse_grid(v["angle_grid"])):
            raise ConfigError("angles must lie in [-pi/2, pi/2]")
        if v["plot"] and not v["out"]:
            raise ConfigError("--plot needs --out (the PNG is written next to the CSV)")
    if cmd == "bkar-check":
        if not 1 <= v["n"] <= 4:
            raise ConfigError("bkar-check supports 1 <= n <= 4")
        if v["function"] not in ("all", "exp", "product", "cos", "constant"):
            raise ConfigError(f"unknown function {v['function']!r}")
    if cmd == "resolvent-bound" and (v["samples"] < 1 or v["points"] < 1):
        raise ConfigError("samples and points must be >= 1")
    if cmd == "grassmann-check" and not (v["instances"] >= 1 and 1 <= v["max_pairs"] <= 6):
        raise ConfigError("need instances >= 1 and 1 <= max_pairs <= 6")


# --- output ------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def dumps_json(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        v = bool(v)
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _setup_log(cfg: RunConfig) -> logging.Handler:
    path = cfg["log"] or (cfg["out"] + ".log" if cfg["out"] else None)
    handler: logging.Handler
    if path:
        handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    log.info("mlvec %s, python %s, numpy %s, scipy %s", __version__, platform.python_version(),
             np.__version__, scipy.__version__)
    log.info("command %s", cfg.command)
    for key in sorted(cfg.values):
        log.info("config %s = %r (%s)", key, cfg.values[key], cfg.sources.get(key, "derived"))
    return handler


# --- subcommands -------------------------------------------------------------------

def _envelope(cfg: RunConfig, result: dict) -> dict:
    return {"mlvec_version": __version__, "config": cfg.as_dict(), "result": result}


def run_oracle(cfg: RunConfig) -> tuple[dict, bool]:
    cp, sc, pm = cfg.coupling(), cfg.slice_config, cfg.momenta
    value, err = cumulant_oracle(cp, sc, pm, with_error=True)
    result = {"observable": "log Z" if pm.k == 0 else f"cumulant{tuple(pm.momenta)}",
              "g": cp.g, "N": sc.N, "value": value, "error": err}
    log.info("oracle error target %.1e, reported error %.3e", 1e-10, err)
    if cfg["mc"]:
        log.info("mc samples %d seed %d", cfg["samples"], cfg["seed"])
        est = mc_cross_check(cp, sc, pm, samples=cfg["samples"], seed=cfg["seed"])
        mc_val = est.log_z if pm.k == 0 else est.cumulant
        mc_err = est.log_z_err if pm.k == 0 else est.cumulant_err
        z = abs(value.real - mc_val) / mc_err if mc_err > 0 else 0.0
        result["monte_carlo"] = {"estimate": mc_val, "stderr": mc_err, "z_score": z,
                                 "samples": est.samples, "seed": est.seed}
    return result, True


def run_lve(cfg: RunConfig) -> tuple[dict, bool]:
    cp, sc, pm = cfg.coupling(), cfg.slice_config, cfg.momenta
    log.info("lve rtol %.1e atol %.1e n_max %d", cfg["rtol"], cfg["atol"], cfg["n_max"])
    res = cumulant_lve(cp, sc, pm, cfg["n_max"], threads=cfg["threads"], rtol=cfg["rtol"],
                       atol=cfg["atol"])
    result = res.as_dict()
    result["in_cardioid"] = cp.in_cardioid
    if cfg["compare"] and cp.g.real >= 0:
        o, oerr = cumulant_oracle(cp, sc, pm, with_error=True)
        gap = abs(res.value - o)
        result["oracle"] = {"value": o, "error": oerr, "gap": gap,
                            "consistent": gap <= res.error + oerr}
    return result, True


def run_series(cfg: RunConfig) -> tuple[dict, bool]:
    sc, pm = cfg.slice_config, cfg.momenta
    s = wick_coefficients(sc, pm if pm.k else None, cfg["order"])
    result: dict[str, Any] = {"observable": s.observable, "order": s.order,
                              "coefficients": [str(c) for c in s.coefficients],
                              "coefficients_float": s.as_floats().tolist()}
    if cfg["g"] is not None or cfg["g_polar"] is not None:
        cp = cfg.coupling()
        result["g"] = cp.g
        result["borel_pade"] = borel_pade_sum(s, cp.g)
        result["truncated_sum"] = s.evaluate(cp.g)
    if cfg["reexpand"]:
        r = reexpand_in_g(sc, pm, cfg["n_max"], cfg["order"], threads=cfg["threads"])
        # exact zeros are measured against the largest coefficient
        scale = max((abs(float(b)) for b in s.coefficients), default=0.0) or 1.0
        rel = [abs(a - float(b)) / (abs(float(b)) if b != 0 else scale)
               for a, b in zip(r.coefficients, s.coefficients)]
        result["lve_reexpansion"] = {"coefficients": list(r.coefficients),
                                     "relative_difference": rel}
    return result, True


def run_scan(cfg: RunConfig) -> tuple[dict, bool]:
    sc, pm = cfg.slice_config, cfg.momenta
    moduli = parse_grid(cfg["rho_grid"])
    angles = parse_grid(cfg["angle_grid"])
    if cfg["boundary"]:
        angles = angle_grid_with_boundary(angles)
    log.info("scan %d x %d cells, rtol %.1e atol %.1e", len(moduli), len(angles), cfg["rtol"],
             cfg["atol"])
    table = cardioid_scan(sc, pm, moduli, angles, cfg["n_max"], cfg["rho"], oracle=cfg["oracle"],
                          threads=cfg["threads"], rtol=cfg["rtol"], atol=cfg["atol"])
    rho_emp, limited = table.empirical_rho()
    summary = {"cells": len(table.rows),
               "converged": sum(bool(r["converged"]) for r in table.rows),
               "resolved": sum(bool(r["resolved"]) for r in table.rows),
               "failed": sum(not r["status"].startswith("ok") for r in table.rows),
               "empirical_rho": rho_emp, "empirical_rho_grid_limited": limited}
    log.info("scan summary %s", summary)
    return {"table": table, "summary": summary}, True


def _bkar_functions(n: int, which: str):
    funcs = {"exp": ExpLinear(n), "product": ProductLinear(n), "cos": CosLinear(n),
             "constant": Constant(n)}
    return funcs if which == "all" else {which: funcs[which]}


def run_bkar(cfg: RunConfig) -> tuple[dict, bool]:
    n = cfg["n"]
    scheme = WScheme(order=cfg["w_order"])
    residuals = {name: bkar_exactness_check(f, scheme)
                 for name, f in _bkar_functions(n, cfg["function"]).items()}
    forests = len(enumerate_forests(n))
    trees = len(spanning_trees(n))
    cayley = n ** (n - 2) if n >= 2 else 1
    ok = (max(residuals.values()) < BKAR_TOL and forests == FOREST_COUNTS[n] and trees == cayley)
    return {"n": n, "residuals": residuals, "tolerance": BKAR_TOL, "forests": forests,
            "expected_forests": FOREST_COUNTS[n], "spanning_trees": trees,
            "cayley": cayley, "ok": ok}, ok


def cardioid_points(count: int, rho: float, seed: int) -> list[CouplingPoint]:
    """``count`` reproducible points strictly inside the cardioid."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        gamma = float(rng.uniform(-0.49, 0.49) * math.pi)
        modulus = float(rng.uniform(0.05, 0.95)) * rho * math.cos(gamma) ** 2
        out.append(CouplingPoint.from_polar(modulus, gamma, rho))
    return out


def run_resolvent(cfg: RunConfig) -> tuple[dict, bool]:
    N = cfg.slice_config.N
    if cfg["g"] is not None or cfg["g_polar"] is not None:
        points = [cfg.coupling()]
    else:
        points = cardioid_points(cfg["points"], cfg["rho"], cfg["seed"])
    log.info("resolvent bound: %d points, %d samples each, seed %d", len(points), cfg["samples"],
             cfg["seed"])
    if any(not cp.in_cardioid for cp in points):
        raise ConfigError("every point must lie inside the cardioid")
    reports = [check_resolvent_bound(cp, N, cfg["samples"], seed=cfg["seed"] + i).as_dict()
               for i, cp in enumerate(points)]
    ok = all(r["ok"] for r in reports)
    return {"N": N, "points": reports, "ok": ok}, ok


def random_instance(rng: random.Random, max_pairs: int):
    """Random rational covariance and a balanced, shuffled monomial (labels may repeat)."""
    m = rng.randint(1, max_pairs)
    labels = list(range(m + 1))
    cov = {(i, j): Fraction(rng.randint(-6, 6), rng.randint(1, 5)) for i in labels for j in labels}
    mono = [chi(rng.choice(labels)) for _ in range(m)] + [chibar(rng.choice(labels))
                                                         for _ in range(m)]
    rng.shuffle(mono)
    return cov, mono


def run_grassmann(cfg: RunConfig) -> tuple[dict, bool]:
    rng = random.Random(cfg["seed"])
    mismatches = []
    for i in range(cfg["instances"]):
        cov, mono = random_instance(rng, cfg["max_pairs"])
        a, b = grassmann_gaussian(cov, mono), brute_force_oracle(cov, mono)
        if a != b:
            mismatches.append({"instance": i, "determinant": str(a), "brute_force": str(b)})
    ok = not mismatches
    return {"instances": cfg["instances"], "max_pairs": cfg["max_pairs"], "seed": cfg["seed"],
            "mismatches": mismatches, "ok": ok}, ok


RUNNERS = {
    "oracle": run_oracle, "lve": run_lve, "series": run_series, "scan": run_scan,
    "bkar-check": run_bkar, "resolvent-bound": run_resolvent, "grassmann-check": run_grassmann,
}


# --- argument parsing ----------------------------------------------------------------

def _add(p: argparse.ArgumentParser, *names: str, **kw) -> None:
    p.add_argument(*names, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlvec", description="Cumulants of the quartic U(N) vector model.")
    parser.add_argument("--version", action="version", version=f"mlvec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        _add(p, "--config", help="INI file; flags override its values")
        _add(p, "--out", help="result file (default: stdout)")
        _add(p, "--log", help="log file (default: OUT.log, or stderr)")
        _add(p, "--seed")
        _add(p, "--threads", help="worker cap (fallback: MLVE_THREADS)")

    def model(p, g_default):
        _add(p, "--M", help="slice ratio (default 2)")
        _add(p, "--jmax", help="top slice, N = M^jmax (default 2)")
        _add(p, "--jmin", help="bottom slice (default 1)")
        _add(p, "--g", help=f"coupling as RE or RE,IM (default {g_default})")
        _add(p, "--g-polar", dest="g_polar", help="coupling as MODULUS,GAMMA with g = |g| e^{2i gamma}")
        _add(p, "--rho", help=f"cardioid radius (default {DEFAULT_RHO})")

    def observable(p):
        _add(p, "--k", help="number of external legs (0 gives log Z)")
        _add(p, "--p", help="comma-separated momenta, one per leg")

    p = sub.add_parser("oracle", help="exact sigma quadrature")
    common(p), model(p, "0"), observable(p)
    _add(p, "--mc", action="store_const", const=True, help="add a phi-space Monte Carlo estimate")
    _add(p, "--samples")

    p = sub.add_parser("lve", help="truncated multiscale tree expansion")
    common(p), model(p, "0.02"), observable(p)
    _add(p, "--n-max", dest="n_max")
    _add(p, "--rtol"), _add(p, "--atol")
    _add(p, "--compare", action="store_const", const=True, help="also run the oracle")

    p = sub.add_parser("series", help="exact Wick coefficients and Borel-Pade sum")
    common(p), model(p, "none"), observable(p)
    _add(p, "--order")
    _add(p, "--reexpand", action="store_const", const=True,
         help="also extract the coefficients from the tree expansion")
    _add(p, "--n-max", dest="n_max")

    p = sub.add_parser("scan", help="convergence scan over (|g|, gamma)")
    common(p), model(p, "unused"), observable(p)
    _add(p, "--rho-grid", dest="rho_grid", help="|g| grid, start:step:stop or a,b,c")
    _add(p, "--angle-grid", dest="angle_grid", help="gamma grid, start:step:stop or a,b,c")
    _add(p, "--boundary", action="store_const", const=True, help="append gamma = pi/2")
    _add(p, "--no-oracle", dest="oracle", action="store_const", const=False)
    _add(p, "--plot", action="store_const", const=True, help="write OUT.png next to the CSV")
    _add(p, "--n-max", dest="n_max")
    _add(p, "--rtol"), _add(p, "--atol")

    p = sub.add_parser("bkar-check", help="forest formula exactness and counts")
    common(p)
    _add(p, "--n")
    _add(p, "--function", help="exp, product, cos, constant or all")
    _add(p, "--w-order", dest="w_order")

    p = sub.add_parser("resolvent-bound", help="sample |R^-1| against 2/cos(gamma)")
    common(p), model(p, "random cardioid points")
    _add(p, "--samples")
    _add(p, "--points")

    p = sub.add_parser("grassmann-check", help="determinant vs exterior-algebra oracle")
    common(p)
    _add(p, "--instances")
    _add(p, "--max-pairs", dest="max_pairs")
    return parser


def _glue_negative_values(argv: Sequence[str]) -> list[str]:
    """``--angle-grid -1.5:0.1:1.5`` -> ``--angle-grid=-1.5:0.1:1.5``.

    argparse takes a dash-led token for an option unless it is a plain
    negative number; grids and complex couplings are not.
    """
    out: list[str] = []
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None and nxt.startswith("-")
                and len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            next(it, None)
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_file = args.pop("config", None)
    handler = None
    try:
        cfg = resolve_config(command, args, config_file)
        handler = _setup_log(cfg)
        result, ok = RUNNERS[command](cfg)
        if command == "scan":
            table = result["table"]
            _write(dumps_csv(table.rows, COLUMNS), cfg["out"])
            if cfg["out"]:
                meta = _envelope(cfg, {"summary": result["summary"], "columns": list(COLUMNS)})
                _write(dumps_json(meta), cfg["out"] + ".meta.json")
                if cfg["plot"]:
                    from .plotting import plot_scan
                    png = plot_scan(table, Path(cfg["out"]).with_suffix(".png"))
                    log.info("plot written to %s", png)
        else:
            _write(dumps_json(_envelope(cfg, result)), cfg["out"])
        if not ok:
            log.error("check failed")
            print(f"mlvec {command}: check failed", file=sys.stderr)
            return EXIT_NUMERICAL
        return EXIT_OK
    except (ConfigError, CapExceeded, OrderTooHigh, UnbalancedMonomial) as exc:
        print(f"mlvec {command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MLVEError as exc:
        msg = f"mlvec {command}: numerical failure ({type(exc).__name__}): {exc}"
        log.error(msg)
        print(msg, file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        if handler is not None:
            log.removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
