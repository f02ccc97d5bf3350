"""``pdm-ladder`` command line: scenarios, exports and validation runs.

Usage::

    pdm-ladder potential    --config run.cfg [--profile NAME] [--lambda X] [--grid N] [--out DIR]
    pdm-ladder states       --config run.cfg [--nmax K] ...
    pdm-ladder validate     --config run.cfg ...
    pdm-ladder sweep-lambda --config run.cfg ...

The config file holds one ``key = value`` pair per line; ``#`` starts a
comment.  Keys: profile, expr, xmin, xmax, n, stencil, hbar, delta_e,
lambda, nmax, sweep, outdir.  Flags given on the command line win over the
file.

Exit codes: 0 success, 1 validation failure, 2 I/O or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .catalog import CATALOG, catalog_entry
from .errors import InsufficientDomainError, PDMError
from .ladder import ModelParams, build_states, build_system, energy
from .plotting import IMAG, REAL, fmt_lambda, line_plot_svg
from .profile import make_profile
from .validation import THRESHOLDS, full_report, node_count

__all__ = ["Scenario", "ConfigError", "read_config", "scenario_from_mapping", "main",
           "cmd_potential", "cmd_states", "cmd_validate", "cmd_sweep_lambda", "report_schema"]

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
MIN_GRID = 201
MAX_NMAX = 12

CONFIG_KEYS = ("profile", "expr", "xmin", "xmax", "n", "stencil", "hbar", "delta_e",
               "lambda", "nmax", "sweep", "outdir", "a")


class ConfigError(PDMError, ValueError):
    """Bad or inconsistent scenario settings."""


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description."""

    profile: str
    expr: str
    domain: tuple
    params: ModelParams
    n: int = 4001
    stencil: int = 4
    nmax: int = 6
    sweep: tuple = (0.0, 1.0, 2.0, 4.0)
    outdir: str = "out"
    decay_tol: float = 1e-12
    custom: bool = False

    def __post_init__(self):
        if self.n < MIN_GRID:
            raise ConfigError(f"grid size n = {self.n} is below the minimum {MIN_GRID}")
        if not 0 <= self.nmax <= MAX_NMAX:
            raise ConfigError(f"nmax = {self.nmax} outside [0, {MAX_NMAX}]")
        if self.stencil not in (2, 4):
            raise ConfigError(f"stencil must be 2 or 4, got {self.stencil}")
        if not self.sweep:
            raise ConfigError("sweep list is empty")
        if len(set(self.sweep)) != len(self.sweep) or min(self.sweep) < 0:
            raise ConfigError("sweep values must be distinct and >= 0")
        if not self.domain[0] < self.domain[1]:
            raise ConfigError(f"need xmin < xmax, got {self.domain}")

    def mass_profile(self):
        return make_profile(self.expr, self.domain, name=self.profile)

    def system(self, lam=None):
        params = self.params if lam is None else replace(self.params, lam=float(lam))
        return build_system(self.mass_profile(), params, n=self.n, stencil=self.stencil,
                            decay_tol=self.decay_tol)

    def to_dict(self):
        p = self.params
        return {
            "profile": self.profile, "expr": self.expr, "custom": self.custom,
            "xmin": self.domain[0], "xmax": self.domain[1], "n": self.n,
            "stencil": self.stencil, "hbar": p.hbar, "delta_e": p.delta_e, "lambda": p.lam,
            "a": p.a, "nmax": self.nmax, "sweep": list(self.sweep), "decay_tol": self.decay_tol,
        }


# --- config -------------------------------------------------------------------

def read_config(path) -> dict:
    """Parse a flat ``key = value`` file into a dict of strings."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _num(cfg, key, kind=float, default=None):
    if key not in cfg or cfg[key] in (None, ""):
        return default
    value = cfg[key]
    try:
        if kind is int:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} = {value!r} is not a valid {kind.__name__}") from None


def _sweep(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    try:
        return tuple(float(v) for v in str(value).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"sweep = {value!r} is not a comma-separated list of numbers") from None


def scenario_from_mapping(cfg: dict) -> Scenario:
    """Resolve a mapping of config keys (strings or numbers) into a Scenario."""
    name = cfg.get("profile") or None
    expr = cfg.get("expr") or None
    if name and expr:
        raise ConfigError("give either profile (catalog name) or expr (custom expression), not both")
    if not name and not expr:
        raise ConfigError(f"no profile given; use a catalog name ({', '.join(CATALOG)}) or expr")
    if name:
        try:
            entry = catalog_entry(name)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        expr, domain, n_default, tol = entry.expr, entry.domain, entry.grid, entry.decay_tol
    else:
        domain, n_default, tol, name = None, 4001, 1e-12, "custom"
    xmin = _num(cfg, "xmin", default=None if domain is None else domain[0])
    xmax = _num(cfg, "xmax", default=None if domain is None else domain[1])
    if xmin is None or xmax is None:
        raise ConfigError("a custom expr needs xmin and xmax")
    a = _num(cfg, "a")
    try:
        params = ModelParams(hbar=_num(cfg, "hbar", default=1.0),
                             delta_e=_num(cfg, "delta_e", default=1.0),
                             lam=_num(cfg, "lambda", default=0.2),
                             a=a, expert=a is not None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sweep = _sweep(cfg["sweep"]) if cfg.get("sweep") not in (None, "") else (0.0, 1.0, 2.0, 4.0)
    return Scenario(
        profile=name, expr=expr, domain=(float(xmin), float(xmax)), params=params,
        n=_num(cfg, "n", int, n_default), stencil=_num(cfg, "stencil", int, 4),
        nmax=_num(cfg, "nmax", int, 6), sweep=sweep, outdir=cfg.get("outdir") or "out",
        decay_tol=tol, custom=name == "custom",
    )


# --- output -------------------------------------------------------------------

_dir_locks: dict = {}
_dir_locks_guard = threading.Lock()


def _lock_for(path):
    key = os.path.realpath(path)
    with _dir_locks_guard:
        return _dir_locks.setdefault(key, threading.Lock())


def _prepare(outdir):
    os.makedirs(outdir, exist_ok=True)
    if not os.access(outdir, os.W_OK):
        raise PermissionError(13, "output directory is not writable", outdir)


def _write_text(outdir, name, text):
    path = os.path.join(outdir, name)
    with _lock_for(outdir):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return path


def _csv_text(header, columns):
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns]) + 0.0  # no "-0"
    buf = [",".join(header)]
    buf.extend(",".join(f"{v:.12g}" for v in row) for row in data)
    return "\n".join(buf) + "\n"


def _json_text(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _title(sc, what, lam=None):
    lam = sc.params.lam if lam is None else lam
    return f"{what}: {sc.profile}, m(x) = {sc.expr}, λ = {fmt_lambda(lam)}"


# --- commands -----------------------------------------------------------------

def cmd_potential(sc: Scenario) -> int:
    s = sc.system()
    _prepare(sc.outdir)
    _write_text(sc.outdir, "potential.csv",
                _csv_text(["x", "m", "F", "V_R", "V_I"], [s.x, s.m, s.F, s.v_r, s.v_i]))
    svg = line_plot_svg(
        [dict(x=s.x, y=s.v_r, label="V_R", color="black", style="-"),
         dict(x=s.x, y=s.v_i, label="V_I", color="black", style="--")],
        _title(sc, "potential"), ylabel="V(x)")
    _write_text(sc.outdir, "potential.svg", svg)
    return EXIT_OK


def cmd_states(sc: Scenario) -> int:
    s = sc.system()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        states = build_states(s, sc.nmax)
    _prepare(sc.outdir)
    header, cols = ["x"], [s.x]
    for n, psi in enumerate(states.states):
        header += [f"re_psi_{n}", f"im_psi_{n}"]
        cols += [psi.real, psi.imag]
    _write_text(sc.outdir, "states.csv", _csv_text(header, cols))
    for n, psi in enumerate(states.states):
        svg = line_plot_svg(
            [dict(x=s.x, y=psi.real, label=f"Re psi_{n}", color=REAL),
             dict(x=s.x, y=psi.imag, label=f"Im psi_{n}", color=IMAG)],
            _title(sc, f"state n = {n}"), ylabel="psi(x)")
        _write_text(sc.outdir, f"state_{n}.svg", svg)
    spectrum = {
        "energies": list(states.energies),
        "norm_constants": [[c.real, c.imag] for c in states.norm_constants],
        "params": sc.to_dict(),
        "precision_warning": states.precision_warning,
    }
    _write_text(sc.outdir, "spectrum.json", _json_text(spectrum))
    return EXIT_OK


def cmd_validate(sc: Scenario) -> int:
    s = sc.system()
    report = full_report(s, n_max=sc.nmax, scenario=sc.to_dict())
    _prepare(sc.outdir)
    _write_text(sc.outdir, "report.json", _json_text(_finite(report.to_dict())))
    if not report.passed:
        print(f"validation failed: {', '.join(report.failed_sections)}", file=sys.stderr)
        for key in report.failed_sections:
            hint = report.sections[key].get("hint")
            if hint:
                print(f"  {key}: {hint}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _sweep_entry(sc, lam):
    s = sc.system(lam)
    psi = build_states(s, 0).states[0]
    floor = THRESHOLDS["node_amplitude_floor"]
    return {
        "lambda": float(lam), "x": s.x, "re": psi.real,
        "node_count_re": node_count(psi, "real", floor),
        "node_count_im": node_count(psi, "imaginary", floor),
        "E0": energy(0, s.params),
    }


def cmd_sweep_lambda(sc: Scenario, workers=None) -> int:
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda lam: _sweep_entry(sc, lam), sc.sweep))
    _prepare(sc.outdir)
    text = _csv_text(["λ", "node_count_re", "node_count_im", "E₀"],
                     [[r[k] for r in rows] for k in ("lambda", "node_count_re", "node_count_im", "E0")])
    _write_text(sc.outdir, "sweep.csv", text)
    lams = ", ".join(fmt_lambda(r["lambda"]) for r in rows)
    svg = line_plot_svg(
        [dict(x=r["x"], y=r["re"], label=f"λ = {fmt_lambda(r['lambda'])}") for r in rows],
        f"Re psi_0: {sc.profile}, m(x) = {sc.expr}, λ ∈ {{{lams}}}", ylabel="Re psi_0(x)")
    _write_text(sc.outdir, "sweep.svg", svg)
    return EXIT_OK


COMMANDS = {
    "potential": cmd_potential,
    "states": cmd_states,
    "validate": cmd_validate,
    "sweep-lambda": cmd_sweep_lambda,
}


def _finite(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_schema() -> dict:
    """The JSON schema that ``report.json`` conforms to."""
    text = resources.files(__package__).joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# --- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="pdm-ladder",
                                description="Ladder-operator solutions of position-dependent-mass models.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value scenario file")
    p.add_argument("--profile", help=f"catalog profile ({', '.join(CATALOG)})")
    p.add_argument("--expr", help="custom mass expression m(x); needs xmin/xmax")
    p.add_argument("--lambda", dest="lam", type=float, help="imaginary ladder constant")
    p.add_argument("--nmax", type=int, help=f"highest level (0..{MAX_NMAX})")
    p.add_argument("--grid", type=int, help=f"number of grid points (>= {MIN_GRID})")
    p.add_argument("--stencil", type=int, choices=(2, 4))
    p.add_argument("--out", help="output directory")
    p.add_argument("--expert-a", dest="a", type=float,
                   help="override the ladder scale a (breaks the factorization; diagnostics only)")
    return p


def _merge(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    if args.profile is not None:
        cfg.pop("expr", None)
        cfg["profile"] = args.profile
    if args.expr is not None:
        cfg.pop("profile", None)
        cfg["expr"] = args.expr
    for key, val in (("lambda", args.lam), ("nmax", args.nmax), ("n", args.grid),
                     ("stencil", args.stencil), ("outdir", args.out), ("a", args.a)):
        if val is not None:
            cfg[key] = str(val)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = scenario_from_mapping(_merge(args))
        return COMMANDS[args.command](sc)
    except InsufficientDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        where = f": {exc.filename}" if exc.filename else ""
        print(f"error: cannot write output ({exc.strerror or exc}){where}", file=sys.stderr)
        return EXIT_ERROR
    except (PDMError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # keep the exit-code contract even for unexpected failures
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
