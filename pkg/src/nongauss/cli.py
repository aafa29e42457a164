"""Command-line front end: ``nongauss {eigs,weights,wigner,sweep,threshold,verify}``.

Every verb writes CSV (``#`` metadata lines, header, rows) or JSON (a
``metadata`` object and a ``rows`` list) to ``--out`` or stdout. Settings
come from an optional JSON ``--config`` file; command-line flags win.

Exit codes: 0 success, 2 usage or configuration error, 3 degenerate
physics, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .conditional_state import (
    DEFAULT_BANDWIDTH_HZ,
    make_scenario,
    origin_sweep,
    threshold_report,
    wigner_grid,
)
from .exceptions import ConfigError, DegenerateScenarioError, NonGaussError
from .oracles import run_verification
from .pswf import BandTimeProduct, kmax_cap, solve_spheroidal
from .spectral_modes import Scheme, weight_kmax

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4

DEFAULT_SWEEP_BT = (0.0, 0.5, 1.0, 3.0)
DEFAULT_N_RANGE = (0.0, 10000.0, 21)

_ALIASES = {"B": "bandwidth_hz", "T": "duration_s", "kmax": "k_max"}


@dataclass
class ScenarioConfig:
    """Resolved settings for one CLI invocation (SI units throughout)."""

    scheme: str = Scheme.CW_FILTERED.value
    bt: float | None = None
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    duration_s: float | None = None
    gamma: float = 0.35
    tau: float = 0.9
    eta: float = 0.1
    dark_rate: float = 0.0
    k_max: int | None = None
    x_range: tuple = (-4.0, 4.0)
    p_range: tuple = (-4.0, 4.0)
    nx: int = 81
    np: int = 81
    format: str = "csv"
    bt_list: list | None = None
    n_list: list | None = None
    n_range: tuple | None = None
    n_max: float = 1e5
    seed: int = 0
    draws: int = 20

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            key = _ALIASES.get(key, key)
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def validate(self):
        try:
            self.scheme = Scheme(self.scheme).value
        except ValueError:
            choices = ", ".join(s.value for s in Scheme)
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {choices}") from None
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.bt is not None and self.duration_s is not None:
            raise ConfigError("give bt or duration_s, not both")
        for name in ("bt", "bandwidth_hz", "duration_s", "gamma", "dark_rate", "n_max"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value < 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be > 0")
        for name in ("tau", "eta"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.k_max is not None and (int(self.k_max) != self.k_max or self.k_max < 1):
            raise ConfigError(f"k_max must be a positive integer, got {self.k_max}")
        if self.nx < 2 or self.np < 2:
            raise ConfigError("grid needs at least 2 points per axis")
        for name in ("x_range", "p_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigError(f"{name} must be increasing, got {lo}, {hi}")
        if self.draws < 0:
            raise ConfigError(f"draws must be >= 0, got {self.draws}")
        return self

    def scenario_kwargs(self):
        return dict(
            scheme=self.scheme,
            bandwidth_hz=self.bandwidth_hz,
            duration_s=self.duration_s,
            gamma=self.gamma,
            tau=self.tau,
            eta=self.eta,
            dark_rate=self.dark_rate,
            k_max=self.k_max,
        )

    def resolved_bt(self):
        """``bt`` for verbs that need one; single-mode runs default to 0."""
        if self.bt is not None:
            return self.bt
        if self.duration_s is not None:
            return self.bandwidth_hz * self.duration_s
        if self.scheme == Scheme.SINGLE_MODE.value:
            return 0.0
        raise ConfigError("this command needs --bt or --duration-s")

    def scenario(self, bt=None):
        kwargs = self.scenario_kwargs()
        if bt is None and self.duration_s is not None:
            return make_scenario(**kwargs)
        kwargs["duration_s"] = None
        return make_scenario(self.resolved_bt() if bt is None else bt, **kwargs)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) else value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _cell(value):
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def render(metadata, header, rows, fmt):
    """Serialize one output document as CSV or JSON text."""
    meta = {"tool": "nongauss", "version": __version__, **metadata}
    if fmt == "json":
        doc = {"metadata": _plain(meta), "rows": [dict(zip(header, _plain(list(r)))) for r in rows]}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(_plain(value), allow_nan=False)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def cmd_eigs(cfg):
    bt = cfg.resolved_bt()
    product = BandTimeProduct(bt)
    if cfg.k_max is None:
        trial = min(kmax_cap(), math.ceil(bt) + 30)
        basis = solve_spheroidal(product.c, trial)
        basis = basis.truncated(max(1, weight_kmax(bt, basis.chi)))
    else:
        basis = solve_spheroidal(product.c, cfg.k_max)
    rows = [(k, basis.chi[k], basis.mu[k]) for k in range(basis.k_max)]
    rows.append(("sum", float(np.sum(basis.chi)), None))
    meta = {
        "command": "eigs",
        "parameters": {"bt": bt, "c": product.c, "k_max": basis.k_max},
        "chi_underflow": basis.chi_underflow,
    }
    return meta, ["k", "chi", "mu"], rows, EXIT_OK


def cmd_weights(cfg):
    params = cfg.scenario()
    w = params.weights
    wV = w.wV if len(w.wV) else np.zeros(len(w.wS))
    rows = [(k, w.wS[k], wV[k]) for k in range(len(w.wS))]
    rows.append(("norm", w.norm, None))
    meta = {"command": "weights", "parameters": params.to_dict()}
    return meta, ["k", "w_S", "w_V"], rows, EXIT_OK


def cmd_wigner(cfg):
    params = cfg.scenario()
    result = wigner_grid(params, cfg.x_range, cfg.p_range, cfg.nx, cfg.np)
    meta = {
        "command": "wigner",
        "parameters": {**params.to_dict(), "x_range": cfg.x_range, "p_range": cfg.p_range,
                       "nx": cfg.nx, "np": cfg.np},
        "factors": result.factors.to_dict(),
        "origin_value": result.origin_value,
        "analytic_mass": result.analytic_mass,
        "grid_mass": result.grid_mass,
        "grid_error_bound": result.grid_error_bound,
        "mass_within_bound": result.mass_within_bound,
    }
    if not result.mass_within_bound:
        print("warning: grid mass outside the quadrature error bound", file=sys.stderr)
    return meta, ["x", "p", "W"], list(result.samples()), EXIT_OK


def _n_values(cfg):
    if cfg.n_list is not None:
        values = [float(v) for v in cfg.n_list]
    else:
        start, stop, num = cfg.n_range if cfg.n_range is not None else DEFAULT_N_RANGE
        if int(num) != num or num < 0:
            raise ConfigError(f"n-range count must be a nonnegative integer, got {num}")
        values = [float(v) for v in np.linspace(float(start), float(stop), int(num))]
    if not values:
        raise ConfigError("dark-rate list is empty")
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise ConfigError("dark rates must be finite and >= 0")
    return values


def cmd_sweep(cfg):
    n_values = _n_values(cfg)
    bts = list(DEFAULT_SWEEP_BT if cfg.bt_list is None else cfg.bt_list)
    if not bts:
        raise ConfigError("bt list is empty")
    rows, monotone = [], {}
    for bt in bts:
        curve = origin_sweep(cfg.scenario(float(bt)), n_values)
        rows.extend((float(bt), n, w) for n, w in curve)
        ws = [w for _, w in sorted(curve) if not math.isnan(w)]
        monotone[_cell(float(bt))] = bool(np.all(np.diff(ws) >= -1e-12))
    meta = {
        "command": "sweep",
        "parameters": {**{k: v for k, v in asdict(cfg).items() if k in _SWEEP_ECHO},
                       "bt_list": bts, "n_values": n_values},
        "monotone_in_n": monotone,
    }
    return meta, ["bt", "n", "W00"], rows, EXIT_OK


_SWEEP_ECHO = ("scheme", "bandwidth_hz", "gamma", "tau", "eta", "k_max")


def cmd_threshold(cfg):
    params = cfg.scenario()
    report = threshold_report(params, cfg.n_max)
    meta = {"command": "threshold", "parameters": {**params.to_dict(), "n_max": cfg.n_max}}
    row = (params.bt, report.threshold, report.reason, report.origin_at_zero, report.origin_at_max)
    header = ["bt", "threshold", "reason", "origin_at_zero", "origin_at_n_max"]
    return meta, header, [row], EXIT_OK


def cmd_verify(cfg):
    report = run_verification(seed=cfg.seed, draws=cfg.draws)
    meta = {
        "command": "verify",
        "parameters": {"seed": cfg.seed, "draws": cfg.draws},
        "tolerance": report["tolerance"],
        "max_deviation": report["max_deviation"],
        "passed": report["passed"],
    }
    header = ["draw", "bt", "gamma", "tau", "eta", "dark_rate", "scheme",
              "status", "max_deviation_gaussian", "max_deviation_fock"]
    rows = [
        (r["draw"], *(r["params"][k] for k in header[1:7]), r["status"],
         r["max_deviation_gaussian"], r["max_deviation_fock"])
        for r in report["results"]
    ]
    return meta, header, rows, EXIT_OK if report["passed"] else EXIT_VERIFY


COMMANDS = {
    "eigs": cmd_eigs,
    "weights": cmd_weights,
    "wigner": cmd_wigner,
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "verify": cmd_verify,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration file")
    common.add_argument("--bt", type=float, help="band-time product B*T")
    common.add_argument("--scheme", help="cw_wideband, cw_filtered, pulsed or single_mode")
    common.add_argument("--eta", type=float, help="detector efficiency")
    common.add_argument("--tau", type=float, help="beamsplitter transmittance")
    common.add_argument("--gamma", type=float, help="squeezing parameter")
    common.add_argument("--bandwidth-hz", type=float, dest="bandwidth_hz")
    common.add_argument("--duration-s", type=float, dest="duration_s")
    common.add_argument("--dark-rate", type=float, dest="dark_rate", help="counts/s")
    common.add_argument("--kmax", type=int, dest="k_max", help="number of spheroidal modes")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="nongauss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nongauss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eigs", parents=[common], help="spheroidal eigenvalues")
    sub.add_parser("weights", parents=[common], help="LO-matched mode weights")
    wig = sub.add_parser("wigner", parents=[common], help="conditional Wigner grid")
    wig.add_argument("--x-range", type=float, nargs=2, dest="x_range", metavar=("LO", "HI"))
    wig.add_argument("--p-range", type=float, nargs=2, dest="p_range", metavar=("LO", "HI"))
    wig.add_argument("--nx", type=int)
    wig.add_argument("--np", type=int)
    sweep = sub.add_parser("sweep", parents=[common], help="W(0,0) versus dark-count rate")
    sweep.add_argument("--bt-list", type=float, nargs="+", dest="bt_list")
    group = sweep.add_mutually_exclusive_group()
    group.add_argument("--n-list", type=float, nargs="*", dest="n_list")
    group.add_argument("--n-range", type=float, nargs=3, dest="n_range",
                       metavar=("START", "STOP", "NUM"))
    thr = sub.add_parser("threshold", parents=[common], help="dark-count negativity threshold")
    thr.add_argument("--n-max", type=float, dest="n_max")
    ver = sub.add_parser("verify", parents=[common], help="closed form versus oracles")
    ver.add_argument("--draws", type=int)
    return parser


def load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = ScenarioConfig.from_mapping(data)
    skip = {"command", "config", "out"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            setattr(cfg, key, value)
    # a flag for one time-scale entry point replaces the other from the file
    if args.bt is not None and args.duration_s is None:
        cfg.duration_s = None
    if args.duration_s is not None and args.bt is None:
        cfg.bt = None
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        meta, header, rows, code = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateScenarioError as exc:
        print(f"error: degenerate scenario: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, NonGaussError) as exc:
        # DomainError and TruncationError are ValueErrors: bad inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAILURE
    text = render(meta, header, rows, cfg.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
