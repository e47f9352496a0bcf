"""Command-line entry point: ``memchannel <command> [options]``.

Every option can also be set in a ``key = value`` config file passed with
``--config``; command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import __version__
from .chain import ChainSpec, pst_provider, spectral_provider
from .entanglement import default_grid, distribution_profile, zero_windows
from .exceptions import BudgetError, GuardError
from .maps import map_report
from .memory import METHODS, fidelity_sequence, nth_use_fidelity
from .oracle import MAX_LENGTH, Oracle
from .validation import DEFAULT_TOLERANCES, LOCC, run_checks

TAU = np.pi / 2
COMMANDS = ("amplitudes", "sweep-uses", "sweep-length", "map", "concurrence", "validate")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_BUDGET = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).replace(",", " ").split()]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (parser, help)
OPTIONS = {
    "length": (int, "chain length N"),
    "scheme": (str, "coupling scheme: pst, uniform or custom"),
    "couplings": (_floats, "comma-separated couplings (custom scheme)"),
    "uses": (int, "number of channel uses n"),
    "times": (_floats, "explicit readout intervals t_1,...,t_n"),
    "deltas": (_floats, "relative timing errors for sweep-uses"),
    "delta": (float, "relative timing error: t_i = (1+delta) pi/2"),
    "t_min": (float, "start of time grid"),
    "t_max": (float, "end of time grid"),
    "points": (int, "number of grid points"),
    "length_min": (int, "smallest N in sweep-length"),
    "length_max": (int, "largest N in sweep-length"),
    "length_step": (int, "N increment in sweep-length"),
    "t1": (float, "first readout interval (map)"),
    "t2": (float, "second readout interval (map)"),
    "oracle": (_bool, "cross-check against the many-body simulation"),
    "method": (str, "memory-factor method: " + ", ".join(METHODS)),
    "format": (str, "output format: csv or json"),
    "out": (str, "output path (default stdout)"),
    "seed": (int, "seed for randomized checks"),
    "jobs": (int, "worker processes"),
}

COMMON_DEFAULTS = {"length": 6, "scheme": "pst", "format": "csv", "seed": 0, "jobs": 1, "method": "auto"}
COMMAND_DEFAULTS = {
    "amplitudes": {"t_min": 0.0, "t_max": math.pi, "points": 201},
    "sweep-uses": {"uses": 10, "deltas": [0.0, 0.01, 0.02, 0.05]},
    "sweep-length": {"uses": 5, "delta": 0.01, "length_min": 3, "length_max": 7500, "length_step": 1},
    "map": {"delta": 0.05, "length": 6},
    "concurrence": {"length": 10, "points": 600},
    "validate": {},
}


@dataclass
class RunConfig:
    command: str
    length: int = 6
    scheme: str = "pst"
    couplings: list = field(default_factory=list)
    uses: int | None = None
    times: list | None = None
    deltas: list | None = None
    delta: float | None = None
    t_min: float | None = None
    t_max: float | None = None
    points: int | None = None
    length_min: int | None = None
    length_max: int | None = None
    length_step: int | None = None
    t1: float | None = None
    t2: float | None = None
    oracle: bool | None = None
    method: str = "auto"
    format: str = "csv"
    out: str | None = None
    seed: int = 0
    jobs: int = 1
    tolerances: dict = field(default_factory=dict)

    def chain(self) -> ChainSpec:
        if self.scheme == "custom":
            return ChainSpec.custom(self.couplings)
        if self.scheme == "uniform":
            return ChainSpec.uniform(self.length, self.couplings[0] if self.couplings else 1.0)
        return ChainSpec(self.length, self.scheme)

    def validate(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.points is not None and self.points < 1:
            raise ConfigError("grid needs at least one point")
        if self.uses is not None and self.uses < 1:
            raise ConfigError("uses must be >= 1")
        if self.deltas is not None and not self.deltas:
            raise ConfigError("deltas must be non-empty")
        if self.length_min is not None and self.length_max is not None:
            if self.length_min < 3 or self.length_max < self.length_min or self.length_step < 1:
                raise ConfigError("empty or invalid length range")
        if self.t_min is not None and self.t_max is not None and self.t_max < self.t_min:
            raise ConfigError("empty time range")
        try:
            self.chain()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read(), source=path)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["run"].items()}


def build_config(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    merged: dict = {}
    merged.update(COMMON_DEFAULTS)
    merged.update(COMMAND_DEFAULTS[command])
    tolerances = {}
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if raw is None:
                continue
            if key.startswith("tol_"):
                tolerances[key[4:]] = raw
                continue
            if key == "tol":
                for item in raw:
                    name, _, value = item.partition("=")
                    tolerances[name] = value
                continue
            if key not in OPTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                merged[key] = OPTIONS[key][0](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    try:
        tolerances = {k: float(v) for k, v in tolerances.items()}
    except ValueError as exc:
        raise ConfigError(f"bad tolerance value: {exc}") from exc
    unknown = set(tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    cfg = RunConfig(command=command, tolerances=tolerances, **merged)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def metadata(cfg: RunConfig, extra: dict | None = None) -> dict:
    cfg_echo = {k: v for k, v in asdict(cfg).items() if k not in ("out", "jobs")}
    meta = {
        "command": cfg.command,
        "config": cfg_echo,
        "versions": {"memchannel": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }
    if extra:
        meta.update(extra)
    return _jsonable(meta)


def render(cfg: RunConfig, columns: list, rows: list, extra: dict | None = None) -> str:
    meta = metadata(cfg, extra)
    if cfg.format == "json":
        body = {"metadata": meta, "columns": columns, "rows": _jsonable(rows)}
        return json.dumps(body, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _pmap(fn, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        # map yields in submission order
        return list(pool.map(fn, items))


def _provider(spec: ChainSpec):
    return pst_provider(spec.length) if spec.scheme == "pst" else spectral_provider(spec)


# --------------------------------------------------------------------------
# commands


def cmd_amplitudes(cfg: RunConfig):
    spec = cfg.chain()
    prov = _provider(spec)
    rows = []
    for t in np.linspace(cfg.t_min, cfg.t_max, cfg.points):
        a = prov(float(t))
        rows.append([float(t), a.f11.real, a.f11.imag, a.f1N.real, a.f1N.imag])
    return ["t", "re_f11", "im_f11", "re_f1N", "im_f1N"], rows, {}


def _uses_column(task):
    spec, times, method = task
    return fidelity_sequence(times, _provider(spec), method=method)


def cmd_sweep_uses(cfg: RunConfig):
    spec = cfg.chain()
    if cfg.times:
        schedules = [("times", list(cfg.times))]
    else:
        schedules = [(f"delta={d:g}", [(1 + d) * TAU] * cfg.uses) for d in cfg.deltas]
    cols = _pmap(_uses_column, [(spec, times, cfg.method) for _, times in schedules], cfg.jobs)
    n = len(schedules[0][1])
    rows = [[k + 1] + [c[k] for c in cols] for k in range(n)]
    columns = ["n"] + [f"F_{label}" for label, _ in schedules]
    return columns, rows, {"locc_limit": LOCC, "tau": TAU}


def cmd_sweep_length(cfg: RunConfig):
    if cfg.scheme != "pst":
        raise ConfigError("sweep-length needs the closed-form PST amplitudes (scheme = pst)")
    lengths = np.arange(cfg.length_min, cfg.length_max + 1, cfg.length_step)
    prov = pst_provider(lengths)
    t = (1 + cfg.delta) * TAU
    fids = [np.broadcast_to(nth_use_fidelity([t] * k, prov, method="determinant"), lengths.shape) for k in range(1, cfg.uses + 1)]
    rows = [[int(n)] + [float(f[i]) for f in fids] for i, n in enumerate(lengths)]
    below = {}
    for k, f in enumerate(fids, start=1):
        hit = np.nonzero(f <= LOCC)[0]
        below[f"F_{k}"] = int(lengths[hit[0]]) if len(hit) else None
    columns = ["N"] + [f"F_{k}" for k in range(1, cfg.uses + 1)]
    return columns, rows, {"locc_limit": LOCC, "first_N_at_or_below_locc": below}


def cmd_map(cfg: RunConfig):
    spec = cfg.chain()
    t_default = (1 + cfg.delta) * TAU
    t1 = cfg.t1 if cfg.t1 is not None else t_default
    t2 = cfg.t2 if cfg.t2 is not None else t_default
    use_oracle = cfg.oracle if cfg.oracle is not None else spec.length <= MAX_LENGTH
    oracle = Oracle(spec) if use_oracle else None
    report = map_report(t1, t2, _provider(spec), oracle)
    rows = []
    for key, value in report.items():
        if isinstance(value, list):
            rows.extend([f"{key}[{i}]", v] for i, v in enumerate(value))
        else:
            rows.append([key, "" if value is None else value])
    return ["quantity", "value"], rows, {}


def _concurrence_chunk(task):
    spec, n, grid = task
    return distribution_profile(n, spec, grid)


def cmd_concurrence(cfg: RunConfig):
    spec = cfg.chain()
    if cfg.t_min is None and cfg.t_max is None:
        grid = default_grid(cfg.points)
    else:
        grid = np.linspace(cfg.t_min or 0.0, math.pi if cfg.t_max is None else cfg.t_max, cfg.points)
    chunks = np.array_split(grid, cfg.jobs)
    tasks = [(spec, n, g) for n in (1, 2) for g in chunks if len(g)]
    parts = _pmap(_concurrence_chunk, tasks, cfg.jobs)
    half = len(parts) // 2
    c1, c2 = np.concatenate(parts[:half]), np.concatenate(parts[half:])
    rows = [[float(t), a, b] for t, a, b in zip(grid, c1, c2)]
    windows = zero_windows(grid, c2)
    extra = {
        "zero_windows_C2": windows,
        "widest_zero_window_C2": max((b - a for a, b in windows), default=0.0),
        "zero_threshold": 1e-12,
    }
    return ["t", "C1", "C2"], rows, extra


def cmd_validate(cfg: RunConfig):
    results = run_checks(cfg.seed, cfg.tolerances)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail} ({r.seconds:.2f}s)", file=sys.stderr)
    rows = [[r.name, r.passed, r.detail] for r in results]
    return ["check", "passed", "detail"], rows, {"all_passed": all(r.passed for r in results)}


HANDLERS = {
    "amplitudes": cmd_amplitudes,
    "sweep-uses": cmd_sweep_uses,
    "sweep-length": cmd_sweep_length,
    "map": cmd_map,
    "concurrence": cmd_concurrence,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    for key, (_, help_text) in OPTIONS.items():
        flag = "--" + key.replace("_", "-")
        common.add_argument(flag, dest=key, default=None, help=help_text)
    common.add_argument("--tol", action="append", default=None, metavar="NAME=VALUE", help="tolerance override")
    parser = argparse.ArgumentParser(prog="memchannel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__.replace("cmd_", ""))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which is also our config-error code
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, flags)
        columns, rows, extra = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, GuardError) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = render(cfg, columns, rows, extra)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "validate" and not extra["all_passed"]:
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
