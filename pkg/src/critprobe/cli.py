"""``probe`` command-line driver.

Settings come from defaults, then an optional ``key = value`` file
(``--config``), then flags. Every output file starts with ``#`` lines that
echo the resolved settings as ``# config: key = value``; such a file is
itself accepted by ``--config`` and reproduces the run.

Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .chain import Boundary, ChainSpec, SpectrumError, spectrum
from .correlations import correlation_sweep, averaged_correlations, default_anchor
from .dsf import TransformConfig, dsf
from .dynamics import basis_state, concurrence_trajectory
from .pfaffian import SingularPivotError
from .pipeline import coupling_sweep, entanglement_times, fidelity_curve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SUBCOMMANDS = ("spectrum", "correlation", "dsf", "couplings", "dynamics", "fidelity", "sweep")


class ConfigError(Exception):
    """Bad setting; ``key`` and ``line`` locate it."""

    def __init__(self, key: str, reason: str, line: str | int | None = None):
        self.key, self.reason, self.line = key, reason, line
        super().__init__(f"{key}: {reason}")

    def record(self) -> str:
        where = f" line={self.line}" if self.line is not None else ""
        return f"error=config key={self.key}{where} reason={self.reason}"


@dataclass
class RunConfig:
    n_sites: int = 40
    gamma: float = 1.0
    j: float | None = None
    mu: float = 1.0
    j_a: float = 0.1
    j_b: float = 0.1
    lambdas: str = "0.5:1.5:21"
    epsilon: float = 0.15
    t_max: float = 40.0
    dt: float = 0.05
    boundary: str = "open"
    include_n0: bool = True
    anchor: str = "center"
    k: float = 0.0
    omega: str = "-3:3:121"
    times: str = "auto"
    initial: str = "eg"
    threshold: float = 0.99
    out: str = "-"
    sidecar: bool = False
    threads: int = 0

    # -- derived views -----------------------------------------------------
    def lambda_grid(self) -> np.ndarray:
        return parse_grid(self.lambdas, "lambda")

    def template(self) -> ChainSpec:
        return ChainSpec(self.n_sites, self.gamma, 0.0, Boundary(self.boundary))

    def transform(self) -> TransformConfig:
        return TransformConfig(epsilon=self.epsilon, t_max=self.t_max, dt=self.dt)

    def anchor_site(self) -> int | None:
        """Integer anchor, or ``None`` for the all-pairs average."""
        if self.anchor == "center":
            return default_anchor(self.n_sites)
        if self.anchor == "all":
            return None
        return int(self.anchor)

    def echo(self) -> list[str]:
        return [f"{f.name} = {_fmt_setting(getattr(self, f.name))}" for f in fields(self)]


# setting name -> (type, flag dest); file keys are the field names plus aliases
_TYPES = {
    "n_sites": int, "gamma": float, "j": float, "mu": float, "j_a": float, "j_b": float,
    "lambdas": str, "epsilon": float, "t_max": float, "dt": float, "boundary": str,
    "include_n0": bool, "anchor": str, "k": float, "omega": str, "times": str,
    "initial": str, "threshold": float, "out": str, "sidecar": bool, "threads": int,
}
_ALIASES = {"n": "n_sites", "lambda": "lambdas", "ja": "j_a", "jb": "j_b", "tmax": "t_max",
            "include-n0": "include_n0"}
_TYPE_NAMES = {int: "integer", float: "real", bool: "boolean", str: "string"}


def _fmt_setting(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key: str, raw: str, line) -> object:
    kind = _TYPES[key]
    text = raw.strip()
    if key == "j" and text.lower() == "none":
        return None
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
    except ValueError:
        raise ConfigError(key, f"expected {_TYPE_NAMES[kind]}, got {text!r}", line) from None
    return text


def parse_grid(text: str, key: str) -> np.ndarray:
    """``START:STOP:COUNT`` (inclusive) or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(key, f"expected START:STOP:COUNT or a number, got {text!r}") from None
    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError(key, f"grid {text!r} is empty or not finite")
    if count == 1:
        if start != stop:
            raise ConfigError(key, f"single-point grid needs START == STOP, got {text!r}")
        return np.array([start])
    return np.linspace(start, stop, count)


def _canonical(key: str, line) -> str:
    name = key.strip().lower().replace("-", "_")
    name = _ALIASES.get(key.strip().lower(), _ALIASES.get(name, name))
    if name not in _TYPES:
        raise ConfigError(key.strip(), "unknown setting", line)
    return name


def read_config_file(path: str) -> dict[str, object]:
    """Settings from a ``key = value`` file or a previous output header."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    echo = bool(lines) and lines[0].startswith("# probe")
    body, numbers = [], []
    for number, line in enumerate(lines, 1):
        if echo:
            if not line.startswith("# config:"):
                continue
            line = line[len("# config:"):]
        body.append(line)
        numbers.append(number)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[probe]\n" + "\n".join(body))
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = numbers[lineno - 2] if lineno and 2 <= lineno <= len(numbers) + 1 else None
        raise ConfigError("config", f"malformed file {path}: {type(exc).__name__}", where) from None
    out = {}
    for key, raw in parser["probe"].items():
        where = next((n for n, text in zip(numbers, body)
                      if text.split("=", 1)[0].strip() == key), None)
        name = _canonical(key, where)
        out[name] = _coerce(name, raw, where)
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="probe", description="Critical-chain probe: spectra, "
                                "correlations, structure factors and induced qubit couplings.")
    def fail(message):
        raise ConfigError("argv", " ".join(message.split()))

    p.error = fail
    p.add_argument("--version", action="version", version=f"probe {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", metavar="FILE")
    for flag, key in (("--n", "n_sites"), ("--gamma", "gamma"), ("--j", "j"), ("--mu", "mu"),
                      ("--ja", "j_a"), ("--jb", "j_b"), ("--lambda", "lambdas"),
                      ("--epsilon", "epsilon"), ("--tmax", "t_max"), ("--dt", "dt"),
                      ("--boundary", "boundary"), ("--include-n0", "include_n0"),
                      ("--anchor", "anchor"), ("--out", "out"), ("--threads", "threads")):
        p.add_argument(flag, dest=key, metavar=_TYPE_NAMES[_TYPES[key]].upper())
    return p


def _validate(cfg: RunConfig, sub: str) -> RunConfig:
    if cfg.n_sites < 2:
        raise ConfigError("n_sites", f"must be >= 2, got {cfg.n_sites}")
    if not cfg.gamma > 0:
        raise ConfigError("gamma", f"must be > 0, got {cfg.gamma}")
    for key in ("mu", "j_a", "j_b"):
        if not math.isfinite(getattr(cfg, key)):
            raise ConfigError(key, "must be finite")
    if cfg.boundary not in ("open", "periodic"):
        raise ConfigError("boundary", f"expected open or periodic, got {cfg.boundary!r}")
    if cfg.boundary == "periodic" and sub != "spectrum":
        raise ConfigError("boundary", f"periodic chains are supported by 'spectrum' only, not {sub!r}")
    if cfg.j is not None:
        if cfg.j < 0:
            raise ConfigError("j", f"must be >= 0, got {cfg.j}")
        cfg.lambdas = repr(cfg.j / cfg.gamma)
        cfg.j = None
    grid = cfg.lambda_grid()
    if np.any(grid < 0):
        raise ConfigError("lambdas", "lambda must be >= 0")
    anchor = cfg.anchor.strip().lower()
    if anchor in ("center", "all"):
        cfg.anchor = anchor
    else:
        try:
            site = int(anchor)
        except ValueError:
            raise ConfigError("anchor", f"expected integer, 'center' or 'all', got {cfg.anchor!r}") from None
        if site == 0:
            cfg.anchor = "all"
        elif not 1 <= site <= cfg.n_sites:
            raise ConfigError("anchor", f"site {site} outside 1..{cfg.n_sites}")
        else:
            cfg.anchor = str(site)
    if sub != "spectrum":
        try:
            cfg.transform()
        except ValueError as exc:
            raise ConfigError("epsilon", str(exc)) from None
    if sub in ("fidelity",) and cfg.n_sites > 12:
        raise ConfigError("n_sites", f"fidelity needs the dense oracle, N={cfg.n_sites} > 12")
    if cfg.initial not in ("ee", "eg", "ge", "gg"):
        raise ConfigError("initial", f"expected one of ee, eg, ge, gg, got {cfg.initial!r}")
    if not 0 < cfg.threshold <= 1:
        raise ConfigError("threshold", f"must lie in (0, 1], got {cfg.threshold}")
    if sub == "dsf":
        parse_grid(cfg.omega, "omega")
    if cfg.times != "auto":
        grid = parse_grid(cfg.times, "times")
        if grid.size < 2 or grid[0] != 0.0:
            raise ConfigError("times", "dynamics grid must start at 0 and have >= 2 points")
    if cfg.threads <= 0:
        env = os.environ.get("PROBE_THREADS", "1")
        try:
            cfg.threads = max(1, int(env))
        except ValueError:
            raise ConfigError("PROBE_THREADS", f"expected integer, got {env!r}") from None
    return cfg


def parse_config(argv: list[str] | None = None) -> tuple[str, RunConfig]:
    """Resolve defaults, file and flags into ``(subcommand, RunConfig)``."""
    args = _build_parser().parse_args(argv)
    values: dict[str, object] = {}
    origin: dict[str, str] = {}
    if args.config:
        values.update(read_config_file(args.config))
        origin = {key: args.config for key in values}
    for key in _TYPES:
        raw = getattr(args, key, None)
        if raw is not None:
            values[key] = _coerce(key, raw, "argv")
            origin[key] = "argv"
    try:
        return args.subcommand, _validate(RunConfig(**values), args.subcommand)
    except ConfigError as exc:
        if exc.line is None and exc.key in origin:
            exc.line = origin[exc.key]
        raise


# -- subcommands --------------------------------------------------------------

def _num(x: float) -> str:
    return f"{x:.12e}" if math.isfinite(x) else ("inf" if x > 0 else "nan")


def _spec(cfg: RunConfig, lam: float) -> ChainSpec:
    t = cfg.template()
    return ChainSpec.from_lambda(t.n_sites, lam, t.field, t.boundary)


def cmd_spectrum(cfg):
    cols = ("lambda", "index", "energy")
    rows = []
    for lam in cfg.lambda_grid():
        for i, e in enumerate(spectrum(_spec(cfg, lam)).energies):
            rows.append((lam, i, e))
    return cols, rows


def _correlations(cfg, lam):
    spec, times = _spec(cfg, lam), cfg.transform().times
    anchor = cfg.anchor_site()
    if anchor is None:
        return averaged_correlations(spec, times)
    reach = min(anchor - 1, cfg.n_sites - anchor)
    return correlation_sweep(spec, anchor, range(-reach, reach + 1), times)


def cmd_correlation(cfg):
    cols = ("lambda", "n", "t", "re_xx", "im_xx", "re_xy", "im_xy", "re_yy", "im_yy")
    rows = []
    times = cfg.transform().times
    for lam in cfg.lambda_grid():
        corr = _correlations(cfg, lam)
        for n in sorted(corr["xx"].values):
            xx, xy, yy = (corr[ch].values[n] for ch in ("xx", "xy", "yy"))
            for i, t in enumerate(times):
                rows.append((lam, n, t, xx[i].real, xx[i].imag, xy[i].real, xy[i].imag,
                             yy[i].real, yy[i].imag))
    return cols, rows


def cmd_dsf(cfg):
    cols = ("lambda", "omega", "re_xx", "im_xx", "re_xy", "im_xy", "re_yy", "im_yy")
    omegas = parse_grid(cfg.omega, "omega")
    rows = []
    for lam in cfg.lambda_grid():
        corr = _correlations(cfg, lam)
        s = {ch: dsf(ch, cfg.k, omegas, corr, cfg.transform()) for ch in ("xx", "xy", "yy")}
        for i, w in enumerate(omegas):
            rows.append((lam, w) + tuple(v for ch in ("xx", "xy", "yy")
                                         for v in (s[ch][i].real, s[ch][i].imag)))
    return cols, rows


def _coupling_rows(cfg):
    return coupling_sweep(cfg.lambda_grid(), cfg.template(), cfg.mu, cfg.j_a, cfg.j_b,
                          cfg.transform(), cfg.anchor_site(), cfg.include_n0, cfg.threads)


def cmd_couplings(cfg):
    cols = ("lambda", "mu_a", "mu_b", "g1", "g2", "residual", "flag")
    return cols, [r.as_tuple() for r in _coupling_rows(cfg)]


def _dynamics_times(cfg, rows) -> np.ndarray:
    """Common grid spanning one period of the slowest relevant oscillation.

    From |eg> or |ge> only g1 drives entanglement; from |ee> or |gg> only g2.
    The step resolves the fastest point's period with >= 200 samples.
    """
    if cfg.times != "auto":
        return parse_grid(cfg.times, "times")
    name = "g1" if cfg.initial in ("eg", "ge") else "g2"
    rates = np.array([max(abs(getattr(r.couplings, name)), 1e-6) for r in rows])
    span = math.pi / (2.0 * rates.min())
    count = int(min(200_001, max(2001, 200 * rates.max() / rates.min() + 1)))
    return np.linspace(0.0, span, count)


def cmd_dynamics(cfg):
    cols = ("lambda", "t", "concurrence")
    rows = _coupling_rows(cfg)
    times = _dynamics_times(cfg, rows)
    rho0 = basis_state(cfg.initial)
    out = []
    for r in rows:
        for t, c in zip(times, concurrence_trajectory(r.couplings, rho0, times)):
            out.append((r.lam, t, c))
    return cols, out


def cmd_fidelity(cfg):
    cols = ("lambda", "fidelity")
    return cols, fidelity_curve(cfg.lambda_grid(), cfg.template(), cfg.mu, cfg.j_a, cfg.j_b,
                                cfg.transform(), cfg.anchor_site(), cfg.include_n0, cfg.threads)


def cmd_sweep(cfg):
    cols = ("lambda", "mu_a", "mu_b", "g1", "g2", "residual", "flag", "t_star", "c_max", "fidelity")
    rows = _coupling_rows(cfg)
    times = _dynamics_times(cfg, rows)
    ent = entanglement_times(rows, times, cfg.initial, cfg.threshold)
    if cfg.n_sites <= 12:
        fid = [f for _, f in fidelity_curve([r.lam for r in rows], cfg.template(), cfg.mu,
                                            cfg.j_a, cfg.j_b, cfg.transform(), cfg.anchor_site(),
                                            cfg.include_n0, cfg.threads)]
    else:
        fid = [float("nan")] * len(rows)
    return cols, [r.as_tuple() + (e[1], e[2], f) for r, e, f in zip(rows, ent, fid)]


_COMMANDS = {"spectrum": cmd_spectrum, "correlation": cmd_correlation, "dsf": cmd_dsf,
             "couplings": cmd_couplings, "dynamics": cmd_dynamics, "fidelity": cmd_fidelity,
             "sweep": cmd_sweep}


def render(sub: str, cfg: RunConfig, cols, rows) -> str:
    lines = [f"# probe {__version__} {sub}"]
    lines += [f"# config: {item}" for item in cfg.echo()]
    lines.append("# " + " ".join(cols))
    for row in rows:
        lines.append(" ".join(str(v) if isinstance(v, (int, np.integer)) else _num(float(v))
                              for v in row))
    return "\n".join(lines) + "\n"


def run_subcommand(sub: str, cfg: RunConfig) -> int:
    cols, rows = _COMMANDS[sub](cfg)
    # t_star is inf for vanishing couplings; fidelity is nan beyond the dense cap
    bad = [c for i, c in enumerate(cols) if c not in ("t_star", "fidelity")
           and any(not math.isfinite(float(row[i])) for row in rows)]
    if bad:
        raise FloatingPointError(f"non-finite values in column(s) {','.join(bad)}")
    text = render(sub, cfg, cols, rows)
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if cfg.sidecar:
            with open(cfg.out + ".json", "w", encoding="utf-8") as fh:
                json.dump({"version": __version__, "subcommand": sub,
                           "config": {f.name: getattr(cfg, f.name) for f in fields(cfg)},
                           "columns": list(cols),
                           "rows": [[v if isinstance(v, (int, np.integer)) and not isinstance(v, bool)
                                     else float(v) for v in row] for row in rows]},
                          fh, indent=1, default=int)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        sub, cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"probe: {exc.record()}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_subcommand(sub, cfg)
    except OSError as exc:
        print(f"probe: error=config key=out reason=cannot write ({exc.strerror})", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, SpectrumError, SingularPivotError, np.linalg.LinAlgError,
            ValueError, ArithmeticError) as exc:
        reason = " ".join(str(exc).split())
        print(f"probe: error=numeric type={type(exc).__name__} reason={reason}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
