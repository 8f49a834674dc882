"""INI experiment configuration.

    [model]     n_th, gamma_phi, omega_rabi, omega_A (metadata only)
    [ensemble]  rates + weights, or gamma0, b, a | alpha, N; optional normalize
    [run]       command, tgrid, t, taugrid, ugrid, u_samples, initial,
                initial_bloch | initial_matrix, method, O, A, workers, output

Grids are written ``linspace lo hi n``, ``logspace lo_exp hi_exp n`` (a zero
is prepended so the grid starts at t = 0) or as comma-separated numbers.
Every validation error names the offending line.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import RateEnsemble, TlsModel, exponential_ensemble
from .errors import ValidationError
from .operators import DOWN, PAULI, UP, bloch_to_density, check_density

KNOWN = {
    "model": {"n_th", "gamma_phi", "omega_rabi", "omega_a"},
    "ensemble": {"rates", "weights", "gamma0", "b", "a", "alpha", "n", "normalize"},
    "run": {
        "command",
        "tgrid",
        "t",
        "taugrid",
        "ugrid",
        "u_samples",
        "initial",
        "initial_bloch",
        "initial_matrix",
        "method",
        "o",
        "a",
        "workers",
        "output",
    },
}


class ConfigError(ValidationError):
    pass


_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^\s=:#;\[][^=:]*?)\s*[=:]")


def _locate(text):
    where, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = n
            continue
        m = _KEY.match(line)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = n
    return where


@dataclass
class ExperimentConfig:
    source: str
    sections: dict
    lines: dict
    model: TlsModel | None = None
    run: dict = field(default_factory=dict)

    def error(self, section, key, message):
        n = self.lines.get((section, key), self.lines.get((section, None)))
        at = f"{self.source}:{n}" if n else self.source
        where = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{at}: {where}: {message}")

    def get(self, section, key, parse=str, default=None):
        raw = self.sections.get(section, {}).get(key)
        if raw is None:
            return default
        try:
            return parse(raw)
        except (ValueError, ValidationError) as exc:
            raise self.error(section, key, f"{exc} (value {raw!r})") from None

    def has(self, section, key):
        return key in self.sections.get(section, {})


def parse_floats(raw):
    return [float(v) for v in raw.replace(",", " ").split()]


def parse_grid(raw):
    parts = raw.replace(",", " ").split()
    if parts and parts[0] in ("linspace", "logspace"):
        if len(parts) != 4:
            raise ValueError(f"{parts[0]} needs three numbers: lo hi n")
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        if n < 2:
            raise ValueError("grid needs at least two points")
        if parts[0] == "linspace":
            return np.linspace(lo, hi, n)
        return np.concatenate([[0.0], np.logspace(lo, hi, n)])
    values = np.array([float(v) for v in parts])
    if values.size == 0:
        raise ValueError("empty grid")
    return values


def parse_bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_time(raw):
    v = raw.strip().lower()
    if v in ("inf", "infinity", "stationary"):
        return np.inf
    t = float(v)
    if t < 0:
        raise ValueError("waiting time must be nonnegative")
    return t


def parse_operator(raw):
    v = raw.strip().lower()
    if v not in PAULI:
        raise ValueError(f"unknown operator; choose from {sorted(PAULI)}")
    return PAULI[v]


def _nonneg(raw):
    v = float(raw)
    if not np.isfinite(v) or v < 0:
        raise ValueError("must be a finite nonnegative number")
    return v


def _ensemble(cfg):
    explicit = cfg.has("ensemble", "rates") or cfg.has("ensemble", "weights")
    expo_keys = [k for k in ("gamma0", "b", "a", "alpha", "n") if cfg.has("ensemble", k)]
    if explicit and expo_keys:
        raise cfg.error("ensemble", expo_keys[0], "give either rates/weights or exponential parameters, not both")
    if explicit:
        rates = cfg.get("ensemble", "rates", parse_floats)
        weights = cfg.get("ensemble", "weights", parse_floats)
        if rates is None or weights is None:
            raise cfg.error("ensemble", "rates" if rates is None else "weights", "rates and weights go together")
        try:
            e = RateEnsemble(rates, weights)
        except ValidationError as exc:
            raise cfg.error("ensemble", "weights", str(exc)) from None
    elif expo_keys:
        if cfg.has("ensemble", "a") and cfg.has("ensemble", "alpha"):
            raise cfg.error("ensemble", "alpha", "give a or alpha, not both")
        missing = [k for k in ("gamma0", "b", "n") if not cfg.has("ensemble", k)]
        if missing or not (cfg.has("ensemble", "a") or cfg.has("ensemble", "alpha")):
            raise cfg.error("ensemble", None, f"exponential ensemble needs gamma0, b, a|alpha, N (missing {missing or ['a']})")
        g0 = cfg.get("ensemble", "gamma0", float)
        b = cfg.get("ensemble", "b", float)
        a = cfg.get("ensemble", "a", float)
        if a is None:
            a = cfg.get("ensemble", "alpha", float) * b
        N = cfg.get("ensemble", "n", float)
        try:
            e = exponential_ensemble(g0, b, a, N)
        except ValidationError as exc:
            raise cfg.error("ensemble", "b", str(exc)) from None
    else:
        raise cfg.error("ensemble", None, "missing ensemble: give rates/weights or gamma0, b, a|alpha, N")
    if cfg.get("ensemble", "normalize", parse_bool, False):
        e = e.normalized()
    return e


def _initial(cfg):
    forms = [k for k in ("initial", "initial_bloch", "initial_matrix") if cfg.has("run", k)]
    if len(forms) > 1:
        raise cfg.error("run", forms[1], "give a single initial-state form")
    if not forms or forms[0] == "initial":
        name = cfg.get("run", "initial", str, "up").strip().lower()
        if name not in ("up", "down"):
            raise cfg.error("run", "initial", "initial must be up or down (or use initial_bloch)")
        return UP if name == "up" else DOWN
    if forms[0] == "initial_bloch":
        return cfg.get("run", "initial_bloch", lambda s: bloch_to_density(parse_floats(s)))

    def matrix(raw):
        v = parse_floats(raw)
        if len(v) != 4:
            raise ValueError("initial_matrix is rho00, rho11, re rho01, im rho01")
        r01 = v[2] + 1j * v[3]
        return check_density(np.array([[v[0], r01], [np.conj(r01), v[1]]]))

    return cfg.get("run", "initial_matrix", matrix)


def _int_pos(raw):
    v = int(raw)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def load_config(path, need_model=True):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path), need_model)


def parse_config(text, source="<config>", need_model=True):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from None
    lines = _locate(text)
    sections = {s.lower(): {k.lower(): v for k, v in parser[s].items()} for s in parser.sections()}
    cfg = ExperimentConfig(source, sections, lines)
    for section, keys in sections.items():
        if section not in KNOWN:
            raise cfg.error(section, None, "unknown section")
        for key in keys:
            if key not in KNOWN[section]:
                raise cfg.error(section, key, "unknown key")

    if need_model:
        e = _ensemble(cfg)
        params = dict(
            n_th=cfg.get("model", "n_th", _nonneg, 0.0),
            gamma_phi=cfg.get("model", "gamma_phi", _nonneg, 0.0),
            omega_rabi=cfg.get("model", "omega_rabi", _nonneg, 0.0),
            omega_A=cfg.get("model", "omega_a", float),
        )
        try:
            cfg.model = TlsModel(e, **params)
        except ValidationError as exc:
            raise cfg.error("model", None, str(exc)) from None

    run = {
        "command": cfg.get("run", "command", lambda s: s.strip().lower()),
        "tgrid": cfg.get("run", "tgrid", parse_grid),
        "t": cfg.get("run", "t", parse_time, 0.0),
        "taugrid": cfg.get("run", "taugrid", parse_grid),
        "ugrid": cfg.get("run", "ugrid", parse_grid),
        "u_samples": cfg.get("run", "u_samples", parse_floats),
        "rho0": _initial(cfg),
        "method": cfg.get("run", "method", lambda s: s.strip().lower(), "ensemble"),
        "O": cfg.get("run", "o", parse_operator, PAULI["sx"]),
        "A": cfg.get("run", "a", parse_operator, PAULI["sy"]),
        "O_name": cfg.get("run", "o", lambda s: s.strip().lower(), "sx"),
        "A_name": cfg.get("run", "a", lambda s: s.strip().lower(), "sy"),
        "workers": cfg.get("run", "workers", _int_pos, 1),
        "output": cfg.get("run", "output"),
    }
    if run["method"] not in ("ensemble", "volterra"):
        raise cfg.error("run", "method", "method must be ensemble or volterra")
    for key in ("tgrid", "taugrid"):
        grid = run[key]
        if grid is not None and (grid[0] != 0 or np.any(np.diff(grid) <= 0)):
            raise cfg.error("run", key, "grid must start at 0 and increase")
    cfg.run = run
    return cfg
