"""Run configuration: INI-style `key = value` text with `[section]` headers."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .cone import DENSITY_EPS, RESIDUAL_TOL, THETA_MIN
from .field import FieldError, Polydisc, PolyVectorField
from .leaf import SAFETY
from .scenarios import ScenarioError, normalize_id
from .variety import AnalyticSetModel

COMMANDS = ("cone", "transversal", "eta", "scan", "complete", "converge", "ex32", "report",
            "list-scenarios")
SAMPLING = frozenset({"cone", "transversal", "report"})

DEFAULT_TOLERANCES = {
    "theta_min": THETA_MIN,
    "gap_frac": 0.05,
    "tol": 1e-10,
    "safety": SAFETY,
    "residual_tol": RESIDUAL_TOL,
    "density_eps": DENSITY_EPS,
}
_RUN_KEYS = {"scenario", "command", "seed", "out", "format"}
_PARAM_KEYS = {"point", "family", "steps", "grid", "horizon", "sequence"}
_CUSTOM_KEYS = {"field", "domain_radii", "domain_center", "singular_set"}
_SECTIONS = {"run": _RUN_KEYS, "tolerances": set(DEFAULT_TOLERANCES) | {"gap_tol"},
             "params": _PARAM_KEYS, "custom": _CUSTOM_KEYS}


class ConfigError(ValueError):
    pass


def parse_complex(text):
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigError(f"not a complex number: {text!r}") from exc


def parse_point(text):
    """'(0, 0.5, -0.3i)' -> complex array."""
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [p for p in re.split(r",", body) if p.strip()]
    if not parts:
        raise ConfigError(f"empty point {text!r}")
    return np.array([parse_complex(p) for p in parts], dtype=complex)


def _parse_steps(text):
    parts = [p for p in re.split(r"[,\s]+", text.strip().strip("[]()")) if p]
    if len(parts) == 1:
        # a single N means the doubling ladder 8, 16, ..., N
        top = int(parts[0])
        steps, n = [], 8
        while n <= top:
            steps.append(n)
            n *= 2
        return tuple(steps or [top])
    return tuple(int(p) for p in parts)


@dataclass(frozen=True)
class CustomScenario:
    field: PolyVectorField
    E: AnalyticSetModel


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = None
    command: str | None = None  # chosen on the command line when absent
    seed: int | None = None
    out: str | None = None
    format: str = "text"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    params: dict = field(default_factory=dict)
    custom: CustomScenario | None = None

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "scenario" in kw:
            kw["scenario"] = _check_scenario(kw["scenario"])
        return replace(self, **kw)

    def validate(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "text"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.command in SAMPLING and self.seed is None:
            raise ConfigError(f"missing seed: '{self.command}' samples and needs a seed")
        if self.command not in ("list-scenarios", "report", None) and self.scenario is None \
                and self.custom is None:
            raise ConfigError("no scenario selected")
        return self

    def echo(self):
        """Header lines listing every materialised setting."""
        lines = [f"# scenario = {self.scenario or 'custom'}", f"# command = {self.command}",
                 f"# seed = {self.seed}", f"# format = {self.format}"]
        lines += [f"# {k} = {v!r}" for k, v in sorted(self.tolerances.items())]
        lines += [f"# {k} = {_fmt_param(v)}" for k, v in sorted(self.params.items())]
        return lines


def _fmt_param(v):
    if isinstance(v, np.ndarray):
        return "(" + ", ".join(repr(complex(x)) for x in v) + ")"
    return repr(v)


def _check_scenario(name):
    try:
        return normalize_id(name)
    except ScenarioError as exc:
        raise ConfigError(f"unknown scenario {name!r}") from exc


def parse_config(text, validate=True):
    """RunConfig from config text; every default is materialised.

    With ``validate=False`` the cross-field checks wait for command-line overrides.
    """
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
    run = cp["run"] if cp.has_section("run") else {}
    kw = {}
    if "scenario" in run:
        kw["scenario"] = _check_scenario(run["scenario"])
    if "command" in run:
        kw["command"] = run["command"].strip()
    if "seed" in run:
        try:
            kw["seed"] = int(run["seed"])
        except ValueError as exc:
            raise ConfigError(f"seed must be an integer, got {run['seed']!r}") from exc
        if kw["seed"] < 0 or kw["seed"] >= 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
    if "out" in run:
        kw["out"] = run["out"].strip()
    if "format" in run:
        kw["format"] = run["format"].strip()
    tols = dict(DEFAULT_TOLERANCES)
    if cp.has_section("tolerances"):
        for k, v in cp["tolerances"].items():
            try:
                tols[k] = float(v)
            except ValueError as exc:
                raise ConfigError(f"tolerance {k} is not a number: {v!r}") from exc
    params = {}
    if cp.has_section("params"):
        sec = cp["params"]
        if "point" in sec:
            params["point"] = parse_point(sec["point"])
        if "family" in sec:
            params["family"] = sec["family"].strip()
        if "sequence" in sec:
            params["sequence"] = sec["sequence"].strip()
        for key in ("grid", "horizon"):
            if key in sec:
                params[key] = int(sec[key])
        if "steps" in sec:
            params["steps"] = _parse_steps(sec["steps"])
    custom = None
    if cp.has_section("custom"):
        custom = _parse_custom(cp["custom"])
    cfg = RunConfig(tolerances=tols, params=params, custom=custom, **kw)
    return cfg.validate() if validate else cfg


def _parse_custom(sec):
    if "field" not in sec:
        raise ConfigError("[custom] needs a field")
    n = len(sec["field"].split(";"))
    radii = tuple(float(r) for r in parse_point(sec.get("domain_radii", "1," * n)).real)
    center = tuple(parse_point(sec["domain_center"])) if "domain_center" in sec else (0j,) * n
    try:
        X = PolyVectorField.parse(sec["field"], Polydisc(center, radii), "custom")
    except (FieldError, ValueError) as exc:
        raise ConfigError(f"malformed expression: {exc}") from exc
    try:
        E = AnalyticSetModel.parse(sec.get("singular_set", ""), singular=True)
    except ValueError as exc:
        raise ConfigError(f"malformed singular set: {exc}") from exc
    return CustomScenario(X, E)
