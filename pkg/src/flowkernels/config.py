"""Flat key=value experiment configs and the built-in presets.

A config is a two-level mapping section -> key -> string.  Keeping the
canonical representation textual makes the write/parse round trip exact
by construction; typed accessors parse values on demand and validation
happens before any numerical code runs.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ConfigurationError
from .kernels import kernel_family_names

__all__ = ["ExperimentConfig", "preset", "preset_names", "COMMANDS"]

COMMANDS = ("solve", "mkl", "path-integral", "mercer", "unify")

_SECTION_ORDER = (
    "experiment", "system", "eigenvalue", "kernel", "grid",
    "penalties", "path_integral", "mkl", "mercer", "unify",
)

SCHEMA_VERSION = "1"


@dataclass(frozen=True, eq=True)
class ExperimentConfig:
    sections: Dict[str, Dict[str, str]] = field(default_factory=dict)

    # -- raw access helpers -------------------------------------------------

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if section not in self.sections:
            return False
        return key is None or key in self.sections[section]

    def get(self, section: str, key: str, default=None) -> Optional[str]:
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> str:
        v = self.get(section, key)
        if v is None:
            raise ConfigurationError(f"missing config key [{section}] {key}")
        return v

    def get_float(self, section: str, key: str, default=None) -> Optional[float]:
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key} is not a number: {v!r}") from exc

    def get_int(self, section: str, key: str, default=None) -> Optional[int]:
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key} is not an integer: {v!r}") from exc

    def get_bool(self, section: str, key: str, default=False) -> bool:
        v = self.get(section, key)
        if v is None:
            return default
        low = v.strip().lower()
        if low in ("on", "true", "yes", "1"):
            return True
        if low in ("off", "false", "no", "0"):
            return False
        raise ConfigurationError(f"[{section}] {key} is not a boolean: {v!r}")

    # -- derived values ------------------------------------------------------

    @property
    def name(self) -> str:
        return self.require("experiment", "name")

    @property
    def command(self) -> str:
        return self.require("experiment", "command")

    @property
    def seed(self) -> int:
        return self.get_int("experiment", "seed", 0)

    def grid_spec(self) -> Tuple[List[Tuple[float, float]], List[int]]:
        bounds_raw = self.require("grid", "bounds")
        counts_raw = self.require("grid", "counts")
        bounds = []
        for part in bounds_raw.split(","):
            lo, sep, hi = part.strip().partition(":")
            if not sep:
                raise ConfigurationError(f"grid bounds need lo:hi pairs, got {part!r}")
            bounds.append((float(lo), float(hi)))
        counts = [int(c.strip()) for c in counts_raw.split(",")]
        if len(counts) != len(bounds):
            raise ConfigurationError("grid bounds and counts disagree on dimension")
        if any(c < 2 for c in counts):
            raise ConfigurationError("grid counts must be >= 2 per axis")
        return bounds, counts

    def kernel_spec(self) -> Dict[str, str]:
        if not self.has("kernel"):
            raise ConfigurationError("missing [kernel] section")
        return dict(self.sections["kernel"])

    # -- validation ----------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        from .dynamics import builtin_system_names, make_system

        name = self.name
        if not name:
            raise ConfigurationError("experiment name must be nonempty")
        cmd = self.command
        if cmd not in COMMANDS:
            raise ConfigurationError(
                f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}"
            )
        self.seed

        if cmd == "unify":
            for key in ("c", "lam"):
                self.get_float("unify", key)
            return self

        sysname = self.require("system", "name")
        try:
            make_system(sysname)
        except ConfigurationError as exc:
            raise ConfigurationError(
                f"unknown system {sysname!r} (built-ins: {', '.join(builtin_system_names())}): {exc}"
            ) from exc

        self.grid_spec()

        if cmd in ("solve", "mercer"):
            fam = self.kernel_spec().get("family")
            if fam is None:
                raise ConfigurationError("missing [kernel] family")
            if fam not in kernel_family_names():
                raise ConfigurationError(f"unknown kernel family {fam!r}")
        if cmd == "mkl":
            bank = self.get("kernel", "bank", "default11")
            if bank != "default11":
                raise ConfigurationError(f"unknown kernel bank {bank!r}")
        if cmd in ("solve", "mkl", "path-integral"):
            if not (self.has("eigenvalue", "index") or self.has("eigenvalue", "value")):
                raise ConfigurationError("need [eigenvalue] index or value")
        if cmd == "path-integral":
            T = self.get_float("path_integral", "T")
            M = self.get_int("path_integral", "M")
            if T is None or M is None:
                raise ConfigurationError("need [path_integral] T and M")
        return self

    # -- serialization ---------------------------------------------------

    @classmethod
    def from_string(cls, text: str) -> "ExperimentConfig":
        parser = configparser.RawConfigParser()
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"config parse error: {exc}") from exc
        sections = {s: dict(parser.items(s)) for s in parser.sections()}
        return cls(sections=sections)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_string(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc

    def to_string(self) -> str:
        out = io.StringIO()
        known = [s for s in _SECTION_ORDER if s in self.sections]
        extra = [s for s in self.sections if s not in _SECTION_ORDER]
        for sec in known + extra:
            out.write(f"[{sec}]\n")
            for k, v in self.sections[sec].items():
                out.write(f"{k} = {v}\n")
            out.write("\n")
        return out.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_string())

    def with_overrides(self, **experiment_keys) -> "ExperimentConfig":
        sections = {s: dict(kv) for s, kv in self.sections.items()}
        sections.setdefault("experiment", {})
        for k, v in experiment_keys.items():
            if v is not None:
                sections["experiment"][k] = str(v)
        return ExperimentConfig(sections=sections)


def _base(name: str, command: str) -> Dict[str, Dict[str, str]]:
    return {
        "experiment": {
            "name": name,
            "command": command,
            "seed": "0",
            "schema_version": SCHEMA_VERSION,
        }
    }


def _cubic1d_solve(name: str, kernel: Dict[str, str]) -> ExperimentConfig:
    s = _base(name, "solve")
    s["system"] = {"name": "cubic1d"}
    s["eigenvalue"] = {"value": "1"}
    s["kernel"] = kernel
    s["grid"] = {"bounds": "-0.99:0.99", "counts": "199"}
    s["penalties"] = {
        "eta": "1e-8", "mu_grad": "1e4",
        "mu_trace": "1e2", "mu_layer": "1e2", "boundary": "on",
    }
    return ExperimentConfig(sections=s)


def _poly2d_mkl(name: str, eig_index: int) -> ExperimentConfig:
    s = _base(name, "mkl")
    s["system"] = {"name": "poly2d"}
    s["eigenvalue"] = {"index": str(eig_index)}
    s["kernel"] = {"bank": "default11"}
    s["grid"] = {"bounds": "-1:1, -1:1", "counts": "21, 21"}
    s["penalties"] = {"eta": "1e-8", "mu_grad": "1e4"}
    s["mkl"] = {"lam_l1": "0", "tau": "0.1", "max_iter": "200", "gtol": "1e-6"}
    return ExperimentConfig(sections=s)


def _presets() -> Dict[str, ExperimentConfig]:
    out: Dict[str, ExperimentConfig] = {}
    out["cubic1d_singular"] = _cubic1d_solve("cubic1d_singular", {"family": "singular_1d"})
    out["cubic1d_rbf"] = _cubic1d_solve(
        "cubic1d_rbf", {"family": "gaussian", "ell": "0.3"}
    )

    s = _base("poly2d_kernel_study", "solve")
    s["system"] = {"name": "poly2d"}
    s["eigenvalue"] = {"index": "1"}   # slow mode, rate -1
    s["kernel"] = {"family": "polynomial", "degree": "2", "coef0": "0.5"}
    s["grid"] = {"bounds": "-1:1, -1:1", "counts": "21, 21"}
    s["penalties"] = {"eta": "1e-8", "mu_grad": "1e4"}
    out["poly2d_kernel_study"] = ExperimentConfig(sections=s)

    out["poly2d_mkl_l1"] = _poly2d_mkl("poly2d_mkl_l1", 1)
    out["poly2d_mkl_l2eig"] = _poly2d_mkl("poly2d_mkl_l2eig", 0)

    s = _base("duffing_char", "path-integral")
    s["system"] = {"name": "duffing"}
    s["eigenvalue"] = {"index": "0"}   # unstable rate of the saddle
    s["grid"] = {"bounds": "-2:2, -2:2", "counts": "25, 25"}
    s["path_integral"] = {"T": "15", "M": "1500"}
    out["duffing_char"] = ExperimentConfig(sections=s)

    s = _base("unify_advection", "unify")
    s["unify"] = {
        "c": "1", "lam": "1",
        "grid_lo": "-5", "grid_hi": "5", "grid_n": "20",
        "rule_lo": "-30", "rule_hi": "30", "rule_n": "4001",
        "scheme": "trapezoid",
    }
    out["unify_advection"] = ExperimentConfig(sections=s)
    return out


def preset_names() -> Tuple[str, ...]:
    return tuple(_presets().keys())


def preset(name: str) -> ExperimentConfig:
    table = _presets()
    if name not in table:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(table)}"
        )
    return table[name].validate()
