"""Run configuration: flat key/value settings from TOML, JSON, output headers or flags."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from modent.ensemble import MODES, EnsembleSpec
from modent.eigensolve import SOLVERS
from modent.errors import ConfigError
from modent.models import MODEL_KEYS, Family, ModelParams
from modent.sweep import DEFAULT_EDGE_THRESHOLD, HOPPING_SAMPLES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("spectrum", "ensemble", "sweep", "edges")
FORMATS = ("csv", "json")
SWEEP_PARAMETERS = ("lambda", "alpha_pi", "nu", "delta_v", "Va", "Vb", "q", "alpha", "W", "mu", "J", "t")

# key -> (type, default); None default means "required or derived"
ENSEMBLE_KEYS: dict[str, tuple[type, Any]] = {
    "samples": (int, None),
    "energy_bins": (int, 100),
    "energy_min": (float, None),
    "energy_max": (float, None),
    "solver": (str, "lapack"),
    "mode": (str, "energy"),
}
SWEEP_KEYS: dict[str, tuple[type, Any]] = {
    "parameter": (str, None),
    "grid": (list, None),
    "grid_start": (float, None),
    "grid_stop": (float, None),
    "grid_step": (float, None),
    "sizes": (list, None),
    "samples_per_size": (list, None),
}
OTHER_KEYS: dict[str, tuple[type, Any]] = {
    "command": (str, None),
    "threshold": (float, DEFAULT_EDGE_THRESHOLD),
    "output": (str, "-"),
    "format": (str, "csv"),
    "plot_dir": (str, None),
    "workers": (int, 1),
}
# not part of the provenance record: where results go and how many processes compute them
RUNTIME_KEYS = frozenset({"output", "plot_dir", "workers"})
ALL_KEYS = MODEL_KEYS | {"alpha"} | ENSEMBLE_KEYS.keys() | SWEEP_KEYS.keys() | OTHER_KEYS.keys()

# default samples for disorder ensembles
DEFAULT_SAMPLES = 200


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: tuple[float, ...]
    sizes: tuple[int, ...]
    samples: dict[int, int]


@dataclass(frozen=True, eq=False)
class RunConfig:
    command: str
    model: ModelParams
    ensemble: EnsembleSpec
    sweep: SweepSpec | None
    threshold: float
    output: str
    format: str
    plot_dir: str | None
    workers: int

    def provenance(self) -> dict[str, Any]:
        """Fully resolved settings, enough to reproduce the computation."""
        out: dict[str, Any] = {"command": self.command}
        out.update(self.model.to_mapping())
        if self.command != "spectrum":
            out["samples"] = self.ensemble.samples
            out["energy_bins"] = self.ensemble.energy_bins
            if self.ensemble.energy_range is not None:
                out["energy_min"], out["energy_max"] = self.ensemble.energy_range
            out["mode"] = self.ensemble.mode
        out["solver"] = self.ensemble.solver
        if self.sweep is not None:
            out["parameter"] = self.sweep.parameter
            out["grid"] = list(self.sweep.grid)
            out["sizes"] = list(self.sweep.sizes)
            out["samples_per_size"] = [self.sweep.samples[n] for n in self.sweep.sizes]
            out.pop("samples", None)
            out.pop(self.sweep.parameter, None)
            out.pop("N", None)
        if self.command == "edges":
            out["threshold"] = self.threshold
        return out

    def resolved(self) -> dict[str, Any]:
        out = self.provenance()
        out.update(output=self.output, format=self.format, plot_dir=self.plot_dir, workers=self.workers)
        return out


def _coerce(key: str, kind: type, value: Any) -> Any:
    if kind is int:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is float:
        try:
            x = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
        if not math.isfinite(x):
            raise ConfigError(f"{key}: must be finite")
        return x
    if kind is list:
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return list(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _model_value(key: str, value: Any) -> Any:
    if key in ("family", "boundary", "distance"):
        return _coerce(key, str, value)
    if key in ("N", "seed"):
        return _coerce(key, int, value)
    return _coerce(key, float, value)


def make_grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive uniform grid; values rounded to 12 decimals so 0.1 steps land on 2.0."""
    if step <= 0:
        raise ConfigError("grid_step: must be positive")
    if stop < start:
        raise ConfigError("grid_stop: must not be below grid_start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))


def parse_config(data: Mapping[str, Any], command: str | None = None) -> RunConfig:
    """Validate a flat mapping of config keys into a :class:`RunConfig`.

    Unknown keys are errors. ``command`` (from the CLI) must agree with a
    ``command`` key in the mapping when both are present.
    """
    data = dict(data)
    if not data and command is None:
        raise ConfigError("empty configuration; required keys: command, family, N (plus the family's own keys)")
    unknown = sorted(k for k in data if k not in ALL_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    file_cmd = data.pop("command", None)
    if command is not None and file_cmd is not None and command != file_cmd:
        raise ConfigError(f"command: config says {file_cmd!r} but {command!r} was requested")
    command = command or file_cmd
    if command is None:
        raise ConfigError("command: required (one of spectrum, ensemble, sweep, edges)")
    if command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {command!r}")

    def take(table, key):
        kind, default = table[key]
        return _coerce(key, kind, data.pop(key)) if key in data else default

    ens = {k: take(ENSEMBLE_KEYS, k) for k in ENSEMBLE_KEYS}
    swp = {k: take(SWEEP_KEYS, k) for k in SWEEP_KEYS}
    other = {k: take(OTHER_KEYS, k) for k in OTHER_KEYS if k != "command"}
    model_data = {k: _model_value(k, v) for k, v in data.items()}

    missing = [k for k in ("family", "N") if k not in model_data and not (k == "N" and command == "sweep")]
    if missing:
        families = ", ".join(f.value for f in Family)
        raise ConfigError(f"missing required keys: {', '.join(missing)} (family is one of {families})")

    sweep = None
    if command == "sweep":
        parameter = swp["parameter"]
        if parameter is None:
            raise ConfigError("parameter: required for sweep")
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"parameter: cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
        if swp["grid"] is not None:
            if any(swp[k] is not None for k in ("grid_start", "grid_stop", "grid_step")):
                raise ConfigError("grid: give either an explicit grid or grid_start/grid_stop/grid_step")
            grid = tuple(_coerce("grid", float, v) for v in swp["grid"])
        else:
            missing = [k for k in ("grid_start", "grid_stop", "grid_step") if swp[k] is None]
            if missing:
                raise ConfigError(f"missing sweep keys: {', '.join(missing)} (or give grid)")
            grid = make_grid(swp["grid_start"], swp["grid_stop"], swp["grid_step"])
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("grid: must be nonempty and strictly increasing")
        if swp["sizes"] is None:
            if "N" not in model_data:
                raise ConfigError("sizes: required for sweep (or give N)")
            sizes = (model_data["N"],)
        else:
            sizes = tuple(_coerce("sizes", int, v) for v in swp["sizes"])
        if not sizes:
            raise ConfigError("sizes: need at least one system size")
        model_data.setdefault("N", sizes[0])
        if parameter == "delta_v":
            model_data.setdefault("Va", model_data.get("Vb", 1.0) + grid[0])
        elif parameter == "alpha" and model_data.get("family") == Family.SLOWLY_VARYING.value:
            model_data.setdefault("alpha_pi", math.pi * grid[0])
        else:
            model_data.setdefault(parameter, grid[0])
    else:
        for k, v in swp.items():
            if v is not None:
                raise ConfigError(f"{k}: only valid for the sweep command")

    model = ModelParams.from_mapping(model_data)
    if command == "sweep":
        model.with_value(parameter, grid[0])

    samples = ens["samples"]
    if samples is None:
        samples = DEFAULT_SAMPLES if model.family.is_random else 1
    if ens["energy_min"] is None and ens["energy_max"] is None:
        energy_range = None
    elif ens["energy_min"] is None or ens["energy_max"] is None:
        raise ConfigError("energy_min and energy_max must be given together")
    else:
        energy_range = (ens["energy_min"], ens["energy_max"])
    if ens["solver"] not in SOLVERS:
        raise ConfigError(f"solver: expected one of {SOLVERS}, got {ens['solver']!r}")
    if ens["mode"] not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {ens['mode']!r}")
    ensemble = EnsembleSpec(model, samples if model.family.is_random else 1, ens["energy_bins"], energy_range, None, ens["solver"], ens["mode"])

    if command == "sweep":
        if swp["samples_per_size"] is not None:
            per = [_coerce("samples_per_size", int, v) for v in swp["samples_per_size"]]
            if len(per) != len(sizes):
                raise ConfigError("samples_per_size: must match sizes in length")
            if ens["samples"] is not None:
                raise ConfigError("samples and samples_per_size are mutually exclusive")
        elif not model.family.is_random:
            per = [1] * len(sizes)
        elif ens["samples"] is None and model.family is Family.LONG_RANGE_HOPPING:
            per = [HOPPING_SAMPLES.get(n, DEFAULT_SAMPLES) for n in sizes]
        else:
            per = [ensemble.samples] * len(sizes)
        if any(p < 1 for p in per):
            raise ConfigError("samples_per_size: counts must be positive")
        if not model.family.is_random:
            per = [1] * len(sizes)
        sweep = SweepSpec(parameter, grid, sizes, dict(zip(sizes, per)))

    if other["format"] not in FORMATS:
        raise ConfigError(f"format: expected one of {FORMATS}, got {other['format']!r}")
    if other["workers"] < 1:
        raise ConfigError("workers: must be at least 1")
    return RunConfig(command, model, ensemble, sweep, other["threshold"], other["output"], other["format"], other["plot_dir"], other["workers"])


CONFIG_PREFIX = "# config: "


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read settings from a TOML/JSON config or from the provenance of an output file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    suffix = path.suffix.lower()
    if suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if isinstance(data, dict) and "metadata" in data:
            return dict(data["metadata"]["config"])
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return data
    for line in text.splitlines():
        if line.startswith(CONFIG_PREFIX):
            return json.loads(line[len(CONFIG_PREFIX) :])
        if not line.startswith("#"):
            break
    raise ConfigError(f"{path}: no embedded '# config:' provenance line")
