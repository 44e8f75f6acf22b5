"""Config-file parsing for the command-line front end.

A scenario is one JSON document (schema version 1) describing the chain
pair, initial distributions, simulation budget, and the envelope /
regularity settings.  See the README for the documented schema and a
complete example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .kernel import (
    BirthDeathSpec,
    ConstantTail,
    KernelSchedule,
    PeriodicTail,
    StateSpace,
    birth_death_schedule,
)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Malformed or unreadable configuration (CLI exit code 3)."""


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return obj[key]


def _as_alpha_row(value, cap: int, where: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full(cap, float(value))
    row = np.asarray(value, dtype=float)
    if row.shape != (cap,):
        raise ConfigError(f"{where}: expected {cap} down probabilities, got shape {row.shape}")
    return row


def _parse_birth_death(obj: dict, where: str) -> BirthDeathSpec:
    cap = int(_require(obj, "cap", where))
    body = tuple(_as_alpha_row(r, cap, f"{where}.alpha_table[{i}]")
                 for i, r in enumerate(obj.get("alpha_table", [])))
    tail_obj = _require(obj, "tail", where)
    kind = _require(tail_obj, "kind", f"{where}.tail")
    alphas = _require(tail_obj, "alphas", f"{where}.tail")
    if kind == "constant":
        tail = ConstantTail(_as_alpha_row(alphas, cap, f"{where}.tail.alphas"))
    elif kind == "periodic":
        rows = tuple(_as_alpha_row(r, cap, f"{where}.tail.alphas[{i}]")
                     for i, r in enumerate(alphas))
        tail = PeriodicTail(rows)
    else:
        raise ConfigError(f"{where}.tail.kind must be 'constant' or 'periodic', got '{kind}'")
    try:
        return BirthDeathSpec(cap=cap, body=body, tail=tail)
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from err


def _parse_explicit(obj: dict, target_set, where: str) -> KernelSchedule:
    states = int(_require(obj, "states", where))
    body = tuple(np.asarray(m, dtype=float) for m in obj.get("body", []))
    tail_obj = _require(obj, "tail", where)
    kind = _require(tail_obj, "kind", f"{where}.tail")
    matrices = [np.asarray(m, dtype=float) for m in _require(tail_obj, "matrices", f"{where}.tail")]
    if not matrices:
        raise ConfigError(f"{where}.tail.matrices must be nonempty")
    if kind == "constant":
        tail = ConstantTail(matrices[0])
    elif kind == "periodic":
        tail = PeriodicTail(tuple(matrices))
    else:
        raise ConfigError(f"{where}.tail.kind must be 'constant' or 'periodic', got '{kind}'")
    try:
        space = StateSpace(states, frozenset(target_set))
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from err
    return KernelSchedule(space=space, body=body, tail=tail)


def _parse_initial(value, size: int, where: str) -> np.ndarray:
    if isinstance(value, dict):
        state = int(_require(value, "state", where))
        if not 0 <= state < size:
            raise ConfigError(f"{where}: state {state} outside 0..{size - 1}")
        out = np.zeros(size)
        out[state] = 1.0
        return out
    out = np.asarray(value, dtype=float)
    if out.shape != (size,):
        raise ConfigError(f"{where}: expected a length-{size} probability vector")
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully resolved run configuration."""

    name: str
    raw: dict
    schedule1: KernelSchedule
    schedule2: KernelSchedule
    spec1: BirthDeathSpec | None
    spec2: BirthDeathSpec | None
    initial1: np.ndarray
    initial2: np.ndarray
    horizon: int
    n_paths: int
    master_seed: int
    tail_len: int
    domination_p: float | None
    series_len: int
    regularity: dict


def load_scenario(source: str | Path | dict, seed_override: int | None = None) -> Scenario:
    """Load and resolve a scenario from a JSON file path or a dict."""
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}") from err
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON at line {err.lineno}, column {err.colno}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {version}; this build reads version {SCHEMA_VERSION}")

    target_set = raw.get("target_set", [0])
    chains = []
    specs: list[BirthDeathSpec | None] = []
    for key in ("chain1", "chain2"):
        obj = _require(raw, key, "config")
        if "birth_death" in obj:
            spec = _parse_birth_death(obj["birth_death"], f"config.{key}.birth_death")
            specs.append(spec)
            chains.append(birth_death_schedule(spec, target_set))
        else:
            specs.append(None)
            chains.append(_parse_explicit(obj, target_set, f"config.{key}"))

    initial1 = _parse_initial(_require(raw, "initial1", "config"), chains[0].space.size, "config.initial1")
    initial2 = _parse_initial(_require(raw, "initial2", "config"), chains[1].space.size, "config.initial2")

    domination = raw.get("domination", {})
    regularity = raw.get("regularity", {"source": "analytic"})
    if regularity.get("source", "analytic") not in ("analytic", "empirical"):
        raise ConfigError("config.regularity.source must be 'analytic' or 'empirical'")

    seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
    return Scenario(
        name=str(raw.get("name", "scenario")),
        raw=raw,
        schedule1=chains[0],
        schedule2=chains[1],
        spec1=specs[0],
        spec2=specs[1],
        initial1=initial1,
        initial2=initial2,
        horizon=int(raw.get("horizon", 1000)),
        n_paths=int(raw.get("n_paths", 10_000)),
        master_seed=seed,
        tail_len=int(raw.get("tail_len", 200)),
        domination_p=float(domination["p"]) if "p" in domination else None,
        series_len=int(domination.get("series_len", 2000)),
        regularity=regularity,
    )
