"""Experiment configuration: parsing, validation with field diagnostics,
and construction of the oracle and search estimator it describes.

Configs are YAML (JSON is accepted too, being a YAML subset)::

    method: mlcshe            # mlcshe | ga | rs
    oracle:
      kind: synthetic         # synthetic | mtq | onemax | external
      params: {...}           # keyword arguments of the oracle
    space: {...}              # search space; "case_study" or a mapping
    params: {n: 10, budget: 1300}
    fitness: {delta: 0.25, p_th: 0.1, z: 1.96}
    repeats: 10
    base_seed: 0
    workers: 2
    jobs: 1
    output_dir: results/demo
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .baselines import GeneticSearch, RandomSearch
from .ccea import MLCSHE, BaseSearch
from .genotypes import SearchSpaceSpec, case_study_space
from .oracles import (
    ExternalProcessOracle,
    MTQOracle,
    OnemaxOracle,
    SafetyOracle,
    SyntheticRegionOracle,
    mtq_space,
    onemax_space,
)

METHODS = {"mlcshe": MLCSHE, "ga": GeneticSearch, "rs": RandomSearch}
ORACLE_KINDS = ("synthetic", "mtq", "onemax", "external")
FITNESS_KEYS = ("delta", "p_th", "z")
RESULTS_ROOT_ENV = "HAZARDSEARCH_RESULTS_ROOT"
TOP_LEVEL = ("method", "oracle", "space", "params", "fitness", "repeats", "base_seed",
             "workers", "jobs", "output_dir")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted field location."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path, self.message, self.line = path, message, line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path or '<root>'}: {message}")


def results_root() -> Path | None:
    value = os.environ.get(RESULTS_ROOT_ENV)
    return Path(value) if value else None


def resolve_results_path(path) -> Path:
    """Relative result paths live under the results root when the override is set."""
    p = Path(path)
    root = results_root()
    if root is not None and not p.is_absolute():
        return root / p
    return p


@dataclass
class ExperimentConfig:
    method: str
    oracle: dict
    space: dict | None = None
    params: dict = field(default_factory=dict)
    fitness: dict = field(default_factory=dict)
    repeats: int = 1
    base_seed: int = 0
    workers: int = 2
    jobs: int = 1
    output_dir: str = "results"

    # parsing ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, raw) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("", "config must be a mapping")
        unknown = sorted(set(raw) - set(TOP_LEVEL))
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        if "method" not in raw:
            raise ConfigError("method", "required field is missing")
        if "oracle" not in raw:
            raise ConfigError("oracle", "required field is missing")
        cfg = cls(
            method=raw["method"],
            oracle=copy.deepcopy(raw["oracle"]),
            space=copy.deepcopy(raw.get("space")),
            params=copy.deepcopy(raw.get("params") or {}),
            fitness=copy.deepcopy(raw.get("fitness") or {}),
            repeats=raw.get("repeats", 1),
            base_seed=raw.get("base_seed", 0),
            workers=raw.get("workers", 2),
            jobs=raw.get("jobs", 1),
            output_dir=raw.get("output_dir", "results"),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "oracle": copy.deepcopy(self.oracle),
            "space": copy.deepcopy(self.space),
            "params": copy.deepcopy(self.params),
            "fitness": copy.deepcopy(self.fitness),
            "repeats": self.repeats,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "jobs": self.jobs,
            "output_dir": self.output_dir,
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # validation ------------------------------------------------------------

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {sorted(METHODS)}, got {self.method!r}")
        for name, minimum in (("repeats", 1), ("workers", 1), ("jobs", 1), ("base_seed", 0)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                raise ConfigError(name, f"must be an integer >= {minimum}, got {value!r}")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError("output_dir", "must be a non-empty string")
        for section in ("params", "fitness"):
            if not isinstance(getattr(self, section), dict):
                raise ConfigError(section, "must be a mapping")
        for key in self.fitness:
            if key not in FITNESS_KEYS:
                raise ConfigError(f"fitness.{key}", f"unknown field; expected one of {FITNESS_KEYS}")
        for key in FITNESS_KEYS:
            if key in self.params:
                raise ConfigError(f"params.{key}", "belongs in the fitness section")
        for key in ("random_state", "workers"):
            if key in self.params:
                raise ConfigError(f"params.{key}", "is set by the harness (base_seed / workers)")
        self._validate_oracle_section()
        space = self.search_space()
        self.estimator(0)
        if self.oracle["kind"] == "synthetic":
            try:
                self.build_oracle(space)
            except (TypeError, ValueError) as exc:
                raise ConfigError("oracle.params", str(exc)) from None

    def _validate_oracle_section(self) -> None:
        o = self.oracle
        if not isinstance(o, dict):
            raise ConfigError("oracle", "must be a mapping")
        kind = o.get("kind")
        if kind not in ORACLE_KINDS:
            raise ConfigError("oracle.kind", f"must be one of {list(ORACLE_KINDS)}, got {kind!r}")
        allowed = {"kind", "params"} | ({"command", "timeout", "pool_size"} if kind == "external" else set())
        extra = sorted(set(o) - allowed)
        if extra:
            raise ConfigError(f"oracle.{extra[0]}", "unknown field")
        if not isinstance(o.get("params", {}), dict):
            raise ConfigError("oracle.params", "must be a mapping")
        if kind == "external":
            cmd = o.get("command")
            if not cmd or not isinstance(cmd, (str, list)):
                raise ConfigError("oracle.command", "external oracle needs a command")
            timeout = o.get("timeout", 60)
            if not isinstance(timeout, (int, float)) or isinstance(timeout, bool) or timeout <= 0:
                raise ConfigError("oracle.timeout", "must be a positive number")
            pool = o.get("pool_size", self.workers)
            if not isinstance(pool, int) or pool < 1:
                raise ConfigError("oracle.pool_size", "must be a positive integer")
        if kind in ("mtq", "onemax") and self.space is not None:
            raise ConfigError("space", f"the {kind} oracle defines its own space; remove this field")
        if kind in ("synthetic", "external") and self.space is None:
            raise ConfigError("space", f"the {kind} oracle needs a search space")

    # construction ----------------------------------------------------------

    def search_space(self) -> SearchSpaceSpec:
        kind = self.oracle["kind"]
        params = self.oracle.get("params", {})
        if kind == "mtq":
            return mtq_space()
        if kind == "onemax":
            try:
                return onemax_space(int(params["scenario_bits"]), int(params["mlco_bits"]))
            except KeyError as exc:
                raise ConfigError(f"oracle.params.{exc.args[0]}", "required field is missing") from None
        if self.space == "case_study":
            return case_study_space()
        if isinstance(self.space, dict) and "case_study" in self.space:
            return case_study_space(**self.space["case_study"])
        if not isinstance(self.space, dict):
            raise ConfigError("space", "must be 'case_study' or a mapping")
        try:
            return SearchSpaceSpec.from_dict(self.space)
        except KeyError as exc:
            raise ConfigError("space", f"missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError("space", str(exc)) from None

    def build_oracle(self, space: SearchSpaceSpec | None = None) -> SafetyOracle:
        space = space or self.search_space()
        kind = self.oracle["kind"]
        params = dict(self.oracle.get("params", {}))
        if kind == "synthetic":
            return SyntheticRegionOracle(space, **params)
        if kind == "mtq":
            return MTQOracle(**params)
        if kind == "onemax":
            return OnemaxOracle(space, params["threshold"])
        return ExternalProcessOracle(self.oracle["command"], space,
                                     timeout=self.oracle.get("timeout", 60),
                                     pool_size=self.oracle.get("pool_size", self.workers))

    def seed(self, repeat: int) -> int:
        return self.base_seed + repeat

    def estimator(self, repeat: int) -> BaseSearch:
        cls = METHODS[self.method]
        kwargs = dict(self.params)
        kwargs.update(self.fitness)
        try:
            est = cls(**kwargs, workers=self.workers, random_state=self.seed(repeat))
        except TypeError:
            valid = set(cls().get_params())
            bad = sorted(set(self.params) - valid)
            raise ConfigError(f"params.{bad[0]}" if bad else "params",
                              f"not a {self.method} hyperparameter") from None
        try:
            est._validate_params()
        except ValueError as exc:
            name = str(exc).split(" ", 1)[0]
            section = "fitness" if name in FITNESS_KEYS else "params"
            raise ConfigError(f"{section}.{name}", str(exc)) from None
        return est

    def output_path(self) -> Path:
        return resolve_results_path(self.output_dir)


def _node_line(root, path: str) -> int | None:
    """1-based line of the YAML node at a dotted path (closest ancestor found)."""
    node, line = root, None
    for part in [p for p in path.split(".") if p]:
        if not isinstance(node, yaml.MappingNode):
            break
        for key, value in node.value:
            if key.value == part:
                line, node = key.start_mark.line + 1, value
                break
        else:
            break
    return line


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("", f"cannot parse: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    try:
        return ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        if exc.line is None and root is not None:
            raise ConfigError(exc.path, exc.message, _node_line(root, exc.path)) from None
        raise


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def save_config(cfg: ExperimentConfig, path) -> None:
    p = Path(path)
    if p.suffix == ".json":
        p.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        p.write_text(cfg.dump(), encoding="utf-8")
