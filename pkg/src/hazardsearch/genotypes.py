"""Scenario and ML-component output representations.

Every individual is stored as a flat tuple of gene values. Categorical genes
and integer numeric genes are Python ints, continuous genes are floats. The
structured views (trajectories, bounding boxes) are decoded on demand.

Flattened layout of a complete solution::

    scenario params ..., then for each trajectory i:
        class, start.t, start.x_min, start.x_max, start.y_min, start.y_max,
               end.t,   end.x_min,   end.x_max,   end.y_min,   end.y_max
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

TRAJECTORY_WIDTH = 11
BOX_FIELDS = ("t", "x_min", "x_max", "y_min", "y_max")


@dataclass(frozen=True)
class ParamSpec:
    """One dimension of the genotype space."""

    name: str
    kind: str = NUMERIC
    lower: float | None = None
    upper: float | None = None
    cardinality: int | None = None
    integer: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        if self.kind == NUMERIC:
            if self.lower is None or self.upper is None:
                raise ValueError(f"{self.name}: numeric parameter needs lower and upper")
            if not self.lower < self.upper:
                raise ValueError(f"{self.name}: lower must be < upper")
        elif self.kind == CATEGORICAL:
            if self.cardinality is None or int(self.cardinality) < 2:
                raise ValueError(f"{self.name}: cardinality must be >= 2")
        else:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")

    @classmethod
    def numeric(cls, name, lower, upper, integer=False):
        return cls(name, NUMERIC, lower=lower, upper=upper, integer=integer)

    @classmethod
    def categorical(cls, name, cardinality):
        return cls(name, CATEGORICAL, cardinality=int(cardinality))

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    @property
    def width(self) -> float:
        """Normalisation range used by the distance metric."""
        if self.is_categorical:
            return float(self.cardinality)
        return float(self.upper - self.lower)

    def contains(self, value) -> bool:
        if self.is_categorical:
            return float(value).is_integer() and 0 <= value < self.cardinality
        if self.integer and not float(value).is_integer():
            return False
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        if self.is_categorical:
            return {"name": self.name, "kind": CATEGORICAL, "cardinality": self.cardinality}
        d = {"name": self.name, "kind": NUMERIC, "lower": self.lower, "upper": self.upper}
        if self.integer:
            d["integer"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSpec":
        d = dict(d)
        kind = d.pop("kind", NUMERIC)
        name = d.pop("name")
        if kind == CATEGORICAL:
            return cls.categorical(name, d.pop("cardinality"))
        return cls.numeric(name, d.pop("lower"), d.pop("upper"), bool(d.pop("integer", False)))


class ParamLayout:
    """Column-wise numpy view of an ordered list of ParamSpecs."""

    def __init__(self, params: Sequence[ParamSpec]):
        self.params = tuple(params)
        self.categorical = np.array([p.is_categorical for p in self.params], dtype=bool)
        self.integer = np.array([p.is_categorical or p.integer for p in self.params], dtype=bool)
        self.lower = np.array([0.0 if p.is_categorical else p.lower for p in self.params], dtype=float)
        self.upper = np.array(
            [p.cardinality - 1 if p.is_categorical else p.upper for p in self.params], dtype=float
        )
        self.cardinality = np.array([p.cardinality or 0 for p in self.params], dtype=np.int64)
        self.width = np.array([p.width for p in self.params], dtype=float)

    def __len__(self):
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One uniform draw per dimension."""
        out = np.empty(len(self.params))
        for i, p in enumerate(self.params):
            if p.is_categorical:
                out[i] = rng.integers(0, p.cardinality)
            elif p.integer:
                out[i] = rng.integers(int(np.ceil(p.lower)), int(np.floor(p.upper)) + 1)
            else:
                out[i] = rng.uniform(p.lower, p.upper)
        return out

    def coerce(self, values: Iterable) -> tuple:
        """Convert raw numbers to the canonical tuple (ints for integer genes)."""
        values = list(values)
        if len(values) != len(self.params):
            raise ValueError(f"expected {len(self.params)} values, got {len(values)}")
        return tuple(
            int(round(v)) if is_int else float(v) for v, is_int in zip(values, self.integer)
        )

    def contains(self, values) -> bool:
        return len(values) == len(self.params) and all(
            p.contains(v) for p, v in zip(self.params, values)
        )


@dataclass(frozen=True)
class SearchSpaceSpec:
    """The mixed categorical/numeric genotype space of one problem.

    The ML-component output half is normally derived from the trajectory
    settings (``max_trajectories`` x 11 genes). Benchmark problems that have no
    trajectories pass ``custom_mlco_params`` instead.
    """

    scenario_params: tuple[ParamSpec, ...]
    max_trajectories: int = 2
    frame_width: int = 800
    frame_height: int = 600
    class_count: int = 2
    duration: int = 100
    custom_mlco_params: tuple[ParamSpec, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "scenario_params", tuple(self.scenario_params))
        if self.custom_mlco_params is not None:
            object.__setattr__(self, "custom_mlco_params", tuple(self.custom_mlco_params))
            if not self.custom_mlco_params:
                raise ValueError("custom_mlco_params must not be empty")
        else:
            for name in ("max_trajectories", "frame_width", "frame_height", "class_count"):
                if int(getattr(self, name)) < 1:
                    raise ValueError(f"{name} must be a positive integer")
            if self.class_count < 2:
                raise ValueError("class_count must be >= 2")
            if self.duration < 2:
                raise ValueError("duration must be >= 2")
        names = [p.name for p in self.scenario_params + self.mlco_params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")

    @property
    def has_trajectories(self) -> bool:
        return self.custom_mlco_params is None

    @cached_property
    def mlco_params(self) -> tuple[ParamSpec, ...]:
        if self.custom_mlco_params is not None:
            return self.custom_mlco_params
        params = []
        for i in range(self.max_trajectories):
            params.append(ParamSpec.categorical(f"trj{i}.class", self.class_count))
            for end in ("start", "end"):
                params.append(ParamSpec.numeric(f"trj{i}.{end}.t", 1, self.duration, integer=True))
                for axis, size in (("x", self.frame_width), ("y", self.frame_height)):
                    for bound in ("min", "max"):
                        params.append(
                            ParamSpec.numeric(f"trj{i}.{end}.{axis}_{bound}", 0, size, integer=True)
                        )
        return tuple(params)

    @cached_property
    def scenario_layout(self) -> ParamLayout:
        return ParamLayout(self.scenario_params)

    @cached_property
    def mlco_layout(self) -> ParamLayout:
        return ParamLayout(self.mlco_params)

    @cached_property
    def layout(self) -> ParamLayout:
        return ParamLayout(self.scenario_params + self.mlco_params)

    @property
    def n_scenario(self) -> int:
        return len(self.scenario_params)

    @property
    def n_mlco(self) -> int:
        return len(self.mlco_params)

    @property
    def dimensionality(self) -> int:
        return self.n_scenario + self.n_mlco

    def to_dict(self) -> dict:
        d = {"scenario_params": [p.to_dict() for p in self.scenario_params]}
        if self.custom_mlco_params is not None:
            d["custom_mlco_params"] = [p.to_dict() for p in self.custom_mlco_params]
        else:
            d["mlco"] = {
                "max_trajectories": self.max_trajectories,
                "frame_width": self.frame_width,
                "frame_height": self.frame_height,
                "class_count": self.class_count,
                "duration": self.duration,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpaceSpec":
        scenario = tuple(ParamSpec.from_dict(p) for p in d.get("scenario_params", []))
        if d.get("custom_mlco_params") is not None:
            custom = tuple(ParamSpec.from_dict(p) for p in d["custom_mlco_params"])
            return cls(scenario, custom_mlco_params=custom)
        return cls(scenario, **dict(d.get("mlco", {})))


def case_study_space(duration: int = 100) -> SearchSpaceSpec:
    """Seven scenario parameters plus two obstacle trajectories (29 genes)."""
    scenario = (
        ParamSpec.categorical("road_type", 3),
        ParamSpec.categorical("road_id", 4),
        ParamSpec.categorical("scenario_length", 2),
        ParamSpec.categorical("vehicle_front", 2),
        ParamSpec.categorical("vehicle_adjacent", 2),
        ParamSpec.categorical("time_of_day", 3),
        ParamSpec.categorical("weather", 7),
    )
    return SearchSpaceSpec(scenario, max_trajectories=2, frame_width=800, frame_height=600,
                           class_count=2, duration=duration)


@dataclass(frozen=True)
class BoundaryBox:
    t: int
    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.t, self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class Trajectory:
    label: int
    start: BoundaryBox
    end: BoundaryBox

    def as_tuple(self) -> tuple:
        return (self.label,) + self.start.as_tuple() + self.end.as_tuple()

    @classmethod
    def from_values(cls, values: Sequence[int]) -> "Trajectory":
        v = [int(x) for x in values]
        return cls(v[0], BoundaryBox(*v[1:6]), BoundaryBox(*v[6:11]))


@dataclass(frozen=True)
class Scenario:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class MlcOutputSequence:
    """Output sequence of the ML component, as flat gene values."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def from_trajectories(cls, trajectories: Iterable[Trajectory]) -> "MlcOutputSequence":
        values: tuple = ()
        for trj in trajectories:
            values += trj.as_tuple()
        return cls(values)

    @property
    def trajectories(self) -> tuple[Trajectory, ...]:
        if len(self.values) % TRAJECTORY_WIDTH:
            raise ValueError("values do not encode whole trajectories")
        return tuple(
            Trajectory.from_values(self.values[i:i + TRAJECTORY_WIDTH])
            for i in range(0, len(self.values), TRAJECTORY_WIDTH)
        )


@dataclass(frozen=True, eq=False)
class CompleteSolution:
    """A scenario joined with an output sequence, plus evaluation results.

    Two solutions are equal iff their flattened gene vectors are equal;
    verdict and fitness do not take part in equality.
    """

    scenario: Scenario
    mlco: MlcOutputSequence
    is_unsafe: bool | None = None
    fitness: float | None = None
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.fitness is not None and self.is_unsafe is None:
            raise ValueError("fitness requires a verdict")
        object.__setattr__(self, "key", self.scenario.values + self.mlco.values)

    def __eq__(self, other):
        if not isinstance(other, CompleteSolution):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def random_scenario(spec: SearchSpaceSpec, rng: np.random.Generator) -> Scenario:
    return Scenario(spec.scenario_layout.coerce(spec.scenario_layout.sample(rng)))


def random_mlco(spec: SearchSpaceSpec, rng: np.random.Generator) -> MlcOutputSequence:
    values = repair_mlco_vector(spec.mlco_layout.sample(rng), spec)
    return MlcOutputSequence(spec.mlco_layout.coerce(values))


def random_solution(spec: SearchSpaceSpec, rng: np.random.Generator) -> CompleteSolution:
    return CompleteSolution(random_scenario(spec, rng), random_mlco(spec, rng))


def interpolate_trajectory(trj: Trajectory, t: int) -> BoundaryBox:
    """Bounding box of ``trj`` at time ``t``, rounded half-up to whole pixels."""
    t0, t1 = trj.start.t, trj.end.t
    if not t0 <= t <= t1:
        raise ValueError(f"t={t} outside trajectory time span [{t0}, {t1}]")
    if t1 == t0:
        return trj.start
    den = t1 - t0
    coords = []
    for a, b in zip(trj.start.as_tuple()[1:], trj.end.as_tuple()[1:]):
        num = a * den + (b - a) * (t - t0)
        coords.append((2 * num + den) // (2 * den))
    return BoundaryBox(t, *coords)


def trajectory_boxes(trj: Trajectory) -> list[BoundaryBox]:
    return [interpolate_trajectory(trj, t) for t in range(trj.start.t, trj.end.t + 1)]


def repair_vector(values, layout: ParamLayout) -> np.ndarray:
    """Clamp numeric genes, round integer genes, wrap categorical codes."""
    v = np.asarray(values, dtype=float).copy()
    cat = layout.categorical
    v[cat] = np.mod(np.round(v[cat]), layout.cardinality[cat])
    rounded = layout.integer & ~cat
    v[rounded] = np.round(v[rounded])
    num = ~cat
    v[num] = np.clip(v[num], layout.lower[num], layout.upper[num])
    return v


def _order_trajectories(v: np.ndarray, offset: int, n_trajectories: int) -> None:
    for i in range(n_trajectories):
        b = offset + i * TRAJECTORY_WIDTH
        for lo, hi in ((b + 1, b + 6), (b + 2, b + 3), (b + 4, b + 5), (b + 7, b + 8), (b + 9, b + 10)):
            if v[lo] > v[hi]:
                v[lo], v[hi] = v[hi], v[lo]


def repair_mlco_vector(values, spec: SearchSpaceSpec) -> np.ndarray:
    v = repair_vector(values, spec.mlco_layout)
    if spec.has_trajectories:
        _order_trajectories(v, 0, spec.max_trajectories)
    return v


def repair_joint_vector(values, spec: SearchSpaceSpec) -> np.ndarray:
    v = repair_vector(values, spec.layout)
    if spec.has_trajectories:
        _order_trajectories(v, spec.n_scenario, spec.max_trajectories)
    return v


def repair(part, spec: SearchSpaceSpec):
    """Return a valid copy of a Scenario, MlcOutputSequence or CompleteSolution."""
    if isinstance(part, Scenario):
        return Scenario(spec.scenario_layout.coerce(repair_vector(part.values, spec.scenario_layout)))
    if isinstance(part, MlcOutputSequence):
        return MlcOutputSequence(spec.mlco_layout.coerce(repair_mlco_vector(part.values, spec)))
    if isinstance(part, CompleteSolution):
        return CompleteSolution(repair(part.scenario, spec), repair(part.mlco, spec))
    raise TypeError(f"cannot repair {type(part).__name__}")


def is_valid(part, spec: SearchSpaceSpec) -> bool:
    if isinstance(part, CompleteSolution):
        return is_valid(part.scenario, spec) and is_valid(part.mlco, spec)
    if isinstance(part, Scenario):
        return spec.scenario_layout.contains(part.values)
    if isinstance(part, MlcOutputSequence):
        if not spec.mlco_layout.contains(part.values):
            return False
        if spec.has_trajectories:
            for trj in part.trajectories:
                if trj.start.t > trj.end.t:
                    return False
                for box in (trj.start, trj.end):
                    if box.x_min > box.x_max or box.y_min > box.y_max:
                        return False
        return True
    raise TypeError(f"cannot validate {type(part).__name__}")


def flatten(solution: CompleteSolution, spec: SearchSpaceSpec | None = None) -> tuple:
    if spec is not None and len(solution.key) != spec.dimensionality:
        raise ValueError(
            f"solution has {len(solution.key)} genes, space expects {spec.dimensionality}"
        )
    return solution.key


def unflatten(values, spec: SearchSpaceSpec, is_unsafe=None, fitness=None) -> CompleteSolution:
    values = spec.layout.coerce(values)
    k = spec.n_scenario
    return CompleteSolution(Scenario(values[:k]), MlcOutputSequence(values[k:]), is_unsafe, fitness)


def _json_number(v):
    return v if isinstance(v, int) else float(v)


def solution_to_json(solution: CompleteSolution, spec: SearchSpaceSpec) -> dict:
    """Canonical JSON object of one solution."""
    if spec.has_trajectories:
        mlco = [[t.label, list(t.start.as_tuple()), list(t.end.as_tuple())]
                for t in solution.mlco.trajectories]
    else:
        mlco = [_json_number(v) for v in solution.mlco.values]
    return {
        "scenario": [_json_number(v) for v in solution.scenario.values],
        "mlco": mlco,
        "is_unsafe": solution.is_unsafe,
        "fitness": solution.fitness,
    }


def solution_from_json(obj: dict, spec: SearchSpaceSpec) -> CompleteSolution:
    scenario = spec.scenario_layout.coerce(obj["scenario"])
    if spec.has_trajectories:
        flat = []
        for label, start, end in obj["mlco"]:
            flat.extend([label, *start, *end])
        mlco = spec.mlco_layout.coerce(flat)
    else:
        mlco = spec.mlco_layout.coerce(obj["mlco"])
    return CompleteSolution(Scenario(scenario), MlcOutputSequence(mlco),
                            obj.get("is_unsafe"), obj.get("fitness"))
