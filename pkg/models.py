"""
File Formats

Pydantic schemas of every input file: polymer models, weight assignments and
BEG parameter sets. Loaders turn JSON syntax errors into line/column
diagnostics and schema violations into JSON-path diagnostics.
"""

import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from cluster.beg import BegParams, Window
from cluster.errors import ModelFileError
from cluster.model import ExtendedReal, PolymerSpace, WeightAssignment

PotentialValue = Union[float, str]


class PolymerEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    activity: float = Field(ge=0.0, allow_inf_nan=False)
    B: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)


class ModelFile(BaseModel):
    """
    A finite polymer space.

    ``potential`` is a sparse list of [id, id, value] rows where value is a
    finite number or "inf"; unlisted pairs, the diagonal included, take
    ``default_potential``.
    """

    model_config = ConfigDict(extra="forbid")

    polymers: List[PolymerEntry] = Field(min_length=1)
    potential: List[Tuple[str, str, PotentialValue]] = Field(default_factory=list)
    default_potential: float = Field(default=0.0, allow_inf_nan=False)
    tail: Optional[List[float]] = None

    @field_validator("potential")
    @classmethod
    def check_values(cls, rows: List[Tuple[str, str, PotentialValue]]) -> List[Tuple[str, str, PotentialValue]]:
        normalized = []
        for a, b, value in rows:
            if isinstance(value, str):
                value = ExtendedReal.of(value).to_json()
            elif math.isnan(value) or value == -math.inf:
                raise ValueError(f"potential of ({a}, {b}) must be finite or +inf, got {value}")
            elif value == math.inf:
                value = "inf"
            normalized.append((a, b, value))
        return normalized

    @model_validator(mode="after")
    def check_ids(self) -> "ModelFile":
        ids = [p.id for p in self.polymers]
        if len(set(ids)) != len(ids):
            raise ValueError("polymer ids must be unique")
        known = set(ids)
        for a, b, _ in self.potential:
            for name in (a, b):
                if name not in known:
                    raise ValueError(f"potential row names unknown polymer {name!r}")
        if self.tail is not None and (len(self.tail) != len(ids) or any(t < 0 for t in self.tail)):
            raise ValueError("tail needs one nonnegative entry per polymer")
        return self

    def to_space(self) -> PolymerSpace:
        ids = [p.id for p in self.polymers]
        position = {name: k for k, name in enumerate(ids)}
        return PolymerSpace.from_entries(
            ids=ids,
            rho=[p.activity for p in self.polymers],
            B=[p.B for p in self.polymers],
            entries=[(position[a], position[b], value) for a, b, value in self.potential],
            default_potential=self.default_potential,
            tail=self.tail,
        )

    @classmethod
    def from_space(cls, space: PolymerSpace) -> "ModelFile":
        return cls(
            polymers=[
                PolymerEntry(id=space.ids[k], activity=float(space.rho[k]), B=float(space.B[k]))
                for k in range(space.size)
            ],
            potential=[(space.ids[i], space.ids[j], value.to_json()) for i, j, value in space.entries()],
            default_potential=space.default_potential,
            tail=None if space.tail is None else [float(t) for t in space.tail],
        )


class WeightFile(BaseModel):
    """mu per polymer id."""

    model_config = ConfigDict(extra="forbid")

    mu: Dict[str, float]

    @field_validator("mu")
    @classmethod
    def check_weights(cls, mu: Dict[str, float]) -> Dict[str, float]:
        for name, value in mu.items():
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"weight of {name!r} must be finite and nonnegative")
        return mu

    def to_weights(self, space: PolymerSpace) -> WeightAssignment:
        missing = [name for name in space.ids if name not in self.mu]
        if missing:
            raise ValueError(f"no weight for polymers {missing}")
        extra = sorted(set(self.mu) - set(space.ids))
        if extra:
            raise ValueError(f"weights name unknown polymers {extra}")
        return WeightAssignment(np.array([self.mu[name] for name in space.ids]))

    @classmethod
    def from_weights(cls, space: PolymerSpace, mu: WeightAssignment) -> "WeightFile":
        return cls(mu={space.ids[k]: float(mu.values[k]) for k in range(space.size)})


class BegParamsFile(BaseModel):
    """BEG parameters plus the window and truncation size of a scenario."""

    model_config = ConfigDict(extra="forbid")

    d: int = 2
    D: Optional[float] = None
    gap: Optional[float] = None
    J1: float = 1.0
    lam: float = 1.0
    lam_prime: float = 2.0
    c: float = 1.0
    beta: float = 1.0
    j_amp: Optional[float] = None
    k_amp: float = 0.0
    table: List[Tuple[float, float]] = Field(default_factory=list)
    power_law_tail: bool = True
    alpha: float = 0.5
    window: List[int] = Field(default_factory=lambda: [3, 3])
    n_max: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def check_model(self) -> "BegParamsFile":
        params = self.to_params()
        if len(self.window) != params.d:
            raise ValueError(f"window has {len(self.window)} sides, the lattice dimension is {params.d}")
        Window(tuple(self.window))
        return self

    def to_params(self) -> BegParams:
        return BegParams(
            d=self.d,
            D=self.D,
            gap=self.gap,
            J1=self.J1,
            lam=self.lam,
            lam_prime=self.lam_prime,
            c=self.c,
            beta=self.beta,
            j_amp=self.j_amp,
            k_amp=self.k_amp,
            table=tuple(tuple(row) for row in self.table),
            power_law_tail=self.power_law_tail,
            alpha=self.alpha,
        )

    def to_window(self) -> Window:
        return Window(tuple(self.window))


Schema = TypeVar("Schema", bound=BaseModel)


def parse_file(path: Union[str, Path], schema: Type[Schema]) -> Schema:
    """
    Read and validate one JSON file.

    Raises:
        ModelFileError: with line and column for JSON syntax errors, with the
            JSON path for schema violations
    """
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ModelFileError(f"cannot read file: {e.strerror}", path=path) from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(e.msg, path=path, line=e.lineno, column=e.colno) from e
    try:
        return schema.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ModelFileError(first["msg"], path=path, location=location) from e


def load_model(path: Union[str, Path]) -> PolymerSpace:
    model = parse_file(path, ModelFile)
    try:
        return model.to_space()
    except ValueError as e:
        raise ModelFileError(str(e), path=str(path), location="potential") from e


def dump_model(space: PolymerSpace) -> str:
    """JSON text of the space; floats are written in repr form so reloading is bit-exact."""
    return json.dumps(ModelFile.from_space(space).model_dump(), indent=2) + "\n"


def load_weights(path: Union[str, Path], space: PolymerSpace) -> WeightAssignment:
    weights = parse_file(path, WeightFile)
    try:
        return weights.to_weights(space)
    except ValueError as e:
        raise ModelFileError(str(e), path=str(path), location="mu") from e


def dump_weights(space: PolymerSpace, mu: WeightAssignment) -> str:
    return json.dumps(WeightFile.from_weights(space, mu).model_dump(), indent=2) + "\n"


def load_beg_params(path: Union[str, Path]) -> BegParamsFile:
    return parse_file(path, BegParamsFile)
