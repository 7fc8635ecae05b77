from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Mapping, Optional

import numpy as np

from metatune.errors import EncodingError, InvalidSpaceError

Genotype = np.ndarray
"""Normalized real vector, one entry in [0, 1] per dimension"""


class ParamKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    CATEGORICAL = "categorical"


class Scale(Enum):
    LINEAR = "linear"
    LOG10 = "log10"


@dataclass(frozen=True)
class ParamSpec:
    """One dimension of a search space"""

    name: str
    kind: ParamKind
    lower: Optional[float] = None
    upper: Optional[float] = None
    choices: tuple[Any, ...] = ()
    scale: Scale = Scale.LINEAR

    def __post_init__(self):
        if not self.name:
            raise InvalidSpaceError("Dimension name must not be empty")
        if self.kind == ParamKind.CATEGORICAL:
            if len(self.choices) == 0:
                raise InvalidSpaceError(f"Categorical dimension '{self.name}' has no choices")
            if len(set(map(repr, self.choices))) != len(self.choices):
                raise InvalidSpaceError(f"Categorical dimension '{self.name}' has duplicate choices")
            return
        if self.lower is None or self.upper is None:
            raise InvalidSpaceError(f"Dimension '{self.name}' requires lower and upper bounds")
        if not self.lower < self.upper:
            raise InvalidSpaceError(f"Dimension '{self.name}': lower must be < upper")
        if self.scale == Scale.LOG10:
            if self.kind != ParamKind.CONTINUOUS:
                raise InvalidSpaceError(f"Dimension '{self.name}': log10 scale is for continuous dims only")
            if self.lower <= 0:
                raise InvalidSpaceError(f"Dimension '{self.name}': log10 scale requires lower > 0")

    @property
    def is_continuous(self) -> bool:
        return self.kind == ParamKind.CONTINUOUS

    def decode(self, v: float) -> Any:
        """Maps a normalized value onto this dimension

        Args:
            v (float): value in [0, 1]

        Returns:
            Any: the decoded real, integer or categorical choice
        """
        if self.kind == ParamKind.CATEGORICAL:
            n: int = len(self.choices)
            return self.choices[min(math.floor(v * n), n - 1)]

        lower: float = float(self.lower)  # type: ignore[arg-type]
        upper: float = float(self.upper)  # type: ignore[arg-type]
        if self.kind == ParamKind.INTEGER:
            # Half-up rounding
            return int(math.floor(lower + v * (upper - lower) + 0.5))
        if self.scale == Scale.LOG10:
            lo, hi = math.log10(lower), math.log10(upper)
            return float(10 ** (lo + v * (hi - lo)))
        return float(lower + v * (upper - lower))

    def contains(self, value: Any) -> bool:
        if self.kind == ParamKind.CATEGORICAL:
            return value in self.choices
        return self.lower <= value <= self.upper  # type: ignore[operator]

    def to_entry(self) -> dict[str, Any]:
        entry: dict[str, Any] = {"name": self.name, "kind": self.kind.value}
        if self.kind == ParamKind.CATEGORICAL:
            entry["choices"] = list(self.choices)
        else:
            entry["lower"] = self.lower
            entry["upper"] = self.upper
            if self.kind == ParamKind.CONTINUOUS:
                entry["scale"] = self.scale.value
        return entry

    @staticmethod
    def from_entry(entry: Mapping[str, Any]) -> ParamSpec:
        try:
            kind: ParamKind = ParamKind(entry["kind"])
            return ParamSpec(
                name=entry["name"],
                kind=kind,
                lower=entry.get("lower"),
                upper=entry.get("upper"),
                choices=tuple(entry.get("choices", ())),
                scale=Scale(entry.get("scale", "linear")),
            )
        except KeyError as e:
            raise InvalidSpaceError(f"Dimension entry is missing field {e}") from e
        except ValueError as e:
            if isinstance(e, InvalidSpaceError):
                raise
            raise InvalidSpaceError(str(e)) from e


@dataclass(frozen=True)
class Configuration:
    """Decoded assignment of every dimension of a space"""

    assignments: Mapping[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Any:
        return self.assignments[name]

    def __contains__(self, name: object) -> bool:
        return name in self.assignments

    def __iter__(self) -> Iterator[str]:
        return iter(self.assignments)

    def get(self, name: str, default: Any = None) -> Any:
        return self.assignments.get(name, default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self.assignments)

    def merged(self, other: Mapping[str, Any]) -> Configuration:
        values: dict[str, Any] = dict(self.assignments)
        values.update(other)
        return Configuration(values)

    def fingerprint(self) -> str:
        """Stable hash of the assignments, independent of insertion order"""
        payload: str = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SearchSpace:
    """Ordered list of dimensions; the order defines the genotype layout"""

    dims: tuple[ParamSpec, ...] = ()

    def __post_init__(self):
        names: list[str] = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise InvalidSpaceError(f"Duplicate dimension names in {names}")

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[ParamSpec]:
        return iter(self.dims)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def dim(self, name: str) -> ParamSpec:
        for d in self.dims:
            if d.name == name:
                return d
        raise KeyError(name)

    def indices_of(self, kinds: Iterable[ParamKind]) -> list[int]:
        wanted: set[ParamKind] = set(kinds)
        return [i for i, d in enumerate(self.dims) if d.kind in wanted]

    def project(self, kinds: Iterable[ParamKind]) -> tuple[SearchSpace, list[int]]:
        """Sub-space made of the dimensions of the given kinds

        Returns:
            tuple[SearchSpace, list[int]]: the sub-space and the positions of its
                dimensions in this space
        """
        indices: list[int] = self.indices_of(kinds)
        return SearchSpace(tuple(self.dims[i] for i in indices)), indices

    def to_entries(self) -> list[dict[str, Any]]:
        return [d.to_entry() for d in self.dims]

    @staticmethod
    def from_entries(entries: Iterable[Mapping[str, Any]]) -> SearchSpace:
        return SearchSpace(tuple(ParamSpec.from_entry(e) for e in entries))


def clip(values: Iterable[float] | np.ndarray) -> Genotype:
    return np.clip(np.asarray(values, dtype=float), 0.0, 1.0)


def sample(space: SearchSpace, rng: np.random.Generator) -> Genotype:
    """Draws a genotype uniformly from the normalized box"""
    return rng.random(len(space))


def decode(space: SearchSpace, g: Genotype | Iterable[float]) -> Configuration:
    """Decodes a normalized genotype into named hyperparameters

    Args:
        space (SearchSpace): the search space
        g (Genotype): one value in [0, 1] per dimension

    Raises:
        EncodingError: if the length does not match or an entry lies outside [0, 1]

    Returns:
        Configuration: the decoded assignment
    """
    values: np.ndarray = np.asarray(g, dtype=float)
    if values.shape != (len(space),):
        raise EncodingError(f"Genotype of shape {values.shape} does not match a {len(space)}-dim space")
    for d, v in zip(space.dims, values):
        if not 0.0 <= v <= 1.0:
            raise EncodingError(f"Entry {v!r} for '{d.name}' lies outside [0, 1]; clip first")
    return Configuration({d.name: d.decode(float(v)) for d, v in zip(space.dims, values)})


def default_anxiety_space() -> SearchSpace:
    """The six-dimension classifier space: learning rate, batch size, dropout, width, depth, heads"""
    return SearchSpace((
        ParamSpec("learning_rate", ParamKind.CONTINUOUS, 1e-5, 1e-2, scale=Scale.LOG10),
        ParamSpec("batch_size", ParamKind.CATEGORICAL, choices=(16, 32, 64)),
        ParamSpec("dropout", ParamKind.CONTINUOUS, 0.2, 0.6),
        ParamSpec("hidden_units", ParamKind.CATEGORICAL, choices=(64, 128, 256, 512)),
        ParamSpec("num_layers", ParamKind.INTEGER, 1, 3),
        ParamSpec("attention_heads", ParamKind.CATEGORICAL, choices=(2, 4, 8)),
    ))


def extended_anxiety_space() -> SearchSpace:
    """Default space plus optimizer type and weight decay"""
    return SearchSpace(default_anxiety_space().dims + (
        ParamSpec("optimizer_kind", ParamKind.CATEGORICAL, choices=("adam", "adamw", "sgd")),
        ParamSpec("weight_decay", ParamKind.CONTINUOUS, 1e-6, 1e-2, scale=Scale.LOG10),
    ))
