"""
Polymer Space

Polymers with activities, a symmetric pair potential valued in R ∪ {+inf},
the stability function B and the interaction kernel F used by the
convergence criterion.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, total_ordering
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapacityError

logger = logging.getLogger(__name__)

DEFAULT_MAX_MULTISETS = 2_000_000
STABILITY_TOLERANCE = 1e-12


@total_ordering
@dataclass(frozen=True, eq=True)
class ExtendedReal:
    """
    A finite real or +inf, kept as a tagged value.

    The infinite flag carries incompatibility; ``value`` is 0.0 whenever the
    flag is set so equality stays structural.
    """

    value: float = 0.0
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "value", 0.0)
        elif not math.isfinite(self.value):
            raise ValueError(f"finite branch received {self.value!r}")

    @classmethod
    def inf(cls) -> "ExtendedReal":
        return cls(infinite=True)

    @classmethod
    def of(cls, raw: Union[float, str, "ExtendedReal"]) -> "ExtendedReal":
        if isinstance(raw, ExtendedReal):
            return raw
        if isinstance(raw, str):
            if raw.strip().lower() in ("inf", "+inf", "infinity"):
                return cls.inf()
            raise ValueError(f"unrecognized potential value {raw!r}")
        if math.isinf(raw) and raw > 0:
            return cls.inf()
        return cls(float(raw))

    def __add__(self, other: "ExtendedReal") -> "ExtendedReal":
        other = ExtendedReal.of(other)
        if self.infinite or other.infinite:
            return ExtendedReal.inf()
        return ExtendedReal(self.value + other.value)

    __radd__ = __add__

    def __lt__(self, other: "ExtendedReal") -> bool:
        other = ExtendedReal.of(other)
        if self.infinite:
            return False
        if other.infinite:
            return True
        return self.value < other.value

    def exp_neg(self) -> float:
        """e^{-x}, with e^{-inf} = 0."""
        return 0.0 if self.infinite else math.exp(-self.value)

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def to_json(self) -> Union[float, str]:
        return "inf" if self.infinite else self.value

    def __repr__(self) -> str:
        return "+inf" if self.infinite else repr(self.value)


ZERO = ExtendedReal(0.0)
INF = ExtendedReal.inf()


DENSE_LIMIT = 4096


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=bool if array.dtype == bool else float, copy=True)
    array.setflags(write=False)
    return array


def _mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for j in indices:
        mask |= 1 << int(j)
    return mask


class PairTable(ABC):
    """
    Symmetric pair potential over polymer indices 0..size-1.

    ``finite_value`` is the finite part of V (0.0 on incompatible pairs) and
    ``is_incompatible`` the +inf flag.
    """

    def __init__(self, size: int):
        self.size = size
        self._masks: Dict[int, int] = {}

    @abstractmethod
    def finite_value(self, i: int, j: int) -> float:
        pass

    @abstractmethod
    def is_incompatible(self, i: int, j: int) -> bool:
        pass

    def compatible_mask(self, i: int) -> int:
        """Bitmask of every j compatible with i, i itself included when allowed."""
        if i not in self._masks:
            self._masks[i] = _mask_of(j for j in range(self.size) if not self.is_incompatible(i, j))
        return self._masks[i]

    def dense(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.size > DENSE_LIMIT:
            raise CapacityError("dense pair table", self.size, DENSE_LIMIT)
        potential = np.zeros((self.size, self.size))
        incompatible = np.zeros((self.size, self.size), dtype=bool)
        for i in range(self.size):
            for j in range(i, self.size):
                if self.is_incompatible(i, j):
                    incompatible[i, j] = incompatible[j, i] = True
                else:
                    potential[i, j] = potential[j, i] = self.finite_value(i, j)
        return potential, incompatible


class DensePairTable(PairTable):
    """Pair potential held as two read-only square arrays."""

    def __init__(self, potential: np.ndarray, incompatible: np.ndarray):
        potential = _frozen(np.asarray(potential, dtype=float))
        incompatible = _frozen(np.asarray(incompatible, dtype=bool))
        if potential.ndim != 2 or potential.shape[0] != potential.shape[1]:
            raise ValueError("potential table must be square")
        if incompatible.shape != potential.shape:
            raise ValueError("incompatibility mask must match the potential table")
        if not np.all(np.isfinite(potential)):
            raise ValueError("finite potential part contains a non-finite entry")
        if not np.array_equal(potential, potential.T) or not np.array_equal(
            incompatible, incompatible.T
        ):
            raise ValueError("pair potential must be symmetric")
        super().__init__(potential.shape[0])
        self.potential = np.where(incompatible, 0.0, potential)
        self.potential.setflags(write=False)
        self.incompatible = incompatible

    def finite_value(self, i: int, j: int) -> float:
        return float(self.potential[i, j])

    def is_incompatible(self, i: int, j: int) -> bool:
        return bool(self.incompatible[i, j])

    def compatible_mask(self, i: int) -> int:
        if i not in self._masks:
            self._masks[i] = _mask_of(np.flatnonzero(~self.incompatible[i]))
        return self._masks[i]

    def dense(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.potential, self.incompatible


@dataclass(frozen=True, eq=False)
class PolymerSpace:
    """
    Finite, indexed polymer space.

    Activities and B are read-only vectors; the pair potential is a
    PairTable, materialized densely on demand through ``potential`` and
    ``incompatible``.
    """

    ids: Tuple[str, ...]
    rho: np.ndarray
    B: np.ndarray
    pairs: PairTable
    descriptors: Tuple[Any, ...] = ()
    default_potential: float = 0.0
    tail: Optional[np.ndarray] = None

    def __post_init__(self):
        size = len(self.ids)
        if len(set(self.ids)) != size:
            raise ValueError("polymer ids must be unique")
        if not self.descriptors:
            object.__setattr__(self, "descriptors", tuple(self.ids))
        for name in ("rho", "B"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=float)))
        if self.rho.shape != (size,) or self.B.shape != (size,):
            raise ValueError("rho and B need one entry per polymer")
        if self.pairs.size != size:
            raise ValueError("pair table size differs from the polymer count")
        if np.any(self.rho < 0) or not np.all(np.isfinite(self.rho)):
            raise ValueError("activities must be finite and nonnegative")
        if np.any(self.B < 0) or not np.all(np.isfinite(self.B)):
            raise ValueError("stability function must be finite and nonnegative")
        if self.tail is not None:
            tail = _frozen(np.asarray(self.tail, dtype=float))
            if tail.shape != (size,) or np.any(tail < 0):
                raise ValueError("tail term needs one nonnegative entry per polymer")
            object.__setattr__(self, "tail", tail)

    @classmethod
    def from_entries(
        cls,
        ids: Sequence[str],
        rho: Sequence[float],
        B: Sequence[float],
        entries: Iterable[Tuple[int, int, Union[float, str, ExtendedReal]]],
        default_potential: float = 0.0,
        descriptors: Sequence[Any] = (),
        tail: Optional[Sequence[float]] = None,
    ) -> "PolymerSpace":
        """
        Build a space from a sparse potential listing.

        Unlisted pairs, the diagonal included, take ``default_potential``.
        A pair listed twice (in either orientation) must carry one value.
        """
        size = len(ids)
        potential = np.full((size, size), float(default_potential))
        incompatible = np.zeros((size, size), dtype=bool)
        seen: Dict[Tuple[int, int], ExtendedReal] = {}
        for i, j, raw in entries:
            if not (0 <= i < size and 0 <= j < size):
                raise ValueError(f"pair ({i}, {j}) outside the polymer list")
            value = ExtendedReal.of(raw)
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != value:
                raise ValueError(f"conflicting potential values for pair {key}")
            seen[key] = value
            for a, b in ((i, j), (j, i)):
                potential[a, b] = 0.0 if value.infinite else value.value
                incompatible[a, b] = value.infinite
        return cls(
            ids=tuple(ids),
            rho=np.asarray(rho, dtype=float),
            B=np.asarray(B, dtype=float),
            pairs=DensePairTable(potential, incompatible),
            descriptors=tuple(descriptors),
            default_potential=float(default_potential),
            tail=None if tail is None else np.asarray(tail, dtype=float),
        )

    @property
    def size(self) -> int:
        return len(self.ids)

    @cached_property
    def _dense(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.pairs.dense()

    @property
    def potential(self) -> np.ndarray:
        return self._dense[0]

    @property
    def incompatible(self) -> np.ndarray:
        return self._dense[1]

    def index_of(self, polymer_id: str) -> int:
        try:
            return self.ids.index(polymer_id)
        except ValueError:
            raise KeyError(f"unknown polymer id {polymer_id!r}") from None

    def potential_at(self, i: int, j: int) -> ExtendedReal:
        if self.pairs.is_incompatible(i, j):
            return INF
        return ExtendedReal(self.pairs.finite_value(i, j))

    def compatible(self, i: int, j: int) -> bool:
        return not self.pairs.is_incompatible(i, j)

    def is_hard_core(self) -> bool:
        """Every pair is either incompatible or non-interacting."""
        return bool(np.all(self.potential[~self.incompatible] == 0.0))

    def energy(self, config: Sequence[int]) -> ExtendedReal:
        """Sum of V over unordered pairs of positions in the configuration."""
        if not config:
            raise ValueError("configuration must be non-empty")
        total = 0.0
        for a in range(len(config)):
            for b in range(a + 1, len(config)):
                i, j = config[a], config[b]
                if self.pairs.is_incompatible(i, j):
                    return INF
                total += self.pairs.finite_value(i, j)
        return ExtendedReal(total)

    def kernel_F(self, i: int, j: int) -> float:
        """1 on incompatible pairs, |V| otherwise."""
        if self.pairs.is_incompatible(i, j):
            return 1.0
        return abs(self.pairs.finite_value(i, j))

    def F_matrix(self) -> np.ndarray:
        return np.where(self.incompatible, 1.0, np.abs(self.potential))

    def gibbs_matrix(self) -> np.ndarray:
        """e^{-V} per pair, 0 on incompatible pairs."""
        return np.where(self.incompatible, 0.0, np.exp(-self.potential))

    def mayer_matrix(self) -> np.ndarray:
        """Edge factors e^{-V} - 1."""
        return self.gibbs_matrix() - 1.0

    def rho_tilde(self, rho: Optional[np.ndarray] = None) -> np.ndarray:
        rho = self.rho if rho is None else np.asarray(rho, dtype=float)
        return rho * np.exp(self.B)

    def entries(self) -> List[Tuple[int, int, ExtendedReal]]:
        """Sparse listing of every pair i <= j whose value differs from the default."""
        listing = []
        for i in range(self.size):
            for j in range(i, self.size):
                if self.pairs.is_incompatible(i, j) or (
                    self.pairs.finite_value(i, j) != self.default_potential
                ):
                    listing.append((i, j, self.potential_at(i, j)))
        return listing


@dataclass(frozen=True, eq=False)
class WeightAssignment:
    """Finite nonnegative weights mu, one per polymer."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(np.asarray(self.values, dtype=float))
        if values.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> float:
        return float(self.values[index])


def as_weights(mu: Union[WeightAssignment, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(mu, WeightAssignment):
        return mu.values
    return WeightAssignment(np.asarray(mu, dtype=float)).values


@dataclass
class StabilityReport:
    """Outcome of the exhaustive stability check."""

    passed: bool
    max_multiset_size: int
    checked: int = 0
    vacuous: int = 0
    violation: Optional[Tuple[int, ...]] = None
    violation_energy: Optional[float] = None
    violation_bound: Optional[float] = None
    worst_margin: float = math.inf
    per_size: List[int] = field(default_factory=list)


def _multiset_count(size: int, k: int) -> int:
    return math.comb(size + k - 1, k)


def verify_stability(
    space: PolymerSpace,
    max_multiset_size: int,
    max_multisets: int = DEFAULT_MAX_MULTISETS,
) -> StabilityReport:
    """
    Check sum_{i<j} V >= -sum_i B over every multiset of polymers.

    Multisets are walked depth-first as non-decreasing index sequences.
    A multiset holding an incompatible pair passes vacuously and its
    extensions are skipped as a block.

    Args:
        space: Polymer space to check
        max_multiset_size: Largest multiset size, at least 2
        max_multisets: Guard on the number of multisets the walk may visit

    Returns:
        StabilityReport with the first violation found, if any

    Raises:
        CapacityError: if the multiset count exceeds the guard
    """
    if max_multiset_size < 2:
        raise ValueError("max_multiset_size must be at least 2")
    total = sum(_multiset_count(space.size, k) for k in range(2, max_multiset_size + 1))
    if total > max_multisets:
        raise CapacityError("stability multisets", total, max_multisets)

    report = StabilityReport(passed=True, max_multiset_size=max_multiset_size)
    report.per_size = [0] * (max_multiset_size + 1)
    pairs = space.pairs
    B = space.B
    config: List[int] = []

    def walk(start: int, energy: float, budget: float) -> bool:
        depth = len(config)
        if depth >= 2:
            report.checked += 1
            report.per_size[depth] += 1
            margin = energy + budget
            report.worst_margin = min(report.worst_margin, margin)
            if margin < -STABILITY_TOLERANCE * (1.0 + budget):
                report.passed = False
                report.violation = tuple(config)
                report.violation_energy = energy
                report.violation_bound = -budget
                return False
        if depth == max_multiset_size:
            return True
        for idx in range(start, space.size):
            if any(pairs.is_incompatible(idx, other) for other in config):
                report.vacuous += 1
                continue
            added = sum(pairs.finite_value(idx, other) for other in config)
            config.append(idx)
            keep_going = walk(idx, energy + added, budget + B[idx])
            config.pop()
            if not keep_going:
                return False
        return True

    walk(0, 0.0, 0.0)
    if report.passed:
        logger.debug(f"stability holds on {report.checked} multisets up to size {max_multiset_size}")
    else:
        logger.info(f"stability violated by multiset {report.violation}")
    return report
