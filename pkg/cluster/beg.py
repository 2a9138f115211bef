"""
Long-Range BEG Polymer Gas

Spin-1 lattice model with bilinear and biquadratic couplings decaying as a
power of the L1 distance, in its disordered phase D > J. Non-zero spin
clusters are polymers: connected supports carrying +-1 spins, incompatible
when closer than two lattice steps and otherwise interacting through the
long-range couplings.

The module materializes truncated polymer spaces for the criterion checker,
evaluates the convergence envelope and the inverse-temperature threshold
beta_0, and cross-checks the polymer representation against a direct spin
sum on small boxes.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import bisect
from scipy.special import zeta

from .criterion import CriterionReport, check_criterion
from .errors import BracketError, CapacityError, PreconditionError
from .expansion import DEFAULT_MAX_TUPLES, PartitionResult, partition_function
from .model import INF, ExtendedReal, PairTable, PolymerSpace

logger = logging.getLogger(__name__)

Site = Tuple[int, ...]
Support = Tuple[Site, ...]

MAX_DIMENSION = 4
MAX_WINDOW_SITES = 9
# Largest support size per dimension, with and without spin assignments.
MAX_ANIMAL_SIZE = {1: 20, 2: 8, 3: 6, 4: 5}
MAX_POLYMER_SIZE = {1: 12, 2: 6, 3: 4, 4: 3}
MAX_SURFACE_SCAN = 5_000_000
MAX_BRACKET_DOUBLINGS = 64
BETA0_XTOL = 1e-13
BIJECTION_TOLERANCE = 1e-10
BETA0_MODES = ("closed_form", "envelope", "sharpened")


# ---------------------------------------------------------------------------
# Lattice geometry
# ---------------------------------------------------------------------------


def l1_distance(x: Site, y: Site) -> int:
    return sum(abs(a - b) for a, b in zip(x, y))


def _neighbours(site: Site) -> Iterator[Site]:
    for axis in range(len(site)):
        for step in (-1, 1):
            yield site[:axis] + (site[axis] + step,) + site[axis + 1 :]


def _is_connected(sites: Sequence[Site]) -> bool:
    remaining = set(sites)
    frontier = [sites[0]]
    remaining.discard(sites[0])
    while frontier:
        site = frontier.pop()
        for nb in _neighbours(site):
            if nb in remaining:
                remaining.discard(nb)
                frontier.append(nb)
    return not remaining


@dataclass(frozen=True)
class Window:
    """Box {0..L_1-1} x ... x {0..L_d-1} of the lattice."""

    shape: Tuple[int, ...]

    def __post_init__(self):
        shape = tuple(int(L) for L in self.shape)
        if not 1 <= len(shape) <= MAX_DIMENSION:
            raise ValueError(f"window dimension must lie in 1..{MAX_DIMENSION}, got {len(shape)}")
        if any(L < 1 for L in shape):
            raise ValueError(f"window sides must be positive, got {shape}")
        object.__setattr__(self, "shape", shape)

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def sites(self) -> List[Site]:
        """Sites in lexicographic order."""
        return list(itertools.product(*(range(L) for L in self.shape)))

    def contains(self, site: Site) -> bool:
        return all(0 <= x < L for x, L in zip(site, self.shape))


@dataclass(frozen=True)
class BegPolymer:
    """
    A connected support with a +-1 spin on each site.

    Sites are kept sorted, spins aligned with them, so equal polymers compare
    equal whatever order they were given in.
    """

    sites: Support
    spins: Tuple[int, ...]

    def __post_init__(self):
        if not self.sites:
            raise ValueError("polymer support must be non-empty")
        if len(self.sites) != len(self.spins):
            raise ValueError("one spin per site is required")
        if any(s not in (-1, 1) for s in self.spins):
            raise ValueError("polymer spins must be +1 or -1")
        pairs = sorted(zip((tuple(site) for site in self.sites), self.spins))
        sites = tuple(site for site, _ in pairs)
        if len(set(sites)) != len(sites):
            raise ValueError("polymer support repeats a site")
        if not _is_connected(sites):
            raise ValueError(f"polymer support {sites} is not connected")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "spins", tuple(s for _, s in pairs))

    @property
    def size(self) -> int:
        return len(self.sites)

    @property
    def support(self) -> frozenset:
        return frozenset(self.sites)

    @property
    def label(self) -> str:
        return "".join(
            "(" + ",".join(map(str, site)) + ")" + ("+" if s > 0 else "-")
            for site, s in zip(self.sites, self.spins)
        )


def polymer_distance(a: BegPolymer, b: BegPolymer) -> int:
    """Shortest L1 distance between the two supports."""
    return min(l1_distance(x, y) for x in a.sites for y in b.sites)


# ---------------------------------------------------------------------------
# Parameters and couplings
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _sphere_polynomial(d: int) -> np.ndarray:
    """
    Coefficients, lowest power first, of the polynomial r -> |S_r| on r >= 1.

    |S_r| = sum_k 2^k C(d, k) C(r - 1, k - 1), counting the sites of Z^d at L1
    distance r from the origin by their number k of non-zero coordinates.
    """
    total = np.zeros(d)
    for k in range(1, d + 1):
        binomial = P.polyfromroots(list(range(1, k))) / math.factorial(k - 1)
        total[: len(binomial)] += (2**k) * math.comb(d, k) * binomial
    return total


def sphere_size(d: int, r: int) -> int:
    """|S_r| in closed form."""
    if r == 0:
        return 1
    return sum((2**k) * math.comb(d, k) * math.comb(r - 1, k - 1) for k in range(1, d + 1))


@dataclass(frozen=True)
class BegParams:
    """
    Model parameters.

    The couplings depend on the L1 distance r only: ``table`` lists (J, K) for
    r = 1..len(table); beyond it they follow j_amp / r^(d+lam) and
    k_amp / r^(d+lam), or vanish when ``power_law_tail`` is off. Exactly one
    of ``D`` and ``gap`` (= D - J) is given. ``lam_prime`` and ``c`` only
    describe the model class and enter no computed quantity.
    """

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
    table: Tuple[Tuple[float, float], ...] = ()
    power_law_tail: bool = True
    alpha: float = 0.5

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIMENSION:
            raise ValueError(f"dimension must lie in 1..{MAX_DIMENSION}, got {self.d}")
        if not 0.0 < self.lam < self.lam_prime:
            raise ValueError(f"need 0 < lam < lam_prime, got lam={self.lam}, lam_prime={self.lam_prime}")
        if self.J1 < 0.0 or self.beta < 0.0:
            raise ValueError("J1 and beta must be nonnegative")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.j_amp is None:
            object.__setattr__(self, "j_amp", float(self.J1))
        object.__setattr__(self, "table", tuple((float(j), float(k)) for j, k in self.table))
        if self.j_amp < 0.0:
            raise ValueError("bilinear couplings must be nonnegative")
        if self.j_amp + abs(self.k_amp) > 2.0 * self.J1 * (1.0 + 1e-12):
            raise ValueError("coupling amplitude exceeds the decay bound 2 J1")
        for r, (j, k) in enumerate(self.table, start=1):
            if j < 0.0:
                raise ValueError(f"bilinear coupling at distance {r} is negative")
            if j + abs(k) > 2.0 * self.J1 * r ** (-self.decay) * (1.0 + 1e-12):
                raise ValueError(f"couplings at distance {r} exceed the decay bound")
        if (self.D is None) == (self.gap is None):
            raise ValueError("give exactly one of D and gap")
        if self.gap is not None and self.gap <= 0.0:
            raise ValueError("the disordered phase needs D > J")
        if self.D is not None and self.D <= self.J:
            raise ValueError(f"the disordered phase needs D > J = {self.J!r}, got D = {self.D!r}")

    @property
    def decay(self) -> float:
        return self.d + self.lam

    @property
    def long_range_regime(self) -> bool:
        """lam' < 2d + 1, the regime not covered by short-range arguments."""
        return self.lam_prime < 2 * self.d + 1

    def couplings_at(self, r: int) -> Tuple[float, float]:
        """(J, K) at L1 distance r."""
        if r <= 0:
            return 0.0, 0.0
        if r <= len(self.table):
            return self.table[r - 1]
        if not self.power_law_tail:
            return 0.0, 0.0
        scale = float(r) ** (-self.decay)
        return self.j_amp * scale, self.k_amp * scale

    @cached_property
    def J(self) -> float:
        return coupling_sum_J(self)

    @property
    def crystal_field(self) -> float:
        return self.D if self.D is not None else self.J + self.gap

    @property
    def field_gap(self) -> float:
        return self.gap if self.gap is not None else self.D - self.J


def coupling(params: BegParams, x: Site, y: Site) -> Tuple[float, float]:
    """(J_xy, K_xy)."""
    return params.couplings_at(l1_distance(x, y))


def _far_sum(params: BegParams, first: int) -> float:
    """sum_{r >= first} |S_r| (J_r + |K_r|), summed exactly."""
    head_end = max(len(params.table), first - 1)
    head_terms = []
    for r in range(first, head_end + 1):
        j, k = params.couplings_at(r)
        head_terms.append(sphere_size(params.d, r) * (j + abs(k)))
    head = math.fsum(head_terms)
    if not params.power_law_tail:
        return head
    amplitude = params.j_amp + abs(params.k_amp)
    coefficients = _sphere_polynomial(params.d)
    tail = math.fsum(
        c * float(zeta(params.decay - m, head_end + 1)) for m, c in enumerate(coefficients) if c
    )
    return head + amplitude * tail


def coupling_sum_J(params: BegParams) -> float:
    """
    J = (1/2) sum_{y != 0} (J_0y + |K_0y|).

    Couplings are translation invariant, so the sup over x is this one sum.
    The power-law part is a finite combination of Hurwitz zeta values.
    """
    return 0.5 * _far_sum(params, 1)


def kernel_amplitude(params: BegParams) -> float:
    """Smallest A with J_r + |K_r| <= A / r^(d+lam) for every r."""
    amplitude = params.j_amp + abs(params.k_amp) if params.power_law_tail else 0.0
    for r, (j, k) in enumerate(params.table, start=1):
        amplitude = max(amplitude, (j + abs(k)) * r**params.decay)
    return amplitude


# ---------------------------------------------------------------------------
# Polymer enumeration
# ---------------------------------------------------------------------------


def connected_supports(
    d: int,
    n_max: int,
    anchor: Optional[Site] = None,
    window: Optional[Window] = None,
) -> List[Support]:
    """
    Connected supports of size <= n_max, ordered by size then sites.

    With an anchor, supports containing it (no box restriction); with a
    window, every connected support inside the window.
    """
    if (anchor is None) == (window is None):
        raise ValueError("give exactly one of anchor and window")
    if n_max < 1:
        raise ValueError(f"n_max must be positive, got {n_max}")
    if window is not None and window.d != d:
        raise ValueError(f"window has dimension {window.d}, model has {d}")
    seeds = [tuple(anchor)] if anchor is not None else window.sites()
    layer = {frozenset([site]) for site in seeds}
    found = list(layer)
    for _ in range(n_max - 1):
        grown = set()
        for support in layer:
            for site in support:
                for nb in _neighbours(site):
                    if nb in support or (window is not None and not window.contains(nb)):
                        continue
                    grown.add(support | {nb})
        if not grown:
            break
        layer = grown
        found.extend(layer)
    return sorted((tuple(sorted(support)) for support in found), key=lambda s: (len(s), s))


@lru_cache(maxsize=None)
def _animal_counts(d: int, n_max: int) -> Tuple[int, ...]:
    counts = Counter(len(s) for s in connected_supports(d, n_max, anchor=(0,) * d))
    return tuple(counts[n] for n in range(1, n_max + 1))


def lattice_animal_counts(d: int, n_max: int) -> List[int]:
    """
    C_1..C_{n_max}: connected n-site sets of Z^d containing the origin.

    Raises:
        CapacityError: beyond MAX_ANIMAL_SIZE[d]
    """
    if not 1 <= d <= MAX_DIMENSION:
        raise ValueError(f"dimension must lie in 1..{MAX_DIMENSION}, got {d}")
    if n_max > MAX_ANIMAL_SIZE[d]:
        raise CapacityError(f"lattice animals in dimension {d}", n_max, MAX_ANIMAL_SIZE[d])
    return list(_animal_counts(d, n_max))


def enumerate_polymers(
    d: int,
    n_max: int,
    anchor: Optional[Site] = None,
    window: Optional[Window] = None,
) -> Iterator[BegPolymer]:
    """
    Every polymer with |p| <= n_max containing the anchor or inside the window.

    Each support comes with all 2^|p| spin assignments, +1 first.

    Raises:
        CapacityError: when n_max exceeds MAX_POLYMER_SIZE[d] outside a
            window of at most MAX_WINDOW_SITES sites
    """
    if not 1 <= d <= MAX_DIMENSION:
        raise ValueError(f"dimension must lie in 1..{MAX_DIMENSION}, got {d}")
    small_window = window is not None and window.size <= MAX_WINDOW_SITES
    if n_max > MAX_POLYMER_SIZE[d] and not small_window:
        raise CapacityError(f"polymer enumeration in dimension {d}", n_max, MAX_POLYMER_SIZE[d])
    for support in connected_supports(d, n_max, anchor=anchor, window=window):
        for spins in itertools.product((1, -1), repeat=len(support)):
            yield BegPolymer(support, spins)


# ---------------------------------------------------------------------------
# Polymer gas data
# ---------------------------------------------------------------------------


def _pair_sum(params: BegParams, a: Sequence[Site], sa: Sequence[int], b: Sequence[Site], sb: Sequence[int]) -> float:
    terms = []
    for x, s in zip(a, sa):
        for y, t in zip(b, sb):
            j, k = coupling(params, x, y)
            terms.append(j * s * t + k)
    return math.fsum(terms)


def interaction_W(a: BegPolymer, b: BegPolymer, params: BegParams) -> ExtendedReal:
    """+inf below distance 2, else -beta sum_{x in p, y in p~} (J s_x s_y + K)."""
    if polymer_distance(a, b) < 2:
        return INF
    return ExtendedReal(-params.beta * _pair_sum(params, a.sites, a.spins, b.sites, b.spins))


def interaction_bound(a: BegPolymer, b: BegPolymer, params: BegParams) -> float:
    """beta A |p| |p~| n^-(d+lam) at distance n, A the kernel amplitude."""
    n = polymer_distance(a, b)
    return params.beta * kernel_amplitude(params) * a.size * b.size * float(n) ** (-params.decay)


def self_energy_A(polymer: BegPolymer, params: BegParams) -> float:
    """beta sum over internal pairs of (J s s + K)."""
    terms = []
    for (x, s), (y, t) in itertools.combinations(zip(polymer.sites, polymer.spins), 2):
        j, k = coupling(params, x, y)
        terms.append(j * s * t + k)
    return params.beta * math.fsum(terms)


def activity_rho(polymer: BegPolymer, params: BegParams) -> float:
    return math.exp(-(params.beta * params.crystal_field * polymer.size - self_energy_A(polymer, params)))


def stability_B(polymer: BegPolymer, params: BegParams) -> float:
    # A <= beta J |p| holds exactly; the clamp absorbs rounding.
    return max(params.beta * params.J * polymer.size - self_energy_A(polymer, params), 0.0)


def polymer_weights(params: BegParams, polymers: Sequence[BegPolymer], alpha: Optional[float] = None) -> np.ndarray:
    """mu_p = e^{-beta (D - J) |p|} e^{alpha |p|}."""
    alpha = params.alpha if alpha is None else alpha
    rate = alpha - params.beta * params.field_gap
    return np.exp(rate * np.array([p.size for p in polymers], dtype=float))


class LatticePairTable(PairTable):
    """
    Interactions W between lattice polymers, evaluated on demand.

    Polymers sharing a support sit in one contiguous index block, so the
    compatibility mask of a polymer is the union of the blocks whose support
    lies at distance >= 2 from its own.
    """

    def __init__(self, polymers: Sequence[BegPolymer], params: BegParams):
        super().__init__(len(polymers))
        self.polymers = list(polymers)
        self.params = params
        self._support_of: List[int] = []
        self._supports: List[Support] = []
        self._blocks: List[int] = []
        starts: List[int] = []
        for idx, polymer in enumerate(self.polymers):
            if not self._supports or self._supports[-1] != polymer.sites:
                if polymer.sites in self._supports:
                    raise ValueError("polymers with one support must be listed consecutively")
                self._supports.append(polymer.sites)
                starts.append(idx)
            self._support_of.append(len(self._supports) - 1)
        starts.append(len(self.polymers))
        self._blocks = [((1 << starts[s + 1]) - 1) ^ ((1 << starts[s]) - 1) for s in range(len(self._supports))]
        self._distances: Dict[Tuple[int, int], int] = {}
        self._support_masks: Dict[int, int] = {}
        self._values: Dict[Tuple[int, int], float] = {}

    def _support_distance(self, s: int, t: int) -> int:
        key = (s, t) if s <= t else (t, s)
        if key not in self._distances:
            a, b = self._supports[key[0]], self._supports[key[1]]
            self._distances[key] = min(l1_distance(x, y) for x in a for y in b)
        return self._distances[key]

    def is_incompatible(self, i: int, j: int) -> bool:
        return self._support_distance(self._support_of[i], self._support_of[j]) < 2

    def finite_value(self, i: int, j: int) -> float:
        if self.is_incompatible(i, j):
            return 0.0
        key = (i, j) if i <= j else (j, i)
        if key not in self._values:
            a, b = self.polymers[key[0]], self.polymers[key[1]]
            self._values[key] = -self.params.beta * _pair_sum(self.params, a.sites, a.spins, b.sites, b.spins)
        return self._values[key]

    def compatible_mask(self, i: int) -> int:
        s = self._support_of[i]
        if s not in self._support_masks:
            mask = 0
            for t, block in enumerate(self._blocks):
                if self._support_distance(s, t) >= 2:
                    mask |= block
            self._support_masks[s] = mask
        return self._support_masks[s]


def size_tail_factor(params: BegParams, n_max: int, alpha: Optional[float] = None) -> float:
    """
    sum_{n > n_max} 2^n C_n q^n with q = e^{alpha - beta (D - J)}.

    Exact C_n up to MAX_ANIMAL_SIZE[d], then C_n <= (4d)^n as a geometric
    series; +inf when that series diverges.
    """
    alpha = params.alpha if alpha is None else alpha
    z = 2.0 * math.exp(alpha - params.beta * params.field_gap)
    w = 4 * params.d * z
    exact_to = MAX_ANIMAL_SIZE[params.d]
    head = 0.0
    if n_max < exact_to:
        counts = _animal_counts(params.d, exact_to)
        head = math.fsum(counts[n - 1] * z**n for n in range(n_max + 1, exact_to + 1))
    if w >= 1.0:
        return math.inf
    start = max(n_max, exact_to) + 1
    return head + w**start / (1.0 - w)


def polymer_tails(
    params: BegParams, polymers: Sequence[BegPolymer], n_max: int, alpha: Optional[float] = None
) -> np.ndarray:
    """
    Per-polymer bound on sum F mu over polymers larger than n_max.

    A polymer within distance 1 contains one of at most (2d + 1)|p| sites and
    contributes F = 1; a farther one contributes |W|, bounded site by site by
    the couplings at distance >= 2. Both are summed against the weights of
    every size-n polymer through a fixed site.
    """
    per_site = size_tail_factor(params, n_max, alpha)
    if math.isinf(per_site):
        return np.full(len(polymers), math.inf)
    far = _far_sum(params, 2)
    factor = (2 * params.d + 1) + params.beta * far
    return np.array([p.size * factor * per_site for p in polymers], dtype=float)


def build_polymer_space(
    params: BegParams,
    window: Window,
    n_max: int,
    alpha: Optional[float] = None,
    with_tail: bool = True,
) -> PolymerSpace:
    """
    Truncated polymer space of a window: polymers of size <= n_max with
    rho, B and W, plus the analytic tail for everything larger.
    """
    if window.d != params.d:
        raise ValueError(f"window has dimension {window.d}, model has {params.d}")
    polymers = list(enumerate_polymers(params.d, n_max, window=window))
    tail = polymer_tails(params, polymers, n_max, alpha) if with_tail else None
    if tail is not None and not np.all(np.isfinite(tail)):
        logger.info("polymer-size series diverges at these parameters; tail set to +inf")
    space = PolymerSpace(
        ids=tuple(p.label for p in polymers),
        rho=np.array([activity_rho(p, params) for p in polymers]),
        B=np.array([stability_B(p, params) for p in polymers]),
        pairs=LatticePairTable(polymers, params),
        descriptors=tuple(polymers),
        default_potential=0.0,
        tail=tail,
    )
    logger.debug(f"BEG space on window {window.shape}: {space.size} polymers up to size {n_max}")
    return space


def window_polymer_space(params: BegParams, window: Window) -> PolymerSpace:
    """Every polymer of the window, no truncation and no tail."""
    return build_polymer_space(params, window, window.size, with_tail=False)


def check_truncated_space(
    params: BegParams, window: Window, n_max: int, alpha: Optional[float] = None
) -> Tuple[PolymerSpace, np.ndarray, CriterionReport]:
    """Run the criterion on the truncated space with mu_p from the size weights."""
    space = build_polymer_space(params, window, n_max, alpha)
    mu = polymer_weights(params, space.descriptors, alpha)
    return space, mu, check_criterion(space, mu)


# ---------------------------------------------------------------------------
# Convergence constants
# ---------------------------------------------------------------------------


def lattice_j2(d: int, J1: float, lam: float) -> float:
    """
    ((2d)^d J1 / d!) sum_{n >= 2} n^-(1+lam).

    Raises:
        PreconditionError: for lam <= 0, where the series diverges
    """
    if lam <= 0.0:
        raise PreconditionError(f"sum n^-(1+lam) diverges for lam = {lam}")
    return (2 * d) ** d * J1 / math.factorial(d) * float(zeta(1.0 + lam, 2.0))


def j2_constant(params: BegParams) -> float:
    return lattice_j2(params.d, params.J1, params.lam)


def jbeta(params: BegParams) -> float:
    return 2 * params.d + params.beta * j2_constant(params)


def surface_count(d: int, n: int) -> int:
    """
    |S_n| = #{y in Z^d : |y|_1 = n}, by enumeration.

    The first d - 1 coordinates are scanned over the ball; the last one is
    then fixed up to sign by the remaining distance.
    """
    if n < 1:
        raise ValueError(f"radius must be positive, got {n}")
    if not 1 <= d <= MAX_DIMENSION:
        raise ValueError(f"dimension must lie in 1..{MAX_DIMENSION}, got {d}")
    scan = (2 * n + 1) ** (d - 1)
    if scan > MAX_SURFACE_SCAN:
        raise CapacityError("surface enumeration", scan, MAX_SURFACE_SCAN)
    count = 0
    for head in itertools.product(range(-n, n + 1), repeat=d - 1):
        remaining = n - sum(abs(x) for x in head)
        if remaining > 0:
            count += 2
        elif remaining == 0:
            count += 1
    return count


def surface_bound(d: int, n: int) -> float:
    return (2 * d) ** d / math.factorial(d) * n ** (d - 1)


def envelope_f(u: float) -> float:
    """Solution y of y / (1 - y)^2 = u on [0, 1)."""
    return 2.0 * u / (2.0 * u + 1.0 + math.sqrt(4.0 * u + 1.0))


@dataclass
class EnvelopeReport:
    """sum n y^n = y / (1 - y)^2 against alpha / J_beta."""

    passed: bool
    alpha: float
    x: float
    y: float
    lhs: float
    rhs: float
    jbeta: float
    diagnostic: Optional[str] = None
    margin: float = field(init=False)

    def __post_init__(self):
        self.margin = self.rhs - self.lhs

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "alpha": self.alpha,
            "x": self.x,
            "y": self.y,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "J_beta": self.jbeta,
            "diagnostic": self.diagnostic,
        }


def convergence_envelope(params: BegParams, alpha: Optional[float] = None) -> EnvelopeReport:
    """Evaluate the size-series condition with C_n <= (4d)^n at y = x e^alpha."""
    alpha = params.alpha if alpha is None else alpha
    x = 8 * params.d * math.exp(-params.beta * params.field_gap)
    y = x * math.exp(alpha)
    jb = jbeta(params)
    rhs = alpha / jb
    if y >= 1.0:
        return EnvelopeReport(
            passed=False,
            alpha=alpha,
            x=x,
            y=y,
            lhs=math.inf,
            rhs=rhs,
            jbeta=jb,
            diagnostic=f"y = {y:.6g} >= 1, the polymer-size series diverges",
        )
    lhs = y / (1.0 - y) ** 2
    return EnvelopeReport(passed=lhs <= rhs, alpha=alpha, x=x, y=y, lhs=lhs, rhs=rhs, jbeta=jb)


def convergence_threshold(params: BegParams, alpha: Optional[float] = None) -> float:
    """Largest e^{-beta (D - J)} the envelope admits: e^{-alpha} f(alpha / J_beta) / (8d)."""
    alpha = params.alpha if alpha is None else alpha
    return math.exp(-alpha) * envelope_f(alpha / jbeta(params)) / (8 * params.d)


@dataclass
class Beta0Result:
    """Root of one threshold equation."""

    beta0: float
    mode: str
    alpha: float
    residual: float
    bracket: Tuple[float, float]
    iterations: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "beta0": self.beta0,
            "mode": self.mode,
            "alpha": self.alpha,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
        }


def _threshold_function(params: BegParams, mode: str, alpha: float):
    gap = params.field_gap
    d = params.d
    j2 = j2_constant(params)

    if mode == "closed_form":
        # f(u) <= 2u / (2u + 1) turns the envelope into an explicit equation in beta
        def g(beta: float) -> float:
            return math.exp(min(beta * gap, 700.0)) / (8 * math.exp(alpha) * d) - (
                2 * alpha + 2 * d + beta * j2
            ) / (2 * alpha)

        return g

    if mode == "envelope":

        def h(beta: float) -> float:
            return beta * gap - alpha - math.log(8 * d) + math.log(envelope_f(alpha / (2 * d + beta * j2)))

        return h

    exact_to = MAX_ANIMAL_SIZE[d]
    counts = _animal_counts(d, exact_to)

    def sharpened(beta: float) -> float:
        z = 2.0 * math.exp(alpha - beta * gap)
        w = 4 * d * z
        if w >= 1.0:
            return -math.inf
        head = math.fsum(n * counts[n - 1] * z**n for n in range(1, exact_to + 1))
        geometric_head = math.fsum(n * w**n for n in range(1, exact_to + 1))
        total = head + w / (1.0 - w) ** 2 - geometric_head
        return math.log(alpha) - math.log(2 * d + beta * j2) - math.log(total)

    return sharpened


def beta0(params: BegParams, mode: str = "closed_form", alpha: Optional[float] = None) -> Beta0Result:
    """
    Inverse-temperature threshold of the convergence chain.

    Modes:
        closed_form: positive root of e^{beta (D-J)} / (8 e^alpha d) = (2 alpha + J_beta) / (2 alpha)
        envelope: equality e^{-beta (D-J)} = e^{-alpha} f(alpha / J_beta) / (8d)
        sharpened: the lattice-animal sum with exact C_n for small n

    The bracket starts at [0, 1] and doubles its upper end until the sign
    changes; the root is then bisected.

    Raises:
        BracketError: if no sign change is found
    """
    if mode not in BETA0_MODES:
        raise ValueError(f"unknown threshold mode {mode!r}, expected one of {BETA0_MODES}")
    alpha = params.alpha if alpha is None else alpha
    func = _threshold_function(params, mode, alpha)
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if func(hi) > 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError(f"no sign change of the {mode} threshold equation below beta = {hi}")
    root, info = bisect(func, lo, hi, xtol=BETA0_XTOL, full_output=True)
    residual = func(root)
    logger.debug(f"beta_0 ({mode}) = {root!r} after {info.iterations} bisections")
    return Beta0Result(
        beta0=float(root),
        mode=mode,
        alpha=alpha,
        residual=float(residual),
        bracket=(lo, hi),
        iterations=int(info.iterations),
    )


def beg_constants(params: BegParams) -> Dict[str, float]:
    """Intermediate constants of the convergence chain at the given beta."""
    return {
        "J": params.J,
        "D": params.crystal_field,
        "D_minus_J": params.field_gap,
        "J2": j2_constant(params),
        "J_beta": jbeta(params),
        "x": 8 * params.d * math.exp(-params.beta * params.field_gap),
        "threshold": convergence_threshold(params),
    }


# ---------------------------------------------------------------------------
# Spin / polymer correspondence
# ---------------------------------------------------------------------------


def spin_energy(params: BegParams, sites: Sequence[Site], spins: Sequence[int]) -> float:
    """H_Lambda(sigma) with free boundary conditions."""
    pairs = []
    for (x, s), (y, t) in itertools.combinations(zip(sites, spins), 2):
        if s and t:
            j, k = coupling(params, x, y)
            pairs.append(j * s * t + k * s * s * t * t)
    return -math.fsum(pairs) + params.crystal_field * sum(s * s for s in spins)


def induced_family(sites: Sequence[Site], spins: Sequence[int]) -> List[BegPolymer]:
    """Nearest-neighbour clusters of the non-zero spins, as polymers."""
    occupied = {site: s for site, s in zip(sites, spins) if s != 0}
    family = []
    while occupied:
        seed, _ = next(iter(occupied.items()))
        cluster = [seed]
        frontier = [seed]
        spins_of = {seed: occupied.pop(seed)}
        while frontier:
            site = frontier.pop()
            for nb in _neighbours(site):
                if nb in occupied:
                    spins_of[nb] = occupied.pop(nb)
                    cluster.append(nb)
                    frontier.append(nb)
        family.append(BegPolymer(tuple(cluster), tuple(spins_of[x] for x in cluster)))
    return family


@dataclass
class BijectionReport:
    """Direct spin sum against the polymer-gas partition function on one window."""

    sites: int
    spin_configurations: int
    polymers: int
    families: int
    direct: float
    polymer_gas: float
    relative_error: float
    separated: bool
    round_trip: bool
    energy_residual: float
    partition: PartitionResult
    admissible_families: Optional[int] = None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(
            self.relative_error <= BIJECTION_TOLERANCE
            and self.separated
            and self.round_trip
            and self.families == self.spin_configurations
            and self.admissible_families in (None, self.spin_configurations)
            and self.energy_residual <= BIJECTION_TOLERANCE
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "sites": self.sites,
            "spin_configurations": self.spin_configurations,
            "polymers": self.polymers,
            "families": self.families,
            "admissible_families": self.admissible_families,
            "direct": self.direct,
            "polymer_gas": self.polymer_gas,
            "relative_error": self.relative_error,
            "separated": self.separated,
            "round_trip": self.round_trip,
            "energy_residual": self.energy_residual,
            "partition_terms": self.partition.terms,
        }


def direct_partition_sum(params: BegParams, window: Window) -> float:
    """sum over sigma in {0, +1, -1}^Lambda of e^{-beta H}, vectorized."""
    sites = window.sites()
    n = len(sites)
    if n > MAX_WINDOW_SITES:
        raise CapacityError("direct spin sum sites", n, MAX_WINDOW_SITES)
    Jm = np.zeros((n, n))
    Km = np.zeros((n, n))
    for a, b in itertools.combinations(range(n), 2):
        j, k = coupling(params, sites[a], sites[b])
        Jm[a, b] = Jm[b, a] = j
        Km[a, b] = Km[b, a] = k
    sigma = np.array(list(itertools.product((0, 1, -1), repeat=n)), dtype=float)
    squares = sigma * sigma
    energy = (
        -0.5 * np.einsum("ci,ij,cj->c", sigma, Jm, sigma)
        - 0.5 * np.einsum("ci,ij,cj->c", squares, Km, squares)
        + params.crystal_field * squares.sum(axis=1)
    )
    return math.fsum(np.exp(-params.beta * energy))


def spin_polymer_bijection_check(
    params: BegParams,
    window: Window,
    threads: int = 1,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> BijectionReport:
    """
    Compute Z_Lambda as a spin sum and as a polymer-gas sum and compare them.

    Every spin configuration is also mapped to its polymer family and back,
    checking separation, the round trip and beta H = sum W + sum (beta D |p| - A).

    Raises:
        CapacityError: above MAX_WINDOW_SITES sites
    """
    if window.size > MAX_WINDOW_SITES:
        raise CapacityError("bijection check sites", window.size, MAX_WINDOW_SITES)
    if window.d != params.d:
        raise ValueError(f"window has dimension {window.d}, model has {params.d}")
    space = window_polymer_space(params, window)
    pairs = space.pairs
    index = {(p.sites, p.spins): k for k, p in enumerate(space.descriptors)}
    self_terms = [
        params.beta * params.crystal_field * p.size - self_energy_A(p, params) for p in space.descriptors
    ]
    sites = window.sites()
    position = {site: k for k, site in enumerate(sites)}

    separated = True
    round_trip = True
    residual = 0.0
    families = set()
    for spins in itertools.product((0, 1, -1), repeat=len(sites)):
        family = [index[(p.sites, p.spins)] for p in induced_family(sites, spins)]
        families.add(tuple(sorted(family)))
        if any(pairs.is_incompatible(i, j) for i, j in itertools.combinations(family, 2)):
            separated = False
        rebuilt = [0] * len(sites)
        for k in family:
            polymer = space.descriptors[k]
            for site, s in zip(polymer.sites, polymer.spins):
                rebuilt[position[site]] = s
        if tuple(rebuilt) != spins:
            round_trip = False
        gas_energy = math.fsum(
            [pairs.finite_value(i, j) for i, j in itertools.combinations(family, 2)]
            + [self_terms[k] for k in family]
        )
        spin_side = params.beta * spin_energy(params, sites, spins)
        residual = max(residual, abs(gas_energy - spin_side) / (1.0 + abs(spin_side)))

    direct = direct_partition_sum(params, window)
    result = partition_function(
        space,
        max_order=window.size,
        method="multiset",
        max_tuples=max_tuples,
        threads=threads,
    )
    relative = abs(result.value - direct) / direct
    report = BijectionReport(
        sites=window.size,
        spin_configurations=3 ** window.size,
        polymers=space.size,
        families=len(families),
        direct=direct,
        polymer_gas=result.value,
        relative_error=relative,
        separated=separated,
        round_trip=round_trip,
        energy_residual=residual,
        partition=result,
        # the walker skips polymers whose activity underflows to zero
        admissible_families=result.configurations + 1 if bool(np.all(space.rho > 0.0)) else None,
    )
    logger.info(
        f"window {window.shape}: Z direct {direct!r}, polymer gas {result.value!r}, "
        f"relative error {relative:.2e}"
    )
    return report
