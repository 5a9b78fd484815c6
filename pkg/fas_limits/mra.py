"""
MRA Port Selection

Difference co-array (DCA) construction, weight-function checks, restricted
minimum-redundancy-array search and the averaged index-gap factor used by
the sensing bound.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from .exceptions import DomainError

logger = logging.getLogger(__name__)


# ============================================================================
# Types
# ============================================================================

@dataclass(frozen=True)
class PortPattern:
    """Strictly increasing set of activated port indices."""
    indices: Tuple[int, ...]

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise DomainError("port pattern must contain at least one port")
        if indices[0] < 0:
            raise DomainError(f"port indices must be nonnegative: {list(indices)}")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DomainError(f"port indices must be strictly increasing: {list(indices)}")
        object.__setattr__(self, "indices", indices)

    @classmethod
    def of(cls, indices: Sequence[int]) -> "PortPattern":
        return cls(tuple(indices))

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def aperture(self) -> int:
        """Largest index difference."""
        return self.indices[-1] - self.indices[0]

    @property
    def num_ports(self) -> int:
        """Smallest port count that contains every index."""
        return self.indices[-1] + 1

    @property
    def is_normalized(self) -> bool:
        return self.indices[0] == 0

    def normalized(self) -> "PortPattern":
        first = self.indices[0]
        return PortPattern(tuple(i - first for i in self.indices))

    def mirrored(self) -> "PortPattern":
        top = self.indices[-1]
        return PortPattern(tuple(sorted(top - i for i in self.indices)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=float)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __str__(self) -> str:
        return "[" + ",".join(str(i) for i in self.indices) + "]"


@dataclass
class WeightFunction:
    """DCA weight function w(x): number of ordered pairs with difference x."""
    weights: Dict[int, int]

    def __call__(self, x: int) -> int:
        return self.weights.get(x, 0)

    @property
    def support(self) -> List[int]:
        return sorted(self.weights)

    @property
    def off_origin_total(self) -> int:
        return sum(w for x, w in self.weights.items() if x != 0)


@dataclass
class MraCheck:
    """Outcome of check_mra with the reasons a pattern fails."""
    is_mra: bool
    aperture: int
    holes: List[int] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.is_mra


# Published port patterns with their published E{|N_m - N_n|} values
TABLE_I: Dict[int, List[Tuple[Tuple[int, ...], float]]] = {
    3: [((0, 1, 3), 1.3333), ((0, 2, 3), 1.3333)],
    5: [((0, 1, 4, 7, 9), 3.84), ((0, 1, 2, 6, 9), 3.68)],
    7: [((0, 1, 2, 6, 10, 14, 17), 6.9388), ((0, 1, 2, 3, 8, 13, 17), 6.6122)],
    9: [((0, 1, 2, 14, 18, 21, 24, 27, 29), 12.0988), ((0, 1, 3, 10, 16, 22, 24, 27, 29), 12.2469)],
    10: [((0, 1, 3, 6, 13, 20, 27, 31, 35, 36), 15.44)],
    11: [((0, 1, 3, 6, 13, 20, 27, 34, 38, 42, 43), 18.314)],
}

MAX_SEARCH_M = 11


# ============================================================================
# Difference co-array
# ============================================================================

def dca(pattern: PortPattern) -> WeightFunction:
    """
    Difference co-array of a pattern.

    Args:
        pattern: Activated ports

    Returns:
        WeightFunction over all ordered pairs, self-pairs included
    """
    idx = np.asarray(pattern.indices, dtype=np.int64)
    diffs = (idx[:, None] - idx[None, :]).ravel()
    return WeightFunction(weights=dict(Counter(int(d) for d in diffs)))


def dca_dof(pattern: PortPattern) -> int:
    """Number of distinct lags in the DCA support."""
    return len(dca(pattern).support)


def check_mra(pattern: PortPattern) -> MraCheck:
    """
    Check hole-free DCA coverage and the weight-function constraints.

    Args:
        pattern: Activated ports

    Returns:
        MraCheck with the holes in [-A, A] and any constraint violations
    """
    m = pattern.m
    aperture = pattern.aperture
    w = dca(pattern)

    holes = [x for x in range(-aperture, aperture + 1) if w(x) == 0]
    violations = []

    if w(0) != m:
        violations.append(f"w(0) = {w(0)}, expected {m}")
    asymmetric = [x for x in w.support if w(x) != w(-x)]
    if asymmetric:
        violations.append(f"w(x) != w(-x) at {asymmetric}")
    if w.off_origin_total != m * (m - 1):
        violations.append(f"sum of off-origin weights = {w.off_origin_total}, expected {m * (m - 1)}")
    out_of_range = [x for x in w.support if x != 0 and not 1 <= w(x) <= m - 1]
    if out_of_range:
        violations.append(f"weights outside [1, M-1] at {out_of_range}")

    return MraCheck(
        is_mra=not holes and not violations,
        aperture=aperture,
        holes=holes,
        violations=violations,
    )


# ============================================================================
# Restricted MRA search
# ============================================================================

def _patterns_with_aperture(m: int, aperture: int) -> List[Tuple[int, ...]]:
    """
    All hole-free patterns of size m spanning exactly [0, aperture].

    Only patterns whose first gap does not exceed their last gap are built;
    their mirror images are added afterwards.
    """
    full = (1 << (aperture + 1)) - 2  # bits 1..aperture
    found: List[Tuple[int, ...]] = []

    def descend(chosen: List[int], covered: int, next_min: int, remaining: int):
        if remaining == 0:
            if covered == full:
                found.append(tuple(chosen) + (aperture,))
            return

        missing = bin(full & ~covered).count("1")
        size = len(chosen) + 1
        if missing > remaining * size + remaining * (remaining - 1) // 2:
            return

        for x in range(next_min, aperture - remaining + 1):
            first_gap = chosen[1] if len(chosen) > 1 else x
            if remaining == 1 and aperture - x < first_gap:
                break
            new_cover = covered | (1 << (aperture - x))
            for e in chosen:
                new_cover |= 1 << (x - e)
            chosen.append(x)
            descend(chosen, new_cover, x + 1, remaining - 1)
            chosen.pop()

    descend([0], 1 << aperture, 1, m - 2)
    canonical = set(found)
    mirrored = {tuple(aperture - i for i in reversed(p)) for p in canonical}
    return sorted(canonical | mirrored)


def mra_search(m: int, aperture_cap: int) -> List[PortPattern]:
    """
    Exhaustive restricted-MRA search.

    Tries apertures from aperture_cap downwards and returns every hole-free
    pattern of size m at the first aperture that admits one. Mirror images
    are included.

    Args:
        m: Number of ports (<= 11)
        aperture_cap: Largest aperture to consider (>= m - 1)

    Returns:
        Patterns sorted lexicographically

    Raises:
        DomainError: If m is out of range or the cap admits no pattern
    """
    if not 1 <= m <= MAX_SEARCH_M:
        raise DomainError(f"mra_search supports 1 <= m <= {MAX_SEARCH_M}, got {m}")
    if aperture_cap < m - 1:
        raise DomainError(f"aperture cap {aperture_cap} too small for {m} ports (needs >= {m - 1})")

    if m == 1:
        return [PortPattern((0,))]

    logger.info(f"Searching restricted MRA patterns: m={m}, cap={aperture_cap}")
    for aperture in range(aperture_cap, m - 2, -1):
        if m == 2 and aperture > 1:
            continue
        if aperture > m * (m - 1) // 2:
            continue
        found = _patterns_with_aperture(m, aperture)
        if found:
            logger.info(f"Found {len(found)} patterns with aperture {aperture}")
            return [PortPattern(p) for p in sorted(found)]
        logger.debug(f"No hole-free pattern with aperture {aperture}")

    raise DomainError(f"no hole-free pattern of size {m} with aperture <= {aperture_cap}")


def default_aperture_cap(m: int) -> int:
    """Number of distinct positive differences m ports can produce."""
    return m * (m - 1) // 2


# ============================================================================
# Index-gap factor
# ============================================================================

def expected_index_gap(pattern: PortPattern) -> float:
    """Mean of |N_m - N_n| over all M^2 ordered pairs."""
    idx = pattern.as_array()
    return float(np.mean(np.abs(idx[:, None] - idx[None, :])))


def lambda_bar_sq(pattern: PortPattern, w_aperture: float, n_f: int) -> float:
    """
    Squared averaged phase-difference factor (2*pi*E|N_m - N_n|*W/(N_f - 1))^2.

    Args:
        pattern: Activated ports
        w_aperture: Aperture W in wavelengths
        n_f: Number of ports (>= 2)

    Returns:
        lambda_bar^2
    """
    if n_f < 2:
        raise DomainError(f"n_f must be >= 2, got {n_f}")
    return (2.0 * math.pi * expected_index_gap(pattern) * w_aperture / (n_f - 1)) ** 2


def ula_pattern(m: int) -> PortPattern:
    """Contiguous pattern [0, 1, ..., m-1]."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    return PortPattern(tuple(range(m)))


def pattern_for(m: int, full_search: bool = False) -> PortPattern:
    """
    Port pattern used for an M-port FAS receiver.

    Table-I patterns are used where published; otherwise (or with
    full_search) the first pattern found by mra_search.
    """
    if m in TABLE_I and not full_search:
        return PortPattern(TABLE_I[m][0][0])
    return mra_search(m, default_aperture_cap(m))[0]


def audit_table_i(tolerance: float = 1e-4) -> List[Dict[str, object]]:
    """
    Check every published pattern and compare computed with published gaps.

    Returns:
        One record per pattern with hole-free status, gaps and mismatch flag
    """
    records = []
    for m, entries in sorted(TABLE_I.items()):
        for indices, published_gap in entries:
            pattern = PortPattern(indices)
            check = check_mra(pattern)
            gap = expected_index_gap(pattern)
            mismatch = (not check.is_mra) or abs(gap - published_gap) > tolerance
            if mismatch:
                logger.warning(
                    f"Published pattern {pattern} disagrees: hole-free={check.is_mra}, "
                    f"holes={[h for h in check.holes if h > 0]}, gap={gap:.4f} vs {published_gap}"
                )
            records.append({
                "m": m,
                "pattern": str(pattern),
                "aperture": pattern.aperture,
                "hole_free": check.is_mra,
                "holes": " ".join(str(h) for h in check.holes if h > 0),
                "gap": gap,
                "published_gap": published_gap,
                "mismatch": mismatch,
            })
    return records
