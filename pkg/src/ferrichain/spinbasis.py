"""Lattices, z-basis configurations and fixed-magnetization sectors.

Conventions shared by the whole package:

* sites are indexed from 0; site 0 carries the small spin ``s1`` in the
  alternating pattern, so even indices are the small-spin sublattice;
* the level index of site k is ``n_k = m_k + s_k`` (0 is the lowest
  z-projection);
* a configuration is packed little-endian, site 0 in the least significant
  bits, with ``ceil(log2(2 s_k + 1))`` bits per site.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "LatticeSpec",
    "SpinConfiguration",
    "SectorBasis",
    "UnsupportedPatternError",
    "as_half_integer",
    "neel_configuration",
    "total_sz",
    "enumerate_sector",
    "cumulative_deviation",
    "format_rational",
]


class UnsupportedPatternError(ValueError):
    """Raised when an operation needs the alternating (s1, s2) pattern."""


def as_half_integer(x) -> Fraction:
    """Convert ``x`` to an exact half-integer, rejecting anything else."""
    if isinstance(x, str):
        f = Fraction(x)
    elif isinstance(x, float):
        f = Fraction(x).limit_denominator(2)
        if abs(float(f) - x) > 1e-12:
            raise ValueError(f"{x!r} is not a half-integer")
    else:
        f = Fraction(x)
    if (2 * f).denominator != 1:
        raise ValueError(f"{x!r} is not a half-integer")
    return f


def format_rational(x: Fraction) -> str:
    """Render a half-integer as ``"-1/2"``, ``"3/2"`` or ``"1"``."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class LatticeSpec:
    """One-dimensional spin lattice with a nearest-neighbour Heisenberg coupling.

    Parameters
    ----------
    n_sites : int
        Number of sites N.
    spins : tuple of Fraction
        Spin magnitude per site.
    boundary : {"ring", "open"}
        ``"ring"`` adds the closing bond between the last site and site 0.
    coupling : float
        Exchange constant J.
    field : float
        Uniform magnetic field B (enters as ``-B * S_z`` per site).
    """

    n_sites: int
    spins: tuple[Fraction, ...]
    boundary: str = "ring"
    coupling: float = 1.0
    field: float = 0.0

    def __post_init__(self):
        spins = tuple(as_half_integer(s) for s in self.spins)
        object.__setattr__(self, "spins", spins)
        if self.n_sites < 1 or len(spins) != self.n_sites:
            raise ValueError("spins must list one magnitude per site")
        if any(s <= 0 for s in spins):
            raise ValueError("spin magnitudes must be positive half-integers")
        if self.boundary not in ("ring", "open"):
            raise ValueError(f"boundary must be 'ring' or 'open', got {self.boundary!r}")
        if self.boundary == "ring" and self.n_sites < 3:
            raise ValueError("a ring needs at least 3 sites")
        if sum(self.bits) > 64:
            raise ValueError(f"{sum(self.bits)} bits per configuration; packing holds at most 64")

    @classmethod
    def alternating(cls, n_sites: int, s1=Fraction(1, 2), s2=Fraction(3, 2),
                    boundary: str = "ring", coupling: float = 1.0,
                    field: float = 0.0) -> "LatticeSpec":
        """Alternating lattice with ``s1`` on even indices and ``s2`` on odd ones."""
        if n_sites % 2:
            raise UnsupportedPatternError("alternating lattices need an even number of sites")
        s1, s2 = as_half_integer(s1), as_half_integer(s2)
        return cls(n_sites, (s1, s2) * (n_sites // 2), boundary, coupling, field)

    def with_field(self, field: float) -> "LatticeSpec":
        return LatticeSpec(self.n_sites, self.spins, self.boundary, self.coupling, field)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(2 * s) + 1 for s in self.spins)

    @property
    def two_s(self) -> np.ndarray:
        return np.array([int(2 * s) for s in self.spins], dtype=np.int64)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(max(1, math.ceil(math.log2(d))) for d in self.dims)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.bits)[:-1]]).astype(np.uint64)

    @property
    def bonds(self) -> list[tuple[int, int]]:
        b = [(k, k + 1) for k in range(self.n_sites - 1)]
        if self.boundary == "ring":
            b.append((self.n_sites - 1, 0))
        return b

    @property
    def is_alternating(self) -> bool:
        if self.n_sites % 2:
            return False
        s1, s2 = self.spins[0], self.spins[1]
        return all(s == (s1 if k % 2 == 0 else s2) for k, s in enumerate(self.spins))

    @property
    def pattern(self) -> tuple[Fraction, Fraction]:
        if not self.is_alternating:
            raise UnsupportedPatternError("lattice does not alternate two spin magnitudes")
        return self.spins[0], self.spins[1]

    @property
    def max_sz(self) -> Fraction:
        return sum(self.spins, Fraction(0))

    @property
    def neel_sz(self) -> Fraction:
        s1, s2 = self.pattern
        return self.n_sites * (s2 - s1) / 2

    def describe(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "spins": [format_rational(s) for s in self.spins],
            "boundary": self.boundary,
            "coupling": self.coupling,
            "field": self.field,
        }


@dataclass(frozen=True)
class SpinConfiguration:
    """A z-basis product state, stored as per-site level indices."""

    levels: tuple[int, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) != len(self.dims):
            raise ValueError("levels and dims differ in length")
        for n, d in zip(levels, self.dims):
            if not 0 <= n < d:
                raise ValueError(f"level {n} outside 0..{d - 1}")

    @classmethod
    def from_m(cls, ms: Sequence, lattice: LatticeSpec) -> "SpinConfiguration":
        levels = []
        for m, s in zip(ms, lattice.spins, strict=True):
            n = as_half_integer(m) + s
            if n.denominator != 1:
                raise ValueError(f"projection {m} incompatible with spin {s}")
            levels.append(int(n))
        return cls(tuple(levels), lattice.dims)

    @classmethod
    def from_packed(cls, packed: int, lattice: LatticeSpec) -> "SpinConfiguration":
        levels = []
        for b in lattice.bits:
            levels.append(packed & ((1 << b) - 1))
            packed >>= b
        return cls(tuple(levels), lattice.dims)

    @property
    def n_sites(self) -> int:
        return len(self.levels)

    @property
    def m(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(2 * n - (d - 1), 2) for n, d in zip(self.levels, self.dims))

    @property
    def packed(self) -> int:
        value, shift = 0, 0
        for n, d in zip(self.levels, self.dims):
            value |= n << shift
            shift += max(1, math.ceil(math.log2(d)))
        return value

    def with_levels(self, changes: dict[int, int]) -> "SpinConfiguration":
        levels = list(self.levels)
        for k, n in changes.items():
            levels[k] = n
        return SpinConfiguration(tuple(levels), self.dims)

    def __str__(self):
        return "|" + ", ".join(format_rational(x) for x in self.m) + ">"


def total_sz(config: SpinConfiguration) -> Fraction:
    return sum(config.m, Fraction(0))


def neel_configuration(lattice: LatticeSpec) -> SpinConfiguration:
    """Small spins fully down, large spins fully up."""
    s1, s2 = lattice.pattern
    if s1 >= s2:
        raise UnsupportedPatternError("the Néel state here needs s1 < s2")
    levels = tuple(0 if k % 2 == 0 else d - 1 for k, d in enumerate(lattice.dims))
    return SpinConfiguration(levels, lattice.dims)


def cumulative_deviation(config: SpinConfiguration, lattice: LatticeSpec) -> list[Fraction]:
    """Running sum of ``m_k - m_k(Néel)`` up to and including each site."""
    neel = neel_configuration(lattice)
    out, acc = [], Fraction(0)
    for m, mn in zip(config.m, neel.m):
        acc += m - mn
        out.append(acc)
    return out


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All configurations of ``lattice`` with total S_z equal to ``total_sz``.

    ``levels`` is an (n_configs, n_sites) array and ``packed`` the matching
    ascending array of packed codes, so ``index_of`` is a binary search.
    """

    lattice: LatticeSpec
    total_sz: Fraction
    levels: np.ndarray = field(repr=False)
    packed: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.packed)

    @property
    def dim(self) -> int:
        return len(self.packed)

    @property
    def m(self) -> np.ndarray:
        """Per-site z-projections as floats, shape (n_configs, n_sites)."""
        return self.levels - self.lattice.two_s[None, :] / 2.0

    def config(self, i: int) -> SpinConfiguration:
        return SpinConfiguration(tuple(self.levels[i]), self.lattice.dims)

    @property
    def configs(self) -> Iterator[SpinConfiguration]:
        for i in range(len(self)):
            yield self.config(i)

    def index_of(self, key) -> int:
        """Ordinal of a configuration (or packed code); -1 when absent."""
        packed = key.packed if isinstance(key, SpinConfiguration) else int(key)
        i = int(np.searchsorted(self.packed, np.uint64(packed)))
        if i < len(self.packed) and int(self.packed[i]) == packed:
            return i
        return -1

    def lookup(self, packed: np.ndarray) -> np.ndarray:
        """Vectorised ``index_of``; absent codes map to -1."""
        packed = np.asarray(packed, dtype=np.uint64)
        idx = np.searchsorted(self.packed, packed)
        idx = np.minimum(idx, max(len(self.packed) - 1, 0))
        hit = len(self.packed) > 0 and self.packed[idx] == packed
        return np.where(hit, idx, -1)

    def to_csv(self, path) -> None:
        """Write (index, packed-hex, m_1..m_N, total_sz) rows."""
        n = self.lattice.n_sites
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "packed_hex"] + [f"m{k}" for k in range(n)] + ["total_sz"])
            for i, c in enumerate(self.configs):
                w.writerow([i, f"{c.packed:#x}"] + [format_rational(x) for x in c.m]
                           + [format_rational(self.total_sz)])


def pack_levels(levels: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    levels = np.asarray(levels, dtype=np.uint64)
    return np.bitwise_or.reduce(levels << lattice.offsets[None, :], axis=1) \
        if levels.shape[0] else np.zeros(0, dtype=np.uint64)


def unpack_levels(packed: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.uint64)
    masks = np.array([(1 << b) - 1 for b in lattice.bits], dtype=np.uint64)
    return ((packed[:, None] >> lattice.offsets[None, :]) & masks[None, :]).astype(np.int8)


def enumerate_sector(lattice: LatticeSpec, total: Fraction) -> SectorBasis:
    """Exhaustive, sorted basis of the fixed-S_z sector.

    Sites are added one at a time; partial assignments whose remaining sites
    can no longer reach the target magnetization are dropped at each step, so
    the full product space is never materialised.
    """
    total = as_half_integer(total)
    two_s = lattice.two_s
    n = lattice.n_sites
    # work with 2*sum(m) = 2*sum(n_k) - sum(2 s_k) to stay in integers
    target = int(2 * total + two_s.sum())
    if target % 2:
        return _empty(lattice, total)
    target //= 2  # required sum of level indices
    max_rest = np.concatenate([np.cumsum(two_s[::-1])[::-1], [0]])  # max level sum of sites k..n-1

    partial_sum = np.zeros(1, dtype=np.int64)
    partial_levels = np.zeros((1, 0), dtype=np.int8)
    for k in range(n):
        d = int(two_s[k]) + 1
        new_sum = (partial_sum[:, None] + np.arange(d)[None, :]).ravel()
        rows = np.repeat(np.arange(len(partial_sum)), d)
        lev = np.tile(np.arange(d, dtype=np.int8), len(partial_sum))
        keep = (new_sum <= target) & (new_sum + max_rest[k + 1] >= target)
        partial_levels = np.concatenate([partial_levels[rows[keep]], lev[keep, None]], axis=1)
        partial_sum = new_sum[keep]
        if not len(partial_sum):
            return _empty(lattice, total)

    packed = pack_levels(partial_levels, lattice)
    order = np.argsort(packed, kind="stable")
    return SectorBasis(lattice, total, partial_levels[order], packed[order])


def _empty(lattice, total):
    return SectorBasis(lattice, total, np.zeros((0, lattice.n_sites), dtype=np.int8),
                       np.zeros(0, dtype=np.uint64))
