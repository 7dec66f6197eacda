"""μ-magnon structures, the amplitude dictionary and the product approximation.

A configuration of an alternating chain is read as a Néel "sea" with
structures on it.  Let ``d_k = n_k - n_k(Néel)`` be the level deviation of
site k and ``c_j = d_0 + ... + d_j`` the cumulative deviation on the bond to
the right of site j.  Bonds where ``c_j`` sits at the baseline (0 on open
chains, the most common level on rings) cut the chain; the pieces between
cuts are single untouched sites (the sea) or structures.

Relative amplitudes of configurations are approximated by

    alpha_r ~ prod_i alpha(str_i) * prod_i beta(str_i, str_{i+1}, gap_i)

with single-structure amplitudes and pair corrections read from a dictionary
measured on an exact reference solution.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .eigensolver import GroundStateVector, relative_amplitude
from .spinbasis import (LatticeSpec, SpinConfiguration, as_half_integer, enumerate_sector,
                        format_rational, neel_configuration, pack_levels, unpack_levels)

log = logging.getLogger(__name__)

DICTIONARY_FORMAT = 1
MAX_STRUCTURE_LEN = 7

__all__ = [
    "Signature",
    "Structure",
    "Parse",
    "StructureDictionary",
    "ApproxGroundState",
    "deviations",
    "parse_structures",
    "count_mumagnons",
    "count_changed_large_spins",
    "count_bottom_large_spins",
    "config_from_deviations",
    "split_mumagnon",
    "build_dictionary",
    "approximate_relative_amplitude",
    "generate_candidates",
    "approximate_ground_state",
    "overlap",
    "split_magnon_fit",
    "measured_split_amplitude",
    "split_magnon_profile",
    "pair_ratio",
    "decomposition_ratio",
    "amplitude_landscape",
]


class Signature(NamedTuple):
    """Start-site sublattice (0 = small spin, 1 = large spin) and level deviations."""

    parity: int
    dev: tuple[int, ...]

    def __len__(self):  # noqa: D105 - length in sites, not tuple arity
        return len(self.dev)

    def reversed(self) -> "Signature":
        return Signature((self.parity + len(self.dev) - 1) % 2, self.dev[::-1])

    def to_text(self, pattern: tuple[Fraction, Fraction]) -> str:
        s1, s2 = pattern
        neel = (-s1, s2)
        ms = [neel[(self.parity + i) % 2] + d for i, d in enumerate(self.dev)]
        tag = "small" if self.parity == 0 else "large"
        return tag + ":" + ",".join(format_rational(m) for m in ms)

    @classmethod
    def from_text(cls, text: str, pattern: tuple[Fraction, Fraction]) -> "Signature":
        tag, _, body = text.partition(":")
        parity = {"small": 0, "large": 1}[tag]
        s1, s2 = pattern
        neel = (-s1, s2)
        dev = []
        for i, tok in enumerate(body.split(",")):
            d = as_half_integer(tok) - neel[(parity + i) % 2]
            if d.denominator != 1:
                raise ValueError(f"bad projection {tok!r} in signature {text!r}")
            dev.append(int(d))
        return cls(parity, tuple(dev))


@dataclass(frozen=True)
class Structure:
    signature: Signature
    start: int  # first site, in the scan's own orientation

    @property
    def length(self) -> int:
        return len(self.signature.dev)

    @property
    def span(self) -> tuple[int, int]:
        return self.start, self.length


@dataclass
class Parse:
    """Structures in scan order and the sea gaps between them.

    Rings: ``gaps[i]`` follows ``structures[i]`` (cyclically).  Open chains:
    ``gaps`` has one more entry, the leading gap first.  A configuration
    without structures has the single gap ``[N]``.
    """

    structures: list[Structure]
    gaps: list[int]
    ring: bool
    in_neel_sector: bool = True


# ---------------------------------------------------------------- parsing

def deviations(config: SpinConfiguration, lattice: LatticeSpec) -> np.ndarray:
    neel = neel_configuration(lattice)
    return np.asarray(config.levels, dtype=np.int64) - np.asarray(neel.levels, dtype=np.int64)


def _parse_dev(dev: np.ndarray, ring: bool) -> Parse:
    N = len(dev)
    c = np.cumsum(dev)
    in_sector = c[-1] == 0
    if ring:
        counts = Counter(c.tolist())
        top = max(counts.values())
        # most common level; prefer 0, then the smallest |level|
        base = min((lv for lv, n in counts.items() if n == top), key=lambda lv: (lv != 0, abs(lv), lv))
        cuts = [j for j in range(N) if c[j] == base]
        if len(cuts) == N:
            return Parse([], [N], True, bool(in_sector))
        # first site after a cut; walk one full turn from there
        origin = (cuts[0] + 1) % N
        order = [(origin + i) % N for i in range(N)]
        is_cut = np.zeros(N, dtype=bool)
        is_cut[cuts] = True
    else:
        order = list(range(N))
        is_cut = c == 0
        is_cut[-1] = True  # the right end closes whatever is open
    structures, gaps = [], []
    gap = 0
    seg: list[int] = []
    for k in order:
        seg.append(k)
        if is_cut[k]:
            if len(seg) == 1 and dev[k] == 0:
                gap += 1
            else:
                if structures or not ring:
                    gaps.append(gap)
                else:
                    lead = gap
                gap = 0
                structures.append(Structure(Signature(seg[0] % 2, tuple(int(dev[i]) for i in seg)), seg[0]))
            seg = []
    if ring:
        if not structures:
            return Parse([], [N], True, bool(in_sector))
        # gaps[i] is the sea after structure i; the last one wraps to the first
        gaps = gaps + [gap + lead]
    else:
        gaps.append(gap)
        if not structures:
            gaps = [N]
    return Parse(structures, gaps, ring, bool(in_sector))


def parse_structures(config: SpinConfiguration, lattice: LatticeSpec, *, reverse: bool = False) -> Parse:
    """Split a configuration into structures and sea gaps.

    With ``reverse=True`` the sites are read from the last to the first; start
    sites and signatures are then given in that reversed frame (site k of the
    original lattice is position ``N-1-k``).  Parities always refer to the
    original sublattices.
    """
    lattice.pattern
    dev = deviations(config, lattice)
    if not reverse:
        return _parse_dev(dev, lattice.boundary == "ring")
    p = _parse_dev(dev[::-1], lattice.boundary == "ring")
    N = lattice.n_sites
    fixed = [Structure(Signature((N - 1 - s.start) % 2, s.signature.dev), s.start) for s in p.structures]
    return Parse(fixed, p.gaps, p.ring, p.in_neel_sector)


def reassemble(parse: Parse, lattice: LatticeSpec) -> SpinConfiguration:
    """Inverse of a forward parse: lay structures and gaps back onto the sea."""
    N = lattice.n_sites
    dev = np.zeros(N, dtype=np.int64)
    if parse.structures:
        pos = parse.structures[0].start if parse.ring else parse.gaps[0]
        gaps = parse.gaps if parse.ring else parse.gaps[1:]
        for s, g in zip(parse.structures, gaps):
            for i, d in enumerate(s.signature.dev):
                dev[(pos + i) % N] = d
            pos += s.length + g
    neel = np.asarray(neel_configuration(lattice).levels)
    return SpinConfiguration(tuple(neel + dev), lattice.dims)


def count_mumagnons(config: SpinConfiguration, lattice: LatticeSpec) -> int:
    """Small-spin sites that differ from their Néel value."""
    return int(np.count_nonzero(deviations(config, lattice)[0::2]))


def count_changed_large_spins(config: SpinConfiguration, lattice: LatticeSpec) -> int:
    return int(np.count_nonzero(deviations(config, lattice)[1::2]))


def count_bottom_large_spins(config: SpinConfiguration, lattice: LatticeSpec) -> int:
    """Large-spin sites sitting at their lowest projection, ``-s2``."""
    return int(np.count_nonzero(np.asarray(config.levels[1::2]) == 0))


def config_from_deviations(lattice: LatticeSpec, changes: dict[int, int]) -> SpinConfiguration:
    """Néel state with ``changes[site]`` added to the level of each listed site."""
    neel = neel_configuration(lattice)
    N = lattice.n_sites
    return neel.with_levels({k % N: neel.levels[k % N] + d for k, d in changes.items()})


def split_mumagnon(lattice: LatticeSpec, gap: int, start: int = 0, direction: int = +1) -> SpinConfiguration:
    """Raised small spin at ``start`` and a lowered large spin ``gap`` sites away.

    ``gap`` counts the untouched sites in between, so it is even and ``gap=0``
    is the ordinary μ-magnon.  ``direction=-1`` puts the large spin on the left.
    """
    if start % 2:
        raise ValueError("start must be a small-spin (even) site")
    if gap < 0 or gap % 2:
        raise ValueError("a split μ-magnon has an even, non-negative gap")
    other = start + direction * (gap + 1)
    if lattice.boundary == "open" and not 0 <= other < lattice.n_sites:
        raise ValueError("split μ-magnon does not fit on the open chain")
    if lattice.boundary == "ring" and gap + 2 > lattice.n_sites:
        raise ValueError("split μ-magnon does not fit on the ring")
    return config_from_deviations(lattice, {start: +1, other: -1})


# ---------------------------------------------------------------- dictionary

@dataclass
class StructureDictionary:
    pattern: tuple[Fraction, Fraction]
    singles: dict[Signature, float] = field(default_factory=dict)
    pairs: dict[tuple[Signature, Signature, int], float] = field(default_factory=dict)
    max_structure_len: int = MAX_STRUCTURE_LEN
    max_pair_gap: int = 4
    provenance: dict = field(default_factory=dict)

    def alpha(self, sig: Signature) -> float:
        if not any(sig.dev):
            return 1.0
        if len(sig) > self.max_structure_len:
            return 0.0
        return self.singles.get(sig, 0.0)

    def beta(self, left: Signature, right: Signature, gap: int) -> float:
        return self.pairs.get((left, right, gap), 1.0)

    def to_json(self) -> dict:
        pat = self.pattern
        return {
            "format_version": DICTIONARY_FORMAT,
            "pattern": [format_rational(s) for s in pat],
            "max_structure_len": self.max_structure_len,
            "max_pair_gap": self.max_pair_gap,
            "provenance": self.provenance,
            "singles": [{"signature": s.to_text(pat), "alpha_r": a}
                        for s, a in sorted(self.singles.items())],
            "pairs": [{"sig1": a.to_text(pat), "sig2": b.to_text(pat), "D": D, "beta": v}
                      for (a, b, D), v in sorted(self.pairs.items())],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, doc: dict) -> "StructureDictionary":
        if doc.get("format_version") != DICTIONARY_FORMAT:
            raise ValueError(f"unsupported dictionary format {doc.get('format_version')!r}")
        pat = tuple(as_half_integer(s) for s in doc["pattern"])
        singles = {Signature.from_text(e["signature"], pat): float(e["alpha_r"]) for e in doc["singles"]}
        pairs = {(Signature.from_text(e["sig1"], pat), Signature.from_text(e["sig2"], pat), int(e["D"])):
                 float(e["beta"]) for e in doc["pairs"]}
        return cls(pat, singles, pairs, doc["max_structure_len"], doc["max_pair_gap"], doc["provenance"])

    @classmethod
    def load(cls, path) -> "StructureDictionary":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def build_dictionary(reference: GroundStateVector, max_structure_len: int = MAX_STRUCTURE_LEN,
                     max_pair_gap: int = 4) -> StructureDictionary:
    """Measure structure amplitudes and pair corrections on an exact ring solution.

    Every configuration with a single structure contributes that structure's
    relative amplitude.  Configurations with two structures contribute
    ``alpha_r / (alpha(str1) alpha(str2))`` keyed by the short gap, provided
    the other gap exceeds ``max_pair_gap``; otherwise the two gaps cannot be
    told apart on the reference ring and the entry is skipped.
    """
    lattice = reference.lattice
    if lattice.boundary != "ring":
        raise ValueError("the dictionary reference must be a ring")
    pattern = lattice.pattern
    a0 = reference.neel_amplitude
    alpha_r = reference.amps / a0
    neel = np.asarray(neel_configuration(lattice).levels, dtype=np.int64)
    dev_all = reference.levels.astype(np.int64) - neel[None, :]

    parses = {}
    singles_acc: dict[Signature, list[float]] = defaultdict(list)
    for i in range(len(alpha_r)):
        p = _parse_dev(dev_all[i], ring=True)
        if len(p.structures) == 1:
            sig = p.structures[0].signature
            if len(sig) <= max_structure_len:
                singles_acc[sig].append(alpha_r[i])
        elif len(p.structures) == 2:
            parses[i] = p
    singles = {}
    for sig, vals in singles_acc.items():
        if max(vals) - min(vals) > 1e-8 * max(1.0, max(abs(v) for v in vals)):
            log.warning("structure %s has inconsistent amplitudes %s", sig, vals)
        singles[sig] = float(np.mean(vals))

    pairs_acc: dict[tuple, list[float]] = defaultdict(list)
    skipped = 0
    for i, p in parses.items():
        (s1, s2), (g1, g2) = p.structures, p.gaps
        a1, a2 = singles.get(s1.signature), singles.get(s2.signature)
        if a1 is None or a2 is None or a1 == 0.0 or a2 == 0.0:
            continue
        for left, right, g, other in ((s1, s2, g1, g2), (s2, s1, g2, g1)):
            if g > max_pair_gap:
                continue
            if other <= max_pair_gap:
                skipped += 1
                continue
            pairs_acc[(left.signature, right.signature, g)].append(alpha_r[i] / (a1 * a2))
    if skipped:
        log.info("skipped %d pair placements whose two gaps are both within %d", skipped, max_pair_gap)
    pairs = {k: float(np.mean(v)) for k, v in pairs_acc.items()}
    provenance = {
        "reference": lattice.describe(),
        "M": format_rational(reference.basis.total_sz),
        "energy": float(reference.energy),
        "neel_amplitude": float(a0),
        "solver": {k: v for k, v in reference.meta.items() if k in ("tolerance", "seed")},
    }
    return StructureDictionary(pattern, singles, pairs, max_structure_len, max_pair_gap, provenance)


# ---------------------------------------------------------------- estimates

def _estimate_from_parse(p: Parse, dictionary: StructureDictionary) -> float:
    if not p.structures:
        return 1.0
    est = 1.0
    for s in p.structures:
        est *= dictionary.alpha(s.signature)
        if est == 0.0:
            return 0.0
    k = len(p.structures)
    if p.ring:
        if k >= 2:
            for i in range(k):
                est *= dictionary.beta(p.structures[i].signature, p.structures[(i + 1) % k].signature, p.gaps[i])
    else:
        for i in range(k - 1):
            est *= dictionary.beta(p.structures[i].signature, p.structures[i + 1].signature, p.gaps[i + 1])
    return est


def _pick(a: float, b: float) -> float:
    # larger modulus wins; equal moduli keep the forward value
    return a if abs(a) >= abs(b) else b


def approximate_relative_amplitude(config: SpinConfiguration, dictionary: StructureDictionary,
                                   lattice: LatticeSpec) -> float:
    """Product estimate of ``alpha_r(config)``, scanned both ways.

    Unknown structures contribute 0 and unknown pair corrections 1; of the two
    scan directions the estimate of larger modulus is returned.
    """
    if tuple(lattice.pattern) != tuple(dictionary.pattern):
        raise ValueError("dictionary was built for a different spin pattern")
    dev = deviations(config, lattice)
    return _estimate_dev(dev, dictionary, lattice.boundary == "ring")


def _estimate_dev(dev: np.ndarray, dictionary: StructureDictionary, ring: bool) -> float:
    fwd = _estimate_from_parse(_parse_dev(dev, ring), dictionary)
    N = len(dev)
    p = _parse_dev(dev[::-1], ring)
    p.structures = [Structure(Signature((N - 1 - s.start) % 2, s.signature.dev), s.start)
                    for s in p.structures]
    bwd = _estimate_from_parse(p, dictionary)
    return _pick(fwd, bwd)


def generate_candidates(lattice: LatticeSpec, dictionary: StructureDictionary, threshold: float, *,
                        max_mumagnons: int | None = 6, max_bottom_large: int | None = 2,
                        ) -> list[SpinConfiguration]:
    """Configurations worth keeping in an approximate ground state.

    Dictionary structures are laid onto the Néel sea from left to right.  A
    partial placement is abandoned as soon as its own estimate drops below
    ``threshold`` (adding structures only lowers it), or when it exceeds
    ``max_mumagnons`` raised/lowered small spins or ``max_bottom_large``
    large spins at ``-s2``.  Rings also get every unit-cell translation of
    each placement.  Survivors must reach ``threshold`` with the full
    two-way estimate.  Output is sorted by packed code.

    ``threshold=0`` with both limits set to ``None`` returns the whole
    Néel sector.
    """
    lattice.pattern
    N = lattice.n_sites
    ring = lattice.boundary == "ring"
    if threshold <= 0 and max_mumagnons is None and max_bottom_large is None:
        basis = enumerate_sector(lattice, lattice.neel_sz)
        return list(basis.configs)

    neel = np.asarray(neel_configuration(lattice).levels, dtype=np.int64)
    two_s2 = int(2 * lattice.pattern[1])
    by_parity: dict[int, list[tuple[Signature, float, int, int]]] = {0: [], 1: []}
    for sig, a in dictionary.singles.items():
        if len(sig) > min(dictionary.max_structure_len, N) or a == 0.0 or abs(a) < threshold:
            continue
        dev = np.array(sig.dev)
        mu = sum(1 for i, d in enumerate(sig.dev) if d and (sig.parity + i) % 2 == 0)
        bottom = sum(1 for i, d in enumerate(sig.dev) if (sig.parity + i) % 2 == 1 and d == -two_s2)
        by_parity[sig.parity].append((sig, a, mu, bottom))
    for lst in by_parity.values():
        lst.sort()

    found: set[int] = set()
    dev = np.zeros(N, dtype=np.int64)

    def emit():
        lev = neel + dev
        if ring:
            for t in range(0, N, 2):
                found.add(int(pack_levels(np.roll(lev, t)[None, :], lattice)[0]))
        else:
            found.add(int(pack_levels(lev[None, :], lattice)[0]))

    def dfs(pos, est, last_sig, gap, mu, bottom):
        # est: product estimate of the placed prefix (linear frame)
        emit()
        for start in range(pos, N):
            g = gap + (start - pos)
            for sig, a, dmu, dbot in by_parity[start % 2]:
                L = len(sig)
                if start + L > N:
                    continue
                if max_mumagnons is not None and mu + dmu > max_mumagnons:
                    continue
                if max_bottom_large is not None and bottom + dbot > max_bottom_large:
                    continue
                new = est * a
                if last_sig is not None:
                    new *= dictionary.beta(last_sig, sig, g)
                if abs(new) < threshold:
                    continue
                dev[start:start + L] = sig.dev
                dfs(start + L, new, sig, 0, mu + dmu, bottom + dbot)
                dev[start:start + L] = 0

    dfs(0, 1.0, None, 0, 0, 0)
    codes = np.array(sorted(found), dtype=np.uint64)
    levels = unpack_levels(codes, lattice).astype(np.int64)
    out = []
    for code, lev in zip(codes, levels):
        d = lev - neel
        if d.sum() != 0:
            continue
        est = _estimate_dev(d, dictionary, ring)
        if abs(est) >= threshold:
            out.append(SpinConfiguration(tuple(lev), lattice.dims))
    return out


@dataclass(eq=False)
class ApproxGroundState:
    """Dictionary-estimated relative amplitudes on a subset of the Néel sector."""

    lattice: LatticeSpec
    configs: list[SpinConfiguration]
    alpha_r: np.ndarray
    normalization: float
    threshold: float

    @property
    def amps(self) -> np.ndarray:
        return self.alpha_r * self.normalization

    @property
    def levels(self) -> np.ndarray:
        if not self.configs:
            return np.zeros((0, self.lattice.n_sites), dtype=np.int8)
        return np.array([c.levels for c in self.configs], dtype=np.int8)

    @property
    def packed(self) -> np.ndarray:
        return pack_levels(self.levels, self.lattice)

    def __len__(self):
        return len(self.configs)


def approximate_ground_state(lattice: LatticeSpec, dictionary: StructureDictionary, threshold: float,
                             **candidate_kw) -> ApproxGroundState:
    configs = generate_candidates(lattice, dictionary, threshold, **candidate_kw)
    est = np.array([approximate_relative_amplitude(c, dictionary, lattice) for c in configs])
    keep = np.abs(est) >= threshold
    configs = [c for c, k in zip(configs, keep) if k]
    est = est[keep]
    norm = 1.0 / np.sqrt(np.sum(est**2))
    return ApproxGroundState(lattice, configs, est, float(norm), threshold)


def overlap(approx: ApproxGroundState, exact: GroundStateVector) -> float:
    """``<approx|exact>`` with both states normalised."""
    idx = exact.basis.lookup(approx.packed)
    inside = idx >= 0
    return float(np.dot(approx.amps[inside], exact.amps[idx[inside]]))


# ---------------------------------------------------------------- split μ-magnons

FIT_PREFACTOR = -0.27295
FIT_LINEAR = -1.55089
FIT_QUADRATIC = 0.07923


def split_magnon_fit(D: float) -> float:
    """Empirical open-chain average of the split μ-magnon amplitude, valid for 0 <= D <= 10."""
    if not 0 <= D <= 10:
        raise ValueError(f"gap {D} outside the fitted range 0..10")
    return FIT_PREFACTOR * math.exp(FIT_LINEAR * D + FIT_QUADRATIC * D * D)


def measured_split_amplitude(state: GroundStateVector, D: int, start: int = 0, direction: int = +1) -> float:
    """``alpha_r`` of the split μ-magnon with gap ``D`` starting at ``start``."""
    return relative_amplitude(state, split_mumagnon(state.lattice, D, start, direction))


@dataclass
class SplitEntry:
    raised: int
    lowered: int
    gap: int
    alpha_r: float
    edge: bool


def split_magnon_profile(state: GroundStateVector) -> list[SplitEntry]:
    """Every single (possibly split) μ-magnon of the state.

    On open chains ``edge`` marks configurations whose raised small spin is
    an end site of the chain.
    """
    lattice = state.lattice
    N = lattice.n_sites
    ring = lattice.boundary == "ring"
    out = []
    for raised in range(0, N, 2):
        for lowered in range(1, N, 2):
            if ring:
                gap = (lowered - raised - 1) % N
            else:
                gap = abs(lowered - raised) - 1
            cfg = config_from_deviations(lattice, {raised: 1, lowered: -1})
            edge = (not ring) and raised in (0, N - 1)
            out.append(SplitEntry(raised, lowered, gap, relative_amplitude(state, cfg), edge))
    return out


# ---------------------------------------------------------------- ratios

def pair_ratio(state: GroundStateVector, combined: SpinConfiguration, parts: Iterable[SpinConfiguration]) -> float:
    """``alpha_r(combined) / prod alpha_r(part)``."""
    den = 1.0
    for p in parts:
        den *= relative_amplitude(state, p)
    return relative_amplitude(state, combined) / den


def decomposition_ratio(state: GroundStateVector, combined: SpinConfiguration,
                        decompositions: Iterable[Iterable[SpinConfiguration]]) -> float:
    """``alpha_r(combined)`` over the sum, across decompositions, of part products."""
    den = 0.0
    for parts in decompositions:
        prod = 1.0
        for p in parts:
            prod *= relative_amplitude(state, p)
        den += prod
    return relative_amplitude(state, combined) / den


def amplitude_landscape(state: GroundStateVector) -> dict[str, np.ndarray]:
    """Per-configuration log|alpha|, zero-field classical energy and change counts."""
    lattice = state.lattice.with_field(0.0)
    lev = state.levels.astype(np.int64)
    m = lev - lattice.two_s[None, :] / 2.0
    energy = np.zeros(len(lev))
    for a, b in lattice.bonds:
        energy += lattice.coupling * m[:, a] * m[:, b]
    dev = lev - np.asarray(neel_configuration(lattice).levels)[None, :]
    with np.errstate(divide="ignore"):
        logamp = np.log(np.abs(state.amps))
    return {
        "log_abs_alpha": logamp,
        "classical_energy": energy,
        "n_mumagnons": np.count_nonzero(dev[:, 0::2], axis=1),
        "n_large_changed": np.count_nonzero(dev[:, 1::2], axis=1),
    }
