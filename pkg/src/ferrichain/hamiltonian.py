"""Heisenberg Hamiltonian on a fixed-magnetization sector.

    H = J sum_<k,l> S^k . S^l  -  B sum_k S^k_z

with the bond between the last site and site 0 present only on rings.  In
the z-basis the flip-flop part is ``J/2 (S+ S- + S- S+)``, which keeps the
total magnetization, so H acts inside a :class:`SectorBasis`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .spinbasis import (LatticeSpec, SectorBasis, SpinConfiguration,
                        as_half_integer, neel_configuration, pack_levels)

__all__ = [
    "HamiltonianSpec",
    "SectorVector",
    "SectorHamiltonian",
    "ladder_coefficient",
    "apply_hamiltonian",
    "classical_energy",
    "create_mumagnon",
    "dense_sector_matrix",
    "kron_sector_matrix",
]


@dataclass(frozen=True)
class HamiltonianSpec:
    lattice: LatticeSpec

    @property
    def coupling(self) -> float:
        return self.lattice.coupling

    @property
    def field(self) -> float:
        return self.lattice.field

    @property
    def boundary(self) -> str:
        return self.lattice.boundary


@dataclass(frozen=True, eq=False)
class SectorVector:
    basis: SectorBasis
    amps: np.ndarray

    def __post_init__(self):
        if len(self.amps) != len(self.basis):
            raise ValueError("amplitude count does not match the basis")


def ladder_coefficient(s, m, direction: str) -> float:
    """``sqrt(s(s+1) - m(m+1))`` for ``"raise"``, ``m(m-1)`` for ``"lower"``."""
    s, m = as_half_integer(s), as_half_integer(m)
    if abs(m) > s or (s - m).denominator != 1:
        raise ValueError(f"m={m} is not a projection of spin {s}")
    if direction == "raise":
        val = s * (s + 1) - m * (m + 1)
    elif direction == "lower":
        val = s * (s + 1) - m * (m - 1)
    else:
        raise ValueError("direction must be 'raise' or 'lower'")
    return float(np.sqrt(float(val)))


def _ladder_array(two_s: int, levels: np.ndarray, step: int) -> np.ndarray:
    # levels -> m = n - s; coefficient of S± acting on |m>
    s = two_s / 2.0
    m = levels - s
    return np.sqrt(np.maximum(s * (s + 1) - m * (m + step), 0.0))


class SectorHamiltonian:
    """Hop tables for H on one sector, exposed as a linear operator.

    The diagonal is held as a vector and the flip-flop amplitudes as a sparse
    table of (target, source, coefficient) triples built once per basis.
    """

    def __init__(self, spec: HamiltonianSpec | LatticeSpec, basis: SectorBasis):
        lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
        if basis.lattice.spins != lattice.spins or basis.lattice.n_sites != lattice.n_sites:
            raise ValueError("basis was built for a different lattice")
        self.lattice = lattice
        self.basis = basis
        self.shape = (len(basis), len(basis))
        self.dtype = np.dtype(float)

    @cached_property
    def diagonal_zz(self) -> np.ndarray:
        m = self.basis.m
        d = np.zeros(len(self.basis))
        for a, b in self.lattice.bonds:
            d += m[:, a] * m[:, b]
        return self.lattice.coupling * d

    @property
    def diagonal(self) -> np.ndarray:
        return self.diagonal_zz - self.lattice.field * float(self.basis.total_sz)

    @cached_property
    def offdiagonal(self) -> sp.csr_matrix:
        lat, basis = self.lattice, self.basis
        lev = basis.levels.astype(np.int64)
        two_s = lat.two_s
        rows, cols, vals = [], [], []
        for a, b in lat.bonds:
            for da, db in ((1, -1), (-1, 1)):
                na, nb = lev[:, a] + da, lev[:, b] + db
                ok = (na >= 0) & (na <= two_s[a]) & (nb >= 0) & (nb <= two_s[b])
                if not ok.any():
                    continue
                src = np.nonzero(ok)[0]
                new = lev[src].copy()
                new[:, a] += da
                new[:, b] += db
                dst = basis.lookup(pack_levels(new, lat))
                coef = (0.5 * lat.coupling
                        * _ladder_array(two_s[a], lev[src, a], da)
                        * _ladder_array(two_s[b], lev[src, b], db))
                rows.append(dst)
                cols.append(src)
                vals.append(coef)
        n = len(basis)
        if not rows:
            return sp.csr_matrix((n, n))
        rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        if (rows < 0).any():
            raise RuntimeError("flip-flop left the sector")  # cannot happen for a valid basis
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.diagonal * v + self.offdiagonal @ v

    __matmul__ = matvec

    def to_sparse(self) -> sp.csr_matrix:
        return (self.offdiagonal + sp.diags(self.diagonal)).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def apply_hamiltonian(spec: HamiltonianSpec | LatticeSpec, basis: SectorBasis,
                      v: SectorVector | np.ndarray) -> SectorVector:
    amps = v.amps if isinstance(v, SectorVector) else np.asarray(v, dtype=float)
    if isinstance(v, SectorVector) and v.basis is not basis:
        raise ValueError("vector belongs to a different basis")
    return SectorVector(basis, SectorHamiltonian(spec, basis).matvec(amps))


def classical_energy(config: SpinConfiguration, spec: HamiltonianSpec | LatticeSpec,
                     include_field: bool = False) -> Fraction | float:
    """Ising part of H for one configuration, exact when J and B are rational."""
    lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
    m = config.m
    zz = sum((m[a] * m[b] for a, b in lattice.bonds), Fraction(0))
    e = _exact(lattice.coupling) * zz
    if include_field:
        e -= _exact(lattice.field) * sum(m, Fraction(0))
    return e


def _exact(x):
    f = Fraction(x).limit_denominator(10**6)
    return f if float(f) == x else x


def create_mumagnon(config: SpinConfiguration, lattice: LatticeSpec, m: int, n: int
                    ) -> SpinConfiguration | None:
    """Raise the small-spin site and lower the large-spin site of the pair (m, n).

    Returns ``None`` when either ladder step leaves the spin's range.
    """
    lattice.pattern  # alternating lattices only
    N = lattice.n_sites
    for k in (m, n):
        if not 0 <= k < N:
            raise IndexError(f"site {k} outside 0..{N - 1}")
    if m % 2 == n % 2:
        raise ValueError("a μ-magnon pairs one small-spin and one large-spin site")
    small, large = (m, n) if m % 2 == 0 else (n, m)
    lev = list(config.levels)
    lev[small] += 1
    lev[large] -= 1
    if lev[small] >= config.dims[small] or lev[large] < 0:
        return None
    return SpinConfiguration(tuple(lev), config.dims)


# ---------------------------------------------------------------- oracles

def dense_sector_matrix(spec: HamiltonianSpec | LatticeSpec, basis: SectorBasis) -> np.ndarray:
    """H assembled entry by entry from the ladder formula, one bond at a time."""
    lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
    J, B = lattice.coupling, lattice.field
    configs = list(basis.configs)
    H = np.zeros((len(configs), len(configs)))
    for j, c in enumerate(configs):
        ms = c.m
        H[j, j] = sum(J * float(ms[a] * ms[b]) for a, b in lattice.bonds) - B * float(sum(ms))
        for a, b in lattice.bonds:
            for da, db in ((1, -1), (-1, 1)):
                sa, sb = lattice.spins[a], lattice.spins[b]
                if abs(ms[a] + da) > sa or abs(ms[b] + db) > sb:
                    continue
                coef = 0.5 * J * ladder_coefficient(sa, ms[a], "raise" if da > 0 else "lower") \
                    * ladder_coefficient(sb, ms[b], "raise" if db > 0 else "lower")
                i = basis.index_of(c.with_levels({a: c.levels[a] + da, b: c.levels[b] + db}))
                H[i, j] += coef
    return H


def _spin_matrices(s: Fraction):
    d = int(2 * s) + 1
    m = np.arange(d) - float(s)  # index = level, ascending m
    sz = np.diag(m)
    sp_ = np.zeros((d, d))
    for n in range(d - 1):
        sp_[n + 1, n] = np.sqrt(float(s) * (float(s) + 1) - m[n] * (m[n] + 1))
    return sz, sp_, sp_.T


def kron_sector_matrix(lattice: LatticeSpec, basis: SectorBasis) -> np.ndarray:
    """H in the full product space via Kronecker products, projected on the sector.

    Independent of the hop tables; only practical for small product spaces.
    """
    dims = lattice.dims
    full = int(np.prod(dims))
    if full > 1 << 14:
        raise ValueError("product space too large for the Kronecker oracle")
    ops = [_spin_matrices(s) for s in lattice.spins]

    def embed(k, op):
        # site 0 is the fastest-varying index, matching little-endian level order
        out = np.eye(1)
        for j in reversed(range(lattice.n_sites)):
            out = np.kron(out, op if j == k else np.eye(dims[j]))
        return out

    H = np.zeros((full, full))
    for a, b in lattice.bonds:
        za, pa, ma = ops[a]
        zb, pb, mb = ops[b]
        H += lattice.coupling * (embed(a, za) @ embed(b, zb)
                                 + 0.5 * (embed(a, pa) @ embed(b, mb) + embed(a, ma) @ embed(b, pb)))
    for k in range(lattice.n_sites):
        H -= lattice.field * embed(k, ops[k][0])
    strides = np.concatenate([[1], np.cumprod(dims[:-1])]).astype(np.int64)
    idx = basis.levels.astype(np.int64) @ strides
    return H[np.ix_(idx, idx)]


def neel_vector(basis: SectorBasis) -> np.ndarray:
    v = np.zeros(len(basis))
    v[basis.index_of(neel_configuration(basis.lattice))] = 1.0
    return v
