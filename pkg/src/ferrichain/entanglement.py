"""Reduced states, fidelity and partial-transpose negativities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .spinbasis import pack_levels

__all__ = [
    "DensityMatrix",
    "NegativityReport",
    "reduced_density_matrix",
    "partial_transpose",
    "log_negativity",
    "four_partite_negativity",
    "negativity_report",
    "fidelity",
    "truncate_state",
    "truncation_infidelity_scan",
    "distortion_fidelity",
    "DistortionResult",
    "negativity_scan",
    "FOUR_PARTITE_MASKS",
]

EIG_CLIP = 1e-10
FOUR_PARTITE_MASKS = ((0,), (1,), (2,), (3,), (0, 1), (0, 2), (0, 3))
MASK_LABELS = ("a", "b", "c", "d", "ab", "ac", "ad")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        n = int(np.prod(self.dims))
        if self.entries.shape != (n, n):
            raise ValueError(f"entries of shape {self.entries.shape} do not match dims {self.dims}")

    @classmethod
    def pure(cls, psi: np.ndarray, dims: Sequence[int]) -> "DensityMatrix":
        psi = np.asarray(psi)
        psi = psi / np.linalg.norm(psi)
        return cls(tuple(dims), np.outer(psi, psi.conj()))

    def check(self, atol: float = 1e-12) -> None:
        r = self.entries
        if np.max(np.abs(r - r.conj().T)) > atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1.0) > atol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(r).min() < -EIG_CLIP:
            raise ValueError("density matrix has negative eigenvalues")


def reduced_density_matrix(state, sites: Sequence[int]) -> DensityMatrix:
    """Trace ``|psi><psi|`` down to ``sites`` (factor order as given).

    ``state`` is anything with ``lattice``, ``levels`` (configs x sites) and
    ``amps``, e.g. an exact or an approximate ground state.
    """
    sites = [int(k) for k in sites]
    lattice = state.lattice
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate sites")
    if any(not 0 <= k < lattice.n_sites for k in sites):
        raise ValueError("site outside the lattice")
    levels = np.asarray(state.levels, dtype=np.int64)
    amps = np.asarray(state.amps, dtype=float)
    norm = np.linalg.norm(amps)
    dims = tuple(lattice.dims[k] for k in sites)
    dA = int(np.prod(dims))

    # subsystem index: first listed site is the slowest index (row-major kron order)
    a = np.zeros(len(levels), dtype=np.int64)
    for k in sites:
        a = a * lattice.dims[k] + levels[:, k]
    env = levels.copy()
    env[:, sites] = 0
    env_code = pack_levels(env, lattice)
    _, e = np.unique(env_code, return_inverse=True)
    psi = sp.csr_matrix((amps / norm, (a, e.ravel())), shape=(dA, int(e.max()) + 1 if len(e) else 0))
    rho = (psi @ psi.T).toarray()
    rho = 0.5 * (rho + rho.T)
    return DensityMatrix(dims, rho)


def _pt_tensor(rho: DensityMatrix, mask: Sequence[int]) -> np.ndarray:
    dims = rho.dims
    k = len(dims)
    mask = sorted(set(int(i) for i in mask))
    if not mask or len(mask) == k:
        raise ValueError("partial-transpose mask must be a non-empty proper subset")
    if any(not 0 <= i < k for i in mask):
        raise ValueError("mask index out of range")
    t = rho.entries.reshape(dims + dims)
    perm = list(range(2 * k))
    for i in mask:
        perm[i], perm[k + i] = perm[k + i], perm[i]
    n = int(np.prod(dims))
    return t.transpose(perm).reshape(n, n)


def partial_transpose(rho: DensityMatrix, mask: Sequence[int]) -> np.ndarray:
    """Transpose the listed tensor factors of ``rho``."""
    return _pt_tensor(rho, mask)


def log_negativity(rho: DensityMatrix, mask: Sequence[int]) -> float:
    """``log2(1 + 2 sum |lambda|)`` over negative eigenvalues of the partial transpose."""
    ev = np.linalg.eigvalsh(_pt_tensor(rho, mask))
    neg = ev[ev < -EIG_CLIP]
    return float(math.log2(1.0 + 2.0 * float(-neg.sum())))


@dataclass
class NegativityReport:
    bipartitions: dict[str, float]
    n4: float


def negativity_report(rho: DensityMatrix) -> NegativityReport:
    if len(rho.dims) != 4:
        raise ValueError("four-partite negativity needs exactly four factors")
    vals = {lab: log_negativity(rho, m) for lab, m in zip(MASK_LABELS, FOUR_PARTITE_MASKS)}
    prod = 1.0
    for v in vals.values():
        prod *= v
    return NegativityReport(vals, prod ** (1.0 / 7.0) if prod > 0 else 0.0)


def four_partite_negativity(rho: DensityMatrix) -> float:
    """Geometric mean of the log-negativities over a|bcd, ..., ab|cd, ac|bd, ad|bc."""
    return negativity_report(rho).n4


def _floor(w: np.ndarray) -> np.ndarray:
    # eigenvalues within round-off of zero are zero; their square roots would not be small
    tol = len(w) * np.finfo(float).eps * max(float(np.max(np.abs(w))), 1e-300)
    return np.where(w > tol, w, 0.0)


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (U * np.sqrt(_floor(w))) @ U.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch {rho.dims} vs {sigma.dims}")
    if np.array_equal(rho.entries, sigma.entries):
        return 1.0
    s = _sqrt_psd(rho.entries)
    m = s @ sigma.entries @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    f = float(np.sum(np.sqrt(_floor(w))) ** 2)
    return min(max(f, 0.0), 1.0)


@dataclass(eq=False)
class _SubState:
    lattice: object
    levels: np.ndarray
    amps: np.ndarray


def truncate_state(state, fraction: float, rtol: float = 1e-10) -> _SubState:
    """Keep the ``ceil(fraction * dim)`` largest |amplitudes|, plus ties at the cut."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    amps = np.asarray(state.amps)
    mag = np.abs(amps)
    order = np.argsort(-mag, kind="stable")
    n_keep = math.ceil(fraction * len(amps))
    cut = mag[order[n_keep - 1]]
    while n_keep < len(amps) and mag[order[n_keep]] >= cut * (1 - rtol):
        n_keep += 1
    keep = np.sort(order[:n_keep])
    sub = amps[keep]
    return _SubState(state.lattice, np.asarray(state.levels)[keep], sub / np.linalg.norm(sub))


def truncation_infidelity_scan(state, sites: Sequence[int], fractions: Sequence[float]) -> list[tuple[float, float]]:
    """``(fraction, 1 - F(rho_truncated, rho_full))`` for each fraction."""
    full = reduced_density_matrix(state, sites)
    out = []
    for f in fractions:
        rho = reduced_density_matrix(truncate_state(state, f), sites)
        out.append((float(f), 1.0 - fidelity(full, rho)))
    return out


@dataclass
class DistortionResult:
    sigma: float
    mean_fidelity: float
    stderr: float
    fidelities: np.ndarray


def distortion_fidelity(state, sites: Sequence[int], sigma: float, trials: int = 40,
                        seed: int = 0) -> DistortionResult:
    """Mean fidelity of the reduced state after multiplying amplitudes by ``exp(x)``.

    ``x ~ Normal(0, sigma)`` independently per amplitude.  Trial ``t`` draws
    from its own child stream of ``SeedSequence(seed)``, so a given seed gives
    the same standard-normal draws for every ``sigma``.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if trials < 1:
        raise ValueError("need at least one trial")
    ref = reduced_density_matrix(state, sites)
    amps = np.asarray(state.amps)
    children = np.random.SeedSequence(seed).spawn(trials)
    fids = np.empty(trials)
    for t, child in enumerate(children):
        z = np.random.default_rng(child).standard_normal(len(amps))
        distorted = _SubState(state.lattice, state.levels, amps * np.exp(sigma * z))
        fids[t] = fidelity(ref, reduced_density_matrix(distorted, sites)) if sigma > 0 else 1.0
    stderr = float(fids.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return DistortionResult(float(sigma), float(fids.mean()), stderr, fids)


def negativity_scan(state, separations: Sequence[int], first: int = 0) -> list[tuple[int, float]]:
    """``N4`` of sites ``(first, first+1)`` and ``(first+2+D, first+3+D)`` for each D."""
    N = state.lattice.n_sites
    ring = state.lattice.boundary == "ring"
    out = []
    for D in separations:
        sites = [first, first + 1, first + 2 + D, first + 3 + D]
        if ring:
            sites = [k % N for k in sites]
        rho = reduced_density_matrix(state, sites)
        out.append((int(D), four_partite_negativity(rho)))
    return out
