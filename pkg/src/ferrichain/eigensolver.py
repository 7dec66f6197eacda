"""Ground states per magnetization sector and amplitude bookkeeping."""

from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.linalg

from .hamiltonian import HamiltonianSpec, SectorHamiltonian
from .spinbasis import (LatticeSpec, SectorBasis, SpinConfiguration, as_half_integer,
                        enumerate_sector, format_rational, neel_configuration, pack_levels,
                        UnsupportedPatternError)

log = logging.getLogger(__name__)

__all__ = [
    "GroundStateVector",
    "SolveReport",
    "SolveFailure",
    "OutsideSectorWarning",
    "lanczos_lowest",
    "ground_state",
    "dense_ground_state",
    "sector_scan",
    "ScanPoint",
    "amplitude",
    "relative_amplitude",
    "top_amplitudes",
    "symmetry_permutations",
    "orbit_ids",
    "save_ground_state",
    "load_ground_state",
]

DENSE_CAP = 4096


class SolveFailure(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class OutsideSectorWarning(UserWarning):
    pass


@dataclass
class SolveReport:
    iterations: int
    residual: float
    degenerate: bool
    wall_time: float
    method: str
    gap: float = float("nan")
    converged: bool = True

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class GroundStateVector:
    basis: SectorBasis
    amps: np.ndarray
    energy: float
    phase_convention: str = "neel-positive"
    meta: dict = field(default_factory=dict)

    @property
    def lattice(self) -> LatticeSpec:
        return self.basis.lattice

    @property
    def levels(self) -> np.ndarray:
        return self.basis.levels

    @property
    def neel_amplitude(self) -> float:
        i = self.basis.index_of(neel_configuration(self.lattice))
        return float(self.amps[i]) if i >= 0 else 0.0


def _fix_phase(basis: SectorBasis, v: np.ndarray) -> tuple[np.ndarray, str]:
    try:
        i = basis.index_of(neel_configuration(basis.lattice))
    except UnsupportedPatternError:
        i = -1
    if i >= 0 and abs(v[i]) > 1e-300:
        return (v if v[i] >= 0 else -v), "neel-positive"
    # no Néel component here: make the largest entry (first on ties) positive
    j = int(np.argmax(np.abs(v)))
    return (v if v[j] >= 0 else -v), "largest-positive"


def lanczos_lowest(matvec: Callable[[np.ndarray], np.ndarray], n: int, *, tol: float,
                   krylov_dim: int = 100, max_restarts: int = 50, seed: int = 0,
                   check_every: int = 5):
    """Lowest eigenpair of a real symmetric operator.

    Lanczos with full (twice-applied Gram-Schmidt) reorthogonalisation,
    restarted from the current Ritz vector when the Krylov space is full.
    Returns ``(theta, x, iterations, residual, gap)`` where ``gap`` is the
    distance to the second Ritz value of the last Krylov space.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    m = min(krylov_dim, n)
    iterations = 0
    theta, x, res, gap = np.nan, v, np.inf, np.nan
    for _ in range(max_restarts):
        V = np.empty((m, n))
        alpha = np.zeros(m)
        beta = np.zeros(m)
        V[0] = v
        k = 0
        for j in range(m):
            w = matvec(V[j])
            iterations += 1
            alpha[j] = V[j] @ w
            for _pass in range(2):
                w -= V[: j + 1].T @ (V[: j + 1] @ w)
            beta[j] = np.linalg.norm(w)
            k = j + 1
            if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
                break  # invariant subspace
            if k % check_every == 0 or k == m:
                ev, ey = scipy.linalg.eigh_tridiagonal(alpha[:k], beta[: k - 1])
                if abs(beta[j] * ey[-1, 0]) < 0.1 * tol:
                    break
            if j + 1 < m:
                V[j + 1] = w / beta[j]
        ev, ey = scipy.linalg.eigh_tridiagonal(alpha[:k], beta[: k - 1]) if k > 1 else \
            (alpha[:1], np.ones((1, 1)))
        theta = float(ev[0])
        gap = float(ev[1] - ev[0]) if k > 1 else np.nan
        x = V[:k].T @ ey[:, 0]
        x /= np.linalg.norm(x)
        res = float(np.linalg.norm(matvec(x) - theta * x))
        if res <= tol or k == n:
            return theta, x, iterations, res, gap
        v = x
    return theta, x, iterations, res, gap


def default_tolerance(lattice: LatticeSpec) -> float:
    return 1e-10 * max(abs(lattice.coupling), 1e-300) * lattice.n_sites


def ground_state(spec: HamiltonianSpec | LatticeSpec, M, tol: float | None = None, *,
                 method: str = "auto", seed: int = 0, krylov_dim: int = 100,
                 max_restarts: int = 50, basis: SectorBasis | None = None,
                 ) -> tuple[GroundStateVector, SolveReport]:
    """Lowest eigenpair of H in the sector with total S_z = ``M``.

    ``method`` is ``"lanczos"``, ``"dense"`` or ``"auto"`` (dense for tiny
    sectors).  Raises :class:`SolveFailure` if the residual stays above ``tol``.
    """
    lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
    M = as_half_integer(M)
    if basis is None:
        basis = enumerate_sector(lattice, M)
    if not len(basis):
        raise ValueError(f"sector M={M} is empty")
    if tol is None:
        tol = default_tolerance(lattice)
    if method == "auto":
        method = "dense" if len(basis) <= 256 else "lanczos"
    if method == "dense":
        state, spectrum = dense_ground_state(lattice, M, basis=basis)
        return state, state.meta.pop("report")

    t0 = time.perf_counter()
    H = SectorHamiltonian(lattice, basis)
    theta, x, its, res, gap = lanczos_lowest(H.matvec, len(basis), tol=tol, seed=seed,
                                             krylov_dim=krylov_dim, max_restarts=max_restarts)
    report = SolveReport(iterations=its, residual=res,
                         degenerate=bool(gap < 1e-8 * abs(lattice.coupling)),
                         wall_time=time.perf_counter() - t0, method="lanczos", gap=gap,
                         converged=res <= tol)
    if res > tol:
        raise SolveFailure(f"Lanczos residual {res:.3e} above tolerance {tol:.3e}", report)
    amps, conv = _fix_phase(basis, x)
    meta = {"tolerance": tol, "seed": seed, "M": format_rational(M)}
    return GroundStateVector(basis, amps, theta, conv, meta), report


def dense_ground_state(spec: HamiltonianSpec | LatticeSpec, M, *, basis: SectorBasis | None = None
                       ) -> tuple[GroundStateVector, np.ndarray]:
    """Full diagonalisation of a sector; returns the ground state and all eigenvalues."""
    lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
    M = as_half_integer(M)
    if basis is None:
        basis = enumerate_sector(lattice, M)
    if len(basis) > DENSE_CAP:
        raise ValueError(f"sector dimension {len(basis)} exceeds the dense cap {DENSE_CAP}")
    if not len(basis):
        raise ValueError(f"sector M={M} is empty")
    t0 = time.perf_counter()
    H = SectorHamiltonian(lattice, basis).to_dense()
    w, U = np.linalg.eigh(H)
    amps, conv = _fix_phase(basis, U[:, 0])
    gap = float(w[1] - w[0]) if len(w) > 1 else np.inf
    report = SolveReport(iterations=1, residual=float(np.linalg.norm(H @ amps - w[0] * amps)),
                         degenerate=bool(gap < 1e-8 * abs(lattice.coupling)),
                         wall_time=time.perf_counter() - t0, method="dense", gap=gap)
    meta = {"tolerance": 0.0, "seed": None, "M": format_rational(M), "report": report}
    return GroundStateVector(basis, amps, float(w[0]), conv, meta), w


@dataclass
class ScanPoint:
    field: float
    best_M: Fraction
    energy: float
    ties: list[Fraction]

    @property
    def degenerate(self) -> bool:
        return len(self.ties) > 1


def sector_scan(spec: HamiltonianSpec | LatticeSpec, fields, *, tie_tol: float = 1e-8,
                seed: int = 0, sectors=None) -> list[ScanPoint]:
    """For each field B, the sector minimising ``E_M(B=0) - B M``.

    Zero-field sector energies are computed once (M >= 0 only, which suffices
    for B >= 0 since E_{-M} = E_M at zero field).
    """
    lattice = spec.lattice if isinstance(spec, HamiltonianSpec) else spec
    zero = lattice.with_field(0.0)
    if sectors is None:
        top = lattice.max_sz
        lowest = top - int(top)
        sectors = [lowest + k for k in range(int(top - lowest) + 1)]
    energies = {}
    for M in sectors:
        M = as_half_integer(M)
        gs, _ = ground_state(zero, M, seed=seed)
        energies[M] = gs.energy
        log.debug("sector M=%s: E=%.12f", M, gs.energy)
    out = []
    scale = max(abs(lattice.coupling), 1.0)
    for B in fields:
        if B < 0:
            raise ValueError("fields must be non-negative")
        tot = {M: E - B * float(M) for M, E in energies.items()}
        best = min(tot.values())
        ties = sorted(M for M, e in tot.items() if e - best <= tie_tol * scale)
        # ties stay visible in ScanPoint.ties; best_M is the most field-aligned member
        out.append(ScanPoint(float(B), ties[-1], best, ties))
    return out


# ---------------------------------------------------------------- amplitudes

def amplitude(state: GroundStateVector, config: SpinConfiguration) -> float:
    i = state.basis.index_of(config)
    if i < 0:
        warnings.warn(f"{config} is not in the M={state.basis.total_sz} sector",
                      OutsideSectorWarning, stacklevel=2)
        return 0.0
    return float(state.amps[i])


def relative_amplitude(state: GroundStateVector, config: SpinConfiguration) -> float:
    a0 = state.neel_amplitude
    if a0 == 0.0:
        raise ValueError("state has no Néel component")
    return amplitude(state, config) / a0


def symmetry_permutations(lattice: LatticeSpec) -> list[np.ndarray]:
    """Site permutations preserving the sublattices (and H).

    Rings: translations by whole unit cells and the reflection fixing site 0.
    Open chains: identity only, since their reflection swaps sublattices
    whenever N is even.
    """
    N = lattice.n_sites
    ident = np.arange(N)
    if lattice.boundary != "ring":
        return [ident]
    cell = 2 if lattice.is_alternating else 1
    perms = []
    for t in range(0, N, cell):
        shifted = (ident + t) % N
        perms.append(shifted)
        perms.append((-ident + t) % N)
    return perms


def orbit_ids(basis_levels: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    """Smallest packed code over each configuration's symmetry orbit."""
    best = None
    for p in symmetry_permutations(lattice):
        # image config has levels[p[k]] at site k
        codes = pack_levels(basis_levels[:, p], lattice)
        best = codes if best is None else np.minimum(best, codes)
    return best


@dataclass
class AmplitudeEntry:
    config: SpinConfiguration
    amplitude: float
    orbit_size: int = 1


def top_amplitudes(state, K: int, group_orbits: bool = False) -> list[AmplitudeEntry]:
    """The ``K`` largest |amplitude| entries (or orbits), descending.

    Ties in |amplitude| are broken by ascending packed code.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    lattice = state.lattice
    amps = np.asarray(state.amps)
    codes = pack_levels(state.levels, lattice)
    if not group_orbits:
        order = np.lexsort((codes, -np.abs(amps)))[:K]
        return [AmplitudeEntry(SpinConfiguration.from_packed(int(codes[i]), lattice), float(amps[i]))
                for i in order]
    ids = orbit_ids(np.asarray(state.levels), lattice)
    uniq, first, counts = np.unique(ids, return_index=True, return_counts=True)
    # representative: the orbit member with the smallest code, i.e. the id itself
    rep_idx = {int(c): i for i, c in enumerate(codes)}
    rep_amp = np.array([amps[rep_idx[int(u)]] if int(u) in rep_idx else amps[f]
                        for u, f in zip(uniq, first)])
    order = np.lexsort((uniq, -np.abs(rep_amp)))[:K]
    return [AmplitudeEntry(SpinConfiguration.from_packed(int(uniq[i]), lattice),
                           float(rep_amp[i]), int(counts[i])) for i in order]


# ---------------------------------------------------------------- persistence

def save_ground_state(state: GroundStateVector, path, *, extra: dict | None = None) -> None:
    """CSV with ``# key: value`` header lines and (packed_hex, amplitude) rows."""
    header = {
        "lattice": state.lattice.describe(),
        "M": format_rational(state.basis.total_sz),
        "energy": repr(float(state.energy)),
        "phase_convention": state.phase_convention,
        "tolerance": state.meta.get("tolerance"),
        "seed": state.meta.get("seed"),
    }
    if extra:
        header.update(extra)
    codes = state.basis.packed
    with open(path, "w") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
        fh.write("packed_hex,amplitude\n")
        for c, a in zip(codes, state.amps):
            fh.write(f"{int(c):#x},{float(a)!r}\n")


def load_ground_state(path) -> GroundStateVector:
    header, rows = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                header[key.strip()] = json.loads(val)
            elif line.startswith("packed_hex"):
                continue
            elif line.strip():
                c, a = line.split(",")
                rows.append((int(c, 16), float(a)))
    lat = header["lattice"]
    lattice = LatticeSpec(lat["n_sites"], tuple(Fraction(s) for s in lat["spins"]),
                          lat["boundary"], lat["coupling"], lat["field"])
    basis = enumerate_sector(lattice, Fraction(header["M"]))
    amps = np.zeros(len(basis))
    idx = basis.lookup(np.array([c for c, _ in rows], dtype=np.uint64))
    if (idx < 0).any() or len(rows) != len(basis):
        raise ValueError(f"{path}: amplitudes do not cover the sector basis")
    amps[idx] = [a for _, a in rows]
    meta = {k: header.get(k) for k in ("tolerance", "seed")}
    meta["M"] = header["M"]
    return GroundStateVector(basis, amps, float(header["energy"]),
                             header.get("phase_convention", "neel-positive"), meta)
