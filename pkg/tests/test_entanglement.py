import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ferrichain import (DensityMatrix, LatticeSpec, distortion_fidelity, fidelity, four_partite_negativity,
                        ground_state, log_negativity, negativity_report, negativity_scan, partial_transpose,
                        reduced_density_matrix, truncate_state, truncation_infidelity_scan)
from ferrichain.spinbasis import pack_levels

from conftest import solve


def bell():
    return DensityMatrix.pure(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))


def ghz4():
    psi = np.zeros(16)
    psi[0] = psi[15] = 1
    return DensityMatrix.pure(psi, (2, 2, 2, 2))


def rdm_oracle(state, sites):
    """Embed the sector vector in the full product space and trace by reshaping."""
    lat = state.lattice
    full = np.zeros(lat.dims)
    full[tuple(np.asarray(state.levels, dtype=np.int64).T)] = state.amps
    rest = [k for k in range(lat.n_sites) if k not in sites]
    t = full.transpose(list(sites) + rest).reshape(int(np.prod([lat.dims[k] for k in sites])), -1)
    t = t / np.linalg.norm(t)
    return t @ t.T


@pytest.fixture(scope="module")
def open8():
    return solve(8, boundary="open", field=0.3)


def test_bell_and_ghz():
    assert abs(log_negativity(bell(), [0]) - 1) < 1e-10
    assert abs(four_partite_negativity(ghz4()) - 1) < 1e-10
    rep = negativity_report(ghz4())
    assert set(rep.bipartitions) == {"a", "b", "c", "d", "ab", "ac", "ad"}


def test_product_and_mixed_states_have_no_negativity():
    plus = np.array([1, 1]) / np.sqrt(2)
    prod = DensityMatrix.pure(np.kron(plus, [1, 0]), (2, 2))
    assert log_negativity(prod, [0]) == 0.0
    mixed = DensityMatrix((2, 2), np.eye(4) / 4)
    assert log_negativity(mixed, [1]) == 0.0
    # Werner state: entangled iff p > 1/3
    for p, ent in ((0.3, False), (0.5, True)):
        w = DensityMatrix((2, 2), p * bell().entries + (1 - p) * np.eye(4) / 4)
        assert (log_negativity(w, [0]) > 0) == ent


def test_partial_transpose_spectrum_independent_of_side():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((12, 12))
    rho = DensityMatrix((3, 4), A @ A.T / np.trace(A @ A.T))
    e0 = np.linalg.eigvalsh(partial_transpose(rho, [0]))
    e1 = np.linalg.eigvalsh(partial_transpose(rho, [1]))
    assert np.allclose(e0, e1)
    assert np.allclose(partial_transpose(DensityMatrix((3, 4), partial_transpose(rho, [0])), [0]),
                       rho.entries)
    for bad in ([], [0, 1], [2]):
        with pytest.raises(ValueError):
            partial_transpose(rho, bad)


@pytest.mark.parametrize("sites", [[0], [3, 1], [0, 1, 2, 3], [6, 2, 5], [7, 0]])
def test_rdm_matches_full_space_oracle(open8, sites):
    rho = reduced_density_matrix(open8, sites)
    assert rho.dims == tuple(open8.lattice.dims[k] for k in sites)
    assert np.allclose(rho.entries, rdm_oracle(open8, sites), atol=1e-13)
    rho.check()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=4, unique=True))
def test_rdm_is_a_density_matrix(sites):
    gs = _ring8()
    rho = reduced_density_matrix(gs, sites)
    rho.check(atol=1e-10)
    assert np.allclose(rho.entries, rdm_oracle(gs, sites), atol=1e-12)


_memo = {}


def _ring8():
    if "g" not in _memo:
        _memo["g"] = solve(8)
    return _memo["g"]


def test_rdm_input_checks(open8):
    with pytest.raises(ValueError):
        reduced_density_matrix(open8, [0, 0])
    with pytest.raises(ValueError):
        reduced_density_matrix(open8, [8])
    with pytest.raises(ValueError):
        DensityMatrix((2, 2), np.eye(3))


def test_fidelity_oracles():
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((2, 6))
    ra, rb = DensityMatrix.pure(a, (2, 3)), DensityMatrix.pure(b, (2, 3))
    overlap2 = (a @ b) ** 2 / (a @ a) / (b @ b)
    assert fidelity(ra, rb) == pytest.approx(overlap2, abs=1e-10)
    p, q = np.array([0.5, 0.3, 0.2, 0.0]), np.array([0.25, 0.25, 0.25, 0.25])
    dp, dq = DensityMatrix((2, 2), np.diag(p)), DensityMatrix((2, 2), np.diag(q))
    assert fidelity(dp, dq) == pytest.approx(np.sum(np.sqrt(p * q)) ** 2, abs=1e-12)
    assert fidelity(dp, dq) == pytest.approx(fidelity(dq, dp), abs=1e-12)
    assert fidelity(dp, dp) == 1.0
    with pytest.raises(ValueError):
        fidelity(dp, DensityMatrix((4,), np.diag(q)))


def test_truncation_keeps_ties(ring8):
    assert np.allclose(truncate_state(ring8, 1.0).amps, ring8.amps)
    part = truncate_state(ring8, 0.05)
    idx = ring8.basis.lookup(pack_levels(part.levels, ring8.lattice))
    mag = np.abs(ring8.amps)
    assert len(idx) >= np.ceil(0.05 * len(mag))
    # symmetry-related amplitudes are equal, so whole orbits are kept or dropped
    assert np.delete(mag, idx).max() < mag[idx].min() * (1 - 1e-10)
    assert np.allclose(part.amps, ring8.amps[idx] / np.linalg.norm(ring8.amps[idx]))
    with pytest.raises(ValueError):
        truncate_state(ring8, 0.0)


def test_truncation_scan_endpoints(ring8):
    rows = truncation_infidelity_scan(ring8, [0, 1, 2, 3], [0.02, 0.5, 1.0])
    assert rows[-1] == (1.0, 0.0)
    assert rows[0][1] >= rows[1][1] >= 0


def test_distortion(ring8):
    zero = distortion_fidelity(ring8, [0, 1, 2, 3], 0.0, trials=5)
    assert zero.mean_fidelity == 1.0 and zero.stderr == 0.0
    a = distortion_fidelity(ring8, [0, 1, 2, 3], 0.5, trials=8, seed=11)
    b = distortion_fidelity(ring8, [0, 1, 2, 3], 0.5, trials=8, seed=11)
    assert a.fidelities.tobytes() == b.fidelities.tobytes()
    c = distortion_fidelity(ring8, [0, 1, 2, 3], 0.5, trials=8, seed=12)
    assert c.mean_fidelity != a.mean_fidelity
    assert 0 < a.mean_fidelity < 1
    with pytest.raises(ValueError):
        distortion_fidelity(ring8, [0, 1], -0.1)


def test_negativity_scan_wraps_on_rings(ring8):
    scan = dict(negativity_scan(ring8, [0, 2, 4]))
    # D=4 on 8 sites: pairs (0,1) and (6,7) are adjacent across the closing bond, like D=0
    assert scan[4] == pytest.approx(scan[0], abs=1e-10)
    assert scan[0] > scan[2]


def test_singlet_pair_negativity():
    lat = LatticeSpec.alternating(2, "1/2", "1/2", boundary="open")
    gs, _ = ground_state(lat, 0)
    assert log_negativity(reduced_density_matrix(gs, [0, 1]), [0]) == pytest.approx(1.0, abs=1e-12)
