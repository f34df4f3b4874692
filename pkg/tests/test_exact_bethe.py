import numpy as np
import pytest

from orfh.bethe import (bethe_bulk_energy_density, bethe_bulk_energy_density_quad,
                        bethe_half_filled_energy, ground_state_quantum_numbers)
from orfh.exact import ExactDiagonalizer, exact_ground_state, lanczos, sector_matrix
from orfh.models import HubbardParams, build_hubbard, orfh_tensors
from orfh.operators import CapabilityError, PauliSum, jordan_wigner

from fock import hubbard_matrix, number_operator

BULK_U1 = -1.0403686533946075


def hamiltonian(n, seed=None, u=1.0):
    params = HubbardParams(n, u=u, mu=u / 2)
    t = build_hubbard(params) if seed is None else orfh_tensors(params, seed)[0]
    return jordan_wigner(t)


def test_ground_energy_against_oracle():
    e_oracle = np.linalg.eigvalsh(hubbard_matrix(3))[0]
    res = exact_ground_state(hamiltonian(3, seed=2))[0]
    assert res.energy == pytest.approx(e_oracle, abs=1e-10)
    assert res.residual < 1e-9


def test_dense_and_iterative_agree():
    ps = hamiltonian(4, seed=1)
    a = exact_ground_state(ps, k=3, dense=True)
    b = exact_ground_state(ps, k=3, dense=False)
    for x, y in zip(a, b):
        assert x.energy == pytest.approx(y.energy, abs=1e-9)
        assert y.residual < 1e-9


def test_degenerate_pair_is_flagged():
    # odd-ring ground states sit in degenerate Kramers-like doublets at N=3 filling 3
    res = exact_ground_state(hamiltonian(3), k=2, n_particles=3)
    assert res[0].energy == pytest.approx(-3.8923443456296245, abs=1e-10)
    assert res[0].degenerate and res[1].degenerate


def test_sector_restriction_matches_oracle_block():
    ps = hamiltonian(3, seed=5)
    mat, basis = sector_matrix(ps, 2)
    assert mat.shape == (15, 15)
    assert all(bin(b).count("1") == 2 for b in basis)
    h = hubbard_matrix(3)
    idx = np.flatnonzero(np.diag(number_operator(6)) == 2)
    assert np.linalg.eigvalsh(mat.toarray()) == pytest.approx(
        np.linalg.eigvalsh(h[np.ix_(idx, idx)]), abs=1e-10)


def test_state_is_embedded_eigenvector():
    ps = hamiltonian(3, seed=4)
    res = exact_ground_state(ps, n_particles=3)[0]
    v = res.statevector
    assert v.shape == (64,)
    assert np.linalg.norm(ps.apply(v) - res.energy * v) < 1e-9


def test_capability_guards():
    wide = PauliSum.from_terms([(1.0, "Z20")], 21)
    with pytest.raises(CapabilityError):
        exact_ground_state(wide)
    with pytest.raises(CapabilityError):
        exact_ground_state(PauliSum.from_terms([(1.0, "Z14")], 15), dense=True)


def test_lanczos_diagonal_matrix():
    d = np.arange(200, dtype=float)
    res = lanczos(lambda v: d * v, 200, k=3, rng=np.random.default_rng(0))
    assert res.values == pytest.approx([0, 1, 2], abs=1e-9)
    assert np.all(res.residuals < 1e-9)


def test_estimator():
    est = ExactDiagonalizer(n_states=2).fit(hamiltonian(2))
    assert est.energy_ == pytest.approx(-4.531128874149276, abs=1e-12)
    assert est.states_.shape == (16, 2)
    assert est.get_params()["n_states"] == 2


def test_quantum_number_parities():
    for n in (2, 4, 6, 10):
        i_nums, j_nums = ground_state_quantum_numbers(n)
        m = n // 2
        assert len(i_nums) == n and len(j_nums) == m
        assert np.all(np.diff(i_nums) == 1) and np.all(np.diff(j_nums) == 1)
        assert float(i_nums[0]).is_integer() == (m % 2 == 0)
        assert float(j_nums[0]).is_integer() == ((n - m) % 2 == 1)
        assert abs(np.sum(j_nums)) < 1e-12


@pytest.mark.parametrize("n,u", [(2, 1.0), (4, 0.5), (4, 2.0), (6, 1.0)])
def test_bethe_matches_exact(n, u):
    sol = bethe_half_filled_energy(n, 1.0, u)
    assert sol.converged
    e_ed = exact_ground_state(hamiltonian(n, u=u), n_particles=n, dense=False)[0].energy
    assert sol.energy - u / 2 * n == pytest.approx(e_ed, abs=1e-8)


def test_bethe_rejects_odd_and_nonpositive():
    with pytest.raises(ValueError):
        bethe_half_filled_energy(5)
    with pytest.raises(ValueError):
        bethe_half_filled_energy(4, u=0.0)


def test_bulk_free_limit():
    assert bethe_bulk_energy_density(0.0) == pytest.approx(-4 / np.pi, abs=1e-10)


def test_bulk_golden_and_resolution():
    assert bethe_bulk_energy_density(1.0) == pytest.approx(BULK_U1, abs=1e-12)
    finer = bethe_bulk_energy_density(1.0, panels_per_unit=2, order=64)
    assert finer == pytest.approx(BULK_U1, abs=1e-12)


@pytest.mark.parametrize("u", [0.5, 2.0, 4.0])
def test_bulk_against_adaptive_quadrature(u):
    assert bethe_bulk_energy_density(u) == pytest.approx(
        bethe_bulk_energy_density_quad(u), abs=1e-9)


def test_bulk_strong_coupling_asymptote():
    # e -> -4 ln2 t^2 / U for U >> t
    u = 200.0
    assert bethe_bulk_energy_density(u) == pytest.approx(-4 * np.log(2) / u, rel=1e-3)
