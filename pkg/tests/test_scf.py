import numpy as np
import pytest

from orfh.exact import exact_ground_state
from orfh.models import HubbardParams, build_hubbard, orfh_tensors
from orfh.operators import CoefficientTensors, jordan_wigner
from orfh.scf import (GeneralizedHartreeFock, correlation_energy, correlation_ratio,
                      hf_energy, run_ghf, _normal_ordered_parts)

from fock import tensors_matrix


def test_golden_two_site_energy():
    res = run_ghf(build_hubbard(HubbardParams(2)), 2)
    assert res.converged
    assert res.hf_energy == pytest.approx(-4.499999999999999, abs=1e-9)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_free_fermions_are_exact(n):
    t = build_hubbard(HubbardParams(n, u=0.0, mu=0.0))
    res = run_ghf(t, n, attempts=2)
    e = exact_ground_state(jordan_wigner(t), n_particles=n, dense=False)[0].energy
    assert res.hf_energy == pytest.approx(e, abs=1e-9)


def test_hf_energy_equals_determinant_expectation():
    t, _ = orfh_tensors(HubbardParams(3), 2)
    res = run_ghf(t, 3, attempts=2)
    occ = res.orbital_coefficients[:, :3]
    # build the Slater determinant in Fock space from occupied orbitals
    from fock import annihilators
    cd = [m.T.toarray() for m in annihilators(6)]
    vac = np.zeros(64, dtype=complex)
    vac[0] = 1
    state = vac
    for k in range(3):
        state = sum(occ[p, k] * cd[p] for p in range(6)) @ state
    state /= np.linalg.norm(state)
    e = (state.conj() @ tensors_matrix(t) @ state).real
    assert res.hf_energy == pytest.approx(e, abs=1e-9)


def test_hf_is_variational_upper_bound():
    for seed in range(3):
        t, _ = orfh_tensors(HubbardParams(4), seed)
        res = run_ghf(t, 4)
        e = exact_ground_state(jordan_wigner(t), n_particles=4, dense=False)[0].energy
        assert res.hf_energy >= e - 1e-9


def test_best_of_attempts_is_no_worse():
    t, _ = orfh_tensors(HubbardParams(3), 1)
    one = run_ghf(t, 3, attempts=1)
    many = run_ghf(t, 3, attempts=6)
    assert many.hf_energy <= one.hf_energy + 1e-12


def test_density_is_idempotent_projector():
    t, _ = orfh_tensors(HubbardParams(3), 0)
    d = run_ghf(t, 3).density
    assert np.allclose(d @ d, d, atol=1e-8)
    assert np.trace(d).real == pytest.approx(3)


def test_hf_energy_function_on_empty_density():
    t = build_hubbard(HubbardParams(2))
    one, two, c = _normal_ordered_parts(t)
    assert hf_energy(one, two, c, np.zeros((4, 4))) == pytest.approx(0.0)


def test_correlation_helpers():
    assert correlation_energy(-5.0, -4.5) == pytest.approx(-0.5)
    assert correlation_ratio(-5.0, -4.5) == pytest.approx(0.1)


def test_electron_count_validation():
    with pytest.raises(ValueError):
        run_ghf(build_hubbard(HubbardParams(2)), 0)


def test_estimator_defaults_to_half_filling():
    est = GeneralizedHartreeFock(attempts=1).fit(build_hubbard(HubbardParams(2)))
    assert est.result_.n_electrons == 2 and est.converged_
    assert est.get_params()["mixing"] == 0.5


def test_accepts_constant_only_tensors():
    t = CoefficientTensors.from_dict(2, {(0, 0): 1.0}, constant=2.0)
    assert run_ghf(t, 1, attempts=1).hf_energy == pytest.approx(2.0)
