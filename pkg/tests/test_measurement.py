import numpy as np
import pytest

from orfh.exact import exact_ground_state
from orfh.measurement import (BASIS_ROTATION, GC, QWC, PauliGrouper, double_factorize,
                              estimate_shots, group, group_basis_rotation,
                              group_general_commuting, group_qubitwise, group_variance,
                              hermitian_basis, joint_eigenbasis, pauli_covariance,
                              singleton_grouping, symmetrize_two_body)
from orfh.models import HubbardParams, build_hubbard, orfh_tensors
from orfh.operators import (CapabilityError, CoefficientTensors, PauliString, PauliSum,
                            jordan_wigner, pauli_matrix)

from fock import annihilators, fock_matrix


def orfh(n, seed=0):
    t, _ = orfh_tensors(HubbardParams(n), seed)
    ps = jordan_wigner(t)
    return t, ps, exact_ground_state(ps)[0].statevector


def labels(psum, grouping):
    return [sorted(str(psum.string(i)) for i in g.indices) for g in grouping.groups]


def test_greedy_order_small_example():
    ps = PauliSum.from_terms([(1.0, "Z0"), (0.9, "X0"), (0.8, "Z0 Z1"), (0.7, "X0 X1"),
                              (0.6, "Y0 Y1")], 2)
    assert labels(ps, group_qubitwise(ps)) == [["Z0", "Z0 Z1"], ["X0", "X0 X1"], ["Y0 Y1"]]
    assert labels(ps, group_general_commuting(ps)) == [["Z0", "Z0 Z1"],
                                                        ["X0", "X0 X1"], ["Y0 Y1"]]
    ps2 = PauliSum.from_terms([(1.0, "X0 X1"), (0.5, "Y0 Y1"), (0.4, "Z0 Z1")], 2)
    assert len(group_general_commuting(ps2)) == 1
    assert len(group_qubitwise(ps2)) == 3


@pytest.mark.parametrize("method,check", [
    (QWC, PauliString.qubitwise_commutes), (GC, PauliString.commutes)])
def test_groups_partition_and_commute(method, check):
    _, ps, _ = orfh(3, 1)
    g = group(ps, method)
    seen = np.concatenate([grp.indices for grp in g.groups])
    assert sorted(seen.tolist()) == list(range(len(ps)))
    for grp in g.groups:
        strings = [ps.string(i) for i in grp.indices]
        assert all(check(a, b) for a in strings for b in strings)


def test_group_counts_are_deterministic():
    _, ps, _ = orfh(2)
    assert (len(group(ps, QWC)), len(group(ps, GC))) == (45, 12)
    assert [g.indices.tolist() for g in group(ps, GC).groups] == \
        [g.indices.tolist() for g in group(ps, GC).groups]


def test_qwc_measurement_bases():
    ps = PauliSum.from_terms([(1.0, "Z0 X1"), (0.5, "X1")], 2)
    g = group_qubitwise(ps)
    assert len(g) == 1
    assert g.groups[0].prescription == {"bases": {0: "Z", 1: "X"}}


def test_single_pauli_variances():
    # |0>: Z0 sharp, X0 maximally uncertain
    ps = PauliSum.from_terms([(2.0, "Z0"), (3.0, "X0")], 1)
    state = np.array([1, 0], dtype=complex)
    est = estimate_shots(singleton_grouping(ps), ps, state, 0.1)
    assert est.group_std.tolist() == pytest.approx([0.0, 3.0])
    assert est.k_factor == pytest.approx(9.0)
    assert est.shots == pytest.approx(900.0)


def test_pairwise_matches_direct():
    _, ps, state = orfh(2, 3)
    for method in (QWC, GC):
        g = group(ps, method)
        a = estimate_shots(g, ps, state, 1e-3)
        b = estimate_shots(g, ps, state, 1e-3, pairwise=True)
        assert a.k_factor == pytest.approx(b.k_factor, rel=1e-9)


def test_covariance_diagonal():
    ps = PauliSum.from_terms([(1.0, "Z0"), (1.0, "X0")], 1)
    state = np.array([np.cos(0.3), np.sin(0.3)], dtype=complex)
    cov = pauli_covariance(ps, state)
    assert cov[0, 0] == pytest.approx(1 - np.cos(0.6) ** 2)
    assert cov[1, 1] == pytest.approx(1 - np.sin(0.6) ** 2)
    assert group_variance(ps, state) == pytest.approx(cov.sum())


def test_golden_k_factors():
    t, ps, state = orfh(2)
    assert estimate_shots(group(ps, QWC), ps, state, 1e-3).k_factor == pytest.approx(
        42.457073785642926, rel=1e-9)
    assert estimate_shots(group(ps, GC), ps, state, 1e-3).k_factor == pytest.approx(
        32.90535322215554, rel=1e-9)
    assert estimate_shots(group(t, BASIS_ROTATION), ps, state, 1e-3).k_factor == \
        pytest.approx(0.9846153846153821, rel=1e-7)


def test_ranking_on_rotated_model():
    t, ps, state = orfh(3, 2)
    m = {name: estimate_shots(group(t if name == BASIS_ROTATION else ps, name), ps,
                              state, 1e-3).shots for name in (QWC, GC, BASIS_ROTATION)}
    assert m[BASIS_ROTATION] < m[GC] < m[QWC]


def test_symmetrization_preserves_operator():
    t, _, _ = orfh(2, 4)
    one, two = np.array(t.one_body), t.two_body_dense()
    one2, g = symmetrize_two_body(one, two)
    assert np.allclose(g, g.transpose(2, 3, 0, 1))
    dense = lambda o, w: fock_matrix(o, {tuple(i): w[tuple(i)]
                                         for i in np.argwhere(np.abs(w) > 0)})
    assert np.abs(dense(one, two) - dense(one2, g)).max() < 1e-12


def test_hermitian_basis_is_orthonormal():
    b = hermitian_basis(3)
    assert b.shape == (9, 3, 3)
    gram = np.einsum("apq,bpq->ab", b.conj(), b)
    assert np.allclose(gram, np.eye(9))
    assert all(np.allclose(m, m.conj().T) for m in b)


def test_double_factorization_reconstructs():
    t, _, _ = orfh(2, 1)
    _, g = symmetrize_two_body(np.array(t.one_body), t.two_body_dense())
    lam, mats = double_factorize(g)
    rebuilt = 2 * np.einsum("l,lpq,lrs->pqrs", lam, mats, mats)
    assert np.abs(rebuilt - g).max() < 1e-10
    assert np.all(np.diff(np.abs(lam)) <= 1e-12)


def test_basis_rotation_groups_sum_to_hamiltonian():
    t, ps, _ = orfh(3, 0)
    g = group_basis_rotation(t)
    total = sum(pauli_matrix(grp.observable) for grp in g.groups)
    diff = total - pauli_matrix(ps)
    # groups drop identity parts, so the difference is a multiple of the identity
    assert np.abs(diff - diff[0, 0] * np.eye(len(diff))).max() < 1e-10


def test_basis_rotation_blocks_are_diagonal_in_rotated_modes():
    t, _, _ = orfh(2, 5)
    g = group_basis_rotation(t)
    c = annihilators(4)
    for grp in g.groups:
        if grp.prescription["kind"] != "two-body":
            continue
        w, q = grp.prescription["rotation"], grp.prescription["quadratic_form"]
        nk = [sum(w[p, k] * np.conj(w[r, k]) * (c[p].T @ c[r]) for p in range(4)
                  for r in range(4)).toarray() for k in range(4)]
        target = sum(q[k, m] * nk[k] @ nk[m] for k in range(4) for m in range(4))
        diff = pauli_matrix(grp.observable) - target
        assert np.abs(diff - diff[0, 0] * np.eye(16)).max() < 1e-10


def test_joint_eigenbasis_diagonalizes_terms():
    ps = PauliSum.from_terms([(1.0, "X0 X1"), (0.5, "Y0 Y1"), (0.4, "Z0 Z1")], 2)
    u = joint_eigenbasis(ps)
    for i in range(len(ps)):
        m = u.conj().T @ pauli_matrix(ps.subset([i])) @ u
        assert np.abs(m - np.diag(np.diag(m))).max() < 1e-10


def test_validation_and_guards():
    _, ps, state = orfh(2)
    with pytest.raises(ValueError):
        estimate_shots(group(ps, GC), ps, state, 0.0)
    with pytest.raises(ValueError):
        group(ps, "magic")
    wide = PauliSum.from_terms([(1.0, "Z14")], 15)
    with pytest.raises(CapabilityError):
        estimate_shots(singleton_grouping(wide), wide, np.zeros(2**15), 1e-3)


def test_basis_rotation_needs_tensors():
    _, ps, _ = orfh(2)
    with pytest.raises((TypeError, ValueError)):
        group(ps, BASIS_ROTATION)


def test_grouper_estimator():
    _, ps, state = orfh(2)
    est = PauliGrouper(method="QWC").fit(ps)
    assert est.n_groups_ == 45
    assert est.score(state, 1e-3) == pytest.approx(42.457073785642926e6, rel=1e-9)
    assert est.get_params() == {"method": "QWC"}


def test_one_body_only_hamiltonian():
    t = build_hubbard(HubbardParams(2, u=0.0, mu=0.0))
    g = group_basis_rotation(t)
    assert len(g) == 1 and g.n_factors == 0
    t = CoefficientTensors.from_dict(2)
    assert len(group_basis_rotation(t)) == 1
