"""Measurement grouping of Pauli terms and shot-count estimates.

Three groupings are provided: qubitwise commuting (QWC), general commuting
(GC) and basis rotation. The first two partition the terms of a
:class:`PauliSum` by greedy coloring. The basis-rotation grouping works on
the fermionic tensors instead: the two-body part is written as a sum of
squared one-body operators, ``1/2 sum g_pqrs E_pq E_rs = sum_l lam_l O_l**2``,
and each group becomes measurable after a single-particle basis change.

The shot estimate for optimally allocated shots is
``M = K / eps**2`` with ``K = (sum_G sqrt(Var H_G))**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .operators import (CoefficientTensors, PauliSum, CapabilityError, _popcount,
                        jordan_wigner, pauli_matrix, to_eq5)
from ._validation import check_pauli_sum, check_statevector, check_tensors

QWC, GC, BASIS_ROTATION = "QWC", "GC", "BASIS_ROTATION"
METHODS = (QWC, GC, BASIS_ROTATION)
FACTOR_CUTOFF = 1e-10
SHOT_WIDTH_LIMIT = 14
VARIANCE_GUARD = -1e-10


@dataclass
class MeasurementGroup:
    """One simultaneously measurable group.

    ``indices`` point into the grouped PauliSum (empty for basis-rotation
    groups, which are not subsets of the Pauli terms). ``observable`` is the
    group operator whose variance enters the shot estimate.
    """

    indices: np.ndarray
    observable: PauliSum
    prescription: dict = field(default_factory=dict)


@dataclass
class Grouping:
    method: str
    groups: list
    n_terms: int
    n_factors: int | None = None

    def __len__(self):
        return len(self.groups)

    def to_dict(self, estimate: "ShotEstimate | None" = None) -> dict:
        out = {"method": self.method, "n_groups": len(self.groups),
               "groups": [g.indices.tolist() for g in self.groups]}
        if self.n_factors is not None:
            out["n_factors"] = self.n_factors
        if estimate is not None:
            out["group_std"] = estimate.group_std.tolist()
            out["k_factor"] = estimate.k_factor
        return out


@dataclass
class ShotEstimate:
    k_factor: float
    epsilon: float
    shots: float
    group_std: np.ndarray
    clamped: bool = False


# ---------------------------------------------------------------------------
# greedy coloring
# ---------------------------------------------------------------------------


def _visit_order(psum: PauliSum) -> list[int]:
    # magnitudes rounded so float noise cannot reorder equal coefficients
    mag = np.round(np.abs(psum.coeffs), 12)
    labels = psum.canonical_labels()
    return sorted(range(len(psum)), key=lambda i: (-mag[i], labels[i]))


def _gc_conflict(x, z, ax, az):
    return ((_popcount(x & az) + _popcount(z & ax)) & 1).astype(bool)


def _qwc_conflict(x, z, ax, az):
    shared = (x | z) & (ax | az)
    return (((x ^ ax) | (z ^ az)) & shared) != 0


def _greedy_groups(psum: PauliSum, conflict) -> list[np.ndarray]:
    n = len(psum)
    order = _visit_order(psum)
    ax = np.empty(n, dtype=np.int64)
    az = np.empty(n, dtype=np.int64)
    ag = np.empty(n, dtype=np.int64)
    members: list[list[int]] = []
    for k, i in enumerate(order):
        x, z = int(psum.x[i]), int(psum.z[i])
        hit = conflict(x, z, ax[:k], az[:k])
        bad = np.bincount(ag[:k][hit], minlength=len(members))
        free = np.flatnonzero(bad == 0)
        g = int(free[0]) if free.size else len(members)
        if g == len(members):
            members.append([])
        members[g].append(i)
        ax[k], az[k], ag[k] = x, z, g
    return [np.array(sorted(m), dtype=np.int64) for m in members]


def _qwc_bases(psum: PauliSum, idx) -> dict:
    bases = {}
    for i in idx:
        bases.update(psum.string(int(i)).factors)
    return dict(sorted(bases.items()))


def group_qubitwise(psum: PauliSum) -> Grouping:
    """Greedy coloring of the qubitwise non-commutation graph.

    Terms are visited in descending ``|coefficient|`` (ties by dense label)
    and placed in the first group they are qubitwise compatible with. The
    prescription of a group is the single-qubit basis on each measured qubit.
    """
    psum = check_pauli_sum(psum)
    groups = [MeasurementGroup(idx, psum.subset(idx), {"bases": _qwc_bases(psum, idx)})
              for idx in _greedy_groups(psum, _qwc_conflict)]
    return Grouping(QWC, groups, len(psum))


def group_general_commuting(psum: PauliSum) -> Grouping:
    """Greedy coloring of the anticommutation graph, same visit order as QWC.

    The prescription of a group is its joint eigenbasis, available through
    :func:`joint_eigenbasis` for up to 14 qubits.
    """
    psum = check_pauli_sum(psum)
    groups = [MeasurementGroup(idx, psum.subset(idx), {"basis": "joint eigenbasis"})
              for idx in _greedy_groups(psum, _gc_conflict)]
    return Grouping(GC, groups, len(psum))


def singleton_grouping(psum: PauliSum) -> Grouping:
    """Every term measured on its own; the reference point for grouping gains."""
    psum = check_pauli_sum(psum)
    groups = [MeasurementGroup(np.array([i]), psum.subset([i]), {})
              for i in range(len(psum))]
    return Grouping("SINGLE", groups, len(psum))


def joint_eigenbasis(observable: PauliSum, seed: int = 0) -> np.ndarray:
    """Unitary whose columns diagonalize every term of a commuting group.

    A random real combination of the terms is diagonalized; with probability
    one its eigenspaces resolve all of them.
    """
    if observable.width > SHOT_WIDTH_LIMIT:
        raise CapabilityError(f"joint eigenbasis limited to {SHOT_WIDTH_LIMIT} qubits")
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal(len(observable))
    combo = PauliSum(observable.width, observable.x, observable.z, weights)
    _, vecs = np.linalg.eigh(pauli_matrix(combo))
    return vecs


# ---------------------------------------------------------------------------
# basis rotation
# ---------------------------------------------------------------------------


def _eq5_parts(tensors: CoefficientTensors):
    tensors = to_eq5(tensors)
    return np.array(tensors.one_body), tensors.two_body_dense()


def symmetrize_two_body(one, two):
    """Rewrite ``1/2 sum h_pqrs E_pq E_rs`` with ``g_pqrs = g_rspq``.

    Swapping the two ``E`` factors costs a commutator, which is returned as a
    one-body correction: the result is ``(one + correction, g)``.
    """
    g = 0.5 * (two + two.transpose(2, 3, 0, 1))
    corr = 0.25 * (np.einsum("appb->ab", two) - np.einsum("qbaq->ab", two))
    return one + corr, g


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis (trace inner product) of ``n x n`` hermitian matrices."""
    basis = []
    for p in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[p, p] = 1
        basis.append(m)
    s = 1 / np.sqrt(2)
    for p in range(n):
        for q in range(p + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[p, q] = m[q, p] = s
            basis.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[p, q], m[q, p] = -1j * s, 1j * s
            basis.append(m)
    return np.array(basis)


def double_factorize(g: np.ndarray, cutoff: float = FACTOR_CUTOFF):
    """Factors with ``1/2 sum g_pqrs E_pq E_rs = sum_l lam_l O(X_l)**2``.

    ``O(X) = sum_pq X_pq c+_p c_q`` and each ``X_l`` is hermitian with unit
    Frobenius norm. Factors with ``|lam_l| <= cutoff`` are dropped. Returned
    in descending ``|lam|``.
    """
    n = g.shape[0]
    basis = hermitian_basis(n)
    flat = basis.transpose(0, 2, 1).reshape(len(basis), -1)  # (B_a)_qp
    gamma = 0.5 * flat @ g.reshape(n * n, n * n) @ flat.T
    if np.max(np.abs(gamma.imag), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(gamma))):
        raise ValueError("two-body tensor is not hermitian")
    gamma = 0.5 * (gamma.real + gamma.real.T)
    lam, w = np.linalg.eigh(gamma)
    keep = np.abs(lam) > cutoff
    lam, w = lam[keep], w[:, keep]
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, w = lam[order], w[:, order]
    mats = np.einsum("al,apq->lpq", w, basis)
    return lam, mats


def _commuting_blocks(mats, tol=1e-8) -> list[list[int]]:
    blocks: list[list[int]] = []
    for l, x in enumerate(mats):
        for block in blocks:
            if all(np.linalg.norm(x @ mats[m] - mats[m] @ x) < tol for m in block):
                block.append(l)
                break
        else:
            blocks.append([l])
    return blocks


def _joint_rotation(mats, seed=0):
    rng = np.random.default_rng(seed)
    combo = np.einsum("l,lpq->pq", rng.standard_normal(len(mats)), mats)
    _, w = np.linalg.eigh(combo)
    diag = np.einsum("pk,lpq,qk->lk", w.conj(), mats, w).real
    return w, diag


def group_basis_rotation(tensors: CoefficientTensors, cutoff: float = FACTOR_CUTOFF
                         ) -> Grouping:
    """Double-factorized grouping.

    One group holds the one-body part (measured in its eigenbasis). The
    two-body factors ``X_l`` are merged greedily into blocks of mutually
    commuting matrices; every block is diagonal in one rotated orbital basis
    where it reads ``sum_kk' Q_kk' n_k n_k'``. The constant is not assigned to
    any group.
    """
    tensors = check_tensors(tensors)
    if tensors.hermiticity_error() > 1e-9:
        raise ValueError("basis-rotation grouping requires hermitian tensors")
    n = tensors.n_spin_orbitals
    one, two = _eq5_parts(tensors)
    one, g = symmetrize_two_body(one, two)
    one = 0.5 * (one + one.conj().T)
    groups = []
    if np.max(np.abs(one)) > 0:
        eps, w = np.linalg.eigh(one)
        obs = jordan_wigner(CoefficientTensors.from_dense(one))
        obs = PauliSum(obs.width, obs.x, obs.z, obs.coeffs)
        groups.append(MeasurementGroup(np.zeros(0, dtype=np.int64), obs,
                                       {"kind": "one-body", "rotation": w, "weights": eps}))
    lam, mats = double_factorize(g, cutoff) if np.any(g) else (np.zeros(0), np.zeros((0, n, n)))
    for block in _commuting_blocks(mats):
        bl, bx = lam[block], mats[block]
        w, diag = _joint_rotation(bx)
        quad = np.einsum("l,lk,lm->km", bl, diag, diag)
        two_block = 2 * np.einsum("l,lpq,lrs->pqrs", bl, bx, bx)
        obs = jordan_wigner(CoefficientTensors.from_dense(np.zeros((n, n)), two_block,
                                                          cutoff=1e-14))
        obs = PauliSum(obs.width, obs.x, obs.z, obs.coeffs)
        groups.append(MeasurementGroup(np.zeros(0, dtype=np.int64), obs,
                                       {"kind": "two-body", "rotation": w,
                                        "quadratic_form": quad, "factors": list(block)}))
    if not groups:
        groups.append(MeasurementGroup(np.zeros(0, dtype=np.int64),
                                       PauliSum(n, [], [], []), {"kind": "one-body"}))
    return Grouping(BASIS_ROTATION, groups, 0, n_factors=len(lam))


def group(X, method: str) -> Grouping:
    """Dispatch on ``method``; basis rotation needs tensors, the others a PauliSum
    (tensors are mapped with JW)."""
    method = method.upper()
    if method in ("BR", "BASIS_ROTATION", "BASIS-ROTATION"):
        return group_basis_rotation(X)
    if method == QWC:
        return group_qubitwise(X)
    if method == GC:
        return group_general_commuting(X)
    raise ValueError(f"unknown grouping method {method!r}; expected one of {METHODS}")


# ---------------------------------------------------------------------------
# shots
# ---------------------------------------------------------------------------


def group_variance(observable: PauliSum, state: np.ndarray) -> float:
    """``<H_G**2> - <H_G>**2`` from one application of ``H_G``."""
    hs = observable.apply(state)
    mean = np.vdot(state, hs).real
    return float(np.vdot(hs, hs).real - mean * mean)


def pauli_covariance(observable: PauliSum, state: np.ndarray) -> np.ndarray:
    """``Re<P_a P_b> - <P_a><P_b>`` for the strings of ``observable``."""
    single = [PauliSum(observable.width, [x], [z], [1.0])
              for x, z in zip(observable.x, observable.z)]
    applied = np.array([p.apply(state) for p in single])
    means = (applied @ state.conj()).real
    second = (applied.conj() @ applied.T).real
    return second - np.outer(means, means)


def estimate_shots(grouping: Grouping, psum: PauliSum | None, state, epsilon: float,
                   pairwise: bool = False) -> ShotEstimate:
    """Shots ``M = K / eps**2`` for the grouping evaluated on ``state``.

    With ``pairwise`` the group variances are assembled from the explicit
    Pauli covariance matrix instead of ``|H_G psi|**2 - <H_G>**2``. Negative
    variances are clamped to zero; ``clamped`` is set when one fell below
    ``-1e-10``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    width = grouping.groups[0].observable.width if grouping.groups else 0
    if psum is not None:
        psum = check_pauli_sum(psum)
        width = psum.width
    if width > SHOT_WIDTH_LIMIT:
        raise CapabilityError(f"shot estimates limited to {SHOT_WIDTH_LIMIT} qubits, "
                              f"got {width}")
    state = check_statevector(state, width)
    var = np.zeros(len(grouping.groups))
    for i, grp in enumerate(grouping.groups):
        obs = grp.observable
        if not len(obs):
            continue
        if pairwise:
            c = obs.coeffs.real
            var[i] = float(c @ pauli_covariance(obs, state) @ c)
        else:
            var[i] = group_variance(obs, state)
    clamped = bool(np.any(var < VARIANCE_GUARD))
    std = np.sqrt(np.clip(var, 0, None))
    k = float(np.sum(std) ** 2)
    return ShotEstimate(k, float(epsilon), k / epsilon**2, std, clamped)


class PauliGrouper(BaseEstimator):
    """Estimator form of the grouping methods.

    Parameters
    ----------
    method : {"QWC", "GC", "BASIS_ROTATION"}

    Attributes
    ----------
    grouping_ : Grouping
    n_groups_ : int
    """

    def __init__(self, method="GC"):
        self.method = method

    def fit(self, X, y=None):
        self.grouping_ = group(X, self.method)
        self.n_groups_ = len(self.grouping_)
        return self

    def score(self, state, epsilon=1e-3):
        """Required shots ``M`` on ``state``."""
        return estimate_shots(self.grouping_, None, state, epsilon).shots
