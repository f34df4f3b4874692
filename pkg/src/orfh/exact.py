"""Exact diagonalization of Pauli-sum Hamiltonians.

Small problems are diagonalized densely; larger ones with a restarted Lanczos
iteration with full reorthogonalization on a sparse matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .operators import PauliSum, CapabilityError, _popcount
from ._validation import check_pauli_sum

DENSE_SOLVE_WIDTH = 10
DENSE_GUARD = 14
SPARSE_GUARD = 20
RESIDUAL_TOL = 1e-9
MAX_ITERATIONS = 2000


class ConvergenceError(RuntimeError):
    pass


@dataclass
class GroundStateResult:
    energy: float
    statevector: np.ndarray | None
    degenerate: bool = False
    residual: float = 0.0


@dataclass
class LanczosResult:
    values: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray
    iterations: int


def lanczos(matvec: Callable[[np.ndarray], np.ndarray], dim: int, k: int = 1,
            v0: np.ndarray | None = None, tol: float = RESIDUAL_TOL,
            max_iter: int = MAX_ITERATIONS, krylov_dim: int = 100,
            rng: np.random.Generator | None = None, raise_on_failure: bool = True
            ) -> LanczosResult:
    """Lowest ``k`` eigenpairs of a hermitian operator given by ``matvec``.

    Eigenpairs are found one at a time; converged vectors are locked and every
    new Krylov vector is orthogonalized against them and against the whole
    current basis. Cycles are thick-restarted from the lowest few Ritz vectors,
    which keeps convergence fast when the next eigenvalue is close. ``tol``
    bounds the true residual ``|H v - E v|``; ``max_iter`` counts products.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    krylov_dim = max(2, min(krylov_dim, dim))
    locked_vals, locked_vecs, residuals = [], [], []
    total = 0
    start = v0
    while len(locked_vals) < min(k, dim):
        if start is None:
            start = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        locked = np.array(locked_vecs).T if locked_vecs else np.zeros((dim, 0), complex)
        block = np.asarray(start, dtype=complex).reshape(dim, -1)
        keep = max(1, min(krylov_dim // 3, k - len(locked_vals) + 4))
        while True:
            vals, vecs, used = _rayleigh_ritz_cycle(matvec, block, locked, krylov_dim)
            w = matvec(vecs[:, 0])
            res = float(np.linalg.norm(w - vals[0] * vecs[:, 0]))
            total += used + 1
            if res < tol or total >= max_iter or vecs.shape[1] < 2 and used < 2:
                break
            block = vecs[:, :keep]
        if res >= tol and raise_on_failure:
            raise ConvergenceError(
                f"Lanczos did not converge: residual {res:.3e} after {total} iterations")
        locked_vals.append(float(vals[0]))
        locked_vecs.append(vecs[:, 0])
        residuals.append(res)
        start = vecs[:, 1] if vecs.shape[1] > 1 else None
    order = np.argsort(locked_vals, kind="stable")
    return LanczosResult(np.array(locked_vals)[order], np.array(locked_vecs).T[:, order],
                         np.array(residuals)[order], total)


def _project_out(v, basis):
    if basis.shape[1]:
        v = v - basis @ (basis.conj().T @ v)
        v = v - basis @ (basis.conj().T @ v)
    return v


def _orthogonalize(v, V, locked):
    v = _project_out(v, locked)
    for _ in range(2):
        v = v - V @ (V.conj().T @ v)
    return v


def _rayleigh_ritz_cycle(matvec, block, locked, m):
    """Ritz pairs of the block-Krylov space grown from the columns of ``block``.

    Each processed basis vector contributes its image, orthogonalized, as the
    next basis vector until ``m`` vectors are reached. Only the upper triangle
    of the projected matrix is accumulated; it is completed by hermiticity.
    """
    dim = block.shape[0]
    m = max(1, min(m, dim - locked.shape[1]))
    V = np.zeros((dim, m), dtype=complex)
    size = 0
    for col in block.T:
        v = _orthogonalize(col, V[:, :size], locked)
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            V[:, size] = v / norm
            size += 1
            if size == m:
                break
    proj = np.zeros((m, m), dtype=complex)
    j = 0
    while j < size:
        w = matvec(V[:, j])
        proj[:size, j] = V[:, :size].conj().T @ w
        if size < m:
            r = _orthogonalize(w, V[:, :size], locked)
            norm = np.linalg.norm(r)
            if norm > 1e-12 * max(1.0, float(np.linalg.norm(w))):
                V[:, size] = r / norm
                proj[size, j] = np.vdot(V[:, size], w)
                size += 1
        j += 1
    upper = np.triu(proj[:size, :size])
    h = upper + np.triu(upper, 1).conj().T
    h[np.diag_indices(size)] = h.diagonal().real
    evals, evecs = np.linalg.eigh(h)
    vecs = V[:, :size] @ evecs
    return evals, vecs, size


def _number_sector(width: int, n_particles: int) -> np.ndarray:
    states = [sum(1 << q for q in occ) for occ in combinations(range(width), n_particles)]
    return np.array(sorted(states), dtype=np.int64)


def sector_matrix(psum: PauliSum, n_particles: int) -> tuple[sp.csr_matrix, np.ndarray]:
    """Hamiltonian restricted to basis states with ``n_particles`` set bits.

    Only valid when the operator conserves the number of set bits. Returns
    the sparse block and the basis indices it acts on.
    """
    basis = _number_sector(psum.width, n_particles)
    lookup = {int(b): i for i, b in enumerate(basis)}
    pos = np.full(1 << psum.width, -1, dtype=np.int64) if psum.width <= 24 else None
    if pos is not None:
        pos[basis] = np.arange(len(basis))
    phased = psum._phased()
    rows, cols, data = [np.arange(len(basis))], [np.arange(len(basis))], \
        [np.full(len(basis), psum.identity_offset)]
    for xmask, members in psum._x_groups():
        target = basis ^ xmask
        idx = pos[target] if pos is not None else np.array([lookup.get(int(t), -1) for t in target])
        ok = idx >= 0
        if not ok.any():
            continue
        src = basis[ok]
        d = np.zeros(ok.sum(), dtype=complex)
        for i in members:
            d += phased[i] * (1 - 2 * (_popcount(src & psum.z[i]) & 1))
        rows.append(idx[ok])
        cols.append(np.flatnonzero(ok))
        data.append(d)
    dim = len(basis)
    mat = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim, dim))
    mat.sum_duplicates()
    return mat, basis


def exact_ground_state(psum: PauliSum, k: int = 1, dense: bool | None = None,
                       n_particles: int | None = None, with_states: bool = True,
                       seed: int = 0) -> list[GroundStateResult]:
    """The ``k`` lowest eigenpairs, ascending.

    Parameters
    ----------
    dense : bool, optional
        Force dense (``eigh``) or iterative solution. Dense is allowed up to 14
        qubits and iterative up to 20; by default dense is used up to 10.
    n_particles : int, optional
        Restrict to a particle-number sector. Returned state vectors are still
        embedded in the full ``2**width`` space.
    """
    psum = check_pauli_sum(psum)
    width = psum.width
    if dense and width > DENSE_GUARD:
        raise CapabilityError(f"dense diagonalization limited to {DENSE_GUARD} qubits, "
                              f"requested {width}")
    if width > SPARSE_GUARD:
        raise CapabilityError(f"exact diagonalization limited to {SPARSE_GUARD} qubits, "
                              f"requested {width}")
    if n_particles is None:
        mat, basis = psum.to_sparse(), None
    else:
        mat, basis = sector_matrix(psum, n_particles)
    dim = mat.shape[0]
    want = min(k + 1, dim)
    if dense is None:
        dense = dim <= (1 << DENSE_SOLVE_WIDTH)
    if dense:
        vals, vecs = np.linalg.eigh(mat.toarray())
        vals, vecs = vals[:want], vecs[:, :want]
    else:
        res = lanczos(mat.dot, dim, k=want, rng=np.random.default_rng(seed))
        vals, vecs = res.values, res.vectors
    out = []
    for i in range(min(k, dim)):
        v = vecs[:, i]
        r = float(np.linalg.norm(mat @ v - vals[i] * v))
        if basis is not None and with_states:
            full = np.zeros(1 << width, dtype=complex)
            full[basis] = v
            v = full
        degenerate = any(abs(vals[j] - vals[i]) < 1e-8 for j in range(len(vals)) if j != i)
        out.append(GroundStateResult(float(vals[i]), v if with_states else None,
                                     degenerate, r))
    return out


class ExactDiagonalizer(BaseEstimator):
    """Estimator wrapper around :func:`exact_ground_state`.

    Attributes
    ----------
    energies_ : ndarray
    states_ : ndarray of shape (2**width, n_states)
    energy_ : float
        Lowest eigenvalue.
    """

    def __init__(self, n_states=1, dense=None, n_particles=None, seed=0):
        self.n_states = n_states
        self.dense = dense
        self.n_particles = n_particles
        self.seed = seed

    def fit(self, X, y=None):
        X = check_pauli_sum(X, max_width=SPARSE_GUARD)
        results = exact_ground_state(X, self.n_states, self.dense, self.n_particles,
                                     seed=self.seed)
        self.results_ = results
        self.energies_ = np.array([r.energy for r in results])
        self.states_ = np.array([r.statevector for r in results]).T
        self.energy_ = float(self.energies_[0])
        return self
