"""Finite-system two-site DMRG on qubit Hamiltonians.

Site ``i`` of every chain is qubit ``i``; the physical index is the value of
bit ``i`` of the computational basis index. MPS tensors have shape
``(left, 2, right)``; MPO tensors have shape ``(left, right, out, in)``.
No quantum numbers are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .exact import lanczos
from .operators import PauliSum
from ._validation import check_pauli_sum

MPO_TOLERANCE = 1e-12
DISCARD_WEIGHT = 1e-12
WARMUP_SWEEPS = 2
WARMUP_BOND = 8
BATCH_SIZE = 64

_PAULI = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


# ---------------------------------------------------------------------------
# MPO
# ---------------------------------------------------------------------------


@dataclass
class MPO:
    tensors: list
    compression_residual: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        return [w.shape[1] for w in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dimensions, default=1)

    def matrix_element(self, row: int, col: int) -> complex:
        """``<row| W |col>`` for computational basis indices."""
        vec = np.ones(1, dtype=complex)
        for i, w in enumerate(self.tensors):
            vec = vec @ w[:, :, (row >> i) & 1, (col >> i) & 1]
        return complex(vec[0])

    def to_dense(self) -> np.ndarray:
        n = self.n_sites
        if n > 12:
            raise ValueError("dense MPO contraction limited to 12 sites")
        # acc[a, out, in] with site i occupying the i-th (least significant) bit
        acc = np.ones((1, 1, 1), dtype=complex)
        for i, w in enumerate(self.tensors):
            acc = np.einsum("kOI,kwoi->woOiI", acc, w)
            d = acc.shape[1] * acc.shape[2]
            acc = acc.reshape(w.shape[1], d, d)
        return acc[0]


def _string_mpo(width, x, z, coeff) -> list:
    tensors = []
    for i in range(width):
        op = _PAULI[((x >> i) & 1, (z >> i) & 1)]
        if i == 0:
            op = coeff * op
        tensors.append(op.reshape(1, 1, 2, 2))
    return tensors


def _direct_sum(a: list, b: list) -> list:
    n = len(a)
    out = []
    for i, (wa, wb) in enumerate(zip(a, b)):
        la, ra = wa.shape[:2]
        lb, rb = wb.shape[:2]
        if n == 1:
            out.append(wa + wb)
        elif i == 0:
            out.append(np.concatenate([wa, wb], axis=1))
        elif i == n - 1:
            out.append(np.concatenate([wa, wb], axis=0))
        else:
            w = np.zeros((la + lb, ra + rb, 2, 2), dtype=complex)
            w[:la, :ra] = wa
            w[la:, ra:] = wb
            out.append(w)
    return out


def _compress(tensors: list, tol: float) -> tuple[list, float]:
    """QR sweep to the right, then truncated SVD sweep back to the left.

    Singular values below ``tol`` times the norm of the operator are dropped.
    Returns the new tensors and the largest relative discarded weight.
    """
    n = len(tensors)
    ts = [t.transpose(0, 2, 3, 1) for t in tensors]  # (l, o, i, r)
    for i in range(n - 1):
        l, o, ii, r = ts[i].shape
        q, rr = np.linalg.qr(ts[i].reshape(l * o * ii, r))
        ts[i] = q.reshape(l, o, ii, -1)
        ts[i + 1] = np.tensordot(rr, ts[i + 1], axes=(1, 0))
    norm = np.linalg.norm(ts[-1])
    residual = 0.0
    for i in range(n - 1, 0, -1):
        l, o, ii, r = ts[i].shape
        u, s, vh = np.linalg.svd(ts[i].reshape(l, o * ii * r), full_matrices=False)
        keep = max(1, int(np.sum(s > tol * norm)))
        if norm > 0:
            residual = max(residual, float(np.sqrt(np.sum(s[keep:] ** 2)) / norm))
        ts[i] = vh[:keep].reshape(keep, o, ii, r)
        ts[i - 1] = np.tensordot(ts[i - 1], u[:, :keep] * s[:keep], axes=(3, 0))
    return [t.transpose(0, 3, 1, 2) for t in ts], residual


def compile_mpo(psum: PauliSum, tolerance: float = MPO_TOLERANCE,
                batch_size: int = BATCH_SIZE) -> MPO:
    """MPO of a Pauli sum by batched summation with SVD recompression.

    Terms are summed exactly in batches of ``batch_size``; each batch MPO is
    compressed and the batches are then added pairwise, recompressing after
    every addition. The identity offset becomes one more term.
    """
    psum = check_pauli_sum(psum)
    n = psum.width
    terms = [(int(x), int(z), complex(c)) for x, z, c in zip(psum.x, psum.z, psum.coeffs)]
    if psum.identity_offset != 0 or not terms:
        terms.append((0, 0, complex(psum.identity_offset)))
    level = []
    residual = 0.0
    for start in range(0, len(terms), batch_size):
        acc = None
        for x, z, c in terms[start:start + batch_size]:
            mpo = _string_mpo(n, x, z, c)
            acc = mpo if acc is None else _direct_sum(acc, mpo)
        acc, r = _compress(acc, tolerance)
        residual = max(residual, r)
        level.append(acc)
    while len(level) > 1:
        merged = []
        for i in range(0, len(level), 2):
            if i + 1 == len(level):
                merged.append(level[i])
                continue
            acc, r = _compress(_direct_sum(level[i], level[i + 1]), tolerance)
            residual = max(residual, r)
            merged.append(acc)
        level = merged
    return MPO(level[0], residual)


# ---------------------------------------------------------------------------
# MPS
# ---------------------------------------------------------------------------


@dataclass
class MPS:
    tensors: list
    center: int = 0

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        return [a.shape[2] for a in self.tensors[:-1]]

    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a.conj(), a)
        return float(np.sqrt(abs(env[0, 0])))

    def to_statevector(self) -> np.ndarray:
        psi = np.ones((1, 1), dtype=complex)  # (basis, bond)
        for i, a in enumerate(self.tensors):
            # site i is bit i, so it becomes the more significant index
            psi = np.einsum("ba,asc->sbc", psi, a).reshape(-1, a.shape[2])
        return psi[:, 0]

    def orthonormality_error(self) -> float:
        err = 0.0
        for i, a in enumerate(self.tensors):
            if i < self.center:
                m = a.reshape(-1, a.shape[2])
                err = max(err, float(np.abs(m.conj().T @ m - np.eye(m.shape[1])).max()))
            elif i > self.center:
                m = a.reshape(a.shape[0], -1)
                err = max(err, float(np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()))
        return err


def random_product_state(n_sites: int, seed: int) -> MPS:
    rng = np.random.default_rng(seed)
    tensors = []
    for _ in range(n_sites):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        tensors.append((v / np.linalg.norm(v)).reshape(1, 2, 1))
    return MPS(tensors, 0)


def expectation(mps: MPS, mpo: MPO) -> complex:
    env = np.ones((1, 1, 1), dtype=complex)
    for a, w in zip(mps.tensors, mpo.tensors):
        env = _extend_left(env, a, w)
    return complex(env[0, 0, 0])


def _extend_left(env, a, w):
    # env[a, w, x]: bra bond, MPO bond, ket bond
    t = np.tensordot(env, a, axes=(2, 0))  # a w s y
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))  # a y v o
    return np.tensordot(a.conj(), t, axes=([0, 1], [0, 3])).transpose(0, 2, 1)


def _extend_right(env, a, w):
    # env[b, u, y]: bra bond, MPO bond, ket bond to the right of site
    t = np.tensordot(a, env, axes=(2, 2))  # x s b u
    t = np.tensordot(t, w, axes=([1, 3], [3, 1]))  # x b v o
    return np.tensordot(a.conj(), t, axes=([1, 2], [3, 1])).transpose(0, 2, 1)


def _two_site_matvec(left, w1, w2, right, shape):
    def matvec(v):
        theta = v.reshape(shape)  # x s t y
        t = np.tensordot(left, theta, axes=(2, 0))  # a w s t y
        t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))  # a t y v o
        t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))  # a y o u p
        t = np.tensordot(t, right, axes=([1, 3], [2, 1]))  # a o p b
        return t.reshape(-1)
    return matvec


@dataclass
class DmrgResult:
    energy: float
    sweep_energies: list
    max_bond_used: int
    sweeps: int
    truncation_error: float
    converged: bool
    warmup_sweeps: int = WARMUP_SWEEPS
    local_failures: int = 0
    mps: MPS | None = field(default=None, repr=False)


def _split(theta, max_bond, direction):
    l, _, _, r = theta.shape
    u, s, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
    weights = s**2 / np.sum(s**2)
    # smallest count whose discarded weight stays below the threshold
    tail = np.cumsum(weights[::-1])[::-1]
    keep = int(np.sum(tail > DISCARD_WEIGHT))
    keep = max(1, min(keep, max_bond, len(s)))
    discarded = float(np.sum(weights[keep:]))
    u, s, vh = u[:, :keep], s[:keep] / np.linalg.norm(s[:keep]), vh[:keep]
    if direction == "right":
        a = u.reshape(l, 2, keep)
        b = (s[:, None] * vh).reshape(keep, 2, r)
    else:
        a = (u * s).reshape(l, 2, keep)
        b = vh.reshape(keep, 2, r)
    return a, b, discarded


def _sweep(mps, mpo, lefts, rights, max_bond, rng, lanczos_tol):
    n = mps.n_sites
    trunc = 0.0
    failures = 0
    order = [(i, "right") for i in range(n - 1)] + [(i, "left") for i in range(n - 2, -1, -1)]
    for i, direction in order:
        a1, a2 = mps.tensors[i], mps.tensors[i + 1]
        theta = np.tensordot(a1, a2, axes=(2, 0))
        shape = theta.shape
        matvec = _two_site_matvec(lefts[i], mpo.tensors[i], mpo.tensors[i + 1],
                                  rights[i + 1], shape)
        res = lanczos(matvec, theta.size, k=1, v0=theta.reshape(-1), tol=lanczos_tol,
                      max_iter=400, krylov_dim=min(40, theta.size), rng=rng,
                      raise_on_failure=False)
        if res.residuals[0] >= lanczos_tol:
            failures += 1
        theta = res.vectors[:, 0].reshape(shape)
        a, b, discarded = _split(theta, max_bond, direction)
        trunc += discarded
        mps.tensors[i], mps.tensors[i + 1] = a, b
        if direction == "right":
            lefts[i + 1] = _extend_left(lefts[i], a, mpo.tensors[i])
            mps.center = i + 1
        else:
            rights[i] = _extend_right(rights[i + 1], b, mpo.tensors[i + 1])
            mps.center = i
    return trunc, failures


def _right_canonical(mps: MPS) -> MPS:
    ts = list(mps.tensors)
    for i in range(len(ts) - 1, 0, -1):
        l, d, r = ts[i].shape
        q, rr = np.linalg.qr(ts[i].reshape(l, d * r).T)
        ts[i] = q.T.reshape(-1, d, r)
        ts[i - 1] = np.tensordot(ts[i - 1], rr.T, axes=(2, 0))
    ts[0] = ts[0] / np.linalg.norm(ts[0])
    return MPS(ts, 0)


def _environments(mps, mpo):
    n = mps.n_sites
    lefts = [None] * n
    rights = [None] * n
    lefts[0] = np.ones((1, 1, 1), dtype=complex)
    rights[n - 1] = np.ones((1, 1, 1), dtype=complex)
    for i in range(n - 1, 0, -1):
        rights[i - 1] = _extend_right(rights[i], mps.tensors[i], mpo.tensors[i])
    return lefts, rights


def dmrg_run(mpo: MPO, max_bond: int, max_sweeps: int = 20, energy_tol: float = 1e-10,
             seed: int = 0, lanczos_tol: float = 1e-10, warmup_sweeps: int = WARMUP_SWEEPS
             ) -> DmrgResult:
    """Two-site DMRG from a seeded random product state.

    ``warmup_sweeps`` sweeps at bond ``min(8, max_bond)`` come first; then
    sweeps at ``max_bond`` run until the energy changes by less than
    ``energy_tol`` or ``max_sweeps`` is reached. ``sweep_energies`` holds
    ``<psi|H|psi>`` after every sweep, warm-up included.
    """
    if max_bond < 2:
        raise ValueError(f"max_bond must be at least 2, got {max_bond}")
    n = mpo.n_sites
    if n < 2:
        raise ValueError("DMRG needs at least two sites")
    rng = np.random.default_rng(seed)
    mps = _right_canonical(random_product_state(n, seed))
    lefts, rights = _environments(mps, mpo)
    energies = []
    trunc = 0.0
    failures = 0
    converged = False
    schedule = [min(WARMUP_BOND, max_bond)] * warmup_sweeps + [max_bond] * max_sweeps
    for k, bond in enumerate(schedule):
        t, f = _sweep(mps, mpo, lefts, rights, bond, rng, lanczos_tol)
        trunc += t
        failures += f
        energies.append(float(expectation(mps, mpo).real))
        if k >= warmup_sweeps and len(energies) > 1 and abs(energies[-1] - energies[-2]) < energy_tol:
            converged = True
            break
    sweeps = len(energies) - warmup_sweeps
    return DmrgResult(energies[-1], energies, max(mps.bond_dimensions, default=1), sweeps,
                      trunc, converged, warmup_sweeps, failures, mps)


def error_scan(instances: dict, bonds, reference: float, n_sites: int | None = None,
               max_sweeps: int = 20, energy_tol: float = 1e-10, seed: int = 0,
               reference_label: str = "ED") -> list[dict]:
    """DMRG error against a shared reference for each model and bond dimension.

    ``instances`` maps a model tag (e.g. ``"FH"``, ``"ORFH"``) to a PauliSum,
    tensors or a precompiled :class:`MPO`.
    """
    rows = []
    for tag, inst in instances.items():
        mpo = inst if isinstance(inst, MPO) else compile_mpo(check_pauli_sum(inst))
        for d in bonds:
            res = dmrg_run(mpo, int(d), max_sweeps, energy_tol, seed)
            rows.append({"model": tag, "n_sites": n_sites if n_sites is not None
                         else mpo.n_sites // 2, "D": int(d), "sweeps": res.sweeps,
                         "E_DMRG": res.energy, "E_reference": reference,
                         "reference": reference_label, "error": res.energy - reference})
    return rows


class DMRGSolver(BaseEstimator):
    """Estimator form of :func:`compile_mpo` plus :func:`dmrg_run`.

    Attributes
    ----------
    mpo_ : MPO
    result_ : DmrgResult
    energy_ : float
    """

    def __init__(self, max_bond=32, max_sweeps=20, energy_tol=1e-10, seed=0):
        self.max_bond = max_bond
        self.max_sweeps = max_sweeps
        self.energy_tol = energy_tol
        self.seed = seed

    def fit(self, X, y=None):
        self.mpo_ = X if isinstance(X, MPO) else compile_mpo(check_pauli_sum(X))
        self.result_ = dmrg_run(self.mpo_, self.max_bond, self.max_sweeps,
                                self.energy_tol, self.seed)
        self.energy_ = self.result_.energy
        return self
