"""Periodic 1D Fermi-Hubbard tensors and spin-mixing orbital rotations."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .operators import CoefficientTensors
from ._validation import check_tensors

#: Identifier written into instance descriptors. Rotations are drawn from
#: numpy's PCG64 bit generator seeded with the integer seed, via
#: ``Generator.standard_normal`` (real part block first, then imaginary).
PRNG_ID = "numpy-pcg64-standard_normal-qr-v1"


@dataclass(frozen=True)
class HubbardParams:
    """Parameters of the periodic Hubbard ring. ``mu=None`` means ``u / 2``."""

    n_sites: int
    t: float = 1.0
    u: float = 1.0
    mu: float | None = None

    def __post_init__(self):
        if int(self.n_sites) < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if self.mu is None:
            object.__setattr__(self, "mu", self.u / 2)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class OrbitalRotation:
    matrix: np.ndarray
    seed: int | None = None
    real_flag: bool = False

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def unitarity_error(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u @ u.conj().T - np.eye(len(u)))))


def build_hubbard(params: HubbardParams) -> CoefficientTensors:
    """Coefficient tensors of the Hubbard ring with interleaved spin orbitals.

    For ``n_sites == 2`` the two periodic bonds coincide, so the hopping
    between the sites is ``-2t``.
    """
    n = int(params.n_sites)
    nso = 2 * n
    one = np.zeros((nso, nso), dtype=complex)
    for i in range(n):
        j = (i + 1) % n
        for s in (0, 1):
            a, b = 2 * i + s, 2 * j + s
            one[a, b] -= params.t
            one[b, a] -= params.t
    one[np.diag_indices(nso)] -= params.mu
    idx = np.array([(2 * i, 2 * i, 2 * i + 1, 2 * i + 1) for i in range(n)])
    val = np.full(n, 2.0 * params.u, dtype=complex)
    return CoefficientTensors(nso, one, idx, val)


def sample_rotation(dimension: int, seed: int, real_flag: bool = False) -> OrbitalRotation:
    """Haar-random unitary (or orthogonal) matrix by QR of a Gaussian matrix."""
    if dimension % 2 or dimension < 4:
        raise ValueError(f"dimension must be even and >= 4, got {dimension}")
    rng = np.random.default_rng(seed)
    if real_flag:
        g = rng.standard_normal((dimension, dimension))
    else:
        re = rng.standard_normal((dimension, dimension))
        im = rng.standard_normal((dimension, dimension))
        g = (re + 1j * im) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    if real_flag:
        q = q.real
    return OrbitalRotation(q, seed=int(seed), real_flag=bool(real_flag))


def rotate(tensors: CoefficientTensors, rotation: OrbitalRotation | np.ndarray) -> CoefficientTensors:
    """Substitute ``c+_k -> sum_p u_kp c+_p`` (and ``c_k -> sum_p u*_kp c_p``).

    ``h'_pq = sum_kl u_kp h_kl u*_lq`` and
    ``h'_pqrs = sum_klmn h_klmn u_kp u*_lq u_mr u*_ns``.
    """
    u = rotation.matrix if isinstance(rotation, OrbitalRotation) else np.asarray(rotation)
    n = tensors.n_spin_orbitals
    if u.shape != (n, n):
        raise ValueError(f"rotation of dimension {u.shape[0]} does not match "
                         f"{n} spin orbitals")
    uc = u.conj()
    one = u.T @ tensors.one_body @ uc
    idx, val = tensors.two_body_indices, tensors.two_body_values
    if len(val) == 0:
        return CoefficientTensors(n, one, idx, val, tensors.constant, tensors.convention)
    if len(val) < n:
        two = np.einsum("m,mp,mq,mr,ms->pqrs", val, u[idx[:, 0]], uc[idx[:, 1]],
                        u[idx[:, 2]], uc[idx[:, 3]], optimize=True)
    else:
        two = np.einsum("klmn,kp,lq,mr,ns->pqrs", tensors.two_body_dense(), u, uc, u, uc,
                        optimize=True)
    if np.isrealobj(u) and tensors.is_real:
        one, two = one.real, two.real
    return CoefficientTensors.from_dense(one, two, tensors.constant, tensors.convention)


def orfh_tensors(params: HubbardParams, seed: int | None, real_flag: bool = False):
    """Hubbard tensors rotated by the rotation drawn from ``seed`` (None = unrotated)."""
    base = build_hubbard(params)
    if seed is None:
        return base, None
    rot = sample_rotation(base.n_spin_orbitals, seed, real_flag)
    return rotate(base, rot), rot


class OrbitalRotator(TransformerMixin, BaseEstimator):
    """Transformer that draws a Haar rotation on ``fit`` and applies it.

    Parameters
    ----------
    seed : int
        Seed of the rotation.
    real : bool
        Draw an orthogonal rather than a unitary matrix.

    Attributes
    ----------
    rotation_ : OrbitalRotation
    """

    def __init__(self, seed=0, real=False):
        self.seed = seed
        self.real = real

    def fit(self, X, y=None):
        X = check_tensors(X)
        self.rotation_ = sample_rotation(X.n_spin_orbitals, self.seed, self.real)
        return self

    def transform(self, X):
        check_is_fitted(self, "rotation_")
        return rotate(check_tensors(X), self.rotation_)
