"""Generalized (spin-orbital) Hartree-Fock and correlation energies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .operators import CoefficientTensors, normal_order
from ._validation import check_tensors


@dataclass
class ScfResult:
    hf_energy: float
    orbital_coefficients: np.ndarray
    orbital_energies: np.ndarray
    density: np.ndarray
    n_electrons: int
    converged: bool
    iterations: int
    attempt: int
    method: str = "generalized Hartree-Fock"


def _normal_ordered_parts(tensors: CoefficientTensors):
    no = normal_order(tensors)
    return no.one_body, no.two_body_dense(), no.constant.real


def hf_energy(one, two, constant, density) -> float:
    """Energy of a determinant with ``density[p, q] = <c+_p c_q>``.

    ``one`` and ``two`` are the normal-ordered parts,
    ``H = sum h_pq c+_p c_q + 1/2 sum g_pqrs c+_p c+_r c_s c_q``.
    """
    e1 = np.einsum("pq,pq->", one, density)
    coul = np.einsum("pqrs,pq,rs->", two, density, density)
    exch = np.einsum("pqrs,ps,rq->", two, density, density)
    return float((constant + e1 + 0.5 * (coul - exch)).real)


def fock_matrix(one, two, density) -> np.ndarray:
    """``F_ab = dE / d density[a, b]``, hermitized."""
    j = 0.5 * (np.einsum("abrs,rs->ab", two, density) + np.einsum("pqab,pq->ab", two, density))
    k = 0.5 * (np.einsum("aqrb,rq->ab", two, density) + np.einsum("pbas,ps->ab", two, density))
    f = one + j - k
    return 0.5 * (f + f.conj().T)


def _aufbau(fock, n_electrons):
    eps, c = np.linalg.eigh(fock)
    occ = c[:, :n_electrons]
    return eps, c, occ.conj() @ occ.T


def _random_hermitian(rng, n, complex_valued):
    a = rng.standard_normal((n, n))
    if complex_valued:
        a = a + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def run_ghf(tensors: CoefficientTensors, n_electrons: int, attempts: int = 8,
            mixing: float = 0.5, tol: float = 1e-10, max_iter: int = 2000,
            perturbation: float = 0.3, seed: int = 0) -> ScfResult:
    """Lowest-energy generalized HF solution over ``attempts`` randomized starts.

    Attempt 0 starts from the bare one-body matrix; later attempts add a seeded
    random hermitian perturbation to it. Each iteration builds the Fock matrix
    from the mixed density, occupies its ``n_electrons`` lowest eigenvectors and
    mixes the new density linearly with weight ``mixing``. Convergence is
    ``max |Delta density| < tol``.
    """
    tensors = check_tensors(tensors)
    n = tensors.n_spin_orbitals
    if not 0 < n_electrons <= n:
        raise ValueError(f"n_electrons must lie in (0, {n}], got {n_electrons}")
    one, two, constant = _normal_ordered_parts(tensors)
    complex_valued = not tensors.is_real
    rng = np.random.default_rng(seed)
    scale = max(float(np.max(np.abs(one))), float(np.max(np.abs(two), initial=0.0)), 1e-3)
    best = None
    for attempt in range(attempts):
        guess = one.copy()
        if attempt:
            guess = guess + perturbation * scale * _random_hermitian(rng, n, complex_valued)
        _, _, dens = _aufbau(guess, n_electrons)
        converged = False
        it = 0
        for it in range(1, max_iter + 1):
            eps, coeffs, new = _aufbau(fock_matrix(one, two, dens), n_electrons)
            change = float(np.max(np.abs(new - dens)))
            if change < tol:
                dens = new
                converged = True
                break
            dens = (1 - mixing) * dens + mixing * new
        eps, coeffs, dens = _aufbau(fock_matrix(one, two, dens), n_electrons)
        result = ScfResult(hf_energy(one, two, constant, dens), coeffs, eps, dens,
                           n_electrons, converged, it, attempt)
        if best is None or _better(result, best):
            best = result
    return best


def _better(a: ScfResult, b: ScfResult) -> bool:
    if a.converged != b.converged:
        return a.converged
    return a.hf_energy < b.hf_energy - 1e-12


def correlation_energy(e_exact: float, e_hf: float) -> float:
    return e_exact - e_hf


def correlation_ratio(e_exact: float, e_hf: float) -> float:
    """``|E_corr| / |E_exact|``: the fraction of the energy missed by mean field."""
    return -correlation_energy(e_exact, e_hf) / abs(e_exact)


class GeneralizedHartreeFock(BaseEstimator):
    """Estimator form of :func:`run_ghf`.

    Attributes
    ----------
    energy_ : float
    result_ : ScfResult
    converged_ : bool
    """

    def __init__(self, n_electrons=None, attempts=8, mixing=0.5, tol=1e-10,
                 max_iter=2000, seed=0):
        self.n_electrons = n_electrons
        self.attempts = attempts
        self.mixing = mixing
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y=None):
        X = check_tensors(X)
        n_el = self.n_electrons if self.n_electrons is not None else X.n_spin_orbitals // 2
        self.result_ = run_ghf(X, n_el, self.attempts, self.mixing, self.tol,
                               self.max_iter, seed=self.seed)
        self.energy_ = self.result_.hf_energy
        self.converged_ = self.result_.converged
        return self
