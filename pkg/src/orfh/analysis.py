"""Structural metrics of fermionic Hamiltonians: Pauli term counts and induced norms."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .operators import CoefficientTensors, PauliSum, jordan_wigner
from ._validation import check_tensors

SOURCES = ("ORFH", "FH", "FCIDUMP")


@dataclass
class StructureReport:
    n_spin_orbitals: int
    pauli_term_count: int
    one_norm: float
    two_norm: float
    source: str

    def row(self) -> dict:
        return {"n_spin_orbitals": self.n_spin_orbitals, "source": self.source,
                "term_count": self.pauli_term_count, "one_norm": self.one_norm,
                "two_norm": self.two_norm}

    def to_dict(self):
        return asdict(self)


def count_pauli_terms(psum: PauliSum) -> int:
    """Number of stored non-identity terms."""
    if not isinstance(psum, PauliSum):
        raise TypeError(f"expected PauliSum, got {type(psum).__name__}")
    return len(psum)


def coefficient_list(tensors: CoefficientTensors) -> np.ndarray:
    """Absolute values of the coefficients multiplying operator products.

    These are the nonzero one-body entries ``h_pq`` and the two-body entries
    ``h_pqrs / 2`` of the tensor representation, i.e. ``c_i`` in
    ``H = sum_i c_i O_i``. The constant is not included.
    """
    one = np.abs(np.asarray(tensors.one_body)).ravel()
    two = np.abs(np.asarray(tensors.two_body_values)) / 2
    return np.concatenate([one[one > 0], two[two > 0]])


def induced_p_norm(tensors: CoefficientTensors, p: int) -> float:
    """``(sum_i |c_i|**p) ** (1/p)`` over :func:`coefficient_list`."""
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p!r}")
    c = coefficient_list(check_tensors(tensors))
    if c.size == 0:
        return 0.0
    return float(np.sum(c**p) ** (1.0 / p))


def structure_report(tensors: CoefficientTensors, source: str = "ORFH",
                     psum: PauliSum | None = None) -> StructureReport:
    if source not in SOURCES:
        raise ValueError(f"source must be one of {SOURCES}, got {source!r}")
    tensors = check_tensors(tensors)
    psum = jordan_wigner(tensors) if psum is None else psum
    return StructureReport(tensors.n_spin_orbitals, count_pauli_terms(psum),
                           induced_p_norm(tensors, 1), induced_p_norm(tensors, 2), source)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class StructureAnalyzer(TransformerMixin, BaseEstimator):
    """Map a sequence of tensors to rows ``[n_spin_orbitals, terms, 1-norm, 2-norm]``.

    Attributes
    ----------
    reports_ : list of StructureReport
        Reports from the last call to :meth:`transform`.
    """

    def __init__(self, source="ORFH"):
        self.source = source

    def fit(self, X=None, y=None):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        return self

    def transform(self, X):
        if isinstance(X, CoefficientTensors):
            X = [X]
        self.reports_ = [structure_report(t, self.source) for t in X]
        return np.array([[r.n_spin_orbitals, r.pauli_term_count, r.one_norm, r.two_norm]
                         for r in self.reports_], dtype=float)
