"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .operators import CoefficientTensors, PauliSum, CapabilityError, jordan_wigner


def check_tensors(X, hermitian_tol: float | None = None) -> CoefficientTensors:
    if not isinstance(X, CoefficientTensors):
        raise TypeError(f"expected CoefficientTensors, got {type(X).__name__}")
    if hermitian_tol is not None:
        err = X.hermiticity_error()
        if err > hermitian_tol:
            raise ValueError(f"tensors are not hermitian (error {err:.3e})")
    return X


def check_pauli_sum(X, max_width: int | None = None) -> PauliSum:
    """Accept a PauliSum, or CoefficientTensors which are mapped with JW."""
    if isinstance(X, CoefficientTensors):
        X = jordan_wigner(X)
    if not isinstance(X, PauliSum):
        raise TypeError(f"expected PauliSum or CoefficientTensors, got {type(X).__name__}")
    if max_width is not None and X.width > max_width:
        raise CapabilityError(f"{X.width} qubits exceeds the limit of {max_width}")
    return X


def check_statevector(state, width: int, tol: float = 1e-10) -> np.ndarray:
    state = np.asarray(state, dtype=complex).ravel()
    if state.shape != (1 << width,):
        raise ValueError(f"state has length {state.size}, expected {1 << width}")
    norm = np.linalg.norm(state)
    if abs(norm - 1) > tol:
        raise ValueError(f"state is not normalized (norm {norm:.12g})")
    return state
