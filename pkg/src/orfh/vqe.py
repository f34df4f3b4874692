"""Statevector VQE with a hardware-efficient ansatz.

Every layer applies ``RZ`` then ``RY`` to each qubit; layers are separated by
a ladder of ``CZ`` gates on neighbouring qubits ``(0,1), (1,2), ...``. With
``depth`` entangling ladders there are ``depth + 1`` rotation layers and
``2 * n_qubits * (depth + 1)`` parameters, stored as an array of shape
``(depth + 1, n_qubits, 2)`` whose last axis is ``(rz, ry)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import line_search
from sklearn.base import BaseEstimator

from .operators import PauliSum, CapabilityError
from ._validation import check_pauli_sum

ADAM, LBFGS, NFT, SPSA = "ADAM", "LBFGS", "NFT", "SPSA"
OPTIMIZERS = (ADAM, LBFGS, NFT, SPSA)
MAX_QUBITS = 14
SHIFT = np.pi / 2

DEFAULTS = {
    ADAM: {"step": 0.05, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    LBFGS: {"memory": 10, "c1": 1e-4, "c2": 0.9},
    NFT: {},
    SPSA: {"a": 0.2, "c": 0.1, "alpha": 0.602, "gamma": 0.101, "A": None},
}


@dataclass(frozen=True)
class AnsatzCircuit:
    n_qubits: int
    depth: int = 4

    def __post_init__(self):
        if self.n_qubits < 1 or self.depth < 0:
            raise ValueError("need n_qubits >= 1 and depth >= 0")

    @property
    def n_parameters(self) -> int:
        return 2 * self.n_qubits * (self.depth + 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.depth + 1, self.n_qubits, 2)


def _cz_ladder(n: int) -> np.ndarray:
    b = np.arange(1 << n)
    sign = np.ones(1 << n)
    for q in range(n - 1):
        both = ((b >> q) & 1) & ((b >> (q + 1)) & 1)
        sign = sign * (1 - 2 * both)
    return sign


def _z_signs(n: int) -> np.ndarray:
    b = np.arange(1 << n)
    return 1 - 2 * ((b[None, :] >> np.arange(n)[:, None]) & 1)  # (n, 2**n)


def _ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


class _Simulator:
    """Cached diagonals for one circuit."""

    def __init__(self, circuit: AnsatzCircuit):
        if circuit.n_qubits > MAX_QUBITS:
            raise CapabilityError(f"VQE limited to {MAX_QUBITS} qubits")
        self.circuit = circuit
        self.cz = _cz_ladder(circuit.n_qubits)
        self.zs = _z_signs(circuit.n_qubits)

    def state(self, params) -> np.ndarray:
        n = self.circuit.n_qubits
        theta = np.asarray(params, dtype=float).reshape(self.circuit.shape)
        psi = np.zeros(1 << n, dtype=complex)
        psi[0] = 1
        for layer in range(self.circuit.depth + 1):
            psi = psi * np.exp(-0.5j * (theta[layer, :, 0] @ self.zs))
            for q in range(n):
                t = psi.reshape(1 << (n - 1 - q), 2, 1 << q)
                psi = np.einsum("ij,ajb->aib", _ry(theta[layer, q, 1]), t).reshape(-1)
            if layer < self.circuit.depth:
                psi = psi * self.cz
        return psi


def apply_ansatz(circuit: AnsatzCircuit, parameters) -> np.ndarray:
    """Statevector prepared from ``|0...0>``; qubit ``q`` is bit ``q`` of the index."""
    parameters = np.asarray(parameters, dtype=float).ravel()
    if parameters.size != circuit.n_parameters:
        raise ValueError(f"expected {circuit.n_parameters} parameters, got {parameters.size}")
    return _Simulator(circuit).state(parameters)


def energy(psum: PauliSum, state) -> float:
    psum = check_pauli_sum(psum)
    state = np.asarray(state, dtype=complex)
    if state.shape != (1 << psum.width,):
        raise ValueError(f"state length {state.size} does not match {psum.width} qubits")
    return float(psum.expectation(state).real)


class _Objective:
    """Energy as a function of the flat parameter vector, counting evaluations."""

    def __init__(self, psum: PauliSum, circuit: AnsatzCircuit):
        psum = check_pauli_sum(psum)
        if psum.width != circuit.n_qubits:
            raise ValueError(f"Hamiltonian acts on {psum.width} qubits, circuit on "
                             f"{circuit.n_qubits}")
        self.sim = _Simulator(circuit)
        self.mat = psum.to_sparse()
        self.evaluations = 0

    def __call__(self, params) -> float:
        self.evaluations += 1
        psi = self.sim.state(params)
        return float(np.vdot(psi, self.mat @ psi).real)

    def gradient(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        grad = np.empty_like(params)
        for j in range(params.size):
            shifted = params.copy()
            shifted[j] += SHIFT
            up = self(shifted)
            shifted[j] -= 2 * SHIFT
            grad[j] = 0.5 * (up - self(shifted))
        return grad


def gradient(psum: PauliSum, circuit: AnsatzCircuit, parameters) -> np.ndarray:
    """Parameter-shift gradient ``(E(t + pi/2) - E(t - pi/2)) / 2`` per component."""
    parameters = np.asarray(parameters, dtype=float).ravel()
    if parameters.size != circuit.n_parameters:
        raise ValueError(f"expected {circuit.n_parameters} parameters, got {parameters.size}")
    return _Objective(psum, circuit).gradient(parameters)


@dataclass
class VqeTrajectory:
    optimizer: str
    seed: int
    energies: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    parameters: np.ndarray | None = None

    @property
    def best_energy(self) -> float:
        return float(min(self.energies))

    @property
    def evaluation_count(self) -> int:
        return self.evaluations[-1] if self.evaluations else 0

    def rows(self, trial: int | None = None) -> list[dict]:
        trial = self.seed if trial is None else trial
        return [{"optimizer": self.optimizer, "trial": trial, "iteration": i,
                 "energy": e, "evaluations": n}
                for i, (e, n) in enumerate(zip(self.energies, self.evaluations))]


def _record(traj, f, value):
    traj.energies.append(float(value))
    traj.evaluations.append(f.evaluations)


def _adam(f, x, traj, max_iter, step, beta1, beta2, eps):
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    for k in range(1, max_iter + 1):
        g = f.gradient(x)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**k)
        vhat = v / (1 - beta2**k)
        x = x - step * mhat / (np.sqrt(vhat) + eps)
        _record(traj, f, f(x))
    return x


def _two_loop(g, s_list, y_list):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        a = (s @ q) / (y @ s)
        alphas.append(a)
        q = q - a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q = q * (s @ y) / (y @ y)
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        b = (y @ q) / (y @ s)
        q = q + s * (a - b)
    return -q


def _lbfgs(f, x, traj, max_iter, memory, c1, c2, gtol=1e-8):
    fx = traj.energies[-1]
    g = f.gradient(x)
    s_list, y_list = [], []
    for _ in range(max_iter):
        if np.linalg.norm(g) < gtol:
            break
        d = _two_loop(g, s_list, y_list)
        if d @ g >= 0:
            s_list, y_list = [], []
            d = -g
        alpha, _, _, f_new, _, g_new = line_search(f, f.gradient, x, d, g, fx,
                                                   c1=c1, c2=c2, maxiter=20)
        if alpha is None:
            if s_list:  # retry once along steepest descent
                s_list, y_list = [], []
                d = -g
                alpha, _, _, f_new, _, g_new = line_search(f, f.gradient, x, d, g, fx,
                                                           c1=c1, c2=c2, maxiter=20)
            if alpha is None:
                break
        x_new = x + alpha * d
        if g_new is None:
            g_new = f.gradient(x_new)
        s, y = x_new - x, g_new - g
        if s @ y > 1e-12:
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        x, g, fx = x_new, g_new, float(f_new)
        _record(traj, f, fx)
    return x


def _nft(f, x, traj, max_iter):
    """Sequential sinusoidal minimization; one iteration is a full sweep.

    Along one angle ``E(t0 + phi) = a + B cos(phi) + C sin(phi)``. From
    ``E(t0)`` and ``E(t0 +- 2 pi / 3)`` the coefficients are exact and the
    minimum sits at ``phi = atan2(-C, -B)``.
    """
    current = traj.energies[-1]
    shift = 2 * np.pi / 3
    for _ in range(max_iter):
        for j in range(x.size):
            x[j] += shift
            ep = f(x)
            x[j] -= 2 * shift
            em = f(x)
            x[j] += shift
            a = (current + ep + em) / 3
            b = current - a
            c = (ep - em) / np.sqrt(3)
            x[j] += np.arctan2(-c, -b)
            current = min(current, a - np.hypot(b, c))
        current = f(x)
        _record(traj, f, current)
    return x


def _spsa(f, x, traj, max_iter, rng, a, c, alpha, gamma, A):
    A = max_iter / 10 if A is None else A
    for k in range(max_iter):
        ak = a / (k + 1 + A) ** alpha
        ck = c / (k + 1) ** gamma
        delta = rng.choice([-1.0, 1.0], size=x.size)
        diff = f(x + ck * delta) - f(x - ck * delta)
        x = x - ak * diff / (2 * ck) * delta
        _record(traj, f, f(x))
    return x


def initial_parameters(circuit: AnsatzCircuit, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-0.1, 0.1, circuit.n_parameters)


def run_vqe(psum: PauliSum, circuit: AnsatzCircuit, optimizer: str, seed: int = 0,
            max_iterations: int = 100, options: dict | None = None) -> VqeTrajectory:
    """Optimize the ansatz energy from seeded small random angles.

    ``energies[0]`` is the initial energy; every later entry is the energy
    after one optimizer iteration (a full sweep for NFT). ``evaluations``
    holds the cumulative number of energy evaluations at each record.
    """
    optimizer = optimizer.upper()
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}; expected one of {OPTIMIZERS}")
    opts = {**DEFAULTS[optimizer], **(options or {})}
    unknown = set(opts) - set(DEFAULTS[optimizer])
    if unknown:
        raise ValueError(f"unknown {optimizer} options: {sorted(unknown)}")
    f = _Objective(psum, circuit)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.1, 0.1, circuit.n_parameters)
    traj = VqeTrajectory(optimizer, seed)
    _record(traj, f, f(x))
    if optimizer == ADAM:
        x = _adam(f, x, traj, max_iterations, **opts)
    elif optimizer == LBFGS:
        x = _lbfgs(f, x, traj, max_iterations, **opts)
    elif optimizer == NFT:
        x = _nft(f, x, traj, max_iterations)
    else:
        x = _spsa(f, x, traj, max_iterations, rng, **opts)
    traj.parameters = x
    return traj


class VQESolver(BaseEstimator):
    """Estimator form of :func:`run_vqe`.

    Attributes
    ----------
    trajectory_ : VqeTrajectory
    energy_ : float
        Best recorded energy.
    """

    def __init__(self, optimizer="NFT", depth=4, max_iterations=100, seed=0, options=None):
        self.optimizer = optimizer
        self.depth = depth
        self.max_iterations = max_iterations
        self.seed = seed
        self.options = options

    def fit(self, X, y=None):
        X = check_pauli_sum(X, max_width=MAX_QUBITS)
        self.circuit_ = AnsatzCircuit(X.width, self.depth)
        self.trajectory_ = run_vqe(X, self.circuit_, self.optimizer, self.seed,
                                   self.max_iterations, self.options)
        self.energy_ = self.trajectory_.best_energy
        return self
