"""Lieb-Wu Bethe-ansatz energies of the half-filled periodic Hubbard ring.

Finite ring of ``L`` sites, ``Ne = L`` electrons and ``M = L/2`` down spins,
real roots only. With ``theta(x) = 2 arctan(x)`` and ``c = U / (4 t)``::

    L k_j = 2 pi I_j - sum_b theta((sin k_j - lam_b) / c)
    sum_j theta((lam_a - sin k_j) / c) = 2 pi J_a + sum_b theta((lam_a - lam_b) / (2 c))

and the energy of ``H = -t sum (c+ c + h.c.) + U sum n_up n_dn`` is
``-2 t sum_j cos k_j``. The ``-mu Ne`` shift is left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


class BetheConvergenceError(RuntimeError):
    pass


@dataclass
class BetheSolution:
    charge_momenta: np.ndarray
    spin_rapidities: np.ndarray
    energy: float
    converged: bool
    residual: float
    residual_history: list

    def to_dict(self):
        return {"energy": self.energy, "converged": self.converged,
                "residual": self.residual,
                "roots": {"k": self.charge_momenta.tolist(),
                          "lambda": self.spin_rapidities.tolist()}}


def ground_state_quantum_numbers(n_sites: int):
    """Consecutive symmetric ``I_j`` and ``J_a`` for the half-filled ground state.

    ``I_j`` are integers when ``M`` is even and half-odd otherwise; ``J_a``
    are integers when ``Ne - M`` is odd. When the parity forbids a symmetric
    set (``M`` even) the ``I_j`` are shifted by +1/2.
    """
    ne, m = n_sites, n_sites // 2
    i_nums = np.arange(ne) - (ne - 1) / 2
    if m % 2 == 0:
        i_nums = i_nums + 0.5
    j_nums = np.arange(m) - (m - 1) / 2
    if (ne - m) % 2 == 0 and float(j_nums[0]).is_integer():
        j_nums = j_nums + 0.5
    return i_nums, j_nums


def _theta(x):
    return 2 * np.arctan(x)


def _dtheta(x):
    return 2 / (1 + x * x)


def _residual(y, n_sites, c, i_nums, j_nums):
    ne = len(i_nums)
    k, lam = y[:ne], y[ne:]
    s = np.sin(k)
    f1 = n_sites * k - 2 * np.pi * i_nums + _theta((s[:, None] - lam[None, :]) / c).sum(1)
    f2 = (_theta((lam[:, None] - s[None, :]) / c).sum(1) - 2 * np.pi * j_nums
          - _theta((lam[:, None] - lam[None, :]) / (2 * c)).sum(1))
    return np.concatenate([f1, f2])


def _jacobian(y, n_sites, c, i_nums):
    ne = len(i_nums)
    k, lam = y[:ne], y[ne:]
    s, co = np.sin(k), np.cos(k)
    a = _dtheta((s[:, None] - lam[None, :]) / c) / c  # (ne, m)
    b = _dtheta((lam[:, None] - lam[None, :]) / (2 * c)) / (2 * c)  # (m, m)
    m = len(lam)
    jac = np.zeros((ne + m, ne + m))
    jac[:ne, :ne] = np.diag(n_sites + co * a.sum(1))
    jac[:ne, ne:] = -a
    jac[ne:, :ne] = -(a * co[:, None]).T
    jac[ne:, ne:] = np.diag(a.sum(0) - b.sum(1)) + b
    return jac


def _newton(y, n_sites, c, i_nums, j_nums, tol, max_iter=200):
    history = []
    f = _residual(y, n_sites, c, i_nums, j_nums)
    r = float(np.max(np.abs(f)))
    history.append(r)
    for _ in range(max_iter):
        if r < tol:
            break
        step = np.linalg.solve(_jacobian(y, n_sites, c, i_nums), -f)
        damping = 1.0
        while damping > 1e-6:
            trial = y + damping * step
            ft = _residual(trial, n_sites, c, i_nums, j_nums)
            rt = float(np.max(np.abs(ft)))
            if rt < r:
                break
            damping /= 2
        else:
            break
        y, f, r = trial, ft, rt
        history.append(r)
    return y, r, history


def bethe_half_filled_energy(n_sites: int, t: float = 1.0, u: float = 1.0,
                             tol: float = 1e-12, steps: int = 24) -> BetheSolution:
    """Ground-state energy of the half-filled ring from the Lieb-Wu equations.

    The roots are followed by damped Newton iterations along a path of
    interaction strengths starting close to the free-fermion point.
    """
    n_sites = int(n_sites)
    if n_sites % 2:
        raise ValueError(f"half filling requires an even number of sites, got {n_sites}")
    if u <= 0:
        raise ValueError(f"u must be positive, got {u}")
    i_nums, j_nums = ground_state_quantum_numbers(n_sites)
    ratio = u / t
    path = np.geomspace(min(1e-3, ratio), ratio, steps) if ratio > 1e-3 else np.array([ratio])
    k = 2 * np.pi * i_nums / n_sites
    lam = _initial_rapidities(k, j_nums, path[0] / 4)
    y = np.concatenate([k, lam])
    history = []
    r = np.inf
    for ratio_step in path:
        y, r, hist = _newton(y, n_sites, ratio_step / 4, i_nums, j_nums, tol)
        history.extend(hist)
    ne = len(i_nums)
    energy = float(-2 * t * np.sum(np.cos(y[:ne])))
    converged = r < tol * 100
    return BetheSolution(y[:ne].copy(), y[ne:].copy(), energy, bool(converged), r, history)


def _initial_rapidities(k, j_nums, c):
    """Solve the spin equations for fixed charge momenta by 1D Newton sweeps."""
    s = np.sin(k)
    m = len(j_nums)
    spread = max(float(np.ptp(s)), 1e-3)
    lam = np.sort(np.quantile(s, (np.arange(m) + 0.5) / m)) if m else np.zeros(0)
    lam = lam + 1e-3 * spread * (np.arange(m) - (m - 1) / 2)
    for _ in range(500):
        f = (_theta((lam[:, None] - s[None, :]) / c).sum(1) - 2 * np.pi * j_nums
             - _theta((lam[:, None] - lam[None, :]) / (2 * c)).sum(1))
        a = _dtheta((s[:, None] - lam[None, :]) / c) / c
        b = _dtheta((lam[:, None] - lam[None, :]) / (2 * c)) / (2 * c)
        jac = np.diag(a.sum(0) - b.sum(1)) + b
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        step = np.clip(step, -0.1 * spread, 0.1 * spread)
        lam = lam + step
        if np.max(np.abs(f)) < 1e-12:
            break
    return lam


def bethe_bulk_energy_density(u: float, t: float = 1.0, panels_per_unit: int = 1,
                              order: int = 48) -> float:
    """Ground-state energy per site at half filling in the thermodynamic limit.

    ``e(U) = -4 t int_0^inf J0(w) J1(w) g(w) / w dw`` with the Fermi factor
    ``g(w) = 1 / (1 + exp(w U / (2 t)))``. Since ``2 J0 J1 = (1 - J0**2)'``
    the integral is evaluated after integrating by parts,
    ``1/2 int (1 - J0**2) (g / w**2 - g' / w) dw``, whose integrand no longer
    oscillates to leading order. Gauss-Legendre panels of width ``pi /
    panels_per_unit`` are used; the remaining tail is added from the
    large-``w`` expansion of ``J0**2``.
    """
    if u < 0:
        raise ValueError("u must be non-negative")
    ratio = u / t
    upper = min(80 / ratio + 50 if ratio > 0 else np.inf, 4000 * np.pi)
    n_panels = int(np.ceil(upper / np.pi)) * panels_per_unit
    width = np.pi / panels_per_unit
    nodes, weights = np.polynomial.legendre.leggauss(order)
    w = (np.arange(n_panels)[:, None] + (nodes[None, :] + 1) / 2) * width
    val = np.sum(_by_parts_integrand(w, ratio) * weights[None, :]) * width / 2
    a = n_panels * width
    g = 1 / (1 + np.exp(min(a * ratio / 2, 700)))
    # int_a^inf (1 - J0^2) / w^2 dw from J0^2 ~ (1 + sin 2w) / (pi w) - cos 2w / (4 pi w^2)
    tail = 1 / a - 1 / (2 * np.pi * a**2) - np.cos(2 * a) / (2 * np.pi * a**3)
    val += 0.5 * g * tail
    return float(-4 * t * val)


def _by_parts_integrand(w, ratio):
    x = np.minimum(w * ratio / 2, 700)
    g = 1 / (1 + np.exp(x))
    dg = -(ratio / 2) * g * (1 - g)
    small = w < 1e-3
    ws = np.where(small, 1.0, w)
    one_minus = 1 - special.j0(ws) ** 2
    # (1 - J0^2) / w^2 and (1 - J0^2) / w near the origin
    over_w2 = np.where(small, 0.5 - 3 * w**2 / 32, one_minus / ws**2)
    over_w = np.where(small, w / 2 - 3 * w**3 / 32, one_minus / ws)
    return 0.5 * (g * over_w2 - dg * over_w)


def bethe_bulk_energy_density_quad(u: float, t: float = 1.0) -> float:
    """Same integral as :func:`bethe_bulk_energy_density` with adaptive quadrature
    on the original integrand (``u > 0`` only); used as a cross-check."""
    ratio = u / t
    if ratio <= 0:
        raise ValueError("adaptive cross-check requires u > 0")

    def f(w):
        if w == 0:
            return 0.25
        return special.j0(w) * special.j1(w) / (w * (1 + np.exp(min(w * ratio / 2, 700))))

    upper = 80 / ratio + 50
    val, err = integrate.quad(f, 0, upper, epsabs=1e-14, epsrel=0, limit=5000)
    if err > 1e-10:
        raise BetheConvergenceError(f"bulk quadrature error estimate {err:.2e}")
    return float(-4 * t * val)
