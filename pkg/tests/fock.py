"""Reference Fock-space matrices built directly from ladder-operator action.

Independent of the package's Pauli machinery: ``c_p`` acts on occupation
bitstrings (mode ``p`` = bit ``p``) with the sign of the occupied modes
below ``p``.
"""

import numpy as np
import scipy.sparse as sp


def annihilators(n):
    """Sparse ``c_p`` matrices for ``p = 0 .. n-1``."""
    dim = 1 << n
    ops = []
    for p in range(n):
        rows, cols, vals = [], [], []
        for b in range(dim):
            if b >> p & 1:
                rows.append(b ^ (1 << p))
                cols.append(b)
                vals.append((-1) ** bin(b & ((1 << p) - 1)).count("1"))
        ops.append(sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim)))
    return ops


def fock_matrix(one, two=None, constant=0.0, normal=False):
    """Dense matrix of ``constant + sum h_pq c+p cq + 1/2 sum h_pqrs c+p cq c+r cs``.

    ``two`` maps index quadruples to values. With ``normal`` the two-body
    product is ``c+p c+r cs cq``.
    """
    one = np.asarray(one)
    n = one.shape[0]
    c = annihilators(n)
    cd = [m.T.tocsr() for m in c]
    pairs = {(p, q): (cd[p] @ c[q]).tocsr() for p in range(n) for q in range(n)}
    h = constant * sp.identity(1 << n, dtype=complex, format="csr")
    for p in range(n):
        for q in range(n):
            if one[p, q] != 0:
                h = h + one[p, q] * pairs[p, q]
    for (p, q, r, s), v in (two or {}).items():
        if normal:
            h = h + 0.5 * v * (cd[p] @ cd[r] @ c[s] @ c[q])
        else:
            h = h + 0.5 * v * (pairs[p, q] @ pairs[r, s])
    return h.toarray()


def hubbard_matrix(n_sites, t=1.0, u=1.0, mu=None):
    """Hubbard ring from its textbook form, summing i -> i+1 bonds literally."""
    mu = u / 2 if mu is None else mu
    c = annihilators(2 * n_sites)
    cd = [m.T.tocsr() for m in c]
    h = sp.csr_matrix((1 << (2 * n_sites),) * 2)
    for i in range(n_sites):
        j = (i + 1) % n_sites
        for s in (0, 1):
            a, b = 2 * i + s, 2 * j + s
            h = h - t * (cd[a] @ c[b] + cd[b] @ c[a])
    for i in range(n_sites):
        nu, nd = cd[2 * i] @ c[2 * i], cd[2 * i + 1] @ c[2 * i + 1]
        h = h + u * (nu @ nd) - mu * (nu + nd)
    return h.toarray()


def number_operator(n):
    c = annihilators(n)
    return sum(m.T @ m for m in c).toarray()


def sz_operator(n):
    c = annihilators(n)
    return sum((1 if p % 2 == 0 else -1) * 0.5 * (c[p].T @ c[p]) for p in range(n)).toarray()


def tensors_matrix(tensors):
    """Fock matrix of a CoefficientTensors object via its public fields."""
    from orfh.operators import NORMAL
    return fock_matrix(tensors.one_body, tensors.two_body, tensors.constant,
                       normal=tensors.convention == NORMAL)
