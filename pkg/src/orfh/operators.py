"""Fermionic coefficient tensors, Pauli strings/sums and the Jordan-Wigner map.

Conventions
-----------
Spin orbital ``p`` is qubit ``p`` (even = spin up, odd = spin down) and qubit
``q`` is bit ``q`` of a computational basis index.  A qubit in state ``|1>``
is an occupied mode, so ``n_p = (I - Z_p) / 2``.

A Pauli string is stored symplectically as two bit masks ``(x, z)``; the
operator is ``i**popcount(x & z) * X**x Z**z`` so that ``x = z = 1`` on a
qubit is ``Y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

#: Pauli terms with ``|c|`` below this are dropped after merging.
TRUNCATION = 1e-12
#: Largest width for which a dense ``2**n x 2**n`` matrix is materialised.
DENSE_WIDTH_LIMIT = 14

EQ5 = "c+_p c_q c+_r c_s, 1/2 on two-body"
NORMAL = "c+_p c+_r c_s c_q, 1/2 on two-body"

_LETTERS = {(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


class CapabilityError(ValueError):
    """A request exceeds a documented size guard."""


def _popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.int64)).astype(np.int64)


# ---------------------------------------------------------------------------
# Coefficient tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientTensors:
    """One- and two-body coefficients of a number-conserving fermion operator.

    The represented operator is::

        constant + sum_pq h_pq c+_p c_q + 1/2 sum_pqrs h_pqrs c+_p c_q c+_r c_s

    for ``convention == EQ5``; with ``convention == NORMAL`` the two-body
    product is ``c+_p c+_r c_s c_q`` instead.

    The two-body tensor is sparse: ``two_body_indices`` is an ``(m, 4)``
    integer array of distinct quadruples and ``two_body_values`` the matching
    complex values.
    """

    n_spin_orbitals: int
    one_body: np.ndarray
    two_body_indices: np.ndarray
    two_body_values: np.ndarray
    constant: complex = 0.0
    convention: str = EQ5

    def __post_init__(self):
        n = int(self.n_spin_orbitals)
        one = np.array(self.one_body, dtype=complex)
        if one.shape != (n, n):
            raise ValueError(f"one_body must have shape {(n, n)}, got {one.shape}")
        idx = np.asarray(self.two_body_indices, dtype=np.int64).reshape(-1, 4)
        val = np.asarray(self.two_body_values, dtype=complex).reshape(-1)
        if len(idx) != len(val):
            raise ValueError("two_body index and value arrays differ in length")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("two_body index out of range")
        if self.convention not in (EQ5, NORMAL):
            raise ValueError(f"unknown convention {self.convention!r}")
        idx, val = _merge_quadruples(idx, val, n)
        for arr in (one, idx, val):
            arr.setflags(write=False)
        object.__setattr__(self, "n_spin_orbitals", n)
        object.__setattr__(self, "one_body", one)
        object.__setattr__(self, "two_body_indices", idx)
        object.__setattr__(self, "two_body_values", val)
        object.__setattr__(self, "constant", complex(self.constant))

    @classmethod
    def from_dense(cls, one_body, two_body=None, constant=0.0, convention=EQ5,
                   cutoff=0.0):
        one_body = np.asarray(one_body, dtype=complex)
        n = one_body.shape[0]
        if two_body is None:
            idx = np.zeros((0, 4), dtype=np.int64)
            val = np.zeros(0, dtype=complex)
        else:
            two_body = np.asarray(two_body, dtype=complex)
            mask = np.abs(two_body) > cutoff
            idx = np.argwhere(mask)
            val = two_body[mask]
        return cls(n, one_body, idx, val, constant, convention)

    @classmethod
    def from_dict(cls, n_spin_orbitals, one_body: Mapping | None = None,
                  two_body: Mapping | None = None, constant=0.0, convention=EQ5):
        one = np.zeros((n_spin_orbitals, n_spin_orbitals), dtype=complex)
        for (p, q), v in (one_body or {}).items():
            one[p, q] += v
        items = list((two_body or {}).items())
        idx = np.array([k for k, _ in items], dtype=np.int64).reshape(-1, 4)
        val = np.array([v for _, v in items], dtype=complex)
        return cls(n_spin_orbitals, one, idx, val, constant, convention)

    @property
    def two_body(self) -> dict:
        return {tuple(int(i) for i in k): complex(v)
                for k, v in zip(self.two_body_indices, self.two_body_values)}

    def two_body_dense(self) -> np.ndarray:
        n = self.n_spin_orbitals
        out = np.zeros((n, n, n, n), dtype=complex)
        if len(self.two_body_values):
            np.add.at(out, tuple(self.two_body_indices.T), self.two_body_values)
        return out

    @property
    def is_real(self) -> bool:
        return (not np.any(self.one_body.imag) and not np.any(self.two_body_values.imag)
                and self.constant.imag == 0)

    def hermiticity_error(self) -> float:
        err = float(np.max(np.abs(self.one_body - self.one_body.conj().T), initial=0.0))
        if len(self.two_body_values):
            g = self.two_body_dense()
            err = max(err, float(np.max(np.abs(g - g.transpose(1, 0, 3, 2).conj()))))
        return err

    def scaled(self, factor: float) -> "CoefficientTensors":
        return CoefficientTensors(self.n_spin_orbitals, self.one_body * factor,
                                  self.two_body_indices, self.two_body_values * factor,
                                  self.constant * factor, self.convention)

    def __repr__(self):
        return (f"CoefficientTensors(n_spin_orbitals={self.n_spin_orbitals}, "
                f"two_body_entries={len(self.two_body_values)}, "
                f"convention={self.convention!r})")


def _merge_quadruples(idx, val, n):
    if not len(val):
        return np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=complex)
    key = ((idx[:, 0] * n + idx[:, 1]) * n + idx[:, 2]) * n + idx[:, 3]
    uniq, inv = np.unique(key, return_inverse=True)
    summed = (np.bincount(inv, weights=val.real, minlength=len(uniq))
              + 1j * np.bincount(inv, weights=val.imag, minlength=len(uniq)))
    keep = summed != 0
    uniq, summed = uniq[keep], summed[keep]
    out = np.stack([uniq // n**3, (uniq // n**2) % n, (uniq // n) % n, uniq % n], axis=1)
    return out.astype(np.int64), summed


def normal_order(tensors: CoefficientTensors) -> CoefficientTensors:
    """Rewrite ``c+_p c_q c+_r c_s`` as ``c+_p c+_r c_s c_q + delta_qr c+_p c_s``.

    The two-body values are kept; the delta terms are folded into the one-body
    matrix, ``h'_ps = h_ps + 1/2 sum_q h_pqqs``.
    """
    if tensors.convention == NORMAL:
        return tensors
    one = tensors.one_body.copy()
    idx, val = tensors.two_body_indices, tensors.two_body_values
    diag = idx[:, 1] == idx[:, 2]
    np.add.at(one, (idx[diag, 0], idx[diag, 3]), 0.5 * val[diag])
    return CoefficientTensors(tensors.n_spin_orbitals, one, idx, val,
                              tensors.constant, NORMAL)


def to_eq5(tensors: CoefficientTensors) -> CoefficientTensors:
    """Inverse of :func:`normal_order`, ``h'_ps = h_ps - 1/2 sum_q h_pqqs``."""
    if tensors.convention == EQ5:
        return tensors
    one = tensors.one_body.copy()
    idx, val = tensors.two_body_indices, tensors.two_body_values
    diag = idx[:, 1] == idx[:, 2]
    np.add.at(one, (idx[diag, 0], idx[diag, 3]), -0.5 * val[diag])
    return CoefficientTensors(tensors.n_spin_orbitals, one, idx, val,
                              tensors.constant, EQ5)


# ---------------------------------------------------------------------------
# Pauli strings and sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class PauliString:
    """A Pauli string on ``width`` qubits in symplectic form."""

    width: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        limit = 1 << self.width
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"Pauli masks exceed width {self.width}")

    @classmethod
    def from_label(cls, label: str, width: int | None = None) -> "PauliString":
        """Parse ``"X0 Z3"`` (an empty string or ``"I"`` is the identity)."""
        x = z = 0
        top = -1
        for tok in label.split():
            if tok == "I":
                continue
            letter, qubit = tok[0].upper(), int(tok[1:])
            if letter not in "XYZ":
                raise ValueError(f"bad Pauli factor {tok!r}")
            if (x | z) >> qubit & 1:
                raise ValueError(f"qubit {qubit} appears twice in {label!r}")
            if letter in "XY":
                x |= 1 << qubit
            if letter in "YZ":
                z |= 1 << qubit
            top = max(top, qubit)
        if width is None:
            width = top + 1
        return cls(width, x, z)

    @property
    def factors(self) -> dict[int, str]:
        out = {}
        for q in range(self.width):
            key = (self.x >> q & 1, self.z >> q & 1)
            if key != (0, 0):
                out[q] = _LETTERS[key]
        return out

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def dense_label(self) -> str:
        """Per-qubit letters, qubit 0 first (``"XIZ"``)."""
        f = self.factors
        return "".join(f.get(q, "I") for q in range(self.width))

    def __str__(self):
        f = self.factors
        return " ".join(f"{f[q]}{q}" for q in sorted(f)) or "I"

    def commutes(self, other: "PauliString") -> bool:
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def qubitwise_commutes(self, other: "PauliString") -> bool:
        both = (self.x | self.z) & (other.x | other.z)
        return (self.x & both) == (other.x & both) and (self.z & both) == (other.z & both)

    def __mul__(self, other: "PauliString") -> tuple[complex, "PauliString"]:
        """Return ``(phase, string)`` with ``self @ other == phase * string``."""
        x, z = self.x ^ other.x, self.z ^ other.z
        k = ((self.x & self.z).bit_count() + (other.x & other.z).bit_count()
             + 2 * (self.z & other.x).bit_count() - (x & z).bit_count())
        return 1j ** (k % 4), PauliString(max(self.width, other.width), x, z)


@dataclass(frozen=True, eq=False)
class PauliSum:
    """A weighted sum of Pauli strings plus an identity offset.

    Terms are merged, truncated (``|c| < TRUNCATION`` dropped) and sorted by
    their symplectic key on construction, so two sums describing the same
    operator have identical arrays.
    """

    width: int
    x: np.ndarray
    z: np.ndarray
    coeffs: np.ndarray
    identity_offset: complex = 0.0
    threshold: float = field(default=TRUNCATION, repr=False)

    def __post_init__(self):
        if self.width > 62:
            raise CapabilityError("PauliSum supports at most 62 qubits")
        x = np.asarray(self.x, dtype=np.int64).ravel()
        z = np.asarray(self.z, dtype=np.int64).ravel()
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if not (len(x) == len(z) == len(c)):
            raise ValueError("x, z and coeffs must have equal length")
        if len(x) and (max(x.max(), z.max()) >> self.width):
            raise ValueError("Pauli mask exceeds width")
        offset = complex(self.identity_offset)
        ident = (x == 0) & (z == 0)
        if ident.any():
            offset += c[ident].sum()
            x, z, c = x[~ident], z[~ident], c[~ident]
        if len(c):
            key = (x << self.width) | z
            uniq, inv = np.unique(key, return_inverse=True)
            c = (np.bincount(inv, weights=c.real, minlength=len(uniq))
                 + 1j * np.bincount(inv, weights=c.imag, minlength=len(uniq)))
            x, z = uniq >> self.width, uniq & ((1 << self.width) - 1)
            keep = np.abs(c) >= self.threshold
            x, z, c = x[keep], z[keep], c[keep]
        for arr in (x, z, c):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "identity_offset", offset)

    # construction helpers -------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, "PauliString | str"]],
                   width: int, identity_offset: complex = 0.0) -> "PauliSum":
        xs, zs, cs = [], [], []
        for coef, s in terms:
            if isinstance(s, str):
                s = PauliString.from_label(s, width)
            xs.append(s.x)
            zs.append(s.z)
            cs.append(coef)
        return cls(width, np.array(xs, dtype=np.int64), np.array(zs, dtype=np.int64),
                   np.array(cs, dtype=complex), identity_offset)

    @classmethod
    def from_text(cls, text: str, width: int) -> "PauliSum":
        """Inverse of :meth:`to_text`."""
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                head, _, label = line.partition(")")
                re_s, im_s = head.lstrip("(").split(",")
                terms.append((complex(float(re_s), float(im_s)),
                              PauliString.from_label(label.strip(), width)))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse {line!r}") from exc
        return cls.from_terms(terms, width)

    def to_text(self) -> str:
        lines = []
        if self.identity_offset != 0:
            c = complex(self.identity_offset)
            lines.append(f"({c.real!r},{c.imag!r}) I")
        for c, s in self.terms:
            c = complex(c)
            lines.append(f"({c.real!r},{c.imag!r}) {s}")
        return "\n".join(lines) + "\n"

    # views ----------------------------------------------------------------

    def __len__(self):
        return len(self.coeffs)

    @property
    def terms(self) -> list[tuple[complex, PauliString]]:
        return [(complex(c), PauliString(self.width, int(x), int(z)))
                for c, x, z in zip(self.coeffs, self.x, self.z)]

    def string(self, i: int) -> PauliString:
        return PauliString(self.width, int(self.x[i]), int(self.z[i]))

    def subset(self, indices, with_offset: bool = False) -> "PauliSum":
        idx = np.asarray(indices, dtype=np.int64)
        return PauliSum(self.width, self.x[idx], self.z[idx], self.coeffs[idx],
                        self.identity_offset if with_offset else 0.0, self.threshold)

    def canonical_labels(self) -> list[str]:
        return [self.string(i).dense_label() for i in range(len(self))]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return (float(np.max(np.abs(self.coeffs.imag), initial=0.0)) < tol
                and abs(self.identity_offset.imag) < tol)

    def real_part(self) -> "PauliSum":
        return PauliSum(self.width, self.x, self.z, self.coeffs.real.astype(complex),
                        self.identity_offset.real, self.threshold)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.width != other.width:
            raise ValueError("width mismatch")
        return PauliSum(self.width, np.concatenate([self.x, other.x]),
                        np.concatenate([self.z, other.z]),
                        np.concatenate([self.coeffs, other.coeffs]),
                        self.identity_offset + other.identity_offset, self.threshold)

    def __mul__(self, scalar) -> "PauliSum":
        return PauliSum(self.width, self.x, self.z, self.coeffs * scalar,
                        self.identity_offset * scalar, self.threshold)

    __rmul__ = __mul__

    # linear algebra -------------------------------------------------------

    def _phased(self):
        """Coefficients of the ``X**x Z**z`` monomials."""
        return self.coeffs * (1j ** (_popcount(self.x & self.z) % 4))

    def _x_groups(self):
        order = np.argsort(self.x, kind="stable")
        xs = self.x[order]
        cuts = np.flatnonzero(np.diff(xs)) + 1
        return [(int(xs[s]), order[s:e]) for s, e in
                zip(np.r_[0, cuts], np.r_[cuts, len(xs)]) if e > s]

    def x_diagonals(self):
        """Yield ``(x, d)`` with ``H = sum_x X**x diag(d_x)`` on basis indices."""
        b = np.arange(1 << self.width, dtype=np.int64)
        phased = self._phased()
        for xmask, members in self._x_groups():
            d = np.zeros(1 << self.width, dtype=complex)
            for i in members:
                parity = _popcount(b & self.z[i]) & 1
                d += phased[i] * (1 - 2 * parity)
            yield xmask, d

    def to_sparse(self, max_width: int = 22) -> sp.csr_matrix:
        if self.width > max_width:
            raise CapabilityError(f"sparse matrix limited to {max_width} qubits")
        dim = 1 << self.width
        b = np.arange(dim, dtype=np.int64)
        rows, cols, data = [b], [b], [np.full(dim, self.identity_offset)]
        for xmask, d in self.x_diagonals():
            if xmask == 0:
                data[0] = data[0] + d
                continue
            rows.append(b ^ xmask)
            cols.append(b)
            data.append(d)
        mat = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows),
                                                    np.concatenate(cols))),
                            shape=(dim, dim))
        mat.sum_duplicates()
        return mat

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Matrix-free ``H @ state``."""
        state = np.asarray(state, dtype=complex)
        if state.shape != (1 << self.width,):
            raise ValueError("state dimension does not match width")
        out = self.identity_offset * state
        for xmask, d in self.x_diagonals():
            out = out + (d * state)[np.arange(len(state)) ^ xmask]
        return out

    def matrix_element(self, row: int, col: int) -> complex:
        """``<row| H |col>`` for computational basis indices."""
        sel = self.x == (row ^ col)
        val = complex(self.identity_offset) if row == col else 0j
        if sel.any():
            parity = _popcount(self.z[sel] & col) & 1
            val += complex(np.sum(self._phased()[sel] * (1 - 2 * parity)))
        return val

    def expectation(self, state: np.ndarray) -> complex:
        return complex(np.vdot(state, self.apply(state)))


def pauli_matrix(psum: PauliSum) -> np.ndarray:
    """Dense ``2**width`` square matrix of a Pauli sum."""
    if psum.width > DENSE_WIDTH_LIMIT:
        raise CapabilityError(
            f"dense matrix requested for {psum.width} qubits (limit {DENSE_WIDTH_LIMIT})")
    return psum.to_sparse().toarray()


# ---------------------------------------------------------------------------
# Jordan-Wigner
# ---------------------------------------------------------------------------


def _ladder_monomials(modes: np.ndarray, dagger: bool):
    """JW of ``c_p`` / ``c+_p`` as two ``X**x Z**z`` monomials per mode.

    ``c_p = Z_<p X_p (1 - Z_p) / 2`` and ``c+_p = Z_<p X_p (1 + Z_p) / 2``.
    Returns arrays of shape ``(len(modes), 2)`` for x, z and coefficients.
    """
    e = np.left_shift(np.int64(1), modes)
    below = e - 1
    x = np.stack([e, e], axis=1)
    z = np.stack([below, below | e], axis=1)
    c = np.array([0.5, 0.5 if dagger else -0.5])
    return x, z, np.broadcast_to(c, x.shape)


def _jw_products(n, values, mode_cols, daggers):
    """JW of ``sum_k values[k] * prod_j ladder(mode_cols[j][k])``."""
    m = len(values)
    x = np.zeros((m, 1), dtype=np.int64)
    z = np.zeros((m, 1), dtype=np.int64)
    c = np.asarray(values, dtype=complex).reshape(m, 1)
    for modes, dag in zip(mode_cols, daggers):
        lx, lz, lc = _ladder_monomials(np.asarray(modes, dtype=np.int64), dag)
        # (X^a Z^b)(X^c Z^d) = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        sign = 1 - 2 * (_popcount(z[:, :, None] & lx[:, None, :]) & 1)
        x = (x[:, :, None] ^ lx[:, None, :]).reshape(m, -1)
        z = (z[:, :, None] ^ lz[:, None, :]).reshape(m, -1)
        c = (c[:, :, None] * lc[:, None, :] * sign).reshape(m, -1)
    x, z, c = x.ravel(), z.ravel(), c.ravel()
    # X^x Z^z = (-i)^{|x & z|} P(x, z)
    c = c * ((-1j) ** (_popcount(x & z) % 4))
    return x, z, c


def jordan_wigner(tensors: CoefficientTensors, threshold: float = TRUNCATION) -> PauliSum:
    """Qubit representation of the fermion operator held by ``tensors``."""
    n = tensors.n_spin_orbitals
    xs, zs, cs = [], [], []
    pq = np.argwhere(tensors.one_body != 0)
    if len(pq):
        x, z, c = _jw_products(n, tensors.one_body[pq[:, 0], pq[:, 1]],
                               [pq[:, 0], pq[:, 1]], [True, False])
        xs.append(x), zs.append(z), cs.append(c)
    idx, val = tensors.two_body_indices, tensors.two_body_values
    if len(val):
        p, q, r, s = idx.T
        if tensors.convention == EQ5:
            cols, dags = [p, q, r, s], [True, False, True, False]
        else:
            cols, dags = [p, r, s, q], [True, True, False, False]
        # chunks bound the (m, 16) intermediates
        for start in range(0, len(val), 65536):
            sl = slice(start, start + 65536)
            x, z, c = _jw_products(n, 0.5 * val[sl], [col[sl] for col in cols], dags)
            xs.append(x), zs.append(z), cs.append(c)
    if not xs:
        return PauliSum(n, [], [], [], tensors.constant, threshold)
    return PauliSum(n, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs),
                    tensors.constant, threshold)
