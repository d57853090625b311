"""Entanglement potential: log-negativity after a balanced beam splitter.

A phase-randomized state ``sum P(n) |n><n|`` mixed with vacuum on a 50:50
coupler becomes ``sum P(n) |psi_n><psi_n|`` with
``|psi_n> = sum_k sqrt(C(n, k) / 2**n) |k, n-k>``.  Only blocks of fixed
total phonon number are populated, and after transposing the second mode
the matrix splits into blocks of fixed ``i - j``, so the spectrum is found
block by block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .errors import DomainError
from .fock import PhononDistribution

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TwoModeDensityMatrix:
    """Operator on ``C^dim_a (x) C^dim_b``, index ``i * dim_b + j`` for ``|i, j>``.

    ``entries`` may be dense or any scipy sparse matrix.
    """

    dim_a: int
    dim_b: int
    entries: object

    def __post_init__(self):
        m = self.entries
        size = self.dim_a * self.dim_b
        if m.shape != (size, size):
            raise DomainError(f"matrix shape {m.shape} does not match dims {self.dim_a}x{self.dim_b}")
        m = sp.csr_matrix(m)
        diff = m - m.conj().T
        if diff.nnz and abs(diff).max() > HERMITIAN_TOL:
            raise DomainError(f"density matrix is not Hermitian (deviation {abs(diff).max():.2e})")
        object.__setattr__(self, "entries", m)

    @property
    def trace(self) -> float:
        return float(self.entries.diagonal().real.sum())

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()

    def element(self, i, j, k, l):
        """``<i, j| rho |k, l>``."""
        return self.entries[i * self.dim_b + j, k * self.dim_b + l]


def _binomial_amplitudes(n: int, signed: bool = False) -> np.ndarray:
    k = np.arange(n + 1)
    amp = np.exp(0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) - n * math.log(2)))
    if signed:
        amp = amp * (1.0 - 2.0 * (k % 2))
    return amp


def beamsplit_fock(d: PhononDistribution, signed: bool = False) -> TwoModeDensityMatrix:
    """Two-mode state produced by splitting ``d`` against vacuum.

    ``signed=True`` uses the alternating-sign amplitude convention instead
    of the all-positive one; the two differ by a local phase on one mode.
    """
    dim = d.n_max + 1
    rows, cols, vals = [], [], []
    for n, pn in enumerate(d.probs):
        if pn == 0:
            continue
        amp = _binomial_amplitudes(n, signed)
        k = np.arange(n + 1)
        idx = k * dim + (n - k)
        rows.append(np.repeat(idx, n + 1))
        cols.append(np.tile(idx, n + 1))
        vals.append(pn * np.outer(amp, amp).ravel())
    size = dim * dim
    if rows:
        m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
    else:
        m = sp.csr_matrix((size, size))
    return TwoModeDensityMatrix(dim, dim, m)


def partial_transpose(m: TwoModeDensityMatrix) -> sp.csr_matrix:
    """Transpose on the second mode: ``<ij|rho^PT|kl> = <il|rho|kj>``."""
    coo = m.entries.tocoo()
    db = m.dim_b
    i, j = np.divmod(coo.row, db)
    k, l = np.divmod(coo.col, db)
    return sp.csr_matrix((coo.data, (i * db + l, k * db + j)), shape=coo.shape)


def trace_norm_hermitian(h: sp.spmatrix) -> float:
    """Sum of absolute eigenvalues, diagonalizing each connected block separately."""
    h = sp.csr_matrix(h)
    pattern = (abs(h) > 0).astype(np.int8)
    n_comp, labels = connected_components(pattern, directed=False)
    total = 0.0
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_comp + 1))
    for c in range(n_comp):
        idx = order[bounds[c] : bounds[c + 1]]
        block = h[idx][:, idx].toarray()
        if block.shape[0] == 1:
            total += abs(block[0, 0].real)
        else:
            total += np.abs(np.linalg.eigvalsh(block)).sum()
    return float(total)


def log_negativity(m: TwoModeDensityMatrix) -> float:
    """``log2`` of the trace norm of the partial transpose, clamped at 0 within 1e-9."""
    value = math.log2(trace_norm_hermitian(partial_transpose(m)))
    if -1e-9 < value < 0:
        return 0.0
    return value


def entanglement_potential(d: PhononDistribution) -> float:
    """Log-negativity (bits) of ``d`` split against vacuum on a balanced beam splitter."""
    return log_negativity(beamsplit_fock(d))
