"""Finite-difference Schrodinger operator -Laplace + V on the periodic grid."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import EmptySpectrum, GridMismatch, NumericalError, TooLargeForDense

DENSE_DOF_LIMIT = 4096
# relative to the spectral-radius bound, see count_tolerance
COUNT_RTOL = 1e-9


class DiscreteOperator:
    """(Lf)_i = h^-2 (2d f_i - sum_{j~i} f_j) + V_i f_i with inner product h^d sum f g."""

    def __init__(self, grid, potential):
        self.grid = grid
        values = getattr(potential, "values", potential)
        V = np.array(grid.check_field(values), dtype=np.float64)
        V.setflags(write=False)
        self.potential = potential
        self.V = V
        self.inv_h2 = 1.0 / grid.spacing_h ** 2

    def _check(self, f):
        f = np.asarray(f, dtype=np.float64)
        try:
            return self.grid.check_field(f)
        except GridMismatch:
            raise GridMismatch(f"function of shape {f.shape} is not on grid {self.grid.shape}") from None

    def apply(self, f):
        return _kernels.stencil_apply(self._check(f), self.V, self.inv_h2)

    def inner(self, f, g):
        return self.grid.cell_volume * float(np.vdot(self._check(f), self._check(g)))

    def edge_energy(self, f):
        """sum over forward edges of (f_i - f_j)^2, unscaled."""
        f = self._check(f)
        return float(sum(np.sum((f - np.roll(f, -1, axis=a)) ** 2) for a in range(f.ndim)))

    def quadratic_form(self, f):
        f = self._check(f)
        hd = self.grid.cell_volume
        return hd * (self.inv_h2 * self.edge_energy(f) + float(np.sum(self.V * f * f)))

    def spectral_bound(self):
        """Upper bound on the largest eigenvalue (Gershgorin)."""
        return 4.0 * self.grid.dim * self.inv_h2 + float(self.V.max())

    def count_tolerance(self):
        return COUNT_RTOL * self.spectral_bound()

    def matrix(self):
        """Assembled sparse matrix in CSR form (duplicates summed for tiny axes)."""
        g = self.grid
        N = g.total_points
        idx = np.arange(N).reshape(g.shape)
        rows = [idx.ravel()]
        cols = [idx.ravel()]
        vals = [2.0 * g.dim * self.inv_h2 + self.V.ravel()]
        for axis in range(g.dim):
            for step in (1, -1):
                rows.append(idx.ravel())
                cols.append(np.roll(idx, -step, axis=axis).ravel())
                vals.append(np.full(N, -self.inv_h2))
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N))
        return A.tocsr()


def apply(op, f):
    return op.apply(f)


def quadratic_form(op, f):
    return op.quadratic_form(f)


def quadratic_form_via_apply(op, f):
    return op.inner(op.apply(f), f)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    method: str
    dof: int
    atol: float = 0.0

    def count_below(self, mu, atol=0.0):
        """Number of eigenvalues <= mu + atol, with multiplicity."""
        return int(np.searchsorted(self.eigenvalues, mu + atol, side="right"))


def eigen_dense(op, dense_dof_limit=DENSE_DOF_LIMIT):
    N = op.grid.total_points
    if N > dense_dof_limit:
        raise TooLargeForDense(f"{N} degrees of freedom exceed the dense limit {dense_dof_limit}")
    lam = scipy.linalg.eigvalsh(op.matrix().toarray(), check_finite=False)
    lam = np.sort(lam)
    lam.setflags(write=False)
    return Spectrum(lam, "dense", N, op.count_tolerance())


def count_by_inertia(op, mu):
    """Sylvester inertia of A - sigma I from a symmetric sparse LU without pivoting."""
    sigma = mu + op.count_tolerance()
    N = op.grid.total_points
    A = op.matrix() - sigma * sp.identity(N, format="csr")
    try:
        lu = splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise NumericalError(f"factorization of A - {sigma:g} I failed: {exc}") from None
    d = lu.U.diagonal()
    if np.any(d == 0):
        raise NumericalError(f"zero pivot at shift {sigma:g}")
    return int(np.count_nonzero(d < 0))


def count_eigenvalues_below(op, mu, spectrum=None, backend="dense",
                            dense_dof_limit=DENSE_DOF_LIMIT):
    """Count eigenvalues <= mu, with multiplicity.

    ``backend="inertia"`` avoids the dense eigensolver entirely and works
    past ``dense_dof_limit``.
    """
    if backend == "inertia":
        return count_by_inertia(op, mu)
    if spectrum is None:
        spectrum = eigen_dense(op, dense_dof_limit)
    if spectrum.eigenvalues.size == 0:
        raise EmptySpectrum("spectrum has no eigenvalues")
    return spectrum.count_below(mu, op.count_tolerance())


def dump_matrix(op, path):
    """Write the assembled matrix as ``row col value`` lines (0-based)."""
    A = op.matrix().tocoo()
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
