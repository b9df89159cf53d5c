"""Dense symmetric/spectral linear-algebra kernels.

All routines are pure functions of their inputs and follow two conventions
used throughout the package: spectra are ordered descending, and eigenvector
signs are fixed so that the first nonzero component is positive.  Both make
downstream truncation indices and Lanczos bases reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BreakdownError


@dataclass(frozen=True)
class SymEigDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, paired with eigenvalues


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the first nonzero entry of each is positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def sym_eig(a: np.ndarray) -> SymEigDecomposition:
    """Eigendecomposition of a (nearly) symmetric matrix.

    The input is symmetrized as ``(A + A^T)/2`` before factorization; callers
    are expected to pass matrices that are symmetric up to roundoff.

    Parameters
    ----------
    a : (n, n) ndarray
        Square symmetric matrix.

    Returns
    -------
    SymEigDecomposition
        Eigenvalues sorted descending with matching orthonormal eigenvectors.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    sym = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    return SymEigDecomposition(vals, _fix_signs(vecs))


def truncated_pinv_solve(a: np.ndarray, rhs: np.ndarray, rel_threshold: float) -> np.ndarray:
    """Minimal-norm least-squares solve with relative singular value cutoff.

    Only singular triplets with ``s_i >= rel_threshold * s_max`` contribute.
    The threshold is relative to the largest singular value, which makes the
    solve invariant under uniform scaling of ``(a, rhs)``.

    Parameters
    ----------
    a : (m, n) ndarray
    rhs : (m,) ndarray
    rel_threshold : float
        Cutoff in ``[0, 1)``.

    Returns
    -------
    (n,) ndarray
        Truncated pseudoinverse solution; the zero vector when ``a`` is zero.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (a.shape[0],):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({a.shape[0]},)")
    if not 0.0 <= rel_threshold < 1.0:
        raise ValueError(f"rel_threshold must be in [0, 1), got {rel_threshold}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[1])
    keep = (s >= rel_threshold * s[0]) & (s > 0.0)
    coeff = (u[:, keep].T @ rhs) / s[keep]
    return vt[keep].T @ coeff


def inv_sqrt_spd(g: np.ndarray) -> np.ndarray:
    """Inverse symmetric square root ``G^{-1/2}`` of an SPD matrix.

    Raises
    ------
    BreakdownError
        If the smallest eigenvalue is not strictly positive.  In the block
        Lanczos polar normalization this signals insufficient Gramian
        truncation.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    sym = 0.5 * (g + g.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] <= 0.0:
        raise BreakdownError(
            f"matrix is not positive definite (eigenvalue {vals[0]:.6e})",
            value=float(vals[0]),
        )
    root = (vecs * vals**-0.5) @ vecs.T
    return 0.5 * (root + root.T)
