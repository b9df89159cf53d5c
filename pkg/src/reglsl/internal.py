"""Background snapshot bases and data-generated internal solutions.

The key approximation of the method: orthogonalized snapshots depend only
weakly on the medium, so the unknown perturbed snapshots can be rebuilt from
background solves and the two ROM Lanczos factorizations,
``U = V0 Z Q0 Q^{-1} Z^T`` with ``Q^{-1} = Q^T M`` from M-orthogonality.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .forward import (GridSpec, SourceSet, assemble_operator, background_field,
                      solve_resolvent)
from .lanczos import LanczosFactors


@dataclass(frozen=True)
class SnapshotMatrix:
    """Grid-sampled fields, one column per (spectral point, source) pair.

    Columns are ordered spectral-point major: column ``j*K + r`` belongs to
    ``lambdas[j]`` and source ``r``.
    """

    grid: GridSpec
    columns: np.ndarray  # (grid.size, m*K)
    lambdas: np.ndarray
    n_sources: int
    provenance: str  # "true" | "background" | "data_generated"

    def column(self, j: int, r: int = 0) -> np.ndarray:
        return self.columns[:, j * self.n_sources + r]


def background_basis(grid: GridSpec, kind: str, lambdas, sources: SourceSet) -> SnapshotMatrix:
    """Exact discrete background solutions (p=0 or n=1) at every (lam, source)."""
    lam = np.asarray(lambdas, dtype=float)
    op = assemble_operator(grid, background_field(grid, kind))
    cols = np.empty((grid.size, lam.size * sources.count))
    for j, lj in enumerate(lam):
        cols[:, j * sources.count:(j + 1) * sources.count] = solve_resolvent(op, lj, sources)
    return SnapshotMatrix(grid, cols, lam, sources.count, "background")


def data_internal_solutions(v0: SnapshotMatrix, basis: np.ndarray,
                            factors0: LanczosFactors,
                            factors: LanczosFactors) -> SnapshotMatrix:
    """Data-generated internal snapshots ``V0 Z Q0 Q^{-1} Z^T``.

    ``factors0`` comes from the projected background ROM and ``factors`` from
    the perturbed truncated ROM; both must be complete factorizations of the
    same reduced size.
    """
    q0 = factors0.vectors
    if q0.shape != factors.vectors.shape:
        raise ValueError("background and perturbed factorizations disagree in size")
    if basis.shape[1] != q0.shape[0]:
        raise ValueError("eigenvector basis incompatible with factorizations")
    left = (v0.columns @ basis) @ q0
    cols = left @ (factors.inverse() @ basis.T)
    return SnapshotMatrix(v0.grid, cols, v0.lambdas, v0.n_sources, "data_generated")


def siso_internal_at(lam: float, basis_columns: np.ndarray, factors: LanczosFactors,
                     derivative: bool = False) -> np.ndarray:
    """Internal solution at arbitrary lam from the tridiagonal representation.

    Evaluates ``sqrt(b^T M^{-1} b) * basis (T + lam I)^{-1} e_1``; with
    ``derivative=True`` returns its lam-derivative (one more shifted solve).
    The basis columns are the orthogonalized snapshots, ``V0 Q0`` or
    ``V0 Z Q0`` after truncation.
    """
    if factors.block_width != 1 or factors.source_norm is None:
        raise ValueError("scalar factorization required")
    t = factors.tridiagonal
    if basis_columns.shape[1] != t.shape[0]:
        raise ValueError("basis incompatible with factorization")
    shifted = t + lam * np.eye(t.shape[0])
    coeff = sla.solve(shifted, np.eye(t.shape[0])[:, 0])
    if derivative:
        coeff = -sla.solve(shifted, coeff)
    return factors.source_norm * (basis_columns @ coeff)


def write_snapshots(directory, snapshots: SnapshotMatrix, prefix: str = "snapshot") -> list:
    """Export one CSV per spectral point, columns x[,y],s1..sK."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pts = snapshots.grid.points()
    coords = ["x", "y"][: snapshots.grid.dimension]
    k = snapshots.n_sources
    written = []
    for j, lam in enumerate(snapshots.lambdas):
        path = directory / f"{prefix}_{j + 1:02d}.csv"
        block = snapshots.columns[:, j * k:(j + 1) * k]
        header = ",".join(coords + [f"s{r + 1}" for r in range(k)])
        with open(path, "w") as handle:
            handle.write(f"# lambda = {lam:.17g}\n{header}\n")
            for row in range(pts.shape[0]):
                entries = [f"{v:.17g}" for v in pts[row]] + [f"{v:.17g}" for v in block[row]]
                handle.write(",".join(entries) + "\n")
        written.append(path)
    return written
