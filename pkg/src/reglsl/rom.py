"""Data-driven Galerkin ROM assembled from transfer data by divided differences.

The mass matrix is the (unknown) snapshot Gramian and the stiffness matrix the
energy Gramian; both are recovered exactly from the transfer blocks and their
derivatives without knowing the medium.  Blocks are ordered spectral-point
major: row/column ``j*K + r`` belongs to spectral point ``j`` and source ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import TransferDataset
from .linalg import sym_eig


@dataclass(frozen=True)
class RomMatrices:
    """Mass M, stiffness S (mK x mK, symmetric) and right-hand block B."""

    mass: np.ndarray
    stiffness: np.ndarray
    rhs: np.ndarray  # (mK, K), stacked transfer blocks
    lambdas: np.ndarray
    n_sources: int
    kind: str
    mass_asymmetry: float = 0.0  # relative, before symmetrization
    stiffness_asymmetry: float = 0.0

    @property
    def size(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class RomHealth:
    mass_eig_range: tuple
    stiffness_eig_range: tuple
    n_nonpositive_mass: int
    mass_asymmetry: float
    stiffness_asymmetry: float


def _relative_asymmetry(a: np.ndarray) -> float:
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - a.T).max() / scale)


def build_rom(data: TransferDataset) -> RomMatrices:
    """Assemble M, S, B from the transfer blocks by divided differences.

    Off-diagonal blocks:  M_ij = (F_i - F_j) / (lam_j - lam_i),
                          S_ij = (lam_j F_j - lam_i F_i) / (lam_j - lam_i).
    Diagonal blocks:      M_ii = -dF_i,  S_ii = F_i + lam_i dF_i.
    The result is symmetrized as (X + X^T)/2 before use.
    """
    lam = np.asarray(data.lambdas, dtype=float)
    if np.unique(lam).size != lam.size:
        raise ValueError("spectral points must be distinct")
    m, k = data.n_points, data.n_sources
    size = m * k
    mass = np.empty((size, size))
    stiff = np.empty((size, size))
    for i in range(m):
        ri = slice(i * k, (i + 1) * k)
        mass[ri, ri] = -data.derivative[i]
        stiff[ri, ri] = data.transfer[i] + lam[i] * data.derivative[i]
        for j in range(i + 1, m):
            rj = slice(j * k, (j + 1) * k)
            dlam = lam[j] - lam[i]
            mb = (data.transfer[i] - data.transfer[j]) / dlam
            sb = (lam[j] * data.transfer[j] - lam[i] * data.transfer[i]) / dlam
            mass[ri, rj] = mb
            mass[rj, ri] = mb.T
            stiff[ri, rj] = sb
            stiff[rj, ri] = sb.T
    m_asym = _relative_asymmetry(mass)
    s_asym = _relative_asymmetry(stiff)
    mass = 0.5 * (mass + mass.T)
    stiff = 0.5 * (stiff + stiff.T)
    rhs = data.transfer.reshape(size, k)
    return RomMatrices(mass, stiff, rhs, lam, k, data.kind,
                       mass_asymmetry=m_asym, stiffness_asymmetry=s_asym)


def rom_transfer(rom: RomMatrices, lam: float) -> np.ndarray:
    """Transfer function of the ROM, B^T (S + lam M)^{-1} B.

    Interpolates the data blocks exactly at the construction points.
    """
    pencil = rom.stiffness + lam * rom.mass
    coeff = np.linalg.solve(pencil, rom.rhs)
    return rom.rhs.T @ coeff


def rom_health(rom: RomMatrices) -> RomHealth:
    """Spectral diagnostics; noisy data may make the Gramian indefinite."""
    m_eigs = sym_eig(rom.mass).eigenvalues
    s_eigs = sym_eig(rom.stiffness).eigenvalues
    return RomHealth(
        mass_eig_range=(float(m_eigs[-1]), float(m_eigs[0])),
        stiffness_eig_range=(float(s_eigs[-1]), float(s_eigs[0])),
        n_nonpositive_mass=int(np.count_nonzero(m_eigs <= 0.0)),
        mass_asymmetry=rom.mass_asymmetry,
        stiffness_asymmetry=rom.stiffness_asymmetry,
    )
