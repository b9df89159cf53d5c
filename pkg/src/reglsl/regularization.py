"""ROM regularization by spectral truncation of the Gramian.

The perturbed (measured) ROM is projected onto the dominant eigenvectors of
its mass matrix; the background ROM is then projected onto the *same* basis
so that the two stay consistent.  Truncation restores positive definiteness
of the pencil when data errors have made the Gramian indefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BreakdownError, EmptyModelError
from .linalg import sym_eig
from .rom import RomMatrices


@dataclass(frozen=True)
class TruncatedRom:
    """ROM projected onto retained Gramian eigenvectors Z.

    For the perturbed ROM the projected mass is exactly ``diag(sigmas)``; a
    background ROM projected through the same Z keeps a full (but SPD) mass.
    """

    basis: np.ndarray  # Z, (mK, l), orthonormal columns
    sigmas: np.ndarray  # retained eigenvalues of the perturbed Gramian
    mass: np.ndarray  # (l, l)
    stiffness: np.ndarray  # (l, l)
    rhs: np.ndarray  # (l, K)
    threshold: float
    lambdas: np.ndarray
    n_sources: int
    kind: str

    @property
    def retained(self) -> int:
        return self.sigmas.size


def truncate_gramian(rom: RomMatrices, threshold: float, relative: bool = False) -> TruncatedRom:
    """Project the ROM onto Gramian eigenvectors with eigenvalues >= threshold.

    Negative eigenvalues are always discarded.  ``relative=True`` interprets
    the threshold as a fraction of the largest eigenvalue; the default is the
    absolute convention used when quoting truncation levels against O(1)
    transfer data.
    """
    if threshold <= 0:
        raise ValueError(f"truncation threshold must be positive, got {threshold}")
    eig = sym_eig(rom.mass)
    sigma_max = eig.eigenvalues[0]
    cut = threshold * sigma_max if relative else threshold
    # eigenvalues inside the roundoff radius of the eigensolve cannot be
    # certified positive; they are dropped no matter how small the threshold
    floor = rom.mass.shape[0] * np.finfo(float).eps * max(sigma_max, 0.0)
    keep = eig.eigenvalues >= max(cut, floor)
    keep &= eig.eigenvalues > 0.0
    l = int(np.count_nonzero(keep))
    if l == 0:
        raise EmptyModelError(
            f"threshold {cut:.3e} is above the largest Gramian eigenvalue {sigma_max:.3e}",
            sigma_max=float(sigma_max),
        )
    z = eig.eigenvectors[:, :l]
    sigmas = eig.eigenvalues[:l]
    # project numerically, exactly as the background projection does: the
    # result is diagonal up to roundoff, and identical perturbed/background
    # inputs then flow through bitwise-identical factorizations downstream
    mass = z.T @ rom.mass @ z
    stiff = z.T @ rom.stiffness @ z
    return TruncatedRom(
        basis=z,
        sigmas=sigmas,
        mass=0.5 * (mass + mass.T),
        stiffness=0.5 * (stiff + stiff.T),
        rhs=z.T @ rom.rhs,
        threshold=float(threshold),
        lambdas=rom.lambdas,
        n_sources=rom.n_sources,
        kind=rom.kind,
    )


def project_background(rom0: RomMatrices, truncated: TruncatedRom) -> TruncatedRom:
    """Project the background ROM onto the perturbed ROM's retained basis.

    The background Gramian is exact up to solver precision, but it must be
    reduced with the same Z as the measured ROM; an indefinite projection
    signals inconsistent background data.
    """
    z = truncated.basis
    if rom0.size != z.shape[0] or rom0.n_sources != truncated.n_sources:
        raise ValueError("background ROM incompatible with truncation basis")
    mass = z.T @ rom0.mass @ z
    mass = 0.5 * (mass + mass.T)
    smallest = float(np.linalg.eigvalsh(mass)[0])
    if smallest <= 0.0:
        raise BreakdownError(
            f"projected background mass is not SPD (eigenvalue {smallest:.6e})",
            value=smallest,
        )
    stiff = z.T @ rom0.stiffness @ z
    return TruncatedRom(
        basis=z,
        sigmas=truncated.sigmas,
        mass=mass,
        stiffness=0.5 * (stiff + stiff.T),
        rhs=z.T @ rom0.rhs,
        threshold=truncated.threshold,
        lambdas=rom0.lambdas,
        n_sources=rom0.n_sources,
        kind=rom0.kind,
    )
