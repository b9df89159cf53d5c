"""Regularized Lippmann-Schwinger-Lanczos inversion.

From frequency-domain transfer-function data alone: build a data-driven
reduced-order model, regularize it by Gramian truncation, reconstruct the
internal wave fields, and solve the linearized Lippmann-Schwinger system to
image a Schrodinger potential or Helmholtz coefficient.
"""

from .forward import (CoefficientField, GridSpec, SourceSet, TransferDataset,
                      add_noise, assemble_operator, background_field,
                      boundary_sources, gaussian_bump_field, generate_dataset,
                      point_sources, solve_resolvent, transfer_derivative,
                      transfer_function, trapezoid_weights)
from .internal import SnapshotMatrix, background_basis, data_internal_solutions, siso_internal_at
from .inversion import (LslSystem, ReconstructionResult, assemble_system,
                        compare_modes, invert_dataset, relative_l2_error,
                        solve_reconstruction)
from .lanczos import (LanczosFactors, block_lanczos, krylov_equivalence_check,
                      m_symmetric_lanczos, pencil_eigenvalues)
from .linalg import SymEigDecomposition, inv_sqrt_spd, sym_eig, truncated_pinv_solve
from .regularization import TruncatedRom, project_background, truncate_gramian
from .rom import RomMatrices, build_rom, rom_health, rom_transfer

__all__ = [
    "CoefficientField", "GridSpec", "SourceSet", "TransferDataset",
    "add_noise", "assemble_operator", "background_field", "boundary_sources",
    "gaussian_bump_field", "generate_dataset", "point_sources",
    "solve_resolvent", "transfer_derivative", "transfer_function",
    "trapezoid_weights", "SnapshotMatrix", "background_basis",
    "data_internal_solutions", "siso_internal_at", "LslSystem",
    "ReconstructionResult", "assemble_system", "compare_modes",
    "invert_dataset", "relative_l2_error", "solve_reconstruction",
    "LanczosFactors", "block_lanczos", "krylov_equivalence_check",
    "m_symmetric_lanczos", "pencil_eigenvalues", "SymEigDecomposition",
    "inv_sqrt_spd", "sym_eig", "truncated_pinv_solve", "TruncatedRom",
    "project_background", "truncate_gramian", "RomMatrices", "build_rom",
    "rom_health", "rom_transfer",
]

__version__ = "0.1.0"
