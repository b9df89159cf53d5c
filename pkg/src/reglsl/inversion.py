"""Linearized Lippmann-Schwinger system assembly and solution.

Three modes share one row structure ``delta_F = <kernel, coefficient>``:

* ``born``    - kernels from background fields on both sides (the classical
  linearization baseline);
* ``lsl``     - data-generated internal solution on one side, no Gramian
  truncation, and (for single-source problems) additional derivative rows;
* ``reg_lsl`` - Gramian-truncated ROM internal solutions, value rows only.

Helmholtz rows carry the spectral point as a factor and solve for ``n - 1``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import BreakdownError, ConfigError
from .forward import (HELMHOLTZ, GridSpec, SourceSet, TransferDataset,
                      assemble_operator, background_field, generate_dataset,
                      shifted_solver, trapezoid_weights)
from .internal import (SnapshotMatrix, background_basis, data_internal_solutions,
                       siso_internal_at)
from .lanczos import LanczosFactors, block_lanczos, m_symmetric_lanczos
from .linalg import truncated_pinv_solve
from .regularization import project_background, truncate_gramian
from .rom import build_rom

MODES = ("born", "lsl", "reg_lsl")

# Keeps every strictly positive Gramian eigenvalue; the plain-LSL setting.
POSITIVE_EIGENVALUE_FLOOR = 5e-324


@dataclass(frozen=True)
class LslSystem:
    """Quadrature-weighted kernel rows against the data misfit vector."""

    rows: np.ndarray  # (R, grid.size); row @ field = discrete integral
    rhs: np.ndarray  # (R,)
    mode: str
    kind: str
    row_info: tuple  # (lam, source r, source s, derivative flag) per row

    @property
    def row_count(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ReconstructionResult:
    """Estimated coefficient perturbation on the forward grid."""

    field: np.ndarray  # p estimate, or n - 1 for Helmholtz
    mode: str
    kind: str
    gramian_threshold: float | None
    pinv_threshold: float
    residual: float
    row_count: int
    diagnostics: dict

    @property
    def helmholtz_index(self) -> np.ndarray:
        """n estimate (only meaningful for the Helmholtz kind)."""
        return 1.0 + self.field


@dataclass(frozen=True)
class SisoDerivativeContext:
    """Everything needed for the derivative rows of the original method."""

    basis: np.ndarray  # orthogonalized background snapshots, (grid.size, l)
    factors: LanczosFactors  # perturbed-ROM factorization


def _background_derivatives(u0: SnapshotMatrix, kind: str) -> np.ndarray:
    """du0/dlam columnwise via the resolvent identity (one extra solve each)."""
    op = assemble_operator(u0.grid, background_field(u0.grid, kind))
    out = np.empty_like(u0.columns)
    k = u0.n_sources
    for j, lam in enumerate(u0.lambdas):
        lu = shifted_solver(op, lam)
        for r in range(k):
            col = u0.columns[:, j * k + r]
            out[:, j * k + r] = -lu.solve(op.mass_diag * col)
    return out


def assemble_system(u0: SnapshotMatrix, u_hat: SnapshotMatrix | None,
                    data: TransferDataset, data0: TransferDataset, mode: str,
                    kind: str, derivative_ctx: SisoDerivativeContext | None = None,
                    ) -> LslSystem:
    """Build the linear system ``F0 - F = <kernel, coefficient>``.

    Kernels are ``u0^(r) * uhat^(s)`` times the quadrature weights, kept for
    source pairs r <= s only (the data blocks are symmetric).  In born mode
    the background fields stand in for ``uhat``.  For single-source plain LSL
    the derivative rows of the original formulation are appended; requesting
    them for a multi-source system raises ``ConfigError``.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown inversion mode {mode!r}")
    if mode == "born":
        u_hat = u0
    if u_hat is None:
        raise ConfigError(f"mode {mode!r} needs data-generated internal solutions")
    k = data.n_sources
    weights = trapezoid_weights(u0.grid)
    misfit = data0.transfer - data.transfer

    rows, rhs, info = [], [], []
    for j, lam in enumerate(data.lambdas):
        factor = lam if kind == HELMHOLTZ else 1.0
        for r in range(k):
            for s in range(r, k):
                kernel = u0.column(j, r) * u_hat.column(j, s) * weights
                rows.append(factor * kernel)
                rhs.append(misfit[j, r, s])
                info.append((float(lam), r, s, False))

    if derivative_ctx is not None and mode != "born":
        if k != 1:
            raise ConfigError("derivative rows are only defined for single-source systems")
        dmisfit = data0.derivative - data.derivative
        du0 = _background_derivatives(u0, kind)
        for j, lam in enumerate(data.lambdas):
            u0_j = u0.column(j, 0)
            uhat_j = u_hat.column(j, 0)
            duhat_j = siso_internal_at(lam, derivative_ctx.basis,
                                       derivative_ctx.factors, derivative=True)
            product_rule = du0[:, j] * uhat_j + u0_j * duhat_j
            if kind == HELMHOLTZ:
                kernel = (u0_j * uhat_j + lam * product_rule) * weights
            else:
                kernel = product_rule * weights
            rows.append(kernel)
            rhs.append(dmisfit[j, 0, 0])
            info.append((float(lam), 0, 0, True))

    return LslSystem(np.array(rows), np.array(rhs), mode, kind, tuple(info))


def solve_reconstruction(system: LslSystem, rel_threshold: float,
                         diagnostics: dict | None = None) -> ReconstructionResult:
    """Minimal-norm truncated-pseudoinverse solve of the LS system."""
    field = truncated_pinv_solve(system.rows, system.rhs, rel_threshold)
    residual = float(np.linalg.norm(system.rows @ field - system.rhs))
    info = dict(diagnostics or {})
    return ReconstructionResult(
        field=field, mode=system.mode, kind=system.kind,
        gramian_threshold=info.get("gramian_threshold"),
        pinv_threshold=float(rel_threshold), residual=residual,
        row_count=system.row_count, diagnostics=info,
    )


def invert_dataset(data: TransferDataset, data0: TransferDataset, sources: SourceSet,
                   mode: str, pinv_threshold: float,
                   gramian_threshold: float | None = None,
                   gramian_relative: bool = False) -> ReconstructionResult:
    """Run one inversion mode end to end on a dataset pair."""
    if mode not in MODES:
        raise ConfigError(f"unknown inversion mode {mode!r}")
    if mode == "reg_lsl" and gramian_threshold is None:
        raise ConfigError("reg_lsl requires a Gramian truncation threshold")
    kind = data.kind
    started = time.perf_counter()
    v0 = background_basis(data.grid, kind, data.lambdas, sources)
    diagnostics: dict = {"mode": mode}

    if mode == "born":
        system = assemble_system(v0, None, data, data0, mode, kind)
        diagnostics["gramian_threshold"] = None
        result = solve_reconstruction(system, pinv_threshold, diagnostics)
    else:
        rom = build_rom(data)
        rom0 = build_rom(data0)
        if mode == "reg_lsl":
            alpha, relative = gramian_threshold, gramian_relative
        else:
            alpha, relative = POSITIVE_EIGENVALUE_FLOOR, False
        try:
            result = _rom_modes(v0, rom, rom0, data, data0, mode, kind, alpha,
                                relative, pinv_threshold, diagnostics)
        except BreakdownError:
            if mode != "lsl":
                raise
            # untruncated pencil too degenerate to factor; retry a decade
            # above the numerical-rank floor of the Gramian
            diagnostics["breakdown_retry"] = True
            retry = 10.0 * rom.size * np.finfo(float).eps
            result = _rom_modes(v0, rom, rom0, data, data0, mode, kind,
                                retry, True, pinv_threshold, diagnostics)
    elapsed = time.perf_counter() - started
    return replace(result, diagnostics={**result.diagnostics, "wall_time_s": elapsed})


def _rom_modes(v0, rom, rom0, data, data0, mode, kind, alpha, relative,
               pinv_threshold, diagnostics) -> ReconstructionResult:
    truncated = truncate_gramian(rom, alpha, relative=relative)
    background = project_background(rom0, truncated)
    diagnostics.update(
        gramian_threshold=alpha if mode == "reg_lsl" else None,
        retained=truncated.retained,
        sigma_max=float(truncated.sigmas[0]),
        sigma_min=float(truncated.sigmas[-1]),
    )
    k = data.n_sources
    if k == 1:
        factors = m_symmetric_lanczos(truncated.mass, truncated.stiffness, truncated.rhs)
        factors0 = m_symmetric_lanczos(background.mass, background.stiffness, background.rhs)
    else:
        factors = block_lanczos(truncated.mass, truncated.stiffness, truncated.rhs)
        factors0 = block_lanczos(background.mass, background.stiffness, background.rhs)
    if not (factors.complete and factors0.complete):
        raise BreakdownError(
            "Lanczos breakdown in the reduced pencil",
            step=factors.breakdown_step or factors0.breakdown_step,
        )
    diagnostics["orthogonality_defect"] = max(
        factors.orthogonality_defect(), factors0.orthogonality_defect()
    )

    ctx = None
    if k == 1:
        # single-source problems follow the original formulation: internal
        # solutions from the tridiagonal representation, and derivative rows
        # appended to the system (without them the m value rows cannot
        # localize the perturbation)
        basis = (v0.columns @ truncated.basis) @ factors0.vectors
        cols = np.column_stack(
            [siso_internal_at(lam, basis, factors) for lam in data.lambdas]
        )
        u_hat = SnapshotMatrix(v0.grid, cols, v0.lambdas, 1, "data_generated")
        ctx = SisoDerivativeContext(basis=basis, factors=factors)
    else:
        u_hat = data_internal_solutions(v0, truncated.basis, factors0, factors)

    system = assemble_system(v0, u_hat, data, data0, mode, kind, derivative_ctx=ctx)
    return solve_reconstruction(system, pinv_threshold, diagnostics)


def relative_l2_error(grid: GridSpec, estimate: np.ndarray, truth: np.ndarray) -> float:
    """Quadrature-weighted relative L2 distance between two grid fields."""
    w = trapezoid_weights(grid)
    denom = np.sqrt(w @ truth**2)
    if denom == 0.0:
        return float(np.sqrt(w @ estimate**2))
    return float(np.sqrt(w @ (estimate - truth) ** 2) / denom)


def compare_modes(grid: GridSpec, coefficient, sources: SourceSet, lambdas,
                  modes, pinv_thresholds: dict, gramian_threshold: float,
                  gramian_relative: bool = False,
                  data: TransferDataset | None = None,
                  data0: TransferDataset | None = None) -> dict:
    """Run several modes on identical data; report fields and L2 errors.

    ``pinv_thresholds`` maps mode name to its pseudoinverse cutoff.  Datasets
    are simulated from ``coefficient`` unless passed in explicitly.
    """
    if data is None:
        data = generate_dataset(grid, coefficient, lambdas, sources)
    if data0 is None:
        data0 = generate_dataset(grid, background_field(grid, coefficient.kind),
                                 lambdas, sources)
    base = 0.0 if coefficient.kind != HELMHOLTZ else 1.0
    truth = coefficient.values - base
    out = {}
    for mode in modes:
        result = invert_dataset(
            data, data0, sources, mode, pinv_thresholds[mode],
            gramian_threshold=gramian_threshold, gramian_relative=gramian_relative,
        )
        out[mode] = (result, relative_l2_error(grid, result.field, truth))
    return out
