"""Finite-difference forward modeling and synthetic transfer-function data.

The Schrodinger problem ``-u'' + p u + lam u = g`` and the Helmholtz problem
``-Delta u + lam n u = g`` are discretized on uniform grids (interval in 1D,
square box in 2D) with homogeneous Neumann boundaries.  The discretization is
variational: the assembled stiffness operator is the ghost-node Laplacian
scaled row-wise by trapezoid quadrature weights, which makes it exactly
symmetric with constants in its null space, and the weight operator carries
the same quadrature weights times the coefficient.  Solutions are physical
nodal values; transfer data are quadrature inner products against the
sources.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import CoefficientError

SCHRODINGER = "schrodinger"
HELMHOLTZ = "helmholtz"
EQUATION_KINDS = (SCHRODINGER, HELMHOLTZ)


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid: an interval in 1D, the square box in 2D."""

    dimension: int
    xmin: float
    xmax: float
    nodes: int  # per axis

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.nodes < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {self.nodes}")
        if not self.xmax > self.xmin:
            raise ValueError("empty extent")

    @property
    def spacing(self) -> float:
        return (self.xmax - self.xmin) / (self.nodes - 1)

    @property
    def size(self) -> int:
        return self.nodes**self.dimension

    def axis(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nodes)

    def points(self) -> np.ndarray:
        """Node coordinates, shape (size, dimension); x-major in 2D."""
        x = self.axis()
        if self.dimension == 1:
            return x[:, None]
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


@dataclass(frozen=True)
class CoefficientField:
    """Schrodinger potential p or Helmholtz index n, one value per node."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in EQUATION_KINDS:
            raise ValueError(f"unknown equation kind {self.kind!r}")


@dataclass(frozen=True)
class SourceSet:
    """K source densities on the grid, each with unit discrete integral."""

    node_indices: tuple
    vectors: np.ndarray  # (size, K) strong-form densities

    @property
    def count(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class TransferDataset:
    """Transfer blocks F and derivatives dF/dlam at spectral points lam_j.

    This is the only input the inversion chain consumes.  ``transfer`` and
    ``derivative`` have shape (m, K, K).
    """

    kind: str
    grid: GridSpec
    lambdas: np.ndarray
    transfer: np.ndarray
    derivative: np.ndarray
    noise_percent: float = 0.0
    noise_seed: int | None = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a nonempty 1-D sequence")
        if np.any(lam <= 0):
            raise ValueError("spectral points must be positive")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("spectral points must be strictly increasing")
        m = lam.size
        if self.transfer.shape != self.derivative.shape or self.transfer.shape[0] != m:
            raise ValueError("transfer/derivative blocks inconsistent with lambdas")

    @property
    def n_points(self) -> int:
        return self.lambdas.size

    @property
    def n_sources(self) -> int:
        return self.transfer.shape[1]


@dataclass(frozen=True)
class DiscreteOperator:
    """Assembled symmetric stiffness and diagonal weight of one problem."""

    grid: GridSpec
    kind: str
    stiffness: sp.csc_matrix  # quadrature-weighted, symmetric PSD for p >= 0
    mass_diag: np.ndarray  # quadrature weights times coefficient (n, or 1)
    weights: np.ndarray  # plain trapezoid quadrature weights


def trapezoid_weights(grid: GridSpec) -> np.ndarray:
    """Quadrature weights: h per node, halved on the boundary (tensorized)."""
    w1 = np.full(grid.nodes, grid.spacing)
    w1[0] *= 0.5
    w1[-1] *= 0.5
    if grid.dimension == 1:
        return w1
    return np.kron(w1, w1)


def background_field(grid: GridSpec, kind: str) -> CoefficientField:
    """p = 0 (Schrodinger) or n = 1 (Helmholtz)."""
    base = 0.0 if kind == SCHRODINGER else 1.0
    return CoefficientField(kind, np.full(grid.size, base))


def gaussian_bump_field(grid: GridSpec, kind: str, bumps) -> CoefficientField:
    """Sum of axis-aligned Gaussian bumps on top of the background.

    Each bump is ``(amplitude, center, sigma)`` with center/sigma scalars in
    1D and pairs in 2D.
    """
    pts = grid.points()
    total = np.zeros(grid.size)
    for amplitude, center, sigma in bumps:
        center = np.atleast_1d(np.asarray(center, dtype=float))
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if center.size != grid.dimension or sigma.size != grid.dimension:
            raise ValueError("bump center/sigma dimension mismatch")
        if np.any(sigma <= 0):
            raise ValueError("bump deviations must be positive")
        expo = np.zeros(grid.size)
        for d in range(grid.dimension):
            expo += (pts[:, d] - center[d]) ** 2 / (2.0 * sigma[d] ** 2)
        total += amplitude * np.exp(-expo)
    base = 0.0 if kind == SCHRODINGER else 1.0
    return CoefficientField(kind, base + total)


def point_sources(grid: GridSpec, node_indices, smoothing: float = 0.0) -> SourceSet:
    """Discrete delta densities at the given nodes, unit discrete integral.

    ``smoothing > 0`` replaces each delta with a discrete Gaussian of that
    width (in grid cells), renormalized to unit integral.
    """
    w = trapezoid_weights(grid)
    cols = []
    for idx in node_indices:
        if not 0 <= idx < grid.size:
            raise ValueError(f"source node {idx} outside grid of size {grid.size}")
        if smoothing > 0.0:
            pts = grid.points()
            d2 = np.sum((pts - pts[idx]) ** 2, axis=1)
            g = np.exp(-d2 / (2.0 * (smoothing * grid.spacing) ** 2))
            g /= g @ w
        else:
            g = np.zeros(grid.size)
            g[idx] = 1.0 / w[idx]
        cols.append(g)
    return SourceSet(tuple(int(i) for i in node_indices), np.column_stack(cols))


def boundary_sources(grid: GridSpec, layout: str = "origin", smoothing: float = 0.0) -> SourceSet:
    """Standard source layouts.

    ``origin``: single source at the first grid node (1D).
    ``edge_thirds``: two sources per side of the 2D box, at the 1/3 and 2/3
    points of each edge snapped to the nearest node; ordered bottom, top,
    left, right.
    """
    if layout == "origin":
        if grid.dimension != 1:
            raise ValueError("layout 'origin' is one-dimensional")
        return point_sources(grid, [0], smoothing)
    if layout == "edge_thirds":
        if grid.dimension != 2:
            raise ValueError("layout 'edge_thirds' is two-dimensional")
        n = grid.nodes
        a = round((n - 1) / 3)
        b = round(2 * (n - 1) / 3)
        flat = lambda ix, iy: ix * n + iy
        nodes = [
            flat(a, 0), flat(b, 0),          # bottom edge, y = xmin
            flat(a, n - 1), flat(b, n - 1),  # top edge
            flat(0, a), flat(0, b),          # left edge, x = xmin
            flat(n - 1, a), flat(n - 1, b),  # right edge
        ]
        return point_sources(grid, nodes, smoothing)
    raise ValueError(f"unknown source layout {layout!r}")


def _stiffness_1d(n: int, h: float) -> sp.csc_matrix:
    main = np.full(n, 2.0 / h)
    main[0] = main[-1] = 1.0 / h
    off = np.full(n - 1, -1.0 / h)
    return sp.diags([off, main, off], [-1, 0, 1], format="csc")


def assemble_operator(grid: GridSpec, coefficient: CoefficientField) -> DiscreteOperator:
    """Assemble (stiffness, weight) for the Neumann problem on the grid.

    Schrodinger: stiffness = weak Laplacian + diag(w*p), weight = diag(w).
    Helmholtz:   stiffness = weak Laplacian,             weight = diag(w*n).
    """
    values = np.asarray(coefficient.values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"coefficient has shape {values.shape}, grid size {grid.size}")
    w = trapezoid_weights(grid)
    if grid.dimension == 1:
        lap = _stiffness_1d(grid.nodes, grid.spacing)
    else:
        k1 = _stiffness_1d(grid.nodes, grid.spacing)
        w1 = trapezoid_weights(GridSpec(1, grid.xmin, grid.xmax, grid.nodes))
        m1 = sp.diags(w1)
        lap = (sp.kron(k1, m1) + sp.kron(m1, k1)).tocsc()
    if coefficient.kind == SCHRODINGER:
        stiffness = (lap + sp.diags(w * values)).tocsc()
        mass_diag = w.copy()
    else:
        if np.any(values <= 0):
            raise CoefficientError("Helmholtz index must be positive everywhere")
        stiffness = lap
        mass_diag = w * values
    return DiscreteOperator(grid, coefficient.kind, stiffness, mass_diag, w)


def shifted_solver(op: DiscreteOperator, lam: float):
    """Factor (stiffness + lam*weight) once; reuse across right-hand sides."""
    if lam <= 0:
        raise ValueError(f"spectral point must be positive, got {lam}")
    system = (op.stiffness + sp.diags(lam * op.mass_diag)).tocsc()
    return splu(system)


def solve_resolvent(op: DiscreteOperator, lam: float, sources: SourceSet) -> np.ndarray:
    """Solve (stiffness + lam*weight) u = w*g for every source column."""
    lu = shifted_solver(op, lam)
    loads = op.weights[:, None] * sources.vectors
    out = np.empty_like(loads)
    for r in range(loads.shape[1]):
        out[:, r] = lu.solve(loads[:, r])
    return out


def transfer_function(sources: SourceSet, u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """F = G^T diag(w) U, the source-receiver response block."""
    return sources.vectors.T @ (weights[:, None] * u)


def transfer_derivative(u: np.ndarray, mass_diag: np.ndarray) -> np.ndarray:
    """dF/dlam = -U^T diag(w*n) U, exact for the discrete resolvent."""
    return -(u.T @ (mass_diag[:, None] * u))


def generate_dataset(grid: GridSpec, coefficient: CoefficientField, lambdas,
                     sources: SourceSet) -> TransferDataset:
    """Clean synthetic dataset: F and dF/dlam at every spectral point."""
    lam = np.asarray(lambdas, dtype=float)
    op = assemble_operator(grid, coefficient)
    m, k = lam.size, sources.count
    f_blocks = np.empty((m, k, k))
    df_blocks = np.empty((m, k, k))
    for j, lj in enumerate(lam):
        u = solve_resolvent(op, lj, sources)
        f_blocks[j] = transfer_function(sources, u, op.weights)
        df_blocks[j] = transfer_derivative(u, op.mass_diag)
    return TransferDataset(coefficient.kind, grid, lam, f_blocks, df_blocks)


def add_noise(clean: TransferDataset, background: TransferDataset,
              percent: float, seed: int) -> TransferDataset:
    """Perturb each entry by uniform[-1,1] noise scaled to the anomaly.

    Every entry of F receives an independent draw times
    ``(percent/100)*|F0 - F|`` at that entry; dF entries use the same rule
    with ``|dF0 - dF|``.  Blocks are re-symmetrized afterwards.  With
    ``percent == 0`` the input is returned unchanged.
    """
    if clean.transfer.shape != background.transfer.shape or not np.array_equal(
        clean.lambdas, background.lambdas
    ):
        raise ValueError("clean and background datasets are incompatible")
    if percent < 0:
        raise ValueError("noise percent must be nonnegative")
    if percent == 0:
        return clean
    rng = np.random.default_rng(seed)
    scale = percent / 100.0
    f_noisy = np.empty_like(clean.transfer)
    df_noisy = np.empty_like(clean.derivative)
    for j in range(clean.n_points):
        amp = scale * np.abs(background.transfer[j] - clean.transfer[j])
        block = clean.transfer[j] + amp * rng.uniform(-1.0, 1.0, amp.shape)
        f_noisy[j] = 0.5 * (block + block.T)
        amp = scale * np.abs(background.derivative[j] - clean.derivative[j])
        block = clean.derivative[j] + amp * rng.uniform(-1.0, 1.0, amp.shape)
        df_noisy[j] = 0.5 * (block + block.T)
    return replace(clean, transfer=f_noisy, derivative=df_noisy,
                   noise_percent=float(percent), noise_seed=int(seed))
