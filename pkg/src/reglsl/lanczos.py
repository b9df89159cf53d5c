"""M-symmetric scalar and block Lanczos factorization of the truncated ROM.

The pencil (S, M) with SPD mass M is reduced by running the standard
symmetric Lanczos recurrence on the congruent matrix ``L^{-1} S L^{-T}``
(where ``M = L L^T``), which is numerically equivalent to the M-symmetric
recurrence but keeps every inner product Euclidean.  Vectors are unscaled to
the M-orthonormal basis at the end.  Full (double classical Gram-Schmidt)
reorthogonalization is applied at every step; problem sizes here never exceed
a few dozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BreakdownError
from .linalg import sym_eig

BREAKDOWN_TOL = 1e-12


@dataclass(frozen=True)
class LanczosFactors:
    """M-orthonormal basis Q with (block-)tridiagonal projection T.

    ``scaled`` holds ``L^T Q``, the Euclidean-orthonormal representation of
    the basis; evaluating ``Q^T M Q`` through it avoids the cancellation that
    a naive product suffers for ill-conditioned M.  ``source_norm`` is
    ``sqrt(b^T M^{-1} b)`` in the scalar case; ``start_gram_root`` is the
    SPD polar factor ``(B^T M^{-1} B)^{1/2}`` in the block case.
    """

    vectors: np.ndarray  # Q, (l, k)
    tridiagonal: np.ndarray  # T, (k, k)
    scaled: np.ndarray  # L^T Q, Euclidean-orthonormal columns
    metric_root: np.ndarray  # lower-triangular L with M = L L^T
    block_width: int
    source_norm: float | None = None
    start_gram_root: np.ndarray | None = None
    breakdown_step: int | None = None

    @property
    def complete(self) -> bool:
        return self.breakdown_step is None

    def orthogonality_defect(self) -> float:
        """max |Q^T M Q - I|, evaluated in the scaled representation."""
        gram = self.scaled.T @ self.scaled
        return float(np.abs(gram - np.eye(gram.shape[0])).max())

    def inverse(self) -> np.ndarray:
        """Q^{-1} = Q^T M, valid for a complete (square) factorization."""
        if self.vectors.shape[0] != self.vectors.shape[1]:
            raise BreakdownError(
                "factorization is not square; basis inverse undefined",
                step=self.breakdown_step,
            )
        return self.scaled.T @ self.metric_root.T


def _metric_root(mass: np.ndarray) -> np.ndarray:
    mass = np.asarray(mass, dtype=float)
    diag = np.diag(mass)
    if np.count_nonzero(mass - np.diag(diag)) == 0:
        if np.any(diag <= 0):
            raise BreakdownError("mass matrix is not SPD", value=float(diag.min()))
        return np.diag(np.sqrt(diag))
    try:
        return sla.cholesky(0.5 * (mass + mass.T), lower=True)
    except sla.LinAlgError as exc:
        raise BreakdownError(f"mass matrix is not SPD: {exc}") from None


def _scaled_operator(stiffness: np.ndarray, l_root: np.ndarray) -> np.ndarray:
    half = sla.solve_triangular(l_root, stiffness, lower=True)
    full = sla.solve_triangular(l_root, half.T, lower=True).T
    return 0.5 * (full + full.T)


def _reorthogonalize(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    for _ in range(2):
        w = w - basis @ (basis.T @ w)
    return w


def _deflate_in_order(w: np.ndarray, take: int, tol: float, step: int) -> np.ndarray:
    """Orthonormalize the first ``take`` independent columns of ``w`` in order."""
    picked = []
    scale = max(float(np.linalg.norm(w, axis=0).max()), tol)
    for col in range(w.shape[1]):
        v = w[:, col]
        if picked:
            v = _reorthogonalize(v[:, None], np.column_stack(picked)).ravel()
        norm = np.linalg.norm(v)
        if norm > max(tol, 1e-13 * scale):
            picked.append(v / norm)
        if len(picked) == take:
            return np.column_stack(picked)
    raise BreakdownError(
        f"rank-deficient normalization block at step {step}",
        value=0.0, step=step,
    )


def m_symmetric_lanczos(mass: np.ndarray, stiffness: np.ndarray, rhs: np.ndarray,
                        breakdown_tol: float = BREAKDOWN_TOL) -> LanczosFactors:
    """Full M-symmetric Lanczos factorization of M^{-1} S.

    Start vector is ``M^{-1} b`` normalized in the M-norm.  Off-diagonal
    coefficients are taken nonnegative.  On breakdown (beta below the scaled
    tolerance) the factors computed so far are returned with
    ``breakdown_step`` set.

    Returns
    -------
    LanczosFactors
        With ``A Q = Q T`` and ``Q^T M Q = I`` at full steps.
    """
    l_root = _metric_root(mass)
    a_scaled = _scaled_operator(np.asarray(stiffness, dtype=float), l_root)
    b_scaled = sla.solve_triangular(l_root, np.asarray(rhs, dtype=float).ravel(), lower=True)
    n = a_scaled.shape[0]
    norm_b = float(np.linalg.norm(b_scaled))
    if norm_b == 0.0:
        raise ValueError("start vector is zero")
    tol = breakdown_tol * np.linalg.norm(a_scaled, 2)

    q = np.zeros((n, n))
    q[:, 0] = b_scaled / norm_b
    alphas, betas = [], []
    breakdown = None
    k = 1
    for i in range(n):
        w = a_scaled @ q[:, i]
        alphas.append(float(q[:, i] @ w))
        w = _reorthogonalize(w, q[:, : i + 1])
        if i == n - 1:
            break
        beta = float(np.linalg.norm(w))
        if beta <= tol:
            breakdown = i + 1
            break
        betas.append(beta)
        q[:, i + 1] = w / beta
        k += 1

    q = q[:, :k]
    t = np.diag(np.array(alphas))
    if betas:
        t += np.diag(betas, 1) + np.diag(betas, -1)
    vectors = sla.solve_triangular(l_root.T, q, lower=False)
    return LanczosFactors(
        vectors=vectors, tridiagonal=t, scaled=q, metric_root=l_root,
        block_width=1, source_norm=norm_b, breakdown_step=breakdown,
    )


def block_lanczos(mass: np.ndarray, stiffness: np.ndarray, rhs_block: np.ndarray,
                  breakdown_tol: float = BREAKDOWN_TOL) -> LanczosFactors:
    """Block Lanczos with polar normalization within blocks.

    The start block is ``M^{-1} B (B^T M^{-1} B)^{-1/2}``; each residual block
    is normalized by the inverse SPD square root of its Gram matrix, the polar
    choice that makes the factors unique.  The final block is deflated to the
    number of directions left in the space, so a complete factorization is
    always square.  A rank-deficient normalization block raises
    ``BreakdownError`` carrying the step index.
    """
    rhs_block = np.asarray(rhs_block, dtype=float)
    if rhs_block.ndim != 2:
        raise ValueError("rhs block must be two-dimensional")
    l_root = _metric_root(mass)
    a_scaled = _scaled_operator(np.asarray(stiffness, dtype=float), l_root)
    b_scaled = sla.solve_triangular(l_root, rhs_block, lower=True)
    n, width = b_scaled.shape
    tol = breakdown_tol * np.linalg.norm(a_scaled, 2)

    if width > n:
        raise ValueError("rhs block has more columns than the space dimension")
    start_eig = sym_eig(b_scaled.T @ b_scaled)
    if start_eig.eigenvalues[-1] <= 0.0:
        raise BreakdownError(
            "start block is rank deficient", value=float(start_eig.eigenvalues[-1]), step=0,
        )
    gram_root = (start_eig.eigenvectors * start_eig.eigenvalues**0.5) @ start_eig.eigenvectors.T
    blocks = [b_scaled @ ((start_eig.eigenvectors * start_eig.eigenvalues**-0.5)
                          @ start_eig.eigenvectors.T)]
    total = width
    step = 0
    while total < n:
        step += 1
        basis = np.hstack(blocks)
        w = a_scaled @ blocks[-1]
        w = _reorthogonalize(w, basis)
        take = min(w.shape[1], n - total)
        if take == w.shape[1]:
            # polar normalization: W (W^T W)^{-1/2}
            eig = sym_eig(w.T @ w)
            if eig.eigenvalues[-1] <= max(tol**2, 0.0):
                raise BreakdownError(
                    f"rank-deficient normalization block at step {step}",
                    value=float(eig.eigenvalues[-1]), step=step,
                )
            blocks.append(w @ ((eig.eigenvectors * eig.eigenvalues**-0.5)
                               @ eig.eigenvectors.T))
        else:
            # Final partial block: fewer directions left in the space than
            # block columns.  Deflate by Gram-Schmidt in fixed source order,
            # which keeps perturbed and background factorizations paired
            # column by column (an eigenbasis choice here would rotate them
            # independently).
            blocks.append(_deflate_in_order(w, take, tol, step))
        total += take

    q = np.hstack(blocks)
    t = q.T @ a_scaled @ q
    t = 0.5 * (t + t.T)
    vectors = sla.solve_triangular(l_root.T, q, lower=False)
    return LanczosFactors(
        vectors=vectors, tridiagonal=t, scaled=q, metric_root=l_root,
        block_width=width, start_gram_root=0.5 * (gram_root + gram_root.T),
    )


def krylov_equivalence_check(mass: np.ndarray, stiffness: np.ndarray, rhs: np.ndarray,
                             tau: float | None = None, steps: int | None = None) -> float:
    """Largest principal angle between time-snapshot and Lanczos subspaces.

    Runs the exact three-term time recurrence of the ROM wave problem,
    ``d[i+1] = (2I - tau^2 A) d[i] - d[i-1]`` with ``d[0] = M^{-1} b`` and the
    even reflection ``d[-1] = d[1]``, orthogonalizes the snapshots by
    sequential M-Gram-Schmidt, and compares the nested spans against the
    Lanczos basis.  The spans agree for any positive ``tau``; the default
    keeps the recurrence in its oscillatory regime.

    Returns the largest principal angle (radians) over the nested subspaces
    k = 1..steps, or 1.0 if the snapshot sequence degenerates.
    """
    l_root = _metric_root(mass)
    a_scaled = _scaled_operator(np.asarray(stiffness, dtype=float), l_root)
    b_scaled = sla.solve_triangular(l_root, np.asarray(rhs, dtype=float).ravel(), lower=True)
    n = a_scaled.shape[0]
    if steps is None:
        steps = n
    if not 1 <= steps <= n:
        raise ValueError(f"steps must be in [1, {n}], got {steps}")
    if tau is None:
        lam_max = float(np.abs(np.linalg.eigvalsh(a_scaled)).max())
        tau = np.sqrt(3.5 / lam_max) if lam_max > 0 else 1.0
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")

    # time snapshots of the projected wave problem, in scaled coordinates
    snaps = np.empty((n, steps))
    snaps[:, 0] = b_scaled
    if steps > 1:
        propagate = 2.0 * np.eye(n) - tau**2 * a_scaled
        snaps[:, 1] = 0.5 * (propagate @ snaps[:, 0])
    for i in range(2, steps):
        snaps[:, i] = propagate @ snaps[:, i - 1] - snaps[:, i - 2]

    # sequential Gram-Schmidt (two passes per vector)
    gs = np.zeros((n, steps))
    for i in range(steps):
        v = snaps[:, i]
        scale = np.linalg.norm(v)
        if i > 0:
            v = _reorthogonalize(v[:, None], gs[:, :i]).ravel()
        norm = np.linalg.norm(v)
        if norm <= 1e-13 * max(scale, 1.0):
            return 1.0
        gs[:, i] = v / norm

    factors = m_symmetric_lanczos(mass, stiffness, rhs)
    if factors.breakdown_step is not None and factors.scaled.shape[1] < steps:
        return 1.0
    lanczos_scaled = factors.scaled[:, :steps]

    worst = 0.0
    for k in range(1, steps + 1):
        cosines = np.linalg.svd(gs[:, :k].T @ lanczos_scaled[:, :k], compute_uv=False)
        angle = float(np.arccos(np.clip(cosines.min(), -1.0, 1.0)))
        worst = max(worst, angle)
    return worst


def pencil_eigenvalues(truncated_mass: np.ndarray, truncated_stiffness: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of (S, M), ascending; the Lanczos oracle."""
    return sla.eigh(
        0.5 * (truncated_stiffness + truncated_stiffness.T),
        0.5 * (truncated_mass + truncated_mass.T),
        eigvals_only=True,
    )
