"""Spectrum of the discrete Laplacian and spurious-mode diagnostics.

Eliminating the velocity from the semi-discrete wave system leaves a
generalized eigenproblem for the scalar field,

    A v = lambda h_mass v,   A = sum_i grad_i^T u_mass^{-1} grad_i,

whose spectrum is the compatibility diagnostic for the element pair: a
stable discretization has a one-dimensional null space (the constant)
under Neumann conditions and none under Dirichlet conditions, with no
small eigenvalues that sink further under mesh refinement.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledOperators

__all__ = [
    "Spectrum",
    "SpuriousModeReport",
    "laplacian_pencil",
    "laplacian_spectrum",
    "null_space_dimension",
    "max_eigenvalue",
    "spurious_mode_report",
    "spectrum_to_csv",
    "spectrum_to_json",
]

DENSE_CUTOFF = 3000      # scalar DOFs below which the dense solver is used
LOWEST_COUNT = 20        # eigenvalues resolved from the low end iteratively
NULL_TOLERANCE = 1e-8    # relative to max(1, lambda_max)


def laplacian_pencil(ops: AssembledOperators):
    """Explicit sparse matrices (A, h_mass) of the generalized eigenproblem.

    A is formed as a sparse triple product; the block-diagonal velocity
    mass inverse keeps it sparse (scalar DOFs couple only through shared
    cells). The result is symmetrized to remove floating-point asymmetry
    from the products.
    """
    u_mass_inv = ops.u_mass.inverse_to_csr()
    m_h = ops.dofs.m_h
    A = sp.csr_matrix((m_h, m_h))
    for grad in ops.grad:
        A = A + grad.T @ (u_mass_inv @ grad)
    A = (A + A.T) * 0.5
    return A.tocsr(), ops.h_mass


@dataclass
class Spectrum:
    """Eigenvalues of the discrete Laplacian, sorted ascending.

    ``eigenvalues`` holds either the full spectrum (dense path) or the
    lowest resolved part (iterative path); ``lambda_max`` is always the
    largest eigenvalue.
    """

    eigenvalues: np.ndarray
    lambda_max: float
    m_h: int
    complete: bool
    null_tolerance: float = NULL_TOLERANCE
    eigenvectors: Optional[np.ndarray] = None


def laplacian_spectrum(ops: AssembledOperators, compute_vectors: bool = False,
                       dense_cutoff: int = DENSE_CUTOFF,
                       null_tolerance: float = NULL_TOLERANCE) -> Spectrum:
    """Solve the symmetric generalized eigenproblem of the discrete Laplacian.

    Below ``dense_cutoff`` scalar DOFs the full spectrum is computed with a
    dense symmetric-generalized solver; above it, a shift-invert Lanczos
    iteration resolves the lowest eigenvalues and the largest one.
    """
    A, M = laplacian_pencil(ops)
    m_h = ops.dofs.m_h
    if m_h <= dense_cutoff:
        Ad = A.toarray()
        Md = M.toarray()
        try:
            if compute_vectors:
                vals, vecs = scipy.linalg.eigh(Ad, Md)
            else:
                vals = scipy.linalg.eigh(Ad, Md, eigvals_only=True)
                vecs = None
        except scipy.linalg.LinAlgError as exc:
            raise RuntimeError(
                "scalar mass matrix is not positive definite; "
                "assembly is inconsistent") from exc
        return Spectrum(vals, float(vals[-1]), m_h, complete=True,
                        null_tolerance=null_tolerance, eigenvectors=vecs)

    lam_max = _largest_eigenvalue_iterative(A, M)
    k = min(LOWEST_COUNT, m_h - 2)
    # Negative shift keeps the shifted matrix definite even when A has a
    # null space (Neumann constant mode).
    scale = A.diagonal().mean() / max(M.diagonal().mean(), np.finfo(float).tiny)
    sigma = -1e-3 * max(scale, 1.0)
    vals, vecs = spla.eigsh(A, k=k, M=M, sigma=sigma, which="LM")
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order] if compute_vectors else None
    return Spectrum(vals, lam_max, m_h, complete=False,
                    null_tolerance=null_tolerance, eigenvectors=vecs)


def _largest_eigenvalue_iterative(A, M):
    try:
        vals = spla.eigsh(A, k=1, M=M, which="LM", return_eigenvectors=False,
                          maxiter=5000)
        return float(vals[0])
    except spla.ArpackNoConvergence as exc:
        if A.shape[0] <= 20000:
            vals = scipy.linalg.eigh(A.toarray(), M.toarray(), eigvals_only=True,
                                     subset_by_index=(A.shape[0] - 1, A.shape[0] - 1))
            return float(vals[0])
        raise RuntimeError("largest-eigenvalue iteration failed to converge") from exc


def null_space_dimension(spectrum: Spectrum) -> int:
    """Number of eigenvalues below the null tolerance.

    Exactly 1 for a stable Neumann problem (the constant mode), exactly 0
    for a stable Dirichlet problem.
    """
    threshold = spectrum.null_tolerance * max(1.0, spectrum.lambda_max)
    return int(np.sum(spectrum.eigenvalues < threshold))


def max_eigenvalue(ops: AssembledOperators, dense_cutoff: int = DENSE_CUTOFF) -> float:
    """Largest eigenvalue of the discrete Laplacian."""
    A, M = laplacian_pencil(ops)
    m_h = ops.dofs.m_h
    if m_h <= dense_cutoff:
        vals = scipy.linalg.eigh(A.toarray(), M.toarray(), eigvals_only=True,
                                 subset_by_index=(m_h - 1, m_h - 1))
        return float(vals[0])
    return _largest_eigenvalue_iterative(A, M)


@dataclass
class LevelSummary:
    m_h: int
    null_count: int
    smallest_nonzero: Optional[float]
    lambda_max: float


@dataclass
class SpuriousModeReport:
    levels: list
    flags: list

    @property
    def has_flags(self) -> bool:
        return bool(self.flags)


def spurious_mode_report(spectra: list) -> SpuriousModeReport:
    """Track null-space size and the smallest nonzero eigenvalue across a
    refinement sequence (coarsest first).

    A nonzero eigenvalue that drops by more than a factor of two between
    consecutive levels is flagged: a physical eigenvalue is stable under
    refinement, so a sinking one indicates a spurious mode whose eigenvalue
    tends to zero with the mesh size.
    """
    levels = []
    for s in spectra:
        nnull = null_space_dimension(s)
        threshold = s.null_tolerance * max(1.0, s.lambda_max)
        nonzero = s.eigenvalues[s.eigenvalues >= threshold]
        smallest = float(nonzero[0]) if len(nonzero) else None
        levels.append(LevelSummary(s.m_h, nnull, smallest, s.lambda_max))
    flags = []
    for lev in range(1, len(levels)):
        prev, cur = levels[lev - 1], levels[lev]
        if prev.smallest_nonzero is None or cur.smallest_nonzero is None:
            continue
        if cur.smallest_nonzero < 0.5 * prev.smallest_nonzero:
            flags.append(
                f"smallest nonzero eigenvalue dropped "
                f"{prev.smallest_nonzero:.4g} -> {cur.smallest_nonzero:.4g} "
                f"between levels {lev - 1} and {lev}")
    return SpuriousModeReport(levels, flags)


def spectrum_to_csv(spectrum: Spectrum, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue"])
        for i, lam in enumerate(spectrum.eigenvalues):
            writer.writerow([i, repr(float(lam))])


def spectrum_to_json(spectrum: Spectrum, path, metadata=None):
    payload = {
        "eigenvalues": [float(v) for v in spectrum.eigenvalues],
        "lambda_max": spectrum.lambda_max,
        "null_space_dimension": null_space_dimension(spectrum),
        "null_tolerance": spectrum.null_tolerance,
        "n_h_dofs": spectrum.m_h,
        "complete": spectrum.complete,
    }
    if metadata:
        payload["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
