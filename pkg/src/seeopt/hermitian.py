"""Dense complex Hermitian matrix helpers used throughout the package.

Matrices are plain complex numpy arrays.  All routines assume (and where
cheap, enforce) Hermitian symmetry; eigenvector phases are normalised so
results are deterministic across runs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NumericalFailure",
    "as_hermitian",
    "trace_inner",
    "eig_herm",
    "lambda_max_with_vector",
    "principal_rank1_factor",
    "rank1_gap",
]


class NumericalFailure(RuntimeError):
    """Raised when a dense numerical routine cannot produce a valid result."""


def as_hermitian(mat, tol: float = 1e-10) -> np.ndarray:
    """Return the symmetrised copy ``(A + A^H)/2`` of a square matrix.

    A relative asymmetry beyond ``tol`` is an error rather than a silent
    repair.
    """
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a, "fro")
    asym = np.linalg.norm(a - a.conj().T, "fro")
    if scale > 0 and asym > 2.0 * tol * scale:
        raise ValueError(f"matrix is not Hermitian: relative asymmetry {asym / scale:.3e}")
    return 0.5 * (a + a.conj().T)


def trace_inner(c, x) -> float:
    """Real trace inner product ``Re tr(C X)`` of two Hermitian matrices.

    For Hermitian arguments the trace is real; the tiny imaginary residue
    left by floating point is discarded.
    """
    c = np.asarray(c, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if c.shape != x.shape:
        raise ValueError(f"dimension mismatch: {c.shape} vs {x.shape}")
    # vdot conjugates its first argument: sum conj(X_ij) C_ij = tr(C X) for Hermitian X.
    return float(np.vdot(x, c).real)


def _normalize_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real nonnegative."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if np.abs(pivot) > 0:
            out[:, j] = col * (np.conj(pivot) / np.abs(pivot))
    return out


def eig_herm(mat):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``V`` satisfying ``A = V diag(w) V^H``.
    """
    a = np.asarray(mat, dtype=complex)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK breakdown
        raise NumericalFailure(f"Hermitian eigendecomposition failed: {exc}") from exc
    return w, _normalize_phases(v)


def lambda_max_with_vector(mat):
    """Largest eigenvalue and a unit eigenvector of a Hermitian matrix."""
    w, v = eig_herm(mat)
    return float(w[-1]), v[:, -1]


def principal_rank1_factor(mat, psd_tol: float = 1e-8) -> np.ndarray:
    """Vector ``x = sqrt(lam_max) v_max`` giving the best rank-1 factor ``x x^H``.

    ``mat`` must be PSD within tolerance (``lam_min >= -psd_tol * lam_max``);
    an indefinite input is an error.  For a numerically rank-1 input the
    reconstruction ``x x^H`` matches ``mat`` to working precision.
    """
    w, v = eig_herm(mat)
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        if w[0] < -psd_tol * max(1.0, abs(lam_max)):
            raise ValueError(f"matrix is indefinite: lam_min={w[0]:.3e}")
        return np.zeros(mat.shape[0], dtype=complex)
    if w[0] < -psd_tol * lam_max:
        raise ValueError(f"matrix is indefinite: lam_min={w[0]:.3e}, lam_max={lam_max:.3e}")
    return np.sqrt(lam_max) * v[:, -1]


def rank1_gap(mat) -> float:
    """Trace minus largest eigenvalue; zero iff a PSD matrix is rank 1."""
    a = np.asarray(mat, dtype=complex)
    lam, _ = lambda_max_with_vector(a)
    return float(np.trace(a).real - lam)
