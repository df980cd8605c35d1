"""Dense complex-Hermitian linear algebra: spectral decompositions, matrix
functions and the norms used throughout the toolkit.

All functions take plain ``numpy.ndarray`` (complex128) and are pure. Inputs
declared Hermitian are symmetrized as ``(m + m.conj().T) / 2`` before any
decomposition; asymmetry beyond ``HERM_TOL`` is rejected rather than silently
repaired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Asymmetry beyond this (relative to the matrix scale) is an error, not noise.
HERM_TOL = 1e-8

# An eigenvalue counts as "in the support" iff it exceeds
# SUPPORT_RTOL * max(1, lambda_max).  Scale-aware so the same cut applies to
# subnormalized operators.
SUPPORT_RTOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when an input declared Hermitian is asymmetric beyond HERM_TOL."""


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite complex128 2-D array (no NaN/Inf admitted)."""
    a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


def hermitize(m) -> np.ndarray:
    """Return (m + m†)/2 after checking m is square and Hermitian within HERM_TOL."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    asym = float(np.abs(a - a.conj().T).max(initial=0.0))
    if asym > HERM_TOL * scale:
        raise NotHermitianError(
            f"matrix asymmetry {asym:.3e} exceeds tolerance {HERM_TOL * scale:.3e}"
        )
    return (a + a.conj().T) / 2


@dataclass(frozen=True)
class HermEig:
    """Spectral decomposition of a Hermitian matrix.

    eigenvalues are ascending; eigenvectors holds the matching unitary of
    column eigenvectors, so ``U @ diag(w) @ U†`` reconstructs the input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def eigh(m) -> HermEig:
    """Spectral decomposition of a Hermitian matrix (symmetrized internally)."""
    h = hermitize(m)
    w, u = np.linalg.eigh(h)
    return HermEig(eigenvalues=w, eigenvectors=u)


def support_cut(eigenvalues: np.ndarray) -> float:
    """Threshold below which eigenvalues are treated as zero."""
    lam_max = float(eigenvalues.max(initial=0.0))
    return SUPPORT_RTOL * max(1.0, lam_max)


def spectral_fn(m, f, support_only: bool = False) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix through its spectrum.

    With ``support_only`` the function acts only on eigenvalues above the
    support cut; the kernel directions map to zero (pseudo-function
    convention, e.g. log/inverse powers on singular states).
    """
    dec = eigh(m)
    w = dec.eigenvalues
    with np.errstate(divide="ignore", invalid="ignore"):
        if support_only:
            cut = support_cut(w)
            fw = np.array([f(x) if x > cut else 0.0 for x in w], dtype=np.float64)
        else:
            fw = np.array([f(x) for x in w], dtype=np.float64)
    if not np.all(np.isfinite(fw)):
        raise ValueError(
            "scalar function produced a non-finite value on the spectrum; "
            "use support_only for functions undefined at zero"
        )
    u = dec.eigenvectors
    out = (u * fw) @ u.conj().T
    return (out + out.conj().T) / 2


def trace_norm(m) -> float:
    """||m||_1, the sum of singular values."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("trace norm defined here for square matrices only")
    # Hermitian inputs get the cheaper and more accurate spectral route.
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.conj().T).max(initial=0.0)) <= HERM_TOL * scale:
        w = np.linalg.eigvalsh((a + a.conj().T) / 2)
        return float(np.abs(w).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def operator_norm(m) -> float:
    """||m||_inf, the largest singular value."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("operator norm defined here for square matrices only")
    return float(np.linalg.svd(a, compute_uv=False).max(initial=0.0))


def min_eig(m) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    h = hermitize(m)
    return float(np.linalg.eigvalsh(h)[0])
