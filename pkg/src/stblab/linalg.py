"""Small dense complex-matrix kernel.

Everything here operates on plain ``numpy.ndarray`` values with dtype
complex128.  Matrices in this package are tiny (at most 8x8), so the
implementations lean on LAPACK via ``numpy.linalg`` and add the contract
checks (Hermitian validation, descending spectra, rank tolerances) that the
rest of the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

HERMITIAN_RTOL = 1e-9
RANK_RTOL = 1e-9


def as_cmat(a) -> np.ndarray:
    """Coerce input to a 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


@dataclass(frozen=True)
class EigenSpectrum:
    """Real eigenvalues of a Hermitian PSD matrix, sorted descending."""

    values: np.ndarray
    rank_tolerance: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def rank(self) -> int:
        """Numerical rank: count of eigenvalues above the tolerance."""
        return int(np.count_nonzero(self.values > self.rank_tolerance))

    def nonzero(self) -> np.ndarray:
        return self.values[self.values > self.rank_tolerance]


def hermitian_eigenvalues(a, rank_rtol: float = RANK_RTOL) -> EigenSpectrum:
    """Eigenvalues of a Hermitian matrix, descending.

    Parameters
    ----------
    a : array_like, square
        Hermitian within ``HERMITIAN_RTOL`` on the relative Frobenius
        asymmetry.
    rank_rtol : float
        Numerical-rank tolerance as a fraction of the largest eigenvalue.

    Returns
    -------
    EigenSpectrum
        With ``rank_tolerance = rank_rtol * max(eigenvalue, 0)``.
    """
    m = as_cmat(a)
    if m.shape[0] != m.shape[1]:
        raise ContractViolation(f"eigenvalues need a square matrix, got {m.shape}")
    norm = frobenius_norm(m)
    if norm > 0 and frobenius_norm(m - m.conj().T) > HERMITIAN_RTOL * norm:
        raise ContractViolation("matrix is not Hermitian within tolerance")
    vals = np.linalg.eigvalsh(m)[::-1]
    top = max(float(vals[0]), 0.0) if vals.size else 0.0
    return EigenSpectrum(values=vals, rank_tolerance=rank_rtol * top)


def det(a) -> complex:
    """Determinant of a square complex matrix."""
    m = as_cmat(a)
    if m.shape[0] != m.shape[1]:
        raise ContractViolation(f"determinant needs a square matrix, got {m.shape}")
    return complex(np.linalg.det(m))


def pseudo_inverse(a, rank_rtol: float = RANK_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse.

    Singular values below ``rank_rtol`` times the largest are treated as
    zero, so rank-deficient inputs are permitted.
    """
    m = as_cmat(a)
    return np.linalg.pinv(m, rcond=rank_rtol)


def fourier_basis(m: int) -> np.ndarray:
    """DFT basis matrix F whose column j is (1, w^j, w^2j, ..., w^((M-1)j))^T.

    w = exp(2 pi i / M).  Columns are mutually orthogonal with squared norm
    M, and F^-1 = (1/M) conj(F) (F is symmetric).
    """
    if m < 1:
        raise ContractViolation(f"fourier_basis needs M >= 1, got {m}")
    idx = np.arange(m)
    return np.exp(2j * np.pi * np.outer(idx, idx) / m)


def frobenius_norm(a) -> float:
    """Frobenius norm, i.e. sqrt of the entrywise sum of |.|^2."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))
