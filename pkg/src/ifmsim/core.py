"""Small exact linear algebra for two- and three-level detector states.

States are plain numpy arrays: a pure state is a complex vector of length
2 or 3, a density matrix a square complex matrix of matching dimension.
All operations are pure functions in double precision; nothing here
renormalizes or otherwise repairs its input, so numerical drift shows up
in the validators instead of being hidden.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ATOL",
    "DimensionMismatchError",
    "apply_unitary",
    "apply_unitary_dm",
    "basis_state",
    "is_hermitian",
    "is_unitary",
    "populations",
    "pure_density",
    "validate_density_matrix",
    "validate_pure_state",
]

ATOL = 1e-12


class DimensionMismatchError(ValueError):
    """Operator and state dimensions are incompatible."""


def basis_state(dim: int, index: int) -> np.ndarray:
    """Computational basis vector |index> of a dim-level system."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dim {dim}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def pure_density(psi: np.ndarray) -> np.ndarray:
    """Projector |psi><psi| as a dense density matrix."""
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def apply_unitary(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply a unitary to a state vector, returning a new vector."""
    u = np.asarray(u, dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.ndim != 1 or u.shape != (psi.shape[0], psi.shape[0]):
        raise DimensionMismatchError(
            f"cannot apply operator of shape {u.shape} to state of shape {psi.shape}"
        )
    return u @ psi


def apply_unitary_dm(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Conjugate a density matrix: U rho U^dagger."""
    u = np.asarray(u, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or u.shape != rho.shape:
        raise DimensionMismatchError(
            f"cannot conjugate matrix of shape {rho.shape} by operator of shape {u.shape}"
        )
    return u @ rho @ u.conj().T


def populations(state: np.ndarray) -> np.ndarray:
    """Occupation probabilities of the computational basis states.

    Accepts either a state vector (returns squared moduli, invariant under
    a global phase) or a density matrix (returns the real diagonal).
    """
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    if state.ndim == 2 and state.shape[0] == state.shape[1]:
        return np.real(np.diag(state)).copy()
    raise ValueError(f"state must be a vector or square matrix, got shape {state.shape}")


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    eye = np.eye(u.shape[0])
    return bool(np.all(np.abs(u.conj().T @ u - eye) <= atol))


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and bool(np.all(np.abs(m - m.conj().T) <= atol))


def validate_pure_state(psi: np.ndarray, atol: float = ATOL) -> None:
    """Raise ValueError if psi is not a normalized finite state vector."""
    psi = np.asarray(psi)
    if psi.ndim != 1 or psi.shape[0] not in (2, 3):
        raise ValueError(f"pure state must have length 2 or 3, got shape {psi.shape}")
    if not np.all(np.isfinite(psi.view(np.float64) if psi.dtype == np.complex128 else psi)):
        raise ValueError("pure state contains non-finite entries")
    norm_sq = float(np.sum(np.abs(psi) ** 2))
    if abs(norm_sq - 1.0) > atol:
        raise ValueError(f"pure state norm deviates from 1 by {abs(norm_sq - 1.0):.3e}")


def validate_density_matrix(rho: np.ndarray, atol: float = ATOL) -> None:
    """Raise ValueError unless rho is Hermitian, unit trace, and positive."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 3):
        raise ValueError(f"density matrix must be 2x2 or 3x3, got shape {rho.shape}")
    if not np.all(np.isfinite(rho.real)) or not np.all(np.isfinite(rho.imag)):
        raise ValueError("density matrix contains non-finite entries")
    if not is_hermitian(rho, atol):
        raise ValueError("density matrix is not Hermitian within tolerance")
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > atol:
        raise ValueError(f"density matrix trace deviates from 1 by {abs(trace - 1.0):.3e}")
    eigvals = np.linalg.eigvalsh(rho)
    if eigvals.min() < -1e-10:
        raise ValueError(f"density matrix has negative eigenvalue {eigvals.min():.3e}")
