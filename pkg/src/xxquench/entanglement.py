"""Two-qubit entanglement measures and the teleportation fidelity they imply.

All functions accept a :class:`TwoSpinDensityMatrix`, a single ``(4, 4)``
array, or a stack of shape ``(..., 4, 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rdm import PSD_TOL, TwoSpinDensityMatrix

SY_SY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))

_S = 1.0 / np.sqrt(2.0)
# columns are e1..e4 in the |up up>, |up down>, |down up>, |down down> basis
MAGIC_BASIS = np.array(
    [
        [_S, 1j * _S, 0, 0],
        [0, 0, 1j * _S, _S],
        [0, 0, 1j * _S, -_S],
        [_S, -1j * _S, 0, 0],
    ],
    dtype=complex,
)

DISTILLABLE_THRESHOLD = 0.5


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    fef: float
    fidelity: float
    time: float = 0.0

    @property
    def distillable(self) -> bool:
        return self.fef > DISTILLABLE_THRESHOLD


def _as_array(rho) -> np.ndarray:
    if isinstance(rho, TwoSpinDensityMatrix):
        return rho.entries
    arr = np.asarray(rho, dtype=complex)
    if arr.shape[-2:] != (4, 4):
        raise ValueError(f"expected (..., 4, 4) density matrices, got shape {arr.shape}")
    return arr


def _hermitian_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    lowest = w.min()
    if lowest < -PSD_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {lowest:.2e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    return np.einsum("...ij,...j,...kj->...ik", v, root, v.conj())


def concurrence(rho):
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are square roots of the eigenvalues of ``rho @ rho_tilde``.
    Since ``sqrt(rho) rho_tilde sqrt(rho) = R R^dagger`` with
    ``R = sqrt(rho) (sy x sy) sqrt(rho)^*``, they are the singular values of
    ``R``. Taking them from an SVD avoids the square root of near-zero
    eigenvalues, which would amplify rounding to ~1e-8.
    """
    arr = _as_array(rho)
    arr = 0.5 * (arr + np.swapaxes(arr.conj(), -1, -2))
    root = _hermitian_sqrt(arr)
    lam = np.linalg.svd(root @ SY_SY @ root.conj(), compute_uv=False)
    c = np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])
    return float(c) if c.ndim == 0 else c


def magic_basis_real_part(rho) -> np.ndarray:
    arr = _as_array(rho)
    return (MAGIC_BASIS.conj().T @ arr @ MAGIC_BASIS).real


def fully_entangled_fraction(rho):
    """Largest overlap ``<e|rho|e>`` with a maximally entangled state.

    Maximally entangled states are, up to a phase, real unit vectors in the
    magic basis, so the maximum is the top eigenvalue of the real part of
    ``rho`` written in that basis.
    """
    arr = _as_array(rho)
    if np.linalg.eigvalsh(0.5 * (arr + np.swapaxes(arr.conj(), -1, -2))).min() < -PSD_TOL:
        raise ValueError("density matrix is not positive semidefinite")
    real = magic_basis_real_part(arr)
    f = np.linalg.eigvalsh(0.5 * (real + np.swapaxes(real, -1, -2)))[..., -1]
    return float(f) if f.ndim == 0 else f


def teleportation_fidelity(fef):
    """Average teleportation fidelity ``(2 f + 1) / 3``."""
    arr = np.asarray(fef, dtype=float)
    if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
        raise ValueError(f"fully entangled fraction must lie in [0, 1], got {fef!r}")
    out = (2.0 * arr + 1.0) / 3.0
    return float(out) if out.ndim == 0 else out


def entanglement_report(rho, time: float = 0.0) -> EntanglementReport:
    f = fully_entangled_fraction(rho)
    return EntanglementReport(concurrence(rho), f, teleportation_fidelity(f), time)


def measure_series(rhos: np.ndarray) -> dict[str, np.ndarray]:
    """Concurrence, FEF and fidelity for a ``(T, 4, 4)`` stack."""
    rhos = _as_array(rhos)
    conc = np.atleast_1d(concurrence(rhos))
    fef = np.atleast_1d(fully_entangled_fraction(rhos))
    return {"concurrence": conc, "fef": fef, "fidelity": np.atleast_1d(teleportation_fidelity(np.clip(fef, 0, 1)))}
