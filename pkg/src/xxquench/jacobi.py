"""Cyclic Jacobi eigensolver for dense real symmetric matrices."""

from __future__ import annotations

import math

import numpy as np


class EigensolverError(RuntimeError):
    """Raised when the Jacobi sweeps fail to reduce the off-diagonal norm."""

    def __init__(self, message: str, sweeps: int, off_norm: float, tol: float):
        super().__init__(f"{message} (sweeps={sweeps}, off-diagonal norm={off_norm:.3e}, tol={tol:.1e})")
        self.sweeps = sweeps
        self.off_norm = off_norm
        self.tol = tol


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a, tol: float = 1e-13, max_sweeps: int = 100):
    """Eigen-decompose a real symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Real symmetric matrix. Only symmetry up to rounding is assumed.
    tol : float
        Stop once the off-diagonal Frobenius norm drops below
        ``tol * max(1, ||a||_F)``.
    max_sweeps : int
        Upper bound on full cyclic sweeps.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in ascending order.
    v : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, ``a @ v = v * w``.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    off = _off_norm(a)
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise EigensolverError("Jacobi iteration did not converge", sweeps, off, threshold)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) > 1e18 * abs(apq):
                    # tau would overflow; t ~ 1/(2 tau) to full precision
                    t = apq / h
                else:
                    tau = h / (2.0 * apq)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = _off_norm(a)
        if not math.isfinite(off):
            raise EigensolverError("Jacobi iteration produced non-finite values", sweeps, off, threshold)

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
