"""Dense symmetric eigensolver by cyclic Jacobi rotations.

The rotation loop is compiled with numba; validation, sorting and the result
object are plain numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NoConvergence

__all__ = ["Spectrum", "sym_eigs"]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a symmetric matrix plus the solver's certificate.

    ``residual`` is the Frobenius norm of the off-diagonal part left when the
    iteration stopped.  ``vectors`` holds eigenvectors as columns, in the same
    order as ``eigenvalues``, and is only filled on request.
    """

    eigenvalues: np.ndarray
    rotations: int
    sweeps: int
    residual: float
    frobenius: float
    vectors: np.ndarray | None = None

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))


@numba.njit(cache=True)
def _off_norm(a):
    # summed directly; ||A||_F^2 - ||diag||^2 cancels catastrophically
    n = a.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return math.sqrt(acc)


@numba.njit(cache=True)
def _cyclic_jacobi(a, v, want_vectors, target, max_sweeps):
    n = a.shape[0]
    rotations = 0
    sweeps = 0
    residual = _off_norm(a)
    while residual > target and sweeps < max_sweeps:
        for p in range(n - 1):
            # de Rijk ordering: move the largest remaining diagonal entry to
            # position p first; it keeps clustered eigenvalues converging fast
            j = p
            for k in range(p + 1, n):
                if a[k, k] > a[j, j]:
                    j = k
            if j != p:
                for k in range(n):
                    tmp = a[p, k]
                    a[p, k] = a[j, k]
                    a[j, k] = tmp
                for k in range(n):
                    tmp = a[k, p]
                    a[k, p] = a[k, j]
                    a[k, j] = tmp
                if want_vectors:
                    for k in range(n):
                        tmp = v[k, p]
                        v[k, p] = v[k, j]
                        v[k, j] = tmp
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = 1.0 / (abs(tau) + math.sqrt(1.0 + tau * tau))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with J[p,p] = J[q,q] = c, J[p,q] = s, J[q,p] = -s;
                # rows p, q are rotated and mirrored into the columns
                app = a[p, p]
                aqq = a[q, q]
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    a[k, p] = a[p, k]
                    a[k, q] = a[q, k]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
                rotations += 1
        sweeps += 1
        residual = _off_norm(a)
    return rotations, sweeps, residual


def sym_eigs(matrix, tol: float = 1e-12, max_sweeps: int = 30,
             vectors: bool = False) -> Spectrum:
    """Eigenvalues (ascending) of a real symmetric matrix.

    Row-cyclic sweeps (with de Rijk's diagonal ordering) stop once the off-diagonal Frobenius norm is at most
    ``tol * ||M||_F``.  Raises :class:`NoConvergence`, carrying the residual,
    if that has not happened after ``max_sweeps`` sweeps.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-13 * scale):
        raise ValueError("matrix is not symmetric")
    a = np.ascontiguousarray(0.5 * (a + a.T))
    frob = float(np.linalg.norm(a))
    target = tol * frob
    v = np.eye(n) if vectors else np.empty((0, 0))

    rotations, sweeps, residual = _cyclic_jacobi(a, v, vectors, target, max_sweeps)
    if residual > target:
        raise NoConvergence(
            f"Jacobi did not converge in {max_sweeps} sweeps "
            f"(residual {residual:.3e}, target {target:.3e})", residual)

    eig = np.diag(a).copy()
    order = np.argsort(eig, kind="stable")
    return Spectrum(
        eigenvalues=eig[order],
        rotations=int(rotations),
        sweeps=int(sweeps),
        residual=float(residual),
        frobenius=frob,
        vectors=v[:, order] if vectors else None,
    )
