"""Dense symmetric-matrix utilities for small dimensions.

Everything here operates on plain float ndarrays that are exactly symmetric
(the upper triangle is authoritative; ``symmetrize`` enforces equality).
Eigendecomposition is a cyclic Jacobi sweep, which is exact in one rotation
for d=2 and converges quadratically for the small d used elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UndefinedAlignmentError, UsageError

_JACOBI_TOL = 1e-12
_MAX_SWEEPS = 100
_PROJ_NORM_SLACK = 1e-8


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Copy of ``a`` with the upper triangle mirrored onto the lower, exactly."""
    a = np.asarray(a, dtype=float)
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def _check_square_finite(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NumericError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return symmetrize((v * self.eigenvalues) @ v.T)


def eig_sym(a: np.ndarray) -> Spectrum:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius mass falls below
    1e-12 * max(1, ||a||_F).
    """
    a = _check_square_finite(a)
    d = a.shape[0]
    m = symmetrize(a).copy()
    v = np.eye(d)
    if d == 1:
        return Spectrum(eigenvalues=m[0].copy(), eigenvectors=v)
    tol = _JACOBI_TOL * max(1.0, float(np.linalg.norm(m)))

    def off_mass() -> float:
        off = m - np.diag(np.diag(m))
        return float(np.linalg.norm(off))

    sweeps = 0
    while off_mass() > tol:
        sweeps += 1
        if sweeps > _MAX_SWEEPS:
            raise NumericError("Jacobi iteration failed to converge")
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = float(m[p, q])
                if apq == 0.0:
                    continue
                # Plain-float division: overflow to inf gives the correct
                # small-angle rotation through copysign/hypot below.
                tau = (float(m[q, q]) - float(m[p, p])) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                m = rot.T @ m @ rot
                m[p, q] = 0.0
                m[q, p] = 0.0
                v = v @ rot
    lam = np.diag(m).copy()
    order = np.argsort(lam)[::-1]
    return Spectrum(eigenvalues=lam[order], eigenvectors=v[:, order])


def psd_floor(a: np.ndarray, floor: float) -> np.ndarray:
    """Clamp every eigenvalue of ``a`` up to at least ``floor``."""
    if floor <= 0:
        raise UsageError(f"floor must be positive, got {floor}")
    spec = eig_sym(a)
    lam = np.maximum(spec.eigenvalues, floor)
    return symmetrize((spec.eigenvectors * lam) @ spec.eigenvectors.T)


def cond_number(a: np.ndarray) -> float:
    """Ratio of the largest to the smallest eigenvalue of a PD matrix."""
    spec = eig_sym(a)
    lam_min = float(spec.eigenvalues[-1])
    if lam_min <= 0.0:
        raise NumericError(f"matrix is not positive definite: lambda_min={lam_min}")
    return float(spec.eigenvalues[0]) / lam_min


def cos_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius cosine <A,B>_F / (||A||_F ||B||_F), in [-1, 1]."""
    a = _check_square_finite(a)
    b = _check_square_finite(b)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedAlignmentError("alignment with a zero matrix is undefined")
    return float(np.clip(float(np.sum(a * b)) / (na * nb), -1.0, 1.0))


def cos_vectors(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine between two nonzero vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise UndefinedAlignmentError("alignment with a zero vector is undefined")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def project_ball_euclid(u: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of ``u`` onto the ball of the given radius."""
    if radius <= 0:
        raise UsageError(f"radius must be positive, got {radius}")
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if n <= radius:
        return u.copy()
    return u * (radius / n)


def project_ball_metric(u: np.ndarray, a: np.ndarray, radius: float) -> np.ndarray:
    """Projection of ``u`` onto the Euclidean ball, measured in the A-norm.

    Solves argmin_{||w|| <= radius} (w-u)^T A (w-u). Interior points are
    returned unchanged; otherwise the KKT system (A + mu I) w = A u is solved
    with mu >= 0 found by bisection until ||w|| lands in
    [radius - 1e-8, radius].
    """
    if radius <= 0:
        raise UsageError(f"radius must be positive, got {radius}")
    u = np.asarray(u, dtype=float)
    if float(np.linalg.norm(u)) <= radius:
        return u.copy()
    spec = eig_sym(a)
    lam = spec.eigenvalues
    if float(lam[-1]) <= 0.0:
        raise NumericError(
            f"metric projection needs a positive definite matrix: lambda_min={float(lam[-1])}"
        )
    # w(mu) = V diag(lam/(lam+mu)) V^T u, with ||w(mu)|| strictly decreasing.
    z = spec.eigenvectors.T @ u

    def w_of(mu: float) -> np.ndarray:
        return spec.eigenvectors @ ((lam / (lam + mu)) * z)

    hi = 1.0
    for _ in range(200):
        if float(np.linalg.norm(w_of(hi))) <= radius:
            break
        hi *= 2.0
    else:
        raise NumericError("metric projection bisection failed to bracket")
    lo = 0.0
    w_hi = w_of(hi)
    for _ in range(500):
        n_hi = float(np.linalg.norm(w_hi))
        if radius - _PROJ_NORM_SLACK <= n_hi <= radius:
            return w_hi
        mid = 0.5 * (lo + hi)
        w_mid = w_of(mid)
        if float(np.linalg.norm(w_mid)) > radius:
            lo = mid
        else:
            hi = mid
            w_hi = w_mid
    raise NumericError("metric projection bisection failed to converge")
