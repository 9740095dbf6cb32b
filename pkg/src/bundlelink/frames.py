"""Orthonormal frames along a curve: Gram-Schmidt, Frenet apparatus, fiber cross products.

All routines broadcast over leading axes, so a whole grid of parameter values
is processed in one call.  Vectors are stored as rows: a frame of m vectors
in R^n is an array of shape ``(..., m, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import TrigCurve
from .errors import RankDeficiencyError

RANK_TOL = 1e-9


def gram_schmidt(vectors, tol: float = RANK_TOL, return_r: bool = False):
    """Orthonormalize the rows of ``vectors`` (shape ``(..., m, n)``, m <= n).

    Output row i spans the same flag as input rows 0..i and has positive
    inner product with the part of input row i orthogonal to the previous
    rows.  Uses modified Gram-Schmidt with one reorthogonalization pass.

    Raises RankDeficiencyError when a residual norm drops below ``tol``.
    With ``return_r`` also returns the upper-triangular ``R`` such that
    ``vectors[..., j, :] = sum_i R[..., i, j] * Q[..., i, :]``.
    """
    V = np.asarray(vectors, dtype=float)
    m, n = V.shape[-2], V.shape[-1]
    if m > n:
        raise ValueError(f"cannot orthonormalize {m} vectors in R^{n}")
    Q = np.empty_like(V)
    R = np.zeros(V.shape[:-2] + (m, m))
    for j in range(m):
        w = V[..., j, :].copy()
        for _ in range(2):
            for i in range(j):
                c = np.sum(w * Q[..., i, :], axis=-1)
                R[..., i, j] += c
                w -= c[..., None] * Q[..., i, :]
        norm = np.linalg.norm(w, axis=-1)
        if np.any(norm < tol):
            raise RankDeficiencyError(
                f"rank deficiency at vector {j}: residual {np.min(norm):.3g} < {tol:g}",
                index=j, residual=float(np.min(norm)),
            )
        R[..., j, j] = norm
        with np.errstate(invalid="ignore", divide="ignore"):  # only reachable with tol <= 0
            Q[..., j, :] = w / norm[..., None]
    return (Q, R) if return_r else Q


def gs_derivative(Q, R, Vdot):
    """Exact derivative of a Gram-Schmidt frame.

    Rows satisfy ``V = R^T Q``.  Differentiating and splitting ``Q Q'^T``
    into its skew part gives ``Q' = X - C^T Q + Omega^T Q`` with
    ``X = R^{-T} V'``, ``C = Q X^T`` and ``Omega = tril(C) - tril(C)^T``
    (strictly lower parts).
    """
    X = np.linalg.solve(np.swapaxes(R, -1, -2), Vdot)
    C = Q @ np.swapaxes(X, -1, -2)
    low = np.tril(C, -1)
    omega = low - np.swapaxes(low, -1, -2)
    return X + np.swapaxes(omega - C, -1, -2) @ Q


def complete_orientation(partial, tol: float = 1e-8):
    """Unit vector completing n-1 orthonormal rows to a positively oriented basis.

    Computed by cofactor expansion (generalized cross product), so the
    orientation sign is exact.
    """
    F = np.asarray(partial, dtype=float)
    m, n = F.shape[-2], F.shape[-1]
    if m != n - 1:
        raise ValueError(f"need {n - 1} vectors in R^{n}, got {m}")
    G = F @ np.swapaxes(F, -1, -2)
    err = np.max(np.abs(G - np.eye(m)))
    if err > tol:
        raise ValueError(f"input frame is not orthonormal (deviation {err:.3g})")
    out = np.empty(F.shape[:-2] + (n,))
    for j in range(n):
        minor = np.delete(F, j, axis=-1)
        out[..., j] = (-1) ** (n - 1 + j) * np.linalg.det(minor)
    return out


@dataclass(frozen=True, eq=False)
class FrenetApparatus:
    """Frenet frame rows ``frame[..., i, :] = f_{i+1}``, curvatures and speed.

    Curvatures follow the arc-length Frenet equations
    ``f_i' = |alpha'| (-kappa_{i-1} f_{i-1} + kappa_i f_{i+1})``; the last
    one carries a sign.
    """

    frame: np.ndarray
    curvatures: np.ndarray
    speed: np.ndarray

    def frame_derivative(self) -> np.ndarray:
        """``d f_i / dt`` from the Frenet equations (exact, no differencing)."""
        F, k, v = self.frame, self.curvatures, self.speed
        n = F.shape[-1]
        D = np.zeros_like(F)
        for i in range(n):
            if i > 0:
                D[..., i, :] -= k[..., i - 1, None] * F[..., i - 1, :]
            if i < n - 1:
                D[..., i, :] += k[..., i, None] * F[..., i + 1, :]
        return D * v[..., None, None]


def frenet(curve: TrigCurve, t) -> FrenetApparatus:
    """Full Frenet apparatus from the exact jet ``alpha', ..., alpha^(n)``.

    With ``alpha^(j) = sum_i R_ij f_i`` the curvatures are
    ``kappa_i = R_{i+1,i+1} / (R_ii |alpha'|)``, where the last diagonal entry
    is the signed component ``<alpha^(n), f_n>``.
    """
    t = np.asarray(t, dtype=float)
    n = curve.dim
    jets = np.stack([curve.derivative(t, j) for j in range(1, n + 1)], axis=-2)
    try:
        Q, R = gram_schmidt(jets[..., : n - 1, :], return_r=True)
    except RankDeficiencyError as exc:
        if t.ndim == 0:
            exc.t = float(t)
        raise
    fn = complete_orientation(Q)
    frame = np.concatenate([Q, fn[..., None, :]], axis=-2)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    last = np.sum(jets[..., n - 1, :] * fn, axis=-1)
    diag = np.concatenate([diag, last[..., None]], axis=-1)
    speed = diag[..., 0]
    kappa = diag[..., 1:] / (diag[..., :-1] * speed[..., None])
    return FrenetApparatus(frame, kappa, speed)


def fiber_cross(frame, u, v):
    """Cross product of ``u`` and ``v`` inside the oriented 3-space spanned by ``frame``.

    ``frame`` has shape ``(..., 3, n)``; the fiber components of u, v are
    crossed in frame coordinates and mapped back to R^n.
    """
    B = np.asarray(frame, dtype=float)
    cu = np.einsum("...in,...n->...i", B, u)
    cv = np.einsum("...in,...n->...i", B, v)
    return np.einsum("...i,...in->...n", np.cross(cu, cv), B)
