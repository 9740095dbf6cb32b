"""Rank-3 oriented subbundles of the trivial bundle over a closed curve.

A bundle is represented by an oriented orthonormal frame ``B(t)`` of shape
``(..., 3, n)`` together with its t-derivative.  Everything else (projection,
the operator ``A_t``, covariant derivative, parallel transport) is derived
from that pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .curves import TWO_PI, TrigCurve
from .errors import RegularityError
from .frames import RANK_TOL, frenet, gram_schmidt, gs_derivative

KINDS = ("osculating", "orthogonal", "constant", "custom")
FD_STEP = 1e-4


def _swap(a):
    return np.swapaxes(a, -1, -2)


@dataclass(frozen=True, eq=False)
class BundleSpec:
    """An oriented rank-3 subbundle ``nu`` of the trivial bundle over S^1.

    Build instances with the helper constructors below rather than directly.
    ``fields`` (custom kind) are trig vector fields that are Gram-Schmidt
    orthonormalized pointwise, which keeps the frame derivative exact;
    ``func`` is an arbitrary frame generator differentiated numerically.
    """

    kind: str
    dim: int
    curve: TrigCurve | None = None
    vectors: np.ndarray | None = None
    fields: tuple | None = None
    func: Callable | None = None
    fd_step: float = FD_STEP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bundle kind {self.kind!r}; expected one of {KINDS}")

    @property
    def exact_derivative(self) -> bool:
        return self.func is None

    def frame(self, t) -> np.ndarray:
        return self.frame_and_derivative(t, derivative=False)[0]

    def frame_and_derivative(self, t, derivative: bool = True):
        """Oriented frame rows ``B(t)`` and ``dB/dt`` (``None`` if not requested)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            B = np.broadcast_to(self.vectors, t.shape + self.vectors.shape).copy()
            return B, (np.zeros_like(B) if derivative else None)
        if self.kind == "osculating":
            jets = np.stack([self.curve.derivative(t, j) for j in (1, 2, 3)], axis=-2)
            Q, R = gram_schmidt(jets, return_r=True)
            if not derivative:
                return Q, None
            Vd = np.stack([self.curve.derivative(t, j) for j in (2, 3, 4)], axis=-2)
            return Q, gs_derivative(Q, R, Vd)
        if self.kind == "orthogonal":
            fa = frenet(self.curve, t)
            n = self.dim
            # (fiber frame, f_1..f_{n-3}) positively oriented in R^n
            sign = np.ones(3)
            sign[2] = (-1.0) ** (n - 3)
            B = fa.frame[..., n - 3:, :] * sign[:, None]
            if not derivative:
                return B, None
            return B, fa.frame_derivative()[..., n - 3:, :] * sign[:, None]
        if self.fields is not None:
            V = np.stack([f.derivative(t, 0) for f in self.fields], axis=-2)
            Q, R = gram_schmidt(V, return_r=True)
            if not derivative:
                return Q, None
            Vd = np.stack([f.derivative(t, 1) for f in self.fields], axis=-2)
            return Q, gs_derivative(Q, R, Vd)
        B = gram_schmidt(self._call(t))
        if not derivative:
            return B, None
        h = self.fd_step
        dB = (gram_schmidt(self._call(t + h)) - gram_schmidt(self._call(t - h))) / (2 * h)
        return B, dB

    def _call(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.asarray(self.func(float(t)), dtype=float)
        return np.stack([np.asarray(self.func(float(x)), dtype=float) for x in t.ravel()]).reshape(
            t.shape + (3, self.dim))


def osculating_bundle(curve: TrigCurve) -> BundleSpec:
    """Fiber span(alpha', alpha'', alpha'''), oriented by that ordered basis."""
    return BundleSpec("osculating", curve.dim, curve=curve)


def orthogonal_bundle(curve: TrigCurve) -> BundleSpec:
    """Fiber span(f_{n-2}, f_{n-1}, f_n) of the Frenet frame.

    Oriented so that the fiber frame followed by f_1..f_{n-3} is a positive
    basis of R^n.  The frame is ``(f_{n-2}, f_{n-1}, (-1)^(n-3) f_n)``.
    """
    if curve.dim < 4:
        raise ValueError("the orthogonal bundle needs n >= 4")
    return BundleSpec("orthogonal", curve.dim, curve=curve)


def constant_bundle(vectors, tol: float = 1e-10) -> BundleSpec:
    V = np.asarray(vectors, dtype=float)
    if V.ndim != 2 or V.shape[0] != 3:
        raise ValueError("a constant bundle needs three vectors")
    if np.max(np.abs(V @ V.T - np.eye(3))) > tol:
        raise ValueError("constant bundle vectors must be orthonormal")
    V.setflags(write=False)
    return BundleSpec("constant", V.shape[1], vectors=V)


def trivial_bundle(n: int = 3) -> BundleSpec:
    """Span of the first three coordinate axes (all of R^3 when n = 3)."""
    return constant_bundle(np.eye(n)[:3])


def custom_bundle(generator, dim: int | None = None, fd_step: float = FD_STEP) -> BundleSpec:
    """Custom frame: a triple of TrigCurve vector fields, or a callable t -> (3, n)."""
    if callable(generator) and not isinstance(generator, (list, tuple)):
        if dim is None:
            dim = np.asarray(generator(0.0)).shape[-1]
        return BundleSpec("custom", dim, func=generator, fd_step=fd_step)
    fields = tuple(generator)
    if len(fields) != 3 or not all(isinstance(f, TrigCurve) for f in fields):
        raise ValueError("custom trig frames need exactly three TrigCurve fields")
    n = fields[0].dim
    if any(f.dim != n for f in fields):
        raise ValueError("custom frame fields must share a dimension")
    return BundleSpec("custom", n, fields=fields)


def make_bundle(kind: str, curve: TrigCurve | None = None, **kw) -> BundleSpec:
    if kind == "osculating":
        return osculating_bundle(curve)
    if kind == "orthogonal":
        return orthogonal_bundle(curve)
    if kind == "constant":
        return constant_bundle(kw.get("vectors", np.eye(curve.dim)[:3]))
    if kind == "custom":
        return custom_bundle(kw["generator"], dim=kw.get("dim"))
    raise ValueError(f"unknown bundle kind {kind!r}")


# ---------------------------------------------------------------- operators

def projection(bundle: BundleSpec, t) -> np.ndarray:
    """Orthogonal projection ``P(t) = B^T B`` onto the fiber."""
    B = bundle.frame(t)
    return _swap(B) @ B


def projection_derivative(bundle: BundleSpec, t) -> np.ndarray:
    B, dB = bundle.frame_and_derivative(t)
    D = _swap(dB) @ B
    return D + _swap(D)


def a_operator(bundle: BundleSpec, t) -> np.ndarray:
    """``A_t = P P' (I - P)``: maps the complement into the fiber, kills the fiber."""
    B, dB = bundle.frame_and_derivative(t)
    P = _swap(B) @ B
    D = _swap(dB) @ B
    Pd = D + _swap(D)
    return P @ Pd @ (np.eye(bundle.dim) - P)


def a_operator_from_frame(frame_fn: Callable, t: float, h: float = 1e-3) -> np.ndarray:
    """``x -> sum_i <x, o_t p_i'> p_i`` for an arbitrary oriented frame function.

    ``p_i'`` uses a five-point stencil, so ``frame_fn`` only needs to be
    smooth (e.g. a dense ODE solution).  Serves as the oracle for the
    frame-free formula.
    """
    p = np.asarray(frame_fn(t))
    dp = (-frame_fn(t + 2 * h) + 8 * frame_fn(t + h) - 8 * frame_fn(t - h) + frame_fn(t - 2 * h)) / (12 * h)
    n = p.shape[-1]
    o = np.eye(n) - p.T @ p
    return p.T @ (dp @ o)


def covariant_derivative(bundle: BundleSpec, section: Callable, t: float, h: float = 1e-5) -> np.ndarray:
    """``(Dh)(t) = P(t) h'(t)`` with a central difference for ``h'``."""
    hd = (np.asarray(section(t + h)) - np.asarray(section(t - h))) / (2 * h)
    return projection(bundle, t) @ hd


@dataclass(frozen=True, eq=False)
class TransportResult:
    frame: np.ndarray          # re-orthonormalized transported triple
    raw: np.ndarray            # integrator output before re-orthonormalization
    drift: float               # max |<h_i, h_j> - G0_ij|
    rotation: np.ndarray       # raw frame in coordinates of the start frame
    angle: float
    sol: Callable = field(repr=False, default=None)


def parallel_transport(bundle: BundleSpec, t0: float, t1: float, start, atol: float = 1e-10,
                       rtol: float = 1e-10) -> TransportResult:
    """Integrate ``h' = (I - P) P' h`` from ``t0`` to ``t1`` (RK45, dense output).

    ``rotation`` is ``raw @ start^T``; for a closed loop it is the holonomy.
    """
    start = np.asarray(start, dtype=float)
    n = bundle.dim
    P0 = projection(bundle, t0)
    if np.max(np.abs(start @ P0 - start)) > 1e-8:
        raise ValueError("start frame does not lie in the fiber at t0")
    eye = np.eye(n)

    def rhs(t, y):
        B, dB = bundle.frame_and_derivative(t)
        P = B.T @ B
        D = dB.T @ B
        H = y.reshape(3, n)
        return (H @ (D + D.T) @ (eye - P)).ravel()  # rows: h^T Pd (I-P) = ((I-P) Pd h)^T

    res = solve_ivp(rhs, (t0, t1), start.ravel(), method="RK45", atol=atol, rtol=rtol, dense_output=True)
    if not res.success:
        raise RegularityError(f"parallel transport failed: {res.message}", t=float(res.t[-1]))
    raw = res.y[:, -1].reshape(3, n)
    G0 = start @ start.T
    drift = float(np.max(np.abs(raw @ raw.T - G0)))
    rot = raw @ start.T
    angle = float(np.arccos(np.clip((np.trace(rot) - 1) / 2, -1, 1)))
    frame = gram_schmidt(raw)
    return TransportResult(frame, raw, drift, rot, angle, sol=lambda t: res.sol(t).reshape(3, n))


# ---------------------------------------------------------------- regularity

@dataclass
class RegularityReport:
    """Margins of the self-linking regularity conditions on a sample grid."""

    k: int
    condition1_margin: float
    condition1_location: tuple
    band_margin: float
    condition2_margins: dict
    condition2_locations: dict
    tolerances: dict
    grid: int
    passed: bool = False

    def failures(self) -> list[str]:
        out = []
        if not self.condition1_margin > self.tolerances["condition1"]:
            t, s = self.condition1_location
            out.append(f"condition 1: |n_t delta| = {self.condition1_margin:.3g} at (t={t:.6g}, s={s:.6g})")
        for key in ("a", "c"):
            if not self.condition2_margins[key] > self.tolerances[key]:
                out.append(f"condition 2({key}): margin {self.condition2_margins[key]:.3g} "
                           f"at t={self.condition2_locations[key]:.6g}")
        if not self.condition2_margins["b"] <= self.tolerances["b"]:
            out.append(f"condition 2(b): |n_t alpha^(j)| = {self.condition2_margins['b']:.3g} "
                       f"at t={self.condition2_locations['b']:.6g}")
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k, "pass": self.passed, "grid": self.grid,
            "condition1_margin": self.condition1_margin,
            "condition1_location": list(self.condition1_location),
            "band_margin": self.band_margin,
            "condition2_margins": dict(self.condition2_margins),
            "condition2_locations": dict(self.condition2_locations),
            "tolerances": dict(self.tolerances),
            "failures": self.failures(),
        }


def _condition2(curve: TrigCurve, bundle: BundleSpec, k: int, tg: np.ndarray):
    jets = np.stack([curve.derivative(tg, j) for j in range(1, k + 2)], axis=-2)
    _, R = gram_schmidt(jets, tol=0.0, return_r=True)
    resid = np.min(np.abs(np.diagonal(R, axis1=-2, axis2=-1)), axis=-1)
    B = bundle.frame(tg)
    cj = np.einsum("tin,tjn->tji", B, jets)  # fiber coordinates of each jet
    if k > 1:
        lead = np.max(np.linalg.norm(cj[:, : k - 1], axis=-1), axis=-1)
    else:
        lead = np.zeros(len(tg))
    wedge = np.linalg.norm(np.cross(cj[:, k - 1], cj[:, k]), axis=-1)
    return resid, lead, wedge


def check_sl_conditions(curve: TrigCurve, bundle: BundleSpec, k: int, grid: int = 512,
                        band: float | None = None, tol: float = 1e-9) -> RegularityReport:
    """Evaluate condition 1 and clauses 2(a)-(c) of the self-linking hypotheses.

    Condition 1 is sampled on a ``grid x grid`` lattice in ``(t, u = s - t)``
    away from the diagonal band ``|u| < band``; inside the band the
    normalized Taylor margin ``k! |n_t delta| / |u|^k`` is reported instead
    (it stays away from zero exactly when 2(b)-(c) hold).
    """
    n = curve.dim
    if not 1 <= k <= n - 2:
        raise ValueError(f"k must satisfy 1 <= k <= n-2 = {n - 2}, got {k}")
    band = TWO_PI / 64 if band is None else band
    h = TWO_PI / grid
    tg = np.arange(grid) * h
    ug = np.arange(1, grid) * h
    circ = np.minimum(ug, TWO_PI - ug)
    far = circ >= band

    best, loc, band_best = np.inf, (np.nan, np.nan), np.inf
    B = bundle.frame(tg)
    for i0 in range(0, grid, 64):
        sl = slice(i0, min(i0 + 64, grid))
        d = curve.chord(tg[sl, None], ug[None, :])
        m = np.linalg.norm(np.einsum("tin,tun->tui", B[sl], d), axis=-1)
        mf = np.where(far[None, :], m, np.inf)
        j = np.unravel_index(np.argmin(mf), mf.shape)
        if mf[j] < best:
            best = float(mf[j])
            t_at = tg[sl][j[0]]
            loc = (float(t_at), float((t_at + ug[j[1]]) % TWO_PI))
        if np.any(~far):
            ratio = m[:, ~far] * factorial(k) / circ[~far][None, :] ** k
            band_best = min(band_best, float(ratio.min()))

    resid, lead, wedge = _condition2(curve, bundle, k, tg)
    margins = {"a": float(resid.min()), "b": float(lead.max()), "c": float(wedge.min())}
    locs = {"a": float(tg[resid.argmin()]), "b": float(tg[lead.argmax()]), "c": float(tg[wedge.argmin()])}
    tols = {"condition1": tol, "a": RANK_TOL, "b": 1e-8, "c": tol}
    report = RegularityReport(k, best, loc, band_best, margins, locs, tols, grid)
    report.passed = not report.failures()
    return report


def detect_k(curve: TrigCurve, bundle: BundleSpec, grid: int = 512) -> int:
    """Smallest k whose clauses 2(a)-(c) hold on a ``grid``-point sample."""
    tg = np.arange(grid) * TWO_PI / grid
    for k in range(1, curve.dim - 1):
        resid, lead, wedge = _condition2(curve, bundle, k, tg)
        if resid.min() > RANK_TOL and lead.max() <= 1e-8 and wedge.min() > 1e-9:
            return k
    raise RegularityError("no k in 1..n-2 satisfies conditions 2(a)-(c)")
