"""Linking number of two closed curves relative to a rank-3 bundle.

The integrand is evaluated frame-free: all vectors are expressed in the
bundle's oriented frame ``B(t)``, and the fiber part of ``A_t x`` is
``dB (I - P) x`` (because ``B P = B``), so no parallel frame is needed.

Double integrals are taken in sheared coordinates ``(t, u = s - t)``.  The
shear has unit Jacobian, turns the self-linking diagonal into the line
``u = 0`` and lets near-singular features be handled by per-axis node maps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bundles import BundleSpec, constant_bundle
from .curves import TWO_PI, TrigCurve
from .errors import RegularityError, ResidualError, RootCountError
from .numerics import NodeMap, TorusGrid, find_roots, same_roots, torus_integral

MAX_RESIDUAL = 0.05
FOUR_PI = 4.0 * np.pi


@dataclass
class InvariantResult:
    raw: float
    value: int | None
    residual: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"raw": self.raw, "value": self.value, "residual": self.residual,
                "method": self.method, "diagnostics": _jsonable(self.diagnostics)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def finalize(raw: float, method: str, diagnostics: dict | None = None,
             max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """Round ``raw`` to an integer, refusing when it is not close to one."""
    value = int(np.rint(raw))
    residual = abs(raw - value)
    if not residual < max_residual:
        raise ResidualError(
            f"{method}: raw value {raw:.6g} is {residual:.3g} from the nearest integer "
            f"(limit {max_residual:g}); refusing to round", raw=float(raw), residual=float(residual))
    return InvariantResult(float(raw), value, float(residual), method, dict(diagnostics or {}))


# ---------------------------------------------------------------- integrand

@dataclass(frozen=True, eq=False)
class PairTerms:
    """Fiber coordinates at ``(t, s = t + u)``.

    ``c1 = B delta``, ``c2 = B(-alpha'(t) + A_t delta)``, ``c3 = B beta'(s)``.
    ``c2`` is the t-derivative of ``c_t delta`` at fixed s and ``c3`` its
    s-derivative, both read in a parallel frame.
    """

    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    def density(self) -> np.ndarray:
        r = np.linalg.norm(self.c1, axis=-1)
        return np.einsum("...i,...i->...", self.c1, np.cross(self.c2, self.c3)) / r**3


def _fiber(B, x):
    return np.einsum("...in,...n->...i", B, x)


def pair_terms(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec, t, u) -> PairTerms:
    """Integrand ingredients on broadcast arrays ``t`` and ``u``.

    When ``beta is alpha`` the chord is computed without cancellation, which
    keeps the self-linking integrand accurate next to the diagonal.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    B, dB = bundle.frame_and_derivative(t)
    s = t + u
    if beta is alpha:
        delta = alpha.chord(t, u)
    else:
        delta = beta(s) - alpha(t)
    c1 = _fiber(B, delta)
    # fiber coordinates of A_t delta: dB delta - (dB B^T)(B delta)
    Ad = _fiber(dB, delta) - np.einsum("...ij,...j->...i", dB @ np.swapaxes(B, -1, -2), c1)
    c2 = -_fiber(B, alpha(t, 1)) + Ad
    c3 = _fiber(B, beta(s, 1))
    return PairTerms(c1, c2, c3)


def _check_margin(terms: PairTerms, t, u, tol: float = 1e-12):
    r = np.linalg.norm(terms.c1, axis=-1)
    if np.any(~(r > tol)):
        idx = np.unravel_index(np.argmin(np.where(np.isfinite(r), r, -1)), r.shape)
        tt = float(np.broadcast_to(t, r.shape)[idx])
        uu = float(np.broadcast_to(u, r.shape)[idx])
        raise RegularityError("beta(s) - alpha(t) lies in the fiber complement: |n_t delta| = "
                              f"{r[idx]:.3g}", t=tt, s=(tt + uu) % TWO_PI, margin=float(r[idx]))


def linking_integrand(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec, t, s):
    """Coefficient ``f`` of the pulled-back area form ``f dt ^ ds`` at ``(t, s)``."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(s, dtype=float) - t
    terms = pair_terms(alpha, beta, bundle, t, u)
    _check_margin(terms, t, u)
    return terms.density()


def density_tu(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec):
    """``(t, u) -> f(t, t + u)`` with the regularity check built in."""
    def f(t, u):
        terms = pair_terms(alpha, beta, bundle, t, u)
        _check_margin(terms, t, u)
        return terms.density()
    return f


# ---------------------------------------------------------------- node maps

@dataclass
class Feature:
    axis: int
    center: float
    width: float
    at: tuple

    def to_dict(self):
        return {"axis": "tu"[self.axis], "center": self.center, "width": self.width, "at": list(self.at)}


def _feature_widths(terms: PairTerms):
    """Newton distance ``|c| / |dc|`` to a near-zero of ``c = n_t delta`` along t and u.

    It bounds from below the parameter distance per radian turned by
    ``e_1 = c / |c|`` and equals it at the centre of a near-zero, where
    ``dc`` is perpendicular to ``c``.  Unlike the angular width it is already
    small at grid points some distance away from a very narrow feature, so
    a coarse pilot grid sees it.  Along t at fixed u the chord derivative is
    ``c2 + c3`` (both endpoints move).
    """
    r = np.linalg.norm(terms.c1, axis=-1)
    dt = np.linalg.norm(terms.c2 + terms.c3, axis=-1)
    du = np.linalg.norm(terms.c3, axis=-1)
    return r / np.maximum(dt, 1e-300), r / np.maximum(du, 1e-300)


def detect_features(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec, pilot: int = 256,
                    band: float = 0.0, threshold: float = 0.25, max_features: int = 6,
                    collapse: float = 1e-9):
    """Locate narrow features of the integrand.

    A near-zero of ``n_t delta`` with margin m, or a spike of ``A_t``, makes
    ``e_1`` turn quickly over a parameter distance given by
    :func:`_feature_widths`.  Local minima of the per-axis profile
    ``min_other_axis width`` below ``threshold`` are polished with
    Nelder-Mead.  ``band`` excludes ``|u| < band`` (the self-linking diagonal,
    where the chord itself vanishes).  A polished width below ``collapse``
    means ``n_t delta`` actually vanishes there: RegularityError names the
    point.
    """
    h = TWO_PI / pilot
    x = (np.arange(pilot) + 0.5) * h
    terms = pair_terms(alpha, beta, bundle, x[:, None], x[None, :])
    _check_margin(terms, x[:, None], x[None, :])
    wt, wu = _feature_widths(terms)
    ucirc = np.minimum(x, TWO_PI - x)
    allowed = ucirc >= band
    wt = np.where(allowed[None, :], wt, np.inf)
    wu = np.where(allowed[None, :], wu, np.inf)

    def width_at(axis, p):
        tt, uu = p
        uc = min(uu % TWO_PI, TWO_PI - uu % TWO_PI)
        if uc < band:
            return np.inf
        tm = pair_terms(alpha, beta, bundle, np.array([tt]), np.array([uu]))
        return float(_feature_widths(tm)[axis][0])

    feats = []
    for axis, W in ((0, wt), (1, wu)):
        prof = W.min(axis=1 - axis)
        other = W.argmin(axis=1 - axis)
        left, right = np.roll(prof, 1), np.roll(prof, -1)
        cand = np.nonzero((prof <= left) & (prof <= right) & (prof < threshold))[0]
        cand = cand[np.argsort(prof[cand])]
        found = []
        for i in cand:
            p0 = (x[i], x[other[i]]) if axis == 0 else (x[other[i]], x[i])
            res = minimize(lambda p: width_at(axis, p), p0, method="Nelder-Mead",
                           options={"xatol": 1e-5, "fatol": 1e-7, "maxiter": 400,
                                    "initial_simplex": [p0, (p0[0] + h / 2, p0[1]), (p0[0], p0[1] + h / 2)]})
            c, wmin = float(res.x[axis] % TWO_PI), float(min(res.fun, prof[i]))
            if not np.isfinite(wmin):
                continue
            if wmin < collapse:
                tt, uu = float(res.x[0] % TWO_PI), float(res.x[1])
                raise RegularityError(f"n_t delta vanishes (Newton distance {wmin:.3g})",
                                      t=tt, s=float((tt + uu) % TWO_PI), margin=wmin)
            if any(min(abs(c - f.center), TWO_PI - abs(c - f.center)) < 2 * max(f.width, wmin) for f in found):
                continue
            found.append(Feature(axis, c, wmin, (float(res.x[0] % TWO_PI), float(res.x[1] % TWO_PI))))
            if len(found) >= max_features:
                break
        feats.extend(found)
    return feats


def node_maps(features, **kw):
    maps = []
    for axis in (0, 1):
        fs = [f for f in features if f.axis == axis]
        maps.append(NodeMap.from_features([f.center for f in fs], [f.width for f in fs], **kw)
                    if fs else NodeMap())
    return maps


def mapped_grid(alpha, beta, bundle, N: int, parity: str = "periodic", band: float = 0.0,
                pilot: int = 256, adaptive: bool = True):
    """A TorusGrid with node maps fitted to the integrand's features."""
    if not adaptive:
        return TorusGrid(N, parity=parity), []
    feats = detect_features(alpha, beta, bundle, pilot=pilot, band=band)
    tmap, umap = node_maps(feats)
    return TorusGrid(N, parity=parity, xmap=tmap, ymap=umap), feats


# ---------------------------------------------------------------- integral method

def linking_number_integral(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec,
                            grid: TorusGrid | int = 256, adaptive: bool = True,
                            max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """``(1/4pi) int f dt ds`` on a (mapped) tensor grid in ``(t, u)``.

    The pilot pass of the feature detector doubles as the condition
    pre-check: a vanishing ``n_t delta`` raises RegularityError there.
    """
    if isinstance(grid, int):
        g, feats = mapped_grid(alpha, beta, bundle, grid, adaptive=adaptive)
    else:
        g, feats = grid, []
    value, err = torus_integral(density_tu(alpha, beta, bundle), g)
    raw = value / FOUR_PI
    diag = {"grid": g.N, "quadrature_error": err / FOUR_PI, "features": [f.to_dict() for f in feats]}
    return finalize(raw, "integral", diag, max_residual)


# ---------------------------------------------------------------- intersection method

def _mu_functions(bundle: BundleSpec, mu, h: float = 1e-5):
    if mu is None or isinstance(mu, (int, np.integer)):
        i = 0 if mu is None else int(mu)

        def val(t):
            return bundle.frame(t)[..., i, :]

        def der(t):
            return bundle.frame_and_derivative(t)[1][..., i, :]
    elif not callable(mu) and not isinstance(mu, TrigCurve):
        vec = np.asarray(mu, dtype=float)

        def val(t):
            return np.broadcast_to(vec, np.shape(t) + vec.shape)

        def der(t):
            return np.zeros(np.shape(t) + vec.shape)
    elif isinstance(mu, TrigCurve):
        def val(t):
            return mu(t)

        def der(t):
            return mu(t, 1)
    else:
        def val(t):
            t = np.asarray(t, dtype=float)
            try:
                v = np.asarray(mu(t), dtype=float)
                if v.shape[:-1] == t.shape:
                    return v
            except Exception:
                pass
            return np.stack([np.asarray(mu(float(x)), dtype=float) for x in t.ravel()]).reshape(t.shape + (-1,))

        def der(t):
            return (val(np.asarray(t) + h) - val(np.asarray(t) - h)) / (2 * h)
    return val, der


@dataclass
class LinkIntersection:
    t: float
    s: float
    lam: float
    index: int
    contribution: float
    jacobian_det: float

    def to_dict(self):
        return dict(self.__dict__)


def linking_number_intersection(alpha: TrigCurve, beta: TrigCurve, bundle: BundleSpec, mu=None,
                                seeds: int = 128, verify: bool = True,
                                max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """Count transverse intersections of ``beta`` with ``chi(t, lam, x) = alpha + lam mu + nu_t^perp``.

    Each root ``(t, s, lam)`` contributes ``sgn(lam) * index / 2`` where the
    index is the sign of ``det(B beta'(s), B(alpha' + lam mu' - A(delta - lam mu)), B mu)``
    in oriented fiber coordinates.  ``mu`` (a constant vector, TrigCurve,
    callable, or an integer selecting a frame vector) defaults to the first
    frame vector.
    """
    mval, mder = _mu_functions(bundle, mu)

    def system(x):
        t, s, lam = x[..., 0], x[..., 1], x[..., 2]
        B = bundle.frame(t)
        return _fiber(B, beta(s) - alpha(t) - lam[..., None] * mval(t))

    def scan(x):
        t, s = x[..., 0], x[..., 1]
        B = bundle.frame(t)
        c = _fiber(B, beta(s) - alpha(t))
        m = _fiber(B, mval(t))
        return np.cross(c, m / np.linalg.norm(m, axis=-1, keepdims=True))

    def lift(x):
        t, s = x[:, 0], x[:, 1]
        B = bundle.frame(t)
        c = _fiber(B, beta(s) - alpha(t))
        m = _fiber(B, mval(t))
        lam = np.einsum("ki,ki->k", c, m) / np.einsum("ki,ki->k", m, m)
        return np.column_stack([t, s, lam])

    def search(M):
        return find_roots(system, seeds=M, scan=scan, lift=lift, exclude_diagonal=False,
                          flag="norm")

    found = search(seeds)
    if verify:
        again = search(2 * seeds)
        if not same_roots(found, again):
            raise RootCountError(f"root set changed between seed grids {seeds} ({len(found)} roots) "
                                 f"and {2 * seeds} ({len(again)} roots)")
    records = []
    for r in found:
        t, s, lam = r.location
        B, dB = bundle.frame_and_derivative(np.array(t))
        m = mval(np.array(t))
        delta = beta(s) - alpha(t)
        x = delta - lam * m
        Ax = dB @ x - (dB @ B.T) @ (B @ x)
        col2 = B @ (alpha(t, 1) + lam * mder(np.array(t))) - Ax
        E = np.linalg.det(np.stack([B @ beta(s, 1), col2, B @ m]))
        idx = int(np.sign(E))
        records.append(LinkIntersection(t, s, lam, idx, 0.5 * float(np.sign(lam)) * idx, r.jacobian_det))
    raw = float(sum(rec.contribution for rec in records))
    diag = {"roots": [rec.to_dict() for rec in records], "seeds": seeds, "warnings": found.warnings}
    return finalize(raw, "intersection", diag, max_residual)


# ---------------------------------------------------------------- R^3 oracle

def gauss_integrand(alpha: TrigCurve, beta: TrigCurve, t, s):
    """Classical ``det(alpha'(t), beta'(s), alpha(t) - beta(s)) / |alpha(t) - beta(s)|^3``."""
    r = alpha(t) - beta(s)
    d = np.linalg.norm(r, axis=-1)
    if np.any(~(d > 1e-6)):
        i = np.unravel_index(np.argmin(np.where(np.isfinite(d), d, -1)), d.shape)
        tt = float(np.broadcast_to(t, d.shape)[i])
        ss = float(np.broadcast_to(s, d.shape)[i])
        raise RegularityError(f"curves intersect: |alpha(t) - beta(s)| = {d[i]:.3g}", t=tt, s=ss,
                              margin=float(d[i]))
    tan = np.cross(alpha(t, 1), beta(s, 1))
    return np.einsum("...i,...i->...", tan, r) / d**3


def gauss_linking_r3(alpha: TrigCurve, beta: TrigCurve, grid: int = 256,
                     max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """Gauss linking integral of two disjoint closed curves in R^3."""
    if alpha.dim != 3 or beta.dim != 3:
        raise ValueError("the Gauss integral needs curves in R^3")
    value, err = torus_integral(lambda t, s: gauss_integrand(alpha, beta, t, s), TorusGrid(grid))
    return finalize(value / FOUR_PI, "gauss_r3", {"grid": grid, "quadrature_error": err / FOUR_PI},
                    max_residual)


def projected_bundle(n: int) -> BundleSpec:
    """Constant bundle spanned by the first three coordinate axes of R^n."""
    return constant_bundle(np.eye(n)[:3])
