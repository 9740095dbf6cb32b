"""Self-linking numbers of a closed curve relative to a rank-3 bundle.

Three independent routes:

* push-off limit: ``L_nu(alpha + delta alpha^(k), alpha)`` for small delta;
* integral: the double integral of the self-linking form over the strip
  ``0 <= t <= 2pi, t <= s <= t + 2pi`` (in ``(t, u = s - t)`` coordinates),
  minus the diagonal term ``(1/2pi) int phi`` when k is odd;
* intersection counting with the osculating or orthogonal developable.

For k odd the integrand flips sign between ``u = 0+`` and ``u = 2pi-`` (the
boundary values of ``e_1`` differ by ``(-1)^k``), so the u-axis uses
half-integer Fourier weights; for k even it is an ordinary periodic
function on the torus.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import (BundleSpec, check_sl_conditions, detect_k, orthogonal_bundle,
                      osculating_bundle)
from .curves import TWO_PI, TrigCurve, arclength_table
from .errors import CrossValidationError, RegularityError, RootCountError, UnstableLimitError
from .frames import frenet
from .linking import (FOUR_PI, MAX_RESIDUAL, InvariantResult, _fiber, detect_features,
                      density_tu, finalize, linking_number_integral, node_maps)
from .numerics import NodeMap, TorusGrid, circle_integral, find_roots, same_roots, torus_integral

DIAGONAL_BAND = 0.1
CROSS_CHECK_TOL = 2e-3


def pushoff(alpha: TrigCurve, k: int, delta: float) -> TrigCurve:
    """``alpha + delta * alpha^(k)`` as an exact trig curve."""
    if delta == 0:
        raise ValueError("push-off distance must be nonzero")
    return alpha + alpha.derivative_curve(k).scaled(delta)


def _resolve_k(alpha, bundle, k):
    return detect_k(alpha, bundle) if k is None else int(k)


def _require_conditions(alpha, bundle, k, grid=512):
    rep = check_sl_conditions(alpha, bundle, k, grid=grid)
    if not rep.passed:
        t, s = rep.condition1_location
        raise RegularityError("self-linking conditions fail: " + "; ".join(rep.failures()),
                              t=t if rep.condition1_margin <= rep.tolerances["condition1"] else None,
                              s=s if rep.condition1_margin <= rep.tolerances["condition1"] else None,
                              margin=rep.condition1_margin)
    return rep


# ---------------------------------------------------------------- push-off limit

def pushoff_margin(alpha: TrigCurve, bundle: BundleSpec, k: int, delta: float, grid: int = 256) -> float:
    """Smallest ``|n_t(alpha(s) - alpha_delta(t))|`` over an offset grid."""
    ad = pushoff(alpha, k, delta)
    x = (np.arange(grid) + 0.5) * TWO_PI / grid
    B = bundle.frame(x)
    d = alpha(x[None, :]) - ad(x[:, None])
    m = float(np.linalg.norm(np.einsum("tin,tsn->tsi", B, d), axis=-1).min())
    return m


def sl_limit(alpha: TrigCurve, bundle: BundleSpec, k: int | None = None, grid: int = 1024,
             deltas=None, check: bool = True, tol: float = 1e-9,
             max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """``lim_{delta -> 0} L_nu(alpha_delta, alpha)`` from two (or more) push-offs.

    ``delta_0`` is the largest of 1e-2, 1e-3, ... whose condition margin
    exceeds ``tol``; the values at ``delta_0`` and ``delta_0 / 2`` (or the
    given ``deltas``) must round to the same integer.
    """
    k = _resolve_k(alpha, bundle, k)
    if check:
        _require_conditions(alpha, bundle, k)
    if deltas is None:
        d0 = None
        for e in range(2, 8):
            cand = 10.0 ** -e
            if pushoff_margin(alpha, bundle, k, cand) > tol and pushoff_margin(alpha, bundle, k, cand / 2) > tol:
                d0 = cand
                break
        if d0 is None:
            raise RegularityError("no push-off distance down to 1e-7 keeps the condition margin")
        deltas = (d0, d0 / 2)
    raws, runs = {}, []
    for d in deltas:
        r = linking_number_integral(pushoff(alpha, k, d), alpha, bundle, grid, max_residual=np.inf)
        raws[d] = r.raw
        runs.append({"delta": d, "raw": r.raw, "quadrature_error": r.diagnostics["quadrature_error"],
                     "features": r.diagnostics["features"]})
    values = {int(np.rint(v)) for v in raws.values()}
    if len(values) != 1:
        raise UnstableLimitError(f"push-off values disagree: {raws}", raws=raws)
    raw = raws[min(deltas)]
    return finalize(raw, "limit", {"k": k, "grid": grid, "runs": runs}, max_residual)


# ---------------------------------------------------------------- integral formulas

def sl_density(alpha: TrigCurve, bundle: BundleSpec):
    """Self-linking integrand as a function of ``(t, u)``."""
    return density_tu(alpha, alpha, bundle)


def sl_grid(alpha: TrigCurve, bundle: BundleSpec, k: int, N: int, adaptive: bool = True,
            pilot: int = 256, band: float = DIAGONAL_BAND):
    parity = "periodic" if k % 2 == 0 else "antiperiodic"
    if not adaptive:
        return TorusGrid(N, parity=parity), []
    feats = detect_features(alpha, alpha, bundle, pilot=pilot, band=band)
    tmap, umap = node_maps(feats)
    return TorusGrid(N, parity=parity, xmap=tmap, ymap=umap), feats


def sl_double_integral(alpha: TrigCurve, bundle: BundleSpec, k: int, grid: TorusGrid | int = 512,
                       adaptive: bool = True):
    """``(1/4pi) int_S f``; returns (value, error estimate, grid, features)."""
    if isinstance(grid, int):
        g, feats = sl_grid(alpha, bundle, k, grid, adaptive)
    else:
        g, feats = grid, []
    v, err = torus_integral(sl_density(alpha, bundle), g)
    return v / FOUR_PI, err / FOUR_PI, g, feats


def sl_integral_even(alpha: TrigCurve, bundle: BundleSpec, k: int, grid=512, adaptive: bool = True,
                     check: bool = True, max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    if k % 2:
        raise ValueError("sl_integral_even needs an even k")
    if check:
        _require_conditions(alpha, bundle, k)
    raw, err, g, feats = sl_double_integral(alpha, bundle, k, grid, adaptive)
    return finalize(raw, "integral", {"k": k, "grid": g.N, "quadrature_error": err,
                                      "features": [f.to_dict() for f in feats]}, max_residual)


def diagonal_phi(alpha: TrigCurve, bundle: BundleSpec, k: int, t):
    """``phi(t) = omega_32(t, t)`` as the coefficient of dt.

    In fiber coordinates ``a = B alpha^(k)``, ``b = B alpha^(k+1)``,
    ``g = unit(b x a)`` and ``h = g x unit(a)``.  ``A_t`` kills the fiber, so
    ``phi = <(B^T g)', B^T h> = <g, B' B^T h> + <g', h>``; ``g'`` comes from
    the exact jets and the bundle's frame derivative.
    """
    t = np.asarray(t, dtype=float)
    B, dB = bundle.frame_and_derivative(t)
    j0, j1, j2 = (alpha(t, k + i) for i in range(3))
    a, b = _fiber(B, j0), _fiber(B, j1)
    da = _fiber(dB, j0) + b
    db = _fiber(dB, j1) + _fiber(B, j2)
    c = np.cross(b, a)
    nc = np.linalg.norm(c, axis=-1, keepdims=True)
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(nc < 1e-12) or np.any(na < 1e-12):
        raise RegularityError("diagonal frame degenerates (n alpha^(k) x n alpha^(k+1) = 0)")
    g = c / nc
    h = np.cross(g, a / na)
    dc = np.cross(db, a) + np.cross(b, da)
    dg = (dc - g * np.sum(g * dc, axis=-1, keepdims=True)) / nc
    hB = np.einsum("...i,...in->...n", h, B)
    return np.sum(g * _fiber(dB, hB), axis=-1) + np.sum(dg * h, axis=-1)


def sl_integral_odd(alpha: TrigCurve, bundle: BundleSpec, k: int, grid=512, adaptive: bool = True,
                    check: bool = True, circle_nodes: int = 1024,
                    max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    if k % 2 == 0:
        raise ValueError("sl_integral_odd needs an odd k")
    if check:
        _require_conditions(alpha, bundle, k)
    double, err, g, feats = sl_double_integral(alpha, bundle, k, grid, adaptive)
    phi_int = circle_integral(lambda t: diagonal_phi(alpha, bundle, k, t), circle_nodes)
    raw = double - phi_int / TWO_PI
    return finalize(raw, "integral", {"k": k, "grid": g.N, "quadrature_error": err,
                                      "double_integral": double, "phi_integral": phi_int,
                                      "features": [f.to_dict() for f in feats]}, max_residual)


def sl_integral(alpha: TrigCurve, bundle: BundleSpec, k: int | None = None, **kw) -> InvariantResult:
    k = _resolve_k(alpha, bundle, k)
    fn = sl_integral_even if k % 2 == 0 else sl_integral_odd
    return fn(alpha, bundle, k, **kw)


# ---------------------------------------------------------------- arc-length cross-checks

def _arclength_double(alpha: TrigCurve, integrand, feats, N: int, parity: str, M: int = 2048):
    """``int int integrand dsigma_t dsigma_u`` on an arc-length grid.

    Feature clusters found in ``(t, u)`` are transported to arc length at
    their detected location so the arc-length grid is refined in the same
    places.
    """
    table = arclength_table(alpha, M)
    L = table.length
    scale = TWO_PI / L
    speed = lambda x: float(np.linalg.norm(alpha(x, 1)))
    moved = []
    for f in feats:
        t0, u0 = f.at
        if f.axis == 0:
            c = table.arclength(t0) * scale
            w = f.width * speed(t0) * scale
        else:
            c = (table.arclength(t0 + u0) - table.arclength(t0)) * scale
            w = f.width * speed(t0 + u0) * scale
        moved.append((f.axis, c % TWO_PI, min(w, 0.5)))
    maps = []
    for axis in (0, 1):
        sel = [(c, w) for a, c, w in moved if a == axis]
        maps.append(NodeMap.from_features([c for c, _ in sel], [w for _, w in sel]) if sel else NodeMap())
    g = TorusGrid(N, parity=parity, xmap=maps[0], ymap=maps[1])

    def f(th_t, th_u):
        st = th_t / scale
        su = th_u / scale
        t = table.parameter(st)
        s = table.parameter(st + su)
        return integrand(t, s - t)

    v, _ = torus_integral(f, g)
    return v / scale**2, table


def orthogonal_arclength_density(alpha: TrigCurve):
    """Closed-form orthogonal integrand per unit arc length squared.

    ``<delta, f_{n-3}> kappa_{n-3} det(n delta, n T(s), f_{n-2}) / |n delta|^3``
    with T the unit tangent, evaluated in the oriented fiber frame.
    """
    n = alpha.dim
    bundle = orthogonal_bundle(alpha)

    def f(t, u):
        fa = frenet(alpha, t)
        B = bundle.frame(t)
        delta = alpha.chord(t, u)
        s = t + u
        T = alpha(s, 1)
        T = T / np.linalg.norm(T, axis=-1, keepdims=True)
        c1 = _fiber(B, delta)
        c3 = _fiber(B, T)
        e = np.zeros(3)
        e[0] = 1.0  # f_{n-2} in fiber coordinates
        coef = np.einsum("...n,...n->...", delta, fa.frame[..., n - 4, :]) * fa.curvatures[..., n - 4]
        det = np.einsum("...i,...i->...", c1, np.cross(c3, np.broadcast_to(e, c1.shape)))
        return coef * det / np.linalg.norm(c1, axis=-1) ** 3

    return f


def osculating_arclength_density(alpha: TrigCurve):
    """Closed-form osculating integrand per unit arc length squared.

    ``det(n delta, n T(s), T(t) - k <delta, o alpha_sigma''''> f_3) / |n delta|^3``
    with ``k = 1/(kappa_1 kappa_2)``; the arc-length fourth derivative has
    complement part ``o alpha'''' / |alpha'|^4``.
    """
    bundle = osculating_bundle(alpha)

    def f(t, u):
        fa = frenet(alpha, t)
        B = bundle.frame(t)
        v = fa.speed
        delta = alpha.chord(t, u)
        s = t + u
        Ts = alpha(s, 1)
        Ts = Ts / np.linalg.norm(Ts, axis=-1, keepdims=True)
        a4 = alpha(t, 4)
        o4 = a4 - np.einsum("...in,...i->...n", B, _fiber(B, a4))
        kk = 1.0 / (fa.curvatures[..., 0] * fa.curvatures[..., 1])
        coef = kk * np.einsum("...n,...n->...", delta, o4) / v**4
        col3 = fa.frame[..., 0, :] - coef[..., None] * fa.frame[..., 2, :]
        c1 = _fiber(B, delta)
        det = np.einsum("...i,...i->...", c1, np.cross(_fiber(B, Ts), _fiber(B, col3)))
        return det / np.linalg.norm(c1, axis=-1) ** 3

    return f


def _cross_check(raw, alt, tol, label):
    if abs(raw - alt) > tol:
        raise CrossValidationError(f"{label}: frame-free raw {raw:.8g} vs arc-length formula "
                                   f"{alt:.8g} differ by {abs(raw - alt):.3g} > {tol:g}")


def sl_orthogonal(alpha: TrigCurve, grid: int = 512, cross_check: bool = True,
                  cross_grid: int = 256, tol: float = CROSS_CHECK_TOL, check: bool = True,
                  max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """Orthogonal self-linking number via the generic integral (k = n - 2)."""
    n = alpha.dim
    bundle = orthogonal_bundle(alpha)
    k = n - 2
    res = sl_integral(alpha, bundle, k, grid=grid, check=check, max_residual=max_residual)
    res.method = "integral"
    if cross_check:
        g, feats = sl_grid(alpha, bundle, k, cross_grid)
        parity = "periodic" if k % 2 == 0 else "antiperiodic"
        dbl, table = _arclength_double(alpha, orthogonal_arclength_density(alpha), feats, cross_grid, parity)
        alt = dbl / FOUR_PI
        if n % 2:
            fa = lambda t: frenet(alpha, t)
            alt += circle_integral(lambda t: fa(t).curvatures[..., -1] * fa(t).speed, 1024) / TWO_PI
        _cross_check(res.raw, alt, tol, "orthogonal")
        res.diagnostics["cross_check"] = {"arc_length_raw": alt, "length": table.length, "grid": cross_grid}
    return res


def sl_osculating(alpha: TrigCurve, grid: int = 512, cross_check: bool = True,
                  cross_grid: int = 256, tol: float = CROSS_CHECK_TOL, check: bool = True,
                  max_residual: float = MAX_RESIDUAL) -> InvariantResult:
    """Osculating self-linking number via the generic k = 1 integral."""
    bundle = osculating_bundle(alpha)
    res = sl_integral_odd(alpha, bundle, 1, grid=grid, check=check, max_residual=max_residual)
    if cross_check:
        g, feats = sl_grid(alpha, bundle, 1, cross_grid)
        dbl, table = _arclength_double(alpha, osculating_arclength_density(alpha), feats, cross_grid,
                                       "antiperiodic")
        fa = lambda t: frenet(alpha, t)
        k2 = circle_integral(lambda t: fa(t).curvatures[..., 1] * fa(t).speed, 1024)
        alt = dbl / FOUR_PI + k2 / TWO_PI
        _cross_check(res.raw, alt, tol, "osculating")
        res.diagnostics["cross_check"] = {"arc_length_raw": alt, "length": table.length, "grid": cross_grid}
    return res


# ---------------------------------------------------------------- developable intersections

@dataclass
class IntersectionRecord:
    t: float
    s: float
    fiber_coords: tuple
    sign_factor: int
    index: int
    contribution: float
    jacobian_det: float

    @property
    def signed_index(self) -> int:
        return self.sign_factor * self.index

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["fiber_coords"] = list(self.fiber_coords)
        d["signed_index"] = self.signed_index
        return d


def _developable_roots(alpha: TrigCurve, rows, seeds: int, verify: bool):
    def system(x):
        t, s = x[..., 0], x[..., 1]
        F = frenet(alpha, t).frame
        d = alpha.chord(t, s - t)
        return np.stack([np.einsum("...n,...n->...", d, F[..., i, :]) for i in rows], axis=-1)

    def search(M):
        return find_roots(system, seeds=M, skip_band=2 * TWO_PI / M, diagonal_tol=0.05)

    found = search(seeds)
    if verify:
        again = search(2 * seeds)
        if not same_roots(found, again):
            raise RootCountError(f"developable roots changed between seed grids {seeds} ({len(found)}) "
                                 f"and {2 * seeds} ({len(again)})")
    return found


def osculating_developable_intersections(alpha: TrigCurve, seeds: int = 128, verify: bool = True,
                                         max_residual: float = MAX_RESIDUAL):
    """Intersections with ``chi(t, x) = alpha(t) + sum_{i <= n-2} x_i f_i(t)``; gives SL_perp.

    Each root contributes ``-(1/2) sgn<alpha'(s), b_3(t)>`` where ``b_3`` is
    the third vector of the oriented orthogonal-bundle frame,
    ``(-1)^(n-3) f_n``.  Records keep ``index = sgn<alpha'(s), f_n(t)>`` and
    the orientation constant ``sign_factor = -(-1)^(n-3)``.
    """
    n = alpha.dim
    found = _developable_roots(alpha, (n - 2, n - 1), seeds, verify)
    eps = (-1) ** (n - 3)
    recs = []
    for r in found:
        t, s = r.location
        F = frenet(alpha, np.array(t)).frame
        d = alpha.chord(np.array(t), np.array(s - t))
        x = tuple(float(d @ F[i]) for i in range(n - 2))
        if abs(x[-1]) < 1e-9:
            raise RegularityError("x_(n-2) vanishes at a developable root (immersion fails)", t=t, s=s)
        idx = int(np.sign(alpha(s, 1) @ F[n - 1]))
        sf = -eps
        recs.append(IntersectionRecord(t, s, x, sf, idx, 0.5 * sf * idx, r.jacobian_det))
    raw = float(sum(r.contribution for r in recs))
    res = finalize(raw, "intersection", {"developable": "osculating", "roots": [r.to_dict() for r in recs],
                                         "warnings": found.warnings, "seeds": seeds}, max_residual)
    return recs, res


def orthogonal_developable_intersections(alpha: TrigCurve, seeds: int = 128, verify: bool = True,
                                         max_residual: float = MAX_RESIDUAL):
    """Intersections with ``chi(t, x) = alpha(t) + sum_{i >= 3} x_i f_i(t)``; gives SL_top.

    The index is the sign of the full determinant
    ``det(alpha'(s), d_t chi, f_3, ..., f_n)`` with
    ``d_t chi = alpha'(t) + sum x_i f_i'(t)``; each root contributes
    ``(1/2) sgn(x_3) index``.
    """
    n = alpha.dim
    found = _developable_roots(alpha, (0, 1), seeds, verify)
    recs = []
    for r in found:
        t, s = r.location
        fa = frenet(alpha, np.array(t))
        F, dF = fa.frame, fa.frame_derivative()
        d = alpha.chord(np.array(t), np.array(s - t))
        x = np.array([d @ F[i] for i in range(2, n)])
        dchi = alpha(t, 1) + x @ dF[2:]
        E = np.linalg.det(np.vstack([alpha(s, 1), dchi, F[2:]]))
        if abs(x[0]) < 1e-9:
            raise RegularityError("x_3 vanishes at a developable root", t=t, s=s)
        idx = int(np.sign(E))
        sf = int(np.sign(x[0]))
        recs.append(IntersectionRecord(t, s, tuple(float(v) for v in x), sf, idx, 0.5 * sf * idx,
                                       r.jacobian_det))
    raw = float(sum(r.contribution for r in recs))
    res = finalize(raw, "intersection", {"developable": "orthogonal", "roots": [r.to_dict() for r in recs],
                                         "warnings": found.warnings, "seeds": seeds}, max_residual)
    return recs, res
