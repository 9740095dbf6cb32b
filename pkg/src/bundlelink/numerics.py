"""Periodic quadrature on the circle and torus, and torus root finding.

Quadrature nodes may be redistributed by a fixed smooth change of variables
(:class:`NodeMap`) that concentrates points near narrow integrand features.
The map is periodic and analytic, so the transformed integrand stays smooth
and periodic and the midpoint rule keeps its spectral accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import TWO_PI
from .errors import TransversalityError

TRANSVERSALITY_FLOOR = 1e-6
ROOT_TOL = 1e-9


# ---------------------------------------------------------------- node maps

@dataclass(frozen=True, eq=False)
class NodeMap:
    """Density ``rho(x) = (1 - sum q) + sum_j q_j P_{r_j}(x - c_j)`` on the circle.

    ``P_r`` is the Poisson kernel normalized to mean one, with ``1 - r``
    equal to the cluster width.  Nodes are ``x_i = Theta^{-1}(theta_i)``
    for equispaced ``theta_i``, where ``Theta' = rho`` and ``Theta(0) = 0``;
    the Jacobian is ``1 / rho(x_i)``.
    """

    centers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    widths: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = np.mod(np.asarray(self.centers, dtype=float).ravel(), TWO_PI)
        w = np.asarray(self.widths, dtype=float).ravel()
        q = np.asarray(self.weights, dtype=float).ravel()
        if not (c.shape == w.shape == q.shape):
            raise ValueError("centers, widths and weights must have equal length")
        if np.any(w <= 0) or np.any(w >= 1) or np.any(q < 0) or q.sum() >= 1:
            raise ValueError("need 0 < width < 1, q >= 0 and sum(q) < 1")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "weights", q)

    @property
    def identity(self) -> bool:
        return self.centers.size == 0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.identity:
            return np.ones_like(x)
        r = 1.0 - self.widths
        P = (1 - r**2) / (1 - 2 * r * np.cos(x[..., None] - self.centers) + r**2)
        return (1 - self.weights.sum()) + P @ self.weights

    def _antiderivative(self, x):
        """Unwrapped ``2 atan(k tan(y/2))`` per cluster, ``y = x - c``."""
        r = 1.0 - self.widths
        k = (1 + r) / (1 - r)
        y = x[..., None] - self.centers
        m = np.floor((y + np.pi) / TWO_PI)
        yy = y - TWO_PI * m
        return 2 * np.arctan(k * np.tan(yy / 2)) + TWO_PI * m

    def cumulative(self, x):
        x = np.asarray(x, dtype=float)
        if self.identity:
            return x.copy()
        g = self._antiderivative(x) - self._antiderivative(np.zeros(()))
        return (1 - self.weights.sum()) * x + g @ self.weights

    def invert(self, theta):
        """Solve ``Theta(x) = theta`` on [0, 2pi] by vectorized bisection."""
        theta = np.asarray(theta, dtype=float)
        if self.identity:
            return theta.copy()
        lo = np.zeros_like(theta)
        hi = np.full_like(theta, TWO_PI)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cumulative(mid) < theta
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def nodes(self, N: int, offset: float = 0.5):
        """Mapped nodes and Jacobians ``dx/dtheta`` for ``theta_i = (i + offset) 2pi/N``."""
        theta = (np.arange(N) + offset) * TWO_PI / N
        x = self.invert(theta)
        return x, 1.0 / self.density(x)

    @classmethod
    def from_features(cls, centers, widths, weight: float = 0.08, ratio: float = 4.0,
                      max_width: float = 0.5, total: float = 0.7) -> "NodeMap":
        """Graded clusters: for each feature, widths ``w, ratio*w, ...`` up to ``max_width``.

        Nesting several scales at one centre gives a density roughly
        proportional to ``1/|x - c|`` between the smallest and largest width,
        which resolves features with algebraic tails.  Weights are scaled down
        if their sum would exceed ``total``.
        """
        cs, ws = [], []
        for c, w in zip(np.atleast_1d(centers), np.atleast_1d(widths)):
            w = float(min(max(w, 1e-5), max_width))
            while True:
                cs.append(c)
                ws.append(w)
                if w * ratio > max_width:
                    break
                w *= ratio
        q = np.full(len(cs), weight)
        if q.sum() > total:
            q *= total / q.sum()
        return cls(np.array(cs), np.array(ws), q)


IDENTITY_MAP = NodeMap()


# ---------------------------------------------------------------- quadrature

def antiperiodic_weights(N: int, offset: float = 0.5) -> np.ndarray:
    """Weights integrating ``sin(m u)``, ``cos(m u)`` exactly for half-integer ``m < N/2``.

    For integrands on (0, 2pi) whose periodic extension flips sign across
    ``u = 0`` (smooth on the double cover), this restores spectral accuracy
    that the plain midpoint rule loses to the jump.  Requires ``offset = 1/2``
    so the cosine modes integrate to zero by symmetry.
    """
    if offset != 0.5:
        raise ValueError("antiperiodic weights need offset 1/2")
    u = (np.arange(N) + 0.5) * TWO_PI / N
    m = np.arange(N // 2) + 0.5
    return (4.0 / N) * (np.sin(np.outer(u, m)) / m).sum(axis=1)


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Tensor grid on the torus with optional node maps per axis.

    ``parity`` refers to the second axis: ``"antiperiodic"`` selects the
    half-integer weights (for the odd-k self-linking integrand written in
    ``(t, u = s - t)``).
    """

    N: int = 256
    offset: float = 0.5
    parity: str = "periodic"
    xmap: NodeMap = IDENTITY_MAP
    ymap: NodeMap = IDENTITY_MAP

    def __post_init__(self):
        N = self.N
        if N < 16 or N & (N - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {N}")
        if self.parity not in ("periodic", "antiperiodic"):
            raise ValueError(f"unknown parity {self.parity!r}")

    def axis(self, which: int):
        """Nodes and weights along axis 0 or 1."""
        m = self.xmap if which == 0 else self.ymap
        x, jac = m.nodes(self.N, self.offset)
        if which == 1 and self.parity == "antiperiodic":
            w = antiperiodic_weights(self.N, self.offset)
        else:
            w = np.full(self.N, TWO_PI / self.N)
        return x, w * jac

    def halved(self) -> "TorusGrid":
        return TorusGrid(self.N // 2, self.offset, self.parity, self.xmap, self.ymap)

    def doubled(self) -> "TorusGrid":
        return TorusGrid(self.N * 2, self.offset, self.parity, self.xmap, self.ymap)

    def with_size(self, N: int) -> "TorusGrid":
        return TorusGrid(N, self.offset, self.parity, self.xmap, self.ymap)


def _torus_sum(f, grid: TorusGrid, block: int = 64) -> float:
    x, wx = grid.axis(0)
    y, wy = grid.axis(1)
    total = 0.0
    for i0 in range(0, grid.N, block):
        F = np.asarray(f(x[i0:i0 + block, None], y[None, :]), dtype=float)
        F = np.broadcast_to(F, (len(x[i0:i0 + block]), grid.N))
        if not np.all(np.isfinite(F)):
            i, j = np.argwhere(~np.isfinite(F))[0]
            raise FloatingPointError(
                f"non-finite integrand at (x={x[i0 + i]:.6g}, y={y[j]:.6g})")
        total += wx[i0:i0 + block] @ F @ wy
    return float(total)


def torus_integral(f, grid: TorusGrid | int = 256):
    """Integral of ``f(x, y)`` over [0, 2pi]^2 with an error estimate.

    ``f`` receives broadcastable arrays (a column of x and a row of y).
    Returns ``(value, |value(N) - value(N/2)|)``.
    """
    if isinstance(grid, int):
        grid = TorusGrid(grid)
    v = _torus_sum(f, grid)
    coarse = _torus_sum(f, grid.halved()) if grid.N >= 32 else v
    return v, abs(v - coarse)


def circle_integral(f, N: int = 512) -> float:
    """Trapezoid rule on ``N`` equispaced nodes of [0, 2pi)."""
    t = np.arange(N) * TWO_PI / N
    v = np.asarray(f(t), dtype=float)
    if not np.all(np.isfinite(v)):
        i = int(np.argwhere(~np.isfinite(v))[0, 0])
        raise FloatingPointError(f"non-finite integrand at t={t[i]:.6g}")
    return float(v.sum() * TWO_PI / N)


# ---------------------------------------------------------------- root finding

@dataclass
class RootRecord:
    location: tuple
    residual: float
    jacobian_det: float
    newton_iters: int

    @property
    def t(self) -> float:
        return self.location[0]

    @property
    def s(self) -> float:
        return self.location[1]


@dataclass
class RootSearch:
    roots: list
    warnings: list
    seeds: int
    flagged: int

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def _circ(d):
    return np.abs((d + np.pi) % TWO_PI - np.pi)


def same_roots(a: RootSearch, b: RootSearch, tol: float = 1e-6) -> bool:
    """Whether two searches found the same root set (torus distance on t, s)."""
    if len(a) != len(b):
        return False
    for ra in a:
        x = np.asarray(ra.location)
        if not any(np.max(np.concatenate([_circ(x[:2] - np.asarray(rb.location)[:2]),
                                          np.abs(x[2:] - np.asarray(rb.location)[2:])])) < tol
                   for rb in b):
            return False
    return True


def _jacobian(system, x, h):
    m = x.shape[-1]
    J = np.empty(x.shape + (m,))
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        J[..., j] = (system(x + e) - system(x - e)) / (2 * h)
    return J


def _newton(system, x, tol, max_iter, h):
    """Damped Newton on a batch of starting points; returns (x, res, iters, ok)."""
    F = system(x)
    res = np.max(np.abs(F), axis=-1)
    iters = np.zeros(len(x), dtype=int)
    active = res >= tol
    for it in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa, Fa = x[idx], F[idx]
        J = _jacobian(system, xa, h)
        # pinv keeps the batch going when a Jacobian is (numerically) singular
        step = (np.linalg.pinv(J) @ -Fa[..., None])[..., 0]
        step = np.where(np.isfinite(step), step, 0.0)
        # cap steps at half a radian so seeds do not jump across the torus
        big = np.max(np.abs(step[..., :2]), axis=-1, keepdims=True)
        step = step * np.minimum(1.0, 0.5 / np.maximum(big, 1e-300))
        lam = np.ones(len(idx))
        ra = res[idx]
        for _ in range(12):
            xn = xa + lam[:, None] * step
            Fn = system(xn)
            rn = np.max(np.abs(Fn), axis=-1)
            worse = ~(rn < ra) & (lam > 1e-3)
            if not worse.any():
                break
            lam = np.where(worse, lam / 2, lam)
        x[idx], F[idx], res[idx] = xn, Fn, rn
        iters[idx] += 1
        active = res >= tol
    return x, res, iters, res < tol


def find_roots(system, seeds: int = 128, scan=None, lift=None, exclude_diagonal: bool = True,
               diagonal_tol: float = 1e-3, skip_band: float = 0.0, tol: float = ROOT_TOL,
               max_iter: int = 50, fd_step: float = 1e-6, dedupe: float = 1e-4,
               floor: float = TRANSVERSALITY_FLOOR, flag: str = "sign") -> RootSearch:
    """Transverse zeros of ``system`` on the torus (times R for a third unknown).

    ``system`` maps arrays ``(..., m)`` of ``(t, s[, lam])`` to ``(..., m)``.
    A ``seeds x seeds`` grid scan of ``scan`` (a map ``(..., 2) -> (..., 2)``
    on the torus, default ``system`` when m = 2) flags cells where both
    components change sign; ``lift`` turns a flagged ``(t, s)`` into a full
    starting point.  Seeds in the band ``|s - t| < skip_band`` are skipped.
    With ``flag="norm"`` a cell is flagged instead when its smallest corner
    value is no larger than the variation across the cell (for scan maps
    whose components need not change sign individually).
    """
    scan = system if scan is None else scan
    h = TWO_PI / seeds
    g = np.arange(seeds) * h
    T, S = np.meshgrid(g, g, indexing="ij")
    V = scan(np.stack([T, S], axis=-1))
    corners = np.stack([V, np.roll(V, -1, 0), np.roll(V, -1, 1), np.roll(np.roll(V, -1, 0), -1, 1)])
    if flag == "sign":
        hit = np.ones(V.shape[:2], dtype=bool)
        for c in range(V.shape[-1]):
            hit &= (corners[..., c].min(0) <= 0) & (corners[..., c].max(0) >= 0)
    elif flag == "norm":
        size = np.linalg.norm(corners, axis=-1).min(0)
        spread = np.zeros(V.shape[:2])
        for a in range(4):
            for b in range(a + 1, 4):
                spread = np.maximum(spread, np.linalg.norm(corners[a] - corners[b], axis=-1))
        hit = size <= spread
    else:
        raise ValueError(f"unknown flag mode {flag!r}")
    ii, jj = np.nonzero(hit)
    x0 = np.stack([g[ii] + h / 2, g[jj] + h / 2], axis=-1)
    if skip_band > 0:
        x0 = x0[_circ(x0[:, 1] - x0[:, 0]) >= skip_band]
    flagged = len(x0)
    if lift is not None and len(x0):
        x0 = lift(x0)
    warnings = []
    roots = []
    if len(x0):
        x, res, iters, ok = _newton(system, x0.copy(), tol, max_iter, fd_step)
        for k in np.nonzero(~ok)[0]:
            if exclude_diagonal and _circ(x[k, 1] - x[k, 0]) < diagonal_tol:
                continue
            warnings.append(f"Newton did not converge from seed (t={x0[k, 0]:.5f}, s={x0[k, 1]:.5f}): "
                            f"residual {res[k]:.3g} after {iters[k]} iterations")
        good = np.nonzero(ok)[0]
        xs = x[good].copy()
        xs[:, :2] %= TWO_PI
        xs[:, :2][xs[:, :2] > TWO_PI - 1e-12] = 0.0
        keep = []
        for k, xk in zip(good, xs):
            if exclude_diagonal and _circ(xk[1] - xk[0]) < diagonal_tol:
                continue
            dup = False
            for kk, xx in keep:
                d = np.concatenate([_circ(xk[:2] - xx[:2]), np.abs(xk[2:] - xx[2:])])
                if np.max(d) < dedupe:
                    dup = True
                    break
            if not dup:
                keep.append((k, xk))
        if keep:
            pts = np.array([xk for _, xk in keep])
            J = _jacobian(system, pts, fd_step)
            dets = np.linalg.det(J)
            for (k, xk), det in zip(keep, dets):
                if abs(det) < floor:
                    raise TransversalityError(
                        f"non-transverse root at ({', '.join(f'{v:.6g}' for v in xk)}): |det J| = {abs(det):.3g} < {floor:g}",
                        location=tuple(float(v) for v in xk), jacobian_det=float(det))
                roots.append(RootRecord(tuple(float(v) for v in xk), float(res[k]), float(det), int(iters[k])))
    roots.sort(key=lambda r: (round(r.location[0], 9), round(r.location[1], 9)))
    return RootSearch(roots, warnings, seeds, flagged)
