"""Closed curves in R^n stored as exact trigonometric polynomials of period 2*pi.

Each coordinate is ``c0 + sum_k (a_k cos kt + b_k sin kt)``.  Derivatives of
any order are obtained term by term, so every jet is exact up to roundoff.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import RegularityError, SpecError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class TrigCurve:
    """Closed curve ``t -> R^n`` with trigonometric-polynomial coordinates.

    ``cos[i, k]`` and ``sin[i, k]`` hold the coefficients of ``cos(kt)`` and
    ``sin(kt)`` in coordinate ``i``; column 0 of ``cos`` is the constant term
    and column 0 of ``sin`` is ignored (kept at zero).
    """

    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        c = np.array(self.cos, dtype=float, copy=True)
        s = np.array(self.sin, dtype=float, copy=True)
        if c.ndim != 2 or c.shape != s.shape:
            raise ValueError("cos and sin coefficient arrays must share a 2-d shape")
        if c.shape[0] < 3:
            raise ValueError(f"curves must live in R^n with n >= 3, got n={c.shape[0]}")
        s[:, 0] = 0.0
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @property
    def dim(self) -> int:
        return self.cos.shape[0]

    @property
    def max_harmonic(self) -> int:
        return self.cos.shape[1] - 1

    def __call__(self, t, m: int = 0) -> np.ndarray:
        return self.derivative(t, m)

    def derivative(self, t, m: int = 0) -> np.ndarray:
        """m-th derivative at ``t``; shape ``t.shape + (n,)``."""
        if m < 0:
            raise ValueError("derivative order must be non-negative")
        t = np.asarray(t, dtype=float)
        k = np.arange(self.cos.shape[1], dtype=float)
        kt = t[..., None] * k
        ck, sk = np.cos(kt), np.sin(kt)
        # d/dt rotates (cos, sin) -> (-sin, cos); cycle exactly instead of adding pi/2
        r = m % 4
        if r == 0:
            cm, sm = ck, sk
        elif r == 1:
            cm, sm = -sk, ck
        elif r == 2:
            cm, sm = -ck, -sk
        else:
            cm, sm = sk, -ck
        scale = k**m
        if m == 0:
            scale = np.ones_like(k)
        out = cm @ (self.cos * scale).T + sm @ (self.sin * scale).T
        return out

    def chord(self, t, u) -> np.ndarray:
        """``alpha(t + u) - alpha(t)`` without cancellation for small ``u``.

        Uses ``cos k(t+u) - cos kt = -2 sin(k(t + u/2)) sin(ku/2)`` and the
        matching sine identity, so the result keeps full relative accuracy
        as ``u -> 0``.
        """
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        k = np.arange(self.cos.shape[1], dtype=float)
        mid = (t + 0.5 * u)[..., None] * k
        half = 2.0 * np.sin(0.5 * u[..., None] * k)
        dc = -np.sin(mid) * half
        ds = np.cos(mid) * half
        return dc @ self.cos.T + ds @ self.sin.T

    def __add__(self, other: "TrigCurve") -> "TrigCurve":
        a, b = _pad(self, other)
        return TrigCurve(a.cos + b.cos, a.sin + b.sin)

    def scaled(self, factor: float) -> "TrigCurve":
        return TrigCurve(self.cos * factor, self.sin * factor)

    def shifted(self, offset) -> "TrigCurve":
        c = self.cos.copy()
        c[:, 0] += np.asarray(offset, dtype=float)
        return TrigCurve(c, self.sin)

    def derivative_curve(self, m: int) -> "TrigCurve":
        """The m-th derivative as a trig curve in its own right."""
        k = np.arange(self.cos.shape[1], dtype=float)
        c, s = self.cos.copy(), self.sin.copy()
        c[:, 0] = 0.0
        for _ in range(m):
            c, s = s * k, -c * k
        return TrigCurve(c, s)

    def reversed(self) -> "TrigCurve":
        """Same trace traversed backwards: ``t -> alpha(-t)``."""
        return TrigCurve(self.cos, -self.sin)

    def embed(self, n: int) -> "TrigCurve":
        """Append zero coordinates up to dimension ``n``."""
        if n < self.dim:
            raise ValueError("cannot embed into a lower dimension")
        pad = ((0, n - self.dim), (0, 0))
        return TrigCurve(np.pad(self.cos, pad), np.pad(self.sin, pad))

    def to_spec(self) -> dict:
        coords = []
        for i in range(self.dim):
            coords.append({
                "const": float(self.cos[i, 0]),
                "cos": {str(k): float(v) for k, v in enumerate(self.cos[i]) if k > 0 and v != 0.0},
                "sin": {str(k): float(v) for k, v in enumerate(self.sin[i]) if k > 0 and v != 0.0},
            })
        return {"dim": self.dim, "coords": coords}


def _pad(a: TrigCurve, b: TrigCurve) -> tuple[TrigCurve, TrigCurve]:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    K = max(a.cos.shape[1], b.cos.shape[1])

    def grow(c: TrigCurve) -> TrigCurve:
        pad = ((0, 0), (0, K - c.cos.shape[1]))
        return TrigCurve(np.pad(c.cos, pad), np.pad(c.sin, pad))

    return grow(a), grow(b)


def trig_curve(coords: list[dict]) -> TrigCurve:
    """Build a curve from ``[{"const": c0, "cos": {k: a_k}, "sin": {k: b_k}}, ...]``."""
    K = 0
    for c in coords:
        for key in ("cos", "sin"):
            for k in c.get(key, {}):
                K = max(K, int(k))
    cos = np.zeros((len(coords), K + 1))
    sin = np.zeros((len(coords), K + 1))
    for i, c in enumerate(coords):
        cos[i, 0] = float(c.get("const", 0.0))
        for k, v in c.get("cos", {}).items():
            cos[i, int(k)] += float(v)
        for k, v in c.get("sin", {}).items():
            sin[i, int(k)] += float(v)
    return TrigCurve(cos, sin)


@dataclass(frozen=True)
class Jet:
    t: float
    values: tuple

    @property
    def order(self) -> int:
        return len(self.values) - 1


def eval_jet(curve: TrigCurve, t: float, m: int) -> Jet:
    """Exact derivatives ``alpha(t), alpha'(t), ..., alpha^(m)(t)``."""
    if m < 0:
        raise ValueError("jet order must be non-negative")
    return Jet(float(t), tuple(curve.derivative(t, j) for j in range(m + 1)))


# ---------------------------------------------------------------- presets

PRESETS = ("example1", "example2")


def from_preset(name: str, A: float) -> TrigCurve:
    """The two R^4 families used as worked examples.

    example1: (cos(A+t) + sin^2 t, cos(A+2t), cos t, A sin(3t)/27)
    example2: (-cos(A+t) + A sin(2t)/8, -A^3 cos(2t)/8 + sin(A+t),
               sin(5t)/125, A^2 sin(3t)/27)
    """
    cA, sA = math.cos(A), math.sin(A)
    if name == "example1":
        coords = [
            # cos(A+t) = cos A cos t - sin A sin t ; sin^2 t = 1/2 - cos(2t)/2
            {"const": 0.5, "cos": {"1": cA, "2": -0.5}, "sin": {"1": -sA}},
            {"cos": {"2": cA}, "sin": {"2": -sA}},
            {"cos": {"1": 1.0}},
            {"sin": {"3": A / 27.0}},
        ]
    elif name == "example2":
        coords = [
            {"cos": {"1": -cA}, "sin": {"1": sA, "2": A / 8.0}},
            # sin(A+t) = sin A cos t + cos A sin t
            {"cos": {"1": sA, "2": -A**3 / 8.0}, "sin": {"1": cA}},
            {"sin": {"5": 1.0 / 125.0}},
            {"sin": {"3": A**2 / 27.0}},
        ]
    else:
        raise SpecError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return trig_curve(coords)


def circle(radius: float = 1.0, dim: int = 3, center=None) -> TrigCurve:
    coords = [{"cos": {"1": radius}}, {"sin": {"1": radius}}] + [{} for _ in range(dim - 2)]
    c = trig_curve(coords)
    return c.shifted(center) if center is not None else c


# ---------------------------------------------------------------- JSON specs

def load_curve_spec(spec: Any) -> TrigCurve:
    """Parse the curve-spec JSON object (or a preset reference)."""
    if not isinstance(spec, dict):
        raise SpecError("curve spec must be a JSON object")
    if "preset" in spec:
        if "A" not in spec:
            raise SpecError("preset spec needs field 'A'")
        try:
            A = float(spec["A"])
        except (TypeError, ValueError):
            raise SpecError(f"field 'A' must be a number, got {spec['A']!r}") from None
        return from_preset(spec["preset"], A)
    if "dim" not in spec or "coords" not in spec:
        raise SpecError("curve spec needs fields 'dim' and 'coords' (or 'preset')")
    dim, coords = spec["dim"], spec["coords"]
    if not isinstance(dim, int) or dim < 3:
        raise SpecError(f"field 'dim' must be an integer >= 3, got {dim!r}")
    if not isinstance(coords, list) or len(coords) != dim:
        raise SpecError(f"field 'coords' must list {dim} coordinates")
    for i, c in enumerate(coords):
        if not isinstance(c, dict):
            raise SpecError(f"coords[{i}] must be an object")
        unknown = set(c) - {"const", "cos", "sin"}
        if unknown:
            raise SpecError(f"coords[{i}] has unknown fields {sorted(unknown)}")
        for key in ("cos", "sin"):
            terms = c.get(key, {})
            if not isinstance(terms, dict):
                raise SpecError(f"coords[{i}].{key} must be an object keyed by harmonic")
            for k, v in terms.items():
                if not (isinstance(k, str) and k.isdigit() and int(k) >= 1):
                    raise SpecError(f"coords[{i}].{key} key {k!r} is not a positive integer string")
                if not isinstance(v, (int, float)):
                    raise SpecError(f"coords[{i}].{key}[{k}] must be a number")
        if not isinstance(c.get("const", 0.0), (int, float)):
            raise SpecError(f"coords[{i}].const must be a number")
    return trig_curve(coords)


def parse_curve_ref(ref: str) -> TrigCurve:
    """Resolve ``preset:example1?A=1.3`` or a path to a curve-spec JSON file."""
    if ref.startswith("preset:"):
        body = ref[len("preset:"):]
        name, _, query = body.partition("?")
        params = dict(p.split("=", 1) for p in query.split("&") if "=" in p)
        if "A" not in params:
            raise SpecError(f"preset reference {ref!r} needs '?A=<value>'")
        try:
            A = float(params["A"])
        except ValueError:
            raise SpecError(f"preset reference {ref!r}: A is not a number") from None
        return from_preset(name, A)
    try:
        with open(ref) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{ref}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise SpecError(f"{ref}: {exc.strerror}") from None
    return load_curve_spec(spec)


# ---------------------------------------------------------------- arc length

@dataclass(frozen=True, eq=False)
class ArcLengthTable:
    t: np.ndarray
    s: np.ndarray
    length: float

    def arclength(self, t):
        t = np.asarray(t, dtype=float)
        turns, tr = np.divmod(t, TWO_PI)
        return self._forward(tr) + turns * self.length

    def parameter(self, s):
        """Inverse lookup ``s -> t``."""
        s = np.asarray(s, dtype=float)
        turns, sr = np.divmod(s, self.length)
        return self._inverse(sr) + turns * TWO_PI

    def __post_init__(self):
        object.__setattr__(self, "_forward", PchipInterpolator(self.t, self.s))
        object.__setattr__(self, "_inverse", PchipInterpolator(self.s, self.t))


def arclength_table(curve: TrigCurve, M: int = 1024) -> ArcLengthTable:
    """Tabulate ``s(t) = int_0^t |alpha'|``.

    ``|alpha'|`` is periodic and smooth, so its Fourier coefficients from M
    equispaced samples integrate exactly term by term (spectral accuracy).
    """
    tg = np.arange(M) * TWO_PI / M
    speed = np.linalg.norm(curve.derivative(tg, 1), axis=-1)
    if speed.min() < 1e-9:
        i = int(speed.argmin())
        raise RegularityError(f"vanishing speed: |alpha'| = {speed[i]:.3g}", t=float(tg[i]))
    c = np.fft.rfft(speed) / M
    L = TWO_PI * c[0].real
    k = np.arange(1, len(c))
    if M % 2 == 0:
        c[-1] *= 0.5  # Nyquist term is shared between +-M/2
    tt = np.append(tg, TWO_PI)
    # int_0^t 2 Re(c_k e^{ikt}) dt = 2 Re(c_k (e^{ikt} - 1) / (ik))
    e = np.exp(1j * np.outer(tt, k)) - 1.0
    s = c[0].real * tt + 2.0 * np.real(e @ (c[1:] / (1j * k)))
    s[0], s[-1] = 0.0, L
    return ArcLengthTable(tt, s, float(L))
