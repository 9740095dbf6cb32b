from __future__ import annotations

import functools

import pytest

from bundlelink import from_preset

PRESET_CELLS = [("example1", 1.0), ("example1", 1.3), ("example2", 1.6)]

# criterion number -> list of (ok, detail) lines, filled by test_acceptance
ACCEPTANCE: dict[int, list] = {}


@functools.lru_cache(maxsize=None)
def preset(name: str, A: float):
    return from_preset(name, A)


@pytest.fixture(params=PRESET_CELLS, ids=lambda p: f"{p[0]}-A{p[1]:g}")
def preset_curve(request):
    return preset(*request.param)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        results = ACCEPTANCE[n]
        ok = all(r[0] for r in results)
        detail = "; ".join(r[1] for r in results)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


class GaugedBundle:
    """Same fiber as ``base`` with the frame rotated by ``G(t) = Q0 exp(theta(t) K)``.

    The rotation has an exact derivative, so any frame dependence of the
    linking integrand shows up at roundoff level.
    """

    def __init__(self, base, rng):
        import numpy as np
        from scipy.spatial.transform import Rotation

        self.base, self.dim, self.kind = base, base.dim, base.kind
        self.Q0 = Rotation.random(random_state=rng.integers(2**31)).as_matrix()
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        self.K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
        self.a, self.b, self.m = rng.normal(size=2).tolist() + [int(rng.integers(1, 4))]

    def _rot(self, t):
        import numpy as np

        th = self.a * np.sin(t) + self.b * np.cos(self.m * t)
        dth = self.a * np.cos(t) - self.m * self.b * np.sin(self.m * t)
        K, K2 = self.K, self.K @ self.K
        s, c = np.sin(th)[..., None, None], np.cos(th)[..., None, None]
        R = np.eye(3) + s * K + (1 - c) * K2
        dR = dth[..., None, None] * (c * K + s * K2)
        return self.Q0 @ R, self.Q0 @ dR

    def frame_and_derivative(self, t, derivative=True):
        import numpy as np

        t = np.asarray(t, dtype=float)
        B, dB = self.base.frame_and_derivative(t)
        G, dG = self._rot(t)
        return G @ B, (dG @ B + G @ dB) if derivative else None

    def frame(self, t):
        return self.frame_and_derivative(t, derivative=False)[0]
