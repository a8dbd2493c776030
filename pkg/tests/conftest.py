import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]], dtype=float)


def rotation(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k


class TwoCameras:
    """Calibrated pair x2 ~ K (R X + t), x1 ~ K X with F built from the essential matrix."""

    def __init__(self, seed=0):
        rng = np.random.default_rng(seed)
        self.k = np.array([[500.0, 0, 320], [0, 500.0, 240], [0, 0, 1]])
        self.r = rotation(rng.normal(size=3), rng.uniform(0.05, 0.25))
        t = rng.normal(size=3)
        self.t = t / np.linalg.norm(t)
        kinv = np.linalg.inv(self.k)
        f = kinv.T @ skew(self.t) @ self.r @ kinv
        self.f = f / np.linalg.norm(f)
        self.rng = rng

    def points3d(self, n):
        return np.column_stack([self.rng.uniform(-1, 1, (n, 2)), self.rng.uniform(4, 8, n)])

    def project(self, x):
        h1 = x @ self.k.T
        h2 = (x @ self.r.T + self.t) @ self.k.T
        return np.hstack([h1[:, :2] / h1[:, 2:], h2[:, :2] / h2[:, 2:]])

    def correspondences(self, n):
        return self.project(self.points3d(n))


@pytest.fixture
def cameras():
    return TwoCameras(7)


def same_up_to_scale(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
