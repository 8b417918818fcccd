"""Closed-form reference fields for the verification cases."""

from __future__ import annotations

import numpy as np


def taylor_green_velocity(pts: np.ndarray, t: float, re: float) -> np.ndarray:
    """Decaying two-dimensional vortex array: velocity at (n, 2+) points."""
    decay = np.exp(-2.0 * np.pi**2 * t / re)
    x, y = pts[:, 0], pts[:, 1]
    u = -np.cos(np.pi * x) * np.sin(np.pi * y) * decay
    v = np.sin(np.pi * x) * np.cos(np.pi * y) * decay
    return np.stack([u, v], axis=1)


def taylor_green_pressure(pts: np.ndarray, t: float, re: float) -> np.ndarray:
    decay = np.exp(-4.0 * np.pi**2 * t / re)
    return -0.25 * (np.cos(2 * np.pi * pts[:, 0]) + np.cos(2 * np.pi * pts[:, 1])) * decay
