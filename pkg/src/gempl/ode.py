"""Classic fixed-step fourth-order Runge-Kutta stepping."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """Advance ``y`` from ``t`` to ``t + dt`` with one classic RK4 step.

    ``f(t, y)`` must return an array shaped like ``y``; real and complex
    states are both fine.
    """
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def fixed_steps(t_end: float, dt: float) -> tuple[int, float]:
    """Split ``[0, t_end]`` into equal steps no longer than ``dt``.

    Returns ``(n, h)`` with ``n * h == t_end`` and ``h <= dt``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return n, t_end / n
