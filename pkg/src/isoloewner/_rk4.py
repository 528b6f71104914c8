"""Classical RK4 over dict-of-array states."""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

State = Dict[str, np.ndarray]


def _axpy(y: State, k: State, h: float) -> State:
    return {key: y[key] + h * k[key] for key in y}


def rk4_step(f: Callable[[float, State], State], y: State, h: float) -> State:
    """One RK4 step of ``y' = f(theta, y)`` where theta in [0, 1] is the step fraction.

    ``h`` is the step length; ``f`` receives the fraction so that callers can
    interpolate piecewise-linear inputs across the step.
    """
    k1 = f(0.0, y)
    k2 = f(0.5, _axpy(y, k1, h / 2))
    k3 = f(0.5, _axpy(y, k2, h / 2))
    k4 = f(1.0, _axpy(y, k3, h))
    return {
        key: y[key] + (h / 6.0) * (k1[key] + 2.0 * k2[key] + 2.0 * k3[key] + k4[key])
        for key in y
    }
