"""Embedded Dormand–Prince 5(4) integrator with PI step-size control."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteState, StepUnderflow

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

MIN_STEP = 1e-14
_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(f, y0, t0: float, t1: float, rtol: float = 1e-9, atol: float = 1e-12,
              stats: StepStats | None = None, observer=None, max_step: float = np.inf) -> np.ndarray:
    """Solve y' = f(t, y) from t0 to t1 and return y(t1).

    ``observer(t, y)`` is called after every accepted step. ``max_step``
    keeps the controller from stepping over features narrower than the
    stage spacing, which the embedded estimate cannot see.
    """
    y = np.array(y0, dtype=float)
    if stats is None:
        stats = StepStats()
    span = t1 - t0
    if span == 0.0:
        return y
    direction = 1.0 if span > 0 else -1.0
    length = abs(span)
    t = t0
    k1 = f(t, y)
    stats.evaluations += 1
    h = _initial_step(f, t, y, k1, direction, rtol, atol)
    stats.evaluations += 1
    h = min(h, length, max_step)
    err_prev = 1e-4
    K = np.empty((7, y.size))
    while True:
        remaining = abs(t1 - t)
        if remaining <= 1e-15 * length:
            return y
        last = h >= remaining
        if last:
            h = remaining
        if h < MIN_STEP * length:
            raise StepUnderflow(f"step size {h:.3e} below {MIN_STEP:.0e} at t={t:.6g}")
        K[0] = k1
        for s in range(1, 7):
            ys = y + direction * h * (np.asarray(_A[s]) @ K[:s])
            K[s] = f(t + direction * h * _C[s], ys)
        stats.evaluations += 6
        y_new = y + direction * h * (_B5 @ K)
        if not np.all(np.isfinite(y_new)):
            raise NonFiniteState(f"non-finite state at t={t:.6g}")
        err_vec = h * (_E @ K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        if err <= 1.0:
            err = max(err, 1e-10)
            fac = _SAFETY * err ** -_EXPO * err_prev ** _BETA
            fac = min(5.0, max(0.2, fac))
            err_prev = err
            t = t1 if last else t + direction * h
            y = y_new
            k1 = K[6].copy()
            stats.accepted += 1
            if observer is not None:
                observer(t, y)
            if last:
                return y
            h = min(h * fac, max_step)
        else:
            stats.rejected += 1
            h *= max(0.2, _SAFETY * err ** -0.2)
