"""Query access to ``x(t) + g(t)`` with an auditable sample counter."""

from __future__ import annotations

import numpy as np


class NoisyOracle:
    """Wraps a signal evaluator and an additive noise evaluator.

    The counter increases by exactly one per sample point drawn, so the
    sample complexity an algorithm reports is the counter delta across its
    run.  Evaluators take an ``(m, ...)`` batch of points and return ``(m,)``
    complex values.
    """

    def __init__(self, signal_eval, noise_eval=None):
        self._signal = signal_eval
        self._noise = noise_eval
        self.count = 0

    def sample(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        m = 1 if points.ndim == 0 else points.shape[0]
        self.count += int(m)
        vals = np.asarray(self._signal(points), dtype=complex)
        if self._noise is not None:
            vals = vals + np.asarray(self._noise(points), dtype=complex)
        return vals
