"""Composite Gauss-Legendre helpers shared by the envelope and coherence code."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError

DEFAULT_ORDER = 16
DEFAULT_TOL = 1e-10
MAX_PANELS = 2**15


@lru_cache(maxsize=None)
def unit_rule(order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def initial_panels(rate_max: float, period: float, support: int) -> int:
    """Smallest power of two keeping rate*h and the harmonic phase per panel O(1)."""
    need = max(16.0, rate_max * period / 2.0, 4.0 * support)
    return int(2 ** np.ceil(np.log2(need)))


def refine(compute, tol: float, start: int, compare=None, max_panels: int = MAX_PANELS):
    """Double the panel count until two successive results agree.

    ``compute(P)`` returns an array; ``compare(coarse, fine)`` optionally
    maps both onto common samples (default: identity). Returns
    ``(fine, panels, change)``.
    """
    panels = start
    prev = compute(panels)
    while True:
        if panels >= max_panels:
            raise ConvergenceError(
                f"quadrature not converged to {tol:g} with {panels} panels"
            )
        panels *= 2
        cur = compute(panels)
        a, b = (prev, cur) if compare is None else compare(prev, cur)
        change = float(np.max(np.abs(b - a))) if np.size(a) else 0.0
        scale = max(1.0, float(np.max(np.abs(b)))) if np.size(b) else 1.0
        if change <= tol * scale:
            return cur, panels, change
        prev = cur
