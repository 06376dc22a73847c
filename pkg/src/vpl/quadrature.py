"""Panel-based Gauss-Legendre quadrature with geometric grading.

All singular/near-singular 1D integrals in the library run through these
helpers: an interval is broken at known breakpoints, panels are graded
geometrically toward the singular endpoints, and a fixed-order rule is
applied per panel.
"""

from __future__ import annotations

import functools

import numpy as np


@functools.lru_cache(maxsize=64)
def gauss_rule(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_panel(a: float, b: float, n: int):
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = gauss_rule(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def graded_breakpoints(a: float, b: float, toward: float, depth: int = 12,
                       ratio: float = 0.5) -> np.ndarray:
    """Panel breakpoints on [a, b], geometrically graded toward one endpoint.

    `toward` must equal a or b.  The panel adjacent to the graded endpoint
    has length (b-a)*ratio**depth.
    """
    length = b - a
    if length <= 0:
        return np.array([a, b])
    fractions = ratio ** np.arange(depth, -1, -1)
    if toward == a:
        return np.concatenate([[a], a + length * fractions])
    if toward == b:
        return np.concatenate([(b - length * fractions)[::-1], [b]])
    raise ValueError("grading target must be an endpoint")


def panel_nodes(segments, n: int, depth: int = 12, ratio: float = 0.5):
    """Assemble nodes/weights for a list of graded segments.

    `segments` is an iterable of (a, b, toward) with toward in {a, b, None};
    None means a single ungraded panel.  Returns flat (nodes, weights).
    """
    xs, ws = [], []
    gx, gw = gauss_rule(n)
    for a, b, toward in segments:
        if b - a <= 0:
            continue
        if toward is None:
            brk = np.array([a, b])
        else:
            brk = graded_breakpoints(a, b, toward, depth, ratio)
        lo, hi = brk[:-1], brk[1:]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        xs.append((mid[:, None] + half[:, None] * gx[None, :]).ravel())
        ws.append((half[:, None] * gw[None, :]).ravel())
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def split_segments(a: float, b: float, interior: tuple = ()):
    """Segments of [a, b] split at interior points, graded toward every cut.

    Each resulting sub-interval is halved and graded toward its two ends, so
    integrable singularities at a, b or any interior point are resolved.
    """
    pts = sorted({a, b, *[p for p in interior if a < p < b]})
    segs = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        segs.append((lo, mid, lo))
        segs.append((mid, hi, hi))
    return segs


def periodic_trapezoid(values: np.ndarray, period: float = 2.0 * np.pi) -> float:
    """Trapezoid rule for one full period sampled on a uniform grid.

    Spectrally accurate for smooth periodic integrands.
    """
    return float(np.mean(values) * period)
