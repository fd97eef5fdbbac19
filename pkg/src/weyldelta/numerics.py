"""Shared quadrature rules and small fitting helpers.

Everything here is deliberately plain: cached Gauss-Legendre nodes, composite
panels, one adaptive scalar quadrature for smooth (non-oscillatory)
integrands, and a least-squares log-log slope. The oscillatory machinery
lives in :mod:`weyldelta.oscillate` and builds on these pieces.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from numpy.polynomial.legendre import leggauss


@functools.lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1]."""
    x, w = leggauss(order)
    return x.copy(), w.copy()


def panel_rule(a: float, b: float, panels: int, order: int = 16):
    """Composite Gauss-Legendre nodes/weights on [a, b] with equal panels."""
    if panels < 1:
        raise ValueError("panels must be >= 1")
    x0, w0 = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mids[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights


def edges_rule(edges, order: int = 16):
    """Composite Gauss-Legendre rule over explicit panel edges."""
    edges = np.asarray(edges, dtype=float)
    x0, w0 = gauss_legendre(order)
    half = np.diff(edges) / 2.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mids[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights


def fixed_quad(f, a: float, b: float, panels: int = 8, order: int = 16):
    """Composite fixed-order quadrature of a vectorized callable."""
    x, w = panel_rule(a, b, panels, order)
    return np.sum(w * np.asarray(f(x)))


def adaptive_quad(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 48):
    """Adaptive quadrature for smooth scalar integrands.

    Bisects until the GL16-vs-GL8 discrepancy on a panel is below the
    proportionally allocated tolerance. `f` must accept numpy arrays.
    """
    x16, w16 = gauss_legendre(16)
    x8, w8 = gauss_legendre(8)

    def panel(lo, hi):
        h = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        coarse = h * np.sum(w8 * np.asarray(f(mid + h * x8)))
        fine = h * np.sum(w16 * np.asarray(f(mid + h * x16)))
        return fine, abs(fine - coarse)

    total = 0.0
    stack = [(float(a), float(b), 0)]
    span = float(b) - float(a)
    while stack:
        lo, hi, depth = stack.pop()
        fine, err = panel(lo, hi)
        if err <= tol * max((hi - lo) / span, 1e-300) or depth >= max_depth:
            total += fine
        else:
            mid = (lo + hi) / 2.0
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


def loglog_slope(xs, ys):
    """Least-squares slope of log|y| against log x.

    Points with |y| = 0 are dropped (they would be -inf in log space).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys))
    keep = ys > 0
    if keep.sum() < 2:
        raise ValueError("need at least two nonzero points for a slope fit")
    lx = np.log(xs[keep])
    ly = np.log(ys[keep])
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def loglog_fit(xs, ys):
    """Slope, intercept and standard error of the slope for log-log data."""
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys))
    keep = ys > 0
    lx = np.log(xs[keep])
    ly = np.log(ys[keep])
    n = len(lx)
    if n < 2:
        raise ValueError("need at least two nonzero points for a slope fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    if n > 2:
        sxx = np.sum((lx - lx.mean()) ** 2)
        se = math.sqrt(np.sum(resid**2) / (n - 2) / sxx)
    else:
        se = 0.0
    return float(slope), float(intercept), float(se)


def modular_inverse(a: int, c: int) -> int:
    """Inverse of a mod c; c = 1 returns 0 (empty residue system)."""
    if c == 1:
        return 0
    if math.gcd(a % c, c) != 1:
        raise ValueError(f"{a} is not invertible mod {c}")
    return pow(a % c, -1, c)


def unit_phases(numerators, c: int):
    """e(m/c) for integer numerators m, reduced mod c before exponentiation.

    Reducing in integer arithmetic keeps e((a+c)n/c) == e(an/c) bit-exact.
    """
    numerators = np.asarray(numerators)
    if c == 1:
        return np.ones(numerators.shape, dtype=complex)
    red = np.mod(numerators, c)
    return np.exp(2j * np.pi * red / c)


def primes_in(lo: int, hi: int):
    """Primes p with lo <= p <= hi (simple sieve)."""
    if hi < 2:
        return []
    sieve = bytearray([1]) * (hi + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(hi**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(sieve[p * p :: p])
    return [p for p in range(max(lo, 2), hi + 1) if sieve[p]]
