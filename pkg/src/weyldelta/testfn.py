"""Smooth compactly supported test windows.

Three constructions, all based on the bump phi(x) = exp(-1/(1-x^2)) on (-1,1):

* :func:`make_window_v`   - unit-integral window on [1, 2],
* :func:`make_window_u`   - plateau window, 1 on [1, 2], supported [1/2, 5/2],
* :func:`make_dyadic_partition` - dyadic partition of unity on [lo, hi].

Derivatives are evaluated through the exact rational recurrence

    phi^(j)(x) = phi(x) * P_j(x) / (1 - x^2)^(2j),
    P_{j+1} = P_j' (1-x^2)^2 + 4 j x P_j (1-x^2) - 2 x P_j,

built once in integer arithmetic, so they stay accurate arbitrarily close to
the support edges where finite differences would collapse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from .errors import PreconditionError
from .numerics import panel_rule

_J_MAX = 6

# underflow guard: exp(-1/w) for w below this is < 1e-304 and the rational
# prefactors cannot push it back into visible range
_W_FLOOR = 1.0 / 700.0


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_add(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _poly_diff(p):
    return [i * c for i, c in enumerate(p)][1:] or [0]


def _bump_prefactor_polys(j_max: int) -> List[np.ndarray]:
    """P_0 .. P_{j_max} of the bump-derivative recurrence, as float arrays."""
    one_minus_x2 = [1, 0, -1]
    polys = [[1]]
    for j in range(j_max):
        p = polys[-1]
        term1 = _poly_mul(_poly_diff(p), _poly_mul(one_minus_x2, one_minus_x2))
        term2 = _poly_mul([0, 4 * j], _poly_mul(p, one_minus_x2))
        term3 = _poly_mul([0, -2], p)
        polys.append(_poly_add(_poly_add(term1, term2), term3))
    return [np.array(p, dtype=float) for p in polys]


_BUMP_POLYS = _bump_prefactor_polys(_J_MAX)


def bump(u, order: int = 0):
    """phi^(order)(u) for the base bump phi(u) = exp(-1/(1-u^2)) on (-1,1)."""
    if order > _J_MAX:
        raise PreconditionError(f"bump derivatives available up to order {_J_MAX}")
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    w = 1.0 - u * u
    inside = w > _W_FLOOR
    if np.any(inside):
        ui = u[inside]
        wi = w[inside]
        val = np.exp(-1.0 / wi)
        if order == 0:
            out[inside] = val
        else:
            poly = np.polyval(_BUMP_POLYS[order][::-1], ui)
            out[inside] = val * poly / wi ** (2 * order)
    return out if out.shape else float(out)


# ---------------------------------------------------------------------------
# normalization and ramp machinery
# ---------------------------------------------------------------------------

# integral of the bump over (-1, 1); fixed panels of GL-20 reach ~1e-15
_RAMP_PANELS = 64
_RAMP_ORDER = 20
_ramp_nodes, _ramp_weights = panel_rule(-1.0, 1.0, _RAMP_PANELS, _RAMP_ORDER)
_ramp_edges = np.linspace(-1.0, 1.0, _RAMP_PANELS + 1)
_panel_sums = (_ramp_weights * bump(_ramp_nodes)).reshape(_RAMP_PANELS, _RAMP_ORDER).sum(axis=1)
_panel_cumsum = np.concatenate([[0.0], np.cumsum(_panel_sums)])

BUMP_MASS = float(_panel_cumsum[-1])  # integral of phi over (-1, 1)

from .numerics import gauss_legendre as _gl  # noqa: E402

_gl20_x, _gl20_w = _gl(20)


def _bump_cdf(s):
    """int_{-1}^{s} phi(u) du, vectorized, ~1e-15 absolute."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.shape)
    out[s <= -1.0] = 0.0
    out[s >= 1.0] = BUMP_MASS
    mid = (s > -1.0) & (s < 1.0)
    if np.any(mid):
        sm = s[mid]
        idx = np.minimum(
            np.searchsorted(_ramp_edges, sm, side="right") - 1, _RAMP_PANELS - 1
        )
        lo = _ramp_edges[idx]
        half = (sm - lo) / 2.0
        nodes = lo[:, None] + half[:, None] * (_gl20_x[None, :] + 1.0)
        partial = (half[:, None] * _gl20_w[None, :] * bump(nodes)).sum(axis=1)
        out[mid] = _panel_cumsum[idx] + partial
    return out


def smooth_step(s, order: int = 0):
    """C-infinity step: 0 for s <= -1, 1 for s >= 1, monotone in between.

    order >= 1 returns d^order/ds^order of the step, which is
    phi^(order-1)(s) / BUMP_MASS.
    """
    if order == 0:
        res = _bump_cdf(s) / BUMP_MASS
        return res if np.ndim(s) else float(res[0])
    return bump(s, order - 1) / BUMP_MASS


@dataclass
class SmoothWindow:
    """A smooth compactly supported window with exact-recurrence derivatives.

    support    : closed interval [a, b] outside which the window vanishes
    normalization : "unit-integral" | "plateau" | "partition-member"
    j_max      : highest derivative order available
    """

    support: Tuple[float, float]
    normalization: str
    evaluator: Callable[[np.ndarray, int], np.ndarray]
    j_max: int = _J_MAX
    plateau: Tuple[float, float] | None = None
    derivative_bounds: dict = field(default_factory=dict)

    def __call__(self, x):
        out = self.evaluator(np.asarray(x, dtype=float), 0)
        return float(np.asarray(out).reshape(-1)[0]) if np.ndim(x) == 0 else out

    def derivative(self, x, order: int):
        if order < 0 or order > self.j_max:
            raise PreconditionError(f"derivative order must be in [0, {self.j_max}]")
        out = self.evaluator(np.asarray(x, dtype=float), order)
        return float(np.asarray(out).reshape(-1)[0]) if np.ndim(x) == 0 else out

    def record_derivative_bounds(self, samples: int = 801):
        """max |W^(j)| * width^j over the support, j = 0..j_max."""
        a, b = self.support
        xs = np.linspace(a, b, samples)
        width = b - a
        for j in range(self.j_max + 1):
            self.derivative_bounds[j] = float(
                np.max(np.abs(self.evaluator(xs, j))) * width**j
            )
        return self.derivative_bounds


def make_window_v() -> SmoothWindow:
    """Unit-integral window V supported on [1, 2].

    V(x) = (2 / BUMP_MASS) * phi(2x - 3); the rescaling makes the integral
    exactly 1 up to the accuracy of BUMP_MASS (~1e-15).
    """
    c = 2.0 / BUMP_MASS

    def evaluate(x, order):
        return c * 2.0**order * bump(2.0 * x - 3.0, order)

    w = SmoothWindow(support=(1.0, 2.0), normalization="unit-integral", evaluator=evaluate)
    w.record_derivative_bounds()
    return w


def make_window_u() -> SmoothWindow:
    """Plateau window U: supported on [1/2, 5/2], exactly 1 on [1, 2].

    The ramps are the normalized bump integral: U(x) = S(4x - 3) going up,
    U(x) = S(9 - 4x) going down, with S the smooth step above.
    """

    def evaluate(x, order):
        x = np.atleast_1d(x)
        out = np.zeros(x.shape)
        up = (x > 0.5) & (x < 1.0)
        flat = (x >= 1.0) & (x <= 2.0)
        down = (x > 2.0) & (x < 2.5)
        if order == 0:
            out[up] = smooth_step(4.0 * x[up] - 3.0)
            out[flat] = 1.0
            out[down] = smooth_step(9.0 - 4.0 * x[down])
        else:
            out[up] = 4.0**order * smooth_step(4.0 * x[up] - 3.0, order)
            out[down] = (-4.0) ** order * smooth_step(9.0 - 4.0 * x[down], order)
        return out if out.shape else float(out)

    w = SmoothWindow(
        support=(0.5, 2.5), normalization="plateau", evaluator=evaluate, plateau=(1.0, 2.0)
    )
    w.record_derivative_bounds()
    return w


# signed Stirling numbers of the first kind, for d^m/dy^m F(log2(y/lo))
def _stirling_table(m_max: int):
    table = [[0] * (m_max + 1) for _ in range(m_max + 1)]
    table[1][1] = 1
    for m in range(1, m_max):
        for i in range(1, m + 2):
            table[m + 1][i] = table[m][i - 1] - m * table[m][i]
    return table


_STIRLING1 = _stirling_table(_J_MAX)
_LN2 = math.log(2.0)


def make_dyadic_partition(lo: float, hi: float) -> List[SmoothWindow]:
    """Smooth dyadic partition of unity on [lo, hi].

    With u = log2(y/lo) and the falling ramp rho(u) = 1 - S(2u - 1)
    (rho = 1 for u <= 0, rho = 0 for u >= 1), the windows

        W_j(y) = rho(u - j - 1) - rho(u - j),   j = -1, 0, ..., J-1,

    telescope to exactly 1 on [lo, lo * 2^J] >= [lo, hi] and vanish for
    y <= lo/2. Each piece is a bump over two octaves, so y^k W^(k) stays
    bounded for every k up to j_max.
    """
    if not (0 < lo < hi):
        raise PreconditionError("need 0 < lo < hi")
    if hi / lo < 2.0:
        raise PreconditionError("degenerate interval: hi/lo must be >= 2")
    big_j = int(math.ceil(math.log2(hi / lo)))

    def rho(u, order=0):
        if order == 0:
            return 1.0 - smooth_step(2.0 * u - 1.0)
        return -(2.0**order) * smooth_step(2.0 * u - 1.0, order)

    def make_piece(j):
        def evaluate(y, order):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            out = np.zeros(y.shape)
            pos = y > 0
            u = np.full(y.shape, -np.inf)
            u[pos] = np.log2(y[pos] / lo)
            if order == 0:
                out[pos] = rho(u[pos] - j - 1) - rho(u[pos] - j)
                return out if out.shape else float(out)
            # chain rule through u = ln(y/lo)/ln2 via Stirling-1 numbers
            acc = np.zeros(y.shape)
            for i in range(1, order + 1):
                coeff = _STIRLING1[order][i] / _LN2**i
                if coeff == 0:
                    continue
                fi = rho(u[pos] - j - 1, i) - rho(u[pos] - j, i)
                tmp = np.zeros(y.shape)
                tmp[pos] = coeff * fi
                acc += tmp
            with np.errstate(divide="ignore"):
                acc[pos] /= y[pos] ** order
            return acc if acc.shape else float(acc)

        return SmoothWindow(
            support=(lo * 2.0 ** float(j), lo * 2.0 ** float(j + 2)),
            normalization="partition-member",
            evaluator=evaluate,
        )

    pieces = [make_piece(j) for j in range(-1, big_j)]
    for p in pieces:
        p.record_derivative_bounds(samples=401)
    return pieces
