"""Two-sided numerical verification of the dual summation formula

    sum_n lambda(n) e(a n / c) W(n / N)
        = (eta / sqrt(M)) (N / c) sum_pm chi(-/+ c)
          sum_n lambda(n) e(-/+ conj(aM) n / c) What_pm(n N / (M c^2)),

for gcd(a, c) = gcd(c, M) = 1, where What_pm is a contour transform of W
against the archimedean factor of the form:

    holomorphic weight k:
        What_plus(y)  = (i^(k-1)/2) int_(sigma) m_W(s) y^(-s/2) gamma_k(s) ds,
        What_minus    = 0,
    Maass (ell, eps_g):
        What_plus(y)  = (1/2i)     int_(sigma) m_W(s) y^(-s/2) (C_{l,0} - C_{l,1})(s) ds,
        What_minus(y) = (eps_g/2i) int_(sigma) m_W(s) y^(-s/2) (C_{l,0} + C_{l,1})(s) ds,

with m_W(s) = int W(x) x^(-s/2) dx and the contour differential ds = i dtau.
The inner x-integral is evaluated first (it decays superpolynomially in the
contour height because W is smooth), then the tau-integral is truncated
where that decay beats the tolerance. Panel widths shrink like
1/log(tau) to track the accelerating gamma-factor phase.

eta has modulus one but is otherwise measured, not assumed:
:func:`calibrate_eta` fits it across probe instances and the unconstrained
least-squares modulus coming out at 1 is itself a check of all the
normalization above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import CalibrationError, PreconditionError
from .forms import CuspForm
from .numerics import edges_rule, modular_inverse, panel_rule, unit_phases
from .specialfn import GammaFactorKind, gamma_factor
from .testfn import SmoothWindow

DEFAULT_SIGMA_HOLOMORPHIC = 0.5
DEFAULT_SIGMA_MAASS = 0.1


def default_sigma(kind: GammaFactorKind) -> float:
    if kind.family == "holomorphic":
        return DEFAULT_SIGMA_HOLOMORPHIC
    # small positive abscissa; for exceptional (imaginary) spectral values the
    # contour must stay right of the first factor pole at 2|Im ell|
    sigma = DEFAULT_SIGMA_MAASS
    bound = 2 * abs(complex(kind.ell).imag)
    if sigma <= bound:
        sigma = bound + 0.05
    return sigma


class WhatTransform:
    """Precomputed evaluator for What_pm of one (kind, window) pair.

    Two regimes:

    * y below `y_split`: the contour form, with m_W and the gamma factors
      tabulated once on an oscillation-adapted tau grid; each value is then
      a weighted dot product.
    * y above `y_split`, holomorphic kinds only: the same transform written
      against its oscillatory kernel. The contour collapses to the Mellin
      representation of the order-(k-1) Bessel function, i.e.

          What_plus(y) = 2 pi i^k int W(x) J_{k-1}(4 pi sqrt(x y)) dx,

      and the kernel's high-frequency expansion (three cosine and three
      sine correction terms) is accurate to ~1e-10 relative once
      4 pi sqrt(x y) >= 260. This keeps deep right-hand-side tails cheap;
      the contour route would need absolute-accuracy levels that the
      oscillatory cancellation there cannot deliver.

    Maass kinds always use the contour route.
    """

    Y_SPLIT = 450.0

    def __init__(
        self,
        kind: GammaFactorKind,
        window: SmoothWindow,
        sigma: Optional[float] = None,
        tau_max: float = 2000.0,
        y_max: float = 4000.0,
        u_panels: int = 160,
    ):
        self.kind = kind
        self.window = window
        self.sigma = default_sigma(kind) if sigma is None else float(sigma)
        self.tau_max = float(tau_max)
        a, b = window.support
        if a <= 0:
            raise PreconditionError("window support must lie in (0, infinity)")
        self.holomorphic = kind.family == "holomorphic"
        # the contour table only serves y below the split for holomorphic
        contour_y = self.Y_SPLIT if self.holomorphic else y_max

        # tau panels on [0, tau_max]; width tracks the combined phase rate
        # log(tau/4pi) + |log y|/2 so GL-16 sees <= ~1.5 cycles per panel
        edges = [0.0]
        t = 0.0
        log_y = abs(math.log(contour_y)) / 2.0
        while t < self.tau_max:
            rate = max(math.log(max(t, 8.0) / (4 * math.pi)), 0.2) + log_y + 0.5
            t = min(t + min(2 * math.pi * 1.5 / rate, 8.0), self.tau_max)
            edges.append(t)
        self.tau_nodes, self.tau_weights = edges_rule(np.array(edges), order=16)

        # m_W(sigma + i tau) = int Wt(u) e^{-i tau u / 2} du after x = e^u
        u_nodes, u_weights = panel_rule(math.log(a), math.log(b), u_panels, 16)
        wt = window(np.exp(u_nodes)) * np.exp(u_nodes * (1 - self.sigma / 2)) * u_weights
        m_vals = np.empty(len(self.tau_nodes), dtype=complex)
        chunk = 4000
        for i in range(0, len(self.tau_nodes), chunk):
            phases = np.exp(-0.5j * np.outer(self.tau_nodes[i : i + chunk], u_nodes))
            m_vals[i : i + chunk] = phases @ wt
        self.mellin_values = m_vals
        self.mellin_tail = float(np.abs(m_vals[-16:]).max())

        s_nodes = self.sigma + 1j * self.tau_nodes
        if kind.family == "holomorphic":
            gam = np.array([gamma_factor(kind, s) for s in s_nodes])
            self.kernel_plus = m_vals * gam
            self.kernel_minus = None
            k = kind.weight
            self.front_plus = 1j**(k - 1) / 2.0
            self.front_minus = 0.0
        else:
            kind0 = GammaFactorKind("maass", ell=kind.ell, parity=0)
            kind1 = GammaFactorKind("maass", ell=kind.ell, parity=1)
            g0 = np.array([gamma_factor(kind0, s) for s in s_nodes])
            g1 = np.array([gamma_factor(kind1, s) for s in s_nodes])
            self.kernel_plus = m_vals * (g0 - g1)
            self.kernel_minus = m_vals * (g0 + g1)
            self.front_plus = 1.0 / 2j
            self.front_minus = 1.0 / 2j  # times eps_g at evaluation

    def _eval_contour(self, ys: np.ndarray, kernel: np.ndarray, front: complex) -> np.ndarray:
        # conjugate symmetry in tau (real window, real spectral data):
        # int_R = 2 Re int_0^inf; ds = i dtau
        log_y = np.log(ys)
        out = np.empty(len(ys), dtype=complex)
        chunk = 2048
        weighted = self.tau_weights * kernel
        for i in range(0, len(ys), chunk):
            phases = np.exp(-0.5 * np.outer(log_y[i : i + chunk], self.sigma + 1j * self.tau_nodes))
            out[i : i + chunk] = front * 1j * 2 * (phases @ weighted).real
        return out

    def _eval_bessel(self, ys: np.ndarray) -> np.ndarray:
        """Far regime via the order-(k-1) kernel's high-frequency expansion."""
        k = self.kind.weight
        nu = k - 1
        mu = 4.0 * nu * nu
        a, b = self.window.support
        chunk = 1024
        order = np.argsort(ys)
        ys_sorted = ys[order]
        vals = np.empty(len(ys), dtype=complex)
        for i in range(0, len(ys_sorted), chunk):
            block = ys_sorted[i : i + chunk]
            y_hi = block[-1]
            # phase 2 sqrt(x y) spans ~2 sqrt(y_hi)(sqrt(b)-sqrt(a)) cycles
            cycles = 2 * math.sqrt(y_hi) * (math.sqrt(b) - math.sqrt(a))
            panels = max(8, int(math.ceil(1.2 * cycles)))
            xs, ws = panel_rule(a, b, panels, 16)
            wx = ws * self.window(xs)
            v = 4 * math.pi * np.sqrt(np.outer(block, xs))
            inv8v = 1.0 / (8.0 * v)
            p_ser = (
                1.0
                - (mu - 1) * (mu - 9) / 2.0 * inv8v**2
                + (mu - 1) * (mu - 9) * (mu - 25) * (mu - 49) / 24.0 * inv8v**4
            )
            q_ser = (
                (mu - 1) * inv8v
                - (mu - 1) * (mu - 9) * (mu - 25) / 6.0 * inv8v**3
                + (mu - 1) * (mu - 9) * (mu - 25) * (mu - 49) * (mu - 81) / 120.0 * inv8v**5
            )
            omega = v - (nu * 0.5 + 0.25) * math.pi
            bessel = np.sqrt(2.0 / (math.pi * v)) * (
                np.cos(omega) * p_ser - np.sin(omega) * q_ser
            )
            vals[i : i + chunk] = 2 * math.pi * (1j**k) * (bessel @ wx)
        out = np.empty(len(ys), dtype=complex)
        out[order] = vals
        return out

    def eval(self, y, sign: int = +1, eps_g: float = 1.0):
        """What_pm(y); y may be a scalar or an array of positive reals."""
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(ys <= 0):
            raise PreconditionError("transform argument y must be positive")
        if sign not in (+1, -1):
            raise PreconditionError("sign must be +1 or -1")
        if sign == +1:
            kernel, front = self.kernel_plus, self.front_plus
        else:
            kernel, front = self.kernel_minus, self.front_minus * eps_g
            if kernel is None:
                return np.zeros(ys.shape, dtype=complex) if ys.shape else 0.0 + 0.0j
        vals = np.empty(len(ys), dtype=complex)
        if self.holomorphic:
            near = ys < self.Y_SPLIT
            if np.any(near):
                vals[near] = self._eval_contour(ys[near], kernel, front)
            if np.any(~near):
                vals[~near] = self._eval_bessel(ys[~near])
        else:
            vals[:] = self._eval_contour(ys, kernel, front)
        if np.ndim(y) == 0:
            return complex(vals[0])
        return vals


def what_transform(
    kind: GammaFactorKind,
    window: SmoothWindow,
    y: float,
    sign: int,
    eps_g: float = 1.0,
    sigma: Optional[float] = None,
    tau_max: float = 2000.0,
) -> complex:
    """One-off What_pm(y). For sums over many y build a WhatTransform."""
    if kind.family == "holomorphic" and sign == -1:
        return 0.0 + 0.0j
    transform = WhatTransform(kind, window, sigma=sigma, tau_max=tau_max, y_max=max(4 * y, 10.0))
    return transform.eval(y, sign=sign, eps_g=eps_g)


@dataclass
class VoronoiInstance:
    """One concrete identity check: which form, twist a/c, scaling N, window."""

    form: CuspForm
    a: int
    c: int
    window: SmoothWindow
    scale: float  # N
    sigma: Optional[float] = None
    tau_max: float = 2000.0
    n_cut_rhs: Optional[int] = None
    y_deep: float = 8000.0  # dual sum runs out to y ~ y_deep unless capped

    def __post_init__(self):
        if self.c < 1:
            raise PreconditionError("modulus c must be positive")
        if math.gcd(self.a, self.c) != 1:
            raise PreconditionError(f"need gcd(a, c) = 1, got ({self.a}, {self.c})")
        if math.gcd(self.c, self.form.level) != 1:
            raise PreconditionError("need gcd(c, M) = 1")

    def resolved_n_cut(self) -> int:
        if self.n_cut_rhs is not None:
            return self.n_cut_rhs
        want = int(math.ceil(self.y_deep * self.form.level * self.c**2 / self.scale))
        return min(self.form.n_max, max(400, want))


@dataclass
class VoronoiCheck:
    lhs: complex
    rhs: complex
    residual: float
    rhs_terms: int
    tail_estimate: float


def direct_side(inst: VoronoiInstance) -> complex:
    """lhs = sum_n lambda(n) e(a n / c) W(n / N); finite by support."""
    a_supp, b_supp = inst.window.support
    n_lo = max(1, int(math.floor(a_supp * inst.scale)))
    n_hi = int(math.ceil(b_supp * inst.scale))
    form = inst.form
    if n_hi > form.n_max:
        raise PreconditionError(f"need coefficients to {n_hi}, stored {form.n_max}")
    ns = np.arange(n_lo, n_hi + 1)
    phases = unit_phases(inst.a * ns, inst.c)
    return complex(np.sum(form.lam_slice(n_hi)[n_lo - 1 :] * phases * inst.window(ns / inst.scale)))


def dual_side(
    inst: VoronoiInstance, transform: Optional[WhatTransform] = None, strip_eta: bool = False
) -> Tuple[complex, int, float]:
    """rhs (with the form's eta unless strip_eta) plus term count and tail estimate.

    The tail estimate is the l2 size of the last decade of included terms,
    a proxy for the (sign-cancelling) remainder beyond the cut.
    """
    form = inst.form
    big_m = form.level
    n_cut = inst.resolved_n_cut()
    if transform is None:
        transform = WhatTransform(
            form.kind, inst.window, sigma=inst.sigma, tau_max=inst.tau_max,
            y_max=max(n_cut * inst.scale / (big_m * inst.c**2), 10.0),
        )
    a_bar_m = modular_inverse(inst.a * big_m, inst.c)
    eps_g = form.epsilon_g if form.epsilon_g is not None else 1.0

    ns = np.arange(1, n_cut + 1)
    ys = ns * inst.scale / (big_m * inst.c**2)
    lam = form.lam_slice(n_cut)
    total = 0.0 + 0.0j
    tail = 0.0
    signs = (+1,) if form.kind.family == "holomorphic" else (+1, -1)
    for sign in signs:
        chi_factor = form.chi_at(-sign * inst.c)
        if chi_factor == 0:
            continue
        w_vals = transform.eval(ys, sign=sign, eps_g=eps_g)
        terms = chi_factor * lam * unit_phases(-sign * a_bar_m * ns, inst.c) * w_vals
        total += complex(np.sum(terms))
        last = terms[int(0.9 * n_cut) :]
        tail = max(tail, float(np.sqrt(np.sum(np.abs(last) ** 2))))
    prefactor = (inst.scale / inst.c) / math.sqrt(big_m)
    if not strip_eta:
        if form.eta is None:
            raise PreconditionError(
                "form has no calibrated eta; run calibrate_eta or pass strip_eta=True"
            )
        prefactor *= form.eta
    return prefactor * total, n_cut, tail


def voronoi_check(inst: VoronoiInstance, transform: Optional[WhatTransform] = None) -> VoronoiCheck:
    """Compute both sides independently and their scaled residual."""
    lhs = direct_side(inst)
    rhs, used, tail = dual_side(inst, transform=transform)
    residual = abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
    return VoronoiCheck(lhs=lhs, rhs=rhs, residual=residual, rhs_terms=used, tail_estimate=tail)


def calibrate_eta(form: CuspForm, probes, transform: Optional[WhatTransform] = None) -> complex:
    """Fit the modulus-one constant of the dual side over probe instances.

    Solves min_eta sum |lhs_i - eta * rhs0_i|^2 with rhs0 the eta-stripped
    dual side; the unconstrained optimum is
    eta_raw = sum lhs conj(rhs0) / sum |rhs0|^2 and its modulus coming out
    at 1 validates every normalization constant in the transform. The
    stored value is eta_raw normalized to exact modulus one.

    Raises :class:`CalibrationError` when per-probe phases disagree by more
    than 1e-3 (an implementation bug, not a math failure).
    """
    probes = list(probes)
    if len(probes) < 2:
        raise PreconditionError("calibration needs at least 2 probe instances")
    lhs_vals = []
    rhs_vals = []
    for inst in probes:
        if inst.form is not form:
            raise PreconditionError("all probes must reference the form being calibrated")
        lhs = direct_side(inst)
        rhs0, _, _ = dual_side(inst, transform=transform, strip_eta=True)
        if abs(lhs) < 1e-12 or abs(rhs0) < 1e-12:
            raise PreconditionError("degenerate probe (vanishing side); pick another instance")
        lhs_vals.append(lhs)
        rhs_vals.append(rhs0)
    lhs_vals = np.array(lhs_vals)
    rhs_vals = np.array(rhs_vals)
    per_probe = lhs_vals / rhs_vals
    spread = float(np.max(np.abs(per_probe - per_probe.mean())))
    if spread > 1e-3:
        raise CalibrationError(
            f"probe eta estimates disagree by {spread:.3e}; transforms are inconsistent"
        )
    eta_raw = complex(np.sum(lhs_vals * np.conj(rhs_vals)) / np.sum(np.abs(rhs_vals) ** 2))
    form.eta = eta_raw / abs(eta_raw)
    form.eta_modulus_raw = abs(eta_raw)
    form.eta_probe_spread = spread
    return form.eta
