import numpy as np
import pytest

from weyldelta.errors import PreconditionError
from weyldelta.forms import delta_form
from weyldelta.numerics import loglog_slope
from weyldelta.specialfn import holomorphic_kind, maass_kind
from weyldelta.testfn import make_window_v
from weyldelta.voronoi import (
    VoronoiInstance,
    WhatTransform,
    calibrate_eta,
    direct_side,
    dual_side,
    voronoi_check,
    what_transform,
)


@pytest.fixture(scope="module")
def form():
    f = delta_form(20000)
    return f


@pytest.fixture(scope="module")
def window():
    return make_window_v()


@pytest.fixture(scope="module")
def transform(form, window):
    return WhatTransform(form.kind, window)


@pytest.fixture(scope="module")
def calibrated(form, window, transform):
    if form.eta is None:
        calibrate_eta(
            form,
            [
                VoronoiInstance(form, a=1, c=1, window=window, scale=20.0),
                VoronoiInstance(form, a=1, c=3, window=window, scale=50.0),
            ],
            transform=transform,
        )
    return form


def test_holomorphic_minus_transform_vanishes(window):
    assert what_transform(holomorphic_kind(12), window, 3.7, -1) == 0.0


def test_transform_linear_in_window(form, window, transform):
    # zero window maps to zero
    zero = type(window)(
        support=window.support,
        normalization="unit-integral",
        evaluator=lambda x, order: 0.0 * np.asarray(x),
    )
    tr0 = WhatTransform(form.kind, zero)
    assert tr0.eval(5.0) == 0.0


def test_transform_decay(form, transform):
    # the superpolynomial regime needs room: over [1, 100] the envelope
    # still decays like y^(-1.2) (pre-asymptotic bump structure); by
    # y ~ 2e4 the local slope passes -4 and the global fit crosses -2
    ys = np.geomspace(1.0, 2e4, 15)
    vals = np.abs(transform.eval(ys))
    assert loglog_slope(ys, vals) <= -2.0
    assert vals[-1] < 1e-9
    # A = 2 instance of the rapid-decay statement
    ys_band = np.geomspace(1.0, 1000.0, 31)
    scaled = ys_band**2 * np.abs(transform.eval(ys_band))
    assert np.max(scaled) < 50.0


def test_transform_routes_agree_at_seam(form, transform):
    for y in (430.0, 449.0, 451.0, 480.0, 700.0):
        contour = transform._eval_contour(
            np.array([y]), transform.kernel_plus, transform.front_plus
        )[0]
        bessel = transform._eval_bessel(np.array([y]))[0]
        assert abs(contour - bessel) < 1e-9


def test_transform_rejects_bad_arguments(form, transform):
    with pytest.raises(PreconditionError):
        transform.eval(-1.0)
    with pytest.raises(PreconditionError):
        transform.eval(2.0, sign=0)


def test_maass_transform_structural(window):
    # structural checks only: symmetric in the spectral sign, minus branch
    # carries the reflection eigenvalue linearly
    kind_p = maass_kind(9.5, 0)
    kind_m = maass_kind(-9.5, 0)
    tr_p = WhatTransform(kind_p, window, tau_max=400.0)
    tr_m = WhatTransform(kind_m, window, tau_max=400.0)
    y = 3.0
    assert tr_p.eval(y, +1) == pytest.approx(tr_m.eval(y, +1), rel=1e-12)
    minus_1 = tr_p.eval(y, -1, eps_g=1.0)
    minus_2 = tr_p.eval(y, -1, eps_g=-1.0)
    assert minus_1 == pytest.approx(-minus_2, rel=1e-12)


def test_instance_validation(form, window):
    with pytest.raises(PreconditionError):
        VoronoiInstance(form, a=2, c=4, window=window, scale=20.0)
    with pytest.raises(PreconditionError):
        VoronoiInstance(form, a=1, c=0, window=window, scale=20.0)


def test_identity_basic_cells(calibrated, window, transform):
    for a, c in ((1, 1), (1, 3)):
        chk = voronoi_check(
            VoronoiInstance(calibrated, a=a, c=c, window=window, scale=20.0), transform=transform
        )
        assert chk.residual <= 1e-6


def test_identity_held_out_cell(calibrated, window, transform):
    chk = voronoi_check(
        VoronoiInstance(calibrated, a=1, c=5, window=window, scale=20.0), transform=transform
    )
    assert chk.residual <= 1e-6


def test_twist_periodicity(calibrated, window, transform):
    # a and a + c give identical sides bit for bit (integer phase reduction)
    base = voronoi_check(
        VoronoiInstance(calibrated, a=1, c=3, window=window, scale=20.0), transform=transform
    )
    shifted = voronoi_check(
        VoronoiInstance(calibrated, a=4, c=3, window=window, scale=20.0), transform=transform
    )
    assert base.lhs == shifted.lhs
    assert base.rhs == shifted.rhs


def test_linearity_in_window(calibrated, window, transform):
    # both sides are linear in W: doubling the window doubles them
    doubled = type(window)(
        support=window.support,
        normalization="unit-integral",
        evaluator=lambda x, order: 2.0 * window.evaluator(x, order),
    )
    inst_1 = VoronoiInstance(calibrated, a=1, c=3, window=window, scale=20.0)
    inst_2 = VoronoiInstance(calibrated, a=1, c=3, window=doubled, scale=20.0)
    tr2 = WhatTransform(calibrated.kind, doubled)
    lhs_1 = direct_side(inst_1)
    lhs_2 = direct_side(inst_2)
    assert lhs_2 == pytest.approx(2 * lhs_1, rel=1e-12)
    rhs_1, _, _ = dual_side(inst_1, transform=transform)
    rhs_2, _, _ = dual_side(inst_2, transform=tr2)
    assert rhs_2 == pytest.approx(2 * rhs_1, rel=1e-9)


def test_calibration_modulus_and_consistency(calibrated):
    assert abs(calibrated.eta) == pytest.approx(1.0, abs=1e-12)  # normalized
    assert abs(calibrated.eta_modulus_raw - 1.0) <= 1e-6
    assert calibrated.eta_probe_spread <= 1e-4


def test_calibration_needs_two_probes(form, window):
    with pytest.raises(PreconditionError):
        calibrate_eta(form, [VoronoiInstance(form, a=1, c=1, window=window, scale=20.0)])


def test_gcd_guard(form, window):
    inst = VoronoiInstance(form, a=1, c=3, window=window, scale=20.0)
    inst.a = 3  # force a degenerate twist past the constructor validation
    with pytest.raises(ValueError):
        dual_side(inst, strip_eta=True)
